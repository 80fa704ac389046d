//! Running moments with an order-fixed merge, so estimates do not depend on the
//! number of worker threads.

/// Count, means and centred second moments of a fixed number of outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl Moments {
    pub fn new(outputs: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; outputs],
            m2: vec![0.0; outputs],
        }
    }

    pub fn push(&mut self, sample: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return other.clone();
        }
        if other.count == 0 {
            return self.clone();
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let mut out = Self::new(self.mean.len());
        out.count = self.count + other.count;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            out.mean[i] = self.mean[i] + delta * nb / n;
            out.m2[i] = self.m2[i] + other.m2[i] + delta * delta * na * nb / n;
        }
        out
    }

    /// Merges adjacent pairs level by level; the tree depends only on the input order.
    pub fn reduce(mut parts: Vec<Self>, outputs: usize) -> Self {
        if parts.is_empty() {
            return Self::new(outputs);
        }
        while parts.len() > 1 {
            parts = parts
                .chunks(2)
                .map(|p| if p.len() == 2 { p[0].merge(&p[1]) } else { p[0].clone() })
                .collect();
        }
        parts.pop().unwrap()
    }

    /// Standard error of the mean of output `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        (self.m2[i] / (n - 1.0) / n).sqrt()
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}
