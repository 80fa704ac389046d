//! `y,h_b` CSV of the knock-in density at one time, in normalized log-price `y`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use parisian::pricing::KnockInDensity;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::Format;

/// `min:max:count` with `count >= 2` evenly spaced points, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, count] = parts[..] else {
            return Err(format!("expected min:max:count, got `{s}`"));
        };
        let min: f64 = min.trim().parse().map_err(|_| format!("bad grid minimum `{min}`"))?;
        let max: f64 = max.trim().parse().map_err(|_| format!("bad grid maximum `{max}`"))?;
        let count: usize = count.trim().parse().map_err(|_| format!("bad grid count `{count}`"))?;
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(format!("grid needs finite min < max, got {min}:{max}"));
        }
        if count < 2 {
            return Err(format!("grid needs at least 2 points, got {count}"));
        }
        Ok(Self { min, max, count })
    }
}

impl Grid {
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(move |i| if i + 1 == self.count { self.max } else { self.min + i as f64 * step })
    }
}

#[derive(Debug, Default)]
struct Clamped {
    rows: usize,
    largest: f64,
}

pub fn run(
    config: &RunConfig,
    time: f64,
    grid: Grid,
    path: Option<&Path>,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let density = KnockInDensity::new(&config.market, &config.contract, &config.numerics, time)?;
    let clamped = match path {
        None => write_csv(&density, grid, stdout)?,
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(format!("cannot create `{}`", path.display()), e))?;
            let mut sink = BufWriter::new(file);
            let written = write_csv(&density, grid, &mut sink)
                .and_then(|c| sink.flush().map(|_| c).map_err(|e| CliError::io("writing the density", e)));
            if written.is_err() {
                drop(sink);
                let _ = std::fs::remove_file(path);
            }
            written?
        }
    };
    if clamped.rows > 0 {
        eprintln!(
            "note: {} negative density values clamped to zero (largest magnitude {:e})",
            clamped.rows, clamped.largest
        );
    }
    if let (Some(path), Format::JsonLines) = (path, format) {
        let summary = json!({
            "command": "density",
            "time": time,
            "rows": grid.count,
            "form": density.form(),
            "out": path.display().to_string(),
            "clamped_rows": clamped.rows,
            "clamped_largest": clamped.largest,
        });
        writeln!(stdout, "{summary}").map_err(|e| CliError::io("writing the summary", e))?;
    }
    Ok(())
}

fn write_csv(density: &KnockInDensity, grid: Grid, out: &mut dyn Write) -> Result<Clamped, CliError> {
    let io = |e| CliError::io("writing the density", e);
    let mut clamped = Clamped::default();
    out.write_all(b"y,h_b\n").map_err(io)?;
    for y in grid.points() {
        let raw = density.at(y)?;
        let value = if raw > 0.0 {
            raw
        } else {
            if raw < 0.0 {
                clamped.rows += 1;
                clamped.largest = clamped.largest.max(-raw);
            }
            0.0
        };
        writeln!(out, "{y:?},{value:?}").map_err(io)?;
    }
    Ok(clamped)
}
