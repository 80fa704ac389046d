use std::io::Write;

use parisian::pricing::{paris_down_in_call, PriceResult};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::Format;

pub fn run(config: &RunConfig, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let result = paris_down_in_call(&config.market, &config.contract, &config.numerics)?;
    let written = match format {
        Format::Text => write_text(&result, out),
        Format::JsonLines => writeln!(out, "{}", to_json(&result)),
    };
    written.map_err(|e| CliError::io("writing the price", e))
}

fn write_text(r: &PriceResult, out: &mut dyn Write) -> std::io::Result<()> {
    let d = &r.diagnostics;
    writeln!(out, "value                 {}", r.value)?;
    writeln!(out, "method                {}", r.method)?;
    writeln!(out, "inverter              {} ({} terms, precision {:e})", d.inverter, d.terms, d.precision_target)?;
    if !d.transform_form.is_empty() {
        writeln!(out, "transform form        {}", d.transform_form)?;
    }
    writeln!(out, "knock-in threshold    {}", d.threshold)?;
    writeln!(out, "time resolution       {:e}", d.resolution)?;
    if let Some((lo, hi)) = d.x_range {
        writeln!(out, "log-price range       [{lo}, {hi}]")?;
    }
    writeln!(out, "density nodes         {}", d.density_nodes)?;
    writeln!(out, "transform evaluations {}", d.transform_evaluations)?;
    writeln!(out, "error estimate        {:e}", d.error_estimate)?;
    writeln!(out, "negative mass         {:e}", d.negative_mass)?;
    if let Some(why) = &d.short_circuit {
        writeln!(out, "short circuit         {why}")?;
    }
    Ok(())
}

fn to_json(r: &PriceResult) -> serde_json::Value {
    let d = &r.diagnostics;
    json!({
        "command": "price",
        "value": r.value,
        "method": r.method,
        "diagnostics": {
            "inverter": d.inverter,
            "terms": d.terms,
            "precision_target": d.precision_target,
            "transform_form": d.transform_form,
            "threshold": d.threshold,
            "resolution": d.resolution,
            "x_range": d.x_range.map(|(lo, hi)| [lo, hi]),
            "density_nodes": d.density_nodes,
            "transform_evaluations": d.transform_evaluations,
            "error_estimate": d.error_estimate,
            "negative_mass": d.negative_mass,
            "short_circuit": d.short_circuit,
        },
    })
}
