use std::fs::File;
use std::io::{self, Write};

use pcgmub_core::config::{OutputFormat, RunConfig};
use serde::Serialize;

use crate::Failure;

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cfg.out {
        Some(path) => Box::new(
            File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

/// Human-readable lines go to stdout, or stderr when stdout carries the result.
pub fn summary(cfg: &RunConfig, lines: &[String]) {
    for l in lines {
        if cfg.out.is_some() {
            println!("{l}");
        } else {
            eprintln!("{l}");
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

pub fn write_csv<W: Write, R: Serialize>(w: W, rows: &[R]) -> Result<(), Failure> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Failure::Io(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes `value` as JSON or `rows` as CSV, then the summary.
pub fn emit<T: Serialize, R: Serialize>(
    cfg: &RunConfig,
    value: &T,
    rows: &[R],
    lines: &[String],
) -> Result<(), Failure> {
    let w = sink(cfg)?;
    match cfg.format {
        OutputFormat::Json => write_json(w, value)?,
        OutputFormat::Csv => write_csv(w, rows)?,
    }
    summary(cfg, lines);
    Ok(())
}

/// Like [`emit`] with a prepared CSV writer callback.
pub fn emit_with<T: Serialize>(
    cfg: &RunConfig,
    value: &T,
    csv: impl FnOnce(Box<dyn Write>) -> Result<(), Failure>,
    lines: &[String],
) -> Result<(), Failure> {
    let w = sink(cfg)?;
    match cfg.format {
        OutputFormat::Json => write_json(w, value)?,
        OutputFormat::Csv => csv(w)?,
    }
    summary(cfg, lines);
    Ok(())
}
