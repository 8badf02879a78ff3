//! `key = value` run configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are the long
//! command-line flag names with `-` or `_` separators.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::angle::parse_angle;
use crate::error::{Error, ParseError, Result};
use crate::grid::MIN_POINTS;

pub const DEFAULT_GRID_POINTS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format `{other}`, expected json or csv")),
        }
    }
}

/// Settings shared by the commands. `None` means "use the command default".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid_n: usize,
    /// Grid half extent (dimensionless); chosen per scenario when absent.
    pub extent: Option<f64>,
    pub seed: u64,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub d: Option<usize>,
    pub theta: Option<f64>,
    pub theta_prime: Option<f64>,
    pub m: Option<u64>,
    pub k0: Option<usize>,
    pub pixel_um: Option<f64>,
    pub wavelength_nm: Option<f64>,
    pub focal_mm: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_n: DEFAULT_GRID_POINTS,
            extent: None,
            seed: 1,
            samples: None,
            tol: None,
            format: OutputFormat::Json,
            out: None,
            d: None,
            theta: None,
            theta_prime: None,
            m: None,
            k0: None,
            pixel_um: None,
            wavelength_nm: None,
            focal_mm: None,
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ParseError> {
    raw.parse()
        .map_err(|_| ParseError::new(line, format!("invalid value `{raw}` for `{key}`")))
}

fn positive(line: usize, key: &str, raw: &str) -> Result<f64, ParseError> {
    let v: f64 = value(line, key, raw)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ParseError::new(
            line,
            format!("`{key}` must be positive, got {raw}"),
        ))
    }
}

impl RunConfig {
    /// Parses a configuration file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, raw) = trimmed.split_once('=').ok_or_else(|| {
                ParseError::new(line, format!("expected key = value, got `{trimmed}`"))
            })?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            let raw = raw.trim();
            if raw.is_empty() {
                return Err(ParseError::new(line, format!("missing value for `{key}`")));
            }
            if !seen.insert(key.clone()) {
                return Err(ParseError::new(line, format!("duplicate key `{key}`")));
            }
            match key.as_str() {
                "grid_n" => {
                    let n: usize = value(line, &key, raw)?;
                    if n < MIN_POINTS {
                        return Err(ParseError::new(
                            line,
                            format!("grid_n must be at least {MIN_POINTS}"),
                        ));
                    }
                    cfg.grid_n = n;
                }
                "extent" => cfg.extent = Some(positive(line, &key, raw)?),
                "seed" => cfg.seed = value(line, &key, raw)?,
                "samples" => cfg.samples = Some(value(line, &key, raw)?),
                "tol" => cfg.tol = Some(positive(line, &key, raw)?),
                "format" => {
                    cfg.format = raw.parse().map_err(|e: String| ParseError::new(line, e))?
                }
                "out" => cfg.out = Some(PathBuf::from(raw)),
                "d" => {
                    let d: usize = value(line, &key, raw)?;
                    if d < 2 {
                        return Err(ParseError::new(line, "d must be at least 2".to_string()));
                    }
                    cfg.d = Some(d);
                }
                "theta" => {
                    cfg.theta =
                        Some(parse_angle(raw).map_err(|e| ParseError::new(line, e.message))?)
                }
                "theta_prime" => {
                    cfg.theta_prime =
                        Some(parse_angle(raw).map_err(|e| ParseError::new(line, e.message))?)
                }
                "m" => cfg.m = Some(value(line, &key, raw)?),
                "k0" => cfg.k0 = Some(value(line, &key, raw)?),
                "pixel" | "pixel_um" => cfg.pixel_um = Some(positive(line, &key, raw)?),
                "wavelength" | "wavelength_nm" => {
                    cfg.wavelength_nm = Some(positive(line, &key, raw)?)
                }
                "focal" | "focal_mm" => cfg.focal_mm = Some(positive(line, &key, raw)?),
                _ => return Err(ParseError::new(line, format!("unknown key `{key}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "grid_n {} < {MIN_POINTS}",
                self.grid_n
            )));
        }
        if let Some(e) = self.extent {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::NonPositiveWidth(e));
            }
        }
        Ok(())
    }
}
