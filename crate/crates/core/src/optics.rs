//! Optical bench geometry: lens FrFT stages, the scaling factor between
//! physical and dimensionless coordinates, and SLM pixel quantization.
//!
//! Lengths are in meters unless a name says otherwise.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::angle::{RotationAngle, ANGLE_EPSILON};
use crate::error::{Error, ParseError, Result};
use crate::mub::triple_periods;

pub const DEFAULT_WAVELENGTH: f64 = 635e-9;
pub const DEFAULT_FOCAL_LENGTH: f64 = 0.4;
pub const DEFAULT_PIXEL: f64 = 8e-6;

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::OutOfRange(format!("{name} = {v} must be positive")))
    }
}

/// FrFT angle of a lens of focal length `f` with object and image planes at
/// distance `z`: `z = 2f sin²(θ/2)`, `θ ∈ (0, π]`.
pub fn lens_angle(f: f64, z: f64) -> Result<RotationAngle> {
    positive("focal length", f)?;
    positive("lens distance", z)?;
    if z > 2.0 * f {
        return Err(Error::OutOfRange(format!(
            "z = {z} exceeds 2f = {}",
            2.0 * f
        )));
    }
    let half = (z / (2.0 * f)).sqrt().min(1.0).asin();
    Ok(RotationAngle::from_radians(2.0 * half))
}

/// Inverse of [`lens_angle`].
pub fn frft_lens_distance(f: f64, theta: RotationAngle) -> Result<f64> {
    positive("focal length", f)?;
    let t = theta.radians();
    if t <= 0.0 || t > PI + ANGLE_EPSILON {
        return Err(Error::OutOfRange(format!("lens angle {t} outside (0, pi]")));
    }
    Ok(2.0 * f * (t / 2.0).sin().powi(2))
}

/// `δ = √(λ f sin θ / 2π)`.
pub fn scaling_factor(wavelength: f64, f: f64, theta: RotationAngle) -> Result<f64> {
    positive("wavelength", wavelength)?;
    positive("focal length", f)?;
    let s = theta.sin();
    if s <= ANGLE_EPSILON {
        return Err(Error::DegenerateAngle {
            radians: theta.radians(),
            tolerance: ANGLE_EPSILON,
        });
    }
    Ok((wavelength * f * s / TAU).sqrt())
}

/// `l · round(T / l)`, ties to even. Ratios within `1e−9` (relative) of a
/// half-integer count as ties, so decimal inputs like `756.0 / 8` behave.
pub fn quantize_to_pixels(period: f64, pixel: f64) -> Result<f64> {
    positive("pixel length", pixel)?;
    let ratio = period / pixel;
    let twice = (2.0 * ratio).round();
    let ratio = if (2.0 * ratio - twice).abs() <= 1e-9 * twice.abs().max(1.0) {
        twice / 2.0
    } else {
        ratio
    };
    Ok(pixel * ratio.round_ties_even())
}

/// One element of an optical path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stage {
    /// Lens of focal length `f` with planes at distance `z` on either side.
    Lens { f: f64, z: f64 },
    /// Mirror reflection `x → −x`.
    Reflection,
}

impl fmt::Display for Stage {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Lens { f, z } => write!(out, "lens:{}:{}", f * 1e3, z * 1e3),
            Stage::Reflection => write!(out, "reflect"),
        }
    }
}

/// Parses `lens:<f_mm>:<z_mm>` or `reflect`.
impl FromStr for Stage {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("reflect") || s.eq_ignore_ascii_case("reflection") {
            return Ok(Stage::Reflection);
        }
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        if !head.eq_ignore_ascii_case("lens") {
            return Err(ParseError::new(0, format!("unknown stage `{s}`")));
        }
        let mut mm = |name: &str| -> Result<f64, ParseError> {
            let field = parts
                .next()
                .ok_or_else(|| ParseError::new(0, format!("stage `{s}` is missing {name}")))?;
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| ParseError::new(0, format!("bad {name} `{field}`")))?;
            let meters = v * 1e-3;
            if !(meters.is_finite() && meters > 0.0) {
                return Err(ParseError::new(
                    0,
                    format!("{name} must be positive, got {v}"),
                ));
            }
            Ok(meters)
        };
        let f = mm("focal length")?;
        let z = mm("distance")?;
        if parts.next().is_some() {
            return Err(ParseError::new(0, format!("trailing fields in `{s}`")));
        }
        if z > 2.0 * f {
            return Err(ParseError::new(0, format!("z > 2f in `{s}`")));
        }
        Ok(Stage::Lens { f, z })
    }
}

/// Parses a comma separated stage list such as `lens:250:200,lens:250:200,reflect`.
pub fn parse_stages(s: &str) -> Result<Vec<Stage>, ParseError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub wavelength: f64,
    pub focal_length: f64,
    /// Rotation of the preparation-to-measurement lens stage.
    pub angle: RotationAngle,
    pub pixel: f64,
    pub stages: Vec<Stage>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            wavelength: DEFAULT_WAVELENGTH,
            focal_length: DEFAULT_FOCAL_LENGTH,
            angle: RotationAngle::from_radians(PI / 3.0),
            pixel: DEFAULT_PIXEL,
            stages: Vec::new(),
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        positive("wavelength", self.wavelength)?;
        positive("focal length", self.focal_length)?;
        positive("pixel length", self.pixel)?;
        for st in &self.stages {
            if let Stage::Lens { f, z } = *st {
                lens_angle(f, z)?;
            }
        }
        Ok(())
    }

    pub fn scaling_factor(&self) -> Result<f64> {
        scaling_factor(self.wavelength, self.focal_length, self.angle)
    }
}

/// Physical period of the `(m1, m2, m3)` triple in dimension `d`.
pub fn physical_periods(d: usize, bench: &BenchSpec, m: (u64, u64, u64)) -> Result<[f64; 3]> {
    bench.validate()?;
    let delta = bench.scaling_factor()?;
    let t = triple_periods(m.0, m.1, m.2, d)?;
    Ok(t.as_array().map(|v| v * delta))
}

/// Net effect of a sequence of stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Composition {
    /// Sum of all stage angles, reflections counting π.
    pub net: RotationAngle,
    /// Odd number of reflections: one axis changed sign.
    pub axis_flipped: bool,
    /// `net` as a value in `(−π, π]`.
    pub signed_degrees: f64,
    /// Magnitude of the signed net angle, the direction reached up to the
    /// sign convention of the flipped axis.
    pub effective_degrees: f64,
}

pub fn compose_stages(bench: &BenchSpec) -> Result<Composition> {
    let mut net = RotationAngle::ZERO;
    let mut flipped = false;
    for st in &bench.stages {
        match *st {
            Stage::Lens { f, z } => net = net + lens_angle(f, z)?,
            Stage::Reflection => {
                net = net + RotationAngle::from_radians(PI);
                flipped = !flipped;
            }
        }
    }
    let signed = net.signed().to_degrees();
    Ok(Composition {
        net,
        axis_flipped: flipped,
        signed_degrees: signed,
        effective_degrees: signed.abs(),
    })
}

/// One row of the mask-period table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodRow {
    pub d: usize,
    #[serde(rename = "T_um")]
    pub t_um: f64,
    #[serde(rename = "T_over_l")]
    pub t_over_l: f64,
    #[serde(rename = "T_exp_um")]
    pub t_exp_um: u64,
}

/// Rows for `d` in `ds` with `m1 = m2 = m3 = 1`.
pub fn period_table(
    bench: &BenchSpec,
    ds: impl IntoIterator<Item = usize>,
) -> Result<Vec<PeriodRow>> {
    ds.into_iter()
        .map(|d| {
            let t = physical_periods(d, bench, (1, 1, 1))?[0];
            let t_exp = quantize_to_pixels(t, bench.pixel)?;
            Ok(PeriodRow {
                d,
                t_um: t * 1e6,
                t_over_l: t / bench.pixel,
                t_exp_um: (t_exp * 1e6).round() as u64,
            })
        })
        .collect()
}

/// Writes `d,T_um,T_over_l,T_exp_um` with one decimal for the reals.
pub fn write_period_csv<W: Write>(rows: &[PeriodRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d", "T_um", "T_over_l", "T_exp_um"])?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            format!("{:.1}", r.t_um),
            format!("{:.1}", r.t_over_l),
            r.t_exp_um.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_period_csv<R: Read>(input: R) -> Result<Vec<PeriodRow>, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| ParseError::new(1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["d", "T_um", "T_over_l", "T_exp_um"] {
        return Err(ParseError::new(1, format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<PeriodRow>().enumerate() {
        let row = rec.map_err(|e| ParseError::new(i + 2, e.to_string()))?;
        if !(row.t_um.is_finite() && row.t_over_l.is_finite()) {
            return Err(ParseError::new(i + 2, "non-finite value".to_string()));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lens_examples() {
        let th = lens_angle(0.25, 0.2).unwrap();
        assert_abs_diff_eq!(th.degrees(), 78.463, epsilon = 1e-3);
        let z = frft_lens_distance(0.4, RotationAngle::from_radians(PI / 3.0)).unwrap();
        assert_abs_diff_eq!(z, 0.2, epsilon = 1e-15);
        let z = frft_lens_distance(0.1, RotationAngle::from_radians(PI)).unwrap();
        assert_abs_diff_eq!(z, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(lens_angle(0.1, 0.2).unwrap().radians(), PI, epsilon = 1e-12);
        assert!(lens_angle(0.1, 0.21).is_err());
        assert!(lens_angle(0.1, 0.0).is_err());
    }

    #[test]
    fn scaling_examples() {
        let third = RotationAngle::from_radians(PI / 3.0);
        let delta = scaling_factor(635e-9, 0.4, third).unwrap();
        assert_abs_diff_eq!(delta * 1e6, 187.1, epsilon = 0.05);
        let th = lens_angle(0.25, 0.2).unwrap();
        let delta = scaling_factor(635e-9, 0.25, th).unwrap();
        assert_abs_diff_eq!(delta * 1e6, 157.3, epsilon = 0.05);
        let tiny = scaling_factor(635e-9, 0.4, RotationAngle::from_radians(1e-6)).unwrap();
        assert!(tiny < 1e-6);
        assert!(scaling_factor(635e-9, 0.4, RotationAngle::ZERO).is_err());
    }

    #[test]
    fn quantization_examples() {
        let l = 8e-6;
        assert_abs_diff_eq!(
            quantize_to_pixels(617.3e-6, l).unwrap(),
            616e-6,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            quantize_to_pixels(756.0e-6, l).unwrap(),
            752e-6,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            quantize_to_pixels(1069.1e-6, l).unwrap(),
            1072e-6,
            epsilon = 1e-12
        );
        assert!(quantize_to_pixels(1.0, 0.0).is_err());
    }

    #[test]
    fn composition_examples() {
        let lens: Stage = "lens:250:200".parse().unwrap();
        let mut bench = BenchSpec {
            stages: vec![lens, lens],
            ..BenchSpec::default()
        };
        let c = compose_stages(&bench).unwrap();
        assert_abs_diff_eq!(c.net.degrees(), 156.93, epsilon = 0.01);
        assert!(!c.axis_flipped);
        bench.stages.push(Stage::Reflection);
        let c = compose_stages(&bench).unwrap();
        assert!(c.axis_flipped);
        assert_abs_diff_eq!(c.effective_degrees, 23.07, epsilon = 0.01);

        let confocal: Stage = "lens:100:200".parse().unwrap();
        bench.stages = vec![confocal; 4];
        let c = compose_stages(&bench).unwrap();
        assert!(c.net.is_zero(1e-9));
    }

    #[test]
    fn stage_parsing() {
        assert_eq!("reflect".parse::<Stage>().unwrap(), Stage::Reflection);
        assert_eq!(
            parse_stages("lens:250:200, reflect").unwrap(),
            vec![Stage::Lens { f: 0.25, z: 0.2 }, Stage::Reflection]
        );
        for bad in [
            "",
            "lens",
            "lens:1",
            "lens:1:3",
            "lens:a:1",
            "lens:1:1:1",
            "mirror",
            "lens:-1:1",
            "lens:1e-321:1e-321",
        ] {
            assert!(bad.parse::<Stage>().is_err(), "{bad}");
        }
    }

    #[test]
    fn table_csv_round_trip() {
        let rows = period_table(&BenchSpec::default(), 2..=10).unwrap();
        let mut buf = Vec::new();
        write_period_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("d,T_um,T_over_l,T_exp_um\n2,617.3,77.2,616\n"));
        let back = read_period_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 9);
        assert_eq!(back[1].t_exp_um, 752);
        assert!(read_period_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_period_csv("d,T_um,T_over_l,T_exp_um\nx,1,1,1\n".as_bytes()).is_err());
    }
}
