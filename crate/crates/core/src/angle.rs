//! Phase-space rotation angles.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::ParseError;

/// Default threshold on `|sin θ|` below which an angle is treated as 0 or π.
pub const ANGLE_EPSILON: f64 = 1e-9;

/// A rotation angle in phase space, stored reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct RotationAngle(f64);

impl RotationAngle {
    pub const ZERO: RotationAngle = RotationAngle(0.0);

    pub fn from_radians(radians: f64) -> Self {
        let mut r = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if r >= TAU {
            r = 0.0;
        }
        RotationAngle(r)
    }

    pub fn from_degrees(degrees: f64) -> Self {
        Self::from_radians(degrees.to_radians())
    }

    /// Reduced value in `[0, 2π)`.
    pub fn radians(self) -> f64 {
        self.0
    }

    /// Representative in `(-π, π]`.
    pub fn signed(self) -> f64 {
        if self.0 > PI {
            self.0 - TAU
        } else {
            self.0
        }
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    pub fn sin(self) -> f64 {
        self.0.sin()
    }

    pub fn cos(self) -> f64 {
        self.0.cos()
    }

    /// `sign(sin θ)`, or `None` when the sine vanishes within `ANGLE_EPSILON`.
    pub fn sign(self) -> Option<f64> {
        let s = self.sin();
        if s.abs() <= ANGLE_EPSILON {
            None
        } else {
            Some(s.signum())
        }
    }

    pub fn is_degenerate(self, eps: f64) -> bool {
        self.sin().abs() <= eps
    }

    /// True when the angle is within `eps` of zero (mod 2π).
    pub fn is_zero(self, eps: f64) -> bool {
        self.signed().abs() <= eps
    }

    /// True when the angle is within `eps` of π.
    pub fn is_pi(self, eps: f64) -> bool {
        (self.0 - PI).abs() <= eps
    }

    pub fn negate(self) -> Self {
        Self::from_radians(-self.0)
    }
}

impl<'de> Deserialize<'de> for RotationAngle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Self::from_radians)
    }
}

impl std::ops::Add for RotationAngle {
    type Output = RotationAngle;
    fn add(self, rhs: Self) -> Self {
        Self::from_radians(self.0 + rhs.0)
    }
}

impl std::ops::Sub for RotationAngle {
    type Output = RotationAngle;
    fn sub(self, rhs: Self) -> Self {
        Self::from_radians(self.0 - rhs.0)
    }
}

impl fmt::Display for RotationAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} rad ({:.4} deg)", self.0, self.degrees())
    }
}

impl FromStr for RotationAngle {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_angle(s).map(RotationAngle::from_radians)
    }
}

/// Parses an angle expression into radians.
///
/// Accepted forms: plain radians (`1.2`), degrees (`23deg`, `23°`),
/// and multiples of π with an optional divisor (`pi`, `-pi/2`, `2pi/3`,
/// `2*pi/3`, `4π/3`).
pub fn parse_angle(input: &str) -> Result<f64, ParseError> {
    let err = |msg: &str| ParseError::new(1, format!("{msg}: {input:?}"));
    let text: String = input.trim().to_ascii_lowercase();
    if text.is_empty() {
        return Err(err("empty angle"));
    }

    let value = if let Some(deg) = text.strip_suffix("deg").or_else(|| text.strip_suffix('°')) {
        parse_finite(deg.trim())
            .ok_or_else(|| err("bad degree value"))?
            .to_radians()
    } else if let Some(idx) = text.find("pi").or_else(|| text.find('π')) {
        let marker_len = if text[idx..].starts_with("pi") {
            2
        } else {
            'π'.len_utf8()
        };
        let head = text[..idx].trim().trim_end_matches('*').trim();
        let tail = text[idx + marker_len..].trim();
        let coeff = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => parse_finite(h).ok_or_else(|| err("bad coefficient of pi"))?,
        };
        let divisor = if tail.is_empty() {
            1.0
        } else {
            let d = tail
                .strip_prefix('/')
                .ok_or_else(|| err("expected '/' after pi"))?;
            parse_finite(d.trim()).ok_or_else(|| err("bad divisor"))?
        };
        if divisor == 0.0 {
            return Err(err("division by zero"));
        }
        coeff * std::f64::consts::PI / divisor
    } else {
        parse_finite(&text).ok_or_else(|| err("not a number"))?
    };

    if value.is_finite() {
        Ok(value)
    } else {
        Err(err("angle is not finite"))
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}
