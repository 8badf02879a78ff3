//! Unbiasedness conditions between PCG measurements.
//!
//! Two measurements along `θ` and `θ'` with periods `T`, `T'` in dimension
//! `d` are mutually unbiased when `T T' / 2π = d |sin Δθ| / m` for a natural
//! number `m` such that `m n / d` is never an integer for `n = 1..d−1`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::angle::{RotationAngle, ANGLE_EPSILON};
use crate::error::{Error, Result};

/// Default relative tolerance for recognising an integer `m`.
pub const DEFAULT_M_TOLERANCE: f64 = 1e-6;
/// Angles closer than this modulo π count as the same direction.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-7;

/// Whether `m` satisfies the unbiasedness condition in dimension `d`,
/// by direct enumeration over `n = 1..d−1`.
pub fn is_valid_m(m: u64, d: usize) -> bool {
    m >= 1 && (1..d as u64).all(|n| !(m * n).is_multiple_of(d as u64))
}

/// All valid `m` in `1..=m_max`.
pub fn valid_m_values(d: usize, m_max: u64) -> Vec<u64> {
    (1..=m_max).filter(|&m| is_valid_m(m, d)).collect()
}

fn check_m(m: u64, d: usize) -> Result<()> {
    if d >= 2 && is_valid_m(m, d) {
        Ok(())
    } else {
        Err(Error::InvalidM { m, d })
    }
}

fn nondegenerate_sin(delta: RotationAngle) -> Result<f64> {
    let s = delta.sin().abs();
    if s <= ANGLE_EPSILON {
        Err(Error::DegenerateAngle {
            radians: delta.radians(),
            tolerance: ANGLE_EPSILON,
        })
    } else {
        Ok(s)
    }
}

/// `m* = 2π d |sin Δθ| / (T T')`.
pub fn m_star(t: f64, t_prime: f64, delta: RotationAngle, d: usize) -> Result<f64> {
    let s = nondegenerate_sin(delta)?;
    Ok(TAU * d as f64 * s / (t * t_prime))
}

/// The `m` for which the pair is unbiased, if any. `tol` is relative to the
/// nearest integer.
pub fn check_pair(
    t: f64,
    t_prime: f64,
    delta: RotationAngle,
    d: usize,
    tol: f64,
) -> Result<Option<u64>> {
    let m = m_star(t, t_prime, delta, d)?;
    let nearest = m.round();
    if nearest < 1.0 || (m - nearest).abs() >= tol * nearest {
        return Ok(None);
    }
    let nearest = nearest as u64;
    Ok(is_valid_m(nearest, d).then_some(nearest))
}

/// Period `T'` that makes the pair unbiased with parameter `m`.
pub fn pair_period(t_ref: f64, delta: RotationAngle, d: usize, m: u64) -> Result<f64> {
    check_m(m, d)?;
    if !(t_ref.is_finite() && t_ref > 0.0) {
        return Err(Error::OutOfRange(format!(
            "period {t_ref} must be positive"
        )));
    }
    let s = nondegenerate_sin(delta)?;
    Ok(TAU * d as f64 * s / (m as f64 * t_ref))
}

/// Periods of a triple along `{0, 2π/3, 4π/3}`. `m1` governs the `(x, r)`
/// pair, `m2` the `(x, s)` pair and `m3` the `(r, s)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriplePeriods {
    pub t_x: f64,
    pub t_r: f64,
    pub t_s: f64,
}

impl TriplePeriods {
    pub fn directions() -> [RotationAngle; 3] {
        [
            RotationAngle::ZERO,
            RotationAngle::from_radians(TAU / 3.0),
            RotationAngle::from_radians(2.0 * TAU / 3.0),
        ]
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.t_x, self.t_r, self.t_s]
    }
}

pub fn triple_periods(m1: u64, m2: u64, m3: u64, d: usize) -> Result<TriplePeriods> {
    for m in [m1, m2, m3] {
        check_m(m, d)?;
    }
    let base = 3f64.sqrt() * PI * d as f64;
    let t_x = (base * m3 as f64 / (m1 * m2) as f64).sqrt();
    Ok(TriplePeriods {
        t_x,
        t_r: m2 as f64 / m3 as f64 * t_x,
        t_s: m1 as f64 / m3 as f64 * t_x,
    })
}

/// A set of PCG directions and periods in one dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MubConfig {
    d: usize,
    directions: Vec<(RotationAngle, f64)>,
    expected_m: Option<Vec<u64>>,
}

/// Outcome of checking one pair of a [`MubConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    pub m_star: f64,
    pub m: Option<u64>,
    /// `|m* − round(m*)|`.
    pub residual: f64,
}

impl MubConfig {
    /// `expected_m`, when given, lists one `m` per pair `(i, j)`, `i < j`, in
    /// lexicographic order.
    pub fn new(
        d: usize,
        directions: Vec<(RotationAngle, f64)>,
        expected_m: Option<Vec<u64>>,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::OutOfRange(format!("d = {d}, need d >= 2")));
        }
        for (i, &(theta_i, t_i)) in directions.iter().enumerate() {
            if !(t_i.is_finite() && t_i > 0.0) {
                return Err(Error::OutOfRange(format!("period {t_i} must be positive")));
            }
            for (j, &(theta_j, _)) in directions.iter().enumerate().skip(i + 1) {
                if (theta_i - theta_j).sin().abs() <= ANGLE_EPSILON {
                    return Err(Error::ParallelDirections { i, j });
                }
            }
        }
        if let Some(ms) = &expected_m {
            let k = directions.len();
            if ms.len() != k * (k.saturating_sub(1)) / 2 {
                return Err(Error::InvalidLength(format!(
                    "{} m values for {k} directions",
                    ms.len()
                )));
            }
        }
        Ok(Self {
            d,
            directions,
            expected_m,
        })
    }

    /// The triple `{0, 2π/3, 4π/3}` with periods from [`triple_periods`].
    pub fn triple(m1: u64, m2: u64, m3: u64, d: usize) -> Result<Self> {
        let t = triple_periods(m1, m2, m3, d)?;
        let dirs = TriplePeriods::directions();
        Self::new(
            d,
            dirs.into_iter().zip(t.as_array()).collect(),
            Some(vec![m1, m2, m3]),
        )
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn directions(&self) -> &[(RotationAngle, f64)] {
        &self.directions
    }

    pub fn pair_reports(&self, tol: f64) -> Vec<PairReport> {
        let mut out = Vec::new();
        for (i, &(a, ta)) in self.directions.iter().enumerate() {
            for (j, &(b, tb)) in self.directions.iter().enumerate().skip(i + 1) {
                let m_star =
                    m_star(ta, tb, b - a, self.d).expect("directions checked non-parallel");
                let m = check_pair(ta, tb, b - a, self.d, tol)
                    .expect("directions checked non-parallel");
                out.push(PairReport {
                    i,
                    j,
                    m_star,
                    m,
                    residual: (m_star - m_star.round()).abs(),
                });
            }
        }
        out
    }

    /// True when every pair is unbiased (and matches `expected_m`, if set).
    pub fn is_mutually_unbiased(&self, tol: f64) -> bool {
        let reports = self.pair_reports(tol);
        match &self.expected_m {
            Some(ms) => reports.iter().zip(ms).all(|(r, &m)| r.m == Some(m)),
            None => reports.iter().all(|r| r.m.is_some()),
        }
    }
}

/// Consistency residual of a four-direction configuration with `θ1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadrupleResidual {
    pub zeta3: f64,
    pub zeta4: f64,
    pub residual: f64,
    /// Two of the directions coincide modulo π.
    pub degenerate: bool,
}

fn distance_mod_pi(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(PI);
    r.min(PI - r)
}

pub fn quadruple_residual(
    theta2: RotationAngle,
    theta3: RotationAngle,
    theta4: RotationAngle,
) -> Result<QuadrupleResidual> {
    for (name, th) in [("theta2", theta2), ("theta3", theta3), ("theta4", theta4)] {
        if th.sin().abs() <= ANGLE_EPSILON {
            return Err(Error::ExcludedAngle(format!(
                "{name} = {} reproduces the reference direction",
                th.radians()
            )));
        }
    }
    if theta2.cos().abs() <= ANGLE_EPSILON {
        return Err(Error::ExcludedAngle(format!(
            "theta2 = {} has vanishing cotangent",
            theta2.radians()
        )));
    }
    let cot = |t: RotationAngle| t.cos() / t.sin();
    let c2 = cot(theta2);
    let zeta3 = cot(theta3) / c2;
    let zeta4 = cot(theta4) / c2;
    let residual = ((zeta3 - 1.0).abs() - (zeta4 - 1.0).abs())
        .abs()
        .max(((zeta4 - zeta3).abs() - (zeta4 - 1.0).abs()).abs());
    let angles = [theta2.radians(), theta3.radians(), theta4.radians()];
    let degenerate = (0..3)
        .any(|i| (i + 1..3).any(|j| distance_mod_pi(angles[i], angles[j]) < COINCIDENCE_TOLERANCE));
    Ok(QuadrupleResidual {
        zeta3,
        zeta4,
        residual,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadrupleSearch {
    pub trials: u64,
    pub seed: u64,
    /// Samples evaluated (excluded and degenerate draws are skipped).
    pub evaluated: u64,
    pub min_residual: f64,
    pub argmin: [f64; 3],
    /// Non-degenerate samples with residual below `1e−6`.
    pub violations: u64,
}

impl QuadrupleSearch {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Draws `trials` triples `(θ2, θ3, θ4)` uniformly on `[0, π)` and reports the
/// smallest consistency residual among non-degenerate ones.
pub fn search_quadruples(trials: u64, seed: u64) -> Result<QuadrupleSearch> {
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = QuadrupleSearch {
        trials,
        seed,
        evaluated: 0,
        min_residual: f64::INFINITY,
        argmin: [f64::NAN; 3],
        violations: 0,
    };
    for _ in 0..trials {
        let th: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..PI));
        let [a, b, c] = th.map(RotationAngle::from_radians);
        let Ok(r) = quadruple_residual(a, b, c) else {
            continue;
        };
        if r.degenerate {
            continue;
        }
        best.evaluated += 1;
        if r.residual < 1e-6 {
            best.violations += 1;
        }
        if r.residual < best.min_residual {
            best.min_residual = r.residual;
            best.argmin = th;
        }
    }
    Ok(best)
}
