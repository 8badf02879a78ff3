//! End-to-end prepare-and-measure simulations.
//!
//! A Gaussian beam is projected onto bin `k0` of the preparation mask along
//! `θ'` and then measured along `θ`. Grids are aligned to the preparation
//! mask; the measurement mask is integrated cell by cell.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::angle::RotationAngle;
use crate::error::{Error, Result};
use crate::grid::{gaussian_state, GridSpec};
use crate::mub::{pair_period, triple_periods, TriplePeriods};
use crate::optics::{
    compose_stages, lens_angle, scaling_factor, BenchSpec, Stage, DEFAULT_PIXEL, DEFAULT_WAVELENGTH,
};
use crate::pcg::{pcg_probabilities, prepare_masked_state, MaskSpec, PcgMeasurement};
use crate::stats::{kl_from_uniform, ProbabilityDistribution};

/// Physical beam width, meters.
pub const BEAM_SIGMA: f64 = 875e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationSettings {
    pub n_points: usize,
    /// Grid half extent; chosen from the periods and beam when `None`.
    pub half_extent: Option<f64>,
    /// Dimensionless beam width.
    pub sigma: f64,
    /// Minimum number of periods of either mask inside the grid.
    pub min_periods: f64,
    /// Minimum half extent in units of `sigma`.
    pub min_widths: f64,
    pub prep_origin: f64,
    pub meas_origin: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        let delta = BenchSpec::default()
            .scaling_factor()
            .expect("default bench");
        Self {
            n_points: 8192,
            half_extent: None,
            sigma: BEAM_SIGMA / delta,
            min_periods: 8.0,
            min_widths: 6.0,
            prep_origin: 0.0,
            meas_origin: 0.0,
        }
    }
}

impl SimulationSettings {
    /// Grid aligned to `prep` that holds both masks and the beam.
    pub fn grid(&self, prep: &MaskSpec, t_meas: f64) -> Result<GridSpec> {
        let t_max = prep.period().max(t_meas);
        let balanced = (TAU * self.n_points as f64 / 4.0).sqrt();
        let half = match self.half_extent {
            Some(l) => l,
            // the Gaussian tail drops below 1e-12 at about 10.5 sigma
            None => balanced
                .max(self.min_periods / 2.0 * t_max)
                .max(11.0 * self.sigma),
        };
        let grid =
            prep.aligned_grid_with_spacing(self.n_points, 2.0 * half / self.n_points as f64)?;
        if 2.0 * grid.half_extent() < self.min_periods * t_max {
            return Err(Error::InvalidGrid(format!(
                "extent {:.3} holds fewer than {} periods of {t_max:.3}",
                2.0 * grid.half_extent(),
                self.min_periods
            )));
        }
        if grid.half_extent() < self.min_widths * self.sigma {
            return Err(Error::InvalidGrid(format!(
                "half extent {:.3} below {} beam widths",
                grid.half_extent(),
                self.min_widths
            )));
        }
        Ok(grid)
    }
}

/// One prepare-and-measure run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOutcome {
    pub d: usize,
    pub theta_prime: f64,
    pub theta: f64,
    pub t_prep: f64,
    pub t_meas: f64,
    /// `2π d |sin Δθ| / (T T')`.
    pub m_star: f64,
    pub k0: usize,
    pub probabilities: Vec<f64>,
    pub max_deviation: f64,
    pub kl_bits: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_pair(
    d: usize,
    theta_prime: RotationAngle,
    theta: RotationAngle,
    t_prep: f64,
    t_meas: f64,
    k0: usize,
    settings: &SimulationSettings,
) -> Result<PairOutcome> {
    let prep_mask = MaskSpec::new(d, t_prep, settings.prep_origin)?;
    let meas_mask = MaskSpec::new(d, t_meas, settings.meas_origin)?;
    let grid = settings.grid(&prep_mask, t_meas)?;
    let beam = gaussian_state(grid, 0.0, settings.sigma, 0.0)?;
    let prep = PcgMeasurement::new(theta_prime, prep_mask);
    let meas = PcgMeasurement::new(theta, meas_mask);
    let state = prepare_masked_state(&beam, &prep, k0)?;
    let probabilities = pcg_probabilities(&state, &meas)?;
    let dist = ProbabilityDistribution::from_weights(&probabilities)?;
    Ok(PairOutcome {
        d,
        theta_prime: theta_prime.radians(),
        theta: theta.radians(),
        t_prep,
        t_meas,
        m_star: TAU * d as f64 * (theta - theta_prime).sin().abs() / (t_prep * t_meas),
        k0,
        max_deviation: dist.max_deviation_from_uniform(),
        kl_bits: kl_from_uniform(&dist),
        probabilities,
    })
}

/// Equal periods `T = T' = √(2π d |sin Δθ| / m)`. `m` is not checked, so the
/// excluded values can be simulated too.
pub fn symmetric_period(d: usize, delta: RotationAngle, m: f64) -> f64 {
    (TAU * d as f64 * delta.sin().abs() / m).sqrt()
}

/// Pair with periods from the unbiasedness condition: `T' = T` at the
/// symmetric point when `t_prep` is `None`.
pub fn simulate_mub_pair(
    d: usize,
    theta_prime: RotationAngle,
    theta: RotationAngle,
    m: u64,
    k0: usize,
    t_prep: Option<f64>,
    settings: &SimulationSettings,
) -> Result<PairOutcome> {
    let delta = theta - theta_prime;
    let t_prep = t_prep.unwrap_or_else(|| symmetric_period(d, delta, m as f64));
    let t_meas = pair_period(t_prep, delta, d, m)?;
    simulate_pair(d, theta_prime, theta, t_prep, t_meas, k0, settings)
}

/// All six ordered pairs of `{0, 2π/3, 4π/3}` with `m1 = m2 = m3 = 1`.
pub fn simulate_triple(
    d: usize,
    k0: usize,
    settings: &SimulationSettings,
) -> Result<Vec<PairOutcome>> {
    let periods = triple_periods(1, 1, 1, d)?.as_array();
    let dirs = TriplePeriods::directions();
    let mut out = Vec::with_capacity(6);
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                out.push(simulate_pair(
                    d, dirs[i], dirs[j], periods[i], periods[j], k0, settings,
                )?);
            }
        }
    }
    Ok(out)
}

/// Bench of the two-lens experiment: `f = 250 mm`, `z = 200 mm` twice,
/// followed by a mirror.
pub fn alpha23_bench() -> BenchSpec {
    let lens = Stage::Lens { f: 0.25, z: 0.2 };
    let theta = lens_angle(0.25, 0.2).expect("valid lens");
    BenchSpec {
        wavelength: DEFAULT_WAVELENGTH,
        focal_length: 0.25,
        angle: theta,
        pixel: DEFAULT_PIXEL,
        stages: vec![lens, lens, Stage::Reflection],
    }
}

/// Summary of one preparation bin width in the small-angle sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthOutcome {
    pub bin_width_px: u32,
    pub t_prep: f64,
    pub t_meas: f64,
    pub max_kl_bits: f64,
    pub mean_kl_bits: f64,
    pub max_deviation: f64,
    /// Set when the grid could not hold the masks; the width is skipped.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alpha23Sweep {
    pub d: usize,
    pub alpha_degrees: f64,
    pub axis_flipped: bool,
    /// Scaling factor, micrometers.
    pub delta_um: f64,
    pub widths: Vec<WidthOutcome>,
}

pub const ALPHA23_WIDTHS: [u32; 10] = [2, 4, 6, 8, 10, 12, 16, 20, 24, 32];

/// Prepares along `0` and measures along the composed bench angle, for each
/// preparation bin width (in pixels) and every `k0`.
pub fn simulate_alpha23(d: usize, widths_px: &[u32], n_points: usize) -> Result<Alpha23Sweep> {
    let bench = alpha23_bench();
    let comp = compose_stages(&bench)?;
    let alpha = RotationAngle::from_degrees(comp.effective_degrees);
    let delta = scaling_factor(bench.wavelength, bench.focal_length, bench.angle)?;
    let settings = SimulationSettings {
        n_points,
        sigma: BEAM_SIGMA / delta,
        ..SimulationSettings::default()
    };
    let mut widths = Vec::with_capacity(widths_px.len());
    for &w in widths_px {
        let t_prep = d as f64 * w as f64 * bench.pixel / delta;
        let t_meas = pair_period(t_prep, alpha, d, 1)?;
        let mut row = WidthOutcome {
            bin_width_px: w,
            t_prep,
            t_meas,
            max_kl_bits: 0.0,
            mean_kl_bits: 0.0,
            max_deviation: 0.0,
            error: None,
        };
        for k0 in 0..d {
            match simulate_pair(d, RotationAngle::ZERO, alpha, t_prep, t_meas, k0, &settings) {
                Ok(o) => {
                    row.max_kl_bits = row.max_kl_bits.max(o.kl_bits);
                    row.mean_kl_bits += o.kl_bits / d as f64;
                    row.max_deviation = row.max_deviation.max(o.max_deviation);
                }
                Err(e) => {
                    row.error = Some(e.to_string());
                    break;
                }
            }
        }
        widths.push(row);
    }
    Ok(Alpha23Sweep {
        d,
        alpha_degrees: comp.effective_degrees,
        axis_flipped: comp.axis_flipped,
        delta_um: delta * 1e6,
        widths,
    })
}
