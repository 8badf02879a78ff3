//! Uniform sampling grids and sampled quadrature wavefunctions.

use num_complex::Complex64;
use serde::Serialize;

use crate::angle::RotationAngle;
use crate::error::{Error, Result};
use crate::frft::{apply_frft_with, FrftMethod};

/// Minimum number of samples on a grid.
pub const MIN_POINTS: usize = 16;

/// Envelope value a Gaussian may still have at the grid edge.
pub const EDGE_ENVELOPE_LIMIT: f64 = 1e-12;

/// Endpoint-exclusive uniform grid: `q_j = center - L + j * (2L / N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    center: f64,
    half_extent: f64,
    n_points: usize,
}

impl GridSpec {
    pub fn new(center: f64, half_extent: f64, n_points: usize) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::InvalidGrid(format!("center {center} is not finite")));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half extent {half_extent} must be positive"
            )));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "{n_points} points, need at least {MIN_POINTS}"
            )));
        }
        Ok(Self {
            center,
            half_extent,
            n_points,
        })
    }

    /// Centered grid whose position window and sampling bandwidth are equal,
    /// `L = π / spacing`, i.e. `L = sqrt(π N / 2)`. Such a grid covers a
    /// phase-space square that is mapped onto itself by quarter turns.
    pub fn balanced(n_points: usize) -> Result<Self> {
        let l = (std::f64::consts::PI * n_points as f64 / 2.0).sqrt();
        Self::new(0.0, l, n_points)
    }

    /// Centered grid with `N * spacing^2 = 2π |sin Δθ|`. On this grid the
    /// sampled kernel of a rotation by `Δθ` is an exactly unitary matrix.
    pub fn tuned_for_rotation(n_points: usize, delta: RotationAngle) -> Result<Self> {
        let s = delta.sin().abs();
        if s <= crate::angle::ANGLE_EPSILON {
            return Err(Error::DegenerateAngle {
                radians: delta.radians(),
                tolerance: crate::angle::ANGLE_EPSILON,
            });
        }
        let spacing = (std::f64::consts::TAU * s / n_points as f64).sqrt();
        Self::new(0.0, spacing * n_points as f64 / 2.0, n_points)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n_points as f64
    }

    pub fn start(&self) -> f64 {
        self.center - self.half_extent
    }

    pub fn point(&self, j: usize) -> f64 {
        self.start() + j as f64 * self.spacing()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.point(j))
    }

    /// Sampling bandwidth `π / spacing` (largest representable momentum).
    pub fn bandwidth(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }
}

/// Complex amplitudes sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidLength(format!(
                "{} amplitudes for a grid of {}",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, amplitudes })
    }

    /// Builds `ψ(q_j) = f(q_j)` without normalizing.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let amplitudes = grid.points().map(f).collect();
        Self { grid, amplitudes }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// `Σ |ψ_j|² · spacing`.
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidLength("cannot normalize a zero state".into()));
        }
        let inv = 1.0 / n;
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(self)
    }

    /// `|ψ_j|²` per sample.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩` by the rectangle rule.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let sum: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.grid.spacing())
    }

    /// L2 distance `‖self − other‖`.
    pub fn l2_distance(&self, other: &WaveFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        let sum: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((sum * self.grid.spacing()).sqrt())
    }

    /// L2 distance after aligning the global phase of `other` to `self`,
    /// `min_φ ‖self − e^{iφ} other‖`.
    pub fn l2_distance_up_to_phase(&self, other: &WaveFunction) -> Result<f64> {
        let overlap = other.inner(self)?;
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let sum: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - phase * b).norm_sqr())
            .sum();
        Ok((sum * self.grid.spacing()).sqrt())
    }

    /// Largest pointwise difference of `|ψ|²`.
    pub fn density_linf_distance(&self, other: &WaveFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
            .fold(0.0, f64::max))
    }

    /// Probability carried by the outer `fraction` of samples on each side.
    pub fn edge_weight(&self, fraction: f64) -> f64 {
        let n = self.amplitudes.len();
        let band = ((n as f64 * fraction).ceil() as usize).clamp(1, n / 2);
        let dq = self.grid.spacing();
        let head: f64 = self.amplitudes[..band].iter().map(|a| a.norm_sqr()).sum();
        let tail: f64 = self.amplitudes[n - band..]
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        (head + tail) * dq
    }

    /// Mean and variance of `|ψ|²` over the grid.
    pub fn moments(&self) -> (f64, f64) {
        let dq = self.grid.spacing();
        let total: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dq;
        let mean: f64 = self
            .grid
            .points()
            .zip(&self.amplitudes)
            .map(|(q, a)| q * a.norm_sqr())
            .sum::<f64>()
            * dq
            / total;
        let var: f64 = self
            .grid
            .points()
            .zip(&self.amplitudes)
            .map(|(q, a)| (q - mean).powi(2) * a.norm_sqr())
            .sum::<f64>()
            * dq
            / total;
        (mean, var)
    }

    fn check_same_grid(&self, other: &WaveFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Normalized Gaussian `exp[-(q - q0)² / (4σ²)] · exp(i p0 q)`.
///
/// Fails if the envelope at either grid edge is not below
/// [`EDGE_ENVELOPE_LIMIT`].
pub fn gaussian_state(grid: GridSpec, q0: f64, sigma: f64, p0: f64) -> Result<WaveFunction> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::NonPositiveWidth(sigma));
    }
    let envelope = |q: f64| (-(q - q0).powi(2) / (4.0 * sigma * sigma)).exp();
    let left = grid.start();
    let right = grid.center() + grid.half_extent();
    let edge_value = envelope(left).max(envelope(right));
    if edge_value >= EDGE_ENVELOPE_LIMIT {
        return Err(Error::EnvelopeClipped { edge_value });
    }
    WaveFunction::from_fn(grid, |q| Complex64::from_polar(envelope(q), p0 * q)).normalized()
}

/// Variance of the quadrature `q_θ`: rotate into the θ frame, then take the
/// second central moment of `|ψ_θ|²`.
pub fn quadrature_variance(psi: &WaveFunction, theta: RotationAngle) -> Result<f64> {
    quadrature_variance_with(psi, theta, FrftMethod::Chirp)
}

pub fn quadrature_variance_with(
    psi: &WaveFunction,
    theta: RotationAngle,
    method: FrftMethod,
) -> Result<f64> {
    let rotated = apply_frft_with(psi, theta, method)?;
    Ok(rotated.moments().1)
}
