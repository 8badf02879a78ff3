//! Periodic coarse-grained (PCG) measurements.
//!
//! A measurement along direction `θ` bins the quadrature `q_θ` with `d`
//! periodic square-wave masks of period `T`. Bin `k` covers
//! `[k s, (k + 1) s)` modulo `T`, with `s = T / d`, relative to the origin
//! `q_cen`. Bins are half-open so the masks partition the line pointwise.

use std::f64::consts::{PI, TAU};

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::angle::{RotationAngle, ANGLE_EPSILON};
use crate::error::{Error, Result};
use crate::frft::{apply_frft_with, sampled_kernel_matrix, FrftMethod};
use crate::grid::{GridSpec, WaveFunction};

/// Residual norm² below which a projection counts as empty.
pub const EMPTY_PROJECTION_LIMIT: f64 = 1e-12;

/// Periodic square-wave mask family `{M_k(z − q_cen; T)}`, `k = 0..d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaskSpec {
    d: usize,
    period: f64,
    origin: f64,
}

impl MaskSpec {
    pub fn new(d: usize, period: f64, origin: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidMask(format!("d = {d}, need d >= 2")));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidMask(format!(
                "period {period} must be positive"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidMask(format!("origin {origin} is not finite")));
        }
        Ok(Self { d, period, origin })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Bin width `s = T / d`.
    pub fn bin_width(&self) -> f64 {
        self.period / self.d as f64
    }

    pub fn with_origin(self, origin: f64) -> Result<Self> {
        Self::new(self.d, self.period, origin)
    }

    /// Index of the bin containing `z`.
    pub fn bin_of(&self, z: f64) -> usize {
        let r = (z - self.origin).rem_euclid(self.period);
        let k = (r / self.bin_width()).floor() as usize;
        // r may round up to a value just below T that floors to d
        k.min(self.d - 1)
    }

    /// `M_k(z)`: 1 if `z` falls in bin `k`, else 0.
    pub fn value(&self, k: usize, z: f64) -> Result<u8> {
        self.check_index(k)?;
        Ok(u8::from(self.bin_of(z) == k))
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k < self.d {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { k, d: self.d })
        }
    }

    /// Adds to `out[k]` the length of `[lo, hi)` covered by bin `k`.
    pub fn accumulate_overlap(&self, lo: f64, hi: f64, out: &mut [f64]) {
        let s = self.bin_width();
        let mut cur = lo - self.origin;
        let end = hi - self.origin;
        let mut bin = (cur / s).floor();
        while cur < end {
            let boundary = (bin + 1.0) * s;
            let seg_end = end.min(boundary);
            let k = (bin as i64).rem_euclid(self.d as i64) as usize;
            out[k] += (seg_end - cur).max(0.0);
            // guard against boundary == cur from rounding
            cur = if seg_end > cur {
                seg_end
            } else {
                boundary.max(cur + f64::EPSILON * cur.abs().max(1.0))
            };
            bin += 1.0;
        }
    }

    /// Grid of `n_points` samples, spacing close to that of
    /// [`GridSpec::balanced`], whose sample cells tile every bin exactly:
    /// bin edges coincide with cell boundaries. On such a grid the pointwise
    /// mask and the cell-integrated mask agree.
    pub fn aligned_grid(&self, n_points: usize) -> Result<GridSpec> {
        self.aligned_grid_with_spacing(n_points, (TAU / n_points as f64).sqrt())
    }

    /// As [`MaskSpec::aligned_grid`], with spacing close to `target`.
    pub fn aligned_grid_with_spacing(&self, n_points: usize, target: f64) -> Result<GridSpec> {
        if !(target.is_finite() && target > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing {target} must be positive"
            )));
        }
        let s = self.bin_width();
        let per_bin = (s / target).round().max(1.0);
        let spacing = s / per_bin;
        let half_extent = spacing * n_points as f64 / 2.0;
        // c − L + Δ/2 ≡ q_cen (mod Δ), c taken closest to zero
        let mut center = (self.origin + half_extent - spacing / 2.0).rem_euclid(spacing);
        if center > spacing / 2.0 {
            center -= spacing;
        }
        GridSpec::new(center, half_extent, n_points)
    }
}

/// `M_k(z)` for a mask family.
pub fn mask_value(mask: &MaskSpec, k: usize, z: f64) -> Result<u8> {
    mask.value(k, z)
}

/// A PCG measurement: direction plus mask family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PcgMeasurement {
    pub direction: RotationAngle,
    pub mask: MaskSpec,
}

impl PcgMeasurement {
    pub fn new(direction: RotationAngle, mask: MaskSpec) -> Self {
        Self { direction, mask }
    }

    pub fn d(&self) -> usize {
        self.mask.d
    }
}

/// Fourier-series coefficient of the mask family,
/// `f_N = (1 − e^{−2πiN/d}) / (2πiN)`, `f_0 = 1/d`.
pub fn fourier_coefficient(n: i64, d: usize) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0 / d as f64, 0.0);
    }
    if n.rem_euclid(d as i64) == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let num = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -TAU * n as f64 / d as f64);
    num / Complex64::new(0.0, TAU * n as f64)
}

/// `Σ_{|N| > n_max} |f_N|²`, using `Σ_N |f_N|² = 1/d`.
pub fn series_tail_energy(d: usize, n_max: u64) -> f64 {
    let mut head = 1.0 / (d as f64).powi(2);
    for n in 1..=n_max {
        head += 2.0 * fourier_coefficient(n as i64, d).norm_sqr();
    }
    (1.0 / d as f64 - head).max(0.0)
}

/// Truncation `|N| ≤ n_max` of the mask Fourier series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeriesTruncation {
    n_max: u64,
}

impl SeriesTruncation {
    pub fn new(n_max: u64, d: usize) -> Result<Self> {
        if n_max < d as u64 {
            return Err(Error::OutOfRange(format!(
                "series truncation {n_max} < d = {d}"
            )));
        }
        Ok(Self { n_max })
    }

    /// Smallest `n_max ≥ d` with `√(Σ_{|N|>n_max} |f_N|²) < tol`.
    ///
    /// The coefficients decay like `1/N`, so the plain sum of `|f_N|`
    /// diverges and only this L2 tail is usable as a criterion.
    pub fn for_tail_norm(d: usize, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::OutOfRange(format!("tail tolerance {tol}")));
        }
        let target = tol * tol;
        let mut head = 1.0 / (d as f64).powi(2);
        let total = 1.0 / d as f64;
        let mut n: u64 = 0;
        loop {
            if n >= d as u64 && total - head < target {
                return Ok(Self { n_max: n });
            }
            n += 1;
            head += 2.0 * fourier_coefficient(n as i64, d).norm_sqr();
            if n > 1 << 40 {
                return Err(Error::OutOfRange(format!(
                    "tail tolerance {tol} unreachable"
                )));
            }
        }
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }
}

/// Prepares an eigenstate of `Ω_k^θ`. The state is rotated into the θ frame,
/// multiplied by `M_k`, renormalized and rotated back to the reference
/// frame. Uses the chirp transform.
pub fn prepare_masked_state(
    psi: &WaveFunction,
    meas: &PcgMeasurement,
    k: usize,
) -> Result<WaveFunction> {
    prepare_masked_state_with(psi, meas, k, FrftMethod::Chirp)
}

pub fn prepare_masked_state_with(
    psi: &WaveFunction,
    meas: &PcgMeasurement,
    k: usize,
    method: FrftMethod,
) -> Result<WaveFunction> {
    meas.mask.check_index(k)?;
    let mut rotated = apply_frft_with(psi, meas.direction, method)?;
    let grid = *rotated.grid();
    for (amp, q) in rotated.amplitudes_mut().iter_mut().zip(grid.points()) {
        if meas.mask.bin_of(q) != k {
            *amp = Complex64::new(0.0, 0.0);
        }
    }
    let norm_sq = rotated.norm_sq();
    if norm_sq < EMPTY_PROJECTION_LIMIT {
        return Err(Error::EmptyProjection { k, norm_sq });
    }
    let masked = rotated.normalized()?;
    apply_frft_with(&masked, meas.direction.negate(), method)
}

/// Outcome probabilities `p_k = ∫ dq M_k(q) |ψ_θ(q)|²`.
///
/// Each sample stands for the cell `[q_j − Δ/2, q_j + Δ/2)`, and its weight is
/// split among bins by overlap length. Values are clamped to `[0, 1]`.
pub fn pcg_probabilities(psi: &WaveFunction, meas: &PcgMeasurement) -> Result<Vec<f64>> {
    pcg_probabilities_with(psi, meas, FrftMethod::Chirp)
}

pub fn pcg_probabilities_with(
    psi: &WaveFunction,
    meas: &PcgMeasurement,
    method: FrftMethod,
) -> Result<Vec<f64>> {
    let rotated = apply_frft_with(psi, meas.direction, method)?;
    Ok(binned_probabilities(&rotated, &meas.mask))
}

/// Integrates `|ψ|²` of a state already expressed in the measurement frame.
pub fn binned_probabilities(psi: &WaveFunction, mask: &MaskSpec) -> Vec<f64> {
    let grid = psi.grid();
    let dq = grid.spacing();
    let mut probs = vec![0.0; mask.d];
    let mut cell = vec![0.0; mask.d];
    for (amp, q) in psi.amplitudes().iter().zip(grid.points()) {
        let density = amp.norm_sqr();
        if density == 0.0 {
            continue;
        }
        cell.iter_mut().for_each(|c| *c = 0.0);
        mask.accumulate_overlap(q - dq / 2.0, q + dq / 2.0, &mut cell);
        for (p, c) in probs.iter_mut().zip(&cell) {
            *p += density * c;
        }
    }
    probs.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
    probs
}

/// `Ω_k^θ` in its own basis: `diag(M_k(q_j) · spacing)`.
pub fn omega_matrix_direct(
    meas: &PcgMeasurement,
    k: usize,
    grid: &GridSpec,
) -> Result<Array2<Complex64>> {
    meas.mask.check_index(k)?;
    let dq = grid.spacing();
    let mut m = Array2::zeros((grid.len(), grid.len()));
    for (j, q) in grid.points().enumerate() {
        if meas.mask.bin_of(q) == k {
            m[[j, j]] = Complex64::new(dq, 0.0);
        }
    }
    Ok(m)
}

/// `Ω_k^θ` expressed in the basis of `q_frame`: `K† D K` with `D` the direct
/// (diagonal) matrix and `K` the sampled kernel from the `frame` basis to the
/// θ basis.
pub fn omega_matrix_conjugated(
    meas: &PcgMeasurement,
    k: usize,
    frame: RotationAngle,
    grid: &GridSpec,
) -> Result<Array2<Complex64>> {
    let direct = omega_matrix_direct(meas, k, grid)?;
    let kernel = sampled_kernel_matrix(grid, meas.direction - frame)?;
    let dk = {
        let mut dk = kernel.clone();
        for (j, mut row) in dk.rows_mut().into_iter().enumerate() {
            let w = direct[[j, j]];
            row.mapv_inplace(|z| z * w);
        }
        dk
    };
    Ok(kernel.t().mapv(|z| z.conj()).dot(&dk))
}

/// Result of the series assembly of `Ω_k^θ` in a rotated basis.
#[derive(Debug, Clone)]
pub struct RotatedOmega {
    pub matrix: Array2<Complex64>,
    pub truncation: SeriesTruncation,
    /// Largest distance, in samples, between a shift `Nτ` and the sample it
    /// was rounded to.
    pub max_rounding: f64,
    /// `Σ |f_N|` over terms whose shift was not a whole number of samples.
    pub rounded_weight: f64,
    /// `Σ |f_N| · min(1, |shift| / n)`: the share of each term whose
    /// shifted column wrapped around the grid.
    pub wrapped_weight: f64,
}

/// Assembles `Ω_k^θ` in the `q_frame` basis from the Fourier series of the
/// mask:
///
/// `Ω = Σ_N f_N ∫ dq e^{iNφ_k^{(N)}(q)} |q⟩⟨q − Nτ|`, with
/// `τ = 2π sin Δθ / T` and
/// `φ_k^{(N)}(q) = τ (q − Nτ/2) cot Δθ − (2πk/d + q_cen τ / sin Δθ)`.
///
/// Shifts are rounded to the nearest sample and columns wrap periodically
/// around the grid. The quadratic part of the phase is evaluated at the
/// realized column, which coincides with the formula above when no
/// wrapping occurs. Matrix entries carry the same `spacing` factor as
/// [`omega_matrix_direct`].
pub fn omega_matrix_rotated(
    meas: &PcgMeasurement,
    k: usize,
    frame: RotationAngle,
    grid: &GridSpec,
    trunc: SeriesTruncation,
) -> Result<RotatedOmega> {
    meas.mask.check_index(k)?;
    let delta = frame - meas.direction;
    if delta.is_degenerate(ANGLE_EPSILON) {
        return Err(Error::DegenerateAngle {
            radians: delta.radians(),
            tolerance: ANGLE_EPSILON,
        });
    }
    let a = delta.signed();
    let (s, c) = a.sin_cos();
    let d = meas.d();
    let n = grid.len();
    let dq = grid.spacing();
    let tau = TAU * s / meas.mask.period;
    let offset = 2.0 * PI * k as f64 / d as f64 + meas.mask.origin * tau / s;
    let chirp: Vec<Complex64> = grid
        .points()
        .map(|q| Complex64::from_polar(1.0, c / (2.0 * s) * q * q))
        .collect();

    // Terms landing on the same wrapped diagonal share the chirp factor, so
    // their coefficients are summed first.
    let mut diagonals = vec![Complex64::new(0.0, 0.0); n];
    let mut max_rounding: f64 = 0.0;
    let mut rounded_weight = 0.0;
    let mut wrapped_weight = 0.0;
    let n_max = trunc.n_max as i64;
    for big_n in -n_max..=n_max {
        let f = fourier_coefficient(big_n, d);
        if f.norm_sqr() == 0.0 {
            continue;
        }
        let shift = big_n as f64 * tau / dq;
        let whole = shift.round();
        let rounding = (shift - whole).abs();
        max_rounding = max_rounding.max(rounding);
        if rounding > 1e-9 {
            rounded_weight += f.norm();
        }
        if whole != 0.0 {
            wrapped_weight += f.norm() * (whole.abs() / n as f64).min(1.0);
        }
        let class = (whole as i64).rem_euclid(n as i64) as usize;
        diagonals[class] += f * Complex64::from_polar(dq, -(big_n as f64) * offset);
    }
    let matrix = Array2::from_shape_fn((n, n), |(row, col)| {
        let class = (row + n - col) % n;
        diagonals[class] * chirp[row] * chirp[col].conj()
    });
    Ok(RotatedOmega {
        matrix,
        truncation: trunc,
        max_rounding,
        rounded_weight,
        wrapped_weight,
    })
}

/// `‖a − b‖_F / ‖b‖_F`.
pub fn relative_frobenius_error(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    let base: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (diff / base).sqrt()
}
