//! Reference values the command-line checks compare against.

/// Mask periods for the default bench (635 nm, 400 mm, π/3, 8 μm pixels):
/// `(d, T μm, T/l, T_exp μm)`.
pub const PERIOD_TABLE: [(usize, f64, f64, u64); 9] = [
    (2, 617.3, 77.2, 616),
    (3, 756.0, 94.5, 752),
    (4, 872.9, 109.1, 872),
    (5, 976.0, 122.0, 976),
    (6, 1069.1, 133.6, 1072),
    (7, 1154.8, 144.3, 1152),
    (8, 1234.5, 154.3, 1232),
    (9, 1309.4, 163.7, 1312),
    (10, 1380.2, 172.5, 1384),
];

/// Tolerance on `T` (μm) and on `T/l`.
pub const PERIOD_TOLERANCE: f64 = 0.05;

/// Measured fractions of random distributions less uniform than the
/// experimental ones, `(d, fraction)`.
pub const KL_EXCEEDANCE: [(usize, f64); 9] = [
    (2, 0.80),
    (3, 0.944),
    (4, 0.972),
    (5, 0.982),
    (6, 0.993),
    (7, 0.9950),
    (8, 0.9965),
    (9, 0.9989),
    (10, 0.9933),
];

pub fn kl_exceedance(d: usize) -> Option<f64> {
    KL_EXCEEDANCE.iter().find(|r| r.0 == d).map(|r| r.1)
}
