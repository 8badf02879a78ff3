use std::f64::consts::{PI, TAU};

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use pcgmub_core::angle::RotationAngle;
use pcgmub_core::frft::{apply_frft, apply_frft_with, frft_kernel, reflect, FrftMethod};
use pcgmub_core::grid::{gaussian_state, quadrature_variance, GridSpec, WaveFunction};
use pcgmub_core::mub::{
    check_pair, pair_period, triple_periods, valid_m_values, MubConfig, DEFAULT_M_TOLERANCE,
};
use pcgmub_core::optics::{frft_lens_distance, lens_angle};
use pcgmub_core::pcg::{fourier_coefficient, MaskSpec};
use pcgmub_core::scenario::{simulate_mub_pair, SimulationSettings};
use pcgmub_core::stats::{
    kl_divergence, sample_uniform_simplex, ProbabilityDistribution, SimplexSampler,
};
use proptest::prelude::*;

fn grid() -> GridSpec {
    GridSpec::balanced(1024).unwrap()
}

/// Normalized superposition of two Gaussian packets.
fn cat_state(a: (f64, f64, f64), b: (f64, f64, f64), mix: f64) -> WaveFunction {
    let g = grid();
    let x = gaussian_state(g, a.0, a.1, a.2).unwrap();
    let y = gaussian_state(g, b.0, b.1, b.2).unwrap();
    let amps: Vec<Complex64> = x
        .amplitudes()
        .iter()
        .zip(y.amplitudes())
        .map(|(p, q)| p * mix.cos() + q * mix.sin())
        .collect();
    WaveFunction::new(g, amps).unwrap().normalized().unwrap()
}

fn packet() -> impl Strategy<Value = (f64, f64, f64)> {
    (-3.0..3.0f64, 0.5..2.0f64, -2.0..2.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frft_preserves_norm(p in packet(), theta in 0.0..TAU) {
        prop_assume!(theta.sin().abs() > 1e-3);
        let psi = gaussian_state(grid(), p.0, p.1, p.2).unwrap();
        let out = apply_frft(&psi, RotationAngle::from_radians(theta)).unwrap();
        prop_assert!((out.norm_sq() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn frft_is_additive(p in packet(), a in -1.5..1.5f64, b in -1.5..1.5f64) {
        let psi = gaussian_state(grid(), p.0, p.1, p.2).unwrap();
        let rot = |w: &WaveFunction, t: f64| apply_frft_with(w, RotationAngle::from_radians(t), FrftMethod::Chirp).unwrap();
        let two = rot(&rot(&psi, a), b);
        let one = rot(&psi, a + b);
        prop_assert!(two.l2_distance_up_to_phase(&one).unwrap() < 1e-4);
    }

    #[test]
    fn chirp_matches_quadrature(p in packet(), theta in 0.0..TAU) {
        let psi = gaussian_state(grid(), p.0, p.1, p.2).unwrap();
        let a = RotationAngle::from_radians(theta);
        let fast = apply_frft_with(&psi, a, FrftMethod::Chirp).unwrap();
        let slow = apply_frft_with(&psi, a, FrftMethod::Quadrature).unwrap();
        prop_assert!(fast.l2_distance(&slow).unwrap() < 1e-6);
    }

    #[test]
    fn kernel_modulus_is_constant(q1 in -20.0..20.0f64, q2 in -20.0..20.0f64, theta in 0.0..TAU) {
        prop_assume!(theta.sin().abs() > 1e-6);
        let k = frft_kernel(q1, q2, RotationAngle::from_radians(theta)).unwrap();
        let want = 1.0 / (TAU * theta.sin().abs()).sqrt();
        prop_assert!((k.norm() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn variance_triple_bound(a in packet(), b in packet(), mix in 0.0..PI) {
        let psi = cat_state(a, b, mix);
        let product: f64 = [0.0, TAU / 3.0, 2.0 * TAU / 3.0]
            .iter()
            .map(|&t| quadrature_variance(&psi, RotationAngle::from_radians(t)).unwrap())
            .product();
        prop_assert!(product >= 0.125 - 1e-4, "product {}", product);
    }

    #[test]
    fn masks_partition_the_line(d in 2usize..12, period in 0.01..50.0f64, origin in -10.0..10.0f64, z in -1e4..1e4f64) {
        let m = MaskSpec::new(d, period, origin).unwrap();
        let total: u32 = (0..d).map(|k| u32::from(m.value(k, z).unwrap())).sum();
        prop_assert_eq!(total, 1);
    }

    #[test]
    fn coefficients_decay(n in -100_000i64..100_000, d in 2usize..50) {
        prop_assume!(n != 0);
        prop_assert!(fourier_coefficient(n, d).norm() <= 1.0 / (PI * n.unsigned_abs() as f64) + 1e-15);
    }

    #[test]
    fn pair_period_round_trips(d in 2usize..=10, m_idx in 0usize..20, t in 0.3..20.0f64, theta in 0.01..3.13f64) {
        let ms = valid_m_values(d, 2 * d as u64);
        let m = ms[m_idx % ms.len()];
        let delta = RotationAngle::from_radians(theta);
        let t2 = pair_period(t, delta, d, m).unwrap();
        prop_assert_eq!(check_pair(t, t2, delta, d, DEFAULT_M_TOLERANCE).unwrap(), Some(m));
        prop_assert!((pair_period(t2, delta, d, m).unwrap() - t).abs() < 1e-12 * t.max(1.0));
    }

    #[test]
    fn triple_periods_pass_pairwise(d in 2usize..=30, i in 0usize..9, j in 0usize..9, k in 0usize..9) {
        let ms = valid_m_values(d, 4 * d as u64);
        let (m1, m2, m3) = (ms[i % ms.len()], ms[j % ms.len()], ms[k % ms.len()]);
        triple_periods(m1, m2, m3, d).unwrap();
        let cfg = MubConfig::triple(m1, m2, m3, d).unwrap();
        prop_assert!(cfg.is_mutually_unbiased(DEFAULT_M_TOLERANCE));
    }

    #[test]
    fn lens_distance_round_trips(f in 0.01..2.0f64, frac in 1e-6..=1.0f64) {
        let z = 2.0 * f * frac;
        let back = frft_lens_distance(f, lens_angle(f, z).unwrap()).unwrap();
        prop_assert!((back - z).abs() <= 1e-12 * f);
    }

    #[test]
    fn gibbs_inequality(d in 2usize..20, s1 in any::<u64>(), s2 in any::<u64>()) {
        let p = sample_uniform_simplex(d, s1).unwrap();
        let q = sample_uniform_simplex(d, s2).unwrap();
        prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-9);
        if s1 != s2 {
            prop_assert!(kl_divergence(&p, &q).unwrap() > 0.0);
        }
    }

    #[test]
    fn simplex_sampler_is_deterministic(d in 1usize..20, seed in any::<u64>()) {
        let mut a = SimplexSampler::new(seed);
        let mut b = SimplexSampler::new(seed);
        for _ in 0..5 {
            let (x, y) = (a.sample(d).unwrap(), b.sample(d).unwrap());
            prop_assert_eq!(x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            y.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert!(ProbabilityDistribution::new(x.values().to_vec()).is_ok());
        }
    }
}

#[test]
fn pi_rotation_is_reflection() {
    let psi = gaussian_state(grid(), 1.2, 0.9, 0.7).unwrap();
    let out = apply_frft(&psi, RotationAngle::from_radians(PI)).unwrap();
    assert_eq!(out.amplitudes(), reflect(&psi).unwrap().amplitudes());
    for (j, q) in psi.grid().points().enumerate() {
        let mirrored = psi.grid().points().position(|x| (x + q).abs() < 1e-12);
        if let Some(i) = mirrored {
            assert_eq!(out.amplitudes()[j], psi.amplitudes()[i]);
        }
    }
}

#[test]
fn vacuum_is_rotation_invariant() {
    let vac = gaussian_state(grid(), 0.0, 0.5f64.sqrt(), 0.0).unwrap();
    for theta in [0.1, 0.9, 1.7, 2.9, 3.6, 5.0] {
        let a = RotationAngle::from_radians(theta);
        let out = apply_frft(&vac, a).unwrap();
        assert!(out.density_linf_distance(&vac).unwrap() < 1e-6);
        assert_abs_diff_eq!(quadrature_variance(&vac, a).unwrap(), 0.5, epsilon = 1e-4);
    }
    let g = gaussian_state(grid(), 0.0, 1.4, 0.0).unwrap();
    assert_abs_diff_eq!(
        quadrature_variance(&g, RotationAngle::ZERO).unwrap(),
        1.96,
        epsilon = 1e-6
    );
}

#[test]
fn probabilities_do_not_depend_on_mask_origins() {
    let base = SimulationSettings::default();
    for (d, theta) in [
        (3, TAU / 3.0),
        (5, 23f64.to_radians()),
        (4, 2.0 * TAU / 3.0),
    ] {
        let theta = RotationAngle::from_radians(theta);
        let reference =
            simulate_mub_pair(d, RotationAngle::ZERO, theta, 1, 1, None, &base).unwrap();
        for (po, mo) in [(0.37, 0.0), (0.0, 1.21), (-0.8, 2.5)] {
            let shifted = SimulationSettings {
                prep_origin: po,
                meas_origin: mo,
                ..base
            };
            let o = simulate_mub_pair(d, RotationAngle::ZERO, theta, 1, 1, None, &shifted).unwrap();
            for (a, b) in o.probabilities.iter().zip(&reference.probabilities) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-3);
            }
        }
    }
}

#[test]
fn swap_invariance_of_condition() {
    let delta = RotationAngle::from_degrees(37.0);
    for d in 2..8 {
        for m in valid_m_values(d, 3 * d as u64) {
            let t = 1.7;
            let t2 = pair_period(t, delta, d, m).unwrap();
            assert_eq!(
                check_pair(t, t2, delta, d, 1e-9).unwrap(),
                check_pair(t2, t, delta, d, 1e-9).unwrap()
            );
        }
    }
}
