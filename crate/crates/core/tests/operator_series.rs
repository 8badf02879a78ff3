use pcgmub_core::angle::RotationAngle;
use pcgmub_core::grid::GridSpec;
use pcgmub_core::pcg::{
    omega_matrix_conjugated, omega_matrix_rotated, relative_frobenius_error, MaskSpec,
    PcgMeasurement, SeriesTruncation,
};

fn case(d: usize, theta_deg: f64, n: usize, periods: usize, n_max: u64) -> f64 {
    let theta = RotationAngle::from_degrees(theta_deg);
    let frame = RotationAngle::ZERO;
    let grid = GridSpec::tuned_for_rotation(n, frame - theta).unwrap();
    let t = 2.0 * grid.half_extent() / periods as f64;
    let mask = MaskSpec::new(d, t, grid.spacing() / 2.0).unwrap();
    let meas = PcgMeasurement::new(theta, mask);
    let mut worst: f64 = 0.0;
    for k in 0..d {
        let exact = omega_matrix_conjugated(&meas, k, frame, &grid).unwrap();
        let series = omega_matrix_rotated(
            &meas,
            k,
            frame,
            &grid,
            SeriesTruncation::new(n_max, d).unwrap(),
        )
        .unwrap();
        assert!(series.max_rounding < 1e-6);
        worst = worst.max(relative_frobenius_error(&series.matrix, &exact));
    }
    worst
}

#[test]
fn series_matches_conjugated_kernel() {
    for &(d, th) in &[(2, 90.0), (3, 120.0), (4, 60.0), (5, 200.0)] {
        let e1 = case(d, th, 96, 4, 200);
        let e2 = case(d, th, 96, 4, 2000);
        println!("d={d} θ={th}: {e1:.3e} {e2:.3e}");
        assert!(e2 < e1);
        assert!(e2 < 1e-2);
    }
}
