use nld_stability::linop::grid::Scheme;
use nld_stability::model::{apply_alpha, make_model, Family};
use nld_stability::profile::oracle::mtm_density;
use nld_stability::profile::{
    first_integral_residual, initial_amplitude, sign_flip, solve_profile, stationary_residual, Resolution,
};

fn max_rel_density_error(k: f64, omega: f64, res: &Resolution) -> f64 {
    let model = make_model(Family::Mtm, k, 1.0).unwrap();
    let p = solve_profile(&model, omega, res).unwrap();
    let xs: Vec<f64> = p.grid.x.iter().copied().filter(|x| x.abs() <= 15.0).collect();
    let exact = mtm_density(&model, omega, &xs).unwrap();
    let peak = exact.iter().cloned().fold(0.0, f64::max);
    xs.iter()
        .zip(&exact)
        .map(|(x, r)| {
            let j = p.grid.x.iter().position(|y| y == x).unwrap();
            (p.v[j] * p.v[j] + p.u[j] * p.u[j] - r).abs() / peak
        })
        .fold(0.0, f64::max)
}

#[test]
fn mtm_cubic_density_matches_quadrature() {
    let err = max_rel_density_error(1.0, 0.5, &Resolution::default());
    assert!(err <= 1e-6, "pointwise density error {err:e}");
}

#[test]
fn mtm_density_matches_quadrature_across_powers() {
    for (k, omega) in [(0.5, -0.3), (2.0, 0.2), (3.0, -0.5)] {
        let err = max_rel_density_error(k, omega, &Resolution::default());
        assert!(err <= 1e-6, "k={k} omega={omega}: {err:e}");
    }
}

#[test]
fn gn_amplitude_and_invariants() {
    let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
    let p = solve_profile(&model, 0.9, &Resolution::default()).unwrap();
    let v0 = p.v[p.grid.center()];
    assert!((v0 - 0.2f64.sqrt()).abs() < 1e-8, "v(0) = {v0}");
    assert!((initial_amplitude(&model, 0.9).unwrap() - 0.2f64.sqrt()).abs() < 1e-15);
    assert!(p.parity_defect() <= 1e-10 * p.max_v());
    assert!(p.tail_amplitude() <= 1e-10 * p.max_v());
    assert!(first_integral_residual(&p) <= 1e-9);
    assert!(stationary_residual(&p) <= 1e-8 * p.max_v());
}

#[test]
fn tails_decay_at_kappa() {
    for (family, k, omega) in [(Family::Gn, 1.0, 0.6), (Family::Mtm, 2.0, -0.4)] {
        let model = make_model(family, k, 1.0).unwrap();
        let p = solve_profile(&model, omega, &Resolution::default()).unwrap();
        let kappa = (1.0 - omega * omega).sqrt();
        let r = p.grid.spec.r;
        // least-squares slope of ln v over R/2 ≤ x ≤ R/2 + 10/κ, above the floor
        let pts: Vec<(f64, f64)> = p
            .grid
            .x
            .iter()
            .zip(&p.v)
            .filter(|(x, v)| **x >= 0.5 * r && **x <= 0.5 * r + 10.0 / kappa && v.abs() > 1e-13)
            .map(|(x, v)| (*x, v.abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / n, sy / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((-slope / kappa - 1.0).abs() < 0.02, "{family} fitted {} vs {kappa}", -slope);
    }
}

#[test]
fn current_vanishes_on_profiles() {
    for (family, k, omega) in [(Family::Gn, 2.0, 0.5), (Family::Mtm, 0.5, -0.6)] {
        let model = make_model(family, k, 1.0).unwrap();
        let p = solve_profile(&model, omega, &Resolution::default()).unwrap();
        let j1: Vec<f64> = (0..p.len())
            .map(|j| {
                let y = p.spinor(j);
                let a = apply_alpha(&y);
                y.iter().zip(&a).map(|(p, q)| p * q).sum()
            })
            .collect();
        assert!(p.grid.integrate(&j1).abs() < 1e-12);
    }
}

#[test]
fn gn_sign_flip_solves_the_flipped_equation() {
    let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
    let p = solve_profile(&model, 0.4, &Resolution::with_points(257)).unwrap();
    let flipped = sign_flip(&p);
    assert!(flipped.residual(&model, &p.grid) <= 1e-8);
}

#[test]
fn gap_edge_and_non_existence_are_errors() {
    let gn = make_model(Family::Gn, 1.0, 1.0).unwrap();
    assert!(solve_profile(&gn, 1.0, &Resolution::default()).is_err());
    assert!(solve_profile(&gn, -0.3, &Resolution::default()).is_err());
}

#[test]
fn schemes_reproduce_the_exact_amplitude() {
    let model = make_model(Family::Mtm, 1.0, 1.0).unwrap();
    let exact = initial_amplitude(&model, 0.2).unwrap();
    let peak = |scheme, n| {
        let res = Resolution { scheme, points: Some(n), ..Default::default() };
        let p = solve_profile(&model, 0.2, &res).unwrap();
        (p.v[p.grid.center()] - exact).abs()
    };
    assert!(peak(Scheme::Fourier, 513) < 1e-8);
    assert!(peak(Scheme::Mapped { scale: 2.0 }, 513) < 1e-8);
    let ratio = peak(Scheme::Fd4, 257) / peak(Scheme::Fd4, 513);
    assert!(ratio > 12.0, "fd4 ratio {ratio}");
}
