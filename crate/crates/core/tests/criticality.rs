use nld_stability::functionals::{
    dq_domega_at, energy_terms, find_omega_e, find_omega_vk, sign_changes, sweep_functionals,
};
use nld_stability::jordan::{jordan_report, JordanOptions};
use nld_stability::linop::grid::Scheme;
use nld_stability::model::{make_model, Family};
use nld_stability::par::Exec;
use nld_stability::profile::{solve_profile, Resolution};
use nld_stability::sweep::{open_grid, run_sweep, SpectrumOptions, SweepConfig};
use nld_stability::Error;

#[test]
fn gn_cubic_charge_is_monotone() {
    let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
    let res = Resolution::with_points(257);
    assert!(matches!(find_omega_vk(&model, (0.1, 0.9), &res), Err(Error::NoSignChange { .. })));
    assert!(matches!(find_omega_e(&model, (0.1, 0.9), &res), Err(Error::NoSignChange { .. })));
}

#[test]
fn vk_pairing_is_half_the_charge_slope() {
    let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
    let res = Resolution::default();
    let r = jordan_report(&model, 0.5, &res, &JordanOptions { richardson: true, ..Default::default() }).unwrap();
    let dq = dq_domega_at(&model, 0.5, 1e-3, &res).unwrap();
    assert!((r.vk_pairing - 0.5 * dq).abs() <= 1e-5 * dq.abs(), "{} vs {}", r.vk_pairing, 0.5 * dq);
    assert!(r.xi_phi.abs() <= 1e-10 * r.charge);
    assert!(r.cross_orthogonality.abs() <= 1e-10 * r.charge);
    assert!((r.c11 - r.energy).abs() <= 1e-5 * r.energy.abs().max(1.0));
}

#[test]
fn c11_vanishes_with_the_energy() {
    let model = make_model(Family::Mtm, 0.5, 1.0).unwrap();
    let res = Resolution::default();
    let w = find_omega_e(&model, (-0.9, -0.3), &res).unwrap().omega;
    let r = jordan_report(&model, w, &res, &JordanOptions::default()).unwrap();
    assert!(r.c11.abs() <= 1e-3 * r.charge, "c11 {} Q {}", r.c11, r.charge);
}

#[test]
fn vk_pairing_vanishes_at_the_charge_minimum() {
    let model = make_model(Family::Gn, 3.0, 1.0).unwrap();
    let res = Resolution::default();
    let w = find_omega_vk(&model, (0.3, 0.99), &res).unwrap().omega;
    let r = jordan_report(&model, w, &res, &JordanOptions { richardson: true, ..Default::default() }).unwrap();
    assert!(r.vk_pairing.abs() <= 1e-4 * r.charge, "pairing {} Q {}", r.vk_pairing, r.charge);
}

#[test]
fn vk_pairing_sign_follows_the_sweep() {
    let model = make_model(Family::Gn, 3.0, 1.0).unwrap();
    let res = Resolution::default();
    let ws = open_grid(0.5, 0.95, 9);
    let rows = sweep_functionals(&model, &ws, &res, Exec::Parallel);
    let slope: Vec<Option<f64>> = rows.iter().map(|r| r.report.and_then(|x| x.dq_domega)).collect();
    let pair: Vec<Option<f64>> = ws
        .iter()
        .map(|&w| jordan_report(&model, w, &res, &JordanOptions::default()).ok().map(|r| r.vk_pairing))
        .collect();
    let a = sign_changes(&ws, &slope);
    let b = sign_changes(&ws, &pair);
    assert_eq!(a.len(), 1);
    assert_eq!(b.len(), 1);
    assert!((a[0] - b[0]).abs() <= ws[1] - ws[0]);
}

#[test]
fn mtm_energy_changes_sign_once_on_the_gap() {
    let model = make_model(Family::Mtm, 0.5, 1.0).unwrap();
    let ws = open_grid(-0.95, 0.95, 39);
    let rows = sweep_functionals(&model, &ws, &Resolution::default(), Exec::Parallel);
    let e: Vec<Option<f64>> = rows.iter().map(|r| r.report.map(|x| x.e)).collect();
    let roots = sign_changes(&ws, &e);
    assert_eq!(roots.len(), 1, "{roots:?}");
    assert!(roots[0] < 0.0);
}

#[test]
fn virial_defects_shrink_with_resolution() {
    let model = make_model(Family::Mtm, 2.0, 1.0).unwrap();
    let defect = |n: usize| {
        let res = Resolution { points: Some(n), scheme: Scheme::Fd4, ..Default::default() };
        energy_terms(&solve_profile(&model, 0.3, &res).unwrap()).max_relative_defect()
    };
    let (a, b) = (defect(129), defect(257));
    assert!(b < a, "{a:e} -> {b:e}");
}

#[test]
fn gn_cubic_sweep_has_no_events() {
    let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
    let cfg = SweepConfig {
        model,
        omegas: open_grid(0.1, 0.9, 9),
        resolution: Resolution::with_points(129),
        spectrum: Some(SpectrumOptions::default()),
        adaptive: false,
        refine_window: 0.05,
        exec: Exec::Parallel,
        cache: None,
    };
    let out = run_sweep(&cfg);
    assert!(out.failures().is_empty());
    assert!(out.events.is_empty(), "{:?}", out.events);
}
