//! Conserved functionals on profiles, the Pohozaev/virial defects, and the
//! critical frequencies where E or dQ/dω vanish.

use roots::{find_root_brent, Convergency};
use std::io::Write;
use std::path::Path;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::grid::{matvec, Grid};
use crate::model::ModelSpec;
use crate::par::{par_map, Exec};
use crate::profile::{resolved_grid, solve_on_grid, solve_profile, Resolution, WaveProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub omega: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// |K + kV|
    pub defect_virial1: f64,
    /// |ωQ − M − V|
    pub defect_virial2: f64,
    /// |K + L|
    pub defect_kl: f64,
    #[serde(rename = "dQ_domega")]
    pub dq_domega: Option<f64>,
}

impl FunctionalReport {
    /// Defects scaled as in the acceptance bounds: by max(|K|,1),
    /// max(|ωQ|,1) and max(|K|,1).
    pub fn relative_defects(&self) -> [f64; 3] {
        let kk = self.k.abs().max(1.0);
        [
            self.defect_virial1 / kk,
            self.defect_virial2 / (self.omega * self.q).abs().max(1.0),
            self.defect_kl / kk,
        ]
    }

    pub fn max_relative_defect(&self) -> f64 {
        self.relative_defects().into_iter().fold(0.0, f64::max)
    }
}

pub fn charge(profile: &WaveProfile) -> f64 {
    let g = &profile.grid;
    let rho: Vec<f64> = profile.v.iter().zip(&profile.u).map(|(v, u)| v * v + u * u).collect();
    g.integrate(&rho)
}

/// K = ∫(v u′ − u v′) with the grid's derivative matrix.
pub fn kinetic(profile: &WaveProfile) -> f64 {
    let d = profile.grid.diff_matrix();
    kinetic_with(&profile.grid, &d, &profile.v, &profile.u)
}

fn kinetic_with(grid: &Grid, d: &faer::Mat<f64>, v: &[f64], u: &[f64]) -> f64 {
    let dv = matvec(d, v);
    let du = matvec(d, u);
    let f: Vec<f64> = (0..v.len()).map(|j| v[j] * du[j] - u[j] * dv[j]).collect();
    grid.integrate(&f)
}

pub fn energy_terms(profile: &WaveProfile) -> FunctionalReport {
    let g = &profile.grid;
    let model = &profile.model;
    let omega = profile.omega;
    let q = charge(profile);
    let k = kinetic(profile);
    let s: Vec<f64> = profile.v.iter().zip(&profile.u).map(|(v, u)| v * v - u * u).collect();
    let m = model.m * g.integrate(&s);
    let dens: Vec<f64> = (0..profile.len()).map(|j| model.density(&profile.spinor(j))).collect();
    let v = -g.integrate(&dens);
    let e = k + m + v;
    let l = -e + omega * q;
    FunctionalReport {
        omega,
        q,
        k,
        m,
        v,
        e,
        l,
        defect_virial1: (k + model.k * v).abs(),
        defect_virial2: (omega * q - m - v).abs(),
        defect_kl: (k + l).abs(),
        dq_domega: None,
    }
}

/// The three virial defects |K + kV|, |ωQ − M − V|, |K + L|.
pub fn virial_report(profile: &WaveProfile) -> [f64; 3] {
    let r = energy_terms(profile);
    [r.defect_virial1, r.defect_virial2, r.defect_kl]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub omega: f64,
    pub report: Option<FunctionalReport>,
    pub error: Option<String>,
}

pub const TABLE_COLUMNS: [&str; 12] = [
    "omega",
    "Q",
    "K",
    "M",
    "V",
    "E",
    "L",
    "dQ_domega",
    "defect_virial1",
    "defect_virial2",
    "defect_KL",
    "error",
];

/// Sweep table as CSV; failed rows keep their ω and carry the error text.
pub fn write_table_csv(rows: &[SweepRow], path: &Path, meta: &[String]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for m in meta {
        writeln!(f, "# {m}")?;
    }
    let mut w = csv::Writer::from_writer(f);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(TABLE_COLUMNS).map_err(fmt)?;
    let num = |x: f64| format!("{x:.17e}");
    for row in rows {
        let mut rec = vec![num(row.omega)];
        match &row.report {
            Some(r) => {
                rec.extend([r.q, r.k, r.m, r.v, r.e, r.l].map(num));
                rec.push(r.dq_domega.map(num).unwrap_or_default());
                rec.extend([r.defect_virial1, r.defect_virial2, r.defect_kl].map(num));
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 10)),
        }
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(fmt)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_functionals(model: &ModelSpec, omegas: &[f64], res: &Resolution, exec: Exec) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = par_map(exec, omegas, |&omega| match solve_profile(model, omega, res) {
        Ok(p) => SweepRow { omega, report: Some(energy_terms(&p)), error: None },
        Err(e) => SweepRow { omega, report: None, error: Some(e.to_string()) },
    });
    fill_dq_domega(&mut rows);
    rows
}

/// dQ/dω from the sweep itself: three-point differences on the (possibly
/// nonuniform) grid of successful rows, one-sided at the ends.
pub fn fill_dq_domega(rows: &mut [SweepRow]) {
    let ok: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].report.is_some()).collect();
    if ok.len() < 2 {
        return;
    }
    let w: Vec<f64> = ok.iter().map(|&i| rows[i].omega).collect();
    let q: Vec<f64> = ok.iter().map(|&i| rows[i].report.unwrap().q).collect();
    let n = ok.len();
    for idx in 0..n {
        let d = if n == 2 {
            (q[1] - q[0]) / (w[1] - w[0])
        } else {
            let (a, b, c) = if idx == 0 {
                (0, 1, 2)
            } else if idx == n - 1 {
                (n - 3, n - 2, n - 1)
            } else {
                (idx - 1, idx, idx + 1)
            };
            lagrange_derivative([w[a], w[b], w[c]], [q[a], q[b], q[c]], w[idx])
        };
        if let Some(r) = rows[ok[idx]].report.as_mut() {
            r.dq_domega = Some(d);
        }
    }
}

fn lagrange_derivative(x: [f64; 3], y: [f64; 3], t: f64) -> f64 {
    let [x0, x1, x2] = x;
    y[0] * ((t - x1) + (t - x2)) / ((x0 - x1) * (x0 - x2))
        + y[1] * ((t - x0) + (t - x2)) / ((x1 - x0) * (x1 - x2))
        + y[2] * ((t - x0) + (t - x1)) / ((x2 - x0) * (x2 - x1))
}

struct XTol(f64);

impl Convergency<f64> for XTol {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }
    fn is_converged(&mut self, a: f64, b: f64) -> bool {
        (a - b).abs() < self.0
    }
    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter > 100
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub omega: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

fn brent<F: FnMut(f64) -> Result<f64>>(
    quantity: &str,
    bracket: (f64, f64),
    tol: f64,
    mut f: F,
) -> Result<CriticalPoint> {
    let (a, b) = bracket;
    let fa = f(a)?;
    let fb = f(b)?;
    if fa * fb > 0.0 || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoSignChange { quantity: quantity.into(), a, b });
    }
    let mut evals = 2;
    let mut failure = None;
    let root = find_root_brent(
        a,
        b,
        |w| {
            evals += 1;
            match f(w) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        &mut XTol(tol),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let omega = root.map_err(|e| Error::RootSearch(e.to_string()))?;
    Ok(CriticalPoint { omega, bracket, evaluations: evals })
}

pub fn energy_at(model: &ModelSpec, omega: f64, res: &Resolution) -> Result<f64> {
    Ok(energy_terms(&solve_profile(model, omega, res)?).e)
}

/// Root of ω ↦ E(φ_ω) to |Δω| ≤ 1e−5.
pub fn find_omega_e(model: &ModelSpec, bracket: (f64, f64), res: &Resolution) -> Result<CriticalPoint> {
    brent("E", bracket, 1e-6, |w| energy_at(model, w, res))
}

/// dQ/dω by centered differences on the grid of the center frequency, with
/// one Richardson step.
pub fn dq_domega_at(model: &ModelSpec, omega: f64, delta: f64, res: &Resolution) -> Result<f64> {
    let grid = resolved_grid(model, omega, res)?;
    let q = |w: f64| -> Result<f64> { Ok(charge(&solve_on_grid(model, w, &grid)?)) };
    let d1 = (q(omega + delta)? - q(omega - delta)?) / (2.0 * delta);
    let h = 0.5 * delta;
    let d2 = (q(omega + h)? - q(omega - h)?) / (2.0 * h);
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Root of ω ↦ dQ/dω to |Δω| ≤ 1e−4.
pub fn find_omega_vk(model: &ModelSpec, bracket: (f64, f64), res: &Resolution) -> Result<CriticalPoint> {
    brent("dQ/domega", bracket, 1e-5, |w| dq_domega_at(model, w, 1e-3, res))
}

/// Sign changes of a sampled quantity, located by linear interpolation.
pub fn sign_changes(omegas: &[f64], values: &[Option<f64>]) -> Vec<f64> {
    let pts: Vec<(f64, f64)> =
        omegas.iter().zip(values).filter_map(|(w, v)| v.filter(|x| x.is_finite()).map(|x| (*w, x))).collect();
    pts.windows(2)
        .filter(|p| p[0].1 * p[1].1 < 0.0)
        .map(|p| p[0].0 - p[0].1 * (p[1].0 - p[0].0) / (p[1].1 - p[0].1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::grid::{GridSpec, Scheme};
    use crate::model::{make_model, Family};

    #[test]
    fn zero_profile_gives_zeros() {
        let model = make_model(Family::Mtm, 1.0, 1.0).unwrap();
        let grid = Grid::new(GridSpec::new(20.0, 129, Scheme::Fourier)).unwrap();
        let z = WaveProfile::zero(model, 0.3, grid);
        let r = energy_terms(&z);
        assert_eq!((r.q, r.k, r.m, r.v, r.e, r.l), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(virial_report(&z), [0.0; 3]);
    }

    #[test]
    fn identities_hold_by_construction() {
        let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
        let p = solve_profile(&model, 0.5, &Resolution::default()).unwrap();
        let r = energy_terms(&p);
        assert_eq!(r.e, r.k + r.m + r.v);
        assert_eq!(r.l, -r.e + r.omega * r.q);
        assert!(r.q > 0.0 && r.e > 0.0);
        assert!(r.defect_virial1 <= 1e-6 * r.k.abs());
    }

    #[test]
    fn single_point_sweep_has_no_derivative() {
        let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
        let rows = sweep_functionals(&model, &[0.5], &Resolution::default(), Exec::Sequential);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].report.unwrap().dq_domega.is_none());
    }

    #[test]
    fn three_point_derivative_is_exact_for_quadratics() {
        let d = lagrange_derivative([0.0, 0.3, 1.0], [1.0, 1.0 + 0.09, 2.0], 0.3);
        assert!((d - 0.6).abs() < 1e-12);
    }

    #[test]
    fn sign_change_interpolation() {
        let w = [0.0, 1.0, 2.0, 3.0];
        let v = [Some(-1.0), Some(1.0), None, Some(2.0)];
        assert_eq!(sign_changes(&w, &v), vec![0.5]);
    }
}
