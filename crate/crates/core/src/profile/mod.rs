//! Solitary-wave profiles φ_ω = (v, iu).
//!
//! The stationary system is integrated outward from x = 0 with the exact
//! amplitude v₀, holding the orbit on the level set H = 0 by projection. The
//! result is resampled onto the requested grid and then polished by Newton's
//! method on the collocated equations, so that the discrete profile solves
//! exactly the equations the linearization is built from.

pub mod cache;
pub mod ode;
pub mod oracle;

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::grid::{matvec, Grid, GridSpec, Scheme};
use crate::model::{nonlinear_jacobian, nonlinear_map, Family, ModelSpec, RealSpinor};
use ode::{Flow, StepControl};

/// Relative tail floor required at the domain ends.
pub const TAIL_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Domain half-width; defaults to max(30/m, 30/κ).
    pub r: Option<f64>,
    /// Point count; defaults to the smallest odd count with spacing ≤ h_max.
    pub points: Option<usize>,
    pub h_max: f64,
    pub scheme: Scheme,
    pub rtol: f64,
}

/// First-integral drift that triggers refinement when the point count is not fixed.
pub const DRIFT_TARGET: f64 = 1e-10;
/// Upper bound on the adaptively chosen point count.
pub const MAX_ADAPTIVE_POINTS: usize = 4097;

impl Default for Resolution {
    fn default() -> Self {
        Self { r: None, points: None, h_max: 0.1, scheme: Scheme::Fourier, rtol: 1e-12 }
    }
}

impl Resolution {
    pub fn with_points(points: usize) -> Self {
        Self { points: Some(points), ..Default::default() }
    }

    pub fn grid_spec(&self, model: &ModelSpec, omega: f64) -> GridSpec {
        let r = self.r.unwrap_or_else(|| default_half_width(model, omega));
        let m = self.points.unwrap_or_else(|| ((2.0 * r / self.h_max).ceil() as usize).max(129)) | 1;
        GridSpec::new(r, m, self.scheme)
    }
}

pub fn decay_rate(model: &ModelSpec, omega: f64) -> f64 {
    (model.m * model.m - omega * omega).max(0.0).sqrt()
}

pub fn default_half_width(model: &ModelSpec, omega: f64) -> f64 {
    (30.0 / model.m).max(30.0 / decay_rate(model, omega))
}

#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub model: ModelSpec,
    pub omega: f64,
    pub grid: Grid,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub kappa: f64,
    /// Max-norm residual of the collocated stationary equations.
    pub residual: f64,
    /// Max over nodes of |H|.
    pub first_integral: f64,
    /// Positions x > 0 where s = v² − u² changes sign (GN only).
    pub s_sign_changes: Vec<f64>,
    /// Where the outward integration stopped (tail below floor), if before R.
    pub ode_cutoff: Option<f64>,
    pub newton_iterations: usize,
}

impl WaveProfile {
    /// Identically zero profile on a grid, used as the trivial reference.
    pub fn zero(model: ModelSpec, omega: f64, grid: Grid) -> Self {
        let n = grid.len();
        Self {
            model,
            omega,
            grid,
            v: vec![0.0; n],
            u: vec![0.0; n],
            kappa: decay_rate(&model, omega),
            residual: 0.0,
            first_integral: 0.0,
            s_sign_changes: vec![],
            ode_cutoff: None,
            newton_iterations: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn spinor(&self, j: usize) -> RealSpinor {
        [self.v[j], 0.0, 0.0, self.u[j]]
    }

    pub fn max_v(&self) -> f64 {
        self.v.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    /// Component-major stacking (y₁ block, y₂ block, y₃ block, y₄ block).
    pub fn stacked(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; 4 * n];
        out[..n].copy_from_slice(&self.v);
        out[3 * n..].copy_from_slice(&self.u);
        out
    }

    /// max|v(x) − v(−x)| + max|u(x) + u(−x)|.
    pub fn parity_defect(&self) -> f64 {
        let g = &self.grid;
        (0..self.len())
            .map(|j| {
                let jb = g.mirror(j);
                (self.v[j] - self.v[jb]).abs().max((self.u[j] + self.u[jb]).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn tail_amplitude(&self) -> f64 {
        let n = self.len();
        (self.v[0].abs() + self.u[0].abs()).max(self.v[n - 1].abs() + self.u[n - 1].abs())
    }
}

/// Right-hand side (v, u) ↦ (v′, u′) of the stationary system.
pub fn stationary_system(model: &ModelSpec, omega: f64) -> Result<impl Fn(&[f64; 2]) -> [f64; 2]> {
    model.check_gap(omega)?;
    let md = *model;
    Ok(move |y: &[f64; 2]| {
        let (v, u) = (y[0], y[1]);
        let (p, q) = coefficients(&md, omega, v, u);
        [-q * u, p * v]
    })
}

/// (P, Q) with u′ = P v and v′ = −Q u.
fn coefficients(model: &ModelSpec, omega: f64, v: f64, u: f64) -> (f64, f64) {
    let m = model.m;
    match model.family {
        Family::Gn => {
            let f = model.f(v * v - u * u);
            (omega - m + f, omega + m - f)
        }
        Family::Mtm => {
            let rk = (v * v + u * u).powf(model.k);
            (omega - m + rk, omega + m + rk)
        }
    }
}

/// The x-independent first integral, zero on the solitary-wave orbit.
pub fn first_integral(model: &ModelSpec, omega: f64, v: f64, u: f64) -> f64 {
    let m = model.m;
    let s = v * v - u * u;
    let r = v * v + u * u;
    match model.family {
        Family::Gn => omega * r - m * s + model.big_f(s),
        Family::Mtm => omega * r + r.powf(model.k + 1.0) / (model.k + 1.0) - m * s,
    }
}

fn first_integral_grad(model: &ModelSpec, omega: f64, v: f64, u: f64) -> [f64; 2] {
    let (p, q) = coefficients(model, omega, v, u);
    [2.0 * v * p, 2.0 * u * q]
}

pub fn initial_amplitude(model: &ModelSpec, omega: f64) -> Result<f64> {
    model.check_gap(omega)?;
    let k = model.k;
    Ok(((k + 1.0) * (model.m - omega)).powf(0.5 / k))
}

pub fn first_integral_residual(profile: &WaveProfile) -> f64 {
    profile
        .v
        .iter()
        .zip(&profile.u)
        .map(|(v, u)| first_integral(&profile.model, profile.omega, *v, *u).abs())
        .fold(0.0, f64::max)
}

fn check_existence(model: &ModelSpec, omega: f64) -> Result<()> {
    model.check_gap(omega)?;
    if model.family == Family::Gn && omega <= 0.0 {
        return Err(Error::NoSolitaryWave {
            omega,
            reason: "pure-power Gross-Neveu waves exist only for 0 < omega < m".into(),
        });
    }
    Ok(())
}

/// Outward integration from x = 0 on [0, x_end].
pub fn integrate_half_orbit(model: &ModelSpec, omega: f64, x_end: f64, rtol: f64) -> Result<ode::Trajectory> {
    check_existence(model, omega)?;
    let v0 = initial_amplitude(model, omega)?;
    let rhs = stationary_system(model, omega)?;
    let md = *model;
    let project = move |y: &mut [f64; 2]| {
        for _ in 0..3 {
            let h = first_integral(&md, omega, y[0], y[1]);
            let g = first_integral_grad(&md, omega, y[0], y[1]);
            let g2 = g[0] * g[0] + g[1] * g[1];
            let scale = (y[0] * y[0] + y[1] * y[1]) * md.m;
            if g2 == 0.0 || h.abs() <= 1e-16 * scale {
                break;
            }
            y[0] -= h * g[0] / g2;
            y[1] -= h * g[1] / g2;
        }
    };
    let stop = 1e-14 * v0;
    let mut min_norm = f64::INFINITY;
    let monitor = move |x: f64, y: &[f64; 2]| {
        let n = y[0].abs() + y[1].abs();
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Flow::Abort(format!("non-finite state at x = {x}"));
        }
        if y[0] < -1e-3 * v0 || y[1] < -1e-3 * v0 {
            return Flow::Abort(format!("orbit left the homoclinic branch at x = {x}"));
        }
        if n < stop {
            return Flow::Stop;
        }
        min_norm = min_norm.min(n);
        if n < 1e-4 * v0 && n > 1e3 * min_norm {
            return Flow::Abort(format!("tail grows again after x = {x}"));
        }
        Flow::Continue
    };
    let kappa = decay_rate(model, omega);
    let ctl = StepControl { rtol, h0: 1e-3, h_max: (0.05f64).min(0.5 / kappa.max(1e-12)), ..Default::default() };
    ode::integrate(rhs, project, monitor, 0.0, [v0, 0.0], x_end, ctl)
        .map_err(|reason| Error::IntegrationDiverged { omega, reason })
}

pub fn solve_profile(model: &ModelSpec, omega: f64, res: &Resolution) -> Result<WaveProfile> {
    check_existence(model, omega)?;
    let mut spec = res.grid_spec(model, omega);
    loop {
        let grid = Grid::new(spec)?;
        let p = solve_on_grid_with(model, omega, &grid, res.rtol)?;
        // An under-resolved core shows up as drift in H; refine unless M was fixed.
        if res.points.is_some() || p.first_integral <= DRIFT_TARGET || grid.len() >= MAX_ADAPTIVE_POINTS {
            return Ok(p);
        }
        spec = spec.refined();
    }
}

/// The grid solve_profile settles on (solving once when adaptive).
pub fn resolved_grid(model: &ModelSpec, omega: f64, res: &Resolution) -> Result<Grid> {
    if res.points.is_some() {
        return Grid::new(res.grid_spec(model, omega));
    }
    Ok(solve_profile(model, omega, res)?.grid)
}

pub fn solve_on_grid(model: &ModelSpec, omega: f64, grid: &Grid) -> Result<WaveProfile> {
    solve_on_grid_with(model, omega, grid, 1e-12)
}

fn solve_on_grid_with(model: &ModelSpec, omega: f64, grid: &Grid, rtol: f64) -> Result<WaveProfile> {
    check_existence(model, omega)?;
    let x_end = grid.x[grid.len() - 1];
    let traj = integrate_half_orbit(model, omega, x_end, rtol)?;
    let cutoff = traj.last_x();
    let n = grid.len();
    let c = grid.center();
    let mut v = vec![0.0; n];
    let mut u = vec![0.0; n];
    for j in c..n {
        if let Some(y) = traj.eval(grid.x[j]) {
            v[j] = y[0];
            u[j] = y[1];
        }
        let jb = grid.mirror(j);
        v[jb] = v[j];
        u[jb] = -u[j];
    }
    let s_sign_changes = if model.family == Family::Gn {
        traj.x
            .windows(2)
            .zip(traj.y.windows(2))
            .filter(|(_, y)| {
                let s0 = y[0][0] * y[0][0] - y[0][1] * y[0][1];
                let s1 = y[1][0] * y[1][0] - y[1][1] * y[1][1];
                s0 * s1 < 0.0
            })
            .map(|(x, _)| 0.5 * (x[0] + x[1]))
            .collect()
    } else {
        vec![]
    };
    let v0 = v[c];
    let tail = v[n - 1].abs() + u[n - 1].abs();
    if tail > TAIL_FLOOR * v0 {
        return Err(Error::IntegrationDiverged {
            omega,
            reason: format!(
                "tail amplitude {tail:e} at |x| = {:.3} exceeds the floor; enlarge the domain",
                grid.x[n - 1]
            ),
        });
    }
    let d = grid.diff_matrix();
    let (residual, iterations) = polish(model, omega, grid, &d, &mut v, &mut u)?;
    let mut p = WaveProfile {
        model: *model,
        omega,
        grid: grid.clone(),
        v,
        u,
        kappa: decay_rate(model, omega),
        residual,
        first_integral: 0.0,
        s_sign_changes,
        ode_cutoff: (cutoff < x_end).then_some(cutoff),
        newton_iterations: iterations,
    };
    p.first_integral = first_integral_residual(&p);
    Ok(p)
}

/// Collocation residual (r₁, r₄): the first and fourth components of
/// 𝐉𝛂¹φ′ + (m𝛃 − ω)φ − g(φ); the other two vanish on the ansatz.
pub fn collocation_residual(
    model: &ModelSpec,
    omega: f64,
    d: &Mat<f64>,
    v: &[f64],
    u: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let dv = matvec(d, v);
    let du = matvec(d, u);
    let m = model.m;
    let n = v.len();
    let mut r1 = vec![0.0; n];
    let mut r4 = vec![0.0; n];
    for j in 0..n {
        let g = nonlinear_map(model, &[v[j], 0.0, 0.0, u[j]]);
        r1[j] = du[j] + (m - omega) * v[j] - g[0];
        r4[j] = -dv[j] - (m + omega) * u[j] - g[3];
    }
    (r1, r4)
}

pub fn stationary_residual(profile: &WaveProfile) -> f64 {
    let d = profile.grid.diff_matrix();
    let (r1, r4) = collocation_residual(&profile.model, profile.omega, &d, &profile.v, &profile.u);
    r1.iter().chain(&r4).fold(0.0, |a, b| a.max(b.abs()))
}

/// Newton iteration on the parity-reduced collocation system (v even, u odd).
/// Returns the final max-norm residual and the iteration count.
fn polish(
    model: &ModelSpec,
    omega: f64,
    grid: &Grid,
    d: &Mat<f64>,
    v: &mut [f64],
    u: &mut [f64],
) -> Result<(f64, usize)> {
    let n = grid.len();
    let c = grid.center();
    let nv = n - c;
    let nu = n - c - 1;
    let dim = nv + nu;
    let m = model.m;
    let scale = v.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let norm = |r1: &[f64], r4: &[f64]| r1.iter().chain(r4).fold(0.0f64, |a, b| a.max(b.abs()));
    let (mut r1, mut r4) = collocation_residual(model, omega, d, v, u);
    let mut res = norm(&r1, &r4);
    let mut iterations = 0;
    for _ in 0..12 {
        if res <= 1e-14 * scale {
            break;
        }
        let jac: Vec<_> = (0..n).map(|j| nonlinear_jacobian(model, &[v[j], 0.0, 0.0, u[j]])).collect();
        // Unknowns: v_j (j ≥ c), then u_j (j > c). Equations: r₁ at j ≥ c, r₄ at j > c.
        let mut a = Mat::<f64>::zeros(dim, dim);
        let mut rhs = Mat::<f64>::zeros(dim, 1);
        for (row, i) in (c..n).enumerate() {
            rhs[(row, 0)] = -r1[i];
            a[(row, row)] += (m - omega) - jac[i][0][0];
            for (col, j) in (c + 1..n).enumerate() {
                a[(row, nv + col)] += d[(i, j)] - d[(i, n - 1 - j)];
            }
            if i > c {
                a[(row, nv + (i - c - 1))] -= jac[i][0][3];
            }
        }
        for (r, i) in (c + 1..n).enumerate() {
            let row = nv + r;
            rhs[(row, 0)] = -r4[i];
            for (col, j) in (c..n).enumerate() {
                let dd = if j == c { d[(i, j)] } else { d[(i, j)] + d[(i, n - 1 - j)] };
                a[(row, col)] -= dd;
            }
            a[(row, i - c)] -= jac[i][3][0];
            a[(row, nv + r)] += -(m + omega) - jac[i][3][3];
        }
        let delta = a.partial_piv_lu().solve(&rhs);
        let mut vt = v.to_vec();
        let mut ut = u.to_vec();
        for (col, j) in (c..n).enumerate() {
            vt[j] += delta[(col, 0)];
            vt[n - 1 - j] = vt[j];
        }
        ut[c] = 0.0;
        for (col, j) in (c + 1..n).enumerate() {
            ut[j] += delta[(nv + col, 0)];
            ut[n - 1 - j] = -ut[j];
        }
        let (t1, t4) = collocation_residual(model, omega, d, &vt, &ut);
        let tres = norm(&t1, &t4);
        if !(tres.is_finite()) || tres >= res {
            break;
        }
        v.copy_from_slice(&vt);
        u.copy_from_slice(&ut);
        r1 = t1;
        r4 = t4;
        let improvement = res / tres;
        res = tres;
        iterations += 1;
        if improvement < 2.0 {
            break;
        }
    }
    Ok((res, iterations))
}

/// Centered ω-derivative of the profile on a fixed grid.
#[derive(Debug, Clone)]
pub struct OmegaDerivative {
    pub omega: f64,
    pub delta: f64,
    pub dv: Vec<f64>,
    pub du: Vec<f64>,
}

impl OmegaDerivative {
    pub fn stacked(&self) -> Vec<f64> {
        let n = self.dv.len();
        let mut out = vec![0.0; 4 * n];
        out[..n].copy_from_slice(&self.dv);
        out[3 * n..].copy_from_slice(&self.du);
        out
    }
}

pub fn d_omega_profile(
    model: &ModelSpec,
    omega: f64,
    delta: f64,
    grid: &Grid,
    richardson: bool,
) -> Result<OmegaDerivative> {
    let centered = |d: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let p = solve_on_grid(model, omega + d, grid)?;
        let q = solve_on_grid(model, omega - d, grid)?;
        let dv = p.v.iter().zip(&q.v).map(|(a, b)| (a - b) / (2.0 * d)).collect();
        let du = p.u.iter().zip(&q.u).map(|(a, b)| (a - b) / (2.0 * d)).collect();
        Ok((dv, du))
    };
    let (mut dv, mut du) = centered(delta)?;
    if richardson {
        let (hv, hu) = centered(0.5 * delta)?;
        for j in 0..dv.len() {
            dv[j] = (4.0 * hv[j] - dv[j]) / 3.0;
            du[j] = (4.0 * hu[j] - du[j]) / 3.0;
        }
    }
    Ok(OmegaDerivative { omega, delta, dv, du })
}

/// The Gross–Neveu sign flip: φ(x)e^{+iωt} solves the model with α, β and f
/// negated in argument; rotating back to the standard representation by σ₂
/// gives the profile (v̂, iû) = (u, iv) at frequency −ω for f̂(s) = f(−s).
#[derive(Debug, Clone)]
pub struct SignFlipped {
    pub omega: f64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
}

pub fn sign_flip(profile: &WaveProfile) -> SignFlipped {
    SignFlipped { omega: -profile.omega, v: profile.u.clone(), u: profile.v.clone() }
}

impl SignFlipped {
    /// Max residual of the flipped-model stationary system
    /// û′ = (ω̂ − m + f̂(ŝ))v̂, v̂′ = −(ω̂ + m − f̂(ŝ))û with f̂(s) = f(−s).
    pub fn residual(&self, model: &ModelSpec, grid: &Grid) -> f64 {
        let d = grid.diff_matrix();
        let dv = matvec(&d, &self.v);
        let du = matvec(&d, &self.u);
        let m = model.m;
        (0..self.v.len())
            .map(|j| {
                let (v, u) = (self.v[j], self.u[j]);
                let fh = model.f(-(v * v - u * u));
                let a = du[j] - (self.omega - m + fh) * v;
                let b = dv[j] + (self.omega + m - fh) * u;
                a.abs().max(b.abs())
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_model;

    fn gn(k: f64) -> ModelSpec {
        make_model(Family::Gn, k, 1.0).unwrap()
    }
    fn mtm(k: f64) -> ModelSpec {
        make_model(Family::Mtm, k, 1.0).unwrap()
    }

    #[test]
    fn stationary_system_hand_values() {
        let f = stationary_system(&gn(1.0), 0.5).unwrap();
        let d = f(&[1.0, 0.0]);
        assert_eq!(d, [0.0, 0.5]);
        let f = stationary_system(&mtm(1.0), 0.0).unwrap();
        assert_eq!(f(&[1.0, 0.0])[1], 0.0);
        for model in [gn(0.5), mtm(3.0)] {
            assert_eq!(stationary_system(&model, 0.3).unwrap()(&[0.0, 0.0]), [0.0, 0.0]);
        }
        assert!(stationary_system(&gn(1.0), 1.0).is_err());
    }

    #[test]
    fn initial_amplitude_values() {
        assert!((initial_amplitude(&gn(1.0), 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((initial_amplitude(&gn(1.0), 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(initial_amplitude(&gn(1.0), 1.0 - 1e-12).unwrap() < 1e-5);
        assert!(initial_amplitude(&mtm(2.0), -1.0).is_err());
    }

    #[test]
    fn amplitude_zeroes_the_first_integral() {
        for model in [gn(0.5), gn(3.0), mtm(0.5), mtm(2.0)] {
            for omega in [0.1, 0.6] {
                let v0 = initial_amplitude(&model, omega).unwrap();
                assert!(first_integral(&model, omega, v0, 0.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gn_requires_positive_frequency() {
        let r = solve_profile(&gn(1.0), -0.3, &Resolution::default());
        assert!(matches!(r, Err(Error::NoSolitaryWave { .. })));
        assert!(matches!(solve_profile(&gn(1.0), 1.0, &Resolution::default()), Err(Error::OutsideGap { .. })));
    }

    #[test]
    fn gn_cubic_profile_is_converged() {
        let p = solve_profile(&gn(1.0), 0.5, &Resolution::with_points(513)).unwrap();
        assert!(p.residual <= 1e-8 * p.max_v(), "residual {}", p.residual);
        assert!(p.first_integral <= 1e-9, "H {}", p.first_integral);
        assert!(p.parity_defect() <= 1e-10 * p.max_v());
        assert!((p.v[p.grid.center()] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gn_amplitude_near_gap_edge() {
        let p = solve_profile(&gn(1.0), 0.9, &Resolution::default()).unwrap();
        assert!((p.v[p.grid.center()] - 0.2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn perturbation_shows_in_first_integral() {
        let mut p = solve_profile(&gn(1.0), 0.5, &Resolution::with_points(257)).unwrap();
        let j = p.grid.center() + 3;
        p.v[j] += 1e-3;
        assert!(first_integral_residual(&p) >= 1e-4);
        let z = WaveProfile::zero(gn(1.0), 0.5, p.grid.clone());
        assert_eq!(first_integral_residual(&z), 0.0);
    }

    #[test]
    fn sign_flip_solves_the_flipped_model() {
        let model = gn(1.0);
        let p = solve_profile(&model, 0.6, &Resolution::with_points(401)).unwrap();
        let f = sign_flip(&p);
        assert_eq!(f.omega, -0.6);
        assert!(f.residual(&model, &p.grid) < 1e-9);
    }
}
