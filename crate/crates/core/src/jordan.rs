//! Kernel and Jordan-chain structure of 𝐉𝐋 at zero, the VK pairing, and the
//! quantity C₁₁ whose vanishing marks the growth of the translation block.

use faer::Mat;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functionals::{charge, energy_terms};
use crate::linop::grid::{matvec, Grid};
use crate::linop::{apply_alpha_stacked, apply_j_stacked, assemble_jl, kernel_vectors, LinearizedOperator, Parity};
use crate::model::ModelSpec;
use crate::profile::{d_omega_profile, solve_on_grid, OmegaDerivative, Resolution, WaveProfile};

/// ξ = ωx𝐉𝛗 − ½𝛂¹𝛗 in nodal values, component-major.
pub fn build_xi(profile: &WaveProfile) -> Vec<f64> {
    let phi = profile.stacked();
    let jphi = apply_j_stacked(&phi);
    let aphi = apply_alpha_stacked(&phi);
    let n = profile.len();
    let x = &profile.grid.x;
    (0..4 * n).map(|r| profile.omega * x[r % n] * jphi[r] - 0.5 * aphi[r]).collect()
}

fn stacked_dx(grid: &Grid, profile: &WaveProfile) -> Vec<f64> {
    let d = grid.diff_matrix();
    let n = profile.len();
    let mut out = vec![0.0; 4 * n];
    out[..n].copy_from_slice(&matvec(&d, &profile.v));
    out[3 * n..].copy_from_slice(&matvec(&d, &profile.u));
    out
}

/// Quadrature inner product of two stacked nodal vectors.
pub fn inner(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let n = grid.len();
    (0..4).map(|c| grid.inner(&a[c * n..(c + 1) * n], &b[c * n..(c + 1) * n])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainResiduals {
    /// ‖𝐉𝐋·𝐉𝛗‖/‖𝐉𝛗‖
    pub kernel_u1: f64,
    /// ‖𝐉𝐋·∂ₓ𝛗‖/‖∂ₓ𝛗‖
    pub kernel_tr: f64,
    /// ‖𝐉𝐋·∂_ω𝛗 − 𝐉𝛗‖/‖𝐉𝛗‖
    pub chain_u1: f64,
    /// ‖𝐉𝐋·ξ − ∂ₓ𝛗‖/‖∂ₓ𝛗‖
    pub chain_tr: f64,
}

fn rel_residual(op: &LinearizedOperator, y: &[f64], rhs: Option<&[f64]>, scale: &[f64]) -> f64 {
    let ns = op.norm(scale);
    if ns == 0.0 {
        return 0.0;
    }
    let mut r = op.apply(y);
    if let Some(b) = rhs {
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= bi;
        }
    }
    op.norm(&r) / ns
}

pub fn chain_residuals(op: &LinearizedOperator, profile: &WaveProfile, dw: &OmegaDerivative) -> Result<ChainResiduals> {
    op.grid.check_same(&profile.grid.spec)?;
    if dw.dv.len() != profile.len() {
        return Err(Error::GridMismatch("omega derivative has a different length".into()));
    }
    let (jphi, dphi) = kernel_vectors(op, profile);
    let dwphi = op.to_operator_coords(&dw.stacked());
    let xi = op.to_operator_coords(&build_xi(profile));
    Ok(ChainResiduals {
        kernel_u1: rel_residual(op, &jphi, None, &jphi),
        kernel_tr: rel_residual(op, &dphi, None, &dphi),
        chain_u1: rel_residual(op, &dwphi, Some(&jphi), &jphi),
        chain_tr: rel_residual(op, &xi, Some(&dphi), &dphi),
    })
}

/// ⟨∂_ω𝛗, 𝛗⟩, equal to ½ dQ/dω.
pub fn vk_pairing(profile: &WaveProfile, dw: &OmegaDerivative) -> f64 {
    inner(&profile.grid, &dw.stacked(), &profile.stacked())
}

/// ⟨∂_ω𝛗, 𝐉∂ₓ𝛗⟩.
pub fn cross_orthogonality(profile: &WaveProfile, dw: &OmegaDerivative) -> f64 {
    let jd = apply_j_stacked(&stacked_dx(&profile.grid, profile));
    inner(&profile.grid, &dw.stacked(), &jd)
}

/// ⟨ξ, 𝛗⟩.
pub fn xi_phi(profile: &WaveProfile) -> f64 {
    inner(&profile.grid, &build_xi(profile), &profile.stacked())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    pub c11: f64,
    pub energy: f64,
    pub defect: f64,
}

/// C₁₁ = ⟨𝛂¹𝛗, 𝐉∂ₓ𝛗⟩ + ωQ against E = K + M + V.
pub fn c_matrix(profile: &WaveProfile) -> CMatrix {
    let g = &profile.grid;
    let aphi = apply_alpha_stacked(&profile.stacked());
    let jd = apply_j_stacked(&stacked_dx(g, profile));
    let c11 = inner(g, &aphi, &jd) + profile.omega * charge(profile);
    let energy = energy_terms(profile).e;
    CMatrix { c11, energy, defect: (c11 - energy).abs() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedSolve {
    /// ‖𝐉𝐋u − ∂_ω𝛗‖/‖∂_ω𝛗‖ for the minimum-norm least-squares u.
    pub residual: f64,
    /// ‖(𝐉𝐋)ᵀ(𝐉𝐋u − ∂_ω𝛗)‖/(σ_max‖∂_ω𝛗‖).
    pub normal_residual: f64,
    /// Singular values treated as zero.
    pub null_dimension: usize,
    pub smallest_singular: f64,
}

/// Least-squares solve of 𝐉𝐋u = ∂_ω𝛗 on the block of φ's parity. The residual
/// is the obstruction to extending the U(1) chain; it vanishes with dQ/dω.
pub fn generalized_solve(op: &LinearizedOperator, dw: &OmegaDerivative, rcond: f64) -> Result<GeneralizedSolve> {
    let block = op.parity_block(Parity::Even);
    let b = block.layout.restrict(&op.to_operator_coords(&dw.stacked()));
    let a = &block.a;
    let svd = a.svd().map_err(|_| Error::Eigensolver { omega: op.omega })?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let n = b.len();
    let smax = (0..n).map(|i| s[i]).fold(0.0, f64::max);
    let mut coef = vec![0.0; n];
    let mut null_dimension = 0;
    for i in 0..n {
        if s[i] > rcond * smax {
            let ub: f64 = (0..n).map(|r| u[(r, i)] * b[r]).sum();
            coef[i] = ub / s[i];
        } else {
            null_dimension += 1;
        }
    }
    let x: Vec<f64> = (0..n).map(|r| (0..n).map(|i| v[(r, i)] * coef[i]).sum()).collect();
    let mut res = matvec(a, &x);
    for (ri, bi) in res.iter_mut().zip(&b) {
        *ri -= bi;
    }
    let at = Mat::from_fn(n, n, |i, j| a[(j, i)]);
    let normal = matvec(&at, &res);
    let nb = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    let nrm = |y: &[f64]| y.iter().map(|t| t * t).sum::<f64>().sqrt();
    Ok(GeneralizedSolve {
        residual: nrm(&res) / nb,
        normal_residual: nrm(&normal) / (smax * nb),
        null_dimension,
        smallest_singular: (0..n).map(|i| s[i]).fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JordanReport {
    pub omega: f64,
    pub points: usize,
    pub delta_omega: f64,
    pub residual_kernel_u1: f64,
    pub residual_kernel_tr: f64,
    pub residual_chain_u1: f64,
    pub residual_chain_tr: f64,
    pub vk_pairing: f64,
    pub charge: f64,
    pub c11: f64,
    pub energy: f64,
    pub defect: f64,
    pub cross_orthogonality: f64,
    pub xi_phi: f64,
    pub generalized: Option<GeneralizedSolve>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JordanOptions {
    pub delta_omega: f64,
    pub richardson: bool,
    /// Run the least-squares diagnostic (one SVD of the even block).
    pub generalized: bool,
}

impl Default for JordanOptions {
    fn default() -> Self {
        Self { delta_omega: 1e-4, richardson: false, generalized: false }
    }
}

pub fn jordan_report_for(profile: &WaveProfile, opts: &JordanOptions) -> Result<JordanReport> {
    let model: &ModelSpec = &profile.model;
    let grid = &profile.grid;
    let op = assemble_jl(model, profile, grid)?;
    let dw = d_omega_profile(model, profile.omega, opts.delta_omega, grid, opts.richardson)?;
    let ch = chain_residuals(&op, profile, &dw)?;
    let c = c_matrix(profile);
    let generalized = if opts.generalized { Some(generalized_solve(&op, &dw, 1e-9)?) } else { None };
    Ok(JordanReport {
        omega: profile.omega,
        points: profile.len(),
        delta_omega: opts.delta_omega,
        residual_kernel_u1: ch.kernel_u1,
        residual_kernel_tr: ch.kernel_tr,
        residual_chain_u1: ch.chain_u1,
        residual_chain_tr: ch.chain_tr,
        vk_pairing: vk_pairing(profile, &dw),
        charge: charge(profile),
        c11: c.c11,
        energy: c.energy,
        defect: c.defect,
        cross_orthogonality: cross_orthogonality(profile, &dw),
        xi_phi: xi_phi(profile),
        generalized,
    })
}

pub fn jordan_report(model: &ModelSpec, omega: f64, res: &Resolution, opts: &JordanOptions) -> Result<JordanReport> {
    let grid = crate::profile::resolved_grid(model, omega, res)?;
    let p = solve_on_grid(model, omega, &grid)?;
    jordan_report_for(&p, opts)
}

pub const CSV_COLUMNS: [&str; 14] = [
    "omega",
    "residual_kernel_U1",
    "residual_kernel_tr",
    "residual_chain_U1",
    "residual_chain_tr",
    "vk_pairing",
    "c11",
    "energy",
    "defect",
    "cross_orthogonality",
    "xi_phi",
    "charge",
    "points",
    "delta_omega",
];

pub fn write_reports_csv(reports: &[JordanReport], path: &Path, meta: &[String]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for m in meta {
        writeln!(f, "# {m}")?;
    }
    let mut w = csv::Writer::from_writer(f);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(fmt)?;
    for r in reports {
        let vals = [
            r.omega,
            r.residual_kernel_u1,
            r.residual_kernel_tr,
            r.residual_chain_u1,
            r.residual_chain_tr,
            r.vk_pairing,
            r.c11,
            r.energy,
            r.defect,
            r.cross_orthogonality,
            r.xi_phi,
            r.charge,
        ];
        let mut rec: Vec<String> = vals.iter().map(|v| format!("{v:.17e}")).collect();
        rec.push(r.points.to_string());
        rec.push(format!("{:e}", r.delta_omega));
        w.write_record(&rec).map_err(fmt)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::grid::{GridSpec, Scheme};
    use crate::model::{make_model, Family};
    use crate::profile::solve_profile;

    #[test]
    fn zero_profile_is_trivial() {
        let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
        let grid = Grid::new(GridSpec::new(20.0, 129, Scheme::Fourier)).unwrap();
        let z = WaveProfile::zero(model, 0.5, grid.clone());
        assert!(build_xi(&z).iter().all(|v| *v == 0.0));
        assert_eq!(c_matrix(&z).c11, 0.0);
        let op = assemble_jl(&model, &z, &grid).unwrap();
        let dw = OmegaDerivative { omega: 0.5, delta: 1e-4, dv: vec![0.0; 129], du: vec![0.0; 129] };
        let ch = chain_residuals(&op, &z, &dw).unwrap();
        assert_eq!((ch.kernel_u1, ch.kernel_tr), (0.0, 0.0));
    }

    #[test]
    fn gn_cubic_chain_and_identities() {
        let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
        let p = solve_profile(&model, 0.5, &Resolution::with_points(257)).unwrap();
        let r = jordan_report_for(&p, &JordanOptions::default()).unwrap();
        assert!(r.residual_chain_u1 < 1e-6, "{r:?}");
        assert!(r.residual_chain_tr < 1e-6, "{r:?}");
        assert!(r.defect <= 1e-5 * r.energy.abs().max(1.0));
        assert!(r.xi_phi.abs() < 1e-10);
        assert!(r.cross_orthogonality.abs() < 1e-12);
    }
}
