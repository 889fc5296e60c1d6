//! Model families and the pointwise nonlinearity in real coordinates.
//!
//! A spinor ψ = (ψ₁, ψ₂) is stored as y = (Re ψ₁, Re ψ₂, Im ψ₁, Im ψ₂). The
//! representation is α¹ = σ₁, β = σ₃, so the standing-wave ansatz (v, iu)
//! becomes y = (v, 0, 0, u). The nonlinear term is g(y) = ½∇𝓕(y) and its
//! Jacobian is half the Hessian of the density, hence symmetric.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type RealSpinor = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

/// Below this value the singular factors of sub-linear powers are dropped.
const SINGULAR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Generalized massive Thirring: density depends on the vector current.
    Mtm,
    /// Gross–Neveu (Soler): density depends on the scalar ψ̄ψ.
    Gn,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Mtm => "mtm",
            Family::Gn => "gn",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mtm" | "thirring" => Ok(Family::Mtm),
            "gn" | "soler" | "gross-neveu" => Ok(Family::Gn),
            other => Err(Error::Parameter(format!("unknown model family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub k: f64,
    pub m: f64,
}

pub fn make_model(family: Family, k: f64, m: f64) -> Result<ModelSpec> {
    ModelSpec::new(family, k, m)
}

impl ModelSpec {
    pub fn new(family: Family, k: f64, m: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Parameter(format!("exponent k must be positive, got {k}")));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::Parameter(format!("mass m must be positive, got {m}")));
        }
        Ok(Self { family, k, m })
    }

    /// Checks ω ∈ (−m, m).
    pub fn check_gap(&self, omega: f64) -> Result<()> {
        if omega.is_finite() && omega.abs() < self.m {
            Ok(())
        } else {
            Err(Error::OutsideGap { omega, m: self.m })
        }
    }

    /// Density 𝓕(y): |s|^{k+1}/(k+1) for GN, N^{(k+1)/2}/(k+1) with
    /// N = ρ² − j² for MTM.
    pub fn density(&self, y: &RealSpinor) -> f64 {
        let k = self.k;
        match self.family {
            Family::Gn => scalar_s(y).abs().powf(k + 1.0) / (k + 1.0),
            Family::Mtm => {
                let rho = rho(y);
                if rho == 0.0 {
                    return 0.0;
                }
                let t = current_j(y) / rho;
                let n1 = (1.0 - t * t).max(0.0);
                rho.powf(k + 1.0) * n1.powf(0.5 * (k + 1.0)) / (k + 1.0)
            }
        }
    }

    /// f(s) = |s|^{k−1}s.
    pub fn f(&self, s: f64) -> f64 {
        s.signum() * s.abs().powf(self.k)
    }

    /// Primitive F(s) = |s|^{k+1}/(k+1).
    pub fn big_f(&self, s: f64) -> f64 {
        s.abs().powf(self.k + 1.0) / (self.k + 1.0)
    }
}

/// s = ψ̄ψ = y₁² − y₂² + y₃² − y₄².
pub fn scalar_s(y: &RealSpinor) -> f64 {
    y[0] * y[0] - y[1] * y[1] + y[2] * y[2] - y[3] * y[3]
}

/// ρ = ψ*ψ.
pub fn rho(y: &RealSpinor) -> f64 {
    y.iter().map(|a| a * a).sum()
}

/// J¹ = ψ*α¹ψ = 2(y₁y₂ + y₃y₄).
pub fn current_j(y: &RealSpinor) -> f64 {
    2.0 * (y[0] * y[1] + y[2] * y[3])
}

/// Real form of multiplication by −i.
pub fn apply_j(y: &RealSpinor) -> RealSpinor {
    [y[2], y[3], -y[0], -y[1]]
}

/// Real form of α¹ = σ₁.
pub fn apply_alpha(y: &RealSpinor) -> RealSpinor {
    [y[1], y[0], y[3], y[2]]
}

/// Real form of β = σ₃.
pub fn apply_beta(y: &RealSpinor) -> RealSpinor {
    [y[0], -y[1], y[2], -y[3]]
}

/// exp(θ𝐉) acting on y.
pub fn rotate(y: &RealSpinor, theta: f64) -> RealSpinor {
    let (s, c) = theta.sin_cos();
    let jy = apply_j(y);
    [
        c * y[0] + s * jy[0],
        c * y[1] + s * jy[1],
        c * y[2] + s * jy[2],
        c * y[3] + s * jy[3],
    ]
}

pub fn nonlinear_map(model: &ModelSpec, y: &RealSpinor) -> RealSpinor {
    let k = model.k;
    match model.family {
        Family::Gn => {
            let fs = model.f(scalar_s(y));
            let by = apply_beta(y);
            [fs * by[0], fs * by[1], fs * by[2], fs * by[3]]
        }
        Family::Mtm => {
            // g = N^{(k−1)/2}(ρy − jα¹y), written with t = j/ρ to avoid
            // underflow of N = ρ²(1 − t²) on the tails.
            let r = rho(y);
            if r == 0.0 {
                return [0.0; 4];
            }
            let t = current_j(y) / r;
            let n1 = (1.0 - t * t).max(0.0);
            if n1 < SINGULAR_FLOOR {
                return [0.0; 4];
            }
            let p = r.powf(k) * n1.powf(0.5 * (k - 1.0));
            let ay = apply_alpha(y);
            [
                p * (y[0] - t * ay[0]),
                p * (y[1] - t * ay[1]),
                p * (y[2] - t * ay[2]),
                p * (y[3] - t * ay[3]),
            ]
        }
    }
}

pub fn nonlinear_jacobian(model: &ModelSpec, y: &RealSpinor) -> Mat4 {
    let k = model.k;
    let mut out = [[0.0; 4]; 4];
    match model.family {
        Family::Gn => {
            // f(s)β + 2f'(s)(βy)(βy)ᵀ
            let s = scalar_s(y);
            let fs = model.f(s);
            let by = apply_beta(y);
            let dfs = if k < 1.0 && s.abs() < SINGULAR_FLOOR {
                0.0
            } else {
                k * s.abs().powf(k - 1.0)
            };
            let beta = [1.0, -1.0, 1.0, -1.0];
            for i in 0..4 {
                out[i][i] = fs * beta[i];
                for j in 0..4 {
                    out[i][j] += 2.0 * dfs * by[i] * by[j];
                }
            }
        }
        Family::Mtm => {
            // P·Dw + 2(k−1)N^{(k−3)/2} w wᵀ with P = N^{(k−1)/2},
            // w = ρy − jα¹y, Dw = ρI + 2yyᵀ − jα¹ − 2(α¹y)(α¹y)ᵀ.
            let r = rho(y);
            if r == 0.0 {
                return out;
            }
            let j = current_j(y);
            let t = j / r;
            let n1 = (1.0 - t * t).max(0.0);
            let ay = apply_alpha(y);
            let p = if n1 < SINGULAR_FLOOR {
                if k == 1.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                r.powf(k - 1.0) * n1.powf(0.5 * (k - 1.0))
            };
            let alpha = [[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]];
            for a in 0..4 {
                for b in 0..4 {
                    let id = if a == b { r } else { 0.0 };
                    out[a][b] = p * (id + 2.0 * y[a] * y[b] - j * alpha[a][b] - 2.0 * ay[a] * ay[b]);
                }
            }
            if n1 >= SINGULAR_FLOOR && k != 1.0 {
                // N^{(k−3)/2} w wᵀ = ρ^{k−1} n1^{(k−3)/2} (y − tα¹y)(y − tα¹y)ᵀ
                let c = 2.0 * (k - 1.0) * r.powf(k - 1.0) * n1.powf(0.5 * (k - 3.0));
                let w = [y[0] - t * ay[0], y[1] - t * ay[1], y[2] - t * ay[2], y[3] - t * ay[3]];
                for a in 0..4 {
                    for b in 0..4 {
                        out[a][b] += c * w[a] * w[b];
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gn(k: f64) -> ModelSpec {
        make_model(Family::Gn, k, 1.0).unwrap()
    }
    fn mtm(k: f64) -> ModelSpec {
        make_model(Family::Mtm, k, 1.0).unwrap()
    }

    fn fd_jacobian(model: &ModelSpec, y: &RealSpinor, h: f64) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for b in 0..4 {
            let mut yp = *y;
            let mut ym = *y;
            yp[b] += h;
            ym[b] -= h;
            let gp = nonlinear_map(model, &yp);
            let gm = nonlinear_map(model, &ym);
            for a in 0..4 {
                out[a][b] = (gp[a] - gm[a]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(make_model(Family::Gn, 0.0, 1.0).is_err());
        assert!(make_model(Family::Mtm, 1.0, 0.0).is_err());
        assert!(make_model(Family::Mtm, -1.0, 1.0).is_err());
        assert!(make_model(Family::Gn, 0.5, 1.0).is_ok());
        assert!(make_model(Family::Mtm, 1.0, 1.0).is_ok());
    }

    #[test]
    fn map_vanishes_at_zero() {
        for m in [gn(0.5), gn(3.0), mtm(0.5), mtm(2.0)] {
            assert_eq!(nonlinear_map(&m, &[0.0; 4]), [0.0; 4]);
        }
    }

    #[test]
    fn hand_evaluations() {
        assert_eq!(nonlinear_map(&gn(1.0), &[1.0, 0.0, 0.0, 0.0]), [1.0, 0.0, 0.0, 0.0]);
        let g = nonlinear_map(&mtm(1.0), &[1.0, 0.0, 0.0, 1.0]);
        for (a, b) in g.iter().zip([2.0, 0.0, 0.0, 2.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(current_j(&[0.3, 0.0, 0.0, -1.2]), 0.0);
    }

    #[test]
    fn jacobian_zero_at_origin_for_k_ge_1() {
        for m in [gn(1.0), gn(2.0), mtm(1.0), mtm(3.0)] {
            assert_eq!(nonlinear_jacobian(&m, &[0.0; 4]), [[0.0; 4]; 4]);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_gn_cubic() {
        let y = [1.0, 0.0, 0.0, 0.0];
        let a = nonlinear_jacobian(&gn(1.0), &y);
        let b = fd_jacobian(&gn(1.0), &y, 1e-5);
        for i in 0..4 {
            for j in 0..4 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-6, "{i}{j}");
            }
        }
    }

    #[test]
    fn jacobian_symmetric_on_ansatz_point() {
        for m in [gn(0.5), gn(1.0), mtm(0.5), mtm(2.0)] {
            let a = nonlinear_jacobian(&m, &[0.7, 0.0, 0.0, 0.3]);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((a[i][j] - a[j][i]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn mtm_reduces_to_rho_power_on_ansatz() {
        let m = mtm(0.5);
        let y = [0.8, 0.0, 0.0, -0.4];
        let r: f64 = 0.8 * 0.8 + 0.4 * 0.4;
        let g = nonlinear_map(&m, &y);
        for a in 0..4 {
            assert!((g[a] - r.powf(0.5) * y[a]).abs() < 1e-14);
        }
    }

    #[test]
    fn density_gradient_is_twice_the_map() {
        let h = 1e-6;
        for m in [gn(0.5), gn(3.0), mtm(0.5), mtm(2.0)] {
            let y = [0.4, -0.3, 0.9, 0.2];
            let g = nonlinear_map(&m, &y);
            for a in 0..4 {
                let mut yp = y;
                let mut ym = y;
                yp[a] += h;
                ym[a] -= h;
                let d = (m.density(&yp) - m.density(&ym)) / (2.0 * h);
                assert!((d - 2.0 * g[a]).abs() < 1e-7, "{:?} {a}", m.family);
            }
        }
    }

    #[test]
    fn sublinear_jacobian_is_finite_where_s_vanishes() {
        let a = nonlinear_jacobian(&gn(0.5), &[0.5, 0.5, 0.0, 0.0]);
        assert!(a.iter().flatten().all(|x| x.is_finite()));
        let b = nonlinear_jacobian(&mtm(0.5), &[0.5, 0.5, 0.0, 0.0]);
        assert!(b.iter().flatten().all(|x| x.is_finite()));
    }
}
