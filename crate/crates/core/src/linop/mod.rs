//! Discretized linearization 𝐉𝐋(ω) about a solitary wave.
//!
//! Vectors are stacked component-major: index c·M + j holds component c at
//! node j. On mapped grids the operator acts on W^{1/2}-scaled values so that
//! S stays symmetric; on uniform grids W = I and nothing changes.

pub mod grid;

use faer::Mat;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{nonlinear_jacobian, Mat4, ModelSpec};
use crate::profile::WaveProfile;
use grid::{matvec, Grid, GridSpec};

/// 𝐉𝛂¹ in real coordinates: y ↦ (y₄, y₃, −y₂, −y₁).
pub const J_ALPHA: [[f64; 4]; 4] = [
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
];
pub const BETA_DIAG: [f64; 4] = [1.0, -1.0, 1.0, -1.0];
/// Component signs of the parity action 𝒫y(x) = Πy(−x).
pub const PARITY_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

/// Tolerance on the profile's parity defect, relative to max|v|.
pub const PARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Same parity as φ; contains 𝐉𝛗 and 𝛗.
    Even,
    /// Opposite parity; contains ∂ₓ𝛗.
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

pub fn band_edges(model: &ModelSpec, omega: f64) -> [f64; 4] {
    let lo = model.m - omega.abs();
    let hi = model.m + omega.abs();
    [-hi, -lo, lo, hi]
}

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub model: ModelSpec,
    pub omega: f64,
    pub grid: Grid,
    /// Symmetric-form first-derivative matrix.
    pub d: Mat<f64>,
    /// Pointwise nonlinear Jacobians at the nodes.
    pub potential: Vec<Mat4>,
    /// Imaginary parts of the thresholds ∓i(m+|ω|), ∓i(m−|ω|).
    pub band_edges: [f64; 4],
    pub parity_defect: f64,
}

pub fn assemble_jl(model: &ModelSpec, profile: &WaveProfile, grid: &Grid) -> Result<LinearizedOperator> {
    grid.check_same(&profile.grid.spec)?;
    if profile.model != *model {
        return Err(Error::GridMismatch("profile was computed for a different model".into()));
    }
    let potential = (0..grid.len()).map(|j| nonlinear_jacobian(model, &profile.spinor(j))).collect();
    let scale = profile.max_v().max(1e-300);
    Ok(LinearizedOperator {
        model: *model,
        omega: profile.omega,
        grid: grid.clone(),
        d: grid.sym_diff_matrix(),
        potential,
        band_edges: band_edges(model, profile.omega),
        parity_defect: profile.parity_defect() / scale,
    })
}

/// Dense symmetric part S = 𝐉𝛂¹⊗D + (m𝛃 − ω)⊗I − blockdiag(𝐕).
pub fn assemble_l(model: &ModelSpec, profile: &WaveProfile, grid: &Grid) -> Result<Mat<f64>> {
    Ok(assemble_jl(model, profile, grid)?.dense_s())
}

impl LinearizedOperator {
    pub fn points(&self) -> usize {
        self.grid.len()
    }

    pub fn dim(&self) -> usize {
        4 * self.points()
    }

    /// Entry S[(c1, i), (c2, l)].
    #[inline]
    fn s_entry(&self, c1: usize, i: usize, c2: usize, l: usize) -> f64 {
        let mut v = J_ALPHA[c1][c2] * self.d[(i, l)];
        if i == l {
            if c1 == c2 {
                v += self.model.m * BETA_DIAG[c1] - self.omega;
            }
            v -= self.potential[i][c1][c2];
        }
        v
    }

    pub fn dense_s(&self) -> Mat<f64> {
        let n = self.points();
        Mat::from_fn(4 * n, 4 * n, |r, c| self.s_entry(r / n, r % n, c / n, c % n))
    }

    /// Dense 𝐉𝐋 = 𝐉S.
    pub fn matrix(&self) -> Mat<f64> {
        let n = self.points();
        Mat::from_fn(4 * n, 4 * n, |r, c| {
            let (c1, i) = (r / n, r % n);
            let (src, sign) = j_row(c1);
            sign * self.s_entry(src, i, c / n, c % n)
        })
    }

    pub fn apply_s(&self, y: &[f64]) -> Vec<f64> {
        let n = self.points();
        assert_eq!(y.len(), 4 * n);
        let dy: Vec<Vec<f64>> = (0..4).map(|c| matvec(&self.d, &y[c * n..(c + 1) * n])).collect();
        let mut out = vec![0.0; 4 * n];
        for c1 in 0..4 {
            for c2 in 0..4 {
                let ja = J_ALPHA[c1][c2];
                if ja != 0.0 {
                    for j in 0..n {
                        out[c1 * n + j] += ja * dy[c2][j];
                    }
                }
            }
            for j in 0..n {
                let mut acc = (self.model.m * BETA_DIAG[c1] - self.omega) * y[c1 * n + j];
                for c2 in 0..4 {
                    acc -= self.potential[j][c1][c2] * y[c2 * n + j];
                }
                out[c1 * n + j] += acc;
            }
        }
        out
    }

    /// 𝐉𝐋 y.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        apply_j_stacked(&self.apply_s(y))
    }

    /// Nodal values → operator coordinates (scaling by √metric).
    pub fn to_operator_coords(&self, y: &[f64]) -> Vec<f64> {
        let n = self.points();
        let s = self.grid.sym_scale();
        y.iter().enumerate().map(|(r, a)| a * s[r % n]).collect()
    }

    /// Norm in operator coordinates (equal to the quadrature L² norm up to
    /// the constant grid spacing).
    pub fn norm(&self, y: &[f64]) -> f64 {
        y.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn parity_block(&self, parity: Parity) -> ParityBlock {
        let layout = BlockLayout::new(&self.grid, parity);
        let dim = layout.dim();
        let mut s = Mat::<f64>::zeros(dim, dim);
        let bases: Vec<Vec<Vec<(usize, f64)>>> =
            (0..4).map(|c| (0..layout.sizes[c]).map(|a| layout.basis(c, a)).collect()).collect();
        for c1 in 0..4 {
            for a in 0..layout.sizes[c1] {
                let ea = &bases[c1][a];
                let row = layout.offsets[c1] + a;
                for c2 in 0..4 {
                    for b in 0..layout.sizes[c2] {
                        let eb = &bases[c2][b];
                        let mut acc = 0.0;
                        for &(i, ai) in ea.iter() {
                            for &(l, bl) in eb.iter() {
                                acc += ai * bl * self.s_entry(c1, i, c2, l);
                            }
                        }
                        s[(row, layout.offsets[c2] + b)] = acc;
                    }
                }
            }
        }
        // 𝐉 permutes components 1↔3 and 2↔4, which share parity types.
        let a = Mat::from_fn(dim, dim, |r, c| {
            let (c1, off) = layout.locate(r);
            let (src, sign) = j_row(c1);
            sign * s[(layout.offsets[src] + off, c)]
        });
        ParityBlock { parity, layout, s, a }
    }

    pub fn write_dump(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Header<'a> {
            model: &'a ModelSpec,
            omega: f64,
            grid: &'a GridSpec,
            rows: usize,
            cols: usize,
            layout: &'static str,
        }
        let a = self.matrix();
        let h = Header {
            model: &self.model,
            omega: self.omega,
            grid: &self.grid.spec,
            rows: a.nrows(),
            cols: a.ncols(),
            layout: "row-major little-endian f64, component-major stacking",
        };
        let mut buf = Vec::new();
        writeln!(buf, "{}", serde_json::to_string(&h).map_err(|e| Error::Format(e.to_string()))?)?;
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                buf.extend_from_slice(&a[(r, c)].to_le_bytes());
            }
        }
        fs::write(path, buf)?;
        Ok(())
    }
}

/// The kernel vectors 𝐉𝛗 and ∂ₓ𝛗 in operator coordinates, with ∂ₓ taken by
/// the same differentiation matrix as the operator.
pub fn kernel_vectors(op: &LinearizedOperator, profile: &WaveProfile) -> (Vec<f64>, Vec<f64>) {
    let n = profile.len();
    let phi = op.to_operator_coords(&profile.stacked());
    let d = op.grid.diff_matrix();
    let mut dphi = vec![0.0; 4 * n];
    dphi[..n].copy_from_slice(&matvec(&d, &profile.v));
    dphi[3 * n..].copy_from_slice(&matvec(&d, &profile.u));
    (apply_j_stacked(&phi), op.to_operator_coords(&dphi))
}

/// ‖𝐉𝐋y‖/‖y‖ for the two kernel vectors; 0 when the vector vanishes.
pub fn kernel_residuals(op: &LinearizedOperator, profile: &WaveProfile) -> [f64; 2] {
    let (jphi, dphi) = kernel_vectors(op, profile);
    let rel = |y: &[f64]| {
        let ny = op.norm(y);
        if ny == 0.0 {
            0.0
        } else {
            op.norm(&op.apply(y)) / ny
        }
    };
    [rel(&jphi), rel(&dphi)]
}

/// Source row and sign of 𝐉: (𝐉y)_c = sign·y_src.
fn j_row(c: usize) -> (usize, f64) {
    match c {
        0 => (2, 1.0),
        1 => (3, 1.0),
        2 => (0, -1.0),
        _ => (1, -1.0),
    }
}

pub fn apply_j_stacked(y: &[f64]) -> Vec<f64> {
    let n = y.len() / 4;
    let mut out = vec![0.0; 4 * n];
    for c in 0..4 {
        let (src, sign) = j_row(c);
        for j in 0..n {
            out[c * n + j] = sign * y[src * n + j];
        }
    }
    out
}

/// 𝛂¹ on stacked vectors: swaps components 1↔2 and 3↔4.
pub fn apply_alpha_stacked(y: &[f64]) -> Vec<f64> {
    let n = y.len() / 4;
    let mut out = vec![0.0; 4 * n];
    for (c, src) in [1usize, 0, 3, 2].iter().enumerate() {
        out[c * n..(c + 1) * n].copy_from_slice(&y[src * n..(src + 1) * n]);
    }
    out
}

/// Symmetry-adapted basis of one parity class.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    pub parity: Parity,
    pub points: usize,
    pub center: usize,
    /// ±1 per component: whether the component is an even or odd function.
    pub types: [f64; 4],
    pub sizes: [usize; 4],
    pub offsets: [usize; 4],
}

impl BlockLayout {
    pub fn new(grid: &Grid, parity: Parity) -> Self {
        let n = grid.len();
        let c = grid.center();
        let mut types = [0.0; 4];
        let mut sizes = [0; 4];
        let mut offsets = [0; 4];
        let mut off = 0;
        for k in 0..4 {
            types[k] = parity.sign() * PARITY_SIGNS[k];
            sizes[k] = if types[k] > 0.0 { n - c } else { n - c - 1 };
            offsets[k] = off;
            off += sizes[k];
        }
        Self { parity, points: n, center: c, types, sizes, offsets }
    }

    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Node of reduced index a for component type q.
    fn node(&self, comp: usize, a: usize) -> usize {
        if self.types[comp] > 0.0 {
            self.center + a
        } else {
            self.center + 1 + a
        }
    }

    /// Nonzero entries (node, coefficient) of basis vector a of a component.
    pub fn basis(&self, comp: usize, a: usize) -> Vec<(usize, f64)> {
        let j = self.node(comp, a);
        if j == self.center {
            return vec![(j, 1.0)];
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![(j, s), (self.points - 1 - j, self.types[comp] * s)]
    }

    pub fn locate(&self, row: usize) -> (usize, usize) {
        for k in (0..4).rev() {
            if row >= self.offsets[k] {
                return (k, row - self.offsets[k]);
            }
        }
        unreachable!()
    }

    /// Projects a stacked full vector onto the block coordinates.
    pub fn restrict(&self, y: &[f64]) -> Vec<f64> {
        let n = self.points;
        let mut out = vec![0.0; self.dim()];
        for comp in 0..4 {
            for a in 0..self.sizes[comp] {
                out[self.offsets[comp] + a] =
                    self.basis(comp, a).iter().map(|&(j, w)| w * y[comp * n + j]).sum();
            }
        }
        out
    }

    /// Expands block coordinates into a stacked full vector.
    pub fn extend(&self, z: &[f64]) -> Vec<f64> {
        let n = self.points;
        let mut out = vec![0.0; 4 * n];
        for comp in 0..4 {
            for a in 0..self.sizes[comp] {
                for (j, w) in self.basis(comp, a) {
                    out[comp * n + j] += w * z[self.offsets[comp] + a];
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ParityBlock {
    pub parity: Parity,
    pub layout: BlockLayout,
    /// Folded symmetric part.
    pub s: Mat<f64>,
    /// Folded 𝐉𝐋.
    pub a: Mat<f64>,
}

pub fn parity_decompose(op: &LinearizedOperator) -> Result<(ParityBlock, ParityBlock)> {
    if op.parity_defect > PARITY_TOL {
        return Err(Error::ParityDefect { defect: op.parity_defect, tol: PARITY_TOL });
    }
    Ok((op.parity_block(Parity::Even), op.parity_block(Parity::Odd)))
}
