//! Spatial grids, quadrature weights and first-derivative matrices.
//!
//! All grids are symmetric about x = 0 with an odd number of nodes, so the
//! center node sits at the origin and j ↦ M−1−j is the reflection x ↦ −x.

use faer::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scheme {
    /// Trigonometric collocation on the periodized interval [−R, R).
    Fourier,
    /// Fourth-order central differences with one-sided closures.
    Fd4,
    /// Fourier collocation in ξ with x = scale·sinh(ξ): fine near the core,
    /// coarse on the exponential tails.
    Mapped { scale: f64 },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Fourier => "fourier",
            Scheme::Fd4 => "fd4",
            Scheme::Mapped { .. } => "mapped",
        }
    }

    /// Whether the symmetric-form derivative is exactly antisymmetric.
    pub fn is_skew(&self) -> bool {
        !matches!(self, Scheme::Fd4)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Mapped { scale } => write!(f, "mapped:{scale}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "fourier" => Ok(Scheme::Fourier),
            "fd4" => Ok(Scheme::Fd4),
            "mapped" => Ok(Scheme::Mapped { scale: 2.0 }),
            _ => {
                if let Some(rest) = lower.strip_prefix("mapped:") {
                    let scale: f64 = rest
                        .parse()
                        .map_err(|_| Error::Parameter(format!("bad mapped scale '{rest}'")))?;
                    if scale > 0.0 {
                        return Ok(Scheme::Mapped { scale });
                    }
                }
                Err(Error::Parameter(format!("unknown scheme '{s}'")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r: f64,
    pub m: usize,
    pub scheme: Scheme,
}

impl GridSpec {
    pub fn new(r: f64, m: usize, scheme: Scheme) -> Self {
        Self { r, m, scheme }
    }

    /// Same half-width and scheme with the spacing halved (2M − 1 nodes).
    pub fn refined(&self) -> Self {
        Self { m: 2 * self.m - 1, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    /// Node spacing in the computational coordinate.
    pub h: f64,
    pub x: Vec<f64>,
    /// Quadrature weights for ∫ · dx.
    pub weights: Vec<f64>,
    /// dx/dξ at the nodes (1 on uniform grids).
    pub metric: Vec<f64>,
}

impl Grid {
    /// Builds the grid. An even point count is bumped to the next odd one.
    pub fn new(spec: GridSpec) -> Result<Self> {
        if !(spec.r.is_finite() && spec.r > 0.0) {
            return Err(Error::Parameter(format!("grid half-width must be positive, got {}", spec.r)));
        }
        if spec.m < MIN_POINTS {
            return Err(Error::Parameter(format!("grid needs at least {MIN_POINTS} points, got {}", spec.m)));
        }
        let m = spec.m | 1;
        let spec = GridSpec { m, ..spec };
        let r = spec.r;
        let (h, x, metric, weights) = match spec.scheme {
            Scheme::Fourier => {
                let h = 2.0 * r / m as f64;
                let x: Vec<f64> = (0..m).map(|j| -r + (j as f64 + 0.5) * h).collect();
                (h, x, vec![1.0; m], vec![h; m])
            }
            Scheme::Fd4 => {
                let h = 2.0 * r / (m - 1) as f64;
                let x: Vec<f64> = (0..m).map(|j| -r + j as f64 * h).collect();
                let mut w = vec![h; m];
                w[0] = 0.5 * h;
                w[m - 1] = 0.5 * h;
                (h, x, vec![1.0; m], w)
            }
            Scheme::Mapped { scale } => {
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::Parameter(format!("mapped scale must be positive, got {scale}")));
                }
                let xi_max = (r / scale).asinh();
                let h = 2.0 * xi_max / m as f64;
                let xi: Vec<f64> = (0..m).map(|j| -xi_max + (j as f64 + 0.5) * h).collect();
                let x = xi.iter().map(|s| scale * s.sinh()).collect();
                let metric: Vec<f64> = xi.iter().map(|s| scale * s.cosh()).collect();
                let w = metric.iter().map(|g| g * h).collect();
                (h, x, metric, w)
            }
        };
        let mut grid = Self { spec, h, x, weights, metric };
        grid.symmetrize_nodes();
        Ok(grid)
    }

    /// Removes round-off asymmetry so reflection is exact.
    fn symmetrize_nodes(&mut self) {
        let m = self.len();
        let c = self.center();
        self.x[c] = 0.0;
        for j in c + 1..m {
            let jb = m - 1 - j;
            let a = 0.5 * (self.x[j] - self.x[jb]);
            self.x[j] = a;
            self.x[jb] = -a;
            let g = 0.5 * (self.metric[j] + self.metric[jb]);
            self.metric[j] = g;
            self.metric[jb] = g;
            let w = 0.5 * (self.weights[j] + self.weights[jb]);
            self.weights[j] = w;
            self.weights[jb] = w;
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn center(&self) -> usize {
        (self.len() - 1) / 2
    }

    pub fn mirror(&self, j: usize) -> usize {
        self.len() - 1 - j
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.weights).map(|((p, q), w)| p * q * w).sum()
    }

    /// Derivative matrix in the computational coordinate.
    fn computational_diff(&self) -> Mat<f64> {
        let m = self.len();
        match self.spec.scheme {
            Scheme::Fourier | Scheme::Mapped { .. } => fourier_diff(m, self.h),
            Scheme::Fd4 => fd4_diff(m, self.h),
        }
    }

    /// Physical first-derivative matrix d/dx.
    pub fn diff_matrix(&self) -> Mat<f64> {
        let mut d = self.computational_diff();
        if let Scheme::Mapped { .. } = self.spec.scheme {
            for i in 0..self.len() {
                let s = 1.0 / self.metric[i];
                for j in 0..self.len() {
                    d[(i, j)] *= s;
                }
            }
        }
        d
    }

    /// W^{1/2}·(d/dx)·W^{−1/2} with W = diag(metric). This is the derivative
    /// in coordinates where the quadrature inner product is Euclidean up to a
    /// constant; it is antisymmetric for the Fourier-type schemes.
    pub fn sym_diff_matrix(&self) -> Mat<f64> {
        let mut d = self.computational_diff();
        if let Scheme::Mapped { .. } = self.spec.scheme {
            let s: Vec<f64> = self.metric.iter().map(|g| 1.0 / g.sqrt()).collect();
            for i in 0..self.len() {
                for j in 0..self.len() {
                    d[(i, j)] *= s[i] * s[j];
                }
            }
        }
        d
    }

    /// Scale factors √metric mapping nodal values to symmetric coordinates.
    pub fn sym_scale(&self) -> Vec<f64> {
        self.metric.iter().map(|g| g.sqrt()).collect()
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.spec == *other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.spec, other)))
        }
    }
}

/// Periodic spectral differentiation for an odd number of nodes with spacing
/// h (period M·h).
pub fn fourier_diff(m: usize, h: f64) -> Mat<f64> {
    assert!(m % 2 == 1, "Fourier differentiation requires an odd point count");
    let period = m as f64 * h;
    let c = PI / period;
    let col: Vec<f64> = (0..m)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                c * sign / (PI * k as f64 / m as f64).sin()
            }
        })
        .collect();
    Mat::from_fn(m, m, |i, j| {
        if i >= j {
            col[i - j]
        } else {
            -col[j - i]
        }
    })
}

/// Fourth-order differences with one-sided fourth-order closures on the two
/// outermost rows at each end.
pub fn fd4_diff(m: usize, h: f64) -> Mat<f64> {
    let mut d = Mat::<f64>::zeros(m, m);
    let s = 1.0 / (12.0 * h);
    let first = [-25.0, 48.0, -36.0, 16.0, -3.0];
    let second = [-3.0, -10.0, 18.0, -6.0, 1.0];
    for (j, c) in first.iter().enumerate() {
        d[(0, j)] = c * s;
        d[(m - 1, m - 1 - j)] = -c * s;
    }
    for (j, c) in second.iter().enumerate() {
        d[(1, j)] = c * s;
        d[(m - 2, m - 1 - j)] = -c * s;
    }
    let stencil = [1.0, -8.0, 0.0, 8.0, -1.0];
    for i in 2..m - 2 {
        for (o, c) in stencil.iter().enumerate() {
            d[(i, i + o - 2)] = c * s;
        }
    }
    d
}

pub fn matvec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut y = vec![0.0; n];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let col = a.col(j);
        for i in 0..n {
            y[i] += col[i] * xj;
        }
    }
    y
}
