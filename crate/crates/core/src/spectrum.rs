//! Spectra of 𝐉𝐋 per parity block, resolution filtering, branch tracking
//! and detection of eigenvalue collisions at the origin.
//!
//! Branches are tracked in z = λ², where a symmetric pair ±λ becomes one
//! point and a collision at the origin becomes a regular crossing of z = 0:
//! an imaginary pair has z < 0, a real pair z > 0.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functionals::{sign_changes, SweepRow};
use crate::linop::{kernel_residuals, parity_decompose, LinearizedOperator, Parity, ParityBlock};
use crate::profile::WaveProfile;

/// Pairing tolerance for the λ ↦ −λ, λ ↦ λ̄ symmetry checks.
pub const PAIRING_TOL: f64 = 1e-8;
/// Distance from the band rays below which a point counts as discretized continuum.
pub const BAND_TOL: f64 = 1e-3;
/// Default partner tolerance for the resolution filter.
pub const FILTER_TOL: f64 = 1e-3;
/// Floor on the kernel residual entering ε_disc.
pub const RESIDUAL_FLOOR: f64 = 1e-13;
/// Origin radius ORIGIN_FACTOR·ε_disc: the smallest radius within which the
/// kernel eigenvalues of a block count as zero modes.
pub const ORIGIN_FACTOR: f64 = 5.0;
/// Each parity block carries a two-dimensional generalized kernel, so only its
/// two smallest eigenvalues can be zero modes. They count as such up to
/// KERNEL_FACTOR·√ε_disc, which covers the wider splitting of the size-four
/// block at a collision; any further small eigenvalue is a genuine branch.
pub const KERNEL_MODES: usize = 2;
pub const KERNEL_FACTOR: f64 = 5.0;
/// Points with |Re λ| (or |Im λ|) below this, relative to 1 + |λ|, lie on an axis.
pub const AXIS_TOL: f64 = 1e-6;

/// Discretization scale of the zero modes. The kernel carries Jordan blocks of
/// size at least two, so a perturbation of size r splits its eigenvalues by
/// about √r; ε_disc is the square root of the larger kernel residual.
pub fn eps_disc(kernel_residuals: [f64; 2]) -> f64 {
    kernel_residuals[0].max(kernel_residuals[1]).max(RESIDUAL_FLOOR).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    /// Not yet filtered: every point is kept.
    None,
    /// Complete refined spectrum compared point by point.
    Full,
    /// Inverse iteration on the refined operator for the gap candidates only.
    Candidates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub re: f64,
    pub im: f64,
    pub parity: Parity,
    pub retained: bool,
    pub near_band: bool,
    pub zero_mode: bool,
}

impl SpectralPoint {
    pub fn lambda(&self) -> c64 {
        c64::new(self.re, self.im)
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSlice {
    pub omega: f64,
    pub mass: f64,
    pub points: Vec<SpectralPoint>,
    pub band_edges: [f64; 4],
    pub eps_disc: f64,
    pub filter: FilterMode,
}

impl SpectrumSlice {
    pub fn eigenvalues(&self) -> Vec<c64> {
        self.points.iter().map(|p| p.lambda()).collect()
    }

    pub fn parities(&self) -> Vec<Parity> {
        self.points.iter().map(|p| p.parity).collect()
    }

    pub fn retained(&self) -> impl Iterator<Item = &SpectralPoint> {
        self.points.iter().filter(|p| p.retained)
    }

    pub fn zero_radius(&self) -> f64 {
        ORIGIN_FACTOR * self.eps_disc
    }

    /// Lower threshold m − |ω|.
    pub fn gap_edge(&self) -> f64 {
        self.band_edges[2]
    }

    /// Upper threshold m + |ω|.
    pub fn outer_edge(&self) -> f64 {
        self.band_edges[3]
    }

    /// Retained, nonzero points strictly inside the gap and off the band rays.
    pub fn gap_eigenvalues(&self) -> Vec<SpectralPoint> {
        self.points
            .iter()
            .filter(|p| p.retained && !p.zero_mode && !p.near_band && p.im.abs() < self.gap_edge())
            .copied()
            .collect()
    }

    /// Largest distance from a point's mirror images −λ, λ̄ to the spectrum.
    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.eigenvalues())
    }
}

pub fn symmetry_defect(ev: &[c64]) -> f64 {
    let nearest = |z: c64| ev.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
    ev.iter().map(|&z| nearest(-z).max(nearest(z.conj()))).fold(0.0, f64::max)
}

fn classify(re: f64, im: f64, parity: Parity, band_edges: &[f64; 4], zero_radius: f64) -> SpectralPoint {
    let lo = band_edges[2];
    SpectralPoint {
        re,
        im,
        parity,
        retained: true,
        near_band: re.abs() <= BAND_TOL && im.abs() >= lo - BAND_TOL,
        zero_mode: re.hypot(im) <= zero_radius,
    }
}

pub fn block_eigenvalues(block: &ParityBlock, omega: f64) -> Result<Vec<c64>> {
    let ev = block.a.eigenvalues().map_err(|_| Error::Eigensolver { omega })?;
    if ev.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Eigensolver { omega });
    }
    Ok(ev)
}

/// Full spectrum of both parity blocks, unfiltered, labelled by block.
pub fn eigen_slice(op: &LinearizedOperator, eps_disc: f64) -> Result<SpectrumSlice> {
    let (even, odd) = parity_decompose(op)?;
    let mut points = Vec::with_capacity(op.dim());
    for block in [&even, &odd] {
        let mut ev = block_eigenvalues(block, op.omega)?;
        ev.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
        let zr = ORIGIN_FACTOR * eps_disc;
        let start = points.len();
        points.extend(ev.iter().map(|z| classify(z.re, z.im, block.parity, &op.band_edges, zr)));
        let mut by_size: Vec<usize> = (start..points.len()).collect();
        by_size.sort_by(|&a, &b| points[a].abs().total_cmp(&points[b].abs()));
        let cap = zr.max(KERNEL_FACTOR * eps_disc.sqrt());
        for (rank, &i) in by_size.iter().enumerate() {
            points[i].zero_mode = rank < KERNEL_MODES && points[i].abs() <= cap;
        }
    }
    Ok(SpectrumSlice {
        omega: op.omega,
        mass: op.model.m,
        points,
        band_edges: op.band_edges,
        eps_disc,
        filter: FilterMode::None,
    })
}

/// eigen_slice with ε_disc measured from the kernel residuals of the profile.
pub fn slice_for_profile(op: &LinearizedOperator, profile: &WaveProfile) -> Result<SpectrumSlice> {
    eigen_slice(op, eps_disc(kernel_residuals(op, profile)))
}

/// Keeps a point when the refined slice has a same-parity partner within tol.
pub fn filter_resolved(coarse: &SpectrumSlice, fine: &SpectrumSlice, tol: f64) -> SpectrumSlice {
    let mut out = coarse.clone();
    for p in out.points.iter_mut() {
        let z = p.lambda();
        p.retained = fine.points.iter().any(|q| q.parity == p.parity && (q.lambda() - z).norm() <= tol);
    }
    out.filter = FilterMode::Full;
    out
}

/// Nearest eigenvalue of `a` to σ by shifted inverse iteration.
pub fn inverse_iteration(a: &Mat<f64>, sigma: c64, max_iter: usize) -> c64 {
    let n = a.nrows();
    let shifted = Mat::<c64>::from_fn(n, n, |i, j| {
        let v = c64::new(a[(i, j)], 0.0);
        if i == j {
            v - sigma
        } else {
            v
        }
    });
    let lu = shifted.partial_piv_lu();
    let mut x = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(1.0 + 0.5 * (0.618_034 * i as f64).sin(), 0.0));
    normalize(&mut x);
    let mut mu = sigma;
    for _ in 0..max_iter {
        let y = lu.solve(&x);
        let mut xy = c64::new(0.0, 0.0);
        for i in 0..n {
            xy += x[(i, 0)].conj() * y[(i, 0)];
        }
        let next = if xy.norm() > 0.0 { sigma + c64::new(1.0, 0.0) / xy } else { sigma };
        x = y;
        if !normalize(&mut x) {
            return sigma;
        }
        let done = (next - mu).norm() <= 1e-12 * (1.0 + next.norm());
        mu = next;
        if done {
            break;
        }
    }
    mu
}

fn normalize(x: &mut Mat<c64>) -> bool {
    let nrm = (0..x.nrows()).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
    if !(nrm.is_finite() && nrm > 0.0) {
        return false;
    }
    for i in 0..x.nrows() {
        x[(i, 0)] /= nrm;
    }
    true
}

/// Groups points of one parity into symmetry classes {±λ, ±λ̄}, keyed by
/// (|Re λ|, |Im λ|). Returns (representative, member indices).
fn symmetry_classes(points: &[SpectralPoint], idx: &[usize]) -> Vec<(c64, Vec<usize>)> {
    let mut keyed: Vec<(f64, f64, usize)> = idx.iter().map(|&i| (points[i].re.abs(), points[i].im.abs(), i)).collect();
    keyed.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let mut classes: Vec<(c64, Vec<usize>)> = Vec::new();
    for (re, im, i) in keyed {
        let z = c64::new(re, im);
        let tol = 1e3 * PAIRING_TOL * (1.0 + z.norm());
        match classes.iter_mut().find(|(rep, _)| (rep - z).norm() <= tol) {
            Some((_, members)) => members.push(i),
            None => classes.push((z, vec![i])),
        }
    }
    classes
}

/// Verifies gap candidates against the refined operator by inverse iteration.
/// Candidates are the points off the band rays with |Im λ| below the outer
/// threshold m + |ω|; zero modes are kept as the structural kernel, and every
/// other point is left unverified (not retained).
pub fn verify_candidates(coarse: &SpectrumSlice, refined: &LinearizedOperator, tol: f64) -> Result<SpectrumSlice> {
    let mut out = coarse.clone();
    out.filter = FilterMode::Candidates;
    let hi = coarse.outer_edge();
    let (even, odd) = parity_decompose(refined)?;
    for block in [&even, &odd] {
        let idx: Vec<usize> = (0..out.points.len())
            .filter(|&i| {
                let p = &out.points[i];
                p.parity == block.parity && !p.zero_mode && !p.near_band && p.im.abs() < hi
            })
            .collect();
        for (rep, members) in symmetry_classes(&out.points, &idx) {
            let mu = inverse_iteration(&block.a, rep, 40);
            // The refined spectrum shares the symmetry, so compare in the same quadrant.
            let mu = c64::new(mu.re.abs(), mu.im.abs());
            let keep = (mu - rep).norm() <= tol;
            for i in members {
                out.points[i].retained = keep;
            }
        }
    }
    for p in out.points.iter_mut() {
        if p.zero_mode {
            p.retained = true;
        } else if p.near_band || p.im.abs() >= hi {
            p.retained = false;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RealPairs {
    /// Positive members of the ± pairs, ascending.
    pub pairs: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Retained real eigenvalues (|Im λ| ≤ tol, |Re λ| > tol, outside the zero-mode
/// disk) grouped into ± pairs.
pub fn real_pairs(slice: &SpectrumSlice, tol: f64) -> RealPairs {
    let reals: Vec<f64> = slice
        .points
        .iter()
        .filter(|p| p.retained && !p.zero_mode && p.im.abs() <= tol && p.re.abs() > tol)
        .map(|p| p.re)
        .collect();
    let mut pos: Vec<f64> = reals.iter().copied().filter(|r| *r > 0.0).collect();
    let mut neg: Vec<f64> = reals.iter().copied().filter(|r| *r < 0.0).map(|r| -r).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let mut out = RealPairs::default();
    let mut used = vec![false; neg.len()];
    for &x in &pos {
        let ptol = 1e3 * PAIRING_TOL * (1.0 + x);
        let partner = (0..neg.len()).filter(|&j| !used[j] && (neg[j] - x).abs() <= ptol).min_by(|&a, &b| {
            (neg[a] - x).abs().total_cmp(&(neg[b] - x).abs())
        });
        match partner {
            Some(j) => {
                used[j] = true;
                out.pairs.push(x);
            }
            None => out.warnings.push(format!("unpaired real eigenvalue {x:.6e} at omega = {}", slice.omega)),
        }
    }
    for (j, &x) in neg.iter().enumerate() {
        if !used[j] {
            out.warnings.push(format!("unpaired real eigenvalue {:.6e} at omega = {}", -x, slice.omega));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    RealPair,
    ImaginaryPair,
    Quadruplet,
}

pub fn pair_kind(lambda: c64) -> PairKind {
    let tol = AXIS_TOL * (1.0 + lambda.norm());
    if lambda.re.abs() <= tol {
        PairKind::ImaginaryPair
    } else if lambda.im.abs() <= tol {
        PairKind::RealPair
    } else {
        PairKind::Quadruplet
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub omega: f64,
    /// Representative of the class {±λ, ±λ̄} with Re, Im ≥ 0.
    pub re: f64,
    pub im: f64,
}

impl BranchSample {
    pub fn lambda(&self) -> c64 {
        c64::new(self.re, self.im)
    }

    /// z = λ², snapped to the real line for points on an axis.
    pub fn z(&self) -> c64 {
        let l = self.lambda();
        match pair_kind(l) {
            PairKind::RealPair => c64::new(l.re * l.re, 0.0),
            PairKind::ImaginaryPair => c64::new(-l.im * l.im, 0.0),
            PairKind::Quadruplet => l * l,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    OriginCollision,
    OriginBirth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    OmegaE,
    OmegaVk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossRef {
    pub criterion: Criterion,
    pub omega: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub omega_star: f64,
    pub kind: EventKind,
    pub parity: Parity,
    pub branch: usize,
    /// Pair type on the low-ω side.
    pub below: PairKind,
    /// Pair type on the high-ω side, the one emerging as ω increases.
    pub emerging: PairKind,
    pub crossref: Option<CrossRef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenTrajectory {
    pub id: usize,
    pub parity: Parity,
    pub mass: f64,
    pub samples: Vec<BranchSample>,
    /// ω values where more than one candidate fell inside the matching radius.
    pub splits: Vec<f64>,
    pub events: Vec<CollisionEvent>,
}

/// Default matching radius in z = λ², relative to m².
pub const MATCH_RADIUS: f64 = 0.05;

/// Trackable points of a slice: one representative per symmetry class of
/// retained, nonzero, off-band eigenvalues below the outer threshold.
pub fn branch_points(slice: &SpectrumSlice, parity: Parity) -> Vec<BranchSample> {
    let idx: Vec<usize> = (0..slice.points.len())
        .filter(|&i| {
            let p = &slice.points[i];
            p.parity == parity && p.retained && !p.zero_mode && !p.near_band && p.im.abs() < slice.outer_edge()
        })
        .collect();
    symmetry_classes(&slice.points, &idx)
        .into_iter()
        .map(|(rep, _)| BranchSample { omega: slice.omega, re: rep.re, im: rep.im })
        .collect()
}

/// Greedy nearest-neighbour matching in z = λ² between consecutive slices,
/// per parity. A branch may skip one slice; two candidates inside the radius
/// record a split and the nearer one continues the branch.
pub fn track(slices: &[SpectrumSlice], radius: f64) -> Vec<EigenTrajectory> {
    let mut out: Vec<EigenTrajectory> = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let mut branches: Vec<EigenTrajectory> = Vec::new();
        // (branch index, slice index of last sample)
        let mut active: Vec<(usize, usize)> = Vec::new();
        for (si, slice) in slices.iter().enumerate() {
            let pts = branch_points(slice, parity);
            let r = radius * slice.mass * slice.mass;
            active.retain(|&(_, last)| si - last <= 2);
            let mut cand: Vec<(f64, usize, usize)> = Vec::new();
            for (ai, &(b, _)) in active.iter().enumerate() {
                let z0 = branches[b].samples.last().unwrap().z();
                for (pi, p) in pts.iter().enumerate() {
                    let d = (p.z() - z0).norm();
                    if d <= r {
                        cand.push((d, ai, pi));
                    }
                }
            }
            for (ai, &(b, _)) in active.iter().enumerate() {
                if cand.iter().filter(|c| c.1 == ai).count() > 1 {
                    branches[b].splits.push(slice.omega);
                }
            }
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut a_used = vec![false; active.len()];
            let mut p_used = vec![false; pts.len()];
            for (_, ai, pi) in cand {
                if a_used[ai] || p_used[pi] {
                    continue;
                }
                a_used[ai] = true;
                p_used[pi] = true;
                let b = active[ai].0;
                branches[b].samples.push(pts[pi]);
                active[ai].1 = si;
            }
            for (pi, p) in pts.iter().enumerate() {
                if !p_used[pi] {
                    branches.push(EigenTrajectory { id: 0, parity, mass: slice.mass, samples: vec![*p], splits: vec![], events: vec![] });
                    active.push((branches.len() - 1, si));
                }
            }
        }
        out.extend(branches);
    }
    for (i, b) in out.iter_mut().enumerate() {
        b.id = i;
    }
    out
}

/// Branch ends within this |λ|, relative to m, count as births at the origin.
pub const BIRTH_RADIUS: f64 = 0.02;

/// Roots of E and dQ/dω in the functional table, by linear interpolation.
pub fn critical_roots(table: &[SweepRow]) -> Vec<(Criterion, f64)> {
    let w: Vec<f64> = table.iter().map(|r| r.omega).collect();
    let e: Vec<Option<f64>> = table.iter().map(|r| r.report.map(|x| x.e)).collect();
    let dq: Vec<Option<f64>> = table.iter().map(|r| r.report.and_then(|x| x.dq_domega)).collect();
    let mut out: Vec<(Criterion, f64)> = sign_changes(&w, &e).into_iter().map(|x| (Criterion::OmegaE, x)).collect();
    out.extend(sign_changes(&w, &dq).into_iter().map(|x| (Criterion::OmegaVk, x)));
    out
}

fn nearest_root(roots: &[(Criterion, f64)], omega: f64) -> Option<CrossRef> {
    roots
        .iter()
        .map(|&(criterion, w)| CrossRef { criterion, omega: w, distance: (w - omega).abs() })
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
}

/// Origin collisions: a branch whose z = λ² changes sign between consecutive
/// on-axis samples. Births: a branch starting or ending near the origin
/// away from the sweep ends. Events are attached to the trajectories as well.
pub fn detect_origin_collisions(trajectories: &mut [EigenTrajectory], table: &[SweepRow]) -> Vec<CollisionEvent> {
    let roots = critical_roots(table);
    let (w_first, w_last) = trajectories
        .iter()
        .flat_map(|t| t.samples.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.omega), b.max(s.omega)));
    let mut events = Vec::new();
    for tr in trajectories.iter_mut() {
        let mut ev = Vec::new();
        for w in tr.samples.windows(2) {
            let (k0, k1) = (pair_kind(w[0].lambda()), pair_kind(w[1].lambda()));
            if k0 == PairKind::Quadruplet || k1 == PairKind::Quadruplet || k0 == k1 {
                continue;
            }
            let (z0, z1) = (w[0].z().re, w[1].z().re);
            let omega_star = w[0].omega - z0 * (w[1].omega - w[0].omega) / (z1 - z0);
            ev.push(CollisionEvent {
                omega_star,
                kind: EventKind::OriginCollision,
                parity: tr.parity,
                branch: tr.id,
                below: k0,
                emerging: k1,
                crossref: nearest_root(&roots, omega_star),
            });
        }
        if let (Some(first), Some(last)) = (tr.samples.first(), tr.samples.last()) {
            let near = |s: &BranchSample| s.lambda().norm() <= BIRTH_RADIUS * tr.mass;
            let kind = |s: &BranchSample| pair_kind(s.lambda());
            if near(first) && first.omega > w_first {
                ev.push(CollisionEvent {
                    omega_star: first.omega,
                    kind: EventKind::OriginBirth,
                    parity: tr.parity,
                    branch: tr.id,
                    below: kind(first),
                    emerging: kind(first),
                    crossref: nearest_root(&roots, first.omega),
                });
            }
            if tr.samples.len() > 1 && near(last) && last.omega < w_last {
                ev.push(CollisionEvent {
                    omega_star: last.omega,
                    kind: EventKind::OriginBirth,
                    parity: tr.parity,
                    branch: tr.id,
                    below: kind(last),
                    emerging: kind(last),
                    crossref: nearest_root(&roots, last.omega),
                });
            }
        }
        tr.events = ev;
    }
    // A birth next to a collision on the same parity is the same crossing seen
    // through a broken match; keep only the collision.
    let step = trajectories
        .iter()
        .flat_map(|t| t.samples.windows(2).map(|w| w[1].omega - w[0].omega))
        .fold(0.0, f64::max);
    let collisions: Vec<(Parity, f64)> = trajectories
        .iter()
        .flat_map(|t| t.events.iter())
        .filter(|e| e.kind == EventKind::OriginCollision)
        .map(|e| (e.parity, e.omega_star))
        .collect();
    for tr in trajectories.iter_mut() {
        tr.events.retain(|e| {
            e.kind == EventKind::OriginCollision
                || !collisions.iter().any(|&(p, w)| p == e.parity && (w - e.omega_star).abs() <= step)
        });
        events.extend(tr.events.iter().copied());
    }
    events.sort_by(|a, b| a.omega_star.total_cmp(&b.omega_star));
    events
}

pub fn write_slice_csv(slice: &SpectrumSlice, path: &Path, meta: &[String]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for m in meta {
        writeln!(f, "# {m}")?;
    }
    writeln!(
        f,
        "# omega = {:.17e}, eps_disc = {:.6e}, filter = {:?}, band_edges = {:?}",
        slice.omega, slice.eps_disc, slice.filter, slice.band_edges
    )?;
    let mut w = csv::Writer::from_writer(f);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["re_lambda", "im_lambda", "parity", "retained", "near_band"]).map_err(fmt)?;
    for p in &slice.points {
        w.write_record(&[
            format!("{:.17e}", p.re),
            format!("{:.17e}", p.im),
            p.parity.label().to_string(),
            p.retained.to_string(),
            p.near_band.to_string(),
        ])
        .map_err(fmt)?;
    }
    w.flush()?;
    Ok(())
}
