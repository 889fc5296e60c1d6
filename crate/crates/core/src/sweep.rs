//! ω-sweeps: per-frequency profile, functionals and filtered spectrum in a
//! worker pool, then sequential tracking and collision detection.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functionals::{energy_terms, fill_dq_domega, FunctionalReport, SweepRow};
use crate::linop::assemble_jl;
use crate::linop::grid::Grid;
use crate::model::ModelSpec;
use crate::par::{par_map, Exec};
use crate::profile::cache::{cache_key, ProfileCache};
use crate::profile::{solve_on_grid, solve_profile, Resolution, WaveProfile};
use crate::spectrum::{
    detect_origin_collisions, eigen_slice, eps_disc, filter_resolved, track, verify_candidates, CollisionEvent,
    EigenTrajectory, FilterMode, SpectrumSlice, FILTER_TOL, MATCH_RADIUS,
};
use crate::linop::kernel_residuals;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub filter: FilterMode,
    pub tol: f64,
    pub match_radius: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { filter: FilterMode::Candidates, tol: FILTER_TOL, match_radius: MATCH_RADIUS }
    }
}

/// Spectrum of the linearization at a profile, filtered against the grid
/// with 2M − 1 points on the same domain.
pub fn filtered_slice(profile: &WaveProfile, opts: &SpectrumOptions) -> Result<SpectrumSlice> {
    let model = profile.model;
    let op = assemble_jl(&model, profile, &profile.grid)?;
    let slice = eigen_slice(&op, eps_disc(kernel_residuals(&op, profile)))?;
    if opts.filter == FilterMode::None {
        return Ok(slice);
    }
    let fine_grid = Grid::new(profile.grid.spec.refined())?;
    let fine = solve_on_grid(&model, profile.omega, &fine_grid)?;
    let fine_op = assemble_jl(&model, &fine, &fine_grid)?;
    match opts.filter {
        FilterMode::Full => {
            let fs = eigen_slice(&fine_op, eps_disc(kernel_residuals(&fine_op, &fine)))?;
            Ok(filter_resolved(&slice, &fs, opts.tol))
        }
        _ => verify_candidates(&slice, &fine_op, opts.tol),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaResult {
    pub omega: f64,
    pub report: Option<FunctionalReport>,
    pub slice: Option<SpectrumSlice>,
    pub points: Option<usize>,
    pub error: Option<String>,
}

/// Filtered slice, read from or stored next to the cached profile. The key
/// adds the filter settings to the profile key.
pub fn cached_slice(cache: &ProfileCache, profile: &WaveProfile, opts: &SpectrumOptions) -> Result<SpectrumSlice> {
    let key = cache_key(&profile.model, profile.omega, &profile.grid.spec);
    let name = format!("{key}_{:?}_t{:016x}.spec.json", opts.filter, opts.tol.to_bits()).to_lowercase();
    let path = cache.dir().join(name);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(slice) = serde_json::from_str(&text) {
            return Ok(slice);
        }
    }
    let slice = filtered_slice(profile, opts)?;
    let text = serde_json::to_string(&slice).map_err(|e| crate::error::Error::Format(e.to_string()))?;
    std::fs::write(&path, text)?;
    Ok(slice)
}

pub fn analyse_omega(
    model: &ModelSpec,
    omega: f64,
    res: &Resolution,
    spectrum: Option<&SpectrumOptions>,
    cache: Option<&ProfileCache>,
) -> OmegaResult {
    let run = || -> Result<(FunctionalReport, Option<SpectrumSlice>, usize)> {
        let p = match cache {
            Some(c) => c.get_or_solve(model, omega, res)?.0,
            None => solve_profile(model, omega, res)?,
        };
        let rep = energy_terms(&p);
        let slice = match (spectrum, cache) {
            (Some(o), Some(c)) => Some(cached_slice(c, &p, o)?),
            (Some(o), None) => Some(filtered_slice(&p, o)?),
            (None, _) => None,
        };
        Ok((rep, slice, p.len()))
    };
    match run() {
        Ok((report, slice, n)) => OmegaResult { omega, report: Some(report), slice, points: Some(n), error: None },
        Err(e) => OmegaResult { omega, report: None, slice: None, points: None, error: Some(e.to_string()) },
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ModelSpec,
    pub omegas: Vec<f64>,
    pub resolution: Resolution,
    pub spectrum: Option<SpectrumOptions>,
    /// Add points at 3× density within `refine_window` of each detected event.
    pub adaptive: bool,
    pub refine_window: f64,
    pub exec: Exec,
    #[serde(skip)]
    pub cache: Option<ProfileCache>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutput {
    pub results: Vec<OmegaResult>,
    pub table: Vec<SweepRow>,
    pub trajectories: Vec<EigenTrajectory>,
    pub events: Vec<CollisionEvent>,
}

impl SweepOutput {
    pub fn slices(&self) -> Vec<&SpectrumSlice> {
        self.results.iter().filter_map(|r| r.slice.as_ref()).collect()
    }

    pub fn failures(&self) -> Vec<(f64, &str)> {
        self.results.iter().filter_map(|r| r.error.as_deref().map(|e| (r.omega, e))).collect()
    }

    pub fn slice_at(&self, omega: f64) -> Option<&SpectrumSlice> {
        self.slices().into_iter().min_by(|a, b| (a.omega - omega).abs().total_cmp(&(b.omega - omega).abs()))
    }
}

/// n points strictly inside (a, b), equally spaced.
pub fn open_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| a + (b - a) * i as f64 / (n + 1) as f64).collect()
}

/// n points on [a, b] including both ends.
pub fn closed_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn assemble(results: &[OmegaResult], radius: f64) -> (Vec<SweepRow>, Vec<EigenTrajectory>, Vec<CollisionEvent>) {
    let mut table: Vec<SweepRow> = results
        .iter()
        .map(|r| SweepRow { omega: r.omega, report: r.report, error: r.error.clone() })
        .collect();
    fill_dq_domega(&mut table);
    let slices: Vec<SpectrumSlice> = results.iter().filter_map(|r| r.slice.clone()).collect();
    let mut trajectories = track(&slices, radius);
    let events = detect_origin_collisions(&mut trajectories, &table);
    (table, trajectories, events)
}

/// Extra frequencies at three times the local spacing around each event.
pub fn refinement_points(omegas: &[f64], events: &[CollisionEvent], window: f64) -> Vec<f64> {
    let mut extra = Vec::new();
    for ev in events {
        let lo = ev.omega_star - window;
        let hi = ev.omega_star + window;
        let inside: Vec<f64> = omegas.iter().copied().filter(|w| *w >= lo && *w <= hi).collect();
        for pair in inside.windows(2) {
            let step = (pair[1] - pair[0]) / 3.0;
            extra.push(pair[0] + step);
            extra.push(pair[0] + 2.0 * step);
        }
    }
    extra.sort_by(f64::total_cmp);
    extra.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    extra.retain(|w| omegas.iter().all(|o| (o - w).abs() > 1e-12));
    extra
}

pub fn run_sweep(cfg: &SweepConfig) -> SweepOutput {
    let mut omegas = cfg.omegas.clone();
    omegas.sort_by(f64::total_cmp);
    omegas.dedup();
    let radius = cfg.spectrum.map(|s| s.match_radius).unwrap_or(MATCH_RADIUS);
    let eval = |ws: &[f64]| par_map(cfg.exec, ws, |&w| analyse_omega(&cfg.model, w, &cfg.resolution, cfg.spectrum.as_ref(), cfg.cache.as_ref()));
    let mut results = eval(&omegas);
    let (mut table, mut trajectories, mut events) = assemble(&results, radius);
    if cfg.adaptive && cfg.spectrum.is_some() && !events.is_empty() {
        let extra = refinement_points(&omegas, &events, cfg.refine_window);
        if !extra.is_empty() {
            results.extend(eval(&extra));
            results.sort_by(|a, b| a.omega.total_cmp(&b.omega));
            (table, trajectories, events) = assemble(&results, radius);
        }
    }
    SweepOutput { results, table, trajectories, events }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{EventKind, PairKind};
    use crate::linop::Parity;

    #[test]
    fn grids() {
        assert_eq!(open_grid(0.0, 1.0, 3), vec![0.25, 0.5, 0.75]);
        assert_eq!(closed_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(closed_grid(0.0, 1.0, 1), vec![0.5]);
    }

    #[test]
    fn refinement_triples_density_near_events() {
        let w = closed_grid(0.0, 1.0, 11);
        let ev = CollisionEvent {
            omega_star: 0.5,
            kind: EventKind::OriginCollision,
            parity: Parity::Odd,
            branch: 0,
            below: PairKind::ImaginaryPair,
            emerging: PairKind::RealPair,
            crossref: None,
        };
        let extra = refinement_points(&w, &[ev], 0.1);
        assert_eq!(extra.len(), 4);
        assert!(extra.iter().all(|x| (x - 0.5).abs() < 0.1));
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let model = crate::model::make_model(crate::model::Family::Gn, 1.0, 1.0).unwrap();
        let cfg = SweepConfig {
            model,
            omegas: vec![-0.2, 0.5],
            resolution: Resolution::with_points(129),
            spectrum: None,
            adaptive: false,
            refine_window: 0.05,
            exec: Exec::Sequential,
            cache: None,
        };
        let out = run_sweep(&cfg);
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.failures().len(), 1);
        assert!(out.table[1].report.is_some());
    }
}
