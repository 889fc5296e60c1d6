//! Run configuration: a TOML file with model, sweep, numerics, critical and
//! output blocks. Every field has a default, and the whole config is
//! validated before any computation.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::jordan::JordanOptions;
use crate::linop::grid::Scheme;
use crate::model::{Family, ModelSpec};
use crate::par::Exec;
use crate::profile::Resolution;
use crate::spectrum::{FilterMode, FILTER_TOL, MATCH_RADIUS};
use crate::sweep::SpectrumOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    pub family: Family,
    pub k: f64,
    pub m: f64,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self { family: Family::Mtm, k: 1.0, m: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    /// Defaults to −m.
    pub omega_min: Option<f64>,
    /// Defaults to m.
    pub omega_max: Option<f64>,
    /// Points strictly inside (omega_min, omega_max).
    pub count: usize,
    pub adaptive: bool,
    pub refine_window: f64,
    /// Compute filtered spectra and trajectories, not only functionals.
    pub spectrum: bool,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self { omega_min: None, omega_max: None, count: 200, adaptive: true, refine_window: 0.05, spectrum: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsBlock {
    /// Domain half-width override.
    pub r: Option<f64>,
    /// Grid point count; adaptive when absent.
    pub grid_m: Option<usize>,
    pub h_max: f64,
    pub scheme: String,
    pub rtol: f64,
    pub delta_omega: f64,
    pub richardson: bool,
    /// Least-squares solve for the next generalized eigenvector in Jordan reports.
    pub generalized: bool,
    pub filter: FilterMode,
    pub filter_tol: f64,
    pub match_radius: f64,
    pub sequential: bool,
}

impl Default for NumericsBlock {
    fn default() -> Self {
        let res = Resolution::default();
        let jo = JordanOptions::default();
        Self {
            r: None,
            grid_m: None,
            h_max: res.h_max,
            scheme: res.scheme.to_string(),
            rtol: res.rtol,
            delta_omega: jo.delta_omega,
            richardson: jo.richardson,
            generalized: jo.generalized,
            filter: FilterMode::Candidates,
            filter_tol: FILTER_TOL,
            match_radius: MATCH_RADIUS,
            sequential: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalBlock {
    pub bracket_e: Option<(f64, f64)>,
    pub bracket_vk: Option<(f64, f64)>,
    /// Coarse functional sweep used for auto-bracketing.
    pub scan_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub format: Format,
    pub cache: bool,
    /// Write one spectrum CSV per ω.
    pub spectra: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: Format::Csv, cache: true, spectra: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub sweep: SweepBlock,
    pub numerics: NumericsBlock,
    pub critical: CriticalBlock,
    pub output: OutputBlock,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(self.model.family, self.model.k, self.model.m)
    }

    pub fn scheme(&self) -> Result<Scheme> {
        self.numerics.scheme.parse()
    }

    pub fn resolution(&self) -> Result<Resolution> {
        Ok(Resolution {
            r: self.numerics.r,
            points: self.numerics.grid_m,
            h_max: self.numerics.h_max,
            scheme: self.scheme()?,
            rtol: self.numerics.rtol,
        })
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            filter: self.numerics.filter,
            tol: self.numerics.filter_tol,
            match_radius: self.numerics.match_radius,
        }
    }

    pub fn jordan_options(&self) -> JordanOptions {
        JordanOptions {
            delta_omega: self.numerics.delta_omega,
            richardson: self.numerics.richardson,
            generalized: self.numerics.generalized,
        }
    }

    pub fn exec(&self) -> Exec {
        if self.numerics.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }

    pub fn omega_range(&self) -> (f64, f64) {
        let m = self.model.m;
        (self.sweep.omega_min.unwrap_or(-m), self.sweep.omega_max.unwrap_or(m))
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model_spec()?;
        self.resolution()?;
        let (a, b) = self.omega_range();
        if !(a < b) {
            return Err(Error::Config(format!("omega_min {a} must be below omega_max {b}")));
        }
        if a < -model.m || b > model.m {
            return Err(Error::Config(format!("omega range [{a}, {b}] leaves the gap (-{0}, {0})", model.m)));
        }
        let positive = [
            ("h_max", self.numerics.h_max),
            ("rtol", self.numerics.rtol),
            ("delta_omega", self.numerics.delta_omega),
            ("filter_tol", self.numerics.filter_tol),
            ("match_radius", self.numerics.match_radius),
            ("refine_window", self.sweep.refine_window),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(r) = self.numerics.r {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Config(format!("r must be positive, got {r}")));
            }
        }
        if let Some(n) = self.numerics.grid_m {
            if n < 16 {
                return Err(Error::Config(format!("grid_m must be at least 16, got {n}")));
            }
        }
        for (name, br) in [("bracket_e", self.critical.bracket_e), ("bracket_vk", self.critical.bracket_vk)] {
            if let Some((lo, hi)) = br {
                if !(lo < hi && lo > -model.m && hi < model.m) {
                    return Err(Error::Config(format!("{name} ({lo}, {hi}) must be an interval inside the gap")));
                }
            }
        }
        Ok(())
    }
}

/// One preset run: its output subdirectory and configuration.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub config: RunConfig,
}

pub const PRESETS: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

/// The six figure configurations. Thirring panels cover (−1, 1); Gross–Neveu
/// panels cover (0, 1), where E > 0 and the profile exists.
pub fn preset(name: &str) -> Result<Vec<Preset>> {
    let runs: &[(Family, f64)] = match name {
        "fig1" => &[(Family::Mtm, 0.5)],
        "fig2" => &[(Family::Mtm, 1.0)],
        "fig3" => &[(Family::Mtm, 2.0)],
        "fig4" => &[(Family::Mtm, 3.0)],
        "fig5" => &[(Family::Gn, 0.5), (Family::Gn, 1.0)],
        "fig6" => &[(Family::Gn, 2.0), (Family::Gn, 3.0)],
        other => return Err(Error::Config(format!("unknown preset '{other}', expected one of {PRESETS:?}"))),
    };
    Ok(runs
        .iter()
        .map(|&(family, k)| {
            let mut cfg = RunConfig::default();
            cfg.model = ModelBlock { family, k, m: 1.0 };
            cfg.numerics.grid_m = Some(513);
            cfg.numerics.scheme = "mapped".into();
            cfg.sweep.count = 100;
            if family == Family::Gn {
                cfg.sweep.omega_min = Some(0.0);
            }
            Preset { name: format!("{name}_{family}_k{k}"), config: cfg }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = RunConfig::from_toml("[model]\nfamily = \"gn\"\nk = 3.0\n[sweep]\nomega_min = 0.1\n").unwrap();
        assert_eq!(cfg.model.family, Family::Gn);
        assert_eq!(cfg.sweep.count, 200);
        assert_eq!(cfg.numerics.filter_tol, FILTER_TOL);
        assert_eq!(cfg.omega_range(), (0.1, 1.0));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("[model]\ncolour = 1\n").is_err());
        let mut cfg = RunConfig::default();
        cfg.sweep.omega_max = Some(1.5);
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.numerics.scheme = "chebyshev".into();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.model.k = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn presets_cover_six_figures() {
        let n: usize = PRESETS.iter().map(|p| preset(p).unwrap().len()).sum();
        assert_eq!(n, 8);
        for p in PRESETS.iter().flat_map(|p| preset(p).unwrap()) {
            p.config.validate().unwrap();
        }
        assert!(preset("fig7").is_err());
    }
}
