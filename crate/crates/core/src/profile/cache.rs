//! Profile persistence: a one-line JSON header followed by little-endian f64
//! arrays x, v, u; plus a CSV export.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use super::{solve_profile, Resolution, WaveProfile};
use crate::error::{Error, Result};
use crate::linop::grid::{Grid, GridSpec};
use crate::model::ModelSpec;

const MAGIC: &str = "NLDPROF1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    model: ModelSpec,
    omega: f64,
    grid: GridSpec,
    residual: f64,
    first_integral: f64,
    s_sign_changes: Vec<f64>,
    ode_cutoff: Option<f64>,
    newton_iterations: usize,
    points: usize,
}

/// File name derived from the exact bit patterns of the key tuple.
pub fn cache_key(model: &ModelSpec, omega: f64, grid: &GridSpec) -> String {
    let scale = match grid.scheme {
        crate::linop::grid::Scheme::Mapped { scale } => format!("_s{:016x}", scale.to_bits()),
        _ => String::new(),
    };
    format!(
        "{}_k{:016x}_m{:016x}_w{:016x}_r{:016x}_n{}_{}{}.prof",
        model.family,
        model.k.to_bits(),
        model.m.to_bits(),
        omega.to_bits(),
        grid.r.to_bits(),
        grid.m,
        grid.scheme.name(),
        scale
    )
}

pub fn write_binary(profile: &WaveProfile, path: &Path) -> Result<()> {
    let header = Header {
        model: profile.model,
        omega: profile.omega,
        grid: profile.grid.spec,
        residual: profile.residual,
        first_integral: profile.first_integral,
        s_sign_changes: profile.s_sign_changes.clone(),
        ode_cutoff: profile.ode_cutoff,
        newton_iterations: profile.newton_iterations,
        points: profile.len(),
    };
    let mut buf = Vec::with_capacity(64 + 24 * profile.len());
    writeln!(buf, "{MAGIC}")?;
    writeln!(buf, "{}", serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?)?;
    for arr in [&profile.grid.x, &profile.v, &profile.u] {
        for a in arr.iter() {
            buf.extend_from_slice(&a.to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<WaveProfile> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(Error::Format(format!("{} is not a profile file", path.display())));
    }
    line.clear();
    r.read_line(&mut line)?;
    let h: Header = serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(e.to_string()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 24 * h.points {
        return Err(Error::Format(format!("truncated profile file {}", path.display())));
    }
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let n = h.points;
    let grid = Grid::new(h.grid)?;
    if grid.len() != n || grid.x.iter().zip(&vals[..n]).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err(Error::GridMismatch(format!("cached nodes differ from grid {:?}", h.grid)));
    }
    Ok(WaveProfile {
        model: h.model,
        omega: h.omega,
        kappa: super::decay_rate(&h.model, h.omega),
        grid,
        v: vals[n..2 * n].to_vec(),
        u: vals[2 * n..].to_vec(),
        residual: h.residual,
        first_integral: h.first_integral,
        s_sign_changes: h.s_sign_changes,
        ode_cutoff: h.ode_cutoff,
        newton_iterations: h.newton_iterations,
    })
}

/// CSV with columns x, v, u; `meta` lines are written first as `# ` comments.
pub fn write_csv(profile: &WaveProfile, path: &Path, meta: &[String]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for m in meta {
        writeln!(f, "# {m}")?;
    }
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["x", "v", "u"]).map_err(|e| Error::Format(e.to_string()))?;
    for j in 0..profile.len() {
        w.write_record(&[
            format!("{:.17e}", profile.grid.x[j]),
            format!("{:.17e}", profile.v[j]),
            format!("{:.17e}", profile.u[j]),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Directory-backed profile cache.
#[derive(Debug, Clone)]
pub struct ProfileCache {
    dir: PathBuf,
}

impl ProfileCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, model: &ModelSpec, omega: f64, grid: &GridSpec) -> PathBuf {
        self.dir.join(cache_key(model, omega, grid))
    }

    /// Returns the cached profile or solves and stores it. The flag reports a hit.
    pub fn get_or_solve(&self, model: &ModelSpec, omega: f64, res: &Resolution) -> Result<(WaveProfile, bool)> {
        let spec = res.grid_spec(model, omega);
        let spec = GridSpec { m: spec.m | 1, ..spec };
        let path = self.path_for(model, omega, &spec);
        if path.exists() {
            if let Ok(p) = read_binary(&path) {
                return Ok((p, true));
            }
        }
        let p = solve_profile(model, omega, res)?;
        write_binary(&p, &path)?;
        Ok((p, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_model, Family};

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let model = make_model(Family::Gn, 1.0, 1.0).unwrap();
        let p = solve_profile(&model, 0.5, &Resolution::with_points(129)).unwrap();
        let path = dir.path().join("p.prof");
        write_binary(&p, &path).unwrap();
        let q = read_binary(&path).unwrap();
        assert_eq!(p.v, q.v);
        assert_eq!(p.u, q.u);
        assert_eq!(p.grid, q.grid);
    }

    #[test]
    fn cache_hits_after_first_solve() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ProfileCache::new(dir.path()).unwrap();
        let model = make_model(Family::Mtm, 1.0, 1.0).unwrap();
        let res = Resolution::with_points(129);
        let (a, hit_a) = cache.get_or_solve(&model, 0.3, &res).unwrap();
        let (b, hit_b) = cache.get_or_solve(&model, 0.3, &res).unwrap();
        assert!(!hit_a && hit_b);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.prof");
        fs::write(&path, b"hello\n").unwrap();
        assert!(matches!(read_binary(&path), Err(Error::Format(_))));
    }
}
