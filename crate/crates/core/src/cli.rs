//! Command-line front end: profile, sweep, critical, jordan and reproduce.
//! All files are written from the main thread after the parallel work is
//! collected, so output order never depends on scheduling.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{preset, Format, RunConfig, PRESETS};
use crate::error::{Error, Result};
use crate::functionals::{
    energy_terms, find_omega_e, find_omega_vk, sweep_functionals, write_table_csv, CriticalPoint,
    FunctionalReport, SweepRow,
};
use crate::jordan::{jordan_report_for, write_reports_csv, JordanReport};
use crate::profile::cache::{write_binary, write_csv, ProfileCache};
use crate::profile::{resolved_grid, solve_on_grid, solve_profile, WaveProfile};
use crate::spectrum::{write_slice_csv, CollisionEvent, EventKind};
use crate::sweep::{open_grid, run_sweep, SweepConfig, SweepOutput};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "nldstab", version, about = "Solitary waves of 1D nonlinear Dirac models and their linear stability")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Overrides,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Profile, functionals and virial defects at one frequency.
    Profile,
    /// Functionals, filtered spectra, trajectories and collision events over an ω range.
    Sweep,
    /// Frequencies where E = 0 and dQ/dω = 0.
    Critical,
    /// Kernel and Jordan-chain diagnostics at the listed frequencies.
    Jordan,
    /// Sweep and critical runs for one figure preset, or all of them.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        figure: Option<String>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Model family: mtm or gn.
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub k: Option<f64>,
    #[arg(long, global = true)]
    pub m: Option<f64>,
    /// Frequencies, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Option<Vec<f64>>,
    /// Sweep range as MIN,MAX.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega_range: Option<String>,
    /// Number of sweep frequencies.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Grid point count.
    #[arg(long, global = true)]
    pub grid_m: Option<usize>,
    /// fourier, fd4, mapped or mapped:SCALE.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    pub format: Option<String>,
    /// Figure preset; runs `reproduce` when no subcommand is given.
    #[arg(long, global = true, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    pub reproduce: Option<String>,
    /// Worker threads for per-ω work.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run per-ω work on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Skip the extra points around detected events.
    #[arg(long, global = true)]
    pub no_adaptive: bool,
    /// Functionals only in sweeps.
    #[arg(long, global = true)]
    pub no_spectrum: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(f) = &self.model {
            cfg.model.family = f.parse()?;
        }
        if let Some(k) = self.k {
            cfg.model.k = k;
        }
        if let Some(m) = self.m {
            cfg.model.m = m;
        }
        if let Some(r) = &self.omega_range {
            let (a, b) = parse_range(r)?;
            cfg.sweep.omega_min = Some(a);
            cfg.sweep.omega_max = Some(b);
        }
        if let Some(n) = self.points {
            cfg.sweep.count = n;
        }
        if let Some(n) = self.grid_m {
            cfg.numerics.grid_m = Some(n);
        }
        if let Some(s) = &self.scheme {
            cfg.numerics.scheme = s.clone();
        }
        if let Some(d) = &self.out_dir {
            cfg.output.dir = d.clone();
        }
        if let Some(f) = &self.format {
            cfg.output.format = if f == "json" { Format::Json } else { Format::Csv };
        }
        cfg.numerics.sequential |= self.sequential;
        cfg.output.cache &= !self.no_cache;
        cfg.sweep.adaptive &= !self.no_adaptive;
        cfg.sweep.spectrum &= !self.no_spectrum;
        Ok(())
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split([',', ':']).map(str::trim).collect();
    let bad = || Error::Config(format!("omega range '{s}' is not MIN,MAX"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let a = parts[0].parse().map_err(|_| bad())?;
    let b = parts[1].parse().map_err(|_| bad())?;
    Ok((a, b))
}

/// Header lines shared by every output file.
pub fn meta_lines(cfg: &RunConfig) -> Vec<String> {
    vec![
        format!("nldstab {VERSION}"),
        format!("config: {}", serde_json::to_string(cfg).expect("config serializes")),
    ]
}

fn write_json<T: Serialize>(path: &Path, cfg: &RunConfig, data: &T) -> Result<()> {
    let doc = json!({ "meta": { "version": VERSION, "config": cfg }, "data": data });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn write_text(path: &Path, cfg: &RunConfig, header: &str, rows: &[String]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for m in meta_lines(cfg) {
        writeln!(f, "# {m}")?;
    }
    writeln!(f, "{header}")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output.dir)?;
    Ok(cfg.output.dir.clone())
}

fn cache(cfg: &RunConfig) -> Result<Option<ProfileCache>> {
    if cfg.output.cache {
        Ok(Some(ProfileCache::new(cfg.output.dir.join("cache"))?))
    } else {
        Ok(None)
    }
}

fn omega_tag(omega: f64) -> String {
    format!("w{omega:+.6}")
}

fn write_table(cfg: &RunConfig, dir: &Path, rows: &[SweepRow]) -> Result<PathBuf> {
    match cfg.output.format {
        Format::Csv => {
            let p = dir.join("functionals.csv");
            write_table_csv(rows, &p, &meta_lines(cfg))?;
            Ok(p)
        }
        Format::Json => {
            let p = dir.join("functionals.json");
            write_json(&p, cfg, &rows)?;
            Ok(p)
        }
    }
}

fn single_omega(omegas: &Option<Vec<f64>>) -> Result<f64> {
    match omegas.as_deref() {
        Some([w]) => Ok(*w),
        _ => Err(Error::Config("profile needs exactly one --omega".into())),
    }
}

fn solve_cached(cfg: &RunConfig, omega: f64) -> Result<WaveProfile> {
    let model = cfg.model_spec()?;
    let res = cfg.resolution()?;
    match cache(cfg)? {
        Some(c) => Ok(c.get_or_solve(&model, omega, &res)?.0),
        None => solve_profile(&model, omega, &res),
    }
}

pub fn cmd_profile(cfg: &RunConfig, omega: f64) -> Result<FunctionalReport> {
    cfg.model_spec()?.check_gap(omega)?;
    let dir = out_dir(cfg)?;
    let p = solve_cached(cfg, omega)?;
    let rep = energy_terms(&p);
    let tag = omega_tag(omega);
    write_csv(&p, &dir.join(format!("profile_{tag}.csv")), &meta_lines(cfg))?;
    write_binary(&p, &dir.join(format!("profile_{tag}.prof")))?;
    write_json(&dir.join(format!("functionals_{tag}.json")), cfg, &rep)?;
    println!("omega = {omega}");
    println!("points = {}", p.len());
    println!("Q = {:.12e}", rep.q);
    println!("E = {:.12e}", rep.e);
    println!(
        "defects |K+kV| = {:.3e}, |wQ-M-V| = {:.3e}, |K+L| = {:.3e}",
        rep.defect_virial1, rep.defect_virial2, rep.defect_kl
    );
    Ok(rep)
}

pub fn sweep_config(cfg: &RunConfig) -> Result<SweepConfig> {
    let (a, b) = cfg.omega_range();
    Ok(SweepConfig {
        model: cfg.model_spec()?,
        omegas: open_grid(a, b, cfg.sweep.count),
        resolution: cfg.resolution()?,
        spectrum: cfg.sweep.spectrum.then(|| cfg.spectrum_options()),
        adaptive: cfg.sweep.adaptive,
        refine_window: cfg.sweep.refine_window,
        exec: cfg.exec(),
        cache: cache(cfg)?,
    })
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepOutput> {
    let dir = out_dir(cfg)?;
    let out = run_sweep(&sweep_config(cfg)?);
    write_table(cfg, &dir, &out.table)?;
    if cfg.sweep.spectrum {
        if cfg.output.spectra {
            let sdir = dir.join("spectra");
            fs::create_dir_all(&sdir)?;
            for (i, s) in out.slices().into_iter().enumerate() {
                let name = format!("spectrum_{i:04}_{}.csv", omega_tag(s.omega));
                write_slice_csv(s, &sdir.join(name), &meta_lines(cfg))?;
            }
        }
        write_json(&dir.join("trajectories.json"), cfg, &out.trajectories)?;
        write_json(&dir.join("events.json"), cfg, &out.events)?;
    }
    write_plot_data(cfg, &dir, &out)?;
    let fails = out.failures();
    println!(
        "{} frequencies, {} failed, {} branches, {} events",
        out.results.len(),
        fails.len(),
        out.trajectories.len(),
        out.events.len()
    );
    for e in &out.events {
        let cross = e
            .crossref
            .map(|c| format!(", nearest {:?} at {:.6} (distance {:.2e})", c.criterion, c.omega, c.distance))
            .unwrap_or_default();
        println!("{:?} {} at omega = {:.6}{cross}", e.kind, e.parity.label(), e.omega_star);
    }
    Ok(out)
}

/// Plot-ready CSVs and a gnuplot script: E and Q against ω (top panel), the
/// imaginary parts of tracked eigenvalues with the band edges (bottom panel).
fn write_plot_data(cfg: &RunConfig, dir: &Path, out: &SweepOutput) -> Result<()> {
    let pdir = dir.join("plot");
    fs::create_dir_all(&pdir)?;
    let top: Vec<String> = out
        .table
        .iter()
        .filter_map(|r| r.report.map(|x| format!("{:.10e},{:.10e},{:.10e}", r.omega, x.e, x.q)))
        .collect();
    write_text(&pdir.join("top.csv"), cfg, "omega,E,Q", &top)?;
    let m = cfg.model.m;
    let band: Vec<String> = out
        .table
        .iter()
        .map(|r| format!("{:.10e},{:.10e},{:.10e}", r.omega, m - r.omega.abs(), m + r.omega.abs()))
        .collect();
    write_text(&pdir.join("band.csv"), cfg, "omega,inner_edge,outer_edge", &band)?;
    let mut bottom = Vec::new();
    for tr in &out.trajectories {
        for s in &tr.samples {
            bottom.push(format!("{},{},{:.10e},{:.10e},{:.10e}", tr.id, tr.parity.label(), s.omega, s.im, s.re));
        }
    }
    write_text(&pdir.join("bottom.csv"), cfg, "branch,parity,omega,im_lambda,re_lambda", &bottom)?;
    let script = "\
set datafile separator ','
set multiplot layout 2,1
set xlabel 'omega'
plot 'top.csv' using 1:2 with lines title 'E', '' using 1:3 with lines dashtype 2 title 'Q'
set ylabel 'Im lambda'
plot 'band.csv' using 1:2 with lines lc 'black' title 'band', \\
     'bottom.csv' using 3:(strcol(2) eq 'even' ? $4 : 1/0) with points pt 7 ps 0.4 title 'even', \\
     '' using 3:(strcol(2) eq 'odd' ? $4 : 1/0) with points pt 6 ps 0.4 title 'odd', \\
     '' using 3:(abs($5) > 1e-6 ? $5 : 1/0) with points pt 9 ps 0.5 title 'Re lambda'
unset multiplot
";
    fs::write(pdir.join("figure.gp"), script)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalOutcome {
    pub omega: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    /// "config" or "scan".
    pub bracket_source: Option<String>,
    pub evaluations: Option<usize>,
    pub error: Option<String>,
    /// Distance to the nearest origin collision in events.json, if present.
    pub collision_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalReport {
    pub omega_e: CriticalOutcome,
    pub omega_vk: CriticalOutcome,
}

fn scan_brackets(cfg: &RunConfig) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let (a, b) = cfg.omega_range();
    let n = cfg.critical.scan_points.unwrap_or(41);
    let w = open_grid(a, b, n);
    let rows = sweep_functionals(&cfg.model_spec()?, &w, &cfg.resolution()?, cfg.exec());
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.report.is_some()).collect();
    let brackets = |f: &dyn Fn(&FunctionalReport) -> Option<f64>| -> Vec<(f64, f64)> {
        ok.windows(2)
            .filter_map(|p| {
                let (x, y) = (f(p[0].report.as_ref()?)?, f(p[1].report.as_ref()?)?);
                (x * y < 0.0).then_some((p[0].omega, p[1].omega))
            })
            .collect()
    };
    Ok((brackets(&|r| Some(r.e)), brackets(&|r| r.dq_domega)))
}

fn load_collisions(dir: &Path) -> Vec<f64> {
    let Ok(text) = fs::read_to_string(dir.join("events.json")) else { return vec![] };
    let Ok(doc) = serde_json::from_str::<serde_json::Value>(&text) else { return vec![] };
    let Ok(events) = serde_json::from_value::<Vec<CollisionEvent>>(doc["data"].clone()) else { return vec![] };
    events.iter().filter(|e| e.kind == EventKind::OriginCollision).map(|e| e.omega_star).collect()
}

pub fn cmd_critical(cfg: &RunConfig) -> Result<CriticalReport> {
    let dir = out_dir(cfg)?;
    let model = cfg.model_spec()?;
    let res = cfg.resolution()?;
    let need_scan = cfg.critical.bracket_e.is_none() || cfg.critical.bracket_vk.is_none();
    let (scan_e, scan_vk) = if need_scan { scan_brackets(cfg)? } else { (vec![], vec![]) };
    let collisions = load_collisions(&dir);
    let solve = |given: Option<(f64, f64)>,
                 scanned: &[(f64, f64)],
                 what: &str,
                 f: &dyn Fn((f64, f64)) -> Result<CriticalPoint>| {
        let (bracket, source) = match (given, scanned.first()) {
            (Some(b), _) => (b, "config"),
            (None, Some(&b)) => (b, "scan"),
            (None, None) => {
                return CriticalOutcome {
                    omega: None,
                    bracket: None,
                    bracket_source: None,
                    evaluations: None,
                    error: Some(format!("no sign change of {what} on the scan")),
                    collision_distance: None,
                }
            }
        };
        match f(bracket) {
            Ok(cp) => CriticalOutcome {
                omega: Some(cp.omega),
                bracket: Some(bracket),
                bracket_source: Some(source.into()),
                evaluations: Some(cp.evaluations),
                error: None,
                collision_distance: collisions.iter().map(|c| (c - cp.omega).abs()).reduce(f64::min),
            },
            Err(e) => CriticalOutcome {
                omega: None,
                bracket: Some(bracket),
                bracket_source: Some(source.into()),
                evaluations: None,
                error: Some(e.to_string()),
                collision_distance: None,
            },
        }
    };
    let report = CriticalReport {
        omega_e: solve(cfg.critical.bracket_e, &scan_e, "E", &|b| find_omega_e(&model, b, &res)),
        omega_vk: solve(cfg.critical.bracket_vk, &scan_vk, "dQ/domega", &|b| find_omega_vk(&model, b, &res)),
    };
    write_json(&dir.join("critical.json"), cfg, &report)?;
    for (name, o) in [("omega_E", &report.omega_e), ("omega_VK", &report.omega_vk)] {
        match (o.omega, &o.error) {
            (Some(w), _) => println!("{name} = {w:.8}"),
            (None, Some(e)) => println!("{name}: {e}"),
            _ => {}
        }
    }
    Ok(report)
}

pub fn cmd_jordan(cfg: &RunConfig, omegas: &[f64]) -> Result<Vec<JordanReport>> {
    let dir = out_dir(cfg)?;
    let model = cfg.model_spec()?;
    let res = cfg.resolution()?;
    let opts = cfg.jordan_options();
    for &w in omegas {
        model.check_gap(w)?;
    }
    let reports: Vec<Result<JordanReport>> = crate::par::par_map(cfg.exec(), omegas, |&w| {
        let grid = resolved_grid(&model, w, &res)?;
        jordan_report_for(&solve_on_grid(&model, w, &grid)?, &opts)
    });
    let mut ok = Vec::with_capacity(reports.len());
    for r in reports {
        let r = r?;
        write_json(&dir.join(format!("jordan_{}.json", omega_tag(r.omega))), cfg, &r)?;
        println!(
            "omega = {:+.6}: chain residuals {:.2e} {:.2e}, c11 = {:.8e}, E = {:.8e}, vk = {:.6e}",
            r.omega, r.residual_chain_u1, r.residual_chain_tr, r.c11, r.energy, r.vk_pairing
        );
        ok.push(r);
    }
    write_reports_csv(&ok, &dir.join("jordan.csv"), &meta_lines(cfg))?;
    Ok(ok)
}

pub fn cmd_reproduce(figure: Option<&str>, overrides: &Overrides) -> Result<()> {
    let figs: Vec<&str> = match figure {
        Some(f) => vec![f],
        None => PRESETS.to_vec(),
    };
    let base = overrides.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    for fig in figs {
        for p in preset(fig)? {
            let mut cfg = p.config;
            let mut ov = overrides.clone();
            ov.out_dir = Some(base.join(&p.name));
            ov.apply(&mut cfg)?;
            cfg.validate()?;
            println!("== {}", p.name);
            cmd_sweep(&cfg)?;
            cmd_critical(&cfg)?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    crate::par::init_threads(cli.opts.threads)?;
    faer::set_global_parallelism(faer::Par::Seq);
    let cmd = match (cli.command, &cli.opts.reproduce) {
        (Some(c), _) => c,
        (None, Some(f)) => Command::Reproduce { figure: Some(f.clone()) },
        (None, None) => return Err(Error::Config("no subcommand given; see --help".into())),
    };
    match cmd {
        Command::Reproduce { figure } => cmd_reproduce(figure.as_deref().or(cli.opts.reproduce.as_deref()), &cli.opts),
        Command::Profile => {
            let cfg = cli.opts.resolve()?;
            cmd_profile(&cfg, single_omega(&cli.opts.omega)?).map(|_| ())
        }
        Command::Sweep => cmd_sweep(&cli.opts.resolve()?).map(|_| ()),
        Command::Critical => cmd_critical(&cli.opts.resolve()?).map(|_| ()),
        Command::Jordan => {
            let cfg = cli.opts.resolve()?;
            cmd_jordan(&cfg, cli.opts.omega.as_deref().unwrap_or(&[])).map(|_| ())
        }
    }
}

/// Exit status for an error: 2 for validation, 3 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        3
    }
}

pub fn error_json(e: &Error) -> String {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() }, "exit_code": exit_code(e) }).to_string()
}

pub fn main() -> i32 {
    match run(Cli::parse()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags_and_ranges() {
        let cli = Cli::try_parse_from([
            "nldstab",
            "sweep",
            "--model",
            "gn",
            "--k",
            "3",
            "--omega-range",
            "-0.5,0.9",
            "--grid-m",
            "257",
            "--scheme",
            "fd4",
        ])
        .unwrap();
        let cfg = cli.opts.resolve().unwrap();
        assert_eq!(cfg.model.k, 3.0);
        assert_eq!(cfg.omega_range(), (-0.5, 0.9));
        assert_eq!(cfg.numerics.grid_m, Some(257));
        assert!(matches!(cli.command, Some(Command::Sweep)));
    }

    #[test]
    fn negative_omegas_parse() {
        let cli = Cli::try_parse_from(["nldstab", "jordan", "--omega", "-0.5,0.25"]).unwrap();
        assert_eq!(cli.opts.omega, Some(vec![-0.5, 0.25]));
    }

    #[test]
    fn validation_errors_exit_with_two() {
        let e = Error::OutsideGap { omega: 1.5, m: 1.0 };
        assert_eq!(exit_code(&e), 2);
        let v: serde_json::Value = serde_json::from_str(&error_json(&e)).unwrap();
        assert_eq!(v["error"]["kind"], "outside_gap");
        assert_eq!(exit_code(&Error::Eigensolver { omega: 0.1 }), 3);
        assert!(parse_range("0.1").is_err());
    }
}
