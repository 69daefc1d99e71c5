//! The five subcommands. Each returns an [`Outcome`] whose `ok` flag is the
//! mathematical verdict; IO, parse and missing-input problems are
//! [`CommandError`]s.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ergobound_core::certify::{gap_report, residual_trace, GapReport, RegionGrid, Residual};
use ergobound_core::dynamics::{
    canonical_symbols, close_return_seeds, integrate_with, shoot_from_seeds, time_average, IntegratorOptions,
    SeedOptions, ShootingOptions,
};
use ergobound_core::sdp::{solve, SdpOptions};
use ergobound_core::sos::{
    assemble_sdp, build_bound_program, extract_certificate, validate_certificate, BoundCertificate, SosOptions,
    Tolerances,
};
use ergobound_core::{PolySystem, Polynomial};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::formats::{
    fmt7, sdpa::write_sdpa, to_json, write_grid, write_summary_csv, write_trace_csv,
    write_trajectory_csv, CertificateFile, FormatError, GapEntry, GapFile, OrbitFile, SummaryRow,
};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("missing input {0} (run the producing command first)")]
    Missing(PathBuf),
    #[error("{0}")]
    Usage(String),
}

/// What a command did. `ok` is false on a mathematical failure: an invalid
/// certificate, a solver or shooting failure, or a violated Markov estimate.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub ok: bool,
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            ok: true,
            ..Default::default()
        }
    }

    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<(), CommandError> {
        std::fs::create_dir_all(dir).map_err(|source| CommandError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CommandError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }
}

/// Where a command writes and how many threads it may use.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub jobs: usize,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunOptions { out: out.into(), jobs: 1 }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CommandError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.max(1))
            .build()
            .map_err(|e| CommandError::Usage(format!("cannot start {} worker threads: {}", self.jobs, e)))
    }
}

pub fn certificate_name(degree: u32) -> String {
    format!("certificate_deg{}.json", degree)
}

pub fn orbit_name(symbols: &str) -> String {
    format!("orbit_{}.json", symbols)
}

pub fn grid_name(degree: u32, threshold: f64) -> String {
    format!("region_deg{}_M{}.grid", degree, threshold)
}

fn read_text(path: &Path) -> Result<String, CommandError> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(CommandError::Missing(path.to_path_buf())),
        Err(source) => Err(CommandError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn format_err(path: &Path) -> impl FnOnce(FormatError) -> CommandError + '_ {
    move |source| CommandError::Format {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads and decodes a certificate file.
pub fn load_certificate(path: &Path) -> Result<(PolySystem, Polynomial, BoundCertificate), CommandError> {
    let text = read_text(path)?;
    let file = CertificateFile::from_json(&text).map_err(format_err(path))?;
    file.decode().map_err(format_err(path))
}

struct DegreeRun {
    row: SummaryRow,
    certificate: Option<String>,
    sdpa: Option<String>,
    seconds: f64,
    error: Option<String>,
}

fn bound_one(cfg: &ExperimentConfig, degree: u32) -> DegreeRun {
    let start = Instant::now();
    let failed = |msg: String, sdpa: Option<String>| DegreeRun {
        row: SummaryRow {
            degree,
            bound: None,
            duality_gap: None,
            valid: false,
            status: "failed".into(),
            iterations: 0,
        },
        certificate: None,
        sdpa,
        seconds: start.elapsed().as_secs_f64(),
        error: Some(msg),
    };
    let mut opts = SosOptions::new(degree, cfg.bound.prescaling.clone());
    opts.ball_radius = cfg.bound.ball_radius;
    let program = match build_bound_program(&cfg.system, &cfg.phi, &opts) {
        Ok(p) => p,
        Err(e) => return failed(e.to_string(), None),
    };
    let sdp = assemble_sdp(&program);
    let sdpa = write_sdpa(&sdp);
    let sdp_opts = SdpOptions {
        tolerance: cfg.bound.tolerance,
        max_iterations: cfg.bound.max_iterations,
        ..SdpOptions::default()
    };
    let solution = match solve(&sdp, &sdp_opts) {
        Ok(s) => s,
        Err(e) => return failed(e.to_string(), Some(sdpa)),
    };
    let cert = match extract_certificate(&program, &solution) {
        Ok(c) => c,
        Err(e) => return failed(e.to_string(), Some(sdpa)),
    };
    let valid = match validate_certificate(&cert, &cfg.system, &cfg.phi, Tolerances::default()) {
        Ok(r) => r.valid,
        Err(e) => return failed(e.to_string(), Some(sdpa)),
    };
    DegreeRun {
        row: SummaryRow {
            degree,
            bound: Some(cert.bound),
            duality_gap: Some(cert.solver.duality_gap),
            valid,
            status: cert.solver.status.as_str().into(),
            iterations: cert.solver.iterations,
        },
        certificate: Some(CertificateFile::new(&cert, &cfg.system, &cfg.phi, valid).to_json()),
        sdpa: Some(sdpa),
        seconds: start.elapsed().as_secs_f64(),
        error: None,
    }
}

/// Solves the bound problem for every configured degree and writes
/// `certificate_deg{N}.json`, `sdp_deg{N}.dat-s` and `bound_summary.csv`.
/// With `jobs > 1` the degrees are solved concurrently.
pub fn run_bound(cfg: &ExperimentConfig, run: &RunOptions) -> Result<Outcome, CommandError> {
    let mut out = Outcome::new();
    let runs: Vec<DegreeRun> = if run.jobs > 1 {
        run.pool()?
            .install(|| cfg.bound.degrees.par_iter().map(|&d| bound_one(cfg, d)).collect())
    } else {
        cfg.bound.degrees.iter().map(|&d| bound_one(cfg, d)).collect()
    };
    out.lines.push(format!("{:>6}  {:>14}  {:>10}  {:<8}  {}", "degree", "U", "gap", "validity", "status"));
    for r in &runs {
        if let Some(s) = &r.sdpa {
            out.write(&run.out, &format!("sdp_deg{}.dat-s", r.row.degree), s)?;
        }
        if let Some(c) = &r.certificate {
            out.write(&run.out, &certificate_name(r.row.degree), c)?;
        }
        if let Some(e) = &r.error {
            out.warnings.push(format!("degree {}: {}", r.row.degree, e));
        }
        if !r.row.valid {
            out.ok = false;
        }
        let opt = |v: Option<f64>| v.map(fmt7).unwrap_or_else(|| "-".into());
        out.lines.push(format!(
            "{:>6}  {:>14}  {:>10}  {:<8}  {} ({} iterations, {:.2} s)",
            r.row.degree,
            opt(r.row.bound),
            opt(r.row.duality_gap),
            if r.row.valid { "VALID" } else { "INVALID" },
            r.row.status,
            r.row.iterations,
            r.seconds
        ));
    }
    let rows: Vec<SummaryRow> = runs.into_iter().map(|r| r.row).collect();
    let csv = write_summary_csv(&rows).map_err(format_err(&run.out))?;
    out.write(&run.out, "bound_summary.csv", &csv)?;
    Ok(out)
}

/// Canonical form of each requested itinerary, first occurrence order,
/// warning when a request repeats a shorter word.
fn canonical_requests(requests: &[String], out: &mut Outcome) -> Vec<(String, String)> {
    let mut seen: Vec<(String, String)> = Vec::new();
    for req in requests {
        let (base, reps) = canonical_symbols(req);
        if reps > 1 {
            out.warnings.push(format!(
                "{:?} repeats {:?} {} times; computing {:?} once",
                req, base, reps, base
            ));
        }
        if seen.iter().any(|(_, b)| *b == base) {
            if reps == 1 && !seen.iter().any(|(r, _)| r == req) {
                out.warnings.push(format!("{:?} is a rotation of an earlier request", req));
            }
            continue;
        }
        seen.push((req.clone(), base));
    }
    seen
}

/// Seeds, shoots and stores each requested periodic orbit, writing
/// `orbit_{sym}.json`, `orbit_{sym}.csv` and `orbit_summary.csv`.
pub fn run_orbit(cfg: &ExperimentConfig, run: &RunOptions) -> Result<Outcome, CommandError> {
    let mut out = Outcome::new();
    let o = &cfg.orbit;
    let section = o
        .section
        .clone()
        .ok_or_else(|| CommandError::Usage("orbit search needs [orbit.section] for this system".into()))?;
    if cfg.system.dim() > 3 {
        return Err(CommandError::Usage("orbit search supports at most 3 variables".into()));
    }
    let seed_opts = SeedOptions {
        start: o.start,
        spinup: o.spinup,
        tol: o.seed_tol,
        max_seeds: o.max_seeds,
        symbol_axis: o.symbol_axis,
    };
    let shoot_opts = ShootingOptions {
        integrator: IntegratorOptions::with_tolerance(o.integrator_tol),
        tol: o.tol,
        max_iterations: o.max_iterations,
        symbol_axis: o.symbol_axis,
        ..ShootingOptions::default()
    };
    let mut summary = String::from("symbols,period,average,residual\n");
    out.lines.push(format!("{:<12}  {:>14}  {:>14}  {:>10}", "symbols", "period", "average", "residual"));
    for (req, sym) in canonical_requests(&o.symbols, &mut out) {
        let seeds = match close_return_seeds(&cfg.system, &section, &sym, o.seed_run, &seed_opts) {
            Ok(s) => s,
            Err(e) => {
                out.ok = false;
                out.warnings.push(format!("{}: seeding failed: {}", sym, e));
                continue;
            }
        };
        if seeds.is_empty() {
            out.ok = false;
            out.warnings.push(format!("{}: no close returns with this itinerary in the seed run", sym));
            continue;
        }
        let shot = shoot_from_seeds(&cfg.system, &section, &sym, &seeds, &shoot_opts);
        let (orbit, used) = match (shot.orbit, shot.used_seed) {
            (Some(orbit), Some(used)) => (orbit, used),
            _ => {
                out.ok = false;
                let last = shot.rejected.last().map(|(_, e)| e.to_string()).unwrap_or_default();
                out.warnings.push(format!("{}: shooting failed from all {} seeds ({})", sym, seeds.len(), last));
                continue;
            }
        };
        if used > 0 {
            out.warnings.push(format!("{}: converged from seed {} after {} rejected seeds", sym, used, used));
        }
        let average = time_average(&orbit.trajectory, &cfg.phi, 0.0)
            .map_err(|e| CommandError::Usage(format!("{}: {}", sym, e)))?;
        let file = OrbitFile {
            requested: req.clone(),
            symbols: orbit.symbols.clone(),
            period: orbit.period,
            anchor: orbit.anchor.clone(),
            residual: orbit.residual,
            closure_error: orbit.closure_error(),
            iterations: orbit.iterations,
            integrator_tol: o.integrator_tol,
            phi_average: average,
            seed_index: used,
            rejected_seeds: shot.rejected.len(),
        };
        out.write(&run.out, &orbit_name(&sym), &to_json(&file))?;
        let csv = write_trajectory_csv(&orbit.trajectory, cfg.system.variables()).map_err(format_err(&run.out))?;
        out.write(&run.out, &format!("orbit_{}.csv", sym), &csv)?;
        let _ = writeln!(
            summary,
            "{},{},{},{}",
            sym,
            fmt7(orbit.period),
            fmt7(average),
            fmt7(orbit.residual)
        );
        out.lines.push(format!(
            "{:<12}  {:>14.10}  {:>14.6}  {:>10.2e}",
            sym, orbit.period, average, orbit.residual
        ));
    }
    out.write(&run.out, "orbit_summary.csv", &summary)?;
    Ok(out)
}

/// Samples `g = U − Φ − f·∇V` of each certificate on the configured box and
/// writes one `region_deg{N}_M{M}.grid` per threshold.
pub fn run_region(cfg: &ExperimentConfig, run: &RunOptions) -> Result<Outcome, CommandError> {
    let mut out = Outcome::new();
    let shape = cfg
        .region
        .shape
        .clone()
        .ok_or_else(|| CommandError::Usage("region needs [region] lo and hi for this system".into()))?;
    let pool = run.pool()?;
    for &degree in &cfg.region.degrees {
        let path = run.out.join(certificate_name(degree));
        let (system, phi, cert) = load_certificate(&path)?;
        let residual =
            Residual::new(&cert, &phi, &system).map_err(|e| CommandError::Usage(format!("{}: {}", path.display(), e)))?;
        let values = pool
            .install(|| crate::parallel::evaluate_grid(&residual, &shape))
            .map_err(|e| CommandError::Usage(e.to_string()))?;
        for &m in &cfg.region.thresholds {
            let grid = RegionGrid::from_values(shape.clone(), values.clone(), m, cert.bound, residual.identity().into())
                .map_err(|e| CommandError::Usage(format!("degree {}, M = {}: {}", degree, m, e)))?;
            out.write(&run.out, &grid_name(degree, m), &write_grid(&grid))?;
            out.lines.push(format!(
                "degree {} M = {}: {} of {} nodes in S_M (fraction {}), min g = {}",
                degree,
                m,
                grid.member_count(),
                grid.shape.len(),
                fmt7(grid.member_fraction()),
                fmt7(grid.min_value())
            ));
        }
    }
    Ok(out)
}

/// Residual traces and gap reports along stored orbits, writing
/// `trace_{sym}_deg{N}.csv` and `gap_{sym}_deg{N}.json`.
pub fn run_trace(cfg: &ExperimentConfig, run: &RunOptions) -> Result<Outcome, CommandError> {
    let mut out = Outcome::new();
    let orbits = canonical_requests(&cfg.trace.orbits, &mut out);
    for (_, sym) in &orbits {
        let opath = run.out.join(orbit_name(sym));
        let ofile: OrbitFile = serde_json::from_str(&read_text(&opath)?)
            .map_err(|e| CommandError::Format {
                path: opath.clone(),
                source: e.into(),
            })?;
        let traj = integrate_with(
            &cfg.system,
            &ofile.anchor,
            ofile.period,
            IntegratorOptions::with_tolerance(ofile.integrator_tol),
        )
        .map_err(|e| CommandError::Usage(format!("{}: {}", opath.display(), e)))?;
        for &degree in &cfg.trace.degrees {
            let cpath = run.out.join(certificate_name(degree));
            let (system, phi, cert) = load_certificate(&cpath)?;
            if system.dim() != cfg.system.dim() {
                return Err(CommandError::Usage(format!("{} belongs to a different system", cpath.display())));
            }
            let math = |e: ergobound_core::CertifyError| CommandError::Usage(format!("{} on {}: {}", sym, cpath.display(), e));
            let residual = Residual::new(&cert, &phi, &system).map_err(math)?;
            let trace = residual_trace(&traj, &residual, cfg.trace.interior).map_err(math)?;
            let reports: Vec<GapReport> = cfg
                .trace
                .thresholds
                .iter()
                .map(|&m| gap_report(&traj, &residual, &phi, m, 0.0))
                .collect::<Result<_, _>>()
                .map_err(math)?;
            let entries: Vec<GapEntry> = reports.iter().map(GapEntry::from).collect();
            let average = reports.first().map_or_else(
                || time_average(&traj, &phi, 0.0).unwrap_or(f64::NAN),
                |r| r.average,
            );
            let gap = GapFile {
                orbit: sym.clone(),
                aux_degree: degree,
                certificate_id: residual.identity().into(),
                bound: cert.bound,
                average,
                epsilon: cert.bound - average,
                trace_mean: trace.mean,
                trace_min: trace.min(),
                trace_max: trace.max(),
                thresholds: entries.clone(),
            };
            let csv = write_trace_csv(&trace).map_err(format_err(&run.out))?;
            out.write(&run.out, &format!("trace_{}_deg{}.csv", sym, degree), &csv)?;
            out.write(&run.out, &format!("gap_{}_deg{}.json", sym, degree), &to_json(&gap))?;
            out.lines.push(format!(
                "{} degree {}: eps = {}, trace mean = {}, min = {}, max = {}",
                sym,
                degree,
                fmt7(gap.epsilon),
                fmt7(trace.mean),
                fmt7(gap.trace_min),
                fmt7(gap.trace_max)
            ));
            for e in &entries {
                out.lines.push(format!(
                    "    M = {}: occupancy {} >= Markov bound {}: {}",
                    e.threshold,
                    fmt7(e.occupancy),
                    fmt7(e.markov_bound),
                    if e.consistent { "yes" } else { "NO" }
                ));
                if !e.consistent {
                    out.ok = false;
                }
            }
        }
    }
    Ok(out)
}

/// Re-validates a certificate file on its own.
pub fn run_verify(path: &Path) -> Result<Outcome, CommandError> {
    let mut out = Outcome::new();
    let text = read_text(path)?;
    let file = CertificateFile::from_json(&text).map_err(format_err(path))?;
    let (system, phi, cert) = file.decode().map_err(format_err(path))?;
    let report = validate_certificate(&cert, &system, &phi, Tolerances::default())
        .map_err(|e| CommandError::Format {
            path: path.to_path_buf(),
            source: FormatError::Invalid(e.to_string()),
        })?;
    let id = ergobound_core::certify::certificate_id(cert.bound, &cert.v);
    if id != file.certificate_id {
        out.warnings.push("stored certificate id does not match U and V".into());
    }
    if file.valid != report.valid {
        out.warnings.push(format!(
            "file records {}, recomputation gives {}",
            if file.valid { "VALID" } else { "INVALID" },
            if report.valid { "VALID" } else { "INVALID" }
        ));
    }
    out.ok = report.valid;
    out.lines.push(format!("degree {}  U = {}", cert.aux_degree, cert.bound));
    out.lines.push(format!(
        "residual_infnorm = {:.3e} (allowed {:.3e})",
        report.residual_infnorm,
        report.tolerances.fit * (1.0 + report.bound.abs())
    ));
    out.lines.push(format!(
        "gram_min_eigenvalue = {:.3e} (allowed {:.3e})",
        report.gram_min_eigenvalue,
        -report.tolerances.psd * (1.0 + report.gram_norm)
    ));
    out.lines.push(if report.valid { "VALID".into() } else { "INVALID".into() });
    Ok(out)
}
