//! The `qmap` command line.
//!
//! Every command produces one report. Reports are wrapped in an envelope
//! whose `metadata.timestamp` is the only field that differs between two
//! runs with the same command, configuration and seed.
//!
//! Exit codes: 0 success, 1 reproduction or verification mismatch, 2 invalid
//! input or configuration, 3 property violation.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channels::{paper_counterexample, KrausChannel};
use crate::distances::{d_hs, distance, DistanceKind};
use crate::entanglement::{
    closest_ppt_with, ensemble_to_density, estimate_entanglement, EntanglementEstimate,
    EstimatorConfig,
};
use crate::error::{Error, Result};
use crate::linalg::Dims;
use crate::search::{search_violations, verify_search_report, SearchConfig, SearchReport};
use crate::states::{standard_state, DensityMatrix, StandardState};
use crate::suites::{reproduce, run_suite, ReproduceReport, Suite, SuiteConfig, SuiteReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "qmap",
    version,
    about = "Distances, channels and entanglement on small quantum systems"
)]
pub struct Cli {
    /// Run seed.
    #[arg(long, env = "QMAP_SEED", global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// JSON file with defaults for any of the numeric options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Recompute the two-qubit counterexample.
    Reproduce,
    /// Run a seeded property suite.
    Properties(PropertiesArgs),
    /// Search channel space for Hilbert–Schmidt expansion.
    Search(SearchArgs),
    /// Bound the distance from a state to the separable set.
    Estimate(EstimateArgs),
    /// Recheck a report file from its own contents.
    Verify { report: PathBuf },
}

#[derive(Args, Debug)]
pub struct PropertiesArgs {
    #[arg(value_parser = parse_suite)]
    pub suite: Suite,
    /// Samples per dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated dimensions for the single-system suites.
    #[arg(long, value_delimiter = ',')]
    pub dim: Vec<usize>,
    /// Bipartition `d1xd2` for e1 and e3.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<Dims>,
    /// Comma-separated distance kinds.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub kinds: Vec<DistanceKind>,
    /// Add the counterexample triple to the d2 samples.
    #[arg(long)]
    pub include_counterexample: bool,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    /// Kraus operators per channel.
    #[arg(long)]
    pub kraus: Option<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Channel JSON, a search report, or `counterexample`.
    #[arg(long)]
    pub warm_start: Option<String>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// State JSON with dims, or one of `bell`, `werner:<p>`.
    pub state: String,
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<DistanceKind>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<DistanceKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dims(s: &str) -> std::result::Result<Dims, String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected d1xd2, got '{s}'"))?;
    let d = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Dims::new(d(a)?, d(b)?).map_err(|e| e.to_string())
}

/// Values a `--config` file may set. Command-line flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub dimensions: Option<Vec<usize>>,
    pub dims: Option<Dims>,
    pub kinds: Option<Vec<DistanceKind>>,
    pub kind: Option<DistanceKind>,
    pub include_counterexample: Option<bool>,
    pub tolerance: Option<f64>,
    pub restarts: Option<usize>,
    pub kraus: Option<usize>,
    pub budget: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        if let Some(t) = cfg.tolerance {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "tolerance must be positive, got {t}"
                )));
            }
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<T> {
    pub metadata: Metadata,
    pub report: T,
}

impl<T> Envelope<T> {
    pub fn new(command: &str, report: T) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            metadata: Metadata {
                tool: "qmap".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                timestamp,
            },
            report,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateReport {
    pub state: DensityMatrix,
    pub kind: DistanceKind,
    pub seed: u64,
    pub restarts: usize,
    pub estimate: EntanglementEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub command: String,
    pub checks: Vec<VerifyCheck>,
    pub passed: bool,
}

/// A finished command: exit code, rendered report and a short human
/// summary.
#[derive(Debug)]
pub struct Rendered {
    pub code: i32,
    pub body: String,
    pub summary: String,
}

impl Rendered {
    fn invalid(e: &Error) -> Self {
        Self {
            code: EXIT_INVALID,
            body: String::new(),
            summary: format!("error: {e}"),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
}

fn csv_table(rows: &[(String, String)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"]).expect("in-memory write");
    for (k, v) in rows {
        w.write_record([k, v]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn render<T: Serialize>(
    envelope: &Envelope<T>,
    format: Format,
    scalars: Vec<(String, String)>,
) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(envelope)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let m = &envelope.metadata;
            let mut rows = vec![
                ("metadata.tool".to_string(), m.tool.clone()),
                ("metadata.version".into(), m.version.clone()),
                ("metadata.command".into(), m.command.clone()),
                ("metadata.timestamp".into(), m.timestamp.to_string()),
            ];
            rows.extend(scalars);
            csv_table(&rows)
        }
    })
}

fn kv(k: impl Into<String>, v: impl ToString) -> (String, String) {
    (k.into(), v.to_string())
}

/// Renders a reproduction report; exit 1 unless every value matches.
pub fn render_reproduce(report: ReproduceReport, format: Format) -> Result<Rendered> {
    let mut summary = String::new();
    let _ = writeln!(summary, "D_HS(sigma, rho) = {}", report.d_hs_before);
    let _ = writeln!(
        summary,
        "D_HS(Theta sigma, Theta rho) = {}",
        report.d_hs_after
    );
    let _ = writeln!(summary, "||Theta|| = {}", report.channel_norm);
    let _ = writeln!(summary, "ratio = {}", report.ratio);
    let k = &report.kadison;
    let _ = writeln!(
        summary,
        "Kadison bound: {} <= {} ({})",
        k.lhs,
        k.rhs,
        if !k.holds {
            "violated"
        } else if k.slack == 0.0 {
            "equality"
        } else {
            "holds"
        }
    );
    for c in report.checks.iter().filter(|c| !c.ok) {
        let _ = writeln!(
            summary,
            "MISMATCH {}: got {}, expected {}",
            c.name, c.value, c.expected
        );
    }
    let code = if report.passed {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    };
    let mut scalars: Vec<_> = report
        .checks
        .iter()
        .map(|c| kv(c.name.clone(), c.value))
        .collect();
    scalars.push(kv("passed", report.passed));
    let body = render(&Envelope::new("reproduce", report), format, scalars)?;
    Ok(Rendered {
        code,
        body,
        summary,
    })
}

fn render_suite(report: SuiteReport, format: Format) -> Result<Rendered> {
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "suite {} seed {}: {}",
        report.config.suite,
        report.config.seed,
        if report.passed { "pass" } else { "FAIL" }
    );
    for m in &report.metrics {
        let _ = writeln!(
            summary,
            "  {}: worst {:.3e} (limit {:.1e}, {} samples)",
            m.check, m.worst, m.limit, m.count
        );
    }
    for f in &report.failures {
        let sample = f.sample.map_or("fixed".to_string(), |s| s.to_string());
        let _ = writeln!(
            summary,
            "  violation {}: value {} at seed {} dim {} sample {} {}",
            f.check, f.value, f.seed, f.dim, sample, f.detail
        );
    }
    let mut scalars = Vec::new();
    for m in &report.metrics {
        scalars.push(kv(format!("{} worst", m.check), m.worst));
        scalars.push(kv(format!("{} limit", m.check), m.limit));
        scalars.push(kv(format!("{} count", m.check), m.count));
    }
    scalars.push(kv("skipped", report.skipped));
    scalars.push(kv("failures", report.failures.len()));
    scalars.push(kv("passed", report.passed));
    let code = if report.passed {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    };
    let body = render(&Envelope::new("properties", report), format, scalars)?;
    Ok(Rendered {
        code,
        body,
        summary,
    })
}

fn load_warm_start(spec: &str) -> Result<KrausChannel> {
    if spec == "counterexample" && !Path::new(spec).exists() {
        return Ok(paper_counterexample().0);
    }
    let text = read(Path::new(spec))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let channel = if value.get("report").is_some() {
        serde_json::from_value::<Envelope<SearchReport>>(value)?
            .report
            .channel
    } else if value.get("channel").is_some() {
        serde_json::from_value::<SearchReport>(value)?.channel
    } else {
        serde_json::from_value::<KrausChannel>(value)?
    };
    Ok(channel)
}

fn load_state(spec: &str) -> Result<DensityMatrix> {
    if !Path::new(spec).exists() {
        if spec == "bell" {
            return standard_state(StandardState::Bell);
        }
        if let Some(p) = spec.strip_prefix("werner:") {
            let p = f64::from_str(p)
                .map_err(|e| Error::InvalidParameter(format!("werner parameter: {e}")))?;
            return standard_state(StandardState::Werner(p));
        }
    }
    let state: DensityMatrix = serde_json::from_str(&read(Path::new(spec))?)?;
    state.require_dims()?;
    Ok(state)
}

fn verify(path: &Path) -> Result<VerifyReport> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let command = value
        .pointer("/metadata/command")
        .and_then(|c| c.as_str())
        .ok_or_else(|| Error::InvalidParameter("not a qmap report: no metadata.command".into()))?
        .to_string();
    let mut checks = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        checks.push(VerifyCheck {
            name: name.into(),
            ok,
            detail,
        })
    };
    match command.as_str() {
        "reproduce" => {
            let claimed = serde_json::from_value::<Envelope<ReproduceReport>>(value)?.report;
            let fresh = reproduce()?;
            for (c, f) in claimed.checks.iter().zip(&fresh.checks) {
                let ok = c.name == f.name && (c.value - f.value).abs() <= 1e-12 && c.ok == f.ok;
                check(
                    &c.name,
                    ok,
                    format!("claimed {}, recomputed {}", c.value, f.value),
                );
            }
            check(
                "passed",
                claimed.passed == fresh.passed && claimed.checks.len() == fresh.checks.len(),
                format!("claimed {}, recomputed {}", claimed.passed, fresh.passed),
            );
        }
        "properties" => {
            let claimed = serde_json::from_value::<Envelope<SuiteReport>>(value)?.report;
            let fresh = run_suite(&claimed.config)?;
            check(
                "suite rerun",
                fresh == claimed,
                format!(
                    "claimed {} failures, rerun {}",
                    claimed.failures.len(),
                    fresh.failures.len()
                ),
            );
        }
        "search" => {
            let claimed = serde_json::from_value::<Envelope<SearchReport>>(value)?.report;
            let v = verify_search_report(&claimed)?;
            check(
                "ratio of stored pair",
                v.ratio_matches,
                format!(
                    "claimed {}, recomputed {}",
                    claimed.best_ratio, v.recomputed_ratio
                ),
            );
            check(
                "channel norm",
                v.bound_matches,
                format!(
                    "claimed {}, recomputed {}",
                    claimed.bound, v.recomputed_bound
                ),
            );
            check(
                "exact worst case",
                v.exact_matches,
                format!("exact {}", v.exact_ratio),
            );
            check("Kadison bound", v.within_kadison_bound, String::new());
        }
        "estimate" => {
            let claimed = serde_json::from_value::<Envelope<EstimateReport>>(value)?.report;
            let e = &claimed.estimate;
            let witness = ensemble_to_density(&e.witness)?;
            let upper = distance(claimed.kind, &claimed.state, &witness)?;
            check(
                "upper from witness",
                (upper - e.upper).abs() <= 1e-10,
                format!("claimed {}, recomputed {}", e.upper, upper),
            );
            if let Some(lower) = e.lower {
                let cfg = EstimatorConfig::default();
                let ppt = closest_ppt_with(
                    &claimed.state,
                    cfg.dykstra_max_iterations,
                    cfg.dykstra_tolerance,
                )?;
                check(
                    "lower from PPT projection",
                    (ppt.distance - lower).abs() <= 1e-10,
                    format!("claimed {lower}, recomputed {}", ppt.distance),
                );
                let dims = claimed.state.require_dims()?;
                if dims.d1 * dims.d2 <= 6 && dims.d1.min(dims.d2) == 2 {
                    check(
                        "lower <= upper",
                        lower <= e.upper + 1e-6,
                        format!("{lower} vs {}", e.upper),
                    );
                }
                let hs = d_hs(&claimed.state, &ppt.state)?;
                check(
                    "projection distance",
                    (hs - ppt.distance).abs() <= 1e-12,
                    String::new(),
                );
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "cannot verify a '{other}' report"
            )))
        }
    }
    let passed = checks.iter().all(|c| c.ok);
    Ok(VerifyReport {
        command,
        checks,
        passed,
    })
}

/// Runs a parsed command line. Inputs are read from disk; the report is
/// returned rather than written.
pub fn run(cli: &Cli) -> Rendered {
    match run_inner(cli) {
        Ok(r) => r,
        Err(e) => Rendered::invalid(&e),
    }
}

fn run_inner(cli: &Cli) -> Result<Rendered> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let restarts = |flag: Option<usize>| flag.or(file.restarts);
    match &cli.command {
        Command::Reproduce => render_reproduce(reproduce()?, cli.format),
        Command::Properties(a) => {
            let mut cfg = SuiteConfig::new(a.suite, seed);
            if let Some(n) = a.n.or(file.n) {
                cfg.n = n;
            }
            if !a.dim.is_empty() {
                cfg.dims = a.dim.clone();
            } else if let Some(d) = &file.dimensions {
                cfg.dims = d.clone();
            }
            if let Some(d) = a.dims.or(file.dims) {
                cfg.bipartite = d;
            }
            if !a.kinds.is_empty() {
                cfg.kinds = a.kinds.clone();
            } else if let Some(k) = &file.kinds {
                cfg.kinds = k.clone();
            }
            cfg.include_counterexample =
                a.include_counterexample || file.include_counterexample.unwrap_or(false);
            if let Some(t) = a.tolerance.or(file.tolerance) {
                cfg.tolerance = t;
            }
            if let Some(r) = restarts(a.restarts) {
                cfg.restarts = r;
            }
            render_suite(run_suite(&cfg)?, cli.format)
        }
        Command::Search(a) => {
            let warm_start = a.warm_start.as_deref().map(load_warm_start).transpose()?;
            let dim = a
                .dim
                .or(file.dim)
                .or(warm_start.as_ref().map(|c| c.in_dim()))
                .unwrap_or(4);
            let kraus_count = a
                .kraus
                .or(file.kraus)
                .or(warm_start.as_ref().map(|c| c.kraus().len()))
                .unwrap_or(2);
            let cfg = SearchConfig {
                dim,
                kraus_count,
                budget: a.budget.or(file.budget).unwrap_or(1000),
                seed,
                warm_start,
            };
            let report = search_violations(&cfg)?;
            let summary = format!(
                "best ratio {} (bound {}) over {} samples, seed {}\n",
                report.best_ratio, report.bound, report.samples_evaluated, report.seed
            );
            let scalars = vec![
                kv("best_ratio", report.best_ratio),
                kv("bound", report.bound),
                kv("samples", report.samples_evaluated),
                kv("seed", report.seed),
                kv("improvements", report.history.len()),
            ];
            let body = render(&Envelope::new("search", report), cli.format, scalars)?;
            Ok(Rendered {
                code: EXIT_OK,
                body,
                summary,
            })
        }
        Command::Estimate(a) => {
            let state = load_state(&a.state)?;
            let kind = a.kind.or(file.kind).unwrap_or(DistanceKind::HilbertSchmidt);
            let defaults = EstimatorConfig::default();
            let cfg = EstimatorConfig {
                restarts: restarts(a.restarts).unwrap_or(defaults.restarts),
                seed,
                ..defaults
            };
            let estimate = estimate_entanglement(&state, kind, &cfg)?;
            let lower = estimate.lower.map_or("none".to_string(), |l| l.to_string());
            let summary = format!(
                "{kind}: upper {} lower {} ({} after {} iterations)\n",
                estimate.upper,
                lower,
                if estimate.converged {
                    "converged"
                } else {
                    "NOT converged"
                },
                estimate.iterations
            );
            let scalars = vec![
                kv("kind", kind),
                kv("upper", estimate.upper),
                kv("lower", lower),
                kv("converged", estimate.converged),
                kv("iterations", estimate.iterations),
            ];
            let report = EstimateReport {
                state,
                kind,
                seed,
                restarts: cfg.restarts,
                estimate,
            };
            let body = render(&Envelope::new("estimate", report), cli.format, scalars)?;
            Ok(Rendered {
                code: EXIT_OK,
                body,
                summary,
            })
        }
        Command::Verify { report } => {
            let v = verify(report)?;
            let mut summary = String::new();
            for c in &v.checks {
                let _ = writeln!(
                    summary,
                    "{} {}: {}",
                    if c.ok { "ok  " } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let code = if v.passed { EXIT_OK } else { EXIT_MISMATCH };
            let scalars = v.checks.iter().map(|c| kv(c.name.clone(), c.ok)).collect();
            let body = render(&Envelope::new("verify", v), cli.format, scalars)?;
            Ok(Rendered {
                code,
                body,
                summary,
            })
        }
    }
}

/// Writes via a sibling temporary file so a failed run never leaves a
/// partial report behind.
fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Parses `args`, runs the command and emits its output. Returns the exit
/// code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let r = run(&cli);
    if r.body.is_empty() {
        eprint!("{}", r.summary);
        if !r.summary.ends_with('\n') {
            eprintln!();
        }
        return r.code;
    }
    match &cli.out {
        Some(path) => {
            if let Err(e) = write_atomic(path, &r.body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_INVALID;
            }
            print!("{}", r.summary);
        }
        None => {
            eprint!("{}", r.summary);
            print!("{}", r.body);
        }
    }
    r.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("qmap").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("2x3").unwrap(), Dims { d1: 2, d2: 3 });
        assert!(parse_dims("2*3").is_err());
        assert!(parse_dims("0x3").is_err());
    }

    #[test]
    fn bad_suite_is_a_usage_error() {
        assert_eq!(main_with(["qmap", "properties", "d9"]), EXIT_INVALID);
    }

    #[test]
    fn reproduce_runs() {
        let r = run(&parse(&["reproduce"]));
        assert_eq!(r.code, EXIT_OK);
        assert!(r.summary.contains("ratio = 2\n"));
        let env: Envelope<ReproduceReport> = serde_json::from_str(&r.body).unwrap();
        assert!(env.report.passed);
    }

    #[test]
    fn csv_is_a_scalar_table() {
        let r = run(&parse(&["reproduce", "--format", "csv"]));
        let mut lines = r.body.lines();
        assert_eq!(lines.next(), Some("key,value"));
        assert!(r.body.contains("\nratio,2\n"));
        assert!(r.body.contains("metadata.timestamp,"));
    }

    #[test]
    fn estimate_missing_dims_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        fs::write(
            &path,
            r#"{"matrix": {"dim": 2, "entries": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]}, "dims": null}"#,
        )
        .unwrap();
        let r = run(&parse(&["estimate", path.to_str().unwrap()]));
        assert_eq!(r.code, EXIT_INVALID);
        assert!(r.summary.contains("bipartite"), "{}", r.summary);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_tolerance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"seed": 1, "budgett": 5}"#).unwrap();
        let cfg = path.to_str().unwrap();
        assert_eq!(
            run(&parse(&["--config", cfg, "reproduce"])).code,
            EXIT_INVALID
        );
        fs::write(&path, r#"{"tolerance": -1.0}"#).unwrap();
        assert_eq!(
            run(&parse(&["--config", cfg, "reproduce"])).code,
            EXIT_INVALID
        );
        let r = run(&parse(&[
            "properties",
            "d1",
            "--n",
            "3",
            "--tolerance",
            "0",
        ]));
        assert_eq!(r.code, EXIT_INVALID);
    }

    #[test]
    fn malformed_warm_start_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        fs::write(&path, "{\"kraus\": 3}").unwrap();
        let r = run(&parse(&[
            "search",
            "--budget",
            "4",
            "--warm-start",
            path.to_str().unwrap(),
        ]));
        assert_eq!(r.code, EXIT_INVALID);
    }
}
