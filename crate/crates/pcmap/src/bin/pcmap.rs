//! Command-line front end: analyze a map, sweep a family, witness a state,
//! canonicalize a triple, replay a certificate.
//!
//! Exit codes: 0 pass/consistent, 1 certified violation or failed replay,
//! 2 usage or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pcmap::contractivity::{extension_margin_over_grid, hierarchy_scan};
use pcmap::entanglement::{
    classify_new_hierarchy, default_classification_bank, isotropic_threshold, witness_with_map,
    BipartiteState, LevelVerdict,
};
use pcmap::maps::QuantumMap;
use pcmap::operator::DensityOperator;
use pcmap::positivity::{
    is_completely_positive, is_positive, kadison_check, schwarz_check, SearchBudget, SeesawConfig,
    VerdictKind,
};
use pcmap::report::{
    analysis_certificate, canonicalization_certificate, classification_certificate, format_float,
    load_certificate, load_map_file, load_state_file, parse_map_spec, parse_state_spec, replay,
    save_certificate, write_csv_atomic, Certificate, OutputFormat, RunConfig,
};
use pcmap::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "pcmap",
    version,
    about = "Partial-contractivity hierarchy for quantum maps",
    long_about = "Certifies where a map sits in the partial-contractivity hierarchy, sweeps \
                  map families for their boundaries, witnesses entangled states against a \
                  bank of certified maps, and replays recorded certificates."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// RNG seed for all searches (recorded in every artifact)
    #[arg(long, global = true, env = "PCMAP_SEED", default_value_t = 0)]
    seed: u64,

    /// Restarts per search
    #[arg(long, global = true, default_value_t = 16)]
    restarts: usize,

    /// Iterations per restart
    #[arg(long, global = true, default_value_t = 150)]
    iters: usize,

    /// Violation tolerance
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Output file (written atomically); stdout summary is printed either way
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format for report files
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Read the map from a JSON file instead of a spec
    #[arg(long, global = true)]
    map_file: Option<PathBuf>,

    /// Read the state from a JSON file instead of a spec
    #[arg(long, global = true)]
    state_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full analysis of one map: hierarchy scan, exact CP test, positivity,
    /// Schwarz and (if unital) Kadison checks
    Analyze {
        /// Map spec such as lambda:a=0.6, omega:eps=0.55, phi_p:d=3,p=1.5,
        /// transpose:d=2 (or use --map-file)
        spec: Option<String>,
    },
    /// Sweep a family parameter and tabulate verdicts, margins, and
    /// bisected boundaries
    Sweep {
        /// Family: lambda, omega, or iso-witness
        family: String,
        /// Parameter name: a (lambda), eps (omega), f (iso-witness)
        parameter: String,
        /// Inclusive range, e.g. 0..1
        range: String,
        /// Number of grid points
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Witness map spec for iso-witness sweeps
        #[arg(long)]
        map: Option<String>,
    },
    /// Classify a bipartite state against the built-in bank of certified maps
    Witness {
        /// State spec such as iso:d=2,f=0.8 (or use --state-file)
        spec: Option<String>,
    },
    /// Canonical form (U, p) of three qubit density operators
    Canonicalize {
        /// Three state files holding 2x2 density matrices
        #[arg(num_args = 3)]
        files: Vec<PathBuf>,
    },
    /// Recompute every value recorded in a certificate file
    Replay {
        /// Certificate JSON produced by analyze, witness, or canonicalize
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    // die quietly when a downstream pipe closes (e.g. `pcmap ... | head`)
    // instead of panicking on EPIPE
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    // the destination path stays out of the recorded config so the same
    // analysis written to two places yields byte-identical artifacts
    let config = RunConfig {
        seed: cli.seed,
        restarts: cli.restarts,
        iters: cli.iters,
        tol: cli.tol,
        out: None,
        format: cli.format.into(),
    };
    config.validate()?;
    match &cli.command {
        Command::Analyze { spec } => cmd_analyze(cli, &config, spec.as_deref()),
        Command::Sweep {
            family,
            parameter,
            range,
            grid,
            map,
        } => cmd_sweep(cli, &config, family, parameter, range, *grid, map.as_deref()),
        Command::Witness { spec } => cmd_witness(cli, &config, spec.as_deref()),
        Command::Canonicalize { files } => cmd_canonicalize(cli, &config, files),
        Command::Replay { file } => cmd_replay(file),
    }
}

fn resolve_map(cli: &Cli, spec: Option<&str>) -> Result<QuantumMap> {
    match (spec, &cli.map_file) {
        (Some(s), None) => parse_map_spec(s),
        (None, Some(path)) => load_map_file(path),
        (Some(_), Some(_)) => Err(Error::InvalidInput(
            "give either a map spec or --map-file, not both".into(),
        )),
        (None, None) => Err(Error::InvalidInput(
            "a map spec or --map-file is required".into(),
        )),
    }
}

fn resolve_state(cli: &Cli, spec: Option<&str>) -> Result<BipartiteState> {
    match (spec, &cli.state_file) {
        (Some(s), None) => parse_state_spec(s),
        (None, Some(path)) => load_state_file(path),
        (Some(_), Some(_)) => Err(Error::InvalidInput(
            "give either a state spec or --state-file, not both".into(),
        )),
        (None, None) => Err(Error::InvalidInput(
            "a state spec or --state-file is required".into(),
        )),
    }
}

/// Flatten a certificate into (field, value) rows for CSV output.
fn certificate_rows(cert: &Certificate) -> (Vec<String>, Vec<Vec<String>>) {
    let header = vec!["field".to_string(), "value".to_string(), "seed".to_string()];
    let seed = cert.config.seed.to_string();
    let mut rows = vec![
        vec!["operation".to_string(), cert.operation.clone(), seed.clone()],
        vec!["verdict".to_string(), cert.verdict.clone(), seed.clone()],
    ];
    for (k, v) in &cert.parameters {
        rows.push(vec![format!("param:{k}"), format_float(*v), seed.clone()]);
    }
    for (k, v) in &cert.values {
        rows.push(vec![format!("value:{k}"), format_float(*v), seed.clone()]);
    }
    if let Some(levels) = &cert.levels {
        for l in levels {
            rows.push(vec![
                format!("level:{}", l.level),
                l.verdict.clone(),
                seed.clone(),
            ]);
        }
    }
    (header, rows)
}

fn emit_certificate(cli: &Cli, cert: &Certificate) -> Result<()> {
    if let Some(path) = &cli.out {
        match cli.format {
            FormatArg::Json => save_certificate(path, cert)?,
            FormatArg::Csv => {
                let (header, rows) = certificate_rows(cert);
                write_csv_atomic(path, &header, &rows)?;
            }
        }
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn cmd_analyze(cli: &Cli, config: &RunConfig, spec: Option<&str>) -> Result<ExitCode> {
    let map = resolve_map(cli, spec)?;
    let budget = SearchBudget {
        restarts: cli.restarts,
        iters: cli.iters,
    };
    let scan = hierarchy_scan(&map, &budget, cli.seed)?;
    let cp = is_completely_positive(&map, cli.tol)?;
    let pos = is_positive(
        &map,
        &SeesawConfig {
            restarts: cli.restarts,
            iters: cli.iters,
            seed: cli.seed,
            tol: cli.tol,
        },
    )?;
    let samples = (100 * cli.restarts).max(400);
    let schwarz = schwarz_check(&map, samples, cli.seed)?;
    let kadison = if map.is_unital() {
        Some(kadison_check(&map, samples, cli.seed)?)
    } else {
        None
    };

    // write the artifact before the summary: a closed stdout pipe must not
    // lose the report the caller asked for
    let cert = analysis_certificate(
        &map,
        &scan,
        &cp,
        &pos,
        Some(&schwarz),
        kadison.as_ref(),
        config,
    );
    emit_certificate(cli, &cert)?;

    println!("map: {} (dim {})", map.label(), map.dim());
    println!(
        "completely positive: {} (choi lambda_min = {})",
        cp.kind == VerdictKind::CertifiedMember,
        format_float(cp.value)
    );
    println!(
        "positive: {} (min <psi|C|psi> = {})",
        pos.kind.as_str(),
        format_float(pos.value)
    );
    println!(
        "schwarz: {} (worst margin = {})",
        schwarz.kind.as_str(),
        format_float(schwarz.value)
    );
    match &kadison {
        Some(k) => println!(
            "kadison: {} (worst margin = {})",
            k.kind.as_str(),
            format_float(k.value)
        ),
        None => println!("kadison: skipped (map is not unital)"),
    }
    for c in &scan {
        if c.witness.is_some() {
            println!(
                "level {}: {} (lhs = {}, rhs = {})",
                c.k,
                c.verdict.as_str(),
                format_float(c.lhs),
                format_float(c.rhs)
            );
        } else {
            println!("level {}: {}", c.k, c.verdict.as_str());
        }
    }

    Ok(ExitCode::SUCCESS)
}

fn parse_range(range: &str) -> Result<(f64, f64)> {
    let (lo, hi) = range
        .split_once("..")
        .ok_or_else(|| Error::InvalidInput(format!("range '{range}' must look like 0..1")))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad range start in '{range}'")))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad range end in '{range}'")))?;
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!(
            "range '{range}' is empty or reversed"
        )));
    }
    Ok((lo, hi))
}

fn grid_points(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput("--grid must be at least 2".into()));
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * (i as f64) / ((n - 1) as f64))
        .collect())
}

/// Bisect a boolean predicate over [lo, hi] down to `width`; requires a
/// sign change across the bracket.
fn bisect_predicate(
    mut pred: impl FnMut(f64) -> Result<bool>,
    lo: f64,
    hi: f64,
    width: f64,
) -> Result<Option<f64>> {
    let (mut lo, mut hi) = (lo, hi);
    let at_lo = pred(lo)?;
    if at_lo == pred(hi)? {
        return Ok(None);
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

fn sweep_outputs(
    cli: &Cli,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    summary: Vec<(String, String)>,
) -> Result<ExitCode> {
    let seed = cli.seed.to_string();
    let summary_header = vec![
        "quantity".to_string(),
        "estimate".to_string(),
        "seed".to_string(),
    ];
    let summary_rows: Vec<Vec<String>> = summary
        .into_iter()
        .map(|(q, v)| vec![q, v, seed.clone()])
        .collect();
    match &cli.out {
        Some(path) => {
            write_csv_atomic(path, &header, &rows)?;
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::InvalidInput("bad --out path".into()))?;
            let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
            let summary_path = path.with_file_name(format!("{stem}_summary.{ext}"));
            write_csv_atomic(&summary_path, &summary_header, &summary_rows)?;
            println!("table written to {}", path.display());
            println!("summary written to {}", summary_path.display());
        }
        None => {
            println!("{}", header.join(","));
            for row in &rows {
                println!("{}", row.join(","));
            }
            println!();
            println!("{}", summary_header.join(","));
            for row in &summary_rows {
                println!("{}", row.join(","));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    cli: &Cli,
    _config: &RunConfig,
    family: &str,
    parameter: &str,
    range: &str,
    grid: usize,
    map_spec: Option<&str>,
) -> Result<ExitCode> {
    let (lo, hi) = parse_range(range)?;
    let points = grid_points(lo, hi, grid)?;
    let seed = cli.seed.to_string();

    match family {
        "lambda" | "omega" => {
            let expected_param = if family == "lambda" { "a" } else { "eps" };
            if parameter != expected_param {
                return Err(Error::InvalidInput(format!(
                    "family '{family}' sweeps parameter '{expected_param}', got '{parameter}'"
                )));
            }
            let build = |v: f64| -> Result<QuantumMap> {
                parse_map_spec(&format!("{family}:{expected_param}={v}"))
            };
            let pos_cfg = SeesawConfig {
                restarts: cli.restarts.min(8),
                iters: cli.iters.min(120),
                seed: cli.seed,
                tol: cli.tol,
            };
            let header: Vec<String> = [
                expected_param,
                "cp_lambda_min",
                "completely_positive",
                "positivity_value",
                "positive",
                "c3_worst_margin",
                "c3_grid_feasible",
                "seed",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let mut rows = Vec::with_capacity(points.len());
            for &v in &points {
                let map = build(v)?;
                let cp_min = map.choi().lambda_min()?;
                let pos = is_positive(&map, &pos_cfg)?;
                let (worst, feasible) = extension_margin_over_grid(&map, 9)?;
                rows.push(vec![
                    format_float(v),
                    format_float(cp_min),
                    (cp_min >= -cli.tol).to_string(),
                    format_float(pos.value),
                    (pos.kind != VerdictKind::CertifiedViolation).to_string(),
                    format_float(worst),
                    feasible.to_string(),
                    seed.clone(),
                ]);
            }
            let mut summary = Vec::new();
            let cp_boundary = bisect_predicate(
                |v| Ok(build(v)?.choi().lambda_min()? >= -cli.tol),
                lo,
                hi,
                1e-9,
            )?;
            summary.push((
                "cp_boundary".to_string(),
                cp_boundary.map_or("none".to_string(), format_float),
            ));
            let c3_boundary = bisect_predicate(
                |v| Ok(extension_margin_over_grid(&build(v)?, 33)?.1),
                lo,
                hi,
                1e-6,
            )?;
            summary.push((
                "c3_boundary".to_string(),
                c3_boundary.map_or("none".to_string(), format_float),
            ));
            sweep_outputs(cli, header, rows, summary)
        }
        "iso-witness" => {
            if parameter != "f" {
                return Err(Error::InvalidInput(format!(
                    "iso-witness sweeps parameter 'f', got '{parameter}'"
                )));
            }
            let map = match (map_spec, &cli.map_file) {
                (Some(s), _) => parse_map_spec(s)?,
                (None, Some(path)) => load_map_file(path)?,
                (None, None) => {
                    return Err(Error::InvalidInput(
                        "iso-witness sweeps need --map or --map-file".into(),
                    ))
                }
            };
            let d = map.dim();
            let header: Vec<String> = ["f", "witness_lambda_min", "psd", "seed"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let mut rows = Vec::with_capacity(points.len());
            for &f in &points {
                let state = pcmap::entanglement::isotropic_state(d, f)?;
                let lam = witness_with_map(&state, &map)?;
                rows.push(vec![
                    format_float(f),
                    format_float(lam),
                    (lam >= -cli.tol).to_string(),
                    seed.clone(),
                ]);
            }
            let threshold = match isotropic_threshold(&map, d, lo, hi) {
                Ok(t) => format_float(t),
                Err(_) => "none".to_string(),
            };
            let summary = vec![("psd_boundary".to_string(), threshold)];
            sweep_outputs(cli, header, rows, summary)
        }
        other => Err(Error::InvalidInput(format!(
            "unknown sweep family '{other}' (expected lambda, omega, or iso-witness)"
        ))),
    }
}

fn cmd_witness(cli: &Cli, config: &RunConfig, spec: Option<&str>) -> Result<ExitCode> {
    let state = resolve_state(cli, spec)?;
    let bank = default_classification_bank(cli.seed)?;
    let classification = classify_new_hierarchy(&state, &bank)?;
    let cert = classification_certificate(&state, &bank, &classification, config)?;
    emit_certificate(cli, &cert)?;

    println!(
        "state: {}x{} bipartite, verdict {}",
        state.dim_a(),
        state.dim_b(),
        cert.verdict
    );
    let mut outside = false;
    for l in &classification.levels {
        match l.verdict {
            LevelVerdict::Outside => {
                outside = true;
                let (label, value) = l.witness.as_ref().expect("outside levels carry a witness");
                println!(
                    "level {}: OUTSIDE (witness {} gives lambda_min = {})",
                    l.level,
                    label,
                    format_float(*value)
                );
            }
            LevelVerdict::Consistent => println!("level {}: CONSISTENT", l.level),
        }
    }
    Ok(if outside {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_canonicalize(cli: &Cli, config: &RunConfig, files: &[PathBuf]) -> Result<ExitCode> {
    if files.len() != 3 {
        return Err(Error::InvalidInput(
            "canonicalize takes exactly three state files".into(),
        ));
    }
    let mut rhos: Vec<DensityOperator> = Vec::with_capacity(3);
    for path in files {
        let state = load_state_file(path)?;
        if state.dim_a() * state.dim_b() != 2 {
            return Err(Error::InvalidInput(format!(
                "{}: canonicalization needs single-qubit densities (total dimension 2)",
                path.display()
            )));
        }
        rhos.push(state.rho().clone());
    }
    let cert = canonicalization_certificate([&rhos[0], &rhos[1], &rhos[2]], config)?;
    emit_certificate(cli, &cert)?;
    println!("p = {}", format_float(cert.values["p"]));
    let u = &cert.aux["unitary"];
    for i in 0..u.rows {
        let row: Vec<String> = (0..u.cols)
            .map(|j| {
                let e = u.entries[i * u.cols + j];
                format!("{}{}{}i", format_float(e[0]), if e[1] < 0.0 { "" } else { "+" }, format_float(e[1]))
            })
            .collect();
        println!("U[{i}] = [{}]", row.join(", "));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(file: &Path) -> Result<ExitCode> {
    let cert = load_certificate(file)?;
    let outcome = replay(&cert)?;
    for c in &outcome.checks {
        println!(
            "{}: recorded {} recomputed {}",
            c.name,
            format_float(c.recorded),
            format_float(c.recomputed)
        );
    }
    if outcome.passed {
        println!("replay: pass ({} checks)", outcome.checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &outcome.failures {
            println!("mismatch {f}");
        }
        println!("replay: FAIL");
        Ok(ExitCode::from(1))
    }
}
