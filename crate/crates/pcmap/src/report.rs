//! Replayable JSON certificates, atomic file output, CSV sweep tables, and
//! the textual map/state specs used by the command line.
//!
//! A certificate stores its inputs as full matrices (row-major `[re, im]`
//! pairs, shortest round-trip floats, so parsing returns the exact bits)
//! together with every extremal value the run produced. `replay`
//! recomputes those values from the stored data alone — no RNG — and
//! passes when each agrees within 1e-8. Unknown JSON fields and unknown
//! schema versions are rejected outright.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contractivity::{
    canonicalize_triple, contraction_gap, extension_feasibility, ContractivityCertificate,
};
use crate::entanglement::{
    assess_levels, witness_with_map, BipartiteState, CertifiedMap, HierarchyClassification,
    LevelVerdict,
};
use crate::maps::{
    lambda_family, omega_family, phi_p_family, restrict, transposition, QuantumMap,
};
use crate::operator::{cx, sigma_x, sigma_y, CMatrix, DensityOperator, HermitianOperator};
use crate::positivity::{kadison_margin, schwarz_margin, PositivityVerdict, VerdictKind, Witness};
use crate::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";
pub const REPLAY_TOL: f64 = 1e-8;

/// Dense complex matrix as stored in artifacts: row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixData {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                entries.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.entries.len() != self.rows * self.cols || self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix data claims {}x{} but holds {} entries",
                self.rows,
                self.cols,
                self.entries.len()
            )));
        }
        if self.entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix data holds non-finite entries".into()));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let e = self.entries[i * self.cols + j];
            cx(e[0], e[1])
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Snapshot of the knobs a run was started with; embedded in every
/// artifact so the provenance travels with the numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub restarts: usize,
    pub iters: usize,
    pub tol: f64,
    pub out: Option<String>,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.iters == 0 {
            return Err(Error::InvalidInput("budgets must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 16,
            iters: 150,
            tol: 1e-9,
            out: None,
            format: OutputFormat::Json,
        }
    }
}

/// Witness payload: the operators a verdict points at.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WitnessData {
    pub states: Vec<MatrixData>,
    pub coefficients: Vec<MatrixData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRecord {
    pub level: usize,
    pub verdict: String,
    pub witness_label: Option<String>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub value: Option<f64>,
}

/// One self-contained, replayable record of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub schema_version: String,
    pub operation: String,
    /// Named input matrices: map superoperators, state matrices, the
    /// density operators of a triple.
    pub inputs: BTreeMap<String, MatrixData>,
    /// Named auxiliary operators produced by the run (canonical unitary,
    /// extremal Schwarz/Kadison points, positivity eigenvector).
    pub aux: BTreeMap<String, MatrixData>,
    /// Scalar inputs (dimensions, levels, family parameters).
    pub parameters: BTreeMap<String, f64>,
    pub verdict: String,
    pub witness: Option<WitnessData>,
    /// Every extremal scalar the run produced; replay recomputes each.
    pub values: BTreeMap<String, f64>,
    /// (p, margin) pairs when a certification grid was involved.
    pub grid: Option<Vec<[f64; 2]>>,
    pub levels: Option<Vec<LevelRecord>>,
    pub notes: Vec<String>,
    pub config: RunConfig,
}

impl Certificate {
    fn shell(operation: &str, verdict: String, config: &RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            operation: operation.to_string(),
            inputs: BTreeMap::new(),
            aux: BTreeMap::new(),
            parameters: BTreeMap::new(),
            verdict,
            witness: None,
            values: BTreeMap::new(),
            grid: None,
            levels: None,
            notes: Vec::new(),
            config: config.clone(),
        }
    }
}

fn witness_data(states: &[CMatrix], coefficients: &[CMatrix]) -> WitnessData {
    WitnessData {
        states: states.iter().map(MatrixData::from_matrix).collect(),
        coefficients: coefficients.iter().map(MatrixData::from_matrix).collect(),
    }
}

/// Certificate for a single contraction-level verdict (violation search,
/// canonical-subspace check, or the grid certification route).
pub fn contraction_certificate(
    map: &QuantumMap,
    cert: &ContractivityCertificate,
    config: &RunConfig,
) -> Certificate {
    let mut out = Certificate::shell("contraction_check", cert.verdict.as_str().to_string(), config);
    out.inputs
        .insert("map_superop".into(), MatrixData::from_matrix(map.superop()));
    out.parameters.insert("dim".into(), map.dim() as f64);
    out.parameters.insert("level".into(), cert.k as f64);
    if let Some(w) = &cert.witness {
        out.witness = Some(witness_data(&w.states, &w.coefficients));
        out.values.insert("lhs".into(), cert.lhs);
        out.values.insert("rhs".into(), cert.rhs);
    }
    out.grid = cert
        .provenance
        .grid
        .as_ref()
        .map(|g| g.iter().map(|&(p, m)| [p, m]).collect());
    out.notes = cert.provenance.notes.clone();
    out.notes.push(format!("map: {}", map.label()));
    out
}

/// Composite certificate for `analyze`: per-level verdicts plus the exact
/// CP test and the sampled positivity/Schwarz/Kadison margins, each pinned
/// to its extremal point so everything is replayable.
#[allow(clippy::too_many_arguments)]
pub fn analysis_certificate(
    map: &QuantumMap,
    scan: &[ContractivityCertificate],
    cp: &PositivityVerdict,
    positivity: &PositivityVerdict,
    schwarz: Option<&PositivityVerdict>,
    kadison: Option<&PositivityVerdict>,
    config: &RunConfig,
) -> Certificate {
    // headline verdict: the lowest violated level, if any
    let verdict = scan
        .iter()
        .find(|c| c.verdict == VerdictKind::CertifiedViolation)
        .map(|c| format!("VIOLATION_AT_LEVEL_{}", c.k))
        .unwrap_or_else(|| "NO_VIOLATION_FOUND".to_string());
    let mut out = Certificate::shell("analyze", verdict, config);
    out.inputs
        .insert("map_superop".into(), MatrixData::from_matrix(map.superop()));
    out.parameters.insert("dim".into(), map.dim() as f64);
    out.levels = Some(
        scan.iter()
            .map(|c| LevelRecord {
                level: c.k,
                verdict: c.verdict.as_str().to_string(),
                witness_label: None,
                lhs: c.witness.as_ref().map(|_| c.lhs),
                rhs: c.witness.as_ref().map(|_| c.rhs),
                value: None,
            })
            .collect(),
    );
    if let Some(first) = scan
        .iter()
        .find(|c| c.verdict == VerdictKind::CertifiedViolation && c.witness.is_some())
    {
        let w = first.witness.as_ref().unwrap();
        out.witness = Some(witness_data(&w.states, &w.coefficients));
        out.parameters.insert("witness_level".into(), first.k as f64);
        out.values.insert("witness_lhs".into(), first.lhs);
        out.values.insert("witness_rhs".into(), first.rhs);
    }
    out.values.insert("cp_lambda_min".into(), cp.value);
    if let Some(Witness::State(psi)) = &positivity.witness {
        let row = CMatrix::from_fn(1, psi.amplitudes().len(), |_, j| psi.amplitudes()[j]);
        out.aux
            .insert("positivity_state".into(), MatrixData::from_matrix(&row));
        out.values.insert("positivity_value".into(), positivity.value);
    }
    if let Some(s) = schwarz {
        if let Some(Witness::Operator(x)) = &s.witness {
            out.aux.insert("schwarz_x".into(), MatrixData::from_matrix(x));
            out.values.insert("schwarz_margin".into(), s.value);
        }
    }
    if let Some(kk) = kadison {
        if let Some(Witness::Operator(x)) = &kk.witness {
            out.aux.insert("kadison_x".into(), MatrixData::from_matrix(x));
            out.values.insert("kadison_margin".into(), kk.value);
        }
    }
    for c in scan {
        for n in &c.provenance.notes {
            out.notes.push(format!("level {}: {}", c.k, n));
        }
    }
    out.notes.push(format!("map: {}", map.label()));
    out
}

/// Certificate for the dual-hierarchy classification of a state against a
/// bank of certified maps.
pub fn classification_certificate(
    state: &BipartiteState,
    bank: &[CertifiedMap],
    classification: &HierarchyClassification,
    config: &RunConfig,
) -> Result<Certificate> {
    let outside = classification
        .levels
        .iter()
        .filter(|l| l.verdict == LevelVerdict::Outside)
        .map(|l| l.level)
        .max();
    let verdict = match outside {
        Some(k) => format!("OUTSIDE_LEVEL_{}", k),
        None => "CONSISTENT".to_string(),
    };
    let mut out = Certificate::shell("classify", verdict, config);
    out.inputs
        .insert("state".into(), MatrixData::from_matrix(state.matrix()));
    out.parameters.insert("dim_a".into(), state.dim_a() as f64);
    out.parameters.insert("dim_b".into(), state.dim_b() as f64);
    for (i, entry) in bank.iter().enumerate() {
        out.inputs.insert(
            format!("bank_{i}"),
            MatrixData::from_matrix(entry.map().superop()),
        );
        out.parameters
            .insert(format!("bank_{i}_level"), entry.level() as f64);
        out.values.insert(
            format!("bank_{i}_lambda_min"),
            witness_with_map(state, entry.map())?,
        );
        out.notes.push(format!(
            "bank_{i} = {} (level {}; {})",
            entry.map().label(),
            entry.level(),
            entry.justification()
        ));
    }
    out.levels = Some(
        classification
            .levels
            .iter()
            .map(|l| LevelRecord {
                level: l.level,
                verdict: match l.verdict {
                    LevelVerdict::Outside => "OUTSIDE".to_string(),
                    LevelVerdict::Consistent => "CONSISTENT".to_string(),
                },
                witness_label: l.witness.as_ref().map(|(label, _)| label.clone()),
                lhs: None,
                rhs: None,
                value: l.witness.as_ref().map(|(_, v)| *v),
            })
            .collect(),
    );
    out.notes.extend(classification.notes.iter().cloned());
    Ok(out)
}

/// Certificate for the canonical form of a density-operator triple.
pub fn canonicalization_certificate(
    rhos: [&DensityOperator; 3],
    config: &RunConfig,
) -> Result<Certificate> {
    let triple = canonicalize_triple(rhos[0], rhos[1], rhos[2])?;
    let mut out = Certificate::shell("canonicalize", "CANONICALIZED".to_string(), config);
    for (i, r) in rhos.iter().enumerate() {
        out.inputs
            .insert(format!("rho_{}", i + 1), MatrixData::from_matrix(r.matrix()));
    }
    out.aux.insert(
        "unitary".into(),
        MatrixData::from_matrix(triple.unitary().entries()),
    );
    out.values.insert("p".into(), triple.p());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ReplayCheck {
    pub name: String,
    pub recorded: f64,
    pub recomputed: f64,
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub passed: bool,
    pub checks: Vec<ReplayCheck>,
    pub failures: Vec<String>,
}

fn param_usize(cert: &Certificate, key: &str) -> Result<usize> {
    let v = *cert
        .parameters
        .get(key)
        .ok_or_else(|| Error::Replay(format!("missing parameter '{key}'")))?;
    if v < 0.5 || v.fract() != 0.0 {
        return Err(Error::Replay(format!("parameter '{key}' = {v} is not a positive integer")));
    }
    Ok(v as usize)
}

fn input_matrix(cert: &Certificate, key: &str) -> Result<CMatrix> {
    cert.inputs
        .get(key)
        .ok_or_else(|| Error::Replay(format!("missing input '{key}'")))?
        .to_matrix()
}

fn rebuild_map(cert: &Certificate, key: &str, dim_key: &str) -> Result<QuantumMap> {
    let dim = param_usize(cert, dim_key)?;
    QuantumMap::new(dim, input_matrix(cert, key)?, "replayed")
}

fn witness_matrices(w: &WitnessData) -> Result<(Vec<CMatrix>, Vec<CMatrix>)> {
    let states = w
        .states
        .iter()
        .map(|m| m.to_matrix())
        .collect::<Result<Vec<_>>>()?;
    let coefficients = w
        .coefficients
        .iter()
        .map(|m| m.to_matrix())
        .collect::<Result<Vec<_>>>()?;
    Ok((states, coefficients))
}

/// Recompute every value a certificate records, from the stored inputs
/// alone, and compare within 1e-8. No randomness is involved: all the
/// underlying evaluations are deterministic functions of the stored data.
pub fn replay(cert: &Certificate) -> Result<ReplayOutcome> {
    if cert.schema_version != SCHEMA_VERSION {
        return Err(Error::Replay(format!(
            "unsupported schema version '{}'",
            cert.schema_version
        )));
    }
    let mut checks: Vec<ReplayCheck> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let mut push = |name: &str, recorded: f64, recomputed: f64, failures: &mut Vec<String>| {
        if (recorded - recomputed).abs() > REPLAY_TOL {
            failures.push(format!(
                "{name}: recorded {recorded:.15e}, recomputed {recomputed:.15e}"
            ));
        }
        checks.push(ReplayCheck {
            name: name.to_string(),
            recorded,
            recomputed,
        });
    };

    match cert.operation.as_str() {
        "contraction_check" => {
            let map = rebuild_map(cert, "map_superop", "dim")?;
            if let Some(w) = &cert.witness {
                let (states, coeffs) = witness_matrices(w)?;
                let (lhs, rhs) = contraction_gap(&map, &coeffs, &states)?;
                let rec_lhs = *cert
                    .values
                    .get("lhs")
                    .ok_or_else(|| Error::Replay("missing recorded lhs".into()))?;
                let rec_rhs = *cert
                    .values
                    .get("rhs")
                    .ok_or_else(|| Error::Replay("missing recorded rhs".into()))?;
                push("lhs", rec_lhs, lhs, &mut failures);
                push("rhs", rec_rhs, rhs, &mut failures);
                let violated = lhs - rhs > 1e-9;
                let recorded_violation = cert.verdict == "CERTIFIED_VIOLATION";
                if violated != recorded_violation {
                    failures.push(format!(
                        "verdict: recorded {}, recomputed gap {}",
                        cert.verdict,
                        lhs - rhs
                    ));
                }
            } else if let Some(grid) = &cert.grid {
                // membership came from the extension grid: recompute margins
                let basis = |p: f64| -> Result<[HermitianOperator; 3]> {
                    Ok([
                        HermitianOperator::new(sigma_x())?,
                        HermitianOperator::new(sigma_y())?,
                        HermitianOperator::new(CMatrix::from_diagonal(
                            &nalgebra::DVector::from_vec(vec![cx(p, 0.0), cx(1.0 - p, 0.0)]),
                        ))?,
                    ])
                };
                for (i, &[p, margin]) in grid.iter().enumerate() {
                    let ext = extension_feasibility(&restrict(&map, &basis(p)?)?, None)?;
                    push(
                        &format!("grid_margin_{i}"),
                        margin,
                        ext.best_lambda_min,
                        &mut failures,
                    );
                }
            } else {
                return Err(Error::Replay(
                    "contraction certificate carries neither witness nor grid".into(),
                ));
            }
        }
        "analyze" => {
            let map = rebuild_map(cert, "map_superop", "dim")?;
            for (name, recorded) in &cert.values {
                let recomputed = match name.as_str() {
                    "cp_lambda_min" => map.choi().lambda_min()?,
                    "positivity_value" => {
                        let row = cert
                            .aux
                            .get("positivity_state")
                            .ok_or_else(|| Error::Replay("missing positivity_state".into()))?
                            .to_matrix()?;
                        let choi = map.choi().entries().clone();
                        let psi = row.transpose();
                        (psi.adjoint() * choi * &psi)[(0, 0)].re
                    }
                    "schwarz_margin" => {
                        let x = cert
                            .aux
                            .get("schwarz_x")
                            .ok_or_else(|| Error::Replay("missing schwarz_x".into()))?
                            .to_matrix()?;
                        schwarz_margin(&map, &x)?
                    }
                    "kadison_margin" => {
                        let x = cert
                            .aux
                            .get("kadison_x")
                            .ok_or_else(|| Error::Replay("missing kadison_x".into()))?
                            .to_matrix()?;
                        kadison_margin(&map, &x)?
                    }
                    "witness_lhs" | "witness_rhs" => {
                        let w = cert
                            .witness
                            .as_ref()
                            .ok_or_else(|| Error::Replay("missing witness".into()))?;
                        let (states, coeffs) = witness_matrices(w)?;
                        let (lhs, rhs) = contraction_gap(&map, &coeffs, &states)?;
                        if name == "witness_lhs" {
                            lhs
                        } else {
                            rhs
                        }
                    }
                    other => {
                        return Err(Error::Replay(format!("unknown analyze value '{other}'")))
                    }
                };
                push(name, *recorded, recomputed, &mut failures);
            }
        }
        "classify" => {
            let da = param_usize(cert, "dim_a")?;
            let db = param_usize(cert, "dim_b")?;
            let state = BipartiteState::from_matrix((da, db), input_matrix(cert, "state")?)?;
            let mut evaluated: Vec<(usize, String, f64)> = Vec::new();
            for i in 0.. {
                let key = format!("bank_{i}");
                if !cert.inputs.contains_key(&key) {
                    break;
                }
                let map = QuantumMap::new(db, input_matrix(cert, &key)?, "replayed")?;
                let level = param_usize(cert, &format!("bank_{i}_level"))?;
                let lam = witness_with_map(&state, &map)?;
                let recorded = *cert
                    .values
                    .get(&format!("bank_{i}_lambda_min"))
                    .ok_or_else(|| Error::Replay(format!("missing bank_{i}_lambda_min")))?;
                push(&format!("bank_{i}_lambda_min"), recorded, lam, &mut failures);
                evaluated.push((level, key, lam));
            }
            if let Some(records) = &cert.levels {
                let fresh = assess_levels(db, &evaluated);
                for (rec, new) in records.iter().zip(&fresh) {
                    let verdict = match new.verdict {
                        LevelVerdict::Outside => "OUTSIDE",
                        LevelVerdict::Consistent => "CONSISTENT",
                    };
                    if rec.verdict != verdict {
                        failures.push(format!(
                            "level {}: recorded {}, recomputed {}",
                            rec.level, rec.verdict, verdict
                        ));
                    }
                }
            }
        }
        "canonicalize" => {
            let mut rhos = Vec::with_capacity(3);
            for i in 1..=3 {
                rhos.push(DensityOperator::new(input_matrix(cert, &format!("rho_{i}"))?)?);
            }
            let triple = canonicalize_triple(&rhos[0], &rhos[1], &rhos[2])?;
            let recorded = *cert
                .values
                .get("p")
                .ok_or_else(|| Error::Replay("missing recorded p".into()))?;
            push("p", recorded, triple.p(), &mut failures);
            if let Some(u) = cert.aux.get("unitary") {
                let recomputed = triple.unitary().entries().clone();
                let stored = u.to_matrix()?;
                if stored.nrows() != 2 || stored.ncols() != 2 {
                    failures.push("unitary: wrong shape".into());
                } else {
                    let dev = (stored - recomputed).map(|e| e.norm()).max();
                    if dev > REPLAY_TOL {
                        failures.push(format!("unitary: max deviation {dev:.3e}"));
                    }
                }
            }
        }
        other => return Err(Error::Replay(format!("unknown operation '{other}'"))),
    }

    Ok(ReplayOutcome {
        passed: failures.is_empty(),
        checks,
        failures,
    })
}

/// Write bytes under `path` atomically: a temp file in the same directory
/// is renamed into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("invalid output path {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn certificate_to_bytes(cert: &Certificate) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(cert)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn save_certificate(path: &Path, cert: &Certificate) -> Result<()> {
    write_atomic(path, &certificate_to_bytes(cert)?)
}

pub fn load_certificate(path: &Path) -> Result<Certificate> {
    let bytes = fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Shortest round-trip decimal form (Rust's float Display), as used in all
/// CSV output.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}

/// Write a CSV table atomically. Every row must match the header width.
pub fn write_csv_atomic(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::InvalidInput(format!(
                "CSV row width {} does not match header width {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("CSV writer: {e}")))?;
    write_atomic(path, &bytes)
}

/// Parse a textual map spec: `lambda:a=0.6`, `omega:eps=0.55`,
/// `phi_p:d=3,p=1.5`, `transpose:d=2`.
pub fn parse_map_spec(spec: &str) -> Result<QuantumMap> {
    let (family, args) = split_spec(spec)?;
    match family {
        "lambda" => lambda_family(require_arg(&args, "a", spec)?),
        "omega" => omega_family(require_arg(&args, "eps", spec)?),
        "phi_p" => {
            let d = require_dim(&args, "d", spec)?;
            phi_p_family(d, require_arg(&args, "p", spec)?)
        }
        "transpose" => transposition(require_dim(&args, "d", spec)?),
        other => Err(Error::InvalidInput(format!(
            "unknown map family '{other}' in spec '{spec}'"
        ))),
    }
}

/// Parse a textual state spec: `iso:d=2,f=0.8`.
pub fn parse_state_spec(spec: &str) -> Result<BipartiteState> {
    let (kind, args) = split_spec(spec)?;
    match kind {
        "iso" => crate::entanglement::isotropic_state(
            require_dim(&args, "d", spec)?,
            require_arg(&args, "f", spec)?,
        ),
        other => Err(Error::InvalidInput(format!(
            "unknown state kind '{other}' in spec '{spec}'"
        ))),
    }
}

fn split_spec(spec: &str) -> Result<(&str, BTreeMap<String, f64>)> {
    let (name, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidInput(format!("spec '{spec}' lacks a ':' separator")))?;
    let mut args = BTreeMap::new();
    for part in rest.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("malformed argument '{part}' in '{spec}'")))?;
        let parsed: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("non-numeric value '{value}' in '{spec}'")))?;
        if args.insert(key.trim().to_string(), parsed).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate argument '{key}' in '{spec}'"
            )));
        }
    }
    Ok((name.trim(), args))
}

fn require_arg(args: &BTreeMap<String, f64>, key: &str, spec: &str) -> Result<f64> {
    args.get(key)
        .copied()
        .ok_or_else(|| Error::InvalidInput(format!("spec '{spec}' needs '{key}='")))
}

fn require_dim(args: &BTreeMap<String, f64>, key: &str, spec: &str) -> Result<usize> {
    let v = require_arg(args, key, spec)?;
    if v < 1.0 || v.fract() != 0.0 || v > 64.0 {
        return Err(Error::InvalidInput(format!(
            "spec '{spec}': '{key}' must be a small positive integer"
        )));
    }
    Ok(v as usize)
}

/// JSON container for `--map-file`: an explicit superoperator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub schema_version: String,
    pub dim: usize,
    pub label: String,
    pub superop: MatrixData,
}

impl MapFile {
    pub fn to_map(&self) -> Result<QuantumMap> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported map file schema '{}'",
                self.schema_version
            )));
        }
        QuantumMap::new(self.dim, self.superop.to_matrix()?, self.label.clone())
    }

    pub fn from_map(map: &QuantumMap) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            dim: map.dim(),
            label: map.label().to_string(),
            superop: MatrixData::from_matrix(map.superop()),
        }
    }
}

/// JSON container for `--state-file`: a bipartite density matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub schema_version: String,
    pub dims: [usize; 2],
    pub matrix: MatrixData,
}

impl StateFile {
    pub fn to_state(&self) -> Result<BipartiteState> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported state file schema '{}'",
                self.schema_version
            )));
        }
        BipartiteState::from_matrix((self.dims[0], self.dims[1]), self.matrix.to_matrix()?)
    }

    pub fn from_state(state: &BipartiteState) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            dims: [state.dim_a(), state.dim_b()],
            matrix: MatrixData::from_matrix(state.matrix()),
        }
    }
}

pub fn load_map_file(path: &Path) -> Result<QuantumMap> {
    let bytes = fs::read(path)?;
    let file: MapFile = serde_json::from_slice(&bytes)?;
    file.to_map()
}

pub fn load_state_file(path: &Path) -> Result<BipartiteState> {
    let bytes = fs::read(path)?;
    let file: StateFile = serde_json::from_slice(&bytes)?;
    file.to_state()
}
