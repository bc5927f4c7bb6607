//! The state side of the hierarchy: Schmidt rank and Schmidt number,
//! isotropic states, witnessing with k-positive maps, and classification
//! against the classes dual to the partial-contraction levels.
//!
//! A bipartite state lies in the level-k dual class when `(id ⊗ Φ)[ρ]` is
//! PSD for every level-k map Φ. Because the map classes shrink as k grows,
//! these state classes grow: a witness excluding ρ at level k also excludes
//! it at every lower level. The classification here is one-sided — a finite
//! bank of certified maps can prove OUTSIDE but never membership.

use rand_chacha::ChaCha8Rng;

use crate::contractivity::ContractivityCertificate;
use crate::maps::{phi_p_family, transposition, QuantumMap};
use crate::operator::{
    approx_eq, cx, eigh, hermitian_part, identity, matrix_unit, rng_for, CMatrix, CVector,
    DensityOperator, PureStateVector,
};
use crate::positivity::VerdictKind;
use crate::{Error, Result};

const WITNESS_TOL: f64 = 1e-9;

/// A density operator on `H_A ⊗ H_B`, optionally carrying the pure-state
/// mixture it was built from. The record is what makes honest Schmidt
/// number upper bounds possible for constructed states.
#[derive(Debug, Clone)]
pub struct BipartiteState {
    dims: (usize, usize),
    rho: DensityOperator,
    decomposition: Option<Vec<(f64, PureStateVector)>>,
}

impl BipartiteState {
    pub fn new(dims: (usize, usize), rho: DensityOperator) -> Result<Self> {
        if dims.0 == 0 || dims.1 == 0 || dims.0 * dims.1 != rho.dim() {
            return Err(Error::DimensionMismatch(format!(
                "dims {}x{} do not factor the matrix dimension {}",
                dims.0,
                dims.1,
                rho.dim()
            )));
        }
        Ok(Self {
            dims,
            rho,
            decomposition: None,
        })
    }

    pub fn from_matrix(dims: (usize, usize), matrix: CMatrix) -> Result<Self> {
        Self::new(dims, DensityOperator::new(matrix)?)
    }

    /// Build Σ w_i |ψ_i⟩⟨ψ_i| and remember the components.
    pub fn from_mixture(
        dims: (usize, usize),
        components: Vec<(f64, PureStateVector)>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("mixture needs at least one component".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 || components.iter().any(|(w, _)| *w < -1e-12) {
            return Err(Error::InvalidInput(
                "mixture weights must be nonnegative and sum to 1".into(),
            ));
        }
        let n = dims.0 * dims.1;
        let mut m = CMatrix::zeros(n, n);
        for (w, psi) in &components {
            if psi.dims() != dims {
                return Err(Error::DimensionMismatch(
                    "mixture component dims differ from the state dims".into(),
                ));
            }
            m += psi.projector().map(|e| e * cx(*w, 0.0));
        }
        let mut state = Self::new(dims, DensityOperator::new(hermitian_part(&m))?)?;
        state.decomposition = Some(components);
        Ok(state)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim_a(&self) -> usize {
        self.dims.0
    }

    pub fn dim_b(&self) -> usize {
        self.dims.1
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn matrix(&self) -> &CMatrix {
        self.rho.matrix()
    }

    pub fn decomposition(&self) -> Option<&[(f64, PureStateVector)]> {
        self.decomposition.as_deref()
    }
}

/// Number of Schmidt coefficients above `tol` (pass 1e-10 unless the state
/// arrives with larger noise).
pub fn schmidt_rank(psi: &PureStateVector, tol: f64) -> usize {
    psi.schmidt_coefficients().iter().filter(|&&s| s > tol).count()
}

/// Projector onto the maximally entangled state (1/√d) Σ_j |jj⟩.
pub fn max_entangled_projector(d: usize) -> CMatrix {
    let mut p = CMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for k in 0..d {
            p += matrix_unit(d, j, k)
                .kronecker(&matrix_unit(d, j, k))
                .map(|e| e / cx(d as f64, 0.0));
        }
    }
    p
}

/// ρ_f = f·P⁺ + (1−f)·(1 − P⁺)/(d²−1). Spectrum: f once and
/// (1−f)/(d²−1) with multiplicity d²−1.
pub fn isotropic_state(d: usize, f: f64) -> Result<BipartiteState> {
    if d < 2 {
        return Err(Error::InvalidInput("isotropic states need d >= 2".into()));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidInput(format!(
            "isotropic fidelity {} outside [0, 1]",
            f
        )));
    }
    let p = max_entangled_projector(d);
    let rest = (identity(d * d) - &p).map(|e| e * cx((1.0 - f) / ((d * d - 1) as f64), 0.0));
    let m = p.map(|e| e * cx(f, 0.0)) + rest;
    BipartiteState::from_matrix((d, d), m)
}

/// Fidelity ⟨P⁺|ρ|P⁺⟩ if the state is isotropic (within 1e-10), else None.
pub fn isotropic_fidelity(state: &BipartiteState) -> Option<f64> {
    if state.dim_a() != state.dim_b() {
        return None;
    }
    let d = state.dim_a();
    let p = max_entangled_projector(d);
    let f = (state.matrix() * &p).trace().re;
    if !(-1e-10..=1.0 + 1e-10).contains(&f) {
        return None;
    }
    let f = f.clamp(0.0, 1.0);
    let reference = isotropic_state(d, f).ok()?;
    if approx_eq(state.matrix(), reference.matrix(), 1e-10) {
        Some(f)
    } else {
        None
    }
}

/// Image of the state under `id ⊗ Φ` with Φ acting on the B factor.
pub fn map_image(state: &BipartiteState, map: &QuantumMap) -> Result<CMatrix> {
    if map.dim() != state.dim_b() {
        return Err(Error::DimensionMismatch(format!(
            "map dimension {} does not match the B factor {}",
            map.dim(),
            state.dim_b()
        )));
    }
    let lifted = map.tensor_with_identity(state.dim_a())?;
    Ok(hermitian_part(&lifted.apply_matrix(state.matrix())?))
}

/// λ_min of (id ⊗ Φ)[ρ]. A value below −1e-9 witnesses that ρ lies outside
/// the state class dual to the map's certified level.
pub fn witness_with_map(state: &BipartiteState, map: &QuantumMap) -> Result<f64> {
    let (vals, _) = eigh(&map_image(state, map)?)?;
    Ok(vals[0])
}

/// Smallest fidelity in (lo, hi) at which (id⊗Φ)[ρ_f] stops being PSD,
/// located by bisection to width 1e-8. The endpoints must straddle the
/// boundary: PSD at lo, not PSD at hi.
pub fn isotropic_threshold(map: &QuantumMap, d: usize, lo: f64, hi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(Error::InvalidInput(format!(
            "threshold bracket [{lo}, {hi}] is not an increasing pair in [0, 1]"
        )));
    }
    let probe = |f: f64| -> Result<f64> { witness_with_map(&isotropic_state(d, f)?, map) };
    if probe(lo)? < 0.0 {
        return Err(Error::Precondition(format!(
            "image already has a negative eigenvalue at f = {lo}"
        )));
    }
    if probe(hi)? >= 0.0 {
        return Err(Error::Precondition(format!(
            "image is still PSD at f = {hi}; no threshold inside the bracket"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A map admitted into a classification bank: the level it is certified
/// for, plus either a membership certificate from the contraction module
/// or a recorded analytic justification.
#[derive(Debug, Clone)]
pub struct CertifiedMap {
    map: QuantumMap,
    level: usize,
    certificate: Option<ContractivityCertificate>,
    justification: String,
}

impl CertifiedMap {
    /// Admit a map on the strength of a CERTIFIED_MEMBER certificate at
    /// its level.
    pub fn from_certificate(map: QuantumMap, certificate: ContractivityCertificate) -> Result<Self> {
        if certificate.verdict != VerdictKind::CertifiedMember {
            return Err(Error::Precondition(format!(
                "bank map '{}' lacks a membership certificate (verdict {})",
                map.label(),
                certificate.verdict.as_str()
            )));
        }
        let level = certificate.k;
        Ok(Self {
            map,
            level,
            certificate: Some(certificate),
            justification: "membership certificate from the contraction search".into(),
        })
    }

    /// Admit a positive trace-preserving map at level 2: such maps contract
    /// the trace norm on the span of any two density operators. Positivity
    /// itself must be argued by the caller; the justification is recorded
    /// verbatim.
    pub fn from_positive_tp(map: QuantumMap, justification: impl Into<String>) -> Result<Self> {
        if !map.is_trace_preserving() {
            return Err(Error::NotTracePreserving(format!(
                "bank map '{}' must be trace-preserving",
                map.label()
            )));
        }
        Ok(Self {
            map,
            level: 2,
            certificate: None,
            justification: justification.into(),
        })
    }

    pub fn map(&self) -> &QuantumMap {
        &self.map
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn certificate(&self) -> Option<&ContractivityCertificate> {
        self.certificate.as_ref()
    }

    pub fn justification(&self) -> &str {
        &self.justification
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelVerdict {
    /// Some bank map certified at level ≥ k produced a negative eigenvalue.
    Outside,
    /// No bank map excludes the state at this level; one-sided.
    Consistent,
}

#[derive(Debug, Clone)]
pub struct LevelAssessment {
    pub level: usize,
    pub verdict: LevelVerdict,
    /// (map label, λ_min) of the strongest witness, when Outside.
    pub witness: Option<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct HierarchyClassification {
    pub levels: Vec<LevelAssessment>,
    pub notes: Vec<String>,
}

impl HierarchyClassification {
    pub fn level(&self, k: usize) -> Option<&LevelAssessment> {
        self.levels.iter().find(|l| l.level == k)
    }
}

/// Classify a state against the dual hierarchy using a bank of certified
/// maps. A level-ℓ map also belongs to every lower level, so it witnesses
/// exclusion at each k ≤ ℓ; the per-level verdicts therefore inherit
/// Outside downward automatically. The top level k = d² holds for every
/// state and is reported Consistent regardless of the bank.
pub fn classify_new_hierarchy(
    state: &BipartiteState,
    bank: &[CertifiedMap],
) -> Result<HierarchyClassification> {
    let d = state.dim_b();
    if state.dim_a() != d {
        return Err(Error::DimensionMismatch(
            "classification expects equal A and B dimensions".into(),
        ));
    }
    if bank.is_empty() {
        return Err(Error::InvalidInput("empty classification bank".into()));
    }
    let top = d * d;
    let mut evaluated: Vec<(usize, String, f64)> = Vec::with_capacity(bank.len());
    for entry in bank {
        if entry.map.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "bank map '{}' has dimension {}, state factor has {}",
                entry.map.label(),
                entry.map.dim(),
                d
            )));
        }
        if entry.level == 0 || entry.level > top {
            return Err(Error::InvalidInput(format!(
                "bank map '{}' carries level {} outside 1..={}",
                entry.map.label(),
                entry.level,
                top
            )));
        }
        let lam = witness_with_map(state, &entry.map)?;
        evaluated.push((entry.level, entry.map.label().to_string(), lam));
    }
    let mut notes = vec![
        "Consistent verdicts are one-sided: the bank is finite".to_string(),
        "the top level holds identically for density operators".to_string(),
    ];
    if d == 2 {
        notes.push("levels 1 and 2 coincide for qubit maps".to_string());
    }
    Ok(HierarchyClassification {
        levels: assess_levels(d, &evaluated),
        notes,
    })
}

/// Per-level verdicts from a list of (certified level, label, λ_min)
/// evaluations. A level-ℓ map witnesses exclusion at every k ≤ ℓ; the top
/// level k = d² is Consistent for every density operator.
pub fn assess_levels(d: usize, evaluated: &[(usize, String, f64)]) -> Vec<LevelAssessment> {
    let top = d * d;
    let mut levels = Vec::with_capacity(top);
    for k in 1..=top {
        if k == top {
            levels.push(LevelAssessment {
                level: k,
                verdict: LevelVerdict::Consistent,
                witness: None,
            });
            continue;
        }
        // on qubits a level-1 witness is automatically a level-2 witness
        let effective = |lvl: usize| if d == 2 && lvl == 1 { 2 } else { lvl };
        let best = evaluated
            .iter()
            .filter(|(lvl, _, lam)| effective(*lvl) >= k && *lam < -WITNESS_TOL)
            .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
        match best {
            Some((_, label, lam)) => levels.push(LevelAssessment {
                level: k,
                verdict: LevelVerdict::Outside,
                witness: Some((label.clone(), *lam)),
            }),
            None => levels.push(LevelAssessment {
                level: k,
                verdict: LevelVerdict::Consistent,
                witness: None,
            }),
        }
    }
    levels
}

/// Default qubit classification bank: transposition and the reduction map
/// as positive trace-preserving level-2 entries, plus four level-3 members
/// certified on the spot. The boundary maps Λ_{2/3} and Ω_{1/2} matter:
/// their isotropic thresholds reach down to f = 3/4, which the interior
/// members (thresholds 5/6 and 29/36) cannot see.
pub fn default_classification_bank(seed: u64) -> Result<Vec<CertifiedMap>> {
    use crate::contractivity::certify_c3_covariant;
    use crate::maps::{lambda_family, omega_family};
    let mut bank = vec![
        CertifiedMap::from_positive_tp(
            transposition(2)?,
            "transposition is positive and trace-preserving",
        )?,
        CertifiedMap::from_positive_tp(
            phi_p_family(2, 1.0)?,
            "the reduction map is positive and trace-preserving",
        )?,
    ];
    for map in [
        lambda_family(0.6)?,
        omega_family(0.55)?,
        lambda_family(2.0 / 3.0)?,
        omega_family(0.5)?,
    ] {
        let cert = certify_c3_covariant(&map, 21, 4, seed)?;
        bank.push(CertifiedMap::from_certificate(map, cert)?);
    }
    Ok(bank)
}

/// k-positive witnesses for Schmidt number bounds: transposition at level 1
/// and the Φ_p family at the integer points p = k, which is k-positive but
/// not (k+1)-positive for k < d.
pub fn schmidt_witness_bank(d: usize) -> Result<Vec<(QuantumMap, usize)>> {
    if d < 2 {
        return Err(Error::InvalidInput("witness bank needs d >= 2".into()));
    }
    let mut bank = vec![(transposition(d)?, 1usize)];
    for k in 1..d {
        bank.push((phi_p_family(d, k as f64)?, k));
    }
    Ok(bank)
}

/// Best-effort search parameters for the Schmidt number upper bound.
#[derive(Debug, Clone, Copy)]
pub struct DecompositionSearch {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for DecompositionSearch {
    fn default() -> Self {
        Self {
            restarts: 4,
            steps: 1500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchmidtReport {
    pub lower_bound: usize,
    pub upper_bound: usize,
    /// (map label, λ_min) for each witness evaluated.
    pub witnesses: Vec<(String, f64)>,
    /// A decomposition achieving the upper bound, when one is known.
    pub decomposition: Option<Vec<(f64, PureStateVector)>>,
    pub notes: Vec<String>,
}

/// Two-sided Schmidt number bounds. Lower bounds are rigorous up to the
/// 1e-9 eigenvalue tolerance: a k-positive map with a negative image pins
/// SN ≥ k+1, and isotropic inputs additionally get the fidelity rule
/// (f > k/d forces SN ≥ k+1). Upper bounds come from an explicit
/// decomposition: the construction record if the state has one, otherwise
/// a bounded-rank mixture fitted by random local improvement; when neither
/// produces one, the trivial bound d is reported.
pub fn schmidt_number_bounds(
    state: &BipartiteState,
    bank: &[(QuantumMap, usize)],
    search: &DecompositionSearch,
) -> Result<SchmidtReport> {
    let d = state.dim_b();
    if state.dim_a() != d {
        return Err(Error::DimensionMismatch(
            "Schmidt number bounds expect equal A and B dimensions".into(),
        ));
    }
    let mut lower = 1usize;
    let mut witnesses = Vec::with_capacity(bank.len());
    let mut notes = Vec::new();
    for (map, k) in bank {
        if map.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "witness map '{}' has dimension {}",
                map.label(),
                map.dim()
            )));
        }
        let lam = witness_with_map(state, map)?;
        witnesses.push((map.label().to_string(), lam));
        if lam < -WITNESS_TOL {
            lower = lower.max(k + 1);
        }
    }
    if let Some(f) = isotropic_fidelity(state) {
        let mut k = 0usize;
        while k + 1 < d && f > (k + 1) as f64 / d as f64 + 1e-12 {
            k += 1;
        }
        if f > (d - 1) as f64 / d as f64 + 1e-12 {
            k = d - 1;
        }
        if k + 1 > lower {
            lower = k + 1;
            notes.push(format!(
                "isotropic fidelity {f} exceeds {k}/{d}, forcing the Schmidt number above {k}"
            ));
        }
    }

    let mut upper = d;
    let mut decomposition = None;
    if let Some(record) = state.decomposition() {
        let rank = record
            .iter()
            .filter(|(w, _)| *w > 1e-12)
            .map(|(_, psi)| schmidt_rank(psi, 1e-10))
            .max()
            .unwrap_or(1);
        upper = rank;
        decomposition = Some(record.to_vec());
        notes.push("upper bound read off the construction record".into());
    } else if lower < d {
        for r in lower.max(1)..d {
            if let Some(found) = fit_bounded_rank_mixture(state, r, search) {
                upper = r;
                decomposition = Some(found);
                notes.push(format!(
                    "upper bound from a fitted mixture of Schmidt-rank-{r} states"
                ));
                break;
            }
        }
        if decomposition.is_none() {
            notes.push("decomposition search failed; trivial upper bound reported".into());
        }
    }
    if upper < lower {
        return Err(Error::Precondition(format!(
            "bounds crossed (lower {lower}, upper {upper}); witness and decomposition disagree"
        )));
    }
    Ok(SchmidtReport {
        lower_bound: lower,
        upper_bound: upper,
        witnesses,
        decomposition,
        notes,
    })
}

/// Hill-climb a mixture of `2d²` rank-≤r pure states toward ρ. Success
/// means HS reconstruction residual below 1e-8.
fn fit_bounded_rank_mixture(
    state: &BipartiteState,
    r: usize,
    search: &DecompositionSearch,
) -> Option<Vec<(f64, PureStateVector)>> {
    let d = state.dim_b();
    let m = 2 * d * d;
    // per component: weight + r Schmidt terms of two d-vectors (re, im)
    let comp_len = 1 + r * 4 * d;
    let assemble = |theta: &[f64]| -> Option<(Vec<f64>, Vec<CVector>, CMatrix)> {
        let mut weights = Vec::with_capacity(m);
        let mut vectors = Vec::with_capacity(m);
        let mut mix = CMatrix::zeros(d * d, d * d);
        for c in 0..m {
            let chunk = &theta[c * comp_len..(c + 1) * comp_len];
            let w = chunk[0] * chunk[0];
            let mut psi = CVector::zeros(d * d);
            for term in 0..r {
                let base = 1 + term * 4 * d;
                for i in 0..d {
                    for j in 0..d {
                        let a = cx(chunk[base + 2 * i], chunk[base + 2 * i + 1]);
                        let b = cx(
                            chunk[base + 2 * d + 2 * j],
                            chunk[base + 2 * d + 2 * j + 1],
                        );
                        psi[i * d + j] += a * b;
                    }
                }
            }
            let norm = psi.norm();
            if norm < 1e-12 {
                return None;
            }
            psi /= cx(norm, 0.0);
            for i in 0..d * d {
                for j in 0..d * d {
                    mix[(i, j)] += psi[i] * psi[j].conj() * cx(w, 0.0);
                }
            }
            weights.push(w);
            vectors.push(psi);
        }
        let tr = mix.trace().re;
        if tr < 1e-12 {
            return None;
        }
        let mix = mix.map(|e| e / cx(tr, 0.0));
        let weights: Vec<f64> = weights.iter().map(|w| w / tr).collect();
        Some((weights, vectors, mix))
    };
    let objective = |theta: &[f64]| -> f64 {
        match assemble(theta) {
            Some((_, _, mix)) => (state.matrix() - mix).norm(),
            None => f64::INFINITY,
        }
    };
    for restart in 0..search.restarts {
        let mut rng = rng_for(search.seed, restart as u64);
        let mut theta: Vec<f64> = (0..m * comp_len)
            .map(|_| rand_gauss(&mut rng))
            .collect();
        let mut best = objective(&theta);
        let mut sigma = 0.3f64;
        for _ in 0..search.steps {
            let cand: Vec<f64> = theta
                .iter()
                .map(|t| t + sigma * rand_gauss(&mut rng))
                .collect();
            let val = objective(&cand);
            if val < best {
                best = val;
                theta = cand;
                sigma = (sigma * 1.2).min(0.5);
            } else {
                sigma = (sigma * 0.85).max(1e-7);
            }
            if best < 1e-9 {
                break;
            }
        }
        if best < 1e-8 {
            let (weights, vectors, _) = assemble(&theta)?;
            let mut out = Vec::with_capacity(m);
            for (w, v) in weights.into_iter().zip(vectors) {
                if w <= 1e-12 {
                    continue;
                }
                out.push((w, PureStateVector::new((d, d), v).ok()?));
            }
            return Some(out);
        }
    }
    None
}

fn rand_gauss(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    use rand_distr::StandardNormal;
    rng.sample(StandardNormal)
}

/// Mixture of `components` sampled product pure states with flat-Dirichlet
/// weights. The construction record makes the Schmidt number upper bound
/// exactly 1.
pub fn sample_separable(
    dims: (usize, usize),
    components: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BipartiteState> {
    use rand::Rng;
    if components == 0 {
        return Err(Error::InvalidInput("need at least one component".into()));
    }
    let (da, db) = dims;
    let mut raw: Vec<f64> = (0..components)
        .map(|_| -(rng.gen_range(1e-12..1.0f64)).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    for w in &mut raw {
        *w /= total;
    }
    let mut mix = Vec::with_capacity(components);
    for w in raw {
        let a = random_unit_vector(da, rng);
        let b = random_unit_vector(db, rng);
        let mut psi = CVector::zeros(da * db);
        for i in 0..da {
            for j in 0..db {
                psi[i * db + j] = a[i] * b[j];
            }
        }
        let norm = psi.norm();
        psi /= cx(norm, 0.0);
        mix.push((w, PureStateVector::new(dims, psi)?));
    }
    BipartiteState::from_mixture(dims, mix)
}

fn random_unit_vector(d: usize, rng: &mut ChaCha8Rng) -> CVector {
    let mut v = CVector::from_fn(d, |_, _| cx(rand_gauss(rng), rand_gauss(rng)));
    let n = v.norm();
    if n < 1e-12 {
        v = CVector::from_fn(d, |i, _| cx(if i == 0 { 1.0 } else { 0.0 }, 0.0));
    } else {
        v /= cx(n, 0.0);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contractivity::certify_c3_covariant;
    use crate::maps::{lambda_family, omega_family};
    use crate::operator::rng_from_seed;
    use approx::assert_abs_diff_eq;

    #[test]
    fn isotropic_spectrum_and_special_points() {
        let state = isotropic_state(2, 0.8).unwrap();
        let (vals, _) = eigh(state.matrix()).unwrap();
        assert_abs_diff_eq!(vals[3], 0.8, epsilon = 1e-12);
        for v in &vals[..3] {
            assert_abs_diff_eq!(*v, 0.2 / 3.0, epsilon = 1e-12);
        }

        let mixed = isotropic_state(2, 0.25).unwrap();
        assert!(approx_eq(
            mixed.matrix(),
            &identity(4).map(|e| e * cx(0.25, 0.0)),
            1e-12
        ));

        let plus = isotropic_state(3, 1.0).unwrap();
        assert!(approx_eq(plus.matrix(), &max_entangled_projector(3), 1e-12));

        assert!(isotropic_state(2, 1.2).is_err());
        assert!(isotropic_state(2, -0.1).is_err());
        assert!(isotropic_state(1, 0.5).is_err());
    }

    #[test]
    fn schmidt_rank_counts_coefficients() {
        let mut product = CVector::zeros(4);
        product[0] = cx(1.0, 0.0);
        assert_eq!(
            schmidt_rank(&PureStateVector::new((2, 2), product).unwrap(), 1e-10),
            1
        );

        let mut bell = CVector::zeros(4);
        bell[0] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        bell[3] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert_eq!(
            schmidt_rank(&PureStateVector::new((2, 2), bell).unwrap(), 1e-10),
            2
        );

        let mut lopsided = CVector::zeros(4);
        lopsided[0] = cx(0.99f64.sqrt(), 0.0);
        lopsided[3] = cx(0.01f64.sqrt(), 0.0);
        assert_eq!(
            schmidt_rank(&PureStateVector::new((2, 2), lopsided).unwrap(), 1e-10),
            2
        );
    }

    #[test]
    fn lambda_image_of_isotropic_matches_closed_form() {
        for &a in &[0.55, 0.6, 2.0 / 3.0] {
            for &f in &[0.2, 0.5, 0.75, 0.8, 1.0] {
                let state = isotropic_state(2, f).unwrap();
                let img = map_image(&state, &lambda_family(a).unwrap()).unwrap();
                let denom = 6.0 * (2.0 - a);
                let outer = (3.0 - a * (1.0 + 2.0 * f)) / denom;
                let inner = (3.0 - 2.0 * a * (1.0 - f)) / denom;
                let corner = -a * (4.0 * f - 1.0) / denom;
                let mut expected = CMatrix::zeros(4, 4);
                expected[(0, 0)] = cx(outer, 0.0);
                expected[(3, 3)] = cx(outer, 0.0);
                expected[(1, 1)] = cx(inner, 0.0);
                expected[(2, 2)] = cx(inner, 0.0);
                expected[(0, 3)] = cx(corner, 0.0);
                expected[(3, 0)] = cx(corner, 0.0);
                assert!(
                    approx_eq(&img, &expected, 1e-12),
                    "a = {a}, f = {f}"
                );
                // the spectrum is {outer ± |corner|, inner ×2}; the corner
                // branch is the minimum once f ≥ 1/4
                let corner_branch = (1.0 - 2.0 * a * f) / (2.0 * (2.0 - a));
                let lam = witness_with_map(&state, &lambda_family(a).unwrap()).unwrap();
                assert_abs_diff_eq!(lam, corner_branch.min(inner), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn isotropic_thresholds_match_closed_forms() {
        let cases = [
            (lambda_family(0.6).unwrap(), 1.0 / 1.2),
            (lambda_family(2.0 / 3.0).unwrap(), 0.75),
            (omega_family(0.55).unwrap(), 0.5 + 0.55 / (4.0 * 0.45)),
            (omega_family(0.5).unwrap(), 0.75),
        ];
        for (map, expected) in cases {
            let found = isotropic_threshold(&map, 2, 0.3, 1.0).unwrap();
            assert_abs_diff_eq!(found, expected, epsilon = 1e-7);
        }
        // bracket that does not straddle the boundary
        assert!(isotropic_threshold(&lambda_family(0.6).unwrap(), 2, 0.1, 0.5).is_err());
    }

    #[test]
    fn classification_of_isotropic_states() {
        let bank = default_classification_bank(0).unwrap();
        assert_eq!(bank.len(), 6);
        assert!(bank.iter().all(|e| e.level() == 2 || e.certificate().is_some()));

        let highly = classify_new_hierarchy(&isotropic_state(2, 0.8).unwrap(), &bank).unwrap();
        for k in 1..=3 {
            assert_eq!(
                highly.level(k).unwrap().verdict,
                LevelVerdict::Outside,
                "f = 0.8, k = {k}"
            );
        }
        assert_eq!(highly.level(4).unwrap().verdict, LevelVerdict::Consistent);
        let (label, lam) = highly.level(3).unwrap().witness.clone().unwrap();
        assert!(lam < -1e-9);
        assert!(label.contains("lambda") || label.contains("omega"), "{label}");

        let middling = classify_new_hierarchy(&isotropic_state(2, 0.6).unwrap(), &bank).unwrap();
        assert_eq!(middling.level(1).unwrap().verdict, LevelVerdict::Outside);
        assert_eq!(middling.level(2).unwrap().verdict, LevelVerdict::Outside);
        assert_eq!(middling.level(3).unwrap().verdict, LevelVerdict::Consistent);
        assert_eq!(middling.level(4).unwrap().verdict, LevelVerdict::Consistent);

        let tame = classify_new_hierarchy(&isotropic_state(2, 0.4).unwrap(), &bank).unwrap();
        for k in 1..=4 {
            assert_eq!(
                tame.level(k).unwrap().verdict,
                LevelVerdict::Consistent,
                "f = 0.4, k = {k}"
            );
        }
    }

    #[test]
    fn uncertified_maps_are_rejected() {
        let t = transposition(2).unwrap();
        let bad = certify_c3_covariant(&t, 11, 2, 0).unwrap();
        assert!(CertifiedMap::from_certificate(t, bad).is_err());
    }

    #[test]
    fn schmidt_bounds_for_isotropic_states() {
        let search = DecompositionSearch::default();

        let d2 = schmidt_number_bounds(
            &isotropic_state(2, 0.8).unwrap(),
            &schmidt_witness_bank(2).unwrap(),
            &search,
        )
        .unwrap();
        assert_eq!(d2.lower_bound, 2);
        assert_eq!(d2.upper_bound, 2);

        let d3 = schmidt_number_bounds(
            &isotropic_state(3, 0.6).unwrap(),
            &schmidt_witness_bank(3).unwrap(),
            &DecompositionSearch {
                restarts: 1,
                steps: 200,
                seed: 0,
            },
        )
        .unwrap();
        assert!(d3.lower_bound >= 2, "lower bound {}", d3.lower_bound);
        assert!(d3.upper_bound >= d3.lower_bound);

        let plus = BipartiteState::from_matrix((3, 3), max_entangled_projector(3)).unwrap();
        let report = schmidt_number_bounds(
            &plus,
            &schmidt_witness_bank(3).unwrap(),
            &DecompositionSearch {
                restarts: 1,
                steps: 100,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(report.lower_bound, 3);
        assert_eq!(report.upper_bound, 3);
    }

    #[test]
    fn separable_states_keep_unit_upper_bound_and_pass_witnesses() {
        let mut rng = rng_from_seed(7);
        let bank = schmidt_witness_bank(2).unwrap();
        for _ in 0..20 {
            let state = sample_separable((2, 2), 6, &mut rng).unwrap();
            let report =
                schmidt_number_bounds(&state, &bank, &DecompositionSearch::default()).unwrap();
            assert_eq!(report.upper_bound, 1);
            assert_eq!(report.lower_bound, 1);
            for (label, lam) in &report.witnesses {
                assert!(*lam >= -1e-9, "{label} gave {lam}");
            }
        }
    }

    #[test]
    fn bounded_rank_fit_recovers_a_separable_qubit_state() {
        let mut rng = rng_from_seed(3);
        let sampled = sample_separable((2, 2), 4, &mut rng).unwrap();
        // strip the record so the search has to work
        let bare = BipartiteState::from_matrix((2, 2), sampled.matrix().clone()).unwrap();
        let report = schmidt_number_bounds(
            &bare,
            &schmidt_witness_bank(2).unwrap(),
            &DecompositionSearch {
                restarts: 6,
                steps: 4000,
                seed: 11,
            },
        )
        .unwrap();
        assert_eq!(report.lower_bound, 1);
        if report.upper_bound == 1 {
            let decomposition = report.decomposition.unwrap();
            let mut rebuilt = CMatrix::zeros(4, 4);
            for (w, psi) in &decomposition {
                rebuilt += psi.projector().map(|e| e * cx(*w, 0.0));
                assert_eq!(schmidt_rank(psi, 1e-7), 1);
            }
            assert!(approx_eq(&rebuilt, bare.matrix(), 1e-6));
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let state = isotropic_state(2, 0.5).unwrap();
        assert!(witness_with_map(&state, &transposition(3).unwrap()).is_err());
        assert!(classify_new_hierarchy(&state, &[]).is_err());
        let rect = BipartiteState::from_matrix(
            (1, 4),
            identity(4).map(|e| e * cx(0.25, 0.0)),
        )
        .unwrap();
        assert!(schmidt_number_bounds(
            &rect,
            &schmidt_witness_bank(2).unwrap(),
            &DecompositionSearch::default()
        )
        .is_err());
    }
}
