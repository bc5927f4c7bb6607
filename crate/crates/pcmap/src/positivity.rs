//! Verdicts on the classical positivity hierarchy: positivity,
//! k-positivity (seesaw search over low-Schmidt-rank vectors), complete
//! positivity (exact, via the Choi spectrum), the Schwarz operator
//! inequality, the Kadison inequality, and the trace-norm contraction
//! characterization of positive trace-preserving maps.
//!
//! Search verdicts are honest: `CERTIFIED_VIOLATION` always carries a
//! witness that replays to the recorded value, while the absence of a
//! violation is reported as `NO_VIOLATION_FOUND`, never as membership.
//! The only `CERTIFIED_MEMBER` verdicts come from the exact Choi test.

use rayon::prelude::*;

use crate::maps::QuantumMap;
use crate::operator::{
    eigh, hermitian_part, identity, matrix_unit, operator_norm, rng_for, sample_ginibre,
    sample_hermitian, trace_norm, CMatrix, CVector, PureStateVector,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    CertifiedViolation,
    NoViolationFound,
    CertifiedMember,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictKind::CertifiedViolation => "CERTIFIED_VIOLATION",
            VerdictKind::NoViolationFound => "NO_VIOLATION_FOUND",
            VerdictKind::CertifiedMember => "CERTIFIED_MEMBER",
        }
    }
}

/// What a search verdict points at.
#[derive(Debug, Clone)]
pub enum Witness {
    /// A bipartite pure state (k-positivity and Choi-eigenvector verdicts).
    State(PureStateVector),
    /// An operator X (contraction, Schwarz, and Kadison verdicts).
    Operator(CMatrix),
}

#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    pub restarts: usize,
    pub iters: usize,
}

/// Outcome of a positivity-style check. `value` is the extremal quantity
/// found (λ_min or a contraction margin); the best point found is embedded
/// as the witness even when no violation was detected, so every verdict is
/// replayable.
#[derive(Debug, Clone)]
pub struct PositivityVerdict {
    pub kind: VerdictKind,
    pub witness: Option<Witness>,
    pub value: f64,
    pub search_budget: SearchBudget,
    pub seed: u64,
}

impl PositivityVerdict {
    pub fn is_violation(&self) -> bool {
        self.kind == VerdictKind::CertifiedViolation
    }
}

/// Exact complete-positivity test: λ_min of the Choi matrix.
pub fn is_completely_positive(map: &QuantumMap, tol: f64) -> Result<PositivityVerdict> {
    if !map.is_hermiticity_preserving() {
        return Err(Error::Precondition(
            "complete positivity is only defined here for Hermiticity-preserving maps".into(),
        ));
    }
    let d = map.dim();
    let (vals, vecs) = eigh(&hermitian_part(map.choi().entries()))?;
    let lambda_min = vals[0];
    let budget = SearchBudget {
        restarts: 0,
        iters: 0,
    };
    if lambda_min >= -tol {
        Ok(PositivityVerdict {
            kind: VerdictKind::CertifiedMember,
            witness: None,
            value: lambda_min,
            search_budget: budget,
            seed: 0,
        })
    } else {
        let psi = PureStateVector::new((d, d), CVector::from_column_slice(vecs.column(0).as_slice()))?;
        Ok(PositivityVerdict {
            kind: VerdictKind::CertifiedViolation,
            witness: Some(Witness::State(psi)),
            value: lambda_min,
            search_budget: budget,
            seed: 0,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            iters: 500,
            seed: 0,
            tol: 1e-9,
        }
    }
}

/// One seesaw descent: alternate an exact eigensolve on the lifted
/// `(d·k)`-dimensional problem with a Schmidt-frame update on the B side.
/// Returns the best value and vector seen.
fn seesaw_descent(
    choi: &CMatrix,
    dim: usize,
    k: usize,
    iters: usize,
    mut frame: CMatrix,
) -> (f64, CVector) {
    let mut best_val = f64::INFINITY;
    let mut best_vec = CVector::zeros(dim * dim);
    for _ in 0..iters {
        let lift = identity(dim).kronecker(&frame);
        let reduced = hermitian_part(&(lift.adjoint() * choi * &lift));
        let (vals, vecs) = eigh(&reduced).expect("reduced problem is Hermitian");
        let psi = &lift * vecs.column(0);
        let val = vals[0];
        let improved = best_val - val;
        if val < best_val {
            best_val = val;
            best_vec = CVector::from_column_slice(psi.as_slice());
        }
        if improved < 1e-12 {
            break;
        }
        // Re-extract the B-side Schmidt frame of ψ (indices a = i·d + j with
        // j on the B side): the top-k eigenvectors of the reduced state
        // ρ_B = Tr_A |ψ⟩⟨ψ| = conj(M†M) with M[i,j] = ψ[i·d+j].
        let m = CMatrix::from_fn(dim, dim, |i, j| psi[i * dim + j]);
        let rho_b = hermitian_part(&(m.adjoint() * &m).conjugate());
        let (_, vecs_b) = eigh(&rho_b).expect("reduced state is Hermitian");
        let mut new_frame = CMatrix::zeros(dim, k);
        for r in 0..k {
            new_frame.set_column(r, &vecs_b.column(dim - 1 - r));
        }
        frame = new_frame;
    }
    (best_val, best_vec)
}

/// Minimize ⟨ψ|C(Φ)|ψ⟩ over unit vectors of Schmidt rank ≤ k. A value
/// below −tol certifies that the map is not k-positive; the quantifier is
/// universal, so the converse is only ever reported as
/// `NO_VIOLATION_FOUND`.
pub fn k_positivity_search(
    map: &QuantumMap,
    k: usize,
    cfg: &SeesawConfig,
) -> Result<PositivityVerdict> {
    let d = map.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!(
            "k-positivity level {} outside 1..={}",
            k, d
        )));
    }
    if cfg.restarts == 0 || cfg.iters == 0 {
        return Err(Error::InvalidInput("search budget must be positive".into()));
    }
    let choi = hermitian_part(map.choi().entries());
    let results: Vec<(f64, usize, CVector)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(cfg.seed, r as u64);
            let frame = sample_ginibre(&mut rng, d, k).qr().q();
            let (val, vec) = seesaw_descent(&choi, d, k, cfg.iters, frame);
            (val, r, vec)
        })
        .collect();
    // Deterministic winner regardless of thread scheduling: smallest value,
    // ties broken by restart index.
    let (value, _, psi) = results
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
        .expect("at least one restart");
    let witness = Witness::State(PureStateVector::new((d, d), psi)?);
    let kind = if value < -cfg.tol {
        VerdictKind::CertifiedViolation
    } else {
        VerdictKind::NoViolationFound
    };
    Ok(PositivityVerdict {
        kind,
        witness: Some(witness),
        value,
        search_budget: SearchBudget {
            restarts: cfg.restarts,
            iters: cfg.iters,
        },
        seed: cfg.seed,
    })
}

/// Positivity is 1-positivity.
pub fn is_positive(map: &QuantumMap, cfg: &SeesawConfig) -> Result<PositivityVerdict> {
    k_positivity_search(map, 1, cfg)
}

/// Structured + random sample bank for the operator-inequality checks.
/// Index `i` is deterministic given `(seed, i)`.
fn sample_bank_entry(dim: usize, seed: u64, i: usize, hermitian_only: bool) -> CMatrix {
    let structured: Vec<CMatrix> = {
        let mut v = Vec::new();
        for j in 0..dim {
            for k in 0..dim {
                v.push(matrix_unit(dim, j, k));
            }
        }
        for j in 0..dim {
            for k in (j + 1)..dim {
                v.push(matrix_unit(dim, j, k) + matrix_unit(dim, k, j));
                let mut anti = CMatrix::zeros(dim, dim);
                anti[(j, k)] = crate::operator::cx(0.0, 1.0);
                anti[(k, j)] = crate::operator::cx(0.0, -1.0);
                v.push(anti);
            }
        }
        if hermitian_only {
            v.retain(|m| crate::operator::is_hermitian(m, 1e-14));
        }
        v
    };
    if i < structured.len() {
        return structured[i].clone();
    }
    let mut rng = rng_for(seed, i as u64);
    let kind = i % 4;
    match kind {
        // full random
        0 => {
            let g = sample_ginibre(&mut rng, dim, dim);
            if hermitian_only {
                hermitian_part(&g)
            } else {
                g
            }
        }
        // near-rank-one
        1 => {
            let u = sample_ginibre(&mut rng, dim, 1);
            let v = sample_ginibre(&mut rng, dim, 1);
            let m = if hermitian_only {
                hermitian_part(&(&u * u.adjoint()))
            } else {
                &u * v.adjoint()
            };
            m + sample_ginibre(&mut rng, dim, dim).scale(1e-3)
        }
        // traceless
        2 => {
            let g = sample_ginibre(&mut rng, dim, dim);
            let m = if hermitian_only { hermitian_part(&g) } else { g };
            let shift = m.trace() / (dim as f64);
            m - identity(dim).map(|e| e * shift)
        }
        // scaled Hermitian bursts (large norms stress the inequality scale)
        _ => sample_hermitian(dim, &mut rng).into_entries().scale(3.0),
    }
}

/// Sampled contraction test for trace-preserving maps: positive TP maps
/// contract the trace norm on Hermitian operators, so any sampled X with
/// ‖Φ[X]‖_tr > ‖X‖_tr certifies non-positivity.
pub fn contraction_check(map: &QuantumMap, samples: usize, seed: u64) -> Result<PositivityVerdict> {
    if !map.is_trace_preserving() {
        return Err(Error::NotTracePreserving(format!(
            "contraction characterization assumes a trace-preserving map, got '{}'",
            map.label()
        )));
    }
    if !map.is_hermiticity_preserving() {
        return Err(Error::Precondition(
            "contraction characterization assumes a Hermiticity-preserving map".into(),
        ));
    }
    let dim = map.dim();
    let results: Vec<(f64, usize, CMatrix)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = sample_bank_entry(dim, seed, i, true);
            let margin = match (map.apply_matrix(&x), trace_norm(&x)) {
                (Ok(img), Ok(nx)) if nx > 1e-14 => {
                    trace_norm(&img).map(|ni| ni - nx).unwrap_or(f64::NEG_INFINITY)
                }
                _ => f64::NEG_INFINITY,
            };
            (margin, i, x)
        })
        .collect();
    let (value, _, x) = results
        .into_iter()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)))
        .expect("at least one sample");
    let kind = if value > 1e-9 {
        VerdictKind::CertifiedViolation
    } else {
        VerdictKind::NoViolationFound
    };
    Ok(PositivityVerdict {
        kind,
        witness: Some(Witness::Operator(x)),
        value,
        search_budget: SearchBudget {
            restarts: samples,
            iters: 1,
        },
        seed,
    })
}

/// λ_min(‖Φ(1)‖_∞ Φ[X†X] − Φ[X†]Φ[X]) for one X.
pub fn schwarz_margin(map: &QuantumMap, x: &CMatrix) -> Result<f64> {
    let norm1 = operator_norm(&map.apply_matrix(&identity(map.dim()))?)?;
    let lhs = map.apply_matrix(&(x.adjoint() * x))?.scale(norm1);
    let rhs = map.apply_matrix(&x.adjoint())? * map.apply_matrix(x)?;
    let (vals, _) = eigh(&hermitian_part(&(lhs - rhs)))?;
    Ok(vals[0])
}

/// Search for violations of the Schwarz operator inequality
/// ‖Φ(1)‖_∞ Φ[X†X] ≥ Φ[X†]Φ[X] over structured and random X.
pub fn schwarz_check(map: &QuantumMap, samples: usize, seed: u64) -> Result<PositivityVerdict> {
    let dim = map.dim();
    let results: Vec<(f64, usize, CMatrix)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = sample_bank_entry(dim, seed, i, false);
            let margin = schwarz_margin(map, &x).unwrap_or(f64::INFINITY);
            (margin, i, x)
        })
        .collect();
    let (value, _, x) = results
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
        .expect("at least one sample");
    let kind = if value < -1e-9 {
        VerdictKind::CertifiedViolation
    } else {
        VerdictKind::NoViolationFound
    };
    Ok(PositivityVerdict {
        kind,
        witness: Some(Witness::Operator(x)),
        value,
        search_budget: SearchBudget {
            restarts: samples,
            iters: 1,
        },
        seed,
    })
}

/// λ_min(Φ[X²] − Φ[X]²) for Hermitian X.
pub fn kadison_margin(map: &QuantumMap, x: &CMatrix) -> Result<f64> {
    let lhs = map.apply_matrix(&(x * x))?;
    let img = map.apply_matrix(x)?;
    let (vals, _) = eigh(&hermitian_part(&(lhs - &img * &img)))?;
    Ok(vals[0])
}

/// Kadison inequality Φ[X²] ≥ Φ[X]² for Hermitian X; requires a unital map.
pub fn kadison_check(map: &QuantumMap, samples: usize, seed: u64) -> Result<PositivityVerdict> {
    if !map.is_unital() {
        return Err(Error::NotUnital(format!(
            "Kadison inequality assumes a unital map, got '{}'",
            map.label()
        )));
    }
    let dim = map.dim();
    let results: Vec<(f64, usize, CMatrix)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = sample_bank_entry(dim, seed, i, true);
            let margin = kadison_margin(map, &x).unwrap_or(f64::INFINITY);
            (margin, i, x)
        })
        .collect();
    let (value, _, x) = results
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
        .expect("at least one sample");
    let kind = if value < -1e-9 {
        VerdictKind::CertifiedViolation
    } else {
        VerdictKind::NoViolationFound
    };
    Ok(PositivityVerdict {
        kind,
        witness: Some(Witness::Operator(x)),
        value,
        search_budget: SearchBudget {
            restarts: samples,
            iters: 1,
        },
        seed,
    })
}

/// Mixture (q/d)·1·Tr X + (1 − q)·Ψ[X]. For a trace-preserving, unital,
/// Hilbert–Schmidt-contractive Ψ the result is a Schwarz map whenever
/// 1/2 ≤ q ≤ 3/2. The contraction hypothesis is verified by sampling.
pub fn build_schwarz_mixture(base: &QuantumMap, q: f64) -> Result<QuantumMap> {
    if !base.is_trace_preserving() {
        return Err(Error::NotTracePreserving(
            "Schwarz mixture base must be trace-preserving".into(),
        ));
    }
    if !base.is_unital() {
        return Err(Error::NotUnital("Schwarz mixture base must be unital".into()));
    }
    let dim = base.dim();
    // Hilbert-Schmidt contraction precheck on a fixed deterministic bank.
    for i in 0..200 {
        let x = sample_bank_entry(dim, 0x5c4a, i, false);
        let nx = x.norm();
        if nx <= 1e-14 {
            continue;
        }
        let img = base.apply_matrix(&x)?;
        if img.norm() > nx * (1.0 + 1e-9) {
            return Err(Error::Precondition(format!(
                "Schwarz mixture base '{}' is not a Hilbert-Schmidt contraction \
                 (‖Ψ[X]‖_2/‖X‖_2 = {:.6})",
                base.label(),
                img.norm() / nx
            )));
        }
    }
    let base_clone = base.clone();
    Ok(QuantumMap::from_action(
        dim,
        format!("schwarz-mix(q={}, base={})", q, base.label()),
        move |x| {
            identity(dim).map(|e| e * x.trace() * (q / dim as f64))
                + base_clone.apply_matrix(x).expect("dims match").scale(1.0 - q)
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{lambda_family, omega_family, phi_p_family, transposition, QuantumMap};
    use crate::operator::approx_eq;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cp_test_matches_closed_forms() {
        let member = is_completely_positive(&lambda_family(0.4).unwrap(), 1e-10).unwrap();
        assert_eq!(member.kind, VerdictKind::CertifiedMember);

        let violation = is_completely_positive(&lambda_family(0.6).unwrap(), 1e-10).unwrap();
        assert_eq!(violation.kind, VerdictKind::CertifiedViolation);
        assert_abs_diff_eq!(violation.value, -1.0 / 14.0, epsilon = 1e-12);
        assert!(violation.witness.is_some());

        let omega = is_completely_positive(&omega_family(0.7).unwrap(), 1e-10).unwrap();
        assert_eq!(omega.kind, VerdictKind::CertifiedMember);
    }

    #[test]
    fn k_positivity_of_phi_p() {
        let map = phi_p_family(3, 1.5).unwrap();
        let cfg = SeesawConfig {
            restarts: 32,
            ..Default::default()
        };
        let at1 = k_positivity_search(&map, 1, &cfg).unwrap();
        assert_eq!(at1.kind, VerdictKind::NoViolationFound);
        // minimum over product states is (p−1)/d = 1/6
        assert_abs_diff_eq!(at1.value, 1.0 / 6.0, epsilon = 1e-8);

        let at2 = k_positivity_search(&map, 2, &cfg).unwrap();
        assert_eq!(at2.kind, VerdictKind::CertifiedViolation);
        assert_abs_diff_eq!(at2.value, -1.0 / 6.0, epsilon = 1e-8);

        // Monotone: the violation deepens at level 3.
        let at3 = k_positivity_search(&map, 3, &cfg).unwrap();
        assert_eq!(at3.kind, VerdictKind::CertifiedViolation);
        assert_abs_diff_eq!(at3.value, -0.5, epsilon = 1e-8);
    }

    #[test]
    fn transposition_fails_at_level_two() {
        let t = transposition(2).unwrap();
        let cfg = SeesawConfig {
            restarts: 16,
            ..Default::default()
        };
        let v = k_positivity_search(&t, 2, &cfg).unwrap();
        assert_eq!(v.kind, VerdictKind::CertifiedViolation);
        assert_abs_diff_eq!(v.value, -0.5, epsilon = 1e-9);
        match v.witness {
            Some(Witness::State(psi)) => {
                // the minimizer is maximally entangled
                assert_abs_diff_eq!(
                    psi.schmidt_coefficients()[0],
                    std::f64::consts::FRAC_1_SQRT_2,
                    epsilon = 1e-8
                );
            }
            _ => panic!("expected a state witness"),
        }

        let clean = k_positivity_search(&t, 1, &cfg).unwrap();
        assert_eq!(clean.kind, VerdictKind::NoViolationFound);
    }

    #[test]
    fn positivity_boundary_of_lambda() {
        let cfg = SeesawConfig {
            restarts: 32,
            ..Default::default()
        };
        let ok = is_positive(&lambda_family(1.0).unwrap(), &cfg).unwrap();
        assert_eq!(ok.kind, VerdictKind::NoViolationFound);

        let bad = is_positive(&lambda_family(1.1).unwrap(), &cfg).unwrap();
        assert_eq!(bad.kind, VerdictKind::CertifiedViolation);
        // min over products of ⟨v|Λ_a[ū ū†]|v⟩/2 = (1−a)/(2(2−a))
        assert_abs_diff_eq!(bad.value, -0.1 / (2.0 * 0.9), epsilon = 1e-8);
    }

    #[test]
    fn k_positivity_rejects_bad_levels() {
        let t = transposition(2).unwrap();
        let cfg = SeesawConfig::default();
        assert!(k_positivity_search(&t, 0, &cfg).is_err());
        assert!(k_positivity_search(&t, 3, &cfg).is_err());
    }

    #[test]
    fn seesaw_is_deterministic_across_runs() {
        let map = phi_p_family(3, 1.5).unwrap();
        let cfg = SeesawConfig {
            restarts: 8,
            seed: 99,
            ..Default::default()
        };
        let a = k_positivity_search(&map, 2, &cfg).unwrap();
        let b = k_positivity_search(&map, 2, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn contraction_check_examples() {
        let id = QuantumMap::identity_map(2);
        let v = contraction_check(&id, 200, 1).unwrap();
        assert_eq!(v.kind, VerdictKind::NoViolationFound);

        let v = contraction_check(&lambda_family(1.1).unwrap(), 400, 1).unwrap();
        assert_eq!(v.kind, VerdictKind::CertifiedViolation);

        let v = contraction_check(&omega_family(0.5).unwrap(), 200, 1).unwrap();
        assert_eq!(v.kind, VerdictKind::NoViolationFound);

        let doubling = QuantumMap::from_action(2, "2X", |x| x.scale(2.0));
        assert!(contraction_check(&doubling, 10, 1).is_err());
    }

    #[test]
    fn schwarz_check_matches_family_boundaries() {
        let clean = schwarz_check(&lambda_family(0.65).unwrap(), 2000, 5).unwrap();
        assert_eq!(clean.kind, VerdictKind::NoViolationFound);

        let broken = schwarz_check(&lambda_family(0.70).unwrap(), 2000, 5).unwrap();
        assert_eq!(broken.kind, VerdictKind::CertifiedViolation);
        // The matrix unit E_01 certifies: margin (2−3a)/(2−a)².
        let e01_margin =
            schwarz_margin(&lambda_family(0.70).unwrap(), &matrix_unit(2, 0, 1)).unwrap();
        assert_abs_diff_eq!(e01_margin, (2.0 - 2.1) / (1.3f64 * 1.3), epsilon = 1e-12);
        assert!(broken.value <= e01_margin + 1e-12);

        // CPTP unital map: never a violation.
        let cptp = schwarz_check(&omega_family(0.8).unwrap(), 2000, 5).unwrap();
        assert_eq!(cptp.kind, VerdictKind::NoViolationFound);
    }

    #[test]
    fn kadison_check_examples() {
        let t = kadison_check(&transposition(2).unwrap(), 1000, 7).unwrap();
        assert_eq!(t.kind, VerdictKind::NoViolationFound);

        let om = kadison_check(&omega_family(0.5).unwrap(), 1000, 7).unwrap();
        assert_eq!(om.kind, VerdictKind::NoViolationFound);

        // X ↦ 2X − (1/2)·1·Tr X is unital and TP but not positive; at
        // X = diag(1,0) the Kadison margin is exactly −3/4.
        let psi = QuantumMap::from_action(2, "2X-(TrX/2)1", |x| {
            x.scale(2.0) - identity(2).map(|e| e * x.trace() * 0.5)
        });
        let margin = kadison_margin(&psi, &matrix_unit(2, 0, 0)).unwrap();
        assert_abs_diff_eq!(margin, -0.75, epsilon = 1e-12);
        let v = kadison_check(&psi, 1000, 7).unwrap();
        assert_eq!(v.kind, VerdictKind::CertifiedViolation);
        assert!(v.value <= -0.75 + 1e-9);

        // Non-unital maps are rejected (X ↦ E00·TrX is TP but sends 1 to 2·E00).
        let nonunital = QuantumMap::from_action(2, "collapse", |x| {
            matrix_unit(2, 0, 0).map(|e| e * x.trace())
        });
        assert!(kadison_check(&nonunital, 10, 7).is_err());
    }

    #[test]
    fn schwarz_mixture_construction() {
        let t = transposition(2).unwrap();
        let depol = build_schwarz_mixture(&t, 1.0).unwrap();
        assert!(approx_eq(
            depol.superop(),
            lambda_family(0.0).unwrap().superop(),
            1e-14
        ));

        // q = ε recovers the transpose-mixture family.
        let eps = 0.55;
        let mix = build_schwarz_mixture(&t, eps).unwrap();
        assert!(approx_eq(
            mix.superop(),
            omega_family(eps).unwrap().superop(),
            1e-14
        ));

        // Inside the guaranteed q-range the mixture passes the Schwarz test.
        for q in [0.5, 1.0, 1.5] {
            let mix = build_schwarz_mixture(&t, q).unwrap();
            let v = schwarz_check(&mix, 1000, 11).unwrap();
            assert_eq!(v.kind, VerdictKind::NoViolationFound, "q = {}", q);
        }

        // A unital TP map that expands the HS norm fails the precheck.
        let expander = QuantumMap::from_action(2, "2X-(TrX/2)1", |x| {
            x.scale(2.0) - identity(2).map(|e| e * x.trace() * 0.5)
        });
        assert!(matches!(
            build_schwarz_mixture(&expander, 1.0),
            Err(Error::Precondition(_))
        ));
    }
}
