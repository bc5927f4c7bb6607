//! End-to-end acceptance checks: every quantitative claim the library is
//! built around, pinned to explicit tolerances. Each test prints a single
//! pass/fail line (visible with `--nocapture`).

use pcmap::contractivity::{
    canonical_state_triple, canonicalize_triple, certify_c3_covariant, contraction_gap,
    extension_feasibility, extension_margin_over_grid, hierarchy_scan,
    reference_coefficient_triple, span_residual, violation_search,
};
use pcmap::entanglement::{isotropic_state, isotropic_threshold, map_image};
use pcmap::maps::{
    lambda_family, omega_family, phi_p_family, restrict, sample_cptp, transposition, QuantumMap,
};
use pcmap::operator::{
    cx, hermitian_part, max_abs, relative_entropy, rng_from_seed, sample_density, sigma_x,
    sigma_y, CMatrix, DensityOperator, HermitianOperator,
};
use pcmap::positivity::{
    is_completely_positive, is_positive, k_positivity_search, kadison_check, schwarz_check,
    SearchBudget, SeesawConfig, VerdictKind,
};
use pcmap::report::{analysis_certificate, certificate_to_bytes, replay, RunConfig};

const CP_BOUNDARY_TOL: f64 = 1e-6;
const C3_BOUNDARY_TOL: f64 = 5e-3;
const CLOSED_FORM_TOL: f64 = 1e-9;
const ENTRYWISE_TOL: f64 = 1e-12;
const ISO_BOUNDARY_TOL: f64 = 1e-6;
const KPOS_VIOLATION_TOL: f64 = -1e-6;
const SPAN_RESIDUAL_TOL: f64 = 1e-10;
const P_ORACLE_TOL: f64 = 1e-10;
const KADISON_FLOOR: f64 = -1e-9;
const DPI_SLACK: f64 = 1e-9;
const VIOLATION_TOL: f64 = 1e-9;

fn verdict_line(n: usize, what: &str, ok: bool) {
    println!(
        "acceptance criterion {n}: {} ({what})",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn diag2(a: f64, b: f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![cx(a, 0.0), cx(b, 0.0)]))
}

fn canonical_basis(p: f64) -> [HermitianOperator; 3] {
    [
        HermitianOperator::new(sigma_x()).unwrap(),
        HermitianOperator::new(sigma_y()).unwrap(),
        HermitianOperator::new(diag2(p, 1.0 - p)).unwrap(),
    ]
}

/// Bisect a predicate with a sign change across [lo, hi] down to `width`.
fn bisect(mut pred: impl FnMut(f64) -> bool, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let at_lo = pred(lo);
    assert_ne!(at_lo, pred(hi), "predicate must change across the bracket");
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if pred(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_1_lambda_cp_boundary() {
    let t = std::time::Instant::now();
    let psd = |a: f64| {
        lambda_family(a)
            .unwrap()
            .choi()
            .lambda_min()
            .unwrap()
            >= -1e-12
    };
    let boundary = bisect(psd, 0.0, 1.0, 1e-9);
    let ok = (boundary - 0.5).abs() < CP_BOUNDARY_TOL;
    verdict_line(
        1,
        &format!(
            "lambda family CP boundary {boundary:.9}, elapsed {:.2?}",
            t.elapsed()
        ),
        ok,
    );
    assert!(ok, "CP boundary {boundary} is not 0.5 within {CP_BOUNDARY_TOL}");
}

#[test]
fn criterion_2_lambda_c3_boundary() {
    let t = std::time::Instant::now();
    let mut ok = true;

    for a in [0.51, 0.55, 0.60, 0.65, 2.0 / 3.0 - 1e-3] {
        let cert = certify_c3_covariant(&lambda_family(a).unwrap(), 21, 4, 7).unwrap();
        if cert.verdict != VerdictKind::CertifiedMember {
            ok = false;
            eprintln!("a = {a}: expected membership, got {}", cert.verdict.as_str());
        }
    }

    for a in [0.68, 0.75] {
        let map = lambda_family(a).unwrap();
        for i in 0..11 {
            let p = (i as f64 + 0.5) / 11.0;
            let ext =
                extension_feasibility(&restrict(&map, &canonical_basis(p)).unwrap(), None)
                    .unwrap();
            let (lo, hi) = ext
                .uniform_r_interval
                .expect("canonical family restriction carries the uniform interval");
            if lo <= hi {
                ok = false;
                eprintln!("a = {a}, p = {p}: uniform interval [{lo}, {hi}] not empty");
            }
        }
        let cert = certify_c3_covariant(&map, 21, 4, 7).unwrap();
        if cert.verdict == VerdictKind::CertifiedMember {
            ok = false;
            eprintln!("a = {a}: spurious membership");
        }
    }

    let all_feasible = |a: f64| {
        extension_margin_over_grid(&lambda_family(a).unwrap(), 33)
            .unwrap()
            .1
    };
    let boundary = bisect(all_feasible, 0.5, 0.9, 1e-5);
    if (boundary - 2.0 / 3.0).abs() >= C3_BOUNDARY_TOL {
        ok = false;
        eprintln!("feasibility boundary {boundary} is far from 2/3");
    }

    verdict_line(
        2,
        &format!(
            "lambda family level-3 boundary {boundary:.6}, elapsed {:.2?}",
            t.elapsed()
        ),
        ok,
    );
    assert!(ok);
}

#[test]
fn criterion_3_omega_boundaries() {
    let t = std::time::Instant::now();
    let mut ok = true;

    let psd = |eps: f64| {
        omega_family(eps)
            .unwrap()
            .choi()
            .lambda_min()
            .unwrap()
            >= -1e-12
    };
    let cp_boundary = bisect(psd, 0.0, 1.0, 1e-9);
    if (cp_boundary - 2.0 / 3.0).abs() >= CP_BOUNDARY_TOL {
        ok = false;
        eprintln!("omega CP boundary {cp_boundary} is not 2/3");
    }

    for eps in [0.50, 0.55, 0.60, 2.0 / 3.0 - 1e-3] {
        let cert = certify_c3_covariant(&omega_family(eps).unwrap(), 21, 4, 7).unwrap();
        if cert.verdict != VerdictKind::CertifiedMember {
            ok = false;
            eprintln!(
                "eps = {eps}: expected membership, got {}",
                cert.verdict.as_str()
            );
        }
    }

    verdict_line(
        3,
        &format!(
            "omega family CP boundary {cp_boundary:.9}, elapsed {:.2?}",
            t.elapsed()
        ),
        ok,
    );
    assert!(ok);
}

#[test]
fn criterion_4_transposition_closed_forms() {
    let t = std::time::Instant::now();
    let map = transposition(2).unwrap();
    let coeffs = reference_coefficient_triple(false);
    let mut ok = true;
    for i in 1..=9 {
        let p = i as f64 / 10.0;
        let states = canonical_state_triple(p).unwrap();
        let (lhs, rhs) = contraction_gap(&map, &coeffs, &states).unwrap();
        let lhs_exact = p + ((1.0 - p) * (1.0 - p) + 16.0).sqrt();
        let rhs_exact = (1.0 - p) + (p * p + 16.0).sqrt();
        if (lhs - lhs_exact).abs() >= CLOSED_FORM_TOL || (rhs - rhs_exact).abs() >= CLOSED_FORM_TOL
        {
            ok = false;
            eprintln!("p = {p}: ({lhs}, {rhs}) vs exact ({lhs_exact}, {rhs_exact})");
        }
        let violated = lhs - rhs > VIOLATION_TOL;
        if violated != (p > 0.5) {
            ok = false;
            eprintln!("p = {p}: violation flag {violated} disagrees with p > 1/2");
        }
    }
    verdict_line(
        4,
        &format!(
            "transposition trace norms match closed forms, elapsed {:.2?}",
            t.elapsed()
        ),
        ok,
    );
    assert!(ok);
}

fn lambda_iso_expected(a: f64, f: f64) -> CMatrix {
    let den = 6.0 * (2.0 - a);
    let outer = (3.0 - a * (1.0 + 2.0 * f)) / den;
    let inner = (3.0 - 2.0 * a * (1.0 - f)) / den;
    let corner = -a * (4.0 * f - 1.0) / den;
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = cx(outer, 0.0);
    m[(3, 3)] = cx(outer, 0.0);
    m[(1, 1)] = cx(inner, 0.0);
    m[(2, 2)] = cx(inner, 0.0);
    m[(0, 3)] = cx(corner, 0.0);
    m[(3, 0)] = cx(corner, 0.0);
    m
}

#[test]
fn criterion_5_isotropic_witness() {
    let t = std::time::Instant::now();
    let mut ok = true;

    for a in [0.2, 0.4, 0.6, 2.0 / 3.0, 0.9] {
        for f in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let state = isotropic_state(2, f).unwrap();
            let img = map_image(&state, &lambda_family(a).unwrap()).unwrap();
            let dev = max_abs(&(img - lambda_iso_expected(a, f)));
            if dev >= ENTRYWISE_TOL {
                ok = false;
                eprintln!("a = {a}, f = {f}: entrywise deviation {dev:.3e}");
            }
        }
    }

    // the 3/4 threshold belongs to the boundary maps of both families
    for (map, name) in [
        (lambda_family(2.0 / 3.0).unwrap(), "lambda(a=2/3)"),
        (omega_family(0.5).unwrap(), "omega(eps=1/2)"),
    ] {
        let f = isotropic_threshold(&map, 2, 0.0, 1.0).unwrap();
        if (f - 0.75).abs() >= ISO_BOUNDARY_TOL {
            ok = false;
            eprintln!("{name}: threshold {f} is not 3/4");
        }
    }
    // interior family members sit at their own closed-form thresholds
    for (map, expected, name) in [
        (lambda_family(0.6).unwrap(), 5.0 / 6.0, "lambda(a=0.6)"),
        (omega_family(0.55).unwrap(), 29.0 / 36.0, "omega(eps=0.55)"),
    ] {
        let f = isotropic_threshold(&map, 2, 0.0, 1.0).unwrap();
        if (f - expected).abs() >= ISO_BOUNDARY_TOL {
            ok = false;
            eprintln!("{name}: threshold {f} vs closed form {expected}");
        }
    }

    verdict_line(
        5,
        &format!(
            "isotropic images and PSD thresholds, elapsed {:.2?}",
            t.elapsed()
        ),
        ok,
    );
    assert!(ok);
}

#[test]
fn criterion_6_phi_p_choi_thresholds() {
    let t = std::time::Instant::now();
    let map = phi_p_family(3, 1.5).unwrap();
    let cfg = SeesawConfig {
        restarts: 200,
        iters: 150,
        seed: 11,
        tol: 1e-9,
    };
    let at_two = k_positivity_search(&map, 2, &cfg).unwrap();
    let at_one = k_positivity_search(&map, 1, &cfg).unwrap();
    let ok = at_two.kind == VerdictKind::CertifiedViolation
        && at_two.value < KPOS_VIOLATION_TOL
        && at_one.kind == VerdictKind::NoViolationFound;
    verdict_line(
        6,
        &format!(
            "phi_p(d=3,p=1.5): k=2 value {:.6}, k=1 value {:.2e}, elapsed {:.2?}",
            at_two.value,
            at_one.value,
            t.elapsed()
        ),
        ok,
    );
    assert!(ok);
}

#[test]
fn criterion_7_canonicalization() {
    let t = std::time::Instant::now();
    let mut ok = true;

    let mut rng = rng_from_seed(3);
    let mut accepted = 0usize;
    while accepted < 1000 {
        let r1 = sample_density(2, 2, &mut rng).unwrap();
        let r2 = sample_density(2, 2, &mut rng).unwrap();
        let r3 = sample_density(2, 2, &mut rng).unwrap();
        let tri = match canonicalize_triple(&r1, &r2, &r3) {
            Ok(t) => t,
            Err(_) => continue,
        };
        accepted += 1;
        if !(tri.p() > 0.0 && tri.p() < 1.0) {
            ok = false;
            eprintln!("canonical parameter {} escapes (0, 1)", tri.p());
        }
        let basis: Vec<CMatrix> = tri
            .span_basis()
            .iter()
            .map(|b| b.entries().clone())
            .collect();
        let resid = span_residual(
            &[
                r1.matrix().clone(),
                r2.matrix().clone(),
                r3.matrix().clone(),
            ],
            &basis,
        )
        .unwrap();
        if resid >= SPAN_RESIDUAL_TOL {
            ok = false;
            eprintln!("span residual {resid:.3e}");
        }
    }

    for i in 1..=9 {
        let p0 = i as f64 / 10.0;
        let x3 = diag2(p0, 1.0 - p0);
        let c = 0.2 * p0.min(1.0 - p0);
        let r1 = DensityOperator::new(x3.clone()).unwrap();
        let r2 = DensityOperator::new(&x3 + sigma_x().map(|e| e * cx(c, 0.0))).unwrap();
        let r3 = DensityOperator::new(&x3 + sigma_y().map(|e| e * cx(c, 0.0))).unwrap();
        let tri = canonicalize_triple(&r1, &r2, &r3).unwrap();
        let dev = (tri.p() - p0).abs().min((tri.p() - (1.0 - p0)).abs());
        if dev >= P_ORACLE_TOL {
            ok = false;
            eprintln!("constructed p0 = {p0} recovered as {}", tri.p());
        }
    }

    verdict_line(
        7,
        &format!(
            "canonicalization on 1000 random and 9 constructed triples, elapsed {:.2?}",
            t.elapsed()
        ),
        ok,
    );
    assert!(ok);
}

#[test]
fn criterion_8_property_suites() {
    let t = std::time::Instant::now();
    let mut ok = true;
    let budget = SearchBudget {
        restarts: 6,
        iters: 100,
    };

    // hierarchy coherence across a grid of maps: exact CP agrees with the
    // top level, verdicts are monotone, and the known family placements hold
    let mut rng = rng_from_seed(21);
    let grid: Vec<QuantumMap> = vec![
        lambda_family(0.3).unwrap(),
        lambda_family(0.6).unwrap(),
        lambda_family(0.75).unwrap(),
        lambda_family(1.0).unwrap(),
        omega_family(0.4).unwrap(),
        omega_family(0.55).unwrap(),
        omega_family(0.7).unwrap(),
        transposition(2).unwrap(),
        sample_cptp(2, &mut rng, "random cptp qubit"),
        sample_cptp(3, &mut rng, "random cptp qutrit"),
    ];
    for map in &grid {
        let scan = hierarchy_scan(map, &budget, 5).unwrap();
        let cp = is_completely_positive(map, 1e-9).unwrap();
        let top = scan.last().unwrap();
        if (cp.kind == VerdictKind::CertifiedMember)
            != (top.verdict == VerdictKind::CertifiedMember)
        {
            ok = false;
            eprintln!("{}: exact CP disagrees with the top level", map.label());
        }
        let mut seen_violation = false;
        for cert in &scan {
            if seen_violation && cert.verdict != VerdictKind::CertifiedViolation {
                ok = false;
                eprintln!("{}: non-monotone verdicts", map.label());
            }
            seen_violation |= cert.verdict == VerdictKind::CertifiedViolation;
        }
    }
    let expect_level3 = |label: &str, member: bool| {
        let map = if label.starts_with("lambda") {
            lambda_family(label[7..].parse().unwrap()).unwrap()
        } else {
            omega_family(label[6..].parse().unwrap()).unwrap()
        };
        let scan = hierarchy_scan(&map, &budget, 5).unwrap();
        let got = scan[2].verdict == VerdictKind::CertifiedMember;
        (got == member, scan[2].verdict)
    };
    for (label, member) in [
        ("lambda:0.3", true),
        ("lambda:0.6", true),
        ("lambda:0.75", false),
        ("omega:0.4", false),
        ("omega:0.55", true),
    ] {
        let (good, verdict) = expect_level3(label, member);
        if !good {
            ok = false;
            eprintln!("{label}: level-3 verdict {}", verdict.as_str());
        }
    }

    // convexity and composition keep level-3 membership
    let mix = {
        let a = lambda_family(2.0 / 3.0).unwrap();
        let b = omega_family(0.5).unwrap();
        let s = a.superop() * cx(0.5, 0.0) + b.superop() * cx(0.5, 0.0);
        QuantumMap::new(2, s, "mixture of boundary maps").unwrap()
    };
    let composed = lambda_family(0.6)
        .unwrap()
        .compose(&omega_family(0.55).unwrap())
        .unwrap();
    for map in [&mix, &composed] {
        let cert = violation_search(map, 3, 8, 120, 13).unwrap();
        if cert.verdict == VerdictKind::CertifiedViolation {
            ok = false;
            eprintln!("{}: level-3 violation should not exist", map.label());
        }
    }

    // level 2 equals level 1 for qubits: positive TP maps show nothing at
    // k = 2, and a non-positive map is caught at both k = 1 and k = 2
    let mut rng = rng_from_seed(33);
    for i in 0..60 {
        let t_mix = (i as f64 + 0.5) / 60.0;
        let base = sample_cptp(2, &mut rng, "cptp part");
        let s = base.superop() * cx(1.0 - t_mix, 0.0)
            + transposition(2).unwrap().superop() * cx(t_mix, 0.0);
        let ptp = QuantumMap::new(2, s, "ptp sample").unwrap();
        let cert = violation_search(&ptp, 2, 3, 60, i as u64).unwrap();
        if cert.verdict == VerdictKind::CertifiedViolation {
            ok = false;
            eprintln!("positive TP sample {i} flagged at level 2");
        }
    }
    let bad = lambda_family(1.2).unwrap();
    for k in [1, 2] {
        let cert = violation_search(&bad, k, 6, 100, 17).unwrap();
        if cert.verdict != VerdictKind::CertifiedViolation {
            ok = false;
            eprintln!("lambda(a=1.2): no violation found at level {k}");
        }
    }

    // Kadison inequality on positive unital maps
    for map in [
        lambda_family(0.8).unwrap(),
        lambda_family(1.0).unwrap(),
        omega_family(0.45).unwrap(),
        transposition(2).unwrap(),
    ] {
        let check = kadison_check(&map, 10_000, 29).unwrap();
        if check.value < KADISON_FLOOR {
            ok = false;
            eprintln!("{}: Kadison margin {}", map.label(), check.value);
        }
    }

    // data processing: relative entropy never grows under sampled channels
    let mut rng = rng_from_seed(41);
    for i in 0..200 {
        let d = if i % 4 == 3 { 3 } else { 2 };
        let map = sample_cptp(d, &mut rng, "dpi sample");
        let rho = sample_density(d, d, &mut rng).unwrap();
        let sigma = sample_density(d, d, &mut rng).unwrap();
        let before = relative_entropy(&rho, &sigma).unwrap();
        let after = relative_entropy(
            &DensityOperator::new(hermitian_part(&map.apply_matrix(rho.matrix()).unwrap()))
                .unwrap(),
            &DensityOperator::new(hermitian_part(&map.apply_matrix(sigma.matrix()).unwrap()))
                .unwrap(),
        )
        .unwrap();
        if after > before + DPI_SLACK {
            ok = false;
            eprintln!("sample {i}: relative entropy grew {before} -> {after}");
        }
    }

    // identical certificate bytes regardless of the thread count
    let run = || {
        let map = lambda_family(0.7).unwrap();
        let scan = hierarchy_scan(&map, &SearchBudget { restarts: 6, iters: 80 }, 9).unwrap();
        let cp = is_completely_positive(&map, 1e-9).unwrap();
        let pos = is_positive(
            &map,
            &SeesawConfig {
                restarts: 6,
                iters: 80,
                seed: 9,
                tol: 1e-9,
            },
        )
        .unwrap();
        let schwarz = schwarz_check(&map, 800, 9).unwrap();
        let cert = analysis_certificate(
            &map,
            &scan,
            &cp,
            &pos,
            Some(&schwarz),
            None,
            &RunConfig {
                seed: 9,
                ..RunConfig::default()
            },
        );
        (certificate_to_bytes(&cert).unwrap(), cert)
    };
    let (bytes_single, cert) = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run);
    let (bytes_parallel, _) = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(run);
    if bytes_single != bytes_parallel {
        ok = false;
        eprintln!("certificate bytes differ across thread counts");
    }
    let outcome = replay(&cert).unwrap();
    if !outcome.passed {
        ok = false;
        eprintln!("replay failures: {:?}", outcome.failures);
    }

    verdict_line(
        8,
        &format!("hierarchy coherence and property suites, elapsed {:.2?}", t.elapsed()),
        ok,
    );
    assert!(ok);
}

#[test]
fn criterion_9_schwarz_coincidence() {
    let t = std::time::Instant::now();
    let mut ok = true;

    for (a, expect_violation) in [(0.70, true), (0.80, true), (0.60, false), (0.65, false)] {
        let check = schwarz_check(&lambda_family(a).unwrap(), 10_000, 19).unwrap();
        let violated = check.kind == VerdictKind::CertifiedViolation;
        if violated != expect_violation {
            ok = false;
            eprintln!(
                "lambda(a={a}): schwarz verdict {} (margin {})",
                check.kind.as_str(),
                check.value
            );
        }
    }
    // the omega family enters the Schwarz class as eps grows, mirroring
    // how the lambda family leaves it
    for (eps, expect_violation) in [(0.35, true), (0.45, true), (0.55, false), (0.60, false)] {
        let check = schwarz_check(&omega_family(eps).unwrap(), 10_000, 19).unwrap();
        let violated = check.kind == VerdictKind::CertifiedViolation;
        if violated != expect_violation {
            ok = false;
            eprintln!(
                "omega(eps={eps}): schwarz verdict {} (margin {})",
                check.kind.as_str(),
                check.value
            );
        }
    }

    verdict_line(
        9,
        &format!("Schwarz region boundaries for both families, elapsed {:.2?}", t.elapsed()),
        ok,
    );
    assert!(ok);
}
