//! Dense complex operators: Hermitian/density/unitary types, spectral
//! routines, the three norms used throughout, relative entropy, and seeded
//! sampling of random operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance for accepting stored entries as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Eigenvalues at or below this magnitude count as zero when deciding the
/// support of a state.
pub const SUPPORT_CUTOFF: f64 = 1e-12;
/// Density operators may dip this far below zero before we reject them.
pub const DENSITY_EIG_TOL: f64 = 1e-10;

pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Matrix unit E_{jk} = |j><k|.
pub fn matrix_unit(dim: usize, j: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(j, k)] = cx(1.0, 0.0);
    m
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(0., 0.), cx(1., 0.), cx(1., 0.), cx(0., 0.)])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(0., 0.), cx(0., -1.), cx(0., 1.), cx(0., 0.)])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(1., 0.), cx(0., 0.), cx(0., 0.), cx(-1., 0.)])
}

/// Largest entry modulus; the cheap norm used in validation messages.
pub fn max_abs(x: &CMatrix) -> f64 {
    x.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn all_finite(x: &CMatrix) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_hermitian(x: &CMatrix, tol: f64) -> bool {
    if !x.is_square() {
        return false;
    }
    let scale = max_abs(x).max(1.0);
    max_abs(&(x - x.adjoint())) <= tol * scale
}

/// (X + X†)/2; used to scrub roundoff before spectral routines.
pub fn hermitian_part(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()).scale(0.5)
}

pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs(&(a - b)) <= tol
}

/// Trace of a Kronecker-product factor. `partial_trace_left` sums out the
/// left (first) tensor factor of an `(dl·dr) × (dl·dr)` matrix, returning a
/// `dr × dr` matrix; `partial_trace_right` sums out the right factor.
pub fn partial_trace_left(x: &CMatrix, dl: usize, dr: usize) -> CMatrix {
    debug_assert_eq!(x.nrows(), dl * dr);
    let mut out = CMatrix::zeros(dr, dr);
    for i in 0..dl {
        for j in 0..dr {
            for l in 0..dr {
                out[(j, l)] += x[(i * dr + j, i * dr + l)];
            }
        }
    }
    out
}

pub fn partial_trace_right(x: &CMatrix, dl: usize, dr: usize) -> CMatrix {
    debug_assert_eq!(x.nrows(), dl * dr);
    let mut out = CMatrix::zeros(dl, dl);
    for i in 0..dl {
        for k in 0..dl {
            for j in 0..dr {
                out[(i, k)] += x[(i * dr + j, k * dr + j)];
            }
        }
    }
    out
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Returns `(eigenvalues, Q)` with `X = Q diag(λ) Q†`. The input must be
/// Hermitian to within `1e-9` relative; it is symmetrized before the solve
/// so roundoff never leaks into the spectrum.
///
/// The solve is a cyclic Jacobi iteration with complex Givens rotations.
/// Jacobi is slower than tridiagonalization but unconditionally stable and
/// exact on degenerate spectra (the eigenvector matrix is a product of
/// unitaries, hence unitary to machine precision), which matters here:
/// most spectra in this crate are highly degenerate, and stock iterative
/// solvers were observed returning eigenvectors with O(1) residuals on
/// exactly such inputs. Matrices in this crate are ≤ 16×16, where Jacobi's
/// O(n³) sweeps are negligible.
pub fn eigh(x: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !x.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigh expects a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    if !all_finite(x) {
        return Err(Error::InvalidInput("eigh: non-finite entries".into()));
    }
    if !is_hermitian(x, 1e-9) {
        return Err(Error::NotHermitian(format!(
            "asymmetry {:.3e} exceeds tolerance",
            max_abs(&(x - x.adjoint()))
        )));
    }
    let mut h = hermitian_part(x);
    let n = h.nrows();
    let mut q = CMatrix::identity(n, n);
    let scale = max_abs(&h).max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for r in (p + 1)..n {
                off = off.max(h[(p, r)].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = h[(p, r)];
                let mag = apq.norm();
                if mag <= 1e-18 * scale {
                    continue;
                }
                // 2×2 Hermitian block [[app, apq], [conj(apq), aqq]]:
                // the rotation J = [[c, s·e^{iφ}], [−s·e^{−iφ}, c]] with
                // e^{iφ} the phase of apq zeroes the off-diagonal entry.
                let app = h[(p, p)].re;
                let aqq = h[(r, r)].re;
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phase.scale(s); // s·e^{iφ}
                // column update: H ← H·J, Q ← Q·J
                for k in 0..n {
                    let hkp = h[(k, p)];
                    let hkq = h[(k, r)];
                    h[(k, p)] = hkp.scale(c) - hkq * sp.conj();
                    h[(k, r)] = hkp * sp + hkq.scale(c);
                    let qkp = q[(k, p)];
                    let qkq = q[(k, r)];
                    q[(k, p)] = qkp.scale(c) - qkq * sp.conj();
                    q[(k, r)] = qkp * sp + qkq.scale(c);
                }
                // row update: H ← J†·H
                for k in 0..n {
                    let hpk = h[(p, k)];
                    let hqk = h[(r, k)];
                    h[(p, k)] = hpk.scale(c) - hqk * sp;
                    h[(r, k)] = hpk * sp.conj() + hqk.scale(c);
                }
                // scrub roundoff on the zeroed pair
                h[(p, r)] = cx(0.0, 0.0);
                h[(r, p)] = cx(0.0, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        h[(a, a)]
            .re
            .partial_cmp(&h[(b, b)].re)
            .unwrap()
            .then(a.cmp(&b))
    });
    let vals: Vec<f64> = order.iter().map(|&i| h[(i, i)].re).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &q.column(src));
    }
    #[cfg(debug_assertions)]
    {
        let lambda = CMatrix::from_fn(
            n,
            n,
            |i, j| if i == j { cx(vals[i], 0.0) } else { cx(0.0, 0.0) },
        );
        let resid = max_abs(&(hermitian_part(x) - &vecs * lambda * vecs.adjoint()));
        debug_assert!(
            resid <= 1e-10 * scale.max(1.0),
            "eigendecomposition residual {resid:.3e} out of bounds"
        );
    }
    Ok((vals, vecs))
}

/// Singular values (descending), reusing the trusted Hermitian solver on
/// the embedding [[0, X], [X†, 0]], whose spectrum is {±σ_i} plus zeros.
/// Going through the embedding instead of X†X keeps small singular values
/// at full absolute precision (the Gram route floors them near √ε).
pub fn singular_values(x: &CMatrix) -> Result<Vec<f64>> {
    let (r, c) = (x.nrows(), x.ncols());
    let mut emb = CMatrix::zeros(r + c, r + c);
    for i in 0..r {
        for j in 0..c {
            emb[(i, r + j)] = x[(i, j)];
            emb[(r + j, i)] = x[(i, j)].conj();
        }
    }
    let (vals, _) = eigh(&emb)?;
    let mut sv: Vec<f64> = vals.iter().rev().take(r.min(c)).map(|l| l.max(0.0)).collect();
    sv.truncate(r.min(c));
    Ok(sv)
}

/// Sum of singular values; for Hermitian input this is Σ|λ_i|.
///
/// Hermitian inputs go through [`eigh`] (accurate on degenerate spectra);
/// anything else falls back to singular values.
pub fn trace_norm(x: &CMatrix) -> Result<f64> {
    if !all_finite(x) {
        return Err(Error::InvalidInput("trace_norm: non-finite entries".into()));
    }
    if x.is_square() && is_hermitian(x, 1e-9) {
        let (vals, _) = eigh(x)?;
        return Ok(vals.iter().map(|l| l.abs()).sum());
    }
    Ok(singular_values(x)?.iter().sum())
}

/// Largest singular value; for Hermitian input the largest |λ_i|.
pub fn operator_norm(x: &CMatrix) -> Result<f64> {
    if !all_finite(x) {
        return Err(Error::InvalidInput(
            "operator_norm: non-finite entries".into(),
        ));
    }
    if x.is_square() && is_hermitian(x, 1e-9) {
        let (vals, _) = eigh(x)?;
        return Ok(vals.iter().fold(0.0f64, |a, &l| a.max(l.abs())));
    }
    Ok(singular_values(x)?
        .first()
        .copied()
        .unwrap_or(0.0))
}

/// Frobenius norm sqrt(Tr X†X).
pub fn hilbert_schmidt_norm(x: &CMatrix) -> Result<f64> {
    if !all_finite(x) {
        return Err(Error::InvalidInput(
            "hilbert_schmidt_norm: non-finite entries".into(),
        ));
    }
    Ok(x.norm())
}

/// Real Hilbert-Schmidt inner product Re Tr(A†B) restricted to Hermitian
/// arguments, where it equals Tr(AB).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    (a.adjoint() * b).trace().re
}

/// A Hermitian operator: square complex matrix equal to its adjoint within
/// `1e-12` relative tolerance. Entries are stored exactly as given.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    entries: CMatrix,
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidInput(format!(
                "Hermitian operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if !all_finite(&entries) {
            return Err(Error::InvalidInput(
                "Hermitian operator: non-finite entries".into(),
            ));
        }
        if !is_hermitian(&entries, HERMITICITY_TOL) {
            return Err(Error::NotHermitian(format!(
                "asymmetry {:.3e} exceeds {:.0e} relative",
                max_abs(&(&entries - entries.adjoint())),
                HERMITICITY_TOL
            )));
        }
        Ok(Self {
            dim: entries.nrows(),
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }
}

/// A density operator: Hermitian, eigenvalues ≥ −1e-10, unit trace within
/// 1e-10.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    base: HermitianOperator,
}

impl DensityOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let base = HermitianOperator::new(entries)?;
        let tr = base.entries().trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "density operator trace {} is not 1",
                tr
            )));
        }
        let (vals, _) = eigh(base.entries())?;
        if vals[0] < -DENSITY_EIG_TOL {
            return Err(Error::InvalidInput(format!(
                "density operator has eigenvalue {:.3e} < -1e-10",
                vals[0]
            )));
        }
        Ok(Self { base })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.base.entries()
    }

    pub fn as_hermitian(&self) -> &HermitianOperator {
        &self.base
    }
}

/// A unitary: U U† = 1 within 1e-10.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    dim: usize,
    entries: CMatrix,
}

impl UnitaryOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() || !all_finite(&entries) {
            return Err(Error::InvalidInput(
                "unitary must be a finite square matrix".into(),
            ));
        }
        let d = entries.nrows();
        let gram = &entries * entries.adjoint();
        if max_abs(&(gram - identity(d))) > 1e-10 {
            return Err(Error::InvalidInput("matrix is not unitary".into()));
        }
        Ok(Self { dim: d, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// U X U†.
    pub fn conjugate(&self, x: &CMatrix) -> CMatrix {
        &self.entries * x * self.entries.adjoint()
    }
}

/// A bipartite pure state with its Schmidt data.
///
/// `schmidt_coefficients` are the singular values of the `d_A × d_B`
/// reshaping of `amplitudes` (amplitude index `a = i·d_B + j` for
/// `e_i ⊗ f_j`), sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct PureStateVector {
    dims: (usize, usize),
    amplitudes: CVector,
    schmidt_coefficients: Vec<f64>,
}

impl PureStateVector {
    pub fn new(dims: (usize, usize), amplitudes: CVector) -> Result<Self> {
        let (da, db) = dims;
        if da == 0 || db == 0 || amplitudes.len() != da * db {
            return Err(Error::DimensionMismatch(format!(
                "amplitude vector of length {} does not match dims {}x{}",
                amplitudes.len(),
                da,
                db
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "pure state norm {} is not 1",
                norm
            )));
        }
        let mut reshaped = CMatrix::zeros(da, db);
        for i in 0..da {
            for j in 0..db {
                reshaped[(i, j)] = amplitudes[i * db + j];
            }
        }
        let sv = singular_values(&reshaped)?;
        Ok(Self {
            dims,
            amplitudes,
            schmidt_coefficients: sv,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn schmidt_coefficients(&self) -> &[f64] {
        &self.schmidt_coefficients
    }

    /// Rank-1 projector |ψ><ψ| on the full bipartite space.
    pub fn projector(&self) -> CMatrix {
        let n = self.amplitudes.len();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        m
    }
}

/// Tr ρ (ln ρ − ln σ), natural logarithm. Returns `+∞` when the support of
/// ρ is not contained in the support of σ.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy between dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let (lr, _) = eigh(rho.matrix())?;
    let (ls, us) = eigh(sigma.matrix())?;
    let s1: f64 = lr
        .iter()
        .filter(|&&l| l > SUPPORT_CUTOFF)
        .map(|&l| l * l.ln())
        .sum();
    let mut s2 = 0.0;
    for (j, &mu) in ls.iter().enumerate() {
        let vj = us.column(j);
        // weight <v_j| ρ |v_j>
        let w = (vj.adjoint() * rho.matrix() * vj)[(0, 0)].re;
        if mu <= SUPPORT_CUTOFF {
            if w > 1e-12 {
                return Ok(f64::INFINITY);
            }
        } else {
            s2 += w * mu.ln();
        }
    }
    let d = s1 - s2;
    // The quantity is nonnegative; only roundoff can push it below zero.
    Ok(if d < 0.0 && d > -1e-9 { 0.0 } else { d })
}

/// Stream-split ChaCha generator: deterministic given `(seed, stream)`,
/// independent across streams. All randomized searches derive their
/// per-restart generators this way so parallel scheduling cannot change
/// results.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    cx(re, im).scale(std::f64::consts::FRAC_1_SQRT_2)
}

/// Matrix of independent standard complex Gaussians.
pub fn sample_ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// G G† / Tr(G G†) with G a d×rank_bound complex Gaussian matrix.
pub fn sample_density(dim: usize, rank_bound: usize, rng: &mut ChaCha8Rng) -> Result<DensityOperator> {
    if rank_bound == 0 || rank_bound > dim {
        return Err(Error::InvalidInput(format!(
            "rank bound {} outside 1..={}",
            rank_bound, dim
        )));
    }
    let g = sample_ginibre(rng, dim, rank_bound);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    DensityOperator::new(hermitian_part(&w.scale(1.0 / tr)))
}

/// GUE-flavored random Hermitian (G + G†)/2.
pub fn sample_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let g = sample_ginibre(rng, dim, dim);
    HermitianOperator::new(hermitian_part(&g)).expect("construction is Hermitian")
}

/// Haar unitary via QR of a Ginibre matrix with the R-diagonal phase fix.
pub fn sample_unitary(dim: usize, rng: &mut ChaCha8Rng) -> UnitaryOperator {
    let g = sample_ginibre(rng, dim, dim);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            cx(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    UnitaryOperator::new(q).expect("QR produces a unitary")
}

/// Random pure state with Schmidt rank exactly `k`: ψ = Σ_{i<k} s_i e_i⊗f_i
/// with QR-orthonormal frames and coefficients bounded away from zero.
pub fn sample_pure(
    dims: (usize, usize),
    schmidt_rank: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PureStateVector> {
    let (da, db) = dims;
    if schmidt_rank == 0 || schmidt_rank > da.min(db) {
        return Err(Error::InvalidInput(format!(
            "Schmidt rank {} outside 1..={}",
            schmidt_rank,
            da.min(db)
        )));
    }
    let e = sample_ginibre(rng, da, schmidt_rank).qr().q();
    let f = sample_ginibre(rng, db, schmidt_rank).qr().q();
    let mut s: Vec<f64> = (0..schmidt_rank).map(|_| rng.gen_range(0.3..1.0)).collect();
    let norm: f64 = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut s {
        *x /= norm;
    }
    let mut amp = CVector::zeros(da * db);
    for r in 0..schmidt_rank {
        for i in 0..da {
            for j in 0..db {
                amp[i * db + j] += cx(s[r], 0.0) * e[(i, r)] * f[(j, r)];
            }
        }
    }
    PureStateVector::new(dims, amp)
}
