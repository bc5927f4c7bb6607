//! Linear maps on d×d operators: superoperator and Choi forms, composition
//! and tensoring, structural predicates, and the named qubit families
//! (depolarizing-difference Λ_a, transpose-mixture Ω_ε, the Φ_p family, and
//! plain transposition).
//!
//! Vectorization is column-stacking throughout: `vec(X)` concatenates the
//! columns of `X`, so the superoperator of `X ↦ AXB` is `Bᵀ ⊗ A`. The Choi
//! matrix uses the normalization `C(Φ) = (1/d) Σ_jk E_jk ⊗ Φ[E_jk]`, which
//! makes `C(id)` the maximally entangled projector and gives a trace-
//! preserving map partial trace `identity/d` over the image factor.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::operator::{
    all_finite, cx, eigh, hermitian_part, hs_inner, identity, is_hermitian, matrix_unit,
    partial_trace_left, partial_trace_right, sample_ginibre, CMatrix, CVector, HermitianOperator,
};
use crate::{Error, Result};

/// A linear map `Φ : M_d(ℂ) → M_d(ℂ)` stored as its d²×d² superoperator on
/// column-vectorized operators, plus a human-readable label that survives
/// into reports.
#[derive(Debug, Clone)]
pub struct QuantumMap {
    dim: usize,
    superop: CMatrix,
    label: String,
}

fn vec_mat(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

fn unvec(v: &CVector, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

impl QuantumMap {
    pub fn new(dim: usize, superop: CMatrix, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("map dimension must be positive".into()));
        }
        if superop.nrows() != dim * dim || superop.ncols() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator for dim {} must be {}x{}, got {}x{}",
                dim,
                dim * dim,
                dim * dim,
                superop.nrows(),
                superop.ncols()
            )));
        }
        if !all_finite(&superop) {
            return Err(Error::InvalidInput("superoperator has non-finite entries".into()));
        }
        Ok(Self {
            dim,
            superop,
            label: label.into(),
        })
    }

    /// Build a map from its action on matrix units.
    pub fn from_action(
        dim: usize,
        label: impl Into<String>,
        action: impl Fn(&CMatrix) -> CMatrix,
    ) -> Self {
        let mut superop = CMatrix::zeros(dim * dim, dim * dim);
        for l in 0..dim {
            for k in 0..dim {
                let img = action(&matrix_unit(dim, k, l));
                superop.set_column(l * dim + k, &vec_mat(&img));
            }
        }
        Self {
            dim,
            superop,
            label: label.into(),
        }
    }

    pub fn identity_map(dim: usize) -> Self {
        Self {
            dim,
            superop: CMatrix::identity(dim * dim, dim * dim),
            label: format!("id(d={})", dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Raw application to any complex matrix (no Hermiticity bookkeeping).
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "map of dim {} applied to {}x{} operator",
                self.dim,
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(unvec(&(&self.superop * vec_mat(x)), self.dim))
    }

    /// Application to a Hermitian operator. Errors if the image fails to be
    /// Hermitian within 1e-10, which only happens for maps that are not
    /// Hermiticity-preserving.
    pub fn apply(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        let raw = self.apply_matrix(x.entries())?;
        if !is_hermitian(&raw, 1e-10) {
            return Err(Error::NotHermitian(format!(
                "image under map '{}' is not Hermitian",
                self.label
            )));
        }
        HermitianOperator::new(hermitian_part(&raw))
    }

    /// Φ_self ∘ Φ_other (apply `other` first).
    pub fn compose(&self, other: &QuantumMap) -> Result<QuantumMap> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "composing maps of dims {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(QuantumMap {
            dim: self.dim,
            superop: &self.superop * &other.superop,
            label: format!("{} . {}", self.label, other.label),
        })
    }

    /// `id_k ⊗ Φ` acting on (k·d)×(k·d) operators, where the map acts on the
    /// second tensor factor blockwise.
    pub fn tensor_with_identity(&self, k: usize) -> Result<QuantumMap> {
        if k == 0 {
            return Err(Error::InvalidInput("identity factor must be positive".into()));
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let d = self.dim;
        let map = QuantumMap::from_action(k * d, format!("id_{} (x) {}", k, self.label), |x| {
            let mut out = CMatrix::zeros(k * d, k * d);
            for bi in 0..k {
                for bj in 0..k {
                    let block = x.view((bi * d, bj * d), (d, d)).into_owned();
                    let img = self.apply_matrix(&block).expect("dims match");
                    out.view_mut((bi * d, bj * d), (d, d)).copy_from(&img);
                }
            }
            out
        });
        Ok(map)
    }

    /// C(Φ) = (1/d) Σ_jk E_jk ⊗ Φ[E_jk].
    pub fn choi(&self) -> ChoiMatrix {
        let d = self.dim;
        let mut entries = CMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for k in 0..d {
                let img = self
                    .apply_matrix(&matrix_unit(d, j, k))
                    .expect("dims match");
                entries += matrix_unit(d, j, k).kronecker(&img);
            }
        }
        ChoiMatrix {
            dim: d,
            entries: entries.scale(1.0 / d as f64),
        }
    }

    pub fn is_trace_preserving(&self) -> bool {
        let d = self.dim;
        for j in 0..d {
            for k in 0..d {
                let tr = self
                    .apply_matrix(&matrix_unit(d, j, k))
                    .expect("dims match")
                    .trace();
                let expected = if j == k { 1.0 } else { 0.0 };
                if (tr.re - expected).abs() > 1e-10 || tr.im.abs() > 1e-10 {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_hermiticity_preserving(&self) -> bool {
        is_hermitian(&self.choi().entries, 1e-10)
    }

    pub fn is_unital(&self) -> bool {
        let img = self.apply_matrix(&identity(self.dim)).expect("dims match");
        crate::operator::approx_eq(&img, &identity(self.dim), 1e-10)
    }
}

/// Choi matrix with the `1/d` normalization.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    dim: usize,
    entries: CMatrix,
}

impl ChoiMatrix {
    pub fn new(dim: usize, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != dim * dim || entries.ncols() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix for dim {} must be {}x{}",
                dim,
                dim * dim,
                dim * dim
            )));
        }
        if !all_finite(&entries) {
            return Err(Error::InvalidInput("Choi matrix has non-finite entries".into()));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Smallest eigenvalue; the map is completely positive iff this is ≥ 0.
    pub fn lambda_min(&self) -> Result<f64> {
        let (vals, _) = eigh(&hermitian_part(&self.entries))?;
        Ok(vals[0])
    }

    /// Partial trace over the image factor; equals identity/d iff the
    /// underlying map is trace-preserving.
    pub fn image_partial_trace(&self) -> CMatrix {
        partial_trace_right(&self.entries, self.dim, self.dim)
    }
}

/// Inverse of [`QuantumMap::choi`]: Φ[X] = d · Tr_1[(Xᵀ ⊗ 1) C].
pub fn map_from_choi(choi: &ChoiMatrix, label: impl Into<String>) -> QuantumMap {
    let d = choi.dim;
    let c = choi.entries.clone();
    QuantumMap::from_action(d, label, move |x| {
        let lifted = x.transpose().kronecker(&identity(d)) * &c;
        partial_trace_left(&lifted, d, d).scale(d as f64)
    })
}

/// Λ_a[X] = (1·Tr X − aX)/(2 − a) on qubits. Trace-preserving for every
/// admissible a; positive iff 0 ≤ a ≤ 1; completely positive iff a ≤ 1/2.
pub fn lambda_family(a: f64) -> Result<QuantumMap> {
    if !(a.is_finite()) {
        return Err(Error::InvalidInput("lambda_family: a must be finite".into()));
    }
    if (a - 2.0).abs() < 1e-12 {
        return Err(Error::InvalidInput(
            "lambda_family: a = 2 makes the normalization singular".into(),
        ));
    }
    Ok(QuantumMap::from_action(2, format!("lambda(a={})", a), move |x| {
        (identity(2).scale_complex(x.trace()) - x.scale_complex(cx(a, 0.0))).scale(1.0 / (2.0 - a))
    }))
}

/// Ω_ε[X] = (ε/2)·1·Tr X + (1 − ε)·Xᵀ on qubits. Unital and trace-
/// preserving; completely positive iff ε ≥ 2/3.
pub fn omega_family(eps: f64) -> Result<QuantumMap> {
    if !eps.is_finite() {
        return Err(Error::InvalidInput("omega_family: eps must be finite".into()));
    }
    Ok(QuantumMap::from_action(2, format!("omega(eps={})", eps), move |x| {
        identity(2).scale_complex(x.trace() * cx(eps / 2.0, 0.0))
            + x.transpose().scale(1.0 - eps)
    }))
}

/// Φ_p[X] = p·1_d·Tr X − X. k-positive iff p ≥ k; the p = 1 member is the
/// reduction map.
pub fn phi_p_family(dim: usize, p: f64) -> Result<QuantumMap> {
    if dim < 2 {
        return Err(Error::InvalidInput(
            "phi_p_family: dimension must be at least 2".into(),
        ));
    }
    if !p.is_finite() {
        return Err(Error::InvalidInput("phi_p_family: p must be finite".into()));
    }
    Ok(QuantumMap::from_action(
        dim,
        format!("phi_p(d={},p={})", dim, p),
        move |x| identity(dim).scale_complex(x.trace() * cx(p, 0.0)) - x,
    ))
}

/// T[X] = Xᵀ.
pub fn transposition(dim: usize) -> Result<QuantumMap> {
    if dim == 0 {
        return Err(Error::InvalidInput("transposition: dimension must be positive".into()));
    }
    Ok(QuantumMap::from_action(
        dim,
        format!("transpose(d={})", dim),
        |x| x.transpose(),
    ))
}

trait ScaleComplex {
    fn scale_complex(&self, z: Complex64) -> CMatrix;
}

impl ScaleComplex for CMatrix {
    fn scale_complex(&self, z: Complex64) -> CMatrix {
        self.map(|e| e * z)
    }
}

/// A map known only on a subspace: a linearly independent Hermitian basis
/// together with its images.
#[derive(Debug, Clone)]
pub struct RestrictedMap {
    domain_basis: Vec<HermitianOperator>,
    images: Vec<HermitianOperator>,
}

impl RestrictedMap {
    pub fn new(domain_basis: Vec<HermitianOperator>, images: Vec<HermitianOperator>) -> Result<Self> {
        if domain_basis.len() != images.len() {
            return Err(Error::DimensionMismatch(
                "restricted map: basis and image counts differ".into(),
            ));
        }
        check_independent(&domain_basis)?;
        Ok(Self {
            domain_basis,
            images,
        })
    }

    pub fn domain_basis(&self) -> &[HermitianOperator] {
        &self.domain_basis
    }

    pub fn images(&self) -> &[HermitianOperator] {
        &self.images
    }
}

/// Gram-matrix independence test over the reals: smallest singular value of
/// (⟨b_i, b_j⟩_HS) must exceed 1e-10.
pub fn check_independent(basis: &[HermitianOperator]) -> Result<()> {
    let n = basis.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty basis".into()));
    }
    let gram = CMatrix::from_fn(n, n, |i, j| {
        cx(hs_inner(basis[i].entries(), basis[j].entries()), 0.0)
    });
    // The Gram matrix is PSD; its smallest eigenvalue is
    // min over unit coefficient vectors c of ‖Σ c_i b_i‖²_HS.
    let (vals, _) = eigh(&gram)?;
    let smin = vals.first().copied().unwrap_or(0.0);
    if smin <= 1e-10 {
        return Err(Error::Precondition(format!(
            "basis is linearly dependent (Gram smallest singular value {:.3e})",
            smin
        )));
    }
    Ok(())
}

/// Forget everything about `map` except its action on `basis`.
pub fn restrict(map: &QuantumMap, basis: &[HermitianOperator]) -> Result<RestrictedMap> {
    check_independent(basis)?;
    let images = basis
        .iter()
        .map(|b| map.apply(b))
        .collect::<Result<Vec<_>>>()?;
    RestrictedMap::new(basis.to_vec(), images)
}

/// Random CPTP map: a random PSD matrix is rescaled so its image-side
/// partial trace is identity/d, then read back as a Choi matrix.
pub fn sample_cptp(dim: usize, rng: &mut ChaCha8Rng, label: impl Into<String>) -> QuantumMap {
    let d2 = dim * dim;
    let g = sample_ginibre(rng, d2, d2);
    let w = hermitian_part(&(&g * g.adjoint()));
    let a = partial_trace_right(&w, dim, dim);
    let (vals, q) = eigh(&a).expect("partial trace of PSD is Hermitian");
    let inv_sqrt = &q * CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            cx(1.0 / vals[i].max(1e-300).sqrt(), 0.0)
        } else {
            cx(0.0, 0.0)
        }
    }) * q.adjoint();
    let lift = inv_sqrt.kronecker(&identity(dim));
    let c = (&lift * w * &lift).scale(1.0 / dim as f64);
    let choi = ChoiMatrix::new(dim, c).expect("shape by construction");
    map_from_choi(&choi, label)
}
