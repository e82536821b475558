//! Superoperators: linear maps between matrix spaces, their Choi and Kraus
//! representations, and the structural constructors used by the other
//! modules.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, eigh, frobenius, identity, kron, matrix_unit, trace, unvec_rm, vec_rm, zeros, Mat, C64, ONE, ZERO,
};

/// Default absolute tolerance for the minimum Choi eigenvalue.
pub const CP_TOL: f64 = 1e-10;

/// Matrices larger than this condition number are treated as singular.
pub const MAX_COND: f64 = 1e12;

/// A linear map from `rows_in × cols_in` matrices to `rows_out × cols_out`
/// matrices, stored as its action on row-major vectorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    shape_in: (usize, usize),
    shape_out: (usize, usize),
    matrix: Mat,
}

impl SuperOp {
    pub fn new(shape_in: (usize, usize), shape_out: (usize, usize), matrix: Mat) -> Result<Self> {
        let want = (shape_out.0 * shape_out.1, shape_in.0 * shape_in.1);
        if matrix.shape() != want {
            return Err(Error::DimensionMismatch(format!(
                "superoperator matrix is {:?}, expected {:?}",
                matrix.shape(),
                want
            )));
        }
        Ok(Self { shape_in, shape_out, matrix })
    }

    /// Map `M_n -> M_m` from its `m² × n²` matrix.
    pub fn from_matrix(n: usize, m: usize, matrix: Mat) -> Result<Self> {
        Self::new((n, n), (m, m), matrix)
    }

    /// Builds the map by evaluating `f` on every matrix unit.
    pub fn from_fn<F>(shape_in: (usize, usize), shape_out: (usize, usize), f: F) -> Self
    where
        F: Fn(&Mat) -> Mat,
    {
        let (r, c_) = shape_in;
        let mut matrix = zeros(shape_out.0 * shape_out.1, r * c_);
        for j in 0..r {
            for k in 0..c_ {
                let out = f(&matrix_unit(r, c_, j, k));
                debug_assert_eq!(out.shape(), shape_out);
                matrix.set_column(j * c_ + k, &vec_rm(&out));
            }
        }
        Self { shape_in, shape_out, matrix }
    }

    pub fn square_from_fn<F: Fn(&Mat) -> Mat>(n: usize, f: F) -> Self {
        Self::from_fn((n, n), (n, n), f)
    }

    pub fn identity(n: usize) -> Self {
        Self { shape_in: (n, n), shape_out: (n, n), matrix: identity(n * n) }
    }

    pub fn zero(n: usize) -> Self {
        Self::zero_between((n, n), (n, n))
    }

    pub fn zero_between(shape_in: (usize, usize), shape_out: (usize, usize)) -> Self {
        Self { shape_in, shape_out, matrix: zeros(shape_out.0 * shape_out.1, shape_in.0 * shape_in.1) }
    }

    pub fn transpose_map(n: usize) -> Self {
        Self::square_from_fn(n, |a| a.transpose())
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn shape_in(&self) -> (usize, usize) {
        self.shape_in
    }

    pub fn shape_out(&self) -> (usize, usize) {
        self.shape_out
    }

    /// Input dimension `n` for a map on `M_n` (the row count in general).
    pub fn dim_in(&self) -> usize {
        self.shape_in.0
    }

    pub fn dim_out(&self) -> usize {
        self.shape_out.0
    }

    /// True for maps `M_n -> M_n`.
    pub fn is_endomorphism(&self) -> bool {
        self.shape_in == self.shape_out && self.shape_in.0 == self.shape_in.1
    }

    fn require_endomorphism(&self) -> Result<usize> {
        if self.is_endomorphism() {
            Ok(self.shape_in.0)
        } else {
            Err(Error::DimensionMismatch(format!(
                "expected a map M_n -> M_n, got {:?} -> {:?}",
                self.shape_in, self.shape_out
            )))
        }
    }

    pub fn apply(&self, a: &Mat) -> Result<Mat> {
        if a.shape() != self.shape_in {
            return Err(Error::DimensionMismatch(format!(
                "argument is {:?}, map expects {:?}",
                a.shape(),
                self.shape_in
            )));
        }
        let v = &self.matrix * vec_rm(a);
        Ok(unvec_rm(v.as_slice(), self.shape_out.0, self.shape_out.1))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape_in == other.shape_in && self.shape_out == other.shape_out {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{:?}->{:?} vs {:?}->{:?}",
                self.shape_in, self.shape_out, other.shape_in, other.shape_out
            )))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self { matrix: &self.matrix + &other.matrix, ..self.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self { matrix: &self.matrix - &other.matrix, ..self.clone() })
    }

    pub fn scale(&self, k: f64) -> Self {
        self.scale_complex(c(k, 0.0))
    }

    pub fn scale_complex(&self, k: C64) -> Self {
        Self { matrix: self.matrix.map(|z| z * k), ..self.clone() }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if other.shape_out != self.shape_in {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {:?}->{:?} after {:?}->{:?}",
                self.shape_in, self.shape_out, other.shape_in, other.shape_out
            )));
        }
        Ok(Self { shape_in: other.shape_in, shape_out: self.shape_out, matrix: &self.matrix * &other.matrix })
    }

    /// Adjoint with respect to the trace pairing `⟨A, B⟩ = tr(A† B)`.
    pub fn adjoint(&self) -> Self {
        Self { shape_in: self.shape_out, shape_out: self.shape_in, matrix: self.matrix.adjoint() }
    }

    /// The map `A ↦ φ(A†)†`.
    pub fn star(&self) -> Self {
        let (r, cl) = self.shape_in;
        let (ro, co) = self.shape_out;
        Self::from_fn((cl, r), (co, ro), |a| self.apply(&a.adjoint()).expect("shape checked").adjoint())
    }

    /// Inverse superoperator; fails when the matrix is numerically singular.
    pub fn inverse(&self) -> Result<Self> {
        Ok(Self {
            shape_in: self.shape_out,
            shape_out: self.shape_in,
            matrix: linalg::inverse(&self.matrix, MAX_COND)?,
        })
    }

    pub fn exp(&self) -> Result<Self> {
        self.require_endomorphism()?;
        Ok(Self { matrix: linalg::expm(&self.matrix), ..self.clone() })
    }

    /// Frobenius norm of the superoperator matrix.
    pub fn norm(&self) -> f64 {
        frobenius(&self.matrix)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        if self.same_shape(other).is_err() {
            return f64::INFINITY;
        }
        frobenius(&(&self.matrix - &other.matrix))
    }

    /// Operator norm of a CP map, `‖φ(I)‖`.
    pub fn cp_norm(&self) -> Result<f64> {
        let n = self.require_endomorphism()?;
        Ok(linalg::spectral_norm(&self.apply(&identity(n))?))
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        linalg::eigenvalues(&self.matrix)
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        linalg::numerical_rank(&self.matrix, rel_tol)
    }

    /// `‖φ(I) − I‖`.
    pub fn unitality_defect(&self) -> Result<f64> {
        let n = self.require_endomorphism()?;
        Ok(frobenius(&(self.apply(&identity(n))? - identity(n))))
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.unitality_defect().map(|d| d <= tol).unwrap_or(false)
    }

    /// Largest `‖φ(A†) − φ(A)†‖` over matrix units `A`.
    pub fn self_adjointness_defect(&self) -> f64 {
        let (r, cl) = self.shape_in;
        let (ro, co) = self.shape_out;
        if r != cl || ro != co {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for j in 0..r {
            for k in 0..r {
                let a = self.apply(&matrix_unit(r, r, j, k)).expect("shape");
                let b = self.apply(&matrix_unit(r, r, k, j)).expect("shape");
                worst = worst.max(frobenius(&(b - a.adjoint())));
            }
        }
        worst
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.self_adjointness_defect() <= tol
    }
}

/// `Σ_{jk} e_{jk} ⊗ φ(e_{jk})` for a map `M_n -> M_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub dim_in: usize,
    pub dim_out: usize,
    pub matrix: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    ops: Vec<Mat>,
}

/// Smallest singular value of the stacked vectorized operators below which
/// a Kraus family counts as linearly dependent.
pub const KRAUS_INDEPENDENCE_TOL: f64 = 1e-10;

impl KrausSet {
    pub fn new(ops: Vec<Mat>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::Input("empty Kraus set".into()));
        };
        let shape = first.shape();
        if let Some(bad) = ops.iter().find(|s| s.shape() != shape) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operators of shapes {:?} and {:?}",
                shape,
                bad.shape()
            )));
        }
        let stacked = Mat::from_fn(shape.0 * shape.1, ops.len(), |r, i| ops[i][(r / shape.1, r % shape.1)]);
        let smin = if ops.len() > shape.0 * shape.1 { 0.0 } else { linalg::min_singular_value(&stacked) };
        if smin <= KRAUS_INDEPENDENCE_TOL {
            return Err(Error::DependentKraus(smin));
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[Mat] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `(rows, cols)` of each operator, i.e. `(m, n)` for a map `M_n -> M_m`.
    pub fn shape(&self) -> (usize, usize) {
        self.ops[0].shape()
    }
}

/// `A ↦ Σ S_i A S_i†`.
pub fn from_kraus(k: &KrausSet) -> SuperOp {
    kraus_like_sum(k.ops(), k.ops(), None)
}

/// Matrix of `A ↦ Σ_{ij} c_{ij} S_i A T_j†` (identity coefficients when `c` is `None`).
pub(crate) fn kraus_like_sum(left: &[Mat], right: &[Mat], coeffs: Option<&Mat>) -> SuperOp {
    let (m, n) = left[0].shape();
    let (k, p) = right[0].shape();
    let mut matrix = zeros(m * k, n * p);
    for (i, s) in left.iter().enumerate() {
        for (j, t) in right.iter().enumerate() {
            let cij = match coeffs {
                Some(cm) => cm[(i, j)],
                None if i == j => ONE,
                None => ZERO,
            };
            if cij == ZERO {
                continue;
            }
            matrix += kron(s, &t.map(|z| z.conj())) * cij;
        }
    }
    SuperOp { shape_in: (n, p), shape_out: (m, k), matrix }
}

pub fn choi(phi: &SuperOp) -> Result<ChoiMatrix> {
    let (n, n2) = phi.shape_in;
    let (m, m2) = phi.shape_out;
    if n != n2 || m != m2 {
        return Err(Error::DimensionMismatch(format!(
            "Choi matrix needs square input and output, got {:?} -> {:?}",
            phi.shape_in, phi.shape_out
        )));
    }
    let mut cm = zeros(n * m, n * m);
    for j in 0..n {
        for k in 0..n {
            let col = phi.matrix.column(j * n + k);
            for a in 0..m {
                for b in 0..m {
                    cm[(j * m + a, k * m + b)] = col[a * m + b];
                }
            }
        }
    }
    Ok(ChoiMatrix { dim_in: n, dim_out: m, matrix: cm })
}

pub fn from_choi(ch: &ChoiMatrix) -> Result<SuperOp> {
    let (n, m) = (ch.dim_in, ch.dim_out);
    if ch.matrix.shape() != (n * m, n * m) {
        return Err(Error::DimensionMismatch(format!(
            "Choi matrix is {:?}, expected {}x{}",
            ch.matrix.shape(),
            n * m,
            n * m
        )));
    }
    let mut matrix = zeros(m * m, n * n);
    for j in 0..n {
        for k in 0..n {
            for a in 0..m {
                for b in 0..m {
                    matrix[(a * m + b, j * n + k)] = ch.matrix[(j * m + a, k * m + b)];
                }
            }
        }
    }
    SuperOp::from_matrix(n, m, matrix)
}

fn effective_tol(tol: f64, scale: f64) -> f64 {
    if scale > 1.0 {
        tol * scale
    } else {
        tol
    }
}

/// Kraus operators from the positive eigenvectors of a Choi matrix.
pub fn kraus_from_choi(ch: &ChoiMatrix, tol: f64) -> Result<KrausSet> {
    let (n, m) = (ch.dim_in, ch.dim_out);
    let (vals, vecs) = eigh(&ch.matrix);
    let scale = linalg::spectral_norm(&ch.matrix);
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -effective_tol(tol, scale) {
        return Err(Error::NotCp { min_eig: min });
    }
    let keep = tol * scale.max(1.0);
    let mut ops = Vec::new();
    for (idx, &lam) in vals.iter().enumerate().rev() {
        if lam <= keep {
            continue;
        }
        let mut v: Vec<C64> = vecs.column(idx).iter().copied().collect();
        linalg::fix_phase(&mut v);
        let root = lam.sqrt();
        ops.push(Mat::from_fn(m, n, |a, j| v[j * m + a] * root));
    }
    if ops.is_empty() {
        // the zero map: a single zero operator is the only sensible presentation
        return Err(Error::Input("zero map has no Kraus operators".into()));
    }
    KrausSet::new(ops)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpVerdict {
    pub verdict: bool,
    pub min_eig: f64,
}

/// CP test on the minimum eigenvalue of the Choi matrix. The tolerance is
/// scaled by `‖C‖` when that exceeds one; non-Hermitian Choi matrices fail.
pub fn is_completely_positive(phi: &SuperOp, tol: f64) -> Result<CpVerdict> {
    let ch = choi(phi)?;
    Ok(choi_verdict(&ch.matrix, tol))
}

pub(crate) fn choi_verdict(cm: &Mat, tol: f64) -> CpVerdict {
    let vals = linalg::eigvalsh(cm);
    let min_eig = vals.first().copied().unwrap_or(0.0);
    let scale = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = effective_tol(tol, scale);
    let hermitian = linalg::hermiticity_defect(cm) <= tol.max(1e-12 * scale);
    CpVerdict { verdict: hermitian && min_eig >= -tol, min_eig }
}

/// `A ↦ U† φ(U A U†) U`.
pub fn conjugate_by_unitary(phi: &SuperOp, u: &Mat) -> Result<SuperOp> {
    let n = phi.require_endomorphism()?;
    if u.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("unitary is {:?}, map is on M_{n}", u.shape())));
    }
    let defect = linalg::unitarity_defect(u);
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let ud = u.adjoint();
    let pre = kron(u, &u.map(|z| z.conj()));
    let post = kron(&ud, &u.transpose());
    Ok(SuperOp { matrix: post * &phi.matrix * pre, ..phi.clone() })
}

/// Entrywise multiplication `A ↦ M ∘ A`.
pub fn schur_map(multipliers: &Mat) -> SuperOp {
    let (r, cl) = multipliers.shape();
    let d: Vec<C64> = vec_rm(multipliers).iter().copied().collect();
    SuperOp { shape_in: (r, cl), shape_out: (r, cl), matrix: linalg::diag(&d) }
}

/// Multipliers of a Schur map, if the superoperator matrix is diagonal.
pub fn schur_multipliers(phi: &SuperOp, tol: f64) -> Option<Mat> {
    let (r, cl) = phi.shape_in;
    if phi.shape_out != phi.shape_in {
        return None;
    }
    let m = &phi.matrix;
    let scale = frobenius(m).max(1.0);
    let mut off = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                off += m[(i, j)].norm_sqr();
            }
        }
    }
    if off.sqrt() > tol * scale {
        return None;
    }
    Some(Mat::from_fn(r, cl, |j, k| m[(j * cl + k, j * cl + k)]))
}

/// The block map `[[A, B], [C, D]] ↦ [[φ(A), γ(B)], [γ(C†)†, ψ(D)]]` on `M_{n+k}`.
pub fn block_corner_map(phi: &SuperOp, gamma: &SuperOp, psi: &SuperOp) -> Result<SuperOp> {
    let n = phi.require_endomorphism()?;
    let k = psi.require_endomorphism()?;
    if gamma.shape_in != (n, k) || gamma.shape_out != (n, k) {
        return Err(Error::DimensionMismatch(format!(
            "corner must map {n}x{k} blocks to {n}x{k} blocks, got {:?} -> {:?}",
            gamma.shape_in, gamma.shape_out
        )));
    }
    let d = n + k;
    Ok(SuperOp::square_from_fn(d, |a| {
        let a11 = a.view((0, 0), (n, n)).into_owned();
        let a12 = a.view((0, n), (n, k)).into_owned();
        let a21 = a.view((n, 0), (k, n)).into_owned();
        let a22 = a.view((n, n), (k, k)).into_owned();
        let mut out = zeros(d, d);
        out.view_mut((0, 0), (n, n)).copy_from(&phi.apply(&a11).expect("shape"));
        out.view_mut((0, n), (n, k)).copy_from(&gamma.apply(&a12).expect("shape"));
        out.view_mut((n, 0), (k, n)).copy_from(&gamma.apply(&a21.adjoint()).expect("shape").adjoint());
        out.view_mut((n, n), (k, k)).copy_from(&psi.apply(&a22).expect("shape"));
        out
    }))
}

/// `A ↦ tr(D A)·I`.
pub fn state_map(d: &Mat) -> Result<SuperOp> {
    if !d.is_square() {
        return Err(Error::DimensionMismatch(format!("density is {:?}", d.shape())));
    }
    let n = d.nrows();
    Ok(SuperOp::square_from_fn(n, |a| identity(n) * trace(&(d * a))))
}

/// `A ↦ τ(A)·C` with `τ(A) = tr(D A)`.
pub fn rank_one_map(d: &Mat, cmat: &Mat) -> Result<SuperOp> {
    if !d.is_square() || d.shape() != cmat.shape() {
        return Err(Error::DimensionMismatch(format!("functional {:?} and range {:?}", d.shape(), cmat.shape())));
    }
    let n = d.nrows();
    Ok(SuperOp::square_from_fn(n, |a| cmat * trace(&(d * a))))
}

/// Convenience: the pinching `A ↦ diag(A)`.
pub fn pinching(n: usize) -> SuperOp {
    let ops: Vec<Mat> = (0..n).map(|i| matrix_unit(n, n, i, i)).collect();
    from_kraus(&KrausSet::new(ops).expect("independent units"))
}
