//! Dense complex linear algebra helpers.
//!
//! Everything here works on [`Mat`] (a column-major `nalgebra` matrix of
//! `Complex<f64>`). The vectorization convention used by the rest of the
//! crate is row-major: `vec(A)[j * cols + k] = A[(j, k)]`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Mat = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> Mat {
    Mat::zeros(rows, cols)
}

/// Matrix unit `e_{jk}` of the given shape.
pub fn matrix_unit(rows: usize, cols: usize, j: usize, k: usize) -> Mat {
    let mut m = zeros(rows, cols);
    m[(j, k)] = ONE;
    m
}

pub fn diag_real(d: &[f64]) -> Mat {
    Mat::from_fn(d.len(), d.len(), |i, j| if i == j { real(d[i]) } else { ZERO })
}

pub fn diag(d: &[C64]) -> Mat {
    Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { ZERO })
}

/// Row-major vectorization.
pub fn vec_rm(a: &Mat) -> DVector<C64> {
    let cols = a.ncols();
    DVector::from_fn(a.nrows() * cols, |idx, _| a[(idx / cols, idx % cols)])
}

/// Inverse of [`vec_rm`].
pub fn unvec_rm(v: &[C64], rows: usize, cols: usize) -> Mat {
    debug_assert_eq!(v.len(), rows * cols);
    Mat::from_fn(rows, cols, |j, k| v[j * cols + k])
}

pub fn frobenius(a: &Mat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &Mat) -> C64 {
    a.diagonal().iter().copied().sum()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn hermitian_part(a: &Mat) -> Mat {
    (a + a.adjoint()).scale(0.5)
}

pub fn hermiticity_defect(a: &Mat) -> f64 {
    frobenius(&(a - a.adjoint()))
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues ascending.
///
/// Column `i` of the returned matrix is the eigenvector for `values[i]`.
pub fn eigh(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn eigvalsh(a: &Mat) -> Vec<f64> {
    eigh(a).0
}

pub fn min_eigvalsh(a: &Mat) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

/// Eigenvalues of a general square complex matrix (complex Schur form).
pub fn eigenvalues(a: &Mat) -> Vec<C64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let schur = a.clone().schur();
    let (_, t) = schur.unpack();
    t.diagonal().iter().copied().collect()
}

pub fn singular_values(a: &Mat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

pub fn spectral_norm(a: &Mat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn min_singular_value(a: &Mat) -> f64 {
    let sv = singular_values(a);
    if a.nrows().min(a.ncols()) == 0 {
        return 0.0;
    }
    sv.last().copied().unwrap_or(0.0)
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(a: &Mat, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

pub fn condition_number(a: &Mat) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Inverse of a square matrix; fails when the condition number exceeds `max_cond`.
pub fn inverse(a: &Mat, max_cond: f64) -> Result<Mat> {
    let cond = condition_number(a);
    if cond.is_nan() || cond >= max_cond {
        return Err(Error::Singular(cond));
    }
    a.clone().lu().try_inverse().ok_or(Error::Singular(cond))
}

/// Unitary (or partial isometry) factor `W` of the polar decomposition `a = W P`.
pub fn polar_factor(a: &Mat) -> Mat {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    u * v_t
}

pub fn unitarity_defect(u: &Mat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    frobenius(&(u.adjoint() * u - identity(u.nrows())))
}

pub fn expm(a: &Mat) -> Mat {
    a.clone().exp()
}

/// Multiplies each eigenvector column by a phase so that its largest-modulus
/// entry is real and positive. Ties go to the lowest index.
pub fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, z) in v.iter().enumerate() {
        let n = z.norm();
        if n > best_norm * (1.0 + 1e-9) + 1e-14 {
            best = i;
            best_norm = n;
        }
    }
    if best_norm > 0.0 {
        let phase = v[best].conj() / v[best].norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

pub fn fix_phase_mat(m: &mut Mat) {
    let mut data: Vec<C64> = m.iter().copied().collect();
    fix_phase(&mut data);
    for (dst, src) in m.iter_mut().zip(data) {
        *dst = src;
    }
}

/// Positive square root of a positive semidefinite matrix.
pub fn psd_sqrt(a: &Mat) -> Mat {
    let (vals, vecs) = eigh(a);
    let d = diag_real(&vals.iter().map(|v| v.max(0.0).sqrt()).collect::<Vec<_>>());
    &vecs * d * vecs.adjoint()
}

pub fn approx_eq(a: &Mat, b: &Mat, tol: f64) -> bool {
    a.shape() == b.shape() && frobenius(&(a - b)) <= tol
}
