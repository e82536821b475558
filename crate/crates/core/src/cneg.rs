//! Conditionally negative maps: the exponential test, a sampled
//! quadratic-form falsifier, extraction of the canonical form
//! `ψ(A) = sA + YA + AY† − Σ λ_i S_i A S_i†`, and inverses of unital
//! conditionally negative maps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gen::Gen;
use crate::linalg::{self, c, frobenius, identity, matrix_unit, real, trace, zeros, Mat, C64};
use crate::qorder::{default_grid, is_q_positive};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::superop::{choi, is_completely_positive, SuperOp, CP_TOL, MAX_COND};

pub const DEFAULT_S_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Upper limit of `∫_0^∞ e^{-sψ} ds`; `e^{-40} ≈ 4e-18`.
pub const QUAD_S_MAX: f64 = 40.0;

pub const DEFAULT_QUAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CnegTerm {
    pub lambda: f64,
    pub op: Mat,
}

/// Canonical data `(s, Y, {(λ_i, S_i)})` with `tr Y = 0`, `tr S_i = 0` and
/// `tr(S_i† S_j) = n δ_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct CnegForm {
    pub s: f64,
    pub y: Mat,
    pub terms: Vec<CnegTerm>,
}

impl CnegForm {
    pub fn dim(&self) -> usize {
        self.y.nrows()
    }

    /// The map `A ↦ sA + YA + AY† − Σ λ_i S_i A S_i†`.
    pub fn reconstruct(&self) -> SuperOp {
        let n = self.dim();
        let yd = self.y.adjoint();
        SuperOp::square_from_fn(n, |a| {
            let mut out = a * real(self.s) + &self.y * a + a * &yd;
            for t in &self.terms {
                out -= &t.op * a * t.op.adjoint() * real(t.lambda);
            }
            out
        })
    }

    /// The map `A ↦ sA + YA + AY†` without the dissipative terms.
    pub fn drift_part(&self) -> SuperOp {
        CnegForm { terms: vec![], ..self.clone() }.reconstruct()
    }

    /// `A ↦ Σ λ_i S_i A S_i†`.
    pub fn dissipative_part(&self) -> SuperOp {
        let n = self.dim();
        SuperOp::square_from_fn(n, |a| {
            let mut out = zeros(n, n);
            for t in &self.terms {
                out += &t.op * a * t.op.adjoint() * real(t.lambda);
            }
            out
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CnegVerdict {
    pub verdict: bool,
    pub s_grid: Vec<f64>,
    pub min_eigs: Vec<f64>,
}

fn self_adjoint_check(psi: &SuperOp) -> Result<()> {
    if !psi.is_endomorphism() {
        return Err(Error::DimensionMismatch("expected a map M_n -> M_n".into()));
    }
    let defect = psi.self_adjointness_defect();
    if defect > 1e-10 * psi.norm().max(1.0) {
        return Err(Error::NotSelfAdjoint(defect));
    }
    Ok(())
}

/// `ψ` is conditionally negative iff `exp(−sψ)` is CP for every `s ≥ 0`;
/// checked on `s_grid`.
pub fn is_conditionally_negative(psi: &SuperOp, s_grid: &[f64], tol: f64) -> Result<CnegVerdict> {
    self_adjoint_check(psi)?;
    let mut min_eigs = Vec::with_capacity(s_grid.len());
    let mut verdict = true;
    for &s in s_grid {
        let e = psi.scale(-s).exp()?;
        let v = is_completely_positive(&e, tol)?;
        min_eigs.push(v.min_eig);
        verdict &= v.verdict;
    }
    Ok(CnegVerdict { verdict, s_grid: s_grid.to_vec(), min_eigs })
}

/// A tuple `(A_i, f_i)` with `Σ A_i f_i = 0` and positive quadratic form
/// `Σ (f_i, ψ(A_i† A_j) f_j)`, which proves `ψ` is not conditionally negative.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticWitness {
    pub ops: Vec<Mat>,
    pub vectors: Vec<Mat>,
    pub value: f64,
}

/// `Σ_{ij} (f_i, ψ(A_i† A_j) f_j)`.
pub fn quadratic_form(psi: &SuperOp, ops: &[Mat], vectors: &[Mat]) -> Result<C64> {
    let mut total = c(0.0, 0.0);
    for (ai, fi) in ops.iter().zip(vectors) {
        for (aj, fj) in ops.iter().zip(vectors) {
            let q = psi.apply(&(ai.adjoint() * aj))?;
            total += (fi.adjoint() * q * fj)[(0, 0)];
        }
    }
    Ok(total)
}

/// Random tuples with `Σ A_i f_i = 0` built from the null space of
/// `[A_1 … A_m]`. Returns a witness when some sample has a positive form.
pub fn quadratic_form_falsifier(
    psi: &SuperOp,
    seed: u64,
    samples: usize,
    tol: f64,
) -> Result<Option<QuadraticWitness>> {
    self_adjoint_check(psi)?;
    let n = psi.dim_in();
    let mut g = Gen::new(seed);
    let scale = psi.norm().max(1.0);
    for _ in 0..samples {
        let m = 1 + g.index(3);
        let mut ops: Vec<Mat> = (0..m).map(|_| g.random_matrix(n, n)).collect();
        if m == 1 {
            // a single operator needs a kernel
            let v = g.random_matrix(n, 1);
            let proj = &v * v.adjoint() / real(v.norm_squared());
            ops[0] = &ops[0] * (identity(n) - proj);
        }
        let stacked = Mat::from_fn(n, m * n, |r, col| ops[col / n][(r, col % n)]);
        let Some(null) = null_space(&stacked) else { continue };
        let coeffs = g.random_matrix(null.ncols(), 1);
        let f = null * coeffs;
        let vectors: Vec<Mat> = (0..m).map(|i| f.rows(i * n, n).into_owned()).collect();
        let norm: f64 = vectors.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        let vectors: Vec<Mat> = vectors.into_iter().map(|v| v / real(norm)).collect();
        let opnorm: f64 = ops.iter().map(|a| linalg::spectral_norm(a).powi(2)).sum();
        let value = quadratic_form(psi, &ops, &vectors)?.re;
        if value > tol * scale * opnorm.max(1.0) {
            return Ok(Some(QuadraticWitness { ops, vectors, value }));
        }
    }
    Ok(None)
}

fn null_space(a: &Mat) -> Option<Mat> {
    let cols = a.ncols();
    // right singular vectors with zero singular value, via the Hermitian Gram matrix
    let (vals, vecs) = linalg::eigh(&(a.adjoint() * a));
    let top = vals.last().copied().unwrap_or(0.0).max(1.0);
    let idx: Vec<usize> = (0..cols).filter(|&i| vals[i] <= 1e-12 * top).collect();
    if idx.is_empty() {
        return None;
    }
    Some(Mat::from_fn(cols, idx.len(), |r, k| vecs[(r, idx[k])]))
}

/// Canonical form of a self-adjoint `ψ`.
///
/// `sI + Y` is read off as `e_a ↦ (1/n) Σ_k ψ(e_a e_k†) e_k`; the residual
/// `R(A) = sA + YA + AY† − ψ(A)` must be CP and its Choi eigenvectors give
/// the terms, sorted by decreasing `λ`.
pub fn extract_canonical_form(psi: &SuperOp, tol: f64) -> Result<CnegForm> {
    self_adjoint_check(psi)?;
    let n = psi.dim_in();
    let nf = n as f64;
    let mut k = zeros(n, n);
    for a in 0..n {
        let mut col = zeros(n, 1);
        for kk in 0..n {
            let img = psi.apply(&matrix_unit(n, n, a, kk))?;
            col += img.column(kk);
        }
        k.set_column(a, &(col.column(0) / real(nf)));
    }
    let tr = trace(&k) / real(nf);
    let s = tr.re;
    let y = &k - identity(n) * tr;
    let drift = CnegForm { s, y: y.clone(), terms: vec![] }.reconstruct();
    let residual = drift.sub(psi)?;
    let ch = choi(&residual)?.matrix;
    let (vals, vecs) = linalg::eigh(&ch);
    let scale = linalg::spectral_norm(&ch).max(1.0);
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -tol * scale {
        return Err(Error::ResidualNotCp { min_eig: min });
    }
    let mut terms = Vec::new();
    for idx in (0..vals.len()).rev() {
        let mu = vals[idx];
        if mu <= tol * scale {
            continue;
        }
        let mut op = Mat::from_fn(n, n, |a, j| vecs[(j * n + a, idx)]);
        linalg::fix_phase_mat(&mut op);
        terms.push(CnegTerm { lambda: mu / nf, op: op * real(nf.sqrt()) });
    }
    let form = CnegForm { s, y, terms };
    let err = form.reconstruct().distance(psi);
    if err > 1e-8 * psi.norm().max(1.0) {
        return Err(Error::ReconstructionFailed(err));
    }
    Ok(form)
}

/// Inverse of a unital conditionally negative map, cross-checked against
/// `∫_0^∞ exp(−sψ) ds` and certified q-positive on the default grid.
pub fn inverse_of_unital_cneg(psi: &SuperOp, quad_tol: f64) -> Result<SuperOp> {
    self_adjoint_check(psi)?;
    let defect = psi.unitality_defect()?;
    if defect > 1e-10 * psi.norm().max(1.0) {
        return Err(Error::NotUnital(defect));
    }
    if !is_conditionally_negative(psi, &DEFAULT_S_GRID, CP_TOL)?.verdict {
        return Err(Error::NotConditionallyNegative);
    }
    let cond = linalg::condition_number(psi.matrix());
    if cond.is_nan() || cond >= MAX_COND {
        return Err(Error::Singular(cond));
    }
    let direct = psi.inverse()?;
    let integral = laplace_integral(psi)?;
    let gap = frobenius(&(integral - direct.matrix()));
    if gap > quad_tol {
        return Err(Error::QuadratureMismatch(gap));
    }
    let cert = is_q_positive(&direct, &default_grid(), CP_TOL)?;
    if !cert.verdict {
        return Err(Error::NotQPositive(format!(
            "inverse fails the resolvent CP test at t = {:?}",
            cert.first_failure()
        )));
    }
    Ok(direct)
}

/// `∫_0^{40} exp(−sψ) ds` as a superoperator matrix.
pub fn laplace_integral(psi: &SuperOp) -> Result<Mat> {
    let m = psi.matrix().clone();
    let opts = QuadOptions { abs_tol: 1e-10, rel_tol: 0.0, max_intervals: 4000 };
    let r = integrate_with_breaks(
        |s: f64| linalg::expm(&(&m * real(-s))),
        0.0,
        QUAD_S_MAX,
        &[0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
        opts,
    )?;
    Ok(r.value)
}

/// For invertible `φ_2`: `φ_1 ≥_q φ_2` iff `φ_2^{-1}` is conditionally
/// negative and `φ_2^{-1} − φ_1^{-1}` is CP.
pub fn invertible_subordinate_test(phi1: &SuperOp, phi2: &SuperOp) -> Result<bool> {
    for phi in [phi1, phi2] {
        let cond = linalg::condition_number(phi.matrix());
        if cond.is_nan() || cond >= MAX_COND {
            return Err(Error::Singular(cond));
        }
    }
    let inv1 = phi1.inverse()?;
    let inv2 = phi2.inverse()?;
    let cneg = match is_conditionally_negative(&inv2, &DEFAULT_S_GRID, CP_TOL) {
        Ok(v) => v.verdict,
        Err(Error::NotSelfAdjoint(_)) => false,
        Err(e) => return Err(e),
    };
    Ok(cneg && is_completely_positive(&inv2.sub(&inv1)?, CP_TOL)?.verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, diag_real, I, ONE};
    use crate::qorder::{q_dominates, resolvent_subordinate};
    use crate::qpure::make_invertible_qpure;
    use crate::superop::schur_map;
    use proptest::prelude::*;

    fn y_phiu() -> Mat {
        diag(&[I, -I])
    }

    #[test]
    fn identity_is_cneg() {
        assert!(is_conditionally_negative(&SuperOp::identity(2), &DEFAULT_S_GRID, CP_TOL).unwrap().verdict);
    }

    #[test]
    fn phiu_inverse_is_cneg() {
        let psi = CnegForm { s: 1.0, y: y_phiu(), terms: vec![] }.reconstruct();
        assert!(is_conditionally_negative(&psi, &DEFAULT_S_GRID, CP_TOL).unwrap().verdict);
    }

    #[test]
    fn negative_transpose_is_not_cneg() {
        let psi = SuperOp::transpose_map(2).scale(-1.0);
        let v = is_conditionally_negative(&psi, &DEFAULT_S_GRID, CP_TOL).unwrap();
        assert!(!v.verdict);
        // exp(sT) = cosh(s) id + sinh(s) T; on the antisymmetric vector the Choi
        // eigenvalue is 0·cosh(s) − sinh(s)
        let s = 1.0f64;
        assert!((v.min_eigs[2] + s.sinh()).abs() < 1e-10);
    }

    #[test]
    fn non_self_adjoint_rejected() {
        let psi = SuperOp::identity(2).scale_complex(I);
        assert!(matches!(is_conditionally_negative(&psi, &DEFAULT_S_GRID, CP_TOL), Err(Error::NotSelfAdjoint(_))));
    }

    #[test]
    fn extraction_examples() {
        let f = extract_canonical_form(&SuperOp::identity(2), 1e-10).unwrap();
        assert!((f.s - 1.0).abs() < 1e-12 && frobenius(&f.y) < 1e-12 && f.terms.is_empty());

        let phiu = make_invertible_qpure(&[1.0, -1.0], None).unwrap();
        let f = extract_canonical_form(&phiu.inverse().unwrap(), 1e-10).unwrap();
        assert!((f.s - 1.0).abs() < 1e-10);
        assert!(frobenius(&(&f.y - y_phiu())) < 1e-10);
        assert!(f.terms.is_empty());

        let sd = diag_real(&[1.0, -1.0]);
        let psi = SuperOp::square_from_fn(2, |a| a * real(2.0) - &sd * a * &sd);
        let f = extract_canonical_form(&psi, 1e-10).unwrap();
        assert!((f.s - 2.0).abs() < 1e-12);
        assert!(frobenius(&f.y) < 1e-12);
        assert_eq!(f.terms.len(), 1);
        assert!((f.terms[0].lambda - 1.0).abs() < 1e-12);
        assert!(frobenius(&(&f.terms[0].op - &sd)) < 1e-12);
        assert!(trace(&f.terms[0].op).norm() < 1e-12);
    }

    #[test]
    fn extraction_rejects_non_cneg() {
        let psi = SuperOp::transpose_map(2).scale(-1.0);
        assert!(matches!(extract_canonical_form(&psi, 1e-10), Err(Error::ResidualNotCp { .. })));
    }

    #[test]
    fn inverse_examples() {
        let id = inverse_of_unital_cneg(&SuperOp::identity(2), DEFAULT_QUAD_TOL).unwrap();
        assert!(id.distance(&SuperOp::identity(2)) < 1e-12);

        let psi = CnegForm { s: 1.0, y: y_phiu(), terms: vec![] }.reconstruct();
        let phi = inverse_of_unital_cneg(&psi, DEFAULT_QUAD_TOL).unwrap();
        let want = Mat::from_row_slice(2, 2, &[ONE, ONE / c(1.0, 2.0), ONE / c(1.0, -2.0), ONE]);
        assert!(phi.distance(&schur_map(&want)) < 1e-12);
    }

    #[test]
    fn inverse_requires_unital() {
        let psi = SuperOp::identity(2).scale(2.0);
        assert!(matches!(inverse_of_unital_cneg(&psi, DEFAULT_QUAD_TOL), Err(Error::NotUnital(_))));
    }

    #[test]
    fn quadrature_agrees_with_direct_inverse() {
        let mut g = Gen::new(17);
        for n in 2..=3 {
            let psi = g.random_unital_cneg(n, 2);
            let integral = laplace_integral(&psi).unwrap();
            let gap = frobenius(&(integral - psi.inverse().unwrap().matrix()));
            assert!(gap < 1e-6, "gap {gap}");
        }
    }

    #[test]
    fn subordinate_test_examples() {
        let id = SuperOp::identity(2);
        assert!(invertible_subordinate_test(&id, &id).unwrap());

        let phiu = make_invertible_qpure(&[1.0, -1.0], None).unwrap();
        let sub = resolvent_subordinate(&phiu, 1.0).unwrap();
        assert!(invertible_subordinate_test(&phiu, &sub).unwrap());
        // the inverses differ by exactly the identity map
        let diff = sub.inverse().unwrap().sub(&phiu.inverse().unwrap()).unwrap();
        assert!(diff.distance(&id) < 1e-12);

        let ce = schur_map(&Mat::from_row_slice(2, 2, &[ONE, c(0.5, 0.5), c(0.5, -0.5), ONE]));
        let grid_verdict = q_dominates(&id, &ce, &default_grid(), CP_TOL).unwrap().verdict;
        assert_eq!(invertible_subordinate_test(&id, &ce).unwrap(), grid_verdict);
    }

    #[test]
    fn subordinate_test_rejects_singular() {
        let st = crate::superop::state_map(&(identity(2) * real(0.5))).unwrap();
        assert!(matches!(invertible_subordinate_test(&st, &SuperOp::identity(2)), Err(Error::Singular(_))));
    }

    #[test]
    fn falsifier_finds_witness_for_negative_transpose() {
        let psi = SuperOp::transpose_map(2).scale(-1.0);
        let w = quadratic_form_falsifier(&psi, 1, 200, 1e-10).unwrap().expect("witness");
        let sum: Mat = w.ops.iter().zip(&w.vectors).map(|(a, f)| a * f).fold(zeros(2, 1), |acc, x| acc + x);
        assert!(frobenius(&sum) < 1e-10);
        assert!(w.value > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn extraction_round_trip(seed in any::<u64>(), n in 2usize..=3) {
            let mut g = Gen::new(seed);
            let form = g.random_unital_cneg_form(n, 2);
            let psi = form.reconstruct();
            let f = extract_canonical_form(&psi, 1e-10).unwrap();
            prop_assert!(f.reconstruct().distance(&psi) < 1e-8);
            prop_assert!(trace(&f.y).norm() < 1e-10);
            for (i, a) in f.terms.iter().enumerate() {
                prop_assert!(trace(&a.op).norm() < 1e-10);
                for (j, b) in f.terms.iter().enumerate() {
                    let want = if i == j { n as f64 } else { 0.0 };
                    prop_assert!((trace(&(a.op.adjoint() * &b.op)) - real(want)).norm() < 1e-8);
                }
            }
            prop_assert!(f.terms.windows(2).all(|w| w[0].lambda >= w[1].lambda));
        }

        #[test]
        fn uniqueness_of_s_and_y(seed in any::<u64>()) {
            // the same map built from two different trace-orthonormal term bases
            let mut g = Gen::new(seed);
            let n = 2;
            let form = g.random_unital_cneg_form(n, 2);
            let u = g.random_unitary(form.terms.len());
            // rotate the terms: Σ λ S A S† with equal λ is basis independent
            let lam = 0.3;
            let rotated: Vec<CnegTerm> = (0..form.terms.len()).map(|i| {
                let op = (0..form.terms.len()).fold(zeros(n, n), |acc, j| acc + &form.terms[j].op * u[(j, i)]);
                CnegTerm { lambda: lam, op }
            }).collect();
            let a = CnegForm { terms: form.terms.iter().map(|t| CnegTerm { lambda: lam, op: t.op.clone() }).collect(), ..form.clone() };
            let b = CnegForm { terms: rotated, ..form.clone() };
            prop_assert!(a.reconstruct().distance(&b.reconstruct()) < 1e-10);
            let fa = extract_canonical_form(&a.reconstruct(), 1e-10).unwrap();
            let fb = extract_canonical_form(&b.reconstruct(), 1e-10).unwrap();
            prop_assert!((fa.s - form.s).abs() < 1e-8 && (fb.s - form.s).abs() < 1e-8);
            prop_assert!(frobenius(&(&fa.y - &form.y)) < 1e-8);
            prop_assert!(frobenius(&(&fb.y - &form.y)) < 1e-8);
        }

        #[test]
        fn correspondence_both_directions(seed in any::<u64>()) {
            let mut g = Gen::new(seed);
            let psi = g.random_unital_cneg(2, 1 + (seed % 2) as usize);
            let phi = inverse_of_unital_cneg(&psi, DEFAULT_QUAD_TOL).unwrap();
            prop_assert!(is_q_positive(&phi, &default_grid(), CP_TOL).unwrap().verdict);
            let q = g.random_invertible_unital_q_positive(2);
            prop_assert!(is_conditionally_negative(&q.inverse().unwrap(), &DEFAULT_S_GRID, CP_TOL).unwrap().verdict);
        }

        #[test]
        fn exponential_contraction(seed in any::<u64>(), n in 2usize..=3) {
            let mut g = Gen::new(seed);
            let psi = g.random_unital_cneg(n, 2);
            for s in [1.0f64, 5.0, 10.0] {
                let norm = psi.scale(-s).exp().unwrap().cp_norm().unwrap();
                prop_assert!(norm <= (-s).exp() * (1.0 + 1e-8));
            }
        }
    }

    #[test]
    fn falsifier_never_contradicts_exponential_test() {
        let mut g = Gen::new(99);
        for i in 0..100 {
            let psi = match i % 3 {
                0 => g.random_unital_cneg(2, 2),
                1 => g.random_hermitian_preserving(2),
                _ => g.random_cp_map(2, 2).scale(-1.0),
            };
            let exp_verdict = is_conditionally_negative(&psi, &DEFAULT_S_GRID, CP_TOL).unwrap().verdict;
            let witness = quadratic_form_falsifier(&psi, i as u64, 40, 1e-9).unwrap();
            if exp_verdict {
                assert!(witness.is_none(), "sample {i}: falsifier contradicts exponential test");
            }
        }
    }
}
