//! Classification of unital q-pure maps: rank-one maps `A ↦ tr(DA)·I` with
//! faithful `D`, and invertible maps unitarily equivalent to the Schur map
//! with multipliers `1/(1 + i(λ_j − λ_k))`.

use crate::cneg::extract_canonical_form;
use crate::error::{Error, Result};
use crate::linalg::{self, c, frobenius, identity, matrix_unit, real, Mat, ONE};
use crate::qorder::{default_grid, is_q_positive, resolvent_subordinate};
use crate::superop::{conjugate_by_unitary, rank_one_map, schur_map, SuperOp, CP_TOL, MAX_COND};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum QPureVerdict {
    RankOneFaithful {
        d: Mat,
    },
    /// `conjugate_by_unitary(φ, u)` is the Schur normal form for `lambdas`.
    InvertibleSchur {
        u: Mat,
        lambdas: Vec<f64>,
    },
    NotQPure {
        witness: SuperOp,
        reason: String,
    },
    Indeterminate {
        reason: String,
    },
}

impl QPureVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            QPureVerdict::RankOneFaithful { .. } => "RankOneFaithful",
            QPureVerdict::InvertibleSchur { .. } => "InvertibleSchur",
            QPureVerdict::NotQPure { .. } => "NotQPure",
            QPureVerdict::Indeterminate { .. } => "Indeterminate",
        }
    }

    pub fn is_q_pure(&self) -> bool {
        matches!(self, QPureVerdict::RankOneFaithful { .. } | QPureVerdict::InvertibleSchur { .. })
    }
}

/// The functional `D` of a rank-one map `φ(A) = tr(DA)·C`, read from the
/// `(0,0)` entries, assuming `C = I`.
fn state_density(phi: &SuperOp) -> Mat {
    let n = phi.dim_in();
    Mat::from_fn(n, n, |k, j| phi.apply(&matrix_unit(n, n, j, k)).expect("shape")[(0, 0)])
}

fn unital_check(phi: &SuperOp, tol: f64) -> Result<()> {
    let defect = phi.unitality_defect()?;
    if defect > tol {
        return Err(Error::NotUnital(defect));
    }
    Ok(())
}

pub fn is_rank_one_q_pure(phi: &SuperOp, tol: f64) -> Result<QPureVerdict> {
    if !phi.is_endomorphism() {
        return Err(Error::DimensionMismatch("expected a map M_n -> M_n".into()));
    }
    let rank = phi.rank(RANK_TOL);
    if rank != 1 {
        return Err(Error::NotRankOne(rank));
    }
    unital_check(phi, tol)?;
    let n = phi.dim_in();
    let d = linalg::hermitian_part(&state_density(phi));
    let (vals, vecs) = linalg::eigh(&d);
    if vals[0] < -tol {
        return Err(Error::NotQPositive(format!("state functional has eigenvalue {:e}", vals[0])));
    }
    if vals[0] > tol {
        return Ok(QPureVerdict::RankOneFaithful { d });
    }
    let mut p = Mat::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        if v > tol {
            let col = vecs.column(i);
            p += col * col.adjoint();
        }
    }
    let witness = rank_one_map(&d, &p)?;
    Ok(QPureVerdict::NotQPure { witness, reason: format!("state is not faithful (smallest eigenvalue {:e})", vals[0]) })
}

/// `m_jk = 1/(1 + i(λ_j − λ_k))`.
pub fn phiu_multipliers(lambdas: &[f64]) -> Mat {
    let n = lambdas.len();
    Mat::from_fn(n, n, |j, k| ONE / c(1.0, lambdas[j] - lambdas[k]))
}

fn lambda_sum_check(lambdas: &[f64]) -> Result<()> {
    let sum: f64 = lambdas.iter().sum();
    let scale = lambdas.iter().fold(1.0f64, |a, l| a.max(l.abs()));
    if sum.abs() > 1e-12 * scale {
        return Err(Error::LambdaSumNonzero(sum));
    }
    Ok(())
}

/// The invertible unital q-pure Schur map for `lambdas`, optionally
/// conjugated: `A ↦ U† φ(UAU†) U`.
pub fn make_invertible_qpure(lambdas: &[f64], u: Option<&Mat>) -> Result<SuperOp> {
    if lambdas.is_empty() {
        return Err(Error::Input("need at least one λ".into()));
    }
    lambda_sum_check(lambdas)?;
    let phi = schur_map(&phiu_multipliers(lambdas));
    match u {
        Some(u) => conjugate_by_unitary(&phi, u),
        None => Ok(phi),
    }
}

pub fn is_invertible_unital_q_pure(phi: &SuperOp, tol: f64) -> Result<QPureVerdict> {
    if !phi.is_endomorphism() {
        return Err(Error::DimensionMismatch("expected a map M_n -> M_n".into()));
    }
    unital_check(phi, tol)?;
    let cond = linalg::condition_number(phi.matrix());
    if cond.is_nan() || cond >= MAX_COND {
        return Err(Error::Singular(cond));
    }
    let psi = phi.inverse()?;
    let form = match extract_canonical_form(&psi, 1e-10) {
        Ok(f) => f,
        Err(Error::ResidualNotCp { min_eig }) => {
            return Err(Error::NotQPositive(format!(
                "inverse is not conditionally negative (residual Choi eigenvalue {min_eig:e})"
            )))
        }
        Err(e) => return Err(e),
    };
    let n = phi.dim_in();
    let anti = frobenius(&(&form.y + form.y.adjoint()));
    let max_term = form.terms.iter().map(|t| t.lambda).fold(0.0, f64::max);
    if (form.s - 1.0).abs() <= tol && max_term <= tol && anti <= tol {
        // -iY is Hermitian; its eigenbasis diagonalizes φ into Schur form
        let h = linalg::hermitian_part(&(&form.y * c(0.0, -1.0)));
        let (lambdas, mut u) = linalg::eigh(&h);
        for j in 0..n {
            let mut col: Vec<_> = u.column(j).iter().copied().collect();
            linalg::fix_phase(&mut col);
            for (i, z) in col.into_iter().enumerate() {
                u[(i, j)] = z;
            }
        }
        let mean = lambdas.iter().sum::<f64>() / n as f64;
        let lambdas: Vec<f64> = lambdas.into_iter().map(|l| l - mean).collect();
        return Ok(QPureVerdict::InvertibleSchur { u, lambdas });
    }
    let drift = form.drift_part();
    let witness = drift.inverse()?;
    Ok(QPureVerdict::NotQPure {
        witness,
        reason: format!("inverse has dissipative part (largest λ {max_term:e}, s − 1 = {:e})", form.s - 1.0),
    })
}

/// Dispatch on the numerical rank of the superoperator matrix.
pub fn classify_q_pure(phi: &SuperOp) -> Result<QPureVerdict> {
    classify_q_pure_with(phi, &default_grid(), DEFAULT_TOL)
}

pub fn classify_q_pure_with(phi: &SuperOp, grid: &[f64], tol: f64) -> Result<QPureVerdict> {
    if !phi.is_endomorphism() {
        return Err(Error::DimensionMismatch("expected a map M_n -> M_n".into()));
    }
    unital_check(phi, tol)?;
    let cert = is_q_positive(phi, grid, CP_TOL)?;
    if !cert.verdict {
        return Err(Error::NotQPositive(format!("resolvent CP test fails at t = {:?}", cert.first_failure())));
    }
    let n = phi.dim_in();
    let rank = phi.rank(RANK_TOL);
    if rank == 1 {
        is_rank_one_q_pure(phi, tol)
    } else if rank == n * n {
        is_invertible_unital_q_pure(phi, tol)
    } else {
        Ok(QPureVerdict::Indeterminate {
            reason: format!("intermediate rank {rank} of {}: outside the classified families", n * n),
        })
    }
}

/// Smallest distance from `psi` to `{0} ∪ {φ^{(s)} : s ≥ 0}` and the
/// minimizing `s` (`f64::INFINITY` for the zero map).
pub fn distance_to_resolvent_family(phi: &SuperOp, psi: &SuperOp) -> Result<(f64, f64)> {
    let dist = |s: f64| -> Result<f64> { Ok(resolvent_subordinate(phi, s)?.distance(psi)) };
    let mut best = (f64::INFINITY, psi.norm());
    // coarse scan in u = s/(1+s) ∈ [0, 1), then golden-section refinement
    let steps = 400;
    let mut best_i: usize = 0;
    for i in 0..steps {
        let u = i as f64 / steps as f64;
        let s = u / (1.0 - u);
        let d = dist(s)?;
        if d < best.1 {
            best = (s, d);
            best_i = i;
        }
    }
    if best.0.is_finite() {
        let to_s = |u: f64| u / (1.0 - u);
        let mut lo = (best_i.saturating_sub(1)) as f64 / steps as f64;
        let mut hi = ((best_i + 1) as f64 / steps as f64).min(1.0 - 1e-12);
        let gr = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let a = hi - gr * (hi - lo);
            let b = lo + gr * (hi - lo);
            if dist(to_s(a))? < dist(to_s(b))? {
                hi = b;
            } else {
                lo = a;
            }
        }
        let u = 0.5 * (lo + hi);
        let d = dist(to_s(u))?;
        if d < best.1 {
            best = (to_s(u), d);
        }
    }
    Ok(best)
}

/// The density of a faithful state map, for callers that already know the
/// map has the form `A ↦ tr(DA)·I`.
pub fn density_of_state_map(phi: &SuperOp) -> Mat {
    linalg::hermitian_part(&state_density(phi))
}

/// Unitary `U` and `λ` reproduce `φ`: `φ = (schur(λ))_{U†}`.
pub fn reconstruct_invertible(u: &Mat, lambdas: &[f64]) -> Result<SuperOp> {
    make_invertible_qpure(lambdas, Some(&u.adjoint()))
}

/// `I_n / n`.
pub fn normalized_identity(n: usize) -> Mat {
    identity(n) * real(1.0 / n as f64)
}
