//! Corners between CP maps, q-corners, hypermaximality over resolvent
//! families, and the corner-norm bound for rank-one maps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gen::Gen;
use crate::linalg::{self, c, frobenius, identity, Mat, ONE};
use crate::qorder::{
    is_q_positive, is_q_positive_early_exit, q_dominates_early_exit, resolvent_subordinate, PositivityCert,
};
use crate::qpure::classify_q_pure;
use crate::superop::{
    block_corner_map, from_kraus, is_completely_positive, kraus_like_sum, schur_map, CpVerdict, KrausSet, SuperOp,
};

pub const CONTRACTION_TOL: f64 = 1e-10;
pub const DEFAULT_TS_GRID: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
pub const MAX_NORM_RESTARTS: usize = 20;
pub const MAX_NORM_ITERS: usize = 500;

/// Kraus presentations of two CP maps and a contraction `C` coupling them.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerSpec {
    left: KrausSet,
    right: KrausSet,
    c: Mat,
}

impl CornerSpec {
    pub fn new(left: KrausSet, right: KrausSet, c: Mat) -> Result<Self> {
        let (ln, lc) = left.shape();
        let (rn, rc) = right.shape();
        if ln != lc || rn != rc {
            return Err(Error::DimensionMismatch("corner Kraus operators must be square".into()));
        }
        if c.shape() != (left.len(), right.len()) {
            return Err(Error::DimensionMismatch(format!(
                "C is {:?}, expected {}x{}",
                c.shape(),
                left.len(),
                right.len()
            )));
        }
        let norm = linalg::spectral_norm(&c);
        if norm > 1.0 + CONTRACTION_TOL {
            return Err(Error::ContractionViolated(norm));
        }
        Ok(Self { left, right, c })
    }

    pub fn left(&self) -> &KrausSet {
        &self.left
    }

    pub fn right(&self) -> &KrausSet {
        &self.right
    }

    pub fn contraction(&self) -> &Mat {
        &self.c
    }

    pub fn left_map(&self) -> SuperOp {
        from_kraus(&self.left)
    }

    pub fn right_map(&self) -> SuperOp {
        from_kraus(&self.right)
    }
}

/// `γ(A) = Σ c_ij S_i A T_j†` on `n × k` matrices.
pub fn corner_from_contraction(spec: &CornerSpec) -> SuperOp {
    kraus_like_sum(spec.left.ops(), spec.right.ops(), Some(&spec.c))
}

/// CP test of the assembled block map.
pub fn verify_corner(phi: &SuperOp, gamma: &SuperOp, psi: &SuperOp, tol: f64) -> Result<CpVerdict> {
    is_completely_positive(&block_corner_map(phi, gamma, psi)?, tol)
}

pub fn is_q_corner(phi: &SuperOp, gamma: &SuperOp, psi: &SuperOp, grid: &[f64], tol: f64) -> Result<PositivityCert> {
    is_q_positive(&block_corner_map(phi, gamma, psi)?, grid, tol)
}

/// `γ(A) = φ(AU†)U`, the corner from `φ` to `φ_U`.
pub fn unitary_conjugation_corner(phi: &SuperOp, u: &Mat) -> Result<SuperOp> {
    let defect = linalg::unitarity_defect(u);
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    if !phi.is_endomorphism() || u.nrows() != phi.dim_in() {
        return Err(Error::DimensionMismatch("unitary and map dimensions differ".into()));
    }
    let ud = u.adjoint();
    Ok(SuperOp::square_from_fn(phi.dim_in(), |a| phi.apply(&(a * &ud)).expect("shape") * u))
}

/// The column corner `b_j ↦ b_j / (1 + iλ_j)` from the Schur normal form
/// for `λ` to the identity map on `ℂ`.
pub fn flow_corner_to_identity(lambdas: &[f64]) -> Result<SuperOp> {
    let sum: f64 = lambdas.iter().sum();
    let scale = lambdas.iter().fold(1.0f64, |a, l| a.max(l.abs()));
    if sum.abs() > 1e-12 * scale {
        return Err(Error::LambdaSumNonzero(sum));
    }
    let m = Mat::from_fn(lambdas.len(), 1, |j, _| ONE / c(1.0, lambdas[j]));
    Ok(schur_map(&m))
}

/// A resolvent parameter, with `Infinite` standing for the zero map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Finite(f64),
    Infinite,
}

impl Serialize for Param {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Param::Finite(x) => s.serialize_f64(*x),
            Param::Infinite => s.serialize_str("inf"),
        }
    }
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Param::Finite(x) => write!(f, "{x}"),
            Param::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolatingPair {
    pub t: Param,
    pub s: Param,
    /// q-positivity certificate of the strictly smaller block map.
    pub certificate: PositivityCert,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperMaxVerdict {
    pub hypermaximal: bool,
    pub violating_pair: Option<ViolatingPair>,
}

fn subordinate_at(phi: &SuperOp, p: Param) -> Result<SuperOp> {
    match p {
        Param::Finite(t) => resolvent_subordinate(phi, t),
        Param::Infinite => Ok(SuperOp::zero(phi.dim_in())),
    }
}

/// Searches `(t, s)` over `ts_grid² ∪ {∞}` for a q-positive block map
/// `Θ' = [[φ^{(t)}, γ], [γ*, ψ^{(s)}]]` with `Θ ≥_q Θ'` and `(t, s) ≠ (0, 0)`.
pub fn is_hypermaximal_over_resolvent_family(
    phi: &SuperOp,
    gamma: &SuperOp,
    psi: &SuperOp,
    ts_grid: &[f64],
    grid: &[f64],
    tol: f64,
) -> Result<HyperMaxVerdict> {
    for (name, m) in [("left", phi), ("right", psi)] {
        match classify_q_pure(m) {
            Ok(v) if v.is_q_pure() => {}
            Ok(v) => return Err(Error::DiagonalsNotQPure(format!("{name} diagonal classifies as {}", v.tag()))),
            Err(e) => return Err(Error::DiagonalsNotQPure(format!("{name} diagonal: {e}"))),
        }
    }
    let theta = block_corner_map(phi, gamma, psi)?;
    let cert = is_q_positive_early_exit(&theta, grid, tol)?;
    if !cert.verdict {
        return Err(Error::NotQCorner { t: cert.first_failure().unwrap_or(f64::NAN) });
    }
    let mut params: Vec<Param> = ts_grid.iter().map(|&t| Param::Finite(t)).collect();
    params.push(Param::Infinite);
    for &t in &params {
        for &s in &params {
            if t == Param::Finite(0.0) && s == Param::Finite(0.0) {
                continue;
            }
            let phi_t = subordinate_at(phi, t)?;
            let psi_s = subordinate_at(psi, s)?;
            let candidate = block_corner_map(&phi_t, gamma, &psi_s)?;
            let qpos = is_q_positive_early_exit(&candidate, grid, tol)?;
            if !qpos.verdict {
                continue;
            }
            if q_dominates_early_exit(&theta, &candidate, grid, tol)?.verdict {
                let certificate = is_q_positive(&candidate, grid, tol)?;
                return Ok(HyperMaxVerdict {
                    hypermaximal: false,
                    violating_pair: Some(ViolatingPair { t, s, certificate }),
                });
            }
        }
    }
    Ok(HyperMaxVerdict { hypermaximal: true, violating_pair: None })
}

/// Result of maximizing `|tr(C D_μ Ã D_λ)|` over contractions.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerNorm {
    pub value: f64,
    /// `n × k` contraction.
    pub c: Mat,
    /// `k × n` contraction.
    pub a_tilde: Mat,
    /// Both densities have strictly positive spectra.
    pub faithful: bool,
}

fn density_sqrt_spectrum(d: &Mat, name: &str) -> Result<Vec<f64>> {
    if !d.is_square() || d.nrows() == 0 {
        return Err(Error::NotDensity(format!("{name} is not a nonempty square matrix")));
    }
    let scale = frobenius(d).max(1.0);
    if linalg::hermiticity_defect(d) > 1e-10 * scale {
        return Err(Error::NotDensity(format!("{name} is not Hermitian")));
    }
    let tr = linalg::trace(d).re;
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::NotDensity(format!("{name} has trace {tr}")));
    }
    let vals = linalg::eigvalsh(d);
    if vals[0] < -1e-10 {
        return Err(Error::NotDensity(format!("{name} has eigenvalue {:e}", vals[0])));
    }
    Ok(vals.into_iter().map(|v| v.max(0.0).sqrt()).collect())
}

/// `max |tr(C D_μ Ã D_λ)|` over contractions `C` (`n × k`) and `Ã` (`k × n`),
/// where `D_λ`, `D_μ` carry the square roots of the eigenvalues of `d1`,
/// `d2` in ascending order. Alternating maximization with seeded restarts.
pub fn max_corner_norm_rank_one(d1: &Mat, d2: &Mat, seed: u64) -> Result<CornerNorm> {
    let l = density_sqrt_spectrum(d1, "D1")?;
    let m = density_sqrt_spectrum(d2, "D2")?;
    let faithful = l[0] > 1e-10 && m[0] > 1e-10;
    let dl = linalg::diag_real(&l);
    let dm = linalg::diag_real(&m);
    let (n, k) = (l.len(), m.len());
    let mut g = Gen::new(seed);
    let mut best: Option<CornerNorm> = None;
    for _ in 0..MAX_NORM_RESTARTS {
        let mut a = linalg::polar_factor(&g.random_matrix(k, n));
        let mut cm = Mat::zeros(n, k);
        let mut value = 0.0;
        for _ in 0..MAX_NORM_ITERS {
            let x = &dm * &a * &dl;
            cm = linalg::polar_factor(&x).adjoint();
            let y = &dl * &cm * &dm;
            a = linalg::polar_factor(&y).adjoint();
            let next = linalg::trace(&(&cm * &dm * &a * &dl)).norm();
            let improved = next - value;
            value = next;
            if improved < 1e-10 {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(CornerNorm { value, c: cm, a_tilde: a, faithful });
        }
    }
    Ok(best.expect("at least one restart"))
}

/// `Σ_i σ_i(D_μ) σ_i(D_λ)` with both spectra sorted descending, the trace
/// norm maximum `max_{‖Ã‖≤1} ‖D_μ Ã D_λ‖_tr`.
pub fn corner_norm_singular_value_bound(d1: &Mat, d2: &Mat) -> Result<f64> {
    let mut l = density_sqrt_spectrum(d1, "D1")?;
    let mut m = density_sqrt_spectrum(d2, "D2")?;
    l.sort_by(|a, b| b.total_cmp(a));
    m.sort_by(|a, b| b.total_cmp(a));
    Ok(l.iter().zip(&m).map(|(a, b)| a * b).sum())
}

/// The block map used by the identity-target corner: `(φ_λ, γ, ι_ℂ)`.
pub fn identity_corner_block(lambdas: &[f64]) -> Result<SuperOp> {
    let phi = crate::qpure::make_invertible_qpure(lambdas, None)?;
    let gamma = flow_corner_to_identity(lambdas)?;
    block_corner_map(&phi, &gamma, &SuperOp::identity(1))
}

/// The block map `Θ` for the unitary-conjugation corner from `φ` to `φ_U`.
pub fn basischange_block(phi: &SuperOp, u: &Mat) -> Result<SuperOp> {
    let gamma = unitary_conjugation_corner(phi, u)?;
    let phi_u = crate::superop::conjugate_by_unitary(phi, u)?;
    block_corner_map(phi, &gamma, &phi_u)
}

/// `I_n / n`.
pub fn maximally_mixed(n: usize) -> Mat {
    identity(n) * linalg::real(1.0 / n as f64)
}
