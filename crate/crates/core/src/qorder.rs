//! The q-positive order: resolvent subordinates `φ^{(s)} = φ(I + sφ)^{-1}`,
//! grid certificates for q-positivity and q-dominance, the limit map and
//! ε-deformations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, frobenius, identity, Mat, C64, ONE};
use crate::superop::{choi_verdict, is_completely_positive, schur_multipliers, SuperOp};

/// Eigenvalues count as negative reals when `|Im z| ≤ NEG_EIG_TOL (1 + |z|)`
/// and `Re z < -NEG_EIG_TOL`.
pub const NEG_EIG_TOL: f64 = 1e-9;

/// Smallest admissible singular value of `I + sφ`.
pub const RESOLVENT_MIN_SV: f64 = 1e-12;

pub const LIMIT_PROBES: [f64; 3] = [1e6, 1e7, 1e8];
pub const FIXED_POINT_MAX_ITER: usize = 10_000;

/// `{0}` together with 121 logarithmically spaced points in `[1e-3, 1e6]`.
pub fn default_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((0..121).map(|i| 10f64.powf(-3.0 + 9.0 * i as f64 / 120.0)));
    g
}

/// How a certificate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMethod {
    /// CP test of the resolvent at each grid point.
    GridCertified,
    /// Exact entrywise multiplier transform at each grid point.
    SchurGridCertified,
    /// Exact for all `t ≥ 0`: rank-one map `τ(·)C` with `τ(C) ≥ 0`.
    AnalyticRankOne,
    /// Exact for all `t ≥ 0`: Schur map whose reciprocal multipliers are
    /// conditionally negative definite with positive diagonal.
    AnalyticSchur,
    /// The zero map.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCert {
    pub grid: Vec<f64>,
    pub min_eigs: Vec<f64>,
    pub verdict: bool,
    pub failures: Vec<f64>,
    pub negative_eigenvalue: bool,
    pub method: CertMethod,
}

impl PositivityCert {
    pub fn first_failure(&self) -> Option<f64> {
        self.failures.first().copied()
    }
}

fn resolvent_matrix(m: &Mat, s: f64) -> Result<Mat> {
    let n = m.nrows();
    let shifted = identity(n) + m * linalg::real(s);
    let smin = linalg::min_singular_value(&shifted);
    if smin <= RESOLVENT_MIN_SV {
        return Err(Error::SingularResolvent { t: s });
    }
    shifted.lu().solve(m).ok_or(Error::SingularResolvent { t: s })
}

/// `φ(I + sφ)^{-1}`.
pub fn resolvent_subordinate(phi: &SuperOp, s: f64) -> Result<SuperOp> {
    if !phi.is_endomorphism() {
        return Err(Error::DimensionMismatch("resolvent needs a map M_n -> M_n".into()));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Input(format!("resolvent parameter must be finite and nonnegative, got {s}")));
    }
    let n = phi.dim_in();
    SuperOp::from_matrix(n, n, resolvent_matrix(phi.matrix(), s)?)
}

pub fn is_negative_real(z: C64, tol: f64) -> bool {
    z.im.abs() <= tol * (1.0 + z.norm()) && z.re < -tol
}

pub fn has_negative_eigenvalue(phi: &SuperOp, tol: f64) -> bool {
    phi.eigenvalues().into_iter().any(|z| is_negative_real(z, tol))
}

/// `φ(A) = τ(A)·C` for a rank-one map, returned as `(τ as a row, C)` with
/// `τ(A) = row · vec(A)`.
fn rank_one_factors(phi: &SuperOp) -> Option<(Mat, Mat)> {
    let m = phi.matrix();
    if linalg::numerical_rank(m, 1e-9) != 1 {
        return None;
    }
    let svd = m.clone().svd(true, true);
    let idx = svd.singular_values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)?;
    let sigma = svd.singular_values[idx];
    let u = svd.u?.column(idx).into_owned();
    let vt = svd.v_t?.row(idx).into_owned();
    let (r, c) = phi.shape_out();
    let cmat = linalg::unvec_rm((u * linalg::real(sigma)).as_slice(), r, c);
    Some((Mat::from_row_slice(1, vt.len(), vt.as_slice()), cmat))
}

/// `τ(C)`, the only nonzero eigenvalue of a rank-one map.
pub fn rank_one_eigenvalue(phi: &SuperOp) -> Option<C64> {
    let (tau, cmat) = rank_one_factors(phi)?;
    Some((tau * linalg::vec_rm(&cmat))[(0, 0)])
}

fn schur_choi_min_eig(m: &Mat) -> Option<(bool, f64)> {
    // The Choi matrix of a Schur map is the multiplier matrix padded by zeros.
    if linalg::hermiticity_defect(m) > 1e-10 * (1.0 + frobenius(m)) {
        return None;
    }
    let n = m.nrows();
    let cv = choi_verdict(m, crate::superop::CP_TOL);
    let min = if n > 1 { cv.min_eig.min(0.0) } else { cv.min_eig };
    Some((cv.verdict, min))
}

/// Reciprocal multipliers `W` are Hermitian, `W_jj > 0` and `-W` is
/// positive semidefinite on `{x : Σ x = 0}`. Then `1/(W + t)` is PSD for
/// every `t ≥ 0`, so the Schur map is q-positive.
pub fn schur_reciprocal_certificate(m: &Mat, tol: f64) -> bool {
    let n = m.nrows();
    if m.iter().any(|z| z.norm() <= tol) {
        return false;
    }
    let w = m.map(|z| ONE / z);
    let scale = 1.0 + frobenius(&w);
    if linalg::hermiticity_defect(&w) > tol * scale {
        return false;
    }
    if (0..n).any(|j| w[(j, j)].re <= tol) {
        return false;
    }
    let p = identity(n) - Mat::from_element(n, n, linalg::real(1.0 / n as f64));
    let restricted = &p * (-&w) * &p;
    linalg::min_eigvalsh(&restricted) >= -tol * scale
}

/// Grid certificate that `φ` is q-positive.
pub fn is_q_positive(phi: &SuperOp, grid: &[f64], tol: f64) -> Result<PositivityCert> {
    q_positive_impl(phi, grid, tol, false)
}

/// Like [`is_q_positive`] but stops at the first failing grid point.
pub fn is_q_positive_early_exit(phi: &SuperOp, grid: &[f64], tol: f64) -> Result<PositivityCert> {
    q_positive_impl(phi, grid, tol, true)
}

fn q_positive_impl(phi: &SuperOp, grid: &[f64], tol: f64, early: bool) -> Result<PositivityCert> {
    if !phi.is_endomorphism() {
        return Err(Error::DimensionMismatch("q-positivity needs a map M_n -> M_n".into()));
    }
    validate_grid(grid)?;
    let negative = has_negative_eigenvalue(phi, NEG_EIG_TOL);
    let grid = grid.to_vec();

    if phi.norm() == 0.0 {
        let zeros = vec![0.0; grid.len()];
        return Ok(PositivityCert {
            grid,
            min_eigs: zeros,
            verdict: true,
            failures: vec![],
            negative_eigenvalue: false,
            method: CertMethod::Zero,
        });
    }

    if let Some(tau_c) = rank_one_eigenvalue(phi) {
        if tau_c.im.abs() <= NEG_EIG_TOL * (1.0 + tau_c.norm()) && tau_c.re >= 0.0 {
            let base = is_completely_positive(phi, tol)?;
            let min_eigs: Vec<f64> = grid.iter().map(|t| base.min_eig / (1.0 + t * tau_c.re)).collect();
            let failures = if base.verdict { vec![] } else { grid.clone() };
            return Ok(PositivityCert {
                grid,
                min_eigs,
                verdict: base.verdict && !negative,
                failures,
                negative_eigenvalue: negative,
                method: CertMethod::AnalyticRankOne,
            });
        }
    }

    if let Some(m) = schur_multipliers(phi, 1e-14) {
        if m.is_square() {
            let mut min_eigs = Vec::with_capacity(grid.len());
            let mut failures = Vec::new();
            let mut usable = true;
            for &t in &grid {
                let denom = m.map(|z| ONE + z * t);
                if denom.iter().any(|z| z.norm() <= RESOLVENT_MIN_SV) {
                    min_eigs.push(f64::NAN);
                    failures.push(t);
                    if early {
                        break;
                    }
                    continue;
                }
                let mt = m.zip_map(&denom, |a, b| a / b);
                match schur_choi_min_eig(&mt) {
                    Some((ok, min)) => {
                        min_eigs.push(min);
                        if !ok {
                            failures.push(t);
                            if early {
                                break;
                            }
                        }
                    }
                    None => {
                        usable = false;
                        break;
                    }
                }
            }
            if usable {
                let analytic = failures.is_empty() && !negative && schur_reciprocal_certificate(&m, 1e-10);
                let len = min_eigs.len();
                return Ok(PositivityCert {
                    grid: grid[..len].to_vec(),
                    min_eigs,
                    verdict: failures.is_empty() && !negative,
                    failures,
                    negative_eigenvalue: negative,
                    method: if analytic { CertMethod::AnalyticSchur } else { CertMethod::SchurGridCertified },
                });
            }
        }
    }

    let mut min_eigs = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for &t in &grid {
        match resolvent_matrix(phi.matrix(), t) {
            Ok(r) => {
                let sub = SuperOp::new(phi.shape_in(), phi.shape_out(), r)?;
                let v = is_completely_positive(&sub, tol)?;
                min_eigs.push(v.min_eig);
                if !v.verdict {
                    failures.push(t);
                }
            }
            Err(Error::SingularResolvent { .. }) => {
                min_eigs.push(f64::NAN);
                failures.push(t);
            }
            Err(e) => return Err(e),
        }
        if early && !failures.is_empty() {
            break;
        }
    }
    let len = min_eigs.len();
    Ok(PositivityCert {
        grid: grid[..len].to_vec(),
        min_eigs,
        verdict: failures.is_empty() && !negative,
        failures,
        negative_eigenvalue: negative,
        method: CertMethod::GridCertified,
    })
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Input("empty t grid".into()));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Input("t grid values must be finite and nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("t grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Grid certificate for `φ ≥_q ψ`: `φ^{(t)} − ψ^{(t)}` is CP at every grid point.
pub fn q_dominates(phi: &SuperOp, psi: &SuperOp, grid: &[f64], tol: f64) -> Result<PositivityCert> {
    q_dominates_impl(phi, psi, grid, tol, false)
}

pub fn q_dominates_early_exit(phi: &SuperOp, psi: &SuperOp, grid: &[f64], tol: f64) -> Result<PositivityCert> {
    q_dominates_impl(phi, psi, grid, tol, true)
}

fn q_dominates_impl(phi: &SuperOp, psi: &SuperOp, grid: &[f64], tol: f64, early: bool) -> Result<PositivityCert> {
    if !phi.is_endomorphism() || phi.shape_in() != psi.shape_in() || phi.shape_out() != psi.shape_out() {
        return Err(Error::DimensionMismatch(format!(
            "q-dominance needs two maps on the same M_n, got {:?} and {:?}",
            phi.shape_in(),
            psi.shape_in()
        )));
    }
    validate_grid(grid)?;
    let (mp, mq) = (schur_multipliers(phi, 1e-14), schur_multipliers(psi, 1e-14));
    let mut min_eigs = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    let mut method = CertMethod::GridCertified;
    for &t in grid {
        let (min, ok) = match (&mp, &mq) {
            (Some(a), Some(b)) => {
                method = CertMethod::SchurGridCertified;
                let ra = schur_resolvent(a, t)?;
                let rb = schur_resolvent(b, t)?;
                let diff = ra - rb;
                match schur_choi_min_eig(&diff) {
                    Some((ok, min)) => (min, ok),
                    None => (f64::NAN, false),
                }
            }
            _ => {
                let a = resolvent_matrix(phi.matrix(), t)?;
                let b = resolvent_matrix(psi.matrix(), t)?;
                let diff = SuperOp::new(phi.shape_in(), phi.shape_out(), a - b)?;
                let v = is_completely_positive(&diff, tol)?;
                (v.min_eig, v.verdict)
            }
        };
        min_eigs.push(min);
        if !ok {
            failures.push(t);
            if early {
                break;
            }
        }
    }
    let len = min_eigs.len();
    Ok(PositivityCert {
        grid: grid[..len].to_vec(),
        min_eigs,
        verdict: failures.is_empty(),
        failures,
        negative_eigenvalue: false,
        method,
    })
}

fn schur_resolvent(m: &Mat, t: f64) -> Result<Mat> {
    let denom = m.map(|z| ONE + z * t);
    if denom.iter().any(|z| z.norm() <= RESOLVENT_MIN_SV) {
        return Err(Error::SingularResolvent { t });
    }
    Ok(m.zip_map(&denom, |a, b| a / b))
}

/// Multipliers `[[1, (1+i)/2], [(1−i)/2, 1]]` of a q-positive Schur map `φ`
/// for which `φ ≥_q λφ` fails for every `λ ∈ (0, 1)`.
pub fn counterexample_multipliers() -> Mat {
    let h = linalg::c(0.5, 0.5);
    Mat::from_row_slice(2, 2, &[ONE, h, h.conj(), ONE])
}

/// `L_φ = lim_{t→∞} tφ(I + tφ)^{-1}`, Richardson-extrapolated from the
/// probes in [`LIMIT_PROBES`].
pub fn limit_map(phi: &SuperOp) -> Result<SuperOp> {
    if !phi.is_endomorphism() {
        return Err(Error::DimensionMismatch("limit map needs a map M_n -> M_n".into()));
    }
    let m = phi.matrix();
    let dim = m.nrows();
    let probe = |t: f64| -> Result<Mat> {
        let shifted = identity(dim) + m * linalg::real(t);
        let inv = shifted.lu().try_inverse().ok_or(Error::SingularResolvent { t })?;
        Ok(identity(dim) - inv)
    };
    let ls: Vec<Mat> = LIMIT_PROBES.iter().map(|&t| probe(t)).collect::<Result<_>>()?;
    let norms: Vec<f64> = ls.iter().map(frobenius).collect();
    for w in norms.windows(2) {
        if w[0] > 0.0 && w[1] / w[0] > 1.5 {
            return Err(Error::Diverges { ratio: w[1] / w[0] });
        }
        if w[0] == 0.0 && w[1] > 1e-6 {
            return Err(Error::Diverges { ratio: f64::INFINITY });
        }
    }
    // Richardson values from consecutive probe pairs cancel the 1/t term
    let r1 = (&ls[1] * linalg::real(10.0) - &ls[0]) / linalg::real(9.0);
    let limit = (&ls[2] * linalg::real(10.0) - &ls[1]) / linalg::real(9.0);
    let d = frobenius(&(&limit - &r1));
    if d >= 1e-6 {
        return Err(Error::NoConvergence(format!("Richardson limits from consecutive probes differ by {d:e}")));
    }
    SuperOp::new(phi.shape_in(), phi.shape_out(), limit)
}

/// `ε I + (1 − ε) φ`.
pub fn eps_deform(phi: &SuperOp, eps: f64) -> Result<SuperOp> {
    if !phi.is_endomorphism() {
        return Err(Error::DimensionMismatch("ε-deformation needs a map M_n -> M_n".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Input(format!("ε must lie in [0, 1], got {eps}")));
    }
    SuperOp::identity(phi.dim_in()).scale(eps).add(&phi.scale(1.0 - eps))
}

/// `T = lim_k L_φ^k(I)`, the positive norm-one fixed point of the limit map.
pub fn fixed_point_of_limit(phi: &SuperOp) -> Result<Mat> {
    let l = limit_map(phi)?;
    let n = phi.dim_in();
    let mut x = identity(n);
    for _ in 0..FIXED_POINT_MAX_ITER {
        let next = l.apply(&x)?;
        let step = frobenius(&(&next - &x));
        x = next;
        if step <= 1e-13 * (1.0 + frobenius(&x)) {
            break;
        }
    }
    let residual = frobenius(&(l.apply(&x)? - &x));
    let norm = linalg::spectral_norm(&x);
    let min = linalg::min_eigvalsh(&x);
    if residual > 1e-8 || (norm - 1.0).abs() > 1e-8 || min < -1e-8 {
        return Err(Error::NoConvergence(format!(
            "L^k(I) after iteration: residual {residual:e}, norm {norm}, min eigenvalue {min:e}"
        )));
    }
    Ok(linalg::hermitian_part(&x))
}
