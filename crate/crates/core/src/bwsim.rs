//! Boundary weight doubles `(φ, ν)` with `ν(√(I−Λ(1)) B √(I−Λ(1))) = (f, Bf)`
//! on `L²(0,∞)`: truncated weights `ν_t`, the generalized boundary
//! representation `π_t^# = φ(I + s_tφ)^{-1} Ω_{ν_t}`, its contraction bound and
//! the decay of the normal spine.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, C64, ZERO};
use crate::qorder::resolvent_subordinate;
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::superop::SuperOp;

/// Allowed deviation of `‖f‖²` from one.
pub const NORMALIZATION_TOL: f64 = 1e-8;
pub const BOUND_SLACK: f64 = 1e-10;
pub const UNITAL_TOL: f64 = 1e-10;
/// Split point of the unboundedness heuristic for sampled profiles.
pub const HEAD_SPLIT: f64 = 0.1;

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }
}

/// Linear interpolation on strictly increasing `x`, zero outside the grid.
fn interp(x: &[f64], f: &[C64], at: f64) -> C64 {
    if at < x[0] || at > x[x.len() - 1] {
        return ZERO;
    }
    let i = x.partition_point(|&p| p <= at).clamp(1, x.len() - 1);
    let (x0, x1) = (x[i - 1], x[i]);
    let w = (at - x0) / (x1 - x0);
    f[i - 1] * (1.0 - w) + f[i] * w
}

fn check_samples(x: &[f64], f: &[C64], what: &str) -> Result<()> {
    if x.len() < 2 || x.len() != f.len() {
        return Err(Error::Input(format!("{what}: need at least two samples with matching x and f lengths")));
    }
    if x[0] <= 0.0 || x.iter().any(|v| !v.is_finite()) || f.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Input(format!("{what}: samples must be finite with x > 0")));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input(format!("{what}: x must be strictly increasing")));
    }
    Ok(())
}

/// The function `f` defining the boundary weight.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `f = 𝟙_{(0,1)}`.
    Indicator01,
    /// Piecewise linear through the samples, zero outside them.
    Sampled { x: Vec<f64>, f: Vec<C64> },
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Indicator01 => "indicator01",
            Profile::Sampled { .. } => "sampled",
        }
    }

    pub fn eval(&self, at: f64) -> C64 {
        match self {
            Profile::Indicator01 => {
                if at > 0.0 && at < 1.0 {
                    linalg::ONE
                } else {
                    ZERO
                }
            }
            Profile::Sampled { x, f } => interp(x, f, at),
        }
    }

    fn support_end(&self) -> f64 {
        match self {
            Profile::Indicator01 => 1.0,
            Profile::Sampled { x, .. } => x[x.len() - 1],
        }
    }

    fn support_start(&self) -> f64 {
        match self {
            Profile::Indicator01 => 0.0,
            Profile::Sampled { x, .. } => x[0],
        }
    }

    fn breaks(&self) -> Vec<f64> {
        match self {
            Profile::Indicator01 => vec![1.0],
            Profile::Sampled { x, .. } => x.clone(),
        }
    }

    /// `∫ w(x)|f(x)|² dx` over `(a, support end)`.
    fn weighted_integral(&self, a: f64, w: impl Fn(f64) -> f64) -> Result<f64> {
        let lo = a.max(self.support_start());
        let hi = self.support_end();
        let r = integrate_with_breaks(|x| w(x) * self.eval(x).norm_sqr(), lo, hi, &self.breaks(), quad_opts())?;
        Ok(r.value)
    }
}

/// `1/(1 − e^{−x})`.
fn weight_i(x: f64) -> f64 {
    -1.0 / (-x).exp_m1()
}

/// `e^{−x}/(1 − e^{−x})`.
fn weight_lambda(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryWeightSpec {
    pub profile: Profile,
    /// `‖f‖² = ν(I − Λ(1))`.
    pub norm_sq: f64,
    /// The weight is unbounded: certified for `indicator01`, heuristic for
    /// sampled profiles (head integral over ten times the tail).
    pub unbounded: bool,
}

impl BoundaryWeightSpec {
    pub fn new(profile: Profile) -> Result<Self> {
        if let Profile::Sampled { x, f } = &profile {
            check_samples(x, f, "profile")?;
        }
        let norm_sq = profile.weighted_integral(0.0, |_| 1.0)?;
        if (norm_sq - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Input(format!("profile has ‖f‖² = {norm_sq}, expected 1")));
        }
        let unbounded = match &profile {
            Profile::Indicator01 => true,
            Profile::Sampled { x, .. } => {
                let hi = profile.support_end();
                let head = integrate_with_breaks(
                    |s| weight_i(s) * profile.eval(s).norm_sqr(),
                    x[0],
                    HEAD_SPLIT.min(hi),
                    x,
                    quad_opts(),
                )?
                .value;
                let tail = profile.weighted_integral(HEAD_SPLIT, weight_i)?;
                head > 10.0 * tail
            }
        };
        Ok(Self { profile, norm_sq, unbounded })
    }

    pub fn indicator01() -> Self {
        Self::new(Profile::Indicator01).expect("indicator01 is normalized")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedWeight {
    pub t: f64,
    /// `ν_t(I)`.
    pub nu_i: f64,
    /// `ν_t(Λ(1))`.
    pub s_t: f64,
    /// `t` lies past the support of `f`, so both values vanish.
    pub degenerate: bool,
}

impl TruncatedWeight {
    /// `ν_t(I)/(1 + s_t)`.
    pub fn bound(&self) -> f64 {
        self.nu_i / (1.0 + self.s_t)
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Input(format!("t must be positive and finite, got {t}")));
    }
    Ok(())
}

/// Closed forms for `indicator01`: `s_t = ln((1−e^{−1})/(1−e^{−t}))` and
/// `ν_t(I) = s_t + 1 − t` for `t < 1`.
pub fn indicator01_closed_form(t: f64) -> Result<TruncatedWeight> {
    check_t(t)?;
    if t >= 1.0 {
        return Ok(TruncatedWeight { t, nu_i: 0.0, s_t: 0.0, degenerate: true });
    }
    let s_t = ((-1f64).exp_m1() / (-t).exp_m1()).ln();
    Ok(TruncatedWeight { t, nu_i: s_t + (1.0 - t), s_t, degenerate: false })
}

/// `ν_t(I)` and `s_t` by adaptive quadrature for every profile.
pub fn truncated_values_quadrature(spec: &BoundaryWeightSpec, t: f64) -> Result<TruncatedWeight> {
    check_t(t)?;
    let degenerate = t >= spec.profile.support_end();
    if degenerate {
        return Ok(TruncatedWeight { t, nu_i: 0.0, s_t: 0.0, degenerate });
    }
    let nu_i = spec.profile.weighted_integral(t, weight_i)?;
    let s_t = spec.profile.weighted_integral(t, weight_lambda)?;
    Ok(TruncatedWeight { t, nu_i, s_t, degenerate })
}

/// Closed form where available, quadrature otherwise.
pub fn truncated_values(spec: &BoundaryWeightSpec, t: f64) -> Result<TruncatedWeight> {
    match spec.profile {
        Profile::Indicator01 => indicator01_closed_form(t),
        Profile::Sampled { .. } => truncated_values_quadrature(spec, t),
    }
}

/// Scalar functions on `(0, ∞)` spanning the operand dyads.
#[derive(Debug, Clone, PartialEq)]
pub enum OperandFn {
    /// `amplitude · 𝟙_{(a,b)}`.
    Indicator {
        a: f64,
        b: f64,
        amplitude: C64,
    },
    /// `amplitude · e^{−rate·x}` on `x > start`.
    Exponential {
        rate: f64,
        start: f64,
        amplitude: C64,
    },
    Sampled {
        x: Vec<f64>,
        f: Vec<C64>,
    },
    /// `h_t = f/√(1−e^{−x})` on `x > t`, optionally scaled to unit norm.
    WeightDensity {
        t: f64,
        normalized: bool,
    },
}

impl OperandFn {
    pub fn validate(&self) -> Result<()> {
        match self {
            OperandFn::Indicator { a, b, .. } if !(*a >= 0.0 && b > a && b.is_finite()) => {
                Err(Error::Input(format!("indicator needs 0 <= a < b < inf, got ({a}, {b})")))
            }
            OperandFn::Exponential { rate, start, .. } if !(*rate > 0.0 && *start >= 0.0) => {
                Err(Error::Input("exponential needs rate > 0 and start >= 0".into()))
            }
            OperandFn::Sampled { x, f } => check_samples(x, f, "operand"),
            OperandFn::WeightDensity { t, .. } => check_t(*t),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, spec: &BoundaryWeightSpec, at: f64) -> Result<C64> {
        Ok(match self {
            OperandFn::Indicator { a, b, amplitude } => {
                if at > *a && at < *b {
                    *amplitude
                } else {
                    ZERO
                }
            }
            OperandFn::Exponential { rate, start, amplitude } => {
                if at > *start {
                    amplitude * (-rate * at).exp()
                } else {
                    ZERO
                }
            }
            OperandFn::Sampled { x, f } => interp(x, f, at),
            OperandFn::WeightDensity { t, normalized } => {
                if at <= *t {
                    return Ok(ZERO);
                }
                let h = spec.profile.eval(at) * weight_i(at).sqrt();
                if *normalized {
                    let nu = truncated_values(spec, *t)?.nu_i;
                    if nu == 0.0 {
                        ZERO
                    } else {
                        h / nu.sqrt()
                    }
                } else {
                    h
                }
            }
        })
    }

    /// Infimum of the support.
    pub fn support_start(&self) -> f64 {
        match self {
            OperandFn::Indicator { a, .. } => *a,
            OperandFn::Exponential { start, .. } => *start,
            OperandFn::Sampled { x, f } => {
                match f.iter().position(|z| *z != ZERO) {
                    // linear interpolation reaches back to the previous sample
                    Some(i) if i > 0 => x[i - 1],
                    Some(_) => x[0],
                    None => f64::INFINITY,
                }
            }
            OperandFn::WeightDensity { t, .. } => *t,
        }
    }

    fn breaks(&self) -> Vec<f64> {
        match self {
            OperandFn::Indicator { a, b, .. } => vec![*a, *b],
            OperandFn::Exponential { start, .. } => vec![*start],
            OperandFn::Sampled { x, .. } => x.clone(),
            OperandFn::WeightDensity { t, .. } => vec![*t],
        }
    }

    /// `‖u‖²` on `L²(0, ∞)`.
    pub fn norm_sq(&self, spec: &BoundaryWeightSpec) -> Result<f64> {
        self.validate()?;
        Ok(match self {
            OperandFn::Indicator { a, b, amplitude } => amplitude.norm_sqr() * (b - a),
            OperandFn::Exponential { rate, start, amplitude } => {
                amplitude.norm_sqr() * (-2.0 * rate * start).exp() / (2.0 * rate)
            }
            OperandFn::Sampled { x, .. } => {
                integrate_with_breaks(|s| interp_sq(self, s), x[0], x[x.len() - 1], x, quad_opts())?.value
            }
            OperandFn::WeightDensity { t, normalized } => {
                let nu = truncated_values(spec, *t)?.nu_i;
                if *normalized {
                    if nu == 0.0 {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    nu
                }
            }
        })
    }
}

fn interp_sq(u: &OperandFn, s: f64) -> f64 {
    match u {
        OperandFn::Sampled { x, f } => interp(x, f, s).norm_sqr(),
        _ => unreachable!(),
    }
}

/// `M ⊗ |u⟩⟨v|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dyad {
    pub m: Mat,
    pub u: OperandFn,
    pub v: OperandFn,
}

/// A finite sum of dyads `Σ M_k ⊗ |u_k⟩⟨v_k|` in `M_n ⊗ B(L²(0,∞))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbrOperand {
    pub n: usize,
    pub dyads: Vec<Dyad>,
}

impl GbrOperand {
    pub fn new(n: usize, dyads: Vec<Dyad>) -> Result<Self> {
        for d in &dyads {
            if d.m.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!("dyad matrix is {:?}, expected {n}x{n}", d.m.shape())));
            }
            d.u.validate()?;
            d.v.validate()?;
        }
        Ok(Self { n, dyads })
    }

    pub fn single(m: Mat, u: OperandFn, v: OperandFn) -> Result<Self> {
        let n = m.nrows();
        Self::new(n, vec![Dyad { m, u, v }])
    }

    pub fn zero(n: usize) -> Self {
        Self { n, dyads: Vec::new() }
    }

    pub fn support_start(&self) -> f64 {
        self.dyads.iter().flat_map(|d| [d.u.support_start(), d.v.support_start()]).fold(f64::INFINITY, f64::min)
    }
}

/// `(h_t, u) = ∫_t^∞ conj(h_t(x)) u(x) dx`.
pub fn weight_inner(spec: &BoundaryWeightSpec, t: f64, u: &OperandFn) -> Result<C64> {
    check_t(t)?;
    let hi = spec.profile.support_end();
    if t >= hi {
        return Ok(ZERO);
    }
    let mut breaks = spec.profile.breaks();
    breaks.extend(u.breaks());
    // normalization constants are hoisted out of the integrand
    let (plain, scale) = match u {
        OperandFn::WeightDensity { t: tu, normalized: true } => {
            let nu = truncated_values(spec, *tu)?.nu_i;
            let scale = if nu == 0.0 { 0.0 } else { 1.0 / nu.sqrt() };
            (OperandFn::WeightDensity { t: *tu, normalized: false }, scale)
        }
        other => (other.clone(), 1.0),
    };
    let mut failure = None;
    let r = integrate_with_breaks(
        |x| {
            let h = spec.profile.eval(x) * weight_i(x).sqrt();
            match plain.eval(spec, x) {
                Ok(ux) => h.conj() * ux,
                Err(e) => {
                    failure = Some(e);
                    ZERO
                }
            }
        },
        t,
        hi,
        &breaks,
        quad_opts(),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.value * scale)
}

/// `Ω_{ν_t}(A) = Σ M_k (h_t, u_k)(v_k, h_t)`.
pub fn omega(spec: &BoundaryWeightSpec, t: f64, a: &GbrOperand) -> Result<Mat> {
    let mut out = Mat::zeros(a.n, a.n);
    for d in &a.dyads {
        let hu = weight_inner(spec, t, &d.u)?;
        let hv = weight_inner(spec, t, &d.v)?;
        out += &d.m * (hu * hv.conj());
    }
    Ok(out)
}

fn require_unital(phi: &SuperOp) -> Result<()> {
    let defect = phi.unitality_defect()?;
    if defect > UNITAL_TOL {
        return Err(Error::NotUnital(defect));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbrOutput {
    pub weight: TruncatedWeight,
    pub omega: Mat,
    /// `π_t^#(A) = φ(I + s_tφ)^{-1}(Ω)`.
    pub value: Mat,
}

pub fn gbr_apply(phi: &SuperOp, spec: &BoundaryWeightSpec, t: f64, a: &GbrOperand) -> Result<GbrOutput> {
    check_t(t)?;
    require_unital(phi)?;
    if a.n != phi.dim_in() {
        return Err(Error::DimensionMismatch(format!("operand is {}x{}, map acts on M_{}", a.n, a.n, phi.dim_in())));
    }
    let weight = truncated_values(spec, t)?;
    let omega = omega(spec, t, a)?;
    let value = resolvent_subordinate(phi, weight.s_t)?.apply(&omega)?;
    Ok(GbrOutput { weight, omega, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub t: f64,
    pub nu_i: f64,
    pub s_t: f64,
    /// `ν_t(I)/(1 + s_t)`.
    pub bound: f64,
    /// `‖π_t^#(I ⊗ |ĥ_t⟩⟨ĥ_t|)‖` with `ĥ_t` the normalized weight density.
    pub norm: f64,
    pub degenerate: bool,
}

/// Contraction table over `t_grid`; fails with `BoundViolated` if any bound
/// or measured norm exceeds one.
pub fn gbr_norm_bound(phi: &SuperOp, spec: &BoundaryWeightSpec, t_grid: &[f64]) -> Result<Vec<BoundRow>> {
    require_unital(phi)?;
    let n = phi.dim_in();
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let h = OperandFn::WeightDensity { t, normalized: true };
        let op = GbrOperand::single(linalg::identity(n), h.clone(), h)?;
        let out = gbr_apply(phi, spec, t, &op)?;
        let w = out.weight;
        let norm = linalg::spectral_norm(&out.value);
        let bound = w.bound();
        if bound > 1.0 + BOUND_SLACK || norm > 1.0 + BOUND_SLACK {
            return Err(Error::BoundViolated { t, value: bound.max(norm) });
        }
        rows.push(BoundRow { t, nu_i: w.nu_i, s_t: w.s_t, bound, norm, degenerate: w.degenerate });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub b: f64,
    pub nu_i: f64,
    pub s_b: f64,
    /// `‖Ω_{ν_{t_fixed}}(A)‖/(1 + s_b)`.
    pub bound: f64,
    /// `‖π_b^#(A)‖`.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayTable {
    pub t_fixed: f64,
    pub omega_norm: f64,
    pub rows: Vec<DecayRow>,
    /// Norms are nonincreasing along the grid.
    pub monotone: bool,
    /// Last norm over first norm; `None` when the first norm vanishes.
    pub ratio: Option<f64>,
}

/// `‖π_b^#(A)‖` for `A` supported beyond `t_fixed` and `b` in `b_grid`,
/// checked against `‖Ω_{ν_{t_fixed}}(A)‖/(1 + s_b)`.
pub fn normal_spine_decay(
    phi: &SuperOp,
    spec: &BoundaryWeightSpec,
    t_fixed: f64,
    b_grid: &[f64],
    a: &GbrOperand,
) -> Result<DecayTable> {
    check_t(t_fixed)?;
    let start = a.support_start();
    if start < t_fixed {
        return Err(Error::SupportViolation(format!("operand support starts at {start} < t = {t_fixed}")));
    }
    if let Some(b) = b_grid.iter().find(|&&b| !(b > 0.0 && b < t_fixed)) {
        return Err(Error::Input(format!("b = {b} outside (0, {t_fixed})")));
    }
    let omega_norm = linalg::spectral_norm(&omega(spec, t_fixed, a)?);
    let mut rows = Vec::with_capacity(b_grid.len());
    for &b in b_grid {
        let out = gbr_apply(phi, spec, b, a)?;
        let norm = linalg::spectral_norm(&out.value);
        let bound = omega_norm / (1.0 + out.weight.s_t);
        if norm > bound * (1.0 + 1e-8) + 1e-14 {
            return Err(Error::BoundViolated { t: b, value: norm });
        }
        rows.push(DecayRow { b, nu_i: out.weight.nu_i, s_b: out.weight.s_t, bound, norm });
    }
    let monotone = rows.windows(2).all(|w| w[1].norm <= w[0].norm * (1.0 + 1e-12));
    let ratio = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) if f.norm > 0.0 => Some(l.norm / f.norm),
        _ => None,
    };
    Ok(DecayTable { t_fixed, omega_norm, rows, monotone, ratio })
}

/// `{0.01, 0.02, …, 0.99}`.
pub fn default_t_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

pub const DEFAULT_B_GRID: [f64; 4] = [0.3, 0.1, 0.03, 0.01];
pub const DEFAULT_T_FIXED: f64 = 0.5;

/// `𝟙_{(t_fixed, 1)}` dyad with `M = I`, the default decay operand.
pub fn default_decay_operand(n: usize, t_fixed: f64) -> Result<GbrOperand> {
    let u = OperandFn::Indicator { a: t_fixed, b: 1.0, amplitude: linalg::ONE };
    GbrOperand::single(linalg::identity(n), u.clone(), u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::Gen;
    use crate::linalg::{c, real, ONE};
    use crate::superop::state_map;
    use proptest::prelude::*;

    fn ind() -> BoundaryWeightSpec {
        BoundaryWeightSpec::indicator01()
    }

    #[test]
    fn closed_form_at_half() {
        let w = indicator01_closed_form(0.5).unwrap();
        let s = ((1.0 - (-1f64).exp()) / (1.0 - (-0.5f64).exp())).ln();
        assert!((w.s_t - s).abs() < 1e-15);
        assert!((w.s_t - 0.4741).abs() < 1e-4);
        assert!((w.nu_i - w.s_t - 0.5).abs() < 1e-15);
        let q = truncated_values_quadrature(&ind(), 0.5).unwrap();
        assert!((q.s_t - w.s_t).abs() < 1e-10);
        assert!((q.nu_i - w.nu_i).abs() < 1e-10);
    }

    #[test]
    fn quadrature_matches_closed_form_on_grid() {
        for t in default_t_grid() {
            let q = truncated_values_quadrature(&ind(), t).unwrap();
            let w = indicator01_closed_form(t).unwrap();
            assert!((q.s_t - w.s_t).abs() < 1e-8, "t={t}");
            assert!((q.nu_i - w.nu_i).abs() < 1e-8, "t={t}");
            assert!(q.nu_i >= q.s_t && q.s_t >= 0.0);
            assert!(w.bound() <= 1.0 + BOUND_SLACK);
            assert!((w.bound() - (1.0 - t / (1.0 + w.s_t))).abs() < 1e-12);
        }
    }

    #[test]
    fn small_t_diverges_and_bound_tends_to_one() {
        let mut prev = 0.0;
        for k in 2..10 {
            let w = indicator01_closed_form(10f64.powi(-k)).unwrap();
            assert!(w.s_t > prev);
            prev = w.s_t;
        }
        assert!(prev > 20.0);
        let w = indicator01_closed_form(1e-9).unwrap();
        assert!((w.nu_i - w.s_t - 1.0).abs() < 1e-6);
        assert!((w.bound() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_past_support() {
        for t in [1.0, 1.5] {
            let w = truncated_values(&ind(), t).unwrap();
            assert!(w.degenerate && w.nu_i == 0.0 && w.s_t == 0.0);
            assert!(truncated_values_quadrature(&ind(), t).unwrap().degenerate);
        }
        assert!(matches!(truncated_values(&ind(), 0.0), Err(Error::Input(_))));
    }

    #[test]
    fn monotone_in_t() {
        let rows: Vec<_> = default_t_grid().iter().map(|&t| indicator01_closed_form(t).unwrap()).collect();
        for w in rows.windows(2) {
            assert!(w[1].s_t <= w[0].s_t && w[1].nu_i <= w[0].nu_i);
        }
    }

    #[test]
    fn sampled_profile_matches_indicator() {
        let x: Vec<f64> = (1..=1000).map(|k| k as f64 / 1000.0 - 1e-9).collect();
        let f = vec![ONE; x.len()];
        // ‖f‖² = x_last − x_first = 0.999, so rescale
        let scale = 1.0 / (x[x.len() - 1] - x[0]).sqrt();
        let f: Vec<C64> = f.into_iter().map(|z| z * scale).collect();
        let spec = BoundaryWeightSpec::new(Profile::Sampled { x, f }).unwrap();
        let w = truncated_values(&spec, 0.5).unwrap();
        let want = indicator01_closed_form(0.5).unwrap();
        assert!((w.s_t - want.s_t * scale * scale).abs() < 1e-6);
    }

    #[test]
    fn unnormalized_profile_rejected() {
        let r = BoundaryWeightSpec::new(Profile::Sampled { x: vec![0.5, 1.0], f: vec![ONE, ONE] });
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn weight_density_example() {
        let spec = ind();
        let phi = SuperOp::identity(2);
        let h = OperandFn::WeightDensity { t: 0.3, normalized: true };
        let op = GbrOperand::single(linalg::identity(2), h.clone(), h).unwrap();
        let out = gbr_apply(&phi, &spec, 0.3, &op).unwrap();
        let w = indicator01_closed_form(0.3).unwrap();
        assert!(linalg::approx_eq(&out.omega, &(linalg::identity(2) * real(w.nu_i)), 1e-9));
        assert!(linalg::approx_eq(&out.value, &(linalg::identity(2) * real(w.bound())), 1e-9));
        assert!(w.bound() <= 1.0);
    }

    #[test]
    fn zero_operand_gives_zero() {
        let spec = ind();
        let u = OperandFn::Indicator { a: 0.2, b: 0.7, amplitude: ONE };
        let op = GbrOperand::single(Mat::zeros(2, 2), u.clone(), u).unwrap();
        let out = gbr_apply(&SuperOp::identity(2), &spec, 0.1, &op).unwrap();
        assert!(linalg::frobenius(&out.value) == 0.0);
    }

    #[test]
    fn state_map_rank_one_resolvent() {
        let spec = ind();
        let phi = state_map(&(linalg::identity(2) * real(0.5))).unwrap();
        let m = Mat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 2.0), c(-1.0, 0.0), c(0.0, 3.0)]);
        let u = OperandFn::Exponential { rate: 1.5, start: 0.0, amplitude: c(1.0, -0.5) };
        let v = OperandFn::Indicator { a: 0.1, b: 0.9, amplitude: c(0.0, 2.0) };
        let op = GbrOperand::single(m.clone(), u.clone(), v.clone()).unwrap();
        let t = 0.2;
        let out = gbr_apply(&phi, &spec, t, &op).unwrap();
        // midpoint-rule oracle for the two inner products
        let nmid = 200_000;
        let (mut hu, mut hv) = (ZERO, ZERO);
        let dx = (1.0 - t) / nmid as f64;
        for k in 0..nmid {
            let x = t + (k as f64 + 0.5) * dx;
            let h = weight_i(x).sqrt();
            hu += u.eval(&spec, x).unwrap() * h * dx;
            hv += v.eval(&spec, x).unwrap() * h * dx;
        }
        let omega_ref = &m * (hu * hv.conj());
        assert!(linalg::approx_eq(&out.omega, &omega_ref, 1e-6));
        let s = indicator01_closed_form(t).unwrap().s_t;
        let scalar = linalg::trace(&omega_ref) * 0.5 / (1.0 + s);
        assert!(linalg::approx_eq(&out.value, &(linalg::identity(2) * scalar), 1e-6));
    }

    #[test]
    fn bound_table_indicator() {
        let mut g = Gen::new(9);
        let phi = g.random_invertible_unital_q_positive(2);
        let mut grid = default_t_grid();
        grid.extend([1.0, 1.2]);
        let rows = gbr_norm_bound(&phi, &ind(), &grid).unwrap();
        for r in &rows {
            assert!(r.bound <= 1.0 + BOUND_SLACK);
            assert!((r.norm - r.bound).abs() < 1e-9, "{r:?}");
            assert_eq!(r.degenerate, r.t >= 1.0);
        }
    }

    #[test]
    fn decay_table_identity_is_scalar_resolvent() {
        let phi = SuperOp::identity(2);
        let op = default_decay_operand(2, DEFAULT_T_FIXED).unwrap();
        let table = normal_spine_decay(&phi, &ind(), DEFAULT_T_FIXED, &DEFAULT_B_GRID, &op).unwrap();
        assert!(table.monotone);
        for r in &table.rows {
            assert!((r.norm - r.bound).abs() < 1e-10 * table.omega_norm);
        }
        let s = |b: f64| indicator01_closed_form(b).unwrap().s_t;
        let ratio = (1.0 + s(0.3)) / (1.0 + s(0.01));
        assert!((table.ratio.unwrap() - ratio).abs() < 1e-9);
        assert!((ratio - 0.367).abs() < 1e-3);
    }

    #[test]
    fn decay_of_zero_operand() {
        let table =
            normal_spine_decay(&SuperOp::identity(2), &ind(), 0.5, &DEFAULT_B_GRID, &GbrOperand::zero(2)).unwrap();
        assert!(table.rows.iter().all(|r| r.norm == 0.0));
        assert!(table.ratio.is_none());
    }

    #[test]
    fn decay_rejects_early_support() {
        let u = OperandFn::Indicator { a: 0.2, b: 1.0, amplitude: ONE };
        let op = GbrOperand::single(linalg::identity(2), u.clone(), u).unwrap();
        let r = normal_spine_decay(&SuperOp::identity(2), &ind(), 0.5, &DEFAULT_B_GRID, &op);
        assert!(matches!(r, Err(Error::SupportViolation(_))));
        let s = OperandFn::Sampled { x: vec![0.4, 0.6, 0.8], f: vec![ZERO, ONE, ONE] };
        assert_eq!(s.support_start(), 0.4);
    }

    #[test]
    fn non_unital_map_rejected() {
        let r = gbr_norm_bound(&SuperOp::identity(2).scale(2.0), &ind(), &[0.5]);
        assert!(matches!(r, Err(Error::NotUnital(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn outputs_obey_contraction(seed in any::<u64>(), t in 0.01f64..0.99) {
            let mut g = Gen::new(seed);
            let spec = ind();
            let phi = g.random_invertible_unital_q_positive(2);
            let m = g.random_matrix(2, 2);
            let a = g.uniform(0.0, 0.8);
            let u = OperandFn::Indicator { a, b: a + g.uniform(0.05, 1.0), amplitude: g.complex() };
            let v = OperandFn::Exponential { rate: g.uniform(0.1, 3.0), start: g.uniform(0.0, 0.5), amplitude: g.complex() };
            let op = GbrOperand::single(m.clone(), u.clone(), v.clone()).unwrap();
            let out = gbr_apply(&phi, &spec, t, &op).unwrap();
            let limit = linalg::spectral_norm(&m)
                * u.norm_sq(&spec).unwrap().sqrt()
                * v.norm_sq(&spec).unwrap().sqrt()
                * out.weight.bound();
            prop_assert!(linalg::spectral_norm(&out.value) <= limit * (1.0 + 1e-8));
        }
    }
}
