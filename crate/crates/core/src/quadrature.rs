//! Globally adaptive Gauss–Kronrod (G7/K15) quadrature.
//!
//! The integrand may be scalar, complex or matrix valued; anything that
//! implements [`Summable`] works. Subdivision always bisects the interval
//! with the largest error estimate.

use crate::error::{Error, Result};
use crate::linalg::{frobenius, Mat, C64};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values that can be accumulated by the quadrature rule.
pub trait Summable: Clone {
    fn scaled(&self, k: f64) -> Self;
    fn add_scaled(&mut self, k: f64, other: &Self);
    fn magnitude(&self) -> f64;
}

impl Summable for f64 {
    fn scaled(&self, k: f64) -> Self {
        self * k
    }
    fn add_scaled(&mut self, k: f64, other: &Self) {
        *self += k * other;
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Summable for C64 {
    fn scaled(&self, k: f64) -> Self {
        self * k
    }
    fn add_scaled(&mut self, k: f64, other: &Self) {
        *self += other * k;
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Summable for Mat {
    fn scaled(&self, k: f64) -> Self {
        self.map(|z| z * k)
    }
    fn add_scaled(&mut self, k: f64, other: &Self) {
        self.zip_apply(other, |a, b| *a += b * k);
    }
    fn magnitude(&self) -> f64 {
        frobenius(self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

struct Piece<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

fn gk15<T, F>(f: &mut F, a: f64, b: f64) -> (T, f64)
where
    T: Summable,
    F: FnMut(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc.scaled(WGK[7]);
    let mut gauss = fc.scaled(WG[3]);
    for i in 0..7 {
        let dx = half * XGK[i];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod.add_scaled(WGK[i], &f1);
        kronrod.add_scaled(WGK[i], &f2);
        if i % 2 == 1 {
            gauss.add_scaled(WG[i / 2], &f1);
            gauss.add_scaled(WG[i / 2], &f2);
        }
    }
    let kronrod = kronrod.scaled(half);
    let mut diff = gauss.scaled(half);
    diff.add_scaled(-1.0, &kronrod);
    // QUADPACK-style error scaling is overly pessimistic for matrix values;
    // the raw Gauss/Kronrod difference is used instead.
    (kronrod, diff.magnitude())
}

/// Integrates `f` over `[a, b]` with the given break points forced as
/// interval boundaries.
pub fn integrate_with_breaks<T, F>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions) -> Result<QuadResult<T>>
where
    T: Summable,
    F: FnMut(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::QuadratureFailure(format!("non-finite limits [{a}, {b}]")));
    }
    if b <= a {
        let zero = f(a).scaled(0.0);
        return Ok(QuadResult { value: zero, error: 0.0, intervals: 0 });
    }
    let mut points = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    points.extend(inner);
    points.push(b);

    let mut pieces: Vec<Piece<T>> = points
        .windows(2)
        .map(|w| {
            let (value, error) = gk15(&mut f, w[0], w[1]);
            Piece { a: w[0], b: w[1], value, error }
        })
        .collect();

    loop {
        let mut total = pieces[0].value.scaled(0.0);
        let mut err = 0.0;
        for p in &pieces {
            total.add_scaled(1.0, &p.value);
            err += p.error;
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if err <= target {
            return Ok(QuadResult { value: total, error: err, intervals: pieces.len() });
        }
        if pieces.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {err:e} above {target:e} after {} intervals",
                pieces.len()
            )));
        }
        let worst = pieces.iter().enumerate().max_by(|x, y| x.1.error.total_cmp(&y.1.error)).map(|(i, _)| i).unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::QuadratureFailure(format!("interval [{}, {}] cannot be bisected further", p.a, p.b)));
        }
        let (v1, e1) = gk15(&mut f, p.a, mid);
        let (v2, e2) = gk15(&mut f, mid, p.b);
        pieces.push(Piece { a: p.a, b: mid, value: v1, error: e1 });
        pieces.push(Piece { a: mid, b: p.b, value: v2, error: e2 });
    }
}

pub fn integrate<T, F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult<T>>
where
    T: Summable,
    F: FnMut(f64) -> T,
{
    integrate_with_breaks(f, a, b, &[], opts)
}
