//! Special functions needed by the limiting-ecdf formulas: the standard
//! normal, the central Student t and the chi distribution.
//!
//! Everything here is pure and allocation free. The normal cdf is backed by
//! the minimax `erfc` of the `libm` crate; the t and chi distributions are
//! evaluated through regularized incomplete beta/gamma functions whose
//! log-prefactors are computed with Stirling differences so that very large
//! degrees of freedom (1e5 and beyond) keep full relative accuracy in the
//! tails. Several routines have log-space variants because the tangent points
//! of the crossing problem can sit far below the smallest positive double.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::error::{Error, Result};

/// ln(sqrt(2 pi))
pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const TINY: f64 = 1e-300;
const CF_EPS: f64 = 1e-15;
const CF_MAX_ITER: usize = 50_000;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!("probability {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Degrees of freedom of a t or chi distribution; strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DegreesOfFreedom(f64);

impl DegreesOfFreedom {
    pub fn new(nu: f64) -> Result<Self> {
        if nu > 0.0 && nu.is_finite() {
            Ok(DegreesOfFreedom(nu))
        } else {
            Err(Error::domain(format!(
                "degrees of freedom must be positive and finite, got {nu}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DegreesOfFreedom {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        DegreesOfFreedom::new(value)
    }
}

impl From<DegreesOfFreedom> for f64 {
    fn from(nu: DegreesOfFreedom) -> f64 {
        nu.0
    }
}

// ---------------------------------------------------------------------------
// Standard normal
// ---------------------------------------------------------------------------

/// `exp(-x^2 / 2)` with `x^2` split into an exact head and a small tail, so
/// the rounding of `x * x` is not amplified by the exponential.
fn exp_neg_half_sq(x: f64) -> f64 {
    let hi = f64::from_bits(x.to_bits() & 0xFFFF_FFFF_F800_0000);
    let lo = x - hi;
    (-0.5 * hi * hi).exp() * (-0.5 * lo * (x + hi)).exp()
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp_neg_half_sq(x)
}

/// Natural log of the standard normal density.
pub fn norm_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Standard normal cdf, relatively accurate in the lower tail.
pub fn norm_cdf(x: f64) -> f64 {
    norm_sf(-x)
}

/// Standard normal survival function `1 - Phi(x)`, relatively accurate in
/// the upper tail.
pub fn norm_sf(x: f64) -> f64 {
    // Beyond 5 the rounding of x / sqrt(2) would cost ~x^2 ulps inside erfc.
    if x > 5.0 {
        norm_pdf(x) * mills_cf(x)
    } else if x < -5.0 {
        1.0 - norm_pdf(x) * mills_cf(-x)
    } else {
        0.5 * libm::erfc(x / SQRT_2)
    }
}

/// Mills ratio `Q(x) / phi(x)` by its continued fraction; used for `x >= 5`
/// where it needs only a few dozen terms.
fn mills_cf(x: f64) -> f64 {
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..2000 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    1.0 / f
}

/// Natural log of the Mills ratio `Q(x) / phi(x)`.
pub fn norm_ln_mills(x: f64) -> f64 {
    if x >= 5.0 {
        mills_cf(x).ln()
    } else {
        log_norm_sf(x) + 0.5 * x * x + LN_SQRT_2PI
    }
}

/// `ln(1 - Phi(x))` without underflow for large `x`.
pub fn log_norm_sf(x: f64) -> f64 {
    if x >= 5.0 {
        norm_ln_pdf(x) + mills_cf(x).ln()
    } else if x > -1.0 {
        norm_sf(x).ln()
    } else {
        (-norm_cdf(x)).ln_1p()
    }
}

/// `ln Phi(x)` without underflow for very negative `x`.
pub fn log_norm_cdf(x: f64) -> f64 {
    log_norm_sf(-x)
}

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

/// Rational first guess for `Phi^{-1}(p)`, `0 < p <= 0.5`, relative error ~1e-9.
fn probit_guess_lower(p: f64) -> f64 {
    if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        let c = &ACKLAM_C;
        let d = &ACKLAM_D;
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    }
}

fn probit_lower(p: f64) -> f64 {
    let mut x = probit_guess_lower(p);
    // One Halley step. (Phi(x) - p) / phi(x) is formed as a relative
    // residual times the Mills ratio so that subnormal p cannot overflow.
    let c = norm_cdf(x);
    if c > 0.0 {
        let mills = mills_ratio(-x);
        let u = (1.0 - p / c) * mills;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

fn mills_ratio(x: f64) -> f64 {
    if x >= 5.0 {
        mills_cf(x)
    } else {
        norm_sf(x) / norm_pdf(x)
    }
}

/// Unchecked probit: `-inf` at 0, `+inf` at 1.
pub(crate) fn probit(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else if p <= 0.5 {
        probit_lower(p)
    } else {
        -probit_lower(1.0 - p)
    }
}

/// Standard normal quantile `Phi^{-1}(p)` for `0 < p < 1`.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(probit(p))
    } else {
        Err(Error::domain(format!("normal quantile needs 0 < p < 1, got {p}")))
    }
}

/// `Phi^{-1}(1 - q)` evaluated without forming `1 - q`; exact in the far
/// upper tail where `1 - q` would round to one.
pub fn norm_isf(q: f64) -> Result<f64> {
    if q > 0.0 && q < 1.0 {
        Ok(-probit(q))
    } else {
        Err(Error::domain(format!(
            "normal upper quantile needs 0 < q < 1, got {q}"
        )))
    }
}

/// Inverse of [`log_norm_sf`]: the `x` with `ln Q(x) = ln_q`, for `ln_q < 0`.
/// Works below the double-precision underflow threshold.
pub fn norm_isf_ln(ln_q: f64) -> f64 {
    if ln_q >= 0.0 {
        return f64::NEG_INFINITY;
    }
    if ln_q > -700.0 {
        return -probit(ln_q.exp());
    }
    let y = -2.0 * ln_q;
    let mut x = (y - y.ln() - (2.0 * PI).ln()).sqrt();
    for _ in 0..50 {
        let step = (log_norm_sf(x) - ln_q) * mills_cf(x);
        x += step;
        if step.abs() <= 1e-16 * x {
            break;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Gamma and beta helpers
// ---------------------------------------------------------------------------

/// Stirling series remainder `ln Gamma(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)]`,
/// accurate to ~1e-17 for `x >= 30`.
fn stirling_remainder(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln Gamma(a + b) - ln Gamma(a)` without cancellation for large `a`.
fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    if a >= 30.0 {
        (a - 0.5) * (b / a).ln_1p() + b * (a + b).ln() - b + stirling_remainder(a + b)
            - stirling_remainder(a)
    } else {
        ln_gamma(a + b) - ln_gamma(a)
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    let (big, small) = if a >= b { (a, b) } else { (b, a) };
    if small >= 30.0 {
        let s = a + b;
        LN_SQRT_2PI + (a - 0.5) * (a / s).ln() + (b - 0.5) * (b / s).ln() - 0.5 * s.ln()
            + stirling_remainder(a)
            + stirling_remainder(b)
            - stirling_remainder(s)
    } else if big >= 30.0 {
        ln_gamma(small) - ln_gamma_ratio(big, small)
    } else {
        ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
/// `y = 1 - x` is passed separately so the leading term does not cancel
/// when `x` is close to one.
fn beta_cf(a: f64, b: f64, x: f64, y: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = if x < 0.5 {
        1.0 - qab * x / qap
    } else {
        ((1.0 - b) + qab * y) / qap
    };
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `ln` of the prefactor `x^a e^{-x} / Gamma(a)` of the incomplete gamma function.
fn ln_gamma_front(a: f64, x: f64) -> f64 {
    if a >= 30.0 {
        let dr = (x - a) / a;
        let ln_r = if dr.abs() < 0.5 { dr.ln_1p() } else { (x / a).ln() };
        -a * (dr - ln_r) + 0.5 * (a / (2.0 * PI)).ln() - stirling_remainder(a)
    } else {
        a * x.ln() - x - ln_gamma(a)
    }
}

/// Regularized lower and upper incomplete gamma functions `(P(a, x), Q(a, x))`.
fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let front = ln_gamma_front(a, x).exp();
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..CF_MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * CF_EPS {
                break;
            }
        }
        let p = (sum * front).min(1.0);
        (p, 1.0 - p)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=CF_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < CF_EPS {
                break;
            }
        }
        let q = (front * h).min(1.0);
        (1.0 - q, q)
    }
}

// ---------------------------------------------------------------------------
// Student t
// ---------------------------------------------------------------------------

/// `ln f_t(x)`.
pub fn t_ln_pdf(x: f64, nu: DegreesOfFreedom) -> f64 {
    let nu = nu.0;
    ln_gamma_ratio(0.5 * nu, 0.5) - 0.5 * (nu * PI).ln() - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

/// Student t density.
pub fn t_pdf(x: f64, nu: DegreesOfFreedom) -> f64 {
    t_ln_pdf(x, nu).exp()
}

/// Returns `(ln F_t(-w), F_t(w))` for `w >= 0`.
fn t_tails(w: f64, nu: f64) -> (f64, f64) {
    if w == 0.0 {
        return (-LN_2, 0.5);
    }
    if w.is_infinite() {
        return (f64::NEG_INFINITY, 1.0);
    }
    // F_t(-w) = I_x(nu/2, 1/2) / 2 with x = nu / (nu + w^2).
    let a = 0.5 * nu;
    let b = 0.5;
    let r = (w / nu.sqrt()).powi(2);
    let (x, y, ln_x, ln_y) = if r.is_finite() {
        let l1p = r.ln_1p();
        (1.0 / (1.0 + r), r / (1.0 + r), -l1p, r.ln() - l1p)
    } else {
        let ln_x = nu.ln() - 2.0 * w.ln();
        (ln_x.exp(), 1.0, ln_x, 0.0)
    };
    let ln_front = a * ln_x + b * ln_y - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let ln_lower = -LN_2 + ln_front + beta_cf(a, b, x, y).ln() - a.ln();
        (ln_lower, 1.0 - ln_lower.exp())
    } else {
        let comp = ln_front.exp() * beta_cf(b, a, y, x) / b;
        let lower = 0.5 * (1.0 - comp);
        (lower.ln(), 0.5 + 0.5 * comp)
    }
}

/// Student t cdf.
pub fn t_cdf(x: f64, nu: DegreesOfFreedom) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let (ln_lower, upper) = t_tails(x.abs(), nu.0);
    if x < 0.0 {
        ln_lower.exp()
    } else {
        upper
    }
}

/// `ln F_t(x)`, finite far below the double underflow threshold.
pub fn t_ln_cdf(x: f64, nu: DegreesOfFreedom) -> f64 {
    let (ln_lower, upper) = t_tails(x.abs(), nu.0);
    if x < 0.0 {
        ln_lower
    } else {
        upper.ln()
    }
}

/// Positive `w` with `ln F_t(-w) = ln_q`, for `ln_q < ln(1/2)`.
///
/// Safeguarded Newton in `ln w` inside an expanding bracket.
pub fn t_isf_ln(ln_q: f64, nu: DegreesOfFreedom) -> f64 {
    if ln_q >= -LN_2 {
        return 0.0;
    }
    if ln_q == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let nuv = nu.0;
    let resid = |y: f64| t_tails(y.exp(), nuv).0 - ln_q;

    // Two starting points: the normal quantile and the power-law tail
    // F(-w) ~ K nu^{(nu-1)/2} w^{-nu} / nu.
    let w_norm = norm_isf_ln(ln_q).max(1e-300);
    let ln_k = ln_gamma_ratio(0.5 * nuv, 0.5) - 0.5 * (nuv * PI).ln();
    let ln_w_tail = (ln_k + 0.5 * (nuv + 1.0) * nuv.ln() - nuv.ln() - ln_q) / nuv;
    let y_norm = w_norm.ln();
    let r_norm = resid(y_norm);
    let mut y = y_norm;
    let mut r = r_norm;
    if ln_w_tail.is_finite() && ln_w_tail < 700.0 {
        let r_tail = resid(ln_w_tail);
        if r_tail.abs() < r_norm.abs() {
            y = ln_w_tail;
            r = r_tail;
        }
    }

    // Expand to a bracket: resid decreases in y.
    let (mut lo, mut hi);
    if r > 0.0 {
        lo = y;
        let mut step = LN_2;
        hi = y + step;
        while resid(hi) > 0.0 {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
    } else {
        hi = y;
        let mut step = LN_2;
        lo = y - step;
        while resid(lo) < 0.0 {
            hi = lo;
            step *= 2.0;
            lo -= step;
        }
    }
    if !(y > lo && y < hi) {
        y = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let w = y.exp();
        let (ln_lower, _) = t_tails(w, nuv);
        let r = ln_lower - ln_q;
        if r == 0.0 {
            return w;
        }
        if r > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        // d ln F(-w) / d ln w = -w f(w) / F(-w)
        let slope = -(y + t_ln_pdf(w, nu) - ln_lower).exp();
        let mut next = y - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let done = (next - y).abs() <= 1e-15 * next.abs().max(1.0) || hi - lo <= 1e-15;
        y = next;
        if done {
            break;
        }
    }
    y.exp()
}

/// Student t quantile for `0 < p < 1`.
pub fn t_quantile(p: f64, nu: DegreesOfFreedom) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("t quantile needs 0 < p < 1, got {p}")));
    }
    Ok(if p < 0.5 {
        -t_isf_ln(p.ln(), nu)
    } else if p > 0.5 {
        t_isf_ln((1.0 - p).ln(), nu)
    } else {
        0.0
    })
}

/// `F_t^{-1}(1 - q)` without forming `1 - q`.
pub fn t_isf(q: f64, nu: DegreesOfFreedom) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "t upper quantile needs 0 < q < 1, got {q}"
        )));
    }
    Ok(if q < 0.5 {
        t_isf_ln(q.ln(), nu)
    } else if q > 0.5 {
        -t_isf_ln((1.0 - q).ln(), nu)
    } else {
        0.0
    })
}

// ---------------------------------------------------------------------------
// Chi
// ---------------------------------------------------------------------------

/// Cdf of the chi distribution with `nu` degrees of freedom, i.e. of the
/// square root of a chi-square variate: `P(nu/2, x^2/2)`.
pub fn chi_cdf(x: f64, nu: DegreesOfFreedom) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::domain(format!("chi cdf needs x >= 0, got {x}")));
    }
    Ok(gamma_pq(0.5 * nu.0, 0.5 * x * x).0)
}

/// Survival function of the chi distribution, `Q(nu/2, x^2/2)`;
/// 1 for `x <= 0`.
pub fn chi_sf(x: f64, nu: DegreesOfFreedom) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_pq(0.5 * nu.0, 0.5 * x * x).1
    }
}

/// Chi-square cdf.
pub fn chi_square_cdf(x: f64, nu: DegreesOfFreedom) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_pq(0.5 * nu.0, 0.5 * x).0
    }
}

/// Chi-square quantile: safeguarded Newton on `ln P` (or `ln Q` above the
/// median) against `ln x`, from a Wilson-Hilferty start.
pub fn chi_square_quantile(p: f64, nu: DegreesOfFreedom) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "chi-square quantile needs 0 < p < 1, got {p}"
        )));
    }
    let nuv = nu.0;
    let a = 0.5 * nuv;
    let lower = p <= 0.5;
    let target = if lower { p.ln() } else { (1.0 - p).ln() };
    // resid decreasing in y = ln x for both tails after the sign flip
    let eval = |y: f64| -> (f64, f64) {
        let x = y.exp();
        let (pp, qq) = gamma_pq(a, 0.5 * x);
        let tail = if lower { pp } else { qq };
        // d tail / d ln x = x * density = exp(ln_front); sign follows the tail
        let slope = ln_gamma_front(a, 0.5 * x).exp() / tail;
        if lower {
            (target - tail.ln(), -slope)
        } else {
            (tail.ln() - target, -slope)
        }
    };

    let z = probit(p);
    let k = 2.0 / (9.0 * nuv);
    let wh = nuv * (1.0 - k + z * k.sqrt()).powi(3);
    let mut y = if wh > 0.0 {
        wh.ln()
    } else {
        // small-x series: P ~ (x/2)^a / Gamma(a + 1)
        (p.ln() + ln_gamma(a + 1.0)) / a + LN_2
    };

    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..300 {
        let (r, slope) = eval(y);
        if r == 0.0 || r.is_nan() {
            break;
        }
        if r > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let mut next = y - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => y + 1.0,
                _ => y - 1.0,
            };
        }
        let done = (next - y).abs() <= 1e-16 * next.abs().max(1.0) || hi - lo <= 1e-15;
        y = next;
        if done {
            break;
        }
    }
    Ok(y.exp())
}
