//! Crossing and tangent points of the limiting ecdf with the Simes line.
//!
//! For a fixed disturbance `z` the limiting ecdf of all p-values is
//! `F(t) = (1 - zeta) + zeta F_inf(t | z)`; the largest crossing point (LCP)
//! is the largest `t` at which `F` passes from above to below `t / alpha`.
//! Following the crossing curve `z(t | zeta)` (the disturbance value whose
//! ecdf meets the line at `t`) the set of LCPs is an interval, or two
//! intervals separated by a gap `[t1, t2]` when the curve is not monotone.
//! At the disturbance `z*` on the gap's edge the ecdf touches the line at
//! `t2` (a tangent point) and crosses it at `t1`.
//!
//! Near `zeta = 1` and for weak dependence the tangent point is far below
//! the smallest double, so both solvers work in transformed coordinates:
//! the normal one in `u = Phi^{-1}(1 - t)` with log-space tail ratios, the
//! t one in `y = ln(t - alpha (1 - zeta))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{check_alpha, check_zeta, ModelSpec};
use crate::roots::{bisect, brent};
use crate::specfun::{
    log_norm_sf, norm_isf_ln, norm_ln_mills, norm_ln_pdf, norm_sf, probit, t_isf_ln, t_ln_cdf,
    t_ln_pdf, DegreesOfFreedom,
};

/// Numerical knobs shared by the crossing and asymptotic solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Final bracket width of the root finders (relative, in the solver's
    /// transformed variable).
    pub root_xtol: f64,
    /// Sign tolerance used to classify tangent points.
    pub tp_eps: f64,
    /// Number of cells per scan window.
    pub scan_cells: usize,
    /// Width of the first scan window; later windows double it.
    pub scan_span: f64,
    /// Absolute tolerance of each quadrature.
    pub quad_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            root_xtol: 1e-14,
            tp_eps: 1e-9,
            scan_cells: 1000,
            scan_span: 50.0,
            quad_tol: 1e-8,
        }
    }
}

/// One connected piece of the LCP set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LcpPiece {
    Point { t: f64 },
    Open { lo: f64, hi: f64 },
}

/// Tangent point of the limiting ecdf with the Simes line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencySolution {
    /// Transformed abscissa of the tangent point: `Phi^{-1}(1 - t2)` for the
    /// normal model, `F_t^{-1}(1 - t2)` for the t model.
    pub u_star: f64,
    /// Disturbance value at which the contact happens.
    pub z_star: f64,
    pub t2: f64,
    /// `ln t2`, finite even when `t2` underflows.
    pub ln_t2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub model: ModelSpec,
    pub alpha: f64,
    pub zeta: f64,
    pub t_lower: f64,
    pub t_upper: f64,
    pub t1: f64,
    pub t2: f64,
    pub ln_t2: f64,
    pub has_tangent: bool,
    pub u_star: Option<f64>,
    pub z_at_tangent: Option<f64>,
    pub lcp_intervals: Vec<LcpPiece>,
}

/// Distance between the transformed limiting ecdf and the Simes line in the
/// normal model, at `t = 1 - Phi(u)`.
pub fn distance_normal(u: f64, x0: f64, zeta: f64, alpha: f64, rho: f64) -> f64 {
    let v = (u + rho.sqrt() * x0) / (1.0 - rho).sqrt();
    (1.0 - zeta) + zeta * norm_sf(v) - norm_sf(u) / alpha
}

/// Stationary points `(u1, u2)`, `u1 >= u2`, of [`distance_normal`] in `u`;
/// `u1` is a local minimum and `u2` a local maximum. `None` when the
/// discriminant is negative.
pub fn critical_u_pair(x0: f64, zeta: f64, alpha: f64, rho: f64) -> Option<(f64, f64)> {
    let l = normal_log_level(zeta, alpha, rho);
    stationary_pair(x0, l, rho)
}

fn normal_log_level(zeta: f64, alpha: f64, rho: f64) -> f64 {
    0.5 * (-rho).ln_1p() - (alpha * zeta).ln()
}

fn stationary_pair(x0: f64, l: f64, rho: f64) -> Option<(f64, f64)> {
    let mut disc = x0 * x0 - 2.0 * l;
    if !(disc >= 0.0) {
        // x0 = -sqrt(2 l) rounds to either side of the double root
        if disc > -4.0 * f64::EPSILON * (2.0 * l).abs() {
            disc = 0.0;
        } else {
            return None;
        }
    }
    let sr = rho.sqrt();
    let srb = (1.0 - rho).sqrt();
    let root = srb * disc.sqrt();
    // product of the roots: (rho x0^2 + 2 (1 - rho) l) / rho
    let num = rho * x0 * x0 + 2.0 * (1.0 - rho) * l;
    if x0 < 0.0 {
        let u1 = (-x0 + root) / sr;
        let u2 = num / ((-x0 + root) * sr);
        Some((u1, u2))
    } else {
        let u2 = (-x0 - root) / sr;
        let u1 = -num / ((x0 + root) * sr);
        Some((u1, u2))
    }
}

struct NormalTp {
    alpha: f64,
    zeta: f64,
    rho: f64,
    sr: f64,
    srb: f64,
    l: f64,
    u_alpha: f64,
}

impl NormalTp {
    fn new(alpha: f64, zeta: f64, rho: f64) -> Self {
        NormalTp {
            alpha,
            zeta,
            rho,
            sr: rho.sqrt(),
            srb: (1.0 - rho).sqrt(),
            l: normal_log_level(zeta, alpha, rho),
            u_alpha: -probit(alpha),
        }
    }

    /// A function with the sign of the distance at `(u, x0)`; for `zeta = 1`
    /// the log of the tail ratio, which stays finite for any `u`.
    fn signed_distance(&self, u: f64, x0: f64) -> f64 {
        if self.zeta < 1.0 {
            return distance_normal(u, x0, self.zeta, self.alpha, self.rho);
        }
        let v = (u + self.sr * x0) / self.srb;
        // ln Q(v) - ln Q(u) = (u - v)(u + v)/2 + ln M(v) - ln M(u)
        let u_minus_v = (-u * self.rho / (1.0 + self.srb) - self.sr * x0) / self.srb;
        0.5 * u_minus_v * (u + v) + norm_ln_mills(v) - norm_ln_mills(u) + self.alpha.ln()
    }

    /// Maximum of the distance over the admissible `u >= u_alpha` on the
    /// bump, i.e. at `max(u2, u_alpha)`.
    fn h(&self, x0: f64) -> f64 {
        match stationary_pair(x0, self.l, self.rho) {
            Some((_, u2)) => self.signed_distance(u2.max(self.u_alpha), x0),
            None => f64::NAN,
        }
    }
}

/// Scans `f` downward from `hi` (where `f(hi) < 0`) for the first point with
/// `f > 0`, in windows of `cells` cells that double in width up to
/// `max_depth`. Returns the bracketing cell `(lo, hi)`.
fn scan_down<F: FnMut(f64) -> f64>(
    mut f: F,
    hi: f64,
    span: f64,
    cells: usize,
    max_depth: f64,
) -> Option<(f64, f64)> {
    let cells = cells.max(1);
    let mut top = hi;
    let mut width = span;
    let mut depth = 0.0;
    while depth < max_depth {
        let h = width / cells as f64;
        let mut prev = top;
        for k in 1..=cells {
            let x = top - h * k as f64;
            if f(x) > 0.0 {
                return Some((x, prev));
            }
            prev = x;
        }
        depth += width;
        top -= width;
        width *= 2.0;
    }
    None
}

/// Tangent point of the normal model, or `None` when the ecdf crosses the
/// Simes line only once for every `x0` (then `t1 = t2`).
pub fn solve_tangency_normal(
    alpha: f64,
    zeta: f64,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<Option<TangencySolution>> {
    check_alpha(alpha)?;
    check_zeta(zeta)?;
    ModelSpec::normal(rho)?;
    Ok(normal_tangency(alpha, zeta, rho, cfg)?.map(|(s, _)| s))
}

/// Returns the tangency and `t1`.
fn normal_tangency(
    alpha: f64,
    zeta: f64,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<Option<(TangencySolution, f64)>> {
    let ctx = NormalTp::new(alpha, zeta, rho);
    let top = if ctx.l > 0.0 {
        -(2.0 * ctx.l).sqrt()
    } else {
        // every x0 has a bump; walk up until it sits below the line
        let mut x = 0.0;
        while ctx.h(x) >= 0.0 {
            x = 2.0 * x + 1.0;
            if x > 1e6 {
                return Err(Error::solver("normal tangency", "no x0 with a sub-line bump"));
            }
        }
        x
    };
    let h_top = ctx.h(top);
    if h_top.is_nan() {
        return Err(Error::solver("normal tangency", format!("h undefined at x0 = {top}")));
    }
    if !(h_top < 0.0) {
        if zeta == 1.0 {
            return Err(Error::solver(
                "normal tangency",
                format!("bump at x0 = {top} is not below the line (h = {h_top:e})"),
            ));
        }
        return Ok(None);
    }
    let max_depth = cfg.scan_span * 31.0;
    let (lo, hi) = scan_down(|x| ctx.h(x), top, cfg.scan_span, cfg.scan_cells, max_depth)
        .ok_or_else(|| {
            Error::solver(
                "normal tangency",
                format!(
                    "no sign change of h on [{:.3}, {:.3}]",
                    top - max_depth,
                    top
                ),
            )
        })?;
    let x_star = bisect(|x| ctx.h(x), lo, hi, cfg.root_xtol, "normal tangency")?;
    let (u1, u2) = stationary_pair(x_star, ctx.l, rho).expect("inside the bump region");
    let u_lower = if zeta < 1.0 { -probit(alpha * (1.0 - zeta)) } else { f64::INFINITY };
    if !(u2 > ctx.u_alpha && u2 < u_lower) {
        return Ok(None);
    }
    let ln_t2 = log_norm_sf(u2);
    let t1 = if zeta < 1.0 {
        // The crossing to the right of the local minimum.
        let u = brent(
            |u| ctx.signed_distance(u, x_star),
            u1.max(ctx.u_alpha),
            u_lower,
            cfg.root_xtol,
            "normal t1",
        )?;
        norm_sf(u)
    } else {
        0.0
    };
    Ok(Some((
        TangencySolution { u_star: u2, z_star: x_star, t2: ln_t2.exp(), ln_t2 },
        t1,
    )))
}

/// The crossing curve `z(t | zeta)` as a function of `y = ln(t - t_lower)`,
/// for the normal and t models.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Curve {
    pub model: ModelSpec,
    pub alpha: f64,
    pub zeta: f64,
    pub t_lower: f64,
    pub t_upper: f64,
    ln_alpha_zeta: f64,
}

impl Curve {
    pub fn new(model: ModelSpec, alpha: f64, zeta: f64) -> Result<Self> {
        let (t_lower, t_upper) = match model {
            ModelSpec::Normal { .. } => (alpha * (1.0 - zeta), alpha),
            ModelSpec::StudentT { .. } => (alpha * (1.0 - zeta), alpha * (1.0 - 0.5 * zeta)),
            ModelSpec::Exponential { .. } => {
                return Err(Error::domain(
                    "the exponential model has closed-form crossings; use the exact module",
                ))
            }
        };
        Ok(Curve {
            model,
            alpha,
            zeta,
            t_lower: if zeta == 1.0 { 0.0 } else { t_lower },
            t_upper,
            ln_alpha_zeta: (alpha * zeta).ln(),
        })
    }

    pub fn y_top(&self) -> f64 {
        (self.t_upper - self.t_lower).ln()
    }

    pub fn t_of(&self, y: f64) -> f64 {
        self.t_lower + y.exp()
    }

    pub fn ln_t_of(&self, y: f64) -> f64 {
        if self.t_lower == 0.0 {
            y
        } else {
            (self.t_lower + y.exp()).ln()
        }
    }

    /// `Phi^{-1}(1 - q)` with `q = (t / alpha - 1 + zeta) / zeta = e^y / (alpha zeta)`.
    fn mixed_isf(&self, y: f64) -> f64 {
        let ln_q = y - self.ln_alpha_zeta;
        if ln_q < -std::f64::consts::LN_2 {
            norm_isf_ln(ln_q)
        } else {
            probit((1.0 - self.t_of(y) / self.alpha) / self.zeta)
        }
    }

    /// Transformed abscissa: `Phi^{-1}(1 - t)` or `F_t^{-1}(1 - t)`.
    pub fn abscissa(&self, y: f64) -> f64 {
        let ln_t = self.ln_t_of(y);
        match self.model {
            ModelSpec::Normal { .. } => norm_isf_ln(ln_t),
            ModelSpec::StudentT { nu } => t_isf_ln(ln_t, nu),
            ModelSpec::Exponential { .. } => unreachable!(),
        }
    }

    pub fn z(&self, y: f64) -> f64 {
        let v = self.mixed_isf(y);
        let a = self.abscissa(y);
        match self.model {
            ModelSpec::Normal { rho } => ((1.0 - rho).sqrt() * v - a) / rho.sqrt(),
            ModelSpec::StudentT { .. } => v / a,
            ModelSpec::Exponential { .. } => unreachable!(),
        }
    }

    /// `y` of a probability `t` in `(t_lower, t_upper)`.
    pub fn y_of(&self, t: f64) -> f64 {
        (t - self.t_lower).ln()
    }
}

/// Sign of `ds/dt` along the t-model crossing curve.
fn t_slope_sign(curve: &Curve, nu: DegreesOfFreedom, y: f64) -> f64 {
    let v = curve.mixed_isf(y);
    let w = curve.abscissa(y);
    (curve.zeta * curve.alpha * v / w).ln() + norm_ln_pdf(v) - t_ln_pdf(w, nu)
}

struct TSolution {
    tangency: TangencySolution,
    t1: f64,
}

fn t_tangency(alpha: f64, zeta: f64, nu: DegreesOfFreedom, cfg: &SolverConfig) -> Result<Option<TSolution>> {
    let model = ModelSpec::StudentT { nu };
    let curve = Curve::new(model, alpha, zeta)?;
    let g = |y: f64| t_slope_sign(&curve, nu, y);
    // Start just inside t_upper, where s -> 0 and the slope is negative.
    let y_top = curve.y_top();
    let y_start = y_top + (-1e-9_f64).ln_1p();
    // below t_lower * 1e-20 the offset is invisible in t itself
    let max_depth = if zeta == 1.0 { 2.0e5 } else { y_top - curve.t_lower.ln() + 46.0 };
    let Some((lo, hi)) = scan_down(g, y_start, cfg.scan_span, cfg.scan_cells, max_depth) else {
        if zeta == 1.0 {
            return Err(Error::solver(
                "t tangency",
                format!("ds/dt never changed sign for ln t in [{:.1}, {y_start:.3}]", y_start - max_depth),
            ));
        }
        return Ok(None);
    };
    let y2 = bisect(g, lo, hi, cfg.root_xtol, "t tangency")?;
    let s_star = curve.z(y2);
    let t1 = if zeta < 1.0 {
        // local minimum of s below t2, then the matching crossing below it
        let neg = |y: f64| -t_slope_sign(&curve, nu, y);
        let (alo, ahi) = scan_down(neg, y2, cfg.scan_span, cfg.scan_cells, max_depth)
            .ok_or_else(|| Error::solver("t tangency", "no local minimum of s below t2"))?;
        let ya = bisect(g, alo, ahi, cfg.root_xtol, "t local minimum")?;
        let mut ylo = ya - 1.0;
        let mut step = 1.0;
        while curve.z(ylo) <= s_star {
            step *= 2.0;
            ylo -= step;
            if step > max_depth {
                return Err(Error::solver("t1", "crossing curve stays below s*"));
            }
        }
        let y1 = bisect(|y| curve.z(y) - s_star, ylo, ya, cfg.root_xtol, "t1")?;
        curve.t_of(y1)
    } else {
        0.0
    };
    let ln_t2 = curve.ln_t_of(y2);
    Ok(Some(TSolution {
        tangency: TangencySolution {
            u_star: curve.abscissa(y2),
            z_star: s_star,
            t2: ln_t2.exp(),
            ln_t2,
        },
        t1,
    }))
}

/// Tangent point of the t model: a simultaneous root of
/// `(1 - zeta) + zeta Phi(-s w) = F_t(-w) / alpha` and
/// `zeta alpha s phi(s w) = f_t(w)`.
pub fn solve_tangency_t(
    alpha: f64,
    zeta: f64,
    nu: f64,
    cfg: &SolverConfig,
) -> Result<Option<TangencySolution>> {
    check_t_alpha(alpha)?;
    check_zeta(zeta)?;
    let nu = DegreesOfFreedom::new(nu)?;
    Ok(t_tangency(alpha, zeta, nu, cfg)?.map(|s| s.tangency))
}

fn check_t_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "the t model needs alpha in (0, 1/2], got {alpha}"
        )))
    }
}

/// Residuals of the two t-model tangency equations at a solution, in log
/// form: `ln[(1 - zeta) + zeta Phi(-s w)] - ln[F_t(-w) / alpha]` and
/// `ln[zeta alpha s phi(s w)] - ln f_t(w)`.
pub fn t_tangency_residuals(alpha: f64, zeta: f64, nu: f64, sol: &TangencySolution) -> Result<(f64, f64)> {
    let nu = DegreesOfFreedom::new(nu)?;
    let (s, w) = (sol.z_star, sol.u_star);
    let lq = log_norm_sf(s * w);
    let lhs = if zeta < 1.0 {
        ((1.0 - zeta) + zeta * lq.exp()).ln()
    } else {
        lq
    };
    let r1 = lhs - (t_ln_cdf(-w, nu) - alpha.ln());
    let r2 = (zeta * alpha * s).ln() + norm_ln_pdf(s * w) - t_ln_pdf(w, nu);
    Ok((r1, r2))
}

/// Crossing structure for the normal or t model.
pub fn crossing_report(model: ModelSpec, alpha: f64, zeta: f64, cfg: &SolverConfig) -> Result<CrossingReport> {
    model.validate()?;
    check_alpha(alpha)?;
    check_zeta(zeta)?;
    let curve = Curve::new(model, alpha, zeta)?;
    let (t_lower, t_upper) = (curve.t_lower, curve.t_upper);
    let found = match model {
        ModelSpec::Normal { rho } => normal_tangency(alpha, zeta, rho, cfg)?,
        ModelSpec::StudentT { nu } => {
            check_t_alpha(alpha)?;
            t_tangency(alpha, zeta, nu, cfg)?.map(|s| (s.tangency, s.t1))
        }
        ModelSpec::Exponential { .. } => unreachable!("rejected by Curve::new"),
    };
    let mut report = CrossingReport {
        model,
        alpha,
        zeta,
        t_lower,
        t_upper,
        t1: t_lower,
        t2: t_lower,
        ln_t2: t_lower.ln(),
        has_tangent: false,
        u_star: None,
        z_at_tangent: None,
        lcp_intervals: Vec::new(),
    };
    match found {
        Some((tp, t1)) => {
            report.t1 = t1;
            report.t2 = tp.t2;
            report.ln_t2 = tp.ln_t2;
            report.has_tangent = zeta == 1.0 || t1 < tp.t2;
            report.u_star = Some(tp.u_star);
            report.z_at_tangent = Some(tp.z_star);
            if zeta == 1.0 {
                report.lcp_intervals.push(LcpPiece::Point { t: 0.0 });
            } else {
                report.lcp_intervals.push(LcpPiece::Open { lo: t_lower, hi: t1 });
            }
            report.lcp_intervals.push(LcpPiece::Open { lo: tp.t2, hi: t_upper });
        }
        None => {
            report.lcp_intervals.push(LcpPiece::Open { lo: t_lower, hi: t_upper });
        }
    }
    Ok(report)
}

impl CrossingReport {
    /// Whether `t` lies in the interior of the LCP set (the isolated point 0
    /// for `zeta = 1` included).
    pub fn is_lcp(&self, t: f64) -> bool {
        self.lcp_intervals.iter().any(|p| match *p {
            LcpPiece::Point { t: x } => t == x,
            LcpPiece::Open { lo, hi } => t > lo && t < hi,
        })
    }
}
