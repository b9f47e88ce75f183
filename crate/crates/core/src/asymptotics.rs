//! Limiting error rates as `n -> infinity` with `n0 / n -> zeta`.
//!
//! Conditionally on the disturbance `z`, a fraction `t(z | zeta) / alpha` of
//! the hypotheses is rejected, where `t(z | zeta)` is the largest crossing
//! point. Integrating over `z` turns into one-dimensional integrals of
//! `W_Z(z(t | zeta))` along the crossing curve, with a flat piece across the
//! gap `[t1, t2]` of non-LCPs.

use serde::{Deserialize, Serialize};

use crate::crossing::{crossing_report, CrossingReport, Curve, SolverConfig};
use crate::error::{Error, Result};
use crate::models::{check_alpha, check_zeta, Disturbance, ModelSpec};
use crate::quad::{integrate, Quadrature};
use crate::roots::bisect;
use crate::specfun::norm_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResult {
    pub eer: f64,
    pub fdr: f64,
    pub t1: f64,
    pub t2: f64,
    /// Sum of the absolute error estimates of all quadratures involved.
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLimit {
    /// The largest crossing point `t(z | zeta)`; 0 when there is none.
    pub t: f64,
    pub v_over_n: f64,
    pub fdp_limit: f64,
}

/// Largest crossing points for one `(model, alpha, zeta)`, reusing the
/// crossing structure across many disturbance values.
#[derive(Debug, Clone)]
pub struct ConditionalSolver {
    kind: SolverKind,
    alpha: f64,
    zeta: f64,
    xtol: f64,
}

#[derive(Debug, Clone)]
enum SolverKind {
    Curve {
        curve: Curve,
        report: Box<CrossingReport>,
        y_tangent: Option<(f64, f64)>,
    },
    Exponential {
        model: ModelSpec,
    },
}

impl ConditionalSolver {
    pub fn new(model: ModelSpec, alpha: f64, zeta: f64, cfg: &SolverConfig) -> Result<Self> {
        model.validate()?;
        check_alpha(alpha)?;
        check_zeta(zeta)?;
        let kind = match model {
            ModelSpec::Exponential { .. } => {
                if alpha > 0.5 {
                    return Err(Error::domain(format!(
                        "exponential model: largest crossing in closed form needs alpha <= 1/2, got {alpha}"
                    )));
                }
                SolverKind::Exponential { model }
            }
            _ => {
                let report = crossing_report(model, alpha, zeta, cfg)?;
                let curve = Curve::new(model, alpha, zeta)?;
                let y_tangent = if report.z_at_tangent.is_some() {
                    let y2 = if zeta == 1.0 { report.ln_t2 } else { curve.y_of(report.t2) };
                    let y1 = if zeta == 1.0 { f64::NEG_INFINITY } else { curve.y_of(report.t1) };
                    Some((y1, y2))
                } else {
                    None
                };
                SolverKind::Curve { curve, report: Box::new(report), y_tangent }
            }
        };
        Ok(ConditionalSolver { kind, alpha, zeta, xtol: cfg.root_xtol })
    }

    pub fn report(&self) -> Option<&CrossingReport> {
        match &self.kind {
            SolverKind::Curve { report, .. } => Some(report),
            SolverKind::Exponential { .. } => None,
        }
    }

    /// `t(z | zeta)`.
    pub fn lcp(&self, z: f64) -> Result<f64> {
        let (alpha, zeta) = (self.alpha, self.zeta);
        match &self.kind {
            SolverKind::Exponential { model } => {
                model.check_support(Disturbance(z))?;
                if zeta == 1.0 {
                    return Ok(0.0);
                }
                let gamma = 2.0 * (-z).exp();
                Ok(alpha * (1.0 - zeta) / (1.0 - alpha * zeta * gamma))
            }
            SolverKind::Curve { curve, report, y_tangent } => {
                report.model.check_support(Disturbance(z))?;
                let y_top = curve.y_top();
                let zf = |y: f64| {
                    if y >= y_top {
                        // z at t_upper
                        match report.model {
                            ModelSpec::StudentT { .. } => 0.0,
                            _ => f64::NEG_INFINITY,
                        }
                    } else {
                        curve.z(y)
                    }
                };
                let (lo, hi) = match (*y_tangent, report.z_at_tangent) {
                    (Some((_, y2)), Some(zs)) if z <= zs => (y2, y_top),
                    (Some((y1, _)), Some(_)) => {
                        if zeta == 1.0 {
                            return Ok(0.0);
                        }
                        if y1 == f64::NEG_INFINITY {
                            // t1 rounds to t_lower: the lower branch is empty in double
                            return Ok(curve.t_lower);
                        }
                        (f64::NEG_INFINITY, y1)
                    }
                    _ => (f64::NEG_INFINITY, y_top),
                };
                let lo = if lo.is_finite() {
                    lo
                } else {
                    // walk down until the curve is above z
                    let mut step = 1.0;
                    let mut y = hi - step;
                    while zf(y) <= z {
                        step *= 2.0;
                        y = hi - step;
                        if step > 1e9 {
                            return Err(Error::solver(
                                "largest crossing point",
                                format!("crossing curve stays below z = {z} on y > {y}"),
                            ));
                        }
                    }
                    y
                };
                if zf(lo) < z {
                    // z sits on the flat edge within rounding
                    return Ok(curve.t_of(lo));
                }
                let y = bisect(|y| zf(y) - z, lo, hi, self.xtol, "largest crossing point")
                    .map_err(|e| match e {
                        Error::Solver { context, detail } => Error::Solver {
                            context,
                            detail: format!("{detail}; bracket y in [{lo}, {hi}], z = {z}"),
                        },
                        other => other,
                    })?;
                Ok(curve.t_of(y))
            }
        }
    }

    /// `fdp` limit with no crossing: `alpha gamma(z)`.
    fn gamma_term(&self, z: f64) -> f64 {
        match &self.kind {
            SolverKind::Exponential { .. } => 2.0 * self.alpha * (-z).exp(),
            SolverKind::Curve { .. } => 0.0,
        }
    }

    pub fn limits(&self, z: f64) -> Result<ConditionalLimit> {
        let t = self.lcp(z)?;
        let (alpha, zeta) = (self.alpha, self.zeta);
        if t > 0.0 {
            Ok(ConditionalLimit {
                t,
                v_over_n: (t / alpha - (1.0 - zeta)).max(0.0),
                fdp_limit: (1.0 - alpha * (1.0 - zeta) / t).clamp(0.0, 1.0),
            })
        } else {
            Ok(ConditionalLimit { t: 0.0, v_over_n: 0.0, fdp_limit: self.gamma_term(z) })
        }
    }
}

/// Almost-sure limits of `V_n / n` and `V_n / (R_n v 1)` given `Z = z`.
pub fn conditional_limits(model: ModelSpec, alpha: f64, zeta: f64, z: f64) -> Result<ConditionalLimit> {
    ConditionalSolver::new(model, alpha, zeta, &SolverConfig::default())?.limits(z)
}

/// Which limiting distribution [`g_distributions`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    /// cdf of `lim V_n / n`
    Rejections,
    /// cdf of `lim V_n / (R_n v 1)`
    Fdp,
}

/// The cdfs of the limiting `V_n / n` and FDP at `u` in `(0, zeta)`.
///
/// Across the gap of non-LCPs and beyond the largest attainable value the
/// distribution puts no mass, so the cdf is continued as a constant there.
pub fn g_distributions(model: ModelSpec, alpha: f64, zeta: f64, u: f64, which: Which) -> Result<f64> {
    model.validate()?;
    check_alpha(alpha)?;
    check_zeta(zeta)?;
    if !(u > 0.0 && u < zeta) {
        return Err(Error::domain(format!("u must lie in (0, zeta) = (0, {zeta}), got {u}")));
    }
    let t_lower = alpha * (1.0 - zeta);
    let t = match which {
        Which::Rejections => alpha * (u + 1.0 - zeta),
        Which::Fdp => t_lower / (1.0 - u),
    };
    if let ModelSpec::Exponential { .. } = model {
        if zeta == 1.0 {
            // V_n / n -> 0; the FDP limit is 2 alpha e^{-Z}
            return Ok(match which {
                Which::Rejections => 1.0,
                Which::Fdp => model.disturbance_sf((2.0 * alpha / u).ln()),
            });
        }
        let (_, hi) = model.z_of_t_domain(alpha, zeta);
        if t > hi {
            return Ok(1.0);
        }
        return Ok(1.0 - model.disturbance_cdf(model.z_of_t_unchecked(t, zeta, alpha)));
    }
    let rep = crossing_report(model, alpha, zeta, &SolverConfig::default())?;
    if t >= rep.t_upper {
        return Ok(1.0);
    }
    let w_star = rep.z_at_tangent.map(|z| model.disturbance_cdf(z));
    if zeta == 1.0 {
        // all mass of V/n below t2/alpha sits at 0; the FDP is 0 or 1
        let w = w_star.expect("a tangent point always exists for zeta = 1");
        return match which {
            Which::Fdp => Ok(1.0 - w),
            Which::Rejections if t <= rep.t2 => Ok(1.0 - w),
            Which::Rejections => Ok(1.0 - model.disturbance_cdf(model.z_of_t_unchecked(t, zeta, alpha))),
        };
    }
    if rep.has_tangent && t >= rep.t1 && t <= rep.t2 {
        return Ok(1.0 - w_star.expect("tangent"));
    }
    Ok(1.0 - model.disturbance_cdf(model.z_of_t_unchecked(t, zeta, alpha)))
}

/// `W_Z(z(t | zeta))` with `t = t_lower + tau`, evaluated in log space.
fn cdf_along_curve(model: &ModelSpec, curve: &Curve, tau: f64) -> f64 {
    if tau <= 0.0 {
        return if curve.zeta < 1.0 { 1.0 } else { 0.0 };
    }
    if tau >= curve.t_upper - curve.t_lower {
        return 0.0;
    }
    model.disturbance_cdf(curve.z(tau.ln()))
}

/// `int_{tau_a}^{tau_b} W_Z(z(t_lower + tau)) dtau`, switching to `ln tau`
/// below `tau_b * 1e-3` so that a tangent point near 0 is resolved.
fn integrate_curve(model: &ModelSpec, curve: &Curve, tau_a: f64, ln_tau_a: f64, tau_b: f64, tol: f64) -> Result<Quadrature> {
    let f = |tau: f64| cdf_along_curve(model, curve, tau);
    let split = 1e-3 * tau_b;
    if tau_a >= split {
        return integrate(f, tau_a, tau_b, tol);
    }
    let upper = integrate(f, split, tau_b, 0.5 * tol)?;
    // e^y below e^{-745} underflows anyway
    let y_a = ln_tau_a.max(split.ln() - 745.0);
    let lower = integrate(
        |y: f64| {
            let tau = y.exp();
            if tau == 0.0 {
                0.0
            } else {
                model.disturbance_cdf(curve.z(y)) * tau
            }
        },
        y_a,
        split.ln(),
        0.5 * tol,
    )?;
    Ok(upper + lower)
}

fn eer_fdr_curve(model: ModelSpec, alpha: f64, zeta: f64, cfg: &SolverConfig) -> Result<AsymptoticResult> {
    let rep = crossing_report(model, alpha, zeta, cfg)?;
    let curve = Curve::new(model, alpha, zeta)?;
    let (t_lower, t_upper) = (rep.t_lower, rep.t_upper);
    let tol = cfg.quad_tol;
    let w_star = rep.z_at_tangent.map(|z| model.disturbance_cdf(z)).unwrap_or(0.0);

    if zeta == 1.0 {
        // EER = t2 W(z*) / alpha + int_{t2/alpha}^{t_upper/alpha} W(z(alpha t)) dt
        let q = integrate_curve(&model, &curve, rep.t2, rep.ln_t2, t_upper, tol * alpha)?;
        let eer = rep.t2 * w_star / alpha + q.value / alpha;
        return Ok(AsymptoticResult {
            eer,
            fdr: w_star,
            t1: 0.0,
            t2: rep.t2,
            quadrature_error: q.error / alpha,
        });
    }

    let tau_top = t_upper - t_lower;
    let third = tol / 3.0;
    // EER in the rejection-proportion variable tau / alpha
    let (eer_q, gap_eer) = if rep.has_tangent {
        let (tau1, tau2) = (rep.t1 - t_lower, rep.t2 - t_lower);
        let lo = integrate(|tau| cdf_along_curve(&model, &curve, tau), 0.0, tau1, third * alpha)?;
        let hi = integrate(|tau| cdf_along_curve(&model, &curve, tau), tau2, tau_top, third * alpha)?;
        (lo + hi, (rep.t2 - rep.t1) / alpha * w_star)
    } else {
        let q = integrate(|tau| cdf_along_curve(&model, &curve, tau), 0.0, tau_top, 2.0 * third * alpha)?;
        (q, 0.0)
    };
    let eer = eer_q.value / alpha + gap_eer;

    // FDR in the FDP variable x = 1 - t_lower / t, i.e. tau = t_lower x / (1 - x)
    let x_of = |t: f64| 1.0 - t_lower / t;
    let x_top = x_of(t_upper);
    let g = |x: f64| cdf_along_curve(&model, &curve, t_lower * x / (1.0 - x));
    let (fdr_q, gap_fdr) = if rep.has_tangent {
        let (x1, x2) = (x_of(rep.t1), x_of(rep.t2));
        let lo = integrate(g, 0.0, x1, third)?;
        let hi = integrate(g, x2, x_top, third)?;
        (lo + hi, (x2 - x1) * w_star)
    } else {
        (integrate(g, 0.0, x_top, 2.0 * third)?, 0.0)
    };
    let fdr = fdr_q.value + gap_fdr;
    Ok(AsymptoticResult {
        eer,
        fdr: fdr.clamp(0.0, 1.0),
        t1: rep.t1,
        t2: rep.t2,
        quadrature_error: eer_q.error / alpha + fdr_q.error,
    })
}

/// Limiting EER and FDR in the normal model.
pub fn eer_fdr_normal(alpha: f64, zeta: f64, rho: f64) -> Result<AsymptoticResult> {
    eer_fdr_normal_with(alpha, zeta, rho, &SolverConfig::default())
}

pub fn eer_fdr_normal_with(alpha: f64, zeta: f64, rho: f64, cfg: &SolverConfig) -> Result<AsymptoticResult> {
    eer_fdr_curve(ModelSpec::normal(rho)?, alpha, zeta, cfg)
}

/// Limiting EER and FDR in the t model. Degrees of freedom below 0.5 are
/// outside the supported range.
pub fn eer_fdr_t(alpha: f64, zeta: f64, nu: f64) -> Result<AsymptoticResult> {
    eer_fdr_t_with(alpha, zeta, nu, &SolverConfig::default())
}

pub fn eer_fdr_t_with(alpha: f64, zeta: f64, nu: f64, cfg: &SolverConfig) -> Result<AsymptoticResult> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::domain(format!("the t model needs alpha in (0, 1/2], got {alpha}")));
    }
    if !(nu >= 0.5) {
        return Err(Error::domain(format!("degrees of freedom below 0.5 are not supported, got {nu}")));
    }
    eer_fdr_curve(ModelSpec::student_t(nu)?, alpha, zeta, cfg)
}

/// The two terms of `FDR_inf(1) = P(E1) + alpha int_{E0} gamma dP^Z`, where
/// `E1` is the event of a positive largest crossing point and `E0` its
/// complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullNullDecomposition {
    pub p_e1: f64,
    pub gamma_term: f64,
}

pub fn full_null_decomposition(model: ModelSpec, alpha: f64, cfg: &SolverConfig) -> Result<FullNullDecomposition> {
    match model {
        ModelSpec::Exponential { .. } => {
            // no crossing for any z >= 0; E[2 alpha e^{-Z}] = alpha
            let q = integrate(|z: f64| 2.0 * alpha * (-z).exp() * (-z).exp(), 0.0, 40.0, cfg.quad_tol)?;
            Ok(FullNullDecomposition { p_e1: 0.0, gamma_term: q.value })
        }
        _ => {
            let rep = crossing_report(model, alpha, 1.0, cfg)?;
            let zs = rep.z_at_tangent.expect("zeta = 1 always has a tangent point");
            let solver = ConditionalSolver::new(model, alpha, 1.0, cfg)?;
            // gamma vanishes identically; integrate it anyway over E0 = (z*, inf)
            let q = integrate(|z| solver.gamma_term(z), zs, zs + 50.0, cfg.quad_tol)?;
            Ok(FullNullDecomposition {
                p_e1: model.disturbance_cdf(zs),
                gamma_term: q.value,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    /// `lim_{rho -> 0} FDR_inf(1)`, defined for `alpha` in `(0, 1/2]`.
    pub fdr_discontinuity: Option<f64>,
    pub ene_lsu: f64,
    pub ene_lsd: f64,
    pub eer_sup_indep: f64,
    pub zeta_worst: f64,
}

pub fn limit_constants(alpha: f64) -> Result<LimitConstants> {
    check_alpha(alpha)?;
    let r = (1.0 - alpha).sqrt();
    Ok(LimitConstants {
        fdr_discontinuity: (alpha <= 0.5).then(|| norm_cdf(-(-2.0 * alpha.ln()).sqrt())),
        ene_lsu: alpha / ((1.0 - alpha) * (1.0 - alpha)),
        ene_lsd: alpha / (1.0 - alpha),
        eer_sup_indep: (1.0 - r) * (1.0 - r) / alpha,
        zeta_worst: (1.0 - r) / alpha,
    })
}

/// Limiting expected number of false rejections when all hypotheses are
/// true and the null cdf has slope `gamma` at 0: `a / (1 - a)^2` with
/// `a = alpha gamma`; infinite at `gamma = 1 / alpha`.
pub fn expected_false_rejections_all_true(alpha: f64, gamma: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let a = alpha * gamma;
    if !(gamma >= 0.0) || a > 1.0 {
        return Err(Error::domain(format!(
            "gamma must lie in [0, 1/alpha] = [0, {}], got {gamma}",
            1.0 / alpha
        )));
    }
    if a == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(a / ((1.0 - a) * (1.0 - a)))
}
