//! The three exchangeable model families with a shared disturbance `Z`.
//!
//! * Normal: `T_i = sqrt(1 - rho) X_i - sqrt(rho) x0`, equi-correlated with
//!   correlation `rho`; disturbance `x0 ~ N(0, 1)`.
//! * Student t: `T_i = X_i / S` with `nu S^2 ~ chi^2_nu`; disturbance `s`.
//! * Exponential: `T_i = X_i - Z` with `X_i, Z ~ Exp(1)`; disturbance `z`.
//!
//! In every family a proportion `zeta` of hypotheses is true; the others are
//! totally false and their p-values are exactly 0 (the exponential family
//! can instead carry a finite location shift for the false nulls).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Stream, StreamRole};
use crate::specfun::{
    chi_cdf, chi_square_quantile, chi_sf, norm_cdf, norm_sf, probit, t_cdf, t_isf,
    DegreesOfFreedom,
};
use crate::stepup::PValueSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Normal { rho: f64 },
    StudentT { nu: DegreesOfFreedom },
    /// `shift`: location of the false-null `X_i`; `None` means p = 0.
    Exponential { shift: Option<f64> },
}

/// A realized value of the disturbance variable (`x0`, `s` or `z`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Disturbance(pub f64);

/// Size, true-null proportion and seed of one simulated experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeConfig {
    pub n: usize,
    pub zeta: f64,
    pub seed: u64,
}

impl ExtremeConfig {
    pub fn new(n: usize, zeta: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !(0.0..=1.0).contains(&zeta) {
            return Err(Error::domain(format!("zeta must lie in [0, 1], got {zeta}")));
        }
        Ok(ExtremeConfig { n, zeta, seed })
    }

    /// Number of true nulls, `round(zeta n)` with halves rounded up.
    pub fn n0(&self) -> usize {
        ((self.zeta * self.n as f64 + 0.5).floor() as usize).min(self.n)
    }

    pub fn n1(&self) -> usize {
        self.n - self.n0()
    }

    /// The realized proportion `n0 / n`.
    pub fn zeta_n(&self) -> f64 {
        self.n0() as f64 / self.n as f64
    }
}

fn upper_normal(t: f64) -> f64 {
    -probit(t)
}

impl ModelSpec {
    pub fn normal(rho: f64) -> Result<Self> {
        let m = ModelSpec::Normal { rho };
        m.validate()?;
        Ok(m)
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        Ok(ModelSpec::StudentT { nu: DegreesOfFreedom::new(nu)? })
    }

    pub fn exponential() -> Self {
        ModelSpec::Exponential { shift: None }
    }

    pub fn exponential_shifted(shift: f64) -> Result<Self> {
        let m = ModelSpec::Exponential { shift: Some(shift) };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Normal { rho } if !(rho > 0.0 && rho < 1.0) => {
                Err(Error::domain(format!("rho must lie in (0, 1), got {rho}")))
            }
            ModelSpec::StudentT { nu } => DegreesOfFreedom::new(nu.value()).map(|_| ()),
            ModelSpec::Exponential { shift: Some(s) } if !(s > 0.0 && s.is_finite()) => {
                Err(Error::domain(format!("shift must be positive, got {s}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Normal { .. } => "normal",
            ModelSpec::StudentT { .. } => "t",
            ModelSpec::Exponential { .. } => "exponential",
        }
    }

    /// The dependence parameter (rho or nu); NaN for the exponential family.
    pub fn dependence(&self) -> f64 {
        match *self {
            ModelSpec::Normal { rho } => rho,
            ModelSpec::StudentT { nu } => nu.value(),
            ModelSpec::Exponential { .. } => f64::NAN,
        }
    }

    pub fn check_support(&self, z: Disturbance) -> Result<()> {
        let ok = match self {
            ModelSpec::Normal { .. } => z.0.is_finite(),
            ModelSpec::StudentT { .. } => z.0 > 0.0 && z.0.is_finite(),
            ModelSpec::Exponential { .. } => z.0 >= 0.0 && z.0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "disturbance {} outside the support of the {} model",
                z.0,
                self.name()
            )))
        }
    }

    /// Conditional limiting cdf of a true-null p-value, `F_inf(t | z)`.
    pub fn f_infinity(&self, t: f64, z: Disturbance) -> Result<f64> {
        self.validate()?;
        self.check_support(z)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("t must lie in [0, 1], got {t}")));
        }
        Ok(self.f_inf_unchecked(t, z.0))
    }

    pub(crate) fn f_inf_unchecked(&self, t: f64, z: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match *self {
            ModelSpec::Normal { rho } => {
                let u = upper_normal(t);
                norm_sf((u + rho.sqrt() * z) / (1.0 - rho).sqrt())
            }
            ModelSpec::StudentT { nu } => {
                let w = t_isf(t, nu).expect("t in (0, 1)");
                norm_sf(z * w)
            }
            ModelSpec::Exponential { .. } => {
                let ez = (-z).exp();
                if t <= 0.5 {
                    2.0 * ez * t
                } else if t <= 1.0 - 0.5 * ez {
                    ez / (2.0 - 2.0 * t)
                } else {
                    1.0
                }
            }
        }
    }

    /// `(1 - zeta) + zeta F_inf(t | z)`: the limiting ecdf of all p-values.
    pub fn f_infinity_mixed(&self, t: f64, z: Disturbance, zeta: f64) -> Result<f64> {
        check_zeta(zeta)?;
        Ok((1.0 - zeta) + zeta * self.f_infinity(t, z)?)
    }

    /// `lim_{t -> 0+} F_inf(t | z) / t`.
    pub fn gamma_at_zero(&self, z: Disturbance) -> Result<f64> {
        self.check_support(z)?;
        Ok(match self {
            ModelSpec::Exponential { .. } => 2.0 * (-z.0).exp(),
            _ => 0.0,
        })
    }

    /// Open interval of `t` on which [`ModelSpec::z_of_t`] is defined.
    pub fn z_of_t_domain(&self, alpha: f64, zeta: f64) -> (f64, f64) {
        let lo = alpha * (1.0 - zeta);
        match self {
            ModelSpec::Normal { .. } => (lo, alpha),
            ModelSpec::StudentT { .. } => (lo, alpha * (1.0 - 0.5 * zeta)),
            ModelSpec::Exponential { .. } => {
                let hi = if 2.0 * alpha * zeta < 1.0 {
                    alpha * (1.0 - zeta) / (1.0 - 2.0 * alpha * zeta)
                } else {
                    f64::INFINITY
                };
                (lo, hi.min(0.5))
            }
        }
    }

    /// The disturbance value at which `F_inf(. | z, zeta)` meets the Simes
    /// line `t / alpha` at `t`.
    pub fn z_of_t(&self, t: f64, zeta: f64, alpha: f64) -> Result<Disturbance> {
        self.validate()?;
        check_zeta(zeta)?;
        check_alpha(alpha)?;
        let (lo, hi) = self.z_of_t_domain(alpha, zeta);
        let inside = match self {
            ModelSpec::Exponential { .. } => t > lo && t <= hi,
            _ => t > lo && t < hi,
        };
        if !inside {
            return Err(Error::domain(format!(
                "t = {t} outside the admissible interval ({lo}, {hi})"
            )));
        }
        Ok(Disturbance(self.z_of_t_unchecked(t, zeta, alpha)))
    }

    pub(crate) fn z_of_t_unchecked(&self, t: f64, zeta: f64, alpha: f64) -> f64 {
        match *self {
            ModelSpec::Normal { rho } => {
                let v = mixed_isf(t, zeta, alpha);
                ((1.0 - rho).sqrt() * v - upper_normal(t)) / rho.sqrt()
            }
            ModelSpec::StudentT { nu } => {
                let v = mixed_isf(t, zeta, alpha);
                v / t_isf(t, nu).expect("t in (0, 1)")
            }
            ModelSpec::Exponential { .. } => {
                (2.0 * zeta * t / (t / alpha - 1.0 + zeta)).ln()
            }
        }
    }

    /// Cdf of the disturbance, `W_Z`.
    pub fn disturbance_cdf(&self, z: f64) -> f64 {
        match *self {
            ModelSpec::Normal { .. } => norm_cdf(z),
            ModelSpec::StudentT { nu } => {
                if z <= 0.0 {
                    0.0
                } else {
                    chi_cdf(nu.value().sqrt() * z, nu).expect("non-negative")
                }
            }
            ModelSpec::Exponential { .. } => {
                if z <= 0.0 {
                    0.0
                } else {
                    -(-z).exp_m1()
                }
            }
        }
    }

    /// `1 - W_Z(z)` without cancellation.
    pub fn disturbance_sf(&self, z: f64) -> f64 {
        match *self {
            ModelSpec::Normal { .. } => norm_sf(z),
            ModelSpec::StudentT { nu } => {
                chi_sf(nu.value().sqrt() * z, nu)
            }
            ModelSpec::Exponential { .. } => {
                if z <= 0.0 {
                    1.0
                } else {
                    (-z).exp()
                }
            }
        }
    }

    pub(crate) fn draw_disturbance(&self, stream: &mut Stream) -> f64 {
        match *self {
            ModelSpec::Normal { .. } => stream.normal(),
            ModelSpec::StudentT { nu } => {
                let u = stream.uniform();
                let x2 = chi_square_quantile(u, nu).expect("u in (0, 1)");
                (x2 / nu.value()).sqrt()
            }
            ModelSpec::Exponential { .. } => stream.exponential(),
        }
    }

    /// A true-null p-value from one uniform draw `u`.
    #[inline]
    fn null_p(&self, u: f64, z: f64) -> f64 {
        match *self {
            ModelSpec::Normal { rho } => {
                let x = probit(u);
                norm_sf((1.0 - rho).sqrt() * x - rho.sqrt() * z)
            }
            ModelSpec::StudentT { nu } => t_cdf(-probit(u) / z, nu),
            ModelSpec::Exponential { .. } => laplace_sf(-(-u).ln_1p() - z),
        }
    }

    /// A lower bound on the uniforms whose null p-value can be `<= alpha`;
    /// computed with slack so no qualifying draw is lost.
    fn uniform_cut(&self, z: f64, alpha: f64) -> f64 {
        let cut = match *self {
            ModelSpec::Normal { rho } => {
                norm_cdf((upper_normal(alpha) + rho.sqrt() * z) / (1.0 - rho).sqrt())
            }
            ModelSpec::StudentT { nu } => {
                norm_cdf(z * t_isf(alpha, nu).expect("alpha in (0, 1)"))
            }
            ModelSpec::Exponential { .. } => {
                if alpha < 0.5 {
                    let e = z - (2.0 * alpha).ln();
                    -(-e).exp_m1()
                } else {
                    0.0
                }
            }
        };
        (cut - 1e-9).max(0.0)
    }

    fn false_null_p(&self, stream: &mut Stream, z: f64) -> f64 {
        match *self {
            ModelSpec::Exponential { shift: Some(s) } => laplace_sf(s + stream.exponential() - z),
            _ => 0.0,
        }
    }

    fn sample_with(&self, config: &ExtremeConfig, z: f64, replicate: u64) -> PValueSample {
        let mut nulls = Stream::new(config.seed, replicate, StreamRole::Nulls);
        let n0 = config.n0();
        let mut p = Vec::with_capacity(config.n);
        let mut labels = Vec::with_capacity(config.n);
        for _ in 0..n0 {
            p.push(self.null_p(nulls.uniform(), z));
            labels.push(true);
        }
        for _ in n0..config.n {
            p.push(self.false_null_p(&mut nulls, z));
            labels.push(false);
        }
        PValueSample::new(p, labels).expect("p-values in [0, 1]")
    }

    /// Draws `Z` from `W_Z`, then the p-values given `Z`. Streams are keyed
    /// by `(config.seed, replicate)`.
    pub fn sample_pvalues(
        &self,
        config: &ExtremeConfig,
        replicate: u64,
    ) -> Result<(PValueSample, Disturbance)> {
        self.validate()?;
        let mut dist = Stream::new(config.seed, replicate, StreamRole::Disturbance);
        let z = self.draw_disturbance(&mut dist);
        Ok((self.sample_with(config, z, replicate), Disturbance(z)))
    }

    /// As [`ModelSpec::sample_pvalues`] with `Z` pinned to `z`.
    pub fn sample_pvalues_conditional(
        &self,
        config: &ExtremeConfig,
        z: Disturbance,
        replicate: u64,
    ) -> Result<PValueSample> {
        self.validate()?;
        self.check_support(z)?;
        Ok(self.sample_with(config, z.0, replicate))
    }

    /// Fast path for simulation: the same draws as [`ModelSpec::sample_pvalues`]
    /// but only p-values `<= alpha` are materialized. Returns the number of
    /// exact zeros among the false nulls, and fills `nulls` / `false_pos`
    /// with the remaining candidates (unsorted).
    pub(crate) fn candidates(
        &self,
        config: &ExtremeConfig,
        z: f64,
        replicate: u64,
        alpha: f64,
        nulls: &mut Vec<f64>,
        false_pos: &mut Vec<f64>,
    ) -> usize {
        nulls.clear();
        false_pos.clear();
        let mut stream = Stream::new(config.seed, replicate, StreamRole::Nulls);
        let cut = self.uniform_cut(z, alpha);
        for _ in 0..config.n0() {
            let u = stream.uniform();
            if u >= cut {
                let p = self.null_p(u, z);
                if p <= alpha {
                    nulls.push(p);
                }
            }
        }
        match self {
            ModelSpec::Exponential { shift: Some(_) } => {
                for _ in 0..config.n1() {
                    let p = self.false_null_p(&mut stream, z);
                    if p <= alpha {
                        false_pos.push(p);
                    }
                }
                0
            }
            _ => config.n1(),
        }
    }
}

/// `Phi^{-1}(1 - q)` with `q = (t / alpha - 1 + zeta) / zeta`, evaluated on
/// whichever side keeps precision.
fn mixed_isf(t: f64, zeta: f64, alpha: f64) -> f64 {
    let q = (t / alpha - 1.0 + zeta) / zeta;
    if q < 0.5 {
        -probit(q)
    } else {
        probit((1.0 - t / alpha) / zeta)
    }
}

/// Survival function of the standard Laplace law, `1 - W_T(d)`.
#[inline]
fn laplace_sf(d: f64) -> f64 {
    if d <= 0.0 {
        1.0 - 0.5 * d.exp()
    } else {
        0.5 * (-d).exp()
    }
}

pub(crate) fn check_zeta(zeta: f64) -> Result<()> {
    if zeta > 0.0 && zeta <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("zeta must lie in (0, 1], got {zeta}")))
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_values() {
        let n = ModelSpec::normal(0.37).unwrap();
        assert!((n.f_infinity(0.5, Disturbance(0.0)).unwrap() - 0.5).abs() < 1e-15);
        let t = ModelSpec::student_t(4.0).unwrap();
        assert!((t.f_infinity(0.5, Disturbance(2.3)).unwrap() - 0.5).abs() < 1e-15);
        let e = ModelSpec::exponential();
        let ln2 = std::f64::consts::LN_2;
        assert!((e.f_infinity(0.25, Disturbance(ln2)).unwrap() - 0.25).abs() < 1e-15);
        assert!(
            (n.f_infinity_mixed(0.5, Disturbance(0.0), 0.8).unwrap() - 0.6).abs() < 1e-15
        );
    }

    #[test]
    fn exponential_piecewise_is_continuous() {
        let e = ModelSpec::exponential();
        for &z in &[0.0, 0.4, 3.0] {
            let u = 1.0 - 0.5 * (-z as f64).exp();
            for &t in &[0.5, u] {
                let a = e.f_inf_unchecked(t - 1e-12, z);
                let b = e.f_inf_unchecked(t + 1e-12, z);
                assert!((a - b).abs() < 1e-9, "z={z} t={t}");
            }
        }
    }

    #[test]
    fn support_errors() {
        let t = ModelSpec::student_t(4.0).unwrap();
        assert!(t.f_infinity(0.3, Disturbance(0.0)).is_err());
        assert!(ModelSpec::exponential().f_infinity(0.3, Disturbance(-1.0)).is_err());
        assert!(ModelSpec::normal(1.0).is_err());
        assert!(ModelSpec::student_t(0.0).is_err());
        assert!(ExtremeConfig::new(0, 0.5, 1).is_err());
    }

    #[test]
    fn n0_rounds_half_up() {
        assert_eq!(ExtremeConfig::new(10, 0.25, 0).unwrap().n0(), 3);
        assert_eq!(ExtremeConfig::new(10, 0.24, 0).unwrap().n0(), 2);
        assert_eq!(ExtremeConfig::new(7, 1.0, 0).unwrap().n1(), 0);
    }

    #[test]
    fn candidates_match_full_sample() {
        let alpha = 0.1;
        for model in [
            ModelSpec::normal(0.3).unwrap(),
            ModelSpec::student_t(3.0).unwrap(),
            ModelSpec::exponential(),
            ModelSpec::exponential_shifted(1.5).unwrap(),
        ] {
            let cfg = ExtremeConfig::new(500, 0.7, 11).unwrap();
            let (sample, z) = model.sample_pvalues(&cfg, 4).unwrap();
            let (mut nulls, mut fp) = (Vec::new(), Vec::new());
            let zeros = model.candidates(&cfg, z.0, 4, alpha, &mut nulls, &mut fp);
            let mut want_null: Vec<f64> = sample
                .pvalues()
                .iter()
                .zip(sample.is_true_null())
                .filter(|(p, t)| **t && **p <= alpha)
                .map(|(p, _)| *p)
                .collect();
            want_null.sort_by(f64::total_cmp);
            nulls.sort_by(f64::total_cmp);
            assert_eq!(nulls, want_null, "{}", model.name());
            let exact0 = sample
                .pvalues()
                .iter()
                .zip(sample.is_true_null())
                .filter(|(p, t)| !**t && **p == 0.0)
                .count();
            assert_eq!(zeros + fp.iter().filter(|&&p| p == 0.0).count(), exact0);
        }
    }
}
