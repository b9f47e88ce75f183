//! Exact finite-n FDR results when the null p-value cdf is linear near 0.
//!
//! Throughout, false-null p-values are exact zeros (the extreme
//! configuration) and true-null p-values are i.i.d. with a given cdf.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Stream, StreamRole};
use crate::specfun::ln_gamma;
use crate::stepup::critical;

/// True-null cdf `F(t) = gamma t` on `[0, t_star]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearNullSpec {
    pub gamma: f64,
    pub n0: usize,
    pub n: usize,
    pub t_star: f64,
}

impl LinearNullSpec {
    pub fn validate(&self, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if self.n == 0 || self.n0 > self.n {
            return Err(Error::domain(format!("need 0 <= n0 <= n, n >= 1; got n0 = {}, n = {}", self.n0, self.n)));
        }
        if !(self.gamma >= 0.0) || self.gamma * alpha > 1.0 {
            return Err(Error::domain(format!(
                "gamma must lie in [0, 1/alpha], got {} with alpha = {alpha}",
                self.gamma
            )));
        }
        if !(self.t_star > 0.0 && self.t_star <= alpha) {
            return Err(Error::domain(format!("t_star must lie in (0, alpha], got {}", self.t_star)));
        }
        Ok(())
    }

    /// The concrete null cdf used for simulation: `gamma t` up to `t_star`,
    /// then the straight line to `(1, 1)`.
    pub fn cdf(&self, t: f64) -> f64 {
        let head = self.gamma * self.t_star;
        if t <= 0.0 {
            0.0
        } else if t <= self.t_star {
            self.gamma * t
        } else if t >= 1.0 {
            1.0
        } else {
            head + (1.0 - head) * (t - self.t_star) / (1.0 - self.t_star)
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        let head = self.gamma * self.t_star;
        if u <= head {
            u / self.gamma
        } else {
            self.t_star + (u - head) * (1.0 - self.t_star) / (1.0 - head)
        }
    }
}

/// Lower bounds `b_k <= ... <= b_m` on the order statistics `xi_{k:m}, ...,
/// xi_{m:m}` of `m` i.i.d. draws; `k = m - lower_bounds.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub m: usize,
    pub lower_bounds: Vec<f64>,
}

/// Largest sample size accepted by [`boundary_noncrossing_prob`].
pub const EXACT_MAX_M: usize = 200;

/// Exact FDR `(n0 / n) gamma alpha` of the step-up procedure when the null
/// cdf is `gamma t` on all of `[0, alpha]`.
pub fn exact_fdr_linear(spec: &LinearNullSpec, alpha: f64) -> Result<f64> {
    spec.validate(alpha)?;
    if spec.t_star != alpha {
        return Err(Error::domain(format!(
            "linearity must hold on all of [0, alpha]: t_star = {} != alpha = {alpha}",
            spec.t_star
        )));
    }
    Ok(spec.n0 as f64 / spec.n as f64 * spec.gamma * alpha)
}

/// Neumaier-compensated sum.
#[derive(Default, Clone, Copy)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Binomial pmf row `P(X = x)`, `x = 0..=n`, for `X ~ Bin(n, p)`.
fn binomial_row(n: usize, p: f64, ln_fact: &[f64]) -> Vec<f64> {
    if p <= 0.0 {
        let mut r = vec![0.0; n + 1];
        r[0] = 1.0;
        return r;
    }
    if p >= 1.0 {
        let mut r = vec![0.0; n + 1];
        r[n] = 1.0;
        return r;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    (0..=n)
        .map(|x| (ln_fact[n] - ln_fact[x] - ln_fact[n - x] + x as f64 * lp + (n - x) as f64 * lq).exp())
        .collect()
}

/// `P(xi_{j:m} > b_j for every indexed j)` for `m` i.i.d. draws with cdf
/// `null_cdf`, by a dynamic program over the running count of draws below
/// each bound.
pub fn boundary_noncrossing_prob(spec: &BoundarySpec, null_cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    let m = spec.m;
    let b = &spec.lower_bounds;
    if m > EXACT_MAX_M {
        return Err(Error::domain(format!("m = {m} exceeds the exact window {EXACT_MAX_M}")));
    }
    if b.len() > m {
        return Err(Error::domain(format!("{} bounds for {m} order statistics", b.len())));
    }
    if b.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::domain("bounds must be nondecreasing"));
    }
    if b.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::domain("bounds must lie in [0, 1]"));
    }
    if b.is_empty() {
        return Ok(1.0);
    }
    let k = m - b.len() + 1;
    let ln_fact: Vec<f64> = (0..=m).map(|i| ln_gamma(i as f64 + 1.0)).collect();
    // dist[c] = P(N(b_j) = c, constraints up to j hold)
    let mut dist = vec![0.0; m + 1];
    dist[0] = 1.0;
    let mut f_prev = 0.0;
    for (idx, &bj) in b.iter().enumerate() {
        let j = k + idx;
        let fj = null_cdf(bj).clamp(f_prev, 1.0);
        // conditional probability that a draw above b_{j-1} falls below b_j
        let p = if f_prev >= 1.0 { 0.0 } else { (fj - f_prev) / (1.0 - f_prev) };
        let mut next = vec![Sum::default(); m + 1];
        for (c, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = binomial_row(m - c, p, &ln_fact);
            for (x, &px) in row.iter().enumerate() {
                let c2 = c + x;
                if c2 < j {
                    next[c2].add(w * px);
                }
            }
        }
        dist = next.into_iter().map(Sum::value).collect();
        f_prev = fj;
    }
    let mut total = Sum::default();
    for w in dist {
        total.add(w);
    }
    Ok(total.value().clamp(0.0, 1.0))
}

/// `P(D_k)` for the `n - 1` p-values other than one fixed true null: the
/// `n1` zeros and `n0 - 1` i.i.d. nulls must satisfy
/// `xi_{l:n-1} > c_{l+1}` for `l = k..n-1`. `D_0` is empty, `D_n` certain.
fn prob_d(k: usize, n0: usize, n: usize, alpha: f64, null_cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    if k >= n {
        return Ok(1.0);
    }
    let n1 = n - n0;
    if k <= n1 {
        // xi_{k:n-1} = 0 cannot exceed c_{k+1}
        return Ok(0.0);
    }
    let m = n0 - 1;
    // order statistic l of all others = order statistic l - n1 of the nulls
    let bounds: Vec<f64> = (k..n).map(|l| critical(l + 1, alpha, n)).collect();
    boundary_noncrossing_prob(&BoundarySpec { m, lower_bounds: bounds }, null_cdf).map(|p| {
        // the DP indexes from m - len + 1 = k - n1, as required
        debug_assert_eq!(m + 1 - (n - k), k - n1);
        p
    })
}

/// Exact step-up FDR for `n0` i.i.d. true nulls with an arbitrary cdf and
/// `n - n0` false nulls at 0, via the telescoping expansion over `P(D_j)`.
pub fn exact_fdr_iid(null_cdf: &dyn Fn(f64) -> f64, n0: usize, n: usize, alpha: f64) -> Result<f64> {
    if n == 0 || n0 > n {
        return Err(Error::domain(format!("need 0 <= n0 <= n, n >= 1; got n0 = {n0}, n = {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n0 == 0 {
        return Ok(0.0);
    }
    let f = |j: usize| null_cdf(critical(j, alpha, n));
    let mut acc = Sum::default();
    acc.add(f(n) / n as f64);
    for j in 2..=n {
        let w = f(j - 1) / (j - 1) as f64 - f(j) / j as f64;
        if w != 0.0 {
            acc.add(w * prob_d(j - 1, n0, n, alpha, null_cdf)?);
        }
    }
    Ok(n0 as f64 * acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictedCheck {
    /// Monte Carlo estimate of `E[FDP 1{A_n(t_star)}]`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `(n0 / n) gamma alpha P(D_r)`.
    pub rhs: f64,
    /// `r = max{i : i alpha / n <= t_star}`.
    pub r: usize,
    pub replicates: u64,
}

/// Largest number of hypotheses simulated by [`restricted_fdr_check`].
pub const RESTRICTED_MAX_N: usize = 50;

/// Both sides of the restricted identity: linearity of the null cdf only on
/// `[0, t_star]`, with the FDP counted only on the event that the ecdf stays
/// below the Simes line on `(t_star, alpha]`.
pub fn restricted_fdr_check(spec: &LinearNullSpec, alpha: f64, replicates: u64, seed: u64) -> Result<RestrictedCheck> {
    spec.validate(alpha)?;
    let (n, n0) = (spec.n, spec.n0);
    if n > RESTRICTED_MAX_N {
        return Err(Error::domain(format!("n = {n} exceeds the simulation window {RESTRICTED_MAX_N}")));
    }
    if replicates == 0 {
        return Err(Error::domain("need at least one replicate"));
    }
    let r = (0..=n).rev().find(|&i| critical(i, alpha, n) <= spec.t_star).unwrap_or(0);
    let cdf = |t: f64| spec.cdf(t);
    let rhs = if n0 == 0 {
        0.0
    } else {
        n0 as f64 / n as f64 * spec.gamma * alpha * prob_d(r, n0, n, alpha, &cdf)?
    };

    let n1 = n - n0;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut p = vec![0.0; n];
    for rep in 0..replicates {
        let mut s = Stream::new(seed, rep, StreamRole::Nulls);
        for (i, x) in p.iter_mut().enumerate() {
            *x = if i < n1 { 0.0 } else { spec.quantile(s.uniform()) };
        }
        let x = restricted_fdp(&mut p, n1, alpha, spec.t_star);
        let d = x - mean;
        mean += d / (rep + 1) as f64;
        m2 += d * (x - mean);
    }
    let var = if replicates > 1 { m2 / (replicates - 1) as f64 } else { 0.0 };
    Ok(RestrictedCheck {
        lhs: mean,
        lhs_se: (var / replicates as f64).sqrt(),
        rhs,
        r,
        replicates,
    })
}

/// `FDP 1{A_n(t_star)}` for one sample; the first `n1` entries are the false
/// nulls. Sorts `p` in place.
fn restricted_fdp(p: &mut [f64], n1: usize, alpha: f64, t_star: f64) -> f64 {
    let n = p.len();
    let true_null: Vec<bool> = (0..n).map(|i| i >= n1).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    // A_n(t*): F_n(t*) <= t*/alpha and F_n(x) < x/alpha at data x in (t*, alpha]
    let below = idx.iter().filter(|&&i| p[i] <= t_star).count();
    if below as f64 > n as f64 * t_star / alpha {
        return 0.0;
    }
    for (rank, &i) in idx.iter().enumerate() {
        let x = p[i];
        if x > t_star && x <= alpha {
            // F_n(x) counts ties at x as well
            let count = rank + 1 + idx[rank + 1..].iter().take_while(|&&j| p[j] == x).count();
            if count as f64 >= n as f64 * x / alpha {
                return 0.0;
            }
        }
    }
    let mut r_prime = 0;
    for (rank, &i) in idx.iter().enumerate() {
        if p[i] <= critical(rank + 1, alpha, n) {
            r_prime = rank + 1;
        }
    }
    if r_prime == 0 {
        return 0.0;
    }
    let c = critical(r_prime, alpha, n);
    let v = (0..n).filter(|&i| true_null[i] && p[i] <= c).count();
    v as f64 / r_prime as f64
}
