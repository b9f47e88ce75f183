//! Finite-n simulation of the step-up and step-down procedures.
//!
//! Replicates are processed in fixed chunks: each chunk is mapped in
//! parallel and then folded sequentially in replicate order, so a summary
//! depends only on the plan, never on the number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{check_alpha, Disturbance, ExtremeConfig, ModelSpec};
use crate::rng::{Stream, StreamRole};
use crate::stepup::{critical, run_procedure, step_down_count, step_up_count, Procedure};

pub const FDP_BINS: usize = 200;
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub model: ModelSpec,
    pub config: ExtremeConfig,
    pub alpha: f64,
    pub replicates: u64,
    pub conditional_z: Option<Disturbance>,
    pub procedure: Procedure,
}

impl SimulationPlan {
    pub fn new(model: ModelSpec, config: ExtremeConfig, alpha: f64, replicates: u64) -> Self {
        SimulationPlan {
            model,
            config,
            alpha,
            replicates,
            conditional_z: None,
            procedure: Procedure::Lsu,
        }
    }

    pub fn conditional(mut self, z: f64) -> Self {
        self.conditional_z = Some(Disturbance(z));
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        check_alpha(self.alpha)?;
        ExtremeConfig::new(self.config.n, self.config.zeta, self.config.seed)?;
        if self.replicates == 0 {
            return Err(Error::domain("need at least one replicate"));
        }
        if let Some(z) = self.conditional_z {
            self.model.check_support(z)?;
        }
        Ok(())
    }
}

/// Caps checked before a run starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceLimits {
    /// Largest number of hypotheses per replicate.
    pub max_n: usize,
    /// Largest total number of p-value draws, `n * replicates`.
    pub max_draws: u128,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        ResourceLimits { max_n: 100_000_000, max_draws: 10_u128.pow(13) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub fdr: f64,
    pub eer: f64,
    pub ene: f64,
    pub r_over_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub n: usize,
    pub fdr_hat: f64,
    pub eer_hat: f64,
    pub ene_hat: f64,
    pub r_over_n_hat: f64,
    pub standard_errors: StandardErrors,
    /// Counts of the FDP over 200 equal bins of `[0, 1]`, left-inclusive;
    /// FDP = 1 falls in the last bin.
    pub fdp_histogram: Vec<u64>,
    pub seed: u64,
    pub replicates: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn se(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    r: usize,
    v: usize,
}

fn fdp_bin(fdp: f64) -> usize {
    ((fdp * FDP_BINS as f64) as usize).min(FDP_BINS - 1)
}

struct Buffers {
    nulls: Vec<f64>,
    false_pos: Vec<f64>,
    merged: Vec<(f64, bool)>,
    ps: Vec<f64>,
}

impl Buffers {
    fn new() -> Self {
        Buffers { nulls: Vec::new(), false_pos: Vec::new(), merged: Vec::new(), ps: Vec::new() }
    }
}

fn replicate(plan: &SimulationPlan, rep: u64, buf: &mut Buffers) -> Outcome {
    let cfg = &plan.config;
    let z = match plan.conditional_z {
        Some(z) => z.0,
        None => plan
            .model
            .draw_disturbance(&mut Stream::new(cfg.seed, rep, StreamRole::Disturbance)),
    };
    let zeros = plan
        .model
        .candidates(cfg, z, rep, plan.alpha, &mut buf.nulls, &mut buf.false_pos);
    buf.merged.clear();
    buf.merged.extend(buf.nulls.iter().map(|&p| (p, true)));
    buf.merged.extend(buf.false_pos.iter().map(|&p| (p, false)));
    buf.merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    buf.ps.clear();
    buf.ps.extend(buf.merged.iter().map(|c| c.0));
    let n = cfg.n;
    match plan.procedure {
        Procedure::Lsu => {
            let r = step_up_count(zeros, &buf.ps, n, plan.alpha);
            let c = if r == 0 { -1.0 } else { critical(r, plan.alpha, n) };
            let v = buf.nulls.iter().filter(|&&p| p <= c).count();
            Outcome { r, v }
        }
        Procedure::Lsd => {
            let r = step_down_count(zeros, &buf.ps, n, plan.alpha);
            let v = buf.merged[..r.saturating_sub(zeros)].iter().filter(|c| c.1).count();
            Outcome { r, v }
        }
    }
}

fn check_resources(plan: &SimulationPlan, limits: &ResourceLimits) -> Result<()> {
    let n = plan.config.n;
    if n > limits.max_n {
        return Err(Error::ResourceLimit(format!("n = {n} exceeds the limit {}", limits.max_n)));
    }
    let draws = n as u128 * plan.replicates as u128;
    if draws > limits.max_draws {
        return Err(Error::ResourceLimit(format!(
            "{draws} draws (n * replicates) exceed the limit {}",
            limits.max_draws
        )));
    }
    // the candidate buffers hold at most n entries each
    let mut probe: Vec<(f64, bool)> = Vec::new();
    probe
        .try_reserve_exact(n)
        .map_err(|e| Error::ResourceLimit(format!("cannot allocate buffers for n = {n}: {e}")))?;
    Ok(())
}

pub fn run(plan: &SimulationPlan) -> Result<SimulationSummary> {
    run_with(plan, &ResourceLimits::default(), &|_, _| {})
}

/// [`run`] with explicit limits and a progress callback receiving
/// `(replicates done, total)` after every chunk.
pub fn run_with(
    plan: &SimulationPlan,
    limits: &ResourceLimits,
    progress: &(dyn Fn(u64, u64) + Sync),
) -> Result<SimulationSummary> {
    plan.validate()?;
    check_resources(plan, limits)?;
    let n = plan.config.n;
    let mut fdr = Welford::default();
    let mut eer = Welford::default();
    let mut ene = Welford::default();
    let mut ron = Welford::default();
    let mut hist = vec![0u64; FDP_BINS];
    let mut start = 0;
    while start < plan.replicates {
        let end = (start + CHUNK).min(plan.replicates);
        let outcomes: Vec<Outcome> = (start..end)
            .into_par_iter()
            .map_init(Buffers::new, |buf, rep| replicate(plan, rep, buf))
            .collect();
        for o in outcomes {
            let fdp = if o.r == 0 { 0.0 } else { o.v as f64 / o.r as f64 };
            fdr.push(fdp);
            eer.push(o.v as f64 / n as f64);
            ene.push(o.v as f64);
            ron.push(o.r as f64 / n as f64);
            hist[fdp_bin(fdp)] += 1;
        }
        progress(end, plan.replicates);
        start = end;
    }
    Ok(SimulationSummary {
        n,
        fdr_hat: fdr.mean.clamp(0.0, 1.0),
        eer_hat: eer.mean,
        ene_hat: ene.mean,
        r_over_n_hat: ron.mean,
        standard_errors: StandardErrors { fdr: fdr.se(), eer: eer.se(), ene: ene.se(), r_over_n: ron.se() },
        fdp_histogram: hist,
        seed: plan.config.seed,
        replicates: plan.replicates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub summary: SimulationSummary,
    /// Median over replicates of `R_n / n`.
    pub r_over_n_median: f64,
    /// Median over replicates of `sup_t |F_n(t) - F(t)|` on a 1000-point grid,
    /// `F` the limiting mixed ecdf at the replicate's disturbance.
    pub sup_distance_median: f64,
}

const SUP_GRID: usize = 1000;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Runs `plan` at each sample size in `n_grid` (same seed), adding medians
/// of `R_n / n` and of the Glivenko-Cantelli sup-distance.
pub fn convergence_study(plan: &SimulationPlan, n_grid: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let config = ExtremeConfig::new(n, plan.config.zeta, plan.config.seed)?;
        let p = SimulationPlan { config, ..plan.clone() };
        let summary = run(&p)?;
        let zeta_n = config.zeta_n();
        let stats: Vec<Result<(f64, f64)>> = (0..p.replicates)
            .into_par_iter()
            .map(|rep| {
                let (sample, z) = match p.conditional_z {
                    Some(z) => (p.model.sample_pvalues_conditional(&config, z, rep)?, z),
                    None => p.model.sample_pvalues(&config, rep)?,
                };
                let res = run_procedure(p.procedure, &sample, p.alpha)?;
                let mut sorted = sample.pvalues().to_vec();
                sorted.sort_by(f64::total_cmp);
                let mut sup: f64 = 0.0;
                for k in 1..=SUP_GRID {
                    let t = k as f64 / SUP_GRID as f64;
                    let fn_t = sorted.partition_point(|&x| x <= t) as f64 / n as f64;
                    let f_t = (1.0 - zeta_n) + zeta_n * p.model.f_inf_unchecked(t, z.0);
                    sup = sup.max((fn_t - f_t).abs());
                }
                Ok((res.m as f64 / n as f64, sup))
            })
            .collect();
        let stats: Vec<(f64, f64)> = stats.into_iter().collect::<Result<_>>()?;
        rows.push(ConvergenceRow {
            n,
            summary,
            r_over_n_median: median(stats.iter().map(|s| s.0).collect()),
            sup_distance_median: median(stats.iter().map(|s| s.1).collect()),
        });
    }
    Ok(rows)
}
