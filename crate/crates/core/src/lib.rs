//! Step-up FDR control under extreme dependence: p-value models driven by a
//! common disturbance, crossing points with the Simes line, the resulting
//! limiting EER and FDR, exact small-n identities and a simulation engine.

pub mod asymptotics;
pub mod crossing;
pub mod error;
pub mod exact;
pub mod models;
pub mod montecarlo;
pub mod quad;
pub mod rng;
mod roots;
pub mod specfun;
pub mod stepup;

pub use asymptotics::{
    conditional_limits, eer_fdr_normal, eer_fdr_t, expected_false_rejections_all_true, g_distributions,
    limit_constants, AsymptoticResult, ConditionalLimit, ConditionalSolver, LimitConstants, Which,
};
pub use crossing::{crossing_report, CrossingReport, LcpPiece, SolverConfig, TangencySolution};
pub use error::{Error, Result};
pub use exact::{boundary_noncrossing_prob, exact_fdr_iid, exact_fdr_linear, restricted_fdr_check, BoundarySpec, LinearNullSpec};
pub use models::{Disturbance, ExtremeConfig, ModelSpec};
pub use montecarlo::{convergence_study, run, SimulationPlan, SimulationSummary};
pub use specfun::{DegreesOfFreedom, Probability};
pub use stepup::{lsd, lsu, PValueSample, Procedure, RejectionResult};
