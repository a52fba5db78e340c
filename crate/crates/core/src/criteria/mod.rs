//! Sampled hypothesis checks, the limsup criterion, weight search and
//! asymptotic-pair diagnostics.

pub mod asymptotic;
pub mod h7;
pub mod hypotheses;

pub use asymptotic::{
    asymptotic_gap, default_gap_check, pair_convergence, ConvergenceCurve, ConvergenceError, GapCurve, GapSeries,
    Probe,
};
pub use h7::{
    coupling_bounds, find_weights, h7_limsup, h7_value, perron_feasibility, uniform_grid, CouplingBounds,
    CriterionCurve, WeightError, Weights,
};
pub use hypotheses::{validate_hypotheses, HypothesisEntry, HypothesisReport, Verdict, Windows, Witness};
