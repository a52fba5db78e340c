//! Built-in models, trajectory metrics and experiment recipes.

pub mod builtins;
pub mod metrics;
pub mod recipes;

pub use builtins::{
    example5, example5_asymptotic, example5_pair, figure_initial_conditions, highorder_periodic,
    loworder_almostperiodic, static_kernel, BuiltinError, BuiltinName, HighOrderParams, LowOrderParams,
    StaticKernelParams,
};
pub use metrics::{periodicity_defect, window_gap, MetricError};
pub use recipes::{
    figure_initial_functions, integrate_many, run_recipe, Check, ExperimentReport, RecipeError, RecipeName,
    RecipeOptions,
};
