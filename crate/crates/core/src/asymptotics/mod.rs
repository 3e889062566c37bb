//! Product likelihood experiments on `[0, 1]^n` and their limits.

pub mod empirical;
pub mod experiment;
pub mod joint;
pub mod lamn;
pub mod law;

pub use empirical::{
    empirical_process_paths, empirical_process_shifted, AlternativeLaw, AlternativeSampler,
};
pub use experiment::{
    central_sequence_path, draw_uniforms, filtered_likelihood_path, filtered_path_from_draws,
    lan_remainder, martingale_check, quadratic_variation_check, sigma_n_path, simulate_filtered,
    static_log_likelihood, FilteredPaths, ProductExperimentSpec, Projector,
};
pub use joint::{joint_loglik_marginals, DirectionReport};
pub use lamn::{lamn_path, lamn_terminal_sample, LamnPath, RandomScaleSpec, ScaleLaw};
pub use law::{law_report, law_summary, LawReport, MIN_LAW_GRID};
