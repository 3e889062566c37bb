//! Gaussian limit experiments: Brownian signal models and fractional
//! Brownian motion, with the regression experiments that approach the latter.

pub mod brownian;
pub mod fbm;
pub mod regression;

pub use brownian::{
    bridge_decomposition, brownian_bridge, girsanov_loglik, ito_price_path, BrownianPath,
    ItoIntegrator, BRIDGE_CUTOFF,
};
pub use fbm::{fbm_covariance, fbm_loglik_path, fbm_sample, FbmSampler, FbmSpec, MAX_FBM_POINTS};
pub use regression::{
    normalization_check, prakasa_rao_constant, prakasa_rao_density, prakasa_rao_loglik,
    prakasa_rao_loglik_from_draws, prakasa_rao_sample, PrakasaRaoSampler, RegressionExperimentSpec,
};
