//! European call prices, Greeks and hedges expressed through the level and
//! power of a Neyman-Pearson test on the likelihood ratio `dQ'_1(t)/dQ`.

pub mod crr;
pub mod np;

pub use crr::{crr_np_power_gap, crr_price_and_delta, CrrModel, CrrNode, CrrPowerGap, CrrTree};
pub use np::*;
