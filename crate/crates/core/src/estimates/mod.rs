//! Norms and inequality checkers for the quantitative estimates.

mod decay;
mod identities;
mod morrey;
mod norms;
mod powers;

pub use decay::{decay_check, dyadic_sequences, DecayInput, DecayOutcome};
pub use identities::{affine_gap, gradient_l1_check, l1_bound_check, pohozaev_residual, GRADIENT_L1_CONSTANT};
pub use morrey::{morrey_functional, morrey_norm, morrey_report, MorreyParams, DEFAULT_CENTER_SAMPLES};
pub use norms::{holder_norm, holder_seminorm, lebesgue_norm, radial_quantities, RadialQuantities, Target};

/// Default `γ` of the `W^{1,2+γ}` checks.
pub const DEFAULT_GAMMA: f64 = 0.1;
/// Default Hölder exponent.
pub const DEFAULT_ALPHA: f64 = 0.1;
