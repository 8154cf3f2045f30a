//! Sparse-design constants: RIP, compatibility, restricted eigenvalue,
//! Lasso constants and the packing used in minimax lower bounds.

mod cone;
mod constants;
mod rip;
mod vg;

pub use cone::{
    compatibility_constant, compatibility_constant_with, compatibility_ratio, re_constant,
    re_constant_with, re_ratio, ConeConstantReport, ConeOptions,
};
pub use constants::{
    c0_from_gamma, construct_compatibility_adversary, construct_compatibility_adversary_with,
    lambda_asymptotic, lasso_constants, lasso_constants_for, Adversary, LassoConstants,
};
pub use rip::{binomial, rip_delta, rip_delta_with, RipMethod, RipOptions, RipReport};
pub use vg::{vg_log_bound, vg_packing, vg_packing_with, VgOptions, VgPacking};
