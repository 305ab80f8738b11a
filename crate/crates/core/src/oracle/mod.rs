//! Independent checks for the spectral results: the dense generator, its
//! matrix exponential, and a jump-process simulator.

mod expm;
mod generator;
mod simulate;

pub use expm::{expm_apply, Propagator};
pub use generator::{build_generator, build_potential_generator, DenseGenerator, MAX_DENSE_LEAVES};
pub use simulate::{
    detailed_balance_holds, jump_rates, occupancy_distribution, simulate, total_variation,
    tv_standard_error_bound, JumpProcessConfig, OccupancyHistogram,
};
