//! Numerical thermodynamic formalism for subshifts of finite type:
//! Ruelle transfer operators, Gibbs measures, correlation decay, central
//! limit and local limit behaviour, large deviations, and cohomological
//! (coboundary) structure — all with locally constant data, where the
//! spectral theory is exact at finite matrix size.

pub mod correlation;
pub mod dist;
pub mod error;
#[cfg(test)]
pub(crate) mod fixtures;
pub mod ldp;
pub mod livsic;
pub mod observable;
pub(crate) mod power;
pub mod sampler;
pub mod sft;
pub mod spectral;

pub use correlation::{
    chain_mean, correlation_sequence, mixing_coefficient, multiple_correlation, variance,
    CorrelationSeq, VarianceReport, ENVELOPE_FLOOR,
};
pub use dist::{
    exact_dist, interval_prob, ks_vs_gaussian, lattice_check, local_limit_check, variance_slope,
    ExactDistribution, IntValues, LatticeSpec, DEFAULT_Q_MAX, SNAP_TOL,
};
pub use error::{Error, Result};
pub use ldp::{
    build_rate_function, contract_rate, ldp_tail_compare, level2_rate, CumulantRow,
    MarkovMeasureSpec, RateFunction, TailCompareRow, T_TOL,
};
pub use livsic::{
    cycle_obstructions, cycle_sum, zero_variance_classify, CoboundaryVerdict, CycleSum,
    ObstructionReport, ZeroVarianceReport, INDETERMINATE_TOL, OBSTRUCTION_TOL, RESIDUAL_TOL,
    ZERO_VARIANCE_TOL,
};
pub use observable::{recode_to_blocks, BlockFn, BlockSystem, LocallyConstantFn};
pub use sampler::{
    deviation_frequencies, empirical_clt, empirical_ks, lil_diagnostic, sample_orbit, split_seed,
    DeviationReport, DeviationRow, EmpiricalCltReport, SampleConfig, GENERATOR_ID,
};
pub use sft::{PeriodicOrbit, Sft, Symbol, Word};
pub use spectral::{
    gibbs_chain, gibbs_ratio_check, pressure_curve, rpf_solve, spectral_gap, transfer_matrix,
    GibbsChain, RpfData, TransferMatrix, EIGEN_TOL,
};
