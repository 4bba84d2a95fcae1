//! Benchmark-only crate; see `benches/pipelines.rs` for the measurements.
//! Shared fixtures live here so the bench target stays small.

use sftlab::{gibbs_chain, rpf_solve, BlockFn, GibbsChain, Sft, TransferMatrix};

/// Golden-mean shift with zero potential and the first-symbol indicator.
pub fn golden_fixture() -> (Sft, BlockFn, BlockFn) {
    let sft = Sft::golden_mean();
    let succ = sft.successor_lists();
    let phi = BlockFn::PerEdge(succ.iter().map(|row| vec![0.0; row.len()]).collect());
    let g = BlockFn::PerEdge(
        succ.iter()
            .enumerate()
            .map(|(a, row)| vec![if a == 0 { 1.0 } else { 0.0 }; row.len()])
            .collect(),
    );
    (sft, phi, g)
}

/// Full shift on eight symbols with a deterministic non-constant potential:
/// a 64-edge eigenproblem, an order of magnitude past the golden mean.
pub fn wide_fixture() -> (Sft, BlockFn) {
    let sft = Sft::full_shift(8);
    let succ = sft.successor_lists();
    let phi = BlockFn::PerEdge(
        succ.iter()
            .enumerate()
            .map(|(a, row)| {
                row.iter()
                    .enumerate()
                    .map(|(b, _)| ((a * 7 + b) % 5) as f64 * 0.1)
                    .collect()
            })
            .collect(),
    );
    (sft, phi)
}

/// Solved equilibrium chain for a system, for benches that start downstream
/// of the eigenproblem.
pub fn solve_chain(sft: &Sft, phi: &BlockFn) -> GibbsChain {
    let tm = TransferMatrix::from_block_fn(sft, phi.clone());
    let rpf = rpf_solve(&tm).expect("fixture solves");
    gibbs_chain(&tm, &rpf)
}
