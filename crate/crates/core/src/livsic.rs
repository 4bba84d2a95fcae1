//! Finite graph cohomology for locally constant observables: a centered
//! edge function is a coboundary u∘σ − u exactly when its sum around every
//! directed cycle vanishes, so the decision reduces to cycle sums over a
//! spanning family plus a verified spanning-tree potential.

use serde::Serialize;

use crate::correlation::{chain_mean, variance};
use crate::error::Result;
use crate::observable::BlockFn;
use crate::sft::{PeriodicOrbit, Sft, Symbol, Word};
use crate::spectral::{gibbs_chain, rpf_solve, TransferMatrix};

/// Cycle sums at or below this threshold count as zero.
pub const OBSTRUCTION_TOL: f64 = 1e-8;
/// Cycle sums between the obstruction tolerance and this bound are neither
/// clear zeros nor clear obstructions.
pub const INDETERMINATE_TOL: f64 = 1e-6;
/// A declared transfer function must reproduce the observable on every
/// edge to this accuracy.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Variance at or below this threshold counts as degenerate in the
/// zero-variance cross-check.
pub const ZERO_VARIANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoboundaryVerdict {
    /// All cycle sums vanish and the constructed transfer verifies.
    Coboundary,
    /// Largest cycle sum falls in the gray zone where floating point
    /// cannot honour the exact dichotomy.
    Indeterminate,
    Obstructed,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleSum {
    pub orbit: PeriodicOrbit,
    /// Sum of the centered observable around the cycle.
    pub centered_sum: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    /// Spanning cycle family: plain self-loops plus one closed walk through
    /// the base block for every admissible edge. Vanishing of all these
    /// sums is equivalent to the existence of a transfer function.
    pub cycles: Vec<CycleSum>,
    pub max_abs: f64,
    pub verdict: CoboundaryVerdict,
    pub is_coboundary: bool,
    /// Potential with u[0] = 0 satisfying g - center = u∘σ - u, present
    /// exactly when the verdict is Coboundary.
    pub transfer: Option<Vec<f64>>,
    /// Worst edge residual of the spanning-tree potential candidate,
    /// whatever the verdict.
    pub max_residual: f64,
}

/// Sum of g - center along the closed walk given by block states
/// (consecutive pairs plus the wrap-around edge).
pub fn cycle_sum(block_sft: &Sft, g: &BlockFn, center: f64, states: &[usize]) -> f64 {
    let succ = block_sft.successor_lists();
    let p = states.len();
    let mut acc = 0.0;
    for j in 0..p {
        let u = states[j];
        let v = states[(j + 1) % p];
        let idx = succ[u]
            .iter()
            .position(|&w| w == v)
            .expect("cycle must follow admissible edges");
        acc += g.value(u, idx) - center;
    }
    acc
}

fn primitive_root(word: &[usize]) -> Vec<usize> {
    let p = word.len();
    'outer: for d in 1..=p {
        if p % d != 0 {
            continue;
        }
        for j in d..p {
            if word[j] != word[j % d] {
                continue 'outer;
            }
        }
        return word[..d].to_vec();
    }
    word.to_vec()
}

fn minimal_rotation(word: &[usize]) -> Vec<usize> {
    let p = word.len();
    let mut best = word.to_vec();
    for r in 1..p {
        let rotated: Vec<usize> = (0..p).map(|j| word[(j + r) % p]).collect();
        if rotated < best {
            best = rotated;
        }
    }
    best
}

fn canonical_orbit(walk: &[usize]) -> Vec<usize> {
    minimal_rotation(&primitive_root(walk))
}

/// Breadth-first arborescence out of the base: potentials u[x] as centered
/// sums along tree paths, plus the tree path itself for walk assembly.
fn bfs_out(block_sft: &Sft, g: &BlockFn, center: f64) -> (Vec<f64>, Vec<Vec<usize>>) {
    let n = block_sft.alphabet_size();
    let succ = block_sft.successor_lists();
    let mut u = vec![0.0; n];
    let mut path: Vec<Vec<usize>> = vec![Vec::new(); n];
    path[0] = vec![0];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        for (idx, &y) in succ[x].iter().enumerate() {
            if !seen[y] {
                seen[y] = true;
                u[y] = u[x] + g.value(x, idx) - center;
                let mut p = path[x].clone();
                p.push(y);
                path[y] = p;
                queue.push_back(y);
            }
        }
    }
    debug_assert!(seen.iter().all(|&s| s), "block graph must be connected");
    (u, path)
}

/// Breadth-first search on the reversed graph: for every y, a directed
/// path y -> ... -> 0 and the centered sum along it.
fn bfs_back(block_sft: &Sft, g: &BlockFn, center: f64) -> (Vec<f64>, Vec<Vec<usize>>) {
    let n = block_sft.alphabet_size();
    let succ = block_sft.successor_lists();
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (x, row) in succ.iter().enumerate() {
        for (idx, &y) in row.iter().enumerate() {
            preds[y].push((x, idx));
        }
    }
    let mut back = vec![0.0; n];
    let mut path: Vec<Vec<usize>> = vec![Vec::new(); n];
    path[0] = vec![0];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(y) = queue.pop_front() {
        for &(x, idx) in &preds[y] {
            if !seen[x] {
                seen[x] = true;
                back[x] = g.value(x, idx) - center + back[y];
                let mut p = vec![x];
                p.extend_from_slice(&path[y]);
                path[x] = p;
                queue.push_back(x);
            }
        }
    }
    debug_assert!(seen.iter().all(|&s| s), "block graph must be co-connected");
    (back, path)
}

/// Cycle sums of g - center over a spanning family of directed cycles, the
/// spanning-tree transfer candidate, and the coboundary verdict.
///
/// The family contains every self-loop and, for every admissible edge
/// (x, y), the closed walk base -> x -> y -> base assembled from
/// breadth-first paths. All sums vanish exactly when g - center is a
/// coboundary, in which case the potential u (pinned u[base] = 0) verifies
/// edge by edge.
pub fn cycle_obstructions(block_sft: &Sft, g: &BlockFn, center: f64) -> ObstructionReport {
    let n = block_sft.alphabet_size();
    let succ = block_sft.successor_lists();
    let (u, out_path) = bfs_out(block_sft, g, center);
    let (_, back_path) = bfs_back(block_sft, g, center);

    let mut seen = std::collections::HashSet::<Vec<usize>>::new();
    let mut cycles = Vec::new();
    let mut push_cycle = |walk: &[usize]| {
        let canon = canonical_orbit(walk);
        if seen.insert(canon.clone()) {
            let centered_sum = cycle_sum(block_sft, g, center, &canon);
            let word = Word::new(canon.iter().map(|&s| s as Symbol).collect());
            let period = word.len();
            cycles.push(CycleSum {
                orbit: PeriodicOrbit { word, period },
                centered_sum,
            });
        }
    };
    for z in 0..n {
        if block_sft.is_allowed(z as Symbol, z as Symbol) {
            push_cycle(&[z]);
        }
    }
    for (x, row) in succ.iter().enumerate() {
        for &y in row {
            // base -> x (tree), edge, y -> base (reverse tree), dropping
            // the final base state to close the period
            let mut walk = out_path[x].clone();
            let ret = &back_path[y];
            walk.extend_from_slice(&ret[..ret.len() - 1]);
            push_cycle(&walk);
        }
    }
    let max_abs = cycles
        .iter()
        .map(|c| c.centered_sum.abs())
        .fold(0.0f64, f64::max);
    let mut max_residual = 0.0f64;
    for (x, row) in succ.iter().enumerate() {
        for (idx, &y) in row.iter().enumerate() {
            let r = g.value(x, idx) - center - (u[y] - u[x]);
            max_residual = max_residual.max(r.abs());
        }
    }
    let verdict = if max_abs <= OBSTRUCTION_TOL && max_residual <= RESIDUAL_TOL {
        CoboundaryVerdict::Coboundary
    } else if max_abs <= INDETERMINATE_TOL {
        CoboundaryVerdict::Indeterminate
    } else {
        CoboundaryVerdict::Obstructed
    };
    let is_coboundary = verdict == CoboundaryVerdict::Coboundary;
    ObstructionReport {
        cycles,
        max_abs,
        verdict,
        is_coboundary,
        transfer: if is_coboundary { Some(u) } else { None },
        max_residual,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroVarianceReport {
    pub sigma2: f64,
    pub is_coboundary: bool,
    pub verdict: CoboundaryVerdict,
    /// Degenerate variance and the coboundary verdict must agree; a false
    /// value here means the two characterisations contradict each other.
    pub consistent: bool,
}

/// Cross-checks the two characterisations of degeneracy: the asymptotic
/// variance of g under the equilibrium chain of phi vanishes exactly when
/// g minus its mean is a coboundary.
pub fn zero_variance_classify(
    block_sft: &Sft,
    phi: &BlockFn,
    g: &BlockFn,
) -> Result<ZeroVarianceReport> {
    let tm = TransferMatrix::from_block_fn(block_sft, phi.clone());
    let rpf = rpf_solve(&tm)?;
    let chain = gibbs_chain(&tm, &rpf);
    let sigma2 = variance(block_sft, phi, &chain, &rpf, g)?.consensus;
    let center = chain_mean(&chain, g);
    let report = cycle_obstructions(block_sft, g, center);
    let consistent = (sigma2 <= ZERO_VARIANCE_TOL) == report.is_coboundary;
    Ok(ZeroVarianceReport {
        sigma2,
        is_coboundary: report.is_coboundary,
        verdict: report.verdict,
        consistent,
    })
}
