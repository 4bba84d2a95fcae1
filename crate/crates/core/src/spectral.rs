//! Weighted transfer matrices and their Perron data: pressure, eigenvectors,
//! the equilibrium (Gibbs) measure, the induced Markov chain on cylinders,
//! the full spectrum, and the spectral gap.
//!
//! With a range <= 2 potential on a block system, the transfer operator is a
//! finite nonnegative matrix B[u][v] = A[u][v] exp(phi(u, v)) and the whole
//! spectral picture is exact: lambda = e^P is the Perron root, the
//! eigenmeasure nu and eigenfunction h are the right eigenvectors of B and
//! B^T, and mu = h . nu is the invariant Gibbs state.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::observable::{BlockFn, BlockSystem, LocallyConstantFn};
use crate::power::{self, SparseRows};
use crate::sft::{Sft, Symbol, WORD_ENUMERATION_CAP};

/// Largest block count for which the full spectrum is computed densely;
/// larger systems estimate the subdominant modulus by deflated iteration
/// and report only the Perron eigenvalue in `spectrum`.
pub const DENSE_SPECTRUM_CAP: usize = 512;

/// Relative Collatz–Wielandt bracket width at which the eigen solves stop.
pub const EIGEN_TOL: f64 = 1e-13;
const RESIDUAL_TARGET: f64 = 1e-10;
const MAX_ITER: usize = 100_000;
/// Relative moduli below this are treated as an exactly vanishing
/// subdominant spectrum (gap sentinel +inf), since the dense eigensolve
/// cannot distinguish them from zero.
const THETA_FLOOR: f64 = 1e-12;

/// The weighted transfer matrix of a potential on a block shift.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    block_sft: Sft,
    /// Nonzero entries, rows parallel to `Sft::successors` order.
    rows: SparseRows,
    potential: BlockFn,
}

impl TransferMatrix {
    /// Weight the block transition matrix by exp of the potential; the
    /// potential value on the edge u -> v is read source-aligned (it
    /// depends on the word starting at u).
    pub fn from_block_fn(block_sft: &Sft, potential: BlockFn) -> TransferMatrix {
        let rows = (0..block_sft.alphabet_size())
            .map(|u| {
                block_sft
                    .successors(u as Symbol)
                    .enumerate()
                    .map(|(k, v)| (v as usize, potential.value(u, k).exp()))
                    .collect()
            })
            .collect();
        TransferMatrix {
            block_sft: block_sft.clone(),
            rows,
            potential,
        }
    }

    pub fn block_sft(&self) -> &Sft {
        &self.block_sft
    }

    pub fn size(&self) -> usize {
        self.block_sft.alphabet_size()
    }

    /// Entry B[u][v], zero when the transition is forbidden.
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        self.rows[u]
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, x)| x)
            .unwrap_or(0.0)
    }

    pub fn potential(&self) -> &BlockFn {
        &self.potential
    }
}

/// Build the transfer matrix of a range <= 2 potential on a block system.
pub fn transfer_matrix(
    system: &BlockSystem,
    potential: &LocallyConstantFn,
) -> Result<TransferMatrix> {
    let bf = BlockFn::new(system.block_sft(), potential)?;
    Ok(TransferMatrix::from_block_fn(system.block_sft(), bf))
}

/// Perron data of a transfer matrix.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RpfData {
    /// Perron eigenvalue, = e^pressure.
    pub lambda: f64,
    pub pressure: f64,
    /// Eigenfunction: positive right eigenvector of B^T, scaled so that
    /// <h, nu> = 1.
    pub h: Vec<f64>,
    /// Eigenmeasure: right eigenvector of B, scaled to a probability vector.
    pub nu: Vec<f64>,
    /// Invariant Gibbs state mu[u] = h[u] * nu[u]; sums to 1.
    pub mu: Vec<f64>,
    /// Eigenvalues of B as (re, im), sorted by decreasing modulus.
    pub spectrum: Vec<(f64, f64)>,
    /// Subdominant modulus / lambda; 0 when the rest of the spectrum
    /// vanishes.
    pub theta1: f64,
    /// Max relative eigen-equation residual across both eigenproblems.
    pub residual: f64,
}

/// Solve the eigenproblem of a transfer matrix over a mixing block shift.
pub fn rpf_solve(tm: &TransferMatrix) -> Result<RpfData> {
    let n = tm.size();
    if !tm.block_sft.is_mixing() {
        return Err(Error::NotPrimitive);
    }
    let right = power::power_iterate(n, &tm.rows, EIGEN_TOL, MAX_ITER);
    let trows = power::transpose(n, &tm.rows);
    let left = power::power_iterate(n, &trows, EIGEN_TOL, MAX_ITER);
    if !right.converged || !left.converged {
        return Err(Error::NoConvergence {
            what: "transfer-matrix power iteration".into(),
            target: EIGEN_TOL,
            iterations: MAX_ITER,
        });
    }
    let lambda = right.lambda;
    let nu = right.vector;
    let mut h = left.vector;
    let scale: f64 = h.iter().zip(&nu).map(|(a, b)| a * b).sum();
    if !(scale > 0.0) {
        return Err(Error::SolveFailure(
            "eigenvector pairing <h, nu> is not positive".into(),
        ));
    }
    for v in &mut h {
        *v /= scale;
    }
    let mu: Vec<f64> = h.iter().zip(&nu).map(|(a, b)| a * b).collect();
    let residual = relative_residual(&tm.rows, &nu, lambda)
        .max(relative_residual(&trows, &h, lambda))
        .max((right.lambda - left.lambda).abs() / lambda);
    if residual > RESIDUAL_TARGET {
        return Err(Error::NoConvergence {
            what: "transfer-matrix eigen residual".into(),
            target: RESIDUAL_TARGET,
            iterations: right.iterations.max(left.iterations),
        });
    }
    let (spectrum, theta1) = spectrum_and_theta(tm, lambda, &nu, &h);
    Ok(RpfData {
        lambda,
        pressure: lambda.ln(),
        h,
        nu,
        mu,
        spectrum,
        theta1,
        residual,
    })
}

fn relative_residual(rows: &SparseRows, x: &[f64], lambda: f64) -> f64 {
    let mut y = vec![0.0; x.len()];
    power::multiply(rows, x, &mut y);
    let sup = x.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let worst = x
        .iter()
        .zip(&y)
        .map(|(&xi, &yi)| (yi - lambda * xi).abs())
        .fold(0.0f64, f64::max);
    worst / (lambda * sup)
}

fn spectrum_and_theta(
    tm: &TransferMatrix,
    lambda: f64,
    nu: &[f64],
    h: &[f64],
) -> (Vec<(f64, f64)>, f64) {
    let n = tm.size();
    if n <= DENSE_SPECTRUM_CAP {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (u, row) in tm.rows.iter().enumerate() {
            for &(v, w) in row {
                m[(u, v)] = w;
            }
        }
        let mut spec: Vec<(f64, f64)> = m
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re, z.im))
            .collect();
        spec.sort_by(|a, b| {
            let (ma, mb) = (a.0.hypot(a.1), b.0.hypot(b.1));
            mb.partial_cmp(&ma)
                .unwrap()
                .then(b.0.partial_cmp(&a.0).unwrap())
                .then(a.1.partial_cmp(&b.1).unwrap())
        });
        let theta1 = if n >= 2 {
            let sub = spec[1].0.hypot(spec[1].1) / lambda;
            if sub < THETA_FLOOR {
                0.0
            } else {
                sub
            }
        } else {
            0.0
        };
        (spec, theta1)
    } else {
        let sub = deflated_subdominant(&tm.rows, lambda, nu, h) / lambda;
        let theta1 = if sub < THETA_FLOOR { 0.0 } else { sub };
        (vec![(lambda, 0.0)], theta1)
    }
}

/// Estimate the subdominant modulus by iterating B with the Perron
/// eigenprojection nu h^T removed, measuring the geometric growth rate.
fn deflated_subdominant(rows: &SparseRows, lambda: f64, nu: &[f64], h: &[f64]) -> f64 {
    let n = nu.len();
    let project = |x: &mut Vec<f64>| {
        let c: f64 = h.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        for (xi, &ni) in x.iter_mut().zip(nu) {
            *xi -= c * ni;
        }
    };
    let mut x: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    project(&mut x);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n0 = norm(&x);
    if n0 < 1e-300 {
        return 0.0;
    }
    for v in &mut x {
        *v /= n0;
    }
    let mut y = vec![0.0; n];
    let mut estimate = 0.0;
    let mut window = 0.0f64;
    let window_len = 50usize;
    for it in 1..=8_000usize {
        power::multiply(rows, &x, &mut y);
        std::mem::swap(&mut x, &mut y);
        project(&mut x);
        let nn = norm(&x);
        if nn < 1e-300 {
            return 0.0;
        }
        for v in &mut x {
            *v /= nn;
        }
        window += nn.ln();
        if it % window_len == 0 {
            let new = (window / window_len as f64).exp();
            if it > window_len && (new - estimate).abs() <= 1e-10 * lambda {
                return new;
            }
            estimate = new;
            window = 0.0;
        }
    }
    estimate
}

/// Subdominant-to-dominant ratio and the exponential mixing rate
/// gamma = -log theta1 (+inf when the rest of the spectrum vanishes).
pub fn spectral_gap(rpf: &RpfData) -> (f64, f64) {
    let gamma = if rpf.theta1 > 0.0 {
        -rpf.theta1.ln()
    } else {
        f64::INFINITY
    };
    (rpf.theta1, gamma)
}

/// The stationary Markov chain realising the Gibbs measure on cylinders.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    /// Row u holds (v, q(u -> v)) pairs parallel to `Sft::successors(u)`.
    rows: Vec<Vec<(usize, f64)>>,
    /// Stationary law = mu.
    pi: Vec<f64>,
}

impl GibbsChain {
    pub fn states(&self) -> usize {
        self.pi.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row(&self, u: usize) -> &[(usize, f64)] {
        &self.rows[u]
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// q(u -> v); zero when the transition is forbidden.
    pub fn prob(&self, u: usize, v: usize) -> f64 {
        self.rows[u]
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, q)| q)
            .unwrap_or(0.0)
    }

    /// mu of the cylinder [word] = pi[w0] q(w0,w1) ... q(w_{n-2},w_{n-1}).
    pub fn cylinder_measure(&self, word: &[usize]) -> f64 {
        match word.split_first() {
            None => 1.0,
            Some((&first, _)) => {
                let mut m = self.pi[first];
                for w in word.windows(2) {
                    m *= self.prob(w[0], w[1]);
                }
                m
            }
        }
    }
}

impl GibbsChain {
    /// Assemble a chain from explicit rows and stationary law, validating
    /// row-stochasticity (1e-12) and stationarity (1e-10).
    pub fn from_parts(rows: Vec<Vec<(usize, f64)>>, pi: Vec<f64>) -> Result<GibbsChain> {
        let n = pi.len();
        if rows.len() != n {
            return Err(Error::Validation(format!(
                "chain has {} rows but {} stationary entries",
                rows.len(),
                n
            )));
        }
        let pi_sum: f64 = pi.iter().sum();
        if (pi_sum - 1.0).abs() > 1e-12 || pi.iter().any(|&p| p < 0.0) {
            return Err(Error::Validation(
                "stationary vector is not a probability vector".into(),
            ));
        }
        for (u, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().map(|&(_, q)| q).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!("row {u} sums to {sum}, not 1")));
            }
            if row.iter().any(|&(v, q)| v >= n || q < 0.0) {
                return Err(Error::Validation(format!("row {u} has an invalid entry")));
            }
        }
        let mut flow = vec![0.0; n];
        for (u, row) in rows.iter().enumerate() {
            for &(v, q) in row {
                flow[v] += pi[u] * q;
            }
        }
        for v in 0..n {
            if (flow[v] - pi[v]).abs() > 1e-10 {
                return Err(Error::Validation(format!(
                    "law is not stationary: flow into {v} is {} but pi is {}",
                    flow[v], pi[v]
                )));
            }
        }
        Ok(GibbsChain { rows, pi })
    }
}

/// Conditional law of the Gibbs measure: q(u -> v) = mu(C_uv)/mu(C_u)
/// = B[u][v] nu[v] / (lambda nu[u]), stationary under pi = mu.
pub fn gibbs_chain(tm: &TransferMatrix, rpf: &RpfData) -> GibbsChain {
    let rows = tm
        .rows
        .iter()
        .enumerate()
        .map(|(u, row)| {
            row.iter()
                .map(|&(v, w)| (v, w * rpf.nu[v] / (rpf.lambda * rpf.nu[u])))
                .collect()
        })
        .collect();
    GibbsChain {
        rows,
        pi: rpf.mu.clone(),
    }
}

/// Extremes over all words of length <= n_max of
/// mu(C_w) * exp(n P - S_n phi), the two-sided Gibbs-property constants.
///
/// The Birkhoff sum on the cylinder is anchored at its lexicographically
/// least point (the sup/inf over the cylinder differ from it by at most the
/// final-edge oscillation, which the constants absorb).
pub fn gibbs_ratio_check(
    tm: &TransferMatrix,
    rpf: &RpfData,
    n_max: usize,
) -> Result<(f64, f64)> {
    if n_max == 0 {
        return Err(Error::Validation("n_max must be >= 1".into()));
    }
    let total: u128 = (1..=n_max).map(|n| tm.block_sft.word_count(n)).sum();
    if total > WORD_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            n: n_max,
            cap: WORD_ENUMERATION_CAP,
        });
    }
    let chain = gibbs_chain(tm, rpf);
    let succ = tm.block_sft.successor_lists();
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    // DFS over words, carrying the cylinder mass and the edge-sum prefix.
    struct Walk<'a> {
        chain: &'a GibbsChain,
        succ: &'a [Vec<usize>],
        potential: &'a BlockFn,
        pressure: f64,
        n_max: usize,
    }
    impl Walk<'_> {
        fn descend(&self, u: usize, depth: usize, mass: f64, prefix: f64, c1: &mut f64, c2: &mut f64) {
            let s_n = prefix + self.potential.value(u, 0);
            let value = mass * (depth as f64 * self.pressure - s_n).exp();
            *c1 = c1.min(value);
            *c2 = c2.max(value);
            if depth == self.n_max {
                return;
            }
            for (k, &v) in self.succ[u].iter().enumerate() {
                let q = self.chain.rows[u][k].1;
                self.descend(
                    v,
                    depth + 1,
                    mass * q,
                    prefix + self.potential.value(u, k),
                    c1,
                    c2,
                );
            }
        }
    }
    let walk = Walk {
        chain: &chain,
        succ: &succ,
        potential: &tm.potential,
        pressure: rpf.pressure,
        n_max,
    };
    for u in 0..tm.size() {
        walk.descend(u, 1, chain.pi[u], 0.0, &mut c1, &mut c2);
    }
    Ok((c1, c2))
}

/// Log-pressure of a block potential, without the full eigendata.
pub(crate) fn pressure_of(block_sft: &Sft, potential: &BlockFn) -> Result<f64> {
    pressure_of_with(block_sft, potential, EIGEN_TOL, MAX_ITER)
}

/// Pressure solve with caller-chosen tolerance, for finite-difference work
/// that needs the eigenvalue closer to machine precision.
pub(crate) fn pressure_of_with(
    block_sft: &Sft,
    potential: &BlockFn,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let tm = TransferMatrix::from_block_fn(block_sft, potential.clone());
    let out = power::power_iterate(tm.size(), &tm.rows, tol, max_iter);
    if !out.converged {
        return Err(Error::NoConvergence {
            what: "pressure power iteration".into(),
            target: tol,
            iterations: max_iter,
        });
    }
    Ok(out.lambda.ln())
}

/// The shifted-pressure curve t -> P(phi + t g) - P(phi) on a grid; the
/// value at t = 0 is exactly zero.
pub fn pressure_curve(
    system: &BlockSystem,
    phi: &LocallyConstantFn,
    g: &LocallyConstantFn,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let bs = system.block_sft();
    if !bs.is_mixing() {
        return Err(Error::NotPrimitive);
    }
    let phi_bf = BlockFn::new(bs, phi)?;
    let g_bf = BlockFn::new(bs, g)?;
    let p0 = pressure_of(bs, &phi_bf)?;
    t_grid
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok((t, 0.0));
            }
            let tilted = phi_bf.add_scaled(bs, t, &g_bf);
            Ok((t, pressure_of(bs, &tilted)? - p0))
        })
        .collect()
}
