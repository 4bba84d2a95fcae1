//! Exact law of Birkhoff sums over the Gibbs chain, for lattice-valued
//! observables: a forward dynamic program over (state, accumulated value)
//! gives every atom probability of S_n g in closed form, providing the
//! brute-force oracle behind the central-limit, Berry-Esseen, local-limit,
//! and large-deviation checks.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::observable::BlockFn;
use crate::spectral::GibbsChain;

/// Default denominator bound for lattice detection.
pub const DEFAULT_Q_MAX: u64 = 1_000_000;
/// Cap on DP table cells (states x value width).
pub const MEMORY_CAP: u128 = 100_000_000;
/// Absolute snapping tolerance on q * value.
pub const SNAP_TOL: f64 = 1e-9;

/// Integer-valued form of a lattice observable: g = values / q pointwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntValues {
    PerBlock(Vec<i64>),
    PerEdge(Vec<Vec<i64>>),
}

impl IntValues {
    fn value(&self, u: usize, succ_idx: usize) -> i64 {
        match self {
            IntValues::PerBlock(v) => v[u],
            IntValues::PerEdge(rows) => rows[u][succ_idx],
        }
    }

    fn min_max(&self) -> (i64, i64) {
        let it: Box<dyn Iterator<Item = i64>> = match self {
            IntValues::PerBlock(v) => Box::new(v.iter().copied()),
            IntValues::PerEdge(rows) => Box::new(rows.iter().flatten().copied()),
        };
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for x in it {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        (lo, hi)
    }
}

/// A common denominator q and the integer value table q * g.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    pub q: u64,
    pub values: IntValues,
}

/// Smallest denominator q <= q_max for which every value of g snaps onto
/// the lattice Z/q within |q v - round(q v)| <= 1e-9; errors as NonLattice
/// when no such q exists (e.g. irrational values).
pub fn lattice_check(g: &BlockFn, q_max: u64) -> Result<LatticeSpec> {
    let raw: Vec<f64> = match g {
        BlockFn::PerBlock(v) => v.clone(),
        BlockFn::PerEdge(rows) => rows.iter().flatten().copied().collect(),
    };
    let mut q: u128 = 1;
    for &v in &raw {
        let d = min_denominator(v, q_max).ok_or(Error::NonLattice { q_max })?;
        q = lcm(q, d as u128);
        if q > q_max as u128 {
            return Err(Error::NonLattice { q_max });
        }
    }
    let q = q as u64;
    let snap = |v: f64| -> Result<i64> {
        let s = v * q as f64;
        if (s - s.round()).abs() > SNAP_TOL {
            return Err(Error::NonLattice { q_max });
        }
        Ok(s.round() as i64)
    };
    let values = match g {
        BlockFn::PerBlock(v) => IntValues::PerBlock(v.iter().map(|&x| snap(x)).collect::<Result<_>>()?),
        BlockFn::PerEdge(rows) => IntValues::PerEdge(
            rows.iter()
                .map(|r| r.iter().map(|&x| snap(x)).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?,
        ),
    };
    Ok(LatticeSpec { q, values })
}

/// Smallest q <= q_max with |q v - round(q v)| <= tol, scanning the
/// continued-fraction convergent denominators of v (any admissible q at
/// this tolerance is a convergent denominator, by the best-approximation
/// theorem).
fn min_denominator(v: f64, q_max: u64) -> Option<u64> {
    let ok = |q: u64| {
        let s = v * q as f64;
        (s - s.round()).abs() <= SNAP_TOL
    };
    if ok(1) {
        return Some(1);
    }
    let mut x = v.abs();
    let (mut k_prev, mut k_cur): (u64, u64) = (1, 0);
    for _ in 0..64 {
        let a = x.floor();
        if a >= q_max as f64 {
            break;
        }
        let k_next = match (a as u64)
            .checked_mul(k_cur)
            .and_then(|m| m.checked_add(k_prev))
        {
            Some(k) => k,
            None => break,
        };
        k_prev = k_cur;
        k_cur = k_next;
        if k_cur > q_max {
            break;
        }
        if k_cur > 0 && ok(k_cur) {
            return Some(k_cur);
        }
        let frac = x - a;
        if frac < 1e-13 {
            break;
        }
        x = 1.0 / frac;
    }
    None
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: u128, b: u128) -> u128 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd_u128(a, b) * b
}

/// The exact law of S_n g: atoms at k/q with their probabilities.
#[derive(Debug, Clone, Serialize)]
pub struct ExactDistribution {
    pub n: usize,
    /// Lattice denominator: the atom at support[i] is the value support[i]/q.
    pub q: u64,
    /// Lattice points with positive probability, increasing.
    pub support: Vec<i64>,
    pub probs: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// Total mass of atoms below the reporting floor (1e-300, the underflow
    /// guard), dropped from the support. Deep-tail atoms above the floor are
    /// kept: the forward DP multiplies nonnegative terms only, so even
    /// masses near e^-700 carry full relative accuracy, and the
    /// large-deviation comparisons depend on them.
    pub pruned_mass: f64,
}

impl ExactDistribution {
    /// P(S_n = k/q), zero off the support.
    pub fn prob_at(&self, k: i64) -> f64 {
        match self.support.binary_search(&k) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }
}

/// Forward DP over (state, accumulated integer value): per-block tables
/// add n state increments along length-n words; per-edge tables add n edge
/// increments along length-(n+1) words. Exact up to roundoff.
pub fn exact_dist(chain: &GibbsChain, lattice: &LatticeSpec, n: usize) -> Result<ExactDistribution> {
    if n == 0 {
        return Err(Error::Validation("n must be >= 1".into()));
    }
    let states = chain.states();
    let (lo, hi) = lattice.values.min_max();
    let spread = (hi - lo) as u128;
    let width = spread
        .checked_mul(n as u128)
        .and_then(|w| w.checked_add(1))
        .ok_or(Error::MemoryCap {
            cells: u128::MAX,
            cap: MEMORY_CAP,
        })?;
    let cells = width * states as u128;
    if cells > MEMORY_CAP {
        return Err(Error::MemoryCap {
            cells,
            cap: MEMORY_CAP,
        });
    }
    let width = width as usize;
    let mut table = vec![0.0f64; states * width];
    let steps;
    match &lattice.values {
        IntValues::PerBlock(vals) => {
            // value of w_0..w_{n-1} = sum of per-state increments; seed the
            // first symbol, then n-1 transitions
            for u in 0..states {
                table[u * width + (vals[u] - lo) as usize] += chain.pi()[u];
            }
            steps = n - 1;
        }
        IntValues::PerEdge(_) => {
            // n edge increments along w_0..w_n; seed at zero accumulation
            for u in 0..states {
                table[u * width] += chain.pi()[u];
            }
            steps = n;
        }
    }
    for _ in 0..steps {
        let mut next = vec![0.0f64; states * width];
        for u in 0..states {
            let row = chain.row(u);
            for (k, &(v, q)) in row.iter().enumerate() {
                let inc = match &lattice.values {
                    IntValues::PerBlock(vals) => vals[v] - lo,
                    IntValues::PerEdge(_) => lattice.values.value(u, k) - lo,
                } as usize;
                for idx in 0..width - inc {
                    let mass = table[u * width + idx];
                    if mass != 0.0 {
                        next[v * width + idx + inc] += mass * q;
                    }
                }
            }
        }
        table = next;
    }
    let mut atoms: BTreeMap<i64, f64> = BTreeMap::new();
    let base = match &lattice.values {
        // per-block seeds already placed one increment, shifted by lo once
        IntValues::PerBlock(_) => (n as i64) * lo,
        IntValues::PerEdge(_) => (n as i64) * lo,
    };
    for u in 0..states {
        for idx in 0..width {
            let p = table[u * width + idx];
            if p > 0.0 {
                *atoms.entry(base + idx as i64).or_insert(0.0) += p;
            }
        }
    }
    // atoms at the underflow floor are numerically meaningless; drop them
    // but account for their mass
    let pruned_mass: f64 = atoms.values().filter(|&&p| p < 1e-300).sum();
    atoms.retain(|_, &mut p| p >= 1e-300);
    let support: Vec<i64> = atoms.keys().copied().collect();
    let probs: Vec<f64> = atoms.values().copied().collect();
    let q = lattice.q as f64;
    let mean: f64 = support
        .iter()
        .zip(&probs)
        .map(|(&k, &p)| (k as f64 / q) * p)
        .sum();
    let variance: f64 = support
        .iter()
        .zip(&probs)
        .map(|(&k, &p)| {
            let d = k as f64 / q - mean;
            d * d * p
        })
        .sum();
    Ok(ExactDistribution {
        n,
        q: lattice.q,
        support,
        probs,
        mean,
        variance,
        pruned_mass,
    })
}

/// Kolmogorov-Smirnov distance between the law of (S_n - n m)/(sigma sqrt n)
/// and the standard normal, evaluated at both one-sided limits of the CDF
/// at every atom.
pub fn ks_vs_gaussian(dist: &ExactDistribution, mean_rate: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::DegenerateSigma { sigma });
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let scale = sigma * (dist.n as f64).sqrt();
    let center = dist.n as f64 * mean_rate;
    let mut cum = 0.0;
    let mut ks = 0.0f64;
    for (&k, &p) in dist.support.iter().zip(&dist.probs) {
        let z = (k as f64 / dist.q as f64 - center) / scale;
        let phi = normal.cdf(z);
        ks = ks.max((cum - phi).abs());
        cum += p;
        ks = ks.max((cum - phi).abs());
    }
    Ok(ks)
}

/// Worst central-window deviation of the lattice local limit theorem:
/// max over lattice points x = k/q with |x - mean| <= 3 sigma sqrt(n) of
/// |(q/d) sigma sqrt(2 pi n) P(S_n = x) - exp(-(x - mean)^2 / (2 sigma^2 n))|,
/// where d/q is the true lattice span of the support (d = gcd of support
/// differences).
pub fn local_limit_check(dist: &ExactDistribution, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::DegenerateSigma { sigma });
    }
    let mut d: i64 = 0;
    for w in dist.support.windows(2) {
        d = gcd_i64(d, w[1] - w[0]);
    }
    let d = d.max(1);
    let q = dist.q as f64;
    let nf = dist.n as f64;
    let center = dist.mean;
    let half_window = 3.0 * sigma * nf.sqrt();
    let k_lo = ((center - half_window) * q).ceil() as i64;
    let k_hi = ((center + half_window) * q).floor() as i64;
    let k0 = dist.support[0];
    // first sublattice point >= k_lo
    let offset = (k_lo - k0).rem_euclid(d);
    let start = k_lo + if offset == 0 { 0 } else { d - offset };
    let prefactor = q / d as f64 * sigma * (2.0 * std::f64::consts::PI * nf).sqrt();
    let mut worst = 0.0f64;
    let mut k = start;
    while k <= k_hi {
        let x = k as f64 / q;
        let gauss = (-(x - center) * (x - center) / (2.0 * sigma * sigma * nf)).exp();
        let dev = (prefactor * dist.prob_at(k) - gauss).abs();
        worst = worst.max(dev);
        k += d;
    }
    Ok(worst)
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// P(S_n / n in [a - eps, a + eps]), summed exactly over the atoms
/// (inclusive endpoints, with a 1e-12 guard for boundary roundoff).
pub fn interval_prob(dist: &ExactDistribution, a: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Validation("eps must be positive".into()));
    }
    let n = dist.n as f64;
    let lo = n * (a - eps) - 1e-12;
    let hi = n * (a + eps) + 1e-12;
    Ok(dist
        .support
        .iter()
        .zip(&dist.probs)
        .filter(|(&k, _)| {
            let x = k as f64 / dist.q as f64;
            x >= lo && x <= hi
        })
        .map(|(_, &p)| p)
        .sum())
}

/// Var(S_n)/n extrapolated by Richardson over (n, 2n): the 1/n correction
/// term cancels exactly, leaving only exponentially small remainders.
pub fn variance_slope(chain: &GibbsChain, lattice: &LatticeSpec, n: usize) -> Result<f64> {
    let d1 = exact_dist(chain, lattice, n)?;
    let d2 = exact_dist(chain, lattice, 2 * n)?;
    Ok(2.0 * d2.variance / (2.0 * n as f64) - d1.variance / n as f64)
}
