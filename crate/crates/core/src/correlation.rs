//! Exact correlation sequences of the Gibbs chain, fitted decay rates,
//! multiple correlations, strong-mixing coefficients, and the asymptotic
//! variance computed by independent routes that must agree.
//!
//! All quantities are finite-state Markov chain functionals: with Q the
//! Gibbs chain and pi its stationary law, correlations are inner products
//! of observable vectors propagated through powers of Q, so every value
//! here is exact up to roundoff, with no sampling error.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::observable::BlockFn;
use crate::sft::Sft;
use crate::spectral::{self, GibbsChain, RpfData};

/// Noise floor below which |C_k| is treated as numerically zero.
const CORR_FLOOR: f64 = 1e-14;
/// Absolute floor under which correlation values carry no decay information.
pub const ENVELOPE_FLOOR: f64 = 1e-13;
/// Atom cap for mixing-coefficient cylinder enumeration.
const ATOM_CAP: usize = 4096;
/// Largest atom count for which the sup over unions is exact.
const EXACT_ATOMS: usize = 12;
/// States up to which the resolvent route uses a dense LU solve.
const DENSE_SOLVE_CAP: usize = 1024;
/// Routes more negative than this fail; small negatives clamp to zero.
const NONNEG_TOL: f64 = 1e-6;

/// A correlation sequence C_0..C_nmax with a fitted geometric envelope
/// |C_k| <= fitted_prefactor * fitted_rate^k for k >= fit_start, down to
/// the numerical noise floor.
#[derive(Debug, Clone)]
pub struct CorrelationSeq {
    pub values: Vec<f64>,
    pub fitted_rate: f64,
    pub fitted_prefactor: f64,
    pub fit_start: usize,
}

impl CorrelationSeq {
    /// Check the fitted envelope on the stored values (floored, since
    /// entries below the noise floor carry no decay information).
    pub fn decay_bound_holds(&self) -> bool {
        self.values.iter().enumerate().skip(self.fit_start).all(|(k, &c)| {
            c.abs() <= (self.fitted_prefactor * self.fitted_rate.powi(k as i32)).max(ENVELOPE_FLOOR)
        })
    }
}

/// Stationary mean of a range <= 2 observable under the chain.
pub fn chain_mean(chain: &GibbsChain, f: &BlockFn) -> f64 {
    let mut total = 0.0;
    for (u, row) in chain.rows().iter().enumerate() {
        for (k, &(_, q)) in row.iter().enumerate() {
            total += chain.pi()[u] * q * f.value(u, k);
        }
    }
    total
}

/// y[u] = sum_v q(u,v) x[v].
fn q_apply(chain: &GibbsChain, x: &[f64]) -> Vec<f64> {
    chain
        .rows()
        .iter()
        .map(|row| row.iter().map(|&(v, q)| q * x[v]).sum())
        .collect()
}

/// f_in[u] = E[f(X_j, X_{j+1}) | X_j = u]; equals f itself when per-block.
fn edge_expectation(chain: &GibbsChain, f: &BlockFn) -> Vec<f64> {
    chain
        .rows()
        .iter()
        .enumerate()
        .map(|(u, row)| {
            row.iter()
                .enumerate()
                .map(|(k, &(_, q))| q * f.value(u, k))
                .sum()
        })
        .collect()
}

/// C_k(g, h) = E[g(X_0,.) h(X_k,.)] - E[g] E[h] for k = 0..n_max, exactly,
/// by propagating h through powers of the chain.
///
/// Both observables are centered before propagation, so small C_k are
/// computed as products of decaying factors instead of as differences of
/// order-one expectations; this keeps the relative accuracy of the tail.
pub fn correlation_sequence(
    chain: &GibbsChain,
    g: &BlockFn,
    h: &BlockFn,
    n_max: usize,
) -> CorrelationSeq {
    let g_c = centered(chain, g);
    let h_c = centered(chain, h);
    let mut values = Vec::with_capacity(n_max + 1);
    let mut c0 = 0.0;
    for (u, row) in chain.rows().iter().enumerate() {
        for (k, &(_, q)) in row.iter().enumerate() {
            c0 += chain.pi()[u] * q * g_c.value(u, k) * h_c.value(u, k);
        }
    }
    values.push(c0);
    let mut y = edge_expectation(chain, &h_c);
    for _ in 1..=n_max {
        let mut ck = 0.0;
        for (u, row) in chain.rows().iter().enumerate() {
            for (k, &(v, q)) in row.iter().enumerate() {
                ck += chain.pi()[u] * q * g_c.value(u, k) * y[v];
            }
        }
        values.push(ck);
        y = q_apply(chain, &y);
    }
    let (fitted_rate, fitted_prefactor, fit_start) = fit_decay(&values);
    CorrelationSeq {
        values,
        fitted_rate,
        fitted_prefactor,
        fit_start,
    }
}

/// Log-linear fit of |C_k| over the window from ceil(n_max/4) onward,
/// avoiding the transient. Entries under the noise floor are skipped rather
/// than terminating the window: an oscillating sequence passes through zero
/// at isolated lags and rebounds, and the envelope must still cover the
/// rebound.
fn fit_decay(values: &[f64]) -> (f64, f64, usize) {
    let n_max = values.len() - 1;
    let k0 = n_max.div_ceil(4);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (k, &c) in values.iter().enumerate().skip(k0) {
        if c.abs() < CORR_FLOOR {
            continue;
        }
        pts.push((k as f64, c.abs().ln()));
    }
    if pts.len() < 2 {
        return (0.0, 0.0, k0);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let rate = slope.exp().clamp(0.0, 1.0 - 1e-9);
    // inflate the prefactor so the envelope dominates every window point;
    // the extra factor absorbs the divide/multiply rounding of the
    // reconstruction prefactor * rate^k
    let prefactor = pts
        .iter()
        .map(|&(k, ln_a)| ln_a.exp() / rate.powi(k as i32))
        .fold(0.0f64, f64::max)
        * (1.0 + 1e-12);
    (rate, prefactor, k0)
}

/// Asymptotic variance of an observable by independent routes.
#[derive(Debug, Clone, serde::Serialize)]
pub struct VarianceReport {
    /// C_0 + 2 sum_k C_k, summed until the fitted geometric tail is < 1e-12.
    pub corr_sum: f64,
    /// Second derivative of t -> P(phi + t g) at 0, by Richardson-extrapolated
    /// central differences.
    pub pressure_fd: f64,
    /// Resolvent route 2<g,(I - Q + Pi_1)^{-1} g>_mu - mu(g^2) for centered g.
    pub resolvent: f64,
    /// Var(S_n)/n extrapolation from the exact lattice distribution, when
    /// the observable is lattice-valued.
    pub dp_slope: Option<f64>,
    /// Median of the available routes.
    pub consensus: f64,
    /// Largest pairwise difference among the available routes.
    pub max_discrepancy: f64,
}

impl VarianceReport {
    pub fn routes(&self) -> Vec<f64> {
        let mut r = vec![self.corr_sum, self.pressure_fd, self.resolvent];
        if let Some(d) = self.dp_slope {
            r.push(d);
        }
        r
    }

    /// Attach the exact-distribution route and refresh the summary fields.
    pub fn with_dp_slope(mut self, v: f64) -> VarianceReport {
        self.dp_slope = Some(v);
        let (consensus, max_discrepancy) = summarize(&self.routes());
        self.consensus = consensus;
        self.max_discrepancy = max_discrepancy;
        self
    }
}

fn summarize(routes: &[f64]) -> (f64, f64) {
    let mut sorted = routes.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let consensus = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    (consensus, sorted[n - 1] - sorted[0])
}

fn nonnegative(route: &str, v: f64) -> Result<f64> {
    if v < -NONNEG_TOL {
        return Err(Error::SolveFailure(format!(
            "variance route {route} produced {v}, negative beyond tolerance"
        )));
    }
    Ok(v.max(0.0))
}

/// Subtract the chain mean from an observable, in its own alignment.
pub fn centered(chain: &GibbsChain, f: &BlockFn) -> BlockFn {
    let bar = chain_mean(chain, f);
    match f {
        BlockFn::PerBlock(v) => BlockFn::PerBlock(v.iter().map(|&x| x - bar).collect()),
        BlockFn::PerEdge(rows) => BlockFn::PerEdge(
            rows.iter()
                .map(|r| r.iter().map(|&x| x - bar).collect())
                .collect(),
        ),
    }
}

/// The asymptotic CLT variance sigma^2(g) by three internal routes
/// (correlation sum, pressure second derivative, resolvent); the exact
/// distribution slope is attached separately where the observable is
/// lattice-valued.
pub fn variance(
    block_sft: &Sft,
    potential: &BlockFn,
    chain: &GibbsChain,
    rpf: &RpfData,
    g: &BlockFn,
) -> Result<VarianceReport> {
    let corr_sum = nonnegative("corr_sum", variance_corr_sum(chain, rpf, g))?;
    let pressure_fd = nonnegative("pressure_fd", variance_pressure_fd(block_sft, potential, g)?)?;
    let resolvent = nonnegative("resolvent", variance_resolvent(chain, g)?)?;
    let (consensus, max_discrepancy) = summarize(&[corr_sum, pressure_fd, resolvent]);
    Ok(VarianceReport {
        corr_sum,
        pressure_fd,
        resolvent,
        dp_slope: None,
        consensus,
        max_discrepancy,
    })
}

fn variance_corr_sum(chain: &GibbsChain, rpf: &RpfData, g: &BlockFn) -> f64 {
    // enough terms to push a theta1-geometric tail below 1e-12 with margin
    let n_max = if rpf.theta1 <= 0.0 {
        8
    } else {
        ((34.0 * std::f64::consts::LN_10 / -rpf.theta1.ln()).ceil() as usize)
            .clamp(64, 20_000)
    };
    let seq = correlation_sequence(chain, g, g, n_max);
    seq.values[0] + 2.0 * seq.values[1..].iter().sum::<f64>()
}

fn variance_pressure_fd(block_sft: &Sft, potential: &BlockFn, g: &BlockFn) -> Result<f64> {
    const FD_TOL: f64 = 1e-14;
    const FD_ITER: usize = 200_000;
    let pressure_at = |t: f64| {
        spectral::pressure_of_with(
            block_sft,
            &potential.add_scaled(block_sft, t, g),
            FD_TOL,
            FD_ITER,
        )
    };
    let p0 = pressure_at(0.0)?;
    let diff = |h: f64| -> Result<f64> {
        Ok((pressure_at(h)? - 2.0 * p0 + pressure_at(-h)?) / (h * h))
    };
    let d1 = diff(1e-3)?;
    let d2 = diff(5e-4)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

fn variance_resolvent(chain: &GibbsChain, g: &BlockFn) -> Result<f64> {
    let g_c = centered(chain, g);
    let mut c0 = 0.0;
    for (u, row) in chain.rows().iter().enumerate() {
        for (k, &(_, q)) in row.iter().enumerate() {
            let x = g_c.value(u, k);
            c0 += chain.pi()[u] * q * x * x;
        }
    }
    let g_in = edge_expectation(chain, &g_c);
    let x = resolve(chain, &g_in)?;
    let mut cross = 0.0;
    for (u, row) in chain.rows().iter().enumerate() {
        for (k, &(v, q)) in row.iter().enumerate() {
            cross += chain.pi()[u] * q * g_c.value(u, k) * x[v];
        }
    }
    Ok(c0 + 2.0 * cross)
}

/// Solve (I - Q + Pi_1) x = b for centered b, where Pi_1 projects onto
/// constants with pi weights; dense LU for small chains, Neumann series
/// beyond.
fn resolve(chain: &GibbsChain, b: &[f64]) -> Result<Vec<f64>> {
    let n = chain.states();
    if n <= DENSE_SOLVE_CAP {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for u in 0..n {
            for v in 0..n {
                m[(u, v)] = chain.pi()[v];
            }
            m[(u, u)] += 1.0;
        }
        for (u, row) in chain.rows().iter().enumerate() {
            for &(v, q) in row {
                m[(u, v)] -= q;
            }
        }
        let rhs = DVector::from_column_slice(b);
        let lu = m.lu();
        match lu.solve(&rhs) {
            Some(x) => Ok(x.iter().copied().collect()),
            None => Err(Error::SolveFailure(
                "resolvent system (I - Q + Pi_1) is singular: chain is not mixing".into(),
            )),
        }
    } else {
        // x = sum_k Q^k b converges geometrically for centered b
        let mut x = b.to_vec();
        let mut term = b.to_vec();
        for it in 0..200_000 {
            term = q_apply(chain, &term);
            let sup = term.iter().fold(0.0f64, |a, &t| a.max(t.abs()));
            for (xi, &ti) in x.iter_mut().zip(&term) {
                *xi += ti;
            }
            if sup < 1e-15 {
                return Ok(x);
            }
            if it % 100 == 99 {
                // strip numerical drift off the constants direction
                let c: f64 = chain.pi().iter().zip(&x).map(|(&p, &xi)| p * xi).sum();
                for xi in &mut x {
                    *xi -= c;
                }
            }
        }
        Err(Error::SolveFailure(
            "resolvent Neumann series did not converge (chain mixes too slowly)".into(),
        ))
    }
}

/// Exact centered expectation of a product of observables read off at the
/// given times: E[prod_j g_j(X_{n_j}, .)] - prod_j E[g_j], with times
/// strictly increasing from 0.
pub fn multiple_correlation(
    chain: &GibbsChain,
    fns: &[BlockFn],
    times: &[usize],
) -> Result<f64> {
    if fns.is_empty() || fns.len() != times.len() {
        return Err(Error::Validation(
            "need one observable per time point".into(),
        ));
    }
    if times[0] != 0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation(
            "times must be strictly increasing and start at 0".into(),
        ));
    }
    let last = fns.len() - 1;
    // psi[v] = E[prod_{i >= j} g_i | X_{n_j} = v], built backwards
    let mut psi = edge_expectation(chain, &fns[last]);
    for j in (0..last).rev() {
        let gap = times[j + 1] - times[j];
        for _ in 0..gap - 1 {
            psi = q_apply(chain, &psi);
        }
        let mut next = vec![0.0; chain.states()];
        for (u, row) in chain.rows().iter().enumerate() {
            let mut acc = 0.0;
            for (k, &(v, q)) in row.iter().enumerate() {
                acc += q * fns[j].value(u, k) * psi[v];
            }
            next[u] = acc;
        }
        psi = next;
    }
    let joint: f64 = chain.pi().iter().zip(&psi).map(|(&p, &x)| p * x).sum();
    let independent: f64 = fns.iter().map(|f| chain_mean(chain, f)).product();
    Ok(joint - independent)
}

/// Words of the given length with positive chain probability, with a cap.
fn chain_words(chain: &GibbsChain, len: usize, cap: usize) -> Result<Vec<Vec<usize>>> {
    let n = chain.states();
    let mut counts = vec![1u128; n];
    for _ in 1..len {
        let mut next = vec![0u128; n];
        for (u, row) in chain.rows().iter().enumerate() {
            for &(v, _) in row {
                next[v] += counts[u];
            }
        }
        counts = next;
    }
    let total: u128 = counts.iter().sum();
    if total > cap as u128 {
        return Err(Error::DepthTooLarge {
            depth: len,
            atoms: total.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut stack = Vec::with_capacity(len);
    fn rec(chain: &GibbsChain, len: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if stack.len() == len {
            out.push(stack.clone());
            return;
        }
        if stack.is_empty() {
            for u in 0..chain.states() {
                stack.push(u);
                rec(chain, len, stack, out);
                stack.pop();
            }
        } else {
            let u = *stack.last().unwrap();
            let targets: Vec<usize> = chain.row(u).iter().map(|&(v, _)| v).collect();
            for v in targets {
                stack.push(v);
                rec(chain, len, stack, out);
                stack.pop();
            }
        }
    }
    rec(chain, len, &mut stack, &mut out);
    Ok(out)
}

/// Strong mixing coefficient between the sigma-algebras of depth-cylinders
/// at time 0 and time n: sup over unions A, B of depth-atoms of
/// |mu(A cap shift^-n B) - mu(A) mu(B)|.
///
/// Exact (subset enumeration) when there are at most 12 atoms; the returned
/// flag is false when the atom-sum upper bound (1/2) sum |E_ab| is used
/// instead.
pub fn mixing_coefficient(chain: &GibbsChain, depth: usize, n: usize) -> Result<(f64, bool)> {
    if depth == 0 {
        return Err(Error::Validation("depth must be >= 1".into()));
    }
    let atoms = chain_words(chain, depth, ATOM_CAP)?;
    let count = atoms.len();
    let mu: Vec<f64> = atoms.iter().map(|a| chain.cylinder_measure(a)).collect();
    let mut e = vec![0.0f64; count * count];
    if n + 1 >= depth {
        // propagate the final state of A forward n - depth + 1 steps
        let m = n + 1 - depth;
        let mut row_cache: HashMap<usize, Vec<f64>> = HashMap::new();
        let inner: Vec<f64> = atoms
            .iter()
            .map(|b| b.windows(2).map(|w| chain.prob(w[0], w[1])).product())
            .collect();
        for (i, a) in atoms.iter().enumerate() {
            let last = a[depth - 1];
            let row = row_cache.entry(last).or_insert_with(|| {
                let mut r = vec![0.0; chain.states()];
                r[last] = 1.0;
                for _ in 0..m {
                    let mut next = vec![0.0; chain.states()];
                    for (u, qrow) in chain.rows().iter().enumerate() {
                        if r[u] != 0.0 {
                            for &(v, q) in qrow {
                                next[v] += r[u] * q;
                            }
                        }
                    }
                    r = next;
                }
                r
            });
            for (j, b) in atoms.iter().enumerate() {
                e[i * count + j] = mu[i] * row[b[0]] * inner[j] - mu[i] * mu[j];
            }
        }
    } else {
        // overlapping windows: the joint event is a single longer cylinder
        for (i, a) in atoms.iter().enumerate() {
            for (j, b) in atoms.iter().enumerate() {
                let joint = if a[n..] == b[..depth - n] {
                    let mut w = a.clone();
                    w.extend_from_slice(&b[depth - n..]);
                    chain.cylinder_measure(&w)
                } else {
                    0.0
                };
                e[i * count + j] = joint - mu[i] * mu[j];
            }
        }
    }
    if count <= EXACT_ATOMS {
        let mut best = 0.0f64;
        for mask in 1u32..(1 << count) {
            let mut pos = 0.0;
            let mut neg = 0.0;
            for b in 0..count {
                let mut s = 0.0;
                for a in 0..count {
                    if mask >> a & 1 == 1 {
                        s += e[a * count + b];
                    }
                }
                if s > 0.0 {
                    pos += s;
                } else {
                    neg -= s;
                }
            }
            best = best.max(pos.max(neg));
        }
        Ok((best, true))
    } else {
        Ok((0.5 * e.iter().map(|x| x.abs()).sum::<f64>(), false))
    }
}
