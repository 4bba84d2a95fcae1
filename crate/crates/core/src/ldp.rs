//! Large deviations of Birkhoff averages: scaled cumulant curves from
//! pressure differences, Legendre-transform rate functions with analytic
//! derivatives via tilted chains, level-2 (empirical-measure) rates for
//! Markov candidates, and contraction back to level 1.

use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::chain_mean;
use crate::error::{Error, Result};
use crate::observable::BlockFn;
use crate::sft::Sft;
use crate::spectral::{gibbs_chain, pressure_of, rpf_solve, GibbsChain, RpfData, TransferMatrix};

/// Bisection tolerance in t when solving the derivative equation.
pub const T_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct CumulantRow {
    pub t: f64,
    /// Scaled cumulant value: pressure(phi + t g) - pressure(phi).
    pub lambda: f64,
    /// Its derivative: the mean of g under the t-tilted chain.
    pub slope: f64,
}

/// Legendre-transform rate function I(a) = sup_t { t a - lambda(t) } of the
/// scaled cumulant, with the achievable-mean domain [a_min, a_max] given by
/// the derivative range over the t window.
#[derive(Debug, Clone)]
pub struct RateFunction {
    block_sft: Sft,
    phi: BlockFn,
    g: BlockFn,
    pub t_max: f64,
    pub base_pressure: f64,
    /// Stationary mean of g: the unique zero of the rate function.
    pub mean: f64,
    pub cumulant: Vec<CumulantRow>,
    pub a_min: f64,
    pub a_max: f64,
}

fn tilted_chain(block_sft: &Sft, phi: &BlockFn, g: &BlockFn, t: f64) -> Result<(RpfData, GibbsChain)> {
    let tilted = phi.add_scaled(block_sft, t, g);
    let tm = TransferMatrix::from_block_fn(block_sft, tilted);
    let rpf = rpf_solve(&tm)?;
    let chain = gibbs_chain(&tm, &rpf);
    Ok((rpf, chain))
}

fn tilted_mean(block_sft: &Sft, phi: &BlockFn, g: &BlockFn, t: f64) -> Result<f64> {
    let (_, chain) = tilted_chain(block_sft, phi, g, t)?;
    Ok(chain_mean(&chain, g))
}

/// Samples the cumulant curve on [-t_max, t_max] and prepares the Legendre
/// evaluator. The slope column is computed analytically as the tilted-chain
/// mean, so no numerical differentiation enters the rate function.
pub fn build_rate_function(
    block_sft: &Sft,
    phi: &BlockFn,
    g: &BlockFn,
    t_max: f64,
    grid: usize,
) -> Result<RateFunction> {
    if !(t_max > 0.0) {
        return Err(Error::Validation("t_max must be positive".into()));
    }
    if grid < 33 {
        return Err(Error::Validation(
            "the cumulant grid needs at least 33 points".into(),
        ));
    }
    let base_pressure = pressure_of(block_sft, phi)?;
    let ts: Vec<f64> = (0..grid)
        .map(|i| -t_max + 2.0 * t_max * i as f64 / (grid - 1) as f64)
        .collect();
    let cumulant: Vec<CumulantRow> = ts
        .par_iter()
        .map(|&t| -> Result<CumulantRow> {
            let tilted = phi.add_scaled(block_sft, t, g);
            let lambda = if t == 0.0 {
                0.0
            } else {
                pressure_of(block_sft, &tilted)? - base_pressure
            };
            let slope = tilted_mean(block_sft, phi, g, t)?;
            Ok(CumulantRow { t, lambda, slope })
        })
        .collect::<Result<_>>()?;
    let mean = tilted_mean(block_sft, phi, g, 0.0)?;
    let a_min = cumulant.first().expect("grid >= 33").slope;
    let a_max = cumulant.last().expect("grid >= 33").slope;
    Ok(RateFunction {
        block_sft: block_sft.clone(),
        phi: phi.clone(),
        g: g.clone(),
        t_max,
        base_pressure,
        mean,
        cumulant,
        a_min,
        a_max,
    })
}

impl RateFunction {
    fn lambda_at(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let tilted = self.phi.add_scaled(&self.block_sft, t, &self.g);
        Ok(pressure_of(&self.block_sft, &tilted)? - self.base_pressure)
    }

    /// Maximising tilt t* with slope(t*) = a, by bisection on the strictly
    /// increasing derivative.
    fn argmax_tilt(&self, a: f64) -> Result<f64> {
        if a < self.a_min || a > self.a_max {
            return Err(Error::OutOfDomain {
                a,
                a_min: self.a_min,
                a_max: self.a_max,
            });
        }
        let (mut lo, mut hi) = (-self.t_max, self.t_max);
        while hi - lo > T_TOL {
            let mid = 0.5 * (lo + hi);
            if tilted_mean(&self.block_sft, &self.phi, &self.g, mid)? < a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// I(a) together with the maximising tilt.
    pub fn eval_with_tilt(&self, a: f64) -> Result<(f64, f64)> {
        if a == self.mean {
            // the supremum is attained at t = 0 where the bracket is
            // identically zero: the rate function vanishes exactly at the
            // stationary mean
            return Ok((0.0, 0.0));
        }
        let t = self.argmax_tilt(a)?;
        // the supremum includes t = 0, so the rate is never negative
        let value = (t * a - self.lambda_at(t)?).max(0.0);
        Ok((value, t))
    }

    pub fn eval(&self, a: f64) -> Result<f64> {
        Ok(self.eval_with_tilt(a)?.0)
    }

    /// Total-function convention: +infinity outside the achievable domain.
    pub fn eval_extended(&self, a: f64) -> f64 {
        match self.eval(a) {
            Ok(v) => v,
            Err(_) => f64::INFINITY,
        }
    }

    /// Central second difference of I at the stationary mean; step h.
    pub fn curvature_at_mean(&self, h: f64) -> Result<f64> {
        let plus = self.eval(self.mean + h)?;
        let minus = self.eval(self.mean - h)?;
        let center = self.eval(self.mean)?;
        Ok((plus - 2.0 * center + minus) / (h * h))
    }

    /// Smallest rate value over the closed window [lo, hi], using convexity:
    /// the infimum sits at the point of the window nearest the mean.
    pub fn window_infimum(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi < self.a_min || lo > self.a_max {
            return Err(Error::OutOfDomain {
                a: 0.5 * (lo + hi),
                a_min: self.a_min,
                a_max: self.a_max,
            });
        }
        let x = self.mean.clamp(lo.max(self.a_min), hi.min(self.a_max));
        self.eval(x)
    }
}

/// Per-n comparison row between exact finite-n tail rates and the rate
/// function.
#[derive(Debug, Clone, Serialize)]
pub struct TailCompareRow {
    pub n: usize,
    /// -(1/n) log P(S_n/n in [a-eps, a+eps]) from the exact law.
    pub empirical_rate: f64,
    /// inf of the rate function over the same window.
    pub rate_infimum: f64,
}

/// Compares exact interval probabilities against the rate-function infimum
/// over the window [a-eps, a+eps] for each provided distribution.
pub fn ldp_tail_compare(
    rate: &RateFunction,
    dists: &[crate::dist::ExactDistribution],
    a: f64,
    eps: f64,
) -> Result<Vec<TailCompareRow>> {
    let rate_infimum = rate.window_infimum(a - eps, a + eps)?;
    let mut rows = Vec::with_capacity(dists.len());
    for d in dists {
        let p = crate::dist::interval_prob(d, a, eps)?;
        if p <= 0.0 {
            return Err(Error::ZeroProbability {
                lo: a - eps,
                hi: a + eps,
                n: d.n,
            });
        }
        rows.push(TailCompareRow {
            n: d.n,
            empirical_rate: -p.ln() / d.n as f64,
            rate_infimum,
        });
    }
    Ok(rows)
}

/// A Markov measure on the block graph: row-stochastic transitions with
/// their stationary vector, the level-2 candidates of the variational
/// principle.
#[derive(Debug, Clone, Serialize)]
pub struct MarkovMeasureSpec {
    pub transition: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
}

impl MarkovMeasureSpec {
    pub fn new(block_sft: &Sft, transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        let n = block_sft.alphabet_size();
        if transition.len() != n || stationary.len() != n {
            return Err(Error::Validation(
                "candidate dimensions must match the block alphabet".into(),
            ));
        }
        for (u, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Validation("transition rows must be square".into()));
            }
            let mut sum = 0.0;
            for (v, &p) in row.iter().enumerate() {
                if p < 0.0 {
                    return Err(Error::Validation(
                        "transition probabilities must be nonnegative".into(),
                    ));
                }
                if p > 0.0 && !block_sft.is_allowed(u as u16, v as u16) {
                    return Err(Error::UnsupportedTransition { from: u, to: v });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::Validation(format!(
                    "transition row {u} sums to {sum}, not 1"
                )));
            }
        }
        let total: f64 = stationary.iter().sum();
        if (total - 1.0).abs() > 1e-10 || stationary.iter().any(|&p| p < 0.0) {
            return Err(Error::Validation(
                "stationary vector must be a probability vector".into(),
            ));
        }
        for v in 0..n {
            let flow: f64 = (0..n).map(|u| stationary[u] * transition[u][v]).sum();
            if (flow - stationary[v]).abs() > 1e-8 {
                return Err(Error::Validation(format!(
                    "vector is not stationary at state {v}"
                )));
            }
        }
        Ok(MarkovMeasureSpec {
            transition,
            stationary,
        })
    }

    pub fn from_chain(block_sft: &Sft, chain: &GibbsChain) -> Result<Self> {
        let n = chain.states();
        let mut transition = vec![vec![0.0; n]; n];
        for u in 0..n {
            for &(v, p) in chain.row(u) {
                transition[u][v] = p;
            }
        }
        MarkovMeasureSpec::new(block_sft, transition, chain.pi().to_vec())
    }

    /// Entropy rate -sum_u pi_u sum_v q_uv log q_uv.
    pub fn entropy_rate(&self) -> f64 {
        let mut h = 0.0;
        for (u, row) in self.transition.iter().enumerate() {
            for &p in row {
                if p > 0.0 {
                    h -= self.stationary[u] * p * p.ln();
                }
            }
        }
        h
    }

    /// Mean of a block observable under the measure.
    pub fn integrate(&self, block_sft: &Sft, f: &BlockFn) -> f64 {
        let succ = block_sft.successor_lists();
        let mut acc = 0.0;
        for (u, row) in self.transition.iter().enumerate() {
            if f.is_per_block() {
                acc += self.stationary[u] * f.value(u, 0);
            } else {
                for (v, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        let idx = succ[u]
                            .iter()
                            .position(|&w| w == v)
                            .expect("support checked at construction");
                        acc += self.stationary[u] * p * f.value(u, idx);
                    }
                }
            }
        }
        acc
    }
}

/// Level-2 rate of a Markov candidate: pressure(phi) minus its entropy rate
/// minus its mean of phi. Nonnegative, zero exactly at the equilibrium
/// chain.
pub fn level2_rate(
    block_sft: &Sft,
    phi: &BlockFn,
    rpf: &RpfData,
    candidate: &MarkovMeasureSpec,
) -> Result<f64> {
    if candidate.transition.len() != block_sft.alphabet_size() {
        return Err(Error::Validation(
            "candidate dimensions must match the block alphabet".into(),
        ));
    }
    Ok(rpf.pressure - candidate.entropy_rate() - candidate.integrate(block_sft, phi))
}

/// Level-1 rate by contraction: minimises the level-2 rate over Markov
/// measures with mean a, using the tilting parametrisation (the minimiser
/// of the constrained variational problem is the tilted Gibbs chain).
pub fn contract_rate(
    block_sft: &Sft,
    phi: &BlockFn,
    g: &BlockFn,
    a: f64,
    t_max: f64,
) -> Result<f64> {
    if !(t_max > 0.0) {
        return Err(Error::Validation("t_max must be positive".into()));
    }
    let a_min = tilted_mean(block_sft, phi, g, -t_max)?;
    let a_max = tilted_mean(block_sft, phi, g, t_max)?;
    if a < a_min || a > a_max {
        return Err(Error::OutOfDomain { a, a_min, a_max });
    }
    let (mut lo, mut hi) = (-t_max, t_max);
    while hi - lo > T_TOL {
        let mid = 0.5 * (lo + hi);
        if tilted_mean(block_sft, phi, g, mid)? < a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let (_, chain) = tilted_chain(block_sft, phi, g, t)?;
    let candidate = MarkovMeasureSpec::from_chain(block_sft, &chain)?;
    let base_tm = TransferMatrix::from_block_fn(block_sft, phi.clone());
    let base_rpf = rpf_solve(&base_tm)?;
    Ok(level2_rate(block_sft, phi, &base_rpf, &candidate)?.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::observable::{recode_to_blocks, LocallyConstantFn};
    use crate::spectral::transfer_matrix;

    const G_BAR: f64 = 0.7236067977499789;
    const SIGMA2_GOLDEN: f64 = 0.08944271909999159;

    fn golden_parts() -> (Sft, BlockFn, BlockFn) {
        let s = Sft::golden_mean();
        let phi = LocallyConstantFn::constant(&s, 0.0);
        let g = LocallyConstantFn::symbol_indicator(&s, 0);
        let (sys, recoded) = recode_to_blocks(&s, &[phi, g]).unwrap();
        let phi_bf = BlockFn::new(sys.block_sft(), &recoded[0]).unwrap();
        let g_bf = BlockFn::new(sys.block_sft(), &recoded[1]).unwrap();
        (sys.block_sft().clone(), phi_bf, g_bf)
    }

    fn full_shift_parts() -> (Sft, BlockFn, BlockFn) {
        let s = Sft::full_shift(2);
        let phi = LocallyConstantFn::constant(&s, 0.0);
        let g = LocallyConstantFn::symbol_indicator(&s, 0);
        let (sys, recoded) = recode_to_blocks(&s, &[phi, g]).unwrap();
        let phi_bf = BlockFn::new(sys.block_sft(), &recoded[0]).unwrap();
        let g_bf = BlockFn::new(sys.block_sft(), &recoded[1]).unwrap();
        (sys.block_sft().clone(), phi_bf, g_bf)
    }

    #[test]
    fn golden_rate_function_frozen_values() {
        let (sft, phi, g) = golden_parts();
        let rate = build_rate_function(&sft, &phi, &g, 4.0, 65).unwrap();
        assert!((rate.mean - G_BAR).abs() < 1e-10);
        assert!((rate.a_min - 0.53375663).abs() < 1e-7, "a_min={}", rate.a_min);
        assert!((rate.a_max - 0.98263301).abs() < 1e-7, "a_max={}", rate.a_max);
        assert_eq!(rate.eval(rate.mean).unwrap(), 0.0);
        assert!(rate.eval(G_BAR).unwrap() < 1e-10);
        let cases = [
            (0.75, 0.003826198838494, 0.28768208),
            (0.80, 0.031343709364557, 0.81093022),
            (0.89, 0.148326820824, f64::NAN),
            (0.90, 0.167262938800874, 1.96165849),
            (0.91, 0.187589668846, f64::NAN),
        ];
        for (a, expect_i, expect_t) in cases {
            let (i, t) = rate.eval_with_tilt(a).unwrap();
            assert!((i - expect_i).abs() < 1e-9, "I({a})={i}");
            if expect_t.is_finite() {
                assert!((t - expect_t).abs() < 1e-6, "t*({a})={t}");
            }
        }
        // below the achievable window for this tilt range
        assert!(matches!(
            rate.eval(0.5),
            Err(Error::OutOfDomain { .. })
        ));
        assert_eq!(rate.eval_extended(0.5), f64::INFINITY);
        // positivity away from the mean
        assert!(rate.eval(0.8).unwrap() > 0.0);
    }

    #[test]
    fn golden_quadratic_expansion() {
        let (sft, phi, g) = golden_parts();
        let rate = build_rate_function(&sft, &phi, &g, 4.0, 65).unwrap();
        let curvature = rate.curvature_at_mean(1e-2).unwrap();
        let product = curvature * SIGMA2_GOLDEN;
        assert!((product - 1.0).abs() <= 1e-3, "I''(mean)*sigma^2={product}");
        assert!((product - 1.00033358).abs() < 1e-6, "product={product}");
    }

    #[test]
    fn golden_cumulant_matches_closed_form() {
        let (sft, phi, g) = golden_parts();
        let rate = build_rate_function(&sft, &phi, &g, 4.0, 65).unwrap();
        let phi_gm = (1.0 + 5f64.sqrt()) / 2.0;
        for row in &rate.cumulant {
            let et = row.t.exp();
            let lam = (et + (et * et + 4.0 * et).sqrt()) / 2.0;
            let expect = lam.ln() - phi_gm.ln();
            assert!(
                (row.lambda - expect).abs() < 1e-10,
                "t={}: {} vs {}",
                row.t,
                row.lambda,
                expect
            );
        }
        // analytic slope vs central difference of the cumulant itself
        for t in [-2.0, 0.7, 3.0] {
            let h = 1e-4;
            let slope = tilted_mean(&sft, &phi, &g, t).unwrap();
            let fd = (rate.lambda_at(t + h).unwrap() - rate.lambda_at(t - h).unwrap()) / (2.0 * h);
            assert!((slope - fd).abs() < 1e-6, "t={t}: {slope} vs {fd}");
        }
    }

    #[test]
    fn cumulant_derivative_invariants() {
        let (sft, phi, g) = golden_parts();
        let rate = build_rate_function(&sft, &phi, &g, 4.0, 65).unwrap();
        // slope at t=0 is the stationary mean
        let mid = rate.cumulant.len() / 2;
        assert_eq!(rate.cumulant[mid].t, 0.0);
        assert!((rate.cumulant[mid].slope - G_BAR).abs() < 1e-8);
        // second derivative at zero is the asymptotic variance
        let h = 1e-3;
        let d2 = (tilted_mean(&sft, &phi, &g, h).unwrap()
            - tilted_mean(&sft, &phi, &g, -h).unwrap())
            / (2.0 * h);
        assert!((d2 - SIGMA2_GOLDEN).abs() < 1e-4, "lambda''(0)={d2}");
        // strictly increasing derivative across the grid
        for w in rate.cumulant.windows(2) {
            assert!(w[1].slope > w[0].slope);
        }
        // Legendre duality round trip
        for a in [0.6, 0.7, G_BAR, 0.8, 0.9, 0.95] {
            let (i, t) = rate.eval_with_tilt(a).unwrap();
            let lam = rate.lambda_at(t).unwrap();
            assert!((lam + i - t * a).abs() < 1e-8, "duality gap at a={a}");
        }
        // linear growth near the upper boundary
        let mut c_fit = f64::INFINITY;
        for a in [0.96, 0.97, 0.98] {
            c_fit = c_fit.min(rate.eval(a).unwrap() / (a - rate.mean));
        }
        assert!(c_fit > 0.0);
    }

    #[test]
    fn full_shift_closed_form() {
        let (sft, phi, g) = full_shift_parts();
        let rate = build_rate_function(&sft, &phi, &g, 4.0, 65).unwrap();
        let closed = |a: f64| 2f64.ln() + a * a.ln() + (1.0 - a) * (1.0 - a).ln();
        let frozen = [
            (0.6, 0.020135513550688822),
            (0.75, 0.13081203594113694),
            (0.9, 0.36806420716849708),
        ];
        for (a, expect) in frozen {
            let i = rate.eval(a).unwrap();
            assert!((i - closed(a)).abs() < 1e-6, "I({a})={i}");
            assert!((i - expect).abs() < 1e-9, "I({a})={i}");
        }
        // domain endpoints are the sigmoid of the tilt bounds
        let sigmoid = |t: f64| 1.0 / (1.0 + (-t).exp());
        assert!((rate.a_min - sigmoid(-4.0)).abs() < 1e-10);
        assert!((rate.a_max - sigmoid(4.0)).abs() < 1e-10);
        // a=1 needs infinite tilt: out of the achievable window
        assert!(matches!(rate.eval(1.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn tail_compare_golden() {
        let (sft, phi, g) = golden_parts();
        let rate = build_rate_function(&sft, &phi, &g, 4.0, 65).unwrap();
        let tm = TransferMatrix::from_block_fn(&sft, phi.clone());
        let rpf = rpf_solve(&tm).unwrap();
        let chain = gibbs_chain(&tm, &rpf);
        let lattice = crate::dist::lattice_check(&g, crate::dist::DEFAULT_Q_MAX).unwrap();
        let dists: Vec<_> = [100usize, 200, 400, 800]
            .iter()
            .map(|&n| crate::dist::exact_dist(&chain, &lattice, n).unwrap())
            .collect();
        let rows = ldp_tail_compare(&rate, &dists, 0.9, 0.01).unwrap();
        let last = rows.last().unwrap();
        assert_eq!(last.n, 800);
        assert!(
            (last.empirical_rate - last.rate_infimum).abs() <= 0.05,
            "gap at n=800: {} vs {}",
            last.empirical_rate,
            last.rate_infimum
        );
        // gaps shrink with n
        let gap = |r: &TailCompareRow| (r.empirical_rate - r.rate_infimum).abs();
        assert!(gap(&rows[3]) < gap(&rows[0]));
        // window at the mean: rates collapse to zero
        let rows = ldp_tail_compare(&rate, &dists, G_BAR, 0.01).unwrap();
        assert!(rows.last().unwrap().empirical_rate < 0.01);
        assert_eq!(rows.last().unwrap().rate_infimum, 0.0);
    }

    #[test]
    fn tail_compare_full_shift_stirling() {
        let (sft, phi, g) = full_shift_parts();
        let rate = build_rate_function(&sft, &phi, &g, 4.0, 65).unwrap();
        let tm = TransferMatrix::from_block_fn(&sft, phi.clone());
        let rpf = rpf_solve(&tm).unwrap();
        let chain = gibbs_chain(&tm, &rpf);
        let lattice = crate::dist::lattice_check(&g, crate::dist::DEFAULT_Q_MAX).unwrap();
        let d800 = crate::dist::exact_dist(&chain, &lattice, 800).unwrap();
        let rows = ldp_tail_compare(&rate, &[d800], 0.75, 0.01).unwrap();
        assert!(
            (rows[0].empirical_rate - rows[0].rate_infimum).abs() <= 0.02,
            "{} vs {}",
            rows[0].empirical_rate,
            rows[0].rate_infimum
        );
    }

    #[test]
    fn zero_probability_window() {
        let (sft, phi, g) = golden_parts();
        let rate = build_rate_function(&sft, &phi, &g, 8.0, 65).unwrap();
        let tm = TransferMatrix::from_block_fn(&sft, phi.clone());
        let rpf = rpf_solve(&tm).unwrap();
        let chain = gibbs_chain(&tm, &rpf);
        let lattice = crate::dist::lattice_check(&g, crate::dist::DEFAULT_Q_MAX).unwrap();
        // n=50 window [48.35, 48.75] sits strictly between lattice points:
        // no atoms, zero mass
        let d = crate::dist::exact_dist(&chain, &lattice, 50).unwrap();
        assert!(matches!(
            ldp_tail_compare(&rate, &[d], 0.971, 0.004),
            Err(Error::ZeroProbability { .. })
        ));
    }

    #[test]
    fn level2_zero_at_equilibrium() {
        let (sft, phi, _) = golden_parts();
        let tm = TransferMatrix::from_block_fn(&sft, phi.clone());
        let rpf = rpf_solve(&tm).unwrap();
        let chain = gibbs_chain(&tm, &rpf);
        let spec = MarkovMeasureSpec::from_chain(&sft, &chain).unwrap();
        let r = level2_rate(&sft, &phi, &rpf, &spec).unwrap();
        assert!(r.abs() <= 1e-10, "level2={r}");
        // nonzero per-edge potential, three-state fixture
        let s = fixtures::three_state_sft();
        let phi3 = fixtures::three_state_phi(&s);
        let (sys, recoded) = recode_to_blocks(&s, &[phi3]).unwrap();
        let tm = transfer_matrix(&sys, &recoded[0]).unwrap();
        let rpf = rpf_solve(&tm).unwrap();
        let chain = gibbs_chain(&tm, &rpf);
        let phi_bf = BlockFn::new(sys.block_sft(), &recoded[0]).unwrap();
        let spec = MarkovMeasureSpec::from_chain(sys.block_sft(), &chain).unwrap();
        let r = level2_rate(sys.block_sft(), &phi_bf, &rpf, &spec).unwrap();
        assert!(r.abs() <= 1e-10, "three-state level2={r}");
    }

    #[test]
    fn level2_bernoulli_candidate() {
        let (sft, phi, _) = full_shift_parts();
        let tm = TransferMatrix::from_block_fn(&sft, phi.clone());
        let rpf = rpf_solve(&tm).unwrap();
        let p = 0.75;
        let spec = MarkovMeasureSpec::new(
            &sft,
            vec![vec![p, 1.0 - p], vec![p, 1.0 - p]],
            vec![p, 1.0 - p],
        )
        .unwrap();
        let r = level2_rate(&sft, &phi, &rpf, &spec).unwrap();
        let expect = 2f64.ln() + p * p.ln() + (1.0 - p) * (1.0 - p).ln();
        assert!((r - expect).abs() < 1e-12, "r={r}");
        assert!((r - 0.13081203594113694).abs() < 1e-10);
        assert!(r >= -1e-10);
    }

    #[test]
    fn candidate_validation() {
        let (sft, _, _) = golden_parts();
        // transition through the forbidden edge 1 -> 1
        let bad = MarkovMeasureSpec::new(
            &sft,
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![0.5, 0.5],
        );
        assert!(matches!(
            bad,
            Err(Error::UnsupportedTransition { from: 1, to: 1 })
        ));
        // legal support but wrong stationary vector
        let bad = MarkovMeasureSpec::new(
            &sft,
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            vec![0.5, 0.5],
        );
        assert!(matches!(bad, Err(Error::Validation(_))));
        let (sft, phi, g) = golden_parts();
        assert!(build_rate_function(&sft, &phi, &g, 0.0, 65).is_err());
        assert!(build_rate_function(&sft, &phi, &g, 4.0, 32).is_err());
    }

    #[test]
    fn contraction_equals_legendre() {
        let (sft, phi, g) = golden_parts();
        let rate = build_rate_function(&sft, &phi, &g, 4.0, 65).unwrap();
        for a in [0.75, 0.9] {
            let c = contract_rate(&sft, &phi, &g, a, 4.0).unwrap();
            let i = rate.eval(a).unwrap();
            assert!((c - i).abs() <= 1e-4, "a={a}: contract={c} legendre={i}");
            assert!((c - i).abs() <= 1e-9, "a={a}: routes should agree tightly");
        }
        let c = contract_rate(&sft, &phi, &g, G_BAR, 4.0).unwrap();
        assert!(c.abs() <= 1e-10);
        // full shift: minimiser at a=0.75 is the Bernoulli(0.75) measure
        let (sft, phi, g) = full_shift_parts();
        let c = contract_rate(&sft, &phi, &g, 0.75, 4.0).unwrap();
        assert!((c - 0.13081203594113694).abs() < 1e-9, "c={c}");
        // three-state fixture with per-edge data: contraction still matches
        let s = fixtures::three_state_sft();
        let phi3 = fixtures::three_state_phi(&s);
        let g3 = fixtures::three_state_g(&s);
        let (sys, recoded) = recode_to_blocks(&s, &[phi3, g3]).unwrap();
        let phi_bf = BlockFn::new(sys.block_sft(), &recoded[0]).unwrap();
        let g_bf = BlockFn::new(sys.block_sft(), &recoded[1]).unwrap();
        let rate = build_rate_function(sys.block_sft(), &phi_bf, &g_bf, 3.0, 65).unwrap();
        let a = rate.mean + 0.1;
        let c = contract_rate(sys.block_sft(), &phi_bf, &g_bf, a, 3.0).unwrap();
        let i = rate.eval(a).unwrap();
        assert!((c - i).abs() <= 1e-8, "three-state: {c} vs {i}");
        assert!(matches!(
            contract_rate(&sft, &phi, &g, 0.999, 4.0),
            Err(Error::OutOfDomain { .. })
        ));
    }
}
