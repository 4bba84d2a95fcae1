//! Seeded Monte Carlo over Gibbs chains: orbit sampling with stationary
//! start, empirical central-limit checks, a law-of-the-iterated-logarithm
//! diagnostic, and deviation-frequency experiments — every run is
//! bit-reproducible from (generator id, root seed).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::correlation::chain_mean;
use crate::error::{Error, Result};
use crate::observable::BlockFn;
use crate::spectral::GibbsChain;

/// Identity of the sampling scheme embedded in every report: ChaCha8
/// streams keyed per chain by a splitmix64 hash of the root seed.
pub const GENERATOR_ID: &str = "chacha8/splitmix64-per-chain-v1";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-chain seed: chain k draws from a ChaCha8 stream seeded with
/// splitmix64(root_seed + (k+1) * 0x9E3779B97F4A7C15). Distinct chains get
/// distinct, independent-quality streams; the whole experiment is
/// reproducible from the root seed alone.
pub fn split_seed(root_seed: u64, k: u64) -> u64 {
    splitmix64(root_seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Configuration of a multi-chain sampling experiment.
#[derive(Debug, Clone, Serialize)]
pub struct SampleConfig {
    pub root_seed: u64,
    pub chains: usize,
    pub length: usize,
    /// Steps advanced before recording. Default 0: the initial state is
    /// drawn from the exact stationary vector, so no burn-in is needed.
    pub burn_in: usize,
}

impl SampleConfig {
    pub fn new(root_seed: u64, chains: usize, length: usize) -> Result<SampleConfig> {
        if chains == 0 || length == 0 {
            return Err(Error::Validation(
                "sampling needs at least one chain and one step".into(),
            ));
        }
        Ok(SampleConfig {
            root_seed,
            chains,
            length,
            burn_in: 0,
        })
    }
}

fn draw_index(rng: &mut ChaCha8Rng, cumulative: impl Iterator<Item = f64>, len: usize) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in cumulative.enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    len - 1
}

fn draw_initial(chain: &GibbsChain, rng: &mut ChaCha8Rng) -> usize {
    draw_index(rng, chain.pi().iter().copied(), chain.states())
}

fn draw_step(chain: &GibbsChain, u: usize, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let row = chain.row(u);
    let idx = draw_index(rng, row.iter().map(|&(_, p)| p), row.len());
    (idx, row[idx].0)
}

/// One admissible state sequence of length n, initial state drawn from the
/// stationary vector; fully determined by the seed.
pub fn sample_orbit(chain: &GibbsChain, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut orbit = Vec::with_capacity(n);
    let mut u = draw_initial(chain, &mut rng);
    orbit.push(u);
    for _ in 1..n {
        let (_, v) = draw_step(chain, u, &mut rng);
        orbit.push(v);
        u = v;
    }
    orbit
}

/// Birkhoff sum S_n g along a freshly sampled orbit; consumes the RNG
/// stream exactly as `sample_orbit` of the matching length would.
fn sample_birkhoff(chain: &GibbsChain, g: &BlockFn, n: usize, burn_in: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = draw_initial(chain, &mut rng);
    for _ in 0..burn_in {
        u = draw_step(chain, u, &mut rng).1;
    }
    let mut acc = 0.0;
    if g.is_per_block() {
        acc += g.value(u, 0);
        for _ in 1..n {
            let (_, v) = draw_step(chain, u, &mut rng);
            acc += g.value(v, 0);
            u = v;
        }
    } else {
        for _ in 0..n {
            let (idx, v) = draw_step(chain, u, &mut rng);
            acc += g.value(u, idx);
            u = v;
        }
    }
    acc
}

/// Empirical central-limit experiment: K standardised Birkhoff sums and
/// their sup-distance from the standard normal CDF.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalCltReport {
    /// Z_k = (S_n g - n m)/(sigma sqrt n), in chain order.
    pub z_scores: Vec<f64>,
    pub ks_stat: f64,
    pub mean: f64,
    pub var: f64,
    pub root_seed: u64,
    pub generator: String,
}

/// Samples K chains of length n and standardises their Birkhoff sums with
/// the provided mean rate and asymptotic sigma.
pub fn empirical_clt(
    chain: &GibbsChain,
    g: &BlockFn,
    cfg: &SampleConfig,
    mean_rate: f64,
    sigma: f64,
) -> Result<EmpiricalCltReport> {
    if !(sigma > 0.0) {
        return Err(Error::DegenerateSigma { sigma });
    }
    let n = cfg.length;
    let scale = sigma * (n as f64).sqrt();
    let center = n as f64 * mean_rate;
    let z_scores: Vec<f64> = (0..cfg.chains)
        .into_par_iter()
        .map(|k| {
            let s = sample_birkhoff(chain, g, n, cfg.burn_in, split_seed(cfg.root_seed, k as u64));
            (s - center) / scale
        })
        .collect();
    let ks_stat = empirical_ks(&z_scores);
    let k = z_scores.len() as f64;
    let mean = z_scores.iter().sum::<f64>() / k;
    let var = if z_scores.len() > 1 {
        z_scores.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(EmpiricalCltReport {
        z_scores,
        ks_stat,
        mean,
        var,
        root_seed: cfg.root_seed,
        generator: GENERATOR_ID.to_string(),
    })
}

/// Sup-distance between the empirical CDF of the values and the standard
/// normal, evaluated at both one-sided limits of each jump.
pub fn empirical_ks(values: &[f64]) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite z-scores"));
    let k = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, z) in sorted.iter().enumerate() {
        let phi = normal.cdf(*z);
        d = d.max(phi - i as f64 / k);
        d = d.max((i + 1) as f64 / k - phi);
    }
    d.min(1.0)
}

/// Running law-of-the-iterated-logarithm ratio along one orbit:
/// max over 100 <= k <= n of |S_k g - k m| / (sigma sqrt(2 k log log k)).
/// Reported as a diagnostic, never asserted against.
pub fn lil_diagnostic(
    chain: &GibbsChain,
    g: &BlockFn,
    n: usize,
    seed: u64,
    mean_rate: f64,
    sigma: f64,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::DegenerateSigma { sigma });
    }
    if n < 100 {
        return Err(Error::Validation(
            "the iterated-logarithm window needs n >= 100".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = draw_initial(chain, &mut rng);
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    let per_block = g.is_per_block();
    if per_block {
        acc += g.value(u, 0);
    }
    for k in 1..=n {
        // after this step acc holds S_k (k per-block values or k edges)
        if per_block {
            if k > 1 {
                let (_, v) = draw_step(chain, u, &mut rng);
                acc += g.value(v, 0);
                u = v;
            }
        } else {
            let (idx, v) = draw_step(chain, u, &mut rng);
            acc += g.value(u, idx);
            u = v;
        }
        if k >= 100 {
            let kf = k as f64;
            let denom = sigma * (2.0 * kf * kf.ln().ln()).sqrt();
            worst = worst.max((acc - kf * mean_rate).abs() / denom);
        }
    }
    Ok(worst)
}

/// One row of a deviation-frequency experiment.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationRow {
    pub t: f64,
    /// Empirical P(|S_n g - n mean| >= t sqrt n) over K chains.
    pub frequency: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub rows: Vec<DeviationRow>,
    /// Largest c with every observed frequency below 2 exp(-c t^2);
    /// frequencies are floored at 1/(2K) when fitting so c stays finite.
    pub fitted_c: f64,
    pub n: usize,
    pub chains: usize,
    pub root_seed: u64,
    pub generator: String,
}

/// Empirical tail frequencies P(|S_n g - n mean| >= t sqrt n) for each t,
/// with a fitted sub-Gaussian envelope constant. The mean rate is the
/// exact stationary mean of g.
pub fn deviation_frequencies(
    chain: &GibbsChain,
    g: &BlockFn,
    n: usize,
    t_list: &[f64],
    k_chains: usize,
    root_seed: u64,
) -> Result<DeviationReport> {
    if k_chains < 1000 {
        return Err(Error::Validation(
            "deviation frequencies need at least 1000 chains".into(),
        ));
    }
    if n == 0 {
        return Err(Error::Validation("n must be >= 1".into()));
    }
    let mean_rate = chain_mean(chain, g);
    let center = n as f64 * mean_rate;
    let sqrt_n = (n as f64).sqrt();
    let deviations: Vec<f64> = (0..k_chains)
        .into_par_iter()
        .map(|k| (sample_birkhoff(chain, g, n, 0, split_seed(root_seed, k as u64)) - center).abs())
        .collect();
    let kf = k_chains as f64;
    let mut rows = Vec::with_capacity(t_list.len());
    let mut fitted_c = f64::INFINITY;
    for &t in t_list {
        let threshold = t * sqrt_n - 1e-12;
        let count = deviations.iter().filter(|&&d| d >= threshold).count();
        let frequency = count as f64 / kf;
        if t > 0.0 {
            let floored = frequency.max(1.0 / (2.0 * kf));
            fitted_c = fitted_c.min(-(floored / 2.0).ln() / (t * t));
        }
        rows.push(DeviationRow { t, frequency });
    }
    if !fitted_c.is_finite() {
        // no positive t in the list: any positive constant works
        fitted_c = 1.0;
    }
    Ok(DeviationReport {
        rows,
        fitted_c,
        n,
        chains: k_chains,
        root_seed,
        generator: GENERATOR_ID.to_string(),
    })
}
