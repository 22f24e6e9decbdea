//! Discrete power-law distribution: evaluation, fitting and synthetic data.
//!
//! The distribution is `p(x) = x^-beta / zeta(beta, x_min)` for integer
//! `x >= x_min`, where `zeta` is the Hurwitz zeta function.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LinkGraph, NodeId};
use crate::rng::stream_rng;

/// `B_2j / (2j)!` for j = 1..=10.
const EM_COEFFS: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

const ZETA_REL_TOL: f64 = 1e-12;

/// Values of the sampler's support whose CCDF falls below this are cut off.
const SAMPLER_TAIL_CUTOFF: f64 = 1e-12;
const SAMPLER_TABLE_LEN: usize = 1 << 14;
/// Largest integer exactly representable in f64.
const SAMPLER_MAX_VALUE: f64 = 9_007_199_254_740_992.0;

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta must be > 1, got {beta}")))
    }
}

fn check_x_min(x_min: usize) -> Result<()> {
    if x_min >= 1 {
        Ok(())
    } else {
        Err(Error::Domain("x_min must be >= 1".into()))
    }
}

/// Hurwitz zeta `sum_{n>=0} (n + x_min)^-beta`.
///
/// A direct head sum is followed by the Euler-Maclaurin tail; the head is
/// lengthened until the last correction term is below `1e-12` relative.
pub fn zeta(beta: f64, x_min: usize) -> Result<f64> {
    check_beta(beta)?;
    check_x_min(x_min)?;
    Ok(hurwitz_zeta(beta, x_min as f64))
}

pub(crate) fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    let mut head_len = 16usize;
    loop {
        let (value, last_term) = hurwitz_zeta_em(s, q, head_len);
        if last_term.abs() <= ZETA_REL_TOL * value || head_len >= 1 << 20 {
            return value;
        }
        head_len *= 4;
    }
}

/// Returns the estimate and the magnitude of the last correction applied.
fn hurwitz_zeta_em(s: f64, q: f64, head_len: usize) -> (f64, f64) {
    let mut head = 0.0;
    // Summing smallest terms first.
    for k in (0..head_len).rev() {
        head += (k as f64 + q).powf(-s);
    }
    let a = head_len as f64 + q;
    let a_pow = a.powf(-s);
    let mut tail = a * a_pow / (s - 1.0) + 0.5 * a_pow;

    // Term j: c_j * s(s+1)...(s+2j-2) * a^(-s-2j+1)
    let mut rising = s;
    let mut a_factor = a_pow / a;
    let mut last = f64::INFINITY;
    for (j, c) in EM_COEFFS.iter().enumerate() {
        if j > 0 {
            let m = (2 * j) as f64;
            rising *= (s + m - 1.0) * (s + m);
            a_factor /= a * a;
        }
        let term = c * rising * a_factor;
        tail += term;
        last = term;
        if term.abs() < 1e-17 * (head + tail) {
            break;
        }
    }
    (head + tail, last)
}

/// Probability of `x` under the discrete power law.
pub fn pmf(x: usize, beta: f64, x_min: usize) -> Result<f64> {
    check_beta(beta)?;
    check_x_min(x_min)?;
    if x < x_min {
        return Err(Error::Domain(format!("x = {x} is below x_min = {x_min}")));
    }
    Ok((x as f64).powf(-beta) / hurwitz_zeta(beta, x_min as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Closed-form approximate MLE with the `x_min - 1/2` continuity shift.
    #[default]
    Approx,
    /// Exact discrete MLE, solved numerically.
    Discrete,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Approx => "approx",
            Estimator::Discrete => "discrete",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approx" => Ok(Estimator::Approx),
            "discrete" => Ok(Estimator::Discrete),
            other => Err(Error::Argument(format!(
                "unknown estimator {other:?} (expected approx or discrete)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub beta_hat: f64,
    pub x_min: usize,
    /// Samples at or above `x_min` that entered the estimate.
    pub n_samples: usize,
    /// `(beta_hat - 1) / sqrt(n_samples)`.
    pub std_error: f64,
    pub estimator: Estimator,
}

impl PowerLawFit {
    fn new(beta_hat: f64, x_min: usize, n: usize, estimator: Estimator) -> Self {
        PowerLawFit {
            beta_hat,
            x_min,
            n_samples: n,
            std_error: (beta_hat - 1.0) / (n as f64).sqrt(),
            estimator,
        }
    }
}

fn usable(samples: &[usize], x_min: usize) -> Result<Vec<f64>> {
    check_x_min(x_min)?;
    let kept: Vec<f64> = samples
        .iter()
        .filter(|&&x| x >= x_min)
        .map(|&x| x as f64)
        .collect();
    if kept.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} sample(s) >= x_min = {x_min}, need at least 2",
            kept.len()
        )));
    }
    Ok(kept)
}

/// Approximate maximum-likelihood exponent:
/// `1 + n / sum(ln(x_i / (x_min - 1/2)))` over samples `x_i >= x_min`.
pub fn fit_beta(samples: &[usize], x_min: usize) -> Result<PowerLawFit> {
    let kept = usable(samples, x_min)?;
    let shift = x_min as f64 - 0.5;
    let log_sum: f64 = kept.iter().map(|&x| (x / shift).ln()).sum();
    let n = kept.len();
    Ok(PowerLawFit::new(
        1.0 + n as f64 / log_sum,
        x_min,
        n,
        Estimator::Approx,
    ))
}

/// Exact discrete maximum-likelihood exponent.
///
/// Solves `d/dbeta ln zeta(beta, x_min) = -mean(ln x_i)` by bisection; the left
/// side is increasing in `beta`, so the root is unique when it exists. Fails
/// when every sample equals `x_min` (the likelihood grows without bound).
pub fn fit_beta_discrete(samples: &[usize], x_min: usize) -> Result<PowerLawFit> {
    let kept = usable(samples, x_min)?;
    let n = kept.len();
    let mean_ln = kept.iter().map(|x| x.ln()).sum::<f64>() / n as f64;
    let q = x_min as f64;
    if mean_ln - q.ln() < 1e-12 {
        return Err(Error::InsufficientData(
            "all samples equal x_min; discrete likelihood has no finite maximum".into(),
        ));
    }

    // Score of the mean log-likelihood; positive below the root.
    let score = |beta: f64| -> f64 {
        let h = 1e-5 * (beta - 1.0).min(1.0);
        let dlog = (hurwitz_zeta(beta + h, q).ln() - hurwitz_zeta(beta - h, q).ln()) / (2.0 * h);
        -mean_ln - dlog
    };

    let mut lo = 1.0 + 1e-6;
    let mut hi = 2.0;
    while score(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::InsufficientData(
                "discrete MLE exponent diverges for these samples".into(),
            ));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(PowerLawFit::new(
        0.5 * (lo + hi),
        x_min,
        n,
        Estimator::Discrete,
    ))
}

pub fn fit(samples: &[usize], x_min: usize, estimator: Estimator) -> Result<PowerLawFit> {
    match estimator {
        Estimator::Approx => fit_beta(samples, x_min),
        Estimator::Discrete => fit_beta_discrete(samples, x_min),
    }
}

/// Inverse-CDF sampler over the discrete power law.
///
/// The CCDF `P(X >= x)` is tabulated for the first values of the support and
/// evaluated through the zeta function beyond the table.
#[derive(Debug, Clone)]
pub struct PowerLawSampler {
    beta: f64,
    x_min: usize,
    norm: f64,
    /// `ccdf[i] = P(X >= x_min + i)`, strictly decreasing from 1.
    ccdf: Vec<f64>,
}

impl PowerLawSampler {
    pub fn new(beta: f64, x_min: usize) -> Result<Self> {
        check_beta(beta)?;
        check_x_min(x_min)?;
        let q = x_min as f64;
        let len = SAMPLER_TABLE_LEN;
        // Accumulate from the far end so small terms are added first.
        let mut sums = vec![0.0; len];
        let mut acc = hurwitz_zeta(beta, q + len as f64);
        for i in (0..len).rev() {
            acc += (q + i as f64).powf(-beta);
            sums[i] = acc;
        }
        let norm = sums[0];
        let mut ccdf: Vec<f64> = sums.into_iter().map(|s| s / norm).collect();
        if let Some(cut) = ccdf.iter().position(|&c| c < SAMPLER_TAIL_CUTOFF) {
            ccdf.truncate(cut);
        }
        Ok(PowerLawSampler {
            beta,
            x_min,
            norm,
            ccdf,
        })
    }

    fn ccdf_at(&self, x: f64) -> f64 {
        hurwitz_zeta(self.beta, x) / self.norm
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        // u in (0, 1]; result is the largest x with P(X >= x) >= u.
        let u = (1.0 - rng.random::<f64>()).max(SAMPLER_TAIL_CUTOFF);
        let above = self.ccdf.partition_point(|&c| c >= u);
        if above < self.ccdf.len() {
            return self.x_min + above - 1;
        }
        self.sample_tail(u)
    }

    fn sample_tail(&self, u: f64) -> usize {
        let mut lo = (self.x_min + self.ccdf.len() - 1) as f64;
        let mut hi = lo * 2.0;
        while hi < SAMPLER_MAX_VALUE && self.ccdf_at(hi) >= u {
            lo = hi;
            hi *= 2.0;
        }
        if hi >= SAMPLER_MAX_VALUE {
            hi = SAMPLER_MAX_VALUE;
            if self.ccdf_at(hi) >= u {
                return hi as usize;
            }
        }
        // invariant: ccdf(lo) >= u > ccdf(hi)
        while hi - lo > 1.0 {
            let mid = (0.5 * (lo + hi)).floor();
            if self.ccdf_at(mid) >= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo as usize
    }
}

/// `n` i.i.d. draws, deterministic per seed.
pub fn sample_power_law(beta: f64, x_min: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    let sampler = PowerLawSampler::new(beta, x_min)?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    pub nodes: usize,
    pub beta_in: f64,
    pub beta_out: f64,
    pub x_min: usize,
    /// Fraction of nodes given no out-links at all, like uncrawled or
    /// link-free pages. Their out-stubs are removed before trimming.
    pub dangling: f64,
}

/// Directed configuration model with the same exponent for in and out degree.
pub fn generate_graph(n: usize, beta: f64, x_min: usize, seed: u64) -> Result<LinkGraph> {
    generate_graph_with(
        GraphParams {
            nodes: n,
            beta_in: beta,
            beta_out: beta,
            x_min,
            dangling: 0.0,
        },
        seed,
    )
}

/// Directed configuration model.
///
/// Out- and in-degree sequences are drawn independently (capped at `n - 1`),
/// a `dangling` fraction of nodes loses its out-degree,
/// the longer stub list is trimmed at random to the length of the shorter,
/// and out-stubs are paired with shuffled in-stubs. Self-loops and repeated
/// pairs are dropped by canonicalization.
pub fn generate_graph_with(params: GraphParams, seed: u64) -> Result<LinkGraph> {
    let n = params.nodes;
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 nodes, got {n}")));
    }
    if n > NodeId::MAX as usize {
        return Err(Error::Argument(format!("node count {n} exceeds id space")));
    }
    if !(0.0..1.0).contains(&params.dangling) {
        return Err(Error::Argument(format!(
            "dangling fraction must be in [0, 1), got {}",
            params.dangling
        )));
    }
    let cap = n - 1;
    let degrees = |beta: f64, stream: u64| -> Result<Vec<usize>> {
        let sampler = PowerLawSampler::new(beta, params.x_min)?;
        let mut rng = stream_rng(seed, stream);
        Ok((0..n).map(|_| sampler.sample(&mut rng).min(cap)).collect())
    };
    let mut out_deg = degrees(params.beta_out, 1)?;
    if params.dangling > 0.0 {
        let mut rng = stream_rng(seed, 5);
        for d in &mut out_deg {
            if rng.random_bool(params.dangling) {
                *d = 0;
            }
        }
    }
    let in_deg = degrees(params.beta_in, 2)?;

    let stubs = |deg: &[usize]| -> Vec<NodeId> {
        deg.iter()
            .enumerate()
            .flat_map(|(v, &d)| std::iter::repeat_n(v as NodeId, d))
            .collect()
    };
    let mut out_stubs = stubs(&out_deg);
    let mut in_stubs = stubs(&in_deg);

    let mut trim_rng = stream_rng(seed, 3);
    let target = out_stubs.len().min(in_stubs.len());
    for list in [&mut out_stubs, &mut in_stubs] {
        if list.len() > target {
            list.shuffle(&mut trim_rng);
            list.truncate(target);
            list.sort_unstable();
        }
    }
    in_stubs.shuffle(&mut stream_rng(seed, 4));

    let load = LinkGraph::from_edges(out_stubs.into_iter().zip(in_stubs), Some(n))?;
    Ok(load.graph)
}
