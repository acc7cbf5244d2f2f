//! Monte Carlo validation of spectral injectivity under the Gaussian
//! random-wave surrogate.
//!
//! Eigenvector coordinates are modeled as i.i.d. standard Gaussians per
//! node; the node feature is the unsigned quadratic map (squares and
//! absolute cross products) used by the positional encoding. The checks
//! are the testable content of the small-ball injectivity bound: collision
//! probabilities shrink with the spectral dimension, and exhaustive minimum
//! separations stay strictly positive.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features;
use crate::identify::derive_seed;

/// Per-node i.i.d. Gaussian surrogate for the first M eigenvector
/// coordinates.
#[derive(Debug, Clone)]
pub struct WaveEnsemble {
    n: usize,
    m: usize,
    seed: u64,
    /// Row-major `n x m`.
    values: Vec<f64>,
}

impl WaveEnsemble {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Surrogate coordinate vector of node `v`.
    pub fn g(&self, v: usize) -> &[f64] {
        &self.values[v * self.m..(v + 1) * self.m]
    }
}

/// Draws `n` nodes of `m` i.i.d. standard Gaussian coordinates each.
pub fn sample_ensemble(n: usize, m: usize, seed: u64) -> Result<WaveEnsemble> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("ensemble needs n >= 1 and M >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * m).map(|_| rng.sample(StandardNormal)).collect();
    Ok(WaveEnsemble { n, m, seed, values })
}

/// Unsigned quadratic features of an ensemble: per node, the squares of the
/// coordinates followed by absolute cross products.
#[derive(Debug, Clone)]
pub struct ChiFeatures {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl ChiFeatures {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Feature length `M + M(M-1)/2`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chi(&self, v: usize) -> &[f64] {
        &self.data[v * self.dim..(v + 1) * self.dim]
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.chi(u)
            .iter()
            .zip(self.chi(v))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Computes the feature map for every node of the ensemble.
pub fn chi(ensemble: &WaveEnsemble) -> ChiFeatures {
    let dim = features::unsigned_quadratic_len(ensemble.m);
    let mut data = Vec::with_capacity(ensemble.n * dim);
    for v in 0..ensemble.n {
        features::push_unsigned_quadratics(ensemble.g(v), &mut data);
    }
    ChiFeatures { n: ensemble.n, dim, data }
}

fn chi_of(g: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(features::unsigned_quadratic_len(g.len()));
    features::push_unsigned_quadratics(g, &mut out);
    out
}

/// One collision-probability estimate.
#[derive(Debug, Clone)]
pub struct SmallBallPoint {
    pub m: usize,
    pub eps: f64,
    pub pairs: usize,
    pub collisions: usize,
    pub prob: f64,
    pub stderr: f64,
}

/// Estimates `Pr(|chi(u) - chi(v)| <= eps)` over independent Gaussian pairs,
/// one estimate per entry of `eps_grid`. Pairs use per-index ChaCha streams,
/// so the result does not depend on the parallel schedule.
pub fn smallball_estimate(
    m: usize,
    eps_grid: &[f64],
    pair_trials: usize,
    seed: u64,
) -> Result<Vec<SmallBallPoint>> {
    if m == 0 || pair_trials == 0 || eps_grid.is_empty() {
        return Err(Error::InvalidParameter(
            "small-ball estimate needs M >= 1, pairs >= 1, and a nonempty eps grid".into(),
        ));
    }
    let counts: Vec<usize> = (0..pair_trials)
        .into_par_iter()
        .fold(
            || vec![0usize; eps_grid.len()],
            |mut acc, pair| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(pair as u64);
                let gu: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                let gv: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                let d = chi_of(&gu)
                    .iter()
                    .zip(&chi_of(&gv))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                for (i, &eps) in eps_grid.iter().enumerate() {
                    if d <= eps {
                        acc[i] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0usize; eps_grid.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(eps_grid
        .iter()
        .zip(counts)
        .map(|(&eps, collisions)| {
            let prob = collisions as f64 / pair_trials as f64;
            SmallBallPoint {
                m,
                eps,
                pairs: pair_trials,
                collisions,
                prob,
                stderr: (prob * (1.0 - prob) / pair_trials as f64).sqrt(),
            }
        })
        .collect())
}

/// CSV `M,eps,trials,collision_prob,stderr`.
pub fn smallball_csv(points: &[SmallBallPoint]) -> String {
    let mut s = String::from("M,eps,trials,collision_prob,stderr\n");
    for p in points {
        s.push_str(&format!("{},{},{},{},{}\n", p.m, p.eps, p.pairs, p.prob, p.stderr));
    }
    s
}

/// One exhaustive minimum-separation measurement.
#[derive(Debug, Clone)]
pub struct MinSepTrial {
    pub n: usize,
    pub m: usize,
    pub trial: usize,
    pub min_sep: f64,
}

/// Spectral dimension rule `ceil(c * log2 n)`.
pub fn spectral_dim_rule(n: usize, c: f64) -> usize {
    ((c * (n as f64).log2()).ceil() as usize).max(1)
}

/// For each n in the grid, samples `trials` ensembles with
/// `M = ceil(c log2 n)` and measures the exhaustive O(n^2) pairwise minimum
/// feature separation.
pub fn min_separation_scaling(
    n_grid: &[usize],
    c: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<MinSepTrial>> {
    if n_grid.is_empty() || trials == 0 || c.is_nan() || c <= 0.0 {
        return Err(Error::InvalidParameter(
            "min-separation scan needs a nonempty n grid, trials >= 1, c > 0".into(),
        ));
    }
    let mut jobs = Vec::new();
    for &n in n_grid {
        if n < 2 {
            return Err(Error::InvalidParameter("min separation needs n >= 2".into()));
        }
        for trial in 0..trials {
            jobs.push((n, trial));
        }
    }
    jobs.into_par_iter()
        .map(|(n, trial)| {
            let m = spectral_dim_rule(n, c);
            let ens = sample_ensemble(n, m, derive_seed(seed, (n as u64) << 20 | trial as u64))?;
            let feats = chi(&ens);
            let mut min_sep = f64::INFINITY;
            for u in 0..n {
                for v in (u + 1)..n {
                    min_sep = min_sep.min(feats.distance(u, v));
                }
            }
            Ok(MinSepTrial { n, m, trial, min_sep })
        })
        .collect()
}

/// CSV `n,M,trial,min_sep`.
pub fn minsep_csv(trials: &[MinSepTrial]) -> String {
    let mut s = String::from("n,M,trial,min_sep\n");
    for t in trials {
        s.push_str(&format!("{},{},{},{}\n", t.n, t.m, t.trial, t.min_sep));
    }
    s
}

/// Fitted decay exponent: least-squares slope of log(median min separation)
/// against log n, negated. Informational; needs at least two distinct n.
pub fn fit_alpha(trials: &[MinSepTrial]) -> Option<f64> {
    let mut by_n: Vec<(usize, Vec<f64>)> = Vec::new();
    for t in trials {
        match by_n.iter_mut().find(|(n, _)| *n == t.n) {
            Some((_, v)) => v.push(t.min_sep),
            None => by_n.push((t.n, vec![t.min_sep])),
        }
    }
    if by_n.len() < 2 {
        return None;
    }
    let points: Vec<(f64, f64)> = by_n
        .into_iter()
        .map(|(n, mut v)| {
            v.sort_by(f64::total_cmp);
            let median = v[v.len() / 2];
            ((n as f64).ln(), median.ln())
        })
        .collect();
    let len = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / len;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Some(-(sxy / sxx))
}
