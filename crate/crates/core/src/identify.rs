//! The two node-identification pipelines and the separation experiment.
//!
//! A hidden source is drawn uniformly; the observable is the vector of hop
//! distances from k uniform anchors. The WL-bounded Bayes decoder is
//! simulated exactly through distance buckets: nodes sharing the anchor
//! distance vector are posterior-equivalent, so the optimal rule guesses
//! uniformly inside the source's bucket. The spectral pipeline converts hop
//! observations to proxy diffusion radii through the tree link, trilaterates
//! the source's embedding coordinate, and decodes by nearest neighbor.
//!
//! Per-trial randomness is drawn from dedicated ChaCha streams keyed by
//! (seed, graph index, k, trial), so serial and parallel runs produce
//! identical results.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diffusion::{
    diffusion_embedding, tree_radial_kernel, DiffusionEmbedding, TreeKernelTable,
    DEFAULT_TAIL_EPS,
};
use crate::error::{Error, Result};
use crate::graph::{bfs_distances, generate_random_regular, DistanceMatrix, Graph};
use crate::spectral::{decompose_graph, SpectralDecomposition};
use crate::trilateration::{decode_nearest, solve_spheres, AnchorSet};

/// Resample cap for affinely dependent anchor draws within one trial.
pub const RESAMPLE_CAP: usize = 20;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic seed derivation for sub-experiments.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    mix64(base ^ mix64(salt.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// A sampled identification instance: hidden source, anchors, and the hop
/// observations. The hidden node is stored for scoring only; decoders never
/// read it.
#[derive(Debug, Clone)]
pub struct ContextSet {
    pub hidden: usize,
    pub anchors: Vec<usize>,
    pub observations: Vec<u32>,
}

/// Draws the hidden source and k anchors i.i.d. uniform (with replacement)
/// and fills the observations from BFS distances.
pub fn sample_context(g: &Graph, k: usize, seed: u64) -> Result<ContextSet> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::InvalidParameter("empty graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = rng.random_range(0..n);
    let anchors: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
    let dist = bfs_distances(g, hidden)?;
    let observations = anchors.iter().map(|&a| dist.dist[a]).collect();
    Ok(ContextSet { hidden, anchors, observations })
}

/// Partition of the nodes by their vector of hop distances to the anchors.
#[derive(Debug, Clone)]
pub struct BucketPartition {
    n: usize,
    k: usize,
    keys: Vec<Vec<u32>>,
    members: HashMap<Vec<u32>, Vec<usize>>,
}

impl BucketPartition {
    fn from_keys(keys: Vec<Vec<u32>>, k: usize) -> Self {
        let n = keys.len();
        let mut members: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
        for (v, key) in keys.iter().enumerate() {
            members.entry(key.clone()).or_default().push(v);
        }
        Self { n, k, keys, members }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Context-distance key of node `v`.
    pub fn key(&self, v: usize) -> &[u32] {
        &self.keys[v]
    }

    /// Members of the bucket containing `v`, in ascending node order.
    pub fn bucket_of(&self, v: usize) -> &[usize] {
        &self.members[&self.keys[v]]
    }

    /// Number of nonempty buckets.
    pub fn bucket_count(&self) -> usize {
        self.members.len()
    }

    pub fn singleton_count(&self) -> usize {
        self.members.values().filter(|m| m.len() == 1).count()
    }

    /// Expected reciprocal bucket size under a uniform hidden node. Each
    /// bucket contributes |B| * (1/|B|) / n, so this equals
    /// `bucket_count / n` exactly.
    pub fn exp_inv_bucket(&self) -> f64 {
        self.bucket_count() as f64 / self.n as f64
    }

    /// Buckets sorted by key, for deterministic enumeration.
    pub fn sorted_buckets(&self) -> Vec<(&Vec<u32>, &Vec<usize>)> {
        let mut out: Vec<_> = self.members.iter().collect();
        out.sort_by(|a, b| a.0.cmp(b.0));
        out
    }
}

/// Builds the exact bucket partition for the given anchors (k BFS runs).
pub fn build_buckets(g: &Graph, anchors: &[usize]) -> Result<BucketPartition> {
    let n = g.node_count();
    let fields: Vec<_> = anchors
        .iter()
        .map(|&a| bfs_distances(g, a))
        .collect::<Result<_>>()?;
    let keys: Vec<Vec<u32>> = (0..n)
        .map(|v| fields.iter().map(|f| f.dist[v]).collect())
        .collect();
    Ok(BucketPartition::from_keys(keys, anchors.len()))
}

fn buckets_from_matrix(dm: &DistanceMatrix, n: usize, anchors: &[usize]) -> BucketPartition {
    let keys: Vec<Vec<u32>> = (0..n)
        .map(|v| anchors.iter().map(|&a| dm.get(a, v)).collect())
        .collect();
    BucketPartition::from_keys(keys, anchors.len())
}

/// Simulates the Bayes-optimal WL-bounded decoder on one context: locate the
/// hidden node's bucket by key and guess uniformly among its members.
pub fn wl_trial(g: &Graph, ctx: &ContextSet, rng: &mut ChaCha8Rng) -> Result<(usize, bool)> {
    let bp = build_buckets(g, &ctx.anchors)?;
    let members = bp.bucket_of(ctx.hidden);
    let guess = members[rng.random_range(0..members.len())];
    Ok((guess, guess == ctx.hidden))
}

/// Outcome of one spectral anchor trial.
#[derive(Debug, Clone)]
pub struct LapTrialOutcome {
    /// `None` when every anchor draw within the resample cap was affinely
    /// dependent (the trial is excluded from accuracy).
    pub guess: Option<usize>,
    pub correct: bool,
    pub margin: Option<f64>,
    pub sigma_min: Option<f64>,
    pub max_residual: Option<f64>,
    pub resamples: usize,
}

impl LapTrialOutcome {
    pub fn degenerate(&self) -> bool {
        self.guess.is_none()
    }

    fn failed(resamples: usize) -> Self {
        Self {
            guess: None,
            correct: false,
            margin: None,
            sigma_min: None,
            max_residual: None,
            resamples,
        }
    }
}

/// Core of the spectral pipeline: validate the anchor geometry (resampling
/// affinely dependent draws), derive radii for the actual anchors in use,
/// solve, and decode.
fn lap_pipeline(
    emb: &DiffusionEmbedding,
    hidden: usize,
    initial: &[usize],
    radii_of: &dyn Fn(&[usize]) -> Result<Vec<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<LapTrialOutcome> {
    let m = emb.m();
    if initial.len() < m + 1 {
        return Err(Error::InvalidParameter(format!(
            "need at least {} anchors for an {m}-dimensional embedding, got {}",
            m + 1,
            initial.len()
        )));
    }
    let n = emb.n();
    let mut anchors: Vec<usize> = initial[..m + 1].to_vec();
    for attempt in 0..=RESAMPLE_CAP {
        match AnchorSet::from_embedding(emb, &anchors) {
            Ok(set) => {
                let radii = radii_of(&anchors)?;
                let sol = solve_spheres(set.points(), &radii)?;
                let (guess, margin) = decode_nearest(emb, &sol.z);
                let max_residual =
                    sol.residuals.iter().cloned().fold(0.0f64, f64::max);
                return Ok(LapTrialOutcome {
                    guess: Some(guess),
                    correct: guess == hidden,
                    margin: Some(margin),
                    sigma_min: Some(set.sigma_min()),
                    max_residual: Some(max_residual),
                    resamples: attempt,
                });
            }
            Err(Error::AffineDependence { .. }) => {
                anchors = (0..=m).map(|_| rng.random_range(0..n)).collect();
            }
            Err(e) => return Err(e),
        }
    }
    Ok(LapTrialOutcome::failed(RESAMPLE_CAP))
}

/// Runs the spectral anchor pipeline on one context: proxy radii through the
/// tree link, trilateration in the m-dimensional diffusion embedding, and
/// nearest-neighbor decoding. Requires `ctx` to hold at least m+1
/// observations; affinely dependent anchor draws are replaced by fresh
/// uniform draws up to [`RESAMPLE_CAP`] times.
pub fn lap_trial(
    g: &Graph,
    dec: &SpectralDecomposition,
    table: &TreeKernelTable,
    ctx: &ContextSet,
    m: usize,
    t: f64,
    rng: &mut ChaCha8Rng,
) -> Result<LapTrialOutcome> {
    let emb = diffusion_embedding(dec, t, m)?;
    let dist = bfs_distances(g, ctx.hidden)?;
    let radii_of = |anchors: &[usize]| {
        anchors
            .iter()
            .map(|&a| crate::diffusion::psi_link(table, dist.dist[a] as usize))
            .collect()
    };
    lap_pipeline(&emb, ctx.hidden, &ctx.anchors, &radii_of, rng)
}

/// Monte Carlo estimate of the probability that the hidden node lands in a
/// singleton bucket, averaging the exact per-context value S/n.
pub fn singleton_probability(g: &Graph, k: usize, trials: usize, seed: u64) -> Result<f64> {
    let n = g.node_count();
    let dm = DistanceMatrix::build(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..trials {
        let anchors: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
        let bp = buckets_from_matrix(&dm, n, &anchors);
        total += bp.singleton_count() as f64 / n as f64;
    }
    Ok(total / trials as f64)
}

/// Decoder identity, for experiment records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Wl,
    Lap,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Wl => "WL",
            Method::Lap => "LAP",
        }
    }
}

/// Where the spectral pipeline's anchor radii come from.
///
/// The hop-proxy source is the bare protocol: radii are a function of the
/// integer anchor distances alone, so its accuracy is information-
/// theoretically capped by the expected reciprocal bucket size (any decoder
/// that sees only the hop observations shares the cap). The metric sources
/// simulate the idealized decoder whose radii carry the diffusion geometry
/// itself: `Truncated` radii are exactly consistent with the m-dimensional
/// embedding (the closed-form trilateration setting), while `FullMetric`
/// radii include the spectral tail, whose anchor-to-anchor variation is a
/// real perturbation at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusSource {
    /// `psi(hop distance)` through the tree link.
    Psi,
    /// Exact full diffusion distances `d_t(a_i, v0)`.
    FullMetric,
    /// Exact truncated distances `d_t^(m)(a_i, v0)`.
    Truncated,
}

impl RadiusSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RadiusSource::Psi => "psi",
            RadiusSource::FullMetric => "full",
            RadiusSource::Truncated => "truncated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "psi" => Some(RadiusSource::Psi),
            "full" => Some(RadiusSource::FullMetric),
            "truncated" => Some(RadiusSource::Truncated),
            _ => None,
        }
    }
}

/// Grid specification for the separation experiment.
#[derive(Debug, Clone)]
pub struct SeparationConfig {
    pub n_values: Vec<usize>,
    pub r: usize,
    pub k_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Embedding dimension of the spectral pipeline.
    pub m: usize,
    /// Diffusion time of the spectral pipeline.
    pub t: f64,
    /// Radius source for the spectral pipeline.
    pub radius_source: RadiusSource,
}

impl SeparationConfig {
    /// Validates the grid; returns every problem, not just the first.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.n_values.is_empty() {
            errs.push("n list is empty".into());
        }
        if self.k_grid.is_empty() {
            errs.push("k grid is empty".into());
        }
        if self.trials == 0 {
            errs.push("trials must be positive".into());
        }
        if self.r < 3 {
            errs.push(format!("degree r={} must be at least 3", self.r));
        }
        for &n in &self.n_values {
            if self.r >= n {
                errs.push(format!("degree r={} must be below n={n}", self.r));
            }
            if !(n * self.r).is_multiple_of(2) {
                errs.push(format!("n*r must be even, got n={n} r={}", self.r));
            }
            if self.m + 1 >= n {
                errs.push(format!("embedding dimension m={} too large for n={n}", self.m));
            }
        }
        if self.m == 0 {
            errs.push("embedding dimension m must be positive".into());
        }
        if self.t.is_nan() || self.t <= 0.0 {
            errs.push(format!("diffusion time t={} must be positive", self.t));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// One aggregated experiment record per (method, n, k).
#[derive(Debug, Clone)]
pub struct SeparationRow {
    pub method: Method,
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub trials: usize,
    pub accuracy: f64,
    pub acc_stderr: f64,
    pub exp_inv_bucket: f64,
    pub singleton_prob: f64,
    /// Mean decode margin over non-degenerate trials; spectral rows only.
    pub mean_margin: Option<f64>,
    pub degenerate_count: usize,
    pub seed: u64,
}

/// Full experiment output.
#[derive(Debug, Clone)]
pub struct SeparationResult {
    pub rows: Vec<SeparationRow>,
}

impl SeparationResult {
    /// CSV with header
    /// `method,n,r,k,trials,accuracy,acc_stderr,exp_inv_bucket,singleton_prob,mean_margin,degenerate_count,seed`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from(
            "method,n,r,k,trials,accuracy,acc_stderr,exp_inv_bucket,singleton_prob,mean_margin,degenerate_count,seed\n",
        );
        for row in &self.rows {
            let margin = row.mean_margin.map(|m| m.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.method.as_str(),
                row.n,
                row.r,
                row.k,
                row.trials,
                row.accuracy,
                row.acc_stderr,
                row.exp_inv_bucket,
                row.singleton_prob,
                margin,
                row.degenerate_count,
                row.seed,
            ));
        }
        s
    }

    pub fn row(&self, method: Method, n: usize, k: usize) -> Option<&SeparationRow> {
        self.rows.iter().find(|r| r.method == method && r.n == n && r.k == k)
    }
}

struct TrialRecord {
    wl_correct: bool,
    bucket_count: usize,
    singleton_count: usize,
    lap_correct: Option<bool>,
    lap_margin: Option<f64>,
    lap_degenerate: bool,
}

/// Per-graph state shared by every trial.
struct GraphContext<'a> {
    n: usize,
    dm: &'a DistanceMatrix,
    dec: &'a SpectralDecomposition,
    emb: &'a DiffusionEmbedding,
    table: &'a TreeKernelTable,
}

fn binomial_stderr(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        0.0
    } else {
        (p * (1.0 - p) / trials as f64).sqrt()
    }
}

fn trial_stream(graph_index: usize, k: usize, trial: usize) -> u64 {
    ((graph_index as u64) << 48) | ((k as u64) << 32) | trial as u64
}

/// Runs both decoders over the full (n, k) grid with shared per-trial
/// contexts. Trials are independent and execute in parallel; per-trial
/// ChaCha streams make the output identical to a serial run.
pub fn run_separation(cfg: &SeparationConfig) -> Result<SeparationResult> {
    cfg.validate()
        .map_err(|errs| Error::InvalidParameter(errs.join("; ")))?;
    let mut rows = Vec::new();
    for (gi, &n) in cfg.n_values.iter().enumerate() {
        let graph_seed = derive_seed(cfg.seed, gi as u64);
        let g = generate_random_regular(n, cfg.r, graph_seed)?;
        let dm = DistanceMatrix::build(&g)?;
        let diam = dm.max() as usize;
        // Full-metric radii need every eigenpair; the other sources only
        // the leading m+1.
        let count = if cfg.radius_source == RadiusSource::FullMetric { n } else { cfg.m + 1 };
        let dec = decompose_graph(&g, count)?;
        let emb = diffusion_embedding(&dec, cfg.t, cfg.m)?;
        let table = tree_radial_kernel(cfg.r, cfg.t, diam.max(1), DEFAULT_TAIL_EPS)?;

        for &k in &cfg.k_grid {
            let records: Vec<TrialRecord> = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| -> Result<TrialRecord> {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(trial_stream(gi, k, trial));
                    let gctx =
                        GraphContext { n, dm: &dm, dec: &dec, emb: &emb, table: &table };
                    run_one_trial(&gctx, k, cfg, &mut rng)
                })
                .collect::<Result<_>>()?;

            let trials = cfg.trials;
            let wl_acc =
                records.iter().filter(|r| r.wl_correct).count() as f64 / trials as f64;
            let exp_inv = records
                .iter()
                .map(|r| r.bucket_count as f64 / n as f64)
                .sum::<f64>()
                / trials as f64;
            let singleton = records
                .iter()
                .map(|r| r.singleton_count as f64 / n as f64)
                .sum::<f64>()
                / trials as f64;

            rows.push(SeparationRow {
                method: Method::Wl,
                n,
                r: cfg.r,
                k,
                trials,
                accuracy: wl_acc,
                acc_stderr: binomial_stderr(wl_acc, trials),
                exp_inv_bucket: exp_inv,
                singleton_prob: singleton,
                mean_margin: None,
                degenerate_count: 0,
                seed: cfg.seed,
            });

            let degenerate_count = records.iter().filter(|r| r.lap_degenerate).count();
            let effective = trials - degenerate_count;
            let lap_acc = if effective == 0 {
                0.0
            } else {
                records.iter().filter(|r| r.lap_correct == Some(true)).count() as f64
                    / effective as f64
            };
            let margins: Vec<f64> = records.iter().filter_map(|r| r.lap_margin).collect();
            let mean_margin = if margins.is_empty() {
                None
            } else {
                Some(margins.iter().sum::<f64>() / margins.len() as f64)
            };
            rows.push(SeparationRow {
                method: Method::Lap,
                n,
                r: cfg.r,
                k,
                trials: effective,
                accuracy: lap_acc,
                acc_stderr: binomial_stderr(lap_acc, effective),
                exp_inv_bucket: exp_inv,
                singleton_prob: singleton,
                mean_margin,
                degenerate_count,
                seed: cfg.seed,
            });
        }
    }
    Ok(SeparationResult { rows })
}

fn run_one_trial(
    gctx: &GraphContext,
    k: usize,
    cfg: &SeparationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrialRecord> {
    let GraphContext { n, dm, dec, emb, table } = *gctx;
    let m = cfg.m;
    let hidden = rng.random_range(0..n);
    let anchors: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();

    let bp = buckets_from_matrix(dm, n, &anchors);
    let members = bp.bucket_of(hidden);
    let wl_guess = members[rng.random_range(0..members.len())];

    let (lap_correct, lap_margin, lap_degenerate) = if k > m {
        let radii_of = |req: &[usize]| -> Result<Vec<f64>> {
            match cfg.radius_source {
                RadiusSource::Psi => req
                    .iter()
                    .map(|&a| {
                        crate::diffusion::psi_link(table, dm.get(a, hidden) as usize)
                    })
                    .collect(),
                RadiusSource::Truncated => {
                    Ok(req.iter().map(|&a| emb.distance(a, hidden)).collect())
                }
                RadiusSource::FullMetric => req
                    .iter()
                    .map(|&a| crate::diffusion::diffusion_distance(dec, cfg.t, a, hidden))
                    .collect(),
            }
        };
        let outcome = lap_pipeline(emb, hidden, &anchors, &radii_of, rng)?;
        (
            if outcome.degenerate() { None } else { Some(outcome.correct) },
            outcome.margin,
            outcome.degenerate(),
        )
    } else {
        // Below the trilateration threshold the spectral decoder has no
        // determined system; it falls back to a uniform guess.
        let guess = rng.random_range(0..n);
        (Some(guess == hidden), None, false)
    };

    Ok(TrialRecord {
        wl_correct: wl_guess == hidden,
        bucket_count: bp.bucket_count(),
        singleton_count: bp.singleton_count(),
        lap_correct,
        lap_margin,
        lap_degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::diameter;

    /// Exact unsigned fraction with u128 arithmetic, enough for sums of
    /// reciprocals of bucket sizes at n <= 64.
    #[derive(Clone, Copy, PartialEq, Eq, Debug)]
    struct Frac {
        num: u128,
        den: u128,
    }

    impl Frac {
        fn new(num: u128, den: u128) -> Self {
            let g = gcd(num.max(1), den);
            Self { num: num / g, den: den / g }
        }

        fn add(self, other: Frac) -> Frac {
            Frac::new(self.num * other.den + other.num * self.den, self.den * other.den)
        }
    }

    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn context_sampling_is_deterministic_and_consistent() {
        let g = generate_random_regular(32, 3, 1).unwrap();
        let a = sample_context(&g, 5, 99).unwrap();
        let b = sample_context(&g, 5, 99).unwrap();
        assert_eq!(a.hidden, b.hidden);
        assert_eq!(a.anchors, b.anchors);
        assert_eq!(a.observations, b.observations);

        for seed in 0..50 {
            let ctx = sample_context(&g, 4, seed).unwrap();
            for (i, &a) in ctx.anchors.iter().enumerate() {
                assert_eq!(ctx.observations[i] == 0, a == ctx.hidden);
            }
        }
    }

    #[test]
    fn empty_context_still_draws_hidden() {
        let g = generate_random_regular(16, 3, 1).unwrap();
        let ctx = sample_context(&g, 0, 7).unwrap();
        assert!(ctx.anchors.is_empty());
        assert!(ctx.observations.is_empty());
        assert!(ctx.hidden < 16);
    }

    #[test]
    fn bucket_examples_by_hand() {
        // Path 0-1-2, anchor {0}: keys 0, 1, 2 -> three singletons.
        let p3 = Graph::path(3);
        let bp = build_buckets(&p3, &[0]).unwrap();
        assert_eq!(bp.bucket_count(), 3);
        assert_eq!(bp.singleton_count(), 3);
        assert_eq!(bp.exp_inv_bucket(), 1.0);

        // C6, anchor {0}: buckets {0}, {1,5}, {2,4}, {3}.
        let c6 = Graph::cycle(6);
        let bp = build_buckets(&c6, &[0]).unwrap();
        assert_eq!(bp.bucket_count(), 4);
        assert_eq!(bp.singleton_count(), 2);
        assert_eq!(bp.bucket_of(1), &[1, 5]);
        assert_eq!(bp.bucket_of(4), &[2, 4]);
        assert!((bp.exp_inv_bucket() - 4.0 / 6.0).abs() < 1e-15);

        // k = 0: a single bucket of size n.
        let bp = build_buckets(&c6, &[]).unwrap();
        assert_eq!(bp.bucket_count(), 1);
        assert_eq!(bp.exp_inv_bucket(), 1.0 / 6.0);
        assert_eq!(bp.singleton_count(), 0);

        // Anchors = all nodes: every key is unique (distance zero pins it).
        let all: Vec<usize> = (0..6).collect();
        let bp = build_buckets(&c6, &all).unwrap();
        assert_eq!(bp.singleton_count(), 6);
    }

    #[test]
    fn key_count_bounded_by_diameter_power() {
        let g = generate_random_regular(64, 3, 3).unwrap();
        let d = diameter(&g).unwrap();
        for k in 0..=3usize {
            let ctx = sample_context(&g, k, k as u64 + 10).unwrap();
            let bp = build_buckets(&g, &ctx.anchors).unwrap();
            let bound = ((d + 1) as f64).powi(k as i32);
            assert!((bp.bucket_count() as f64) <= bound);
        }
    }

    #[test]
    fn wl_trial_on_singletons_is_always_correct() {
        let g = Graph::path(5);
        let anchors: Vec<usize> = vec![0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for hidden in 0..5 {
            let dist = bfs_distances(&g, hidden).unwrap();
            let ctx = ContextSet {
                hidden,
                anchors: anchors.clone(),
                observations: anchors.iter().map(|&a| dist.dist[a]).collect(),
            };
            let (_, correct) = wl_trial(&g, &ctx, &mut rng).unwrap();
            assert!(correct);
        }
    }

    #[test]
    fn wl_trial_on_pair_bucket_is_a_coin_flip() {
        // C6 with anchor {0}: node 1 shares a bucket with node 5.
        let c6 = Graph::cycle(6);
        let ctx = ContextSet { hidden: 1, anchors: vec![0], observations: vec![1] };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut hits = 0usize;
        for _ in 0..1000 {
            let (guess, correct) = wl_trial(&c6, &ctx, &mut rng).unwrap();
            assert!(guess == 1 || guess == 5);
            if correct {
                hits += 1;
            }
        }
        let rate = hits as f64 / 1000.0;
        assert!((rate - 0.5).abs() <= 0.05, "rate {rate}");
    }

    #[test]
    fn exhaustive_wl_accuracy_equals_inverse_bucket_mass() {
        // Over every hidden node, the Bayes-optimal in-bucket accuracy sums
        // to (number of buckets) / n, exactly, as rationals.
        let mut corpus: Vec<Graph> = vec![
            Graph::path(7),
            Graph::cycle(6),
            Graph::complete(4),
            Graph::cycle(9),
        ];
        for seed in 0..3 {
            corpus.push(generate_random_regular(16, 3, seed).unwrap());
            corpus.push(generate_random_regular(32, 3, seed).unwrap());
            corpus.push(generate_random_regular(64, 3, seed).unwrap());
        }
        for (ci, g) in corpus.iter().enumerate() {
            let n = g.node_count();
            for k in 1..=3usize {
                let ctx = sample_context(g, k, (ci * 7 + k) as u64).unwrap();
                let bp = build_buckets(g, &ctx.anchors).unwrap();

                // Brute force: for each hidden node, find its bucket by
                // direct key comparison against every node.
                let mut acc = Frac::new(0, 1);
                for hidden in 0..n {
                    let members: Vec<usize> =
                        (0..n).filter(|&u| bp.key(u) == bp.key(hidden)).collect();
                    assert_eq!(&members, bp.bucket_of(hidden));
                    acc = acc.add(Frac::new(1, members.len() as u128));
                }
                assert_eq!(
                    acc,
                    Frac::new(bp.bucket_count() as u128, 1),
                    "graph {ci}, k={k}"
                );
                // And therefore the f64 report agrees to machine precision.
                assert!(
                    (bp.exp_inv_bucket() - bp.bucket_count() as f64 / n as f64).abs() == 0.0
                );
            }
        }
    }

    #[test]
    fn lap_trial_runs_and_is_deterministic() {
        let g = generate_random_regular(64, 3, 2).unwrap();
        let dec = decompose_graph(&g, 5).unwrap();
        let d = diameter(&g).unwrap();
        let table = tree_radial_kernel(3, 1.0, d, 1e-12).unwrap();
        let ctx = sample_context(&g, 5, 31).unwrap();
        let mut rng1 = ChaCha8Rng::seed_from_u64(0);
        let mut rng2 = ChaCha8Rng::seed_from_u64(0);
        let a = lap_trial(&g, &dec, &table, &ctx, 4, 1.0, &mut rng1).unwrap();
        let b = lap_trial(&g, &dec, &table, &ctx, 4, 1.0, &mut rng2).unwrap();
        assert_eq!(a.guess, b.guess);
        assert_eq!(a.correct, b.correct);
        assert!(!a.degenerate());
        assert!(a.sigma_min.unwrap() > 0.0);
        assert!(a.margin.is_some());
    }

    #[test]
    fn lap_trial_zero_radius_pins_anchor() {
        // Radii from the truncated metric itself are exactly consistent, so
        // when the hidden node is an anchor the solve returns its own
        // coordinate and the decoder recovers it.
        let g = generate_random_regular(32, 3, 6).unwrap();
        let dec = decompose_graph(&g, 4).unwrap();
        let emb = diffusion_embedding(&dec, 1.0, 3).unwrap();
        let hidden = 11usize;
        let anchors = vec![hidden, 3, 19, 27];
        let radii: Vec<f64> = anchors.iter().map(|&a| emb.distance(a, hidden)).collect();
        assert_eq!(radii[0], 0.0);
        let set = AnchorSet::from_embedding(&emb, &anchors).unwrap();
        let sol = solve_spheres(set.points(), &radii).unwrap();
        let (guess, _) = decode_nearest(&emb, &sol.z);
        assert_eq!(guess, hidden);
    }

    #[test]
    fn lap_trial_requires_enough_anchors() {
        let g = generate_random_regular(32, 3, 6).unwrap();
        let dec = decompose_graph(&g, 5).unwrap();
        let table = tree_radial_kernel(3, 1.0, 10, 1e-12).unwrap();
        let ctx = sample_context(&g, 2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(lap_trial(&g, &dec, &table, &ctx, 4, 1.0, &mut rng).is_err());
    }

    #[test]
    fn singleton_probability_edge_cases() {
        let g = generate_random_regular(16, 3, 4).unwrap();
        assert_eq!(singleton_probability(&g, 0, 50, 1).unwrap(), 0.0);
        let p = singleton_probability(&g, 6, 50, 1).unwrap();
        assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn separation_grid_shape_and_determinism() {
        let cfg = SeparationConfig {
            n_values: vec![16, 24],
            r: 3,
            k_grid: vec![0, 1, 3, 5],
            trials: 200,
            seed: 5,
            m: 3,
            t: 1.0,
            radius_source: RadiusSource::Truncated,
        };
        let a = run_separation(&cfg).unwrap();
        let b = run_separation(&cfg).unwrap();
        assert_eq!(a.rows.len(), 2 * 4 * 2);
        assert_eq!(a.to_csv_string(), b.to_csv_string());

        // WL at k = 0 guesses uniformly: accuracy near 1/n.
        for &n in &[16usize, 24] {
            let row = a.row(Method::Wl, n, 0).unwrap();
            let want = 1.0 / n as f64;
            assert!(
                (row.accuracy - want).abs() <= 3.0 * binomial_stderr(want, 200) + 1e-12,
                "n={n}: wl accuracy {} vs 1/n {want}",
                row.accuracy
            );
            // Mean over the trial axis of the exact per-context value 1/n.
            assert!((row.exp_inv_bucket - want).abs() <= 1e-12);
        }

        // Bayes ceiling: WL accuracy stays within Monte Carlo error of the
        // expected reciprocal bucket mass.
        for row in a.rows.iter().filter(|r| r.method == Method::Wl) {
            assert!(
                row.accuracy
                    <= row.exp_inv_bucket + 3.0 * binomial_stderr(row.exp_inv_bucket.min(0.999), row.trials),
                "row n={} k={}",
                row.n,
                row.k
            );
        }
    }

    #[test]
    fn separation_csv_format() {
        let cfg = SeparationConfig {
            n_values: vec![16],
            r: 3,
            k_grid: vec![0, 4],
            trials: 20,
            seed: 2,
            m: 3,
            t: 1.0,
            radius_source: RadiusSource::Psi,
        };
        let res = run_separation(&cfg).unwrap();
        let csv = res.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,n,r,k,trials,accuracy,acc_stderr,exp_inv_bucket,singleton_prob,mean_margin,degenerate_count,seed"
        );
        for line in lines {
            assert_eq!(line.split(',').count(), 12);
            assert!(line.starts_with("WL,") || line.starts_with("LAP,"));
        }
    }

    #[test]
    fn separation_rejects_bad_config() {
        let cfg = SeparationConfig {
            n_values: vec![],
            r: 2,
            k_grid: vec![],
            trials: 0,
            seed: 0,
            m: 0,
            t: 0.0,
            radius_source: RadiusSource::Truncated,
        };
        let errs = cfg.validate().unwrap_err();
        assert!(errs.len() >= 5, "expected an exhaustive error list, got {errs:?}");
        assert!(run_separation(&cfg).is_err());
    }

    #[test]
    fn derive_seed_spreads() {
        let a = derive_seed(1, 0);
        let b = derive_seed(1, 1);
        let c = derive_seed(2, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
