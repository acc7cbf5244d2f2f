//! Heat kernels and diffusion distances on graphs, and the radial heat
//! kernel of the infinite r-regular tree.
//!
//! The tree kernel is computed by Poissonization: the continuous-time kernel
//! is a Poisson(t) mixture of discrete-step radial walk laws, truncated once
//! the Poisson tail mass drops below a requested bound. Walk laws are
//! aggregated over distance shells; dividing by the shell size
//! `r (r-1)^(d-1)` recovers the per-vertex kernel value `p_t(d)`, which is
//! strictly decreasing in d. The link `psi(d) = sqrt(2 (kappa_2t - p_2t(d)))`
//! then converts hop distances into tree diffusion distances.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{bfs_distances, Graph, UNREACHABLE};
use crate::spectral::SpectralDecomposition;

/// Default certified Poisson-series tail for tree-kernel tabulation.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

fn require_positive_time(t: f64) -> Result<()> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidTime(t));
    }
    Ok(())
}

fn require_full(dec: &SpectralDecomposition) -> Result<()> {
    if dec.count() != dec.n() {
        return Err(Error::InsufficientEigenpairs { need: dec.n(), have: dec.count() });
    }
    Ok(())
}

/// Dense heat kernel `K_t = exp(-t L)` from the full spectral expansion.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    t: f64,
    values: DMatrix<f64>,
}

impl HeatKernel {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        self.values[(u, v)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Builds the full `n x n` heat kernel; requires all n eigenpairs.
pub fn heat_kernel(dec: &SpectralDecomposition, t: f64) -> Result<HeatKernel> {
    require_positive_time(t)?;
    require_full(dec)?;
    let n = dec.n();
    let mut scaled = dec.eigenvectors().clone();
    for j in 0..n {
        let w = (-t * dec.eigenvalues()[j]).exp();
        for v in 0..n {
            scaled[(v, j)] *= w;
        }
    }
    let values = &scaled * dec.eigenvectors().transpose();
    Ok(HeatKernel { t, values })
}

/// Single heat-kernel entry `k_t(u, v)` in O(count) without forming the
/// full matrix.
pub fn kernel_entry(dec: &SpectralDecomposition, t: f64, u: usize, v: usize) -> Result<f64> {
    require_positive_time(t)?;
    require_full(dec)?;
    Ok((0..dec.count())
        .map(|j| (-t * dec.eigenvalues()[j]).exp() * dec.phi(j, u) * dec.phi(j, v))
        .sum())
}

/// Full diffusion distance
/// `d_t(u,v) = sqrt(sum_{j>=1} e^{-2 t lambda_j} (phi_j(u) - phi_j(v))^2)`,
/// summed over nonzero eigenpairs of a full decomposition.
pub fn diffusion_distance(dec: &SpectralDecomposition, t: f64, u: usize, v: usize) -> Result<f64> {
    require_positive_time(t)?;
    require_full(dec)?;
    let n = dec.n();
    if u >= n {
        return Err(Error::NodeOutOfRange { node: u, n });
    }
    if v >= n {
        return Err(Error::NodeOutOfRange { node: v, n });
    }
    let mut sum = 0.0;
    for j in 1..dec.count() {
        let diff = dec.phi(j, u) - dec.phi(j, v);
        sum += (-2.0 * t * dec.eigenvalues()[j]).exp() * diff * diff;
    }
    Ok(sum.sqrt())
}

/// Truncated spectral embedding `Phi_t^(m)(v) = (e^{-t lambda_j} phi_j(v))`
/// over the m smallest nonzero eigenpairs.
#[derive(Debug, Clone)]
pub struct DiffusionEmbedding {
    t: f64,
    m: usize,
    n: usize,
    /// Row-major `n x m`.
    coords: Vec<f64>,
}

impl DiffusionEmbedding {
    /// Wraps explicit row-major `n x m` coordinates as an embedding, for
    /// synthetic instances and tests.
    pub fn from_coords(t: f64, m: usize, coords: Vec<f64>) -> Result<Self> {
        require_positive_time(t)?;
        if m == 0 || !coords.len().is_multiple_of(m) {
            return Err(Error::SizeMismatch(format!(
                "{} coordinates do not form rows of length {m}",
                coords.len()
            )));
        }
        let n = coords.len() / m;
        Ok(Self { t, m, n, coords })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn coord(&self, v: usize) -> &[f64] {
        &self.coords[v * self.m..(v + 1) * self.m]
    }

    /// Truncated diffusion distance `d_t^(m)(u,v)`.
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.coord(u)
            .iter()
            .zip(self.coord(v))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Builds the m-dimensional diffusion embedding; needs `m + 1` retained
/// eigenpairs (the zero mode at index 0 is skipped) and `m <= n - 1`.
pub fn diffusion_embedding(dec: &SpectralDecomposition, t: f64, m: usize) -> Result<DiffusionEmbedding> {
    require_positive_time(t)?;
    if m < 1 || m > dec.n() - 1 {
        return Err(Error::InvalidParameter(format!(
            "embedding dimension m={m} out of range [1, {}]",
            dec.n() - 1
        )));
    }
    if dec.count() < m + 1 {
        return Err(Error::InsufficientEigenpairs { need: m + 1, have: dec.count() });
    }
    let n = dec.n();
    let weights: Vec<f64> = (1..=m).map(|j| (-t * dec.eigenvalues()[j]).exp()).collect();
    let mut coords = Vec::with_capacity(n * m);
    for v in 0..n {
        for (j, w) in weights.iter().enumerate() {
            coords.push(w * dec.phi(j + 1, v));
        }
    }
    Ok(DiffusionEmbedding { t, m, n, coords })
}

/// Number of vertices at distance `d` from a vertex of the infinite
/// r-regular tree: 1 at d = 0, otherwise `r (r-1)^(d-1)`.
pub fn shell_size(r: usize, d: usize) -> f64 {
    if d == 0 {
        1.0
    } else {
        r as f64 * ((r - 1) as f64).powi(d as i32 - 1)
    }
}

/// Default tabulation depth `2 * ceil(log2(n) / log2(r-1))`, covering the
/// logarithmic window in which graph distances behave like tree distances.
pub fn default_table_depth(n: usize, r: usize) -> usize {
    let depth = 2.0 * ((n as f64).log2() / ((r - 1) as f64).log2()).ceil();
    (depth as usize).max(1)
}

/// Distance-shell laws `q_m(d)` of the discrete-time radial walk on the
/// infinite r-regular tree, for m = 0..=steps.
///
/// The walk leaves the root with probability one and otherwise steps outward
/// with probability `(r-1)/r` and inward with probability `1/r`; the d = 1
/// update `q_{m+1}(1) = q_m(0) + q_m(2)/r` keeps total mass at exactly one.
pub fn radial_walk_laws(r: usize, steps: usize) -> Vec<Vec<f64>> {
    let len = steps + 3;
    let up = (r as f64 - 1.0) / r as f64;
    let down = 1.0 / r as f64;
    let mut laws = Vec::with_capacity(steps + 1);
    let mut q = vec![0.0; len];
    q[0] = 1.0;
    laws.push(q.clone());
    for _ in 0..steps {
        let mut next = vec![0.0; len];
        next[0] = down * q[1];
        next[1] = q[0] + down * q[2];
        for d in 2..len - 1 {
            next[d] = up * q[d - 1] + down * q[d + 1];
        }
        laws.push(next.clone());
        q = next;
    }
    laws
}

/// Poisson weights `e^{-t} t^k / k!` until the remaining tail is at most
/// `tail_eps`, and at least `min_terms` of them so that every tabulated
/// shell receives its leading-order mass.
fn poisson_weights(t: f64, tail_eps: f64, min_terms: usize) -> Result<Vec<f64>> {
    let mut weights = Vec::new();
    let mut w = (-t).exp();
    let mut cum = 0.0;
    let mut k = 0usize;
    loop {
        weights.push(w);
        cum += w;
        if 1.0 - cum <= tail_eps && weights.len() >= min_terms {
            return Ok(weights);
        }
        k += 1;
        if k > 2000 {
            return Err(Error::InvalidParameter(format!(
                "Poisson series for t={t} did not reach tail {tail_eps:.1e} within 2000 terms"
            )));
        }
        w *= t / k as f64;
    }
}

/// Per-vertex radial kernel `p_t(d)` for d = 0..=d_max, via the Poisson
/// mixture of shell laws divided by shell sizes. Also returns the total
/// aggregated mass that was tabulated (1 minus the Poisson tail when
/// `d_internal` covers every reachable shell).
fn radial_kernel_series(r: usize, t: f64, d_max: usize, tail_eps: f64) -> Result<(Vec<f64>, f64)> {
    let weights = poisson_weights(t, tail_eps, d_max + 3)?;
    let steps = weights.len() - 1;
    // The walk cannot be farther than the number of jumps taken, so shells
    // beyond `steps` carry no mass.
    let laws = radial_walk_laws(r, steps);
    let d_internal = steps.max(d_max) + 1;
    let mut agg = vec![0.0; d_internal + 1];
    for (m, w) in weights.iter().enumerate() {
        for (d, a) in agg.iter_mut().enumerate() {
            if d < laws[m].len() {
                *a += w * laws[m][d];
            }
        }
    }
    let mass: f64 = agg.iter().sum();
    let p: Vec<f64> = (0..=d_max).map(|d| agg[d] / shell_size(r, d)).collect();
    Ok((p, mass))
}

/// Tabulated radial tree kernel and the hop-to-diffusion link.
#[derive(Debug, Clone)]
pub struct TreeKernelTable {
    r: usize,
    t: f64,
    d_max: usize,
    /// Per-vertex kernel `p_t(d)`.
    p: Vec<f64>,
    /// Per-vertex kernel at the doubled time, `p_2t(d)`.
    p2t: Vec<f64>,
    /// `kappa_2t = p_2t(0)`, the on-diagonal kernel value.
    kappa: f64,
    /// `psi(d) = sqrt(2 (kappa_2t - p_2t(d)))`.
    psi: Vec<f64>,
    /// Aggregated walk mass captured at time t (1 minus the Poisson tail).
    tabulated_mass: f64,
}

impl TreeKernelTable {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn p2t(&self) -> &[f64] {
        &self.p2t
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn tabulated_mass(&self) -> f64 {
        self.tabulated_mass
    }

    /// CSV dump: `d,p_t,p_2t,psi`, 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("d,p_t,p_2t,psi\n");
        for d in 0..=self.d_max {
            s.push_str(&format!(
                "{d},{:.16e},{:.16e},{:.16e}\n",
                self.p[d], self.p2t[d], self.psi[d]
            ));
        }
        s
    }
}

/// Tabulates the infinite-tree radial kernel at times t and 2t up to
/// `d_max`, with the Poisson series truncated once its tail mass is below
/// `tail_eps`, and fills the strictly increasing link `psi`.
pub fn tree_radial_kernel(r: usize, t: f64, d_max: usize, tail_eps: f64) -> Result<TreeKernelTable> {
    if r < 3 {
        return Err(Error::InvalidDegree { n: usize::MAX, r });
    }
    require_positive_time(t)?;
    if d_max < 1 {
        return Err(Error::InvalidParameter("d_max must be >= 1".into()));
    }
    if !(tail_eps > 0.0 && tail_eps <= 1e-3) {
        return Err(Error::InvalidParameter(format!(
            "tail_eps must lie in (0, 1e-3], got {tail_eps:.3e}"
        )));
    }
    let (p, mass) = radial_kernel_series(r, t, d_max, tail_eps)?;
    let (p2t, _) = radial_kernel_series(r, 2.0 * t, d_max, tail_eps)?;
    let kappa = p2t[0];
    let psi: Vec<f64> = p2t.iter().map(|&pd| (2.0 * (kappa - pd)).max(0.0).sqrt()).collect();
    Ok(TreeKernelTable { r, t, d_max, p, p2t, kappa, psi, tabulated_mass: mass })
}

/// Link value `psi(d)`; errors outside the tabulated range.
pub fn psi_link(table: &TreeKernelTable, d: usize) -> Result<f64> {
    table
        .psi
        .get(d)
        .copied()
        .ok_or(Error::DistanceOutOfRange { d, d_max: table.d_max })
}

/// Samples pairs with hop distance at most `radius` and returns the maximum
/// observed deviation `|d_t(u,v) - psi(SPD(u,v))|` between the graph
/// diffusion distance and the tree link.
///
/// Pairs are drawn by picking a uniform center and then a uniform member of
/// its radius ball, which covers all hop distances up to `radius`.
pub fn tree_stability_check(
    g: &Graph,
    dec: &SpectralDecomposition,
    t: f64,
    radius: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let r = g
        .r_hint()
        .ok_or_else(|| Error::InvalidParameter("stability check needs a regular graph".into()))?;
    require_full(dec)?;
    let table = tree_radial_kernel(r, t, radius.max(1), DEFAULT_TAIL_EPS)?;
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut ball = Vec::new();
    for _ in 0..samples {
        let u = rng.random_range(0..n);
        let dist = bfs_distances(g, u)?;
        ball.clear();
        ball.extend(
            dist.dist
                .iter()
                .enumerate()
                .filter(|(_, &d)| d != UNREACHABLE && d as usize <= radius)
                .map(|(v, _)| v),
        );
        let v = ball[rng.random_range(0..ball.len())];
        let hop = dist.dist[v] as usize;
        let dev = (diffusion_distance(dec, t, u, v)? - psi_link(&table, hop)?).abs();
        worst = worst.max(dev);
    }
    Ok(worst)
}
