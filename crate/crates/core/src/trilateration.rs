//! Anchor-based recovery of embedding coordinates from distances.
//!
//! Given m+1 anchors with affinely independent m-dimensional coordinates and
//! the distances from an unknown point to each anchor, subtracting the last
//! sphere equation from the others yields a linear system `A z = b` whose
//! unique solution is the unknown's coordinate. Distances measured in a
//! richer metric (more coordinates than m) leave a common nonnegative
//! residue, the tail energy, recoverable from any one sphere equation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diffusion::DiffusionEmbedding;
use crate::error::{Error, Result};

/// Anchor sets whose linearized system matrix has a smaller singular value
/// than this are rejected as affinely dependent.
pub const AFFINE_TOL: f64 = 1e-10;

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let m = points.len().checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| {
        Error::SizeMismatch("need at least 2 anchor points".into())
    })?;
    if points.iter().any(|p| p.len() != m) {
        return Err(Error::SizeMismatch(format!(
            "expected {} points of dimension {m}",
            m + 1
        )));
    }
    Ok(m)
}

/// Smallest singular value of the linearized system matrix for `points`.
pub fn system_sigma_min(points: &[Vec<f64>]) -> Result<f64> {
    let m = check_points(points)?;
    let radii = vec![0.0; m + 1];
    let (a, _) = build_system(points, &radii)?;
    let svd = a.svd(false, false);
    Ok(svd.singular_values.iter().fold(f64::INFINITY, |acc, &s| acc.min(s)))
}

/// m+1 anchor nodes with their embedding coordinates, validated to be
/// affinely independent.
#[derive(Debug, Clone)]
pub struct AnchorSet {
    anchors: Vec<usize>,
    points: Vec<Vec<f64>>,
    sigma_min: f64,
}

impl AnchorSet {
    /// Builds an anchor set from explicit coordinates.
    pub fn from_points(anchors: Vec<usize>, points: Vec<Vec<f64>>) -> Result<Self> {
        if anchors.len() != points.len() {
            return Err(Error::SizeMismatch(format!(
                "{} anchor ids for {} points",
                anchors.len(),
                points.len()
            )));
        }
        // Repeated anchors have coinciding coordinates, which is a singular
        // system; report it as affine dependence so callers can resample.
        let mut seen = anchors.to_vec();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::AffineDependence { sigma_min: 0.0 });
        }
        let sigma_min = system_sigma_min(&points)?;
        if sigma_min <= AFFINE_TOL {
            return Err(Error::AffineDependence { sigma_min });
        }
        Ok(Self { anchors, points, sigma_min })
    }

    /// Builds an anchor set by reading coordinates of `anchors` out of a
    /// diffusion embedding; requires `emb.m() + 1` anchors.
    pub fn from_embedding(emb: &DiffusionEmbedding, anchors: &[usize]) -> Result<Self> {
        if anchors.len() != emb.m() + 1 {
            return Err(Error::SizeMismatch(format!(
                "{} anchors for an {}-dimensional embedding",
                anchors.len(),
                emb.m()
            )));
        }
        for &a in anchors {
            if a >= emb.n() {
                return Err(Error::NodeOutOfRange { node: a, n: emb.n() });
            }
        }
        let points = anchors.iter().map(|&a| emb.coord(a).to_vec()).collect();
        Self::from_points(anchors.to_vec(), points)
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// Embedding dimension m (one less than the anchor count).
    pub fn m(&self) -> usize {
        self.points.len() - 1
    }
}

/// Difference-of-spheres linearization: row i of `A` is `2 (p_i - p_{m+1})`,
/// and `b_i = |p_i|^2 - |p_{m+1}|^2 + r_{m+1}^2 - r_i^2`.
pub fn build_system(points: &[Vec<f64>], radii: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m = check_points(points)?;
    if radii.len() != m + 1 {
        return Err(Error::SizeMismatch(format!("{} radii for {} anchors", radii.len(), m + 1)));
    }
    let last = &points[m];
    let norm2 = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>();
    let last_norm2 = norm2(last);
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = 2.0 * (points[i][j] - last[j]);
        }
        b[i] = norm2(&points[i]) - last_norm2 + radii[m] * radii[m] - radii[i] * radii[i];
    }
    Ok((a, b))
}

/// Unique solution of `A z = b` via SVD; rejects systems whose smallest
/// singular value is at most [`AFFINE_TOL`].
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let sigma_min = svd.singular_values.iter().fold(f64::INFINITY, |acc, &s| acc.min(s));
    if sigma_min.is_nan() || sigma_min <= AFFINE_TOL {
        return Err(Error::AffineDependence { sigma_min });
    }
    svd.solve(b, 0.0).map_err(|_| Error::AffineDependence { sigma_min })
}

/// Raw tail energy `r^2 - |z - p|^2` of one sphere equation at `z`.
/// Negative values are reported as-is; [`solve_spheres`] clamps and flags.
pub fn tail_energy(z: &[f64], point: &[f64], radius: f64) -> f64 {
    let d2: f64 = z.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
    radius * radius - d2
}

/// Coordinate recovered from m+1 anchor distances.
#[derive(Debug, Clone)]
pub struct TrilaterationSolution {
    /// Recovered coordinate in R^m.
    pub z: Vec<f64>,
    /// Mean tail energy over the anchors, clamped to zero if negative.
    pub tail_energy: f64,
    /// True if the mean tail energy was negative before clamping.
    pub tail_clamped: bool,
    /// Per-anchor `| |z - p_i|^2 + tail - r_i^2 |`.
    pub residuals: Vec<f64>,
    /// Smallest singular value of the linearized system.
    pub sigma_min: f64,
}

/// Solves the full sphere system: linearize, solve, and extract the common
/// tail energy and per-anchor residuals.
pub fn solve_spheres(points: &[Vec<f64>], radii: &[f64]) -> Result<TrilaterationSolution> {
    let (a, b) = build_system(points, radii)?;
    let svd = a.clone().svd(true, true);
    let sigma_min = svd.singular_values.iter().fold(f64::INFINITY, |acc, &s| acc.min(s));
    if sigma_min.is_nan() || sigma_min <= AFFINE_TOL {
        return Err(Error::AffineDependence { sigma_min });
    }
    let z = svd.solve(&b, 0.0).map_err(|_| Error::AffineDependence { sigma_min })?;
    let zs: Vec<f64> = z.iter().copied().collect();
    let tails: Vec<f64> = points
        .iter()
        .zip(radii)
        .map(|(p, &r)| tail_energy(&zs, p, r))
        .collect();
    let raw_tail = tails.iter().sum::<f64>() / tails.len() as f64;
    let tail_clamped = raw_tail < 0.0;
    let tail = raw_tail.max(0.0);
    let residuals = points
        .iter()
        .zip(radii)
        .map(|(p, &r)| {
            let d2: f64 = zs.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2 + tail - r * r).abs()
        })
        .collect();
    Ok(TrilaterationSolution { z: zs, tail_energy: tail, tail_clamped, residuals, sigma_min })
}

/// Nearest embedded node to `z` and the margin to the runner-up; ties break
/// to the smallest node index. The margin is infinite for single-node
/// embeddings.
pub fn decode_nearest(emb: &DiffusionEmbedding, z: &[f64]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d2 = f64::INFINITY;
    let mut second_d2 = f64::INFINITY;
    for v in 0..emb.n() {
        let d2: f64 = emb.coord(v).iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < best_d2 {
            second_d2 = best_d2;
            best_d2 = d2;
            best = v;
        } else if d2 < second_d2 {
            second_d2 = d2;
        }
    }
    (best, second_d2.sqrt() - best_d2.sqrt())
}

/// Plants exact radii for `z_true`, perturbs each radius by uniform noise in
/// `[-delta, delta]` over `trials` rounds, re-solves, and returns the worst
/// observed error divided by `delta` (zero when `delta` is zero).
pub fn perturbation_bound_check(
    points: &[Vec<f64>],
    z_true: &[f64],
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let m = check_points(points)?;
    if z_true.len() != m {
        return Err(Error::SizeMismatch(format!("z has dimension {}, want {m}", z_true.len())));
    }
    if delta < 0.0 {
        return Err(Error::InvalidParameter("delta must be nonnegative".into()));
    }
    let exact: Vec<f64> = points
        .iter()
        .map(|p| {
            z_true
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    if delta == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let radii: Vec<f64> = exact
            .iter()
            .map(|&r| (r + rng.random_range(-delta..=delta)).max(0.0))
            .collect();
        let sol = solve_spheres(points, &radii)?;
        let err: f64 = sol
            .z
            .iter()
            .zip(z_true)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err);
    }
    Ok(worst / delta)
}
