//! Normalized Laplacians, dense eigendecomposition with eigenspace grouping,
//! and the sign-/basis-invariant positional encoding.
//!
//! The encoding concatenates the eigenvalue list with squared eigenvector
//! entries and absolute cross products, so it is unchanged by sign flips of
//! individual eigenvectors. Within a degenerate eigenspace only group
//! aggregates (sums of squares over the group) are rotation invariant;
//! entrywise cross terms are not, and callers that rotate eigenspaces
//! should compare group aggregates.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::features;
use crate::graph::Graph;

/// Relative tolerance (vs. the spectral range) used to group numerically
/// equal eigenvalues into eigenspaces.
pub const GROUP_TOL: f64 = 1e-8;

/// Symmetric normalized Laplacian `I - D^{-1/2} A D^{-1/2}`.
///
/// When every degree equals some `r` the off-diagonal entries are written as
/// `-1/r` directly, so regular graphs get `I - A/r` exactly.
pub fn normalized_laplacian(g: &Graph) -> Result<DMatrix<f64>> {
    let n = g.node_count();
    for v in 0..n {
        if g.degree(v) == 0 {
            return Err(Error::IsolatedNode(v));
        }
    }
    let regular_degree = (1..n)
        .all(|v| g.degree(v) == g.degree(0))
        .then(|| g.degree(0));
    let mut l = DMatrix::<f64>::identity(n, n);
    match regular_degree {
        Some(r) => {
            let w = -1.0 / r as f64;
            for u in 0..n {
                for &v in g.neighbors(u) {
                    l[(u, v as usize)] = w;
                }
            }
        }
        None => {
            let inv_sqrt: Vec<f64> = (0..n).map(|v| 1.0 / (g.degree(v) as f64).sqrt()).collect();
            for u in 0..n {
                for &v in g.neighbors(u) {
                    let v = v as usize;
                    l[(u, v)] = -inv_sqrt[u] * inv_sqrt[v];
                }
            }
        }
    }
    Ok(l)
}

/// Ascending eigenpairs of a symmetric matrix, with eigenspace grouping.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// `n x count`; column `j` holds the eigenvector for `eigenvalues[j]`.
    eigenvectors: DMatrix<f64>,
    groups: Vec<Range<usize>>,
    group_tol_abs: f64,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Number of retained eigenpairs.
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Dimension of the underlying space (number of graph nodes).
    pub fn n(&self) -> usize {
        self.eigenvectors.nrows()
    }

    #[inline]
    pub fn phi(&self, j: usize, v: usize) -> f64 {
        self.eigenvectors[(v, j)]
    }

    pub fn eigenvector(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).into_owned()
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Index ranges of numerically equal eigenvalues, in ascending order.
    /// Ordering of eigenvectors inside a group carries no contract.
    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn group_tol_abs(&self) -> f64 {
        self.group_tol_abs
    }

    /// Per-node sums of squared eigenvector entries over each group,
    /// restricted to the retained indices. These aggregates are invariant
    /// under orthogonal basis changes within a group.
    pub fn group_sums_of_squares(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::<f64>::zeros(n, self.groups.len());
        for (gi, range) in self.groups.iter().enumerate() {
            for j in range.clone() {
                for v in 0..n {
                    out[(v, gi)] += self.phi(j, v) * self.phi(j, v);
                }
            }
        }
        out
    }
}

/// Computes the `count` smallest eigenpairs of a symmetric matrix with a
/// dense solver, ascending, with ties grouped into eigenspaces.
pub fn eigendecompose(l: &DMatrix<f64>, count: usize) -> Result<SpectralDecomposition> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(Error::SizeMismatch(format!("matrix is {}x{}", n, l.ncols())));
    }
    if count < 1 || count > n {
        return Err(Error::InsufficientEigenpairs { need: count, have: n });
    }
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((l[(i, j)] - l[(j, i)]).abs());
        }
    }
    if max_asym > 1e-12 {
        return Err(Error::NotSymmetric { max_asym });
    }

    let se = l.clone().symmetric_eigen();
    if se.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));

    let spectral_range = se.eigenvalues[order[n - 1]] - se.eigenvalues[order[0]];
    let group_tol_abs = GROUP_TOL * spectral_range;

    let eigenvalues: Vec<f64> = order[..count].iter().map(|&i| se.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, count);
    for (dst, &src) in order[..count].iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }

    let mut groups = Vec::new();
    let mut start = 0usize;
    for j in 1..count {
        if eigenvalues[j] - eigenvalues[j - 1] > group_tol_abs {
            groups.push(start..j);
            start = j;
        }
    }
    groups.push(start..count);

    Ok(SpectralDecomposition { eigenvalues, eigenvectors, groups, group_tol_abs })
}

/// Laplacian of `g` followed by [`eigendecompose`].
pub fn decompose_graph(g: &Graph, count: usize) -> Result<SpectralDecomposition> {
    let l = normalized_laplacian(g)?;
    eigendecompose(&l, count)
}

/// Returns a copy with eigenvector `j` scaled by `signs[j]`; each sign must
/// be exactly `+1` or `-1`. Eigenvalues and grouping are unchanged.
pub fn apply_sign_flips(dec: &SpectralDecomposition, signs: &[f64]) -> Result<SpectralDecomposition> {
    if signs.len() != dec.count() {
        return Err(Error::SizeMismatch(format!(
            "{} signs for {} eigenvectors",
            signs.len(),
            dec.count()
        )));
    }
    if let Some(s) = signs.iter().find(|s| s.abs() != 1.0) {
        return Err(Error::InvalidParameter(format!("sign {s} is not +-1")));
    }
    let mut out = dec.clone();
    for (j, &s) in signs.iter().enumerate() {
        if s < 0.0 {
            for v in 0..dec.n() {
                out.eigenvectors[(v, j)] = -out.eigenvectors[(v, j)];
            }
        }
    }
    Ok(out)
}

/// Replaces the eigenvectors of declared group `group` by their image under
/// the orthogonal matrix `q` (columns transform as `V_g <- V_g * q`).
pub fn apply_subspace_rotation(
    dec: &SpectralDecomposition,
    group: usize,
    q: &DMatrix<f64>,
) -> Result<SpectralDecomposition> {
    let range = dec
        .groups
        .get(group)
        .cloned()
        .ok_or(Error::InvalidGroup { index: group, groups: dec.groups.len() })?;
    let dim = range.len();
    if q.nrows() != dim || q.ncols() != dim {
        return Err(Error::SizeMismatch(format!(
            "rotation is {}x{} for a {dim}-dimensional eigenspace",
            q.nrows(),
            q.ncols()
        )));
    }
    let deviation = (q.transpose() * q - DMatrix::<f64>::identity(dim, dim)).abs().max();
    if deviation > 1e-10 {
        return Err(Error::NotOrthogonal { deviation });
    }
    let mut out = dec.clone();
    let rotated = dec.eigenvectors.columns(range.start, dim) * q;
    out.eigenvectors.columns_mut(range.start, dim).copy_from(&rotated);
    Ok(out)
}

/// Haar-ish random orthogonal matrix via QR of a Gaussian matrix with the
/// R-diagonal sign fix. For `dim == 1` this returns `[+1]` or `[-1]`.
pub fn random_orthogonal<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    use rand_distr::StandardNormal;
    let m = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = m.qr();
    let r_diag: Vec<f64> = (0..dim).map(|i| qr.r()[(i, i)]).collect();
    let mut q = qr.q();
    for (i, d) in r_diag.iter().enumerate() {
        if *d < 0.0 {
            for v in 0..dim {
                q[(v, i)] = -q[(v, i)];
            }
        }
    }
    q
}

/// Per-node sign-/basis-invariant positional encoding.
///
/// `psi(v) = (lambda_1..lambda_M, s(v), u(v))` where `s_i(v) = phi_i(v)^2`
/// and `u_{j,j'}(v) = |phi_j(v) phi_{j'}(v)|`, built from the M smallest
/// nonzero eigenpairs (the zero eigenvalue at index 0 is skipped).
#[derive(Debug, Clone)]
pub struct PositionalEncoding {
    m: usize,
    n: usize,
    lambdas: Vec<f64>,
    /// Row-major `n x dim()`.
    data: Vec<f64>,
}

impl PositionalEncoding {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Encoding length `2M + M(M-1)/2`.
    pub fn dim(&self) -> usize {
        self.m + features::unsigned_quadratic_len(self.m)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn psi(&self, v: usize) -> &[f64] {
        let d = self.dim();
        &self.data[v * d..(v + 1) * d]
    }

    /// CSV dump: header `node,lambda_1..lambda_M,s_1..s_M,u_1_2..u_{M-1}_M`,
    /// one row per node, 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let m = self.m;
        let mut s = String::from("node");
        for i in 1..=m {
            s.push_str(&format!(",lambda_{i}"));
        }
        for i in 1..=m {
            s.push_str(&format!(",s_{i}"));
        }
        for j in 1..=m {
            for jp in (j + 1)..=m {
                s.push_str(&format!(",u_{j}_{jp}"));
            }
        }
        s.push('\n');
        for v in 0..self.n {
            s.push_str(&v.to_string());
            for x in self.psi(v) {
                s.push_str(&format!(",{x:.16e}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Assembles the positional encoding from the `m` smallest nonzero
/// eigenpairs of `dec`; requires `m + 1` retained eigenpairs.
pub fn build_psi(dec: &SpectralDecomposition, m: usize) -> Result<PositionalEncoding> {
    if m < 1 {
        return Err(Error::InvalidParameter("spectral dimension M must be >= 1".into()));
    }
    if dec.count() < m + 1 {
        return Err(Error::InsufficientEigenpairs { need: m + 1, have: dec.count() });
    }
    let n = dec.n();
    let lambdas: Vec<f64> = dec.eigenvalues[1..=m].to_vec();
    let dim = 2 * m + m * (m - 1) / 2;
    let mut data = Vec::with_capacity(n * dim);
    let mut row = Vec::with_capacity(m);
    for v in 0..n {
        data.extend_from_slice(&lambdas);
        row.clear();
        row.extend((1..=m).map(|j| dec.phi(j, v)));
        features::push_unsigned_quadratics(&row, &mut data);
    }
    Ok(PositionalEncoding { m, n, lambdas, data })
}

/// Minimum Euclidean distance between encodings of distinct nodes,
/// by exhaustive O(n^2) sweep.
pub fn min_pairwise_separation(pe: &PositionalEncoding) -> f64 {
    let mut best = f64::INFINITY;
    for u in 0..pe.n {
        for v in (u + 1)..pe.n {
            let d2: f64 = pe
                .psi(u)
                .iter()
                .zip(pe.psi(v))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.min(d2.sqrt());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_regular;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k4_dec() -> SpectralDecomposition {
        decompose_graph(&Graph::complete(4), 4).unwrap()
    }

    #[test]
    fn laplacian_k4_entries() {
        let l = normalized_laplacian(&Graph::complete(4)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { -1.0 / 3.0 };
                assert_eq!(l[(i, j)], want);
            }
        }
    }

    #[test]
    fn laplacian_single_edge() {
        let l = normalized_laplacian(&Graph::path(2)).unwrap();
        assert_eq!(l[(0, 0)], 1.0);
        assert_eq!(l[(1, 1)], 1.0);
        assert_eq!(l[(0, 1)], -1.0);
        assert_eq!(l[(1, 0)], -1.0);
    }

    #[test]
    fn laplacian_c4_circulant() {
        let l = normalized_laplacian(&Graph::cycle(4)).unwrap();
        let first_row = [1.0, -0.5, 0.0, -0.5];
        for j in 0..4 {
            for i in 0..4 {
                assert_eq!(l[(i, (i + j) % 4)], first_row[j]);
            }
        }
    }

    #[test]
    fn laplacian_rejects_isolated_node() {
        let g = Graph::from_edges(3, &[(0, 1)], None).unwrap();
        assert!(matches!(normalized_laplacian(&g), Err(Error::IsolatedNode(2))));
    }

    #[test]
    fn eigendecompose_rejects_asymmetric() {
        let mut l = DMatrix::<f64>::identity(3, 3);
        l[(0, 1)] = 1e-6;
        assert!(matches!(eigendecompose(&l, 3), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn k4_spectrum_and_groups() {
        let dec = k4_dec();
        let ev = dec.eigenvalues();
        assert!(ev[0].abs() <= 1e-10);
        for (j, lambda) in ev.iter().enumerate().skip(1) {
            assert!((lambda - 4.0 / 3.0).abs() <= 1e-12, "lambda_{j} = {lambda}");
        }
        assert_eq!(dec.groups(), &[0..1, 1..4]);
    }

    #[test]
    fn single_edge_spectrum() {
        let dec = decompose_graph(&Graph::path(2), 2).unwrap();
        assert!(dec.eigenvalues()[0].abs() <= 1e-12);
        assert!((dec.eigenvalues()[1] - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn connected_graph_has_constant_kernel_vector() {
        let g = generate_random_regular(32, 3, 4).unwrap();
        let dec = decompose_graph(&g, 32).unwrap();
        assert!(dec.eigenvalues()[0].abs() <= 1e-10);
        let phi0 = dec.eigenvector(0);
        let c = phi0[0];
        assert!((c.abs() - (1.0 / 32.0f64).sqrt()).abs() <= 1e-9);
        for v in 0..32 {
            assert!((phi0[v] - c).abs() <= 1e-9, "phi_0 not constant at {v}");
        }
    }

    #[test]
    fn orthonormality_and_residual_bounds() {
        let g = generate_random_regular(48, 3, 11).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        let dec = eigendecompose(&l, 48).unwrap();
        for i in 0..48 {
            let vi = dec.eigenvector(i);
            for j in i..48 {
                let vj = dec.eigenvector(j);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vi.dot(&vj) - want).abs() <= 1e-8, "<phi_{i}, phi_{j}>");
            }
            let residual = (&l * &vi - dec.eigenvalues()[i] * &vi).norm();
            assert!(residual <= 1e-8, "residual {residual:.2e} at {i}");
        }
    }

    #[test]
    fn psi_at_m1_is_lambda_and_square() {
        let dec = k4_dec();
        let pe = build_psi(&dec, 1).unwrap();
        assert_eq!(pe.dim(), 2);
        for v in 0..4 {
            let psi = pe.psi(v);
            assert_eq!(psi[0], dec.eigenvalues()[1]);
            assert_eq!(psi[1], dec.phi(1, v) * dec.phi(1, v));
        }
    }

    #[test]
    fn psi_requires_enough_eigenpairs() {
        let dec = decompose_graph(&Graph::complete(4), 3).unwrap();
        assert!(build_psi(&dec, 3).is_err());
        assert!(build_psi(&dec, 2).is_ok());
    }

    #[test]
    fn k4_s_block_sums_to_three_quarters() {
        // Rows of the full eigenvector matrix are orthonormal, so the s-block
        // over the 3 nonzero modes sums to 1 - phi_0(v)^2 = 1 - 1/4.
        let pe = build_psi(&k4_dec(), 3).unwrap();
        for v in 0..4 {
            let s_sum: f64 = pe.psi(v)[3..6].iter().sum();
            assert!((s_sum - 0.75).abs() <= 1e-12);
        }
    }

    #[test]
    fn sign_flips_leave_psi_exactly_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for gseed in 0..20u64 {
            let g = generate_random_regular(16, 3, gseed).unwrap();
            let dec = decompose_graph(&g, 8).unwrap();
            let pe = build_psi(&dec, 5).unwrap();
            for _ in 0..50 {
                let signs: Vec<f64> =
                    (0..8).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                let flipped = apply_sign_flips(&dec, &signs).unwrap();
                let pe2 = build_psi(&flipped, 5).unwrap();
                for v in 0..16 {
                    assert_eq!(pe.psi(v), pe2.psi(v), "node {v} under {signs:?}");
                }
            }
        }
    }

    #[test]
    fn sign_flips_preserve_orthonormality_and_eigenvalues() {
        let dec = k4_dec();
        let signs = [1.0, -1.0, -1.0, 1.0];
        let flipped = apply_sign_flips(&dec, &signs).unwrap();
        assert_eq!(flipped.eigenvalues(), dec.eigenvalues());
        let vtv = flipped.eigenvectors().transpose() * flipped.eigenvectors();
        assert!((vtv - DMatrix::<f64>::identity(4, 4)).abs().max() <= 1e-12);
    }

    #[test]
    fn sign_flips_validate_input() {
        let dec = k4_dec();
        assert!(apply_sign_flips(&dec, &[1.0, 1.0]).is_err());
        assert!(apply_sign_flips(&dec, &[1.0, 0.5, 1.0, 1.0]).is_err());
    }

    #[test]
    fn identity_rotation_is_noop() {
        let dec = k4_dec();
        let q = DMatrix::<f64>::identity(3, 3);
        let rotated = apply_subspace_rotation(&dec, 1, &q).unwrap();
        assert_eq!(rotated.eigenvectors(), dec.eigenvectors());
    }

    #[test]
    fn rotation_validates_input() {
        let dec = k4_dec();
        assert!(matches!(
            apply_subspace_rotation(&dec, 7, &DMatrix::identity(3, 3)),
            Err(Error::InvalidGroup { .. })
        ));
        assert!(apply_subspace_rotation(&dec, 1, &DMatrix::identity(2, 2)).is_err());
        let skew = DMatrix::<f64>::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.1 });
        assert!(matches!(
            apply_subspace_rotation(&dec, 1, &skew),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn rotation_preserves_group_sums_but_moves_psi() {
        let dec = k4_dec();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let q = random_orthogonal(3, &mut rng);
        let rotated = apply_subspace_rotation(&dec, 1, &q).unwrap();

        let before = dec.group_sums_of_squares();
        let after = rotated.group_sums_of_squares();
        assert!((before - after).abs().max() <= 1e-10);

        // Eigen residuals survive the rotation.
        let l = normalized_laplacian(&Graph::complete(4)).unwrap();
        for j in 0..4 {
            let v = rotated.eigenvector(j);
            assert!((&l * &v - rotated.eigenvalues()[j] * &v).norm() <= 1e-9);
        }

        // Entrywise, the encoding does move under a generic rotation of a
        // degenerate eigenspace.
        let pe = build_psi(&dec, 3).unwrap();
        let pe_rot = build_psi(&rotated, 3).unwrap();
        let max_dev: f64 = (0..4)
            .flat_map(|v| pe.psi(v).iter().zip(pe_rot.psi(v)).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        assert!(max_dev > 1e-3, "expected a visible entrywise move, got {max_dev:.2e}");
    }

    #[test]
    fn one_dimensional_rotation_is_a_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..8 {
            let q = random_orthogonal(1, &mut rng);
            assert!(q[(0, 0)] == 1.0 || q[(0, 0)] == -1.0);
        }
    }

    #[test]
    fn cross_term_consistency_identity() {
        let g = generate_random_regular(24, 3, 6).unwrap();
        let dec = decompose_graph(&g, 9).unwrap();
        let pe = build_psi(&dec, 8).unwrap();
        let m = 8;
        for v in 0..24 {
            let psi = pe.psi(v);
            let s = &psi[m..2 * m];
            let mut idx = 2 * m;
            for j in 0..m {
                for jp in (j + 1)..m {
                    let u = psi[idx];
                    assert!(
                        (u * u - s[j] * s[jp]).abs() <= 1e-12,
                        "u_{j}{jp}^2 != s_{j} s_{jp} at node {v}"
                    );
                    idx += 1;
                }
            }
        }
    }

    #[test]
    fn min_separation_vanishes_under_symmetry() {
        // Two-node edge: phi_1 = (a, -a), squares coincide.
        let dec = decompose_graph(&Graph::path(2), 2).unwrap();
        let pe = build_psi(&dec, 1).unwrap();
        assert!(min_pairwise_separation(&pe) <= 1e-15);

        // C6 antipodes: the automorphism v -> v+3 rescales every eigenspace
        // by a global sign, which the encoding is dead to.
        let dec = decompose_graph(&Graph::cycle(6), 6).unwrap();
        let pe = build_psi(&dec, 5).unwrap();
        let psi0: Vec<f64> = pe.psi(0).to_vec();
        let psi3: Vec<f64> = pe.psi(3).to_vec();
        let dist: f64 = psi0
            .iter()
            .zip(&psi3)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(dist <= 1e-12, "antipodal distance {dist:.2e}");
        assert!(min_pairwise_separation(&pe) <= 1e-12);
    }

    #[test]
    fn min_separation_positive_on_random_regular() {
        let g = generate_random_regular(256, 3, 1).unwrap();
        let dec = decompose_graph(&g, 9).unwrap();
        let pe = build_psi(&dec, 8).unwrap();
        let sep = min_pairwise_separation(&pe);
        assert!(sep > 1e-9, "separation {sep:.3e}");
    }

    #[test]
    fn pe_csv_header_and_shape() {
        let pe = build_psi(&k4_dec(), 3).unwrap();
        let csv = pe.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "node,lambda_1,lambda_2,lambda_3,s_1,s_2,s_3,u_1_2,u_1_3,u_2_3"
        );
        assert_eq!(csv.lines().count(), 5);
        for line in csv.lines().skip(1) {
            assert_eq!(line.split(',').count(), 10);
        }
    }
}
