//! Shared assembly of unsigned quadratic feature blocks.

/// Appends the sign-dead feature blocks of a coordinate vector `x`:
/// first the squares `x_j^2`, then the absolute cross products
/// `|x_j * x_j'|` for `j < j'` in lexicographic order.
pub(crate) fn push_unsigned_quadratics(x: &[f64], out: &mut Vec<f64>) {
    for &a in x {
        out.push(a * a);
    }
    for j in 0..x.len() {
        for jp in (j + 1)..x.len() {
            out.push((x[j] * x[jp]).abs());
        }
    }
}

/// Feature length produced by [`push_unsigned_quadratics`] for `m` inputs.
pub(crate) fn unsigned_quadratic_len(m: usize) -> usize {
    m + m * (m - 1) / 2
}
