//! Numerical rank and null spaces via SVD.

use nalgebra::DMatrix;

/// Relative singular-value threshold shared by every rank decision.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Pads with zero rows so the SVD returns a full set of right singular
/// vectors. The null space is unchanged.
fn padded(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() >= m.ncols() {
        m.clone()
    } else {
        let mut out = DMatrix::zeros(m.ncols(), m.ncols());
        out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        out
    }
}

/// Number of singular values above `rel_tol · σ_max`; zero for a zero matrix.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.max();
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Orthonormal basis of `{x : m x = 0}` as matrix columns.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let svd = padded(m).svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let largest = svd.singular_values.max();
    let basis: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| largest == 0.0 || s <= rel_tol * largest)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if basis.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Stacks matrices with equal column counts vertically.
pub fn vstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}
