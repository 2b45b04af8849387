//! Deterministic real-matrix primitives: rank, nullspace, row pseudoinverse,
//! and entrywise residuals.
//!
//! Every scheme construction in this crate reduces to a handful of these
//! operations, so they carry the numerical policy for the whole artifact:
//! ranks come from singular values with a relative cutoff, nullspaces from
//! the right singular vectors of the near-zero singular values.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense real matrix. All channel, precoder, and filter matrices use this.
pub type RealMatrix = DMatrix<f64>;

/// Numerical cutoffs used by rank and residual decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative singular-value cutoff: `sigma > rank_rel_tol * sigma_max`
    /// counts toward the rank.
    pub rank_rel_tol: f64,
    /// Absolute bound on max-abs residuals of alignment equalities.
    pub residual_abs_tol: f64,
}

impl Tolerance {
    pub fn new(rank_rel_tol: f64, residual_abs_tol: f64) -> Result<Self> {
        for (name, v) in [
            ("rank_rel_tol", rank_rel_tol),
            ("residual_abs_tol", residual_abs_tol),
        ] {
            if !(v > 0.0 && v < 1e-2) {
                return Err(Error::InvalidInput(format!(
                    "{name} must lie in (0, 1e-2), got {v}"
                )));
            }
        }
        Ok(Self {
            rank_rel_tol,
            residual_abs_tol,
        })
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rank_rel_tol: 1e-10,
            residual_abs_tol: 1e-8,
        }
    }
}

fn ensure_finite(name: &str, a: &RealMatrix) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} contains non-finite entries"
        )))
    }
}

/// Largest absolute entry; 0 for empty matrices.
pub fn max_abs(a: &RealMatrix) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Singular values of `a` (descending), padded with exact zeros so the list
/// always has `a.ncols()` entries. Uses a square zero-padded copy when the
/// matrix is wide so the full right singular basis exists.
fn singular_values_full(a: &RealMatrix) -> Result<Vec<f64>> {
    let (svs, _) = svd_right(a)?;
    Ok(svs)
}

/// Returns `(singular_values, v)` where `v` is the full `n x n` right
/// singular basis of the `m x n` input. The singular-value list has length
/// `n`; values beyond `min(m, n)` are exact zeros.
fn svd_right(a: &RealMatrix) -> Result<(Vec<f64>, RealMatrix)> {
    let (m, n) = a.shape();
    if n == 0 {
        return Ok((Vec::new(), RealMatrix::zeros(0, 0)));
    }
    if m == 0 {
        return Ok((vec![0.0; n], RealMatrix::identity(n, n)));
    }
    // Pad wide matrices to square so the SVD exposes all n right vectors.
    let work = if m < n {
        let mut padded = RealMatrix::zeros(n, n);
        padded.view_mut((0, 0), (m, n)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = work
        .try_svd(false, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalConditioning("SVD failed to converge".into()))?;
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut svs = vec![0.0; n];
    for (i, s) in svd.singular_values.iter().enumerate() {
        svs[i] = *s;
    }
    Ok((svs, v_t.transpose()))
}

/// Number of singular values above `rank_rel_tol` times the largest one.
/// The all-zero matrix has rank 0.
pub fn rank(a: &RealMatrix, tol: &Tolerance) -> Result<usize> {
    ensure_finite("rank input", a)?;
    let svs = singular_values_full(a)?;
    let smax = svs.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(svs.iter().filter(|&&s| s > tol.rank_rel_tol * smax).count())
}

/// Orthonormal basis of `{x : Ax = 0}` as the columns of an
/// `ncols x nullity` matrix. A trivial nullspace yields zero columns.
pub fn nullspace_basis(a: &RealMatrix, tol: &Tolerance) -> Result<RealMatrix> {
    ensure_finite("nullspace input", a)?;
    let n = a.ncols();
    let (svs, v) = svd_right(a)?;
    let smax = svs.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = tol.rank_rel_tol * smax;
    let keep: Vec<usize> = (0..n).filter(|&j| svs[j] <= cutoff).collect();
    let mut basis = RealMatrix::zeros(n, keep.len());
    for (out, &j) in keep.iter().enumerate() {
        basis.set_column(out, &v.column(j));
    }
    Ok(basis)
}

/// `c` linearly independent columns inside the nullspace of `a`, produced by
/// mixing the orthonormal basis with a seeded random coefficient matrix.
pub fn nullspace_subset(
    a: &RealMatrix,
    c: usize,
    tol: &Tolerance,
    rng_seed: u64,
) -> Result<RealMatrix> {
    let basis = nullspace_basis(a, tol)?;
    let nullity = basis.ncols();
    if c > nullity {
        return Err(Error::InfeasibleDesign(format!(
            "requested {c} nullspace columns but nullity({} x {} matrix) = {nullity}; \
             need c <= nullity",
            a.nrows(),
            a.ncols()
        )));
    }
    if c == 0 {
        return Ok(RealMatrix::zeros(a.ncols(), 0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..100 {
        let mix = RealMatrix::from_fn(nullity, c, |_, _| rng.random_range(-1.0..=1.0));
        let mut cand = &basis * &mix;
        // Unit-norm columns keep residual scales comparable across designs.
        for mut col in cand.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        if rank(&cand, tol)? == c {
            return Ok(cand);
        }
    }
    Err(Error::DegenerateDistribution(format!(
        "could not draw {c} independent nullspace columns in 100 attempts"
    )))
}

/// Right inverse `G^T (G G^T)^{-1}` of a full-row-rank `K x N` matrix
/// (`K <= N`), so that `G * pseudo_inverse_row(G) = I_K`.
pub fn pseudo_inverse_row(g: &RealMatrix) -> Result<RealMatrix> {
    ensure_finite("pseudoinverse input", g)?;
    let (k, n) = g.shape();
    if k == 0 {
        return Ok(RealMatrix::zeros(n, 0));
    }
    if k > n {
        return Err(Error::SingularChannel(format!(
            "{k} x {n} matrix cannot have full row rank"
        )));
    }
    let gram = g * g.transpose();
    let inv = gram.try_inverse().ok_or_else(|| {
        Error::SingularChannel(format!("{k} x {n} matrix is row rank deficient"))
    })?;
    Ok(g.transpose() * inv)
}

/// Max-abs entry of `a - b`; the certificate value for alignment equalities.
pub fn subspace_residual(a: &RealMatrix, b: &RealMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::InvalidInput(format!(
            "residual shapes differ: {} x {} vs {} x {}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(max_abs(&(a - b)))
}

/// Smallest singular value of `a`; 0 for empty matrices.
pub fn smallest_singular_value(a: &RealMatrix) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let svs = singular_values_full(a)?;
    Ok(svs.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// `sigma_max / sigma_min` over the `min(m, n)` singular values.
pub fn condition_number(a: &RealMatrix) -> Result<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(1.0);
    }
    let svs = singular_values_full(a)?;
    let take = m.min(n);
    let smax = svs[..take].iter().cloned().fold(0.0_f64, f64::max);
    let smin = svs[..take].iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

/// Stack `blocks` side by side; rows must agree. Empty-column blocks are
/// allowed and skipped.
pub fn hcat(blocks: &[&RealMatrix]) -> RealMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        if b.ncols() == 0 {
            continue;
        }
        assert_eq!(b.nrows(), rows, "hcat blocks must share a row count");
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Stack `blocks` on top of each other; columns must agree.
pub fn vcat(blocks: &[&RealMatrix]) -> RealMatrix {
    let cols = blocks.iter().map(|b| b.ncols()).max().unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        if b.nrows() == 0 {
            continue;
        }
        assert_eq!(b.ncols(), cols, "vcat blocks must share a column count");
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

/// Block-diagonal stacking of the given blocks.
pub fn block_diag(blocks: &[&RealMatrix]) -> RealMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> RealMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RealMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
    }

    #[test]
    fn rank_of_identity_is_full() {
        let tol = Tolerance::default();
        let a = RealMatrix::identity(3, 3);
        assert_eq!(rank(&a, &tol).unwrap(), 3);
    }

    #[test]
    fn rank_of_zero_matrix_is_zero() {
        let tol = Tolerance::default();
        let a = RealMatrix::zeros(2, 2);
        assert_eq!(rank(&a, &tol).unwrap(), 0);
    }

    #[test]
    fn rank_of_low_rank_product() {
        // 4x6 built from rank-2 factors; the construction is the oracle.
        let tol = Tolerance::default();
        let left = seeded_matrix(4, 2, 11);
        let right = seeded_matrix(2, 6, 12);
        let a = &left * &right;
        assert_eq!(rank(&a, &tol).unwrap(), 2);
    }

    #[test]
    fn rank_rejects_non_finite() {
        let tol = Tolerance::default();
        let mut a = RealMatrix::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(rank(&a, &tol), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn nullspace_of_coordinate_row() {
        let tol = Tolerance::default();
        let a = RealMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let b = nullspace_basis(&a, &tol).unwrap();
        assert_eq!(b.shape(), (2, 1));
        assert!(b[(0, 0)].abs() < 1e-12);
        assert!((b[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nullspace_of_identity_is_trivial() {
        let tol = Tolerance::default();
        let a = RealMatrix::identity(2, 2);
        let b = nullspace_basis(&a, &tol).unwrap();
        assert_eq!(b.ncols(), 0);
    }

    #[test]
    fn nullspace_of_wide_full_row_rank() {
        let tol = Tolerance::default();
        let a = seeded_matrix(3, 5, 21);
        let b = nullspace_basis(&a, &tol).unwrap();
        assert_eq!(b.shape(), (5, 2));
        assert!(max_abs(&(&a * &b)) <= 1e-10, "residual {}", max_abs(&(&a * &b)));
        let gram = b.transpose() * &b;
        assert!(max_abs(&(gram - RealMatrix::identity(2, 2))) <= 1e-10);
    }

    #[test]
    fn nullspace_of_zero_row_matrix_is_identity() {
        let tol = Tolerance::default();
        let a = RealMatrix::zeros(0, 4);
        let b = nullspace_basis(&a, &tol).unwrap();
        assert_eq!(b.shape(), (4, 4));
        let gram = b.transpose() * &b;
        assert!(max_abs(&(gram - RealMatrix::identity(4, 4))) <= 1e-12);
    }

    #[test]
    fn rank_nullity_split_holds_over_random_shapes() {
        let tol = Tolerance::default();
        for seed in 0..200_u64 {
            let rows = 1 + (seed as usize % 6);
            let cols = 1 + ((seed as usize / 6) % 6);
            let inner = 1 + (seed as usize % 3).min(rows.min(cols));
            let a = &seeded_matrix(rows, inner, seed * 3 + 1) * &seeded_matrix(inner, cols, seed * 3 + 2);
            let r = rank(&a, &tol).unwrap();
            let b = nullspace_basis(&a, &tol).unwrap();
            assert_eq!(r + b.ncols(), cols, "shape {rows}x{cols} inner {inner}");
        }
    }

    #[test]
    fn subset_spans_full_nullspace_when_c_equals_nullity() {
        let tol = Tolerance::default();
        let a = seeded_matrix(2, 5, 31);
        let basis = nullspace_basis(&a, &tol).unwrap();
        let subset = nullspace_subset(&a, 3, &tol, 7).unwrap();
        assert_eq!(subset.shape(), (5, 3));
        // Same span: stacking the two bases must not raise the rank.
        let joint = hcat(&[&basis, &subset]);
        assert_eq!(rank(&joint, &tol).unwrap(), 3);
        assert!(max_abs(&(&a * &subset)) <= 1e-10);
    }

    #[test]
    fn subset_of_zero_columns_is_empty() {
        let tol = Tolerance::default();
        let a = seeded_matrix(2, 4, 41);
        let subset = nullspace_subset(&a, 0, &tol, 7).unwrap();
        assert_eq!(subset.shape(), (4, 0));
    }

    #[test]
    fn subset_single_vector_is_orthogonal_to_row() {
        let tol = Tolerance::default();
        let a = RealMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let subset = nullspace_subset(&a, 1, &tol, 9).unwrap();
        assert_eq!(subset.shape(), (3, 1));
        assert!((subset.column(0).norm() - 1.0).abs() <= 1e-12);
        assert!(subset[(0, 0)].abs() <= 1e-12);
    }

    #[test]
    fn subset_beyond_nullity_is_infeasible() {
        let tol = Tolerance::default();
        let a = seeded_matrix(3, 4, 51);
        let err = nullspace_subset(&a, 2, &tol, 7).unwrap_err();
        match err {
            Error::InfeasibleDesign(msg) => assert!(msg.contains("nullity"), "{msg}"),
            other => panic!("expected infeasible design, got {other}"),
        }
    }

    #[test]
    fn pseudo_inverse_of_identity() {
        let g = RealMatrix::identity(3, 3);
        let m = pseudo_inverse_row(&g).unwrap();
        assert!(max_abs(&(m - RealMatrix::identity(3, 3))) <= 1e-12);
    }

    #[test]
    fn pseudo_inverse_of_scalar_row() {
        let g = RealMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        let m = pseudo_inverse_row(&g).unwrap();
        assert!((m[(0, 0)] - 0.5).abs() <= 1e-12);
        assert!(m[(1, 0)].abs() <= 1e-12);
    }

    #[test]
    fn pseudo_inverse_right_identity_on_random_wide() {
        let g = seeded_matrix(2, 4, 61);
        let m = pseudo_inverse_row(&g).unwrap();
        assert!(max_abs(&(&g * &m - RealMatrix::identity(2, 2))) <= 1e-10);
    }

    #[test]
    fn pseudo_inverse_rejects_rank_deficient() {
        let mut g = RealMatrix::zeros(2, 3);
        g.set_row(0, &nalgebra::RowDVector::from_row_slice(&[1.0, 2.0, 3.0]));
        g.set_row(1, &nalgebra::RowDVector::from_row_slice(&[2.0, 4.0, 6.0]));
        assert!(matches!(
            pseudo_inverse_row(&g),
            Err(Error::SingularChannel(_))
        ));
    }

    #[test]
    fn pseudo_inverse_identity_holds_on_many_draws() {
        // 1000 random full-row-rank matrices: G * M = I to residual tolerance.
        let tol = Tolerance::default();
        for seed in 0..1000_u64 {
            let k = 1 + (seed as usize % 4);
            let n = k + (seed as usize % 3);
            let g = seeded_matrix(k, n, 1000 + seed);
            if rank(&g, &tol).unwrap() < k {
                continue;
            }
            let m = pseudo_inverse_row(&g).unwrap();
            let resid = max_abs(&(&g * &m - RealMatrix::identity(k, k)));
            assert!(resid <= tol.residual_abs_tol, "seed {seed}: residual {resid}");
        }
    }

    #[test]
    fn residual_of_equal_matrices_is_zero() {
        let a = seeded_matrix(3, 3, 71);
        assert_eq!(subspace_residual(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn residual_tracks_small_perturbations() {
        let a = seeded_matrix(3, 3, 81);
        let mut b = a.clone();
        b[(1, 2)] += 1e-12;
        assert!(subspace_residual(&a, &b).unwrap() <= 1e-12 + 1e-27);
    }

    #[test]
    fn residual_rejects_shape_mismatch() {
        let a = RealMatrix::zeros(2, 2);
        let b = RealMatrix::zeros(2, 3);
        assert!(matches!(
            subspace_residual(&a, &b),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn tolerance_bounds_are_enforced() {
        assert!(Tolerance::new(1e-10, 1e-8).is_ok());
        assert!(Tolerance::new(0.0, 1e-8).is_err());
        assert!(Tolerance::new(1e-10, 0.5).is_err());
    }

    #[test]
    fn stacking_helpers_agree_with_shapes() {
        let a = seeded_matrix(2, 3, 91);
        let b = seeded_matrix(2, 1, 92);
        let h = hcat(&[&a, &b]);
        assert_eq!(h.shape(), (2, 4));
        assert_eq!(h[(1, 3)], b[(1, 0)]);
        let v = vcat(&[&a.transpose(), &b.transpose()]);
        assert_eq!(v.shape(), (4, 2));
        let d = block_diag(&[&a, &b]);
        assert_eq!(d.shape(), (4, 4));
        assert_eq!(d[(2, 3)], b[(0, 0)]);
        assert_eq!(d[(0, 3)], 0.0);
    }
}
