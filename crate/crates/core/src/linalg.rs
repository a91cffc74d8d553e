//! Complex linear-algebra helpers shared by the capacity, beamforming, and
//! sensing engines: Hermitian log-determinants, eigen/whitening utilities,
//! nullspaces, and the classical water-filling allocator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{MaError, Result};

/// `a^H b` for complex slices of equal length.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Squared Euclidean norm of a complex slice.
pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Builds a column vector from a slice.
pub fn col(v: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(v)
}

/// Builds a matrix whose columns are the given vectors.
pub fn from_columns(cols: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let rows = cols.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// `log2 det(I + A)` for Hermitian positive-semidefinite `A`, via the
/// eigenvalues of the symmetrized argument. Negative eigenvalue dust from
/// roundoff is clamped at zero.
pub fn log2_det_i_plus(a: &DMatrix<Complex64>) -> Result<f64> {
    if !a.is_square() {
        return Err(MaError::DimensionMismatch(format!(
            "log2_det_i_plus needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let eig = hermitian_eigenvalues(a);
    let mut acc = 0.0;
    for lam in eig {
        let lam = lam.max(-1e-12);
        if lam < -1e-9 {
            return Err(MaError::Numerical(format!(
                "log2_det_i_plus: eigenvalue {lam} makes I + A indefinite"
            )));
        }
        acc += lam.max(0.0).ln_1p();
    }
    Ok(acc / std::f64::consts::LN_2)
}

/// Real eigenvalues of a (numerically) Hermitian matrix, ascending order.
pub fn hermitian_eigenvalues(a: &DMatrix<Complex64>) -> Vec<f64> {
    let sym = (a + a.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Full Hermitian eigendecomposition `(eigenvalues, eigenvector columns)`,
/// eigenvalues descending.
pub fn hermitian_eigen(a: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let sym = (a + a.adjoint()).scale(0.5);
    let se = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(se.eigenvectors.nrows(), order.len(), |r, c| {
        se.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

/// Hermitian inverse square root `A^{−1/2}` (for noise whitening). Requires
/// `A ≻ 0`.
pub fn inv_sqrt_hermitian(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let (vals, vecs) = hermitian_eigen(a);
    if vals.iter().any(|&l| l <= 0.0) {
        return Err(MaError::Numerical(
            "inv_sqrt_hermitian requires a positive-definite matrix".into(),
        ));
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| Complex64::new(1.0 / l.sqrt(), 0.0)),
    ));
    Ok(&vecs * d * vecs.adjoint())
}

/// Solves `A x = b` by LU with a singularity check.
pub fn solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| MaError::Numerical("singular linear system".into()))
}

/// Inverse of a square complex matrix.
pub fn invert(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| MaError::Numerical("matrix inversion failed (singular)".into()))
}

/// Orthonormal basis of the (right) nullspace of `A`, i.e. vectors `x` with
/// `A x = 0`; rows with relative norm below `tol` after orthogonalization are
/// treated as dependent.
///
/// Implementation: orthonormalize the conjugated rows of `A` (a basis of the
/// row space) by modified Gram–Schmidt, then sweep the canonical basis,
/// projecting out the row space and already-accepted nullspace directions.
/// Each accepted vector gets a second orthogonalization pass, which pushes the
/// residual `‖A x‖` down to machine precision ("twice is enough").
pub fn nullspace(a: &DMatrix<Complex64>, tol: f64) -> DMatrix<Complex64> {
    let n = a.ncols();
    let scale = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    let mut basis: Vec<DVector<Complex64>> = Vec::new(); // row space, orthonormal
    for r in 0..a.nrows() {
        let mut v: DVector<Complex64> = a.row(r).transpose().map(|z| z.conj());
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        if v.norm() > tol * scale {
            let norm = v.norm();
            basis.push(v.unscale(norm));
        }
    }
    let rank = basis.len();
    // Visit canonical vectors farthest from the row space first: this keeps
    // every accepted direction well conditioned.
    let mut order: Vec<(usize, f64)> = (0..n)
        .map(|i| {
            let mut v: DVector<Complex64> = DVector::zeros(n);
            v[i] = Complex64::new(1.0, 0.0);
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
            (i, v.norm())
        })
        .collect();
    order.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    let mut null_cols: Vec<DVector<Complex64>> = Vec::new();
    for &(i, _) in &order {
        if rank + null_cols.len() == n {
            break;
        }
        let mut v: DVector<Complex64> = DVector::zeros(n);
        v[i] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in basis.iter().chain(&null_cols) {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        if v.norm() > 1e-6 {
            let norm = v.norm();
            null_cols.push(v.unscale(norm));
        }
    }
    let mut out = DMatrix::zeros(n, null_cols.len());
    for (c, v) in null_cols.iter().enumerate() {
        out.set_column(c, v);
    }
    out
}

/// Classical water-filling: maximizes `Σ log(1 + gᵢ pᵢ)` over `pᵢ ≥ 0` with
/// `Σ pᵢ = budget`, returning the per-mode powers. Gains must be nonnegative;
/// zero-gain modes receive zero power.
pub fn water_fill(gains: &[f64], budget: f64) -> Vec<f64> {
    assert!(budget >= 0.0, "water_fill budget must be nonnegative");
    let mut powers = vec![0.0; gains.len()];
    if budget == 0.0 || gains.iter().all(|&g| g <= 0.0) {
        return powers;
    }
    // Water level μ solves Σ max(0, μ − 1/gᵢ) = budget; the left side is
    // piecewise linear and increasing, so sort the cut points and walk them.
    let mut cuts: Vec<f64> = gains
        .iter()
        .filter(|&&g| g > 0.0)
        .map(|&g| 1.0 / g)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut active = 0usize;
    let mut cut_sum = 0.0;
    for (idx, &c) in cuts.iter().enumerate() {
        // With modes 0..=idx active, the budget consumed at level c is
        // (idx+1)·c − Σ cuts[0..=idx].
        let consumed = (idx as f64 + 1.0) * c - (cut_sum + c);
        if consumed >= budget {
            break;
        }
        active = idx + 1;
        cut_sum += c;
    }
    if active == 0 {
        // Budget too small to reach the second cut point: all water on top of
        // the best mode.
        active = 1;
        cut_sum = cuts[0];
    }
    let mu = (budget + cut_sum) / active as f64;
    for (p, &g) in powers.iter_mut().zip(gains) {
        if g > 0.0 {
            *p = (mu - 1.0 / g).max(0.0);
        }
    }
    // Normalize out roundoff so the budget binds exactly.
    let total: f64 = powers.iter().sum();
    if total > 0.0 {
        let scale = budget / total;
        for p in &mut powers {
            *p *= scale;
        }
    }
    powers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{keyed_rng, standard_complex};
    use approx::assert_abs_diff_eq;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = keyed_rng(seed, 99, 0, 0);
        DMatrix::from_fn(rows, cols, |_, _| standard_complex(&mut rng))
    }

    #[test]
    fn logdet_matches_scalar_case() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        // det(I + diag(3,1)) = 8 → log2 = 3.
        assert_abs_diff_eq!(log2_det_i_plus(&a).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn logdet_agrees_with_lu_determinant() {
        let h = random_matrix(4, 4, 5);
        let a = &h * h.adjoint(); // Hermitian PSD
        let m = DMatrix::identity(4, 4) + a.clone();
        let det = m.lu().determinant();
        assert_abs_diff_eq!(
            log2_det_i_plus(&a).unwrap(),
            det.re.log2(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn nullspace_is_orthonormal_and_annihilating() {
        let a = random_matrix(2, 5, 11);
        let ns = nullspace(&a, 1e-10);
        assert_eq!(ns.ncols(), 3);
        let prod = &a * &ns;
        assert!(prod.iter().all(|z| z.norm() < 1e-10));
        let gram = ns.adjoint() * &ns;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[(i, j)].re, want, epsilon = 1e-10);
                assert_abs_diff_eq!(gram[(i, j)].im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn water_fill_equal_gains_splits_evenly() {
        let p = water_fill(&[2.0, 2.0, 2.0], 3.0);
        for &x in &p {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn water_fill_kkt_conditions() {
        let gains = [4.0, 1.0, 0.25, 0.0];
        let budget = 2.0;
        let p = water_fill(&gains, budget);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), budget, epsilon = 1e-12);
        // Active modes share a common water level; inactive modes sit above it.
        let levels: Vec<f64> = gains
            .iter()
            .zip(&p)
            .filter(|(_, &pi)| pi > 1e-12)
            .map(|(&g, &pi)| pi + 1.0 / g)
            .collect();
        for w in levels.windows(2) {
            assert_abs_diff_eq!(w[0], w[1], epsilon = 1e-9);
        }
        let mu = levels[0];
        for (&g, &pi) in gains.iter().zip(&p) {
            if pi <= 1e-12 && g > 0.0 {
                assert!(1.0 / g >= mu - 1e-9);
            }
        }
        assert_eq!(p[3], 0.0);
    }

    #[test]
    fn water_fill_beats_random_allocations() {
        let gains = [3.0, 0.7, 0.1];
        let budget = 1.5;
        let p = water_fill(&gains, budget);
        let objective = |alloc: &[f64]| -> f64 {
            alloc
                .iter()
                .zip(&gains)
                .map(|(&pi, &g)| (1.0 + g * pi).ln())
                .sum()
        };
        let best = objective(&p);
        let mut rng = keyed_rng(3, 98, 0, 0);
        for _ in 0..2000 {
            let raw: Vec<f64> = (0..3).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
            let s: f64 = raw.iter().sum();
            let alloc: Vec<f64> = raw.iter().map(|r| r / s * budget).collect();
            assert!(objective(&alloc) <= best + 1e-9);
        }
    }

    #[test]
    fn whitening_inverts_covariance() {
        let h = random_matrix(3, 3, 21);
        let a = &h * h.adjoint() + DMatrix::identity(3, 3);
        let w = inv_sqrt_hermitian(&a).unwrap();
        let should_be_identity = &w * &a * &w;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(should_be_identity[(i, j)].re, want, epsilon = 1e-9);
                assert_abs_diff_eq!(should_be_identity[(i, j)].im, 0.0, epsilon = 1e-9);
            }
        }
    }
}
