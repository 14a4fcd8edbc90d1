use nalgebra::DMatrix;

use super::{EsnError, StateMatrix};

/// Gram statistics of a harvested state matrix, reusable across penalties.
///
/// `gram = X Xᵀ` and `cross = X Yᵀ`; solving for several `lambda` values
/// only refactors `gram + lambda I`.
#[derive(Debug, Clone)]
pub struct RidgeProblem {
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
}

impl RidgeProblem {
    pub fn new(states: &StateMatrix, targets: &DMatrix<f64>) -> Result<Self, EsnError> {
        let x = states.matrix();
        if targets.ncols() != x.ncols() {
            return Err(EsnError::Shape(format!(
                "targets have {} columns but the state matrix has {}",
                targets.ncols(),
                x.ncols()
            )));
        }
        let rows = x.nrows();
        let mut gram = DMatrix::zeros(rows, rows);
        gram.gemm(1.0, x, &x.transpose(), 0.0);
        let mut cross = DMatrix::zeros(rows, targets.nrows());
        cross.gemm(1.0, x, &targets.transpose(), 0.0);
        Ok(Self { gram, cross })
    }

    /// `W_out = Y Xᵀ (X Xᵀ + λI)⁻¹` via Cholesky, as an `N_y x rows` matrix.
    pub fn solve(&self, lambda: f64) -> Result<DMatrix<f64>, EsnError> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(EsnError::Config(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        let mut a = self.gram.clone();
        if lambda > 0.0 {
            for i in 0..a.nrows() {
                a[(i, i)] += lambda;
            }
        }
        cholesky_in_place(&mut a).map_err(|pivot| EsnError::Singular { lambda, pivot })?;
        let mut sol = self.cross.clone();
        cholesky_solve(&a, &mut sol);
        Ok(sol.transpose())
    }
}

/// Lower-triangular Cholesky factor written over `a`'s lower triangle.
///
/// Fails with the offending pivot index when a pivot drops below
/// `n * eps * max_diag`, i.e. the matrix is numerically semidefinite.
pub(crate) fn cholesky_in_place(a: &mut DMatrix<f64>) -> Result<(), usize> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tol = n as f64 * f64::EPSILON * max_diag;
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if !d.is_finite() || d <= tol {
            return Err(j);
        }
        let l_jj = d.sqrt();
        a[(j, j)] = l_jj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = s / l_jj;
        }
    }
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(())
}

/// Solves `L Lᵀ z = b` column-wise in place, `l` as produced by `cholesky_in_place`.
pub(crate) fn cholesky_solve(l: &DMatrix<f64>, b: &mut DMatrix<f64>) {
    let n = l.nrows();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut s = b[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * b[(k, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * b[(k, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
    }
}

/// Ridge readout for a harvested state matrix.
pub fn fit_readout(
    states: &StateMatrix,
    targets: &DMatrix<f64>,
    lambda: f64,
) -> Result<DMatrix<f64>, EsnError> {
    RidgeProblem::new(states, targets)?.solve(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn objective(w: &DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> f64 {
        (y - w * x).norm_squared() + lambda * w.norm_squared()
    }

    #[test]
    fn cholesky_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random(6, 6, &mut rng);
        let a = &b * b.transpose() + DMatrix::identity(6, 6);
        let mut l = a.clone();
        cholesky_in_place(&mut l).unwrap();
        assert!((&l * l.transpose() - &a).norm() < 1e-12);
    }

    #[test]
    fn interpolates_square_invertible_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(12, 12, &mut rng);
        let y = random(1, 12, &mut rng);
        let w = fit_readout(&StateMatrix::from_matrix(x.clone()), &y, 0.0).unwrap();
        assert!((&w * &x - &y).norm() / y.norm() < 1e-8);
    }

    #[test]
    fn heavy_penalty_shrinks_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(20, 1000, &mut rng);
        let y = random(1, 1000, &mut rng);
        let w = fit_readout(&StateMatrix::from_matrix(x), &y, 1e12).unwrap();
        assert!(w.amax() < 1e-6);
    }

    #[test]
    fn singular_without_penalty() {
        let mut x = DMatrix::zeros(3, 10);
        for c in 0..10 {
            x[(0, c)] = 1.0;
            x[(1, c)] = c as f64;
            x[(2, c)] = 2.0 * c as f64;
        }
        let y = DMatrix::from_element(1, 10, 1.0);
        let states = StateMatrix::from_matrix(x);
        assert!(matches!(
            fit_readout(&states, &y, 0.0),
            Err(EsnError::Singular { lambda, .. }) if lambda == 0.0
        ));
        assert!(fit_readout(&states, &y, 1e-3).is_ok());
    }

    #[test]
    fn shape_and_penalty_errors() {
        let states = StateMatrix::from_matrix(DMatrix::identity(2, 2));
        assert!(matches!(
            fit_readout(&states, &DMatrix::zeros(1, 3), 0.1),
            Err(EsnError::Shape(_))
        ));
        assert!(fit_readout(&states, &DMatrix::zeros(1, 2), -1.0).is_err());
    }

    #[test]
    fn perturbation_never_improves_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(8, 60, &mut rng);
        let y = random(1, 60, &mut rng);
        let lambda = 0.05;
        let w = fit_readout(&StateMatrix::from_matrix(x.clone()), &y, lambda).unwrap();
        let best = objective(&w, &x, &y, lambda);
        for _ in 0..40 {
            let idx = rng.random_range(0..w.len());
            for delta in [1e-3, -1e-3] {
                let mut p = w.clone();
                p[idx] += delta;
                assert!(objective(&p, &x, &y, lambda) >= best);
            }
        }
    }
}
