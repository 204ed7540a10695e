use nalgebra::{DMatrix, DVector};

use super::{MinarModel, ThinningMatrix};
use crate::error::{Error, Result};

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 1_000_000;

impl MinarModel {
    /// Innovation means, with covariates held at `reference` in regression mode.
    fn reference_innovation_means(&self, reference: Option<&[f64]>) -> Result<Vec<f64>> {
        if self.innovations.is_regression() && reference.is_none() {
            return Err(Error::domain(
                "stationary moments of a regression model need a reference covariate vector",
            ));
        }
        self.innovations.means(reference)
    }

    /// `μ = (I - A)⁻¹ μ_ε`.
    pub fn stationary_mean(&self, reference: Option<&[f64]>) -> Result<Vec<f64>> {
        let lambda = DVector::from_vec(self.reference_innovation_means(reference)?);
        let n = self.dim();
        let lhs = DMatrix::identity(n, n) - self.thinning.to_dmatrix();
        let mu = lhs
            .lu()
            .solve(&lambda)
            .ok_or_else(|| Error::Numeric("I - A is singular".into()))?;
        Ok(mu.iter().copied().collect())
    }

    /// Lag-`h` autocovariance `γ(h) = E[(X_{t+h} - μ)(X_t - μ)ᵀ]`.
    ///
    /// `γ(0)` is the fixed point of `γ = A γ Aᵀ + diag(Bμ) + diag(λ)`,
    /// iterated from `diag(Bμ) + diag(λ)` until successive iterates differ by
    /// less than 1e-12 in max-norm. `γ(h) = Aʰ γ(0)`.
    pub fn autocovariance(&self, h: usize, reference: Option<&[f64]>) -> Result<DMatrix<f64>> {
        let gamma0 = self.variance(reference)?;
        let a = self.thinning.to_dmatrix();
        let mut out = gamma0;
        for _ in 0..h {
            out = &a * out;
        }
        Ok(out)
    }

    fn variance(&self, reference: Option<&[f64]>) -> Result<DMatrix<f64>> {
        let lambda = self.reference_innovation_means(reference)?;
        let mu = DVector::from_vec(self.stationary_mean(reference)?);
        let a = self.thinning.to_dmatrix();
        let bmu = self.thinning.thinning_variance() * mu;
        let forcing = DMatrix::from_diagonal(&(bmu + DVector::from_vec(lambda)));

        let at = a.transpose();
        let mut gamma = forcing.clone();
        for _ in 0..FIXED_POINT_MAX_ITER {
            let next = &a * &gamma * &at + &forcing;
            let diff = (&next - &gamma).amax();
            gamma = next;
            if diff < FIXED_POINT_TOL {
                return Ok(gamma);
            }
        }
        Err(Error::Numeric(
            "autocovariance fixed-point iteration did not converge".into(),
        ))
    }
}

/// Closed-form stationary moments of a bivariate model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateMoments {
    pub mu1: f64,
    pub mu2: f64,
    pub gamma11: f64,
    pub gamma22: f64,
    pub gamma12: f64,
}

/// Stationary mean and lag-0 covariance of a bivariate model with independent
/// Poisson innovations, from the closed-form expressions.
///
/// The three covariance equations are linear in `(γ11, γ22, γ12)` and are
/// solved here by Cramer's rule.
pub fn bivariate_moments(a: &ThinningMatrix, lambda: [f64; 2]) -> Result<BivariateMoments> {
    if a.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: a.dim(),
        });
    }
    let (a11, a12, a21, a22) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
    let [l1, l2] = lambda;

    let denom = (1.0 - a11) * (1.0 - a22) - a12 * a21;
    if denom <= 0.0 || a11 >= 1.0 || a22 >= 1.0 {
        return Err(Error::domain(format!(
            "non-stationary bivariate model (denominator {denom})"
        )));
    }
    let mu1 = ((1.0 - a22) * l1 + a12 * l2) / denom;
    let mu2 = ((1.0 - a11) * l2 + a21 * l1) / denom;

    // rows: coefficients of (γ11, γ22, γ12) and right-hand side
    let m = [
        [1.0 - a11 * a11, -a12 * a12, -2.0 * a11 * a12],
        [-a21 * a21, 1.0 - a22 * a22, -2.0 * a22 * a21],
        [-a11 * a21, -a22 * a12, 1.0 - a11 * a22 - a12 * a21],
    ];
    let rhs = [
        (1.0 - a11 * a11) * mu1 - a12 * a12 * mu2,
        (1.0 - a22 * a22) * mu2 - a21 * a21 * mu1,
        0.0,
    ];
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(&m);
    if d.abs() < 1e-300 {
        return Err(Error::domain("singular covariance system"));
    }
    let solve_col = |c: usize| {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = rhs[r];
        }
        det3(&mc) / d
    };
    Ok(BivariateMoments {
        mu1,
        mu2,
        gamma11: solve_col(0),
        gamma22: solve_col(1),
        gamma12: solve_col(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InnovationModel;

    fn model(n: usize, a: Vec<f64>, lambda: Vec<f64>) -> MinarModel {
        MinarModel::new(
            ThinningMatrix::new(n, a).unwrap(),
            InnovationModel::Constant { lambda },
        )
        .unwrap()
    }

    #[test]
    fn mean_without_thinning_is_innovation_mean() {
        let m = model(2, vec![0.0; 4], vec![1.0, 1.0]);
        assert_eq!(m.stationary_mean(None).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn mean_of_diagonal_model() {
        let m = model(2, vec![0.5, 0.0, 0.0, 0.5], vec![1.0, 2.0]);
        let mu = m.stationary_mean(None).unwrap();
        assert!((mu[0] - 2.0).abs() < 1e-12 && (mu[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn study_model_mean_rounds_to_table_values() {
        let mu = MinarModel::study_model().stationary_mean(None).unwrap();
        let rounded: Vec<f64> = mu.iter().map(|m| (m * 10.0).round() / 10.0).collect();
        assert_eq!(rounded, vec![2.9, 3.7, 3.3]);
    }

    #[test]
    fn univariate_variance_equals_mean() {
        // Poisson INAR(1) has a Poisson(λ/(1-α)) marginal
        let m = model(1, vec![0.5], vec![1.0]);
        let g = m.autocovariance(0, None).unwrap();
        assert!((g[(0, 0)] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn independent_poisson_covariance() {
        let m = model(2, vec![0.0; 4], vec![1.0, 2.0]);
        let g = m.autocovariance(0, None).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn lagged_autocovariance_is_power_of_a() {
        let m = MinarModel::study_model();
        let a = m.thinning.to_dmatrix();
        let g1 = m.autocovariance(1, None).unwrap();
        let g2 = m.autocovariance(2, None).unwrap();
        assert!((&a * g1 - g2).amax() < 1e-12);
    }

    #[test]
    fn bivariate_closed_form_matches_fixed_point() {
        let m = model(2, vec![0.3, 0.1, 0.2, 0.4], vec![1.0, 1.0]);
        let bm = bivariate_moments(&m.thinning, [1.0, 1.0]).unwrap();
        let mu = m.stationary_mean(None).unwrap();
        let g = m.autocovariance(0, None).unwrap();
        assert!((bm.mu1 - mu[0]).abs() < 1e-12);
        assert!((bm.mu2 - mu[1]).abs() < 1e-12);
        assert!((bm.gamma11 - g[(0, 0)]).abs() < 1e-10);
        assert!((bm.gamma22 - g[(1, 1)]).abs() < 1e-10);
        assert!((bm.gamma12 - g[(0, 1)]).abs() < 1e-10);
    }

    #[test]
    fn bivariate_decoupled_series() {
        let a = ThinningMatrix::diagonal(&[0.5, 0.5]).unwrap();
        let bm = bivariate_moments(&a, [1.0, 1.0]).unwrap();
        assert!((bm.mu1 - 2.0).abs() < 1e-12 && (bm.mu2 - 2.0).abs() < 1e-12);
        assert_eq!(bm.gamma12, 0.0);
    }

    #[test]
    fn bivariate_rejects_non_stationary() {
        let a = ThinningMatrix::new(2, vec![0.9, 0.5, 0.5, 0.9]).unwrap();
        assert!(bivariate_moments(&a, [1.0, 1.0]).is_err());
    }

    #[test]
    fn regression_mode_requires_reference() {
        let m = MinarModel::new(
            ThinningMatrix::diagonal(&[0.5]).unwrap(),
            InnovationModel::regression(vec![vec![0.0, 1.0]], vec!["z".into()]).unwrap(),
        )
        .unwrap();
        assert!(m.stationary_mean(None).is_err());
        let mu = m.stationary_mean(Some(&[0.0])).unwrap();
        assert!((mu[0] - 2.0).abs() < 1e-12);
    }
}
