use nalgebra::DVector;

use super::{CovarianceMatrix, PortfolioError, PortfolioWeights, Result};

/// Closed-form minimum-variance weights `Σ⁻¹1 / 1ᵀΣ⁻¹1`.
///
/// Only meaningful as a reference for the long-only cloud when every
/// component comes out nonnegative; a negative component is an error.
pub fn analytic_min_variance(cov: &CovarianceMatrix) -> Result<PortfolioWeights> {
    let n = cov.len();
    let ones = DVector::from_element(n, 1.0);
    let x = match cov.entries().clone().cholesky() {
        Some(chol) => chol.solve(&ones),
        None => cov.entries().clone().lu().solve(&ones).ok_or(PortfolioError::Singular)?,
    };
    let total = x.sum();
    if !total.is_finite() || total.abs() < f64::EPSILON {
        return Err(PortfolioError::Singular);
    }
    let w: Vec<f64> = x.iter().map(|v| v / total).collect();
    if let Some((i, &weight)) = w.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(PortfolioError::NegativeWeight { symbol: cov.symbols()[i].clone(), weight });
    }
    PortfolioWeights::new(cov.symbols().to_vec(), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn syms(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i}")).collect()
    }

    fn diag(vals: &[f64]) -> CovarianceMatrix {
        let rows: Vec<Vec<f64>> = (0..vals.len())
            .map(|i| (0..vals.len()).map(|j| if i == j { vals[i] } else { 0.0 }).collect())
            .collect();
        CovarianceMatrix::from_rows(syms(vals.len()), &rows).unwrap()
    }

    #[test]
    fn inverse_variance_cases() {
        let w = analytic_min_variance(&diag(&[1.0, 4.0])).unwrap();
        assert_relative_eq!(w.weights()[0], 0.8, epsilon = 1e-15);
        assert_relative_eq!(w.weights()[1], 0.2, epsilon = 1e-15);

        let w = analytic_min_variance(&diag(&[1.0, 1.0, 2.0])).unwrap();
        for (got, want) in w.weights().iter().zip([0.4, 0.4, 0.2]) {
            assert_relative_eq!(*got, want, epsilon = 1e-15);
        }

        let w = analytic_min_variance(&diag(&[1.0; 6])).unwrap();
        assert!(w.weights().iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn singular_and_infeasible() {
        let cov = CovarianceMatrix::from_rows(syms(2), &[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(analytic_min_variance(&cov), Err(PortfolioError::Singular)));

        // Strong correlation with unequal variances pushes the optimum short
        // the riskier asset.
        let cov = CovarianceMatrix::from_rows(syms(2), &[vec![1.0, 1.8], vec![1.8, 4.0]]).unwrap();
        assert!(matches!(analytic_min_variance(&cov), Err(PortfolioError::NegativeWeight { .. })));
    }
}
