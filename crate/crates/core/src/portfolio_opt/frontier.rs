use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stats_raw, CovarianceMatrix, PortfolioError, PortfolioWeights, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub weights: PortfolioWeights,
    pub annual_return: f64,
    pub annual_risk: f64,
    /// NaN when `annual_risk` is zero.
    pub sharpe: f64,
    pub draw_index: usize,
}

/// Random-weight portfolios ordered by `draw_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierCloud {
    pub points: Vec<FrontierPoint>,
    pub seed: u64,
    pub n_draws: usize,
    pub risk_free: f64,
}

/// Normalized uniform(0, 1) draws, one per symbol.
pub fn random_weights<R: Rng + ?Sized>(symbols: &[String], rng: &mut R) -> Result<PortfolioWeights> {
    if symbols.is_empty() {
        return Err(PortfolioError::NoAssets);
    }
    let raw: Vec<f64> = (0..symbols.len()).map(|_| rng.sample(Open01)).collect();
    let total: f64 = raw.iter().sum();
    PortfolioWeights::new(symbols.to_vec(), raw.into_iter().map(|x| x / total).collect())
}

/// Samples `n_draws` random portfolios.
///
/// Draw `k` uses ChaCha8 stream `k` of `seed`, so the cloud does not depend
/// on how draws are spread over the rayon pool.
pub fn build_frontier(
    mean: &[f64],
    cov: &CovarianceMatrix,
    n_draws: usize,
    risk_free: f64,
    seed: u64,
) -> Result<FrontierCloud> {
    if n_draws == 0 {
        return Err(PortfolioError::NoDraws);
    }
    if mean.len() != cov.len() {
        return Err(PortfolioError::Dimension(format!("{} means, {} assets", mean.len(), cov.len())));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n_draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = base.clone();
            rng.set_stream(k as u64);
            let weights = random_weights(cov.symbols(), &mut rng)?;
            let (annual_return, annual_risk) = stats_raw(weights.weights(), mean, cov)?;
            let sharpe = if annual_risk > 0.0 { (annual_return - risk_free) / annual_risk } else { f64::NAN };
            Ok(FrontierPoint { weights, annual_return, annual_risk, sharpe, draw_index: k })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrontierCloud { points, seed, n_draws, risk_free })
}

/// Left-most point of the cloud; ties go to the lowest draw index.
pub fn min_variance_portfolio(cloud: &FrontierCloud) -> Result<&FrontierPoint> {
    cloud
        .points
        .iter()
        .reduce(|best, p| {
            if p.annual_risk < best.annual_risk || (p.annual_risk == best.annual_risk && p.draw_index < best.draw_index) {
                p
            } else {
                best
            }
        })
        .ok_or(PortfolioError::EmptyCloud)
}

/// Highest-Sharpe point of the cloud; ties go to the lowest draw index.
pub fn max_sharpe_portfolio(cloud: &FrontierCloud) -> Result<&FrontierPoint> {
    if let Some(p) = cloud.points.iter().find(|p| !(p.annual_risk > 0.0)) {
        return Err(PortfolioError::NonPositiveRisk(p.annual_risk));
    }
    cloud
        .points
        .iter()
        .reduce(|best, p| {
            if p.sharpe > best.sharpe || (p.sharpe == best.sharpe && p.draw_index < best.draw_index) {
                p
            } else {
                best
            }
        })
        .ok_or(PortfolioError::EmptyCloud)
}
