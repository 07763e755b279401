//! Comparison strategies: fixed-weight models solved exactly, pure SAA and
//! predict-then-optimize with a linear demand fit.

use serde::{Deserialize, Serialize};

use crate::approx::weighted_quantile;
use crate::error::{Error, Result};
use crate::model::{profit, Dataset, Decision, NewsvendorParams};
use crate::weights::{QueryPoint, Space, WeightModel};

/// Number of price grid points used by the grid solvers.
pub const PRICE_GRID: usize = 200;

/// Smallest historical demand where the weighted CDF reaches `(p − c)/(p − s)`,
/// clamped to the order bounds.
pub fn critical_fractile_q(weights: &[f64], demands: &[f64], p: f64, params: &NewsvendorParams) -> Result<f64> {
    if !(p > params.s) {
        return Err(Error::InvalidParameter(format!(
            "price {p} must exceed the salvage value {}",
            params.s
        )));
    }
    let level = params.fractile(p).clamp(0.0, 1.0);
    let q = weighted_quantile(weights, demands, level)?;
    Ok(params.q_bounds.clamp(q))
}

/// Weighted objective `Σ wⁱ π(p, q, Dⁱ)` for weights that ignore the decision.
pub fn fixed_weight_objective(weights: &[f64], demands: &[f64], params: &NewsvendorParams, x: Decision) -> Result<f64> {
    let mut total = 0.0;
    for (w, d) in weights.iter().zip(demands) {
        if *w != 0.0 {
            total += w * profit(params, x, *d)?;
        }
    }
    Ok(total)
}

/// Best price-grid point with the fractile order at each price.
pub fn solve_fixed_weights(weights: &[f64], demands: &[f64], params: &NewsvendorParams) -> Result<Decision> {
    let mut best: Option<(Decision, f64)> = None;
    for p in params.p_bounds.grid(PRICE_GRID) {
        let q = critical_fractile_q(weights, demands, p, params)?;
        let x = Decision::new(p, q);
        let f = fixed_weight_objective(weights, demands, params, x)?;
        if best.is_none_or(|(_, b)| f > b) {
            best = Some((x, f));
        }
    }
    Ok(best.expect("price grid is never empty").0)
}

/// Solves the model whose weights depend on the features alone.
pub fn solve_decision_independent(
    model: &WeightModel,
    data: &Dataset,
    params: &NewsvendorParams,
    features: &[f64],
) -> Result<Decision> {
    if model.space() != Space::FeaturesOnly {
        return Err(Error::InvalidParameter(
            "decision-independent weights must be fitted on features only".into(),
        ));
    }
    data.check_features(features)?;
    let w = model.weights(&QueryPoint::new(params.p_bounds.lo, features))?;
    solve_fixed_weights(&w, &data.demands(), params)
}

/// Sample average approximation: uniform weights, no features.
pub fn solve_pure_saa(data: &Dataset, params: &NewsvendorParams) -> Result<Decision> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let w = vec![1.0 / data.len() as f64; data.len()];
    solve_fixed_weights(&w, &data.demands(), params)
}

/// Ordinary least squares demand model `D̂ = β₀ + β_p·p + βᵀz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearDemandFit {
    pub intercept: f64,
    pub price_coefficient: f64,
    pub feature_coefficients: Vec<f64>,
}

impl LinearDemandFit {
    pub fn predict(&self, p: f64, z: &[f64]) -> f64 {
        self.intercept
            + self.price_coefficient * p
            + self.feature_coefficients.iter().zip(z).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        let mut beta = vec![self.intercept, self.price_coefficient];
        beta.extend_from_slice(&self.feature_coefficients);
        beta
    }
}

fn column_names(m: usize) -> Vec<String> {
    let mut names = vec!["intercept".to_string(), "p".to_string()];
    names.extend((1..=m).map(|j| format!("z{j}")));
    names
}

pub(crate) fn design_row(p: f64, z: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(z.len() + 2);
    row.push(1.0);
    row.push(p);
    row.extend_from_slice(z);
    row
}

/// In-place Cholesky factor (lower triangle) of a symmetric matrix.
///
/// Fails at the first column whose pivot is negligible relative to its
/// diagonal entry, i.e. a column lying in the span of the earlier ones.
fn cholesky(a: &[Vec<f64>]) -> std::result::Result<Vec<Vec<f64>>, usize> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 1e-10 * a[j][j].abs().max(f64::MIN_POSITIVE)) {
            return Err(j);
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    x
}

pub fn fit_linear_demand(data: &Dataset) -> Result<LinearDemandFit> {
    let m = data.feature_dim();
    let cols = m + 2;
    if data.len() <= m + 2 {
        return Err(Error::InvalidParameter(format!(
            "linear fit needs more than {} samples, got {}",
            m + 2,
            data.len()
        )));
    }
    let mut xtx = vec![vec![0.0; cols]; cols];
    let mut xty = vec![0.0; cols];
    for s in data.samples() {
        let row = design_row(s.price, &s.features);
        for i in 0..cols {
            xty[i] += row[i] * s.demand;
            for j in 0..=i {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..cols {
        for j in i + 1..cols {
            xtx[i][j] = xtx[j][i];
        }
    }
    let l = match cholesky(&xtx) {
        Ok(l) => l,
        Err(j) => return Err(collinearity(&xtx, j, &column_names(m))),
    };
    let beta = cholesky_solve(&l, &xty);
    Ok(LinearDemandFit {
        intercept: beta[0],
        price_coefficient: beta[1],
        feature_coefficients: beta[2..].to_vec(),
    })
}

/// Names column `j` and the earlier columns it is a combination of.
fn collinearity(xtx: &[Vec<f64>], j: usize, names: &[String]) -> Error {
    let depends_on = if j == 0 {
        Vec::new()
    } else {
        let lead: Vec<Vec<f64>> = xtx[..j].iter().map(|r| r[..j].to_vec()).collect();
        let rhs: Vec<f64> = xtx[..j].iter().map(|r| r[j]).collect();
        match cholesky(&lead) {
            Ok(l) => {
                let coef = cholesky_solve(&l, &rhs);
                let scale = coef.iter().fold(0.0f64, |a, c| a.max(c.abs()));
                coef.iter()
                    .enumerate()
                    .filter(|(_, c)| c.abs() > 1e-8 * scale.max(1e-300))
                    .map(|(i, _)| names[i].clone())
                    .collect()
            }
            Err(_) => names[..j].to_vec(),
        }
    };
    Error::SingularDesign {
        column: names[j].clone(),
        depends_on,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtoSolution {
    pub decision: Decision,
    /// Set when the forecast is non-positive at every grid price.
    pub degenerate: bool,
}

/// Orders the point forecast and picks the price maximizing the resulting
/// deterministic profit.
pub fn solve_pto(fit: &LinearDemandFit, params: &NewsvendorParams, features: &[f64]) -> Result<PtoSolution> {
    if features.len() != fit.feature_coefficients.len() {
        return Err(Error::DimensionMismatch {
            expected: fit.feature_coefficients.len(),
            got: features.len(),
        });
    }
    let mut best: Option<(Decision, f64)> = None;
    for p in params.p_bounds.grid(PRICE_GRID) {
        let d = fit.predict(p, features);
        if !(d > 0.0) {
            continue;
        }
        let x = Decision::new(p, params.q_bounds.clamp(d));
        let f = profit(params, x, d)?;
        if best.is_none_or(|(_, b)| f > b) {
            best = Some((x, f));
        }
    }
    Ok(match best {
        Some((decision, _)) => PtoSolution {
            decision,
            degenerate: false,
        },
        None => PtoSolution {
            decision: Decision::new(params.p_bounds.lo, params.q_bounds.lo),
            degenerate: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Interval, Sample};
    use crate::weights::{fit, WeightHyper};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> NewsvendorParams {
        NewsvendorParams::new(6.0, 2.0, Interval::new(7.0, 40.0), Interval::new(0.0, 120.0)).unwrap()
    }

    fn from_demands(d: &[f64]) -> Dataset {
        Dataset::new(
            d.iter()
                .enumerate()
                .map(|(i, &d)| Sample {
                    price: 7.0 + i as f64,
                    features: vec![0.5],
                    demand: d,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn fractile_of_uniform_hundred() {
        let demands: Vec<f64> = (1..=100).map(f64::from).collect();
        let w = vec![0.01; 100];
        assert_eq!(critical_fractile_q(&w, &demands, 10.0, &params()).unwrap(), 50.0);
        assert!(critical_fractile_q(&w, &demands, 2.0, &params()).is_err());
        let near_one = critical_fractile_q(&w, &demands, 1e9, &params()).unwrap();
        assert_eq!(near_one, 100.0);
    }

    #[test]
    fn fractile_matches_brute_force_on_the_hundred() {
        let demands: Vec<f64> = (1..=100).map(f64::from).collect();
        let w = vec![0.01; 100];
        let x = |q| Decision::new(10.0, q);
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..=10_000 {
            let q = 120.0 * i as f64 / 10_000.0;
            let f = fixed_weight_objective(&w, &demands, &params(), x(q)).unwrap();
            if f > best.1 + 1e-9 {
                best = (q, f);
            }
        }
        // the objective is flat on [50, 51]; the brute force keeps the left end
        assert!((best.0 - 50.0).abs() <= 0.012, "{best:?}");
    }

    #[test]
    fn single_sample_saa() {
        let data = from_demands(&[17.0]);
        let x = solve_pure_saa(&data, &params()).unwrap();
        assert_eq!(x, Decision::new(40.0, 17.0));
    }

    #[test]
    fn two_sample_saa_against_a_grid() {
        let data = from_demands(&[2.0, 8.0]);
        let w = [0.5, 0.5];
        assert_eq!(critical_fractile_q(&w, &[2.0, 8.0], 10.0, &params()).unwrap(), 2.0);
        let x = solve_pure_saa(&data, &params()).unwrap();
        let mut best = f64::NEG_INFINITY;
        for p in params().p_bounds.grid(PRICE_GRID) {
            for i in 0..=1200 {
                let f = fixed_weight_objective(&w, &[2.0, 8.0], &params(), Decision::new(p, i as f64 / 10.0)).unwrap();
                best = best.max(f);
            }
        }
        let got = fixed_weight_objective(&w, &[2.0, 8.0], &params(), x).unwrap();
        assert_relative_eq!(got, best, epsilon = 1e-9);
    }

    #[test]
    fn constant_demand_prices_at_the_top() {
        let data = from_demands(&[12.0; 30]);
        let m = fit(&data, &WeightHyper::Knn { k: 5 }, Space::FeaturesOnly, 0).unwrap();
        let x = solve_decision_independent(&m, &data, &params(), &[0.5]).unwrap();
        assert_eq!(x, Decision::new(40.0, 12.0));
    }

    #[test]
    fn uniform_feature_weights_coincide_with_saa() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d: Vec<f64> = (0..25).map(|_| rng.random_range(0.0..60.0)).collect();
        let data = from_demands(&d);
        let m = fit(&data, &WeightHyper::Knn { k: 25 }, Space::FeaturesOnly, 0).unwrap();
        assert_eq!(
            solve_decision_independent(&m, &data, &params(), &[0.5]).unwrap(),
            solve_pure_saa(&data, &params()).unwrap()
        );
    }

    #[test]
    fn joined_weights_are_refused() {
        let data = from_demands(&[1.0, 2.0]);
        let m = fit(&data, &WeightHyper::Knn { k: 1 }, Space::Joined, 0).unwrap();
        assert!(solve_decision_independent(&m, &data, &params(), &[0.5]).is_err());
    }

    fn linear_data(n: usize, seed: u64, mut f: impl FnMut(f64, &[f64]) -> f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::new(
            (0..n)
                .map(|_| {
                    let p = rng.random_range(7.0..40.0);
                    let z: Vec<f64> = (0..4).map(|_| rng.random()).collect();
                    Sample {
                        demand: f(p, &z),
                        price: p,
                        features: z,
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_linear_law_is_recovered() {
        let data = linear_data(50, 1, |p, z| 60.0 - p + z.iter().sum::<f64>());
        let fit = fit_linear_demand(&data).unwrap();
        let want = [60.0, -1.0, 1.0, 1.0, 1.0, 1.0];
        for (b, w) in fit.coefficients().iter().zip(want) {
            assert!((b - w).abs() < 1e-8, "{b} vs {w}");
        }
    }

    #[test]
    fn constant_demand_fit() {
        let data = linear_data(40, 2, |_, _| 17.5);
        let fit = fit_linear_demand(&data).unwrap();
        assert!((fit.intercept - 17.5).abs() < 1e-8);
        assert!(fit.coefficients()[1..].iter().all(|b| b.abs() < 1e-8));
    }

    #[test]
    fn residuals_are_orthogonal_to_the_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise: Vec<f64> = (0..300).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut k = 0;
        let data = linear_data(300, 4, |p, z| {
            k += 1;
            (50.0 - 0.7 * p + 3.0 * z[1] + noise[k - 1]).max(0.0)
        });
        let fit = fit_linear_demand(&data).unwrap();
        let mut dot = [0.0; 6];
        let mut norm = [0.0; 6];
        for s in data.samples() {
            let row = design_row(s.price, &s.features);
            let r = s.demand - fit.predict(s.price, &s.features);
            for j in 0..6 {
                dot[j] += row[j] * r;
                norm[j] += row[j] * s.demand;
            }
        }
        for j in 0..6 {
            assert!(dot[j].abs() <= 1e-6 * norm[j].abs(), "column {j}: {}", dot[j]);
        }
    }

    #[test]
    fn collinear_columns_are_named() {
        let data = linear_data(30, 6, |p, _| 40.0 - p);
        // make z3 = 2·z1 + p
        let samples: Vec<Sample> = data
            .samples()
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.features[2] = 2.0 * s.features[0] + s.price;
                s
            })
            .collect();
        let err = fit_linear_demand(&Dataset::new(samples).unwrap()).unwrap_err();
        assert_eq!(
            err,
            Error::SingularDesign {
                column: "z3".into(),
                depends_on: vec!["p".into(), "z1".into()],
            }
        );
    }

    #[test]
    fn too_few_samples_for_ols() {
        let data = linear_data(6, 7, |p, _| 40.0 - p);
        assert!(fit_linear_demand(&data).is_err());
    }

    fn wide() -> NewsvendorParams {
        NewsvendorParams::new(6.0, 2.0, Interval::new(6.0, 60.0), Interval::new(0.0, 1e6)).unwrap()
    }

    #[test]
    fn pto_vertex() {
        let fit = LinearDemandFit {
            intercept: 60.0,
            price_coefficient: -1.0,
            feature_coefficients: vec![],
        };
        let sol = solve_pto(&fit, &wide(), &[]).unwrap();
        let step = wide().p_bounds.width() / (PRICE_GRID - 1) as f64;
        assert!(!sol.degenerate);
        assert!((sol.decision.p - 33.0).abs() <= step);
        assert!((sol.decision.q - 27.0).abs() <= step);
    }

    #[test]
    fn pto_flat_forecast_prices_at_the_top() {
        let fit = LinearDemandFit {
            intercept: 30.0,
            price_coefficient: 0.0,
            feature_coefficients: vec![0.0],
        };
        let sol = solve_pto(&fit, &params(), &[0.3]).unwrap();
        assert_eq!(sol.decision, Decision::new(40.0, 30.0));
    }

    #[test]
    fn pto_without_positive_forecast_is_flagged() {
        let fit = LinearDemandFit {
            intercept: -5.0,
            price_coefficient: -1.0,
            feature_coefficients: vec![],
        };
        let sol = solve_pto(&fit, &params(), &[]).unwrap();
        assert!(sol.degenerate);
        assert_eq!(sol.decision, Decision::new(7.0, 0.0));
    }

    #[test]
    fn pto_on_noiseless_linear_data() {
        let data = linear_data(80, 8, |p, z| 60.0 - p + z.iter().sum::<f64>());
        let fit = fit_linear_demand(&data).unwrap();
        let z = [0.5; 4];
        let sol = solve_pto(&fit, &params(), &z).unwrap();
        // (p − 6)(62 − p) peaks at p = 34
        let step = params().p_bounds.width() / (PRICE_GRID - 1) as f64;
        assert!((sol.decision.p - 34.0).abs() <= step);
        assert!((sol.decision.q - (62.0 - sol.decision.p)).abs() < 1e-6);
    }
}
