use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares power law `value ≈ C · scale^slope`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the log-space residuals.
    pub residual: f64,
}

pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidInput(format!("rate fit needs at least 3 points, got {}", pairs.len())));
    }
    for &(s, v) in pairs {
        if !(s > 0.0) {
            return Err(Error::NonPositiveValue(s));
        }
        if !(v > 0.0) {
            return Err(Error::NonPositiveValue(v));
        }
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("rate fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit {
        abscissae: pairs.iter().map(|p| p.0).collect(),
        ordinates: pairs.iter().map(|p| p.1).collect(),
        slope,
        intercept,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_laws() {
        let eps: [f64; 4] = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
        let f = fit_rate(&eps.map(|e| (e, 3.0 * e.sqrt()))).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!(f.residual < 1e-10);
        let d: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
        let f = fit_rate(&d.map(|x| (x, 0.7 * x * x))).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_slope_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs: Vec<(f64, f64)> = (0..8)
            .map(|k| {
                let e = 0.5f64.powi(k);
                (e, 2.0 * e * (1.0 + rng.gen_range(-0.05..0.05)))
            })
            .collect();
        let f = fit_rate(&pairs).unwrap();
        assert!((f.slope - 1.0).abs() < 0.1, "{}", f.slope);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_rate(&[(1.0, 1.0), (0.5, 0.0), (0.25, 1.0)]), Err(Error::NonPositiveValue(_))));
        assert!(fit_rate(&[(1.0, 1.0), (0.5, 2.0)]).is_err());
    }
}
