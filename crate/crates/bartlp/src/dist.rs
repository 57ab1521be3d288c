//! Scaled inverse chi-squared draws and tail functions.
//!
//! The residual variance in the sum-of-trees model carries a scaled inverse
//! chi-squared prior and posterior: `sigma^2 ~ nu*lambda / X` with
//! `X ~ chi^2(nu)`. Draws go through the gamma sampler in `rand_distr`;
//! CDF and quantile go through the chi-squared distribution in `statrs`.

use crate::rng::RngStream;
use crate::{Error, Result};
use rand_distr::Distribution;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// One draw from ScaledInvChi2(nu, lambda).
pub fn draw_scaled_inv_chi2(rng: &mut RngStream, nu: f64, lambda: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter {
            name: "nu",
            reason: format!("degrees of freedom must be positive, got {nu}"),
        });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("scale must be positive, got {lambda}"),
        });
    }
    // chi^2(nu) = Gamma(shape nu/2, scale 2)
    let gamma = rand_distr::Gamma::new(nu / 2.0, 2.0).map_err(|e| Error::InvalidParameter {
        name: "nu",
        reason: e.to_string(),
    })?;
    let x: f64 = gamma.sample(rng);
    Ok(nu * lambda / x)
}

/// P(sigma^2 <= x) under ScaledInvChi2(nu, lambda).
pub fn scaled_inv_chi2_cdf(x: f64, nu: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let chi2 = ChiSquared::new(nu).expect("validated degrees of freedom");
    // sigma^2 <= x  <=>  nu*lambda / X <= x  <=>  X >= nu*lambda/x
    1.0 - chi2.cdf(nu * lambda / x)
}

/// Mean nu*lambda/(nu-2), defined for nu > 2.
pub fn scaled_inv_chi2_mean(nu: f64, lambda: f64) -> Result<f64> {
    if nu <= 2.0 {
        return Err(Error::InvalidParameter {
            name: "nu",
            reason: format!("mean requires nu > 2, got {nu}"),
        });
    }
    Ok(nu * lambda / (nu - 2.0))
}

/// Chi-squared quantile, used to cross-check the variance-prior calibration.
pub fn chi2_quantile(p: f64, nu: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("probability must be in [0,1), got {p}"),
        });
    }
    let chi2 = ChiSquared::new(nu).map_err(|e| Error::InvalidParameter {
        name: "nu",
        reason: e.to_string(),
    })?;
    Ok(chi2.inverse_cdf(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_positive_and_deterministic() {
        let mut a = RngStream::from_seed(100);
        let mut b = RngStream::from_seed(100);
        for _ in 0..1000 {
            let x = draw_scaled_inv_chi2(&mut a, 3.0, 0.2).unwrap();
            assert!(x > 0.0);
            assert_eq!(x, draw_scaled_inv_chi2(&mut b, 3.0, 0.2).unwrap());
        }
    }

    #[test]
    fn sample_mean_matches_closed_form() {
        let mut rng = RngStream::from_seed(101);
        let (nu, lambda) = (7.0, 0.4);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| draw_scaled_inv_chi2(&mut rng, nu, lambda).unwrap())
            .sum::<f64>()
            / n as f64;
        let expect = scaled_inv_chi2_mean(nu, lambda).unwrap();
        assert!(
            (mean - expect).abs() < 0.01 * expect,
            "sample mean {mean}, expected {expect}"
        );
    }

    #[test]
    fn cdf_is_monotone_and_inverts_quantile() {
        let (nu, lambda) = (3.0, 0.25);
        let mut last = 0.0;
        for i in 1..100 {
            let x = i as f64 * 0.05;
            let c = scaled_inv_chi2_cdf(x, nu, lambda);
            assert!((0.0..=1.0).contains(&c));
            assert!(c >= last);
            last = c;
        }
        // sigma^2 at probability q solves nu*lambda/x = chi2_quantile(1-q).
        for q in [0.1, 0.5, 0.9] {
            let x = nu * lambda / chi2_quantile(1.0 - q, nu).unwrap();
            assert!((scaled_inv_chi2_cdf(x, nu, lambda) - q).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = RngStream::from_seed(1);
        assert!(draw_scaled_inv_chi2(&mut rng, 0.0, 1.0).is_err());
        assert!(draw_scaled_inv_chi2(&mut rng, 3.0, -1.0).is_err());
        assert!(scaled_inv_chi2_mean(2.0, 1.0).is_err());
    }
}
