use crate::math::LN_SQRT_2PI;

/// Log normal density of `y` under state `s` (0-based) with mean `mu[s]`
/// and standard deviation `sigma`.
#[inline]
pub fn emission_logpdf(y: f64, s: usize, mu: &[f64], sigma: f64) -> f64 {
    normal_logpdf(y, mu[s], sigma)
}

#[inline]
pub fn normal_logpdf(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_at_mean() {
        let sigma = 0.09;
        let v = emission_logpdf(4.55, 0, &[4.55, 4.70], sigma);
        let expect = -(sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((v - expect).abs() < 1e-14);
        assert!((v - 1.4890).abs() < 5e-5);
    }

    #[test]
    fn emission_mean_on_original_scale() {
        assert!((4.55f64.exp() - 94.63).abs() < 0.005);
    }

    #[test]
    fn symmetric_around_mean() {
        let mu = [0.0, 1.0];
        let a = emission_logpdf(1.3, 1, &mu, 0.4);
        let b = emission_logpdf(0.7, 1, &mu, 0.4);
        assert!((a - b).abs() < 1e-14);
    }
}
