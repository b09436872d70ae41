//! Small numeric helpers shared by the process and oracle layers.

/// Standard normal CDF via the error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.15865525393145707).abs() < 1e-12);
        assert!(normal_cdf(8.0) > 1.0 - 1e-14);
    }
}
