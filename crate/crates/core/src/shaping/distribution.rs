use super::ShapingError;

/// Probability mass function over the amplitude alphabet `{0, .., 2^alpha - 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeDistribution {
    pmf: Vec<f64>,
}

const SUM_TOLERANCE: f64 = 1e-12;

impl AmplitudeDistribution {
    /// Builds a distribution from a PMF that already sums to one.
    pub fn new(pmf: Vec<f64>) -> Result<Self, ShapingError> {
        check_shape(&pmf)?;
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ShapingError::InvalidDistribution(format!(
                "pmf sums to {sum}, not 1"
            )));
        }
        Ok(Self { pmf })
    }

    /// Builds a distribution from non-negative weights, rescaling them to sum
    /// to one. Published PMFs are rounded and rarely sum to one exactly.
    pub fn normalized(weights: &[f64]) -> Result<Self, ShapingError> {
        check_shape(weights)?;
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(ShapingError::InvalidDistribution(
                "weights must have a positive finite sum".into(),
            ));
        }
        Ok(Self {
            pmf: weights.iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(alphabet_size: usize) -> Result<Self, ShapingError> {
        Self::new(vec![1.0 / alphabet_size as f64; alphabet_size])
    }

    pub fn alphabet_size(&self) -> usize {
        self.pmf.len()
    }

    /// Bits per amplitude, `alpha = log2 |A|`.
    pub fn bits_per_symbol(&self) -> usize {
        self.pmf.len().trailing_zeros() as usize
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, a: usize) -> f64 {
        self.pmf[a]
    }

    /// Self-information `-log2 P(a)` in bits.
    pub fn self_information(&self, a: usize) -> f64 {
        -self.pmf[a].log2()
    }

    pub fn entropy(&self) -> f64 {
        self.pmf
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }
}

fn check_shape(pmf: &[f64]) -> Result<(), ShapingError> {
    if pmf.len() < 2 || !pmf.len().is_power_of_two() {
        return Err(ShapingError::InvalidDistribution(format!(
            "alphabet size {} is not a power of two >= 2",
            pmf.len()
        )));
    }
    if pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(ShapingError::InvalidDistribution(
            "probabilities must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_pmfs() {
        assert!(AmplitudeDistribution::new(vec![0.5, 0.3, 0.2]).is_err());
        assert!(AmplitudeDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(AmplitudeDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(AmplitudeDistribution::normalized(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn normalizes_rounded_pmf() {
        let d = AmplitudeDistribution::normalized(&[0.587, 0.312, 0.014, 0.085]).unwrap();
        let sum: f64 = d.pmf().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(d.bits_per_symbol(), 2);
        assert!((d.prob(0) - 0.587 / 0.998).abs() < 1e-15);
    }

    #[test]
    fn uniform_entropy() {
        let d = AmplitudeDistribution::uniform(8).unwrap();
        assert!((d.entropy() - 3.0).abs() < 1e-12);
    }
}
