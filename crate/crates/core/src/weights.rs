use serde::Serialize;

use crate::error::{GeoError, Result};

/// Exponent vector `alpha` of the cost `cosh(alpha . t) - 1`.
///
/// For two dimensions the components are also called `a` and `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    alpha: Vec<f64>,
}

impl WeightVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(GeoError::EmptyWeightVector);
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(GeoError::NonFinite("weight vector"));
        }
        if alpha.iter().all(|&a| a == 0.0) {
            return Err(GeoError::ZeroWeightVector);
        }
        Ok(Self { alpha })
    }

    /// Equal weights `1/n`, the permutation-symmetric choice that reduces to
    /// the one-dimensional cost on the diagonal.
    pub fn canonical(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GeoError::EmptyWeightVector);
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn pair(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn a(&self) -> f64 {
        self.alpha[0]
    }

    pub fn b(&self) -> f64 {
        self.alpha.get(1).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `alpha . v`
    pub fn dot(&self, v: &[f64]) -> f64 {
        self.alpha.iter().zip(v).map(|(a, x)| a * x).sum()
    }

    pub fn is_canonical(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.alpha.iter().all(|&a| (a - w).abs() <= 1e-15)
    }

    pub fn has_zero_component(&self) -> bool {
        self.alpha.contains(&0.0)
    }

    pub fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.len() {
            return Err(GeoError::DimensionMismatch {
                expected: self.len(),
                found,
            });
        }
        Ok(())
    }

    pub fn require_2d(&self) -> Result<(f64, f64)> {
        self.check_dim(2)?;
        Ok((self.alpha[0], self.alpha[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_is_exactly_one_over_n() {
        for n in 1..8 {
            let w = WeightVector::canonical(n).unwrap();
            assert!(w.as_slice().iter().all(|&a| a == 1.0 / n as f64));
            assert!(w.is_canonical());
        }
    }

    #[test]
    fn rejects_zero_and_empty() {
        assert_eq!(WeightVector::new(vec![]), Err(GeoError::EmptyWeightVector));
        assert_eq!(
            WeightVector::new(vec![0.0, 0.0]),
            Err(GeoError::ZeroWeightVector)
        );
        assert!(WeightVector::new(vec![f64::NAN]).is_err());
        assert!(WeightVector::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn aliases() {
        let w = WeightVector::pair(1.0 / 3.0, 0.5).unwrap();
        assert_eq!(w.a(), 1.0 / 3.0);
        assert_eq!(w.b(), 0.5);
        assert!((w.sum() - 5.0 / 6.0).abs() < 1e-15);
    }
}
