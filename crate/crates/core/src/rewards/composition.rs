//! Episode return: horizon-level factors times (weighted dense terms summed
//! over the horizon plus triggered sparse bonuses).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest value of [`bonus_scale`], reached at Δh = 0.
pub const BONUS_SCALE_MAX: f64 = 10.0;
/// Default weight of the SDF dense term.
pub const SDF_DENSE_WEIGHT: f64 = 10.0;
/// Default value of the task-success bonus.
pub const SUCCESS_BONUS: f64 = 10.0;

/// `1 / (Δh + 0.1)`.
pub fn bonus_scale(delta_h: f64) -> f64 {
    assert!(delta_h >= 0.0, "height difference must be non-negative");
    1.0 / (delta_h + 0.1)
}

/// Return-level multiplier. Ratio factors must lie in [0, 1]; the bonus
/// scale lies in (0, 10].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum HorizonFactor {
    /// `1 - tanh(d / ε_d)`.
    Interpenetration(f64),
    /// ζ_curr / ζ_max.
    RandomizationRange(f64),
    /// D_curr / D_max.
    CurriculumDifficulty(f64),
    /// `1 / (Δh + 0.1)`.
    BonusScale(f64),
}

impl HorizonFactor {
    pub fn value(&self) -> f64 {
        match *self {
            HorizonFactor::Interpenetration(v)
            | HorizonFactor::RandomizationRange(v)
            | HorizonFactor::CurriculumDifficulty(v)
            | HorizonFactor::BonusScale(v) => v,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = self.value();
        let ok = match self {
            HorizonFactor::BonusScale(_) => v > 0.0 && v <= BONUS_SCALE_MAX,
            _ => (0.0..=1.0).contains(&v),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("horizon factor {self:?} out of range")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub dense_weights: Vec<f64>,
    pub bonus_weights: Vec<f64>,
    pub horizon_factors: Vec<HorizonFactor>,
    pub horizon: usize,
}

impl RewardSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.dense_weights.iter().chain(&self.bonus_weights).find(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite reward weight {w}")));
        }
        self.horizon_factors.iter().try_for_each(HorizonFactor::validate)
    }

    pub fn horizon_product(&self) -> f64 {
        self.horizon_factors.iter().map(HorizonFactor::value).product()
    }
}

/// Computes the return. `per_timestep[t][j]` is dense term j at step t;
/// `triggered[k]` says whether bonus k fired.
pub fn compose_return(spec: &RewardSpec, per_timestep: &[Vec<f64>], triggered: &[bool]) -> Result<f64> {
    spec.validate()?;
    if per_timestep.len() != spec.horizon {
        return Err(Error::LengthMismatch { expected: spec.horizon, actual: per_timestep.len() });
    }
    if triggered.len() != spec.bonus_weights.len() {
        return Err(Error::LengthMismatch { expected: spec.bonus_weights.len(), actual: triggered.len() });
    }
    let mut dense = 0.0;
    for record in per_timestep {
        if record.len() != spec.dense_weights.len() {
            return Err(Error::LengthMismatch { expected: spec.dense_weights.len(), actual: record.len() });
        }
        dense += record.iter().zip(&spec.dense_weights).map(|(r, w)| w * r).sum::<f64>();
    }
    let bonus: f64 = spec
        .bonus_weights
        .iter()
        .zip(triggered)
        .filter(|(_, &fired)| fired)
        .map(|(w, _)| w)
        .sum();
    Ok(spec.horizon_product() * (dense + bonus))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(factors: Vec<HorizonFactor>) -> RewardSpec {
        RewardSpec { dense_weights: vec![1.0], bonus_weights: vec![10.0], horizon_factors: factors, horizon: 10 }
    }

    #[test]
    fn eleven() {
        let trace = vec![vec![0.1]; 10];
        let g = compose_return(&spec(vec![]), &trace, &[true]).unwrap();
        assert!((g - 11.0).abs() < 1e-12);
        let g = compose_return(&spec(vec![]), &trace, &[false]).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_factor_annihilates() {
        let trace = vec![vec![0.1]; 10];
        let g = compose_return(&spec(vec![HorizonFactor::CurriculumDifficulty(0.0)]), &trace, &[true]).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn mismatches_and_ranges() {
        let trace = vec![vec![0.1]; 9];
        assert!(matches!(
            compose_return(&spec(vec![]), &trace, &[true]),
            Err(Error::LengthMismatch { expected: 10, actual: 9 })
        ));
        let trace = vec![vec![0.1]; 10];
        assert!(compose_return(&spec(vec![HorizonFactor::RandomizationRange(1.5)]), &trace, &[true]).is_err());
        assert!(compose_return(&spec(vec![HorizonFactor::BonusScale(bonus_scale(0.0))]), &trace, &[true]).is_ok());
    }

    #[test]
    fn bonus_scale_values() {
        assert!((bonus_scale(0.0) - 10.0).abs() < 1e-12);
        assert!((bonus_scale(0.1) - 5.0).abs() < 1e-12);
        assert!((bonus_scale(0.9) - 1.0).abs() < 1e-12);
    }
}
