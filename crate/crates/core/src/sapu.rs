//! Simulation-aware policy update: filtering and down-weighting episode
//! returns by how deeply the plug interpenetrated the socket.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SapuStrategy {
    Baseline,
    FilterOnly,
    WeightOnly,
    FilterAndWeight,
}

impl SapuStrategy {
    pub const ALL: [SapuStrategy; 4] = [
        SapuStrategy::Baseline,
        SapuStrategy::FilterOnly,
        SapuStrategy::WeightOnly,
        SapuStrategy::FilterAndWeight,
    ];

    fn filters(self) -> bool {
        matches!(self, SapuStrategy::FilterOnly | SapuStrategy::FilterAndWeight)
    }

    fn weights(self) -> bool {
        matches!(self, SapuStrategy::WeightOnly | SapuStrategy::FilterAndWeight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SapuConfig {
    pub strategy: SapuStrategy,
    /// Episodes with depth at or above this are dropped (m).
    pub eps_ip: f64,
    /// Depth scale of the weight (m).
    pub eps_d: f64,
}

impl Default for SapuConfig {
    fn default() -> Self {
        Self { strategy: SapuStrategy::FilterAndWeight, eps_ip: 0.001, eps_d: 0.001 }
    }
}

impl SapuConfig {
    pub fn new(strategy: SapuStrategy) -> Self {
        Self { strategy, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_ip > 0.0 && self.eps_d > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument("eps_ip and eps_d must be positive".into()))
        }
    }
}

/// `1 - tanh(d / eps_d)`.
pub fn sapu_weight(d: f64, eps_d: f64) -> f64 {
    // 1 - tanh(x) = 2e^{-2x} / (1 + e^{-2x}) keeps full relative precision
    // in the tail where 1 - tanh(x) would cancel.
    let e = (-2.0 * d / eps_d).exp();
    2.0 * e / (1.0 + e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeInput {
    pub raw_return: f64,
    pub d_ip_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReturn {
    pub raw_return: f64,
    pub d_ip_max: f64,
    pub included: bool,
    /// `raw_return × weight` for included episodes, 0 otherwise.
    pub weighted_return: f64,
}

pub fn apply_sapu_one(ep: &EpisodeInput, cfg: &SapuConfig) -> EpisodeReturn {
    let s = cfg.strategy;
    let included = !s.filters() || ep.d_ip_max < cfg.eps_ip;
    let weight = if s.weights() { sapu_weight(ep.d_ip_max, cfg.eps_d) } else { 1.0 };
    EpisodeReturn {
        raw_return: ep.raw_return,
        d_ip_max: ep.d_ip_max,
        included,
        weighted_return: if included { ep.raw_return * weight } else { 0.0 },
    }
}

pub fn apply_sapu(batch: &[EpisodeInput], cfg: &SapuConfig) -> Vec<EpisodeReturn> {
    batch.iter().map(|ep| apply_sapu_one(ep, cfg)).collect()
}

/// Number of included episodes and the mean of their weighted returns
/// (`None` when everything was filtered out).
pub fn included_mean(processed: &[EpisodeReturn]) -> (usize, Option<f64>) {
    let kept: Vec<f64> = processed.iter().filter(|e| e.included).map(|e| e.weighted_return).collect();
    let n = kept.len();
    (n, (n > 0).then(|| kept.iter().sum::<f64>() / n as f64))
}

/// Mean depth over the batch; an optional statistic next to the per-episode
/// maximum that drives the weights.
pub fn mean_depth(batch: &[EpisodeInput]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    batch.iter().map(|e| e.d_ip_max).sum::<f64>() / batch.len() as f64
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    episode_id: usize,
    raw_return: f64,
    d_ip_max_m: f64,
    #[serde(default)]
    included: Option<bool>,
    #[serde(default)]
    weighted_return: Option<f64>,
}

/// Reads `episode_id, raw_return, d_ip_max_m[, included, weighted_return]`;
/// only the first three columns are used. Rows are returned in file order.
pub fn read_batch_csv(path: &Path) -> Result<Vec<EpisodeInput>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        if !(row.raw_return.is_finite() && row.d_ip_max_m >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "episode {}: return must be finite and depth non-negative",
                row.episode_id
            )));
        }
        out.push(EpisodeInput { raw_return: row.raw_return, d_ip_max: row.d_ip_max_m });
    }
    Ok(out)
}

pub fn write_batch_csv(path: &Path, processed: &[EpisodeReturn]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, e) in processed.iter().enumerate() {
        w.serialize(CsvRow {
            episode_id: i,
            raw_return: e.raw_return,
            d_ip_max_m: e.d_ip_max,
            included: Some(e.included),
            weighted_return: Some(e.weighted_return),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_values() {
        assert_eq!(sapu_weight(0.0, 0.001), 1.0);
        assert!((sapu_weight(0.001, 0.001) - (1.0 - 1f64.tanh())).abs() < 1e-15);
        assert!((sapu_weight(0.001, 0.001) - 0.2384058440442351).abs() < 1e-15);
        assert!(sapu_weight(0.01, 0.001) < 1e-8);
        assert!(sapu_weight(10.0, 0.001) >= 0.0);
    }

    #[test]
    fn filter_and_weight_examples() {
        let cfg = SapuConfig::default();
        let out = apply_sapu_one(&EpisodeInput { raw_return: 10.0, d_ip_max: 0.002 }, &cfg);
        assert!(!out.included);
        let out = apply_sapu_one(&EpisodeInput { raw_return: 10.0, d_ip_max: 0.0005 }, &cfg);
        assert!(out.included);
        assert!((out.weighted_return - 10.0 * (1.0 - 0.5f64.tanh())).abs() < 1e-12);
        assert!((out.weighted_return - 5.378828427399902).abs() < 1e-12);
        let boundary = apply_sapu_one(&EpisodeInput { raw_return: 1.0, d_ip_max: 0.001 }, &cfg);
        assert!(!boundary.included);
    }

    #[test]
    fn baseline_is_identity() {
        let cfg = SapuConfig::new(SapuStrategy::Baseline);
        for d in [0.0, 0.0005, 0.005, 1.0] {
            let out = apply_sapu_one(&EpisodeInput { raw_return: -3.5, d_ip_max: d }, &cfg);
            assert!(out.included);
            assert_eq!(out.weighted_return, -3.5);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        let batch = vec![
            EpisodeInput { raw_return: 1.5, d_ip_max: 0.0 },
            EpisodeInput { raw_return: -2.0, d_ip_max: 0.003 },
        ];
        let out = apply_sapu(&batch, &SapuConfig::default());
        write_batch_csv(&p, &out).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("episode_id,raw_return,d_ip_max_m,included,weighted_return"));
        assert_eq!(read_batch_csv(&p).unwrap(), batch);
    }
}
