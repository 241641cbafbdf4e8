//! Machine-readable run reports.

use crate::hooi::RankHistory;
use crate::hosvd::{self, TuckerModel};
use crate::tensor::DenseTensor;
use serde::{Deserialize, Serialize};

/// Bumped whenever the report field set changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Everything a decomposition run reports, JSON for single runs and one CSV
/// row per run in benchmarks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub schema_version: u32,
    pub algorithm: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub rel_error: f64,
    pub truncation: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_history: Option<Vec<Vec<usize>>>,
    pub num_params: usize,
    pub compression_rate: f64,
    pub sweeps: usize,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DecompositionReport {
    pub fn from_model(
        algorithm: &str,
        a: &DenseTensor,
        model: &TuckerModel,
        tolerance: Option<f64>,
        history: Option<&RankHistory>,
        sweeps: usize,
        wall_time_s: f64,
        seed: Option<u64>,
    ) -> crate::error::Result<Self> {
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            algorithm: algorithm.to_string(),
            tolerance,
            rel_error: hosvd::rel_error(a, model)?,
            truncation: model.truncation.ranks().to_vec(),
            rank_history: history
                .map(|h| h.sweeps.iter().map(|s| s.truncation.clone()).collect()),
            num_params: hosvd::num_params(model),
            compression_rate: hosvd::compression_rate(model),
            sweeps,
            wall_time_s,
            seed,
        })
    }

    /// True when the run either had no tolerance or met it.
    pub fn meets_tolerance(&self) -> bool {
        self.tolerance.map_or(true, |eps| self.rel_error <= eps)
    }

    /// Stable CSV column order; documented in the CLI help.
    pub const CSV_HEADER: &'static str = "schema_version,algorithm,tolerance,rel_error,truncation,num_params,compression_rate,sweeps,wall_time_s,seed";

    pub fn csv_row(&self) -> String {
        let trunc = self
            .truncation
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join("x");
        format!(
            "{},{},{},{:.16e},{},{},{:.16e},{},{:.6},{}",
            self.schema_version,
            self.algorithm,
            self.tolerance.map_or(String::new(), |t| format!("{t:e}")),
            self.rel_error,
            trunc,
            self.num_params,
            self.compression_rate,
            self.sweeps,
            self.wall_time_s,
            self.seed.map_or(String::new(), |s| s.to_string()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hosvd::{t_hosvd_rank, Truncation};
    use crate::synth;

    #[test]
    fn report_fields_consistent_with_model() {
        let a = synth::random_low_rank_tensor(&[6, 5, 4], &[2, 2, 2], 3).unwrap();
        let model = t_hosvd_rank(&a, &Truncation::new(vec![2, 2, 2]).unwrap()).unwrap();
        let rep = DecompositionReport::from_model("t-hosvd", &a, &model, None, None, 1, 0.0, None)
            .unwrap();
        assert_eq!(rep.truncation, vec![2, 2, 2]);
        assert_eq!(rep.num_params, 8 + 12 + 10 + 8);
        assert!(rep.meets_tolerance());
        let json = serde_json::to_string(&rep).unwrap();
        let back: DecompositionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.num_params, rep.num_params);
    }

    #[test]
    fn csv_row_matches_header_arity() {
        let a = synth::random_low_rank_tensor(&[4, 4], &[2, 2], 5).unwrap();
        let model = t_hosvd_rank(&a, &Truncation::new(vec![2, 2]).unwrap()).unwrap();
        let rep = DecompositionReport::from_model("t-hosvd", &a, &model, Some(0.1), None, 1, 0.5, Some(3))
            .unwrap();
        let cols = DecompositionReport::CSV_HEADER.split(',').count();
        assert_eq!(rep.csv_row().split(',').count(), cols);
    }
}
