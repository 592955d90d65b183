//! Run configuration shared by the CLI, the verification harness and the
//! certificate metadata. Serialized as a single JSON document.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lie::Family;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Distance of `ad H` / `sigma(H)` eigenvalues from their integer grade.
    pub grade_cluster: f64,
    /// Floor for the smallest singular value of each `T_j`.
    pub svd_floor: f64,
    /// Relative discrepancy allowed between `|psi(X)|` and the oracle.
    pub oracle_rel: f64,
    /// Relative rounding slack when checking the certificate.
    pub cert_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grade_cluster: 1e-9,
            svd_floor: 1e-10,
            oracle_rel: 1e-8,
            cert_slack: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub family: Family,
    pub n: usize,
}

/// Log-spaced radii `10^min_exp ..= 10^max_exp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiConfig {
    pub min_exp: f64,
    pub max_exp: f64,
    pub count: usize,
}

impl Default for RadiiConfig {
    fn default() -> Self {
        Self {
            min_exp: 0.0,
            max_exp: 3.0,
            count: 20,
        }
    }
}

impl RadiiConfig {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![10f64.powf(self.max_exp)],
            c => (0..c)
                .map(|i| {
                    let t = i as f64 / (c - 1) as f64;
                    10f64.powf(self.min_exp + t * (self.max_exp - self.min_exp))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub algebra: AlgebraSpec,
    pub blocks: Vec<usize>,
    pub seed: u64,
    /// Number of sampled directions.
    pub samples: usize,
    pub radii: RadiiConfig,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algebra: AlgebraSpec {
                family: Family::Sl,
                n: 2,
            },
            blocks: vec![1, 1],
            seed: 0,
            samples: 200,
            radii: RadiiConfig::default(),
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: usize = self.blocks.iter().sum();
        if self.blocks.is_empty() || self.blocks.contains(&0) || sum != self.algebra.n {
            return Err(Error::InvalidBlocks {
                blocks: self.blocks.clone(),
                reason: format!("blocks must be positive and sum to n = {}", self.algebra.n),
            });
        }
        if self.samples == 0 {
            return Err(Error::Domain("samples must be at least 1".into()));
        }
        let t = &self.tolerances;
        if [t.grade_cluster, t.svd_floor, t.oracle_rel, t.cert_slack]
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::Domain("tolerances must be positive and finite".into()));
        }
        if self.radii.count == 0 || self.radii.min_exp > self.radii.max_exp {
            return Err(Error::Domain("radii must have count >= 1 and min_exp <= max_exp".into()));
        }
        Ok(())
    }
}

/// Hex SHA-256 identifying an (algebra, blocks) pair.
pub fn structure_hash(algebra: &AlgebraSpec, blocks: &[usize]) -> String {
    let family = match algebra.family {
        Family::Sl => "sl",
    };
    let blocks: Vec<String> = blocks.iter().map(|b| b.to_string()).collect();
    let canonical = format!("{family}:{}:{}", algebra.n, blocks.join(","));
    format!("{:x}", Sha256::digest(canonical.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_are_log_spaced() {
        let r = RadiiConfig::default().values();
        assert_eq!(r.len(), 20);
        assert_eq!(r[0], 1.0);
        assert!((r[19] - 1000.0).abs() < 1e-9);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.validate().unwrap();
        c.blocks = vec![1, 2];
        assert!(c.validate().is_err());
        c.blocks = vec![1, 1];
        c.samples = 0;
        assert!(c.validate().is_err());
        c.samples = 1;
        c.tolerances.cert_slack = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"algebra":{"family":"sl","n":3},"blocks":[1,1,1]}"#).unwrap();
        assert_eq!(c.algebra.n, 3);
        assert_eq!(c.samples, 200);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn hash_distinguishes_blocks() {
        let a = AlgebraSpec { family: Family::Sl, n: 3 };
        assert_ne!(structure_hash(&a, &[1, 2]), structure_hash(&a, &[2, 1]));
        assert_eq!(structure_hash(&a, &[1, 2]), structure_hash(&a, &[1, 2]));
    }
}
