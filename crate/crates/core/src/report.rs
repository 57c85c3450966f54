//! Core files: JSON records of learned cores, bound to a model by the
//! SHA-256 of its canonical serialization.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boundedcore::StoreKind;
use crate::learncore::{CoreResult, Heuristic};
use crate::model::serialize_model;
use crate::numerics::Horizon;
use crate::{ExplicitMdp, StateSet};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed core file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("invalid core file: {0}")]
    Invalid(String),
    #[error("core file belongs to model {found}, not {expected}")]
    ModelMismatch { expected: String, found: String },
}

/// Hex SHA-256 of the canonical model serialization.
pub fn model_hash(mdp: &ExplicitMdp) -> String {
    hex::encode(Sha256::digest(serialize_model(mdp).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum HorizonField {
    Name(String),
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreField {
    pub kind: String,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsField {
    pub paths: u64,
    pub states_explored: usize,
    pub bellman_updates: u64,
    pub ec_collapses: u64,
}

/// Serialized form of a [`CoreResult`]. Timings are not recorded, so equal
/// runs produce byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreRecord {
    pub model_hash: String,
    pub epsilon: f64,
    horizon: HorizonField,
    pub heuristic: String,
    pub seed: u64,
    pub states: Vec<usize>,
    pub verified_exit_upper: f64,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound_store: Option<StoreField>,
    pub stats: StatsField,
}

impl CoreRecord {
    pub fn from_result(mdp: &ExplicitMdp, core: &CoreResult) -> Self {
        CoreRecord {
            model_hash: model_hash(mdp),
            epsilon: core.epsilon,
            horizon: match core.horizon {
                Horizon::Unbounded => HorizonField::Name("unbounded".into()),
                Horizon::Steps(n) => HorizonField::Steps(n),
            },
            heuristic: core.heuristic.name().into(),
            seed: core.seed,
            states: core.states.to_vec(),
            verified_exit_upper: core.verified_exit_upper,
            verified: core.verified,
            bound_store: core.bound_store.map(|k| StoreField {
                kind: k.name().into(),
                k: match k {
                    StoreKind::Dense => None,
                    StoreKind::Sparse { k } => Some(k),
                },
            }),
            stats: StatsField {
                paths: core.stats.paths,
                states_explored: core.stats.states_explored,
                bellman_updates: core.stats.bellman_updates,
                ec_collapses: core.stats.ec_collapses,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("core records always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let rec: CoreRecord = serde_json::from_str(text)?;
        rec.horizon()?;
        rec.heuristic()?;
        Ok(rec)
    }

    pub fn horizon(&self) -> Result<Horizon, ReportError> {
        match &self.horizon {
            HorizonField::Name(n) if n == "unbounded" => Ok(Horizon::Unbounded),
            HorizonField::Steps(n) => Ok(Horizon::Steps(*n)),
            HorizonField::Name(other) => {
                Err(ReportError::Invalid(format!("unknown horizon '{other}'")))
            }
        }
    }

    pub fn heuristic(&self) -> Result<Heuristic, ReportError> {
        self.heuristic
            .parse()
            .map_err(|e: crate::learncore::UnknownHeuristic| ReportError::Invalid(e.to_string()))
    }

    /// Checks the record against `mdp` and returns its state set.
    pub fn states_for(&self, mdp: &ExplicitMdp) -> Result<StateSet, ReportError> {
        let expected = model_hash(mdp);
        if self.model_hash != expected {
            return Err(ReportError::ModelMismatch {
                expected,
                found: self.model_hash.clone(),
            });
        }
        let n = mdp.num_states();
        if let Some(&s) = self.states.iter().find(|&&s| s >= n) {
            return Err(ReportError::Invalid(format!(
                "state {s} out of range for a model with {n} states"
            )));
        }
        Ok(StateSet::from_indices(n, self.states.iter().copied()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learncore::{learn_core, LearnConfig};
    use crate::model::generators::{build_fig2, build_fig3};

    #[test]
    fn round_trip_and_hash_binding() {
        let m = build_fig3(0.3).unwrap();
        let core = learn_core(&m, 0.3, Heuristic::Weighted, 1, &LearnConfig::default(), None).unwrap();
        let rec = CoreRecord::from_result(&m, &core);
        let text = rec.to_json();
        assert!(text.contains("\"horizon\": \"unbounded\""));
        assert!(!text.contains("wall"));
        let back = CoreRecord::from_json(&text).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.to_json(), text);
        assert_eq!(back.states_for(&m).unwrap(), core.states);
        assert!(matches!(back.states_for(&build_fig2()), Err(ReportError::ModelMismatch { .. })));
    }

    #[test]
    fn bounded_fields() {
        let m = build_fig3(0.3).unwrap();
        let mut core = learn_core(&m, 0.3, Heuristic::Prob, 1, &LearnConfig::default(), None).unwrap();
        core.horizon = Horizon::Steps(7);
        core.bound_store = Some(StoreKind::Sparse { k: 5 });
        let text = CoreRecord::from_result(&m, &core).to_json();
        assert!(text.contains("\"horizon\": 7"));
        assert!(text.contains("\"K\": 5"));
        let back = CoreRecord::from_json(&text).unwrap();
        assert_eq!(back.horizon().unwrap(), Horizon::Steps(7));
        assert!(CoreRecord::from_json(&text.replace("\"prob\"", "\"greedy\"")).is_err());
    }

    #[test]
    fn hash_is_hex_sha256() {
        let h = model_hash(&build_fig2());
        assert_eq!(h.len(), 64);
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
    }
}
