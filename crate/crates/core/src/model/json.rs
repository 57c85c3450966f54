use serde::{Deserialize, Serialize};

use super::{Action, Distribution, ExplicitMdp, Location, ModelError};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "type")]
    kind: String,
    states: usize,
    initial: usize,
    actions: Vec<Vec<RawAction>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rewards: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    dist: Vec<(usize, f64)>,
}

/// Parses and validates the JSON model format.
pub fn parse_model(text: &str) -> Result<ExplicitMdp, ModelError> {
    let raw: RawModel =
        serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
    if raw.kind != "mdp" {
        return Err(ModelError::Malformed(format!(
            "unsupported model type {:?}",
            raw.kind
        )));
    }
    if raw.actions.len() != raw.states {
        return Err(ModelError::LengthMismatch {
            what: "actions",
            expected: raw.states,
            found: raw.actions.len(),
        });
    }
    let mut actions = Vec::with_capacity(raw.states);
    for (state, acts) in raw.actions.into_iter().enumerate() {
        let mut parsed = Vec::with_capacity(acts.len());
        for (action, act) in acts.into_iter().enumerate() {
            let at = Location { state, action };
            if act.dist.is_empty() {
                return Err(ModelError::DistributionSum {
                    state,
                    action,
                    sum: 0.0,
                });
            }
            parsed.push(Action {
                label: act.label,
                dist: Distribution::validated(act.dist, at)?,
            });
        }
        actions.push(parsed);
    }
    ExplicitMdp::new(raw.initial, actions, raw.rewards)
}

/// Canonical serialization: compact JSON, states ascending, distribution
/// entries sorted by target.
pub fn serialize_model(mdp: &ExplicitMdp) -> String {
    let raw = RawModel {
        kind: "mdp".to_string(),
        states: mdp.num_states(),
        initial: mdp.initial(),
        actions: (0..mdp.num_states())
            .map(|s| {
                mdp.actions(s)
                    .iter()
                    .map(|a| RawAction {
                        label: a.label.clone(),
                        dist: a.dist.entries().to_vec(),
                    })
                    .collect()
            })
            .collect(),
        rewards: mdp.rewards().map(<[f64]>::to_vec),
    };
    serde_json::to_string(&raw).expect("model serialization is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_self_loop() {
        let m = parse_model(r#"{"type":"mdp","states":1,"initial":0,"actions":[[{"dist":[[0,1.0]]}]]}"#)
            .unwrap();
        assert_eq!(m.num_states(), 1);
        assert!(m.is_markov_chain());
        assert_eq!(
            serialize_model(&m),
            r#"{"type":"mdp","states":1,"initial":0,"actions":[[{"dist":[[0,1.0]]}]]}"#
        );
    }

    #[test]
    fn fig2_text() {
        let text = r#"{
            "type": "mdp", "states": 7, "initial": 0,
            "actions": [
                [{"label": "a", "dist": [[1, 0.8], [2, 0.2]]},
                 {"label": "b", "dist": [[3, 0.3], [4, 0.7]]}],
                [{"dist": [[1, 1]]}], [{"dist": [[2, 1]]}], [{"dist": [[3, 1]]}],
                [{"dist": [[5, 1]]}], [{"dist": [[6, 1]]}], [{"dist": [[1, 1]]}]
            ]
        }"#;
        let m = parse_model(text).unwrap();
        assert_eq!(m.num_states(), 7);
        assert_eq!(m.actions(0).len(), 2);
        assert_eq!(m.actions(0)[1].label.as_deref(), Some("b"));
        assert_eq!(m, crate::model::generators::build_fig2());
    }

    #[test]
    fn errors_carry_locations() {
        let sum = parse_model(
            r#"{"type":"mdp","states":2,"initial":0,"actions":[[{"dist":[[1,1]]}],[{"dist":[[0,0.5],[1,0.4]]}]]}"#,
        )
        .unwrap_err();
        assert_eq!(sum.to_string(), "state 1, action 0: distribution sums to 0.9");

        let range = parse_model(
            r#"{"type":"mdp","states":1,"initial":0,"actions":[[{"dist":[[0,1]]},{"dist":[[3,1]]}]]}"#,
        )
        .unwrap_err();
        assert!(matches!(
            range,
            ModelError::TargetOutOfRange {
                state: 0,
                action: 1,
                target: 3,
                ..
            }
        ));

        let empty = parse_model(r#"{"type":"mdp","states":1,"initial":0,"actions":[[]]}"#).unwrap_err();
        assert_eq!(empty, ModelError::EmptyActions { state: 0 });

        assert!(matches!(parse_model("{not json"), Err(ModelError::Malformed(_))));
        assert!(matches!(
            parse_model(r#"{"type":"mc","states":1,"initial":0,"actions":[[{"dist":[[0,1]]}]]}"#),
            Err(ModelError::Malformed(_))
        ));
        assert!(matches!(
            parse_model(r#"{"type":"mdp","states":2,"initial":0,"actions":[[{"dist":[[0,1]]}]]}"#),
            Err(ModelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rewards_round_trip() {
        let text = r#"{"type":"mdp","states":2,"initial":1,"actions":[[{"label":"x","dist":[[0,0.3],[1,0.7]]}],[{"dist":[[0,1.0]]}]],"rewards":[0.5,-2.0]}"#;
        let m = parse_model(text).unwrap();
        assert_eq!(m.rewards(), Some(&[0.5, -2.0][..]));
        assert_eq!(serialize_model(&m), text);
    }
}
