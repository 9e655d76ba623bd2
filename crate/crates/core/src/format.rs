//! TOML text format for models.
//!
//! ```toml
//! num_states = 2
//! num_actions = 1
//! horizon = 3
//! initial_state = 0
//! kernel = [[0.0, 1.0], [0.0, 1.0]]   # |S|·|A| rows of |S|, row (s, a) at s·|A| + a
//! reward = [[0.0], [1.0]]             # |S| rows of |A|
//! costs = [[[0.0], [1.0]]]            # N tables of |S| rows of |A|
//! bounds = [2.0]
//!
//! [metadata]                          # optional grid description
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::GridConfig;
use crate::model::CmdpModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial_state: usize,
    kernel: Vec<Vec<f64>>,
    reward: Vec<Vec<f64>>,
    #[serde(default)]
    costs: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    bounds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<GridConfig>,
}

fn chunk(flat: &[f64], width: usize) -> Vec<Vec<f64>> {
    flat.chunks(width.max(1)).map(<[f64]>::to_vec).collect()
}

fn flatten(rows: Vec<Vec<f64>>, count: usize, width: usize, table: &str) -> Result<Vec<f64>> {
    if rows.len() != count || rows.iter().any(|r| r.len() != width) {
        return Err(Error::Format(format!("{table} must have {count} rows of {width} entries")));
    }
    Ok(rows.into_iter().flatten().collect())
}

/// Serializes a model, optionally with the grid it was built from.
pub fn model_to_string(model: &CmdpModel, metadata: Option<&GridConfig>) -> Result<String> {
    let (ns, na) = (model.num_states, model.num_actions);
    let doc = Document {
        num_states: ns,
        num_actions: na,
        horizon: model.horizon,
        initial_state: model.initial_state,
        kernel: chunk(&model.kernel, ns),
        reward: chunk(&model.reward, na),
        costs: model.costs.chunks((ns * na).max(1)).map(|t| chunk(t, na)).collect(),
        bounds: model.bounds.clone(),
        metadata: metadata.cloned(),
    };
    toml::to_string(&doc).map_err(|e| Error::Format(e.to_string()))
}

/// Parses and validates a model document.
pub fn model_from_str(text: &str) -> Result<(CmdpModel, Option<GridConfig>)> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let (ns, na) = (doc.num_states, doc.num_actions);
    let kernel = flatten(doc.kernel, ns * na, ns, "kernel")?;
    let reward = flatten(doc.reward, ns, na, "reward")?;
    if doc.costs.len() != doc.bounds.len() {
        return Err(Error::Format(format!(
            "{} cost tables but {} bounds",
            doc.costs.len(),
            doc.bounds.len()
        )));
    }
    let mut costs = Vec::with_capacity(doc.costs.len() * ns * na);
    for table in doc.costs {
        costs.extend(flatten(table, ns, na, "cost table")?);
    }
    let model = CmdpModel::new(ns, na, doc.horizon, doc.initial_state, kernel, reward, costs, doc.bounds)?;
    if let Some(cfg) = &doc.metadata {
        cfg.validate()?;
    }
    Ok((model, doc.metadata))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<(CmdpModel, Option<GridConfig>)> {
    model_from_str(&fs::read_to_string(path)?)
}

pub fn write_model(path: impl AsRef<Path>, model: &CmdpModel, metadata: Option<&GridConfig>) -> Result<()> {
    fs::write(path, model_to_string(model, metadata)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{make_grid_cmdp, GridConfig};
    use crate::model::fixtures::chain;

    #[test]
    fn round_trip_is_exact() {
        let m = chain(3, Some(2.0));
        let text = model_to_string(&m, None).unwrap();
        assert_eq!(model_from_str(&text).unwrap(), (m, None));
    }

    #[test]
    fn grid_round_trips_with_metadata() {
        for cfg in [GridConfig::scenario_1a(), GridConfig::scenario_2()] {
            let m = make_grid_cmdp(&cfg).unwrap();
            let text = model_to_string(&m, Some(&cfg)).unwrap();
            let (back, meta) = model_from_str(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(meta.as_ref(), Some(&cfg));
            assert_eq!(make_grid_cmdp(&meta.unwrap()).unwrap(), m);
        }
    }

    #[test]
    fn hand_written_document_parses() {
        let text = "num_states = 2\nnum_actions = 1\nhorizon = 2\ninitial_state = 0\n\
                    kernel = [[0.5, 0.5], [0.0, 1.0]]\nreward = [[0.0], [1.0]]\n";
        let (m, meta) = model_from_str(text).unwrap();
        assert_eq!(m.num_constraints(), 0);
        assert_eq!(m.prob(0, 0, 1), 0.5);
        assert!(meta.is_none());
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let ok = model_to_string(&chain(2, Some(1.0)), None).unwrap();
        let cases = [
            ok.replace("num_states", "states"),
            ok.replace("bounds = [1.0]", "bounds = []"),
            ok.replace("[0.0, 1.0]", "[0.5, 0.6]"),
            "num_states = ".to_string(),
        ];
        for text in cases {
            let err = model_from_str(&text).unwrap_err();
            assert!(matches!(err, Error::Format(_) | Error::InvalidModel(_)), "{err:?}");
        }
    }
}
