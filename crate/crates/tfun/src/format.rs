//! JSON forms of the core types.
//!
//! Every document carries `"schema": "1"`. Rationals are `"num/den"`
//! strings, settings and outcomes inside `input`/`output` arrays are
//! 0-based, and table entries equal to zero are omitted.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tfun_core::behavior::{Behavior, TfDistribution};
use tfun_core::localpoly::{BellCertificate, LpVerdict};
use tfun_core::rational::{format_ratio, parse_ratio, Rational};
use tfun_core::scenario::JointDistribution;
use tfun_core::tf::{format_tf, parse_tf, ExperimentShape};

use crate::error::CliError;

pub const SCHEMA: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryJson {
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    pub p: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorJson {
    #[serde(default = "schema")]
    pub schema: String,
    pub shape: String,
    pub entries: Vec<EntryJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightJson {
    pub tf: String,
    pub w: String,
}

/// A distribution, or any document with a `witness` list (an LP verdict).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionJson {
    #[serde(default = "schema")]
    pub schema: String,
    pub shape: String,
    #[serde(alias = "witness")]
    pub weights: Vec<WeightJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointWeightJson {
    pub tfs: Vec<String>,
    pub w: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointJson {
    #[serde(default = "schema")]
    pub schema: String,
    pub shapes: Vec<String>,
    pub weights: Vec<JointWeightJson>,
}

fn schema() -> String {
    SCHEMA.to_string()
}

pub fn rational(text: &str) -> Result<Rational, CliError> {
    parse_ratio(text).map_err(|e| CliError::format(format!("`{text}`: {e}")))
}

pub fn shape(text: &str) -> Result<ExperimentShape, CliError> {
    text.parse::<ExperimentShape>().map_err(CliError::from)
}

pub fn behavior_to_json(b: &Behavior) -> BehaviorJson {
    let shape = b.shape();
    BehaviorJson {
        schema: schema(),
        shape: shape.to_string(),
        entries: b
            .support()
            .map(|(i, j, p)| EntryJson {
                input: shape.decode_input(i),
                output: shape.decode_output(j),
                p: format_ratio(p),
            })
            .collect(),
    }
}

pub fn behavior_from_json(doc: &BehaviorJson) -> Result<Behavior, CliError> {
    let shape = shape(&doc.shape)?;
    let nj = shape.joint_outputs();
    let mut table = vec![Rational::from_integer(0.into()); shape.joint_inputs() * nj];
    for e in &doc.entries {
        let (i, j) = match (shape.encode_input(&e.input), shape.encode_output(&e.output)) {
            (Some(i), Some(j)) => (i, j),
            _ => {
                return Err(CliError::format(format!(
                    "entry {:?} -> {:?} does not fit shape {shape}",
                    e.input, e.output
                )))
            }
        };
        table[i * nj + j] += rational(&e.p)?;
    }
    Ok(Behavior::new(shape, table)?)
}

pub fn distribution_to_json(d: &TfDistribution) -> DistributionJson {
    DistributionJson {
        schema: schema(),
        shape: d.shape().to_string(),
        weights: weights_json(d),
    }
}

fn weights_json(d: &TfDistribution) -> Vec<WeightJson> {
    d.atoms()
        .map(|(f, w)| WeightJson {
            tf: format_tf(f),
            w: format_ratio(w),
        })
        .collect()
}

pub fn distribution_from_json(doc: &DistributionJson) -> Result<TfDistribution, CliError> {
    let shape = shape(&doc.shape)?;
    let atoms = doc
        .weights
        .iter()
        .map(|a| Ok((parse_tf(&shape, &a.tf)?, rational(&a.w)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(TfDistribution::new(shape, atoms)?)
}

pub fn joint_to_json(j: &JointDistribution) -> JointJson {
    JointJson {
        schema: schema(),
        shapes: j.shapes().iter().map(ToString::to_string).collect(),
        weights: j
            .atoms()
            .map(|(fs, w)| JointWeightJson {
                tfs: fs.iter().map(format_tf).collect(),
                w: format_ratio(w),
            })
            .collect(),
    }
}

pub fn joint_from_json(doc: &JointJson) -> Result<JointDistribution, CliError> {
    let shapes = doc
        .shapes
        .iter()
        .map(|s| shape(s))
        .collect::<Result<Vec<_>, _>>()?;
    let atoms = doc
        .weights
        .iter()
        .map(|a| {
            if a.tfs.len() != shapes.len() {
                return Err(CliError::format(format!(
                    "{} functions given for {} shapes",
                    a.tfs.len(),
                    shapes.len()
                )));
            }
            let fs = a
                .tfs
                .iter()
                .zip(&shapes)
                .map(|(t, s)| parse_tf(s, t))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((fs, rational(&a.w)?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(JointDistribution::new(shapes, atoms)?)
}

pub fn certificate_json(c: &BellCertificate) -> Value {
    let shape = c.shape();
    let nj = shape.joint_outputs();
    let coeffs: Vec<Value> = c
        .coefficients()
        .iter()
        .enumerate()
        .filter(|(_, v)| !num_traits::Zero::is_zero(*v))
        .map(|(k, v)| {
            json!({
                "input": shape.decode_input(k / nj),
                "output": shape.decode_output(k % nj),
                "c": format_ratio(v),
            })
        })
        .collect();
    json!({
        "coeffs": coeffs,
        "threshold": format_ratio(c.threshold()),
        "violation": format_ratio(c.violation()),
    })
}

/// `{"verdict", "witness"}` or `{"verdict", "certificate"}`.
pub fn verdict_json(v: &LpVerdict) -> Value {
    match v {
        LpVerdict::Feasible(d) => json!({
            "verdict": "feasible",
            "shape": d.shape().to_string(),
            "witness": weights_json(d),
        }),
        LpVerdict::Infeasible(c) => json!({
            "verdict": "infeasible",
            "shape": c.shape().to_string(),
            "certificate": certificate_json(c),
        }),
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(format!("{}: {e}", path.display())))
}
