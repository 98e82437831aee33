//! Resolving `--instance` arguments into models.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use rydberg_qubo::problems::{reference_instance, ProblemInstance, REFERENCE_NAMES};
use rydberg_qubo::qubo::{ModelFile, QuboModel};
use serde_json::{json, Value};

use crate::exit::{fail, Exit, WithCode, BAD_ARGS, BUILD_FAILED};

#[derive(Debug, Clone, Copy, Default)]
pub struct Penalties {
    pub penalty: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
}

impl Penalties {
    fn is_empty(&self) -> bool {
        self.penalty.is_none() && self.p1.is_none() && self.p2.is_none()
    }

    pub fn apply(&self, inst: &mut ProblemInstance) -> Result<(), Exit> {
        let family = inst.family();
        let unused = |what: &str| {
            fail(
                BAD_ARGS,
                format!("{what} does not apply to family {family}"),
            )
        };
        match inst {
            ProblemInstance::TwoSat(t) | ProblemInstance::Mixed { two_sat: t, .. } => {
                if self.p1.is_some() || self.p2.is_some() {
                    return Err(unused("--p1/--p2"));
                }
                if let Some(p) = self.penalty {
                    t.penalty = p;
                }
            }
            ProblemInstance::SetPacking(s) => {
                if self.p1.is_some() || self.p2.is_some() {
                    return Err(unused("--p1/--p2"));
                }
                if let Some(p) = self.penalty {
                    s.penalty = p;
                }
            }
            ProblemInstance::Qap(q) => {
                if self.penalty.is_some() {
                    return Err(unused("--penalty"));
                }
                q.p1 = self.p1.unwrap_or(q.p1);
                q.p2 = self.p2.unwrap_or(q.p2);
            }
            ProblemInstance::Protein(p) => {
                if self.penalty.is_some() {
                    return Err(unused("--penalty"));
                }
                p.p1 = self.p1.unwrap_or(p.p1);
                p.p2 = self.p2.unwrap_or(p.p2);
            }
            ProblemInstance::XorSat(_) | ProblemInstance::Clustering(_) => {
                if !self.is_empty() {
                    return Err(unused("penalty flags"));
                }
            }
        }
        Ok(())
    }
}

pub struct Loaded {
    pub name: String,
    pub model: QuboModel,
    pub metadata: Value,
}

/// A reference-instance name, a problem-instance JSON file (with a `family`
/// tag) or a model JSON file.
pub fn load(spec: &str, penalties: &Penalties) -> Result<Loaded, Exit> {
    if REFERENCE_NAMES.contains(&spec) {
        let r = reference_instance(spec).code(BAD_ARGS)?;
        let mut inst = r.instance.clone();
        penalties.apply(&mut inst)?;
        let model = inst.build().code(BUILD_FAILED)?;
        return Ok(Loaded {
            name: spec.to_string(),
            metadata: json!({ "source": "reference", "instance": inst, "details": r.metadata }),
            model,
        });
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(fail(
            BAD_ARGS,
            format!(
                "`{spec}` is neither a file nor one of {}",
                REFERENCE_NAMES.join(", ")
            ),
        ));
    }
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {spec}"))
        .code(BAD_ARGS)?;
    let value: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {spec}"))
        .code(BAD_ARGS)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    // output of `problem` wraps the model under "model"
    let value = value.get("model").cloned().unwrap_or(value);
    if value.get("family").is_some() {
        let mut inst: ProblemInstance = serde_json::from_value(value)
            .context("instance JSON")
            .code(BAD_ARGS)?;
        penalties.apply(&mut inst)?;
        let model = inst.build().code(BUILD_FAILED)?;
        Ok(Loaded {
            name,
            metadata: json!({ "source": spec, "instance": inst }),
            model,
        })
    } else {
        if !penalties.is_empty() {
            return Err(fail(
                BAD_ARGS,
                "penalty flags need a problem instance, not a model file",
            ));
        }
        let file: ModelFile = serde_json::from_value(value)
            .map_err(|e| anyhow!("model JSON: {e}"))
            .code(BAD_ARGS)?;
        let model = file.to_qubo().code(BAD_ARGS)?;
        let name = file
            .metadata
            .as_ref()
            .and_then(|m| m.get("name"))
            .and_then(Value::as_str)
            .map_or(name, String::from);
        Ok(Loaded {
            name,
            model,
            metadata: json!({ "source": spec }),
        })
    }
}
