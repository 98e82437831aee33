//! The seven built-in benchmark instances.

use serde::{Deserialize, Serialize};

use super::{
    ClusteringInstance, Literal, ProblemInstance, ProteinToyInstance, QapInstance,
    SetPackingInstance, TwoSatInstance, XorConstraint, XorSatInstance,
};
use crate::error::{Error, Result};
use crate::qubo::QuboModel;

pub const REFERENCE_NAMES: [&str; 7] = [
    "two_sat",
    "xor_sat",
    "mixed",
    "set_packing",
    "qap",
    "clustering",
    "protein",
];

/// Published hardness-table values for an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub e0: f64,
    pub gap: f64,
    pub d_opt: usize,
    pub d_e1: usize,
    pub threats: usize,
    pub hp_mi: f64,
    /// Whether `d_opt` is fully determined by the instance as stated. When
    /// false the published value depends on unstated penalties or
    /// normalizations and cannot be reproduced by enumeration.
    pub d_opt_reproducible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub name: String,
    pub description: String,
    /// Penalty values used, by name.
    pub penalties: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub reference: ReferenceRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceInstance {
    pub instance: ProblemInstance,
    pub model: QuboModel,
    pub metadata: InstanceMetadata,
}

fn row(
    e0: f64,
    gap: f64,
    d_opt: usize,
    d_e1: usize,
    threats: usize,
    hp_mi: f64,
    d_opt_reproducible: bool,
) -> ReferenceRow {
    ReferenceRow {
        e0,
        gap,
        d_opt,
        d_e1,
        threats,
        hp_mi,
        d_opt_reproducible,
    }
}

fn two_sat_part(penalty: f64) -> TwoSatInstance {
    // (x1 or x2) and (not x1 or x3)
    TwoSatInstance {
        n: 3,
        clauses: vec![
            [Literal::pos(0), Literal::pos(1)],
            [Literal::neg(0), Literal::pos(2)],
        ],
        penalty,
    }
}

/// Builds the named benchmark instance with its default penalties.
pub fn reference_instance(name: &str) -> Result<ReferenceInstance> {
    let (instance, description, penalties, notes, reference): (
        ProblemInstance,
        &str,
        Vec<(&str, f64)>,
        Vec<String>,
        ReferenceRow,
    ) = match name {
        "two_sat" => (
            ProblemInstance::TwoSat(two_sat_part(1.0)),
            "(x1 or x2) and (not x1 or x3); satisfiable with four solutions",
            vec![("P", 1.0)],
            vec!["clause (not x1 or x3) yields a negative coupling J13 = -P/4".into()],
            row(-0.15, 0.30, 4, 4, 1, 27.25, true),
        ),
        "xor_sat" => (
            ProblemInstance::XorSat(XorSatInstance {
                n: 3,
                constraints: vec![
                    XorConstraint::new(0, 1, 1),
                    XorConstraint::new(1, 2, 1),
                    XorConstraint::new(2, 0, 1),
                ],
            }),
            "frustrated odd cycle x1^x2 = x2^x3 = x3^x1 = 1; at least one violation",
            vec![("weight", 1.0)],
            vec![],
            row(0.30, 0.60, 6, 2, 1, 1.13, true),
        ),
        "mixed" => (
            ProblemInstance::Mixed {
                two_sat: two_sat_part(1.0),
                xor_sat: XorSatInstance {
                    n: 3,
                    constraints: vec![XorConstraint::new(1, 2, 1)],
                },
            },
            "(x1 or x2) and (not x1 or x3) with x2^x3 = 1",
            vec![("P", 1.0), ("weight", 1.0)],
            vec![],
            row(-0.15, 0.30, 2, 4, 2, 64.52, true),
        ),
        "set_packing" => (
            ProblemInstance::SetPacking(SetPackingInstance {
                weights: vec![1.0; 4],
                conflicts: vec![(0, 2), (0, 3), (1, 2), (1, 3)],
                penalty: 2.0,
            }),
            "four unit-weight sets with bipartite conflicts {1,2} x {3,4}",
            vec![("P", 2.0)],
            vec!["published E0 = 0 leaves the |E0| normalization undefined".into()],
            row(0.0, 0.60, 2, 4, 5, 4.79, true),
        ),
        "qap" => {
            let flow = vec![vec![0.0, 3.0], vec![3.0, 0.0]];
            let distance = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
            let n = 2.0;
            let p = 2.0 * 3.0 * 2.0 * n;
            (
                ProblemInstance::Qap(QapInstance {
                    flow,
                    distance,
                    p1: p,
                    p2: p,
                }),
                "2x2 flow and distance matrices; both feasible assignments cost 12",
                vec![("P1", p), ("P2", p)],
                vec![
                    "penalties default to 2 max(A) max(B) n".into(),
                    "published D_opt = 4 depends on unstated penalties".into(),
                ],
                row(0.20, 0.24, 4, 8, 3, 79.93, false),
            )
        }
        "clustering" => (
            ProblemInstance::Clustering(ClusteringInstance {
                weights: vec![
                    vec![0.0, 3.0, 0.0, 0.0, 1.0],
                    vec![3.0, 0.0, 2.0, 0.0, 0.0],
                    vec![0.0, 2.0, 0.0, 4.0, 1.0],
                    vec![0.0, 0.0, 4.0, 0.0, 2.0],
                    vec![1.0, 0.0, 1.0, 2.0, 0.0],
                ],
            }),
            "weighted max-cut on five nodes",
            vec![],
            vec![
                "published D_opt = 1 conflicts with global spin-flip symmetry (degeneracies are even)"
                    .into(),
            ],
            row(-0.78, 0.24, 1, 2, 18, 89.15, false),
        ),
        "protein" => {
            let inst = ProteinToyInstance::from_sequence("HHPH", 0.5, 2.0)?;
            (
                ProblemInstance::Protein(inst),
                "HHPH contact-variable toy model on six residue-pair variables",
                vec![("P1", 0.5), ("P2", 2.0)],
                vec![
                    "exclusive contacts default to residue-sharing pairs".into(),
                    "published D_opt = 6 depends on an unstated exclusion set and penalties".into(),
                ],
                row(0.28, 0.08, 6, 4, 2, 307.81, false),
            )
        }
        other => return Err(Error::UnknownInstance(other.to_string())),
    };
    let model = instance.build()?;
    Ok(ReferenceInstance {
        instance,
        model,
        metadata: InstanceMetadata {
            name: name.to_string(),
            description: description.to_string(),
            penalties: penalties
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            notes,
            reference,
        },
    })
}
