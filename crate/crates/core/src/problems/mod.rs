//! Builders turning each problem family into a [`QuboModel`].
//!
//! Variables are zero-based throughout. Every builder returns the cost
//! function to be minimized; penalties are explicit instance fields.

mod reference;

pub use reference::{
    reference_instance, InstanceMetadata, ReferenceInstance, ReferenceRow, REFERENCE_NAMES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::QuboModel;

/// A possibly negated occurrence of a variable in a clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    #[serde(default)]
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self {
            var,
            negated: false,
        }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, negated: true }
    }

    /// Parses a one-based signed integer (`3` is `x_3`, `-3` is `not x_3`).
    pub fn from_signed(v: i64) -> Result<Self> {
        if v == 0 {
            return Err(Error::InvalidInstance("literal 0 is not allowed".into()));
        }
        let var = (v.unsigned_abs() - 1) as usize;
        Ok(Self {
            var,
            negated: v < 0,
        })
    }

    pub fn satisfied_by(&self, x: &[u8]) -> bool {
        (x[self.var] == 1) != self.negated
    }

    /// The unsatisfied indicator as `(a, b)` meaning `a + b x_var`.
    fn violation_factor(&self) -> (f64, f64) {
        if self.negated {
            (0.0, 1.0)
        } else {
            (1.0, -1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSatInstance {
    pub n: usize,
    pub clauses: Vec<[Literal; 2]>,
    pub penalty: f64,
}

impl TwoSatInstance {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0) {
            return Err(Error::InvalidInstance(
                "two-SAT penalty must be positive".into(),
            ));
        }
        for c in &self.clauses {
            for l in c {
                if l.var >= self.n {
                    return Err(Error::InvalidInstance(format!(
                        "literal on variable {} but n = {}",
                        l.var, self.n
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn violated(&self, x: &[u8]) -> usize {
        self.clauses
            .iter()
            .filter(|c| !(c[0].satisfied_by(x) || c[1].satisfied_by(x)))
            .count()
    }
}

/// Builds `sum_clauses P * prod(unsatisfied literal factors)`.
pub fn build_two_sat(inst: &TwoSatInstance) -> Result<QuboModel> {
    inst.validate()?;
    let mut q = QuboModel::new(inst.n);
    let p = inst.penalty;
    for [l1, l2] in &inst.clauses {
        let (a1, b1) = l1.violation_factor();
        let (a2, b2) = l2.violation_factor();
        q.add_constant(p * a1 * a2);
        q.add_linear(l1.var, p * b1 * a2)?;
        q.add_linear(l2.var, p * a1 * b2)?;
        q.add_quadratic(l1.var, l2.var, p * b1 * b2)?;
    }
    Ok(q)
}

/// Two-variable parity constraint `x_i xor x_j = parity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XorConstraint {
    pub i: usize,
    pub j: usize,
    pub parity: u8,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl XorConstraint {
    pub fn new(i: usize, j: usize, parity: u8) -> Self {
        Self {
            i,
            j,
            parity,
            weight: 1.0,
        }
    }

    pub fn satisfied_by(&self, x: &[u8]) -> bool {
        (x[self.i] ^ x[self.j]) == self.parity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorSatInstance {
    pub n: usize,
    pub constraints: Vec<XorConstraint>,
}

impl XorSatInstance {
    pub fn validate(&self) -> Result<()> {
        for c in &self.constraints {
            if c.i == c.j || c.i >= self.n || c.j >= self.n {
                return Err(Error::InvalidInstance(format!(
                    "XOR constraint on ({}, {}) invalid for n = {}",
                    c.i, c.j, self.n
                )));
            }
            if c.parity > 1 {
                return Err(Error::InvalidInstance(format!(
                    "parity {} not a bit",
                    c.parity
                )));
            }
            if !(c.weight > 0.0) {
                return Err(Error::InvalidInstance("XOR weight must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn violated(&self, x: &[u8]) -> usize {
        self.constraints
            .iter()
            .filter(|c| !c.satisfied_by(x))
            .count()
    }
}

/// Squared-constraint penalties: `(x_i + x_j - 1)^2` for parity 1, `(x_i - x_j)^2` for parity 0.
pub fn build_xor_sat(inst: &XorSatInstance) -> Result<QuboModel> {
    inst.validate()?;
    let mut q = QuboModel::new(inst.n);
    for c in &inst.constraints {
        let w = c.weight;
        if c.parity == 1 {
            q.add_constant(w);
            q.add_linear(c.i, -w)?;
            q.add_linear(c.j, -w)?;
            q.add_quadratic(c.i, c.j, 2.0 * w)?;
        } else {
            q.add_linear(c.i, w)?;
            q.add_linear(c.j, w)?;
            q.add_quadratic(c.i, c.j, -2.0 * w)?;
        }
    }
    Ok(q)
}

/// Sum of the two-SAT and XOR-SAT penalty models on shared variables.
pub fn build_mixed(ts: &TwoSatInstance, xs: &XorSatInstance) -> Result<QuboModel> {
    if ts.n != xs.n {
        return Err(Error::VariableCountMismatch {
            left: ts.n,
            right: xs.n,
        });
    }
    build_two_sat(ts)?.sum(&build_xor_sat(xs)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetPackingInstance {
    pub weights: Vec<f64>,
    pub conflicts: Vec<(usize, usize)>,
    pub penalty: f64,
}

impl SetPackingInstance {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0) {
            return Err(Error::InvalidInstance(
                "set packing penalty must be positive".into(),
            ));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInstance(
                "set weights must be positive".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(i, j) in &self.conflicts {
            if i == j || i >= self.n() || j >= self.n() {
                return Err(Error::InvalidInstance(format!(
                    "conflict ({i}, {j}) invalid"
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidInstance(format!(
                    "conflict ({i}, {j}) repeated"
                )));
            }
        }
        Ok(())
    }

    /// Number of conflicts touching each set.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n()];
        for &(i, j) in &self.conflicts {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }
}

/// `-sum w_i x_i + P sum_{(i,j) in D} x_i x_j`.
pub fn build_set_packing(inst: &SetPackingInstance) -> Result<QuboModel> {
    inst.validate()?;
    let mut q = QuboModel::new(inst.n());
    for (i, w) in inst.weights.iter().enumerate() {
        q.add_linear(i, -w)?;
    }
    for &(i, j) in &inst.conflicts {
        q.add_quadratic(i, j, inst.penalty)?;
    }
    Ok(q)
}

/// Quadratic assignment with flow matrix `flow` (facilities) and `distance` (locations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QapInstance {
    pub flow: Vec<Vec<f64>>,
    pub distance: Vec<Vec<f64>>,
    pub p1: f64,
    pub p2: f64,
}

impl QapInstance {
    pub fn n(&self) -> usize {
        self.flow.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&self.flow) || !square(&self.distance) {
            return Err(Error::InvalidInstance(
                "flow and distance must be square matrices of equal size".into(),
            ));
        }
        if (0..n).any(|i| self.flow[i][i] != 0.0 || self.distance[i][i] != 0.0) {
            return Err(Error::InvalidInstance(
                "QAP matrices need zero diagonals".into(),
            ));
        }
        if !(self.p1 > 0.0 && self.p2 > 0.0) {
            return Err(Error::InvalidInstance(
                "QAP penalties must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        let sym =
            |m: &Vec<Vec<f64>>| (0..m.len()).all(|i| (0..m.len()).all(|j| m[i][j] == m[j][i]));
        sym(&self.flow) && sym(&self.distance)
    }

    /// Zero-based variable index of "facility `i` at location `j`".
    pub fn index(&self, facility: usize, location: usize) -> usize {
        qap_index(self.n(), facility, location)
    }

    /// `sum_{i,k} a_ik b_{pi(i) pi(k)}` for a permutation `perm[facility] = location`.
    pub fn assignment_cost(&self, perm: &[usize]) -> f64 {
        let n = self.n();
        let mut c = 0.0;
        for i in 0..n {
            for k in 0..n {
                c += self.flow[i][k] * self.distance[perm[i]][perm[k]];
            }
        }
        c
    }

    /// Permutation encoded by `x`, when every facility and location is used exactly once.
    pub fn decode(&self, x: &[u8]) -> Option<Vec<usize>> {
        let n = self.n();
        let mut perm = vec![usize::MAX; n];
        for i in 0..n {
            let row: Vec<usize> = (0..n).filter(|&j| x[self.index(i, j)] == 1).collect();
            if row.len() != 1 {
                return None;
            }
            perm[i] = row[0];
        }
        let mut used = vec![false; n];
        for &j in &perm {
            if used[j] {
                return None;
            }
            used[j] = true;
        }
        Some(perm)
    }
}

/// Zero-based row-major index `facility * n + location`.
pub fn qap_index(n: usize, facility: usize, location: usize) -> usize {
    facility * n + location
}

/// Assignment cost plus `P1` row and `P2` column one-hot penalties on `n^2` variables.
pub fn build_qap(inst: &QapInstance) -> Result<QuboModel> {
    inst.validate()?;
    let n = inst.n();
    let mut q = QuboModel::new(n * n);
    for i in 0..n {
        for k in 0..n {
            let a = inst.flow[i][k];
            if a == 0.0 {
                continue;
            }
            for j in 0..n {
                for l in 0..n {
                    let c = a * inst.distance[j][l];
                    if c != 0.0 {
                        q.add_quadratic(qap_index(n, i, j), qap_index(n, k, l), c)?;
                    }
                }
            }
        }
    }
    // P (sum_j x_j - 1)^2 = P (1 - sum_j x_j + 2 sum_{j<l} x_j x_l)
    let mut one_hot = |vars: Vec<usize>, p: f64| -> Result<()> {
        q.add_constant(p);
        for (a, &u) in vars.iter().enumerate() {
            q.add_linear(u, -p)?;
            for &v in &vars[a + 1..] {
                q.add_quadratic(u, v, 2.0 * p)?;
            }
        }
        Ok(())
    };
    for i in 0..n {
        one_hot((0..n).map(|j| qap_index(n, i, j)).collect(), inst.p1)?;
    }
    for j in 0..n {
        one_hot((0..n).map(|i| qap_index(n, i, j)).collect(), inst.p2)?;
    }
    Ok(q)
}

/// Binary clustering over a symmetric, nonnegative dissimilarity matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringInstance {
    pub weights: Vec<Vec<f64>>,
}

impl ClusteringInstance {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let w = &self.weights;
        if w.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInstance(
                "dissimilarity matrix must be square".into(),
            ));
        }
        for i in 0..n {
            if w[i][i] != 0.0 {
                return Err(Error::InvalidInstance(
                    "dissimilarity diagonal must be zero".into(),
                ));
            }
            for j in 0..n {
                if w[i][j] != w[j][i] {
                    return Err(Error::InvalidInstance(format!(
                        "dissimilarity matrix asymmetric at ({i}, {j})"
                    )));
                }
                if !(w[i][j] >= 0.0) {
                    return Err(Error::InvalidInstance(format!(
                        "negative dissimilarity at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cut_weight(&self, x: &[u8]) -> f64 {
        let n = self.n();
        let mut c = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                if x[i] != x[j] {
                    c += self.weights[i][j];
                }
            }
        }
        c
    }
}

/// `-sum_{i<j} w_ij (x_i + x_j - 2 x_i x_j)`, the negated cut weight.
pub fn build_binary_clustering(inst: &ClusteringInstance) -> Result<QuboModel> {
    inst.validate()?;
    let n = inst.n();
    let mut q = QuboModel::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let w = inst.weights[i][j];
            if w != 0.0 {
                q.add_linear(i, -w)?;
                q.add_linear(j, -w)?;
                q.add_quadratic(i, j, 2.0 * w)?;
            }
        }
    }
    Ok(q)
}

/// Contact-variable toy model of hydrophobic-polar folding.
///
/// One binary variable per residue pair `(i, j)`, `i < j`. `exclusions` lists
/// mutually exclusive contact-variable pairs; when absent, two contacts that
/// share a residue are exclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProteinToyInstance {
    pub hydrophobic: Vec<u8>,
    pub p1: f64,
    pub p2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusions: Option<Vec<(usize, usize)>>,
}

impl ProteinToyInstance {
    /// Parses a sequence such as `HHPH`.
    pub fn from_sequence(seq: &str, p1: f64, p2: f64) -> Result<Self> {
        let hydrophobic = seq
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'H' => Ok(1),
                'P' => Ok(0),
                other => Err(Error::InvalidInstance(format!(
                    "residue `{other}` is not H or P"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self {
            hydrophobic,
            p1,
            p2,
            exclusions: None,
        })
    }

    pub fn chain_length(&self) -> usize {
        self.hydrophobic.len()
    }

    pub fn variable_count(&self) -> usize {
        let l = self.chain_length();
        l * l.saturating_sub(1) / 2
    }

    /// Residue pairs `(i, j)`, zero-based with `i < j`, in variable order.
    pub fn contact_pairs(&self) -> Vec<(usize, usize)> {
        let l = self.chain_length();
        let mut out = Vec::with_capacity(self.variable_count());
        for i in 0..l {
            for j in i + 1..l {
                out.push((i, j));
            }
        }
        out
    }

    /// Contact reward: 1 when both residues are hydrophobic and not sequence neighbours.
    pub fn reward(&self, i: usize, j: usize) -> f64 {
        let h = &self.hydrophobic;
        if h[i] == 1 && h[j] == 1 && i.abs_diff(j) > 1 {
            1.0
        } else {
            0.0
        }
    }

    /// Exclusive pairs of contact variables, `p < q`.
    pub fn exclusion_set(&self) -> Vec<(usize, usize)> {
        if let Some(ex) = &self.exclusions {
            return ex.iter().map(|&(p, q)| (p.min(q), p.max(q))).collect();
        }
        let pairs = self.contact_pairs();
        let mut out = Vec::new();
        for p in 0..pairs.len() {
            for q in p + 1..pairs.len() {
                let (a, b) = pairs[p];
                let (c, d) = pairs[q];
                if a == c || a == d || b == c || b == d {
                    out.push((p, q));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.hydrophobic.iter().any(|&h| h > 1) {
            return Err(Error::InvalidInstance(
                "hydrophobicity flags must be 0 or 1".into(),
            ));
        }
        if !(self.p1 > 0.0 && self.p2 > 0.0) {
            return Err(Error::InvalidInstance(
                "protein penalties must be positive".into(),
            ));
        }
        let n = self.variable_count();
        if let Some(ex) = &self.exclusions {
            for &(p, q) in ex {
                if p == q || p >= n || q >= n {
                    return Err(Error::InvalidInstance(format!(
                        "exclusion ({p}, {q}) does not reference two contact variables"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Zero-based variable index of residue pair `(i, j)`, `i < j < l`.
///
/// Equivalent to the one-based map `p = (i-1) L - i (i+1) / 2 + j`.
pub fn protein_index(l: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < l);
    i * l - i * (i + 1) / 2 + (j - i - 1)
}

/// `sum_p (P1 - c_p) x_p + P2 sum_{(p,q) in C} x_p x_q`.
pub fn build_protein_toy(inst: &ProteinToyInstance) -> Result<QuboModel> {
    inst.validate()?;
    let mut q = QuboModel::new(inst.variable_count());
    for (p, &(i, j)) in inst.contact_pairs().iter().enumerate() {
        q.add_linear(p, inst.p1 - inst.reward(i, j))?;
    }
    for (p, r) in inst.exclusion_set() {
        q.add_quadratic(p, r, inst.p2)?;
    }
    Ok(q)
}

/// Any supported instance, tagged by family in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemInstance {
    TwoSat(TwoSatInstance),
    XorSat(XorSatInstance),
    Mixed {
        two_sat: TwoSatInstance,
        xor_sat: XorSatInstance,
    },
    SetPacking(SetPackingInstance),
    Qap(QapInstance),
    Clustering(ClusteringInstance),
    Protein(ProteinToyInstance),
}

impl ProblemInstance {
    pub fn family(&self) -> &'static str {
        match self {
            Self::TwoSat(_) => "two_sat",
            Self::XorSat(_) => "xor_sat",
            Self::Mixed { .. } => "mixed",
            Self::SetPacking(_) => "set_packing",
            Self::Qap(_) => "qap",
            Self::Clustering(_) => "clustering",
            Self::Protein(_) => "protein",
        }
    }

    pub fn build(&self) -> Result<QuboModel> {
        match self {
            Self::TwoSat(i) => build_two_sat(i),
            Self::XorSat(i) => build_xor_sat(i),
            Self::Mixed { two_sat, xor_sat } => build_mixed(two_sat, xor_sat),
            Self::SetPacking(i) => build_set_packing(i),
            Self::Qap(i) => build_qap(i),
            Self::Clustering(i) => build_binary_clustering(i),
            Self::Protein(i) => build_protein_toy(i),
        }
    }
}
