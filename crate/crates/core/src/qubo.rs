//! Binary (QUBO) and spin (Ising) forms of a quadratic cost function.
//!
//! Both forms share the substitution `x_i = (1 - s_i) / 2`, so `x = 0` maps
//! to `s = +1` (atomic ground state) and `x = 1` maps to `s = -1` (Rydberg
//! state). Basis states are indexed by a `u64` whose bit `i` holds `x_i`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of variables for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Coefficients of a quadratic polynomial with unordered pair keys `i < j`.
#[derive(Debug, Clone, PartialEq, Default)]
struct Coefficients {
    n: usize,
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    constant: f64,
}

impl Coefficients {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            linear: vec![0.0; n],
            quadratic: BTreeMap::new(),
            constant: 0.0,
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::InvalidModel(format!(
                "index {i} out of range for {} variables",
                self.n
            )));
        }
        Ok(())
    }

    fn add_pair(&mut self, i: usize, j: usize, c: f64) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        let key = if i < j { (i, j) } else { (j, i) };
        *self.quadratic.entry(key).or_insert(0.0) += c;
        Ok(())
    }

    fn pair(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.quadratic.get(&key).copied().unwrap_or(0.0)
    }

    fn prune(&mut self) {
        self.quadratic.retain(|_, c| *c != 0.0);
    }
}

/// Quadratic unconstrained binary optimization model
/// `C(x) = constant + sum_i linear_i x_i + sum_{i<j} quadratic_ij x_i x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    inner: Coefficients,
}

impl QuboModel {
    /// Zero model on `n` variables.
    pub fn new(n: usize) -> Self {
        Self {
            inner: Coefficients::zeros(n),
        }
    }

    pub fn from_parts(
        linear: Vec<f64>,
        quadratic: impl IntoIterator<Item = (usize, usize, f64)>,
        constant: f64,
    ) -> Result<Self> {
        let mut m = Self::new(linear.len());
        m.inner.linear = linear;
        m.inner.constant = constant;
        for (i, j, c) in quadratic {
            m.add_quadratic(i, j, c)?;
        }
        m.validate()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn linear(&self) -> &[f64] {
        &self.inner.linear
    }

    /// Pair coefficients keyed by `(i, j)` with `i < j`.
    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.inner.quadratic
    }

    pub fn quadratic_at(&self, i: usize, j: usize) -> f64 {
        self.inner.pair(i, j)
    }

    pub fn constant(&self) -> f64 {
        self.inner.constant
    }

    pub fn add_constant(&mut self, c: f64) {
        self.inner.constant += c;
    }

    pub fn add_linear(&mut self, i: usize, c: f64) -> Result<()> {
        self.inner.check_index(i)?;
        self.inner.linear[i] += c;
        Ok(())
    }

    /// Adds `c x_i x_j`. A diagonal term folds into the linear part since `x^2 = x`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, c: f64) -> Result<()> {
        if i == j {
            return self.add_linear(i, c);
        }
        self.inner.add_pair(i, j, c)?;
        self.inner.prune();
        Ok(())
    }

    /// Coefficient-wise sum of two models on the same variables.
    pub fn sum(&self, other: &QuboModel) -> Result<QuboModel> {
        if self.n() != other.n() {
            return Err(Error::VariableCountMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        let mut out = self.clone();
        for (i, c) in other.linear().iter().enumerate() {
            out.inner.linear[i] += c;
        }
        for (&(i, j), &c) in other.quadratic() {
            out.inner.add_pair(i, j, c)?;
        }
        out.inner.constant += other.constant();
        out.inner.prune();
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        for (&(i, j), c) in self.quadratic() {
            if !(i < j && j < self.n()) {
                return Err(Error::InvalidModel(format!("pair ({i}, {j}) invalid")));
            }
            if !c.is_finite() {
                return Err(Error::InvalidModel(format!("pair ({i}, {j}) not finite")));
            }
        }
        if self.linear().iter().any(|c| !c.is_finite()) || !self.constant().is_finite() {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Cost of a 0/1 assignment.
    pub fn evaluate(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        if let Some(v) = x.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidModel(format!(
                "assignment entry {v} is not binary"
            )));
        }
        let mut e = self.constant();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 1 {
                e += self.linear()[i];
            }
        }
        for (&(i, j), &c) in self.quadratic() {
            if x[i] == 1 && x[j] == 1 {
                e += c;
            }
        }
        Ok(e)
    }

    /// Cost of the basis state whose bit `i` holds `x_i`.
    pub fn evaluate_index(&self, bits: u64) -> f64 {
        let bit = |i: usize| (bits >> i) & 1 == 1;
        let mut e = self.constant();
        for (i, c) in self.linear().iter().enumerate() {
            if bit(i) {
                e += c;
            }
        }
        for (&(i, j), &c) in self.quadratic() {
            if bit(i) && bit(j) {
                e += c;
            }
        }
        e
    }

    pub fn to_ising(&self) -> IsingModel {
        qubo_to_ising(self)
    }
}

/// Spin model `E(s) = constant + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    inner: Coefficients,
}

impl IsingModel {
    pub fn new(n: usize) -> Self {
        Self {
            inner: Coefficients::zeros(n),
        }
    }

    pub fn from_parts(
        h: Vec<f64>,
        couplings: impl IntoIterator<Item = (usize, usize, f64)>,
        constant: f64,
    ) -> Result<Self> {
        let mut m = Self::new(h.len());
        m.inner.linear = h;
        m.inner.constant = constant;
        for (i, j, c) in couplings {
            m.add_coupling(i, j, c)?;
        }
        if m.h().iter().any(|c| !c.is_finite())
            || m.couplings().values().any(|c| !c.is_finite())
            || !constant.is_finite()
        {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn h(&self) -> &[f64] {
        &self.inner.linear
    }

    /// Couplings keyed by `(i, j)` with `i < j`.
    pub fn couplings(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.inner.quadratic
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.inner.pair(i, j)
    }

    pub fn constant(&self) -> f64 {
        self.inner.constant
    }

    pub fn add_constant(&mut self, c: f64) {
        self.inner.constant += c;
    }

    pub fn add_field(&mut self, i: usize, c: f64) -> Result<()> {
        self.inner.check_index(i)?;
        self.inner.linear[i] += c;
        Ok(())
    }

    /// Adds `c s_i s_j`. A diagonal term is a constant since `s^2 = 1`.
    pub fn add_coupling(&mut self, i: usize, j: usize, c: f64) -> Result<()> {
        if i == j {
            self.inner.check_index(i)?;
            self.inner.constant += c;
            return Ok(());
        }
        self.inner.add_pair(i, j, c)?;
        self.inner.prune();
        Ok(())
    }

    /// Energy of a spin assignment with entries in {-1, +1}.
    pub fn energy(&self, s: &[i8]) -> Result<f64> {
        if s.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: s.len(),
            });
        }
        if let Some(v) = s.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidModel(format!("spin entry {v} is not +-1")));
        }
        let mut e = self.constant();
        for (i, &si) in s.iter().enumerate() {
            e += self.h()[i] * f64::from(si);
        }
        for (&(i, j), &c) in self.couplings() {
            e += c * f64::from(s[i]) * f64::from(s[j]);
        }
        Ok(e)
    }

    /// Energy of the basis state whose bit `i` holds `x_i`, with `s_i = 1 - 2 x_i`.
    pub fn energy_index(&self, bits: u64) -> f64 {
        let spin = |i: usize| if (bits >> i) & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = self.constant();
        for (i, h) in self.h().iter().enumerate() {
            e += h * spin(i);
        }
        for (&(i, j), &c) in self.couplings() {
            e += c * spin(i) * spin(j);
        }
        e
    }

    pub fn to_qubo(&self) -> QuboModel {
        ising_to_qubo(self)
    }

    /// Same model with the constant offset removed.
    pub fn without_constant(&self) -> IsingModel {
        let mut m = self.clone();
        m.inner.constant = 0.0;
        m
    }
}

/// Rewrites a QUBO in spin variables through `x_i = (1 - s_i) / 2`.
pub fn qubo_to_ising(q: &QuboModel) -> IsingModel {
    let mut out = IsingModel::new(q.n());
    let mut constant = q.constant();
    for (i, &a) in q.linear().iter().enumerate() {
        // a x = a/2 - (a/2) s
        out.inner.linear[i] -= a / 2.0;
        constant += a / 2.0;
    }
    for (&(i, j), &c) in q.quadratic() {
        // c x_i x_j = c/4 (1 - s_i - s_j + s_i s_j)
        out.inner.linear[i] -= c / 4.0;
        out.inner.linear[j] -= c / 4.0;
        out.inner.quadratic.insert((i, j), c / 4.0);
        constant += c / 4.0;
    }
    out.inner.constant = constant;
    out
}

/// Rewrites a spin model in binary variables through `s_i = 1 - 2 x_i`.
pub fn ising_to_qubo(m: &IsingModel) -> QuboModel {
    let mut out = QuboModel::new(m.n());
    let mut constant = m.constant();
    for (i, &h) in m.h().iter().enumerate() {
        out.inner.linear[i] -= 2.0 * h;
        constant += h;
    }
    for (&(i, j), &c) in m.couplings() {
        // c s_i s_j = c (1 - 2 x_i - 2 x_j + 4 x_i x_j)
        out.inner.linear[i] -= 2.0 * c;
        out.inner.linear[j] -= 2.0 * c;
        out.inner.quadratic.insert((i, j), 4.0 * c);
        constant += c;
    }
    out.inner.constant = constant;
    out
}

/// Unpacks a basis index into a 0/1 assignment of length `n`.
pub fn bits_of(index: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((index >> i) & 1) as u8).collect()
}

/// Packs a 0/1 assignment into a basis index.
pub fn index_of(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | (u64::from(b & 1) << i))
}

/// Spin vector of a basis index (`s_i = 1 - 2 x_i`).
pub fn spins_of(index: u64, n: usize) -> Vec<i8> {
    (0..n)
        .map(|i| if (index >> i) & 1 == 1 { -1 } else { 1 })
        .collect()
}

/// One distinct energy of a classical spectrum and the basis states attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLevel {
    pub energy: f64,
    pub states: Vec<u64>,
}

impl SpectrumLevel {
    pub fn degeneracy(&self) -> usize {
        self.states.len()
    }
}

/// Exhaustively enumerated classical spectrum grouped by exact energy equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub n: usize,
    pub entries: Vec<SpectrumLevel>,
    pub e_min: f64,
    pub e_max: f64,
}

impl SpectrumTable {
    /// Builds a table from per-state energies indexed by basis state.
    pub fn from_energies(n: usize, energies: &[f64]) -> Self {
        let mut order: Vec<u64> = (0..energies.len() as u64).collect();
        order.sort_by(|&a, &b| {
            energies[a as usize]
                .total_cmp(&energies[b as usize])
                .then(a.cmp(&b))
        });
        let mut entries: Vec<SpectrumLevel> = Vec::new();
        for idx in order {
            let e = energies[idx as usize];
            match entries.last_mut() {
                Some(level) if level.energy == e => level.states.push(idx),
                _ => entries.push(SpectrumLevel {
                    energy: e,
                    states: vec![idx],
                }),
            }
        }
        let e_min = entries.first().map_or(0.0, |l| l.energy);
        let e_max = entries.last().map_or(0.0, |l| l.energy);
        Self {
            n,
            entries,
            e_min,
            e_max,
        }
    }

    pub fn total_states(&self) -> usize {
        self.entries.iter().map(SpectrumLevel::degeneracy).sum()
    }

    pub fn ground(&self) -> &SpectrumLevel {
        &self.entries[0]
    }

    /// Copy with every energy shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|l| SpectrumLevel {
                energy: l.energy + c,
                states: l.states.clone(),
            })
            .collect();
        Self {
            n: self.n,
            entries,
            e_min: self.e_min + c,
            e_max: self.e_max + c,
        }
    }
}

/// Enumerates all `2^n` assignments of `m` with the default cap.
pub fn enumerate_spectrum(m: &IsingModel) -> Result<SpectrumTable> {
    enumerate_spectrum_capped(m, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_spectrum_capped(m: &IsingModel, cap: usize) -> Result<SpectrumTable> {
    let n = m.n();
    if n > cap || n >= 63 {
        return Err(Error::TooManyVariables { n, cap });
    }
    let energies: Vec<f64> = (0..1u64 << n)
        .into_par_iter()
        .map(|b| m.energy_index(b))
        .collect();
    Ok(SpectrumTable::from_energies(n, &energies))
}

/// Ground energy, ground states and cost extremes of a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSummary {
    pub e_opt: f64,
    pub ground_states: Vec<u64>,
    pub c_opt: f64,
    pub c_max: f64,
}

pub fn ground_summary(t: &SpectrumTable) -> Result<GroundSummary> {
    let ground = t
        .entries
        .first()
        .ok_or_else(|| Error::InvalidModel("empty spectrum".into()))?;
    Ok(GroundSummary {
        e_opt: ground.energy,
        ground_states: ground.states.clone(),
        c_opt: t.e_min,
        c_max: t.e_max,
    })
}

/// Which variable convention a model file uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Qubo,
    Ising,
}

/// On-disk JSON form shared by QUBO and Ising models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub linear: Vec<f64>,
    pub quadratic: Vec<(usize, usize, f64)>,
    pub constant: f64,
    pub convention: Convention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl ModelFile {
    pub fn from_qubo(q: &QuboModel) -> Self {
        Self {
            n: q.n(),
            linear: q.linear().to_vec(),
            quadratic: q
                .quadratic()
                .iter()
                .map(|(&(i, j), &c)| (i, j, c))
                .collect(),
            constant: q.constant(),
            convention: Convention::Qubo,
            metadata: None,
        }
    }

    pub fn from_ising(m: &IsingModel) -> Self {
        Self {
            n: m.n(),
            linear: m.h().to_vec(),
            quadratic: m
                .couplings()
                .iter()
                .map(|(&(i, j), &c)| (i, j, c))
                .collect(),
            constant: m.constant(),
            convention: Convention::Ising,
            metadata: None,
        }
    }

    fn check(&self) -> Result<()> {
        if self.linear.len() != self.n {
            return Err(Error::InvalidModel(format!(
                "linear has {} entries, n = {}",
                self.linear.len(),
                self.n
            )));
        }
        for &(i, j, _) in &self.quadratic {
            if i == j || i >= self.n || j >= self.n {
                return Err(Error::InvalidModel(format!("pair ({i}, {j}) invalid")));
            }
        }
        Ok(())
    }

    pub fn to_qubo(&self) -> Result<QuboModel> {
        self.check()?;
        match self.convention {
            Convention::Qubo => {
                QuboModel::from_parts(self.linear.clone(), self.quadratic.clone(), self.constant)
            }
            Convention::Ising => Ok(self.to_ising()?.to_qubo()),
        }
    }

    pub fn to_ising(&self) -> Result<IsingModel> {
        self.check()?;
        match self.convention {
            Convention::Ising => {
                IsingModel::from_parts(self.linear.clone(), self.quadratic.clone(), self.constant)
            }
            Convention::Qubo => Ok(self.to_qubo()?.to_ising()),
        }
    }
}
