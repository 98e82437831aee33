//! Subspace clustering of a classical spectrum and the method-independent
//! hardness parameter `HP = Sigma / (|E0| D_opt G^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{enumerate_spectrum, IsingModel, QuboModel, SpectrumTable};

pub const DEFAULT_EPSILON: f64 = 1e-10;
/// Below this `|E0|` the width `E_max - E0` replaces it as normalization.
pub const ZERO_ENERGY_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    pub mean: f64,
    pub degeneracy: usize,
    /// Distinct energies merged into this subspace.
    pub energies: Vec<f64>,
}

/// Greedy left-to-right clustering anchored on running means: a distinct
/// energy joins the current subspace while it lies within `epsilon` of that
/// subspace's degeneracy-weighted mean.
pub fn cluster_subspaces(spectrum: &SpectrumTable, epsilon: f64) -> Vec<Subspace> {
    cluster_levels(
        spectrum.entries.iter().map(|l| (l.energy, l.degeneracy())),
        epsilon,
    )
}

pub fn cluster_levels(
    levels: impl IntoIterator<Item = (f64, usize)>,
    epsilon: f64,
) -> Vec<Subspace> {
    let mut out: Vec<Subspace> = Vec::new();
    for (e, d) in levels {
        match out.last_mut() {
            Some(s) if (e - s.mean).abs() < epsilon => {
                let total = s.degeneracy + d;
                s.mean = (s.mean * s.degeneracy as f64 + e * d as f64) / total as f64;
                s.degeneracy = total;
                s.energies.push(e);
            }
            _ => out.push(Subspace {
                mean: e,
                degeneracy: d,
                energies: vec![e],
            }),
        }
    }
    out
}

/// Indices `alpha > 0` within one gap of the ground or at least
/// `max(1, D_opt / 2)`-fold degenerate.
pub fn threatening_set(subspaces: &[Subspace], d_opt: usize) -> Vec<usize> {
    if subspaces.len() < 2 {
        return Vec::new();
    }
    let e0 = subspaces[0].mean;
    let gap = subspaces[1].mean - e0;
    let threshold = (d_opt as f64 / 2.0).max(1.0);
    (1..subspaces.len())
        .filter(|&a| subspaces[a].mean - e0 <= gap || subspaces[a].degeneracy as f64 >= threshold)
        .collect()
}

pub fn sigma(subspaces: &[Subspace], threats: &[usize], gap: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::ZeroGap);
    }
    let e0 = subspaces.first().map_or(0.0, |s| s.mean);
    Ok(threats
        .iter()
        .map(|&a| subspaces[a].degeneracy as f64 * (-(subspaces[a].mean - e0) / gap).exp())
        .sum())
}

/// `Sigma / (norm * D_opt * G^2)` with `norm = |E0|`.
pub fn hardness_parameter(e0: f64, d_opt: usize, gap: f64, sigma: f64) -> Result<f64> {
    hardness_parameter_normalized(e0.abs(), d_opt, gap, sigma)
}

fn hardness_parameter_normalized(norm: f64, d_opt: usize, gap: f64, sigma: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::ZeroGap);
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    Ok(sigma / (norm * d_opt as f64 * gap * gap))
}

/// Which energies the spectrum is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyConvention {
    /// Ising energies without the constant offset.
    #[default]
    Ising,
    /// QUBO cost including every constant.
    Cost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub e0: f64,
    pub gap: f64,
    pub d_opt: usize,
    pub d_e1: usize,
    pub threats: usize,
    pub sigma: f64,
    pub hp: f64,
    pub epsilon: f64,
    pub convention: EnergyConvention,
    pub energy_shift: f64,
    /// Largest energy, when the full spectrum was seen.
    pub e_max: Option<f64>,
    pub normalized_by_width: bool,
    pub constant_spectrum: bool,
    pub subspaces: Vec<Subspace>,
}

impl HardnessReport {
    pub fn note(&self) -> &'static str {
        if self.constant_spectrum {
            "constant spectrum"
        } else if self.normalized_by_width {
            "normalized by spectral width"
        } else {
            ""
        }
    }
}

/// Hardness of a spectrum already in the desired energy convention.
pub fn analyze_spectrum(spectrum: &SpectrumTable, epsilon: f64) -> Result<HardnessReport> {
    let subspaces = cluster_subspaces(spectrum, epsilon);
    let e0 = subspaces[0].mean;
    let d_opt = subspaces[0].degeneracy;
    let e_max = spectrum.e_max;
    if subspaces.len() < 2 {
        return Ok(HardnessReport {
            e0,
            gap: 0.0,
            d_opt,
            d_e1: 0,
            threats: 0,
            sigma: 0.0,
            hp: 0.0,
            epsilon,
            convention: EnergyConvention::Ising,
            energy_shift: 0.0,
            e_max: Some(e_max),
            normalized_by_width: false,
            constant_spectrum: true,
            subspaces,
        });
    }
    let gap = subspaces[1].mean - e0;
    let threats = threatening_set(&subspaces, d_opt);
    let s = sigma(&subspaces, &threats, gap)?;
    let normalized_by_width = e0.abs() < ZERO_ENERGY_THRESHOLD;
    let norm = if normalized_by_width {
        e_max - e0
    } else {
        e0.abs()
    };
    let hp = hardness_parameter_normalized(norm, d_opt, gap, s)?;
    Ok(HardnessReport {
        e0,
        gap,
        d_opt,
        d_e1: subspaces[1].degeneracy,
        threats: threats.len(),
        sigma: s,
        hp,
        epsilon,
        convention: EnergyConvention::Ising,
        energy_shift: 0.0,
        e_max: Some(e_max),
        normalized_by_width,
        constant_spectrum: false,
        subspaces,
    })
}

/// Enumerates a QUBO model's spectrum in the chosen convention, applies the
/// shift and analyzes it.
pub fn analyze_model(
    q: &QuboModel,
    convention: EnergyConvention,
    shift: f64,
    epsilon: f64,
) -> Result<HardnessReport> {
    let ising: IsingModel = match convention {
        EnergyConvention::Ising => q.to_ising().without_constant(),
        EnergyConvention::Cost => q.to_ising(),
    };
    let spectrum = enumerate_spectrum(&ising)?.shifted(shift);
    let mut r = analyze_spectrum(&spectrum, epsilon)?;
    r.convention = convention;
    r.energy_shift = shift;
    Ok(r)
}

/// Summary quantities of one table row supplied directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub name: String,
    pub e0: f64,
    pub gap: f64,
    pub d_opt: usize,
    /// Degeneracies and gap-relative offsets of the threatening subspaces.
    pub threats: Vec<(usize, f64)>,
}

impl SpectralRow {
    /// Report built from the summary quantities; the first threat is taken as
    /// the first excited subspace.
    pub fn report(&self) -> Result<HardnessReport> {
        if !(self.gap > 0.0) {
            return Err(Error::ZeroGap);
        }
        let s: f64 = self
            .threats
            .iter()
            .map(|(d, x)| *d as f64 * (-x).exp())
            .sum();
        Ok(HardnessReport {
            e0: self.e0,
            gap: self.gap,
            d_opt: self.d_opt,
            d_e1: self.threats.first().map_or(0, |t| t.0),
            threats: self.threats.len(),
            sigma: s,
            hp: hardness_parameter(self.e0, self.d_opt, self.gap, s)?,
            epsilon: DEFAULT_EPSILON,
            convention: EnergyConvention::Ising,
            energy_shift: 0.0,
            e_max: None,
            normalized_by_width: false,
            constant_spectrum: false,
            subspaces: vec![],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub name: String,
    pub report: std::result::Result<HardnessReport, String>,
    /// Extra remarks appended to the note column.
    #[serde(default)]
    pub notes: Vec<String>,
}

pub const TABLE_COLUMNS: [&str; 8] = [
    "instance", "E0", "G", "D_opt", "D_E1", "threats", "HP_MI", "note",
];

/// 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.11e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let f = format!("{v:.decimals$}");
        if f.contains('.') {
            f.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            f
        }
    } else {
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{mant}e{exp}")
    }
}

fn row_cells(r: &TableRow) -> Vec<String> {
    match &r.report {
        Ok(h) => vec![
            r.name.clone(),
            fmt_num(h.e0),
            fmt_num(h.gap),
            h.d_opt.to_string(),
            h.d_e1.to_string(),
            h.threats.to_string(),
            fmt_num(h.hp),
            std::iter::once(h.note().to_string())
                .chain(r.notes.iter().cloned())
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join("; "),
        ],
        Err(e) => {
            let mut v = vec![r.name.clone()];
            v.extend(std::iter::repeat_n("-".to_string(), 6));
            v.push(format!("failed: {e}"));
            v
        }
    }
}

/// Aligned text rendering.
pub fn report_text(rows: &[TableRow]) -> String {
    let mut cells = vec![TABLE_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    cells.extend(rows.iter().map(row_cells));
    let widths: Vec<usize> = (0..TABLE_COLUMNS.len())
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &cells {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// CSV rendering with a header row.
pub fn report_csv(rows: &[TableRow]) -> String {
    let quote = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let mut out = TABLE_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(
            &row_cells(r)
                .iter()
                .map(|c| quote(c))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    out
}
