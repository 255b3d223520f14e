//! Data model and JSON ingestion for externally supplied first-principles
//! results. Every domain object handed to the rest of the crate went through
//! [`Dataset::from_json_str`] and satisfies its invariants.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spinham::Spin;
use crate::symmetry::{Irrep, Orbital, OrbitalConfiguration, SpinChannel};

pub const DEFAULT_G_E: f64 = 2.0023;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at '{path}' (line {line}, column {column}): {message}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error in {location}: {message}")]
    Validation { location: String, message: String },
}

impl DatasetError {
    fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        DatasetError::Validation {
            location: location.into(),
            message: message.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesDelta {
    pub species: String,
    /// Atoms added (positive) or removed (negative).
    pub count: i32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesReference {
    /// Chemical potential μ_i, eV/atom.
    pub mu_ev: f64,
    /// Isolated-atom energy E_atom,i, eV.
    pub atom_ev: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChemicalPotentialTable {
    pub entries: BTreeMap<String, SpeciesReference>,
}

impl ChemicalPotentialTable {
    pub fn get(&self, species: &str) -> Option<&SpeciesReference> {
        self.entries.get(species)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HostMaterial {
    pub bulk_total_energy_ev: f64,
    pub n_bulk_atoms: u32,
    pub vbm_ev: f64,
    pub band_gap_ev: f64,
    pub dielectric_constant: f64,
    /// Supercell edge, Å.
    pub cubic_cell_length_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectEntry {
    pub label: String,
    pub charge: i32,
    pub total_energy_ev: f64,
    pub species_deltas: Vec<SpeciesDelta>,
    /// Externally computed E_corr; replaces the internal Madelung term.
    pub correction_override_ev: Option<f64>,
    /// Potential-alignment term added to the internal correction.
    pub alignment_offset_ev: f64,
}

/// Zero-field splitting in principal-axis form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroFieldSplitting {
    /// D_zz principal value, GHz.
    pub dzz_ghz: f64,
    /// (D_xx - D_yy)/D_zz.
    pub epsilon: f64,
}

impl ZeroFieldSplitting {
    /// D = (3/2) D_zz, GHz.
    pub fn d_ghz(&self) -> f64 {
        1.5 * self.dzz_ghz
    }

    /// Traceless principal values (D_xx, D_yy, D_zz), GHz.
    pub fn principal_values_ghz(&self) -> [f64; 3] {
        let dzz = self.dzz_ghz;
        [0.5 * dzz * (self.epsilon - 1.0), -0.5 * dzz * (self.epsilon + 1.0), dzz]
    }
}

/// Electric field gradient at the nucleus in principal-axis form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGradient {
    /// V_zz, V/Å².
    pub vzz_v_per_a2: f64,
    /// (V_xx - V_yy)/V_zz.
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSystemParams {
    pub electron_spin: Spin,
    pub nuclear_spin: Spin,
    pub g_e: f64,
    pub g_n: f64,
    /// None for systems without zero-field splitting (S ≤ 1/2).
    pub zfs: Option<ZeroFieldSplitting>,
    /// (A_xx, A_yy, A_zz), MHz.
    pub hyperfine_mhz: [f64; 3],
    pub efg: FieldGradient,
    /// Nuclear quadrupole moment Q_I, barn.
    pub quadrupole_moment_barn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkPoint {
    /// Applied field, V/Å.
    pub field_v_per_a: f64,
    pub zpl_ev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarkSeries {
    pub label: String,
    pub zpl0_ev: f64,
    pub points: Vec<StarkPoint>,
}

impl StarkSeries {
    pub fn new(label: impl Into<String>, zpl0_ev: f64, points: Vec<StarkPoint>) -> Result<Self, DatasetError> {
        let label = label.into();
        let loc = format!("stark_series.{label}");
        if points.len() < 3 {
            return Err(DatasetError::invalid(loc, format!("needs at least 3 points, got {}", points.len())));
        }
        if !zpl0_ev.is_finite() || points.iter().any(|p| !p.field_v_per_a.is_finite() || !p.zpl_ev.is_finite()) {
            return Err(DatasetError::invalid(loc, "non-finite value"));
        }
        let mut seen = Vec::with_capacity(points.len());
        for p in &points {
            if seen.contains(&p.field_v_per_a.to_bits()) {
                return Err(DatasetError::invalid(loc, format!("duplicate field value {}", p.field_v_per_a)));
            }
            seen.push(p.field_v_per_a.to_bits());
        }
        Ok(Self { label, zpl0_ev, points })
    }
}

/// One orbital configuration of a defect state.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalState {
    pub label: String,
    pub charge: i32,
    pub state: String,
    pub configuration: OrbitalConfiguration,
    /// Zero-phonon line of the transition into this state, eV.
    pub zpl_ev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub host: HostMaterial,
    pub chemical_potentials: ChemicalPotentialTable,
    pub defects: Vec<DefectEntry>,
    pub spin_systems: BTreeMap<String, SpinSystemParams>,
    pub stark_series: BTreeMap<String, StarkSeries>,
    pub orbital_states: Vec<OrbitalState>,
}

// ---------------------------------------------------------------------------
// Wire schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    host: RawHost,
    #[serde(default)]
    chemical_potentials: BTreeMap<String, RawSpecies>,
    #[serde(default)]
    defects: Vec<RawDefect>,
    #[serde(default)]
    spin_systems: BTreeMap<String, RawSpinSystem>,
    #[serde(default)]
    stark_series: BTreeMap<String, RawStark>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    orbital_configs: Vec<RawOrbitalConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHost {
    #[serde(rename = "bulk_total_energy_eV")]
    bulk_total_energy_ev: f64,
    n_bulk_atoms: u32,
    #[serde(rename = "vbm_eV")]
    vbm_ev: f64,
    #[serde(rename = "band_gap_eV")]
    band_gap_ev: f64,
    dielectric_constant: f64,
    #[serde(rename = "cubic_cell_length_A")]
    cubic_cell_length_a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecies {
    #[serde(rename = "mu_eV")]
    mu_ev: f64,
    #[serde(rename = "atom_eV")]
    atom_ev: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDefect {
    label: String,
    charge: i32,
    #[serde(rename = "total_energy_eV")]
    total_energy_ev: f64,
    #[serde(default)]
    species_deltas: Vec<RawDelta>,
    #[serde(rename = "correction_eV", default, skip_serializing_if = "Option::is_none")]
    correction_ev: Option<f64>,
    #[serde(rename = "alignment_eV", default, skip_serializing_if = "Option::is_none")]
    alignment_ev: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelta {
    species: String,
    count: i32,
}

type RawMatrix = [[f64; 3]; 3];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawHyperfine {
    Principal([f64; 3]),
    Matrix(RawMatrix),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawZfs {
    Principal(RawZfsPrincipal),
    Matrix(RawMatrix),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawZfsPrincipal {
    #[serde(rename = "Dzz")]
    dzz: f64,
    epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawEfg {
    Principal(RawEfgPrincipal),
    Matrix(RawMatrix),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEfgPrincipal {
    #[serde(rename = "Vzz_V_per_A2")]
    vzz: f64,
    eta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpinSystem {
    #[serde(rename = "S")]
    s: Spin,
    #[serde(rename = "I")]
    i: Spin,
    #[serde(default = "default_g_e")]
    g_e: f64,
    g_n: f64,
    #[serde(rename = "A_MHz")]
    a_mhz: RawHyperfine,
    #[serde(rename = "D_GHz", default, skip_serializing_if = "Option::is_none")]
    d_ghz: Option<RawZfs>,
    #[serde(rename = "EFG")]
    efg: RawEfg,
    #[serde(rename = "Q_barn")]
    q_barn: f64,
}

fn default_g_e() -> f64 {
    DEFAULT_G_E
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStark {
    #[serde(rename = "zpl_eV_at_zero_field")]
    zpl0_ev: f64,
    points: Vec<RawStarkPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStarkPoint {
    #[serde(rename = "E_V_per_A")]
    field: f64,
    #[serde(rename = "zpl_eV")]
    zpl_ev: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrbitalConfig {
    label: String,
    charge: i32,
    state: String,
    channel: SpinChannel,
    orbitals: Vec<RawOrbital>,
    #[serde(rename = "zpl_eV", default, skip_serializing_if = "Option::is_none")]
    zpl_ev: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrbital {
    irrep: String,
    occ: u8,
}

// ---------------------------------------------------------------------------
// Tensor canonicalisation
// ---------------------------------------------------------------------------

fn symmetric_matrix(m: &RawMatrix, location: &str) -> Result<Matrix3<f64>, DatasetError> {
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    let scale = mat.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..3 {
        for j in 0..i {
            if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-9 * scale {
                return Err(DatasetError::invalid(location, "tensor is not symmetric"));
            }
        }
    }
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(DatasetError::invalid(location, "non-finite tensor element"));
    }
    Ok(mat)
}

fn is_diagonal(m: &Matrix3<f64>) -> bool {
    (0..3).all(|i| (0..3).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Principal values ordered |v_xx| ≤ |v_yy| ≤ |v_zz|.
fn principal_values(m: &Matrix3<f64>) -> [f64; 3] {
    let mut v: Vec<f64> = SymmetricEigen::new(*m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    [v[0], v[1], v[2]]
}

fn zfs_from_matrix(m: &RawMatrix, location: &str) -> Result<ZeroFieldSplitting, DatasetError> {
    let mat = symmetric_matrix(m, location)?;
    let [dxx, dyy, dzz] = principal_values(&mat);
    if dzz == 0.0 {
        return Ok(ZeroFieldSplitting { dzz_ghz: 0.0, epsilon: 0.0 });
    }
    Ok(ZeroFieldSplitting {
        dzz_ghz: dzz,
        epsilon: (dxx - dyy) / dzz,
    })
}

fn efg_from_matrix(m: &RawMatrix, location: &str) -> Result<FieldGradient, DatasetError> {
    let mat = symmetric_matrix(m, location)?;
    let [vxx, vyy, vzz] = principal_values(&mat);
    if vzz == 0.0 {
        return Ok(FieldGradient { vzz_v_per_a2: 0.0, eta: 0.0 });
    }
    Ok(FieldGradient {
        vzz_v_per_a2: vzz,
        eta: (vxx - vyy) / vzz,
    })
}

/// Diagonal input keeps its axis assignment; a general matrix is rotated to
/// principal axes with the |A_zz| ≥ |A_yy| ≥ |A_xx| ordering.
fn hyperfine_from_raw(raw: &RawHyperfine, location: &str) -> Result<[f64; 3], DatasetError> {
    match raw {
        RawHyperfine::Principal(a) => Ok(*a),
        RawHyperfine::Matrix(m) => {
            let mat = symmetric_matrix(m, location)?;
            if is_diagonal(&mat) {
                Ok([mat[(0, 0)], mat[(1, 1)], mat[(2, 2)]])
            } else {
                Ok(principal_values(&mat))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

fn finite(location: &str, name: &str, v: f64) -> Result<f64, DatasetError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DatasetError::invalid(location, format!("{name} must be finite")))
    }
}

impl HostMaterial {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let loc = "host";
        finite(loc, "bulk_total_energy_eV", self.bulk_total_energy_ev)?;
        finite(loc, "vbm_eV", self.vbm_ev)?;
        if !(self.band_gap_ev > 0.0 && self.band_gap_ev.is_finite()) {
            return Err(DatasetError::invalid(loc, format!("band_gap_eV must be > 0, got {}", self.band_gap_ev)));
        }
        if !(self.dielectric_constant >= 1.0 && self.dielectric_constant.is_finite()) {
            return Err(DatasetError::invalid(
                loc,
                format!("dielectric_constant must be >= 1, got {}", self.dielectric_constant),
            ));
        }
        if !(self.cubic_cell_length_a > 0.0 && self.cubic_cell_length_a.is_finite()) {
            return Err(DatasetError::invalid(
                loc,
                format!("cubic_cell_length_A must be > 0, got {}", self.cubic_cell_length_a),
            ));
        }
        if self.n_bulk_atoms == 0 {
            return Err(DatasetError::invalid(loc, "n_bulk_atoms must be > 0"));
        }
        Ok(())
    }
}

impl SpinSystemParams {
    pub fn validate(&self, location: &str) -> Result<(), DatasetError> {
        finite(location, "g_e", self.g_e)?;
        finite(location, "g_n", self.g_n)?;
        finite(location, "Q_barn", self.quadrupole_moment_barn)?;
        for a in self.hyperfine_mhz {
            finite(location, "A_MHz", a)?;
        }
        finite(location, "Vzz_V_per_A2", self.efg.vzz_v_per_a2)?;
        if !(self.efg.eta.abs() <= 1.0) {
            return Err(DatasetError::invalid(location, format!("|eta| must be <= 1, got {}", self.efg.eta)));
        }
        if let Some(z) = self.zfs {
            finite(location, "Dzz", z.dzz_ghz)?;
            finite(location, "epsilon", z.epsilon)?;
        }
        Ok(())
    }
}

fn convert(raw: RawDataset) -> Result<Dataset, DatasetError> {
    let host = HostMaterial {
        bulk_total_energy_ev: raw.host.bulk_total_energy_ev,
        n_bulk_atoms: raw.host.n_bulk_atoms,
        vbm_ev: raw.host.vbm_ev,
        band_gap_ev: raw.host.band_gap_ev,
        dielectric_constant: raw.host.dielectric_constant,
        cubic_cell_length_a: raw.host.cubic_cell_length_a,
    };
    host.validate()?;

    let mut chemical_potentials = ChemicalPotentialTable::default();
    for (species, r) in raw.chemical_potentials {
        let loc = format!("chemical_potentials.{species}");
        if species.trim().is_empty() {
            return Err(DatasetError::invalid(loc, "species name is empty"));
        }
        finite(&loc, "mu_eV", r.mu_ev)?;
        finite(&loc, "atom_eV", r.atom_ev)?;
        chemical_potentials.entries.insert(
            species,
            SpeciesReference {
                mu_ev: r.mu_ev,
                atom_ev: r.atom_ev,
            },
        );
    }

    let mut defects = Vec::with_capacity(raw.defects.len());
    let mut keys = HashSet::new();
    for (k, d) in raw.defects.into_iter().enumerate() {
        let loc = format!("defects[{k}] ('{}', q={})", d.label, d.charge);
        if d.label.trim().is_empty() {
            return Err(DatasetError::invalid(loc, "label is empty"));
        }
        if !keys.insert((d.label.clone(), d.charge)) {
            return Err(DatasetError::invalid(
                loc,
                format!("duplicate defect entry (label '{}', charge {})", d.label, d.charge),
            ));
        }
        finite(&loc, "total_energy_eV", d.total_energy_ev)?;
        let mut species_deltas = Vec::with_capacity(d.species_deltas.len());
        for delta in d.species_deltas {
            if delta.species.trim().is_empty() {
                return Err(DatasetError::invalid(&loc, "species_deltas entry has an empty species"));
            }
            if delta.count == 0 {
                return Err(DatasetError::invalid(&loc, format!("species_deltas count for {} is zero", delta.species)));
            }
            if chemical_potentials.get(&delta.species).is_none() {
                return Err(DatasetError::invalid(
                    &loc,
                    format!("species '{}' has no chemical potential / atom energy", delta.species),
                ));
            }
            species_deltas.push(SpeciesDelta {
                species: delta.species,
                count: delta.count,
            });
        }
        if let Some(c) = d.correction_ev {
            finite(&loc, "correction_eV", c)?;
        }
        let alignment = finite(&loc, "alignment_eV", d.alignment_ev.unwrap_or(0.0))?;
        defects.push(DefectEntry {
            label: d.label,
            charge: d.charge,
            total_energy_ev: d.total_energy_ev,
            species_deltas,
            correction_override_ev: d.correction_ev,
            alignment_offset_ev: alignment,
        });
    }

    let mut spin_systems = BTreeMap::new();
    for (label, s) in raw.spin_systems {
        let loc = format!("spin_systems.{label}");
        let zfs = match &s.d_ghz {
            None => None,
            Some(RawZfs::Principal(p)) => Some(ZeroFieldSplitting {
                dzz_ghz: p.dzz,
                epsilon: p.epsilon,
            }),
            Some(RawZfs::Matrix(m)) => Some(zfs_from_matrix(m, &format!("{loc}.D_GHz"))?),
        };
        let efg = match &s.efg {
            RawEfg::Principal(p) => FieldGradient {
                vzz_v_per_a2: p.vzz,
                eta: p.eta,
            },
            RawEfg::Matrix(m) => efg_from_matrix(m, &format!("{loc}.EFG"))?,
        };
        let params = SpinSystemParams {
            electron_spin: s.s,
            nuclear_spin: s.i,
            g_e: s.g_e,
            g_n: s.g_n,
            zfs,
            hyperfine_mhz: hyperfine_from_raw(&s.a_mhz, &format!("{loc}.A_MHz"))?,
            efg,
            quadrupole_moment_barn: s.q_barn,
        };
        params.validate(&loc)?;
        spin_systems.insert(label, params);
    }

    let mut stark_series = BTreeMap::new();
    for (label, s) in raw.stark_series {
        let points = s
            .points
            .iter()
            .map(|p| StarkPoint {
                field_v_per_a: p.field,
                zpl_ev: p.zpl_ev,
            })
            .collect();
        stark_series.insert(label.clone(), StarkSeries::new(label, s.zpl0_ev, points)?);
    }

    let orbital_states = merge_orbital_configs(raw.orbital_configs)?;

    Ok(Dataset {
        host,
        chemical_potentials,
        defects,
        spin_systems,
        stark_series,
        orbital_states,
    })
}

/// Joins the per-channel lists of each (label, charge, state) into one
/// spin-resolved configuration. A channel that is not listed is empty.
fn merge_orbital_configs(raw: Vec<RawOrbitalConfig>) -> Result<Vec<OrbitalState>, DatasetError> {
    type Key = (String, i32, String);
    let mut order: Vec<Key> = Vec::new();
    let mut channels: BTreeMap<Key, [Option<Vec<(Irrep, u8)>>; 2]> = BTreeMap::new();
    let mut zpls: BTreeMap<Key, f64> = BTreeMap::new();
    for (k, c) in raw.into_iter().enumerate() {
        let loc = format!("orbital_configs[{k}] ('{}', q={}, {}, {})", c.label, c.charge, c.state, c.channel);
        if c.orbitals.is_empty() {
            return Err(DatasetError::invalid(loc, "no orbitals listed"));
        }
        let mut list = Vec::with_capacity(c.orbitals.len());
        for (j, o) in c.orbitals.iter().enumerate() {
            let irrep: Irrep = o
                .irrep
                .parse()
                .map_err(|e: crate::symmetry::SymmetryError| DatasetError::invalid(&loc, e.to_string()))?;
            if o.occ > 1 {
                return Err(DatasetError::invalid(
                    &loc,
                    format!("orbital {j}: occupancy per spin channel must be 0 or 1, got {}", o.occ),
                ));
            }
            list.push((irrep, o.occ));
        }
        let key = (c.label, c.charge, c.state);
        if let Some(z) = c.zpl_ev {
            if !(z.is_finite() && z > 0.0) {
                return Err(DatasetError::invalid(&loc, format!("zpl_eV must be positive, got {z}")));
            }
            match zpls.get(&key) {
                Some(&prev) if prev != z => return Err(DatasetError::invalid(&loc, "channels disagree on zpl_eV")),
                _ => {
                    zpls.insert(key.clone(), z);
                }
            }
        }
        if !channels.contains_key(&key) {
            order.push(key.clone());
        }
        let slot = &mut channels.entry(key).or_default()[c.channel as usize];
        if slot.is_some() {
            return Err(DatasetError::invalid(loc, "channel listed twice"));
        }
        *slot = Some(list);
    }

    let mut states = Vec::with_capacity(order.len());
    for key in order {
        let loc = format!("orbital_configs ('{}', q={}, {})", key.0, key.1, key.2);
        let [up, down] = channels.remove(&key).expect("key recorded on insert");
        let template = up.as_ref().or(down.as_ref()).expect("at least one channel present");
        let empty: Vec<(Irrep, u8)> = template.iter().map(|(g, _)| (*g, 0)).collect();
        let up = up.unwrap_or_else(|| empty.clone());
        let down = down.unwrap_or(empty);
        if up.len() != down.len() || up.iter().zip(&down).any(|(a, b)| a.0 != b.0) {
            return Err(DatasetError::invalid(loc, "up and down channels list different orbitals"));
        }
        let orbitals = up
            .iter()
            .zip(&down)
            .map(|(u, d)| Orbital {
                irrep: u.0,
                up: u.1,
                down: d.1,
            })
            .collect();
        let configuration = OrbitalConfiguration::new(orbitals).map_err(|e| DatasetError::invalid(&loc, e.to_string()))?;
        let zpl_ev = zpls.get(&key).copied();
        states.push(OrbitalState {
            zpl_ev,
            label: key.0,
            charge: key.1,
            state: key.2,
            configuration,
        });
    }
    Ok(states)
}

fn to_raw(d: &Dataset) -> RawDataset {
    let mut orbital_configs = Vec::new();
    for s in &d.orbital_states {
        for channel in [SpinChannel::Up, SpinChannel::Down] {
            orbital_configs.push(RawOrbitalConfig {
                label: s.label.clone(),
                charge: s.charge,
                state: s.state.clone(),
                channel,
                orbitals: s
                    .configuration
                    .orbitals()
                    .iter()
                    .map(|o| RawOrbital {
                        irrep: o.irrep.to_string().to_ascii_lowercase(),
                        occ: match channel {
                            SpinChannel::Up => o.up,
                            SpinChannel::Down => o.down,
                        },
                    })
                    .collect(),
                zpl_ev: s.zpl_ev,
            });
        }
    }
    RawDataset {
        host: RawHost {
            bulk_total_energy_ev: d.host.bulk_total_energy_ev,
            n_bulk_atoms: d.host.n_bulk_atoms,
            vbm_ev: d.host.vbm_ev,
            band_gap_ev: d.host.band_gap_ev,
            dielectric_constant: d.host.dielectric_constant,
            cubic_cell_length_a: d.host.cubic_cell_length_a,
        },
        chemical_potentials: d
            .chemical_potentials
            .entries
            .iter()
            .map(|(k, v)| {
                (
                    k.clone(),
                    RawSpecies {
                        mu_ev: v.mu_ev,
                        atom_ev: v.atom_ev,
                    },
                )
            })
            .collect(),
        defects: d
            .defects
            .iter()
            .map(|e| RawDefect {
                label: e.label.clone(),
                charge: e.charge,
                total_energy_ev: e.total_energy_ev,
                species_deltas: e
                    .species_deltas
                    .iter()
                    .map(|s| RawDelta {
                        species: s.species.clone(),
                        count: s.count,
                    })
                    .collect(),
                correction_ev: e.correction_override_ev,
                alignment_ev: Some(e.alignment_offset_ev),
            })
            .collect(),
        spin_systems: d
            .spin_systems
            .iter()
            .map(|(k, p)| {
                (
                    k.clone(),
                    RawSpinSystem {
                        s: p.electron_spin,
                        i: p.nuclear_spin,
                        g_e: p.g_e,
                        g_n: p.g_n,
                        a_mhz: RawHyperfine::Principal(p.hyperfine_mhz),
                        d_ghz: p.zfs.map(|z| {
                            RawZfs::Principal(RawZfsPrincipal {
                                dzz: z.dzz_ghz,
                                epsilon: z.epsilon,
                            })
                        }),
                        efg: RawEfg::Principal(RawEfgPrincipal {
                            vzz: p.efg.vzz_v_per_a2,
                            eta: p.efg.eta,
                        }),
                        q_barn: p.quadrupole_moment_barn,
                    },
                )
            })
            .collect(),
        stark_series: d
            .stark_series
            .iter()
            .map(|(k, s)| {
                (
                    k.clone(),
                    RawStark {
                        zpl0_ev: s.zpl0_ev,
                        points: s
                            .points
                            .iter()
                            .map(|p| RawStarkPoint {
                                field: p.field_v_per_a,
                                zpl_ev: p.zpl_ev,
                            })
                            .collect(),
                    },
                )
            })
            .collect(),
        orbital_configs,
    }
}

fn classify_json_error(e: serde_path_to_error::Error<serde_json::Error>) -> DatasetError {
    let path = e.path().to_string();
    let inner = e.into_inner();
    match inner.classify() {
        serde_json::error::Category::Data => DatasetError::Schema {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        },
        _ => DatasetError::Parse {
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        },
    }
}

impl Dataset {
    pub fn from_json_str(text: &str) -> Result<Self, DatasetError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawDataset = serde_path_to_error::deserialize(&mut *de).map_err(classify_json_error)?;
        de.end().map_err(|e| DatasetError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        convert(raw)
    }

    /// Canonical JSON form: tensors in principal-value form, every optional
    /// field materialised.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&to_raw(self)).expect("dataset serialises") + "\n"
    }

    pub fn defect_labels(&self) -> BTreeSet<&str> {
        self.defects.iter().map(|d| d.label.as_str()).collect()
    }

    pub fn spin_system(&self, label: &str) -> Option<&SpinSystemParams> {
        self.spin_systems.get(label)
    }
}

/// Reads and validates a dataset file.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Dataset::from_json_str(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectDigest {
    pub label: String,
    pub n_charge_states: usize,
    pub min_charge: i32,
    pub max_charge: i32,
    pub species: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDigest {
    pub n_defect_entries: usize,
    pub n_spin_systems: usize,
    pub n_stark_series: usize,
    pub n_orbital_states: usize,
    pub species: Vec<String>,
    pub defects: Vec<DefectDigest>,
}

impl fmt::Display for DatasetDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} defect entries, {} spin systems, {} Stark series, {} orbital states",
            self.n_defect_entries, self.n_spin_systems, self.n_stark_series, self.n_orbital_states
        )?;
        writeln!(f, "species: {}", self.species.join(", "))?;
        for d in &self.defects {
            writeln!(
                f,
                "  {}: {} charge states, q in [{}, {}]",
                d.label, d.n_charge_states, d.min_charge, d.max_charge
            )?;
        }
        Ok(())
    }
}

/// Order-independent summary: defects sorted by label, charges ascending.
pub fn dataset_digest(d: &Dataset) -> DatasetDigest {
    let mut per_label: BTreeMap<&str, (Vec<i32>, BTreeSet<&str>)> = BTreeMap::new();
    for e in &d.defects {
        let slot = per_label.entry(&e.label).or_default();
        slot.0.push(e.charge);
        for s in &e.species_deltas {
            slot.1.insert(&s.species);
        }
    }
    let defects = per_label
        .into_iter()
        .map(|(label, (mut charges, species))| {
            charges.sort_unstable();
            DefectDigest {
                label: label.to_string(),
                n_charge_states: charges.len(),
                min_charge: charges[0],
                max_charge: *charges.last().expect("non-empty"),
                species: species.into_iter().map(str::to_string).collect(),
            }
        })
        .collect();
    DatasetDigest {
        n_defect_entries: d.defects.len(),
        n_spin_systems: d.spin_systems.len(),
        n_stark_series: d.stark_series.len(),
        n_orbital_states: d.orbital_states.len(),
        species: d.chemical_potentials.entries.keys().cloned().collect(),
        defects,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOST: &str = r#""host": {"bulk_total_energy_eV": -1967.0, "n_bulk_atoms": 216, "vbm_eV": 11.0,
        "band_gap_eV": 5.48, "dielectric_constant": 5.7, "cubic_cell_length_A": 10.701}"#;

    fn doc(rest: &str) -> String {
        format!("{{{HOST}{rest}}}")
    }

    #[test]
    fn empty_defect_list_is_legal() {
        let d = Dataset::from_json_str(&doc(r#", "defects": []"#)).unwrap();
        assert!(d.defects.is_empty());
        let g = dataset_digest(&d);
        assert_eq!(g.n_defect_entries, 0);
        assert_eq!(g.n_spin_systems, 0);
        assert!(g.defects.is_empty());
    }

    #[test]
    fn table_values_load() {
        let text = doc(
            r#", "spin_systems": {
              "PaV2-1": {"S": 1, "I": 2.5, "g_n": 0.784, "A_MHz": [-76.684, -46.146, -88.272],
                         "D_GHz": {"Dzz": 1.611, "epsilon": 0.115},
                         "EFG": {"Vzz_V_per_A2": -683.679, "eta": 0.776}, "Q_barn": 1.7},
              "PaV2-2": {"S": 0.5, "I": 2.5, "g_n": 0.784, "A_MHz": [-50.874, -48.39, -116.319],
                         "EFG": {"Vzz_V_per_A2": 613.191, "eta": 0.595}, "Q_barn": 1.7}
            }"#,
        );
        let d = Dataset::from_json_str(&text).unwrap();
        assert_eq!(d.spin_systems.len(), 2);
        let p = &d.spin_systems["PaV2-1"];
        assert_eq!(p.hyperfine_mhz[2], -88.272);
        assert_eq!(p.g_e, DEFAULT_G_E);
        assert_eq!(p.nuclear_spin.twice(), 5);
        assert!(d.spin_systems["PaV2-2"].zfs.is_none());
    }

    #[test]
    fn duplicate_label_charge_rejected() {
        let text = doc(
            r#", "defects": [
              {"label": "X", "charge": 0, "total_energy_eV": -1.0},
              {"label": "X", "charge": 0, "total_energy_eV": -2.0}]"#,
        );
        match Dataset::from_json_str(&text).unwrap_err() {
            DatasetError::Validation { location, message } => {
                assert!(location.contains("defects[1]"));
                assert!(message.contains("duplicate") && message.contains("'X'"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_field_reports_path() {
        let text = doc(r#", "defects": [{"label": "X", "charge": 0, "total_energy_eV": -1.0, "bogus": 1}]"#);
        match Dataset::from_json_str(&text).unwrap_err() {
            DatasetError::Schema { path, line, .. } => {
                assert!(path.starts_with("defects[0]"), "{path}");
                assert!(line >= 1);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn syntax_error_is_parse_error() {
        let err = Dataset::from_json_str("{\"host\": {\n  \"vbm_eV\": ,}}").unwrap_err();
        match err {
            DatasetError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_type_is_schema_error() {
        let text = doc(r#", "defects": [{"label": "X", "charge": "zero", "total_energy_eV": -1.0}]"#);
        assert!(matches!(Dataset::from_json_str(&text), Err(DatasetError::Schema { .. })));
    }

    #[test]
    fn host_invariants() {
        let bad = r#"{"host": {"bulk_total_energy_eV": -1.0, "n_bulk_atoms": 8, "vbm_eV": 0.0,
            "band_gap_eV": 0.0, "dielectric_constant": 5.7, "cubic_cell_length_A": 10.0}}"#;
        assert!(matches!(Dataset::from_json_str(bad), Err(DatasetError::Validation { .. })));
        let bad = bad.replace("\"band_gap_eV\": 0.0", "\"band_gap_eV\": 1.0").replace("5.7", "0.5");
        assert!(matches!(Dataset::from_json_str(&bad), Err(DatasetError::Validation { .. })));
    }

    #[test]
    fn missing_species_and_zero_count_rejected() {
        let text = doc(r#", "defects": [{"label": "X", "charge": 0, "total_energy_eV": -1.0,
            "species_deltas": [{"species": "Pa", "count": 1}]}]"#);
        assert!(matches!(Dataset::from_json_str(&text), Err(DatasetError::Validation { .. })));
        let text = doc(r#", "chemical_potentials": {"Pa": {"mu_eV": -8.0, "atom_eV": -1.0}},
            "defects": [{"label": "X", "charge": 0, "total_energy_eV": -1.0,
            "species_deltas": [{"species": "Pa", "count": 0}]}]"#);
        assert!(matches!(Dataset::from_json_str(&text), Err(DatasetError::Validation { .. })));
    }

    #[test]
    fn spin_invariants() {
        let text = doc(r#", "spin_systems": {"X": {"S": 0.7, "I": 0, "g_n": 1.0, "A_MHz": [0,0,0],
            "EFG": {"Vzz_V_per_A2": 0, "eta": 0}, "Q_barn": 0}}"#);
        assert!(matches!(Dataset::from_json_str(&text), Err(DatasetError::Schema { .. })));
        let text = doc(r#", "spin_systems": {"X": {"S": 1, "I": 0, "g_n": 1.0, "A_MHz": [0,0,0],
            "EFG": {"Vzz_V_per_A2": 1, "eta": 1.5}, "Q_barn": 0}}"#);
        assert!(matches!(Dataset::from_json_str(&text), Err(DatasetError::Validation { .. })));
        // g_n has no default.
        let text = doc(r#", "spin_systems": {"X": {"S": 1, "I": 0, "A_MHz": [0,0,0],
            "EFG": {"Vzz_V_per_A2": 1, "eta": 0.1}, "Q_barn": 0}}"#);
        assert!(matches!(Dataset::from_json_str(&text), Err(DatasetError::Schema { .. })));
    }

    #[test]
    fn full_tensors_are_reduced_to_principal_values() {
        // EFG with principal values (-0.2, -0.8, 1.0) rotated by 90° about z.
        let text = doc(r#", "spin_systems": {"X": {"S": 1, "I": 2.5, "g_n": 1.0,
            "A_MHz": [[1, 0, 0], [0, 2, 0], [0, 0, 3]],
            "D_GHz": [[-0.5, 0.0, 0.0], [0.0, -0.5, 0.0], [0.0, 0.0, 1.0]],
            "EFG": [[-0.8, 0.0, 0.0], [0.0, -0.2, 0.0], [0.0, 0.0, 1.0]], "Q_barn": 1}}"#);
        let d = Dataset::from_json_str(&text).unwrap();
        let p = &d.spin_systems["X"];
        assert_eq!(p.hyperfine_mhz, [1.0, 2.0, 3.0]);
        assert!((p.efg.vzz_v_per_a2 - 1.0).abs() < 1e-12);
        assert!((p.efg.eta - 0.6).abs() < 1e-12);
        let z = p.zfs.unwrap();
        assert!((z.dzz_ghz - 1.0).abs() < 1e-12 && z.epsilon.abs() < 1e-12);

        let asym = doc(r#", "spin_systems": {"X": {"S": 1, "I": 0, "g_n": 1.0, "A_MHz": [0,0,0],
            "EFG": [[0, 1, 0], [0, 0, 0], [0, 0, 0]], "Q_barn": 0}}"#);
        assert!(matches!(Dataset::from_json_str(&asym), Err(DatasetError::Validation { .. })));
    }

    #[test]
    fn orbital_channels_merge() {
        let text = doc(r#", "orbital_configs": [
            {"label": "D", "charge": -2, "state": "ground", "channel": "up",
             "orbitals": [{"irrep": "a1", "occ": 1}, {"irrep": "b2", "occ": 1}]},
            {"label": "D", "charge": -2, "state": "ground", "channel": "down",
             "orbitals": [{"irrep": "a1", "occ": 1}, {"irrep": "b2", "occ": 0}]}]"#);
        let d = Dataset::from_json_str(&text).unwrap();
        assert_eq!(d.orbital_states.len(), 1);
        let o = d.orbital_states[0].configuration.orbitals();
        assert_eq!((o[0].up, o[0].down, o[1].up, o[1].down), (1, 1, 1, 0));
    }

    #[test]
    fn zfs_principal_values_are_traceless() {
        let z = ZeroFieldSplitting { dzz_ghz: 12.931, epsilon: 0.275 };
        let [x, y, zz] = z.principal_values_ghz();
        assert!((x + y + zz).abs() < 1e-12);
        assert!(((x - y) / zz - 0.275).abs() < 1e-12);
        assert!((z.d_ghz() - 19.3965).abs() < 1e-12);
    }
}
