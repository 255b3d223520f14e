//! Defect formation energies, cohesive energies, charge transition levels and
//! the stable-charge map over the band gap.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::chargecorr::{madelung_correction, EwaldError};
use crate::dataset::{ChemicalPotentialTable, Dataset, DefectEntry, HostMaterial};

/// Lines whose slope and intercept agree within this are one line.
pub const DEGENERACY_TOLERANCE_EV: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("defect '{label}': species '{species}' is not in the chemical-potential table")]
    UnknownSpecies { label: String, species: String },
    #[error("Fermi level {fermi_ev} eV lies outside the gap [0, {gap_ev}] eV")]
    FermiOutOfGap { fermi_ev: f64, gap_ev: f64 },
    #[error("charge transition level needs two different charges, got q = {0} twice")]
    EqualCharges(i32),
    #[error("no formation lines given")]
    EmptyInput,
    #[error("band gap must be positive and finite, got {0}")]
    InvalidGap(f64),
    #[error("composition must list at least one species with a positive count")]
    InvalidComposition,
    #[error(transparent)]
    Correction(#[from] EwaldError),
}

/// Strict check of 0 ≤ E_F ≤ gap.
pub fn check_fermi(fermi_ev: f64, host: &HostMaterial) -> Result<(), ThermoError> {
    if (0.0..=host.band_gap_ev).contains(&fermi_ev) {
        Ok(())
    } else {
        Err(ThermoError::FermiOutOfGap {
            fermi_ev,
            gap_ev: host.band_gap_ev,
        })
    }
}

/// E_corr: the override if given, otherwise the Madelung term plus the
/// alignment offset.
pub fn correction_energy(entry: &DefectEntry, host: &HostMaterial) -> Result<f64, ThermoError> {
    match entry.correction_override_ev {
        Some(c) => Ok(c),
        None => {
            let m = madelung_correction(entry.charge, host.cubic_cell_length_a, host.dielectric_constant)?;
            Ok(m.energy_ev + entry.alignment_offset_ev)
        }
    }
}

/// Σ n_i μ_i over the entry's species changes.
pub fn chemical_potential_sum(entry: &DefectEntry, mu: &ChemicalPotentialTable) -> Result<f64, ThermoError> {
    entry.species_deltas.iter().try_fold(0.0, |acc, d| {
        let r = mu.get(&d.species).ok_or_else(|| ThermoError::UnknownSpecies {
            label: entry.label.clone(),
            species: d.species.clone(),
        })?;
        Ok(acc + d.count as f64 * r.mu_ev)
    })
}

/// Formation energy in eV at Fermi level `fermi_ev` above the VBM.
///
/// A Fermi level outside the gap is logged as a warning; the value is still
/// returned. Use [`check_fermi`] for a hard failure.
pub fn formation_energy(
    entry: &DefectEntry,
    host: &HostMaterial,
    mu: &ChemicalPotentialTable,
    fermi_ev: f64,
) -> Result<f64, ThermoError> {
    if let Err(e) = check_fermi(fermi_ev, host) {
        log::warn!("{}: {e}", entry.label);
    }
    let line = formation_line(entry, host, mu)?;
    Ok(line.at(fermi_ev))
}

/// Formation energy as an affine function of E_F.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationLine {
    pub label: String,
    pub charge: i32,
    /// Value at E_F = 0 (the VBM), eV.
    pub intercept_ev: f64,
}

impl FormationLine {
    pub fn slope(&self) -> i32 {
        self.charge
    }

    pub fn at(&self, fermi_ev: f64) -> f64 {
        self.intercept_ev + self.charge as f64 * fermi_ev
    }
}

pub fn formation_line(
    entry: &DefectEntry,
    host: &HostMaterial,
    mu: &ChemicalPotentialTable,
) -> Result<FormationLine, ThermoError> {
    let mu_sum = chemical_potential_sum(entry, mu)?;
    let corr = correction_energy(entry, host)?;
    let intercept =
        entry.total_energy_ev - host.bulk_total_energy_ev - mu_sum + entry.charge as f64 * host.vbm_ev + corr;
    Ok(FormationLine {
        label: entry.label.clone(),
        charge: entry.charge,
        intercept_ev: intercept,
    })
}

/// (Σ n_i E_atom,i − E_tot)/n, eV/atom.
pub fn cohesive_energy(
    total_energy_ev: f64,
    composition: &[(&str, u32)],
    mu: &ChemicalPotentialTable,
) -> Result<f64, ThermoError> {
    let mut n = 0u64;
    let mut atoms = 0.0;
    for &(species, count) in composition {
        if count == 0 {
            return Err(ThermoError::InvalidComposition);
        }
        let r = mu.get(species).ok_or_else(|| ThermoError::UnknownSpecies {
            label: "composition".into(),
            species: species.into(),
        })?;
        atoms += count as f64 * r.atom_ev;
        n += count as u64;
    }
    if n == 0 {
        return Err(ThermoError::InvalidComposition);
    }
    Ok((atoms - total_energy_ev) / n as f64)
}

/// Total energy and correction of one charge state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeState {
    pub charge: i32,
    pub total_energy_ev: f64,
    pub correction_ev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeTransitionLevel {
    pub q1: i32,
    pub q2: i32,
    /// Fermi level above the VBM at which q1 and q2 are degenerate, eV.
    pub level_ev: f64,
}

/// ε(q1/q2) = (E_q1 + c_q1 − E_q2 − c_q2)/(q2 − q1) − ε_VBM.
pub fn charge_transition_level(
    s1: ChargeState,
    s2: ChargeState,
    vbm_ev: f64,
) -> Result<ChargeTransitionLevel, ThermoError> {
    if s1.charge == s2.charge {
        return Err(ThermoError::EqualCharges(s1.charge));
    }
    // Evaluate in a fixed charge order so swapping the arguments is exact.
    let (a, b) = if s1.charge > s2.charge { (s1, s2) } else { (s2, s1) };
    let num = a.total_energy_ev + a.correction_ev - b.total_energy_ev - b.correction_ev;
    let level = num / (b.charge - a.charge) as f64 - vbm_ev;
    Ok(ChargeTransitionLevel {
        q1: s1.charge,
        q2: s2.charge,
        level_ev: level,
    })
}

pub fn charge_state(entry: &DefectEntry, host: &HostMaterial) -> Result<ChargeState, ThermoError> {
    Ok(ChargeState {
        charge: entry.charge,
        total_energy_ev: entry.total_energy_ev,
        correction_ev: correction_energy(entry, host)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityInterval {
    pub from_ev: f64,
    pub to_ev: f64,
    pub charge: i32,
    pub label: String,
}

/// Lower envelope of formation lines over [0, gap], ordered by Fermi level.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMap {
    pub gap_ev: f64,
    pub intervals: Vec<StabilityInterval>,
}

impl StabilityMap {
    /// Interior breakpoints with the charges on either side.
    pub fn breakpoints(&self) -> Vec<(f64, i32, i32)> {
        self.intervals.windows(2).map(|w| (w[0].to_ev, w[0].charge, w[1].charge)).collect()
    }

    pub fn stable_charge_at(&self, fermi_ev: f64) -> Option<i32> {
        self.intervals
            .iter()
            .find(|iv| fermi_ev >= iv.from_ev && fermi_ev < iv.to_ev)
            .or_else(|| self.intervals.last().filter(|iv| fermi_ev == iv.to_ev))
            .map(|iv| iv.charge)
    }
}

/// Drops lines that duplicate another (same slope, intercept within
/// tolerance), keeping the lexicographically smallest label.
fn merge_degenerate(lines: &[FormationLine]) -> Vec<&FormationLine> {
    let mut sorted: Vec<&FormationLine> = lines.iter().collect();
    sorted.sort_by(|a, b| {
        a.charge
            .cmp(&b.charge)
            .then(a.intercept_ev.total_cmp(&b.intercept_ev))
            .then(a.label.cmp(&b.label))
    });
    let mut kept: Vec<&FormationLine> = Vec::with_capacity(sorted.len());
    for l in sorted {
        match kept.iter_mut().find(|k| k.charge == l.charge && (k.intercept_ev - l.intercept_ev).abs() <= DEGENERACY_TOLERANCE_EV) {
            Some(k) => {
                if l.label < k.label {
                    *k = l;
                }
            }
            None => kept.push(l),
        }
    }
    kept
}

pub fn stability_map(lines: &[FormationLine], gap_ev: f64) -> Result<StabilityMap, ThermoError> {
    if lines.is_empty() {
        return Err(ThermoError::EmptyInput);
    }
    if !(gap_ev > 0.0 && gap_ev.is_finite()) {
        return Err(ThermoError::InvalidGap(gap_ev));
    }
    let lines = merge_degenerate(lines);

    // Lowest at E_F = 0; ties go to the line that stays lowest (smallest slope).
    let mut current = *lines
        .iter()
        .min_by(|a, b| {
            a.intercept_ev
                .total_cmp(&b.intercept_ev)
                .then(a.charge.cmp(&b.charge))
                .then(a.label.cmp(&b.label))
        })
        .expect("non-empty");
    let mut x0 = 0.0;
    let mut intervals = Vec::new();
    loop {
        let mut next: Option<(f64, &FormationLine)> = None;
        for l in lines.iter().filter(|l| l.charge < current.charge) {
            let x = (l.intercept_ev - current.intercept_ev) / (current.charge - l.charge) as f64;
            if x <= x0 {
                continue;
            }
            next = match next {
                None => Some((x, l)),
                Some((bx, bl)) => {
                    if x < bx - 1e-12 || ((x - bx).abs() <= 1e-12 && (l.charge, &l.label) < (bl.charge, &bl.label)) {
                        Some((x, l))
                    } else {
                        Some((bx, bl))
                    }
                }
            };
        }
        match next {
            Some((x, l)) if x < gap_ev => {
                intervals.push(StabilityInterval {
                    from_ev: x0,
                    to_ev: x,
                    charge: current.charge,
                    label: current.label.clone(),
                });
                x0 = x;
                current = l;
            }
            _ => {
                intervals.push(StabilityInterval {
                    from_ev: x0,
                    to_ev: gap_ev,
                    charge: current.charge,
                    label: current.label.clone(),
                });
                break;
            }
        }
    }
    Ok(StabilityMap { gap_ev, intervals })
}

/// Everything the thermodynamics report needs for one defect label.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectThermo {
    pub label: String,
    /// Sorted by charge, descending.
    pub lines: Vec<FormationLine>,
    /// Levels between adjacent stable charges, computed from total energies.
    pub transition_levels: Vec<ChargeTransitionLevel>,
    pub stability: StabilityMap,
}

/// Per-label analysis of every defect in the dataset, ordered by label.
pub fn analyze(dataset: &Dataset) -> Result<Vec<DefectThermo>, ThermoError> {
    let mut by_label: BTreeMap<&str, Vec<&DefectEntry>> = BTreeMap::new();
    for e in &dataset.defects {
        by_label.entry(&e.label).or_default().push(e);
    }
    let host = &dataset.host;
    by_label
        .into_iter()
        .map(|(label, mut entries)| {
            entries.sort_by_key(|e| std::cmp::Reverse(e.charge));
            let lines = entries
                .iter()
                .map(|e| formation_line(e, host, &dataset.chemical_potentials))
                .collect::<Result<Vec<_>, _>>()?;
            let stability = stability_map(&lines, host.band_gap_ev)?;
            let mut transition_levels = Vec::new();
            for (_, q1, q2) in stability.breakpoints() {
                let find = |q: i32| entries.iter().find(|e| e.charge == q).expect("charge from own lines");
                let s1 = charge_state(find(q1), host)?;
                let s2 = charge_state(find(q2), host)?;
                transition_levels.push(charge_transition_level(s1, s2, host.vbm_ev)?);
            }
            Ok(DefectThermo {
                label: label.to_string(),
                lines,
                transition_levels,
                stability,
            })
        })
        .collect()
}
