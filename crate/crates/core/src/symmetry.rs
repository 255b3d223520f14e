//! C2v point-group algebra: irrep products, many-electron state symmetry and
//! electric-dipole selection rules.
//!
//! Axis convention: C2 along z, σv the xz plane, σv' the yz plane. With that
//! choice x transforms as B1, y as B2 and z as A1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("unknown C2v irrep '{0}'")]
    UnknownIrrep(String),
    #[error("invalid occupancy {occ} for orbital {index}")]
    InvalidOccupancy { index: usize, occ: u8 },
    #[error("configuration has no orbitals")]
    EmptyConfiguration,
    #[error("configurations '{ground}' and '{excited}' do not describe the same orbital set")]
    OrbitalMismatch { ground: String, excited: String },
    #[error("'{ground}' -> '{excited}' is not a single-electron move within the {channel} channel: {reason}")]
    MalformedPromotion {
        ground: String,
        excited: String,
        channel: SpinChannel,
        reason: String,
    },
}

/// Symmetry operations of C2v, in character-table column order.
pub const CLASSES: [&str; 4] = ["E", "C2", "σv(xz)", "σv'(yz)"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Irrep {
    A1,
    A2,
    B1,
    B2,
}

impl Irrep {
    pub const ALL: [Irrep; 4] = [Irrep::A1, Irrep::A2, Irrep::B1, Irrep::B2];

    /// Characters over (E, C2, σv(xz), σv'(yz)).
    pub fn characters(self) -> [i8; 4] {
        match self {
            Irrep::A1 => [1, 1, 1, 1],
            Irrep::A2 => [1, 1, -1, -1],
            Irrep::B1 => [1, -1, 1, -1],
            Irrep::B2 => [1, -1, -1, 1],
        }
    }

    fn from_characters(chi: [i8; 4]) -> Irrep {
        Irrep::ALL
            .into_iter()
            .find(|g| g.characters() == chi)
            .expect("C2v products are closed over the four irreps")
    }

    pub fn product(self, other: Irrep) -> Irrep {
        irrep_product(self, other)
    }
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Irrep::A1 => "A1",
            Irrep::A2 => "A2",
            Irrep::B1 => "B1",
            Irrep::B2 => "B2",
        };
        f.write_str(s)
    }
}

impl FromStr for Irrep {
    type Err = SymmetryError;

    /// Accepts orbital (lower-case) and state (upper-case) spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A1" => Ok(Irrep::A1),
            "A2" => Ok(Irrep::A2),
            "B1" => Ok(Irrep::B1),
            "B2" => Ok(Irrep::B2),
            _ => Err(SymmetryError::UnknownIrrep(s.to_string())),
        }
    }
}

/// Pointwise product of characters.
pub fn irrep_product(a: Irrep, b: Irrep) -> Irrep {
    let (ca, cb) = (a.characters(), b.characters());
    Irrep::from_characters([ca[0] * cb[0], ca[1] * cb[1], ca[2] * cb[2], ca[3] * cb[3]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    X,
    Y,
    Z,
}

impl Polarization {
    pub const ALL: [Polarization; 3] = [Polarization::X, Polarization::Y, Polarization::Z];

    /// Irrep spanned by the dipole component.
    pub fn irrep(self) -> Irrep {
        match self {
            Polarization::X => Irrep::B1,
            Polarization::Y => Irrep::B2,
            Polarization::Z => Irrep::A1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::X => "x",
            Polarization::Y => "y",
            Polarization::Z => "z",
        })
    }
}

/// Dipole components for which ⟨excited|μ_p|ground⟩ can be nonzero.
///
/// Γ(excited) ⊗ Γ(p) ⊗ Γ(ground) contains A1 exactly when
/// Γ(ground) ⊗ Γ(excited) = Γ(p), so at most one component survives.
pub fn dipole_allowed(ground: Irrep, excited: Irrep) -> Vec<Polarization> {
    let target = irrep_product(ground, excited);
    Polarization::ALL
        .into_iter()
        .filter(|p| p.irrep() == target)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinChannel {
    Up,
    Down,
}

impl fmt::Display for SpinChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpinChannel::Up => "up",
            SpinChannel::Down => "down",
        })
    }
}

impl FromStr for SpinChannel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(SpinChannel::Up),
            "down" => Ok(SpinChannel::Down),
            _ => Err(format!("unknown spin channel '{s}' (expected up|down)")),
        }
    }
}

/// One molecular orbital with its spin-resolved occupation (0 or 1 each).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Orbital {
    pub irrep: Irrep,
    pub up: u8,
    pub down: u8,
}

impl Orbital {
    pub fn occupancy(&self) -> u8 {
        self.up + self.down
    }

    fn channel(&self, channel: SpinChannel) -> u8 {
        match channel {
            SpinChannel::Up => self.up,
            SpinChannel::Down => self.down,
        }
    }
}

/// Ordered single-particle orbitals, lowest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitalConfiguration {
    orbitals: Vec<Orbital>,
}

impl OrbitalConfiguration {
    pub fn new(orbitals: Vec<Orbital>) -> Result<Self, SymmetryError> {
        if orbitals.is_empty() {
            return Err(SymmetryError::EmptyConfiguration);
        }
        for (index, o) in orbitals.iter().enumerate() {
            if o.up > 1 || o.down > 1 {
                return Err(SymmetryError::InvalidOccupancy {
                    index,
                    occ: o.up.max(o.down),
                });
            }
        }
        Ok(Self { orbitals })
    }

    /// Builds a configuration from spin-summed occupancies (0, 1 or 2).
    /// Singly occupied orbitals are placed in the up channel.
    pub fn from_occupancies(occ: &[(Irrep, u8)]) -> Result<Self, SymmetryError> {
        let mut orbitals = Vec::with_capacity(occ.len());
        for (index, &(irrep, n)) in occ.iter().enumerate() {
            let (up, down) = match n {
                0 => (0, 0),
                1 => (1, 0),
                2 => (1, 1),
                _ => return Err(SymmetryError::InvalidOccupancy { index, occ: n }),
            };
            orbitals.push(Orbital { irrep, up, down });
        }
        Self::new(orbitals)
    }

    pub fn orbitals(&self) -> &[Orbital] {
        &self.orbitals
    }

    /// Number of unpaired electrons, 2S for a high-spin arrangement.
    pub fn unpaired(&self) -> usize {
        self.orbitals.iter().filter(|o| o.occupancy() == 1).count()
    }

    pub fn multiplicity(&self) -> usize {
        let up: i32 = self.orbitals.iter().map(|o| o.up as i32).sum();
        let down: i32 = self.orbitals.iter().map(|o| o.down as i32).sum();
        (up - down).unsigned_abs() as usize + 1
    }
}

/// Spatial symmetry of the many-electron state: the product over singly
/// occupied orbitals. Closed and empty shells contribute A1.
pub fn state_symmetry(config: &OrbitalConfiguration) -> Irrep {
    config
        .orbitals
        .iter()
        .filter(|o| o.occupancy() == 1)
        .fold(Irrep::A1, |acc, o| irrep_product(acc, o.irrep))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionVerdict {
    pub ground_label: String,
    pub excited_label: String,
    pub channel: SpinChannel,
    pub ground_irrep: Irrep,
    pub excited_irrep: Irrep,
    pub ground_multiplicity: usize,
    pub excited_multiplicity: usize,
    /// Orbital index the electron leaves.
    pub from_orbital: usize,
    /// Orbital index the electron enters.
    pub to_orbital: usize,
    pub polarizations: Vec<Polarization>,
}

impl TransitionVerdict {
    pub fn allowed(&self) -> bool {
        !self.polarizations.is_empty()
    }
}

fn promotion(
    ground: (&str, &OrbitalConfiguration),
    excited: (&str, &OrbitalConfiguration),
    channel: SpinChannel,
) -> Result<Option<(usize, usize)>, SymmetryError> {
    let (gl, g) = ground;
    let (el, e) = excited;
    let malformed = |reason: String| SymmetryError::MalformedPromotion {
        ground: gl.to_string(),
        excited: el.to_string(),
        channel,
        reason,
    };
    if g.orbitals.len() != e.orbitals.len()
        || g.orbitals.iter().zip(&e.orbitals).any(|(a, b)| a.irrep != b.irrep)
    {
        return Err(SymmetryError::OrbitalMismatch {
            ground: gl.to_string(),
            excited: el.to_string(),
        });
    }
    let other = match channel {
        SpinChannel::Up => SpinChannel::Down,
        SpinChannel::Down => SpinChannel::Up,
    };
    if g.orbitals
        .iter()
        .zip(&e.orbitals)
        .any(|(a, b)| a.channel(other) != b.channel(other))
    {
        return Err(malformed(format!(
            "occupations change in the {other} channel (spin flip or wrong channel)"
        )));
    }
    let mut from = Vec::new();
    let mut to = Vec::new();
    for (k, (a, b)) in g.orbitals.iter().zip(&e.orbitals).enumerate() {
        match b.channel(channel) as i8 - a.channel(channel) as i8 {
            0 => {}
            -1 => from.push(k),
            1 => to.push(k),
            _ => unreachable!("channel occupations are 0 or 1"),
        }
    }
    match (from.as_slice(), to.as_slice()) {
        ([], []) => Ok(None),
        ([f], [t]) => Ok(Some((*f, *t))),
        _ => Err(malformed(format!(
            "{} electron(s) removed and {} added",
            from.len(),
            to.len()
        ))),
    }
}

/// The spin channel whose occupations differ between two configurations,
/// up taking precedence. None when both channels agree.
pub fn changed_channel(ground: &OrbitalConfiguration, excited: &OrbitalConfiguration) -> Option<SpinChannel> {
    let differs = |c: SpinChannel| {
        ground.orbitals.len() != excited.orbitals.len()
            || ground
                .orbitals
                .iter()
                .zip(&excited.orbitals)
                .any(|(a, b)| a.channel(c) != b.channel(c))
    };
    [SpinChannel::Up, SpinChannel::Down].into_iter().find(|&c| differs(c))
}

/// Classifies every configuration after the first as a single-electron
/// promotion from the first one (the ground state) within `channel`.
///
/// Configurations identical to the ground state produce no row.
pub fn classify_transitions(
    configs: &[(String, OrbitalConfiguration)],
    channel: SpinChannel,
) -> Result<Vec<TransitionVerdict>, SymmetryError> {
    let Some(((ground_label, ground), rest)) = configs.split_first() else {
        return Ok(Vec::new());
    };
    let ground_irrep = state_symmetry(ground);
    let mut table = Vec::new();
    for (label, excited) in rest {
        let Some((from, to)) = promotion((ground_label, ground), (label, excited), channel)? else {
            continue;
        };
        let excited_irrep = state_symmetry(excited);
        table.push(TransitionVerdict {
            ground_label: ground_label.clone(),
            excited_label: label.clone(),
            channel,
            ground_irrep,
            excited_irrep,
            ground_multiplicity: ground.multiplicity(),
            excited_multiplicity: excited.multiplicity(),
            from_orbital: from,
            to_orbital: to,
            polarizations: dipole_allowed(ground_irrep, excited_irrep),
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Irrep::*;

    #[test]
    fn identity_and_self_inverse() {
        for x in Irrep::ALL {
            assert_eq!(irrep_product(A1, x), x);
            assert_eq!(irrep_product(x, x), A1);
        }
        assert_eq!(irrep_product(B1, B2), A2);
    }

    #[test]
    fn klein_group_exhaustive() {
        for a in Irrep::ALL {
            for b in Irrep::ALL {
                assert_eq!(a.product(b), b.product(a));
                for c in Irrep::ALL {
                    assert_eq!(a.product(b).product(c), a.product(b.product(c)));
                }
            }
        }
    }

    #[test]
    fn character_table_rows() {
        assert_eq!(A1.characters(), [1, 1, 1, 1]);
        for x in Irrep::ALL {
            assert!(x.characters().iter().all(|c| c.abs() == 1));
        }
    }

    #[test]
    fn dipole_rules() {
        assert_eq!(dipole_allowed(A1, B2), vec![Polarization::Y]);
        assert_eq!(dipole_allowed(B2, A2), vec![Polarization::X]);
        assert!(dipole_allowed(A1, A2).is_empty());
        assert_eq!(dipole_allowed(A1, A1), vec![Polarization::Z]);
        for a in Irrep::ALL {
            for b in Irrep::ALL {
                assert!(dipole_allowed(a, b).len() <= 1);
            }
        }
    }

    #[test]
    fn closed_shell_and_single_electron() {
        let closed = OrbitalConfiguration::from_occupancies(&[(A1, 2), (B2, 2), (B1, 2)]).unwrap();
        assert_eq!(state_symmetry(&closed), A1);
        let one = OrbitalConfiguration::from_occupancies(&[(A1, 2), (B2, 1)]).unwrap();
        assert_eq!(state_symmetry(&one), B2);
        let two = OrbitalConfiguration::from_occupancies(&[(A1, 1), (B2, 1)]).unwrap();
        assert_eq!(state_symmetry(&two), B2);
    }

    #[test]
    fn printed_dianion_configuration_is_a1() {
        let cfg = OrbitalConfiguration::from_occupancies(&[(A1, 2), (B2, 2), (B1, 2), (A1, 1), (B2, 2)])
            .unwrap();
        assert_eq!(state_symmetry(&cfg), A1);
        assert_eq!(cfg.multiplicity(), 2);
    }

    #[test]
    fn state_symmetry_is_order_independent() {
        let a = OrbitalConfiguration::from_occupancies(&[(A1, 1), (B1, 1), (B2, 2), (A2, 1)]).unwrap();
        let b = OrbitalConfiguration::from_occupancies(&[(A2, 1), (B2, 2), (B1, 1), (A1, 1)]).unwrap();
        assert_eq!(state_symmetry(&a), state_symmetry(&b));
    }

    #[test]
    fn promotion_to_empty_b2() {
        let g = OrbitalConfiguration::from_occupancies(&[(A1, 2), (B1, 2), (B2, 0)]).unwrap();
        let e = OrbitalConfiguration::new(vec![
            Orbital { irrep: A1, up: 1, down: 1 },
            Orbital { irrep: B1, up: 0, down: 1 },
            Orbital { irrep: B2, up: 1, down: 0 },
        ])
        .unwrap();
        let rows = classify_transitions(
            &[("g".into(), g), ("e".into(), e)],
            SpinChannel::Up,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        // unpaired b1 and b2 -> A2; closed shell ground -> A1.
        assert_eq!(rows[0].ground_irrep, A1);
        assert_eq!(rows[0].excited_irrep, A2);
        assert!(!rows[0].allowed());
        assert_eq!((rows[0].from_orbital, rows[0].to_orbital), (1, 2));
    }

    #[test]
    fn spin_flip_is_rejected() {
        let g = OrbitalConfiguration::new(vec![
            Orbital { irrep: A1, up: 1, down: 0 },
            Orbital { irrep: B2, up: 0, down: 0 },
        ])
        .unwrap();
        let e = OrbitalConfiguration::new(vec![
            Orbital { irrep: A1, up: 0, down: 0 },
            Orbital { irrep: B2, up: 0, down: 1 },
        ])
        .unwrap();
        let err = classify_transitions(&[("g".into(), g), ("e".into(), e)], SpinChannel::Up)
            .unwrap_err();
        assert!(matches!(err, SymmetryError::MalformedPromotion { .. }));
    }

    #[test]
    fn two_electron_move_is_rejected() {
        let g = OrbitalConfiguration::from_occupancies(&[(A1, 2), (B2, 0), (B1, 0)]).unwrap();
        let e = OrbitalConfiguration::new(vec![
            Orbital { irrep: A1, up: 0, down: 1 },
            Orbital { irrep: B2, up: 1, down: 0 },
            Orbital { irrep: B1, up: 0, down: 0 },
        ])
        .unwrap();
        let err = classify_transitions(&[("g".into(), g.clone()), ("e".into(), e)], SpinChannel::Up);
        assert!(err.is_ok());
        let e2 = OrbitalConfiguration::new(vec![
            Orbital { irrep: A1, up: 0, down: 1 },
            Orbital { irrep: B2, up: 0, down: 0 },
            Orbital { irrep: B1, up: 0, down: 0 },
        ])
        .unwrap();
        let err = classify_transitions(&[("g".into(), g), ("e".into(), e2)], SpinChannel::Up)
            .unwrap_err();
        assert!(matches!(err, SymmetryError::MalformedPromotion { .. }));
    }

    #[test]
    fn identical_configurations_give_empty_table() {
        let g = OrbitalConfiguration::from_occupancies(&[(A1, 2), (B2, 1)]).unwrap();
        let rows = classify_transitions(
            &[("g".into(), g.clone()), ("same".into(), g)],
            SpinChannel::Down,
        )
        .unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn irrep_parsing() {
        assert_eq!("b2".parse::<Irrep>().unwrap(), B2);
        assert_eq!("A1".parse::<Irrep>().unwrap(), A1);
        assert!("E".parse::<Irrep>().is_err());
    }
}
