//! Finite-size electrostatic correction for charged cubic supercells.
//!
//! The leading term is the screened Madelung energy of a point charge
//! repeated on the simple-cubic supercell lattice inside a homogeneous
//! neutralizing background, evaluated with an Ewald sum. The potential
//! alignment part of a full correction scheme is not computed here; it enters
//! as a user-supplied offset on each defect entry.

use std::f64::consts::PI;

use libm::erfc;
use thiserror::Error;

use crate::units::COULOMB_EV_ANGSTROM;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Number of times the cutoff margin is grown before giving up.
const MAX_GROWTH_STEPS: usize = 12;
const GROWTH_FACTOR: f64 = 1.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EwaldError {
    #[error("Ewald sum did not converge: halving the splitting parameter changed the result by {rel_change:.3e} (target {tolerance:.1e})")]
    ConvergenceFailure { rel_change: f64, tolerance: f64 },
    #[error("invalid Ewald input: {0}")]
    InvalidInput(String),
}

/// Numerical controls for one Ewald evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaldConfig {
    /// Gaussian splitting parameter, 1/Å.
    pub splitting_parameter: f64,
    /// Å.
    pub real_space_cutoff: f64,
    /// 1/Å.
    pub reciprocal_cutoff: f64,
    pub target_rel_tolerance: f64,
}

impl EwaldConfig {
    /// Cutoffs for a given splitting parameter: erfc(α r_c) and
    /// exp(-G_c²/4α²) both fall to roughly the tolerance, times `margin`
    /// in the exponent argument.
    fn derived(alpha: f64, tolerance: f64, margin: f64) -> Self {
        let s = (-tolerance.ln()).sqrt() * margin;
        Self {
            splitting_parameter: alpha,
            real_space_cutoff: s / alpha,
            reciprocal_cutoff: 2.0 * alpha * s,
            target_rel_tolerance: tolerance,
        }
    }

    /// Default configuration for a cubic cell of edge `length`: α = √π/L and
    /// cutoffs grown until the halving self-check passes.
    pub fn for_cell(length: f64, tolerance: f64) -> Result<Self, EwaldError> {
        Self::with_splitting(length, PI.sqrt() / length, tolerance)
    }

    pub fn with_splitting(length: f64, alpha: f64, tolerance: f64) -> Result<Self, EwaldError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(EwaldError::InvalidInput(format!("cell length must be positive, got {length}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(EwaldError::InvalidInput(format!("splitting parameter must be positive, got {alpha}")));
        }
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(EwaldError::InvalidInput(format!("tolerance must lie in (0, 1), got {tolerance}")));
        }
        let probe = CubicCell::single_charge(length);
        let mut margin = 1.0;
        let mut last_change = f64::INFINITY;
        for _ in 0..MAX_GROWTH_STEPS {
            let full = Self::derived(alpha, tolerance, margin);
            let half = Self::derived(0.5 * alpha, tolerance, margin);
            let a = probe.site_potential(0, &full);
            let b = probe.site_potential(0, &half);
            last_change = ((a - b) / a).abs();
            if last_change < tolerance {
                return Ok(full);
            }
            margin *= GROWTH_FACTOR;
        }
        Err(EwaldError::ConvergenceFailure {
            rel_change: last_change,
            tolerance,
        })
    }

    /// Explicit cutoffs, still subject to the halving self-check on a cell
    /// of edge `length`.
    pub fn explicit(
        length: f64,
        splitting_parameter: f64,
        real_space_cutoff: f64,
        reciprocal_cutoff: f64,
        target_rel_tolerance: f64,
    ) -> Result<Self, EwaldError> {
        let cfg = Self {
            splitting_parameter,
            real_space_cutoff,
            reciprocal_cutoff,
            target_rel_tolerance,
        };
        if [splitting_parameter, real_space_cutoff, reciprocal_cutoff, target_rel_tolerance]
            .iter()
            .any(|v| !(*v > 0.0 && v.is_finite()))
        {
            return Err(EwaldError::InvalidInput("all Ewald parameters must be positive".into()));
        }
        let probe = CubicCell::single_charge(length);
        let half = Self {
            splitting_parameter: 0.5 * splitting_parameter,
            real_space_cutoff: 2.0 * real_space_cutoff,
            reciprocal_cutoff: 0.5 * reciprocal_cutoff,
            target_rel_tolerance,
        };
        let a = probe.site_potential(0, &cfg);
        let b = probe.site_potential(0, &half);
        let rel_change = ((a - b) / a).abs();
        if rel_change < target_rel_tolerance {
            Ok(cfg)
        } else {
            Err(EwaldError::ConvergenceFailure {
                rel_change,
                tolerance: target_rel_tolerance,
            })
        }
    }
}

/// Point charges (in e) at fractional positions of a cubic cell of edge
/// `length` Å. A net charge is compensated by a uniform background.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicCell {
    pub length: f64,
    pub sites: Vec<(f64, [f64; 3])>,
}

impl CubicCell {
    pub fn single_charge(length: f64) -> Self {
        Self {
            length,
            sites: vec![(1.0, [0.0; 3])],
        }
    }

    /// Conventional rock-salt cell: four cations and four anions.
    pub fn rock_salt(length: f64) -> Self {
        let fcc = [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]];
        let mut sites = Vec::with_capacity(8);
        for p in fcc {
            sites.push((1.0, p));
        }
        for p in fcc {
            sites.push((-1.0, [(p[0] + 0.5) % 1.0, p[1], p[2]]));
        }
        Self { length, sites }
    }

    pub fn net_charge(&self) -> f64 {
        self.sites.iter().map(|s| s.0).sum()
    }

    /// Electrostatic potential (e/Å units, i.e. multiply by e²/4πε₀ for eV)
    /// at site `index` from every other charge, every periodic image and the
    /// background, excluding the site's own bare charge.
    pub fn site_potential(&self, index: usize, cfg: &EwaldConfig) -> f64 {
        let l = self.length;
        let volume = l * l * l;
        let alpha = cfg.splitting_parameter;
        let (qi, fi) = self.sites[index];
        let ri = [fi[0] * l, fi[1] * l, fi[2] * l];

        let mut real = 0.0;
        let rc = cfg.real_space_cutoff;
        let n_max = (rc / l).ceil() as i64 + 1;
        for (qj, fj) in &self.sites {
            let base = [fj[0] * l - ri[0], fj[1] * l - ri[1], fj[2] * l - ri[2]];
            for nx in -n_max..=n_max {
                for ny in -n_max..=n_max {
                    for nz in -n_max..=n_max {
                        let d = [
                            base[0] + nx as f64 * l,
                            base[1] + ny as f64 * l,
                            base[2] + nz as f64 * l,
                        ];
                        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                        if r == 0.0 || r > rc {
                            continue;
                        }
                        real += qj * erfc(alpha * r) / r;
                    }
                }
            }
        }

        let mut recip = 0.0;
        let gc = cfg.reciprocal_cutoff;
        let dg = 2.0 * PI / l;
        let m_max = (gc / dg).ceil() as i64;
        for mx in -m_max..=m_max {
            for my in -m_max..=m_max {
                for mz in -m_max..=m_max {
                    if mx == 0 && my == 0 && mz == 0 {
                        continue;
                    }
                    let g = [mx as f64 * dg, my as f64 * dg, mz as f64 * dg];
                    let g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
                    if g2 > gc * gc {
                        continue;
                    }
                    let mut structure = 0.0;
                    for (qj, fj) in &self.sites {
                        let phase = 2.0
                            * PI
                            * (mx as f64 * (fi[0] - fj[0])
                                + my as f64 * (fi[1] - fj[1])
                                + mz as f64 * (fi[2] - fj[2]));
                        structure += qj * phase.cos();
                    }
                    recip += (-g2 / (4.0 * alpha * alpha)).exp() / g2 * structure;
                }
            }
        }
        recip *= 4.0 * PI / volume;

        let self_term = -2.0 * alpha * qi / PI.sqrt();
        let background = -PI * self.net_charge() / (volume * alpha * alpha);
        real + recip + self_term + background
    }

    /// Ewald energy of the cell in units of e²/Å.
    pub fn energy(&self, cfg: &EwaldConfig) -> f64 {
        0.5 * (0..self.sites.len())
            .map(|i| self.sites[i].0 * self.site_potential(i, cfg))
            .sum::<f64>()
    }
}

/// Dimensionless Madelung constant of a unit point charge on a simple-cubic
/// lattice of spacing `length` with compensating background: L·φ(0).
/// Negative; independent of `length`.
pub fn madelung_constant_cubic(length: f64) -> Result<f64, EwaldError> {
    let cfg = EwaldConfig::for_cell(length, DEFAULT_TOLERANCE)?;
    Ok(length * CubicCell::single_charge(length).site_potential(0, &cfg))
}

/// Rock-salt Madelung constant referred to the nearest-neighbour distance.
pub fn madelung_constant_rock_salt() -> Result<f64, EwaldError> {
    let length = 2.0;
    let cfg = EwaldConfig::for_cell(length, DEFAULT_TOLERANCE)?;
    let phi = CubicCell::rock_salt(length).site_potential(0, &cfg);
    Ok(-phi * length / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MadelungCorrection {
    pub energy_ev: f64,
    pub madelung_constant: f64,
}

/// q²|ν| e²/(4πε₀) / (2 ε_s L), in eV.
pub fn madelung_correction(charge: i32, length: f64, epsilon_s: f64) -> Result<MadelungCorrection, EwaldError> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(EwaldError::InvalidInput(format!("cell length must be positive, got {length}")));
    }
    if !(epsilon_s >= 1.0 && epsilon_s.is_finite()) {
        return Err(EwaldError::InvalidInput(format!("dielectric constant must be >= 1, got {epsilon_s}")));
    }
    let nu = madelung_constant_cubic(length)?;
    let q = charge as f64;
    Ok(MadelungCorrection {
        energy_ev: q * q * nu.abs() * COULOMB_EV_ANGSTROM / (2.0 * epsilon_s * length),
        madelung_constant: nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_cubic_constant() {
        let nu = madelung_constant_cubic(10.0).unwrap();
        assert!((nu + 2.837_30).abs() < 1e-5, "{nu}");
    }

    #[test]
    fn scale_invariance() {
        let a = madelung_constant_cubic(5.0).unwrap();
        let b = madelung_constant_cubic(20.0).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn rock_salt_constant() {
        let m = madelung_constant_rock_salt().unwrap();
        assert!((m - 1.747_565).abs() < 1e-5, "{m}");
    }

    #[test]
    fn correction_values() {
        assert_eq!(madelung_correction(0, 10.0, 5.7).unwrap().energy_ev, 0.0);
        let c1 = madelung_correction(1, 10.0, 1.0).unwrap().energy_ev;
        assert!((c1 - 2.0428).abs() < 1e-3);
        let m1 = madelung_correction(-1, 10.7, 5.7).unwrap().energy_ev;
        let m2 = madelung_correction(-2, 10.7, 5.7).unwrap().energy_ev;
        assert!((m2 / m1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(madelung_correction(1, 0.0, 5.7).is_err());
        assert!(madelung_correction(1, 10.0, 0.5).is_err());
        assert!(EwaldConfig::for_cell(-1.0, 1e-8).is_err());
    }

    #[test]
    fn undersized_explicit_cutoffs_fail_self_check() {
        let l = 10.0;
        let alpha = PI.sqrt() / l;
        let err = EwaldConfig::explicit(l, alpha, 0.5 * l, 0.5 / l, 1e-8).unwrap_err();
        assert!(matches!(err, EwaldError::ConvergenceFailure { .. }));
    }
}
