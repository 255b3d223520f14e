//! Physical constants and the handful of unit conversions the toolkit needs.
//!
//! Canonical internal units: energies in eV, lengths in Å, magnetic fields in
//! tesla, spin-Hamiltonian matrices in MHz. Zero-field splittings arrive in
//! GHz and field gradients in V/Å²; both are converted once, here.
//!
//! Values from CODATA 2018.

/// Fixed physical constants, expressed in the units the toolkit works in.
/// Field names keep the unit symbols (eV, T) in their usual case.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Bohr magneton, μeV/T.
    pub bohr_magneton_ueV_per_T: f64,
    /// Nuclear magneton, neV/T.
    pub nuclear_magneton_neV_per_T: f64,
    /// e²/4πε₀ in eV·Å (equivalently e/4πε₀ in V·Å).
    pub coulomb_constant_eV_angstrom: f64,
    /// Debye per e·Å.
    pub debye_per_e_angstrom: f64,
    pub bohr_radius_angstrom: f64,
    /// ε₀ in F/m.
    pub vacuum_permittivity: f64,
}

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    bohr_magneton_ueV_per_T: BOHR_MAGNETON_UEV_PER_T,
    nuclear_magneton_neV_per_T: NUCLEAR_MAGNETON_NEV_PER_T,
    coulomb_constant_eV_angstrom: COULOMB_EV_ANGSTROM,
    debye_per_e_angstrom: DEBYE_PER_E_ANGSTROM,
    bohr_radius_angstrom: BOHR_RADIUS_ANGSTROM,
    vacuum_permittivity: VACUUM_PERMITTIVITY,
};

pub const BOHR_MAGNETON_UEV_PER_T: f64 = 57.883_818_060;
pub const NUCLEAR_MAGNETON_NEV_PER_T: f64 = 31.524_512_584_4;
pub const COULOMB_EV_ANGSTROM: f64 = 14.399_645_478_43;
pub const DEBYE_PER_E_ANGSTROM: f64 = 4.803_204_712_570;
pub const BOHR_RADIUS_ANGSTROM: f64 = 0.529_177_210_903;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Planck constant, eV·s.
pub const PLANCK_EV_S: f64 = 4.135_667_696e-15;
/// hc in eV·nm.
pub const HC_EV_NM: f64 = 1_239.841_984_332;

/// μ_B/h in MHz/T.
pub const BOHR_MAGNETON_MHZ_PER_T: f64 = 13_996.244_936_1;
/// μ_N/h in MHz/T.
pub const NUCLEAR_MAGNETON_MHZ_PER_T: f64 = 7.622_593_229_1;

/// (e · 1 barn · 1 V/Å²)/h in MHz. 1 barn = 1e-8 Å², so the product is
/// 1e-8 eV, divided by h.
pub const QUADRUPOLE_MHZ_PER_BARN_V_PER_A2: f64 = 1e-8 / PLANCK_EV_S * 1e-6;

pub fn e_angstrom_to_debye(mu: f64) -> f64 {
    mu * DEBYE_PER_E_ANGSTROM
}

pub fn debye_to_e_angstrom(mu: f64) -> f64 {
    mu / DEBYE_PER_E_ANGSTROM
}

/// Polarizability in Å²·e/V to atomic units a₀³ (Gaussian volume).
///
/// Multiplying by e/4πε₀ (V·Å) turns Å²·e/V into Å³; dividing by a₀³ gives
/// the atomic-unit volume.
pub fn polarizability_to_bohr_cubed(alpha: f64) -> f64 {
    alpha * COULOMB_EV_ANGSTROM / BOHR_RADIUS_ANGSTROM.powi(3)
}

pub fn bohr_cubed_to_polarizability(alpha: f64) -> f64 {
    alpha * BOHR_RADIUS_ANGSTROM.powi(3) / COULOMB_EV_ANGSTROM
}

/// 1 V/Å = 10⁸ V/cm = 0.1 GV/cm.
pub fn volts_per_angstrom_to_gv_per_cm(field: f64) -> f64 {
    field * 0.1
}

pub fn ev_to_nm(energy: f64) -> f64 {
    HC_EV_NM / energy
}

pub fn nm_to_ev(wavelength: f64) -> f64 {
    HC_EV_NM / wavelength
}

pub fn mhz_to_ev(f: f64) -> f64 {
    f * 1e6 * PLANCK_EV_S
}

pub fn ev_to_mhz(e: f64) -> f64 {
    e / PLANCK_EV_S * 1e-6
}

pub fn ghz_to_mhz(f: f64) -> f64 {
    f * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn coulomb_constant_from_permittivity() {
        let e = 1.602_176_634e-19;
        let derived = e / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY) * 1e10;
        assert!(rel(derived, COULOMB_EV_ANGSTROM) < 1e-9);
        assert!((COULOMB_EV_ANGSTROM - 14.399645).abs() < 1e-5);
    }

    #[test]
    fn magnetons_agree_between_unit_systems() {
        let mu_b = BOHR_MAGNETON_UEV_PER_T * 1e-6 / PLANCK_EV_S * 1e-6;
        assert!(rel(mu_b, BOHR_MAGNETON_MHZ_PER_T) < 1e-9);
        let mu_n = NUCLEAR_MAGNETON_NEV_PER_T * 1e-9 / PLANCK_EV_S * 1e-6;
        assert!(rel(mu_n, NUCLEAR_MAGNETON_MHZ_PER_T) < 1e-9);
    }

    #[test]
    fn debye_from_si() {
        let c = 299_792_458.0;
        let e_angstrom_si = 1.602_176_634e-19 * 1e-10;
        let debye_si = 1e-21 / c;
        assert!(rel(e_angstrom_si / debye_si, DEBYE_PER_E_ANGSTROM) < 1e-12);
    }

    #[test]
    fn dipole_conversion_matches_table() {
        assert!(rel(e_angstrom_to_debye(1.23), 5.90) < 0.005);
        assert!(rel(e_angstrom_to_debye(0.02), 0.095) < 0.02);
        assert!((e_angstrom_to_debye(0.02) - 0.0961).abs() < 1e-4);
        assert_eq!(e_angstrom_to_debye(0.0), 0.0);
    }

    #[test]
    fn polarizability_conversion_matches_table() {
        assert!((polarizability_to_bohr_cubed(1.0) - 97.17).abs() < 0.01);
        assert!(rel(polarizability_to_bohr_cubed(0.12), 11.6) < 0.01);
        assert!(rel(polarizability_to_bohr_cubed(0.025), 2.43) < 0.01);
        assert_eq!(polarizability_to_bohr_cubed(0.0), 0.0);
    }

    #[test]
    fn field_conversion() {
        assert!((volts_per_angstrom_to_gv_per_cm(17.71) - 1.771).abs() < 1e-12);
        assert!((volts_per_angstrom_to_gv_per_cm(0.288) - 0.0288).abs() < 1e-15);
        assert_eq!(volts_per_angstrom_to_gv_per_cm(0.0), 0.0);
    }

    #[test]
    fn quadrupole_unit() {
        assert!((QUADRUPOLE_MHZ_PER_BARN_V_PER_A2 - 2.417_989_242).abs() < 1e-8);
    }

    #[test]
    fn wavelength_bridge() {
        assert!(rel(ev_to_nm(1.04427), 1187.2) < 1e-3);
        assert!(rel(nm_to_ev(533.0), 2.3262) < 1e-4);
    }
}
