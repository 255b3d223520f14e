//! C ABI over `defect_spectro`.
//!
//! Every fallible call returns a [`DsStatus`]; on failure the message is
//! kept per thread and read with [`ds_last_error_message`]. Datasets and
//! level diagrams are opaque handles released with their `_free` function.
//! Strings returned through `char **` out-parameters are released with
//! [`ds_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use defect_spectro::chargecorr::{madelung_constant_cubic, madelung_correction};
use defect_spectro::dataset::{load_dataset, Dataset, DatasetError};
use defect_spectro::spinham::{
    build_hamiltonian_with, diagonalize, effective_hamiltonian, HamiltonianOptions, LevelDiagram, ZfsConvention,
};
use defect_spectro::stark::{effective_field, fit_stark};
use defect_spectro::symmetry::{dipole_allowed, irrep_product, Irrep, Polarization};
use defect_spectro::thermo::{charge_state, charge_transition_level, formation_energy};
use defect_spectro::units;
use thiserror::Error;

/// Result code of every fallible call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    NotFound = 6,
    InvalidArgument = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// C2v irreducible representation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsIrrep {
    A1 = 0,
    A2 = 1,
    B1 = 2,
    B2 = 3,
}

impl From<DsIrrep> for Irrep {
    fn from(v: DsIrrep) -> Self {
        match v {
            DsIrrep::A1 => Irrep::A1,
            DsIrrep::A2 => Irrep::A2,
            DsIrrep::B1 => Irrep::B1,
            DsIrrep::B2 => Irrep::B2,
        }
    }
}

impl From<Irrep> for DsIrrep {
    fn from(v: Irrep) -> Self {
        match v {
            Irrep::A1 => DsIrrep::A1,
            Irrep::A2 => DsIrrep::A2,
            Irrep::B1 => DsIrrep::B1,
            Irrep::B2 => DsIrrep::B2,
        }
    }
}

/// Bits of the polarization mask returned by [`ds_dipole_allowed`].
pub const DS_POL_X: u32 = 1;
pub const DS_POL_Y: u32 = 2;
pub const DS_POL_Z: u32 = 4;

/// Opaque validated dataset.
pub struct DsDataset {
    inner: Dataset,
}

/// Opaque eigen-decomposition of one spin Hamiltonian.
pub struct DsLevels {
    inner: LevelDiagram,
}

/// Least-squares Stark parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DsStarkFit {
    /// e·Å
    pub delta_mu: f64,
    /// Å²·e/V
    pub delta_alpha: f64,
    /// eV
    pub residual_rms: f64,
    /// Row-major covariance of (Δμ, Δα).
    pub covariance: [f64; 4],
    pub n_points: usize,
}

#[derive(Debug, Error)]
enum FfiError {
    #[error("null pointer passed for '{0}'")]
    Null(&'static str),
    #[error("'{0}' is not valid UTF-8")]
    Utf8(&'static str),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Invalid(String),
    #[error("buffer holds {capacity} values, {needed} needed")]
    BufferTooSmall { needed: usize, capacity: usize },
}

impl FfiError {
    fn status(&self) -> DsStatus {
        match self {
            FfiError::Null(_) => DsStatus::NullPointer,
            FfiError::Utf8(_) => DsStatus::InvalidUtf8,
            FfiError::Dataset(DatasetError::Io { .. }) => DsStatus::Io,
            FfiError::Dataset(DatasetError::Parse { .. } | DatasetError::Schema { .. }) => DsStatus::Parse,
            FfiError::Dataset(DatasetError::Validation { .. }) => DsStatus::Validation,
            FfiError::NotFound(_) => DsStatus::NotFound,
            FfiError::Invalid(_) => DsStatus::InvalidArgument,
            FfiError::BufferTooSmall { .. } => DsStatus::BufferTooSmall,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> FfiError {
    FfiError::Invalid(e.to_string())
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DsStatus::Ok
        }
        Ok(Err(e)) => {
            let s = e.status();
            set_last_error(e.to_string());
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            DsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| FfiError::Utf8(name))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, FfiError> {
    p.as_mut().ok_or(FfiError::Null(name))
}

unsafe fn dataset_arg<'a>(p: *const DsDataset) -> Result<&'a Dataset, FfiError> {
    p.as_ref().map(|d| &d.inner).ok_or(FfiError::Null("dataset"))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or NULL after a
/// successful one. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn ds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a dataset from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_dataset_from_json(json: *const c_char, out: *mut *mut DsDataset) -> DsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let inner = Dataset::from_json_str(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(DsDataset { inner }));
        Ok(())
    })
}

/// Loads and validates a dataset file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_dataset_load(path: *const c_char, out: *mut *mut DsDataset) -> DsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let inner = load_dataset(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(DsDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be NULL or a handle from `ds_dataset_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ds_dataset_free(ds: *mut DsDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Canonical JSON of the dataset; release with [`ds_string_free`].
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_dataset_to_json(ds: *const DsDataset, out: *mut *mut c_char) -> DsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = owned_string(dataset_arg(ds)?.to_json_string());
        Ok(())
    })
}

/// Formation energy (eV) of `label` in charge `charge` at a Fermi level
/// `fermi_ev` above the VBM.
///
/// # Safety
/// `ds` must be a live handle, `label` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_formation_energy(
    ds: *const DsDataset,
    label: *const c_char,
    charge: i32,
    fermi_ev: f64,
    out: *mut f64,
) -> DsStatus {
    guard(|| {
        let d = dataset_arg(ds)?;
        let label = str_arg(label, "label")?;
        let out = out_arg(out, "out")?;
        let entry = find_entry(d, label, charge)?;
        *out = formation_energy(entry, &d.host, &d.chemical_potentials, fermi_ev).map_err(invalid)?;
        Ok(())
    })
}

fn find_entry<'a>(
    d: &'a Dataset,
    label: &str,
    charge: i32,
) -> Result<&'a defect_spectro::dataset::DefectEntry, FfiError> {
    d.defects
        .iter()
        .find(|e| e.label == label && e.charge == charge)
        .ok_or_else(|| FfiError::NotFound(format!("no defect '{label}' with charge {charge}")))
}

/// Charge transition level ε(q1/q2) above the VBM, eV.
///
/// # Safety
/// `ds` must be a live handle, `label` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_transition_level(
    ds: *const DsDataset,
    label: *const c_char,
    q1: i32,
    q2: i32,
    out: *mut f64,
) -> DsStatus {
    guard(|| {
        let d = dataset_arg(ds)?;
        let label = str_arg(label, "label")?;
        let out = out_arg(out, "out")?;
        let s1 = charge_state(find_entry(d, label, q1)?, &d.host).map_err(invalid)?;
        let s2 = charge_state(find_entry(d, label, q2)?, &d.host).map_err(invalid)?;
        *out = charge_transition_level(s1, s2, d.host.vbm_ev).map_err(invalid)?.level_ev;
        Ok(())
    })
}

/// Madelung constant of a simple-cubic lattice of point charges in a
/// neutralising background, for cell length `length_a` (Å).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_madelung_constant(length_a: f64, out: *mut f64) -> DsStatus {
    guard(|| {
        *out_arg(out, "out")? = madelung_constant_cubic(length_a).map_err(invalid)?;
        Ok(())
    })
}

/// Point-charge image correction (eV) for charge `charge` in a cubic cell.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_madelung_correction(charge: i32, length_a: f64, epsilon_s: f64, out: *mut f64) -> DsStatus {
    guard(|| {
        *out_arg(out, "out")? = madelung_correction(charge, length_a, epsilon_s).map_err(invalid)?.energy_ev;
        Ok(())
    })
}

/// Diagonalises the spin Hamiltonian of `system` at field (bx, by, bz) in
/// tesla. With `effective` set only bz is used and the reduced diagonal
/// Hamiltonian is solved. `conventional_zfs` selects E = εD/3 for the
/// rhombic term instead of the default (ε/3)(S₊² + S₋²).
///
/// # Safety
/// `ds` must be a live handle, `system` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_levels_compute(
    ds: *const DsDataset,
    system: *const c_char,
    bx: f64,
    by: f64,
    bz: f64,
    effective: bool,
    conventional_zfs: bool,
    out: *mut *mut DsLevels,
) -> DsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let d = dataset_arg(ds)?;
        let name = str_arg(system, "system")?;
        let params = d
            .spin_system(name)
            .ok_or_else(|| FfiError::NotFound(format!("no spin system '{name}'")))?;
        let h = if effective {
            effective_hamiltonian(params, bz)
        } else {
            let opts = HamiltonianOptions {
                zfs_convention: if conventional_zfs {
                    ZfsConvention::Conventional
                } else {
                    ZfsConvention::Ladder
                },
            };
            build_hamiltonian_with(params, [bx, by, bz], &opts)
        }
        .map_err(invalid)?;
        let inner = diagonalize(&h).map_err(invalid)?;
        *out = Box::into_raw(Box::new(DsLevels { inner }));
        Ok(())
    })
}

/// # Safety
/// `levels` must be NULL or a handle from [`ds_levels_compute`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ds_levels_free(levels: *mut DsLevels) {
    if !levels.is_null() {
        drop(Box::from_raw(levels));
    }
}

/// Number of levels, (2S+1)(2I+1); 0 for NULL.
///
/// # Safety
/// `levels` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_levels_len(levels: *const DsLevels) -> usize {
    levels.as_ref().map_or(0, |l| l.inner.len())
}

/// Copies the ascending eigenvalues (MHz) into `buf`. `written` receives
/// the number of levels even when `capacity` is too small.
///
/// # Safety
/// `levels` must be a live handle, `buf` must hold `capacity` doubles,
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_levels_energies(
    levels: *const DsLevels,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> DsStatus {
    guard(|| {
        let l = &levels.as_ref().ok_or(FfiError::Null("levels"))?.inner;
        let written = out_arg(written, "written")?;
        let n = l.len();
        *written = n;
        if capacity < n {
            return Err(FfiError::BufferTooSmall { needed: n, capacity });
        }
        if buf.is_null() {
            return Err(FfiError::Null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, n).copy_from_slice(&l.eigenvalues_mhz);
        Ok(())
    })
}

/// Dominant product state (m_S, m_I) of level `index`.
///
/// # Safety
/// `levels` must be a live handle; `ms` and `mi` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_levels_label(levels: *const DsLevels, index: usize, ms: *mut f64, mi: *mut f64) -> DsStatus {
    guard(|| {
        let l = &levels.as_ref().ok_or(FfiError::Null("levels"))?.inner;
        let label = l
            .labels
            .get(index)
            .ok_or_else(|| invalid(format!("level index {index} out of range 0..{}", l.len())))?;
        *out_arg(ms, "ms")? = label.ms();
        *out_arg(mi, "mi")? = label.mi();
        Ok(())
    })
}

/// Fits Δμ and Δα to the named Stark series.
///
/// # Safety
/// `ds` must be a live handle, `series` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_stark_fit(
    ds: *const DsDataset,
    series: *const c_char,
    epsilon_s: f64,
    out: *mut DsStarkFit,
) -> DsStatus {
    guard(|| {
        let d = dataset_arg(ds)?;
        let name = str_arg(series, "series")?;
        let out = out_arg(out, "out")?;
        let s = d
            .stark_series
            .get(name)
            .ok_or_else(|| FfiError::NotFound(format!("no Stark series '{name}'")))?;
        let f = fit_stark(s, epsilon_s).map_err(invalid)?;
        let c = f.covariance;
        *out = DsStarkFit {
            delta_mu: f.delta_mu,
            delta_alpha: f.delta_alpha,
            residual_rms: f.residual_rms,
            covariance: [c[0][0], c[0][1], c[1][0], c[1][1]],
            n_points: f.n_points,
        };
        Ok(())
    })
}

/// Effective local field (GV/cm) implied by Δμ (e·Å) at length scale
/// `z_scale_a` (Å), divided by `shielding` (≥ 1).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_effective_field(delta_mu: f64, z_scale_a: f64, shielding: f64, out: *mut f64) -> DsStatus {
    guard(|| {
        *out_arg(out, "out")? = effective_field(delta_mu, z_scale_a, shielding).map_err(invalid)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn ds_irrep_product(a: DsIrrep, b: DsIrrep) -> DsIrrep {
    irrep_product(a.into(), b.into()).into()
}

/// Static name of an irrep ("A1", "A2", "B1", "B2").
#[no_mangle]
pub extern "C" fn ds_irrep_name(a: DsIrrep) -> *const c_char {
    let s: &'static [u8] = match a {
        DsIrrep::A1 => b"A1\0",
        DsIrrep::A2 => b"A2\0",
        DsIrrep::B1 => b"B1\0",
        DsIrrep::B2 => b"B2\0",
    };
    s.as_ptr().cast()
}

/// Mask of `DS_POL_*` bits for dipole components connecting the two states.
#[no_mangle]
pub extern "C" fn ds_dipole_allowed(ground: DsIrrep, excited: DsIrrep) -> u32 {
    dipole_allowed(ground.into(), excited.into())
        .into_iter()
        .map(|p| match p {
            Polarization::X => DS_POL_X,
            Polarization::Y => DS_POL_Y,
            Polarization::Z => DS_POL_Z,
        })
        .fold(0, |m, b| m | b)
}

#[no_mangle]
pub extern "C" fn ds_ev_to_nm(energy_ev: f64) -> f64 {
    units::ev_to_nm(energy_ev)
}

#[no_mangle]
pub extern "C" fn ds_nm_to_ev(wavelength_nm: f64) -> f64 {
    units::nm_to_ev(wavelength_nm)
}

#[no_mangle]
pub extern "C" fn ds_e_angstrom_to_debye(mu: f64) -> f64 {
    units::e_angstrom_to_debye(mu)
}

#[no_mangle]
pub extern "C" fn ds_polarizability_to_bohr_cubed(alpha: f64) -> f64 {
    units::polarizability_to_bohr_cubed(alpha)
}
