#ifndef DEFECT_SPECTRO_H
#define DEFECT_SPECTRO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bits of the polarization mask returned by [`ds_dipole_allowed`].
 */
#define DS_POL_X 1

#define DS_POL_Y 2

#define DS_POL_Z 4

/**
 * Result code of every fallible call. Zero is success.
 */
typedef enum DsStatus {
  DS_STATUS_OK = 0,
  DS_STATUS_NULL_POINTER = 1,
  DS_STATUS_INVALID_UTF8 = 2,
  DS_STATUS_IO = 3,
  DS_STATUS_PARSE = 4,
  DS_STATUS_VALIDATION = 5,
  DS_STATUS_NOT_FOUND = 6,
  DS_STATUS_INVALID_ARGUMENT = 7,
  DS_STATUS_BUFFER_TOO_SMALL = 8,
  DS_STATUS_PANIC = 9,
} DsStatus;

/**
 * C2v irreducible representation.
 */
typedef enum DsIrrep {
  DS_IRREP_A1 = 0,
  DS_IRREP_A2 = 1,
  DS_IRREP_B1 = 2,
  DS_IRREP_B2 = 3,
} DsIrrep;

/**
 * Opaque validated dataset.
 */
typedef struct DsDataset DsDataset;

/**
 * Opaque eigen-decomposition of one spin Hamiltonian.
 */
typedef struct DsLevels DsLevels;

/**
 * Least-squares Stark parameters.
 */
typedef struct DsStarkFit {
  /**
   * e·Å
   */
  double delta_mu;
  /**
   * Å²·e/V
   */
  double delta_alpha;
  /**
   * eV
   */
  double residual_rms;
  /**
   * Row-major covariance of (Δμ, Δα).
   */
  double covariance[4];
  size_t n_points;
} DsStarkFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a
 * successful one. Valid until the next call on the same thread.
 */
const char *ds_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ds_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a pointer obtained from this library that has not
 * been freed.
 */
void ds_string_free(char *s);

/**
 * Parses and validates a dataset from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DsStatus ds_dataset_from_json(const char *json, struct DsDataset **out);

/**
 * Loads and validates a dataset file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DsStatus ds_dataset_load(const char *path, struct DsDataset **out);

/**
 * # Safety
 * `ds` must be NULL or a handle from `ds_dataset_*` not yet freed.
 */
void ds_dataset_free(struct DsDataset *ds);

/**
 * Canonical JSON of the dataset; release with [`ds_string_free`].
 *
 * # Safety
 * `ds` must be a live handle; `out` must be writable.
 */
enum DsStatus ds_dataset_to_json(const struct DsDataset *ds, char **out);

/**
 * Formation energy (eV) of `label` in charge `charge` at a Fermi level
 * `fermi_ev` above the VBM.
 *
 * # Safety
 * `ds` must be a live handle, `label` NUL-terminated, `out` writable.
 */
enum DsStatus ds_formation_energy(const struct DsDataset *ds,
                                  const char *label,
                                  int32_t charge,
                                  double fermi_ev,
                                  double *out);

/**
 * Charge transition level ε(q1/q2) above the VBM, eV.
 *
 * # Safety
 * `ds` must be a live handle, `label` NUL-terminated, `out` writable.
 */
enum DsStatus ds_transition_level(const struct DsDataset *ds,
                                  const char *label,
                                  int32_t q1,
                                  int32_t q2,
                                  double *out);

/**
 * Madelung constant of a simple-cubic lattice of point charges in a
 * neutralising background, for cell length `length_a` (Å).
 *
 * # Safety
 * `out` must be writable.
 */
enum DsStatus ds_madelung_constant(double length_a, double *out);

/**
 * Point-charge image correction (eV) for charge `charge` in a cubic cell.
 *
 * # Safety
 * `out` must be writable.
 */
enum DsStatus ds_madelung_correction(int32_t charge,
                                     double length_a,
                                     double epsilon_s,
                                     double *out);

/**
 * Diagonalises the spin Hamiltonian of `system` at field (bx, by, bz) in
 * tesla. With `effective` set only bz is used and the reduced diagonal
 * Hamiltonian is solved. `conventional_zfs` selects E = εD/3 for the
 * rhombic term instead of the default (ε/3)(S₊² + S₋²).
 *
 * # Safety
 * `ds` must be a live handle, `system` NUL-terminated, `out` writable.
 */
enum DsStatus ds_levels_compute(const struct DsDataset *ds,
                                const char *system,
                                double bx,
                                double by,
                                double bz,
                                bool effective,
                                bool conventional_zfs,
                                struct DsLevels **out);

/**
 * # Safety
 * `levels` must be NULL or a handle from [`ds_levels_compute`] not yet freed.
 */
void ds_levels_free(struct DsLevels *levels);

/**
 * Number of levels, (2S+1)(2I+1); 0 for NULL.
 *
 * # Safety
 * `levels` must be NULL or a live handle.
 */
size_t ds_levels_len(const struct DsLevels *levels);

/**
 * Copies the ascending eigenvalues (MHz) into `buf`. `written` receives
 * the number of levels even when `capacity` is too small.
 *
 * # Safety
 * `levels` must be a live handle, `buf` must hold `capacity` doubles,
 * `written` must be writable.
 */
enum DsStatus ds_levels_energies(const struct DsLevels *levels,
                                 double *buf,
                                 size_t capacity,
                                 size_t *written);

/**
 * Dominant product state (m_S, m_I) of level `index`.
 *
 * # Safety
 * `levels` must be a live handle; `ms` and `mi` writable.
 */
enum DsStatus ds_levels_label(const struct DsLevels *levels, size_t index, double *ms, double *mi);

/**
 * Fits Δμ and Δα to the named Stark series.
 *
 * # Safety
 * `ds` must be a live handle, `series` NUL-terminated, `out` writable.
 */
enum DsStatus ds_stark_fit(const struct DsDataset *ds,
                           const char *series,
                           double epsilon_s,
                           struct DsStarkFit *out);

/**
 * Effective local field (GV/cm) implied by Δμ (e·Å) at length scale
 * `z_scale_a` (Å), divided by `shielding` (≥ 1).
 *
 * # Safety
 * `out` must be writable.
 */
enum DsStatus ds_effective_field(double delta_mu, double z_scale_a, double shielding, double *out);

enum DsIrrep ds_irrep_product(enum DsIrrep a, enum DsIrrep b);

/**
 * Static name of an irrep ("A1", "A2", "B1", "B2").
 */
const char *ds_irrep_name(enum DsIrrep a);

/**
 * Mask of `DS_POL_*` bits for dipole components connecting the two states.
 */
uint32_t ds_dipole_allowed(enum DsIrrep ground, enum DsIrrep excited);

double ds_ev_to_nm(double energy_ev);

double ds_nm_to_ev(double wavelength_nm);

double ds_e_angstrom_to_debye(double mu);

double ds_polarizability_to_bohr_cubed(double alpha);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEFECT_SPECTRO_H */
