use std::fmt;

use super::operators::{hermiticity_defect, spin_operators, CMatrix, Spin, SpinOperatorSet};
use super::{SpinError, HERMITICITY_TOLERANCE};
use crate::dataset::SpinSystemParams;
use crate::units::{ghz_to_mhz, BOHR_MAGNETON_MHZ_PER_T, NUCLEAR_MAGNETON_MHZ_PER_T, QUADRUPOLE_MHZ_PER_BARN_V_PER_A2};

/// How the rhombic part of the zero-field splitting is written.
///
/// `Ladder` uses (ε/3)(S₊² + S₋²); `Conventional` uses E(S_x² − S_y²) with
/// E = εD/3, which equals (ε/6)(S₊² + S₋²).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZfsConvention {
    #[default]
    Ladder,
    Conventional,
}

impl fmt::Display for ZfsConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZfsConvention::Ladder => "ladder",
            ZfsConvention::Conventional => "conventional",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HamiltonianOptions {
    pub zfs_convention: ZfsConvention,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpinWarning {
    /// A quadrupole coupling was requested for a nucleus with I ≤ 1/2.
    QuadrupoleForbidden { nuclear_spin: Spin },
}

impl fmt::Display for SpinWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpinWarning::QuadrupoleForbidden { nuclear_spin } => {
                write!(f, "nuclear spin I = {nuclear_spin} has no quadrupole moment; term set to zero")
            }
        }
    }
}

/// ZFS term in MHz: D[S_z² − S(S+1)/3 + (ε/k)(S₊² + S₋²)] with k = 3 (ladder)
/// or 6 (conventional). `d_ghz` is D itself, i.e. (3/2)·D_zz.
pub fn zfs_term(d_ghz: f64, epsilon: f64, ops: &SpinOperatorSet, convention: ZfsConvention) -> CMatrix {
    let n = ops.dim();
    if ops.spin.twice() <= 1 {
        return CMatrix::zeros(n, n);
    }
    let d = ghz_to_mhz(d_ghz);
    let k = match convention {
        ZfsConvention::Ladder => 3.0,
        ZfsConvention::Conventional => 6.0,
    };
    let sz2 = &ops.sz * &ops.sz;
    let ladder = &ops.s_plus * &ops.s_plus + &ops.s_minus * &ops.s_minus;
    (sz2 - ops.identity().scale(ops.spin.casimir() / 3.0) + ladder.scale(epsilon / k)).scale(d)
}

/// eQ_I V_zz / (4I(2I−1)) in MHz; zero for I ≤ 1/2.
pub fn quadrupole_prefactor_mhz(vzz_v_per_a2: f64, q_barn: f64, nuclear_spin: Spin) -> f64 {
    if nuclear_spin.twice() <= 1 {
        return 0.0;
    }
    let i = nuclear_spin.value();
    q_barn * vzz_v_per_a2 * QUADRUPOLE_MHZ_PER_BARN_V_PER_A2 / (4.0 * i * (2.0 * i - 1.0))
}

/// Quadrupole term in MHz: P[3I_z² − I(I+1) + η(I_x² − I_y²)].
pub fn quadrupole_term(vzz_v_per_a2: f64, eta: f64, q_barn: f64, ops: &SpinOperatorSet) -> (CMatrix, Option<SpinWarning>) {
    let n = ops.dim();
    if ops.spin.twice() <= 1 {
        let w = SpinWarning::QuadrupoleForbidden { nuclear_spin: ops.spin };
        return (CMatrix::zeros(n, n), Some(w));
    }
    let p = quadrupole_prefactor_mhz(vzz_v_per_a2, q_barn, ops.spin);
    let iz2 = (&ops.sz * &ops.sz).scale(3.0);
    let rhombic = &ops.sx * &ops.sx - &ops.sy * &ops.sy;
    ((iz2 - ops.identity().scale(ops.spin.casimir()) + rhombic.scale(eta)).scale(p), None)
}

/// Hyperfine term in MHz on the product space:
/// A_zz S_zI_z + A_xx S_xI_x + A_yy S_yI_y.
pub fn hyperfine_term(a_mhz: [f64; 3], ops_s: &SpinOperatorSet, ops_i: &SpinOperatorSet) -> CMatrix {
    let [axx, ayy, azz] = a_mhz;
    ops_s.sz.kronecker(&ops_i.sz).scale(azz)
        + ops_s.sx.kronecker(&ops_i.sx).scale(axx)
        + ops_s.sy.kronecker(&ops_i.sy).scale(ayy)
}

fn dot(ops: &SpinOperatorSet, b: [f64; 3]) -> CMatrix {
    ops.sx.scale(b[0]) + ops.sy.scale(b[1]) + ops.sz.scale(b[2])
}

/// Per-interaction matrices, each on the full product space.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerms {
    pub electron_zeeman: CMatrix,
    pub nuclear_zeeman: CMatrix,
    pub zfs: CMatrix,
    pub hyperfine: CMatrix,
    pub quadrupole: CMatrix,
}

impl HamiltonianTerms {
    /// The one accumulation order used for every total.
    pub fn sum(&self) -> CMatrix {
        let mut total = self.electron_zeeman.clone();
        total += &self.nuclear_zeeman;
        total += &self.zfs;
        total += &self.hyperfine;
        total += &self.quadrupole;
        total
    }

    pub fn named(&self) -> [(&'static str, &CMatrix); 5] {
        [
            ("electron_zeeman", &self.electron_zeeman),
            ("nuclear_zeeman", &self.nuclear_zeeman),
            ("zfs", &self.zfs),
            ("hyperfine", &self.hyperfine),
            ("quadrupole", &self.quadrupole),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian {
    pub electron_spin: Spin,
    pub nuclear_spin: Spin,
    /// Applied field, T.
    pub field_t: [f64; 3],
    /// Total matrix, MHz.
    pub matrix: CMatrix,
    pub terms: HamiltonianTerms,
    /// Multiple of the identity omitted from this matrix relative to the full
    /// Hamiltonian, MHz. Zero for the full form; for the reduced diagonal form
    /// it is −D·S(S+1)/3 − P·I(I+1), so that full ≈ reduced + offset.
    pub scalar_offset_mhz: f64,
    pub warnings: Vec<SpinWarning>,
}

impl SpinHamiltonian {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn check_hermitian(&self) -> Result<(), SpinError> {
        for m in std::iter::once(&self.matrix).chain(self.terms.named().iter().map(|(_, m)| *m)) {
            let defect = hermiticity_defect(m);
            if defect > HERMITICITY_TOLERANCE {
                return Err(SpinError::NonHermitian { defect });
            }
        }
        Ok(())
    }
}

fn check_field(b: [f64; 3]) -> Result<(), SpinError> {
    if b.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SpinError::NonFiniteField)
    }
}

pub fn build_hamiltonian(params: &SpinSystemParams, b_t: [f64; 3]) -> Result<SpinHamiltonian, SpinError> {
    build_hamiltonian_with(params, b_t, &HamiltonianOptions::default())
}

pub fn build_hamiltonian_with(
    params: &SpinSystemParams,
    b_t: [f64; 3],
    options: &HamiltonianOptions,
) -> Result<SpinHamiltonian, SpinError> {
    check_field(b_t)?;
    let ops_s = spin_operators(params.electron_spin);
    let ops_i = spin_operators(params.nuclear_spin);
    let id_s = ops_s.identity();
    let id_i = ops_i.identity();

    let electron_zeeman = dot(&ops_s, b_t).scale(BOHR_MAGNETON_MHZ_PER_T * params.g_e).kronecker(&id_i);
    let nuclear_zeeman = id_s.kronecker(&dot(&ops_i, b_t).scale(NUCLEAR_MAGNETON_MHZ_PER_T * params.g_n));
    let zfs = match params.zfs {
        Some(z) => zfs_term(z.d_ghz(), z.epsilon, &ops_s, options.zfs_convention),
        None => CMatrix::zeros(ops_s.dim(), ops_s.dim()),
    }
    .kronecker(&id_i);
    let hyperfine = hyperfine_term(params.hyperfine_mhz, &ops_s, &ops_i);
    let (q, warning) = quadrupole_term(params.efg.vzz_v_per_a2, params.efg.eta, params.quadrupole_moment_barn, &ops_i);
    let quadrupole = id_s.kronecker(&q);

    let mut warnings = Vec::new();
    if let Some(w) = warning {
        if params.quadrupole_moment_barn * params.efg.vzz_v_per_a2 != 0.0 {
            log::warn!("{w}");
            warnings.push(w);
        }
    }

    let terms = HamiltonianTerms {
        electron_zeeman,
        nuclear_zeeman,
        zfs,
        hyperfine,
        quadrupole,
    };
    let h = SpinHamiltonian {
        electron_spin: params.electron_spin,
        nuclear_spin: params.nuclear_spin,
        field_t: b_t,
        matrix: terms.sum(),
        terms,
        scalar_offset_mhz: 0.0,
        warnings,
    };
    h.check_hermitian()?;
    Ok(h)
}

/// Diagonal high-field form:
/// μ_B g_e B_z S_z + μ_N g_n B_z I_z + D S_z² + Q_eff I_z² + A_zz S_z I_z,
/// with Q_eff = 3eQ_I V_zz/(4I(2I−1)).
pub fn effective_hamiltonian(params: &SpinSystemParams, bz_t: f64) -> Result<SpinHamiltonian, SpinError> {
    check_field([0.0, 0.0, bz_t])?;
    let ops_s = spin_operators(params.electron_spin);
    let ops_i = spin_operators(params.nuclear_spin);
    let id_s = ops_s.identity();
    let id_i = ops_i.identity();

    let d = params.zfs.map_or(0.0, |z| ghz_to_mhz(z.d_ghz()));
    let p = quadrupole_prefactor_mhz(params.efg.vzz_v_per_a2, params.quadrupole_moment_barn, params.nuclear_spin);
    let q_eff = 3.0 * p;

    let terms = HamiltonianTerms {
        electron_zeeman: ops_s.sz.scale(BOHR_MAGNETON_MHZ_PER_T * params.g_e * bz_t).kronecker(&id_i),
        nuclear_zeeman: id_s.kronecker(&ops_i.sz.scale(NUCLEAR_MAGNETON_MHZ_PER_T * params.g_n * bz_t)),
        zfs: (&ops_s.sz * &ops_s.sz).scale(d).kronecker(&id_i),
        hyperfine: ops_s.sz.kronecker(&ops_i.sz).scale(params.hyperfine_mhz[2]),
        quadrupole: id_s.kronecker(&(&ops_i.sz * &ops_i.sz).scale(q_eff)),
    };
    let offset = -d * params.electron_spin.casimir() / 3.0 - p * params.nuclear_spin.casimir();
    Ok(SpinHamiltonian {
        electron_spin: params.electron_spin,
        nuclear_spin: params.nuclear_spin,
        field_t: [0.0, 0.0, bz_t],
        matrix: terms.sum(),
        terms,
        scalar_offset_mhz: offset,
        warnings: Vec::new(),
    })
}
