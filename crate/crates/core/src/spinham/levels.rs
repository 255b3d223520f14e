use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DVector, SymmetricEigen};
use rayon::prelude::*;

use super::operators::{hermiticity_defect, CMatrix, Spin, C64};
use super::terms::{build_hamiltonian_with, effective_hamiltonian, HamiltonianOptions, SpinHamiltonian};
use super::{SpinError, HERMITICITY_TOLERANCE};
use crate::dataset::SpinSystemParams;
use crate::units::{ev_to_nm, mhz_to_ev};

/// Product-basis quantum numbers (m_S, m_I), stored doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinLabel {
    pub twice_ms: i32,
    pub twice_mi: i32,
}

impl SpinLabel {
    pub fn ms(self) -> f64 {
        self.twice_ms as f64 / 2.0
    }

    pub fn mi(self) -> f64 {
        self.twice_mi as f64 / 2.0
    }

    fn from_index(index: usize, nuclear: Spin, electron: Spin) -> Self {
        let dim_i = nuclear.dim();
        SpinLabel {
            twice_ms: electron.twice() as i32 - 2 * (index / dim_i) as i32,
            twice_mi: nuclear.twice() as i32 - 2 * (index % dim_i) as i32,
        }
    }
}

fn half_integer(twice: i32) -> String {
    if twice % 2 == 0 {
        format!("{}", twice / 2)
    } else {
        format!("{twice}/2")
    }
}

impl fmt::Display for SpinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", half_integer(self.twice_ms), half_integer(self.twice_mi))
    }
}

/// Eigen-decomposition of a spin Hamiltonian at one field.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagram {
    pub field_t: [f64; 3],
    pub electron_spin: Spin,
    pub nuclear_spin: Spin,
    /// Ascending, MHz.
    pub eigenvalues_mhz: Vec<f64>,
    /// Column k is the eigenvector of eigenvalue k.
    pub eigenvectors: CMatrix,
    /// Dominant product state of each eigenvector.
    pub labels: Vec<SpinLabel>,
    /// Trace of the diagonalized matrix, MHz.
    pub trace_mhz: f64,
}

impl LevelDiagram {
    pub fn len(&self) -> usize {
        self.eigenvalues_mhz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues_mhz.is_empty()
    }

    /// max |V†V − 1|
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.len();
        let g = self.eigenvectors.adjoint() * &self.eigenvectors - CMatrix::identity(n, n);
        super::max_abs(&g)
    }

    /// |Σλ − tr H| / max(1, |tr H|)
    pub fn trace_defect(&self) -> f64 {
        let sum: f64 = self.eigenvalues_mhz.iter().sum();
        (sum - self.trace_mhz).abs() / self.trace_mhz.abs().max(1.0)
    }
}

fn degeneracy_tolerance(values: &[f64]) -> f64 {
    1e-9 * values.iter().fold(1.0f64, |a, v| a.max(v.abs()))
}

/// Deterministic basis for one degenerate cluster: repeatedly take the
/// product state with the largest remaining projection onto the subspace.
fn product_basis_gauge(cluster: &[DVector<C64>]) -> Vec<DVector<C64>> {
    let n = cluster[0].len();
    let k = cluster.len();
    if k == 1 {
        return cluster.to_vec();
    }
    let mut chosen: Vec<DVector<C64>> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    for _ in 0..k {
        let mut best: Option<(usize, f64, DVector<C64>)> = None;
        for j in (0..n).filter(|&j| !used[j]) {
            // Projection of e_j onto the subspace, minus what is already spanned.
            let mut r = DVector::<C64>::zeros(n);
            for v in cluster {
                r += v * v[j].conj();
            }
            for u in &chosen {
                r -= u * u[j].conj();
            }
            let norm = r.norm();
            if best.as_ref().is_none_or(|(_, b, _)| norm > b * (1.0 + 1e-9) + 1e-12) {
                best = Some((j, norm, r));
            }
        }
        let (j, norm, r) = best.expect("subspace dimension does not exceed basis size");
        used[j] = true;
        chosen.push(r.unscale(norm));
    }
    chosen
}

/// Rotates the vector so its largest component (lowest index on ties) is
/// real and positive.
fn fix_phase(v: &mut DVector<C64>) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).copied() {
        let phase = z.conj() / z.norm();
        for c in v.iter_mut() {
            *c *= phase;
        }
    }
}

fn dominant_index(v: &DVector<C64>) -> usize {
    let mut best = 0;
    let mut best_w = -1.0;
    for (j, z) in v.iter().enumerate() {
        let w = z.norm_sqr();
        if w > best_w * (1.0 + 1e-9) + 1e-15 {
            best = j;
            best_w = w;
        }
    }
    best
}

/// Diagonalizes a Hermitian matrix on the (2S+1)(2I+1) product space.
pub fn diagonalize_matrix(matrix: &CMatrix, electron: Spin, nuclear: Spin) -> Result<LevelDiagram, SpinError> {
    let n = electron.dim() * nuclear.dim();
    if matrix.nrows() != n || matrix.ncols() != n {
        return Err(SpinError::DimensionMismatch {
            expected: n,
            found: matrix.nrows(),
        });
    }
    let defect = hermiticity_defect(matrix);
    if !(defect <= HERMITICITY_TOLERANCE) {
        return Err(SpinError::NonHermitian { defect });
    }
    let trace_mhz = matrix.diagonal().iter().map(|z| z.re).sum();
    let eig = SymmetricEigen::new(matrix.clone());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let tol = degeneracy_tolerance(&values);

    let mut levels: Vec<(f64, DVector<C64>, SpinLabel)> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= tol {
            end += 1;
        }
        let cluster: Vec<DVector<C64>> = order[start..end].iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
        let mut block: Vec<(f64, DVector<C64>, SpinLabel)> = product_basis_gauge(&cluster)
            .into_iter()
            .zip(&values[start..end])
            .map(|(mut v, &e)| {
                fix_phase(&mut v);
                let label = SpinLabel::from_index(dominant_index(&v), nuclear, electron);
                (e, v, label)
            })
            .collect();
        if block.len() > 1 {
            // Within a degenerate cluster, order by label in basis order
            // (descending m_S, then m_I) and share one value sequence so the
            // eigenvalues stay ascending.
            block.sort_by_key(|b| std::cmp::Reverse(b.2));
            for (slot, &e) in block.iter_mut().zip(&values[start..end]) {
                slot.0 = e;
            }
        }
        levels.extend(block);
        start = end;
    }

    let eigenvectors = CMatrix::from_fn(n, n, |i, k| levels[k].1[i]);
    Ok(LevelDiagram {
        field_t: [0.0; 3],
        electron_spin: electron,
        nuclear_spin: nuclear,
        eigenvalues_mhz: levels.iter().map(|l| l.0).collect(),
        eigenvectors,
        labels: levels.iter().map(|l| l.2).collect(),
        trace_mhz,
    })
}

pub fn diagonalize(h: &SpinHamiltonian) -> Result<LevelDiagram, SpinError> {
    let mut d = diagonalize_matrix(&h.matrix, h.electron_spin, h.nuclear_spin)?;
    d.field_t = h.field_t;
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    /// Use the reduced diagonal Hamiltonian with the field component along z.
    pub effective: bool,
    pub hamiltonian: HamiltonianOptions,
}

/// Diagrams at each field point plus the adiabatic branch assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeemanSweep {
    pub axis: [f64; 3],
    pub fields_t: Vec<f64>,
    pub diagrams: Vec<LevelDiagram>,
    /// branches[b][t] is the eigenvalue index of branch b at field point t.
    /// Branch b starts at level b of the first diagram.
    pub branches: Vec<Vec<usize>>,
}

impl ZeemanSweep {
    pub fn branch_energies_mhz(&self, branch: usize) -> Vec<f64> {
        self.branches[branch]
            .iter()
            .zip(&self.diagrams)
            .map(|(&k, d)| d.eigenvalues_mhz[k])
            .collect()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }
}

/// Greedy maximum-overlap matching of the previous branch states onto the
/// new eigenvectors.
fn connect(prev: &CMatrix, prev_cols: &[usize], next: &CMatrix) -> Vec<usize> {
    let n = prev_cols.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (b, &pc) in prev_cols.iter().enumerate() {
        let u = prev.column(pc);
        for j in 0..n {
            pairs.push((u.dotc(&next.column(j)).norm_sqr(), b, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, b, j) in pairs {
        if assigned[b] == usize::MAX && !taken[j] {
            assigned[b] = j;
            taken[j] = true;
        }
    }
    assigned
}

/// Level diagrams along B = b·axis for each b in `fields_t` (sorted ascending).
pub fn zeeman_sweep(
    params: &SpinSystemParams,
    axis: [f64; 3],
    fields_t: &[f64],
    options: &SweepOptions,
) -> Result<ZeemanSweep, SpinError> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(SpinError::InvalidAxis);
    }
    let axis = axis.map(|a| a / norm);
    if fields_t.iter().any(|b| !b.is_finite()) || fields_t.windows(2).any(|w| w[1] < w[0]) {
        return Err(SpinError::UnsortedFields);
    }

    let diagrams: Vec<LevelDiagram> = fields_t
        .par_iter()
        .map(|&b| {
            let field = axis.map(|a| a * b);
            let h = if options.effective {
                effective_hamiltonian(params, field[2])?
            } else {
                build_hamiltonian_with(params, field, &options.hamiltonian)?
            };
            let mut d = diagonalize(&h)?;
            d.field_t = field;
            Ok(d)
        })
        .collect::<Result<_, SpinError>>()?;

    let n = params.electron_spin.dim() * params.nuclear_spin.dim();
    let mut branches: Vec<Vec<usize>> = (0..n).map(|b| Vec::from([b])).collect();
    if diagrams.is_empty() {
        branches.iter_mut().for_each(Vec::clear);
    }
    for t in 1..diagrams.len() {
        let prev_cols: Vec<usize> = branches.iter().map(|br| br[t - 1]).collect();
        let next = connect(&diagrams[t - 1].eigenvectors, &prev_cols, &diagrams[t].eigenvectors);
        for (br, j) in branches.iter_mut().zip(next) {
            br.push(j);
        }
    }

    Ok(ZeemanSweep {
        axis,
        fields_t: fields_t.to_vec(),
        diagrams,
        branches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransitionFilter {
    /// Only pairs whose dominant (m_S, m_I) labels coincide.
    #[default]
    SpinConserving,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalLine {
    pub energy_ev: f64,
    pub wavelength_nm: f64,
    pub lower_index: usize,
    pub upper_index: usize,
    pub lower: SpinLabel,
    pub upper: SpinLabel,
}

/// Optical lines zpl + (E_upper − E_lower) between ground and excited
/// sublevels, ordered by lower then upper index.
pub fn transition_table(
    ground: &LevelDiagram,
    excited: &LevelDiagram,
    zpl_ev: f64,
    filter: TransitionFilter,
) -> Vec<OpticalLine> {
    let mut lines = Vec::new();
    for (li, (&el, &ll)) in ground.eigenvalues_mhz.iter().zip(&ground.labels).enumerate() {
        for (ui, (&eu, &lu)) in excited.eigenvalues_mhz.iter().zip(&excited.labels).enumerate() {
            if filter == TransitionFilter::SpinConserving && ll != lu {
                continue;
            }
            let energy_ev = zpl_ev + mhz_to_ev(eu - el);
            lines.push(OpticalLine {
                energy_ev,
                wavelength_nm: ev_to_nm(energy_ev),
                lower_index: li,
                upper_index: ui,
                lower: ll,
                upper: lu,
            });
        }
    }
    lines.sort_by(|a, b| match a.lower_index.cmp(&b.lower_index) {
        Ordering::Equal => a.upper_index.cmp(&b.upper_index),
        o => o,
    });
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FieldGradient, ZeroFieldSplitting};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bare(s: f64, i: f64) -> SpinSystemParams {
        SpinSystemParams {
            electron_spin: Spin::new(s).unwrap(),
            nuclear_spin: Spin::new(i).unwrap(),
            g_e: 2.0023,
            g_n: 0.0,
            zfs: None,
            hyperfine_mhz: [0.0; 3],
            efg: FieldGradient {
                vzz_v_per_a2: 0.0,
                eta: 0.0,
            },
            quadrupole_moment_barn: 0.0,
        }
    }

    #[test]
    fn diagonal_input() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0), c(-1.0), c(2.0)]));
        let d = diagonalize_matrix(&m, Spin::ONE, Spin::ZERO).unwrap();
        assert_eq!(d.eigenvalues_mhz, vec![-1.0, 2.0, 3.0]);
        assert_eq!(d.labels[0], SpinLabel { twice_ms: 0, twice_mi: 0 });
        assert_eq!(d.labels[2], SpinLabel { twice_ms: 2, twice_mi: 0 });
        assert!((d.eigenvectors[(1, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let d = diagonalize_matrix(&m, Spin::HALF, Spin::ZERO).unwrap();
        assert!((d.eigenvalues_mhz[0] + 1.0).abs() < 1e-14);
        assert!((d.eigenvalues_mhz[1] - 1.0).abs() < 1e-14);
        assert!(d.unitarity_defect() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_identity_gauge() {
        let d = diagonalize_matrix(&CMatrix::zeros(6, 6), Spin::ONE, Spin::HALF).unwrap();
        assert!((d.eigenvectors.clone() - CMatrix::identity(6, 6)).iter().all(|z| z.norm() < 1e-12));
        let mut sorted = d.labels.clone();
        sorted.sort_by(|a, b| b.cmp(a));
        assert_eq!(d.labels, sorted);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(
            diagonalize_matrix(&m, Spin::HALF, Spin::ZERO),
            Err(SpinError::NonHermitian { .. })
        ));
        assert!(matches!(
            diagonalize_matrix(&m, Spin::ONE, Spin::ZERO),
            Err(SpinError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn doublet_sweep_is_linear() {
        let p = bare(0.5, 0.0);
        let fields: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let s = zeeman_sweep(&p, [0.0, 0.0, 1.0], &fields, &SweepOptions::default()).unwrap();
        let slope = 0.5 * 2.0023 * crate::units::BOHR_MAGNETON_MHZ_PER_T;
        for (t, d) in s.diagrams.iter().enumerate() {
            assert!((d.eigenvalues_mhz[0] + slope * fields[t]).abs() < 1e-9);
            assert!((d.eigenvalues_mhz[1] - slope * fields[t]).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let p = bare(0.5, 0.0);
        let o = SweepOptions::default();
        assert_eq!(zeeman_sweep(&p, [0.0; 3], &[0.0], &o).unwrap_err(), SpinError::InvalidAxis);
        assert_eq!(zeeman_sweep(&p, [0.0, 0.0, 1.0], &[1.0, 0.0], &o).unwrap_err(), SpinError::UnsortedFields);
    }

    #[test]
    fn triplet_branches_cross_adiabatically() {
        // m_s = -1 comes down through m_s = 0 near B = D/(g μ_B).
        let mut p = bare(1.0, 0.0);
        p.zfs = Some(ZeroFieldSplitting {
            dzz_ghz: 1.0,
            epsilon: 0.0,
        });
        let fields: Vec<f64> = (0..=40).map(|k| k as f64 * 0.005).collect();
        let s = zeeman_sweep(&p, [0.0, 0.0, 1.0], &fields, &SweepOptions::default()).unwrap();
        for b in 0..3 {
            let t0 = s.branches[b][0];
            let label = s.diagrams[0].labels[t0];
            for (t, &k) in s.branches[b].iter().enumerate() {
                assert_eq!(s.diagrams[t].labels[k].twice_ms, label.twice_ms);
            }
        }
    }

    #[test]
    fn flat_structure_gives_single_zpl_line() {
        let d = diagonalize_matrix(&CMatrix::zeros(1, 1), Spin::ZERO, Spin::ZERO).unwrap();
        let lines = transition_table(&d, &d, 1.04427, TransitionFilter::All);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].energy_ev, 1.04427);
        assert!((lines[0].wavelength_nm - 1187.2).abs() / 1187.2 < 1e-3);
    }
}
