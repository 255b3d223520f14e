//! Stark-shift fitting and the effective internal field estimate.
//!
//! The model is ΔE = −Δμ E/ε_s − Δα E²/(2ε_s²) with ΔE = zpl − zpl0.

use thiserror::Error;

use crate::dataset::StarkSeries;
use crate::units::{volts_per_angstrom_to_gv_per_cm, COULOMB_EV_ANGSTROM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StarkError {
    #[error("design matrix is singular: field values do not determine both parameters")]
    SingularDesign,
    #[error("epsilon_s must be >= 1 and finite, got {0}")]
    InvalidDielectric(f64),
    #[error("z_scale must be > 0 and finite, got {0}")]
    InvalidLength(f64),
    #[error("shielding must be >= 1 and finite, got {0}")]
    InvalidShielding(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkFit {
    /// Δμ, e·Å.
    pub delta_mu: f64,
    /// Δα, Å²·e/V.
    pub delta_alpha: f64,
    /// sqrt(RSS/n), eV.
    pub residual_rms: f64,
    /// Parameter covariance σ²(XᵀX)⁻¹ with σ² = RSS/(n−2).
    pub covariance: [[f64; 2]; 2],
    pub n_points: usize,
}

/// Solves the 2×2 system with full pivoting on the column-scaled matrix.
fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    // Pivot: largest |a_ij|.
    let mut best = (0, 0);
    for i in 0..2 {
        for j in 0..2 {
            if a[i][j].abs() > a[best.0][best.1].abs() {
                best = (i, j);
            }
        }
    }
    let (p, q) = best;
    let piv = a[p][q];
    if piv == 0.0 || !piv.is_finite() {
        return None;
    }
    let (r, s) = (1 - p, 1 - q);
    let factor = a[r][q] / piv;
    let a_rs = a[r][s] - factor * a[p][s];
    let b_r = b[r] - factor * b[p];
    let scale = a[p][s].abs().max(a[r][s].abs()).max(f64::MIN_POSITIVE);
    if a_rs.abs() <= 1e-13 * scale {
        return None;
    }
    let mut x = [0.0; 2];
    x[s] = b_r / a_rs;
    x[q] = (b[p] - a[p][s] * x[s]) / piv;
    Some(x)
}

fn mat_vec(a: &[[f64; 2]; 2], x: &[f64; 2]) -> [f64; 2] {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

/// Least-squares fit of (Δμ, Δα) to the series.
pub fn fit_stark(series: &StarkSeries, epsilon_s: f64) -> Result<StarkFit, StarkError> {
    if !(epsilon_s >= 1.0 && epsilon_s.is_finite()) {
        return Err(StarkError::InvalidDielectric(epsilon_s));
    }
    let n = series.points.len();
    let rows: Vec<([f64; 2], f64)> = series
        .points
        .iter()
        .map(|p| {
            let e = p.field_v_per_a;
            ([-e / epsilon_s, -e * e / (2.0 * epsilon_s * epsilon_s)], p.zpl_ev - series.zpl0_ev)
        })
        .collect();

    // Column scaling keeps the normal matrix well conditioned when the two
    // basis functions differ by orders of magnitude.
    let mut col = [0.0f64; 2];
    for (x, _) in &rows {
        for j in 0..2 {
            col[j] = col[j].max(x[j].abs());
        }
    }
    if col.contains(&0.0) {
        return Err(StarkError::SingularDesign);
    }
    let mut ata = [[0.0; 2]; 2];
    let mut atb = [0.0; 2];
    for (x, y) in &rows {
        let xs = [x[0] / col[0], x[1] / col[1]];
        for i in 0..2 {
            atb[i] += xs[i] * y;
            for j in 0..2 {
                ata[i][j] += xs[i] * xs[j];
            }
        }
    }
    let mut beta = solve2(ata, atb).ok_or(StarkError::SingularDesign)?;
    // One step of iterative refinement.
    let r = mat_vec(&ata, &beta);
    if let Some(d) = solve2(ata, [atb[0] - r[0], atb[1] - r[1]]) {
        beta = [beta[0] + d[0], beta[1] + d[1]];
    }

    let params = [beta[0] / col[0], beta[1] / col[1]];
    let rss: f64 = rows
        .iter()
        .map(|(x, y)| {
            let res = y - (x[0] * params[0] + x[1] * params[1]);
            res * res
        })
        .sum();

    // (XᵀX)⁻¹ in physical units from the scaled inverse.
    let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
    let inv_scaled = [[ata[1][1] / det, -ata[0][1] / det], [-ata[1][0] / det, ata[0][0] / det]];
    let sigma2 = if n > 2 { rss / (n - 2) as f64 } else { 0.0 };
    let mut covariance = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            covariance[i][j] = sigma2 * inv_scaled[i][j] / (col[i] * col[j]);
        }
    }
    let off = 0.5 * (covariance[0][1] + covariance[1][0]);
    covariance[0][1] = off;
    covariance[1][0] = off;

    Ok(StarkFit {
        delta_mu: params[0],
        delta_alpha: params[1],
        residual_rms: (rss / n as f64).sqrt(),
        covariance,
        n_points: n,
    })
}

/// Model shift ΔE at field `e_v_per_a`, eV.
pub fn stark_shift(delta_mu: f64, delta_alpha: f64, epsilon_s: f64, e_v_per_a: f64) -> f64 {
    -delta_mu * e_v_per_a / epsilon_s - delta_alpha * e_v_per_a * e_v_per_a / (2.0 * epsilon_s * epsilon_s)
}

pub const DEFAULT_Z_SCALE_A: f64 = 1.0;
pub const DEFAULT_SHIELDING: f64 = 1.0;

/// (e/4πε₀)·Δμ/z³ in GV/cm, divided by `shielding`.
pub fn effective_field(delta_mu: f64, z_scale_a: f64, shielding: f64) -> Result<f64, StarkError> {
    if !(z_scale_a > 0.0 && z_scale_a.is_finite()) {
        return Err(StarkError::InvalidLength(z_scale_a));
    }
    if !(shielding >= 1.0 && shielding.is_finite()) {
        return Err(StarkError::InvalidShielding(shielding));
    }
    let v_per_a = COULOMB_EV_ANGSTROM * delta_mu / z_scale_a.powi(3);
    Ok(volts_per_angstrom_to_gv_per_cm(v_per_a) / shielding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::StarkPoint;

    fn series(mu: f64, alpha: f64, eps: f64, fields: &[f64]) -> StarkSeries {
        let zpl0 = 2.3262;
        let points = fields
            .iter()
            .map(|&e| StarkPoint {
                field_v_per_a: e,
                zpl_ev: zpl0 + stark_shift(mu, alpha, eps, e),
            })
            .collect();
        StarkSeries::new("t", zpl0, points).unwrap()
    }

    #[test]
    fn recovers_exact_parameters() {
        let s = series(1.23, 0.12, 5.7, &[-0.02, -0.01, 0.01, 0.02, 0.03]);
        let f = fit_stark(&s, 5.7).unwrap();
        assert!((f.delta_mu - 1.23).abs() < 1e-10);
        assert!((f.delta_alpha - 0.12).abs() < 1e-10);
        assert!(f.residual_rms < 1e-12);
    }

    #[test]
    fn zero_shift_gives_zero() {
        let s = series(0.0, 0.0, 5.7, &[0.1, 0.2, 0.3]);
        let f = fit_stark(&s, 5.7).unwrap();
        assert_eq!((f.delta_mu, f.delta_alpha, f.residual_rms), (0.0, 0.0, 0.0));
    }

    #[test]
    fn singular_designs() {
        // E² underflows to zero, leaving the quadratic column empty.
        let s = series(1.0, 1.0, 2.0, &[0.0, 1e-300, -1e-300]);
        assert!(fit_stark(&s, 2.0).is_err());
        assert_eq!(fit_stark(&series(1.0, 0.0, 2.0, &[0.1, 0.2, 0.3]), 0.5).unwrap_err(), StarkError::InvalidDielectric(0.5));
    }

    #[test]
    fn effective_field_values() {
        assert!((effective_field(1.23, 1.0, 1.0).unwrap() - 1.7712).abs() < 1e-3);
        assert!((effective_field(0.02, 1.0, 1.0).unwrap() - 0.0288).abs() < 1e-4);
        assert_eq!(effective_field(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!((effective_field(1.23, 1.0, 100.0).unwrap() - 0.017712).abs() < 1e-5);
        assert!(effective_field(1.0, 0.0, 1.0).is_err());
        assert!(effective_field(1.0, 1.0, 0.5).is_err());
    }
}
