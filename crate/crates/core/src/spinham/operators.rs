use std::fmt;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SpinError;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// A non-negative half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const ZERO: Spin = Spin { twice: 0 };
    pub const HALF: Spin = Spin { twice: 1 };
    pub const ONE: Spin = Spin { twice: 2 };

    pub fn from_twice(twice: u32) -> Self {
        Self { twice }
    }

    pub fn new(value: f64) -> Result<Self, SpinError> {
        let twice = 2.0 * value;
        if !value.is_finite() || value < 0.0 || (twice - twice.round()).abs() > 1e-9 || twice > 64.0 {
            return Err(SpinError::InvalidSpin(value));
        }
        Ok(Self {
            twice: twice.round() as u32,
        })
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// s(s+1)
    pub fn casimir(self) -> f64 {
        let s = self.value();
        s * (s + 1.0)
    }

    /// Projection quantum numbers in basis order (descending), as 2m.
    pub fn twice_projections(self) -> impl Iterator<Item = i32> {
        let t = self.twice as i32;
        (0..=t).map(move |k| t - 2 * k)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl Serialize for Spin {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Spin::new(v).map_err(serde::de::Error::custom)
    }
}

/// Angular-momentum matrices for one spin in the descending-m basis.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub spin: Spin,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
}

impl SpinOperatorSet {
    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim())
    }
}

pub fn spin_operators(spin: Spin) -> SpinOperatorSet {
    let n = spin.dim();
    let s = spin.value();
    let ms: Vec<f64> = spin.twice_projections().map(|t| t as f64 / 2.0).collect();

    let sz = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(ms[i], 0.0) } else { C64::new(0.0, 0.0) });
    // <m+1|S+|m> = sqrt(s(s+1) - m(m+1)); row i-1 holds m+1 for column i.
    let mut s_plus = CMatrix::zeros(n, n);
    for i in 1..n {
        let m = ms[i];
        s_plus[(i - 1, i)] = C64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let s_minus = s_plus.adjoint();
    let sx = (&s_plus + &s_minus).scale(0.5);
    let sy = (&s_plus - &s_minus) * C64::new(0.0, -0.5);
    SpinOperatorSet {
        spin,
        sx,
        sy,
        sz,
        s_plus,
        s_minus,
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// max |H - H†| / max(1, max |H|)
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let diff = m - m.adjoint();
    max_abs(&diff) / max_abs(m).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let ops = spin_operators(Spin::HALF);
        assert_eq!(ops.sz[(0, 0)], c(0.5));
        assert_eq!(ops.sz[(1, 1)], c(-0.5));
        assert_eq!(ops.sx[(0, 1)], c(0.5));
        assert_eq!(ops.sy[(0, 1)], C64::new(0.0, -0.5));
    }

    #[test]
    fn spin_one_ladder() {
        let ops = spin_operators(Spin::ONE);
        assert_eq!(ops.sz[(0, 0)], c(1.0));
        assert_eq!(ops.sz[(1, 1)], c(0.0));
        assert_eq!(ops.sz[(2, 2)], c(-1.0));
        let r2 = 2f64.sqrt();
        assert!((ops.s_plus[(0, 1)].re - r2).abs() < 1e-15);
        assert!((ops.s_plus[(1, 2)].re - r2).abs() < 1e-15);
        assert_eq!(ops.s_plus[(1, 0)], c(0.0));
    }

    #[test]
    fn spin_parsing() {
        assert_eq!(Spin::new(2.5).unwrap().twice(), 5);
        assert_eq!(Spin::new(0.0).unwrap().dim(), 1);
        assert!(Spin::new(0.3).is_err());
        assert!(Spin::new(-1.0).is_err());
        assert_eq!(Spin::new(1.5).unwrap().to_string(), "3/2");
        assert_eq!(Spin::new(1.0).unwrap().to_string(), "1");
    }

    #[test]
    fn algebra_for_s_five_halves() {
        let ops = spin_operators(Spin::new(2.5).unwrap());
        let i = C64::new(0.0, 1.0);
        let comm = &ops.sx * &ops.sy - &ops.sy * &ops.sx - &ops.sz * i;
        assert!(max_abs(&comm) < 1e-12);
        let cas = &ops.sx * &ops.sx + &ops.sy * &ops.sy + &ops.sz * &ops.sz
            - ops.identity() * c(ops.spin.casimir());
        assert!(max_abs(&cas) < 1e-12);
    }
}
