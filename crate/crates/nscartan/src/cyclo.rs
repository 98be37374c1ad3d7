//! Exact arithmetic in the `p`-th cyclotomic integers and field.
//!
//! Elements are coefficient vectors of length `p - 1` on the power basis
//! `1, ζ, …, ζ^{p-2}` of `Q(ζ_p)`; the reduction rule is
//! `ζ^{p-1} = -(1 + ζ + … + ζ^{p-2})` (the minimal polynomial is the `p`-th
//! cyclotomic polynomial). The representation on this basis is unique, so
//! equality and the is-constant test are exact coefficient comparisons.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An element of `Z[ζ_p]` with arbitrary-precision integer coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycloInt {
    p: u32,
    coeffs: Vec<BigInt>,
}

impl CycloInt {
    pub fn zero(p: u32) -> CycloInt {
        CycloInt {
            p,
            coeffs: vec![BigInt::zero(); (p - 1) as usize],
        }
    }

    pub fn one(p: u32) -> CycloInt {
        Self::from_integer(p, BigInt::one())
    }

    pub fn from_integer(p: u32, n: BigInt) -> CycloInt {
        let mut out = Self::zero(p);
        out.coeffs[0] = n;
        out
    }

    /// `ζ^j` (any `j`; reduced mod `p`, with the wrap `ζ^{p-1}` expanded).
    pub fn zeta_pow(p: u32, j: u32) -> CycloInt {
        let mut out = Self::zero(p);
        let j = j % p;
        if j == p - 1 {
            for c in &mut out.coeffs {
                *c = -BigInt::one();
            }
        } else {
            out.coeffs[j as usize] = BigInt::one();
        }
        out
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// `Some(n)` iff the element is the rational integer `n`.
    pub fn as_integer(&self) -> Option<&BigInt> {
        self.coeffs[1..]
            .iter()
            .all(|c| c.is_zero())
            .then(|| &self.coeffs[0])
    }

    /// `self += scale · ζ^j · other`, the workhorse of series products.
    pub fn add_assign_scaled_zeta(&mut self, other: &CycloInt, j: u32, scale: &BigInt) {
        debug_assert_eq!(self.p, other.p);
        let p = self.p;
        if scale.is_zero() {
            return;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let v = c * scale;
            let t = (i as u32 + j) % p;
            if t == p - 1 {
                for s in &mut self.coeffs {
                    *s -= &v;
                }
            } else {
                self.coeffs[t as usize] += v;
            }
        }
    }

    pub fn add(&self, rhs: &CycloInt) -> CycloInt {
        debug_assert_eq!(self.p, rhs.p);
        CycloInt {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn neg(&self) -> CycloInt {
        CycloInt {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, rhs: &CycloInt) -> CycloInt {
        debug_assert_eq!(self.p, rhs.p);
        let mut out = Self::zero(self.p);
        for (j, c) in rhs.coeffs.iter().enumerate() {
            out.add_assign_scaled_zeta(self, j as u32, c);
        }
        out
    }

    /// Evaluate at `ζ = e(k/p)` (the `k`-th complex embedding).
    pub fn embed(&self, k: u32) -> Complex64 {
        let p = self.p as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let angle = 2.0 * std::f64::consts::PI * (i as u32 * k % self.p) as f64 / p;
            let coeff = c.to_f64().expect("coefficient fits in f64 range");
            acc += Complex64::from_polar(1.0, angle) * coeff;
        }
        acc
    }

    /// Largest coefficient magnitude (growth diagnostic for series products).
    pub fn max_abs_coeff(&self) -> BigInt {
        self.coeffs
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }
}

/// An element of the cyclotomic field `Q(ζ_p)` with rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycloElem {
    p: u32,
    coeffs: Vec<BigRational>,
}

impl CycloElem {
    pub fn new(p: u32, coeffs: Vec<BigRational>) -> CycloElem {
        assert_eq!(coeffs.len(), (p - 1) as usize, "need p-1 coordinates");
        CycloElem { p, coeffs }
    }

    pub fn from_int(x: &CycloInt) -> CycloElem {
        CycloElem {
            p: x.p,
            coeffs: x
                .coeffs
                .iter()
                .map(|c| BigRational::from_integer(c.clone()))
                .collect(),
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Field norm `N_{Q(ζ)/Q}`, as the determinant of the multiplication-by-
    /// `self` matrix on the power basis. Cross-checks magnitudes exactly,
    /// e.g. `N(1 - ζ) = p`.
    pub fn norm(&self) -> BigRational {
        let n = (self.p - 1) as usize;
        // column j = coordinates of self · ζ^j
        let mut m = vec![vec![BigRational::zero(); n]; n];
        for j in 0..n {
            for (i, c) in self.coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let t = (i + j) % self.p as usize;
                if t == n {
                    for row in m.iter_mut() {
                        row[j] -= c;
                    }
                } else {
                    m[t][j] += c;
                }
            }
        }
        determinant(m)
    }
}

/// Determinant by Gaussian elimination with exact rational arithmetic.
fn determinant(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col].clone();
        let inv = m[col][col].recip();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] * &inv;
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_powers_cycle_with_period_p() {
        let p = 7;
        let z = CycloInt::zeta_pow(p, 1);
        let mut acc = CycloInt::one(p);
        for _ in 0..p {
            acc = acc.mul(&z);
        }
        assert_eq!(acc, CycloInt::one(p));
        assert_eq!(CycloInt::zeta_pow(p, p), CycloInt::one(p));
        assert_eq!(
            CycloInt::zeta_pow(p, 3).mul(&CycloInt::zeta_pow(p, 5)),
            CycloInt::zeta_pow(p, 1)
        );
    }

    #[test]
    fn sum_of_all_zeta_powers_vanishes() {
        let p = 11;
        let mut acc = CycloInt::zero(p);
        for j in 0..p {
            acc = acc.add(&CycloInt::zeta_pow(p, j));
        }
        assert!(acc.is_zero());
    }

    #[test]
    fn product_of_one_minus_zeta_powers_is_p() {
        for p in [5u32, 7, 11, 13] {
            let mut acc = CycloInt::one(p);
            for b in 1..p {
                let factor = CycloInt::one(p).add(&CycloInt::zeta_pow(p, b).neg());
                acc = acc.mul(&factor);
            }
            assert_eq!(acc.as_integer(), Some(&BigInt::from(p)), "p = {p}");
        }
    }

    #[test]
    fn norm_of_one_minus_zeta_is_p() {
        for p in [5u32, 7, 11, 13, 23] {
            let x = CycloInt::one(p).add(&CycloInt::zeta_pow(p, 1).neg());
            let norm = CycloElem::from_int(&x).norm();
            assert_eq!(norm, BigRational::from_integer(BigInt::from(p)), "p = {p}");
        }
    }

    #[test]
    fn norm_is_multiplicative() {
        let p = 7;
        let x = CycloInt::one(p).add(&CycloInt::zeta_pow(p, 2).neg());
        let y = CycloInt::zeta_pow(p, 3).add(&CycloInt::from_integer(p, BigInt::from(2)));
        let nx = CycloElem::from_int(&x).norm();
        let ny = CycloElem::from_int(&y).norm();
        let nxy = CycloElem::from_int(&x.mul(&y)).norm();
        assert_eq!(nx * ny, nxy);
    }

    #[test]
    fn embedding_is_a_ring_homomorphism() {
        let p = 11;
        let x = CycloInt::zeta_pow(p, 4).add(&CycloInt::from_integer(p, BigInt::from(-3)));
        let y = CycloInt::zeta_pow(p, 9).add(&CycloInt::one(p));
        let lhs = x.mul(&y).embed(1);
        let rhs = x.embed(1) * y.embed(1);
        assert!((lhs - rhs).norm() < 1e-9, "{lhs} vs {rhs}");
        // wrap case: ζ^6 · ζ^5 = 1 under the reduction rule
        let z = CycloInt::zeta_pow(p, 6).mul(&CycloInt::zeta_pow(p, 5));
        assert_eq!(z, CycloInt::one(p));
    }

    #[test]
    fn scaled_rotation_matches_explicit_multiplication() {
        let p = 13;
        let x = CycloInt::zeta_pow(p, 7).add(&CycloInt::from_integer(p, BigInt::from(5)));
        let mut acc = CycloInt::zero(p);
        acc.add_assign_scaled_zeta(&x, 9, &BigInt::from(-4));
        let expect = x
            .mul(&CycloInt::zeta_pow(p, 9))
            .mul(&CycloInt::from_integer(p, BigInt::from(-4)));
        assert_eq!(acc, expect);
    }
}
