//! Prime-field and quadratic-extension arithmetic.
//!
//! A [`PrimeContext`] fixes an odd prime `p` together with the smallest
//! primitive root `eps` modulo `p`, and models `F_{p^2} = F_p(sqrt(eps))`
//! as pairs `x + y*sqrt(eps)`. Everything downstream (subgroup enumeration,
//! cusp combinatorics, unit orbits) works relative to one context.

use thiserror::Error;

/// Errors for context construction and field preconditions.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FpError {
    #[error("p = {0} is not prime")]
    NotPrime(u32),
    #[error("p = {0} is outside the supported range 5 <= p < 2^15")]
    OutOfRange(u32),
}

/// Element of `F_{p^2}` written as `x + y*sqrt(eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp2 {
    pub x: u32,
    pub y: u32,
}

impl Fp2 {
    pub const fn new(x: u32, y: u32) -> Self {
        Fp2 { x, y }
    }

    pub const ONE: Fp2 = Fp2 { x: 1, y: 0 };

    pub fn is_zero(&self) -> bool {
        self.x == 0 && self.y == 0
    }
}

/// Fixed prime `p` with the arithmetic data shared by all modules:
/// the smallest primitive root `eps`, a generator of `F_{p^2}^x`, and the
/// distinct prime factors of `p^2 - 1` (used for order tests).
#[derive(Debug, Clone)]
pub struct PrimeContext {
    p: u32,
    eps: u32,
    fp2_gen: Fp2,
    factors_p2m1: Vec<u64>,
}

/// Deterministic trial-division primality test (sufficient for `p < 2^15`).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime factors of `n` by trial division.
pub fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl PrimeContext {
    /// Build the context for a prime `5 <= p < 2^15`.
    ///
    /// `eps` is chosen as the smallest primitive root mod `p` (so it is a
    /// quadratic nonresidue and `F_p(sqrt(eps))` is a field), and the
    /// `F_{p^2}^x` generator is the lexicographically first pair `(x, y)`
    /// of full order `p^2 - 1`.
    pub fn new(p: u32) -> Result<Self, FpError> {
        if !(5..(1 << 15)).contains(&p) {
            return Err(if is_prime(p as u64) {
                FpError::OutOfRange(p)
            } else {
                FpError::NotPrime(p)
            });
        }
        if !is_prime(p as u64) {
            return Err(FpError::NotPrime(p));
        }
        let eps = smallest_primitive_root(p);
        let factors_p2m1 = distinct_prime_factors((p as u64) * (p as u64) - 1);
        let mut ctx = PrimeContext {
            p,
            eps,
            fp2_gen: Fp2::ONE,
            factors_p2m1,
        };
        ctx.fp2_gen = ctx.find_fp2_generator();
        Ok(ctx)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn eps(&self) -> u32 {
        self.eps
    }

    pub fn fp2_gen(&self) -> Fp2 {
        self.fp2_gen
    }

    // ----- F_p arithmetic -----

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(&self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1u32;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of `a != 0`.
    pub fn inv(&self, a: u32) -> u32 {
        debug_assert!(a % self.p != 0, "inverse of zero");
        self.pow(a, self.p as u64 - 2)
    }

    // ----- F_{p^2} arithmetic -----

    pub fn fp2_mul(&self, a: Fp2, b: Fp2) -> Fp2 {
        let p = self.p as u64;
        let e = self.eps as u64;
        let (ax, ay, bx, by) = (a.x as u64, a.y as u64, b.x as u64, b.y as u64);
        Fp2 {
            x: ((ax * bx + e * ay % p * by) % p) as u32,
            y: ((ax * by + ay * bx) % p) as u32,
        }
    }

    pub fn fp2_pow(&self, mut base: Fp2, mut exp: u64) -> Fp2 {
        let mut acc = Fp2::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.fp2_mul(acc, base);
            }
            base = self.fp2_mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Field norm `N(x + y*sqrt(eps)) = x^2 - eps*y^2` down to `F_p`.
    pub fn fp2_norm(&self, a: Fp2) -> u32 {
        self.sub(self.mul(a.x, a.x), self.mul(self.eps, self.mul(a.y, a.y)))
    }

    /// Frobenius `z -> z^p`, i.e. conjugation `x + y*sqrt(eps) -> x - y*sqrt(eps)`.
    pub fn frobenius(&self, a: Fp2) -> Fp2 {
        Fp2 {
            x: a.x,
            y: self.neg(a.y),
        }
    }

    pub fn fp2_inv(&self, a: Fp2) -> Fp2 {
        debug_assert!(!a.is_zero(), "inverse of zero");
        let n_inv = self.inv(self.fp2_norm(a));
        let conj = self.frobenius(a);
        Fp2 {
            x: self.mul(conj.x, n_inv),
            y: self.mul(conj.y, n_inv),
        }
    }

    /// Cube test in `F_{p^2}^x`: `z` is a cube iff `z^((p^2-1)/3) = 1`.
    /// (`3 | p^2 - 1` for every prime `p != 3`.)
    pub fn is_cube(&self, a: Fp2) -> bool {
        debug_assert!(!a.is_zero(), "cube test of zero");
        let q = (self.p as u64) * (self.p as u64) - 1;
        debug_assert_eq!(q % 3, 0);
        self.fp2_pow(a, q / 3) == Fp2::ONE
    }

    /// True iff `a` generates all of `F_{p^2}^x`.
    pub fn fp2_is_generator(&self, a: Fp2) -> bool {
        if a.is_zero() {
            return false;
        }
        let q = (self.p as u64) * (self.p as u64) - 1;
        self.factors_p2m1
            .iter()
            .all(|&r| self.fp2_pow(a, q / r) != Fp2::ONE)
    }

    fn find_fp2_generator(&self) -> Fp2 {
        for x in 0..self.p {
            for y in 0..self.p {
                let a = Fp2::new(x, y);
                if !a.is_zero() && self.fp2_is_generator(a) {
                    return a;
                }
            }
        }
        unreachable!("F_{{p^2}}^x is cyclic, a generator always exists")
    }
}

/// All pairs `(a, b) != (0, 0)` with `a + b*sqrt(eps)` a cube in
/// `F_{p^2}^x`, in lexicographic order. There are `(p^2 - 1)/3` of them,
/// and the set is closed under negation since `(-1)^3 = -1`.
pub fn cube_class_pairs(ctx: &PrimeContext) -> Vec<(u32, u32)> {
    let p = ctx.p();
    let mut out = Vec::with_capacity(((p as usize * p as usize) - 1) / 3);
    for a in 0..p {
        for b in 0..p {
            let z = Fp2::new(a, b);
            if !z.is_zero() && ctx.is_cube(z) {
                out.push((a, b));
            }
        }
    }
    out
}

/// Smallest primitive root modulo the prime `p`.
pub fn smallest_primitive_root(p: u32) -> u32 {
    let factors = distinct_prime_factors(p as u64 - 1);
    let pow = |mut base: u64, mut exp: u64| -> u64 {
        let mut acc = 1u64;
        base %= p as u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % p as u64;
            }
            base = base * base % p as u64;
            exp >>= 1;
        }
        acc
    };
    (2..p)
        .find(|&g| factors.iter().all(|&q| pow(g as u64, (p as u64 - 1) / q) != 1))
        .expect("every prime has a primitive root")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_rejects_bad_p() {
        assert_eq!(PrimeContext::new(4).unwrap_err(), FpError::NotPrime(4));
        assert_eq!(PrimeContext::new(9).unwrap_err(), FpError::NotPrime(9));
        assert_eq!(PrimeContext::new(2).unwrap_err(), FpError::OutOfRange(2));
        assert_eq!(PrimeContext::new(3).unwrap_err(), FpError::OutOfRange(3));
        assert!(PrimeContext::new(40961).is_err()); // prime but >= 2^15
    }

    #[test]
    fn smallest_primitive_roots_match_known_table() {
        let expect = [
            (5, 2),
            (7, 3),
            (11, 2),
            (13, 2),
            (17, 3),
            (19, 2),
            (23, 5),
            (29, 2),
            (41, 6),
            (47, 5),
        ];
        for (p, eps) in expect {
            assert_eq!(PrimeContext::new(p).unwrap().eps(), eps, "p = {p}");
        }
    }

    #[test]
    fn fp2_generator_is_lex_first_and_generates() {
        let expect = [(5, (1, 2)), (11, (1, 5)), (17, (1, 2)), (23, (1, 1))];
        for (p, (x, y)) in expect {
            let ctx = PrimeContext::new(p).unwrap();
            assert_eq!(ctx.fp2_gen(), Fp2::new(x, y), "p = {p}");
            assert!(ctx.fp2_is_generator(ctx.fp2_gen()));
        }
    }

    #[test]
    fn frobenius_is_an_involution_fixing_norms() {
        let ctx = PrimeContext::new(11).unwrap();
        for x in 0..11 {
            for y in 0..11 {
                let a = Fp2::new(x, y);
                if a.is_zero() {
                    continue;
                }
                assert_eq!(ctx.frobenius(ctx.frobenius(a)), a);
                assert_eq!(ctx.fp2_norm(ctx.frobenius(a)), ctx.fp2_norm(a));
                // z * z^p = N(z) in F_p
                let zn = ctx.fp2_mul(a, ctx.frobenius(a));
                assert_eq!(zn, Fp2::new(ctx.fp2_norm(a), 0));
            }
        }
    }

    #[test]
    fn cube_counts_are_a_third_of_the_group() {
        for p in [5u32, 11, 17, 23] {
            let ctx = PrimeContext::new(p).unwrap();
            let mut cubes = 0u32;
            for x in 0..p {
                for y in 0..p {
                    let a = Fp2::new(x, y);
                    if !a.is_zero() && ctx.is_cube(a) {
                        cubes += 1;
                    }
                }
            }
            assert_eq!(cubes, (p * p - 1) / 3, "p = {p}");
        }
    }

    #[test]
    fn scalars_are_cubes_when_p_is_2_mod_3() {
        // F_p^x sits inside the cubes of F_{p^2}^x exactly when 3 does not
        // divide p - 1.
        let ctx = PrimeContext::new(11).unwrap();
        for t in 1..11 {
            assert!(ctx.is_cube(Fp2::new(t, 0)));
        }
    }

    #[test]
    fn inverses_multiply_to_one() {
        let ctx = PrimeContext::new(23).unwrap();
        for a in 1..23 {
            assert_eq!(ctx.mul(a, ctx.inv(a)), 1);
        }
        for x in 0..23 {
            for y in 0..23 {
                let a = Fp2::new(x, y);
                if !a.is_zero() {
                    assert_eq!(ctx.fp2_mul(a, ctx.fp2_inv(a)), Fp2::ONE);
                }
            }
        }
    }
}
