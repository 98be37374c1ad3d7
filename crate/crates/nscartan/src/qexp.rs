//! Truncated q-expansions with exponents in `(1/p)·Z`.
//!
//! A series is stored as
//!
//! ```text
//!     e(phase) · q^{base_exp} · Σ_{k=0}^{trunc-1} c_k · q^{k/p}
//! ```
//!
//! with `e(x) = exp(2πix)`, `base_exp` and `phase` exact rationals (phase is
//! kept in `[0, 1)`), and coefficients `c_k` either exact cyclotomic integers
//! in `Z[ζ_p]` or `f64` complex numbers (the exact arm embedded at
//! `ζ = e(1/p)`). Products truncate to the shorter factor: a series known
//! through slot `t - 1` determines the product only through slot `t - 1`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::cyclo::CycloInt;

const TAU: f64 = std::f64::consts::TAU;

/// Coefficient storage: exact cyclotomic integers or floating complex.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeffs {
    Exact(Vec<CycloInt>),
    Complex(Vec<Complex64>),
}

impl Coeffs {
    fn len(&self) -> usize {
        match self {
            Coeffs::Exact(v) => v.len(),
            Coeffs::Complex(v) => v.len(),
        }
    }
}

/// A truncated series in `q^{1/p}` with a rational leading exponent and phase.
#[derive(Debug, Clone, PartialEq)]
pub struct QExp {
    p: u32,
    base_exp: BigRational,
    phase: BigRational,
    coeffs: Coeffs,
    /// Optional per-slot forward rounding-error bounds for the complex arm,
    /// maintained alongside every coefficient update. `None` when tracking
    /// is off (and always for exact coefficients, which commit no rounding).
    err: Option<Vec<f64>>,
}

fn phase_mod_one(x: BigRational) -> BigRational {
    let f = x.floor();
    x - f
}

impl QExp {
    /// The constant series `1`, with exact coefficients in `slots` slots.
    pub fn one_exact(p: u32, slots: usize) -> QExp {
        assert!(slots > 0, "need at least one slot");
        let mut v = vec![CycloInt::zero(p); slots];
        v[0] = CycloInt::one(p);
        QExp {
            p,
            base_exp: BigRational::zero(),
            phase: BigRational::zero(),
            coeffs: Coeffs::Exact(v),
            err: None,
        }
    }

    /// The constant series `1`, with complex coefficients in `slots` slots.
    pub fn one_complex(p: u32, slots: usize) -> QExp {
        assert!(slots > 0, "need at least one slot");
        let mut v = vec![Complex64::new(0.0, 0.0); slots];
        v[0] = Complex64::new(1.0, 0.0);
        QExp {
            p,
            base_exp: BigRational::zero(),
            phase: BigRational::zero(),
            coeffs: Coeffs::Complex(v),
            err: None,
        }
    }

    /// Start maintaining per-slot rounding-error bounds (complex arm only).
    ///
    /// Long products over many factors amplify floating-point error far
    /// beyond machine epsilon: errors committed while intermediate
    /// coefficients are large persist after the values themselves cancel.
    /// With tracking on, every in-place update also advances a rigorous
    /// forward bound — each factor contributing a few ulp of the magnitudes
    /// it touches — so downstream checks can certify "vanishes up to the
    /// accumulated budget" instead of guessing a tolerance.
    pub fn enable_error_tracking(&mut self) {
        assert!(
            matches!(self.coeffs, Coeffs::Complex(_)),
            "error tracking applies to the complex arm; exact coefficients \
             commit no rounding"
        );
        self.err = Some(vec![0.0; self.coeffs.len()]);
    }

    /// Per-slot rounding-error bounds, when tracking is on.
    pub fn error_bounds(&self) -> Option<&[f64]> {
        self.err.as_deref()
    }

    /// Largest rounding-error bound over slots `1..` (the tail budget).
    pub fn tail_error_bound(&self) -> Option<f64> {
        let e = self.err.as_deref()?;
        Some(e[1..].iter().copied().fold(0.0, f64::max))
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Number of known coefficient slots (slot `k` carries `q^{k/p}`).
    pub fn trunc(&self) -> usize {
        self.coeffs.len()
    }

    pub fn base_exp(&self) -> &BigRational {
        &self.base_exp
    }

    /// Phase as a rational in `[0, 1)`; the prefactor is `e(phase)`.
    pub fn phase(&self) -> &BigRational {
        &self.phase
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.coeffs, Coeffs::Exact(_))
    }

    pub fn coeffs_exact(&self) -> Option<&[CycloInt]> {
        match &self.coeffs {
            Coeffs::Exact(v) => Some(v),
            Coeffs::Complex(_) => None,
        }
    }

    pub fn coeffs_complex(&self) -> Option<&[Complex64]> {
        match &self.coeffs {
            Coeffs::Complex(v) => Some(v),
            Coeffs::Exact(_) => None,
        }
    }

    /// Add `delta` to the leading exponent (tracked exactly, never folded
    /// into the coefficient slots).
    pub fn add_exponent(&mut self, delta: BigRational) {
        self.base_exp += delta;
    }

    /// Add `delta` to the phase, reducing mod 1.
    pub fn add_phase(&mut self, delta: BigRational) {
        self.phase = phase_mod_one(self.phase.clone() + delta);
    }

    /// Multiply every slot by a fixed exact constant.
    pub fn mul_constant_exact(&mut self, c: &CycloInt) {
        let Coeffs::Exact(v) = &mut self.coeffs else {
            panic!("exact constant on a complex series");
        };
        for slot in v.iter_mut() {
            *slot = slot.mul(c);
        }
    }

    /// Multiply every slot by a fixed complex constant.
    pub fn mul_constant_complex(&mut self, c: Complex64) {
        let Coeffs::Complex(v) = &mut self.coeffs else {
            panic!("complex constant on an exact series");
        };
        for slot in v.iter_mut() {
            *slot *= c;
        }
        if let Some(errs) = &mut self.err {
            // Old error scales with |c|; the multiply itself rounds within a
            // few ulp of the result (4ε covers the complex-product bound).
            let cn = c.norm();
            for (e, slot) in errs.iter_mut().zip(v.iter()) {
                *e = *e * cn + 4.0 * f64::EPSILON * slot.norm();
            }
        }
    }

    /// Multiply in place by `(1 - ζ^j · q^{e/p})^m` with `e ≥ 1`.
    ///
    /// The factor is expanded binomially, `Σ_i C(m,i)(-1)^i ζ^{ij} q^{ie/p}`,
    /// and applied with a descending sweep so each slot reads only
    /// not-yet-updated (old) slots below it. Runs in `O(trunc · m)`
    /// coefficient operations; truncation length is unchanged.
    pub fn mul_one_minus_zeta_q(&mut self, j: u32, e: usize, m: u32) {
        assert!(e >= 1, "factor must carry a positive power of q^{{1/p}}");
        let p = self.p;
        let j = j % p;
        let signed_binom: Vec<BigInt> = {
            let mut row = Vec::with_capacity(m as usize + 1);
            let mut c = BigInt::one();
            for i in 0..=m {
                let sign = if i % 2 == 1 { -c.clone() } else { c.clone() };
                row.push(sign);
                if i < m {
                    c = c * BigInt::from(m - i) / BigInt::from(i + 1);
                }
            }
            row
        };
        match &mut self.coeffs {
            Coeffs::Exact(v) => {
                let trunc = v.len();
                for k in (0..trunc).rev() {
                    let imax = (k / e).min(m as usize);
                    for i in 1..=imax {
                        let src = v[k - i * e].clone();
                        let rot = (i as u32 * j) % p;
                        v[k].add_assign_scaled_zeta(&src, rot, &signed_binom[i]);
                    }
                }
            }
            Coeffs::Complex(v) => {
                let trunc = v.len();
                let terms: Vec<Complex64> = (0..=m as usize)
                    .map(|i| {
                        let angle = TAU * ((i as u32 * j) % p) as f64 / p as f64;
                        let b = signed_binom[i].to_f64().expect("binomial fits f64");
                        Complex64::from_polar(1.0, angle) * b
                    })
                    .collect();
                if let Some(errs) = &mut self.err {
                    // Rigorous forward propagation: source errors scale with
                    // |terms[i]|, and every term injected or summed rounds
                    // within 4ε of its magnitude. `inj` records the total
                    // magnitude that flowed through the slot, so the bound
                    // survives cancellation (the committed rounding does not
                    // shrink when the values later cancel).
                    let tmags: Vec<f64> = terms.iter().map(|t| t.norm()).collect();
                    for k in (0..trunc).rev() {
                        let imax = (k / e).min(m as usize);
                        if imax == 0 {
                            continue;
                        }
                        let mut acc = errs[k];
                        let mut inj = 0.0;
                        for i in 1..=imax {
                            let add = v[k - i * e] * terms[i];
                            acc += tmags[i] * errs[k - i * e];
                            inj += add.norm();
                            v[k] += add;
                        }
                        errs[k] =
                            acc + 4.0 * f64::EPSILON * (inj + v[k].norm()) * imax as f64;
                    }
                } else {
                    for k in (0..trunc).rev() {
                        let imax = (k / e).min(m as usize);
                        for i in 1..=imax {
                            let add = v[k - i * e] * terms[i];
                            v[k] += add;
                        }
                    }
                }
            }
        }
    }

    /// Full product of two series; the result keeps `min` of the two
    /// truncation lengths, exponents add, phases add mod 1.
    pub fn mul(&self, rhs: &QExp) -> QExp {
        assert_eq!(self.p, rhs.p, "mixed levels");
        let trunc = self.trunc().min(rhs.trunc());
        let base_exp = &self.base_exp + &rhs.base_exp;
        let phase = phase_mod_one(&self.phase + &rhs.phase);
        let coeffs = match (&self.coeffs, &rhs.coeffs) {
            (Coeffs::Exact(a), Coeffs::Exact(b)) => {
                let mut out = vec![CycloInt::zero(self.p); trunc];
                for (i, ai) in a.iter().enumerate().take(trunc) {
                    if ai.is_zero() {
                        continue;
                    }
                    for (j, bj) in b.iter().enumerate().take(trunc - i) {
                        if bj.is_zero() {
                            continue;
                        }
                        let prod = ai.mul(bj);
                        out[i + j] = out[i + j].add(&prod);
                    }
                }
                Coeffs::Exact(out)
            }
            (Coeffs::Complex(a), Coeffs::Complex(b)) => {
                let mut out = vec![Complex64::new(0.0, 0.0); trunc];
                for (i, ai) in a.iter().enumerate().take(trunc) {
                    for (j, bj) in b.iter().enumerate().take(trunc - i) {
                        out[i + j] += ai * bj;
                    }
                }
                Coeffs::Complex(out)
            }
            _ => panic!("mixed exact/complex product"),
        };
        QExp {
            p: self.p,
            base_exp,
            phase,
            coeffs,
            // Error tracking does not survive a general product; re-enable on
            // the result if the downstream check needs a budget.
            err: None,
        }
    }

    /// First nonzero slot of an exact series: `(exponent, coefficient)` with
    /// `exponent = base_exp + k0/p`. `None` when every known slot vanishes.
    pub fn leading_exact(&self) -> Option<(BigRational, &CycloInt)> {
        let v = self.coeffs_exact()?;
        let k0 = v.iter().position(|c| !c.is_zero())?;
        let exp = &self.base_exp + BigRational::new(BigInt::from(k0), BigInt::from(self.p));
        Some((exp, &v[k0]))
    }

    /// Evaluate at `τ` in the upper half-plane, with `q^r := e(rτ)`.
    pub fn eval(&self, tau: Complex64) -> Complex64 {
        assert!(tau.im > 0.0, "τ must be in the upper half-plane");
        let p = self.p as f64;
        let qp = (Complex64::i() * TAU * tau / p).exp(); // q^{1/p}
        let mut acc = Complex64::new(0.0, 0.0);
        match &self.coeffs {
            Coeffs::Exact(v) => {
                for c in v.iter().rev() {
                    acc = acc * qp
                        + if c.is_zero() {
                            Complex64::new(0.0, 0.0)
                        } else {
                            c.embed(1)
                        };
                }
            }
            Coeffs::Complex(v) => {
                for c in v.iter().rev() {
                    acc = acc * qp + c;
                }
            }
        }
        let base = self.base_exp.to_f64().expect("exponent fits f64");
        let phase = self.phase.to_f64().expect("phase fits f64");
        let prefactor =
            (Complex64::i() * TAU * (tau * base)).exp() * Complex64::from_polar(1.0, TAU * phase);
        prefactor * acc
    }

    /// Largest coefficient magnitude across the tail (slots `1..`), as a
    /// cheap exactness certificate for identities of the form `c₀ + 0·q + …`.
    pub fn tail_is_zero_exact(&self) -> Option<bool> {
        let v = self.coeffs_exact()?;
        Some(v[1..].iter().all(|c| c.is_zero()))
    }

    /// Max |coefficient| over slots `1..` for the complex arm.
    pub fn tail_max_abs_complex(&self) -> Option<f64> {
        let v = self.coeffs_complex()?;
        Some(v[1..].iter().map(|c| c.norm()).fold(0.0, f64::max))
    }

    /// Shorten the series to `new_trunc` slots (no-op if already shorter).
    pub fn truncate(&mut self, new_trunc: usize) {
        assert!(new_trunc > 0);
        match &mut self.coeffs {
            Coeffs::Exact(v) => v.truncate(new_trunc),
            Coeffs::Complex(v) => v.truncate(new_trunc),
        }
        if let Some(errs) = &mut self.err {
            errs.truncate(new_trunc);
        }
    }
}

/// Default truncation: `6p` fractional slots (`q^0` through `q^{6}` in whole
/// powers), enough to separate the constant slot from any admissible tail.
pub fn default_slots(p: u32) -> usize {
    (6 * p + 1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric_check(exact: bool) {
        // (1 - ζ q^{2/p})^1 applied to 1, then multiplied back by the series
        // expansion of 1/(1 - ζ q^{2/p}) = Σ ζ^n q^{2n/p}: recovers 1.
        let p = 5u32;
        let slots = 13usize;
        let mut a = if exact {
            QExp::one_exact(p, slots)
        } else {
            QExp::one_complex(p, slots)
        };
        a.mul_one_minus_zeta_q(1, 2, 1);
        let inv = {
            let mut s = if exact {
                QExp::one_exact(p, slots)
            } else {
                QExp::one_complex(p, slots)
            };
            match &mut s {
                QExp {
                    coeffs: Coeffs::Exact(v),
                    ..
                } => {
                    for n in 0..slots.div_ceil(2) {
                        v[2 * n] = CycloInt::zeta_pow(p, n as u32);
                    }
                }
                QExp {
                    coeffs: Coeffs::Complex(v),
                    ..
                } => {
                    for n in 0..slots.div_ceil(2) {
                        let angle = TAU * (n as u32 % p) as f64 / p as f64;
                        v[2 * n] = Complex64::from_polar(1.0, angle);
                    }
                }
            }
            s
        };
        let prod = a.mul(&inv);
        if exact {
            let v = prod.coeffs_exact().unwrap();
            assert_eq!(v[0], CycloInt::one(p));
            assert!(v[1..].iter().all(|c| c.is_zero()));
        } else {
            let v = prod.coeffs_complex().unwrap();
            assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(v[1..].iter().all(|c| c.norm() < 1e-12));
        }
    }

    #[test]
    fn binomial_factor_has_exact_inverse_series() {
        geometric_check(true);
        geometric_check(false);
    }

    #[test]
    fn cube_factor_matches_repeated_single_factor() {
        let p = 7u32;
        let slots = 22usize;
        let mut cubed = QExp::one_exact(p, slots);
        cubed.mul_one_minus_zeta_q(3, 4, 3);
        let mut repeated = QExp::one_exact(p, slots);
        for _ in 0..3 {
            repeated.mul_one_minus_zeta_q(3, 4, 1);
        }
        assert_eq!(cubed, repeated);
    }

    #[test]
    fn product_truncates_to_shorter_factor() {
        let p = 5u32;
        let a = QExp::one_exact(p, 9);
        let b = QExp::one_exact(p, 17);
        assert_eq!(a.mul(&b).trunc(), 9);
    }

    #[test]
    fn exponent_and_phase_accumulate_exactly() {
        let p = 11u32;
        let mut a = QExp::one_exact(p, 4);
        a.add_exponent(BigRational::new(BigInt::from(7), BigInt::from(11)));
        a.add_phase(BigRational::new(BigInt::from(9), BigInt::from(10)));
        let mut b = QExp::one_exact(p, 4);
        b.add_exponent(BigRational::new(BigInt::from(-3), BigInt::from(11)));
        b.add_phase(BigRational::new(BigInt::from(3), BigInt::from(10)));
        let prod = a.mul(&b);
        assert_eq!(
            prod.base_exp(),
            &BigRational::new(BigInt::from(4), BigInt::from(11))
        );
        // 9/10 + 3/10 = 12/10 ≡ 1/5 (mod 1)
        assert_eq!(
            prod.phase(),
            &BigRational::new(BigInt::from(1), BigInt::from(5))
        );
    }

    #[test]
    fn eval_matches_direct_computation() {
        let p = 5u32;
        let tau = Complex64::new(0.3, 1.1);
        let mut s = QExp::one_exact(p, 11);
        s.mul_one_minus_zeta_q(2, 3, 2);
        s.add_exponent(BigRational::new(BigInt::from(1), BigInt::from(5)));
        s.add_phase(BigRational::new(BigInt::from(1), BigInt::from(4)));
        let got = s.eval(tau);
        let q = (Complex64::i() * TAU * tau).exp();
        let zeta2 = Complex64::from_polar(1.0, TAU * 2.0 / 5.0);
        let factor = Complex64::new(1.0, 0.0) - zeta2 * q.powf(3.0 / 5.0);
        let expect = Complex64::i() * factor * factor * q.powf(0.2);
        assert!((got - expect).norm() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn exact_and_complex_arms_agree_numerically() {
        let p = 7u32;
        let slots = 20usize;
        let mut a = QExp::one_exact(p, slots);
        let mut b = QExp::one_complex(p, slots);
        for (j, e, m) in [(1u32, 2usize, 3u32), (5, 1, 3), (3, 6, 3)] {
            a.mul_one_minus_zeta_q(j, e, m);
            b.mul_one_minus_zeta_q(j, e, m);
        }
        let av = a.coeffs_exact().unwrap();
        let bv = b.coeffs_complex().unwrap();
        for k in 0..slots {
            let exact = av[k].embed(1);
            assert!((exact - bv[k]).norm() < 1e-9, "slot {k}: {exact} vs {}", bv[k]);
        }
    }
}
