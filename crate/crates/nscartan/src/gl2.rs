//! `GL_2(F_p)` and the subgroup families attached to the modular curves
//! under verification.
//!
//! Matrices are row-major `[[a, b], [c, d]]`. The nonsplit-Cartan family is
//! realised through `F_{p^2} = F_p(sqrt(eps))`: the element `z = x + y*sqrt(eps)`
//! acts on the column `(u, v) <-> u + v*sqrt(eps)` as the matrix
//! `(x, eps*y; y, x)`, so `C_ns` is exactly the set of those matrices with
//! `(x, y) != (0, 0)`, and its normalizer is `N_ns = C_ns ∪ J*C_ns` with
//! `J = diag(1, -1)` realising the Frobenius.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::fp::{Fp2, PrimeContext};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gl2Error {
    #[error("matrix is singular mod p")]
    Singular,
    #[error("closure would exceed the element limit {limit}")]
    ClosureTooLarge { limit: usize },
    #[error("p = {0} too large for dense closure bookkeeping (need p <= 127)")]
    ClosurePTooLarge(u32),
    #[error("subgroup of kind {0:?} does not have full determinant image")]
    DetNotFull(SubgroupKind),
}

/// Row-major 2x2 matrix over `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

impl Mat2 {
    pub const fn new(a: u32, b: u32, c: u32, d: u32) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const IDENTITY: Mat2 = Mat2::new(1, 0, 0, 1);

    /// `J = diag(1, -1)`, the outer involution of the nonsplit Cartan.
    pub fn j(p: u32) -> Mat2 {
        Mat2::new(1, 0, 0, p - 1)
    }

    pub fn mul(&self, ctx: &PrimeContext, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: ctx.add(ctx.mul(self.a, rhs.a), ctx.mul(self.b, rhs.c)),
            b: ctx.add(ctx.mul(self.a, rhs.b), ctx.mul(self.b, rhs.d)),
            c: ctx.add(ctx.mul(self.c, rhs.a), ctx.mul(self.d, rhs.c)),
            d: ctx.add(ctx.mul(self.c, rhs.b), ctx.mul(self.d, rhs.d)),
        }
    }

    pub fn det(&self, ctx: &PrimeContext) -> u32 {
        ctx.sub(ctx.mul(self.a, self.d), ctx.mul(self.b, self.c))
    }

    pub fn inverse(&self, ctx: &PrimeContext) -> Result<Mat2, Gl2Error> {
        let det = self.det(ctx);
        if det == 0 {
            return Err(Gl2Error::Singular);
        }
        let di = ctx.inv(det);
        Ok(Mat2 {
            a: ctx.mul(self.d, di),
            b: ctx.mul(ctx.neg(self.b), di),
            c: ctx.mul(ctx.neg(self.c), di),
            d: ctx.mul(self.a, di),
        })
    }

    pub fn pow(&self, ctx: &PrimeContext, mut exp: u64) -> Mat2 {
        let mut acc = Mat2::IDENTITY;
        let mut base = *self;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(ctx, &base);
            }
            base = base.mul(ctx, &base);
            exp >>= 1;
        }
        acc
    }

    pub fn is_scalar(&self) -> bool {
        self.b == 0 && self.c == 0 && self.a == self.d
    }

    /// Dense index `((a*p + b)*p + c)*p + d`, used for visited bitsets.
    pub fn pack(&self, p: u32) -> u64 {
        let p = p as u64;
        ((self.a as u64 * p + self.b as u64) * p + self.c as u64) * p + self.d as u64
    }

    /// The matrix of multiplication by `z` on `F_{p^2}` in the basis
    /// `(1, sqrt(eps))`.
    pub fn from_fp2(ctx: &PrimeContext, z: Fp2) -> Mat2 {
        Mat2 {
            a: z.x,
            b: ctx.mul(ctx.eps(), z.y),
            c: z.y,
            d: z.x,
        }
    }

    /// Inverse of [`Mat2::from_fp2`] when the matrix lies in the Cartan.
    pub fn to_fp2(&self) -> Fp2 {
        Fp2::new(self.a, self.c)
    }
}

/// The subgroup families used by the cusp and unit computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubgroupKind {
    /// Upper-triangular invertible matrices.
    Borel,
    /// Diagonal matrices (split Cartan).
    SplitCartan,
    /// Split Cartan together with the antidiagonal coset.
    SplitNormalizer,
    /// Multiplications by `F_{p^2}^x` (nonsplit Cartan).
    NonsplitCartan,
    /// Nonsplit Cartan together with the Frobenius coset `J*C_ns`.
    NonsplitNormalizer,
    /// Index-3 subgroup of the nonsplit normalizer: cube classes of the
    /// Cartan together with their `J`-coset.
    NonsplitCubes,
    /// Diagonal matrices `diag(a, ±a)` and antidiagonals `(0, eps*b; ±b, 0)`,
    /// the common core of the split and nonsplit normalizers.
    DiagAntidiag,
    /// Upper unipotent matrices `(1, t; 0, 1)`.
    Unipotent,
    /// Explicit element list (e.g. output of [`closure`]).
    Custom,
}

impl SubgroupKind {
    /// Label used in reports and on the command line.
    pub fn label(&self) -> &'static str {
        match self {
            SubgroupKind::Borel => "x0",
            SubgroupKind::SplitCartan => "sp",
            SubgroupKind::SplitNormalizer => "sp+",
            SubgroupKind::NonsplitCartan => "ns",
            SubgroupKind::NonsplitNormalizer => "ns+",
            SubgroupKind::NonsplitCubes => "G",
            SubgroupKind::DiagAntidiag => "Hp",
            SubgroupKind::Unipotent => "U",
            SubgroupKind::Custom => "custom",
        }
    }

    pub fn from_label(label: &str) -> Option<SubgroupKind> {
        Some(match label {
            "x0" => SubgroupKind::Borel,
            "sp" => SubgroupKind::SplitCartan,
            "sp+" => SubgroupKind::SplitNormalizer,
            "ns" => SubgroupKind::NonsplitCartan,
            "ns+" => SubgroupKind::NonsplitNormalizer,
            "G" => SubgroupKind::NonsplitCubes,
            "Hp" => SubgroupKind::DiagAntidiag,
            "U" => SubgroupKind::Unipotent,
            _ => return None,
        })
    }
}

/// A subgroup of `GL_2(F_p)` with lazily enumerable elements.
///
/// Named kinds carry a closed-form order, a small generating set and a
/// constant-time membership predicate; elements are streamed from a
/// parameterization instead of being stored (the Borel at `p` near `2^8`
/// already has millions of elements). `Custom` subgroups store their
/// elements explicitly.
#[derive(Debug, Clone)]
pub struct Subgroup {
    pub kind: SubgroupKind,
    pub order: u64,
    gens: Vec<Mat2>,
    p: u32,
    custom: Option<Vec<Mat2>>,
}

/// Build one of the named subgroup families.
///
/// Construction is self-checking: generators must satisfy the membership
/// predicate, and for small groups the streamed element count is verified
/// against the closed-form order.
pub fn build_subgroup(ctx: &PrimeContext, kind: SubgroupKind) -> Subgroup {
    let p = ctx.p() as u64;
    let eps = ctx.eps();
    let order = match kind {
        SubgroupKind::Borel => p * (p - 1) * (p - 1),
        SubgroupKind::SplitCartan => (p - 1) * (p - 1),
        SubgroupKind::SplitNormalizer => 2 * (p - 1) * (p - 1),
        SubgroupKind::NonsplitCartan => p * p - 1,
        SubgroupKind::NonsplitNormalizer => 2 * (p * p - 1),
        SubgroupKind::NonsplitCubes => 2 * (p * p - 1) / 3,
        SubgroupKind::DiagAntidiag => 4 * (p - 1),
        SubgroupKind::Unipotent => p,
        SubgroupKind::Custom => panic!("custom subgroups are built from explicit elements"),
    };
    let gens = match kind {
        SubgroupKind::Borel => vec![
            Mat2::new(eps, 0, 0, 1),
            Mat2::new(1, 0, 0, eps),
            Mat2::new(1, 1, 0, 1),
        ],
        SubgroupKind::SplitCartan => vec![Mat2::new(eps, 0, 0, 1), Mat2::new(1, 0, 0, eps)],
        SubgroupKind::SplitNormalizer => vec![
            Mat2::new(eps, 0, 0, 1),
            Mat2::new(1, 0, 0, eps),
            Mat2::new(0, 1, 1, 0),
        ],
        SubgroupKind::NonsplitCartan => vec![Mat2::from_fp2(ctx, ctx.fp2_gen())],
        SubgroupKind::NonsplitNormalizer => {
            vec![Mat2::from_fp2(ctx, ctx.fp2_gen()), Mat2::j(ctx.p())]
        }
        SubgroupKind::NonsplitCubes => {
            let g3 = ctx.fp2_pow(ctx.fp2_gen(), 3);
            vec![Mat2::from_fp2(ctx, g3), Mat2::j(ctx.p())]
        }
        SubgroupKind::DiagAntidiag => vec![
            Mat2::new(eps, 0, 0, eps),
            Mat2::new(1, 0, 0, ctx.p() - 1),
            Mat2::new(0, eps, 1, 0),
        ],
        SubgroupKind::Unipotent => vec![Mat2::new(1, 1, 0, 1)],
        SubgroupKind::Custom => unreachable!(),
    };
    let sub = Subgroup {
        kind,
        order,
        gens,
        p: ctx.p(),
        custom: None,
    };
    debug_assert!(sub.gens.iter().all(|g| sub.contains(ctx, g)));
    debug_assert!(sub.contains(ctx, &Mat2::IDENTITY));
    if order <= 512 {
        debug_assert_eq!(sub.iter(ctx).count() as u64, order);
    }
    sub
}

impl Subgroup {
    /// Wrap an explicit element list (assumed closed; see [`closure`]).
    pub fn from_elements(p: u32, elements: Vec<Mat2>) -> Subgroup {
        Subgroup {
            kind: SubgroupKind::Custom,
            order: elements.len() as u64,
            gens: Vec::new(),
            p,
            custom: Some(elements),
        }
    }

    pub fn gens(&self) -> &[Mat2] {
        &self.gens
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Stream every element exactly once.
    pub fn iter<'a>(&'a self, ctx: &'a PrimeContext) -> Box<dyn Iterator<Item = Mat2> + 'a> {
        let p = self.p;
        let eps = ctx.eps();
        match self.kind {
            SubgroupKind::Borel => Box::new((1..p).flat_map(move |a| {
                (1..p).flat_map(move |d| (0..p).map(move |b| Mat2::new(a, b, 0, d)))
            })),
            SubgroupKind::SplitCartan => {
                Box::new((1..p).flat_map(move |a| (1..p).map(move |d| Mat2::new(a, 0, 0, d))))
            }
            SubgroupKind::SplitNormalizer => Box::new(
                (1..p)
                    .flat_map(move |a| (1..p).map(move |d| Mat2::new(a, 0, 0, d)))
                    .chain(
                        (1..p).flat_map(move |b| (1..p).map(move |c| Mat2::new(0, b, c, 0))),
                    ),
            ),
            SubgroupKind::NonsplitCartan => Box::new(nonzero_pairs(p).map(move |(x, y)| {
                Mat2::new(x, (eps as u64 * y as u64 % p as u64) as u32, y, x)
            })),
            SubgroupKind::NonsplitNormalizer => {
                let j = Mat2::j(p);
                Box::new(nonzero_pairs(p).flat_map(move |(x, y)| {
                    let m = Mat2::new(x, (eps as u64 * y as u64 % p as u64) as u32, y, x);
                    [m, j.mul(ctx, &m)]
                }))
            }
            SubgroupKind::NonsplitCubes => {
                let g3 = Mat2::from_fp2(ctx, ctx.fp2_pow(ctx.fp2_gen(), 3));
                let j = Mat2::j(p);
                let cubes = std::iter::successors(Some(Mat2::IDENTITY), move |m| {
                    Some(m.mul(ctx, &g3))
                })
                .take(((p as u64 * p as u64 - 1) / 3) as usize);
                Box::new(cubes.flat_map(move |m| [m, j.mul(ctx, &m)]))
            }
            SubgroupKind::DiagAntidiag => Box::new(
                (1..p)
                    .flat_map(move |a| [Mat2::new(a, 0, 0, a), Mat2::new(a, 0, 0, p - a)])
                    .chain((1..p).flat_map(move |b| {
                        let eb = (eps as u64 * b as u64 % p as u64) as u32;
                        [Mat2::new(0, eb, b, 0), Mat2::new(0, eb, p - b, 0)]
                    })),
            ),
            SubgroupKind::Unipotent => Box::new((0..p).map(move |t| Mat2::new(1, t, 0, 1))),
            SubgroupKind::Custom => {
                Box::new(self.custom.as_ref().expect("custom elements").iter().copied())
            }
        }
    }

    /// Constant-time membership test (linear scan only for `Custom`).
    pub fn contains(&self, ctx: &PrimeContext, m: &Mat2) -> bool {
        let p = self.p;
        if m.det(ctx) == 0 {
            return false;
        }
        let in_nonsplit_cartan =
            |m: &Mat2| m.d == m.a && m.b == ctx.mul(ctx.eps(), m.c) && (m.a != 0 || m.c != 0);
        match self.kind {
            SubgroupKind::Borel => m.c == 0,
            SubgroupKind::SplitCartan => m.b == 0 && m.c == 0,
            SubgroupKind::SplitNormalizer => (m.b == 0 && m.c == 0) || (m.a == 0 && m.d == 0),
            SubgroupKind::NonsplitCartan => in_nonsplit_cartan(m),
            SubgroupKind::NonsplitNormalizer => {
                in_nonsplit_cartan(m) || in_nonsplit_cartan(&Mat2::j(p).mul(ctx, m))
            }
            SubgroupKind::NonsplitCubes => {
                if in_nonsplit_cartan(m) {
                    ctx.is_cube(m.to_fp2())
                } else {
                    let jm = Mat2::j(p).mul(ctx, m);
                    in_nonsplit_cartan(&jm) && ctx.is_cube(jm.to_fp2())
                }
            }
            SubgroupKind::DiagAntidiag => {
                (m.b == 0 && m.c == 0 && (m.d == m.a || m.d == ctx.neg(m.a)))
                    || (m.a == 0
                        && m.d == 0
                        && (m.b == ctx.mul(ctx.eps(), m.c)
                            || m.b == ctx.mul(ctx.eps(), ctx.neg(m.c))))
            }
            SubgroupKind::Unipotent => m.a == 1 && m.d == 1 && m.c == 0,
            SubgroupKind::Custom => self
                .custom
                .as_ref()
                .expect("custom elements")
                .contains(m),
        }
    }

    /// The determinant-one elements, collected explicitly.
    pub fn sl2_elements(&self, ctx: &PrimeContext) -> Vec<Mat2> {
        self.iter(ctx).filter(|m| m.det(ctx) == 1).collect()
    }

    /// A small generating set of the determinant-one part.
    ///
    /// Orbit walks only need generators, and the named families have them in
    /// closed form; this replaces the `O(|H ∩ SL_2|)` element list (cubic in
    /// `p` for the Borel) with at most two matrices. Families whose
    /// determinant-one part is already tiny fall back to the element list.
    pub fn sl2_generating_set(&self, ctx: &PrimeContext) -> Vec<Mat2> {
        let p = self.p;
        let eps = ctx.eps();
        let g = ctx.fp2_gen();
        // diag(eps, eps^{-1}): generates the determinant-one diagonal torus.
        let diag = Mat2::new(eps, 0, 0, ctx.inv(eps));
        // Norm-one generator of the nonsplit torus: g^(p-1) has norm
        // g^(p^2-1) = 1 and order p + 1.
        let torus = || Mat2::from_fp2(ctx, ctx.fp2_pow(g, p as u64 - 1));
        match self.kind {
            SubgroupKind::Borel => vec![Mat2::new(1, 1, 0, 1), diag],
            SubgroupKind::SplitCartan => vec![diag],
            // The antidiagonal w = (0, 1; -1, 0) has w^2 = -I inside the
            // torus, so the pair generates all 2(p-1) elements.
            SubgroupKind::SplitNormalizer => vec![diag, Mat2::new(0, 1, p - 1, 0)],
            SubgroupKind::NonsplitCartan => vec![torus()],
            SubgroupKind::NonsplitNormalizer => {
                // Outer element J*c with det = -N(c) = 1: take c = g^k with
                // N(c) = (g^(p+1))^k = -1, i.e. k = (p-1)/2.
                let c = ctx.fp2_pow(g, (p as u64 - 1) / 2);
                vec![torus(), Mat2::j(p).mul(ctx, &Mat2::from_fp2(ctx, c))]
            }
            SubgroupKind::NonsplitCubes if p % 3 == 2 => {
                // Norm-one cubes: <g^3> ∩ <g^(p-1)> = <g^(3(p-1))> since
                // gcd(3, p - 1) = 1 here.
                let t = Mat2::from_fp2(ctx, ctx.fp2_pow(g, 3 * (p as u64 - 1)));
                // Outer element J*c, c a cube of norm -1: c = g^(3k) with
                // 3k = (p-1)/2 (mod p-1); solvable since gcd(3, p - 1) = 1.
                let target = (p as u64 - 1) / 2;
                let k = (0..3)
                    .map(|j| target + j * (p as u64 - 1))
                    .find(|v| v % 3 == 0)
                    .expect("gcd(3, p - 1) = 1")
                    / 3;
                let c = ctx.fp2_pow(g, 3 * k);
                vec![t, Mat2::j(p).mul(ctx, &Mat2::from_fp2(ctx, c))]
            }
            _ => self.sl2_elements(ctx),
        }
    }

    /// Image of the determinant, as the subgroup of `F_p^x` generated by
    /// the generators' determinants (for `Custom`: all element determinants).
    pub fn det_image(&self, ctx: &PrimeContext) -> BTreeSet<u32> {
        if self.kind == SubgroupKind::Custom {
            return self.iter(ctx).map(|m| m.det(ctx)).collect();
        }
        let mut image: BTreeSet<u32> = [1u32].into();
        let mut frontier = vec![1u32];
        while let Some(v) = frontier.pop() {
            for g in &self.gens {
                let w = ctx.mul(v, g.det(ctx));
                if image.insert(w) {
                    frontier.push(w);
                }
            }
        }
        image
    }

    /// True when `det` maps onto all of `F_p^x`.
    pub fn det_surjective(&self, ctx: &PrimeContext) -> bool {
        self.det_image(ctx).len() as u64 == self.p as u64 - 1
    }

    /// `[other : self]`, checking that `self`'s generators (or elements,
    /// for `Custom`) lie in `other` and that the orders divide.
    pub fn index_in(&self, ctx: &PrimeContext, other: &Subgroup) -> Option<u64> {
        let contained: bool = if self.kind == SubgroupKind::Custom {
            self.iter(ctx).all(|m| other.contains(ctx, &m))
        } else {
            self.gens.iter().all(|g| other.contains(ctx, g))
        };
        if !contained || other.order % self.order != 0 {
            return None;
        }
        Some(other.order / self.order)
    }
}

fn nonzero_pairs(p: u32) -> impl Iterator<Item = (u32, u32)> {
    (0..p).flat_map(move |x| (0..p).map(move |y| (x, y))).skip(1)
}

/// Subgroup generated by `gens` via breadth-first closure.
///
/// Uses a dense visited bitset of size `p^4` bits, so `p <= 127` is required;
/// aborts with an error once more than `limit` elements are found.
pub fn closure(
    ctx: &PrimeContext,
    gens: &[Mat2],
    limit: usize,
) -> Result<Subgroup, Gl2Error> {
    let p = ctx.p();
    if p > 127 {
        return Err(Gl2Error::ClosurePTooLarge(p));
    }
    for g in gens {
        if g.det(ctx) == 0 {
            return Err(Gl2Error::Singular);
        }
    }
    let size = (p as u64).pow(4);
    let mut visited = vec![0u64; ((size + 63) / 64) as usize];
    let mut mark = |m: &Mat2| -> bool {
        let idx = m.pack(p);
        let (w, bit) = ((idx / 64) as usize, idx % 64);
        let fresh = visited[w] & (1 << bit) == 0;
        visited[w] |= 1 << bit;
        fresh
    };
    let mut elements = vec![Mat2::IDENTITY];
    mark(&Mat2::IDENTITY);
    let mut head = 0usize;
    while head < elements.len() {
        let m = elements[head];
        head += 1;
        for g in gens {
            let next = m.mul(ctx, g);
            if mark(&next) {
                if elements.len() >= limit {
                    return Err(Gl2Error::ClosureTooLarge { limit });
                }
                elements.push(next);
            }
        }
    }
    Ok(Subgroup::from_elements(p, elements))
}

/// Order of `GL_2(F_p)`.
pub fn gl2_order(p: u32) -> u64 {
    let p = p as u64;
    (p * p - 1) * (p * p - p)
}

/// Structure report for the outer coset `N_ns - C_ns`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OuterCosetReport {
    /// Every outer element squares to a scalar (so has order <= 2 in PGL_2).
    pub squares_scalar: bool,
    /// Each outer element `J*c` satisfies `(J*c)^2 = N(c) * I`.
    pub square_is_norm_scalar: bool,
    /// Every outer element's order in GL_2 divides `2(p-1)`.
    pub gl_order_divides: bool,
}

impl OuterCosetReport {
    pub fn all_hold(&self) -> bool {
        self.squares_scalar && self.square_is_norm_scalar && self.gl_order_divides
    }
}

/// Verify the involution structure of `N_ns - C_ns`: squares are scalar
/// (namely `N(c) * I`), hence PGL-order <= 2 and GL-order dividing `2(p-1)`.
pub fn outer_coset_order_check(ctx: &PrimeContext) -> OuterCosetReport {
    let p = ctx.p();
    let j = Mat2::j(p);
    let mut squares_scalar = true;
    let mut square_is_norm_scalar = true;
    let mut gl_order_divides = true;
    let cns = build_subgroup(ctx, SubgroupKind::NonsplitCartan);
    for c in cns.iter(ctx) {
        let m = j.mul(ctx, &c);
        let m2 = m.mul(ctx, &m);
        squares_scalar &= m2.is_scalar();
        let norm = ctx.fp2_norm(c.to_fp2());
        square_is_norm_scalar &= m2 == Mat2::new(norm, 0, 0, norm);
        gl_order_divides &= m.pow(ctx, 2 * (p as u64 - 1)) == Mat2::IDENTITY;
    }
    OuterCosetReport {
        squares_scalar,
        square_is_norm_scalar,
        gl_order_divides,
    }
}

/// True iff every element of `N_ns - C_ns` squares to a scalar matrix.
pub fn squares_are_scalar(ctx: &PrimeContext) -> bool {
    outer_coset_order_check(ctx).squares_scalar
}

/// Multiset of element orders in the image of a subgroup inside `PGL_2(F_p)`,
/// together with the image size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PglOrderProfile {
    pub image_size: u64,
    /// order -> number of PGL elements of that order.
    pub counts: std::collections::BTreeMap<u32, u64>,
}

/// Compute the PGL order profile of a subgroup by canonicalising each
/// element up to scalars (first nonzero entry scaled to 1).
pub fn pgl_order_profile(ctx: &PrimeContext, sub: &Subgroup) -> PglOrderProfile {
    let p = ctx.p();
    let canon = |m: &Mat2| -> u64 {
        let lead = [m.a, m.b, m.c, m.d]
            .into_iter()
            .find(|&v| v != 0)
            .expect("invertible matrix is nonzero");
        let s = ctx.inv(lead);
        Mat2::new(
            ctx.mul(m.a, s),
            ctx.mul(m.b, s),
            ctx.mul(m.c, s),
            ctx.mul(m.d, s),
        )
        .pack(p)
    };
    let mut seen = std::collections::HashSet::new();
    let mut counts = std::collections::BTreeMap::new();
    for m in sub.iter(ctx) {
        if !seen.insert(canon(&m)) {
            continue;
        }
        let mut ord = 1u32;
        let mut acc = m;
        while !acc.is_scalar() {
            acc = acc.mul(ctx, &m);
            ord += 1;
        }
        *counts.entry(ord).or_insert(0) += 1;
    }
    PglOrderProfile {
        image_size: seen.len() as u64,
        counts,
    }
}

/// Check that `N_ns / (cube classes of C_ns)` is the dihedral group of
/// order 6: six cosets, multiplication well-defined on labels, nonabelian.
pub fn quotient_is_dihedral3(ctx: &PrimeContext) -> bool {
    let q = (ctx.p() as u64) * (ctx.p() as u64) - 1;
    let omega = ctx.fp2_pow(ctx.fp2_gen(), q / 3);
    // label(m) = (is the element in the J-coset, cube class 0/1/2)
    let label = |m: &Mat2| -> Option<(bool, u8)> {
        let cube_class = |z: Fp2| -> u8 {
            let t = ctx.fp2_pow(z, q / 3);
            if t == Fp2::ONE {
                0
            } else if t == omega {
                1
            } else {
                2
            }
        };
        let in_cartan = |m: &Mat2| {
            m.d == m.a && m.b == ctx.mul(ctx.eps(), m.c) && (m.a != 0 || m.c != 0)
        };
        if in_cartan(m) {
            Some((false, cube_class(m.to_fp2())))
        } else {
            let jm = Mat2::j(ctx.p()).mul(ctx, m);
            in_cartan(&jm).then(|| (true, cube_class(jm.to_fp2())))
        }
    };
    // one representative per coset
    let g = Mat2::from_fp2(ctx, ctx.fp2_gen());
    let j = Mat2::j(ctx.p());
    let reps = [
        Mat2::IDENTITY,
        g,
        g.mul(ctx, &g),
        j,
        j.mul(ctx, &g),
        j.mul(ctx, &g.mul(ctx, &g)),
    ];
    let labels: Vec<_> = reps.iter().map(|m| label(m)).collect();
    if labels.iter().any(|l| l.is_none()) {
        return false;
    }
    let distinct: std::collections::HashSet<_> = labels.iter().flatten().collect();
    if distinct.len() != 6 {
        return false;
    }
    // multiplication is well-defined on labels: check rep products against
    // products with coset-perturbed factors (multiply by a cube).
    let g3 = Mat2::from_fp2(ctx, ctx.fp2_pow(ctx.fp2_gen(), 3));
    for x in &reps {
        for y in &reps {
            let base = label(&x.mul(ctx, y));
            let pert = label(&x.mul(ctx, &g3).mul(ctx, y));
            if base.is_none() || base != pert {
                return false;
            }
        }
    }
    // nonabelian: J * g and g * J land in different cosets
    label(&j.mul(ctx, &g)) != label(&g.mul(ctx, &j))
}
