//! Cusp combinatorics of the modular curves `X_H`.
//!
//! The cusp set of `X_H` is modelled on `M_p = ((Z/p)^2 - 0) / ±1`:
//! cusps are the orbits of `H ∩ SL_2` on `M_p`, the Galois action on them is
//! transitive on full `H`-orbits, and a cusp is *at infinity* (rational over
//! the relevant cyclotomic field in the intended application) when some
//! `h ∈ H` sends a representative to `(β, 0)` with `det h = ±β`.
//!
//! For the cuspidal divisor class computations the finer *symbol* space
//! `M_p × F_p^×` is used, with `g · (v, d) = (g v, det(g) d)`; when `H` has
//! full determinant image, `H`-orbits of symbols are in bijection with the
//! cusps of `X_H` and carry the degeneracy data needed for the order
//! computation ([`nu_table`]).

use std::collections::HashMap;

use crate::fp::PrimeContext;
use crate::gl2::{build_subgroup, Gl2Error, Mat2, Subgroup, SubgroupKind};

/// Canonical representative of `{v, -v}` for `v ∈ (Z/p)^2 - 0`: the first
/// nonzero coordinate lies in `1 ..= (p-1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MpPoint {
    pub a: u32,
    pub b: u32,
}

impl MpPoint {
    pub fn normalized(p: u32, a: u32, b: u32) -> MpPoint {
        debug_assert!(a < p && b < p && (a != 0 || b != 0));
        let lead = if a != 0 { a } else { b };
        if lead > (p - 1) / 2 {
            MpPoint {
                a: if a == 0 { 0 } else { p - a },
                b: if b == 0 { 0 } else { p - b },
            }
        } else {
            MpPoint { a, b }
        }
    }

    fn index(&self, p: u32) -> usize {
        (self.a * p + self.b) as usize
    }
}

/// All points of `M_p` in lexicographic order.
pub fn mp_points(p: u32) -> Vec<MpPoint> {
    let mut pts = Vec::with_capacity(((p * p - 1) / 2) as usize);
    // a = 0: b in 1..=(p-1)/2; a in 1..=(p-1)/2: b free
    for b in 1..=(p - 1) / 2 {
        pts.push(MpPoint { a: 0, b });
    }
    for a in 1..=(p - 1) / 2 {
        for b in 0..p {
            pts.push(MpPoint { a, b });
        }
    }
    pts
}

/// Left action of `GL_2(F_p)` on `M_p` (column vectors, then renormalize).
pub fn act(ctx: &PrimeContext, m: &Mat2, v: MpPoint) -> MpPoint {
    let a = ctx.add(ctx.mul(m.a, v.a), ctx.mul(m.b, v.b));
    let b = ctx.add(ctx.mul(m.c, v.a), ctx.mul(m.d, v.b));
    MpPoint::normalized(ctx.p(), a, b)
}

/// A point of `M_p × F_p^×`, the level structure carrying the Galois twist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub v: MpPoint,
    pub d: u32,
}

impl Symbol {
    /// Dense index over the full `p^2 × (p-1)` grid (canonical points are
    /// sparse in `[0, p^2)`, which keeps the arithmetic trivial).
    fn index(&self, p: u32) -> usize {
        self.v.index(p) * (p as usize - 1) + (self.d as usize - 1)
    }
}

/// `g · (v, d) = (g v, det(g) d)`.
pub fn symbol_act(ctx: &PrimeContext, m: &Mat2, s: Symbol) -> Symbol {
    Symbol {
        v: act(ctx, m, s.v),
        d: ctx.mul(m.det(ctx), s.d),
    }
}

/// All symbols in lexicographic order.
pub fn all_symbols(p: u32) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(((p * p - 1) / 2 * (p - 1)) as usize);
    for v in mp_points(p) {
        for d in 1..p {
            out.push(Symbol { v, d });
        }
    }
    out
}

/// Does some `h ∈ H` send `v` to `(β, 0)` with `det h = ±β`?
///
/// Streams the subgroup and exits on the first witness.
pub fn is_at_infinity(ctx: &PrimeContext, sub: &Subgroup, v: MpPoint) -> bool {
    let p = ctx.p();
    sub.iter(ctx).any(|m| {
        let second = ctx.add(ctx.mul(m.c, v.a), ctx.mul(m.d, v.b));
        if second != 0 {
            return false;
        }
        let beta = ctx.add(ctx.mul(m.a, v.a), ctx.mul(m.b, v.b));
        let det = m.det(ctx);
        det == beta || det == p - beta
    })
}

/// One cusp of `X_H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuspClass {
    /// Lexicographically smallest point of the `H ∩ SL_2`-orbit.
    pub rep: MpPoint,
    /// Number of `M_p` points in the orbit.
    pub size: u32,
    pub at_infinity: bool,
    /// Index of the full `H`-orbit (Galois orbit) containing this cusp.
    pub galois_orbit_id: u32,
}

/// The full cusp table of one curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuspTable {
    pub p: u32,
    pub kind: SubgroupKind,
    pub classes: Vec<CuspClass>,
    pub galois_orbit_count: u32,
}

impl CuspTable {
    pub fn cusp_count(&self) -> u32 {
        self.classes.len() as u32
    }

    pub fn at_infinity_count(&self) -> u32 {
        self.classes.iter().filter(|c| c.at_infinity).count() as u32
    }
}

/// Enumerate the cusps of `X_H` with Galois-orbit and at-infinity data.
///
/// Requires `det(H) = F_p^×` (otherwise the quotient modelled here is not
/// geometrically meaningful and an error is returned).
pub fn enumerate_cusps(ctx: &PrimeContext, sub: &Subgroup) -> Result<CuspTable, Gl2Error> {
    if !sub.det_surjective(ctx) {
        return Err(Gl2Error::DetNotFull(sub.kind));
    }
    let p = ctx.p();
    let sl2 = sub.sl2_generating_set(ctx);
    let points = mp_points(p);

    // class id per point, dense over the a*p+b index
    let mut class_of = vec![u32::MAX; (p * p) as usize];
    let mut reps: Vec<MpPoint> = Vec::new();
    let mut sizes: Vec<u32> = Vec::new();
    for &v in &points {
        if class_of[v.index(p)] != u32::MAX {
            continue;
        }
        let cid = reps.len() as u32;
        // the orbit of v under H ∩ SL_2
        let mut orbit = vec![v];
        class_of[v.index(p)] = cid;
        let mut head = 0;
        while head < orbit.len() {
            let w = orbit[head];
            head += 1;
            for m in &sl2 {
                let u = act(ctx, m, w);
                if class_of[u.index(p)] == u32::MAX {
                    class_of[u.index(p)] = cid;
                    orbit.push(u);
                }
            }
        }
        reps.push(v);
        sizes.push(orbit.len() as u32);
    }

    // Galois orbits: union classes along the action of the full group,
    // using generators (they generate H, so the closure is the H-orbit).
    let n = reps.len();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    let movers: Vec<Mat2> = if sub.gens().is_empty() {
        sub.iter(ctx).collect()
    } else {
        sub.gens().to_vec()
    };
    for cid in 0..n as u32 {
        for m in &movers {
            let img = class_of[act(ctx, m, reps[cid as usize]).index(p)];
            let (ra, rb) = (find(&mut parent, cid), find(&mut parent, img));
            if ra != rb {
                let (lo, hi) = (ra.min(rb), ra.max(rb));
                parent[hi as usize] = lo;
            }
        }
    }
    // renumber orbits in order of first appearance
    let mut orbit_id = HashMap::new();
    let mut galois_ids = Vec::with_capacity(n);
    for cid in 0..n as u32 {
        let root = find(&mut parent, cid);
        let next = orbit_id.len() as u32;
        galois_ids.push(*orbit_id.entry(root).or_insert(next));
    }

    let classes = (0..n)
        .map(|cid| CuspClass {
            rep: reps[cid],
            size: sizes[cid],
            at_infinity: is_at_infinity(ctx, sub, reps[cid]),
            galois_orbit_id: galois_ids[cid],
        })
        .collect();
    Ok(CuspTable {
        p,
        kind: sub.kind,
        classes,
        galois_orbit_count: orbit_id.len() as u32,
    })
}

/// Structure of the at-infinity locus of the index-3 curve (`G`-level).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeOrbitCheck {
    pub cusp_count: u32,
    pub galois_orbit_count: u32,
    pub at_infinity_count: u32,
    /// The at-infinity cusps form a single Galois orbit.
    pub at_infinity_is_one_galois_orbit: bool,
    /// The points of that orbit are exactly the cube classes of
    /// `F_{p^2}^×` under the nonsplit embedding, reduced mod ±1.
    pub points_match_cube_classes: bool,
}

/// Verify that the at-infinity cusps of the `G`-curve form a single Galois
/// orbit whose underlying point set is the mod-±1 reduction of the cube
/// classes of `F_{p^2}^×`. Requires `p ≡ 2 (mod 3)`.
pub fn cube_orbit_check(ctx: &PrimeContext) -> Result<CubeOrbitCheck, Gl2Error> {
    let p = ctx.p();
    let sub = build_subgroup(ctx, SubgroupKind::NonsplitCubes);
    let table = enumerate_cusps(ctx, &sub)?;
    let inf_orbits: std::collections::BTreeSet<u32> = table
        .classes
        .iter()
        .filter(|c| c.at_infinity)
        .map(|c| c.galois_orbit_id)
        .collect();
    // all points of the at-infinity Galois orbits
    let mut pts: Vec<MpPoint> = Vec::new();
    let sl2 = sub.sl2_elements(ctx);
    for class in &table.classes {
        if inf_orbits.contains(&class.galois_orbit_id) {
            let mut orbit = vec![class.rep];
            let mut seen: std::collections::BTreeSet<MpPoint> = orbit.iter().copied().collect();
            let mut head = 0;
            while head < orbit.len() {
                let w = orbit[head];
                head += 1;
                for m in &sl2 {
                    let u = act(ctx, m, w);
                    if seen.insert(u) {
                        orbit.push(u);
                    }
                }
            }
            pts.extend(orbit);
        }
    }
    pts.sort();
    pts.dedup();
    let mut cube_pts: Vec<MpPoint> = crate::fp::cube_class_pairs(ctx)
        .into_iter()
        .map(|(a, b)| MpPoint::normalized(p, a, b))
        .collect();
    cube_pts.sort();
    cube_pts.dedup();
    Ok(CubeOrbitCheck {
        cusp_count: table.cusp_count(),
        galois_orbit_count: table.galois_orbit_count,
        at_infinity_count: table.at_infinity_count(),
        at_infinity_is_one_galois_orbit: inf_orbits.len() == 1,
        points_match_cube_classes: pts == cube_pts,
    })
}

/// The two cusps of the level-`p` Borel curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum X0Class {
    Zero,
    Infinity,
}

/// Image of a symbol under the first degeneracy map: `Infinity` exactly when
/// the second coordinate of the point vanishes.
pub fn degeneracy_one(s: Symbol) -> X0Class {
    if s.v.b == 0 {
        X0Class::Infinity
    } else {
        X0Class::Zero
    }
}

/// Coordinate swap with determinant twist: `((a, b), d) -> ((b, a), -d)`.
pub fn omega(ctx: &PrimeContext, s: Symbol) -> Symbol {
    Symbol {
        v: MpPoint::normalized(ctx.p(), s.v.b, s.v.a),
        d: ctx.neg(s.d),
    }
}

/// The involution of the two Borel cusps.
pub fn fricke_swap(c: X0Class) -> X0Class {
    match c {
        X0Class::Zero => X0Class::Infinity,
        X0Class::Infinity => X0Class::Zero,
    }
}

/// The second degeneracy map: swap, degenerate, swap back. `Infinity`
/// exactly when the first coordinate is nonzero.
pub fn degeneracy_p(ctx: &PrimeContext, s: Symbol) -> X0Class {
    fricke_swap(degeneracy_one(omega(ctx, s)))
}

/// Coefficient of the symbol in the pushed-forward degeneracy divisor
/// `d_1 - d_p`: equals 1 exactly when the two degeneracy images differ,
/// i.e. when both coordinates of the point are nonzero.
pub fn eta_coefficient(ctx: &PrimeContext, s: Symbol) -> u32 {
    (degeneracy_one(s) != degeneracy_p(ctx, s)) as u32
}

/// Exponent of the cuspidal divisor class group piece relevant here:
/// `n(p) = (p-1) / gcd(p-1, 12)`.
pub fn cuspidal_order(p: u32) -> u32 {
    (p - 1) / gcd(p - 1, 12)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Orbits of a subgroup on the symbol space, with a dense lookup table.
pub struct SymbolOrbits {
    pub orbits: Vec<Vec<Symbol>>,
    orbit_of: Vec<u32>,
    p: u32,
}

impl SymbolOrbits {
    pub fn orbit_id(&self, s: Symbol) -> u32 {
        self.orbit_of[s.index(self.p)]
    }
}

/// Compute the orbits of `H` on `M_p × F_p^×`, each sorted, in order of
/// their lexicographically smallest symbol.
pub fn symbol_orbits(ctx: &PrimeContext, sub: &Subgroup) -> SymbolOrbits {
    let p = ctx.p();
    let total = (p as usize) * (p as usize) * (p as usize - 1);
    let mut orbit_of = vec![u32::MAX; total];
    let mut orbits: Vec<Vec<Symbol>> = Vec::new();
    let elements: Vec<Mat2> = sub.iter(ctx).collect();
    for s in all_symbols(p) {
        if orbit_of[s.index(p)] != u32::MAX {
            continue;
        }
        let oid = orbits.len() as u32;
        let mut orbit = vec![s];
        orbit_of[s.index(p)] = oid;
        let mut head = 0;
        while head < orbit.len() {
            let t = orbit[head];
            head += 1;
            for m in &elements {
                let u = symbol_act(ctx, m, t);
                if orbit_of[u.index(p)] == u32::MAX {
                    orbit_of[u.index(p)] = oid;
                    orbit.push(u);
                }
            }
        }
        orbit.sort();
        orbits.push(orbit);
    }
    SymbolOrbits { orbits, orbit_of, p }
}

/// One cusp row of the divisor-order table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NuRow {
    /// Smallest symbol of the `H`-orbit.
    pub rep: Symbol,
    /// Number of core-level symbol orbits lying over this cusp.
    pub fiber_size: u32,
    /// Sum of degeneracy coefficients over the fiber, before reduction.
    pub eta_total: u32,
    /// `eta_total mod n(p)` — the order datum.
    pub nu: u32,
    pub at_infinity: bool,
}

/// Divisor-order table for one curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NuTable {
    pub p: u32,
    pub kind: SubgroupKind,
    pub modulus: u32,
    pub rows: Vec<NuRow>,
}

/// Compute the degeneracy-divisor order data for the `G`-curve or the
/// core curve itself, via the fibering of core-level symbol orbits.
///
/// Supported kinds are `NonsplitCubes` and `DiagAntidiag` (the core); both
/// have full determinant image in their domain of definition, which is
/// checked.
pub fn nu_table(ctx: &PrimeContext, kind: SubgroupKind) -> Result<NuTable, Gl2Error> {
    let core = build_subgroup(ctx, SubgroupKind::DiagAntidiag);
    let sub = if kind == SubgroupKind::DiagAntidiag {
        core.clone()
    } else {
        build_subgroup(ctx, kind)
    };
    if !sub.det_surjective(ctx) {
        return Err(Gl2Error::DetNotFull(kind));
    }
    let core_orbits = symbol_orbits(ctx, &core);
    let h_orbits = symbol_orbits(ctx, &sub);
    let modulus = cuspidal_order(ctx.p());
    let rows = h_orbits
        .orbits
        .iter()
        .map(|orbit| {
            let mut fiber: Vec<u32> = orbit.iter().map(|&s| core_orbits.orbit_id(s)).collect();
            fiber.sort_unstable();
            fiber.dedup();
            let eta_total: u32 = fiber
                .iter()
                .map(|&fid| eta_coefficient(ctx, core_orbits.orbits[fid as usize][0]))
                .sum();
            NuRow {
                rep: orbit[0],
                fiber_size: fiber.len() as u32,
                eta_total,
                nu: eta_total % modulus,
                at_infinity: is_at_infinity(ctx, &sub, orbit[0].v),
            }
        })
        .collect();
    Ok(NuTable {
        p: ctx.p(),
        kind,
        modulus,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gl2::build_subgroup;

    fn table(p: u32, kind: SubgroupKind) -> CuspTable {
        let ctx = PrimeContext::new(p).unwrap();
        let sub = build_subgroup(&ctx, kind);
        enumerate_cusps(&ctx, &sub).unwrap()
    }

    #[test]
    fn mp_has_half_of_the_punctured_plane() {
        for p in [5u32, 11, 13] {
            let pts = mp_points(p);
            assert_eq!(pts.len() as u32, (p * p - 1) / 2);
            for v in pts {
                assert_eq!(MpPoint::normalized(p, v.a, v.b), v);
                // the negative normalizes back to v
                let na = if v.a == 0 { 0 } else { p - v.a };
                let nb = if v.b == 0 { 0 } else { p - v.b };
                assert_eq!(MpPoint::normalized(p, na, nb), v);
            }
        }
    }

    #[test]
    fn borel_curve_has_two_cusps_one_at_infinity() {
        for p in [5, 7, 11, 13, 17, 23] {
            let t = table(p, SubgroupKind::Borel);
            assert_eq!(t.cusp_count(), 2, "p = {p}");
            assert_eq!(t.galois_orbit_count, 2, "p = {p}");
            assert_eq!(t.at_infinity_count(), 1, "p = {p}");
        }
    }

    #[test]
    fn split_family_cusp_counts() {
        for p in [5, 7, 11, 13, 17, 23] {
            let sp = table(p, SubgroupKind::SplitCartan);
            assert_eq!(
                (sp.cusp_count(), sp.galois_orbit_count, sp.at_infinity_count()),
                (p + 1, 3, 1),
                "sp, p = {p}"
            );
            let spn = table(p, SubgroupKind::SplitNormalizer);
            assert_eq!(
                (spn.cusp_count(), spn.galois_orbit_count, spn.at_infinity_count()),
                ((p + 1) / 2, 2, 1),
                "sp+, p = {p}"
            );
        }
    }

    #[test]
    fn nonsplit_family_cusp_counts() {
        for p in [5, 7, 11, 13, 17, 23] {
            let ns = table(p, SubgroupKind::NonsplitCartan);
            assert_eq!(
                (ns.cusp_count(), ns.galois_orbit_count, ns.at_infinity_count()),
                (p - 1, 1, p - 1),
                "ns, p = {p}"
            );
            let nsn = table(p, SubgroupKind::NonsplitNormalizer);
            assert_eq!(
                (nsn.cusp_count(), nsn.galois_orbit_count, nsn.at_infinity_count()),
                ((p - 1) / 2, 1, (p - 1) / 2),
                "ns+, p = {p}"
            );
        }
    }

    #[test]
    fn core_curve_cusp_counts_and_galois_orbits() {
        let galois = [(5, 2), (7, 3), (11, 4), (13, 4), (17, 5), (23, 7)];
        for (p, orbits) in galois {
            let t = table(p, SubgroupKind::DiagAntidiag);
            assert_eq!(t.cusp_count(), (p * p - 1) / 4, "p = {p}");
            assert_eq!(t.galois_orbit_count, orbits, "p = {p}");
            assert_eq!(t.at_infinity_count(), (p - 1) / 2, "p = {p}");
        }
    }

    #[test]
    fn cube_curve_cusp_counts() {
        for p in [5u32, 11, 17, 23] {
            let t = table(p, SubgroupKind::NonsplitCubes);
            assert_eq!(t.cusp_count(), 3 * (p - 1) / 2, "p = {p}");
            assert_eq!(t.galois_orbit_count, 2, "p = {p}");
            assert_eq!(t.at_infinity_count(), (p - 1) / 2, "p = {p}");
        }
    }

    #[test]
    fn cusp_enumeration_requires_full_determinant() {
        let ctx = PrimeContext::new(13).unwrap();
        let sub = build_subgroup(&ctx, SubgroupKind::NonsplitCubes);
        assert_eq!(
            enumerate_cusps(&ctx, &sub),
            Err(Gl2Error::DetNotFull(SubgroupKind::NonsplitCubes))
        );
    }

    #[test]
    fn at_infinity_cube_cusps_are_one_galois_orbit_matching_cube_classes() {
        for p in [5u32, 11, 17, 23] {
            let ctx = PrimeContext::new(p).unwrap();
            let check = cube_orbit_check(&ctx).unwrap();
            assert!(check.at_infinity_is_one_galois_orbit, "p = {p}");
            assert!(check.points_match_cube_classes, "p = {p}");
            assert_eq!(check.galois_orbit_count, 2, "p = {p}");
        }
    }

    #[test]
    fn degeneracy_coefficient_is_both_coordinates_nonzero() {
        let ctx = PrimeContext::new(11).unwrap();
        for s in all_symbols(11) {
            let expect = (s.v.a != 0 && s.v.b != 0) as u32;
            assert_eq!(eta_coefficient(&ctx, s), expect, "{s:?}");
        }
    }

    #[test]
    fn cuspidal_order_values() {
        let expect = [(5, 1), (7, 1), (11, 5), (13, 1), (17, 4), (19, 3), (23, 11), (29, 7), (41, 10)];
        for (p, n) in expect {
            assert_eq!(cuspidal_order(p), n, "p = {p}");
        }
    }

    #[test]
    fn symbol_orbit_counts_match_cusp_counts_for_full_det_subgroups() {
        let ctx = PrimeContext::new(11).unwrap();
        for kind in [SubgroupKind::NonsplitCubes, SubgroupKind::DiagAntidiag] {
            let sub = build_subgroup(&ctx, kind);
            let orbits = symbol_orbits(&ctx, &sub);
            let cusps = enumerate_cusps(&ctx, &sub).unwrap();
            assert_eq!(orbits.orbits.len() as u32, cusps.cusp_count(), "{kind:?}");
        }
    }

    #[test]
    fn divisor_order_table_matches_closed_form() {
        // raw eta totals: cube curve (p+1)/6 - [at infinity];
        // core curve 1 - [at infinity]
        for p in [11u32, 17, 23] {
            let ctx = PrimeContext::new(p).unwrap();
            let g = nu_table(&ctx, SubgroupKind::NonsplitCubes).unwrap();
            assert_eq!(g.modulus, cuspidal_order(p));
            assert_eq!(g.rows.len() as u32, 3 * (p - 1) / 2);
            for row in &g.rows {
                assert_eq!(row.fiber_size, (p + 1) / 6, "p = {p}");
                let expect = (p + 1) / 6 - row.at_infinity as u32;
                assert_eq!(row.eta_total, expect, "p = {p}, {row:?}");
                assert_eq!(row.nu, expect % g.modulus);
            }
            assert_eq!(
                g.rows.iter().filter(|r| r.at_infinity).count() as u32,
                (p - 1) / 2
            );
            let h = nu_table(&ctx, SubgroupKind::DiagAntidiag).unwrap();
            for row in &h.rows {
                assert_eq!(row.fiber_size, 1);
                let expect = 1 - row.at_infinity as u32;
                assert_eq!(row.eta_total, expect, "p = {p}, {row:?}");
            }
        }
    }
}
