//! Level-set contours on the dual lattice.
//!
//! A dual vertex `(a, b)` sits at the corner point `(a + ½, b + ½)` shared by
//! the sites `(a, b)`, `(a+1, b)`, `(a, b+1)` and `(a+1, b+1)`. A contour is a
//! closed walk on dual vertices traversed counter-clockwise, so its interior
//! always lies on the left of every bond.
//!
//! Level sets are split into circuits with the left-turn rule: at a dual
//! vertex where four level bonds meet, the walk turns towards the high site
//! it is following. High sites that only touch diagonally therefore end up
//! in separate circuits.
//!
//! Sites further than distance 1 from the box never enter the Hamiltonian;
//! here they are treated as lying below every level, so circuits always
//! close.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, BoxGeometry, HeightField, Location, Site};

/// Corner point `(a + ½, b + ½)` of the primal lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DualVertex {
    pub a: i32,
    pub b: i32,
}

impl DualVertex {
    pub const fn new(a: i32, b: i32) -> Self {
        DualVertex { a, b }
    }

    // Doubled real coordinates.
    fn doubled(self) -> (i32, i32) {
        (2 * self.a + 1, 2 * self.b + 1)
    }

    fn from_doubled(x: i32, y: i32) -> Self {
        DualVertex::new((x - 1) / 2, (y - 1) / 2)
    }
}

#[inline]
fn rot90((x, y): (i32, i32)) -> (i32, i32) {
    (-y, x)
}

#[inline]
fn rot270((x, y): (i32, i32)) -> (i32, i32) {
    (y, -x)
}

/// Sites on the left and right of the directed dual bond `from → to`.
fn bond_sides(from: DualVertex, to: DualVertex) -> (Site, Site) {
    let (fx, fy) = from.doubled();
    let v = (to.a - from.a, to.b - from.b);
    // midpoint (doubled) = from + v; high side = midpoint - d with v = rot90(d)
    let d = rot270(v);
    let (mx, my) = (fx + v.0, fy + v.1);
    let left = Site::new((mx - d.0) / 2, (my - d.1) / 2);
    let right = Site::new(left.x + d.0, left.y + d.1);
    (left, right)
}

/// Directed dual bond separating `high` (left) from its neighbour `low`.
fn bond_between(high: Site, low: Site) -> (DualVertex, DualVertex) {
    let d = (low.x - high.x, low.y - high.y);
    let v = rot90(d);
    let (sx, sy) = (2 * high.x + d.0, 2 * high.y + d.1);
    (DualVertex::from_doubled(sx - v.0, sy - v.1), DualVertex::from_doubled(sx + v.0, sy + v.1))
}

/// Closed, positively oriented dual circuit with its interior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    vertices: Vec<DualVertex>,
    interior: Vec<Site>,
    inner_boundary: Vec<Site>,
    outer_boundary: Vec<Site>,
}

impl Contour {
    /// Builds a contour from its cyclic vertex sequence (without repeating the
    /// first vertex). Fails unless the walk is closed, uses distinct bonds,
    /// turns at every vertex it visits twice, and runs counter-clockwise.
    pub fn from_vertices(vertices: Vec<DualVertex>) -> Result<Self> {
        let n = vertices.len();
        if n < 4 {
            return Err(Error::Domain(format!("contour needs at least 4 bonds, got {n}")));
        }
        let mut bonds = BTreeSet::new();
        for i in 0..n {
            let (p, q) = (vertices[i], vertices[(i + 1) % n]);
            if p.a.abs_diff(q.a) + p.b.abs_diff(q.b) != 1 {
                return Err(Error::Domain(format!("vertices {i} and {} are not dual neighbours", (i + 1) % n)));
            }
            if !bonds.insert(if p < q { (p, q) } else { (q, p) }) {
                return Err(Error::Domain(format!("bond {i} repeated")));
            }
        }
        let mut visits: BTreeMap<DualVertex, u8> = BTreeMap::new();
        for &v in &vertices {
            *visits.entry(v).or_default() += 1;
        }
        for i in 0..n {
            let v = vertices[i];
            if visits[&v] > 1 {
                let prev = vertices[(i + n - 1) % n];
                let next = vertices[(i + 1) % n];
                let din = (v.a - prev.a, v.b - prev.b);
                let dout = (next.a - v.a, next.b - v.b);
                if din == dout {
                    return Err(Error::Domain(format!("contour crosses itself at vertex ({}, {})", v.a, v.b)));
                }
            }
        }
        let mut twice_area: i64 = 0;
        for i in 0..n {
            let (p, q) = (vertices[i], vertices[(i + 1) % n]);
            twice_area += p.a as i64 * q.b as i64 - q.a as i64 * p.b as i64;
        }
        if twice_area <= 0 {
            return Err(Error::Domain("contour is not positively oriented".into()));
        }
        let mut c = Contour { vertices, interior: Vec::new(), inner_boundary: Vec::new(), outer_boundary: Vec::new() };
        c.fill_interior()?;
        Ok(c)
    }

    fn bonds(&self) -> impl Iterator<Item = (DualVertex, DualVertex)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Flood fill from the left side of every bond without crossing the
    /// contour.
    fn fill_interior(&mut self) -> Result<()> {
        let amin = self.vertices.iter().map(|v| v.a).min().unwrap();
        let amax = self.vertices.iter().map(|v| v.a).max().unwrap();
        let bmin = self.vertices.iter().map(|v| v.b).min().unwrap();
        let bmax = self.vertices.iter().map(|v| v.b).max().unwrap();
        // candidate interior sites: x in amin+1..=amax, y in bmin+1..=bmax
        let (x0, y0) = (amin + 1, bmin + 1);
        let w = (amax - amin) as usize;
        let h = (bmax - bmin) as usize;
        let inside = |s: Site| s.x >= x0 && s.y >= y0 && ((s.x - x0) as usize) < w && ((s.y - y0) as usize) < h;
        let idx = |s: Site| (s.x - x0) as usize * h + (s.y - y0) as usize;
        let mut crossed: BTreeSet<(Site, Site)> = BTreeSet::new();
        let mut inner = BTreeSet::new();
        let mut outer = BTreeSet::new();
        for (p, q) in self.bonds() {
            let (l, r) = bond_sides(p, q);
            crossed.insert((l.min(r), l.max(r)));
            inner.insert(l);
            outer.insert(r);
        }
        if inner.iter().any(|s| outer.contains(s)) {
            return Err(Error::Domain("contour has sites on both of its sides".into()));
        }
        let mut seen = vec![false; w * h];
        let mut stack: Vec<Site> = Vec::new();
        for &s in &inner {
            if !inside(s) {
                return Err(Error::Domain("contour interior is unbounded".into()));
            }
            if !seen[idx(s)] {
                seen[idx(s)] = true;
                stack.push(s);
            }
        }
        let mut interior = Vec::new();
        while let Some(s) = stack.pop() {
            interior.push(s);
            for t in [Site::new(s.x - 1, s.y), Site::new(s.x + 1, s.y), Site::new(s.x, s.y - 1), Site::new(s.x, s.y + 1)] {
                if crossed.contains(&(s.min(t), s.max(t))) {
                    continue;
                }
                if !inside(t) {
                    return Err(Error::Domain("contour interior is unbounded".into()));
                }
                if !seen[idx(t)] {
                    seen[idx(t)] = true;
                    stack.push(t);
                }
            }
        }
        if interior.iter().any(|s| outer.contains(s)) {
            return Err(Error::Domain("contour interior leaks to its outer side".into()));
        }
        interior.sort_unstable();
        self.interior = interior;
        self.inner_boundary = inner.into_iter().collect();
        self.outer_boundary = outer.into_iter().collect();
        Ok(())
    }

    pub fn vertices(&self) -> &[DualVertex] {
        &self.vertices
    }

    /// `|γ|`, the number of dual bonds.
    pub fn perimeter(&self) -> usize {
        self.vertices.len()
    }

    /// `|Λ_γ|`.
    pub fn interior_area(&self) -> usize {
        self.interior.len()
    }

    /// `Λ_γ`, sorted.
    pub fn interior(&self) -> &[Site] {
        &self.interior
    }

    /// `∂γ⁺`: interior sites adjacent to a bond of the contour.
    pub fn inner_boundary(&self) -> &[Site] {
        &self.inner_boundary
    }

    /// `∂γ⁻`: exterior sites adjacent to a bond of the contour.
    pub fn outer_boundary(&self) -> &[Site] {
        &self.outer_boundary
    }

    pub fn contains_site(&self, s: Site) -> bool {
        self.interior.binary_search(&s).is_ok()
    }

    /// Undirected bond set, for comparisons.
    pub fn bond_set(&self) -> BTreeSet<(DualVertex, DualVertex)> {
        self.bonds().map(|(p, q)| if p < q { (p, q) } else { (q, p) }).collect()
    }

    /// Vertex list closed by repeating the first vertex.
    pub fn closed_vertex_list(&self) -> Vec<[i32; 2]> {
        let mut v: Vec<[i32; 2]> = self.vertices.iter().map(|d| [d.a, d.b]).collect();
        v.push(v[0]);
        v
    }
}

/// Height seen at an arbitrary site: the field in the box, the boundary
/// condition on the outer boundary, and `−∞` beyond.
pub fn height_at(field: &HeightField, bc: &BoundaryCondition, s: Site) -> i64 {
    match field.geometry().locate(s) {
        Some(Location::Interior(i)) => field.get(i) as i64,
        Some(Location::Boundary(b)) => bc.value(b) as i64,
        None => i64::MIN,
    }
}

/// Exact membership test `η ∈ C_{γ,h}`: `η ≥ h` on `∂γ⁺` and `η ≤ h − 1` on
/// `∂γ⁻`.
pub fn is_h_contour(contour: &Contour, field: &HeightField, bc: &BoundaryCondition, h: i64) -> bool {
    contour.inner_boundary.iter().all(|&s| height_at(field, bc, s) >= h)
        && contour.outer_boundary.iter().all(|&s| height_at(field, bc, s) < h)
}

/// Which side of a level circuit is high.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `{η ≥ h}` inside: an h-contour.
    Up,
    /// `{η ≤ h − 1}` inside: the boundary of a hole in the high set.
    Down,
}

/// A circuit of the level set at height `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelCircuit {
    pub contour: Contour,
    pub orientation: Orientation,
}

/// Primal bonds separating `{η ≥ h}` from `{η ≤ h − 1}`, directed with the
/// high site on the left.
fn level_bonds(field: &HeightField, bc: &BoundaryCondition, h: i64) -> Vec<(DualVertex, DualVertex)> {
    let l = field.side() as i32;
    let high = |s: Site| height_at(field, bc, s) >= h;
    let mut out = Vec::new();
    for x in -1..=l + 2 {
        for y in -1..=l + 2 {
            let s = Site::new(x, y);
            for t in [Site::new(x + 1, y), Site::new(x, y + 1)] {
                match (high(s), high(t)) {
                    (true, false) => out.push(bond_between(s, t)),
                    (false, true) => out.push(bond_between(t, s)),
                    _ => {}
                }
            }
        }
    }
    out
}

/// Splits directed bonds into closed walks. `turn_left(v)` chooses the turn at
/// a vertex with two outgoing bonds.
fn trace_cycles(
    bonds: &[(DualVertex, DualVertex)],
    mut turn_left: impl FnMut(DualVertex) -> bool,
) -> Vec<Vec<DualVertex>> {
    let mut out_map: BTreeMap<DualVertex, Vec<DualVertex>> = BTreeMap::new();
    for &(p, q) in bonds {
        out_map.entry(p).or_default().push(q);
    }
    let mut choose = |cur: DualVertex, din: (i32, i32)| -> DualVertex {
        let outs = &out_map[&cur];
        if outs.len() == 1 {
            return outs[0];
        }
        let want = if turn_left(cur) { rot90(din) } else { rot270(din) };
        outs.iter().copied().find(|q| (q.a - cur.a, q.b - cur.b) == want).unwrap_or(outs[0])
    };
    let mut used: BTreeSet<(DualVertex, DualVertex)> = BTreeSet::new();
    let mut starts: Vec<(DualVertex, DualVertex)> = bonds.to_vec();
    starts.sort_unstable();
    let mut cycles = Vec::new();
    for (p0, q0) in starts {
        if used.contains(&(p0, q0)) {
            continue;
        }
        used.insert((p0, q0));
        let mut cycle = vec![p0];
        let (mut prev, mut cur) = (p0, q0);
        loop {
            let next = choose(cur, (cur.a - prev.a, cur.b - prev.b));
            if cur == p0 && next == q0 {
                break;
            }
            if !used.insert((cur, next)) {
                // Inconsistent turn choices; close the walk here.
                break;
            }
            cycle.push(cur);
            prev = cur;
            cur = next;
        }
        cycles.push(cycle);
    }
    cycles
}

fn signed_twice_area(vs: &[DualVertex]) -> i64 {
    let n = vs.len();
    (0..n)
        .map(|i| {
            let (p, q) = (vs[i], vs[(i + 1) % n]);
            p.a as i64 * q.b as i64 - q.a as i64 * p.b as i64
        })
        .sum()
}

/// All circuits of the level set at height `h`, in a deterministic order.
pub fn level_circuits(field: &HeightField, bc: &BoundaryCondition, h: i64) -> Vec<LevelCircuit> {
    let bonds = level_bonds(field, bc, h);
    trace_cycles(&bonds, |_| true)
        .into_iter()
        .map(|mut vs| {
            let orientation = if signed_twice_area(&vs) > 0 {
                Orientation::Up
            } else {
                vs.reverse();
                Orientation::Down
            };
            let contour = Contour::from_vertices(vs).expect("traced level circuit is a valid contour");
            LevelCircuit { contour, orientation }
        })
        .collect()
}

/// The h-contours of `field`: level circuits with `{η ≥ h}` inside.
pub fn extract_h_contours(field: &HeightField, bc: &BoundaryCondition, h: i64) -> Vec<Contour> {
    level_circuits(field, bc, h)
        .into_iter()
        .filter(|c| c.orientation == Orientation::Up)
        .map(|c| c.contour)
        .collect()
}

/// Result of the downward shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftOutcome {
    pub field: HeightField,
    /// Some shifted height became negative.
    pub below_floor: bool,
    /// The contour encloses sites outside the box, which cannot be shifted.
    pub encloses_exterior: bool,
}

/// `T_γ`: lowers every height inside `γ` by one.
pub fn shift_down(field: &HeightField, contour: &Contour) -> ShiftOutcome {
    let g = field.geometry();
    let mut out = field.clone();
    let mut below_floor = false;
    let mut encloses_exterior = false;
    for &s in contour.interior() {
        match g.locate(s) {
            Some(Location::Interior(i)) => {
                let v = out.get(i) - 1;
                below_floor |= v < 0;
                out.set(i, v);
            }
            _ => encloses_exterior = true,
        }
    }
    ShiftOutcome { field: out, below_floor, encloses_exterior }
}

/// Membership in `A = {no h-contour with |Λ_γ| > threshold}`.
pub fn atypical_membership(field: &HeightField, bc: &BoundaryCondition, h: i64, area_threshold: f64) -> bool {
    extract_h_contours(field, bc, h).iter().all(|c| (c.interior_area() as f64) <= area_threshold)
}

/// Every contour whose interior is a subset of the box and whose perimeter
/// is at most `max_perimeter`, one per interior set. A set qualifies when its
/// boundary bonds can be joined into a single circuit under some choice of
/// turns at four-bond vertices.
pub fn enumerate_contours(geometry: &BoxGeometry, max_perimeter: usize) -> Result<Vec<Contour>> {
    let n = geometry.num_sites();
    if n > 20 {
        return Err(Error::Usage(format!("contour enumeration limited to 20 sites, box has {n}")));
    }
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let in_set = |s: Site| matches!(geometry.locate(s), Some(Location::Interior(i)) if mask >> i & 1 == 1);
        let mut bonds = Vec::new();
        for i in 0..n {
            if mask >> i & 1 == 0 {
                continue;
            }
            let s = geometry.site(i);
            for t in [Site::new(s.x - 1, s.y), Site::new(s.x + 1, s.y), Site::new(s.x, s.y - 1), Site::new(s.x, s.y + 1)] {
                if !in_set(t) {
                    bonds.push(bond_between(s, t));
                }
            }
        }
        if bonds.len() > max_perimeter {
            continue;
        }
        let mut degree: BTreeMap<DualVertex, u8> = BTreeMap::new();
        for (p, _) in &bonds {
            *degree.entry(*p).or_default() += 1;
        }
        let saddles: Vec<DualVertex> = degree.iter().filter(|(_, d)| **d > 1).map(|(v, _)| *v).collect();
        let target: Vec<Site> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| geometry.site(i)).collect();
        for choice in 0u32..(1u32 << saddles.len()) {
            let cycles = trace_cycles(&bonds, |v| {
                let k = saddles.binary_search(&v).unwrap();
                choice >> k & 1 == 0
            });
            if cycles.len() != 1 {
                continue;
            }
            if let Ok(c) = Contour::from_vertices(cycles.into_iter().next().unwrap()) {
                let mut interior = c.interior().to_vec();
                interior.sort_unstable();
                if interior == target {
                    out.push(c);
                    break;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{Mode, Model, ModelParams};
    use alloc::vec;

    fn field(l: usize, hs: &[i32]) -> HeightField {
        HeightField::from_vec(&BoxGeometry::new(l).unwrap(), hs.to_vec()).unwrap()
    }

    fn spike() -> HeightField {
        field(3, &[0, 0, 0, 0, 1, 0, 0, 0, 0])
    }

    fn zbc() -> BoundaryCondition {
        BoundaryCondition::zero()
    }

    fn xorshift(seed: u64) -> impl FnMut() -> u64 {
        let mut s = seed;
        move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s
        }
    }

    #[test]
    fn flat_field_has_no_contours() {
        assert!(extract_h_contours(&field(3, &[0; 9]), &zbc(), 1).is_empty());
    }

    #[test]
    fn spike_gives_unit_square() {
        let cs = extract_h_contours(&spike(), &zbc(), 1);
        assert_eq!(cs.len(), 1);
        let c = &cs[0];
        assert_eq!(c.perimeter(), 4);
        assert_eq!(c.interior_area(), 1);
        assert_eq!(c.interior(), &[Site::new(2, 2)]);
        assert!(is_h_contour(c, &spike(), &zbc(), 1));
        assert!(!is_h_contour(c, &spike(), &zbc(), 2));
    }

    #[test]
    fn contour_for_two_levels_at_once() {
        let f = field(3, &[0, 0, 0, 0, 3, 0, 0, 0, 0]);
        let c = &extract_h_contours(&f, &zbc(), 1)[0];
        for h in 1..=3 {
            assert!(is_h_contour(c, &f, &zbc(), h));
        }
        assert!(!is_h_contour(c, &f, &zbc(), 4));
    }

    #[test]
    fn domino() {
        let f = field(3, &[0, 0, 0, 0, 1, 1, 0, 0, 0]);
        let cs = extract_h_contours(&f, &zbc(), 1);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].interior_area(), 2);
        assert_eq!(cs[0].perimeter(), 6);
    }

    #[test]
    fn checkerboard_matches_bond_enumeration() {
        let f = field(2, &[1, 0, 0, 1]);
        let cs = extract_h_contours(&f, &zbc(), 1);
        assert_eq!(cs.len(), 2);
        let mut got = BTreeSet::new();
        for c in &cs {
            assert!(is_h_contour(c, &f, &zbc(), 1));
            for b in c.bond_set() {
                assert!(got.insert(b), "bond used twice");
            }
        }
        assert_eq!(got, brute_separating_bonds(&f, 1));
        assert_eq!(got.len(), 8);
    }

    /// Dual bonds crossing primal bonds (x,y) with η_x ≥ h > η_y, from
    /// explicit geometry.
    fn brute_separating_bonds(f: &HeightField, h: i64) -> BTreeSet<(DualVertex, DualVertex)> {
        let l = f.side() as i32;
        let mut set = BTreeSet::new();
        for x in -1..=l + 2 {
            for y in -1..=l + 2 {
                let s = Site::new(x, y);
                let hs = height_at(f, &zbc(), s) >= h;
                // horizontal primal bond (x,y)-(x+1,y) is crossed by the
                // vertical dual segment between corners (x, y-1) and (x, y)
                if hs != (height_at(f, &zbc(), Site::new(x + 1, y)) >= h) {
                    set.insert((DualVertex::new(x, y - 1), DualVertex::new(x, y)));
                }
                if hs != (height_at(f, &zbc(), Site::new(x, y + 1)) >= h) {
                    set.insert((DualVertex::new(x - 1, y), DualVertex::new(x, y)));
                }
            }
        }
        set
    }

    #[test]
    fn ring_has_hole_circuit() {
        let f = field(3, &[1, 1, 1, 1, 0, 1, 1, 1, 1]);
        let all = level_circuits(&f, &zbc(), 1);
        assert_eq!(all.len(), 2);
        let up: Vec<_> = all.iter().filter(|c| c.orientation == Orientation::Up).collect();
        assert_eq!(up.len(), 1);
        assert_eq!(up[0].contour.interior_area(), 9);
        assert_eq!(up[0].contour.perimeter(), 12);
        assert!(is_h_contour(&up[0].contour, &f, &zbc(), 1));
    }

    #[test]
    fn shift_examples() {
        let f = spike();
        let c = &extract_h_contours(&f, &zbc(), 1)[0];
        let s = shift_down(&f, c);
        assert_eq!(s.field, field(3, &[0; 9]));
        assert!(!s.below_floor);
        let twice = shift_down(&shift_down(&f, c).field, c);
        let mut by_two = f.clone();
        by_two.set(4, -1);
        assert_eq!(twice.field, by_two);
        assert!(twice.below_floor);
        for p in [1.0, 1.5, 2.0, 3.0] {
            let m = Model::new(ModelParams::new(p, 1.0, 3, Mode::Free)).unwrap();
            let before = m.total_energy(&f).unwrap().value();
            let after = m.total_energy(&s.field).unwrap().value();
            assert_eq!(after, before - c.perimeter() as f64);
        }
    }

    #[test]
    fn area_and_perimeter_examples() {
        let unit = Contour::from_vertices(vec![
            DualVertex::new(0, 0),
            DualVertex::new(1, 0),
            DualVertex::new(1, 1),
            DualVertex::new(0, 1),
        ])
        .unwrap();
        assert_eq!((unit.interior_area(), unit.perimeter()), (1, 4));
        assert_eq!(unit.interior(), &[Site::new(1, 1)]);
        let domino = Contour::from_vertices(vec![
            DualVertex::new(0, 0),
            DualVertex::new(2, 0),
            DualVertex::new(2, 1),
            DualVertex::new(0, 1),
        ]);
        assert!(domino.is_err(), "non-adjacent vertices rejected");
        let domino = Contour::from_vertices(vec![
            DualVertex::new(0, 0),
            DualVertex::new(1, 0),
            DualVertex::new(2, 0),
            DualVertex::new(2, 1),
            DualVertex::new(1, 1),
            DualVertex::new(0, 1),
        ])
        .unwrap();
        assert_eq!((domino.interior_area(), domino.perimeter()), (2, 6));
    }

    #[test]
    fn malformed_contours_rejected() {
        // clockwise
        let cw = vec![DualVertex::new(0, 0), DualVertex::new(0, 1), DualVertex::new(1, 1), DualVertex::new(1, 0)];
        assert!(Contour::from_vertices(cw).is_err());
        // repeated bond
        let back = vec![DualVertex::new(0, 0), DualVertex::new(1, 0), DualVertex::new(0, 0), DualVertex::new(1, 0)];
        assert!(Contour::from_vertices(back).is_err());
        // figure eight crossing straight through (1,1)
        let cross = vec![
            DualVertex::new(0, 1),
            DualVertex::new(1, 1),
            DualVertex::new(2, 1),
            DualVertex::new(2, 2),
            DualVertex::new(1, 2),
            DualVertex::new(1, 1),
            DualVertex::new(1, 0),
            DualVertex::new(0, 0),
        ];
        assert!(Contour::from_vertices(cross).is_err());
    }

    #[test]
    fn atypical_examples() {
        let z = field(3, &[0; 9]);
        assert!(atypical_membership(&z, &zbc(), 1, 0.0));
        assert!(!atypical_membership(&spike(), &zbc(), 1, 0.0));
        assert!(atypical_membership(&spike(), &zbc(), 1, 1.0));
        // plateau of k×k sites at height 2 inside a 6×6 box
        for k in 1..=4usize {
            let g = BoxGeometry::new(6).unwrap();
            let mut f = HeightField::zeros(&g);
            for x in 2..2 + k as i32 {
                for y in 2..2 + k as i32 {
                    f.set(g.index(Site::new(x, y)).unwrap(), 2);
                }
            }
            for threshold in [0.0, 3.0, 4.0, 8.5, 9.0, 16.0] {
                assert_eq!(atypical_membership(&f, &zbc(), 2, threshold), (k * k) as f64 <= threshold);
            }
        }
    }

    #[test]
    fn enumerated_small_contours() {
        let g = BoxGeometry::new(3).unwrap();
        let cs = enumerate_contours(&g, 8).unwrap();
        let count = |p: usize| cs.iter().filter(|c| c.perimeter() == p).count();
        assert_eq!(count(4), 9);
        assert_eq!(count(6), 12);
        // 2×2 squares (4), straight trominoes (6), L-trominoes (16), diagonal pairs (8)
        assert_eq!(count(8), 34);
        assert!(cs.iter().all(|c| c.perimeter() <= 8));
        let diag = cs.iter().find(|c| c.interior() == [Site::new(1, 1), Site::new(2, 2)]).unwrap();
        assert_eq!(diag.perimeter(), 8);
    }

    fn random_field(next: &mut impl FnMut() -> u64, l: usize, top: u64) -> HeightField {
        let g = BoxGeometry::new(l).unwrap();
        HeightField::from_vec(&g, (0..l * l).map(|_| (next() % (top + 1)) as i32).collect()).unwrap()
    }

    #[test]
    fn level_set_consistency_random() {
        let mut next = xorshift(0xC0FFEE);
        for _ in 0..1000 {
            let l = 2 + (next() % 6) as usize;
            let f = random_field(&mut next, l, 3);
            let h = 1 + (next() % 3) as i64;
            let mut got = BTreeSet::new();
            for c in level_circuits(&f, &zbc(), h) {
                for b in c.contour.bond_set() {
                    assert!(got.insert(b));
                }
                if c.orientation == Orientation::Up {
                    assert!(is_h_contour(&c.contour, &f, &zbc(), h));
                }
                let p = c.contour.perimeter();
                assert!(c.contour.interior_area() * 16 <= p * p, "isoperimetry");
            }
            assert_eq!(got, brute_separating_bonds(&f, h));
        }
    }

    #[test]
    fn interior_matches_winding_number() {
        // Independent interior test: winding number of the polygon around
        // each site centre, counted on a ray towards increasing x.
        let mut next = xorshift(77);
        for _ in 0..300 {
            let l = 3 + (next() % 5) as usize;
            let f = random_field(&mut next, l, 2);
            let g = f.geometry();
            for c in extract_h_contours(&f, &zbc(), 1) {
                let vs = c.vertices();
                for s in g.sites() {
                    let mut wind = 0i32;
                    for k in 0..vs.len() {
                        let (p, q) = (vs[k], vs[(k + 1) % vs.len()]);
                        if p.a == q.a && p.a >= s.x && p.b.min(q.b) + 1 == s.y {
                            wind += q.b - p.b;
                        }
                    }
                    assert_eq!(wind != 0, c.contains_site(s), "L={l} {:?} site {s:?}", f.heights());
                }
            }
        }
    }

    #[test]
    fn nesting_of_levels() {
        let mut next = xorshift(4242);
        for _ in 0..500 {
            let l = 3 + (next() % 5) as usize;
            let f = random_field(&mut next, l, 3);
            for h in 1..3 {
                let lower = extract_h_contours(&f, &zbc(), h);
                for c in extract_h_contours(&f, &zbc(), h + 1) {
                    assert!(lower.iter().any(|d| c.interior().iter().all(|s| d.contains_site(*s))));
                }
            }
        }
    }

    #[test]
    fn peierls_energy_law_random() {
        let mut next = xorshift(99);
        let ps = [1.0, 1.5, 2.0, 3.0];
        let models: Vec<Model> = ps.iter().map(|&p| Model::new(ModelParams::new(p, 1.0, 5, Mode::Free)).unwrap()).collect();
        let mut checked = 0;
        while checked < 2000 {
            let f = random_field(&mut next, 5, 4);
            let h = 1 + (next() % 4) as i64;
            for c in extract_h_contours(&f, &zbc(), h) {
                let t = shift_down(&f, &c).field;
                for m in &models {
                    let before = m.total_energy(&f).unwrap().value();
                    let after = m.total_energy(&t).unwrap().value();
                    assert!(after <= before - c.perimeter() as f64 + 1e-9 * before.max(1.0));
                }
                checked += 1;
            }
        }
    }
}
