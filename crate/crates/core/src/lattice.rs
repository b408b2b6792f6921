//! Geometry of the box `Λ_L = {1..L}²`, its outer boundary, boundary
//! conditions and height fields.
//!
//! Sites use 1-based `(x, y)` coordinates. Interior sites are stored
//! row-major with `x` as the row: index `(x − 1)·L + (y − 1)`. The outer
//! boundary is the set of `4L` sites at ℓ¹-distance exactly 1 from the box
//! (the four corners `(0,0)`, `(0,L+1)`, … are at distance 2 and are not part
//! of it). Outer sites are indexed `x = 0` column first, then `x = L+1`,
//! then `y = 0`, then `y = L+1`, each in increasing order of the free
//! coordinate.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A lattice site in 1-based coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    pub fn l1(self, other: Site) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

/// Where a neighbouring site lies relative to the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Interior site with its row-major index.
    Interior(usize),
    /// Outer-boundary site with its boundary index.
    Boundary(usize),
}

/// The box `{1..L}²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxGeometry {
    side: usize,
}

impl BoxGeometry {
    pub fn new(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::Param("box side L must be positive".into()));
        }
        if side > (i32::MAX as usize) / 4 {
            return Err(Error::Param("box side L too large".into()));
        }
        Ok(BoxGeometry { side })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.side * self.side
    }

    #[inline]
    pub fn num_boundary(&self) -> usize {
        4 * self.side
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        let l = self.side as i32;
        (1..=l).contains(&s.x) && (1..=l).contains(&s.y)
    }

    /// Classifies any site of `Z²`; `None` for sites at distance ≥ 2.
    pub fn locate(&self, s: Site) -> Option<Location> {
        let l = self.side as i32;
        if self.contains(s) {
            return Some(Location::Interior(self.index_unchecked(s)));
        }
        let inner = |v: i32| (1..=l).contains(&v);
        let b = if s.x == 0 && inner(s.y) {
            (s.y - 1) as usize
        } else if s.x == l + 1 && inner(s.y) {
            self.side + (s.y - 1) as usize
        } else if s.y == 0 && inner(s.x) {
            2 * self.side + (s.x - 1) as usize
        } else if s.y == l + 1 && inner(s.x) {
            3 * self.side + (s.x - 1) as usize
        } else {
            return None;
        };
        Some(Location::Boundary(b))
    }

    #[inline]
    fn index_unchecked(&self, s: Site) -> usize {
        (s.x - 1) as usize * self.side + (s.y - 1) as usize
    }

    pub fn index(&self, s: Site) -> Result<usize> {
        if self.contains(s) {
            Ok(self.index_unchecked(s))
        } else {
            Err(Error::Domain(alloc::format!(
                "site ({}, {}) outside the {}x{} box",
                s.x,
                s.y,
                self.side,
                self.side
            )))
        }
    }

    #[inline]
    pub fn site(&self, index: usize) -> Site {
        debug_assert!(index < self.num_sites());
        Site::new((index / self.side) as i32 + 1, (index % self.side) as i32 + 1)
    }

    pub fn boundary_site(&self, b: usize) -> Site {
        let l = self.side;
        let (k, off) = (b / l, (b % l) as i32 + 1);
        match k {
            0 => Site::new(0, off),
            1 => Site::new(l as i32 + 1, off),
            2 => Site::new(off, 0),
            _ => Site::new(off, l as i32 + 1),
        }
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.num_sites()).map(move |i| self.site(i))
    }

    pub fn outer_boundary(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.num_boundary()).map(move |b| self.boundary_site(b))
    }

    /// The four nearest neighbours of an interior site, in the order
    /// `(x−1, y), (x+1, y), (x, y−1), (x, y+1)`.
    pub fn neighbors(&self, s: Site) -> Result<[(Site, Location); 4]> {
        self.index(s)?;
        Ok(self.neighbors_of_index(self.index_unchecked(s)))
    }

    /// Same as [`neighbors`](Self::neighbors) for a row-major index.
    #[inline]
    pub fn neighbors_of_index(&self, index: usize) -> [(Site, Location); 4] {
        let s = self.site(index);
        let cand = [
            Site::new(s.x - 1, s.y),
            Site::new(s.x + 1, s.y),
            Site::new(s.x, s.y - 1),
            Site::new(s.x, s.y + 1),
        ];
        // Neighbours of an interior site are always at distance ≤ 1.
        cand.map(|n| (n, self.locate(n).expect("neighbour of interior site")))
    }

    /// Graph (ℓ¹) distance from an interior site to the outer boundary.
    pub fn dist_to_boundary(&self, s: Site) -> Result<u32> {
        self.index(s)?;
        let l = self.side as i32;
        Ok(s.x.min(l + 1 - s.x).min(s.y).min(l + 1 - s.y) as u32)
    }
}

/// Boundary heights on the outer boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum BoundaryCondition {
    /// The same height on every outer site.
    Const { value: i32 },
    /// One height per outer site, in boundary-index order.
    Map { values: Vec<i32> },
}

impl Default for BoundaryCondition {
    fn default() -> Self {
        BoundaryCondition::Const { value: 0 }
    }
}

impl BoundaryCondition {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: i32) -> Self {
        BoundaryCondition::Const { value }
    }

    pub fn validate(&self, geometry: &BoxGeometry) -> Result<()> {
        match self {
            BoundaryCondition::Const { .. } => Ok(()),
            BoundaryCondition::Map { values } if values.len() == geometry.num_boundary() => Ok(()),
            BoundaryCondition::Map { values } => Err(Error::Param(alloc::format!(
                "boundary map has {} values, expected 4L = {}",
                values.len(),
                geometry.num_boundary()
            ))),
        }
    }

    #[inline]
    pub fn value(&self, boundary_index: usize) -> i32 {
        match self {
            BoundaryCondition::Const { value } => *value,
            BoundaryCondition::Map { values } => values[boundary_index],
        }
    }

    /// Dense form over the `4L` outer sites.
    pub fn expand(&self, geometry: &BoxGeometry) -> Vec<i32> {
        (0..geometry.num_boundary()).map(|b| self.value(b)).collect()
    }

    pub fn min_max(&self) -> (i32, i32) {
        match self {
            BoundaryCondition::Const { value } => (*value, *value),
            BoundaryCondition::Map { values } => (
                values.iter().copied().min().unwrap_or(0),
                values.iter().copied().max().unwrap_or(0),
            ),
        }
    }
}

/// Integer heights on the box.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeightField {
    side: usize,
    heights: Vec<i32>,
}

impl HeightField {
    pub fn constant(geometry: &BoxGeometry, h: i32) -> Self {
        HeightField { side: geometry.side(), heights: vec![h; geometry.num_sites()] }
    }

    pub fn zeros(geometry: &BoxGeometry) -> Self {
        Self::constant(geometry, 0)
    }

    pub fn from_vec(geometry: &BoxGeometry, heights: Vec<i32>) -> Result<Self> {
        if heights.len() != geometry.num_sites() {
            return Err(Error::Domain(alloc::format!(
                "height vector has {} entries, expected {}",
                heights.len(),
                geometry.num_sites()
            )));
        }
        Ok(HeightField { side: geometry.side(), heights })
    }

    pub fn geometry(&self) -> BoxGeometry {
        BoxGeometry { side: self.side }
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn heights(&self) -> &[i32] {
        &self.heights
    }

    #[inline]
    pub fn heights_mut(&mut self) -> &mut [i32] {
        &mut self.heights
    }

    #[inline]
    pub fn get(&self, index: usize) -> i32 {
        self.heights[index]
    }

    #[inline]
    pub fn set(&mut self, index: usize, h: i32) {
        self.heights[index] = h;
    }

    pub fn at(&self, s: Site) -> Result<i32> {
        Ok(self.heights[self.geometry().index(s)?])
    }

    fn check_same(&self, other: &HeightField) -> Result<()> {
        if self.side != other.side {
            return Err(Error::Domain(alloc::format!(
                "geometry mismatch: L = {} vs L = {}",
                self.side,
                other.side
            )));
        }
        Ok(())
    }

    /// Pointwise order `self ≤ other`.
    pub fn leq(&self, other: &HeightField) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.heights.iter().zip(&other.heights).all(|(a, b)| a <= b))
    }

    /// Height seen from `index` in the direction of neighbour `loc`: the field
    /// inside the box, the boundary condition outside.
    #[inline]
    pub fn xi(&self, loc: Location, bc: &BoundaryCondition) -> i32 {
        match loc {
            Location::Interior(i) => self.heights[i],
            Location::Boundary(b) => bc.value(b),
        }
    }

    pub fn min_max(&self) -> (i32, i32) {
        let mut lo = i32::MAX;
        let mut hi = i32::MIN;
        for &h in &self.heights {
            lo = lo.min(h);
            hi = hi.max(h);
        }
        (lo, hi)
    }

    /// Number of sites with height at least `level`.
    pub fn count_at_least(&self, level: i64) -> usize {
        self.heights.iter().filter(|&&h| h as i64 >= level).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interior_count(g: &BoxGeometry, s: Site) -> usize {
        g.neighbors(s)
            .unwrap()
            .iter()
            .filter(|(_, l)| matches!(l, Location::Interior(_)))
            .count()
    }

    #[test]
    fn neighbor_tags() {
        let g = BoxGeometry::new(3).unwrap();
        assert_eq!(interior_count(&g, Site::new(2, 2)), 4);
        assert_eq!(interior_count(&g, Site::new(1, 1)), 2);
        let g1 = BoxGeometry::new(1).unwrap();
        assert_eq!(interior_count(&g1, Site::new(1, 1)), 0);
        for (n, loc) in g1.neighbors(Site::new(1, 1)).unwrap() {
            let Location::Boundary(b) = loc else { panic!() };
            assert_eq!(g1.boundary_site(b), n);
        }
    }

    #[test]
    fn neighbors_outside_box_is_domain_error() {
        let g = BoxGeometry::new(3).unwrap();
        assert!(matches!(g.neighbors(Site::new(0, 1)), Err(Error::Domain(_))));
        assert!(matches!(g.dist_to_boundary(Site::new(4, 4)), Err(Error::Domain(_))));
    }

    #[test]
    fn distances() {
        let g = BoxGeometry::new(5).unwrap();
        assert_eq!(g.dist_to_boundary(Site::new(3, 3)).unwrap(), 3);
        assert_eq!(g.dist_to_boundary(Site::new(1, 3)).unwrap(), 1);
        let g2 = BoxGeometry::new(2).unwrap();
        for s in g2.sites() {
            assert_eq!(g2.dist_to_boundary(s).unwrap(), 1);
        }
    }

    #[test]
    fn distance_matches_brute_force() {
        for l in 1..=8 {
            let g = BoxGeometry::new(l).unwrap();
            let outer: Vec<Site> = g.outer_boundary().collect();
            for s in g.sites() {
                let brute = outer.iter().map(|b| s.l1(*b)).min().unwrap();
                assert_eq!(g.dist_to_boundary(s).unwrap(), brute);
            }
        }
    }

    #[test]
    fn outer_boundary_is_exactly_distance_one() {
        for l in 1..=6 {
            let g = BoxGeometry::new(l).unwrap();
            let outer: Vec<Site> = g.outer_boundary().collect();
            assert_eq!(outer.len(), 4 * l);
            let li = l as i32;
            for x in -1..=li + 2 {
                for y in -1..=li + 2 {
                    let s = Site::new(x, y);
                    if g.contains(s) {
                        continue;
                    }
                    let d = g.sites().map(|t| t.l1(s)).min().unwrap();
                    assert_eq!(outer.contains(&s), d == 1, "site {s:?}");
                }
            }
            for (b, s) in outer.iter().enumerate() {
                assert_eq!(g.locate(*s), Some(Location::Boundary(b)));
            }
        }
    }

    #[test]
    fn neighbor_relation_is_symmetric() {
        let g = BoxGeometry::new(4).unwrap();
        for s in g.sites() {
            for (n, loc) in g.neighbors(s).unwrap() {
                if let Location::Interior(_) = loc {
                    assert!(g.neighbors(n).unwrap().iter().any(|(m, _)| *m == s));
                } else {
                    // boundary neighbours are adjacent back to exactly this site
                    assert_eq!(n.l1(s), 1);
                }
            }
        }
    }

    #[test]
    fn leq_examples() {
        let g = BoxGeometry::new(2).unwrap();
        let zero = HeightField::zeros(&g);
        let one = HeightField::constant(&g, 1);
        assert!(zero.leq(&one).unwrap());
        assert!(one.leq(&one).unwrap());
        let a = HeightField::from_vec(&g, vec![1, 0, 0, 0]).unwrap();
        let b = HeightField::from_vec(&g, vec![0, 1, 0, 0]).unwrap();
        assert!(!a.leq(&b).unwrap());
        assert!(!b.leq(&a).unwrap());
        let other = HeightField::zeros(&BoxGeometry::new(3).unwrap());
        assert!(zero.leq(&other).is_err());
    }

    #[test]
    fn bc_map_length_checked() {
        let g = BoxGeometry::new(3).unwrap();
        assert!(BoundaryCondition::Map { values: vec![0; 12] }.validate(&g).is_ok());
        assert!(BoundaryCondition::Map { values: vec![0; 16] }.validate(&g).is_err());
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn leq_is_a_partial_order(
            a in proptest::collection::vec(-2i32..3, 9),
            b in proptest::collection::vec(-2i32..3, 9),
            c in proptest::collection::vec(-2i32..3, 9),
        ) {
            let g = BoxGeometry::new(3).unwrap();
            let (a, b, c) = (
                HeightField::from_vec(&g, a).unwrap(),
                HeightField::from_vec(&g, b).unwrap(),
                HeightField::from_vec(&g, c).unwrap(),
            );
            prop_assert!(a.leq(&a).unwrap());
            if a.leq(&b).unwrap() && b.leq(&a).unwrap() {
                prop_assert_eq!(&a, &b);
            }
            if a.leq(&b).unwrap() && b.leq(&c).unwrap() {
                prop_assert!(a.leq(&c).unwrap());
            }
        }
    }
}
