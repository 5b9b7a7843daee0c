//! Geometry of the integer lattice: points, adjacency, finite domains and
//! their vertex boundaries.
//!
//! A [`LatticeDomain`] stores its closure `interior ∪ boundary` densely.
//! Interior points come first in lexicographic order, followed by the
//! boundary points, so Dirichlet unknowns occupy the index range
//! `0..interior_len()`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `Z^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticePoint(coords)
    }

    pub fn origin(dimension: usize) -> Self {
        LatticePoint(vec![0; dimension])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// The point shifted by `delta` along coordinate `axis`.
    pub fn offset(&self, axis: usize, delta: i64) -> LatticePoint {
        let mut coords = self.0.clone();
        coords[axis] += delta;
        LatticePoint(coords)
    }

    /// The `2n` lattice neighbours, ordered `+e_0, -e_0, +e_1, -e_1, ...`.
    pub fn neighbors(&self) -> Vec<LatticePoint> {
        (0..self.dimension())
            .flat_map(|axis| [self.offset(axis, 1), self.offset(axis, -1)])
            .collect()
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(coords: Vec<i64>) -> Self {
        LatticePoint(coords)
    }
}

impl<const N: usize> From<[i64; N]> for LatticePoint {
    fn from(coords: [i64; N]) -> Self {
        LatticePoint(coords.to_vec())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Graph distance on `Z^n`, i.e. the l1 distance of the coordinates.
pub fn l1_distance(x: &LatticePoint, y: &LatticePoint) -> Result<u64> {
    if x.dimension() != y.dimension() {
        return Err(Error::DimensionMismatch {
            expected: x.dimension(),
            found: y.dimension(),
        });
    }
    Ok(x.0.iter().zip(&y.0).map(|(a, b)| a.abs_diff(*b)).sum())
}

/// See [`LatticePoint::neighbors`].
pub fn neighbors(x: &LatticePoint) -> Vec<LatticePoint> {
    x.neighbors()
}

/// How a domain was built. Used for serialization and reporting only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainShape {
    Box { center: LatticePoint, size: u64 },
    Ball { center: LatticePoint, size: u64 },
    Points,
}

/// A finite set `Ω ⊂ Z^n` together with its vertex boundary
/// `δΩ = {y ∉ Ω : y ∼ x for some x ∈ Ω}`.
#[derive(Debug, Clone)]
pub struct LatticeDomain {
    dimension: usize,
    shape: DomainShape,
    points: Vec<LatticePoint>,
    interior_len: usize,
    index_of: HashMap<LatticePoint, usize>,
    // `2n` slots per closure point; `None` when the neighbour leaves the closure.
    neighbor_table: Vec<Option<usize>>,
}

impl PartialEq for LatticeDomain {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.interior_len == other.interior_len
            && self.points == other.points
    }
}

impl LatticeDomain {
    /// Builds a domain from an arbitrary finite interior point set.
    /// Duplicates are merged.
    pub fn from_points(dimension: usize, interior: Vec<LatticePoint>) -> Result<Self> {
        Self::build(dimension, interior, DomainShape::Points)
    }

    fn build(dimension: usize, interior: Vec<LatticePoint>, shape: DomainShape) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidInput(format!(
                "lattice dimension must be at least 2, got {dimension}"
            )));
        }
        if let Some(bad) = interior.iter().find(|p| p.dimension() != dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: bad.dimension(),
            });
        }
        if interior.is_empty() {
            return Err(Error::InvalidInput("domain interior is empty".into()));
        }

        let mut interior = interior;
        interior.sort();
        interior.dedup();
        let interior_set: HashSet<&LatticePoint> = interior.iter().collect();

        let mut boundary: Vec<LatticePoint> = interior
            .iter()
            .flat_map(|x| x.neighbors())
            .filter(|y| !interior_set.contains(y))
            .collect();
        boundary.sort();
        boundary.dedup();

        let interior_len = interior.len();
        let mut points = interior;
        points.extend(boundary);

        let index_of: HashMap<LatticePoint, usize> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();

        let degree = 2 * dimension;
        let mut neighbor_table = Vec::with_capacity(points.len() * degree);
        for p in &points {
            for axis in 0..dimension {
                for delta in [1, -1] {
                    neighbor_table.push(index_of.get(&p.offset(axis, delta)).copied());
                }
            }
        }

        Ok(LatticeDomain {
            dimension,
            shape,
            points,
            interior_len,
            index_of,
            neighbor_table,
        })
    }

    /// The l1 ball `{x : d(x, center) ≤ radius}`.
    pub fn ball(dimension: usize, radius: u64, center: &LatticePoint) -> Result<Self> {
        check_center(dimension, center)?;
        let r = radius as i64;
        let interior = box_points(dimension, r, center)
            .filter(|x| l1_distance(x, center).map(|d| d <= radius).unwrap_or(false))
            .collect();
        Self::build(
            dimension,
            interior,
            DomainShape::Ball {
                center: center.clone(),
                size: radius,
            },
        )
    }

    /// The l∞ box `{x : |x_i - c_i| ≤ half_width}`.
    pub fn cube(dimension: usize, half_width: u64, center: &LatticePoint) -> Result<Self> {
        check_center(dimension, center)?;
        if half_width == 0 {
            return Err(Error::InvalidInput("box half-width must be positive".into()));
        }
        let interior = box_points(dimension, half_width as i64, center).collect();
        Self::build(
            dimension,
            interior,
            DomainShape::Box {
                center: center.clone(),
                size: half_width,
            },
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of neighbours of every lattice point, `2n`.
    pub fn degree(&self) -> usize {
        2 * self.dimension
    }

    pub fn shape(&self) -> &DomainShape {
        &self.shape
    }

    pub fn interior(&self) -> &[LatticePoint] {
        &self.points[..self.interior_len]
    }

    pub fn boundary(&self) -> &[LatticePoint] {
        &self.points[self.interior_len..]
    }

    /// Closure points in index order.
    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn interior_len(&self) -> usize {
        self.interior_len
    }

    pub fn closure_len(&self) -> usize {
        self.points.len()
    }

    pub fn index_of(&self, x: &LatticePoint) -> Option<usize> {
        self.index_of.get(x).copied()
    }

    pub fn point(&self, index: usize) -> &LatticePoint {
        &self.points[index]
    }

    pub fn is_interior_index(&self, index: usize) -> bool {
        index < self.interior_len
    }

    pub fn contains_interior(&self, x: &LatticePoint) -> bool {
        self.index_of(x).is_some_and(|i| i < self.interior_len)
    }

    /// Closure indices of the `2n` neighbours of closure point `index`;
    /// `None` for neighbours outside the closure. Interior points have all
    /// of their neighbours inside the closure.
    pub fn neighbor_slots(&self, index: usize) -> &[Option<usize>] {
        let d = self.degree();
        &self.neighbor_table[index * d..(index + 1) * d]
    }

    /// Closure indices of the neighbours of an interior point.
    pub fn interior_neighbors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        debug_assert!(self.is_interior_index(index));
        self.neighbor_slots(index)
            .iter()
            .map(|slot| slot.expect("interior point with a neighbour outside the closure"))
    }

    /// Unordered edges `{x, y}` with both endpoints in the closure, each
    /// reported once as `(i, j)` with `i < j`.
    pub fn closure_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.closure_len()).flat_map(move |i| {
            self.neighbor_slots(i)
                .iter()
                .filter_map(move |slot| slot.filter(|&j| j > i).map(|j| (i, j)))
        })
    }

    /// Whether every interior point of `self` is an interior point of `outer`.
    pub fn is_nested_in(&self, outer: &LatticeDomain) -> bool {
        self.dimension == outer.dimension
            && self.interior().iter().all(|x| outer.contains_interior(x))
    }

    /// Breadth-first connectivity of the interior under the lattice edges.
    pub fn interior_is_connected(&self) -> bool {
        let mut seen = vec![false; self.interior_len];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(i) = queue.pop_front() {
            for j in self.interior_neighbors(i) {
                if j < self.interior_len && !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    queue.push_back(j);
                }
            }
        }
        reached == self.interior_len
    }
}

/// See [`LatticeDomain::ball`].
pub fn make_ball(dimension: usize, radius: u64, center: &LatticePoint) -> Result<LatticeDomain> {
    LatticeDomain::ball(dimension, radius, center)
}

/// See [`LatticeDomain::cube`].
pub fn make_box(dimension: usize, half_width: u64, center: &LatticePoint) -> Result<LatticeDomain> {
    LatticeDomain::cube(dimension, half_width, center)
}

pub fn is_nested(inner: &LatticeDomain, outer: &LatticeDomain) -> Result<bool> {
    if inner.dimension() != outer.dimension() {
        return Err(Error::DimensionMismatch {
            expected: inner.dimension(),
            found: outer.dimension(),
        });
    }
    Ok(inner.is_nested_in(outer))
}

fn check_center(dimension: usize, center: &LatticePoint) -> Result<()> {
    if dimension < 2 {
        return Err(Error::InvalidInput(format!(
            "lattice dimension must be at least 2, got {dimension}"
        )));
    }
    if center.dimension() != dimension {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            found: center.dimension(),
        });
    }
    Ok(())
}

fn box_points(
    dimension: usize,
    half_width: i64,
    center: &LatticePoint,
) -> impl Iterator<Item = LatticePoint> + '_ {
    let side = (2 * half_width + 1) as usize;
    let count = side.pow(dimension as u32);
    (0..count).map(move |mut flat| {
        let mut coords = vec![0i64; dimension];
        for axis in (0..dimension).rev() {
            coords[axis] = center.coords()[axis] - half_width + (flat % side) as i64;
            flat /= side;
        }
        LatticePoint(coords)
    })
}
