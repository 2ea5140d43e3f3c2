//! Integer-multiplicity polyhedral 1-currents.
//!
//! A [`PolyhedralCurrent`] is a finite sum of oriented segments `σ_i` with
//! multiplicities `θ_i ∈ Z^m`; as a measure it is `Σ θ_i ⊗ τ_i H¹⌞σ_i` where
//! `τ_i` is the unit tangent. All operations here are exact on the integer
//! side: boundary cancellation happens between identical vertex coordinates,
//! never "approximately".

mod lattice;
mod loops;
mod map;
mod normalize;
mod region;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use lattice::{LatticeVector, Point};
pub use loops::{loops_to_current, Loop};
pub use map::{AffineMap, PiecewiseAffineCell, PiecewiseAffineMap, SegmentMap};
pub use region::Region;

pub(crate) use lattice::{dot, norm};

/// Coordinates read from files are rounded to this grid, so that vertices
/// shared between pieces compare equal.
pub const SNAP_TOLERANCE: f64 = 1e-9;

/// Clipping tolerance on the segment parameter `s ∈ [0, 1]`.
pub const CLIP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurrentError {
    #[error("degenerate segment: start and end coincide at {0}")]
    DegenerateSegment(Point),
    #[error("{what} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("current is not closed; boundary atoms: {0}")]
    NotClosed(BoundaryChain),
    #[error("loop extraction produced a two-vertex back-and-forth loop; input was not normalized")]
    DegenerateLoop,
    #[error("map is not injective on the support: {0}")]
    NonInjective(String),
    #[error("map cells do not cover the segment {start} -> {end}")]
    Uncovered { start: Point, end: Point },
    #[error("map is discontinuous across a cell interface at {0}")]
    Discontinuous(Point),
}

/// Rounds every coordinate to the [`SNAP_TOLERANCE`] grid.
pub fn snap(coords: &[f64]) -> Vec<f64> {
    coords
        .iter()
        .map(|&x| (x / SNAP_TOLERANCE).round() * SNAP_TOLERANCE)
        .collect()
}

/// A segment with a direction; `start != end` is enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedSegment {
    start: Point,
    end: Point,
}

impl OrientedSegment {
    pub fn new(start: impl Into<Point>, end: impl Into<Point>) -> Result<Self, CurrentError> {
        let (start, end) = (start.into(), end.into());
        if start.dim() != end.dim() {
            return Err(CurrentError::DimensionMismatch {
                what: "segment end",
                expected: start.dim(),
                found: end.dim(),
            });
        }
        if start == end {
            return Err(CurrentError::DegenerateSegment(start));
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> &Point {
        &self.start
    }

    pub fn end(&self) -> &Point {
        &self.end
    }

    pub fn dim(&self) -> usize {
        self.start.dim()
    }

    pub fn displacement(&self) -> Vec<f64> {
        self.end
            .coords()
            .iter()
            .zip(self.start.coords())
            .map(|(b, a)| b - a)
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.start.distance(&self.end)
    }

    /// Unit tangent `(end - start) / |end - start|`.
    pub fn tangent(&self) -> Vec<f64> {
        let d = self.displacement();
        let l = norm(&d);
        d.into_iter().map(|x| x / l).collect()
    }

    pub fn reversed(&self) -> Self {
        Self {
            start: self.end.clone(),
            end: self.start.clone(),
        }
    }

    pub fn point_at(&self, s: f64) -> Point {
        if s == 0.0 {
            self.start.clone()
        } else if s == 1.0 {
            self.end.clone()
        } else {
            self.start.lerp(&self.end, s)
        }
    }
}

/// One segment of a current together with its multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub segment: OrientedSegment,
    pub theta: LatticeVector,
}

/// The 0-current `∂T`: a finite sum of lattice-weighted Dirac masses.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundaryChain {
    atoms: BTreeMap<Point, LatticeVector>,
}

impl BoundaryChain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `weight δ_point`, dropping the atom if it cancels to zero.
    pub fn add_atom(&mut self, point: Point, weight: &LatticeVector) {
        match self.atoms.entry(point) {
            Entry::Vacant(slot) => {
                if !weight.is_zero() {
                    slot.insert(weight.clone());
                }
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += weight;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn atoms(&self) -> &BTreeMap<Point, LatticeVector> {
        &self.atoms
    }

    pub fn get(&self, point: &Point) -> Option<&LatticeVector> {
        self.atoms.get(point)
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }
}

impl fmt::Display for BoundaryChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "{{}}");
        }
        write!(f, "{{")?;
        for (k, (p, w)) in self.atoms.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}: {w}")?;
        }
        write!(f, "}}")
    }
}

/// A `Z^m`-valued polyhedral 1-current in `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyhedralCurrent {
    ambient_dim: usize,
    lattice_dim: usize,
    pieces: Vec<Piece>,
}

impl PolyhedralCurrent {
    pub fn new(ambient_dim: usize, lattice_dim: usize) -> Self {
        Self {
            ambient_dim,
            lattice_dim,
            pieces: Vec::new(),
        }
    }

    pub fn from_pieces(
        ambient_dim: usize,
        lattice_dim: usize,
        pieces: impl IntoIterator<Item = (OrientedSegment, LatticeVector)>,
    ) -> Result<Self, CurrentError> {
        let mut current = Self::new(ambient_dim, lattice_dim);
        for (segment, theta) in pieces {
            current.push(segment, theta)?;
        }
        Ok(current)
    }

    /// The open polygonal path through `points`, every edge carrying `theta`.
    pub fn polyline(points: &[Point], theta: &LatticeVector) -> Result<Self, CurrentError> {
        let n = points.first().map_or(0, Point::dim);
        let mut current = Self::new(n, theta.dim());
        for w in points.windows(2) {
            current.push(OrientedSegment::new(w[0].clone(), w[1].clone())?, theta.clone())?;
        }
        Ok(current)
    }

    /// The closed polygon through `points` (the last vertex joins the first).
    pub fn polygon(points: &[Point], theta: &LatticeVector) -> Result<Self, CurrentError> {
        let mut closed = points.to_vec();
        if let Some(first) = points.first() {
            closed.push(first.clone());
        }
        Self::polyline(&closed, theta)
    }

    pub fn push(&mut self, segment: OrientedSegment, theta: LatticeVector) -> Result<(), CurrentError> {
        if segment.dim() != self.ambient_dim {
            return Err(CurrentError::DimensionMismatch {
                what: "segment",
                expected: self.ambient_dim,
                found: segment.dim(),
            });
        }
        if theta.dim() != self.lattice_dim {
            return Err(CurrentError::DimensionMismatch {
                what: "multiplicity",
                expected: self.lattice_dim,
                found: theta.dim(),
            });
        }
        self.pieces.push(Piece { segment, theta });
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn lattice_dim(&self) -> usize {
        self.lattice_dim
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Formal sum of two currents (pieces are concatenated, not merged).
    pub fn sum(&self, other: &Self) -> Result<Self, CurrentError> {
        let mut out = self.clone();
        for p in &other.pieces {
            out.push(p.segment.clone(), p.theta.clone())?;
        }
        Ok(out)
    }

    pub fn negated(&self) -> Self {
        Self {
            ambient_dim: self.ambient_dim,
            lattice_dim: self.lattice_dim,
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    segment: p.segment.clone(),
                    theta: -&p.theta,
                })
                .collect(),
        }
    }

    /// `Σ θ_i (δ_{end_i} − δ_{start_i})`, with exact cancellation.
    ///
    /// Boundary is linear, so this is valid on unnormalized input as well.
    pub fn boundary(&self) -> BoundaryChain {
        let mut chain = BoundaryChain::new();
        for p in &self.pieces {
            chain.add_atom(p.segment.end().clone(), &p.theta);
            chain.add_atom(p.segment.start().clone(), &-&p.theta);
        }
        chain
    }

    pub fn is_closed(&self) -> bool {
        self.boundary().is_empty()
    }

    /// `Σ |θ_i| · length(σ_i)`. Only the mass of the measure when the
    /// current is normalized; otherwise cancelling pieces are counted twice.
    pub fn mass(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.theta.norm() * p.segment.length())
            .sum()
    }

    /// Whether `self` and `other` represent the same measure.
    pub fn same_measure(&self, other: &Self) -> bool {
        self.sum(&other.negated())
            .map(|d| d.normalize().is_empty())
            .unwrap_or(false)
    }

    /// Clips every segment to `region`; multiplicities are unchanged.
    ///
    /// The restriction of a closed current is in general not closed.
    pub fn restrict(&self, region: &Region) -> Self {
        let mut out = Self::new(self.ambient_dim, self.lattice_dim);
        for p in &self.pieces {
            if let Some(seg) = region.clip(&p.segment) {
                out.pieces.push(Piece {
                    segment: seg,
                    theta: p.theta.clone(),
                });
            }
        }
        out
    }
}
