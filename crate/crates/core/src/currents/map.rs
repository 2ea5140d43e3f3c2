use nalgebra::DMatrix;

use super::normalize::group_collinear;
use super::{
    norm, BoundaryChain, CurrentError, OrientedSegment, Point, PolyhedralCurrent, CLIP_TOLERANCE,
};

/// Relative tolerance for continuity of a piecewise map across interfaces.
const CONTINUITY_TOLERANCE: f64 = 1e-9;

/// A map that can push segments forward piece by piece.
pub trait SegmentMap {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn map_point(&self, x: &Point) -> Result<Point, CurrentError>;
    /// Consecutive image sub-segments `(f(a_k), f(a_{k+1}))` of `segment`;
    /// the first starts at `map_point(start)` and the last ends at
    /// `map_point(end)`.
    fn map_segment(&self, segment: &OrientedSegment) -> Result<Vec<(Point, Point)>, CurrentError>;
    fn check_injective(&self) -> Result<(), CurrentError>;
}

/// `x ↦ A x + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    linear: DMatrix<f64>,
    offset: Vec<f64>,
}

impl AffineMap {
    /// `rows` are the rows of `A` (output dimension × input dimension).
    pub fn new(rows: &[Vec<f64>], offset: Vec<f64>) -> Result<Self, CurrentError> {
        let out = rows.len();
        let inp = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != inp) {
            return Err(CurrentError::DimensionMismatch {
                what: "affine map row",
                expected: inp,
                found: bad.len(),
            });
        }
        if offset.len() != out {
            return Err(CurrentError::DimensionMismatch {
                what: "affine map offset",
                expected: out,
                found: offset.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Ok(Self {
            linear: DMatrix::from_row_slice(out, inp, &flat),
            offset,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            linear: DMatrix::identity(dim, dim),
            offset: vec![0.0; dim],
        }
    }

    pub fn scaling(dim: usize, factor: f64) -> Self {
        Self {
            linear: DMatrix::identity(dim, dim) * factor,
            offset: vec![0.0; dim],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.linear.nrows())
            .map(|i| {
                self.offset[i] + (0..self.linear.ncols()).map(|j| self.linear[(i, j)] * x[j]).sum::<f64>()
            })
            .collect()
    }
}

impl SegmentMap for AffineMap {
    fn input_dim(&self) -> usize {
        self.linear.ncols()
    }

    fn output_dim(&self) -> usize {
        self.linear.nrows()
    }

    fn map_point(&self, x: &Point) -> Result<Point, CurrentError> {
        Ok(Point::new(self.apply(x.coords())))
    }

    fn map_segment(&self, segment: &OrientedSegment) -> Result<Vec<(Point, Point)>, CurrentError> {
        Ok(vec![(self.map_point(segment.start())?, self.map_point(segment.end())?)])
    }

    fn check_injective(&self) -> Result<(), CurrentError> {
        let (rows, cols) = self.linear.shape();
        if rows < cols {
            return Err(CurrentError::NonInjective(format!(
                "linear part maps R^{cols} into R^{rows}"
            )));
        }
        let sv = self.linear.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if cols > 0 && !(min > 1e-12 * max.max(1e-300)) {
            return Err(CurrentError::NonInjective(format!(
                "linear part is rank deficient (smallest singular value {min:e})"
            )));
        }
        Ok(())
    }
}

/// One convex cell `{x : n_k · x ≤ c_k ∀k}` of a piecewise-affine map.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseAffineCell {
    pub halfspaces: Vec<(Vec<f64>, f64)>,
    pub map: AffineMap,
}

impl PiecewiseAffineCell {
    fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|(n, c)| {
            let v: f64 = n.iter().zip(x).map(|(a, b)| a * b).sum();
            v <= c + CLIP_TOLERANCE * (1.0 + c.abs())
        })
    }

    /// Parameter interval of `segment` inside the cell.
    fn interval(&self, segment: &OrientedSegment) -> Option<(f64, f64)> {
        let a = segment.start().coords();
        let d = segment.displacement();
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for (n, c) in &self.halfspaces {
            let nd: f64 = n.iter().zip(&d).map(|(x, y)| x * y).sum();
            let slack: f64 = c - n.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
            if nd.abs() <= 1e-300 {
                if slack < -CLIP_TOLERANCE * (1.0 + c.abs()) {
                    return None;
                }
            } else if nd > 0.0 {
                hi = hi.min(slack / nd);
            } else {
                lo = lo.max(slack / nd);
            }
        }
        (hi - lo > CLIP_TOLERANCE).then_some((lo, hi))
    }
}

/// A continuous map that is affine on each of finitely many convex cells.
/// The caller supplies the cells; segments are split at cell interfaces.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseAffineMap {
    pub cells: Vec<PiecewiseAffineCell>,
}

impl SegmentMap for PiecewiseAffineMap {
    fn input_dim(&self) -> usize {
        self.cells.first().map_or(0, |c| c.map.input_dim())
    }

    fn output_dim(&self) -> usize {
        self.cells.first().map_or(0, |c| c.map.output_dim())
    }

    fn map_point(&self, x: &Point) -> Result<Point, CurrentError> {
        self.cells
            .iter()
            .find(|c| c.contains(x.coords()))
            .map(|c| Point::new(c.map.apply(x.coords())))
            .ok_or_else(|| CurrentError::Uncovered {
                start: x.clone(),
                end: x.clone(),
            })
    }

    fn map_segment(&self, segment: &OrientedSegment) -> Result<Vec<(Point, Point)>, CurrentError> {
        let uncovered = || CurrentError::Uncovered {
            start: segment.start().clone(),
            end: segment.end().clone(),
        };
        let mut spans: Vec<(f64, f64, &AffineMap)> = self
            .cells
            .iter()
            .filter_map(|c| c.interval(segment).map(|(lo, hi)| (lo, hi, &c.map)))
            .collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        if spans.is_empty() || spans[0].0 > CLIP_TOLERANCE || spans.last().unwrap().1 < 1.0 - CLIP_TOLERANCE {
            return Err(uncovered());
        }
        for w in spans.windows(2) {
            if w[1].0 > w[0].1 + CLIP_TOLERANCE {
                return Err(uncovered());
            }
            if w[1].0 < w[0].1 - CLIP_TOLERANCE {
                return Err(CurrentError::NonInjective("map cells overlap".into()));
            }
        }

        let close = |p: &[f64], q: &[f64]| {
            let d: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
            norm(&d) <= CONTINUITY_TOLERANCE * (1.0 + norm(p))
        };
        let first = self.map_point(segment.start())?;
        if !close(first.coords(), &spans[0].2.apply(segment.start().coords())) {
            return Err(CurrentError::Discontinuous(segment.start().clone()));
        }
        let mut out = Vec::with_capacity(spans.len());
        let mut prev = first;
        for w in spans.windows(2) {
            let s = w[0].1;
            let x = segment.point_at(s);
            let left = w[0].2.apply(x.coords());
            if !close(&left, &w[1].2.apply(x.coords())) {
                return Err(CurrentError::Discontinuous(x));
            }
            let next = Point::new(left);
            out.push((prev, next.clone()));
            prev = next;
        }
        let last = self.map_point(segment.end())?;
        if !close(last.coords(), &spans.last().unwrap().2.apply(segment.end().coords())) {
            return Err(CurrentError::Discontinuous(segment.end().clone()));
        }
        out.push((prev, last));
        Ok(out)
    }

    fn check_injective(&self) -> Result<(), CurrentError> {
        self.cells.iter().try_for_each(|c| c.map.check_injective())
    }
}

impl PolyhedralCurrent {
    /// `f_♯T`: every (sub)segment is replaced by the segment between the
    /// images of its endpoints, keeping its multiplicity.
    pub fn pushforward<M: SegmentMap>(&self, map: &M) -> Result<PolyhedralCurrent, CurrentError> {
        if map.input_dim() != self.ambient_dim {
            return Err(CurrentError::DimensionMismatch {
                what: "map input",
                expected: self.ambient_dim,
                found: map.input_dim(),
            });
        }
        map.check_injective()?;
        let mut out = PolyhedralCurrent::new(map.output_dim(), self.lattice_dim);
        for piece in self.normalize().pieces() {
            for (a, b) in map.map_segment(&piece.segment)? {
                if a == b {
                    return Err(CurrentError::NonInjective(format!(
                        "segment {} -> {} collapses",
                        piece.segment.start(),
                        piece.segment.end()
                    )));
                }
                out.push(OrientedSegment::new(a, b)?, piece.theta.clone())?;
            }
        }
        check_no_folds(&out)?;
        Ok(out)
    }
}

impl BoundaryChain {
    /// `f_♯(∂T)`: atoms moved to the images of their points.
    pub fn pushforward<M: SegmentMap>(&self, map: &M) -> Result<BoundaryChain, CurrentError> {
        let mut out = BoundaryChain::new();
        for (p, w) in self.atoms() {
            out.add_atom(map.map_point(p)?, w);
        }
        Ok(out)
    }
}

/// Image pieces of a normalized current may only meet at points; collinear
/// overlap of positive length means the map folded the support.
fn check_no_folds(image: &PolyhedralCurrent) -> Result<(), CurrentError> {
    let segments: Vec<&OrientedSegment> = image.pieces().iter().map(|p| &p.segment).collect();
    for (line, members) in group_collinear(segments.iter().copied()) {
        let mut spans: Vec<(f64, f64)> = members
            .iter()
            .map(|&i| {
                let a = line.param(segments[i].start());
                let b = line.param(segments[i].end());
                (a.min(b), a.max(b))
            })
            .collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = spans.iter().map(|(a, b)| b - a).sum();
        let mut union = 0.0;
        let mut reach = f64::NEG_INFINITY;
        for (a, b) in spans {
            if b > reach {
                union += b - a.max(reach);
                reach = b;
            }
        }
        if total - union > 1e-9 * total.max(1.0) {
            return Err(CurrentError::NonInjective(
                "images of distinct pieces overlap".into(),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::LatticeVector;
    use super::*;

    #[test]
    fn identity_keeps_the_current() {
        let sq = unit_square(LatticeVector::from([1, 2]));
        let img = sq.pushforward(&AffineMap::identity(2)).unwrap();
        assert_eq!(img, sq.normalize());
    }

    #[test]
    fn scaling_scales_mass() {
        let sq = unit_square(LatticeVector::from([1, 2]));
        let img = sq.pushforward(&AffineMap::scaling(2, 3.0)).unwrap();
        assert!((img.mass() - 3.0 * sq.mass()).abs() < 1e-12);
    }

    #[test]
    fn shear_of_vertical_segment() {
        let c = PolyhedralCurrent::polyline(&[p2(0.0, 0.0), p2(0.0, 1.0)], &LatticeVector::from([1]))
            .unwrap();
        let shear = AffineMap::new(&[vec![1.0, 1.0], vec![0.0, 1.0]], vec![0.0, 0.0]).unwrap();
        let img = c.pushforward(&shear).unwrap();
        assert_eq!(img.pieces().len(), 1);
        let s = &img.pieces()[0].segment;
        assert_eq!(s.end(), &p2(1.0, 1.0));
        let t = s.tangent();
        assert!((t[0] - 0.5f64.sqrt()).abs() < 1e-15 && (t[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((img.mass() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn singular_map_is_rejected() {
        let c = unit_square(LatticeVector::from([1]));
        let proj = AffineMap::new(&[vec![1.0, 0.0], vec![0.0, 0.0]], vec![0.0, 0.0]).unwrap();
        assert!(matches!(c.pushforward(&proj), Err(CurrentError::NonInjective(_))));
    }

    fn tent() -> PiecewiseAffineMap {
        // x ≤ 1: identity; x ≥ 1: (x, y) ↦ (x, y + (x - 1))
        PiecewiseAffineMap {
            cells: vec![
                PiecewiseAffineCell {
                    halfspaces: vec![(vec![1.0, 0.0], 1.0)],
                    map: AffineMap::identity(2),
                },
                PiecewiseAffineCell {
                    halfspaces: vec![(vec![-1.0, 0.0], -1.0)],
                    map: AffineMap::new(&[vec![1.0, 0.0], vec![1.0, 1.0]], vec![0.0, -1.0]).unwrap(),
                },
            ],
        }
    }

    #[test]
    fn piecewise_map_splits_at_interfaces() {
        let c = PolyhedralCurrent::polyline(&[p2(0.0, 0.0), p2(2.0, 0.0)], &LatticeVector::from([1]))
            .unwrap();
        let img = c.pushforward(&tent()).unwrap();
        assert_eq!(img.pieces().len(), 2);
        assert_eq!(img.pieces()[0].segment.end(), &p2(1.0, 0.0));
        assert_eq!(img.pieces()[1].segment.end(), &p2(2.0, 1.0));
        assert!((img.mass() - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(img.boundary(), c.boundary().pushforward(&tent()).unwrap());
    }

    #[test]
    fn discontinuous_piecewise_map_is_rejected() {
        let mut map = tent();
        map.cells[1].map = AffineMap::new(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 5.0]).unwrap();
        let c = PolyhedralCurrent::polyline(&[p2(0.0, 0.0), p2(2.0, 0.0)], &LatticeVector::from([1]))
            .unwrap();
        assert!(matches!(c.pushforward(&map), Err(CurrentError::Discontinuous(_))));
    }

    #[test]
    fn folding_map_is_rejected() {
        // reflection x ↦ 2 - x on x ≥ 1 folds [0,2] onto [0,1]
        let map = PiecewiseAffineMap {
            cells: vec![
                PiecewiseAffineCell {
                    halfspaces: vec![(vec![1.0, 0.0], 1.0)],
                    map: AffineMap::identity(2),
                },
                PiecewiseAffineCell {
                    halfspaces: vec![(vec![-1.0, 0.0], -1.0)],
                    map: AffineMap::new(&[vec![-1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 0.0]).unwrap(),
                },
            ],
        };
        let c = PolyhedralCurrent::polyline(&[p2(0.0, 0.0), p2(2.0, 0.0)], &LatticeVector::from([1]))
            .unwrap();
        assert!(matches!(c.pushforward(&map), Err(CurrentError::NonInjective(_))));
    }

    #[test]
    fn uncovered_segment_is_rejected() {
        let map = PiecewiseAffineMap {
            cells: vec![tent().cells[0].clone()],
        };
        let c = PolyhedralCurrent::polyline(&[p2(0.0, 0.0), p2(2.0, 0.0)], &LatticeVector::from([1]))
            .unwrap();
        assert!(matches!(c.pushforward(&map), Err(CurrentError::Uncovered { .. })));
    }
}
