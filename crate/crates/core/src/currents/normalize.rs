use super::{dot, norm, LatticeVector, OrientedSegment, Piece, Point, PolyhedralCurrent};

/// Two unit directions closer than this (up to sign) are parallel.
const DIRECTION_TOLERANCE: f64 = 1e-9;
/// Distance, relative to `1 + |x|`, below which a point lies on a line.
const OFFSET_TOLERANCE: f64 = 1e-9;
/// Breakpoints on a common line closer than this (relative) are merged.
const PARAM_TOLERANCE: f64 = 1e-11;

/// A supporting line `anchor + s·direction`.
pub(crate) struct Line {
    anchor: Vec<f64>,
    direction: Vec<f64>,
}

impl Line {
    pub(crate) fn through(segment: &OrientedSegment) -> Self {
        let mut direction = segment.tangent();
        let lead = direction
            .iter()
            .enumerate()
            .fold(0, |best, (k, x)| if x.abs() > direction[best].abs() { k } else { best });
        if direction[lead] < 0.0 {
            direction.iter_mut().for_each(|x| *x = -*x);
        }
        Self {
            anchor: segment.start().coords().to_vec(),
            direction,
        }
    }

    fn offset(&self, v: &[f64]) -> f64 {
        let along = dot(v, &self.direction);
        v.iter()
            .zip(&self.direction)
            .map(|(a, u)| (a - along * u).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn supports(&self, segment: &OrientedSegment) -> bool {
        if self.offset(&segment.tangent()) > DIRECTION_TOLERANCE {
            return false;
        }
        let w: Vec<f64> = segment
            .start()
            .coords()
            .iter()
            .zip(&self.anchor)
            .map(|(p, a)| p - a)
            .collect();
        self.offset(&w) <= OFFSET_TOLERANCE * (1.0 + norm(&w))
    }

    pub(crate) fn param(&self, p: &Point) -> f64 {
        p.coords()
            .iter()
            .zip(&self.anchor)
            .zip(&self.direction)
            .map(|((x, a), u)| (x - a) * u)
            .sum()
    }
}

/// Groups segment indices by common supporting line, in order of first
/// appearance.
pub(crate) fn group_collinear<'a>(
    segments: impl IntoIterator<Item = &'a OrientedSegment>,
) -> Vec<(Line, Vec<usize>)> {
    let mut groups: Vec<(Line, Vec<usize>)> = Vec::new();
    for (idx, seg) in segments.into_iter().enumerate() {
        match groups.iter_mut().find(|(line, _)| line.supports(seg)) {
            Some((_, members)) => members.push(idx),
            None => groups.push((Line::through(seg), vec![idx])),
        }
    }
    groups
}

/// Sorted, deduplicated breakpoints of the given segments along `line`.
/// Returns the breakpoints and, per segment, its (start, end) breakpoint ids.
pub(crate) fn breakpoints(
    line: &Line,
    segments: &[&OrientedSegment],
) -> (Vec<(f64, Point)>, Vec<(usize, usize)>) {
    let mut entries: Vec<(f64, usize, bool)> = Vec::with_capacity(2 * segments.len());
    for (k, seg) in segments.iter().enumerate() {
        entries.push((line.param(seg.start()), k, false));
        entries.push((line.param(seg.end()), k, true));
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut points: Vec<(f64, Point)> = Vec::new();
    let mut ids = vec![(0usize, 0usize); segments.len()];
    for (s, k, is_end) in entries {
        let merge = points
            .last()
            .is_some_and(|(prev, _)| (s - prev).abs() <= PARAM_TOLERANCE * (1.0 + s.abs()));
        if !merge {
            let p = if is_end { segments[k].end() } else { segments[k].start() };
            points.push((s, p.clone()));
        }
        let id = points.len() - 1;
        if is_end {
            ids[k].1 = id;
        } else {
            ids[k].0 = id;
        }
    }
    (points, ids)
}

impl PolyhedralCurrent {
    /// Canonical representative of the same measure.
    ///
    /// Zero-multiplicity pieces are dropped; pieces on a common line are cut
    /// at all of their endpoints, the multiplicities of overlapping parts are
    /// summed with orientation signs, and maximal runs of equal multiplicity
    /// are re-joined. Every output piece points along the canonical direction
    /// of its line; a piece that pointed the other way has its sign flipped.
    /// Output vertices are always input vertices.
    pub fn normalize(&self) -> Self {
        let live: Vec<&Piece> = self.pieces.iter().filter(|p| !p.theta.is_zero()).collect();
        let mut out = PolyhedralCurrent::new(self.ambient_dim, self.lattice_dim);

        for (line, members) in group_collinear(live.iter().map(|p| &p.segment)) {
            let segs: Vec<&OrientedSegment> = members.iter().map(|&i| &live[i].segment).collect();
            let (points, ids) = breakpoints(&line, &segs);

            let mut diff = vec![LatticeVector::zeros(self.lattice_dim); points.len() + 1];
            for (&i, &(a, b)) in members.iter().zip(&ids) {
                if a == b {
                    continue;
                }
                let theta = &live[i].theta;
                let (lo, hi, w) = if a < b { (a, b, theta.clone()) } else { (b, a, -theta) };
                diff[lo] += &w;
                diff[hi] += &-&w;
            }

            let mut running = LatticeVector::zeros(self.lattice_dim);
            let mut run: Option<(usize, LatticeVector)> = None;
            for (k, d) in diff.iter().enumerate().take(points.len()) {
                running += d;
                let same = run.as_ref().is_some_and(|(_, th)| *th == running);
                if !same {
                    if let Some((k0, th)) = run.take() {
                        out.push_unchecked(&points[k0].1, &points[k].1, th);
                    }
                    if !running.is_zero() {
                        run = Some((k, running.clone()));
                    }
                }
            }
            debug_assert!(run.is_none(), "multiplicity must vanish past the last breakpoint");
        }
        out
    }

    fn push_unchecked(&mut self, a: &Point, b: &Point, theta: LatticeVector) {
        if let Ok(segment) = OrientedSegment::new(a.clone(), b.clone()) {
            self.pieces.push(Piece { segment, theta });
        }
    }
}
