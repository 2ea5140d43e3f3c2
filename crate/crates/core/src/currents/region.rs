use super::{OrientedSegment, CLIP_TOLERANCE};

/// A closed region used to restrict currents and energies.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Region::Box { lower, upper }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Box { lower, .. } => lower.len(),
        }
    }

    /// Parameter interval `[s0, s1] ⊂ [0, 1]` of the part of `segment`
    /// inside the region, or `None` if that part is empty or shorter than
    /// the clipping tolerance.
    pub fn clip_params(&self, segment: &OrientedSegment) -> Option<(f64, f64)> {
        let a = segment.start().coords();
        let d = segment.displacement();
        let (mut s0, mut s1) = match self {
            Region::Ball { center, radius } => {
                // |a - c + s d|² = r²
                let w: Vec<f64> = a.iter().zip(center).map(|(x, c)| x - c).collect();
                let qa: f64 = d.iter().map(|x| x * x).sum();
                let qb: f64 = 2.0 * w.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>();
                let qc: f64 = w.iter().map(|x| x * x).sum::<f64>() - radius * radius;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc <= 0.0 {
                    return None;
                }
                let root = disc.sqrt();
                ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa))
            }
            Region::Box { lower, upper } => {
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..a.len() {
                    if d[k] == 0.0 {
                        if a[k] < lower[k] || a[k] > upper[k] {
                            return None;
                        }
                        continue;
                    }
                    let t0 = (lower[k] - a[k]) / d[k];
                    let t1 = (upper[k] - a[k]) / d[k];
                    lo = lo.max(t0.min(t1));
                    hi = hi.min(t0.max(t1));
                }
                (lo, hi)
            }
        };
        if s0 <= CLIP_TOLERANCE {
            s0 = 0.0;
        }
        if s1 >= 1.0 - CLIP_TOLERANCE {
            s1 = 1.0;
        }
        (s1 - s0 > CLIP_TOLERANCE).then_some((s0, s1))
    }

    /// The sub-segment inside the region. Endpoints that are not cut keep
    /// their exact input coordinates.
    pub fn clip(&self, segment: &OrientedSegment) -> Option<OrientedSegment> {
        let (s0, s1) = self.clip_params(segment)?;
        OrientedSegment::new(segment.point_at(s0), segment.point_at(s1)).ok()
    }

    pub fn clipped_length(&self, segment: &OrientedSegment) -> f64 {
        self.clip_params(segment)
            .map_or(0.0, |(s0, s1)| (s1 - s0) * segment.length())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => {
                x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt() <= *radius
            }
            Region::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u),
        }
    }
}
