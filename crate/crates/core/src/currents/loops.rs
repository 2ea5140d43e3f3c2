use std::collections::BTreeMap;

use super::{CurrentError, LatticeVector, OrientedSegment, Piece, Point, PolyhedralCurrent};

/// A closed polygon `v_0 → v_1 → … → v_{k-1} → v_0` with one multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Loop {
    pub vertices: Vec<Point>,
    pub multiplicity: LatticeVector,
}

impl Loop {
    pub fn perimeter(&self) -> f64 {
        let k = self.vertices.len();
        (0..k)
            .map(|i| self.vertices[i].distance(&self.vertices[(i + 1) % k]))
            .sum()
    }

    /// `|θ| · H¹(γ)`.
    pub fn weighted_length(&self) -> f64 {
        self.multiplicity.norm() * self.perimeter()
    }

    pub fn to_current(&self) -> Result<PolyhedralCurrent, CurrentError> {
        PolyhedralCurrent::polygon(&self.vertices, &self.multiplicity)
    }
}

/// Directed edge of the per-component multigraph.
struct Edge {
    tail: usize,
    head: usize,
    remaining: i64,
}

impl PolyhedralCurrent {
    /// Splits a closed current into polygonal loops.
    ///
    /// Works one lattice component at a time: the `k`-th components of the
    /// normalized pieces are integer weights on a balanced directed
    /// multigraph (negative weights reverse the edge). Cycles are extracted
    /// by walking along the lowest-index edge with remaining weight until a
    /// vertex repeats, then subtracting the cycle's minimal weight. Every
    /// loop therefore has multiplicity `w e_k`, and the total weighted length
    /// is `Σ_i |θ_i|₁ len_i ≤ √m · mass`.
    pub fn decompose_loops(&self) -> Result<Vec<Loop>, CurrentError> {
        let boundary = self.boundary();
        if !boundary.is_empty() {
            return Err(CurrentError::NotClosed(boundary));
        }
        let normalized = self.normalize();

        let mut vertex_ids: BTreeMap<Point, usize> = BTreeMap::new();
        let mut vertices: Vec<Point> = Vec::new();
        let mut id_of = |p: &Point| -> usize {
            *vertex_ids.entry(p.clone()).or_insert_with(|| {
                vertices.push(p.clone());
                vertices.len() - 1
            })
        };
        let ends: Vec<(usize, usize)> = normalized
            .pieces()
            .iter()
            .map(|p| (id_of(p.segment.start()), id_of(p.segment.end())))
            .collect();

        let mut loops = Vec::new();
        for k in 0..self.lattice_dim {
            let mut edges: Vec<Edge> = normalized
                .pieces()
                .iter()
                .zip(&ends)
                .filter_map(|(Piece { theta, .. }, &(a, b))| {
                    let w = theta.entries()[k];
                    match w.signum() {
                        1 => Some(Edge { tail: a, head: b, remaining: w }),
                        -1 => Some(Edge { tail: b, head: a, remaining: -w }),
                        _ => None,
                    }
                })
                .collect();
            let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
            for (e, edge) in edges.iter().enumerate() {
                outgoing[edge.tail].push(e);
            }

            while let Some(first) = edges.iter().position(|e| e.remaining > 0) {
                let mut path_vertices = vec![edges[first].tail];
                let mut path_edges: Vec<usize> = Vec::new();
                let mut on_path: BTreeMap<usize, usize> = BTreeMap::from([(edges[first].tail, 0)]);
                let mut at = edges[first].tail;
                let cycle_start = loop {
                    let e = *outgoing[at]
                        .iter()
                        .find(|&&e| edges[e].remaining > 0)
                        .expect("balanced multigraph has an outgoing edge at every visited vertex");
                    path_edges.push(e);
                    at = edges[e].head;
                    if let Some(&pos) = on_path.get(&at) {
                        break pos;
                    }
                    on_path.insert(at, path_vertices.len());
                    path_vertices.push(at);
                };
                let cycle_edges = &path_edges[cycle_start..];
                let cycle_vertices = &path_vertices[cycle_start..];
                if cycle_vertices.len() < 3 {
                    return Err(CurrentError::DegenerateLoop);
                }
                let w = cycle_edges.iter().map(|&e| edges[e].remaining).min().unwrap_or(0);
                for &e in cycle_edges {
                    edges[e].remaining -= w;
                }
                loops.push(Loop {
                    vertices: cycle_vertices.iter().map(|&v| vertices[v].clone()).collect(),
                    multiplicity: &LatticeVector::unit(self.lattice_dim, k) * w,
                });
            }
        }
        Ok(loops)
    }
}

/// Reassembles loops into a single current.
pub fn loops_to_current(
    ambient_dim: usize,
    lattice_dim: usize,
    loops: &[Loop],
) -> Result<PolyhedralCurrent, CurrentError> {
    let mut out = PolyhedralCurrent::new(ambient_dim, lattice_dim);
    for l in loops {
        let k = l.vertices.len();
        for i in 0..k {
            let seg = OrientedSegment::new(l.vertices[i].clone(), l.vertices[(i + 1) % k].clone())?;
            out.push(seg, l.multiplicity.clone())?;
        }
    }
    Ok(out)
}
