//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use dislocation_relax::{LatticeVector, Point, PolyhedralCurrent};
use rand::Rng;

/// A random closed current: a sum of `loops` random polygons with vertices
/// on the grid `Z^n / 4` in `[−2, 2]^n` and multiplicities in `[−2, 2]^m`.
pub fn random_closed_current<R: Rng>(rng: &mut R, n: usize, m: usize, loops: usize) -> PolyhedralCurrent {
    let mut current = PolyhedralCurrent::new(n, m);
    for _ in 0..loops {
        let k = rng.random_range(3..=6);
        let mut vertices: Vec<Point> = Vec::with_capacity(k);
        for _ in 0..k {
            let p = Point::new((0..n).map(|_| rng.random_range(-8i32..=8) as f64 / 4.0).collect());
            if vertices.last() != Some(&p) {
                vertices.push(p);
            }
        }
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 2 {
            continue;
        }
        let theta = loop {
            let v = LatticeVector::new((0..m).map(|_| rng.random_range(-2i64..=2)).collect());
            if !v.is_zero() {
                break v;
            }
        };
        let polygon = PolyhedralCurrent::polygon(&vertices, &theta).expect("distinct consecutive vertices");
        current = current.sum(&polygon).unwrap();
    }
    current
}

/// A uniformly random unit vector in `R^n`.
pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// `|b|² + η (b·t)²`, written out independently of the library.
pub fn psi_direct(b: &[i64], t: &[f64], eta: f64) -> f64 {
    let b2: i64 = b.iter().map(|x| x * x).sum();
    let bt: f64 = b.iter().zip(t).map(|(x, y)| *x as f64 * y).sum();
    b2 as f64 + eta * bt * bt
}

#[derive(PartialEq)]
struct State(f64, (i64, i64));

impl Eq for State {}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// `min Σ_k cost(z^k)` over finite sequences of `z^k ∈ {−1,0,1}² \ 0` with
/// `Σ z^k = b`, by shortest paths on the lattice box `[−R, R]²`.
/// `cost` is given for `e1, e2, e1+e2, e1−e2` and extended evenly.
pub fn generator_decomposition_min(b: [i64; 2], cost: [f64; 4], radius: i64) -> f64 {
    let gens: Vec<((i64, i64), f64)> = [
        ((1, 0), cost[0]),
        ((0, 1), cost[1]),
        ((1, 1), cost[2]),
        ((1, -1), cost[3]),
    ]
    .into_iter()
    .flat_map(|((x, y), c)| [((x, y), c), ((-x, -y), c)])
    .collect();
    let side = (2 * radius + 1) as usize;
    let index = |(x, y): (i64, i64)| ((x + radius) as usize) * side + (y + radius) as usize;
    let mut dist = vec![f64::INFINITY; side * side];
    let mut heap = BinaryHeap::new();
    dist[index((0, 0))] = 0.0;
    heap.push(State(0.0, (0, 0)));
    while let Some(State(d, p)) = heap.pop() {
        if d > dist[index(p)] {
            continue;
        }
        if p == (b[0], b[1]) {
            return d;
        }
        for &((dx, dy), c) in &gens {
            let q = (p.0 + dx, p.1 + dy);
            if q.0.abs() > radius || q.1.abs() > radius {
                continue;
            }
            let nd = d + c;
            if nd < dist[index(q)] {
                dist[index(q)] = nd;
                heap.push(State(nd, q));
            }
        }
    }
    f64::INFINITY
}

/// `|T| |b|² + η (b·T)² / |T|`, and 0 at `T = 0`.
pub fn psi_tilde_direct(b: &[f64], big_t: &[f64], eta: f64) -> f64 {
    let r = big_t.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r == 0.0 {
        return 0.0;
    }
    let b2: f64 = b.iter().map(|x| x * x).sum();
    let bt: f64 = b.iter().zip(big_t).map(|(x, y)| x * y).sum();
    r * b2 + eta * bt * bt / r
}

/// The planar decomposition program in the coordinates `(T_{e1+e2},
/// T_{e1−e2})`, with `T_{e1}` and `T_{e2}` solved from the constraint by
/// hand: `T_{e1} = b1 t − T_+ − T_−`, `T_{e2} = b2 t − T_+ + T_−`.
pub fn planar_alpha_objective(b: [i64; 2], t: [f64; 2], eta: f64, x: &[f64]) -> f64 {
    let (p, q) = ([x[0], x[1]], [x[2], x[3]]);
    let (b1, b2) = (b[0] as f64, b[1] as f64);
    let t1 = [b1 * t[0] - p[0] - q[0], b1 * t[1] - p[1] - q[1]];
    let t2 = [b2 * t[0] - p[0] + q[0], b2 * t[1] - p[1] + q[1]];
    psi_tilde_direct(&[1.0, 0.0], &t1, eta)
        + psi_tilde_direct(&[0.0, 1.0], &t2, eta)
        + psi_tilde_direct(&[1.0, 1.0], &p, eta)
        + psi_tilde_direct(&[1.0, -1.0], &q, eta)
}
