//! Derivative-free minimization over affine subspaces.
//!
//! Linear equality constraints `A x = r` are eliminated once: a least-norm
//! particular solution `p` and an orthonormal nullspace basis `N` give
//! `x = p + N c`, and the search runs unconstrained in `c`. Every iterate is
//! therefore feasible up to rounding.
//!
//! The local method is Nelder–Mead simplex descent, restarted from the best
//! vertex until a restart no longer improves, followed by a compass
//! (pattern) search whose step is halved down to `final_step`. Objectives
//! here are convex but kinked, which is where plain simplex descent tends to
//! stall; the restarts and the polish take care of that.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("inconsistent linear system (residual {0:e})")]
    Inconsistent(f64),
    #[error("malformed constraint system: {0}")]
    Malformed(String),
    #[error("grid oracle limited to {max} dimensions, got {dim}")]
    DimensionGuard { dim: usize, max: usize },
    #[error("objective is not finite at any start")]
    Diverged,
}

/// Residual above which a constraint system is declared inconsistent.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-10;

/// `{ p + Σ c_k n_k }`: the solution set of `A x = r`.
#[derive(Clone, Debug)]
pub struct AffineFeasibleSet {
    particular: Vec<f64>,
    basis: Vec<Vec<f64>>,
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl AffineFeasibleSet {
    /// All of `R^dim`.
    pub fn unconstrained(dim: usize) -> Self {
        Self {
            particular: vec![0.0; dim],
            basis: (0..dim)
                .map(|k| {
                    let mut e = vec![0.0; dim];
                    e[k] = 1.0;
                    e
                })
                .collect(),
            rows: DMatrix::zeros(0, dim),
            rhs: DVector::zeros(0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.particular.len()
    }

    /// Dimension of the nullspace, i.e. of the search space.
    pub fn nullity(&self) -> usize {
        self.basis.len()
    }

    pub fn particular(&self) -> &[f64] {
        &self.particular
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// `p + N c`, written into `out`.
    pub fn point_into(&self, coords: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.particular);
        for (c, n) in coords.iter().zip(&self.basis) {
            if *c != 0.0 {
                for (o, v) in out.iter_mut().zip(n) {
                    *o += c * v;
                }
            }
        }
    }

    pub fn point(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim()];
        self.point_into(coords, &mut out);
        out
    }

    /// `|A x − r|₂`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        if self.rows.nrows() == 0 {
            return 0.0;
        }
        let x = DVector::from_column_slice(x);
        (&self.rows * x - &self.rhs).norm()
    }
}

/// Eliminates `rows · x = rhs`.
///
/// The particular solution is the least-norm one (pseudo-inverse); the
/// nullspace basis consists of the right singular vectors belonging to
/// numerically zero singular values, so it is orthonormal.
pub fn eliminate_constraints(rows: &[Vec<f64>], rhs: &[f64]) -> Result<AffineFeasibleSet, OptimError> {
    let k = rows.len();
    if rhs.len() != k {
        return Err(OptimError::Malformed(format!("{k} rows but {} right-hand sides", rhs.len())));
    }
    let Some(dim) = rows.first().map(Vec::len) else {
        return Err(OptimError::Malformed("no constraint rows".into()));
    };
    if rows.iter().any(|r| r.len() != dim) {
        return Err(OptimError::Malformed("rows of unequal length".into()));
    }
    let a = DMatrix::from_fn(k, dim, |i, j| rows[i][j]);
    let r = DVector::from_column_slice(rhs);

    // Pad to a square matrix so that the SVD yields a full set of right
    // singular vectors.
    let size = k.max(dim);
    let padded = DMatrix::from_fn(size, dim, |i, j| if i < k { a[(i, j)] } else { 0.0 });
    let svd = padded.svd(true, true);
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let sigma = &svd.singular_values;
    let cutoff = 1e-12 * sigma.max().max(1.0);

    let mut particular = DVector::zeros(dim);
    let mut basis = Vec::new();
    let padded_rhs = DVector::from_fn(size, |i, _| if i < k { r[i] } else { 0.0 });
    for s in 0..sigma.len() {
        let row = v_t.row(s);
        if sigma[s] > cutoff {
            let coef = u.column(s).dot(&padded_rhs) / sigma[s];
            particular += row.transpose() * coef;
        } else {
            basis.push(row.iter().copied().collect::<Vec<f64>>());
        }
    }

    let set = AffineFeasibleSet {
        particular: particular.iter().copied().collect(),
        basis,
        rows: a,
        rhs: r,
    };
    let res = set.residual(&set.particular);
    if res > FEASIBILITY_TOLERANCE * (1.0 + set.rhs.norm()) {
        return Err(OptimError::Inconsistent(res));
    }
    Ok(set)
}

/// Configuration of [`minimize_multistart`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Number of starts: the origin, then `±e_k` coordinate seeds, then
    /// uniform random points in `[−start_box, start_box]^d`.
    pub starts: usize,
    pub seed: u64,
    pub start_box: f64,
    pub initial_edge: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// A simplex run ends once its diameter drops below this.
    pub restart_diameter: f64,
    /// Simplex restarts stop once one improves by less than this.
    pub objective_tolerance: f64,
    pub max_restarts: usize,
    /// Pattern search stops once its step falls below this.
    pub final_step: f64,
    pub max_evaluations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0x5eed,
            start_box: 2.0,
            initial_edge: 0.25,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            restart_diameter: 1e-10,
            objective_tolerance: 1e-9,
            max_restarts: 30,
            final_step: 1e-8,
            max_evaluations: 200_000,
        }
    }
}

/// Outcome of a minimization.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    /// `objective(best_point)`, exactly as evaluated.
    pub best_value: f64,
    /// Minimizer in ambient coordinates.
    pub best_point: Vec<f64>,
    /// Minimizer in nullspace coordinates.
    pub best_coords: Vec<f64>,
    pub starts: usize,
    pub converged: bool,
    pub final_step: f64,
    pub evaluations: usize,
}

/// Objective in nullspace coordinates, counting evaluations.
struct Reduced<'a, F> {
    objective: &'a F,
    feasible: &'a AffineFeasibleSet,
    scratch: Vec<f64>,
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Reduced<'_, F> {
    fn eval(&mut self, c: &[f64]) -> f64 {
        self.evaluations += 1;
        self.feasible.point_into(c, &mut self.scratch);
        let v = (self.objective)(&self.scratch);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

struct LocalResult {
    coords: Vec<f64>,
    value: f64,
    converged: bool,
    evaluations: usize,
}

/// Best of all starts; deterministic for a fixed seed regardless of the
/// number of worker threads.
pub fn minimize_multistart<F>(
    objective: F,
    feasible: &AffineFeasibleSet,
    opts: &SolverOptions,
) -> Result<SolveReport, OptimError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = feasible.nullity();
    let starts = opts.starts.max(1);
    let results: Vec<LocalResult> = (0..starts)
        .into_par_iter()
        .map(|idx| {
            let x0 = start_point(idx, d, opts);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(idx as u64 + 1);
            let mut f = Reduced {
                objective: &objective,
                feasible,
                scratch: vec![0.0; feasible.ambient_dim()],
                evaluations: 0,
            };
            local_search(&mut f, x0, opts, &mut rng)
        })
        .collect();

    let evaluations = results.iter().map(|r| r.evaluations).sum();
    let best = results
        .into_iter()
        .filter(|r| r.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value).then_with(|| lex_cmp(&a.coords, &b.coords)))
        .ok_or(OptimError::Diverged)?;

    let best_point = feasible.point(&best.coords);
    Ok(SolveReport {
        best_value: objective(&best_point),
        best_point,
        best_coords: best.coords,
        starts,
        converged: best.converged,
        final_step: opts.final_step,
        evaluations,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn start_point(idx: usize, d: usize, opts: &SolverOptions) -> Vec<f64> {
    let mut x = vec![0.0; d];
    if idx == 0 || d == 0 {
        return x;
    }
    if idx <= 2 * d {
        let k = (idx - 1) / 2;
        x[k] = if idx % 2 == 1 { 1.0 } else { -1.0 };
        return x;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(idx as u64 + 1);
    // decorrelate from the stream the local search draws from
    rng.set_word_pos(1 << 20);
    for v in &mut x {
        *v = rng.random_range(-opts.start_box..=opts.start_box);
    }
    x
}

fn local_search<F: Fn(&[f64]) -> f64>(
    f: &mut Reduced<'_, F>,
    x0: Vec<f64>,
    opts: &SolverOptions,
    rng: &mut ChaCha8Rng,
) -> LocalResult {
    let mut x = x0;
    let mut fx = f.eval(&x);
    if x.is_empty() {
        return LocalResult {
            coords: x,
            value: fx,
            converged: true,
            evaluations: f.evaluations,
        };
    }
    for restart in 0..opts.max_restarts {
        if f.evaluations >= opts.max_evaluations {
            break;
        }
        // first run on the axis simplex, later ones on randomly rotated ones
        let frame = (restart > 0).then(|| random_frame(x.len(), rng));
        let (nx, nf) = nelder_mead(f, &x, fx, frame.as_deref(), opts);
        let gain = fx - nf;
        if nf < fx {
            x = nx;
            fx = nf;
        }
        if gain <= opts.objective_tolerance * (1.0 + fx.abs()) {
            break;
        }
    }
    let (x, fx, converged) = pattern_search(f, x, fx, opts);
    LocalResult {
        coords: x,
        value: fx,
        converged,
        evaluations: f.evaluations,
    }
}

/// Random orthonormal frame (Gram–Schmidt on Gaussian-ish vectors).
fn random_frame(d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d);
    while frame.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for q in &frame {
            let p: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 {
            frame.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    frame
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &mut Reduced<'_, F>,
    x0: &[f64],
    f0: f64,
    frame: Option<&[Vec<f64>]>,
    opts: &SolverOptions,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f0));
    for k in 0..d {
        let mut v = x0.to_vec();
        match frame {
            Some(fr) => v.iter_mut().zip(&fr[k]).for_each(|(a, b)| *a += opts.initial_edge * b),
            None => v[k] += opts.initial_edge,
        }
        let fv = f.eval(&v);
        simplex.push((v, fv));
    }

    let affine = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < opts.restart_diameter || f.evaluations >= opts.max_evaluations {
            break;
        }

        let mut centroid = vec![0.0; d];
        for (v, _) in &simplex[..d] {
            centroid.iter_mut().zip(v).for_each(|(c, x)| *c += x / d as f64);
        }
        let worst = simplex[d].clone();
        let (best_f, second_worst_f) = (simplex[0].1, simplex[d - 1].1);

        let reflected = affine(&centroid, &worst.0, -opts.reflection);
        let fr = f.eval(&reflected);
        if fr < best_f {
            let expanded = affine(&centroid, &worst.0, -opts.reflection * opts.expansion);
            let fe = f.eval(&expanded);
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < second_worst_f {
            simplex[d] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let c = affine(&centroid, &reflected, opts.contraction);
            let fc = f.eval(&c);
            (c, fc)
        } else {
            let c = affine(&centroid, &worst.0, opts.contraction);
            let fc = f.eval(&c);
            (c, fc)
        };
        if fc < worst.1.min(fr) {
            simplex[d] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let v = affine(&best, &vertex.0, opts.shrink);
            let fv = f.eval(&v);
            *vertex = (v, fv);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Compass search along `±e_k`; the step doubles after a success and halves
/// after a full unsuccessful poll, until it drops below `final_step`.
fn pattern_search<F: Fn(&[f64]) -> f64>(
    f: &mut Reduced<'_, F>,
    mut x: Vec<f64>,
    mut fx: f64,
    opts: &SolverOptions,
) -> (Vec<f64>, f64, bool) {
    let mut step = opts.initial_edge;
    while step >= opts.final_step {
        if f.evaluations >= opts.max_evaluations {
            return (x, fx, false);
        }
        let mut improved = false;
        for k in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += sign * step;
                let fy = f.eval(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx, true)
}

/// Axis-aligned box for [`grid_oracle`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GridBox {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }
}

/// Largest dimension [`grid_oracle`] accepts.
pub const GRID_MAX_DIM: usize = 6;

/// Brute-force minimization: every point of the uniform grid of spacing
/// `step` in `bounds`, then one pass at `step/10` over the cell around the
/// best grid point. Ties go to the first point in lexicographic grid order.
pub fn grid_oracle<F>(objective: F, bounds: &GridBox, step: f64) -> Result<SolveReport, OptimError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = bounds.lower.len();
    if dim > GRID_MAX_DIM {
        return Err(OptimError::DimensionGuard { dim, max: GRID_MAX_DIM });
    }
    let counts: Vec<usize> = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(l, u)| ((u - l) / step).round() as usize + 1)
        .collect();
    let coarse = scan(&objective, &bounds.lower, &counts, step);
    let (best, _) = coarse.ok_or(OptimError::Diverged)?;

    let fine_step = step / 10.0;
    let fine_lower: Vec<f64> = best.iter().map(|x| x - step).collect();
    let fine_counts = vec![21usize; dim];
    let (point, value) = scan(&objective, &fine_lower, &fine_counts, fine_step).ok_or(OptimError::Diverged)?;
    let total = counts.iter().product::<usize>() + fine_counts.iter().product::<usize>();
    Ok(SolveReport {
        best_value: value,
        best_coords: point.clone(),
        best_point: point,
        starts: 1,
        converged: true,
        final_step: fine_step,
        evaluations: total,
    })
}

fn scan<F: Fn(&[f64]) -> f64 + Sync>(
    objective: &F,
    lower: &[f64],
    counts: &[usize],
    step: f64,
) -> Option<(Vec<f64>, f64)> {
    let dim = lower.len();
    let total: usize = counts.iter().product();
    let decode = |mut idx: usize, out: &mut [f64]| {
        for k in (0..dim).rev() {
            out[k] = lower[k] + (idx % counts[k]) as f64 * step;
            idx /= counts[k];
        }
    };
    let chunk = 4096usize;
    let (best_idx, best_val) = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut x = vec![0.0; dim];
            let mut best = (usize::MAX, f64::INFINITY);
            for idx in c * chunk..((c + 1) * chunk).min(total) {
                decode(idx, &mut x);
                let v = objective(&x);
                if v < best.1 {
                    best = (idx, v);
                }
            }
            best
        })
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
    if best_idx == usize::MAX {
        return None;
    }
    let mut x = vec![0.0; dim];
    decode(best_idx, &mut x);
    Some((x, best_val))
}
