//! The H¹-elliptic envelope `ψ̄` of the cubic integrand.
//!
//! `ψ̄(b, t)` is the least energy per unit length of a lattice-valued line
//! configuration that looks like the straight line `b ⊗ t` from far away.
//! It is bracketed here from both sides:
//!
//! * from below by the decomposition program
//!   `min { Σ_α ψ̃(α, T_α) : Σ_α α ⊗ T_α = b ⊗ t }` over small multiplicities
//!   `α` ([`lower_bound_alpha`]);
//! * in closed or variational form for `β e_i` ([`barpsi_single`]) and
//!   `β (e_i ± e_j)` ([`barpsi_pair`], [`barpsi_pair_2d`]), where both sides
//!   meet;
//! * from above by explicit polyhedral competitors
//!   ([`upper_construction_pair`], [`cell_upper_bound`]) and by the convex
//!   subadditive envelope [`psi_star`].
//!
//! Axis indices are zero-based: `axis = 0` is `e_1`.

use thiserror::Error;

use crate::currents::{CurrentError, LatticeVector, OrientedSegment, Point, PolyhedralCurrent, Region};
use crate::energy::{energy, psi_cubic, psi_tilde, unit_tangent, CubicIntegrand, EnergyError};
use crate::optim::{eliminate_constraints, minimize_multistart, AffineFeasibleSet, OptimError, SolverOptions};

/// Largest number of `α` representatives [`lower_bound_alpha`] accepts.
pub const MAX_PROGRAM_REPRESENTATIVES: usize = 2_000;
/// The decomposition argument that reduces to `{−1,0,1}^n` needs `n ≤ 9`.
pub const SMALL_REGIME_MAX_DIM: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Current(#[from] CurrentError),
    #[error("{0}")]
    Unsupported(String),
    #[error("constraint residual {0:e} exceeds tolerance")]
    Infeasible(f64),
    #[error("program value {value} violates the mass bound |b| = {mass}")]
    MassBound { value: f64, mass: f64 },
    #[error("competitor violates the cell conditions: {0}")]
    InvalidCompetitor(String),
}

/// Which multiplicities enter the lower-bound program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `{−1, 0, 1}^n \ {0}`, valid for `n ≤ 9`.
    Small,
    /// `[−2n, 2n]^n ∩ Z^n \ {0}`, needed for `n ≥ 10`.
    Large,
}

/// The multiplicities `α` of the lower-bound program, one per `±` pair
/// (first nonzero entry positive), since `ψ̃(−α, T) = ψ̃(α, −T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSet {
    dim: usize,
    regime: Regime,
    representatives: Vec<LatticeVector>,
}

impl AlphaSet {
    pub fn small(dim: usize) -> Result<Self, EnvelopeError> {
        if dim == 0 || dim > SMALL_REGIME_MAX_DIM {
            return Err(EnvelopeError::Unsupported(format!(
                "the {{-1,0,1}}^n program needs 1 <= n <= {SMALL_REGIME_MAX_DIM}, got n = {dim}"
            )));
        }
        Ok(Self::enumerate(dim, 1, Regime::Small))
    }

    /// Refuses sets beyond `MAX_PROGRAM_REPRESENTATIVES`, which is every
    /// `n ≥ 10`: the set has `((4n+1)^n − 1)/2` elements.
    pub fn large(dim: usize) -> Result<Self, EnvelopeError> {
        let radius = 2 * dim as i64;
        let count = (2.0 * radius as f64 + 1.0).powi(dim as i32);
        if dim < 10 || count / 2.0 > MAX_PROGRAM_REPRESENTATIVES as f64 {
            return Err(EnvelopeError::Unsupported(format!(
                "the [-2n,2n]^n program applies to n >= 10 and has {count:.3e} multiplicities"
            )));
        }
        Ok(Self::enumerate(dim, radius, Regime::Large))
    }

    /// The set matching the ambient dimension.
    pub fn for_dim(dim: usize) -> Result<Self, EnvelopeError> {
        if dim <= SMALL_REGIME_MAX_DIM {
            Self::small(dim)
        } else {
            Self::large(dim)
        }
    }

    fn enumerate(dim: usize, radius: i64, regime: Regime) -> Self {
        let side = (2 * radius + 1) as usize;
        let mut reps = Vec::new();
        let mut entries = vec![0i64; dim];
        for mut idx in 0..side.pow(dim as u32) {
            for e in entries.iter_mut().rev() {
                *e = (idx % side) as i64 - radius;
                idx /= side;
            }
            if entries.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
                reps.push(LatticeVector::new(entries.clone()));
            }
        }
        Self {
            dim,
            regime,
            representatives: reps,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn representatives(&self) -> &[LatticeVector] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

/// The minimizing structure behind an [`EnvelopeResult`].
#[derive(Clone, Debug, PartialEq)]
pub enum Minimizer {
    /// No optimization was needed.
    Trivial,
    /// `T_α` for each representative `α` of the program.
    Decomposition(Vec<(LatticeVector, Vec<f64>)>),
    /// The `(z1, z2)` of the pair formula.
    Pair { z1: Vec<f64>, z2: Vec<f64> },
    /// The single `z` of the planar pair formula.
    Planar { z: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub starts: usize,
    pub converged: bool,
    pub final_step: f64,
    pub evaluations: usize,
    /// Best objective found, in the units of the reported value.
    pub best_value: f64,
    /// `|Σ α ⊗ T_α − b ⊗ t|_F` at the reported minimizer (0 where there is
    /// no constraint).
    pub constraint_residual: f64,
}

impl Diagnostics {
    fn trivial(value: f64) -> Self {
        Self {
            starts: 0,
            converged: true,
            final_step: 0.0,
            evaluations: 0,
            best_value: value,
            constraint_residual: 0.0,
        }
    }
}

/// Two-sided enclosure of an envelope value.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeResult {
    pub value_lower: f64,
    pub value_upper: f64,
    pub minimizer: Minimizer,
    pub diagnostics: Diagnostics,
}

impl EnvelopeResult {
    fn exact(value: f64) -> Self {
        Self {
            value_lower: value,
            value_upper: value,
            minimizer: Minimizer::Trivial,
            diagnostics: Diagnostics::trivial(value),
        }
    }

    pub fn converged(&self) -> bool {
        self.diagnostics.converged
    }
}

/// `best − step` once the search has converged, otherwise only `floor`: an
/// unfinished search can stop well above the minimum.
fn certified_lower(best: f64, step: f64, converged: bool, floor: f64) -> f64 {
    if converged {
        (best - step).max(floor)
    } else {
        floor
    }
}

/// Tolerance on `|Σ α⊗T_α − b⊗t|_F` at the reported minimizer.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Lower bound on `ψ̄(b, t)` from the decomposition program
///
/// ```text
/// min { Σ_α ψ̃(α, T_α) : Σ_α α ⊗ T_α = b ⊗ t }.
/// ```
///
/// The objective is convex (each `ψ̃(α, ·)` is convex and one-homogeneous),
/// so the multistart only guards against stalls at kinks. `value_lower` is
/// the computed minimum minus the final pattern step, raised to the mass
/// bound `|b|` when that is larger, and just `|b|` if the search did not
/// converge; `value_upper` is the straight-line bound `ψ(b, t)`.
pub fn lower_bound_alpha(
    b: &LatticeVector,
    t: &[f64],
    eta: f64,
    alphas: &AlphaSet,
    opts: &SolverOptions,
) -> Result<EnvelopeResult, EnvelopeError> {
    let n = alphas.dim();
    if b.dim() != n || t.len() != n {
        return Err(EnvelopeError::Unsupported(format!(
            "alpha set lives in dimension {n}, b in {}, t in {}",
            b.dim(),
            t.len()
        )));
    }
    if alphas.len() > MAX_PROGRAM_REPRESENTATIVES {
        return Err(EnvelopeError::Unsupported(format!(
            "{} multiplicities exceed the program size limit {MAX_PROGRAM_REPRESENTATIVES}",
            alphas.len()
        )));
    }
    let t = unit_tangent(t)?;
    let straight = psi_cubic(b, &t, eta)?;
    let mass = b.norm();

    let feasible = alpha_constraint(b, &t, alphas)?;
    let reps: Vec<Vec<f64>> = alphas.representatives().iter().map(LatticeVector::to_f64).collect();
    let objective = |x: &[f64]| -> f64 {
        reps.iter()
            .zip(x.chunks_exact(n))
            .map(|(alpha, big_t)| psi_tilde(alpha, big_t, eta))
            .sum()
    };
    let report = minimize_multistart(objective, &feasible, opts)?;

    let residual = feasible.residual(&report.best_point);
    if residual > RESIDUAL_TOLERANCE {
        return Err(EnvelopeError::Infeasible(residual));
    }
    if report.best_value < mass - 1e-9 {
        return Err(EnvelopeError::MassBound {
            value: report.best_value,
            mass,
        });
    }
    let decomposition = alphas
        .representatives()
        .iter()
        .cloned()
        .zip(report.best_point.chunks_exact(n).map(<[f64]>::to_vec))
        .collect();
    Ok(EnvelopeResult {
        value_lower: certified_lower(report.best_value, report.final_step, report.converged, mass),
        value_upper: straight,
        minimizer: Minimizer::Decomposition(decomposition),
        diagnostics: Diagnostics {
            starts: report.starts,
            converged: report.converged,
            final_step: report.final_step,
            evaluations: report.evaluations,
            best_value: report.best_value,
            constraint_residual: residual,
        },
    })
}

/// The affine constraint `Σ_α α ⊗ T_α = b ⊗ t` on the stacked vector
/// `(T_α)_α`: row `(i, j)` reads `Σ_α α_i T_{α,j} = b_i t_j`.
pub fn alpha_constraint(
    b: &LatticeVector,
    t: &[f64],
    alphas: &AlphaSet,
) -> Result<AffineFeasibleSet, EnvelopeError> {
    let n = alphas.dim();
    let unknowns = n * alphas.len();
    let mut rows = Vec::with_capacity(n * n);
    let mut rhs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut row = vec![0.0; unknowns];
            for (k, alpha) in alphas.representatives().iter().enumerate() {
                row[k * n + j] = alpha.entries()[i] as f64;
            }
            rows.push(row);
            rhs.push(b.entries()[i] as f64 * t[j]);
        }
    }
    Ok(eliminate_constraints(&rows, &rhs)?)
}

/// `ψ̄(β e_i, t) = |β| (1 + η t_i²)` for `n ≤ 9`.
pub fn barpsi_single(beta: i64, axis: usize, t: &[f64], eta: f64) -> Result<f64, EnvelopeError> {
    let n = t.len();
    if n > SMALL_REGIME_MAX_DIM || axis >= n {
        return Err(EnvelopeError::Unsupported(format!(
            "axis {axis} in dimension {n} (closed form holds for n <= {SMALL_REGIME_MAX_DIM})"
        )));
    }
    let t = unit_tangent(t)?;
    Ok(beta.unsigned_abs() as f64 * (1.0 + eta * t[axis] * t[axis]))
}

/// The two lattice directions `e_i` and `f = sign · e_j` of a pair problem.
fn pair_basis(n: usize, i: usize, j: usize, sign: i64) -> (Vec<f64>, Vec<f64>) {
    let mut ei = vec![0.0; n];
    ei[i] = 1.0;
    let mut f = vec![0.0; n];
    f[j] = sign as f64;
    (ei, f)
}

fn check_pair(n: usize, i: usize, j: usize, sign: i64) -> Result<(), EnvelopeError> {
    if i == j || i >= n || j >= n || !(2..=SMALL_REGIME_MAX_DIM).contains(&n) {
        return Err(EnvelopeError::Unsupported(format!(
            "pair formula needs distinct axes in dimension 2..={SMALL_REGIME_MAX_DIM}, got ({i}, {j}) in {n}"
        )));
    }
    if sign != 1 && sign != -1 {
        return Err(EnvelopeError::Unsupported(format!("sign must be ±1, got {sign}")));
    }
    Ok(())
}

/// The pair objective at `β = 1`, with `f = sign · e_j`:
///
/// ```text
/// ψ̃(e_i, z1) + ψ̃(f, z2) + ψ̃(e_i − f, (z2 − z1)/2) + ψ̃(e_i + f, t − (z1 + z2)/2).
/// ```
pub fn pair_objective(i: usize, j: usize, sign: i64, t: &[f64], eta: f64, z1: &[f64], z2: &[f64]) -> f64 {
    let n = t.len();
    let (ei, f) = pair_basis(n, i, j, sign);
    pair_objective_with(&ei, &f, t, eta, z1, z2)
}

fn pair_objective_with(ei: &[f64], f: &[f64], t: &[f64], eta: f64, z1: &[f64], z2: &[f64]) -> f64 {
    let n = t.len();
    let mut diff = [0.0f64; SMALL_REGIME_MAX_DIM];
    let mut rest = [0.0f64; SMALL_REGIME_MAX_DIM];
    let mut minus = [0.0f64; SMALL_REGIME_MAX_DIM];
    let mut plus = [0.0f64; SMALL_REGIME_MAX_DIM];
    for k in 0..n {
        diff[k] = 0.5 * (z2[k] - z1[k]);
        rest[k] = t[k] - 0.5 * (z1[k] + z2[k]);
        minus[k] = ei[k] - f[k];
        plus[k] = ei[k] + f[k];
    }
    psi_tilde(ei, z1, eta)
        + psi_tilde(f, z2, eta)
        + psi_tilde(&minus[..n], &diff[..n], eta)
        + psi_tilde(&plus[..n], &rest[..n], eta)
}

/// `ψ̄(β(e_i + sign·e_j), t) = |β| min_{z1,z2} pair_objective(z1, z2)`.
///
/// `value_upper` is the objective at the computed minimizer (realized by the
/// zig-zag construction); `value_lower` subtracts the final pattern step and
/// is raised to the mass bound `|β|√2`.
pub fn barpsi_pair(
    beta: i64,
    i: usize,
    j: usize,
    sign: i64,
    t: &[f64],
    eta: f64,
    opts: &SolverOptions,
) -> Result<EnvelopeResult, EnvelopeError> {
    let n = t.len();
    check_pair(n, i, j, sign)?;
    let t = unit_tangent(t)?;
    if beta == 0 {
        return Ok(EnvelopeResult::exact(0.0));
    }
    let (ei, f) = pair_basis(n, i, j, sign);
    let objective = |z: &[f64]| pair_objective_with(&ei, &f, &t, eta, &z[..n], &z[n..]);
    let report = minimize_multistart(objective, &AffineFeasibleSet::unconstrained(2 * n), opts)?;
    let scale = beta.unsigned_abs() as f64;
    let value = scale * report.best_value;
    Ok(EnvelopeResult {
        value_lower: certified_lower(value, scale * report.final_step, report.converged, scale * 2f64.sqrt()),
        value_upper: value,
        minimizer: Minimizer::Pair {
            z1: report.best_point[..n].to_vec(),
            z2: report.best_point[n..].to_vec(),
        },
        diagnostics: Diagnostics {
            starts: report.starts,
            converged: report.converged,
            final_step: report.final_step,
            evaluations: report.evaluations,
            best_value: value,
            constraint_residual: 0.0,
        },
    })
}

/// The planar objective `ψ̃(e1, z) + ψ̃(e2, z) + ψ̃(e1 + e2, t − z)`, for
/// `e1 + sign·e2`.
///
/// The `e1 − e2` case is the reflection `x2 ↦ −x2` of the `e1 + e2` one,
/// under which `ψ` is invariant.
pub fn pair_2d_objective(sign: i64, t: &[f64], eta: f64, z: &[f64]) -> f64 {
    let s = sign as f64;
    let tz = [t[0] - z[0], s * t[1] - z[1]];
    psi_tilde(&[1.0, 0.0], z, eta) + psi_tilde(&[0.0, 1.0], z, eta) + psi_tilde(&[1.0, 1.0], &tz, eta)
}

/// `ψ̄(β(e1 + sign·e2), t) = |β| min_z pair_2d_objective(z)` in the plane.
/// The returned `z` lives in the reflected frame when `sign = −1`.
pub fn barpsi_pair_2d(
    beta: i64,
    sign: i64,
    t: &[f64],
    eta: f64,
    opts: &SolverOptions,
) -> Result<EnvelopeResult, EnvelopeError> {
    if t.len() != 2 {
        return Err(EnvelopeError::Unsupported("planar pair formula needs n = 2".into()));
    }
    check_pair(2, 0, 1, sign)?;
    let t = unit_tangent(t)?;
    if beta == 0 {
        return Ok(EnvelopeResult::exact(0.0));
    }
    let objective = |z: &[f64]| pair_2d_objective(sign, &t, eta, z);
    let report = minimize_multistart(objective, &AffineFeasibleSet::unconstrained(2), opts)?;
    let scale = beta.unsigned_abs() as f64;
    let value = scale * report.best_value;
    Ok(EnvelopeResult {
        value_lower: certified_lower(value, scale * report.final_step, report.converged, scale * 2f64.sqrt()),
        value_upper: value,
        minimizer: Minimizer::Planar { z: report.best_point },
        diagnostics: Diagnostics {
            starts: report.starts,
            converged: report.converged,
            final_step: report.final_step,
            evaluations: report.evaluations,
            best_value: value,
            constraint_residual: 0.0,
        },
    })
}

/// Envelope values of the planar generators `e1, e2, e1 + e2, e1 − e2` at
/// one tangent; everything [`psi_star`] needs.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarGenerators {
    pub e1: f64,
    pub e2: f64,
    pub plus: EnvelopeResult,
    pub minus: EnvelopeResult,
}

impl PlanarGenerators {
    pub fn compute(t: &[f64], eta: f64, opts: &SolverOptions) -> Result<Self, EnvelopeError> {
        Ok(Self {
            e1: barpsi_single(1, 0, t, eta)?,
            e2: barpsi_single(1, 1, t, eta)?,
            plus: barpsi_pair_2d(1, 1, t, eta, opts)?,
            minus: barpsi_pair_2d(1, -1, t, eta, opts)?,
        })
    }

    /// Planar minimizer `z` of the diagonal generator (reflected frame for
    /// `e1 − e2`).
    pub fn diagonal_minimizer(&self, plus: bool) -> &[f64] {
        match &(if plus { &self.plus } else { &self.minus }).minimizer {
            Minimizer::Planar { z } => z,
            _ => &[0.0, 0.0],
        }
    }

    /// `ψ*(b, t)` in closed form:
    /// `min(|b1|,|b2|) ψ̄(e1 + sgn(b1 b2) e2) + (|b2|−|b1|)₊ ψ(e2) + (|b1|−|b2|)₊ ψ(e1)`.
    pub fn converged(&self) -> bool {
        self.plus.converged() && self.minus.converged()
    }

    pub fn psi_star(&self, b: [i64; 2]) -> f64 {
        let (a1, a2) = (b[0].unsigned_abs() as f64, b[1].unsigned_abs() as f64);
        let diagonal = if b[0] * b[1] >= 0 {
            self.plus.value_upper
        } else {
            self.minus.value_upper
        };
        a1.min(a2) * diagonal + (a2 - a1).max(0.0) * self.e2 + (a1 - a2).max(0.0) * self.e1
    }
}

/// The convex subadditive envelope `ψ*(b, t)` of `ψ` in the plane.
pub fn psi_star(b: [i64; 2], t: &[f64], eta: f64, opts: &SolverOptions) -> Result<f64, EnvelopeError> {
    if t.len() != 2 {
        return Err(EnvelopeError::Unsupported("psi* is planar (n = 2)".into()));
    }
    Ok(PlanarGenerators::compute(t, eta, opts)?.psi_star(b))
}

/// The zig-zag competitor for `e_i + sign·e_j` over one period `0 → t`.
///
/// Two polygons run from `0` to `t`:
/// `γ1 = 0, z1/2, z2/2, (z1+z2)/2, t` carrying `e_i` and
/// `γ2 = 0, z2/2, z1/2, (z1+z2)/2, t` carrying `sign·e_j`. They share the
/// middle leg with opposite orientations and the last leg with equal ones.
/// Returns the normalized current and its energy; for `z1 ≠ z2` in general
/// position that energy equals [`pair_objective`]. When `z1 = z2 ≠ 0` the
/// first legs coincide and the superposed measure costs more; the objective
/// is then only the limit of competitors with `z2 → z1`.
pub fn upper_construction_pair(
    i: usize,
    j: usize,
    sign: i64,
    t: &[f64],
    eta: f64,
    z1: &[f64],
    z2: &[f64],
) -> Result<(PolyhedralCurrent, f64), EnvelopeError> {
    let n = t.len();
    check_pair(n, i, j, sign)?;
    let t = unit_tangent(t)?;
    let (theta1, theta2) = pair_thetas(n, i, j, sign);
    let current = zigzag_cell(&theta1, &theta2, &vec![0.0; n], &t, 1.0, z1, z2, &vec![0.0; n])?;
    let e = energy(&current, &CubicIntegrand::new(eta)?, None)?;
    Ok((current, e))
}

/// One zig-zag period from `origin` to `origin + h t`, normalized. The
/// interior vertices are moved by `shift` (endpoints stay put), which lets
/// several copies share the endpoints without sharing legs.
#[allow(clippy::too_many_arguments)]
fn zigzag_cell(
    theta1: &LatticeVector,
    theta2: &LatticeVector,
    origin: &[f64],
    t: &[f64],
    h: f64,
    z1: &[f64],
    z2: &[f64],
    shift: &[f64],
) -> Result<PolyhedralCurrent, EnvelopeError> {
    let n = t.len();
    let at = |v: &dyn Fn(usize) -> f64| Point::new((0..n).map(|k| origin[k] + h * v(k)).collect());
    let p0 = at(&|_| 0.0);
    let a = at(&|k| 0.5 * z1[k] + shift[k]);
    let b = at(&|k| 0.5 * z2[k] + shift[k]);
    let c = at(&|k| 0.5 * (z1[k] + z2[k]) + shift[k]);
    let end = at(&|k| t[k]);

    let mut current = PolyhedralCurrent::new(n, theta1.dim());
    for (path, theta) in [([&p0, &a, &b, &c, &end], theta1), ([&p0, &b, &a, &c, &end], theta2)] {
        for w in path.windows(2) {
            if w[0] != w[1] {
                current.push(OrientedSegment::new(w[0].clone(), w[1].clone())?, theta.clone())?;
            }
        }
    }
    Ok(current.normalize())
}

fn pair_thetas(n: usize, i: usize, j: usize, sign: i64) -> (LatticeVector, LatticeVector) {
    (LatticeVector::unit(n, i), &LatticeVector::unit(n, j) * sign)
}

/// Spacing between the parallel copies of [`psi_star_construction`].
pub const COPY_SPACING: f64 = 1e-5;
/// Separation `z1 − z2 = 2 d u` applied to a planar minimizer `z1 = z2`
/// before it is realized, since coincident legs would superpose.
pub const LEG_SEPARATION: f64 = 1e-5;

/// An explicit period `0 → t` following the decomposition behind
/// [`psi_star`]: `min(|b1|,|b2|)` zig-zag copies for the diagonal generator
/// and `||b1| − |b2||` straight copies of the remaining axis, each copy bent
/// off the line by its own multiple of [`COPY_SPACING`] so that copies do
/// not superpose. `z_plus` and `z_minus` are the planar minimizers for
/// `e1 + e2` and `e1 − e2` (the latter in its reflected frame).
///
/// Returns the normalized current and its energy, an upper bound for
/// `ψ̄(b, t)` up to the periodization argument.
pub fn psi_star_construction(
    b: [i64; 2],
    t: &[f64],
    eta: f64,
    z_plus: &[f64],
    z_minus: &[f64],
) -> Result<(PolyhedralCurrent, f64), EnvelopeError> {
    if t.len() != 2 {
        return Err(EnvelopeError::Unsupported("the planar construction needs n = 2".into()));
    }
    let t = unit_tangent(t)?;
    let (a1, a2) = (b[0].abs(), b[1].abs());
    let outer = if b[0] != 0 { b[0].signum() } else { b[1].signum() };
    let sign = if b[0] * b[1] < 0 { -1 } else { 1 };
    let z = if sign > 0 {
        z_plus.to_vec()
    } else {
        vec![z_minus[0], -z_minus[1]]
    };
    let u = [LEG_SEPARATION * 0.5f64.sqrt(), -LEG_SEPARATION * 0.5f64.sqrt()];
    let z1 = [z[0] + u[0], z[1] + u[1]];
    let z2 = [z[0] - u[0], z[1] - u[1]];
    let (theta1, theta2) = pair_thetas(2, 0, 1, sign);
    let (theta1, theta2) = (&theta1 * outer, &theta2 * outer);
    let rest = if a1 > a2 {
        LatticeVector::from([b[0].signum(), 0])
    } else {
        LatticeVector::from([0, b[1].signum()])
    };

    let diagonal = a1.min(a2) as usize;
    let copies = diagonal + (a1 - a2).unsigned_abs() as usize;
    let perp = [-t[1], t[0]];
    let mut current = PolyhedralCurrent::new(2, 2);
    for k in 0..copies {
        let offset = (k as f64 - 0.5 * (copies as f64 - 1.0)) * COPY_SPACING;
        let shift = [offset * perp[0], offset * perp[1]];
        let copy = if k < diagonal {
            zigzag_cell(&theta1, &theta2, &[0.0, 0.0], &t, 1.0, &z1, &z2, &shift)?
        } else {
            let mid = Point::new(vec![0.5 * t[0] + shift[0], 0.5 * t[1] + shift[1]]);
            PolyhedralCurrent::polyline(&[Point::origin(2), mid, Point::new(t.clone())], &rest)?
        };
        current = current.sum(&copy)?;
    }
    let current = current.normalize();
    let e = energy(&current, &CubicIntegrand::new(eta)?, None)?;
    Ok((current, e))
}

/// A competitor for the cell problem in `B_{1/2}`: the diameter
/// `−t/2 → t/2` carrying `e_i + sign·e_j`, whose middle part is replaced by
/// zig-zag periods of length `period`, shrunk and kept at distance from the
/// sphere so that the support of the modification stays inside the ball.
#[allow(clippy::too_many_arguments)]
pub fn periodic_pair_competitor(
    i: usize,
    j: usize,
    sign: i64,
    t: &[f64],
    z1: &[f64],
    z2: &[f64],
    period: f64,
) -> Result<PolyhedralCurrent, EnvelopeError> {
    let n = t.len();
    check_pair(n, i, j, sign)?;
    let t = unit_tangent(t)?;
    let reach = crate::currents::norm(z1).max(crate::currents::norm(z2));
    let margin = period * (1.0 + reach);
    let cells = ((1.0 - 2.0 * margin) / period).floor();
    if !(cells >= 1.0) {
        return Err(EnvelopeError::InvalidCompetitor(format!(
            "period {period} too long to fit a cell in the ball"
        )));
    }
    let cells = cells as usize;
    let span = cells as f64 * period;
    let start: Vec<f64> = t.iter().map(|x| -0.5 * span * x).collect();
    let (theta1, theta2) = pair_thetas(n, i, j, sign);
    let theta = &theta1 + &theta2;
    let zero = vec![0.0; n];

    let mut current = PolyhedralCurrent::new(n, n);
    let tip = Point::new(t.iter().map(|x| -0.5 * x).collect());
    let tail = Point::new(t.iter().map(|x| 0.5 * x).collect());
    current.push(OrientedSegment::new(tip, Point::new(start.clone()))?, theta.clone())?;
    let mut origin = Point::new(start);
    for _ in 0..cells {
        let cell = zigzag_cell(&theta1, &theta2, origin.coords(), &t, period, z1, z2, &zero)?;
        // reuse the exact coordinates of the cell's far end as next origin
        let next = cell
            .boundary()
            .atoms()
            .iter()
            .find(|(p, _)| *p != &origin)
            .map(|(p, _)| p.clone())
            .ok_or_else(|| EnvelopeError::InvalidCompetitor("empty zig-zag cell".into()))?;
        current = current.sum(&cell)?;
        origin = next;
    }
    current.push(OrientedSegment::new(origin, tail)?, theta)?;
    Ok(current.normalize())
}

/// `E(P, B_{1/2})` for a competitor `P` of the cell problem, an upper bound
/// for `ψ̄(b, t)`.
///
/// `P` must have the boundary of the diameter `b ⊗ t` on `[−t/2, t/2]`, and
/// `P` minus that diameter must be supported strictly inside the ball.
pub fn cell_upper_bound(
    competitor: &PolyhedralCurrent,
    b: &LatticeVector,
    t: &[f64],
    eta: f64,
) -> Result<f64, EnvelopeError> {
    let n = t.len();
    let t = unit_tangent(t)?;
    let tip = Point::new(t.iter().map(|x| -0.5 * x).collect());
    let tail = Point::new(t.iter().map(|x| 0.5 * x).collect());
    let diameter = PolyhedralCurrent::from_pieces(n, b.dim(), [(OrientedSegment::new(tip, tail)?, b.clone())])?;

    let excess = competitor.sum(&diameter.negated())?;
    let boundary = excess.boundary();
    if !boundary.is_empty() {
        return Err(EnvelopeError::InvalidCompetitor(format!(
            "boundary differs from that of the diameter by {boundary}"
        )));
    }
    let excess = excess.normalize();
    let outside: Vec<String> = excess
        .pieces()
        .iter()
        .flat_map(|p| [p.segment.start(), p.segment.end()])
        .filter(|p| p.norm() >= 0.5 - 1e-12)
        .map(ToString::to_string)
        .collect();
    if !outside.is_empty() {
        return Err(EnvelopeError::InvalidCompetitor(format!(
            "modification reaches the sphere at {}",
            outside.join(", ")
        )));
    }
    let ball = Region::ball(vec![0.0; n], 0.5);
    Ok(energy(&competitor.normalize(), &CubicIntegrand::new(eta)?, Some(&ball))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn angle(a: f64) -> [f64; 2] {
        [a.cos(), a.sin()]
    }

    #[test]
    fn alpha_set_sizes() {
        assert_eq!(AlphaSet::small(2).unwrap().len(), 4);
        assert_eq!(AlphaSet::small(3).unwrap().len(), 13);
        let reps = AlphaSet::small(2).unwrap();
        for a in reps.representatives() {
            assert!(!a.is_zero());
            assert!(!reps.representatives().contains(&-a));
        }
        assert!(AlphaSet::small(10).is_err());
        assert!(AlphaSet::large(10).is_err());
        assert_eq!(AlphaSet::for_dim(3).unwrap().regime(), Regime::Small);
    }

    #[test]
    fn planar_constraint_has_four_dimensional_nullspace() {
        let set = alpha_constraint(&LatticeVector::from([1, 1]), &angle(0.4), &AlphaSet::small(2).unwrap()).unwrap();
        assert_eq!(set.ambient_dim(), 8);
        assert_eq!(set.nullity(), 4);
    }

    #[test]
    fn zero_burgers_vector_costs_nothing() {
        let r = lower_bound_alpha(
            &LatticeVector::from([0, 0]),
            &angle(1.0),
            1.0,
            &AlphaSet::small(2).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(r.value_lower, 0.0);
        match r.minimizer {
            Minimizer::Decomposition(d) => assert!(d.iter().all(|(_, tt)| tt.iter().all(|x| *x == 0.0))),
            _ => panic!(),
        }
    }

    #[test]
    fn single_closed_form() {
        assert_eq!(barpsi_single(0, 0, &[1.0, 0.0], 1.0).unwrap(), 0.0);
        assert_eq!(barpsi_single(3, 0, &[1.0, 0.0], 1.0).unwrap(), 6.0);
        assert_eq!(barpsi_single(1, 1, &[1.0, 0.0], 1.0).unwrap(), 1.0);
        assert_eq!(barpsi_single(-2, 1, &[0.0, 1.0], 0.5).unwrap(), 3.0);
        assert!(barpsi_single(1, 0, &[1.0; 10].map(|x: f64| x / 10f64.sqrt()), 1.0).is_err());
    }

    #[test]
    fn pair_objective_at_the_witness_point() {
        let z = [0.1, 0.1];
        let v = pair_2d_objective(1, &[0.0, 1.0], 1.0, &z);
        // ψ̃(e1,z) = ψ̃(e2,z) = √0.02 + 0.01/√0.02; ψ̃(e1+e2,(−0.1,0.9)) = √0.82·(2 + 0.64/0.82)
        let want = 2.0 * (0.02f64.sqrt() + 0.01 / 0.02f64.sqrt()) + 0.82f64.sqrt() * (2.0 + 0.64 / 0.82);
        assert!((v - want).abs() < 1e-14);
        assert!((v - 2.9421029).abs() < 1e-7);
        assert_eq!(v, pair_objective(0, 1, 1, &[0.0, 1.0], 1.0, &z, &z));
    }

    #[test]
    fn pair_without_anisotropy_is_two() {
        let opts = SolverOptions::default();
        for a in [0.0, 0.7, 2.0, 4.0] {
            let r = barpsi_pair(2, 0, 1, 1, &angle(a), 0.0, &opts).unwrap();
            assert!((r.value_upper - 4.0 * 2f64.sqrt() / 2f64.sqrt()).abs() < 1e-6, "{}", r.value_upper);
            let r = barpsi_pair_2d(1, 1, &angle(a), 0.0, &opts).unwrap();
            assert!((r.value_upper - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn pair_strictly_relaxes_at_vertical_tangent() {
        let opts = SolverOptions::default();
        let r = barpsi_pair_2d(1, 1, &[0.0, 1.0], 1.0, &opts).unwrap();
        assert!(r.value_upper <= 2.9422);
        let Minimizer::Planar { z } = &r.minimizer else { panic!() };
        assert!(z[0] > 0.0);
        let r = barpsi_pair(1, 0, 1, 1, &[0.0, 1.0], 1.0, &opts).unwrap();
        assert!(r.value_upper <= 2.9422);
    }

    #[test]
    fn pair_on_antidiagonal_is_straight() {
        let s = 0.5f64.sqrt();
        let r = barpsi_pair(1, 0, 1, 1, &[s, -s], 1.0, &SolverOptions::default()).unwrap();
        assert!((r.value_upper - 2.0).abs() < 1e-6);
    }

    #[test]
    fn psi_star_examples() {
        let opts = SolverOptions::default();
        let t = angle(0.3);
        let g = PlanarGenerators::compute(&t, 1.0, &opts).unwrap();
        assert_eq!(g.psi_star([1, 1]), g.plus.value_upper);
        assert_eq!(g.psi_star([-1, 1]), g.minus.value_upper);
        assert!((g.psi_star([0, 3]) - 3.0 * psi_cubic(&LatticeVector::from([0, 1]), &t, 1.0).unwrap()).abs() < 1e-12);
        let v = psi_star([2, 1], &[0.0, 1.0], 1.0, &opts).unwrap();
        assert!(v <= 3.9422);
    }

    #[test]
    fn straight_construction() {
        let t = angle(0.9);
        let (c, e) = upper_construction_pair(0, 1, 1, &t, 1.0, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(c.pieces().len(), 1);
        assert_eq!(c.pieces()[0].theta, LatticeVector::from([1, 1]));
        let want = psi_cubic(&LatticeVector::from([1, 1]), &t, 1.0).unwrap();
        assert!((e - want).abs() < 1e-12);
    }

    #[test]
    fn construction_matches_objective_in_general_position() {
        let t = [0.0, 1.0];
        let (z1, z2) = ([0.1, 0.12], [0.13, 0.08]);
        let (c, e) = upper_construction_pair(0, 1, 1, &t, 1.0, &z1, &z2).unwrap();
        assert!((e - pair_objective(0, 1, 1, &t, 1.0, &z1, &z2)).abs() < 1e-12);
        let bd = c.boundary();
        assert_eq!(bd.get(&Point::new(vec![0.0, 1.0])), Some(&LatticeVector::from([1, 1])));
        assert_eq!(bd.len(), 2);
    }

    #[test]
    fn coincident_legs_superpose() {
        // z1 = z2 = (0.1, 0.1): the first legs carry e1 + e2 together.
        let z = [0.1, 0.1];
        let (_, e) = upper_construction_pair(0, 1, 1, &[0.0, 1.0], 1.0, &z, &z).unwrap();
        let stacked = psi_tilde(&[1.0, 1.0], &z, 1.0) + psi_tilde(&[1.0, 1.0], &[-0.1, 0.9], 1.0);
        assert!((e - stacked).abs() < 1e-12);
        // separating the legs recovers the objective in the limit
        let obj = pair_2d_objective(1, &[0.0, 1.0], 1.0, &z);
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let z2 = [0.1 + eps, 0.1 - eps];
            let (_, e) = upper_construction_pair(0, 1, 1, &[0.0, 1.0], 1.0, &z, &z2).unwrap();
            let gap = (e - obj).abs();
            assert!(gap < last);
            last = gap;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn decomposed_construction_tracks_psi_star() {
        let opts = SolverOptions::default();
        for (b, a) in [([2, 1], 1.6), ([1, 1], 0.2), ([-1, 2], 2.5), ([0, -2], 0.4), ([3, -1], 1.0), ([-2, -2], 1.8)] {
            let t = angle(a);
            let g = PlanarGenerators::compute(&t, 1.0, &opts).unwrap();
            let (c, e) =
                psi_star_construction(b, &t, 1.0, g.diagonal_minimizer(true), g.diagonal_minimizer(false)).unwrap();
            let bd = c.boundary();
            assert_eq!(bd.get(&Point::new(t.to_vec())), Some(&LatticeVector::from(b)));
            assert_eq!(bd.len(), 2);
            let star = g.psi_star(b);
            assert!(e >= star - 1e-6 && e <= star + 1e-3, "{b:?}: {e} vs {star}");
        }
    }

    #[test]
    fn straight_competitor_bound() {
        let t = angle(0.25);
        let b = LatticeVector::from([2, -1]);
        let d = PolyhedralCurrent::polyline(
            &[Point::new(vec![-0.5 * t[0], -0.5 * t[1]]), Point::new(vec![0.5 * t[0], 0.5 * t[1]])],
            &b,
        )
        .unwrap();
        let v = cell_upper_bound(&d, &b, &t, 0.7).unwrap();
        assert!((v - psi_cubic(&b, &t, 0.7).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn competitor_touching_the_sphere_is_rejected() {
        let t = [1.0, 0.0];
        let b = LatticeVector::from([1, 0]);
        // detour through (0, 0.5) reaches the sphere
        let c = PolyhedralCurrent::polyline(
            &[Point::new(vec![-0.5, 0.0]), Point::new(vec![0.0, 0.5]), Point::new(vec![0.5, 0.0])],
            &b,
        )
        .unwrap();
        assert!(matches!(cell_upper_bound(&c, &b, &t, 1.0), Err(EnvelopeError::InvalidCompetitor(_))));
        // wrong boundary
        let c = PolyhedralCurrent::polyline(&[Point::new(vec![-0.5, 0.0]), Point::new(vec![0.2, 0.0])], &b).unwrap();
        assert!(matches!(cell_upper_bound(&c, &b, &t, 1.0), Err(EnvelopeError::InvalidCompetitor(_))));
    }

    #[test]
    fn periodic_competitor_is_admissible() {
        let t = [0.0, 1.0];
        let (z1, z2) = ([0.1, 0.1], [0.101, 0.099]);
        let c = periodic_pair_competitor(0, 1, 1, &t, &z1, &z2, 1.0 / 8.0).unwrap();
        let v = cell_upper_bound(&c, &LatticeVector::from([1, 1]), &t, 1.0).unwrap();
        assert!(v < 3.0);
    }
}
