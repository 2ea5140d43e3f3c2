//! Line-tension integrands and the energy they induce on polyhedral
//! currents.
//!
//! The flagship integrand is the cubic family
//!
//! ```text
//! ψ_η(b, t) = |b|² + η (b·t)²,   η ∈ [0, 1],
//! ```
//!
//! with its positively one-homogeneous extension `ψ̃(b, T) = |T| ψ(b, T/|T|)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::currents::{dot, norm, LatticeVector, PolyhedralCurrent, Region};

/// Tangents within this distance of the unit sphere are used as given.
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// Tangents further than this from the unit sphere are rejected.
pub const UNIT_REJECT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("tangent is not a unit vector (|t| = {0})")]
    NonUnitTangent(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Returns `t`, renormalized if it is within [`UNIT_REJECT_TOLERANCE`] of
/// the unit sphere, and an error otherwise.
pub fn unit_tangent(t: &[f64]) -> Result<Vec<f64>, EnergyError> {
    let len = norm(t);
    let dev = (len - 1.0).abs();
    if !(dev <= UNIT_REJECT_TOLERANCE) {
        return Err(EnergyError::NonUnitTangent(len));
    }
    if dev <= UNIT_TOLERANCE {
        Ok(t.to_vec())
    } else {
        Ok(t.iter().map(|x| x / len).collect())
    }
}

fn check_dims(b: &LatticeVector, t: &[f64]) -> Result<(), EnergyError> {
    if b.dim() != t.len() {
        return Err(EnergyError::DimensionMismatch(format!(
            "Burgers vector in Z^{} but tangent in R^{}",
            b.dim(),
            t.len()
        )));
    }
    Ok(())
}

/// `|b|² + η (b·t)²` for a unit tangent `t`.
pub fn psi_cubic(b: &LatticeVector, t: &[f64], eta: f64) -> Result<f64, EnergyError> {
    check_dims(b, t)?;
    let t = unit_tangent(t)?;
    let bt = b.dot(&t);
    Ok(b.norm_squared() as f64 + eta * bt * bt)
}

/// `ψ̃(b, T) = |T| ψ(b, T/|T|) = |T||b|² + η (b·T)²/|T|`, and `0` at `T = 0`.
pub fn psi_extended(b: &LatticeVector, big_t: &[f64], eta: f64) -> f64 {
    assert_eq!(b.dim(), big_t.len(), "dimension mismatch");
    psi_tilde(&b.to_f64(), big_t, eta)
}

/// [`psi_extended`] on a real vector `b`; the inner loop of the envelope
/// solvers.
#[inline]
pub fn psi_tilde(b: &[f64], big_t: &[f64], eta: f64) -> f64 {
    let len = norm(big_t);
    if len == 0.0 {
        return 0.0;
    }
    let bt = dot(b, big_t);
    len * dot(b, b) + eta * bt * bt / len
}

/// A line-energy density `ψ(b, t)` per unit length.
pub trait Integrand: Send + Sync {
    fn name(&self) -> &str;

    /// A constant `c0 > 0` with `ψ(b, t) ≥ c0 |b|`.
    fn growth_constant(&self) -> f64;

    fn evaluate(&self, b: &LatticeVector, t: &[f64]) -> Result<f64, EnergyError>;
}

/// The cubic family `ψ_η`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicIntegrand {
    eta: f64,
}

impl CubicIntegrand {
    pub fn new(eta: f64) -> Result<Self, EnergyError> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(EnergyError::InvalidParameter(format!(
                "eta = {eta} outside [0, 1]"
            )));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl Integrand for CubicIntegrand {
    fn name(&self) -> &str {
        "cubic"
    }

    // |b|² ≥ |b| on nonzero lattice vectors
    fn growth_constant(&self) -> f64 {
        1.0
    }

    fn evaluate(&self, b: &LatticeVector, t: &[f64]) -> Result<f64, EnergyError> {
        psi_cubic(b, t, self.eta)
    }
}

/// Isotropic elastic constants of a crystal with planar cubic slip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropicElasticParams {
    pub shear_modulus: f64,
    pub poisson_ratio: f64,
    pub lattice_spacing: f64,
}

impl IsotropicElasticParams {
    pub fn new(shear_modulus: f64, poisson_ratio: f64, lattice_spacing: f64) -> Result<Self, EnergyError> {
        if !(shear_modulus > 0.0) || !(lattice_spacing > 0.0) {
            return Err(EnergyError::InvalidParameter(
                "shear modulus and lattice spacing must be positive".into(),
            ));
        }
        if !(-1.0..=0.5).contains(&poisson_ratio) {
            return Err(EnergyError::InvalidParameter(format!(
                "Poisson ratio {poisson_ratio} outside [-1, 1/2]"
            )));
        }
        Ok(Self {
            shear_modulus,
            poisson_ratio,
            lattice_spacing,
        })
    }

    /// `(prefactor, η, rotate)`: `ψ^c(b,t) = prefactor · ψ_η(b', t)` with
    /// `b' = b⊥` when `rotate` and `b' = b` otherwise.
    fn reduced(&self) -> (f64, f64, bool) {
        let nu = self.poisson_ratio;
        let base = self.shear_modulus * self.lattice_spacing.powi(2) / (2.0 * PI);
        if nu >= 0.0 {
            (base, nu / (1.0 - nu), true)
        } else {
            (base / (1.0 - nu), -nu, false)
        }
    }
}

/// Line energy of a planar dislocation in an isotropic crystal.
///
/// For `ν ≥ 0` this is `(μa0²/2π) ψ_η(b⊥, t)` with `η = ν/(1−ν)` and
/// `b⊥ = (−b2, b1)`; for `ν < 0` it is rewritten as
/// `(μa0²/(2π(1−ν))) ψ_{−ν}(b, t)`, so `η` always stays in `[0, 1]`.
pub fn psi_crystal(
    b: &LatticeVector,
    t: &[f64],
    params: &IsotropicElasticParams,
) -> Result<f64, EnergyError> {
    if b.dim() != 2 || t.len() != 2 {
        return Err(EnergyError::DimensionMismatch(
            "the crystal integrand is planar (b ∈ Z², t ∈ R²)".into(),
        ));
    }
    let (prefactor, eta, rotate) = params.reduced();
    let b = if rotate {
        LatticeVector::from([-b.entries()[1], b.entries()[0]])
    } else {
        b.clone()
    };
    Ok(prefactor * psi_cubic(&b, t, eta)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrystalIntegrand(pub IsotropicElasticParams);

impl Integrand for CrystalIntegrand {
    fn name(&self) -> &str {
        "crystal"
    }

    fn growth_constant(&self) -> f64 {
        self.0.reduced().0
    }

    fn evaluate(&self, b: &LatticeVector, t: &[f64]) -> Result<f64, EnergyError> {
        psi_crystal(b, t, &self.0)
    }
}

/// `E(μ, ω) = Σ_i ψ(θ_i, τ_i) · H¹(σ_i ∩ ω)`; `region = None` is all of space.
///
/// The current should be normalized, otherwise overlapping pieces are
/// charged separately.
pub fn energy(
    current: &PolyhedralCurrent,
    psi: &dyn Integrand,
    region: Option<&Region>,
) -> Result<f64, EnergyError> {
    let mut total = 0.0;
    for piece in current.pieces() {
        let len = match region {
            Some(r) => r.clipped_length(&piece.segment),
            None => piece.segment.length(),
        };
        if len > 0.0 {
            total += psi.evaluate(&piece.theta, &piece.segment.tangent())? * len;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::{OrientedSegment, Point};

    fn lv(v: &[i64]) -> LatticeVector {
        LatticeVector::new(v.to_vec())
    }

    #[test]
    fn cubic_examples() {
        assert_eq!(psi_cubic(&lv(&[1, 0]), &[1.0, 0.0], 1.0).unwrap(), 2.0);
        assert_eq!(psi_cubic(&lv(&[1, 1]), &[0.0, 1.0], 1.0).unwrap(), 3.0);
    }

    #[test]
    fn non_unit_tangent_is_rejected() {
        assert!(matches!(
            psi_cubic(&lv(&[1, 0]), &[1.1, 0.0], 1.0),
            Err(EnergyError::NonUnitTangent(_))
        ));
        // small deviations are renormalized
        let v = psi_cubic(&lv(&[1, 0]), &[1.0 + 1e-8, 0.0], 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ten_dimensional_counterexample() {
        let mut b = vec![1i64; 10];
        b[0] = 2;
        let mut t = vec![-(12f64).powf(-0.5); 10];
        t[0] = 0.5;
        let b = LatticeVector::new(b);
        let e1 = LatticeVector::unit(10, 0);
        let whole = psi_cubic(&b, &t, 1.0).unwrap();
        let split = psi_cubic(&(&b - &e1), &t, 1.0).unwrap() + psi_cubic(&e1, &t, 1.0).unwrap();
        // b·t = 1 - 9/√12, |b|² = 13; (b-e1)·t = 1/2 - 9/√12, |b-e1|² = 10
        let s = 9.0 / 12f64.sqrt();
        assert!((whole - (13.0 + (1.0 - s).powi(2))).abs() < 1e-12);
        assert!((split - (10.0 + (0.5 - s).powi(2) + 1.25)).abs() < 1e-12);
        assert!((whole - 15.553848).abs() < 1e-6);
        assert!((split - 15.651923).abs() < 1e-6);
        assert!(whole < split);
    }

    #[test]
    fn extended_examples() {
        assert_eq!(psi_extended(&lv(&[3, -2]), &[0.0, 0.0], 1.0), 0.0);
        assert_eq!(psi_extended(&lv(&[1, 0]), &[2.0, 0.0], 1.0), 4.0);
        let v = psi_extended(&lv(&[1, 1]), &[0.5, 0.5], 1.0);
        assert!((v - 4.0 * 0.5f64.sqrt()).abs() < 1e-12);
        assert!((v - 2.828427).abs() < 1e-6);
    }

    /// The unreduced matrix form `μa0²/(4π(1−ν)) bᵀ M(α) b`.
    fn crystal_matrix_form(b: [f64; 2], alpha: f64, mu: f64, nu: f64, a0: f64) -> f64 {
        let (s, c) = alpha.sin_cos();
        let m = [
            [2.0 - 2.0 * nu * c * c, -2.0 * nu * s * c],
            [-2.0 * nu * s * c, 2.0 - 2.0 * nu * s * s],
        ];
        let quad = b[0] * (m[0][0] * b[0] + m[0][1] * b[1]) + b[1] * (m[1][0] * b[0] + m[1][1] * b[1]);
        mu * a0 * a0 / (4.0 * PI * (1.0 - nu)) * quad
    }

    #[test]
    fn crystal_matches_matrix_form() {
        for &nu in &[-1.0, -0.5, -0.2, 0.0, 0.2, 1.0 / 3.0, 0.5] {
            let params = IsotropicElasticParams::new(2.5, nu, 0.7).unwrap();
            for k in 0..12 {
                let alpha = 0.3 + k as f64 * 0.5;
                let t = [alpha.cos(), alpha.sin()];
                for b in [[1, 0], [0, 1], [1, 1], [2, -1], [-3, 2]] {
                    let got = psi_crystal(&LatticeVector::from(b), &t, &params).unwrap();
                    let want = crystal_matrix_form([b[0] as f64, b[1] as f64], alpha, 2.5, nu, 0.7);
                    assert!((got - want).abs() < 1e-12 * want.max(1.0), "nu={nu} b={b:?}");
                }
            }
        }
    }

    #[test]
    fn crystal_examples() {
        let base = 1.0 / (2.0 * PI);
        let p0 = IsotropicElasticParams::new(1.0, 0.0, 1.0).unwrap();
        for alpha in [0.0, 0.7, 2.0] {
            let t = [f64::cos(alpha), f64::sin(alpha)];
            let v = psi_crystal(&lv(&[2, 1]), &t, &p0).unwrap();
            assert!((v - 5.0 * base).abs() < 1e-14);
        }
        let p = IsotropicElasticParams::new(1.0, 1.0 / 3.0, 1.0).unwrap();
        let v = psi_crystal(&lv(&[1, 0]), &[1.0, 0.0], &p).unwrap();
        assert!((v - base).abs() < 1e-14);
        let pn = IsotropicElasticParams::new(1.0, -0.5, 1.0).unwrap();
        assert!((pn.reduced().0 - 1.0 / (3.0 * PI)).abs() < 1e-15);
        assert!((pn.reduced().1 - 0.5).abs() < 1e-15);
        assert!(IsotropicElasticParams::new(1.0, 0.7, 1.0).is_err());
        assert!(IsotropicElasticParams::new(1.0, -1.5, 1.0).is_err());
    }

    fn p(x: f64, y: f64) -> Point {
        Point::new(vec![x, y])
    }

    #[test]
    fn energy_examples() {
        let psi = CubicIntegrand::new(1.0).unwrap();
        let seg = PolyhedralCurrent::polyline(&[p(0.0, 0.0), p(1.0, 0.0)], &lv(&[1, 0])).unwrap();
        assert_eq!(energy(&seg, &psi, None).unwrap(), 2.0);
        let sq = PolyhedralCurrent::polygon(
            &[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)],
            &lv(&[1, 0]),
        )
        .unwrap();
        assert_eq!(energy(&sq, &psi, None).unwrap(), 6.0);
        assert_eq!(energy(&PolyhedralCurrent::new(2, 2), &psi, None).unwrap(), 0.0);
    }

    #[test]
    fn energy_in_region_uses_clipped_length() {
        let psi = CubicIntegrand::new(1.0).unwrap();
        let d = PolyhedralCurrent::polyline(&[p(-2.0, 0.0), p(2.0, 0.0)], &lv(&[1, 1])).unwrap();
        let ball = Region::ball(vec![0.0, 0.0], 0.5);
        // ψ((1,1), e1) = 2 + 1 = 3 over length 1
        assert!((energy(&d, &psi, Some(&ball)).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn growth_hypothesis() {
        let psi = CubicIntegrand::new(0.4).unwrap();
        for b in [[1, 0], [2, -1], [0, 0], [3, 3]] {
            let b = LatticeVector::from(b);
            let v = psi.evaluate(&b, &[0.6, 0.8]).unwrap();
            assert!(v >= psi.growth_constant() * b.norm());
        }
        assert!(CubicIntegrand::new(1.5).is_err());
        let _ = OrientedSegment::new(p(0.0, 0.0), p(1.0, 0.0)).unwrap();
    }
}
