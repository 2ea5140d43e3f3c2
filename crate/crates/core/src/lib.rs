//! Lattice-valued polyhedral 1-currents and the relaxation of dislocation
//! line energies.
//!
//! A dislocation configuration is modelled as a finite sum of oriented
//! segments, each carrying an integer Burgers vector. The crate provides
//!
//! * [`currents`]: exact boundary, mass, restriction, push-forward and loop
//!   decomposition of such currents;
//! * [`energy`]: line-tension integrands, most importantly the cubic family
//!   `ψ(b,t) = |b|² + η (b·t)²`, and the energy functional they induce;
//! * [`envelope`]: lower bounds, closed forms and explicit constructions for
//!   the H¹-elliptic envelope `ψ̄` of that family;
//! * [`optim`]: the derivative-free machinery behind the envelope solvers;
//! * [`sweep`]: angle sweeps over `t = (cos α, sin α)` and their CSV form;
//! * [`io`]: the JSON file format for currents.

pub mod currents;
pub mod energy;
pub mod envelope;
pub mod io;
pub mod optim;
pub mod sweep;

pub use currents::{
    BoundaryChain, CurrentError, LatticeVector, Loop, OrientedSegment, Piece, Point,
    PolyhedralCurrent, Region,
};
pub use energy::{psi_cubic, psi_extended, CubicIntegrand, EnergyError, Integrand};
pub use envelope::{AlphaSet, EnvelopeError, EnvelopeResult};
pub use optim::{SolveReport, SolverOptions};
