//! Sweeps of the planar envelope quantities over `t = (cos α, sin α)`.
//!
//! Each row holds, at one angle `α` (in degrees):
//!
//! | column | value |
//! |---|---|
//! | `psi` | `ψ(b, t)` |
//! | `psi_star` | `ψ*(b, t)` |
//! | `barpsi_pair` | the envelope from its closed form or pair formula (`ψ*` outside those families) |
//! | `lower_bound` | the decomposition-program lower bound |
//! | `upper_construction` | energy of the best explicit competitor |
//! | `gap` | `psi_star − lower_bound` |

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::currents::LatticeVector;
use crate::energy::psi_cubic;
use crate::envelope::{
    barpsi_pair, barpsi_single, lower_bound_alpha, psi_star_construction, AlphaSet, EnvelopeError,
    PlanarGenerators,
};
use crate::optim::SolverOptions;

pub const CSV_HEADER: &str = "angle_deg,psi,psi_star,barpsi_pair,lower_bound,upper_construction,gap";

/// An angle is flagged when the lower bound undercuts `ψ*` by more than this.
pub const GAP_THRESHOLD: f64 = 1e-4;
/// Slack for `lower_bound ≤ barpsi_pair`.
pub const LOWER_SLACK: f64 = 1e-5;
/// Slack for `barpsi_pair ≤ psi`.
pub const UPPER_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid angle grid: {0}")]
    Grid(String),
    #[error(
        "b = {0} has no closed form; supported families are β·e1, β·e2, β·(e1+e2) and β·(e1−e2)"
    )]
    UnsupportedFamily(LatticeVector),
    #[error("at {angle_deg}°: {source}")]
    Envelope { angle_deg: f64, source: EnvelopeError },
    #[error("at {angle_deg}°: {message}")]
    Invariant { angle_deg: f64, message: String },
}

/// `start:stop:step` in degrees, both ends included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AngleGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, SweepError> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || step.is_infinite() {
            return Err(SweepError::Grid(format!("step must be positive and finite, got {step}")));
        }
        if stop < start {
            return Err(SweepError::Grid(format!("stop {stop} precedes start {start}")));
        }
        Ok(Self { start, stop, step })
    }

    pub fn degrees(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl std::str::FromStr for AngleGrid {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(SweepError::Grid(format!("expected start:stop:step, got {s:?}")));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| SweepError::Grid(format!("not a number: {x:?}")))
        };
        Self::new(num(a)?, num(b)?, num(c)?)
    }
}

/// Which closed form applies to a planar Burgers vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `β e_axis`.
    Single { beta: i64, axis: usize },
    /// `β (e1 + sign e2)`.
    Pair { beta: i64, sign: i64 },
    Other,
}

impl Family {
    pub fn of(b: [i64; 2]) -> Self {
        match b {
            [0, beta] => Self::Single { beta, axis: 1 },
            [beta, 0] => Self::Single { beta, axis: 0 },
            [x, y] if x == y => Self::Pair { beta: x, sign: 1 },
            [x, y] if x == -y => Self::Pair { beta: x, sign: -1 },
            _ => Self::Other,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub b: [i64; 2],
    pub eta: f64,
    pub angles: AngleGrid,
    pub solver: SolverOptions,
    /// Refuse Burgers vectors outside the closed-form families instead of
    /// reporting `ψ*` in the `barpsi_pair` column.
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub angle_deg: f64,
    pub psi: f64,
    pub psi_star: f64,
    pub barpsi_pair: f64,
    pub lower_bound: f64,
    pub upper_construction: f64,
    pub gap: f64,
}

impl SweepRow {
    pub fn values(&self) -> [f64; 7] {
        [
            self.angle_deg,
            self.psi,
            self.psi_star,
            self.barpsi_pair,
            self.lower_bound,
            self.upper_construction,
            self.gap,
        ]
    }

    pub fn from_values(v: [f64; 7]) -> Self {
        Self {
            angle_deg: v[0],
            psi: v[1],
            psi_star: v[2],
            barpsi_pair: v[3],
            lower_bound: v[4],
            upper_construction: v[5],
            gap: v[6],
        }
    }

    pub fn flagged(&self) -> bool {
        self.lower_bound < self.psi_star - GAP_THRESHOLD
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Angles whose lower bound undercuts `ψ*` by more than [`GAP_THRESHOLD`].
    pub flagged: Vec<f64>,
    /// Angles at which some solver stopped before meeting its tolerance.
    pub unconverged: Vec<f64>,
}

/// One row of the sweep, plus whether every solver converged.
pub fn sweep_row(b: [i64; 2], eta: f64, angle_deg: f64, opts: &SolverOptions) -> Result<(SweepRow, bool), SweepError> {
    let at = |source| SweepError::Envelope { angle_deg, source };
    let a = angle_deg.to_radians();
    let t = [a.cos(), a.sin()];
    let lattice = LatticeVector::from(b);

    let psi = psi_cubic(&lattice, &t, eta).map_err(|e| at(e.into()))?;
    let generators = PlanarGenerators::compute(&t, eta, opts).map_err(at)?;
    let psi_star = generators.psi_star(b);
    let mut converged = generators.converged();

    let barpsi = match Family::of(b) {
        Family::Single { beta, axis } => barpsi_single(beta, axis, &t, eta).map_err(at)?,
        Family::Pair { beta, sign } => {
            let r = barpsi_pair(beta, 0, 1, sign, &t, eta, opts).map_err(at)?;
            converged &= r.converged();
            r.value_upper
        }
        Family::Other => psi_star,
    };

    let lower = lower_bound_alpha(&lattice, &t, eta, &AlphaSet::small(2).map_err(at)?, opts).map_err(at)?;
    converged &= lower.converged();

    let (_, built) = psi_star_construction(
        b,
        &t,
        eta,
        generators.diagonal_minimizer(true),
        generators.diagonal_minimizer(false),
    )
    .map_err(at)?;

    let row = SweepRow {
        angle_deg,
        psi,
        psi_star,
        barpsi_pair: barpsi,
        lower_bound: lower.value_lower,
        upper_construction: built.min(psi),
        gap: psi_star - lower.value_lower,
    };
    if row.lower_bound > row.barpsi_pair + LOWER_SLACK {
        return Err(SweepError::Invariant {
            angle_deg,
            message: format!("lower bound {} exceeds envelope value {}", row.lower_bound, row.barpsi_pair),
        });
    }
    if row.barpsi_pair > row.psi + UPPER_SLACK {
        return Err(SweepError::Invariant {
            angle_deg,
            message: format!("envelope value {} exceeds psi {}", row.barpsi_pair, row.psi),
        });
    }
    Ok((row, converged))
}

/// Runs the sweep in parallel; rows come back in angle order.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome, SweepError> {
    if config.strict && Family::of(config.b) == Family::Other {
        return Err(SweepError::UnsupportedFamily(LatticeVector::from(config.b)));
    }
    let results: Vec<(SweepRow, bool)> = config
        .angles
        .degrees()
        .into_par_iter()
        .map(|deg| sweep_row(config.b, config.eta, deg, &config.solver))
        .collect::<Result<_, _>>()?;
    let flagged = results.iter().filter(|(r, _)| r.flagged()).map(|(r, _)| r.angle_deg).collect();
    let unconverged = results.iter().filter(|(_, c)| !c).map(|(r, _)| r.angle_deg).collect();
    Ok(SweepOutcome {
        rows: results.into_iter().map(|(r, _)| r).collect(),
        flagged,
        unconverged,
    })
}

/// Fixed-point decimal with 9 significant digits.
pub fn format_value(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0.00000000".into() } else { x.to_string() };
    }
    // the exponent after rounding to 9 digits decides the number of decimals
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn format_row(row: &SweepRow) -> String {
    row.values().iter().map(|&v| format_value(v)).collect::<Vec<_>>().join(",")
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format_row(row));
        out.push('\n');
    }
    out
}

/// Inverse of [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, line)| {
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("row {}: {e}", k + 1))?;
            let values: [f64; 7] = fields
                .try_into()
                .map_err(|f: Vec<f64>| format!("row {}: expected 7 fields, found {}", k + 1, f.len()))?;
            Ok(SweepRow::from_values(values))
        })
        .collect()
}

/// A gnuplot script plotting every column of `csv_file` against the angle.
pub fn plot_script(csv_file: &str, b: [i64; 2], eta: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot -p <this file>");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set title 'b = ({},{}), eta = {eta}'", b[0], b[1]);
    let _ = writeln!(s, "set xlabel 'angle (degrees)'");
    let _ = writeln!(s, "set xrange [*:*]");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(
        s,
        "plot '{csv_file}' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines, \
         '' using 1:5 with lines dashtype 2, '' using 1:6 with lines dashtype 3"
    );
    s
}
