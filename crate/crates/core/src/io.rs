//! JSON file format for currents and loop decompositions.
//!
//! ```json
//! {
//!   "ambient_dim": 2,
//!   "lattice_dim": 2,
//!   "pieces": [
//!     { "start": [0, 0], "end": [1, 0], "theta": [1, 0] }
//!   ]
//! }
//! ```
//!
//! Coordinates are snapped to the vertex grid on read, so vertices written
//! with slightly different decimal expansions still coincide.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::currents::{snap, CurrentError, LatticeVector, Loop, OrientedSegment, Point, PolyhedralCurrent};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
}

impl FormatError {
    fn schema(field: impl Into<String>, message: impl ToString) -> Self {
        Self::Schema {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends its own " at line L column C"
        let message = match message.rfind(" at line ") {
            Some(k) => message[..k].to_string(),
            None => message,
        };
        Self::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurrentFile {
    ambient_dim: usize,
    lattice_dim: usize,
    pieces: Vec<PieceRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceRecord {
    start: Vec<f64>,
    end: Vec<f64>,
    theta: Vec<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopFile {
    ambient_dim: usize,
    lattice_dim: usize,
    loops: Vec<LoopRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopRecord {
    vertices: Vec<Vec<f64>>,
    multiplicity: Vec<i64>,
}

/// Parses a current from its JSON text. Pieces are kept as written (not
/// normalized).
pub fn parse_current(text: &str) -> Result<PolyhedralCurrent, FormatError> {
    let file: CurrentFile = serde_json::from_str(text)?;
    if file.ambient_dim == 0 {
        return Err(FormatError::schema("ambient_dim", "must be positive"));
    }
    if file.lattice_dim == 0 {
        return Err(FormatError::schema("lattice_dim", "must be positive"));
    }
    let mut current = PolyhedralCurrent::new(file.ambient_dim, file.lattice_dim);
    for (k, piece) in file.pieces.into_iter().enumerate() {
        let field = |name: &str| format!("pieces[{k}].{name}");
        let point = |name: &str, coords: Vec<f64>| {
            if coords.len() != file.ambient_dim {
                return Err(FormatError::schema(
                    field(name),
                    format!("expected {} coordinates, found {}", file.ambient_dim, coords.len()),
                ));
            }
            Ok(Point::new(snap(&coords)))
        };
        let start = point("start", piece.start)?;
        let end = point("end", piece.end)?;
        if piece.theta.len() != file.lattice_dim {
            return Err(FormatError::schema(
                field("theta"),
                format!("expected {} entries, found {}", file.lattice_dim, piece.theta.len()),
            ));
        }
        let segment = OrientedSegment::new(start, end).map_err(|e| match e {
            CurrentError::DegenerateSegment(p) => {
                FormatError::schema(format!("pieces[{k}]"), format!("degenerate segment at {p}"))
            }
            other => FormatError::schema(format!("pieces[{k}]"), other),
        })?;
        current
            .push(segment, LatticeVector::new(piece.theta))
            .map_err(|e| FormatError::schema(format!("pieces[{k}]"), e))?;
    }
    Ok(current)
}

pub fn read_current(path: &Path) -> Result<PolyhedralCurrent, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_current(&text)
}

pub fn current_to_json(current: &PolyhedralCurrent) -> String {
    let file = CurrentFile {
        ambient_dim: current.ambient_dim(),
        lattice_dim: current.lattice_dim(),
        pieces: current
            .pieces()
            .iter()
            .map(|p| PieceRecord {
                start: p.segment.start().coords().to_vec(),
                end: p.segment.end().coords().to_vec(),
                theta: p.theta.entries().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

pub fn loops_to_json(ambient_dim: usize, lattice_dim: usize, loops: &[Loop]) -> String {
    let file = LoopFile {
        ambient_dim,
        lattice_dim,
        loops: loops
            .iter()
            .map(|l| LoopRecord {
                vertices: l.vertices.iter().map(|v| v.coords().to_vec()).collect(),
                multiplicity: l.multiplicity.entries().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

/// Inverse of [`loops_to_json`].
pub fn parse_loops(text: &str) -> Result<(usize, usize, Vec<Loop>), FormatError> {
    let file: LoopFile = serde_json::from_str(text)?;
    let mut loops = Vec::with_capacity(file.loops.len());
    for (k, record) in file.loops.into_iter().enumerate() {
        if record.multiplicity.len() != file.lattice_dim {
            return Err(FormatError::schema(
                format!("loops[{k}].multiplicity"),
                format!("expected {} entries", file.lattice_dim),
            ));
        }
        let mut vertices = Vec::with_capacity(record.vertices.len());
        for (v, coords) in record.vertices.into_iter().enumerate() {
            if coords.len() != file.ambient_dim {
                return Err(FormatError::schema(
                    format!("loops[{k}].vertices[{v}]"),
                    format!("expected {} coordinates", file.ambient_dim),
                ));
            }
            vertices.push(Point::new(snap(&coords)));
        }
        loops.push(Loop {
            vertices,
            multiplicity: LatticeVector::new(record.multiplicity),
        });
    }
    Ok((file.ambient_dim, file.lattice_dim, loops))
}
