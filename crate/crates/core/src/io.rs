//! Input parsing for states and decodings, and report output.
//!
//! A state is JSON in one of these forms:
//!
//! ```json
//! [0.5, 0.5, 0.0]
//! {"bell_diagonal": [0.5, 0.5, 0.0]}
//! {"bloch": {"m": [0, 0, 0], "n": [0, 0, 0], "t": [[1, 0, 0], [0, -1, 0], [0, 0, 1]]}}
//! {"density": [[[0.5, 0], [0, 0], [0, 0], [0.5, 0]], ...]}
//! ```
//!
//! The density form lists four rows of four `[re, im]` entries.

use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli_bloch::{bloch_from_density, BellDiagonal, DensityMatrix4, TwoQubitBloch, UnitVector3};

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TaggedState {
    BellDiagonal([f64; 3]),
    Bloch { m: [f64; 3], n: [f64; 3], t: [[f64; 3]; 3] },
    Density(Vec<Vec<[f64; 2]>>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateSpec {
    Shorthand([f64; 3]),
    Tagged(TaggedState),
}

/// Parses and validates a state given as JSON text.
pub fn parse_state(text: &str) -> Result<TwoQubitBloch> {
    let spec: StateSpec = serde_json::from_str(text).map_err(|e| Error::Parse(format!("state: {e}")))?;
    let state = match spec {
        StateSpec::Shorthand(t) | StateSpec::Tagged(TaggedState::BellDiagonal(t)) => {
            BellDiagonal::new(t[0], t[1], t[2])?.to_bloch()
        }
        StateSpec::Tagged(TaggedState::Bloch { m, n, t }) => {
            let t = Matrix3::from_fn(|r, c| t[r][c]);
            TwoQubitBloch::new(Vector3::from(m), Vector3::from(n), t)
        }
        StateSpec::Tagged(TaggedState::Density(rows)) => bloch_from_density(&DensityMatrix4::from_rows(&rows)?),
    };
    state.validate()?;
    Ok(state)
}

fn is_inline(arg: &str) -> bool {
    matches!(arg.trim_start().chars().next(), Some('{') | Some('['))
}

fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))
}

/// Inline JSON when `arg` starts with `{` or `[`, otherwise a file path.
pub fn load_state(arg: &str) -> Result<TwoQubitBloch> {
    if is_inline(arg) {
        parse_state(arg)
    } else {
        parse_state(&read_file(arg)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DecodingSpec {
    /// The principal axes of the state carrying the largest correlations.
    OrthogonalAxes,
    /// Directions in the input frame.
    Explicit(Vec<UnitVector3>),
}

fn axis(token: &str) -> Result<UnitVector3> {
    let (sign, name) = match token.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, token.strip_prefix('+').unwrap_or(token)),
    };
    let v = match name {
        "x" => [1.0, 0.0, 0.0],
        "y" => [0.0, 1.0, 0.0],
        "z" => [0.0, 0.0, 1.0],
        _ => return Err(Error::Parse(format!("unknown axis {token:?}; use x, y, z or -x, -y, -z"))),
    };
    UnitVector3::from_array(v.map(|c| c * sign))
}

/// `orthogonal-axes`, a comma-separated axis list such as `x,y,z`, or a
/// JSON list of 3-vectors (normalized here).
pub fn parse_decodings(arg: &str) -> Result<DecodingSpec> {
    let arg = arg.trim();
    if arg == "orthogonal-axes" {
        return Ok(DecodingSpec::OrthogonalAxes);
    }
    if is_inline(arg) {
        let raw: Vec<[f64; 3]> =
            serde_json::from_str(arg).map_err(|e| Error::Parse(format!("decodings: {e}")))?;
        return raw
            .into_iter()
            .map(UnitVector3::from_array)
            .collect::<Result<_>>()
            .map(DecodingSpec::Explicit);
    }
    arg.split(',')
        .map(|t| axis(t.trim()))
        .collect::<Result<_>>()
        .map(DecodingSpec::Explicit)
}

pub fn parse_encodings(arg: &str) -> Result<Vec<UnitVector3>> {
    let text = if is_inline(arg) { arg.to_string() } else { read_file(arg)? };
    let raw: Vec<[f64; 3]> = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("encodings: {e}")))?;
    raw.into_iter().map(UnitVector3::from_array).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(out).map_err(|e| Error::Parse(e.to_string()))
}

/// CSV with a header row taken from the serialized field names.
pub fn write_csv_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Writes to `path`, or standard output when absent.
pub fn with_output<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| Error::Parse(format!("cannot write {}: {e}", p.display())))?;
            let mut buf = std::io::BufWriter::new(file);
            f(&mut buf)?;
            buf.flush().map_err(|e| Error::Parse(e.to_string()))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush().map_err(|e| Error::Parse(e.to_string()))
        }
    }
}
