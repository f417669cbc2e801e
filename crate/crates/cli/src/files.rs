//! JSON matrix, state and channel files.
//!
//! A matrix file is `{"dims": [rows, cols], "shape": [d1, ...], "data": [[re, im], ...]}`
//! with row-major data and an optional `shape`. A channel file is
//! `{"in_shape": [...], "out_shape": [...], "kraus": [matrix, ...]}`.
//! Canonical output fixes the key order and writes every number with 17
//! significant digits, so parsing it back is exact.

use std::fmt::Write as _;
use std::path::Path;

use qinfo::linalg::c;
use qinfo::{ComplexMatrix, DensityOperator, QinfoError, QuantumOperation, SystemShape};
use serde::Deserialize;

/// A validation failure with the path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for FileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

fn err(path: impl Into<String>, message: impl Into<String>) -> FileError {
    FileError { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dims: [usize; 2],
    #[serde(default)]
    pub shape: Option<Vec<usize>>,
    pub data: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub in_shape: Vec<usize>,
    pub out_shape: Vec<usize>,
    pub kraus: Vec<MatrixFile>,
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix, shape: Option<&SystemShape>) -> Self {
        let data = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |col| [m[(r, col)].re, m[(r, col)].im])).collect();
        Self { dims: [m.nrows(), m.ncols()], shape: shape.map(|s| s.dims().to_vec()), data }
    }

    pub fn matrix(&self, path: &str) -> Result<ComplexMatrix, FileError> {
        let [rows, cols] = self.dims;
        if rows == 0 || cols == 0 {
            return Err(err(format!("{path}dims"), "dimensions must be positive"));
        }
        if self.data.len() != rows * cols {
            return Err(err(
                format!("{path}data"),
                format!("{} entries for a {rows}x{cols} matrix", self.data.len()),
            ));
        }
        if let Some(i) = self.data.iter().position(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return Err(err(format!("{path}data[{i}]"), "entry is not finite"));
        }
        Ok(ComplexMatrix::from_fn(rows, cols, |r, col| {
            let z = self.data[r * cols + col];
            c(z[0], z[1])
        }))
    }

    /// Declared shape, or a single factor of the row dimension.
    pub fn system_shape(&self, path: &str) -> Result<SystemShape, FileError> {
        match &self.shape {
            None => Ok(SystemShape::single(self.dims[0])),
            Some(s) => {
                let shape = SystemShape::new(s.clone()).map_err(|e| err(format!("{path}shape"), e.to_string()))?;
                if shape.total() != self.dims[0] {
                    return Err(err(
                        format!("{path}shape"),
                        format!("product {} does not match {} rows", shape.total(), self.dims[0]),
                    ));
                }
                Ok(shape)
            }
        }
    }

    pub fn density(&self) -> Result<DensityOperator, FileError> {
        let m = self.matrix("")?;
        if !m.is_square() {
            return Err(err("dims", "a density operator must be square"));
        }
        let shape = self.system_shape("")?;
        DensityOperator::new(m, shape).map_err(|e| err(state_field(&e), e.to_string()))
    }
}

/// Name the field a state validation error refers to.
fn state_field(e: &QinfoError) -> &'static str {
    let text = e.to_string();
    if text.contains("trace") {
        "trace"
    } else if text.contains("hermitian") {
        "hermiticity"
    } else if text.contains("eigenvalue") || text.contains("positive") {
        "positivity"
    } else {
        "data"
    }
}

impl ChannelFile {
    pub fn from_operation(op: &QuantumOperation) -> Self {
        Self {
            in_shape: op.in_shape().dims().to_vec(),
            out_shape: op.out_shape().dims().to_vec(),
            kraus: op.kraus().iter().map(|k| MatrixFile::from_matrix(k, None)).collect(),
        }
    }

    pub fn operation(&self) -> Result<QuantumOperation, FileError> {
        let in_shape = SystemShape::new(self.in_shape.clone()).map_err(|e| err("in_shape", e.to_string()))?;
        let out_shape = SystemShape::new(self.out_shape.clone()).map_err(|e| err("out_shape", e.to_string()))?;
        if self.kraus.is_empty() {
            return Err(err("kraus", "at least one Kraus operator is required"));
        }
        let mut ks = vec![];
        for (i, k) in self.kraus.iter().enumerate() {
            let path = format!("kraus[{i}].");
            let m = k.matrix(&path)?;
            if m.nrows() != out_shape.total() || m.ncols() != in_shape.total() {
                return Err(err(
                    format!("{path}dims"),
                    format!("{}x{} operator for {} -> {} dimensions", m.nrows(), m.ncols(), in_shape.total(), out_shape.total()),
                ));
            }
            ks.push(m);
        }
        QuantumOperation::new(ks, in_shape, out_shape).map_err(|e| err("kraus", e.to_string()))
    }
}

/// 17 significant digits; always parses back to the same f64.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_matrix(out: &mut String, m: &MatrixFile, indent: &str) {
    let _ = write!(out, "{{\n{indent}  \"dims\": [{}, {}],\n", m.dims[0], m.dims[1]);
    if let Some(s) = &m.shape {
        let dims: Vec<String> = s.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "{indent}  \"shape\": [{}],", dims.join(", "));
    }
    let _ = writeln!(out, "{indent}  \"data\": [");
    for (i, z) in m.data.iter().enumerate() {
        let sep = if i + 1 == m.data.len() { "" } else { "," };
        let _ = writeln!(out, "{indent}    [{}, {}]{sep}", number(z[0]), number(z[1]));
    }
    let _ = write!(out, "{indent}  ]\n{indent}}}");
}

/// Canonical text of a matrix file.
pub fn serialize_matrix(m: &MatrixFile) -> String {
    let mut out = String::new();
    write_matrix(&mut out, m, "");
    out.push('\n');
    out
}

/// Canonical text of a channel file.
pub fn serialize_channel(ch: &ChannelFile) -> String {
    let dims = |v: &[usize]| v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ");
    let mut out = format!(
        "{{\n  \"in_shape\": [{}],\n  \"out_shape\": [{}],\n  \"kraus\": [\n",
        dims(&ch.in_shape),
        dims(&ch.out_shape)
    );
    for (i, k) in ch.kraus.iter().enumerate() {
        out.push_str("    ");
        write_matrix(&mut out, k, "    ");
        out.push_str(if i + 1 == ch.kraus.len() { "\n" } else { ",\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn parse_matrix(text: &str) -> Result<MatrixFile, FileError> {
    serde_json::from_str(text).map_err(|e| err("", format!("malformed matrix file: {e}")))
}

pub fn parse_channel(text: &str) -> Result<ChannelFile, FileError> {
    serde_json::from_str(text).map_err(|e| err("", format!("malformed channel file: {e}")))
}

fn read(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|e| err("", format!("{}: {e}", path.display())))
}

pub fn read_density(path: &Path) -> Result<DensityOperator, FileError> {
    parse_matrix(&read(path)?)?.density()
}

/// A channel from a file path, or from a spec such as `erasure:0.25`.
pub fn read_channel(spec: &str) -> Result<QuantumOperation, FileError> {
    let path = Path::new(spec);
    if path.is_file() {
        parse_channel(&read(path)?)?.operation()
    } else {
        qinfo::ops::channels::parse_channel_spec(spec).map_err(|e| err("channel", e.to_string()))
    }
}
