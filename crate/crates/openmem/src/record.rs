//! Result records (JSON) and flat tabular exports (CSV).

use std::collections::BTreeMap;
use std::io::Write;

use openmem_core::{CMatrix, CompositeModel, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::matrix_to_repr;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelInfo {
    pub name: String,
    pub d_sys: usize,
    pub d_env: usize,
    /// SHA-256 over every matrix defining the model and its initial state.
    pub fingerprint: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Diagnostics {
    pub residuals: BTreeMap<String, Value>,
    pub conditions: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    pub status: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResultRecord {
    pub command: String,
    pub version: String,
    pub model: ModelInfo,
    pub parameters: Value,
    pub payload: Value,
    pub diagnostics: Diagnostics,
}

impl ResultRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Io(format!("record parse: {e}")))
    }
}

/// JSON number, or `"inf"`, `"-inf"`, `"nan"` for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

pub fn complex(z: C64) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

pub fn matrix(m: &CMatrix) -> Value {
    serde_json::to_value(matrix_to_repr(m)).expect("matrix serializes")
}

/// Inverse of [`matrix`]; `None` if the value is not a square `[re, im]` array.
pub fn matrix_from_value(v: &Value) -> Option<CMatrix> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_value(v.clone()).ok()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return None;
    }
    Some(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

fn feed(h: &mut Sha256, tag: &str, m: &CMatrix) {
    h.update(tag.as_bytes());
    h.update((m.nrows() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            h.update(m[(i, j)].re.to_le_bytes());
            h.update(m[(i, j)].im.to_le_bytes());
        }
    }
}

pub fn fingerprint(model: &CompositeModel) -> String {
    let mut h = Sha256::new();
    h.update(model.name().as_bytes());
    h.update((model.d_sys() as u64).to_le_bytes());
    h.update((model.d_env() as u64).to_le_bytes());
    feed(&mut h, "h_sys", model.h_sys().matrix());
    feed(&mut h, "h_env", model.h_env().matrix());
    for c in model.couplings() {
        feed(&mut h, "s", c.sys.matrix());
        feed(&mut h, "e", c.env.matrix());
    }
    feed(&mut h, "rho_env", model.rho_env().operator().matrix());
    if let Ok(r) = model.build_initial_total() {
        feed(&mut h, "rho_tot0", r.operator().matrix());
    }
    if let Some(p) = model.conserved_projector() {
        feed(&mut h, "conserved", p.matrix());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn model_info(model: &CompositeModel) -> ModelInfo {
    ModelInfo {
        name: model.name().to_string(),
        d_sys: model.d_sys(),
        d_env: model.d_env(),
        fingerprint: fingerprint(model),
    }
}

/// One row per time/frequency/mode point; complex cells become `.re`/`.im` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn column(&mut self, name: &str) {
        self.header.push(name.to_string());
    }

    pub fn complex_column(&mut self, name: &str) {
        self.header.push(format!("{name}.re"));
        self.header.push(format!("{name}.im"));
    }

    /// `name_ij` complex columns for a `d x d` matrix.
    pub fn matrix_columns(&mut self, name: &str, d: usize) {
        for i in 0..d {
            for j in 0..d {
                self.complex_column(&format!("{name}_{i}{j}"));
            }
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

#[derive(Default)]
pub struct Row(Vec<String>);

impl Row {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn text(mut self, s: &str) -> Self {
        self.0.push(s.to_string());
        self
    }
    pub fn real(mut self, x: f64) -> Self {
        self.0.push(format!("{x:?}"));
        self
    }
    pub fn complex(self, z: C64) -> Self {
        self.real(z.re).real(z.im)
    }
    pub fn matrix(mut self, m: &CMatrix) -> Self {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self = self.complex(m[(i, j)]);
            }
        }
        self
    }
    pub fn finish(self) -> Vec<String> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use openmem_core::model::catalog_model;

    #[test]
    fn matrix_payload_round_trips_bit_exactly() {
        let m = CMatrix::from_fn(3, 3, |i, j| {
            C64::new(0.1 * i as f64 - 1.0 / (j as f64 + 3.0), -1e-300 * (i + j) as f64 + 1.0 / 7.0)
        });
        let text = serde_json::to_string(&matrix(&m)).unwrap();
        let back = matrix_from_value(&serde_json::from_str(&text).unwrap()).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn non_finite_numbers_are_tagged() {
        assert_eq!(num(f64::INFINITY), Value::from("inf"));
        assert_eq!(num(f64::NAN), Value::from("nan"));
        assert_eq!(num(1.5), Value::from(1.5));
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = catalog_model("QB3", 0).unwrap();
        let b = a.with_coupling_scaled(1.0 + 1e-15).unwrap();
        assert_eq!(fingerprint(&a), fingerprint(&catalog_model("QB3", 5).unwrap()));
        assert_ne!(fingerprint(&a), fingerprint(&b));
        assert_eq!(fingerprint(&a).len(), 64);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new();
        t.column("t");
        t.complex_column("rho_00");
        t.rows.push(Row::new().real(0.5).complex(C64::new(1.0, -2.0)).finish());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,rho_00.re,rho_00.im\n0.5,1.0,-2.0\n");
    }
}
