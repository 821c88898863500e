//! Deterministic JSON and CSV emission.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Map, Value};
use std::io::{self, Write};

pub const SCHEMA_VERSION: &str = "1";

/// Compact JSON with every float in `{:.16e}` form (17 significant digits).
struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn c(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn cvec<'a>(zs: impl IntoIterator<Item = &'a Complex64>) -> Value {
    Value::Array(zs.into_iter().map(|&z| c(z)).collect())
}

pub fn cmat(m: &nalgebra::DMatrix<Complex64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| cvec(m.row(i).iter())).collect())
}

/// Non-finite values have no JSON representation and are emitted as `null`.
pub fn num(x: f64) -> Value {
    json!(x)
}

/// One emitted record.
pub struct Record {
    pub command: &'static str,
    pub parameters: Map<String, Value>,
    pub result: Value,
    pub warnings: Vec<String>,
    pub diagnostics: Map<String, Value>,
}

impl Record {
    pub fn new(command: &'static str) -> Self {
        Record {
            command,
            parameters: Map::new(),
            result: Value::Null,
            warnings: Vec::new(),
            diagnostics: Map::new(),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut diag = self.diagnostics.clone();
        diag.insert("warnings".into(), json!(self.warnings));
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "parameters": self.parameters,
            "result": self.result,
            "diagnostics": diag,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        to_writer(&mut out, &self.to_value())?;
        out.write_all(b"\n")
    }
}

pub fn to_writer<W: Write, T: Serialize>(out: W, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(out, SciFormatter);
    value.serialize(&mut ser).map_err(io::Error::from)
}

pub fn to_string(value: &Value) -> String {
    let mut buf = Vec::new();
    to_writer(&mut buf, value).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Sampled `(t, h(t))` pairs in t order.
pub type Rows = Vec<(f64, Vec<Complex64>)>;

/// `t, re(h_0), im(h_0), ...` rows.
pub fn write_csv<W: Write>(out: W, ell: usize, rows: &[(f64, Vec<Complex64>)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for i in 0..=ell {
        header.push(format!("re_h{i}"));
        header.push(format!("im_h{i}"));
    }
    w.write_record(&header)?;
    for (t, h) in rows {
        let mut rec = vec![format!("{t:.16e}")];
        for z in h {
            rec.push(format!("{:.16e}", z.re));
            rec.push(format!("{:.16e}", z.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
