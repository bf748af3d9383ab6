//! Sweep tables and their CSV/JSON forms.
//!
//! Values are rounded to [`SIG_DIGITS`] significant digits when the table is
//! built, so writing and re-reading a table reproduces it exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use superres_core::crlb::{PrecisionTriple, SweepRow};
use superres_core::round_sig;

use crate::error::CliError;
use crate::io::fmt_num;

pub const SIG_DIGITS: i32 = 12;

pub fn round(x: f64) -> f64 {
    round_sig(x, SIG_DIGITS)
}

/// Rounds every number inside a JSON value.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n.as_f64().map(round).and_then(serde_json::Number::from_f64) {
                    *n = r;
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn push_triple(row: &mut Vec<f64>, h: &PrecisionTriple) {
    row.extend(h.h.iter().map(|&x| round(x)));
}

impl SweepTable {
    pub fn header(names: &[String]) -> Vec<String> {
        let mut cols: Vec<String> = ["s", "q", "s0", "Hs0_opt", "Hs_opt", "Hq_opt"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for n in names {
            cols.extend(["Hs0", "Hs", "Hq"].iter().map(|h| format!("{h}_{n}")));
        }
        cols
    }

    pub fn from_rows(rows: &[SweepRow], names: &[String]) -> Self {
        let rows = rows
            .iter()
            .map(|r| {
                let mut v = vec![round(r.s), round(r.q), round(r.s0)];
                push_triple(&mut v, &r.quantum);
                for c in &r.classical {
                    push_triple(&mut v, c);
                }
                v
            })
            .collect();
        Self {
            columns: Self::header(names),
            rows,
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for r in &self.rows {
            out.write_record(r.iter().map(|&x| fmt_num(x)))?;
        }
        out.flush().map_err(|e| CliError::io("<output>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, CliError> {
        let mut rd = csv::Reader::from_reader(r);
        let columns: Vec<String> = rd.headers()?.iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| CliError::Parse {
                        path: "<csv>".into(),
                        line: i + 2,
                        msg: format!("not a number: {f:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let h = SweepTable::header(&["direct".into()]);
        assert_eq!(
            h.join(","),
            "s,q,s0,Hs0_opt,Hs_opt,Hq_opt,Hs0_direct,Hs_direct,Hq_direct"
        );
    }

    #[test]
    fn json_rounding() {
        let mut v = serde_json::json!({"a": [0.1234567890123456, 3], "b": {"c": 2.0 / 3.0}});
        round_json(&mut v);
        assert_eq!(v["a"][0].as_f64().unwrap(), 0.123456789012);
        assert_eq!(v["b"]["c"].as_f64().unwrap(), 0.666666666667);
        assert_eq!(v["a"][1].as_u64(), Some(3));
    }
}
