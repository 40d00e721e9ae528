//! CSV and JSON emitters. JSON is an array of objects with the CSV columns
//! as keys.

use std::fs::File;
use std::io::{self, Write};

use clap::ValueEnum;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A value that is a float, or an exact rational rendered as `p/q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Number {
    Float(f64),
    Exact(String),
}

pub fn render<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>, CliError> {
    let io = |e: &dyn std::fmt::Display| CliError::Io(e.to_string());
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row).map_err(|e| io(&e))?;
            }
            w.into_inner().map_err(|e| io(&e))
        }
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(rows).map_err(|e| io(&e))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit(bytes: &[u8], out: Option<&str>) -> Result<(), CliError> {
    let result = match out {
        Some(path) => File::create(path).and_then(|mut f| f.write_all(bytes)),
        None => io::stdout().lock().write_all(bytes),
    };
    result.map_err(|e| CliError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        set: String,
        fp: Number,
    }

    #[test]
    fn csv_and_json_carry_the_same_fields() {
        let rows = vec![
            Row {
                a: 0.5,
                set: "{1,2}".into(),
                fp: Number::Exact("6/31".into()),
            },
            Row {
                a: 1.0,
                set: "{0}".into(),
                fp: Number::Float(0.25),
            },
        ];
        let csv = String::from_utf8(render(&rows, Format::Csv).unwrap()).unwrap();
        assert_eq!(csv, "a,set,fp\n0.5,\"{1,2}\",6/31\n1.0,{0},0.25\n");
        let json: serde_json::Value = serde_json::from_slice(&render(&rows, Format::Json).unwrap()).unwrap();
        assert_eq!(json[0]["fp"], "6/31");
        assert_eq!(json[1]["fp"], 0.25);
        assert_eq!(json[0]["set"], "{1,2}");
    }
}
