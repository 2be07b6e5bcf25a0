//! CSV sequence files.
//!
//! Layout: optional `#` comment lines, then a header `k,u1,..,u<n_u>,y1,..,y<n_y>[,seq_id]`,
//! then one row per sample. Rows sharing a `seq_id` form one sequence (in order
//! of first appearance); without the column the file is a single sequence.
//! Values are written with 17 significant digits so a save/load round trip is exact.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;

use super::{Provenance, Sequence, SequenceDataset};
use crate::error::{Error, Result};

/// Column selection for [`load_csv_sequences`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvSchema {
    /// Input column names; `None` picks every `u<digits>` column in header order.
    pub inputs: Option<Vec<String>>,
    /// Output column names; `None` picks every `y<digits>` column in header order.
    pub outputs: Option<Vec<String>>,
    /// Sequence-id column; `None` uses `seq_id` when present.
    pub seq_id: Option<String>,
}

impl CsvSchema {
    pub fn named(inputs: &[&str], outputs: &[&str]) -> Self {
        Self {
            inputs: Some(inputs.iter().map(|s| s.to_string()).collect()),
            outputs: Some(outputs.iter().map(|s| s.to_string()).collect()),
            seq_id: None,
        }
    }
}

fn numbered(header: &[String], prefix: char) -> Vec<String> {
    header
        .iter()
        .filter(|h| {
            let mut c = h.chars();
            c.next() == Some(prefix) && !h[1..].is_empty() && h[1..].chars().all(|d| d.is_ascii_digit())
        })
        .cloned()
        .collect()
}

fn resolve(header: &[String], names: &[String], what: &str) -> Result<Vec<usize>> {
    if names.is_empty() {
        return Err(Error::Schema(format!("no {what} columns found in header")));
    }
    names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::Schema(format!("missing {what} column '{n}'")))
        })
        .collect()
}

/// Writes sequences to `path`; `comments` become leading `# ` lines.
pub fn write_csv_sequences(path: impl AsRef<Path>, seqs: &[Sequence], comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let n_u = seqs.first().map_or(0, Sequence::n_u);
    let n_y = seqs.first().map_or(0, Sequence::n_y);
    let mut out = Vec::new();
    for c in comments {
        writeln!(out, "# {c}").map_err(io)?;
    }
    let mut header = vec!["k".to_string()];
    header.extend((1..=n_u).map(|i| format!("u{i}")));
    header.extend((1..=n_y).map(|i| format!("y{i}")));
    header.push("seq_id".into());
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for (id, s) in seqs.iter().enumerate() {
        if s.n_u() != n_u || s.n_y() != n_y {
            return Err(Error::shape(format!("sequence {id} widths"), format!("{n_u}/{n_y}"), format!("{}/{}", s.n_u(), s.n_y())));
        }
        for k in 0..s.len() {
            let mut row = vec![k.to_string()];
            row.extend(s.u[k].iter().chain(s.y[k].iter()).map(|x| format!("{x:.16e}")));
            row.push(id.to_string());
            writeln!(out, "{}", row.join(",")).map_err(io)?;
        }
    }
    std::fs::write(path, out).map_err(io)
}

/// Parses a CSV sequence file.
pub fn load_csv_sequences(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<SequenceDataset> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse {
                path: shown.clone(),
                row: 0,
                message: format!("{other:?}"),
            },
        })?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            path: shown.clone(),
            row: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let u_names = schema.inputs.clone().unwrap_or_else(|| numbered(&header, 'u'));
    let y_names = schema.outputs.clone().unwrap_or_else(|| {
        let y = numbered(&header, 'y');
        if y.is_empty() {
            vec!["y1".into()]
        } else {
            y
        }
    });
    let u_idx = resolve(&header, &u_names, "input")?;
    let y_idx = resolve(&header, &y_names, "output")?;
    let id_idx = match &schema.seq_id {
        Some(n) => Some(resolve(&header, std::slice::from_ref(n), "sequence-id")?[0]),
        None => header.iter().position(|h| h == "seq_id"),
    };

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Sequence> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: shown.clone(),
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::Parse {
                path: shown.clone(),
                row,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let cell = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| Error::Parse {
                path: shown.clone(),
                row,
                message: format!("column '{}': '{}' is not a number", header[i], &rec[i]),
            })
        };
        let u = u_idx.iter().map(|&i| cell(i)).collect::<Result<Vec<_>>>()?;
        let y = y_idx.iter().map(|&i| cell(i)).collect::<Result<Vec<_>>>()?;
        let id = id_idx.map_or_else(String::new, |i| rec[i].to_string());
        let seq = groups.entry(id.clone()).or_insert_with(|| {
            order.push(id);
            Sequence::new(Vec::new(), Vec::new())
        });
        seq.u.push(DVector::from_vec(u));
        seq.y.push(DVector::from_vec(y));
    }
    let sequences = order.iter().map(|id| groups.remove(id).expect("grouped")).collect();
    Ok(SequenceDataset::new(
        sequences,
        0,
        Provenance {
            source: "csv".into(),
            file: Some(shown),
            ..Provenance::default()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let a = Sequence::new(
            vec![DVector::from_vec(vec![0.1 + 0.2, -1e-17]); 3],
            vec![DVector::from_element(1, std::f64::consts::PI); 3],
        );
        let b = Sequence::new(vec![DVector::from_vec(vec![5.0, 6.0]); 2], vec![DVector::from_element(1, 1.0 / 3.0); 2]);
        write_csv_sequences(&p, &[a.clone(), b.clone()], &["generated for a test".into()]).unwrap();
        let ds = load_csv_sequences(&p, &CsvSchema::default()).unwrap();
        assert_eq!(ds.sequences, vec![a, b]);
    }

    #[test]
    fn missing_output_column_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "k,u1\n0,1.0\n").unwrap();
        match load_csv_sequences(&p, &CsvSchema::default()) {
            Err(Error::Schema(m)) => assert!(m.contains("y1"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
        match load_csv_sequences(&p, &CsvSchema::named(&["u1"], &["voltage"])) {
            Err(Error::Schema(m)) => assert!(m.contains("voltage")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_cells_report_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "# c\nk,u1,y1\n0,1.0,2.0\n1,abc,2.0\n").unwrap();
        match load_csv_sequences(&p, &CsvSchema::default()) {
            Err(Error::Parse { row, message, .. }) => {
                assert_eq!(row, 4);
                assert!(message.contains("u1"));
            }
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&p, "k,u1,y1\n0,1.0,2.0\n1,1.0\n").unwrap();
        assert!(matches!(load_csv_sequences(&p, &CsvSchema::default()), Err(Error::Parse { row: 3, .. })));
    }
}
