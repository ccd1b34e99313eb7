//! Word-vector text files: `term v1 … vD` per line, optional
//! `count dim` header line.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ghtm_core::corpus::Vocabulary;
use ghtm_core::vectorize::EmbeddingTable;

use crate::error::{GhtmError, Result};

fn is_header(fields: &[&str]) -> bool {
    fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
}

/// Loads vectors for vocabulary terms; missing terms become zero rows.
/// The first occurrence of a term wins.
pub fn load_embeddings(path: &Path, vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| GhtmError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
    let mut dim: Option<usize> = None;
    let mut offset = 0usize;
    let format_error = |line: usize, message: String| GhtmError::Format { path: path.into(), line, message };
    for (i, line) in reader.split(b'\n').enumerate() {
        let line = line.map_err(|e| GhtmError::io(path, e))?;
        let line_no = i + 1;
        let text = std::str::from_utf8(&line).map_err(|e| GhtmError::Decode { path: path.into(), offset: offset + e.valid_up_to() })?;
        offset += line.len() + 1;
        let fields: Vec<&str> = text.split_ascii_whitespace().collect();
        if fields.is_empty() || (i == 0 && is_header(&fields)) {
            continue;
        }
        let width = fields.len() - 1;
        match dim {
            None if width == 0 => return Err(format_error(line_no, "line has a term but no components".into())),
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(format_error(line_no, format!("{width} components, expected {d}")));
            }
            Some(_) => {}
        }
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| format_error(line_no, format!("unparseable component `{f}`"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(j) = vocab.index(fields[0]) {
            rows[j].get_or_insert(values);
        }
    }
    let dim = dim.ok_or_else(|| format_error(0, "file contains no vectors".into()))?;
    Ok(EmbeddingTable::from_rows(dim, rows)?)
}
