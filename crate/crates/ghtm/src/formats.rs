//! Text and binary artifact formats: topics file, metrics report, matrix
//! and graph dumps, GCN checkpoints and the refined-embedding cache.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ghtm_core::gcn::{GcnModel, Layer};
use ghtm_core::graph::DocumentGraph;
use ghtm_core::Matrix;

use crate::error::{GhtmError, Result};

/// `topic_id<TAB>term<TAB>term…`, one topic per line.
pub fn render_topics(topics: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (i, terms) in topics.iter().enumerate() {
        out.push_str(&i.to_string());
        for t in terms {
            out.push('\t');
            out.push_str(t);
        }
        out.push('\n');
    }
    out
}

/// Parses a topics file. Blank lines are skipped; every other line needs a
/// numeric topic id and at least one term, with no term repeated.
pub fn parse_topics(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = crate::corpus_io::read_utf8(path)?;
    let mut topics = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| GhtmError::Format { path: path.into(), line: i + 1, message };
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default();
        id.trim().parse::<usize>().map_err(|_| err(format!("topic id `{id}` is not a non-negative integer")))?;
        let terms: Vec<String> = fields.map(|t| t.trim().to_string()).collect();
        if terms.is_empty() || terms.iter().any(String::is_empty) {
            return Err(err("topic line needs tab-separated, non-empty terms".into()));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = terms.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(err(format!("term `{dup}` repeated within a topic")));
        }
        topics.push(terms);
    }
    Ok(topics)
}

/// Scores written to the metrics report. Absent values render as `n/a`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub model: String,
    pub seed: Option<u64>,
    pub topics_identified: usize,
    pub cv: Option<f64>,
    pub npmi: Option<f64>,
    pub td: f64,
    pub irbo: Option<f64>,
    pub runtime_seconds: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
}

impl MetricsReport {
    /// `key = value` lines. `runtime_seconds` is omitted when unset.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model = {}", self.model);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let _ = writeln!(s, "topics_identified = {}", self.topics_identified);
        let _ = writeln!(s, "cv = {}", opt(self.cv));
        let _ = writeln!(s, "npmi = {}", opt(self.npmi));
        let _ = writeln!(s, "td = {:.6}", self.td);
        let _ = writeln!(s, "irbo = {}", opt(self.irbo));
        if let Some(rt) = self.runtime_seconds {
            let _ = writeln!(s, "runtime_seconds = {rt:.3}");
        }
        s
    }
}

/// Reads `key = value` lines back into pairs (used by tests and tooling).
pub fn parse_key_values(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// One row per line, space separated.
pub fn render_matrix(m: &Matrix) -> String {
    let mut s = String::new();
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// `u v weight` per edge.
pub fn render_graph(g: &DocumentGraph) -> String {
    let mut s = String::new();
    for e in g.edges() {
        let _ = writeln!(s, "{} {} {}", e.u, e.v, e.weight);
    }
    s
}

const CHECKPOINT_MAGIC: &str = "ghtm-gcn-checkpoint v1";

fn write_block(out: &mut String, label: &str, m: &Matrix) {
    let _ = writeln!(out, "{label} {} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// Text checkpoint: magic line, dims, then each layer's weight and optional
/// projection. Floats use shortest round-trip notation, so a reload
/// reproduces the model bit for bit.
pub fn render_checkpoint(model: &GcnModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CHECKPOINT_MAGIC}");
    let dims: Vec<String> = model.dims().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "dims {}", dims.join(" "));
    for (i, layer) in model.layers().iter().enumerate() {
        write_block(&mut out, &format!("weight {i}"), &layer.weight);
        match &layer.residual {
            Some(r) => write_block(&mut out, &format!("residual {i}"), r),
            None => {
                let _ = writeln!(out, "residual {i} none");
            }
        }
    }
    out
}

pub fn save_checkpoint(path: &Path, model: &GcnModel) -> Result<()> {
    fs::write(path, render_checkpoint(model)).map_err(|e| GhtmError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<GcnModel> {
    let file = fs::File::open(path).map_err(|e| GhtmError::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(GhtmError::Format { path: path.into(), line: i + 1, message: e.to_string() }),
            None => Err(GhtmError::Format { path: path.into(), line: 0, message: format!("truncated before {what}") }),
        }
    };
    let err = |line: usize, message: String| GhtmError::Format { path: path.into(), line, message };
    let (n, magic) = next("header")?;
    if magic.trim() != CHECKPOINT_MAGIC {
        return Err(err(n, format!("unsupported checkpoint header `{magic}`")));
    }
    let (n, dims_line) = next("dims")?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| err(n, "expected dims line".into()))?
        .split_whitespace()
        .map(|d| d.parse().map_err(|_| err(n, format!("bad dimension `{d}`"))))
        .collect::<Result<_>>()?;
    if dims.len() < 2 {
        return Err(err(n, "need at least two dims".into()));
    }
    let mut read_block = |label: &str, allow_none: bool| -> Result<Option<Matrix>> {
        let (n, head) = next(label)?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() >= 2 && format!("{} {}", parts[0], parts[1]) != label {
            return Err(err(n, format!("expected `{label}`, found `{head}`")));
        }
        if allow_none && parts.get(2) == Some(&"none") {
            return Ok(None);
        }
        let (rows, cols) = match parts.as_slice() {
            [_, _, r, c] => (
                r.parse::<usize>().map_err(|_| err(n, "bad row count".into()))?,
                c.parse::<usize>().map_err(|_| err(n, "bad column count".into()))?,
            ),
            _ => return Err(err(n, format!("malformed block header `{head}`"))),
        };
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (n, line) = next(label)?;
            let before = data.len();
            for v in line.split_whitespace() {
                data.push(v.parse::<f64>().map_err(|_| err(n, format!("bad value `{v}`")))?);
            }
            if data.len() - before != cols {
                return Err(err(n, format!("expected {cols} values")));
            }
        }
        Ok(Some(Matrix::from_vec(rows, cols, data)?))
    };
    let mut layers = Vec::new();
    for i in 0..dims.len() - 1 {
        let weight = read_block(&format!("weight {i}"), false)?.expect("weights are never `none`");
        let residual = read_block(&format!("residual {i}"), true)?;
        layers.push(Layer { weight, residual });
    }
    let model = GcnModel::from_layers(layers)?;
    if model.dims() != dims {
        return Err(err(2, format!("declared dims {dims:?} do not match layers {:?}", model.dims())));
    }
    Ok(model)
}

const CACHE_MAGIC: &[u8; 8] = b"GHTMREF1";

/// Little-endian binary matrix: magic, rows, cols (u64), then values.
pub fn save_matrix_bin(path: &Path, m: &Matrix) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 8 * m.as_slice().len());
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| GhtmError::io(path, e))?;
    f.write_all(&buf).map_err(|e| GhtmError::io(path, e))
}

pub fn load_matrix_bin(path: &Path) -> Result<Matrix> {
    let mut bytes = Vec::new();
    fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| GhtmError::io(path, e))?;
    let bad = || GhtmError::Format { path: path.into(), line: 0, message: "corrupt matrix cache".into() };
    if bytes.len() < 24 || &bytes[..8] != CACHE_MAGIC {
        return Err(bad());
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    if bytes.len() != 24 + 8 * rows * cols {
        return Err(bad());
    }
    let data = bytes[24..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Matrix::from_vec(rows, cols, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ghtm_core::gcn::Mode;
    use ghtm_core::{seed, CsrMatrix};

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn topics_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let topics = vec![vec!["a".to_string(), "b".to_string()], vec!["c".to_string(), "d".to_string()]];
        let p = write(&dir, "t.txt", &render_topics(&topics));
        assert_eq!(parse_topics(&p).unwrap(), topics);

        let p = write(&dir, "dup.txt", "0\ta\tb\n1\tc\tc\n");
        assert!(matches!(parse_topics(&p), Err(GhtmError::Format { line: 2, .. })));
        let p = write(&dir, "id.txt", "x\ta\n");
        assert!(matches!(parse_topics(&p), Err(GhtmError::Format { line: 1, .. })));
        let p = write(&dir, "empty.txt", "0\n");
        assert!(parse_topics(&p).is_err());
    }

    #[test]
    fn checkpoint_round_trip_preserves_forward() {
        let model = GcnModel::new(&[5, 4, 4, 3], &mut seed::rng(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        save_checkpoint(&p, &model).unwrap();
        let back = load_checkpoint(&p).unwrap();
        assert_eq!(back, model);
        let x = Matrix::from_rows(&[[0.1, -0.2, 0.3, 0.4, 0.5], [1.0, 0.0, -1.0, 2.0, 0.5]]).unwrap();
        let adj = CsrMatrix::from_rows(2, vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.5), (1, 0.5)]]).unwrap();
        assert_eq!(
            back.forward(&x, &adj, Mode::Eval).unwrap(),
            model.forward(&x, &adj, Mode::Eval).unwrap()
        );
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_checkpoint(&write(&dir, "a", "nope\n")).is_err());
        let body = format!("{CHECKPOINT_MAGIC}\ndims 2 2\nweight 0 2 2\n1 2\n3\n");
        assert!(load_checkpoint(&write(&dir, "b", &body)).is_err());
    }

    #[test]
    fn matrix_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_rows(&[[1.0, f64::MIN_POSITIVE], [-3.5, 1e300]]).unwrap();
        let p = dir.path().join("m.bin");
        save_matrix_bin(&p, &m).unwrap();
        assert_eq!(load_matrix_bin(&p).unwrap(), m);
        fs::write(&p, b"junk").unwrap();
        assert!(load_matrix_bin(&p).is_err());
    }

    #[test]
    fn report_rendering() {
        let r = MetricsReport {
            model: "ghtm".into(),
            seed: Some(1),
            topics_identified: 2,
            cv: Some(0.5),
            npmi: None,
            td: 1.0,
            irbo: Some(1.0),
            runtime_seconds: None,
        };
        let kv = parse_key_values(&r.render());
        assert!(kv.contains(&("npmi".into(), "n/a".into())));
        assert!(kv.contains(&("td".into(), "1.000000".into())));
        assert!(!kv.iter().any(|(k, _)| k == "runtime_seconds"));
    }
}
