//! Corpus and stopword loaders.

use std::collections::BTreeSet;
use std::path::Path;

use ghtm_core::corpus::{find_duplicate_id, Document, TokenizerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{GhtmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// One document per line; ids are 0-based line numbers.
    #[serde(alias = "plain")]
    #[value(alias = "plain")]
    PlainLines,
    /// One JSON object per line with a string `text` and an optional `id`.
    #[serde(alias = "jsonl")]
    #[value(alias = "jsonl")]
    JsonLines,
}

pub(crate) fn read_utf8(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| GhtmError::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| GhtmError::Decode { path: path.into(), offset: e.utf8_error().valid_up_to() })
}

#[derive(Deserialize)]
struct JsonRecord {
    id: Option<serde_json::Value>,
    text: Option<String>,
}

/// Reads and tokenizes a corpus file, preserving document order.
pub fn load_corpus(path: &Path, format: CorpusFormat, tokenizer: &TokenizerConfig) -> Result<Vec<Document>> {
    let text = read_utf8(path)?;
    let docs = match format {
        CorpusFormat::PlainLines => {
            text.lines().enumerate().map(|(i, line)| Document::new(i.to_string(), line, tokenizer)).collect()
        }
        CorpusFormat::JsonLines => {
            let mut docs = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record_error = |message: String| GhtmError::Record { path: path.into(), line: i + 1, message };
                let rec: JsonRecord = serde_json::from_str(line).map_err(|e| record_error(e.to_string()))?;
                let body = rec.text.ok_or_else(|| record_error("record has no string `text` field".into()))?;
                let id = match rec.id {
                    None => docs.len().to_string(),
                    Some(serde_json::Value::String(s)) => s,
                    Some(serde_json::Value::Number(n)) => n.to_string(),
                    Some(other) => return Err(record_error(format!("unsupported id {other}"))),
                };
                docs.push(Document::new(id, body, tokenizer));
            }
            docs
        }
    };
    if let Some(id) = find_duplicate_id(&docs) {
        return Err(GhtmError::Record { path: path.into(), line: 0, message: format!("duplicate document id `{id}`") });
    }
    Ok(docs)
}

/// One stopword per line; blank lines are ignored.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    Ok(read_utf8(path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_lowercase).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(content: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content).unwrap();
        f
    }

    #[test]
    fn plain_lines() {
        let cfg = TokenizerConfig::default();
        assert!(load_corpus(file(b"").path(), CorpusFormat::PlainLines, &cfg).unwrap().is_empty());
        let docs = load_corpus(file(b"one\ntwo two\nthree\n").path(), CorpusFormat::PlainLines, &cfg).unwrap();
        assert_eq!(docs.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["0", "1", "2"]);
        assert_eq!(docs[1].tokens, ["two", "two"]);
    }

    #[test]
    fn json_lines() {
        let cfg = TokenizerConfig::default();
        let f = file(b"{\"id\":\"a\",\"text\":\"x y\"}\n\n{\"text\":\"z\"}\n");
        let docs = load_corpus(f.path(), CorpusFormat::JsonLines, &cfg).unwrap();
        assert_eq!(docs[0].id, "a");
        assert_eq!(docs[0].raw_text, "x y");
        assert_eq!(docs[1].id, "1");

        let f = file(b"{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\"}\n");
        match load_corpus(f.path(), CorpusFormat::JsonLines, &cfg) {
            Err(GhtmError::Record { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let f = file(b"{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
        assert!(load_corpus(f.path(), CorpusFormat::JsonLines, &cfg).is_err());
    }

    #[test]
    fn bad_utf8_reports_offset() {
        let f = file(b"ok\n\xffbad");
        match load_corpus(f.path(), CorpusFormat::PlainLines, &TokenizerConfig::default()) {
            Err(GhtmError::Decode { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stopwords() {
        let words = load_stopwords(file("The\n\n এবং \n".as_bytes()).path()).unwrap();
        assert_eq!(words.into_iter().collect::<Vec<_>>(), ["the", "এবং"]);
    }
}
