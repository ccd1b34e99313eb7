//! Pipeline configuration: a TOML file whose values can be overridden by
//! command-line flags. Relative paths resolve against the file's directory.

use std::path::{Path, PathBuf};

use ghtm_core::corpus::{self, TokenizerConfig};
use ghtm_core::factorize::{DEFAULT_MAX_REP_DOCS, DEFAULT_TOP_WORDS};
use ghtm_core::gcn::TrainConfig;
use ghtm_core::metrics::{CV_WINDOW, DEFAULT_RBO_P, NPMI_WINDOW};
use serde::{Deserialize, Serialize};

use crate::corpus_io::CorpusFormat;
use crate::error::{GhtmError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    pub format: CorpusFormat,
    pub stopwords: Option<PathBuf>,
    pub min_token_length: usize,
    pub strip_punctuation: bool,
    pub strip_numerics: bool,
    pub min_df: usize,
    pub max_df_ratio: f64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            path: PathBuf::new(),
            format: CorpusFormat::PlainLines,
            stopwords: None,
            min_token_length: 2,
            strip_punctuation: true,
            strip_numerics: true,
            min_df: corpus::DEFAULT_MIN_DF,
            max_df_ratio: corpus::DEFAULT_MAX_DF_RATIO,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingsSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub knn_k: usize,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection { knn_k: 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GcnSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub edge_dropout: f64,
    pub margin: f64,
    pub temperature: f64,
    pub hinge_weight: f64,
    pub contrastive_weight: f64,
    pub negatives_per_edge: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    /// Defaults to the topic count.
    pub num_clusters: Option<usize>,
}

impl Default for GcnSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        GcnSection {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            dropout: t.dropout,
            edge_dropout: t.edge_dropout,
            margin: t.margin,
            temperature: t.temperature,
            hinge_weight: t.hinge_weight,
            contrastive_weight: t.contrastive_weight,
            negatives_per_edge: t.negatives_per_edge,
            hidden_dims: t.hidden_dims,
            output_dim: t.output_dim,
            num_clusters: t.num_clusters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsSection {
    pub k: usize,
    pub top_words: usize,
    pub max_rep_docs: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for TopicsSection {
    fn default() -> Self {
        TopicsSection { k: 10, top_words: DEFAULT_TOP_WORDS, max_rep_docs: DEFAULT_MAX_REP_DOCS, max_iters: 500, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub npmi_window: usize,
    pub cv_window: usize,
    pub rbo_p: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection { npmi_window: NPMI_WINDOW, cv_window: CV_WINDOW, rbo_p: DEFAULT_RBO_P }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub write_w: bool,
    pub write_graph: bool,
    /// Reuse cached refined embeddings when their fingerprint matches.
    pub cache: bool,
    /// Leave wall-clock fields out of the metrics report so that reruns
    /// produce byte-identical files; timings still go to `timings.txt`.
    pub deterministic_report: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("ghtm-out"), write_w: false, write_graph: false, cache: true, deterministic_report: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub corpus: CorpusSection,
    pub embeddings: EmbeddingsSection,
    pub graph: GraphSection,
    pub gcn: GcnSection,
    pub topics: TopicsSection,
    pub metrics: MetricsSection,
    pub output: OutputSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            corpus: CorpusSection::default(),
            embeddings: EmbeddingsSection::default(),
            graph: GraphSection::default(),
            gcn: GcnSection::default(),
            topics: TopicsSection::default(),
            metrics: MetricsSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Values given on the command line; `Some` wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub topics: Option<usize>,
    pub top_words: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<CorpusFormat>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if !p.as_os_str().is_empty() && p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GhtmError::Config(e.to_string()))
    }

    /// Parses a config file and makes its relative paths absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GhtmError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.corpus.path);
        if let Some(s) = &mut cfg.corpus.stopwords {
            resolve(base, s);
        }
        resolve(base, &mut cfg.embeddings.path);
        resolve(base, &mut cfg.output.dir);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(k) = o.topics {
            self.topics.k = k;
        }
        if let Some(t) = o.top_words {
            self.topics.top_words = t;
        }
        if let Some(d) = &o.out_dir {
            self.output.dir = d.clone();
        }
        if let Some(f) = o.format {
            self.corpus.format = f;
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Checks parameter ranges and that the inputs the command needs exist.
    pub fn validate(&self, needs_embeddings: bool) -> Result<()> {
        let fail = |m: String| Err(GhtmError::Config(m));
        let must_exist = |what: &str, p: &Path| {
            if p.as_os_str().is_empty() {
                return fail(format!("{what} path is not set"));
            }
            if !p.is_file() {
                return fail(format!("{what} file not found: {}", p.display()));
            }
            Ok(())
        };
        must_exist("corpus", &self.corpus.path)?;
        if let Some(s) = &self.corpus.stopwords {
            must_exist("stopword", s)?;
        }
        if needs_embeddings {
            must_exist("embedding", &self.embeddings.path)?;
        }
        if self.topics.k == 0 {
            return fail("topics.k must be at least 1".into());
        }
        if self.topics.top_words == 0 || self.topics.max_rep_docs == 0 {
            return fail("topics.top_words and topics.max_rep_docs must be at least 1".into());
        }
        if self.corpus.min_token_length == 0 {
            return fail("corpus.min_token_length must be at least 1".into());
        }
        if !(self.corpus.max_df_ratio > 0.0 && self.corpus.max_df_ratio <= 1.0) {
            return fail("corpus.max_df_ratio must lie in (0, 1]".into());
        }
        if self.graph.knn_k == 0 {
            return fail("graph.knn_k must be at least 1".into());
        }
        if self.metrics.npmi_window == 0 || self.metrics.cv_window == 0 {
            return fail("metric windows must be at least 1".into());
        }
        if !(self.metrics.rbo_p > 0.0 && self.metrics.rbo_p < 1.0) {
            return fail("metrics.rbo_p must lie in (0, 1)".into());
        }
        if needs_embeddings {
            self.train_config(self.seed).validate().map_err(|e| GhtmError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn tokenizer(&self, stopwords: std::collections::BTreeSet<String>) -> TokenizerConfig {
        TokenizerConfig {
            stopwords,
            min_token_length: self.corpus.min_token_length,
            strip_punctuation: self.corpus.strip_punctuation,
            strip_numerics: self.corpus.strip_numerics,
            ..TokenizerConfig::default()
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.gcn.num_clusters.unwrap_or(self.topics.k)
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let g = &self.gcn;
        TrainConfig {
            epochs: g.epochs,
            learning_rate: g.learning_rate,
            dropout: g.dropout,
            edge_dropout: g.edge_dropout,
            margin: g.margin,
            temperature: g.temperature,
            hinge_weight: g.hinge_weight,
            contrastive_weight: g.contrastive_weight,
            negatives_per_edge: g.negatives_per_edge,
            hidden_dims: g.hidden_dims.clone(),
            output_dim: g.output_dim,
            num_clusters: Some(self.num_clusters()),
            seed,
            track_loss: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_hyperparameters() {
        let c = PipelineConfig::default();
        assert_eq!(c.gcn.epochs, 100);
        assert_eq!(c.gcn.learning_rate, 0.005);
        assert_eq!(c.gcn.dropout, 0.4);
        assert_eq!(c.gcn.edge_dropout, 0.2);
        assert_eq!(c.graph.knn_k, 15);
        assert_eq!(c.gcn.output_dim, 64);
        assert_eq!(c.topics.top_words, 10);
        assert_eq!((c.metrics.npmi_window, c.metrics.cv_window), (10, 110));
    }

    #[test]
    fn file_values_and_overrides() {
        let mut c = PipelineConfig::from_toml(
            "seed = 7\n[corpus]\npath = \"c.txt\"\nformat = \"jsonl\"\n[topics]\nk = 3\n[gcn]\nhidden_dims = [16]\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.corpus.format, CorpusFormat::JsonLines);
        assert_eq!(c.gcn.hidden_dims, vec![16]);
        assert_eq!(c.num_clusters(), 3);
        c.apply(&Overrides { seed: Some(9), topics: Some(5), ..Default::default() });
        assert_eq!((c.seed, c.topics.k, c.num_clusters()), (9, 5, 5));
        let again = PipelineConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let e = PipelineConfig::from_toml("[topics]\nkk = 3\n").unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn validation_names_missing_paths() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("c.txt");
        std::fs::write(&corpus, "a b\n").unwrap();
        let mut c = PipelineConfig::default();
        c.corpus.path = corpus;
        c.embeddings.path = dir.path().join("missing.vec");
        let msg = c.validate(true).unwrap_err().to_string();
        assert!(msg.contains("missing.vec"), "{msg}");
        assert!(c.validate(false).is_ok());
        c.topics.k = 0;
        assert!(c.validate(false).is_err());
    }
}
