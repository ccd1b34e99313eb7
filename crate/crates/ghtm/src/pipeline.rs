//! End-to-end orchestration: the `run`, `baseline` and `evaluate` commands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ghtm_core::corpus::{build_vocabulary, Document, Vocabulary};
use ghtm_core::factorize::{baseline_nmf_topics, fit_topics, NmfConfig, TopicModel};
use ghtm_core::gcn::{train_model, GcnModel};
use ghtm_core::graph::{build_knn_graph, normalize_adjacency, partition_graph};
use ghtm_core::metrics::{coherence_cv, coherence_npmi, count_cooccurrences, irbo, topic_diversity, TopicSet};
use ghtm_core::vectorize::{compute_counts, compute_tfidf, project_documents, DocEmbeddings, DocTermMatrix};
use ghtm_core::{seed, Matrix};
use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::config::{MetricsSection, PipelineConfig};
use crate::corpus_io::{load_corpus, load_stopwords};
use crate::embeddings_io::load_embeddings;
use crate::error::{GhtmError, Result, StageExt};
use crate::formats::{
    load_checkpoint, load_matrix_bin, render_checkpoint, render_graph, render_matrix, render_topics, save_checkpoint,
    save_matrix_bin, MetricsReport,
};

pub const GHTM_MODEL: &str = "ghtm";
pub const BASELINE_MODEL: &str = "nmf-tfidf";

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

/// What a `run` or `baseline` invocation produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub model: String,
    pub seed: u64,
    pub stages: Vec<StageTiming>,
    /// Wall clock from the first stage to the end of the output stage.
    pub total_seconds: f64,
    pub metrics: MetricsReport,
    pub topics: Vec<Vec<String>>,
    pub topics_path: PathBuf,
    pub metrics_path: PathBuf,
    /// The effective configuration, as TOML.
    pub config_echo: String,
    /// Refined embeddings came from the cache instead of training.
    pub cache_hit: bool,
}

impl RunReport {
    pub fn stage_seconds(&self) -> f64 {
        self.stages.iter().map(|s| s.seconds).sum()
    }

    pub fn render_timings(&self) -> String {
        let mut s = String::new();
        for t in &self.stages {
            let _ = writeln!(s, "{} = {:.6}", t.stage, t.seconds);
        }
        let _ = writeln!(s, "total = {:.6}", self.total_seconds);
        s
    }
}

struct Clock {
    start: Instant,
    stages: Vec<StageTiming>,
}

impl Clock {
    fn new() -> Self {
        Clock { start: Instant::now(), stages: Vec::new() }
    }

    fn stage<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        info!("stage {stage}: start");
        let out = f().stage(stage);
        let seconds = t.elapsed().as_secs_f64();
        info!("stage {stage}: {seconds:.3}s");
        self.record(stage, seconds);
        out
    }

    /// Repeated entries for one stage accumulate.
    fn record(&mut self, stage: &'static str, seconds: f64) {
        match self.stages.iter_mut().find(|t| t.stage == stage) {
            Some(t) => t.seconds += seconds,
            None => self.stages.push(StageTiming { stage, seconds }),
        }
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

struct Prepared {
    docs: Vec<Document>,
    vocab: Vocabulary,
    counts: DocTermMatrix,
    tfidf: DocTermMatrix,
}

fn load_documents(cfg: &PipelineConfig) -> Result<(Vec<Document>, Vocabulary)> {
    let stopwords = match &cfg.corpus.stopwords {
        Some(p) => load_stopwords(p)?,
        None => Default::default(),
    };
    let tokenizer = cfg.tokenizer(stopwords);
    tokenizer.validate()?;
    let docs = load_corpus(&cfg.corpus.path, cfg.corpus.format, &tokenizer)?;
    let empty = docs.iter().filter(|d| d.tokens.is_empty()).count();
    if empty > 0 {
        warn!("{empty} of {} documents have no tokens after preprocessing", docs.len());
    }
    let vocab = build_vocabulary(&docs, cfg.corpus.min_df, cfg.corpus.max_df_ratio)?;
    info!("{} documents, {} vocabulary terms", docs.len(), vocab.len());
    Ok((docs, vocab))
}

fn prepare(cfg: &PipelineConfig, clock: &mut Clock) -> Result<Prepared> {
    let (docs, vocab) = clock.stage("corpus", || load_documents(cfg))?;
    let (counts, tfidf) = clock.stage("vectorize", || {
        let counts = compute_counts(&docs, &vocab);
        let tfidf = compute_tfidf(&counts)?;
        Ok((counts, tfidf))
    })?;
    Ok(Prepared { docs, vocab, counts, tfidf })
}

/// Scores a topic list against tokenized reference documents. Empty topics
/// are dropped first; metrics that cannot be computed come back as `None`
/// with a warning.
pub fn score_topics(
    model: &str,
    seed: Option<u64>,
    topics: &[Vec<String>],
    docs: &[Document],
    params: &MetricsSection,
) -> Result<MetricsReport> {
    let kept: Vec<Vec<String>> = topics.iter().filter(|t| !t.is_empty()).cloned().collect();
    if kept.len() < topics.len() {
        warn!("{} topics have no words and are not scored", topics.len() - kept.len());
    }
    let set = TopicSet::new(kept)?;
    let targets = set.vocabulary();
    let tokens: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
    let soft = |name: &str, r: ghtm_core::Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            warn!("{name} not reported: {e}");
            None
        }
    };
    let coherence = |window: usize, f: fn(&TopicSet, &_) -> ghtm_core::Result<ghtm_core::metrics::CoherenceScore>| {
        let counts = count_cooccurrences(&tokens, window, &targets)?;
        let score = f(&set, &counts)?;
        if !score.skipped_terms.is_empty() {
            warn!("{} topic words never occur in the reference corpus", score.skipped_terms.len());
        }
        Ok(score.value)
    };
    let npmi = soft("npmi", coherence(params.npmi_window, coherence_npmi));
    let cv = soft("cv", coherence(params.cv_window, coherence_cv));
    Ok(MetricsReport {
        model: model.to_string(),
        seed,
        topics_identified: set.len(),
        cv,
        npmi,
        td: topic_diversity(&set),
        irbo: soft("irbo", irbo(&set, params.rbo_p)),
        runtime_seconds: None,
    })
}

fn nmf_config(cfg: &PipelineConfig) -> NmfConfig {
    NmfConfig {
        max_iters: cfg.topics.max_iters,
        tol: cfg.topics.tol,
        seed: seed::derive(cfg.seed, "nmf"),
        ..NmfConfig::new(cfg.topics.k)
    }
}

/// Identifies the GCN input exactly: the document feature matrix plus every
/// setting that influences training.
fn fingerprint(features: &Matrix, knn_k: usize, cfg: &PipelineConfig) -> String {
    let mut h = Sha256::new();
    h.update(b"ghtm-refined-v1");
    h.update((features.rows() as u64).to_le_bytes());
    h.update((features.cols() as u64).to_le_bytes());
    for v in features.as_slice() {
        h.update(v.to_le_bytes());
    }
    h.update((knn_k as u64).to_le_bytes());
    h.update(format!("{:?}", cfg.train_config(seed::derive(cfg.seed, "gcn"))).as_bytes());
    h.finalize().iter().take(12).map(|b| format!("{b:02x}")).collect()
}

fn cached(dir: &Path, key: &str) -> Option<(Matrix, GcnModel)> {
    let emb = dir.join(format!("refined-{key}.bin"));
    let ckpt = dir.join(format!("gcn-{key}.ckpt"));
    if !emb.is_file() || !ckpt.is_file() {
        return None;
    }
    match (load_matrix_bin(&emb), load_checkpoint(&ckpt)) {
        (Ok(m), Ok(model)) => Some((m, model)),
        (Err(e), _) | (_, Err(e)) => {
            warn!("ignoring unreadable cache entry {key}: {e}");
            None
        }
    }
}

fn store(dir: &Path, key: &str, refined: &Matrix, model: &GcnModel) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GhtmError::io(dir, e))?;
    let emb = dir.join(format!("refined-{key}.bin"));
    let ckpt = dir.join(format!("gcn-{key}.ckpt"));
    let tmp_emb = emb.with_extension("bin.tmp");
    let tmp_ckpt = ckpt.with_extension("ckpt.tmp");
    save_matrix_bin(&tmp_emb, refined)?;
    save_checkpoint(&tmp_ckpt, model)?;
    fs::rename(&tmp_emb, &emb).map_err(|e| GhtmError::io(&emb, e))?;
    fs::rename(&tmp_ckpt, &ckpt).map_err(|e| GhtmError::io(&ckpt, e))
}

/// Writes every file via a temporary sibling and rename. If any write fails,
/// the files already written by this call are removed.
fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GhtmError::io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp"));
        let res = fs::write(&tmp, body).and_then(|()| fs::rename(&tmp, &path));
        if let Err(e) = res {
            let _ = fs::remove_file(&tmp);
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(GhtmError::io(path, e));
        }
        written.push(path);
    }
    Ok(())
}

/// Which model produced the outputs and how their files are named.
struct Label<'a> {
    model: &'a str,
    prefix: &'a str,
}

fn finish(
    cfg: &PipelineConfig,
    label: Label<'_>,
    mut clock: Clock,
    topic_model: &TopicModel,
    mut metrics: MetricsReport,
    mut extra: Vec<(String, String)>,
    cache_hit: bool,
) -> Result<RunReport> {
    let Label { model: model_name, prefix } = label;
    let topics = topic_model.word_lists();
    let dir = cfg.output.dir.clone();
    let topics_name = format!("{prefix}topics.txt");
    let metrics_name = format!("{prefix}metrics.txt");
    if !cfg.output.deterministic_report {
        metrics.runtime_seconds = Some(clock.elapsed());
    }
    let config_echo = cfg.to_toml();
    let output_start = Instant::now();
    let mut files = vec![
        (topics_name.clone(), render_topics(&topics)),
        (metrics_name.clone(), metrics.render()),
        (format!("{prefix}config.toml"), config_echo.clone()),
    ];
    if cfg.output.write_w {
        files.push((format!("{prefix}W.txt"), render_matrix(&topic_model.w)));
    }
    files.append(&mut extra);
    write_outputs(&dir, &files).stage("output")?;
    clock.record("output", output_start.elapsed().as_secs_f64());
    let mut report = RunReport {
        model: model_name.to_string(),
        seed: cfg.seed,
        stages: clock.stages,
        total_seconds: 0.0,
        metrics,
        topics,
        topics_path: dir.join(topics_name),
        metrics_path: dir.join(metrics_name),
        config_echo,
        cache_hit,
    };
    // Timings cannot include the time spent writing themselves.
    report.total_seconds = clock.start.elapsed().as_secs_f64();
    let timings = dir.join(format!("{prefix}timings.txt"));
    fs::write(&timings, report.render_timings()).map_err(|e| GhtmError::io(timings, e)).stage("output")?;
    Ok(report)
}

fn effective_knn(cfg: &PipelineConfig, n_docs: usize) -> Result<usize> {
    if n_docs < 2 {
        return Err(GhtmError::Core(ghtm_core::Error::Parameter(format!(
            "a document graph needs at least two documents, found {n_docs}"
        ))));
    }
    let k = cfg.graph.knn_k.min(n_docs - 1);
    if k < cfg.graph.knn_k {
        warn!("knn_k={} lowered to {k} for {n_docs} documents", cfg.graph.knn_k);
    }
    Ok(k)
}

/// Full pipeline: corpus, vectorize, graph, gcn, factorize, metrics, output.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate(true)?;
    let mut clock = Clock::new();
    let Prepared { docs, vocab, counts, tfidf } = prepare(cfg, &mut clock)?;
    let features: DocEmbeddings = clock.stage("vectorize", || {
        let table = load_embeddings(&cfg.embeddings.path, &vocab)?;
        if table.oov_count() > 0 {
            warn!("{} of {} vocabulary terms have no embedding", table.oov_count(), table.n_terms());
        }
        Ok(project_documents(&tfidf, &table)?)
    })?;
    let knn_k = effective_knn(cfg, docs.len()).stage("graph")?;
    let (graph, adj) = clock.stage("graph", || {
        let g = build_knn_graph(&features, knn_k)?;
        let adj = normalize_adjacency(&g);
        Ok((g, adj))
    })?;

    let (refined, gcn, cache_hit) = clock.stage("gcn", || {
        let cache_dir = cfg.output.dir.join("cache");
        let key = fingerprint(features.matrix(), knn_k, cfg);
        if let Some((refined, model)) = cfg.output.cache.then(|| cached(&cache_dir, &key)).flatten() {
            info!("reusing refined embeddings {key}");
            return Ok((refined, model, true));
        }
        let train_cfg = cfg.train_config(seed::derive(cfg.seed, "gcn"));
        let clusters = cfg.num_clusters();
        if clusters > docs.len() {
            return Err(GhtmError::Config(format!("num_clusters={clusters} exceeds the {} documents", docs.len())));
        }
        let partition = partition_graph(&features, clusters, seed::derive(cfg.seed, "partition"))?;
        let outcome = train_model(&features, &graph, &adj, &partition, &train_cfg)?;
        let refined = outcome.embeddings.0;
        if cfg.output.cache {
            store(&cache_dir, &key, &refined, &outcome.model)?;
        }
        Ok((refined, outcome.model, false))
    })?;

    let topic_model = clock.stage("factorize", || {
        Ok(fit_topics(&refined, &counts, &vocab, cfg.topics.top_words, cfg.topics.max_rep_docs, &nmf_config(cfg))?)
    })?;
    report_degraded(&topic_model);
    let metrics = clock.stage("metrics", || {
        score_topics(GHTM_MODEL, Some(cfg.seed), &topic_model.word_lists(), &docs, &cfg.metrics)
    })?;
    let mut extra = vec![("gcn.ckpt".to_string(), render_checkpoint(&gcn))];
    if cfg.output.write_graph {
        extra.push(("graph.txt".to_string(), render_graph(&graph)));
    }
    finish(cfg, Label { model: GHTM_MODEL, prefix: "" }, clock, &topic_model, metrics, extra, cache_hit)
}

fn report_degraded(m: &TopicModel) {
    for (i, t) in m.topics.iter().enumerate() {
        if t.fallback {
            warn!("topic {i} is no document's strongest topic; used its highest-weighted documents");
        }
        if t.short {
            warn!("topic {i} has only {} words", t.terms.len());
        }
    }
}

/// NMF directly on TF-IDF, scored and written like `run` with a
/// `baseline_` file prefix.
pub fn cmd_baseline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate(false)?;
    let mut clock = Clock::new();
    let Prepared { docs, vocab, tfidf, .. } = prepare(cfg, &mut clock)?;
    let topic_model =
        clock.stage("factorize", || Ok(baseline_nmf_topics(&tfidf, &vocab, cfg.topics.top_words, &nmf_config(cfg))?))?;
    report_degraded(&topic_model);
    let metrics = clock.stage("metrics", || {
        score_topics(BASELINE_MODEL, Some(cfg.seed), &topic_model.word_lists(), &docs, &cfg.metrics)
    })?;
    finish(cfg, Label { model: BASELINE_MODEL, prefix: "baseline_" }, clock, &topic_model, metrics, Vec::new(), false)
}

/// Scores an external topics file against the configured corpus.
pub fn cmd_evaluate(topics_file: &Path, cfg: &PipelineConfig) -> Result<MetricsReport> {
    cfg.validate(false)?;
    let topics = crate::formats::parse_topics(topics_file)?;
    if topics.is_empty() {
        return Err(GhtmError::Format { path: topics_file.into(), line: 0, message: "no topics".into() });
    }
    let (docs, _) = load_documents(cfg).stage("corpus")?;
    score_topics("external", None, &topics, &docs, &cfg.metrics).stage("metrics")
}
