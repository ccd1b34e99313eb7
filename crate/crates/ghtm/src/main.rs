use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ghtm::config::Overrides;
use ghtm::corpus_io::CorpusFormat;
use ghtm::{cmd_baseline, cmd_evaluate, cmd_run, GhtmError, PipelineConfig, RunReport};

/// Graph-refined embedding topic modeling.
#[derive(Parser)]
#[command(name = "ghtm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the GCN, factorize, extract and score topics.
    Run(Common),
    /// Classical NMF on TF-IDF with the same preprocessing and metrics.
    Baseline(Common),
    /// Score an existing topics file against a corpus.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Tab-separated topics file to score.
        #[arg(long)]
        topics_file: PathBuf,
        /// Reference corpus (overrides the config).
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of topics k.
    #[arg(long)]
    topics: Option<usize>,
    /// Words per topic T.
    #[arg(long)]
    top_words: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Corpus file format.
    #[arg(long, value_enum)]
    format: Option<CorpusFormat>,
    /// Leave the runtime out of the metrics report.
    #[arg(long)]
    deterministic_report: bool,
}

impl Common {
    fn load(&self) -> Result<PipelineConfig, GhtmError> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            topics: self.topics,
            top_words: self.top_words,
            out_dir: self.out_dir.clone(),
            format: self.format,
        });
        cfg.output.deterministic_report |= self.deterministic_report;
        Ok(cfg)
    }
}

fn summarize(r: &RunReport) {
    println!("{}", r.metrics.render().trim_end());
    println!("topics_file = {}", r.topics_path.display());
    for t in &r.stages {
        println!("stage.{} = {:.3}", t.stage, t.seconds);
    }
    if r.cache_hit {
        println!("gcn_cache = hit");
    }
}

fn execute(cli: Cli) -> Result<(), GhtmError> {
    match cli.command {
        Command::Run(c) => summarize(&cmd_run(&c.load()?)?),
        Command::Baseline(c) => summarize(&cmd_baseline(&c.load()?)?),
        Command::Evaluate { common, topics_file, corpus } => {
            let mut cfg = common.load()?;
            if let Some(p) = corpus {
                cfg.corpus.path = p;
            }
            let report = cmd_evaluate(&topics_file, &cfg)?;
            let text = report.render();
            print!("{text}");
            if let Some(dir) = &common.out_dir {
                std::fs::create_dir_all(dir).map_err(|e| GhtmError::io(dir, e))?;
                let path = dir.join("evaluate_metrics.txt");
                std::fs::write(&path, text).map_err(|e| GhtmError::io(path, e))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
