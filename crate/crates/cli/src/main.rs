use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use topiceval_cli::commands::{baseline_cmd, correlate_cmd, extract_cmd, gap_cmd, keywords_cmd, score_cmd, topics_cmd};
use topiceval_cli::pipeline::{StageExt, TOOL_VERSION};
use topiceval_cli::validate::Level;
use topiceval_cli::{fixture, run_pipeline, validate, RunConfig, Stage, StageError};

/// Evaluate topic models by agreement between topical words and reference keywords.
///
/// Exit codes: 0 success, 2 configuration or usage, 3 inputs (or `validate`
/// found errors), 4 extraction, 5 topic generation, 6 keyword suggestion,
/// 7 scoring, 8 baseline metrics, 9 correlation or gap, 10 writing outputs.
#[derive(Parser)]
#[command(name = "topiceval", version, about, long_about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set llm.retries=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads for scoring and in-flight LLM requests (0 = all cores).
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Directory for outputs.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Log more detail (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the top weighted words of every document.
    Extract {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        n_topical: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ask the LLM for reference keywords.
    Keywords {
        #[arg(long)]
        documents: Option<PathBuf>,
        /// Replay recorded responses instead of calling the endpoint.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Two-stage suggestion through collection topics.
        #[arg(long)]
        topic_aware: bool,
        /// Collection topics to use; generated when absent.
        #[arg(long)]
        topics: Option<PathBuf>,
    },
    /// Generate collection-level topics with the LLM.
    Topics {
        #[arg(long)]
        documents: Option<PathBuf>,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Score keywords against topical words.
    Score {
        #[arg(long)]
        keywords: PathBuf,
        /// Topical words JSONL; extracted from the model when absent.
        #[arg(long)]
        topical: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated metrics: overlap, synset, oa, ot.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        wordnet: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Topic diversity and NPMI coherence of the model.
    Baseline {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        reference_corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pearson correlations between metrics.
    Correlate {
        /// Score reports; one with --per-doc, at least three otherwise.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Correlate across the documents of a single report.
        #[arg(long)]
        per_doc: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Relative gap between LLM-based and human-based scores.
    Gap {
        #[arg(long)]
        llm: PathBuf,
        #[arg(long)]
        human: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check paths, dimensions and vocabulary coverage without running.
    Validate {
        /// Print diagnostics as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Extract, acquire keywords, score and report.
    Run,
    /// Write the seeded 20-document fixture corpus.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        seed: u64,
    },
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn set_path(slot: &mut Option<PathBuf>, value: Option<PathBuf>) {
    if let Some(v) = value {
        *slot = Some(absolute(&v));
    }
}

fn load_config(g: &Global) -> Result<RunConfig, StageError> {
    let mut cfg = RunConfig::load(g.config.as_deref(), &g.overrides).stage(Stage::Config)?;
    if let Some(p) = g.parallelism {
        cfg.parallelism = p;
        cfg.llm.parallelism = p.max(1);
    }
    if let Some(o) = &g.output_dir {
        cfg.output_dir = absolute(o);
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), StageError> {
    let mut cfg = load_config(&cli.global)?;
    match cli.command {
        Command::Extract { model, n_topical, out } => {
            set_path(&mut cfg.paths.model, model);
            if let Some(n) = n_topical {
                cfg.n_topical = n;
            }
            let p = extract_cmd(&cfg, out.as_deref())?;
            println!("{}", p.display());
        }
        Command::Keywords { documents, transcript, topic_aware, topics } => {
            set_path(&mut cfg.paths.documents, documents);
            set_path(&mut cfg.paths.transcript, transcript);
            set_path(&mut cfg.paths.topics, topics);
            cfg.topic_aware |= topic_aware;
            println!("{}", keywords_cmd(&cfg)?.display());
        }
        Command::Topics { documents, transcript } => {
            set_path(&mut cfg.paths.documents, documents);
            set_path(&mut cfg.paths.transcript, transcript);
            println!("{}", topics_cmd(&cfg)?.display());
        }
        Command::Score { keywords, topical, model, metrics, embeddings, wordnet, out } => {
            set_path(&mut cfg.paths.model, model);
            set_path(&mut cfg.paths.embeddings, embeddings);
            set_path(&mut cfg.paths.wordnet, wordnet);
            if !metrics.is_empty() {
                cfg.metrics = metrics;
            }
            println!("{}", score_cmd(&cfg, topical.as_deref(), &keywords, out.as_deref())?.display());
        }
        Command::Baseline { model, reference_corpus, out } => {
            set_path(&mut cfg.paths.model, model);
            set_path(&mut cfg.paths.reference_corpus, reference_corpus);
            println!("{}", baseline_cmd(&cfg, out.as_deref())?.display());
        }
        Command::Correlate { reports, per_doc, out, csv } => {
            correlate_cmd(&reports, per_doc, &out, csv.as_deref())?;
            println!("{}", out.display());
        }
        Command::Gap { llm, human, out } => {
            println!("{}", gap_cmd(&llm, &human, &out)?.display());
        }
        Command::Validate { json } => {
            let d = validate(&cfg);
            if json {
                println!("{}", serde_json::to_string_pretty(&d).expect("diagnostics serialize"));
            } else {
                for p in &d.problems {
                    println!("{p}");
                }
                if let Some(c) = &d.coverage {
                    let pct = |x: Option<f64>| x.map_or("not checked".to_string(), |v| format!("{:.1}%", 100.0 * v));
                    println!(
                        "coverage of {} topical words: embeddings {}, WordNet {}",
                        c.topical_words,
                        pct(c.embeddings),
                        pct(c.wordnet)
                    );
                }
                if d.problems.is_empty() {
                    println!("ok");
                }
            }
            if d.has_errors() {
                let n = d.problems.iter().filter(|p| p.level == Level::Error).count();
                return Err(anyhow::anyhow!("{n} error(s) found")).stage(Stage::Input);
            }
        }
        Command::Run => {
            let outcome = run_pipeline(&cfg)?;
            for (metric, agg) in &outcome.report.aggregates {
                println!("{metric}\tmean {:.6}\tstd {:.6}\tn {}", agg.mean, agg.std, agg.count);
            }
            for (metric, v) in &outcome.report.corpus {
                println!("{metric}\t{v:.6}");
            }
            println!("report written to {}", outcome.output_dir.join("report.json").display());
        }
        Command::Fixture { out, seed } => {
            fixture::write_corpus20(&out, seed).stage(Stage::Output)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    log::debug!("{TOOL_VERSION}");
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
