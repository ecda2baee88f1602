use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cuegrade::corpus::Language;
use cuegrade::grading::Strategy;
use cuegrade::pipeline::{HeadChoice, Pipeline, PipelineConfig, StageSummary};
use cuegrade::Result;

/// Explainable short-answer grading over a work directory of artifacts.
#[derive(Parser)]
#[command(name = "cuegrade", version)]
struct Cli {
    /// TOML pipeline config; relative paths inside it resolve against its directory.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory (overrides the config and CUEGRADE_WORKDIR).
    #[arg(long, short, global = true)]
    workdir: Option<PathBuf>,
    /// Suppress the summary line and warnings.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(flatten)]
    inputs: Inputs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Inputs {
    /// Scored answers, one JSON record per line.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Rubric document keyed by question id.
    #[arg(long, global = true)]
    rubrics: Option<PathBuf>,
    /// Static `word v1 … vd` embedding table.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Per-token vectors exported by an external encoder.
    #[arg(long, global = true)]
    contextual_embeddings: Option<PathBuf>,
    /// CoNLL-style lemma/POS/dependency layer.
    #[arg(long, global = true)]
    pre_annotations: Option<PathBuf>,
    /// Keep only answers in this language.
    #[arg(long, global = true, value_enum)]
    language: Option<Lang>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lang {
    En,
    De,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeadArg {
    Summation,
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Hard,
    Fuzzy,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Machine,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize answers and rubric items.
    Annotate,
    /// Apply labeling functions and aggregate votes into silver labels.
    Silver,
    /// Extract cue spans and match them to rubric items.
    Spans {
        /// Tagger interchange file to use instead of the silver labels.
        #[arg(long)]
        tagger: Option<PathBuf>,
    },
    /// Build one scoring vector per answer.
    ScoreVectors {
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Fit one regression tree per question on the training split.
    TrainHead {
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_samples_leaf: Option<usize>,
    },
    /// Grade every answer and write explanations.
    Grade {
        #[arg(long, value_enum)]
        head: Option<HeadArg>,
    },
    /// Compute the evaluation report.
    Evaluate {
        #[arg(long, value_enum, default_value = "machine")]
        format: Format,
    },
    /// Print the markdown explanation of one graded answer.
    Inspect { answer_id: String },
    /// Run every stage from annotate to evaluate.
    Run {
        #[arg(long, value_enum)]
        head: Option<HeadArg>,
    },
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let i = &cli.inputs;
    let paths = &mut cfg.paths;
    for (slot, flag) in [
        (&mut paths.corpus, &i.corpus),
        (&mut paths.rubrics, &i.rubrics),
        (&mut paths.embeddings, &i.embeddings),
        (&mut paths.contextual_embeddings, &i.contextual_embeddings),
        (&mut paths.pre_annotations, &i.pre_annotations),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    if let Some(l) = i.language {
        cfg.language = Some(match l {
            Lang::En => Language::En,
            Lang::De => Language::De,
        });
    }
    let head = |h: HeadArg| match h {
        HeadArg::Summation => HeadChoice::Summation,
        HeadArg::Tree => HeadChoice::DecisionTree,
    };
    match &cli.command {
        Command::ScoreVectors { strategy: Some(s) } => {
            cfg.strategy = match s {
                StrategyArg::Hard => Strategy::Hard,
                StrategyArg::Fuzzy => Strategy::Fuzzy,
            }
        }
        Command::TrainHead {
            max_depth,
            min_samples_leaf,
        } => {
            if max_depth.is_some() {
                cfg.head.tree.max_depth = *max_depth;
            }
            if let Some(m) = min_samples_leaf {
                cfg.head.tree.min_samples_leaf = *m;
            }
        }
        Command::Grade { head: Some(h) } | Command::Run { head: Some(h) } => cfg.head.kind = head(*h),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(cli: &Cli, summary: &StageSummary, started: Instant) {
    if cli.quiet {
        return;
    }
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("{summary} elapsed={:.2}s", started.elapsed().as_secs_f64());
}

fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let cfg = config(cli)?;
    let workdir = cfg.workdir(cli.workdir.as_deref());
    let pipeline = Pipeline::new(cfg, workdir)?;
    let summary = match &cli.command {
        Command::Annotate => pipeline.annotate()?,
        Command::Silver => pipeline.silver()?,
        Command::Spans { tagger } => pipeline.spans(tagger.as_deref())?,
        Command::ScoreVectors { .. } => pipeline.score_vectors()?,
        Command::TrainHead { .. } => pipeline.train_head()?,
        Command::Grade { .. } => pipeline.grade()?,
        Command::Evaluate { format } => {
            let (summary, report) = pipeline.evaluate()?;
            match format {
                Format::Machine => println!("{}", report.to_json()?),
                Format::Table => print!("{}", report.render_table()),
            }
            summary
        }
        Command::Inspect { answer_id } => {
            print!("{}", pipeline.inspect(answer_id)?);
            return Ok(());
        }
        Command::Run { .. } => {
            for s in pipeline.run_all()? {
                report(cli, &s, started);
            }
            return Ok(());
        }
    };
    report(cli, &summary, started);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
