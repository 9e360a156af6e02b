//! Command-line driver: dataset generation, training, evaluation, trace
//! emission, the question-mix experiment, the symbolic oracle, and the
//! gradient audit.
//!
//! Configuration precedence is flags over file over preset defaults: start
//! from `--preset`, layer `--config FILE` (plain `key = value` lines) on
//! top, then apply each `--set KEY=VALUE` in order.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scaffold::data::{all_candidates, generate_dialogs, kb_file_text, serialize_dialogs, DialogSpec};
use scaffold::environment::{
    generate_corpus, oracle_answer, parse_question_text, read_corpus, write_corpus, CorpusSpec,
};
use scaffold::harness::{
    emit_trace, evaluate, full_forward_grad_report, load_checkpoint, run_human_fraction,
    save_checkpoint, train, train_lstm_baseline, RunConfig, TaskData, Track, Variant,
};
use scaffold::{Error, Result};

#[derive(Parser)]
#[command(name = "scaffold", version, about = "Teacher-student training for text reasoning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Configuration layering shared by the commands that build a run.
#[derive(Args)]
struct ConfigArgs {
    /// Starting preset: desk-travel, paper-travel, or desk-dialog.
    #[arg(long, default_value = "desk-travel")]
    preset: String,
    /// Plain-text `key = value` configuration file applied over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single `KEY=VALUE` override applied last; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig> {
        let mut cfg = match self.preset.as_str() {
            "desk-travel" => RunConfig::desk_travel(),
            "paper-travel" => RunConfig::paper_travel(),
            "desk-dialog" => RunConfig::desk_dialog(),
            other => {
                return Err(Error::Contract(format!(
                    "unknown preset {other:?}; expected desk-travel, paper-travel, or desk-dialog"
                )))
            }
        };
        if let Some(path) = &self.config {
            cfg = RunConfig::from_file(path, cfg)?;
        }
        for pair in &self.set {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::Contract(format!("--set expects KEY=VALUE, got {pair:?}"))
            })?;
            cfg.apply(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset and write it under a directory.
    GenData {
        /// travel-log or dialog.
        #[arg(long, default_value = "travel-log")]
        track: String,
        /// Attraction count for the travel track.
        #[arg(long, default_value_t = 5)]
        attractions: usize,
        /// Logs or dialogs to generate.
        #[arg(long, default_value_t = 300)]
        count: usize,
        /// Walk-length cap for the travel track.
        #[arg(long, default_value_t = 12)]
        max_moves: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train per configuration; writes checkpoint, metrics, and the
    /// effective configuration under the output directory.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy test error of a saved checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Per-sentence inference table for one test episode, to stdout.
    Trace {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Test-set episode index.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Sweep the live-question share on the dialog track and report test
    /// error per setting.
    ExperimentHumanFraction {
        #[command(flatten)]
        config: ConfigArgs,
        /// Percentages of live exchanges to train on.
        #[arg(long, value_delimiter = ',', default_value = "10,25,50,75,100")]
        fractions: Vec<u8>,
    },
    /// Replay a travel log symbolically and answer a question about it.
    Oracle {
        /// Corpus file written by gen-data.
        #[arg(long)]
        data: PathBuf,
        /// Log index within the corpus.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Question text; defaults to the log's own final question.
        #[arg(long)]
        question: Option<String>,
    },
    /// Compare analytic gradients of the full network against central
    /// finite differences, one report per seed.
    GradCheck {
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 8)]
        d: usize,
        #[arg(long, default_value_t = 5)]
        sentence_len: usize,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[arg(long, default_value_t = 9)]
        k: usize,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn pct(x: f64) -> f64 {
    x * 100.0
}

fn gen_data(
    track: &str,
    attractions: usize,
    count: usize,
    max_moves: usize,
    seed: u64,
    out: &PathBuf,
) -> Result<()> {
    fs::create_dir_all(out)?;
    match Track::parse(track)? {
        Track::TravelLog => {
            let corpus = generate_corpus(&CorpusSpec {
                n_attractions: attractions,
                n_logs: count,
                max_moves,
                seed,
            })?;
            let path = out.join("logs.txt");
            write_corpus(&path, &corpus)?;
            println!(
                "wrote {} logs ({} attractions, seed {}) to {}",
                corpus.logs.len(),
                attractions,
                seed,
                path.display()
            );
        }
        Track::Dialog => {
            let dialogs = generate_dialogs(DialogSpec {
                n_dialogs: count,
                seed,
            });
            fs::write(out.join("dialogs.txt"), serialize_dialogs(&dialogs))?;
            fs::write(out.join("candidates.txt"), all_candidates().to_lines())?;
            fs::write(out.join("kb.txt"), kb_file_text())?;
            println!(
                "wrote {} dialogs (seed {}) plus candidates and kb to {}",
                dialogs.len(),
                seed,
                out.display()
            );
        }
    }
    Ok(())
}

fn run_train(config: &ConfigArgs, out: &PathBuf) -> Result<()> {
    let cfg = config.build()?;
    let data = TaskData::prepare(&cfg)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.kv"), cfg.to_kv_lines())?;
    if cfg.variant == Variant::LstmBaseline {
        let report = train_lstm_baseline(&cfg, &data)?;
        let line = format!(
            "baseline test error {:.2}% ({} wrong of {})",
            pct(report.error),
            report.wrong,
            report.n
        );
        fs::write(out.join("baseline.txt"), format!("{line}\n"))?;
        println!("{line}");
        return Ok(());
    }
    let outcome = train(&cfg, &data)?;
    outcome.metrics.write_file(out.join("metrics.tsv"))?;
    for r in &outcome.reports {
        match &r.diverged {
            Some(param) => println!(
                "restart {} lr {} diverged at step {} ({param})",
                r.restart, r.lr, r.steps
            ),
            None => println!(
                "restart {} lr {} val {:.2}% test {:.2}% ({} steps, {} episodes)",
                r.restart,
                r.lr,
                pct(r.val_error.unwrap_or(f64::NAN)),
                pct(r.test_error.unwrap_or(f64::NAN)),
                r.steps,
                r.episodes
            ),
        }
    }
    let Some(best) = outcome.best_restart else {
        return Err(Error::Contract("every restart diverged".into()));
    };
    let bundle = outcome.best.expect("a best restart implies a bundle");
    let path = out.join("checkpoint.sn");
    save_checkpoint(&path, &bundle)?;
    println!("best restart {best}; checkpoint at {}", path.display());
    Ok(())
}

fn run_oracle(data: &PathBuf, index: usize, question: Option<&str>) -> Result<()> {
    let corpus = read_corpus(data)?;
    let labels = corpus.labels();
    let log = corpus.logs.get(index).ok_or_else(|| {
        Error::Contract(format!(
            "log index {index} is out of range for {} logs",
            corpus.logs.len()
        ))
    })?;
    let text = question.unwrap_or(&log.question);
    let parsed = parse_question_text(text, &labels)?;
    let answer = oracle_answer(&log.facts, &parsed)?;
    match question {
        Some(_) => println!("{answer}"),
        None => {
            let verdict = if answer == log.answer { "match" } else { "MISMATCH" };
            println!("{answer}\t(gold {}: {verdict})", log.answer);
        }
    }
    Ok(())
}

fn run(cmd: &Cmd) -> Result<()> {
    match cmd {
        Cmd::GenData {
            track,
            attractions,
            count,
            max_moves,
            seed,
            out,
        } => gen_data(track, *attractions, *count, *max_moves, *seed, out),
        Cmd::Train { config, out } => run_train(config, out),
        Cmd::Eval { checkpoint } => {
            let bundle = load_checkpoint(checkpoint)?;
            let data = TaskData::prepare(&bundle.config)?;
            let report = evaluate(&bundle, &data)?;
            println!(
                "test error {:.2}% ({} wrong of {})",
                pct(report.error),
                report.wrong,
                report.n
            );
            Ok(())
        }
        Cmd::Trace { checkpoint, index } => {
            let bundle = load_checkpoint(checkpoint)?;
            let data = TaskData::prepare(&bundle.config)?;
            print!("{}", emit_trace(&bundle, &data, *index)?);
            Ok(())
        }
        Cmd::ExperimentHumanFraction { config, fractions } => {
            let cfg = config.build()?;
            let points = run_human_fraction(&cfg, fractions)?;
            println!("fraction\ttest_error\tlive_share\ttarget");
            for p in points {
                println!(
                    "{}\t{:.4}\t{:.4}\t{:.4}",
                    p.human_fraction, p.test_error, p.corpus_share, p.corpus_share_target
                );
            }
            Ok(())
        }
        Cmd::Oracle {
            data,
            index,
            question,
        } => run_oracle(data, *index, question.as_deref()),
        Cmd::GradCheck {
            seeds,
            d,
            sentence_len,
            n_max,
            k,
            h,
            tolerance,
        } => {
            let mut all_pass = true;
            for seed in 0..*seeds {
                let report =
                    full_forward_grad_report(seed, *d, *sentence_len, *n_max, *k, *h, *tolerance)?;
                println!(
                    "seed {seed}: max rel err {:.3e} over {} coordinates ({}) -> {}",
                    report.max_rel_err,
                    report.coords_checked,
                    report.worst_param,
                    if report.pass { "pass" } else { "FAIL" }
                );
                all_pass &= report.pass;
            }
            if !all_pass {
                return Err(Error::CheckInvalid(
                    "at least one seed exceeded the gradient tolerance".into(),
                ));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
