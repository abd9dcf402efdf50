//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Strictness};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Pipeline};
use crate::lexicon::Lexicon;
use crate::preprocess::RawNote;
use crate::qa::encode::load_questions;
use crate::qa::{bundled_questions, evaluate, evaluate_predictions, parse_gold_jsonl, Encoder};
use crate::reconstruct::{reconstruct, Reconstruction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_STRICT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Jsonl,
}

#[derive(Debug, Parser)]
#[command(
    name = "consult-kg",
    version,
    about = "Knowledge graphs from consultation notes"
)]
pub struct Cli {
    /// Lexicon file; repeat to merge several. Replaces the bundled lexicon.
    #[arg(long, global = true)]
    pub lexicon: Vec<PathBuf>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "jsonl")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Notes JSONL in, one graph per note out.
    Extract { notes: PathBuf },
    /// Decode graphs back to text and score them against the notes.
    Reconstruct { graphs: PathBuf, notes: PathBuf },
    /// Answer questions from graphs, or score a predictions file.
    Qa {
        graphs: Option<PathBuf>,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        questions: Option<PathBuf>,
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Validate lexicon files (the configured lexicon when none given).
    LexiconCheck { paths: Vec<PathBuf> },
}

#[derive(Debug, Deserialize)]
struct NoteLine {
    note_id: String,
    text: String,
}

/// Reads a notes JSONL file. Bad lines come back as `(line, message)`.
pub fn read_notes(text: &str) -> (Vec<RawNote>, Vec<(usize, String)>) {
    let mut notes = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<NoteLine>(line)
            .map_err(|e| Error::Schema(e.to_string()))
            .and_then(|n| RawNote::new(n.note_id, n.text));
        match parsed {
            Ok(n) => notes.push(n),
            Err(e) => bad.push((i + 1, e.to_string())),
        }
    }
    (notes, bad)
}

/// Reads graphs written as JSONL or as a JSON array.
pub fn read_graphs(text: &str) -> Result<Vec<KnowledgeGraph>> {
    if text.trim_start().starts_with('[') {
        let values: Vec<serde_json::Value> =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        return values
            .iter()
            .map(|v| KnowledgeGraph::from_json(&v.to_string()))
            .collect();
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| KnowledgeGraph::from_json(l).map_err(|e| Error::Schema(format!("line {}: {e}", i + 1))))
        .collect()
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Renders records as a JSON array or one per line.
fn render(records: &[String], format: Format) -> String {
    match format {
        Format::Jsonl => records.iter().map(|r| format!("{r}\n")).collect(),
        Format::Json if records.is_empty() => "[]\n".into(),
        Format::Json => format!("[\n{}\n]\n", records.join(",\n")),
    }
}

/// Runs the pipeline over `notes` on `parallel` threads; results keep input order.
pub fn extract_all(
    notes: &[RawNote],
    lexicon: &Lexicon,
    parallel: usize,
) -> Result<Vec<Result<KnowledgeGraph>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let pipeline = Pipeline::new(lexicon);
    Ok(pool.install(|| notes.par_iter().map(|n| pipeline.extract(n)).collect()))
}

#[derive(Serialize)]
struct ReconstructionSummary<'a> {
    mean_sts: Option<f64>,
    notes: &'a [Reconstruction],
}

struct Context {
    config: Config,
    lexicon: Lexicon,
    format: Format,
}

struct Outcome {
    output: String,
    code: i32,
}

fn context(cli: &Cli) -> Result<Context> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if !cli.lexicon.is_empty() {
        config.lexicon = Some(cli.lexicon[0].clone());
        config.extra_lexicons = cli.lexicon[1..].to_vec();
    }
    if let Some(n) = cli.parallel {
        config.parallel = n;
    }
    if cli.strict {
        config.strictness = Strictness::Strict;
    }
    config.validate()?;
    let lexicon = config.load_lexicon()?;
    Ok(Context {
        config,
        lexicon,
        format: cli.format,
    })
}

fn cmd_extract(ctx: &Context, notes: &Path, err: &mut dyn Write) -> Result<Outcome> {
    let strict = ctx.config.strictness == Strictness::Strict;
    let (notes, bad) = read_notes(&read(notes)?);
    let mut failed = !bad.is_empty();
    for (line, msg) in &bad {
        let _ = writeln!(err, "line {line}: skipped: {msg}");
    }
    let results = extract_all(&notes, &ctx.lexicon, ctx.config.parallel)?;
    let mut records = Vec::new();
    for (note, result) in notes.iter().zip(results) {
        match result {
            Ok(g) => {
                for seg in &g.unparsed_segments {
                    let _ = writeln!(err, "{}: unparsed: {seg}", note.note_id);
                }
                if strict && !g.unparsed_segments.is_empty() {
                    failed = true;
                    continue;
                }
                records.push(g.to_json());
            }
            Err(e) => {
                failed = true;
                let _ = writeln!(err, "{}: {e}", note.note_id);
            }
        }
    }
    Ok(Outcome {
        output: render(&records, ctx.format),
        code: if strict && failed { EXIT_STRICT } else { EXIT_OK },
    })
}

fn cmd_reconstruct(ctx: &Context, graphs: &Path, notes: &Path, err: &mut dyn Write) -> Result<Outcome> {
    let graphs = read_graphs(&read(graphs)?)?;
    let (notes, bad) = read_notes(&read(notes)?);
    for (line, msg) in &bad {
        let _ = writeln!(err, "line {line}: skipped: {msg}");
    }
    let stop = ctx.config.load_stopwords()?;
    let pipeline = Pipeline::new(&ctx.lexicon);
    let mut rows = Vec::new();
    for g in &graphs {
        let Some(note) = notes.iter().find(|n| n.note_id == g.note_id) else {
            let _ = writeln!(err, "{}: no matching note", g.note_id);
            continue;
        };
        let source = match pipeline.analyze(note) {
            Ok(a) => a.parsed_text(),
            Err(e) => {
                let _ = writeln!(err, "{}: {e}", note.note_id);
                continue;
            }
        };
        rows.push(reconstruct(g, &source, &stop));
    }
    let mean = (!rows.is_empty()).then(|| rows.iter().map(|r| r.sts).sum::<f64>() / rows.len() as f64);
    let output = match ctx.format {
        Format::Json => {
            let summary = ReconstructionSummary {
                mean_sts: mean,
                notes: &rows,
            };
            format!(
                "{}\n",
                serde_json::to_string_pretty(&summary).expect("serialises")
            )
        }
        Format::Jsonl => {
            let mut lines: Vec<String> = rows
                .iter()
                .map(|r| serde_json::to_string(r).expect("serialises"))
                .collect();
            lines.push(serde_json::json!({ "mean_sts": mean }).to_string());
            render(&lines, Format::Jsonl)
        }
    };
    Ok(Outcome {
        output,
        code: EXIT_OK,
    })
}

fn cmd_qa(
    ctx: &Context,
    graphs: Option<&Path>,
    gold: &Path,
    questions: Option<&Path>,
    predictions: Option<&Path>,
    err: &mut dyn Write,
) -> Result<Outcome> {
    let questions = match questions {
        Some(p) => load_questions(p)?,
        None => bundled_questions(),
    };
    let gold = parse_gold_jsonl(&read(gold)?)?;
    let report = match (predictions, graphs) {
        (Some(p), _) => evaluate_predictions(&parse_gold_jsonl(&read(p)?)?, &gold, &questions),
        (None, Some(g)) => {
            let graphs = read_graphs(&read(g)?)?;
            let encoder = Encoder {
                lexicon: &ctx.lexicon,
                severity: ctx.config.load_severity()?,
                onset: ctx.config.load_onset()?,
            };
            evaluate(&graphs, &gold, &questions, &encoder)?
        }
        (None, None) => return Err(Error::Config("qa needs a graphs file or --predictions".into())),
    };
    for w in &report.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let output = match ctx.format {
        Format::Json => serde_json::to_string_pretty(&report),
        Format::Jsonl => serde_json::to_string(&report),
    }
    .expect("serialises");
    Ok(Outcome {
        output: format!("{output}\n"),
        code: EXIT_OK,
    })
}

fn cmd_lexicon_check(cli: &Cli, paths: &[PathBuf], out: &mut dyn Write) -> Result<Outcome> {
    let checked = if !paths.is_empty() {
        Lexicon::load_all(paths)
    } else if !cli.lexicon.is_empty() {
        Lexicon::load_all(&cli.lexicon)
    } else {
        let config = match &cli.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        config.load_lexicon()
    };
    match checked {
        Ok(lex) => Ok(Outcome {
            output: format!(
                "ok: {} facts, {} abbreviations\n",
                lex.facts().len(),
                lex.abbreviations().len()
            ),
            code: EXIT_OK,
        }),
        Err(e @ Error::MalformedLexicon { .. }) => {
            let _ = writeln!(out, "violation: {e}");
            Ok(Outcome {
                output: String::new(),
                code: EXIT_ERROR,
            })
        }
        Err(e) => Err(e),
    }
}

fn dispatch(cli: &Cli, err: &mut dyn Write) -> Result<Outcome> {
    if let Command::LexiconCheck { paths } = &cli.command {
        return cmd_lexicon_check(cli, paths, err);
    }
    let ctx = context(cli)?;
    match &cli.command {
        Command::Extract { notes } => cmd_extract(&ctx, notes, err),
        Command::Reconstruct { graphs, notes } => cmd_reconstruct(&ctx, graphs, notes, err),
        Command::Qa {
            graphs,
            gold,
            questions,
            predictions,
        } => cmd_qa(
            &ctx,
            graphs.as_deref(),
            gold,
            questions.as_deref(),
            predictions.as_deref(),
            err,
        ),
        Command::LexiconCheck { .. } => unreachable!("handled above"),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_STRICT } else { EXIT_OK };
        }
    };
    let outcome = match dispatch(&cli, err) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let written = match &cli.out {
        Some(p) => std::fs::write(p, &outcome.output).map_err(|e| Error::io(p, e)),
        None => out
            .write_all(outcome.output.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_ERROR;
    }
    outcome.code
}
