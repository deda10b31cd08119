//! `eunit`: evidence-unit construction and retrieval evaluation from the
//! command line.

mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eu_core::eval::RetrievalScope;
use eu_core::ingest::InputFormat;
use eu_core::synthetic::DEFAULT_SEED;

use commands::{Chunking, EvalArgs, RunAllArgs};
use config::{GlobalArgs, Settings};
use error::CliError;

#[derive(Parser)]
#[command(name = "eunit", version, about = "Build evidence units from parsed document layouts and evaluate retrieval over them")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

fn parse_format(s: &str) -> Result<InputFormat, String> {
    s.parse().map_err(|e: eu_core::error::IngestError| e.to_string())
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Scope {
    Corpus,
    Page,
}

impl From<Scope> for RetrievalScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Corpus => RetrievalScope::Corpus,
            Scope::Page => RetrievalScope::Page,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Normalize parser output into elements with canonical roles.
    Normalize {
        #[arg(long)]
        input: PathBuf,
        /// canonical, gt, mineru or docling
        #[arg(long, value_parser = parse_format)]
        format: Option<InputFormat>,
        /// Label table name; defaults to the format's.
        #[arg(long)]
        parser: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build evidence units from a normalized elements file.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the restoration and validation rules after construction.
        #[arg(long)]
        validate: bool,
        /// Exit with status 3 if any page violates an invariant.
        #[arg(long)]
        strict_invariants: bool,
    },
    /// Apply the restoration and validation rules to a build file.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict_invariants: bool,
    },
    /// Compare unit footprints across tracks.
    Footprint {
        /// `name=path,...`; each path is an eus.json or a build directory.
        #[arg(long)]
        tracks: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score element and unit chunking on QA pairs.
    Eval {
        /// Build file.
        #[arg(long)]
        input: PathBuf,
        /// QA pairs file.
        #[arg(long, conflicts_with = "generate_qa")]
        qa: Option<PathBuf>,
        /// Generate QA pairs from the build's elements.
        #[arg(long)]
        generate_qa: bool,
        /// strict or fair
        #[arg(long)]
        protocol: Option<String>,
        /// Comma-separated K values, e.g. 1,2,3,5.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
        #[arg(long, value_enum, default_value = "both")]
        chunks: Chunking,
        #[arg(long, value_enum, default_value = "corpus")]
        scope: Scope,
        #[arg(long, default_value = "gt")]
        track: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the decision rule chain as Cypher.
    ExportGraph {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic corpus in the canonical page format.
    Synthetic {
        #[arg(long, default_value_t = 24)]
        pages: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Normalize, build, validate, evaluate (both protocols) and export.
    RunAll {
        /// Parser output; omit to use the synthetic corpus.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<InputFormat>,
        #[arg(long)]
        parser: Option<String>,
        /// Synthetic corpus size when no input is given.
        #[arg(long, default_value_t = 24)]
        synthetic: usize,
        /// Comma-separated K values, e.g. 1,2,3,5.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
        #[arg(long, value_enum, default_value = "corpus")]
        scope: Scope,
        #[arg(long)]
        strict_invariants: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let s = Settings::resolve(&cli.global)?;
    match cli.command {
        Command::Normalize {
            input,
            format,
            parser,
            out,
        } => {
            let format = s.format(format);
            let parser = s.parser(parser.as_ref(), format);
            commands::cmd_normalize(&s, &input, format, &parser, &s.out_dir(out.as_ref()))
        }
        Command::Build {
            input,
            out,
            validate,
            strict_invariants,
        } => commands::cmd_build(&s, &input, &s.out_dir(out.as_ref()), validate, strict_invariants),
        Command::Validate {
            input,
            out,
            strict_invariants,
        } => commands::cmd_validate(&s, &input, &s.out_dir(out.as_ref()), strict_invariants),
        Command::Footprint { tracks, out } => commands::cmd_footprint(&tracks, &s.out_dir(out.as_ref())),
        Command::Eval {
            input,
            qa,
            generate_qa,
            protocol,
            ks,
            chunks,
            scope,
            track,
            out,
        } => {
            let args = EvalArgs {
                qa: qa.as_deref(),
                generate_qa,
                protocol: s.protocol(protocol.as_ref())?,
                ks: s.ks(ks),
                chunks,
                scope: scope.into(),
                track,
            };
            commands::cmd_eval(&s, &input, &args, &s.out_dir(out.as_ref()))
        }
        Command::ExportGraph { out } => commands::cmd_export_graph(&s, &s.out_dir(out.as_ref())),
        Command::Synthetic { pages, seed, out } => commands::cmd_synthetic(pages, seed, &out),
        Command::RunAll {
            input,
            format,
            parser,
            synthetic,
            ks,
            scope,
            strict_invariants,
            out,
        } => {
            let (raws, format) = match &input {
                Some(path) => {
                    let format = s.format(format);
                    (commands::load_raw(path, format)?, format)
                }
                None => {
                    if synthetic == 0 {
                        return Err(CliError::Input("--synthetic must be at least 1".into()));
                    }
                    (eu_core::synthetic::synthetic_corpus(synthetic, DEFAULT_SEED), InputFormat::Canonical)
                }
            };
            let default_parser = if input.is_some() { format.parser_name() } else { "gt" };
            let parser = parser
                .or_else(|| s.config.parser.clone())
                .unwrap_or_else(|| default_parser.to_string());
            let args = RunAllArgs {
                raws,
                format,
                parser: &parser,
                ks: s.ks(ks),
                scope: scope.into(),
                strict: strict_invariants,
            };
            commands::cmd_run_all(&s, args, &s.out_dir(out.as_ref()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
