use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use thememap_cli::commands::{
    cmd_analyze, cmd_classify_primary, cmd_classify_secondary, cmd_ingest, cmd_report, write_demo_corpus,
};
use thememap_cli::config::RunConfig;
use thememap_cli::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "thememap", version, about = "Recursive LLM-assisted theme mapping of a document corpus")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use offline stub providers.
    #[arg(long, global = true)]
    stub: bool,
    /// Override the root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the corpus path.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the corpus and store a snapshot.
    Ingest,
    /// Run the recursive primary classification.
    ClassifyPrimary,
    /// Segment full texts and label segments.
    ClassifySecondary,
    /// Build graphs, lexical tables and alignment metrics.
    Analyze,
    /// Run every stage in order.
    Report,
    /// Write a synthetic corpus with planted themes.
    DemoCorpus {
        path: PathBuf,
        #[arg(long, default_value_t = 300)]
        docs: usize,
        #[arg(long, default_value_t = 1)]
        demo_seed: u64,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.stub {
        config.stub_mode = true;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.out {
        config.output_dir = o.clone();
    }
    if let Some(c) = &cli.corpus {
        config.corpus.path = c.clone();
    }
    if config.output_dir.as_os_str().is_empty() {
        config.output_dir = PathBuf::from("out");
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Command::DemoCorpus { path, docs, demo_seed } = &cli.command {
        write_demo_corpus(path, *docs, *demo_seed)?;
        println!("wrote {docs} documents to {}", path.display());
        return Ok(());
    }
    let config = resolve(cli)?;
    match &cli.command {
        Command::Ingest => println!("{}", cmd_ingest(&config)?),
        Command::ClassifyPrimary => println!("{}", cmd_classify_primary(&config)?),
        Command::ClassifySecondary => println!("{}", cmd_classify_secondary(&config)?),
        Command::Analyze => println!("{}", cmd_analyze(&config)?),
        Command::Report => {
            for r in cmd_report(&config)? {
                println!("{r}");
            }
        }
        Command::DemoCorpus { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
