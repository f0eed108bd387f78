//! Command-line surface and HTTP service for the `recog` recommender.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod serve;
pub mod settings;

use clap::{Parser, Subcommand};

pub use error::{CliError, ErrorKind};
pub use settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "recog", version, about = "Hybrid playlist recommender")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a planted-category corpus and song features.
    Synth,
    /// Validate a playlist file (and optional features) into the artifact layout.
    Ingest,
    /// Split the corpus and build the playlist and song graphs.
    BuildGraphs,
    /// Fit the factor model.
    Train,
    /// Score a model or baseline on generated queries.
    Evaluate,
    /// Recommend songs for a set of seed songs.
    Recommend,
    /// Answer recommendation requests over HTTP.
    Serve,
}

/// Flags override the config file, which overrides defaults.
pub fn resolve(flags: Settings) -> Result<Settings, CliError> {
    match &flags.config {
        Some(path) => Ok(Settings::from_file(path)?.overlay(flags)),
        None => Ok(flags),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let s = resolve(cli.settings)?;
    match cli.command {
        Command::Synth => commands::synth(&s),
        Command::Ingest => commands::ingest(&s),
        Command::BuildGraphs => commands::build_graphs(&s),
        Command::Train => commands::train(&s),
        Command::Evaluate => commands::evaluate_cmd(&s),
        Command::Recommend => commands::recommend_cmd(&s),
        Command::Serve => {
            let path = s.input(&s.model, "model", settings::MODEL_FILE)?;
            let service = commands::Service::load(&path, &s)?;
            serve::serve(service, s.host.as_deref().unwrap_or("127.0.0.1"), s.port.unwrap_or(8080))
        }
    }
}
