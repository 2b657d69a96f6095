//! Benchmark harness for `ksvd`: seeded matrix generation, method
//! comparison tables, triplet-quality series, rank reports and similarity
//! learning curves. Every output embeds the config that produced it, and
//! `replay` re-runs that config.

pub mod cli;
pub mod commands;
pub mod error;
pub mod methods;
pub mod report;

pub use cli::{Cli, Command, CommandConfig, Format, RunConfig};
pub use error::{BenchError, Result};

/// Resolves defaults into a full config.
pub fn resolve(global: &cli::GlobalArgs, command: CommandConfig) -> RunConfig {
    RunConfig {
        config_version: cli::CONFIG_VERSION,
        seed: global.seed,
        repeats: global.repeats,
        format: global.format.unwrap_or_else(|| command.default_format()),
        max_elems: global.max_elems,
        command,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let out = cli.global.out.as_deref();
    let command = match cli.command {
        Command::Replay(args) => {
            let cfg = report::extract_config(&args.file)?;
            return commands::execute(&cfg, out);
        }
        Command::Gen(a) => CommandConfig::Gen(a),
        Command::Rank(a) => CommandConfig::Rank(a),
        Command::Svd(a) => CommandConfig::Svd(a),
        Command::Compare(a) => CommandConfig::Compare(a),
        Command::Triplets(a) => CommandConfig::Triplets(a),
        Command::Rsl(a) => CommandConfig::Rsl(a),
    };
    let cfg = resolve(&cli.global, command);
    commands::execute(&cfg, out)
}
