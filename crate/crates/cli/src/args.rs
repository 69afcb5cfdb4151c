use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vfac_core::harness::TransportKind;

#[derive(Debug, Parser)]
#[command(name = "vfac", version, about = "Multi-authority attribute-based encryption with outsourced decryption")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for all randomness. Runs are reproducible given the same seed,
    /// command line and data directory contents.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// How roles talk to each other inside this process: inproc or tcp
    /// (loopback sockets). Defaults to inproc.
    #[arg(long, global = true)]
    pub transport: Option<TransportKind>,
    /// Where keys, the owner's pool and the cloud state live.
    #[arg(long, global = true, env = "VFAC_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "table")]
    pub report: ReportFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create the data directory and the global parameters.
    Setup {
        #[arg(long, default_value_t = 128)]
        lambda: u32,
    },
    /// Attribute authority commands.
    #[command(subcommand)]
    Authority(AuthorityCommand),
    /// Data user commands.
    #[command(subcommand)]
    User(UserCommand),
    /// Data owner precomputation.
    #[command(subcommand)]
    Pool(PoolCommand),
    /// Encrypt a message under a policy and upload it; prints the ciphertext id.
    Encrypt {
        /// e.g. "(aa1:doctor AND aa2:cardiology) OR aa1:admin"
        #[arg(long)]
        policy: String,
        #[arg(long, conflicts_with = "input")]
        message: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Decrypt a stored ciphertext as a user.
    Decrypt {
        gid: String,
        ct_id: String,
        /// Write the plaintext here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Remove a user from the cloud's key list.
    Revoke { gid: String },
    /// Count operations and measure sizes for an AND policy of `rows` attributes.
    Bench {
        #[arg(long, default_value_t = 10)]
        rows: usize,
    },
    /// Declarative scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
}

#[derive(Debug, Subcommand)]
pub enum AuthorityCommand {
    /// Generate keys for a new authority.
    New { id: String },
}

#[derive(Debug, Subcommand)]
pub enum UserCommand {
    /// Create the user if needed and obtain keys for the given attributes.
    Enroll {
        gid: String,
        #[arg(required = true)]
        attributes: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum PoolCommand {
    /// Precompute `count` offline entries for each attribute.
    Fill {
        #[arg(required = true)]
        attributes: Vec<String>,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    /// Run a scenario file and check every expected outcome.
    Run { file: PathBuf },
}
