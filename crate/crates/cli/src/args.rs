use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "nlc", version, about = "Hybrid node-link community detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model for a fixed number of communities.
    Fit(FitArgs),
    /// Detect communities and report their description length.
    Detect(DetectArgs),
    /// Tabulate description lengths over a range of community counts.
    Sweep(SweepArgs),
    /// Score a stored structure.
    Eval(EvalArgs),
    /// Split the graph recursively into two parts.
    Bipartition(BipartitionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Gml,
    Edges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    Node,
    Link,
    Hybrid,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StopArg {
    Likelihood,
    Mdl,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Graph file (GML or whitespace-separated edge list).
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Treat every edge as weight 1.
    #[arg(long)]
    pub binarize: bool,
    /// Master seed; a random one is drawn and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmArgs {
    /// EM restarts per community count.
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// Relative log-likelihood change at which EM stops.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TypeArgs {
    /// Random starts of the type search.
    #[arg(long, default_value_t = 8)]
    pub type_restarts: usize,
    /// Sweep limit of the type search.
    #[arg(long, default_value_t = 50)]
    pub max_sweeps: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub em: EmArgs,
    /// Number of communities.
    #[arg(long)]
    pub c: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub em: EmArgs,
    #[command(flatten)]
    pub types: TypeArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::Hybrid)]
    pub scheme: SchemeArg,
    /// Fixed number of communities.
    #[arg(long, conflicts_with = "c_range")]
    pub c: Option<usize>,
    /// Inclusive range such as `2..6`; defaults to 2 up to min(n, 30).
    #[arg(long)]
    pub c_range: Option<String>,
    /// Include node and link membership matrices.
    #[arg(long)]
    pub full_memberships: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub em: EmArgs,
    #[command(flatten)]
    pub types: TypeArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::All)]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub c_range: Option<String>,
    /// Write a tab-separated table instead of JSON.
    #[arg(long)]
    pub tsv: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Structure written by `detect` or `bipartition`.
    #[arg(long)]
    pub structure: PathBuf,
    /// Reference communities, one `label community` pair per line.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Similar pairs, one `label label` pair per line.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BipartitionArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// EM restarts per split.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Minimum relative log-likelihood gain for a split.
    #[arg(long, default_value_t = 1e-4)]
    pub min_gain: f64,
    /// Parts smaller than this are not split.
    #[arg(long, default_value_t = 3)]
    pub min_size: usize,
    #[arg(long, value_enum, default_value_t = StopArg::Likelihood)]
    pub stop: StopArg,
    /// Repeat with this many consecutive seeds and report the leaf counts.
    #[arg(long)]
    pub stability: Option<usize>,
}

/// Parses `a..b` or `a..=b` (both inclusive) or a single count.
pub fn parse_c_range(text: &str) -> Result<Vec<usize>, String> {
    let text = text.trim();
    let bounds = text
        .split_once("..=")
        .or_else(|| text.split_once(".."))
        .map(|(a, b)| (a.trim(), b.trim()));
    let number = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("invalid community count {s:?} in range {text:?}"))
    };
    let (lo, hi) = match bounds {
        Some((a, b)) => (number(a)?, number(b)?),
        None => {
            let c = number(text)?;
            (c, c)
        }
    };
    if lo == 0 {
        return Err("community counts start at 1".into());
    }
    if lo > hi {
        return Err(format!("empty community-count range {text:?}"));
    }
    Ok((lo..=hi).collect())
}
