use nlc_core::map_equation::MdlReport;
use nlc_core::model::RestartStats;
use nlc_core::selection::HierarchyNode;
use nlc_core::{CommunityType, IngestReport};
use serde::{Deserialize, Serialize};

use crate::args::InputFormat;

#[derive(Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

pub const TOOL: Tool = Tool {
    name: "nlc",
    version: env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub format: InputFormat,
    pub sha256: String,
    pub nodes: usize,
    pub edges: usize,
    pub binarized: bool,
    pub ingest: IngestReport,
}

/// Fields shared by every output file. `body` is flattened into the top level.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, B: Serialize> {
    pub tool: Tool,
    pub command: &'static str,
    pub config: &'a C,
    pub seed: u64,
    pub input: InputInfo,
    pub labels: &'a [String],
    #[serde(flatten)]
    pub body: B,
}

#[derive(Debug, Serialize)]
pub struct ParamRow {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct FitBody {
    pub c: usize,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stream: u64,
    pub restart_stats: RestartStats,
    pub trace: Vec<f64>,
    pub params: Vec<ParamRow>,
}

#[derive(Debug, Serialize)]
pub struct CommunityOut {
    pub id: usize,
    #[serde(rename = "type")]
    pub kind: CommunityType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub links: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Serialize)]
pub struct MembershipMatrices {
    pub node: Vec<Vec<f64>>,
    pub link: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct SweepRowOut {
    pub c: usize,
    pub scheme: String,
    pub mdl: Option<f64>,
    pub log_likelihood: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_communities: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DetectBody {
    pub c: usize,
    pub scheme: String,
    pub log_likelihood: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restart_stats: Option<RestartStats>,
    pub communities: Vec<CommunityOut>,
    pub background_nodes: Vec<usize>,
    pub background_links: Vec<[usize; 2]>,
    /// Node sets the description length is computed on.
    pub cover: Vec<Vec<usize>>,
    pub mdl: MdlReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRowOut>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memberships: Option<MembershipMatrices>,
}

#[derive(Debug, Serialize)]
pub struct SweepBody {
    pub rows: Vec<SweepRowOut>,
}

#[derive(Debug, Serialize)]
pub struct EnmiOut {
    pub reference: String,
    pub reference_communities: usize,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct EnrichmentOut {
    pub oracle: String,
    pub pairs: usize,
    pub skipped_pairs: usize,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct EvalBody {
    pub structure: String,
    pub structure_sha256: String,
    pub communities: usize,
    pub overlapping_nodes: usize,
    pub mdl: MdlReport,
    pub stored_mdl: Option<f64>,
    pub wac: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enmi: Option<EnmiOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enrichment: Option<EnrichmentOut>,
}

#[derive(Debug, Serialize)]
pub struct StabilityRun {
    pub seed: u64,
    pub leaves: usize,
}

#[derive(Debug, Serialize)]
pub struct BipartitionBody {
    pub tree: HierarchyNode,
    pub leaves: usize,
    pub depth: usize,
    pub cover: Vec<Vec<usize>>,
    pub mdl: Option<MdlReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<Vec<StabilityRun>>,
}

/// The parts of a stored structure that `eval` needs.
#[derive(Debug, Deserialize)]
pub struct StoredStructure {
    pub labels: Vec<String>,
    pub cover: Vec<Vec<usize>>,
    pub mdl: Option<StoredMdl>,
}

#[derive(Debug, Deserialize)]
pub struct StoredMdl {
    pub codelength: f64,
}
