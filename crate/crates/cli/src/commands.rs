use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nlc_core::inference::{CommunityType, Cover, Memberships};
use nlc_core::metrics::{enmi, pair_enrichment, wac, ReferenceCover, SimilarityOracle};
use nlc_core::model::{fit_restarts, FitOptions};
use nlc_core::selection::{
    default_c_range, recursive_bipartition, resolve_scheme, select, sweep_c, BipartitionOptions, Scheme,
    SchemeResult, SelectionOptions, StopRule, SweepRow,
};
use nlc_core::type_search::TypeSearchOptions;
use nlc_core::{map_equation, parse_edge_list, parse_gml, Error, Graph, IngestReport, SolverOptions};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error as ThisError;

use crate::args::{
    parse_c_range, BipartitionArgs, Command, DetectArgs, EmArgs, EvalArgs, FitArgs, InputArgs, InputFormat,
    SchemeArg, StopArg, SweepArgs, TypeArgs,
};
use crate::output::*;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::InvalidArgument(_) | Error::TooManyCommunities { .. } => CliError::Usage(message),
            Error::Parse { .. } | Error::Gml(_) | Error::NodeOutOfRange { .. } => CliError::Input(message),
            _ => CliError::Numeric(message),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Fit(a) => run_fit(&a),
        Command::Detect(a) => run_detect(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::Eval(a) => run_eval(&a),
        Command::Bipartition(a) => run_bipartition(&a),
    }
}

struct Loaded {
    graph: Graph,
    info: InputInfo,
    seed: u64,
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn infer_format(path: &Path) -> InputFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("gml") => InputFormat::Gml,
        _ => InputFormat::Edges,
    }
}

fn load(input: &InputArgs) -> CliResult<Loaded> {
    let bytes = read_file(&input.input)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: not valid UTF-8", input.input.display())))?;
    let format = input.format.unwrap_or_else(|| infer_format(&input.input));
    let (graph, ingest): (Graph, IngestReport) = match format {
        InputFormat::Gml => parse_gml(&text)?,
        InputFormat::Edges => parse_edge_list(&text)?,
    };
    if graph.edge_count() == 0 {
        return Err(CliError::Input(format!("{}: graph has no edges", input.input.display())));
    }
    for w in &ingest.warnings {
        log::warn!("{w}");
    }
    let graph = if input.binarize { graph.binarized() } else { graph };
    let info = InputInfo {
        path: input.input.display().to_string(),
        format,
        sha256: sha256_hex(&bytes),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        binarized: input.binarize,
        ingest,
    };
    let seed = input.seed.unwrap_or_else(rand::random);
    Ok(Loaded { graph, info, seed })
}

fn emit(path: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| CliError::Input(format!("standard output: {e}")))
        }
    }
}

fn emit_json<C: Serialize, B: Serialize>(
    command: &'static str,
    config: &C,
    loaded: Loaded,
    body: B,
    output: Option<&PathBuf>,
) -> CliResult<()> {
    let labels = loaded.graph.labels().to_vec();
    let envelope = Envelope {
        tool: TOOL,
        command,
        config,
        seed: loaded.seed,
        input: loaded.info,
        labels: &labels,
        body,
    };
    let mut text = serde_json::to_string_pretty(&envelope).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    emit(output, &text)
}

fn fit_options(em: &EmArgs, seed: u64) -> CliResult<FitOptions> {
    if !(em.tol >= 0.0) {
        return Err(CliError::Usage("--tol must be non-negative".into()));
    }
    if em.max_iter == 0 || em.restarts == 0 {
        return Err(CliError::Usage("--max-iter and --restarts must be at least 1".into()));
    }
    Ok(FitOptions {
        tol: em.tol,
        max_iter: em.max_iter,
        seed,
    })
}

fn selection_options(em: &EmArgs, types: &TypeArgs, seed: u64) -> CliResult<SelectionOptions> {
    let type_search = TypeSearchOptions {
        max_sweeps: types.max_sweeps,
        restarts: types.type_restarts,
        ..TypeSearchOptions::default()
    };
    Ok(SelectionOptions {
        fit: fit_options(em, seed)?,
        restarts: em.restarts,
        type_search,
        solver: SolverOptions::default(),
    }
    .with_seed(seed))
}

fn c_values(range: Option<&str>, g: &Graph) -> CliResult<Vec<usize>> {
    let cs = match range {
        Some(text) => parse_c_range(text).map_err(CliError::Usage)?,
        None => default_c_range(g),
    };
    if cs.is_empty() {
        return Err(CliError::Usage("community-count range is empty".into()));
    }
    Ok(cs)
}

fn schemes(arg: SchemeArg) -> Vec<Scheme> {
    match arg {
        SchemeArg::Node => vec![Scheme::Node],
        SchemeArg::Link => vec![Scheme::Link],
        SchemeArg::Hybrid => vec![Scheme::Hybrid],
        SchemeArg::All => Scheme::ALL.to_vec(),
    }
}

fn run_fit(a: &FitArgs) -> CliResult<()> {
    if a.c == 0 {
        return Err(CliError::Usage("--c must be at least 1".into()));
    }
    let loaded = load(&a.input)?;
    let opts = fit_options(&a.em, loaded.seed)?;
    let (best, stats) = fit_restarts(&loaded.graph, a.c, &opts, a.em.restarts)?;
    let labels = loaded.graph.labels();
    let params = (0..loaded.graph.node_count())
        .map(|i| ParamRow {
            label: labels[i].clone(),
            values: best.params.row(i).to_vec(),
        })
        .collect();
    let body = FitBody {
        c: a.c,
        log_likelihood: best.log_likelihood,
        iterations: best.iterations,
        converged: best.converged,
        stream: best.stream,
        restart_stats: stats,
        trace: best.trace,
        params,
    };
    emit_json("fit", a, loaded, body, a.input.output.as_ref())
}

fn sweep_rows(rows: &[SweepRow], schemes: &[Scheme]) -> Vec<SweepRowOut> {
    let mut out = Vec::new();
    for row in rows {
        for &s in schemes {
            let result = row.scheme(s);
            out.push(SweepRowOut {
                c: row.c,
                scheme: s.to_string(),
                mdl: result.map(|r| r.report.codelength),
                log_likelihood: row.log_likelihood,
                link_communities: result.map(|r| r.structure.link_type_count()),
                error: row.error.clone(),
            });
        }
    }
    out
}

fn detect_body(
    g: &Graph,
    result: &SchemeResult,
    log_likelihood: f64,
    memberships: Option<&Memberships>,
) -> DetectBody {
    let h = &result.structure;
    let endpoints = |e: usize| {
        let edge = g.edge(e);
        [edge.source, edge.target]
    };
    let communities = h
        .types
        .iter()
        .enumerate()
        .map(|(k, &kind)| match kind {
            CommunityType::Node => CommunityOut {
                id: k,
                kind,
                members: Some(h.node_members[k].clone()),
                links: None,
            },
            CommunityType::Link => CommunityOut {
                id: k,
                kind,
                members: None,
                links: Some(h.link_members[k].iter().map(|&e| endpoints(e)).collect()),
            },
        })
        .collect();
    let memberships = memberships.map(|m| MembershipMatrices {
        node: (0..m.node_count()).map(|i| m.node(i).to_vec()).collect(),
        link: (0..m.edge_count()).map(|e| m.link(e).to_vec()).collect(),
    });
    DetectBody {
        c: h.community_count(),
        scheme: result.scheme.to_string(),
        log_likelihood,
        restart_stats: None,
        communities,
        background_nodes: h.background_nodes.clone(),
        background_links: h.background_links.iter().map(|&e| endpoints(e)).collect(),
        cover: result.cover.sets().to_vec(),
        mdl: result.report.clone(),
        sweep: None,
        memberships,
    }
}

fn run_detect(a: &DetectArgs) -> CliResult<()> {
    let scheme = match a.scheme {
        SchemeArg::Node => Scheme::Node,
        SchemeArg::Link => Scheme::Link,
        SchemeArg::Hybrid => Scheme::Hybrid,
        SchemeArg::All => return Err(CliError::Usage("detect needs a single scheme".into())),
    };
    if a.c == Some(0) {
        return Err(CliError::Usage("--c must be at least 1".into()));
    }
    let loaded = load(&a.input)?;
    let g = &loaded.graph;
    let opts = selection_options(&a.em, &a.types, loaded.seed)?;
    let body = match a.c {
        Some(c) => {
            let (best, stats) = fit_restarts(g, c, &opts.fit, opts.restarts)?;
            let m = Memberships::from_params(&best.params, g)?;
            let result = resolve_scheme(&m, g, scheme, &opts)?;
            let mut body = detect_body(g, &result, best.log_likelihood, a.full_memberships.then_some(&m));
            body.restart_stats = Some(stats);
            body
        }
        None => {
            let cs = c_values(a.c_range.as_deref(), g)?;
            let (selection, rows) = select(g, &cs, scheme, &opts)?;
            let mut body = detect_body(
                g,
                &selection.result,
                selection.log_likelihood,
                a.full_memberships.then_some(&selection.memberships),
            );
            body.restart_stats = rows
                .iter()
                .find(|r| r.c == selection.c)
                .and_then(|r| r.restart_stats.clone());
            body.sweep = Some(sweep_rows(&rows, &[scheme]));
            body
        }
    };
    emit_json("detect", a, loaded, body, a.input.output.as_ref())
}

fn run_sweep(a: &SweepArgs) -> CliResult<()> {
    let loaded = load(&a.input)?;
    let g = &loaded.graph;
    let cs = c_values(a.c_range.as_deref(), g)?;
    let opts = selection_options(&a.em, &a.types, loaded.seed)?;
    let schemes = schemes(a.scheme);
    let rows = sweep_c(g, &cs, &schemes, &opts)?;
    if rows.iter().all(SweepRow::failed) {
        return Err(Error::AllRowsFailed.into());
    }
    let out = sweep_rows(&rows, &schemes);
    if a.tsv {
        let number = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| format!("{v:.10}"));
        let mut text = String::from("c\tscheme\tmdl\tlog_likelihood\tlink_communities\tstatus\n");
        for r in &out {
            let status = match &r.error {
                Some(e) => format!("failed: {}", e.replace(['\t', '\n'], " ")),
                None => "ok".to_string(),
            };
            let links = r.link_communities.map_or_else(|| "NA".to_string(), |l| l.to_string());
            let _ = writeln!(
                text,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.c,
                r.scheme,
                number(r.mdl),
                number(r.log_likelihood),
                links,
                status
            );
        }
        return emit(a.input.output.as_ref(), &text);
    }
    emit_json("sweep", a, loaded, SweepBody { rows: out }, a.input.output.as_ref())
}

fn read_text(path: &Path) -> CliResult<String> {
    String::from_utf8(read_file(path)?).map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))
}

fn run_eval(a: &EvalArgs) -> CliResult<()> {
    let loaded = load(&a.input)?;
    let g = &loaded.graph;
    let raw = read_file(&a.structure)?;
    let stored: StoredStructure = serde_json::from_slice(&raw)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.structure.display())))?;
    if stored.labels != g.labels() {
        return Err(CliError::Input(format!(
            "{}: node labels do not match the input graph",
            a.structure.display()
        )));
    }
    let cover = Cover::new(g.node_count(), stored.cover)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.structure.display())))?;
    let report = map_equation(g, &cover, &SolverOptions::default())?;
    let communities = cover.without_empty();
    let wac = wac(g, communities.sets())?;

    let enmi = match &a.reference {
        Some(path) => {
            let reference = ReferenceCover::parse(&read_text(path)?, g)?;
            Some(EnmiOut {
                reference: path.display().to_string(),
                reference_communities: reference.names.len(),
                value: enmi(&cover, &reference.cover)?,
            })
        }
        None => None,
    };
    let enrichment = match &a.oracle {
        Some(path) => {
            let (oracle, skipped) = SimilarityOracle::parse(&read_text(path)?, g)?;
            Some(EnrichmentOut {
                oracle: path.display().to_string(),
                pairs: oracle.pair_count(),
                skipped_pairs: skipped,
                value: pair_enrichment(&cover, &oracle)?,
            })
        }
        None => None,
    };
    let body = EvalBody {
        structure: a.structure.display().to_string(),
        structure_sha256: sha256_hex(&raw),
        communities: communities.community_count(),
        overlapping_nodes: cover.overlapping_nodes(),
        mdl: report,
        stored_mdl: stored.mdl.map(|m| m.codelength),
        wac,
        enmi,
        enrichment,
    };
    emit_json("eval", a, loaded, body, a.input.output.as_ref())
}

fn run_bipartition(a: &BipartitionArgs) -> CliResult<()> {
    if a.restarts == 0 || a.max_iter == 0 {
        return Err(CliError::Usage("--restarts and --max-iter must be at least 1".into()));
    }
    if a.stability == Some(0) {
        return Err(CliError::Usage("--stability must be at least 1".into()));
    }
    let loaded = load(&a.input)?;
    let g = &loaded.graph;
    let options = |seed: u64| BipartitionOptions {
        fit: FitOptions {
            tol: a.tol,
            max_iter: a.max_iter,
            seed,
        },
        restarts: a.restarts,
        min_gain: a.min_gain,
        min_size: a.min_size,
        stop: match a.stop {
            StopArg::Likelihood => StopRule::Likelihood,
            StopArg::Mdl => StopRule::Mdl,
        },
        solver: SolverOptions::default(),
    };
    let (tree, cover) = recursive_bipartition(g, &options(loaded.seed))?;
    // the description length needs every node covered and a positive degree everywhere
    let mdl = if cover.sets().iter().map(Vec::len).sum::<usize>() == g.node_count()
        && g.degrees().iter().all(|&d| d > 0.0)
    {
        Some(map_equation(g, &cover, &SolverOptions::default())?)
    } else {
        None
    };
    let stability = match a.stability {
        Some(runs) => {
            let mut out = Vec::with_capacity(runs);
            for r in 0..runs as u64 {
                let seed = loaded.seed.wrapping_add(r);
                let (t, _) = recursive_bipartition(g, &options(seed))?;
                out.push(StabilityRun {
                    seed,
                    leaves: t.leaves().len(),
                });
            }
            Some(out)
        }
        None => None,
    };
    let body = BipartitionBody {
        leaves: tree.leaves().len(),
        depth: tree.depth(),
        cover: cover.sets().to_vec(),
        tree,
        mdl,
        stability,
    };
    emit_json("bipartition", a, loaded, body, a.input.output.as_ref())
}
