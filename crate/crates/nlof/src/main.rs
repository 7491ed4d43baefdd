//! Command-line front end for the NLOF analysis pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use nlof::flow_model::{self, FlowFormat, FlowRecord};
use nlof::netsim::{self, GeneratedScenario, ScenarioSpec};
use nlof::pipeline::{self, PipelineParams, ReportFormat};
use nlof::topology::{self, LinkId, Topology};

#[derive(Parser)]
#[command(
    name = "nlof",
    about = "Localize network link soft-failures from flow records via per-link outlier scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score links from existing flow records and a topology
    Analyze(AnalyzeArgs),
    /// Generate a synthetic scenario (flows, topology, ground truth)
    Simulate(SimulateArgs),
    /// Simulate a scenario and immediately analyze it
    Run(RunArgs),
    /// Report the rank of each ground-truth errored link in a report
    ScoreEval(ScoreEvalArgs),
}

/// Parameters shared by the analysis commands. Values not given on the
/// command line fall back to the `--config` file, then to defaults;
/// `eps` has no default.
#[derive(Args, Clone)]
struct ParamArgs {
    /// DBSCAN neighborhood radius, bits/second (required; no default)
    #[arg(long)]
    eps: Option<f64>,
    /// DBSCAN core-point threshold
    #[arg(long)]
    min_samples: Option<usize>,
    /// Maximum relative degradation within one throughput class
    #[arg(long)]
    tpr: Option<f64>,
    /// Relative tolerance above a class maximum for noise assignment
    #[arg(long)]
    tpdev: Option<f64>,
    /// k-means cluster count for the per-class normal point
    #[arg(long)]
    k: Option<usize>,
    /// FOF above this (strict) marks a flow as an outlier
    #[arg(long)]
    fof_threshold: Option<f64>,
    /// JSON config file; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Report format
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: ReportFormat,
    /// Report path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-flow cluster/FOF assignments next to the report
    #[arg(long)]
    emit_intermediates: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Flow records (CSV, or JSON-lines with a .jsonl extension)
    #[arg(long)]
    flows: Option<PathBuf>,
    /// Topology JSON
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Scenario spec (mutually exclusive with --flows/--topology)
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario spec JSON
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the spec's random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for flows.csv, topology.json, ground_truth.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// JSON config file; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario spec JSON
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Mutually exclusive with --scenario
    #[arg(long)]
    flows: Option<PathBuf>,
    /// Mutually exclusive with --scenario
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Overrides the spec's random seed
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScoreEvalArgs {
    /// Ranked report (CSV or JSON, as emitted by analyze/run)
    #[arg(long)]
    report: PathBuf,
    /// Ground-truth JSON listing errored links
    #[arg(long)]
    ground_truth: PathBuf,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    match s {
        "csv" => Ok(ReportFormat::Csv),
        "json" => Ok(ReportFormat::Json),
        other => Err(format!("unknown format `{other}` (expected csv or json)")),
    }
}

/// Optional-field mirror of the CLI parameters for `--config` files.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    eps: Option<f64>,
    min_samples: Option<usize>,
    tpr: Option<f64>,
    tpdev: Option<f64>,
    k: Option<usize>,
    fof_threshold: Option<f64>,
    flows: Option<PathBuf>,
    topology: Option<PathBuf>,
    scenario: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = read_input("config", path)?;
    serde_json::from_str(&text).with_context(|| format!("config: invalid JSON in {}", path.display()))
}

fn resolve_params(args: &ParamArgs) -> Result<PipelineParams> {
    let file = load_config(args.config.as_deref())?;
    let eps = args
        .eps
        .or(file.eps)
        .ok_or_else(|| anyhow!("config: eps is required (it carries bits/second units and has no default)"))?;
    let params = PipelineParams {
        eps,
        min_samples: args.min_samples.or(file.min_samples).unwrap_or(50),
        tpr: args.tpr.or(file.tpr).unwrap_or(0.3),
        tpdev: args.tpdev.or(file.tpdev).unwrap_or(0.1),
        k: args.k.or(file.k).unwrap_or(2),
        fof_threshold: args.fof_threshold.or(file.fof_threshold).unwrap_or(0.1),
    };
    let violations = params.violations();
    if !violations.is_empty() {
        bail!("config: {}", violations.join("; "));
    }
    Ok(params)
}

fn read_input(stage: &str, path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            anyhow!("{stage}: file not found: {}", path.display())
        } else {
            anyhow!("{stage}: {}: {e}", path.display())
        }
    })
}

fn flow_format_for(path: &Path) -> FlowFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("ndjson") => FlowFormat::JsonLines,
        _ => FlowFormat::Csv,
    }
}

fn load_flows(path: &Path) -> Result<Vec<FlowRecord>> {
    let text = read_input("flows", path)?;
    flow_model::parse_flow_records(text.as_bytes(), flow_format_for(path))
        .with_context(|| format!("flows: failed to parse {}", path.display()))
}

fn load_topology_file(path: &Path) -> Result<Topology> {
    let text = read_input("topology", path)?;
    topology::load_topology(text.as_bytes())
        .with_context(|| format!("topology: failed to load {}", path.display()))
}

fn load_scenario(path: &Path, seed_override: Option<u64>) -> Result<ScenarioSpec> {
    let text = read_input("scenario", path)?;
    let mut spec = ScenarioSpec::from_reader(text.as_bytes())
        .with_context(|| format!("scenario: failed to load {}", path.display()))?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    Ok(spec)
}

/// Exactly one input source: either flows+topology or a scenario spec.
fn check_exclusive(
    flows: &Option<PathBuf>,
    topo: &Option<PathBuf>,
    scenario: &Option<PathBuf>,
    config: &ConfigFile,
) -> Result<()> {
    let has_files =
        flows.is_some() || topo.is_some() || config.flows.is_some() || config.topology.is_some();
    let has_scenario = scenario.is_some() || config.scenario.is_some();
    if has_files && has_scenario {
        bail!("config: exactly one input source: give --flows/--topology or --scenario, not both");
    }
    if !has_files && !has_scenario {
        bail!("config: exactly one input source: give --flows/--topology or --scenario");
    }
    Ok(())
}

fn analyze_and_report(
    flows: &[FlowRecord],
    topo: &Topology,
    params: &PipelineParams,
    output: &OutputArgs,
) -> Result<()> {
    let result = pipeline::run_pipeline(flows, topo, params)?;
    let report = pipeline::render_report(&result.ranked, output.format);
    let intermediates = if output.emit_intermediates {
        let mut text = serde_json::to_string_pretty(&result.assignments())
            .expect("assignments serialize");
        text.push('\n');
        Some(text)
    } else {
        None
    };
    // Everything is computed before anything is written, so a failed
    // stage never leaves a partial report behind.
    match &output.out {
        Some(path) => {
            fs::write(path, report)
                .with_context(|| format!("report: cannot write {}", path.display()))?;
            if let Some(text) = intermediates {
                let side = intermediates_path(path);
                fs::write(&side, text)
                    .with_context(|| format!("report: cannot write {}", side.display()))?;
            }
        }
        None => {
            print!("{report}");
            if let Some(text) = intermediates {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn intermediates_path(report: &Path) -> PathBuf {
    let mut name = report.file_name().unwrap_or_default().to_os_string();
    name.push(".intermediates.json");
    report.with_file_name(name)
}

fn ground_truth_json(links: &[LinkId]) -> String {
    #[derive(serde::Serialize)]
    struct Gt<'a> {
        errored_links: Vec<[&'a str; 2]>,
    }
    let gt = Gt {
        errored_links: links.iter().map(|l| [l.0.as_str(), l.1.as_str()]).collect(),
    };
    let mut text = serde_json::to_string_pretty(&gt).expect("ground truth serializes");
    text.push('\n');
    text
}

fn write_scenario_outputs(dir: &Path, generated: &GeneratedScenario) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("simulate: cannot create {}", dir.display()))?;
    let mut flows_csv = Vec::new();
    flow_model::write_flow_records(&mut flows_csv, &generated.flows, FlowFormat::Csv)
        .context("simulate: cannot serialize flows")?;
    fs::write(dir.join("flows.csv"), flows_csv)
        .with_context(|| format!("simulate: cannot write {}", dir.join("flows.csv").display()))?;
    fs::write(
        dir.join("topology.json"),
        topology::topology_to_json(&generated.topology),
    )
    .context("simulate: cannot write topology.json")?;
    fs::write(
        dir.join("ground_truth.json"),
        ground_truth_json(&generated.ground_truth),
    )
    .context("simulate: cannot write ground_truth.json")?;
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let config = load_config(args.params.config.as_deref())?;
    check_exclusive(&args.flows, &args.topology, &args.scenario, &config)?;
    if args.scenario.is_some() || config.scenario.is_some() {
        bail!("config: analyze takes --flows/--topology; use `run` for a scenario spec");
    }
    let flows_path = args
        .flows
        .clone()
        .or(config.flows.clone())
        .ok_or_else(|| anyhow!("flows: no input path given"))?;
    let topo_path = args
        .topology
        .clone()
        .or(config.topology.clone())
        .ok_or_else(|| anyhow!("topology: no input path given"))?;
    let params = resolve_params(&args.params)?;
    let flows = load_flows(&flows_path)?;
    let topo = load_topology_file(&topo_path)?;
    analyze_and_report(&flows, &topo, &params, &args.output)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let path = args
        .scenario
        .clone()
        .or(config.scenario.clone())
        .ok_or_else(|| anyhow!("scenario: no input path given"))?;
    let spec = load_scenario(&path, args.seed)?;
    let generated = netsim::generate_scenario(&spec).context("simulate")?;
    write_scenario_outputs(&args.out, &generated)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = load_config(args.params.config.as_deref())?;
    check_exclusive(&args.flows, &args.topology, &args.scenario, &config)?;
    let params = resolve_params(&args.params)?;
    if let Some(path) = args.scenario.clone().or(config.scenario.clone()) {
        let spec = load_scenario(&path, args.seed)?;
        let generated = netsim::generate_scenario(&spec).context("simulate")?;
        analyze_and_report(&generated.flows, &generated.topology, &params, &args.output)
    } else {
        let flows_path = args
            .flows
            .clone()
            .or(config.flows.clone())
            .ok_or_else(|| anyhow!("flows: no input path given"))?;
        let topo_path = args
            .topology
            .clone()
            .or(config.topology.clone())
            .ok_or_else(|| anyhow!("topology: no input path given"))?;
        let flows = load_flows(&flows_path)?;
        let topo = load_topology_file(&topo_path)?;
        analyze_and_report(&flows, &topo, &params, &args.output)
    }
}

fn cmd_score_eval(args: ScoreEvalArgs) -> Result<()> {
    let report_text = read_input("report", &args.report)?;
    let ranked = parse_report_links(&args.report, &report_text)?;
    let gt_text = read_input("ground-truth", &args.ground_truth)?;
    #[derive(Deserialize)]
    struct Gt {
        errored_links: Vec<[String; 2]>,
    }
    let gt: Gt = serde_json::from_str(&gt_text)
        .with_context(|| format!("ground-truth: invalid JSON in {}", args.ground_truth.display()))?;

    for pair in &gt.errored_links {
        let link = LinkId::new(&pair[0], &pair[1]);
        match ranked.iter().position(|l| *l == link) {
            Some(pos) => println!("{link} rank {} of {}", pos + 1, ranked.len()),
            None => println!("{link} not present in report"),
        }
    }
    Ok(())
}

fn parse_report_links(path: &Path, text: &str) -> Result<Vec<LinkId>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        #[derive(Deserialize)]
        struct Row {
            link_a: String,
            link_b: String,
        }
        let rows: Vec<Row> = serde_json::from_str(text)
            .with_context(|| format!("report: invalid JSON in {}", path.display()))?;
        Ok(rows.iter().map(|r| LinkId::new(&r.link_a, &r.link_b)).collect())
    } else {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
                bail!("report: malformed CSV row at line {}", i + 1);
            };
            out.push(LinkId::new(a, b));
        }
        Ok(out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Run(args) => cmd_run(args),
        Command::ScoreEval(args) => cmd_score_eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
