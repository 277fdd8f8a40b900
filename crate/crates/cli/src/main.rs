use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use flowminer::baseline::baseline;
use flowminer::dot::{flow_to_dot, patterns_to_dot};
use flowminer::eval::evaluate;
use flowminer::format::{parse_patterns, parse_traces, write_patterns, write_traces};
use flowminer::generate::{generate, AddressMode, GenConfig, GenMode};
use flowminer::slicing::{slice_set, NoAddressPolicy};
use flowminer::{mine, parse_flow_library, Causality, FlowSpec, GroundTruth, MinerConfig, TraceSet};

#[derive(Parser)]
#[command(name = "flowminer", version, about = "Mine message-flow patterns from concurrent traces")]
struct Cli {
    /// Worker threads for per-trace work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    SmNi,
    SmI,
    MmI,
}

#[derive(Clone, Copy, ValueEnum)]
enum CausalityArg {
    DestSrc,
    SrcDest,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Own,
    Broadcast,
    Drop,
}

impl From<PolicyArg> for NoAddressPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Own => NoAddressPolicy::OwnSlice,
            PolicyArg::Broadcast => NoAddressPolicy::Broadcast,
            PolicyArg::Drop => NoAddressPolicy::Drop,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic traces from the paths of a flow library.
    Generate {
        #[arg(long)]
        flows: PathBuf,
        #[arg(long, value_enum, default_value = "sm-ni")]
        mode: ModeArg,
        /// Instances of every ground-truth path per trace.
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 100)]
        traces: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_batch: usize,
        #[arg(long)]
        max_active: Option<usize>,
        /// Give every flow instance its own address.
        #[arg(long)]
        addresses: bool,
        #[arg(long, default_value_t = 64)]
        address_pool: usize,
        #[arg(short, long)]
        output: PathBuf,
        /// Metadata sidecar (JSON).
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Split traces into per-address sub-traces.
    Slice {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "own")]
        noaddr_policy: PolicyArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Mine chained patterns.
    Mine {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Mine the traces as given, without address slicing.
        #[arg(long)]
        no_slice: bool,
        #[arg(long, value_enum, default_value = "own")]
        noaddr_policy: PolicyArg,
        /// Confidence threshold. Values below 1 compare averaged confidence
        /// (experimental).
        #[arg(long, default_value_t = 1.0)]
        confidence: f64,
        #[arg(long, value_enum, default_value = "dest-src")]
        causality: CausalityArg,
        /// Disable the evidence-oriented chaining rule.
        #[arg(long)]
        no_rule4: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Mine alternating patterns and chain them.
    Baseline {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score a pattern file against the paths of a flow library.
    Eval {
        #[arg(long)]
        flows: PathBuf,
        #[arg(long)]
        patterns: PathBuf,
        /// Report (JSON).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Label in the summary table.
        #[arg(long, default_value = "flowminer")]
        tool: String,
    },
    /// Render a flow library or a pattern file as Graphviz.
    ExportDot {
        #[arg(long, conflicts_with = "patterns", required_unless_present = "patterns")]
        flows: Option<PathBuf>,
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_flows(path: &Path) -> Result<Vec<FlowSpec>> {
    parse_flow_library(&read(path)?).with_context(|| format!("{}", path.display()))
}

/// Trace files without headers are named after the file stem.
fn load_traces(paths: &[PathBuf]) -> Result<TraceSet> {
    let mut all = Vec::new();
    for path in paths {
        let stem = path.file_stem().map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
        let set = parse_traces(&read(path)?, &stem).with_context(|| format!("{}", path.display()))?;
        all.extend(set.traces);
    }
    Ok(TraceSet::new(all))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match cli.command {
        Command::Generate {
            flows,
            mode,
            instances,
            traces,
            seed,
            max_batch,
            max_active,
            addresses,
            address_pool,
            output,
            metadata,
        } => {
            let gt = GroundTruth::from_flows(&load_flows(&flows)?);
            let cfg = GenConfig {
                mode: match mode {
                    ModeArg::SmNi => GenMode::SmNi,
                    ModeArg::SmI => GenMode::SmI,
                    ModeArg::MmI => GenMode::MmI,
                },
                instances_per_pattern: instances,
                num_traces: traces,
                seed,
                max_batch,
                max_active,
                address_mode: if addresses { AddressMode::PerInstance } else { AddressMode::None },
                address_pool,
            };
            let (ts, meta) = generate(&gt, &cfg)?;
            write(&output, &write_traces(&ts))?;
            if let Some(path) = metadata {
                write(&path, &meta.to_json())?;
            }
        }
        Command::Slice {
            traces,
            noaddr_policy,
            output,
        } => {
            let ts = load_traces(&traces)?;
            write(&output, &write_traces(&slice_set(&ts, noaddr_policy.into())))?;
        }
        Command::Mine {
            traces,
            no_slice,
            noaddr_policy,
            confidence,
            causality,
            no_rule4,
            output,
        } => {
            if !(confidence > 0.0 && confidence <= 1.0) {
                bail!("--confidence must be in (0, 1], got {confidence}");
            }
            if confidence < 1.0 {
                eprintln!("warning: confidence below 1 uses averaged confidence (experimental)");
            }
            let ts = load_traces(&traces)?;
            let cfg = MinerConfig {
                slice: !no_slice,
                noaddr_policy: noaddr_policy.into(),
                threshold: confidence,
                causality: match causality {
                    CausalityArg::DestSrc => Causality::DestSrc,
                    CausalityArg::SrcDest => Causality::SrcDestLiteral,
                    CausalityArg::Off => Causality::Off,
                },
                evidence_rule: !no_rule4,
            };
            let outcome = mine(&ts, &cfg);
            write(&output, &write_patterns(&outcome.merged))?;
        }
        Command::Baseline { traces, output } => {
            let ts = load_traces(&traces)?;
            write(&output, &write_patterns(&baseline(&ts)?))?;
        }
        Command::Eval {
            flows,
            patterns,
            output,
            tool,
        } => {
            let gt = GroundTruth::from_flows(&load_flows(&flows)?);
            let mined = parse_patterns(&read(&patterns)?).with_context(|| format!("{}", patterns.display()))?;
            let report = evaluate(&mined, &gt)?;
            if let Some(path) = output {
                write(&path, &report.to_json())?;
            }
            print!("{}", report.summary(&tool));
        }
        Command::ExportDot {
            flows,
            patterns,
            output,
        } => {
            let text = match (flows, patterns) {
                (Some(f), _) => load_flows(&f)?.iter().map(flow_to_dot).collect::<String>(),
                (None, Some(p)) => {
                    let mined = parse_patterns(&read(&p)?).with_context(|| format!("{}", p.display()))?;
                    patterns_to_dot(&mined)
                }
                (None, None) => unreachable!("clap requires one input"),
            };
            write(&output, &text)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
