use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use graphreduce::action::{ActionSpace, Priority};
use graphreduce::baselines::{
    matching_coarsen, matching_coarsen_to_nodes, ss_sparsify, ss_sparsify_to_edges, MatchingStrategy,
    SparsifierConfig,
};
use graphreduce::experiment::{run_experiment, ExperimentSpec};
use graphreduce::generate::GeneratorSpec;
use graphreduce::graph::{ContractionMap, WeightedGraph};
use graphreduce::io::{format_edge_list, format_map, format_node_weights, parse_map, read_graph};
use graphreduce::metrics::{Reference, REPORT_CSV_HEADER};
use graphreduce::reducer::{reduce_graph, QuantityMode, ReductionConfig, StopCriterion, DEFAULT_D, DEFAULT_Q};

#[derive(Parser)]
#[command(name = "graphreduce", version, about = "Reduce weighted graphs while preserving the Laplacian pseudoinverse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph, e.g. `er:n=64,p=0.125`.
    Gen {
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: GraphOutput,
    },
    /// Reduce a graph by deletion, contraction and reweighting.
    Reduce {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        reduction: ReductionArgs,
        #[command(flatten)]
        out: GraphOutput,
        /// Write the original-to-supernode map here.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Write the per-iteration trace as JSON lines here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Remove edges while keeping every node.
    Sparsify {
        #[command(flatten)]
        input: GraphInput,
        /// `ours` (deletion and bounded reweighting) or `ss`.
        #[arg(long, default_value = "ours")]
        method: String,
        /// Target edge count.
        #[arg(long, conflicts_with = "samples")]
        edges: Option<usize>,
        /// Fixed number of draws for `ss`.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_Q)]
        q: f64,
        #[arg(long, default_value_t = DEFAULT_D)]
        d: f64,
        #[arg(long, default_value_t = 2.0)]
        max_reweight: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: GraphOutput,
    },
    /// Merge nodes by contracting edges.
    Coarsen {
        #[command(flatten)]
        input: GraphInput,
        /// `ours`, `random` or `heavy`.
        #[arg(long, default_value = "ours")]
        method: String,
        /// Target node count.
        #[arg(long, conflicts_with = "levels")]
        nodes: Option<usize>,
        /// Full matching levels, for `random` and `heavy`.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_Q)]
        q: f64,
        #[arg(long, default_value_t = DEFAULT_D)]
        d: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: GraphOutput,
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Compare a reduced graph with its original.
    Metrics {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long)]
        reduced: PathBuf,
        #[arg(long)]
        reduced_node_weights: Option<PathBuf>,
        /// Original-to-supernode map; identity when omitted.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        eigen_k: usize,
        #[arg(long)]
        csv: bool,
    },
    /// Run an experiment described by a JSON spec.
    Compare {
        spec: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GraphInput {
    /// Edge list `u v [w]`.
    #[arg(long, short)]
    input: PathBuf,
    /// Node weights `u w`.
    #[arg(long)]
    node_weights: Option<PathBuf>,
}

impl GraphInput {
    fn load(&self) -> Result<WeightedGraph> {
        read_graph(&self.input, self.node_weights.as_deref())
            .with_context(|| format!("reading {}", self.input.display()))
    }
}

#[derive(Args)]
struct GraphOutput {
    /// Edge list destination; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    out_node_weights: Option<PathBuf>,
}

impl GraphOutput {
    fn write(&self, g: &WeightedGraph) -> Result<()> {
        let text = format_edge_list(g);
        match &self.out {
            Some(p) => write_file(p, &text)?,
            None => print!("{text}"),
        }
        if let Some(p) = &self.out_node_weights {
            write_file(p, &format_node_weights(g))?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct ReductionArgs {
    #[arg(long, default_value_t = DEFAULT_Q)]
    q: f64,
    #[arg(long, default_value_t = DEFAULT_D)]
    d: f64,
    /// `edges` or `nodes`.
    #[arg(long, default_value = "edges")]
    priority: String,
    /// `edges=N`, `nodes=N`, `error=X`, `beta=X` or `iters=N`; repeatable,
    /// the first to fire stops the run.
    #[arg(long, required = true)]
    stop: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `exact` or `sketch:K,EPS`.
    #[arg(long, default_value = "exact")]
    mode: String,
    /// Only delete and reweight.
    #[arg(long)]
    no_contraction: bool,
    /// Largest relative weight increase when contraction is disabled.
    #[arg(long, default_value_t = 2.0)]
    max_reweight: f64,
}

impl ReductionArgs {
    fn config(&self) -> Result<ReductionConfig> {
        let stop = self
            .stop
            .iter()
            .map(|s| s.parse::<StopCriterion>())
            .collect::<graphreduce::Result<Vec<_>>>()?;
        Ok(ReductionConfig {
            q: self.q,
            d: self.d,
            priority: self.priority.parse::<Priority>()?,
            stop,
            seed: self.seed,
            quantity_mode: parse_mode(&self.mode)?,
            action_space: if self.no_contraction {
                ActionSpace::DeletionOnly {
                    max_reweight: self.max_reweight,
                }
            } else {
                ActionSpace::Full
            },
        })
    }
}

fn parse_mode(s: &str) -> Result<QuantityMode> {
    if s == "exact" {
        return Ok(QuantityMode::Exact);
    }
    if let Some(rest) = s.strip_prefix("sketch:") {
        if let Some((k, eps)) = rest.split_once(',') {
            return Ok(QuantityMode::Sketch {
                k: k.trim().parse().context("sketch dimension")?,
                epsilon: eps.trim().parse().context("sketch epsilon")?,
            });
        }
    }
    bail!("mode must be `exact` or `sketch:K,EPS`, got `{s}`")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_map(path: Option<&Path>, map: &ContractionMap) -> Result<()> {
    if let Some(p) = path {
        write_file(p, &format_map(map))?;
    }
    Ok(())
}

fn ours(g: &WeightedGraph, config: &ReductionConfig) -> Result<(WeightedGraph, ContractionMap)> {
    let r = reduce_graph(g, config)?;
    eprintln!(
        "{} iterations, {} nodes, {} edges, estimated error {}",
        r.trace.len(),
        r.graph.num_nodes(),
        r.graph.num_edges(),
        r.estimated_error()
    );
    Ok((r.graph, r.map))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { spec, seed, out } => {
            let g = spec.parse::<GeneratorSpec>()?.generate(seed)?;
            out.write(&g)
        }
        Command::Reduce {
            input,
            reduction,
            out,
            map,
            trace,
        } => {
            let g = input.load()?;
            let config = reduction.config()?;
            let r = reduce_graph(&g, &config)?;
            out.write(&r.graph)?;
            write_map(map.as_deref(), &r.map)?;
            if let Some(p) = trace {
                write_file(&p, &r.trace.to_json_lines()?)?;
            }
            eprintln!(
                "{} iterations, {} nodes, {} edges, estimated error {}",
                r.trace.len(),
                r.graph.num_nodes(),
                r.graph.num_edges(),
                r.estimated_error()
            );
            Ok(())
        }
        Command::Sparsify {
            input,
            method,
            edges,
            samples,
            q,
            d,
            max_reweight,
            seed,
            out,
        } => {
            let g = input.load()?;
            let s = match (method.as_str(), edges, samples) {
                ("ss", Some(n), None) => ss_sparsify_to_edges(&g, n, seed)?.0,
                ("ss", None, Some(n)) => ss_sparsify(&g, &SparsifierConfig { samples: n, seed })?,
                ("ours", Some(n), None) => {
                    let config = ReductionConfig {
                        q,
                        d,
                        stop: vec![StopCriterion::EdgeBudget(n)],
                        seed,
                        action_space: ActionSpace::DeletionOnly { max_reweight },
                        ..ReductionConfig::default()
                    };
                    ours(&g, &config)?.0
                }
                ("ss", _, _) => bail!("ss needs exactly one of --edges or --samples"),
                ("ours", _, _) => bail!("ours needs --edges"),
                (m, _, _) => bail!("unknown sparsify method `{m}`"),
            };
            if !s.is_connected() {
                eprintln!("warning: sparsified graph is disconnected");
            }
            out.write(&s)
        }
        Command::Coarsen {
            input,
            method,
            nodes,
            levels,
            q,
            d,
            seed,
            out,
            map,
        } => {
            let g = input.load()?;
            let (c, m) = match (method.as_str(), nodes, levels) {
                ("ours", Some(n), None) => {
                    let config = ReductionConfig {
                        q,
                        d,
                        priority: Priority::Nodes,
                        stop: vec![StopCriterion::NodeBudget(n)],
                        seed,
                        ..ReductionConfig::default()
                    };
                    ours(&g, &config)?
                }
                ("ours", _, _) => bail!("ours needs --nodes"),
                (s, n, l) => {
                    let strategy = s.parse::<MatchingStrategy>()?;
                    match (n, l) {
                        (Some(n), None) => matching_coarsen_to_nodes(&g, strategy, n, seed)?,
                        (None, Some(l)) => matching_coarsen(&g, strategy, l, seed)?,
                        _ => bail!("matching needs exactly one of --nodes or --levels"),
                    }
                }
            };
            out.write(&c)?;
            write_map(map.as_deref(), &m)
        }
        Command::Metrics {
            input,
            reduced,
            reduced_node_weights,
            map,
            eigen_k,
            csv,
        } => {
            let g = input.load()?;
            let mut r = read_graph(&reduced, reduced_node_weights.as_deref())
                .with_context(|| format!("reading {}", reduced.display()))?;
            let m = match map {
                Some(p) => parse_map(&fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?,
                None => ContractionMap::identity(&g),
            };
            // Without a weight file each supernode weighs the sum of its
            // members; nodes isolated by sparsification are absent from the
            // edge list.
            for s in m.supernodes() {
                let w: f64 = m.members(s).iter().filter_map(|&o| g.node_weight(o)).sum();
                if !r.has_node(s) {
                    r.add_node(s, w)?;
                } else if reduced_node_weights.is_none() {
                    r.set_node_weight(s, w)?;
                }
            }
            m.validate(&g, &r)?;
            let report = Reference::new(&g)?.compare("input", "", &r, &m, None, eigen_k)?;
            if csv {
                println!("{REPORT_CSV_HEADER}");
                print!("{}", report.csv_rows());
            } else {
                println!("{}", report.to_json()?);
            }
            Ok(())
        }
        Command::Compare { spec, csv, json } => {
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut s = ExperimentSpec::from_json(&text)?;
            if csv.is_some() {
                s.csv = csv;
            }
            if json.is_some() {
                s.json = json;
            }
            let result = run_experiment(&s)?;
            if s.csv.is_none() {
                print!("{}", result.summary_csv());
            }
            for f in &result.failures {
                eprintln!("failed: {} {} repeat {}: {}", f.algorithm.name(), f.level, f.repeat, f.error);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
