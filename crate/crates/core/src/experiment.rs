//! Sweeps of (algorithm, reduction level, repeat) against one dataset, with
//! per-cell seeds and a long-format summary.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{ActionSpace, Priority};
use crate::baselines::{matching_coarsen_to_nodes, ss_sparsify_to_edges, MatchingStrategy};
use crate::error::{Error, Result};
use crate::generate::GeneratorSpec;
use crate::graph::{ContractionMap, WeightedGraph};
use crate::io::read_graph;
use crate::metrics::{ComparisonReport, Reference};
use crate::reducer::{reduce_graph, ReductionConfig, StopCriterion, DEFAULT_D, DEFAULT_Q};
use crate::rng::derive_seed;

pub const SUMMARY_CSV_HEADER: &str = "level,algorithm,metric,vector_id,mean,std,count";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    Generator(String),
    File {
        edges: PathBuf,
        #[serde(default)]
        node_weights: Option<PathBuf>,
    },
}

impl Dataset {
    pub fn load(&self, seed: u64) -> Result<WeightedGraph> {
        match self {
            Dataset::Generator(s) => s.parse::<GeneratorSpec>()?.generate(seed),
            Dataset::File { edges, node_weights } => read_graph(edges, node_weights.as_deref()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Deletion, contraction and reweighting.
    Ours,
    /// Deletion and bounded reweighting only.
    OursSparsify,
    #[serde(rename = "ss")]
    SpielmanSrivastava,
    RandomMatching,
    HeavyEdgeMatching,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ours => "ours",
            Algorithm::OursSparsify => "ours_sparsify",
            Algorithm::SpielmanSrivastava => "ss",
            Algorithm::RandomMatching => "random_matching",
            Algorithm::HeavyEdgeMatching => "heavy_edge_matching",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Algorithm::Ours,
            Algorithm::OursSparsify,
            Algorithm::SpielmanSrivastava,
            Algorithm::RandomMatching,
            Algorithm::HeavyEdgeMatching,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm `{s}`")))
    }
}

/// Target size as a fraction of the original edge or node count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Edges(f64),
    Nodes(f64),
}

impl Level {
    fn fraction(self) -> f64 {
        match self {
            Level::Edges(f) | Level::Nodes(f) => f,
        }
    }

    fn target(self, g: &WeightedGraph) -> usize {
        let (count, f) = match self {
            Level::Edges(f) => (g.num_edges(), f),
            Level::Nodes(f) => (g.num_nodes(), f),
        };
        ((count as f64 * f).round() as usize).max(1)
    }
}

impl FromStr for Level {
    type Err = Error;

    /// `edges=0.5` or `nodes=0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("level `{s}` is not kind=fraction")))?;
        let f: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad fraction in `{s}`")))?;
        match k.trim() {
            "edges" => Ok(Level::Edges(f)),
            "nodes" => Ok(Level::Nodes(f)),
            other => Err(Error::InvalidParameter(format!("unknown level kind `{other}`"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Edges(x) => write!(f, "edges={x}"),
            Level::Nodes(x) => write!(f, "nodes={x}"),
        }
    }
}

fn default_repeats() -> usize {
    1
}
fn default_q() -> f64 {
    DEFAULT_Q
}
fn default_d() -> f64 {
    DEFAULT_D
}
fn default_max_reweight() -> f64 {
    2.0
}
fn default_eigen_k() -> usize {
    10
}
fn default_metrics() -> Vec<String> {
    ["d_x", "quadratic_ratio", "eigen_error", "frobenius"]
        .map(String::from)
        .to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: Dataset,
    pub algorithms: Vec<Algorithm>,
    /// Strictly decreasing targets of one kind.
    pub levels: Vec<Level>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default = "default_max_reweight")]
    pub max_reweight: f64,
    #[serde(default = "default_eigen_k")]
    pub eigen_k: usize,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

const METRICS: [&str; 4] = ["d_x", "quadratic_ratio", "eigen_error", "frobenius"];

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be >= 1".into()));
        }
        for m in &self.metrics {
            if !METRICS.contains(&m.as_str()) {
                return Err(Error::InvalidParameter(format!("unknown metric `{m}`")));
            }
        }
        for l in &self.levels {
            if !(l.fraction() > 0.0 && l.fraction() <= 1.0) {
                return Err(Error::InvalidParameter(format!("level {l} outside (0, 1]")));
            }
        }
        for pair in self.levels.windows(2) {
            let same_kind = matches!(
                (pair[0], pair[1]),
                (Level::Edges(_), Level::Edges(_)) | (Level::Nodes(_), Level::Nodes(_))
            );
            if !same_kind || pair[1].fraction() >= pair[0].fraction() {
                return Err(Error::InvalidParameter(
                    "levels must share a kind and strictly decrease".into(),
                ));
            }
        }
        Ok(())
    }

    fn wants(&self, metric: &str) -> bool {
        self.metrics.iter().any(|m| m == metric)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub algorithm: Algorithm,
    pub level: String,
    pub repeat: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub repeat: usize,
    pub report: ComparisonReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub level: String,
    pub algorithm: String,
    pub metric: String,
    pub vector_id: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub nodes: usize,
    pub edges: usize,
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_CSV_HEADER);
        out.push('\n');
        for r in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.level, r.algorithm, r.metric, r.vector_id, r.mean, r.std, r.count
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs one reduction and returns the reduced graph, map and estimated
/// error where the algorithm tracks one.
pub fn run_algorithm(
    g: &WeightedGraph,
    algorithm: Algorithm,
    level: Level,
    seed: u64,
    spec: &ExperimentSpec,
) -> Result<(WeightedGraph, ContractionMap, Option<f64>)> {
    let target = level.target(g);
    let ours = |space: ActionSpace| -> Result<_> {
        let (priority, stop) = match level {
            Level::Edges(_) => (Priority::Edges, StopCriterion::EdgeBudget(target)),
            Level::Nodes(_) => (Priority::Nodes, StopCriterion::NodeBudget(target)),
        };
        let config = ReductionConfig {
            q: spec.q,
            d: spec.d,
            priority,
            stop: vec![stop],
            seed,
            action_space: space,
            ..ReductionConfig::default()
        };
        let r = reduce_graph(g, &config)?;
        let err = r.estimated_error();
        Ok((r.graph, r.map, Some(err)))
    };
    let unsupported = || {
        Err(Error::InvalidParameter(format!(
            "{} does not support level {level}",
            algorithm.name()
        )))
    };
    match (algorithm, level) {
        (Algorithm::Ours, _) => ours(ActionSpace::Full),
        (Algorithm::OursSparsify, Level::Edges(_)) => ours(ActionSpace::DeletionOnly {
            max_reweight: spec.max_reweight,
        }),
        (Algorithm::SpielmanSrivastava, Level::Edges(_)) => {
            let (s, _) = ss_sparsify_to_edges(g, target, seed)?;
            let map = ContractionMap::identity(&s);
            Ok((s, map, None))
        }
        (Algorithm::RandomMatching, Level::Nodes(_)) => {
            let (c, map) = matching_coarsen_to_nodes(g, MatchingStrategy::Random, target, seed)?;
            Ok((c, map, None))
        }
        (Algorithm::HeavyEdgeMatching, Level::Nodes(_)) => {
            let (c, map) = matching_coarsen_to_nodes(g, MatchingStrategy::HeavyEdge, target, seed)?;
            Ok((c, map, None))
        }
        _ => unsupported(),
    }
}

/// Runs the sweep on an already loaded graph.
pub fn run_experiment_on(g: &WeightedGraph, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let reference = Reference::new(g)?;
    let mut cells_spec = Vec::new();
    for (ai, &algorithm) in spec.algorithms.iter().enumerate() {
        for (li, &level) in spec.levels.iter().enumerate() {
            for repeat in 0..spec.repeats {
                let seed = derive_seed(spec.seed, &[ai as u64, li as u64, repeat as u64]);
                cells_spec.push((algorithm, level, repeat, seed));
            }
        }
    }
    let outcomes: Vec<std::result::Result<CellResult, CellFailure>> = cells_spec
        .par_iter()
        .map(|&(algorithm, level, repeat, seed)| {
            let label = level.to_string();
            run_algorithm(g, algorithm, level, seed, spec)
                .and_then(|(reduced, map, est)| {
                    reference.compare(algorithm.name(), &label, &reduced, &map, est, spec.eigen_k)
                })
                .map(|report| CellResult { repeat, report })
                .map_err(|e| CellFailure {
                    algorithm,
                    level: label,
                    repeat,
                    error: e.to_string(),
                })
        })
        .collect();
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(c) => cells.push(c),
            Err(f) => failures.push(f),
        }
    }
    let summary = summarize(&cells, spec);
    Ok(ExperimentResult {
        spec: spec.clone(),
        nodes: g.num_nodes(),
        edges: g.num_edges(),
        cells,
        failures,
        summary,
    })
}

fn summarize(cells: &[CellResult], spec: &ExperimentSpec) -> Vec<SummaryRow> {
    // Keyed by position in the spec so rows follow its order.
    let mut samples: BTreeMap<(usize, usize, usize, String), Vec<f64>> = BTreeMap::new();
    let level_index = |s: &str| spec.levels.iter().position(|l| l.to_string() == s).unwrap_or(usize::MAX);
    let alg_index = |s: &str| spec.algorithms.iter().position(|a| a.name() == s).unwrap_or(usize::MAX);
    for c in cells {
        let r = &c.report;
        let key = |metric: usize, id: &str| (level_index(&r.level), alg_index(&r.algorithm), metric, id.to_string());
        for v in &r.vectors {
            if let (true, Some(d)) = (spec.wants("d_x"), v.d_x) {
                samples.entry(key(0, &v.vector_id)).or_default().push(d);
            }
            if let (true, Some(q)) = (spec.wants("quadratic_ratio"), v.quadratic_ratio) {
                samples.entry(key(1, &v.vector_id)).or_default().push(q);
            }
        }
        if let (true, Some(e)) = (spec.wants("eigen_error"), r.eigen_relative_error) {
            samples.entry(key(2, "")).or_default().push(e);
        }
        if spec.wants("frobenius") {
            samples.entry(key(3, "")).or_default().push(r.frobenius_true);
            if let Some(e) = r.frobenius_estimated {
                samples.entry(key(4, "")).or_default().push(e);
            }
        }
    }
    let metric_names = ["d_x", "quadratic_ratio", "eigen_error", "frobenius_true", "frobenius_estimated"];
    samples
        .into_iter()
        .map(|((li, ai, mi, id), xs)| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                level: spec.levels[li].to_string(),
                algorithm: spec.algorithms[ai].name().to_string(),
                metric: metric_names[mi].to_string(),
                vector_id: id,
                mean,
                std,
                count: n,
            }
        })
        .collect()
}

/// Loads the dataset, runs the sweep and writes the requested outputs.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let g = spec.dataset.load(derive_seed(spec.seed, &[u64::MAX]))?;
    let result = run_experiment_on(&g, spec)?;
    write_outputs(&result, spec.csv.as_deref(), spec.json.as_deref())?;
    Ok(result)
}

pub fn write_outputs(result: &ExperimentResult, csv: Option<&Path>, json: Option<&Path>) -> Result<()> {
    if let Some(p) = csv {
        std::fs::write(p, result.summary_csv())?;
    }
    if let Some(p) = json {
        std::fs::write(p, result.to_json()?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(algorithms: Vec<Algorithm>, levels: Vec<Level>) -> ExperimentSpec {
        ExperimentSpec {
            dataset: Dataset::Generator("lattice:rows=5,cols=5".into()),
            algorithms,
            levels,
            repeats: 2,
            seed: 7,
            metrics: default_metrics(),
            q: 0.25,
            d: DEFAULT_D,
            max_reweight: 2.0,
            eigen_k: 3,
            csv: None,
            json: None,
        }
    }

    #[test]
    fn no_algorithms_gives_header_only() {
        let r = run_experiment(&spec(vec![], vec![Level::Edges(0.5)])).unwrap();
        assert_eq!(r.summary_csv(), format!("{SUMMARY_CSV_HEADER}\n"));
    }

    #[test]
    fn levels_must_decrease() {
        let s = spec(vec![Algorithm::Ours], vec![Level::Edges(0.5), Level::Edges(0.7)]);
        assert!(s.validate().is_err());
        let s = spec(vec![Algorithm::Ours], vec![Level::Edges(0.7), Level::Nodes(0.5)]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn unsupported_cells_are_recorded() {
        let s = spec(vec![Algorithm::RandomMatching, Algorithm::Ours], vec![Level::Edges(0.6)]);
        let r = run_experiment(&s).unwrap();
        assert_eq!(r.failures.len(), 2);
        assert_eq!(r.cells.len(), 2);
        assert!(r.summary.iter().all(|row| row.algorithm == "ours" && row.count == 2));
    }

    #[test]
    fn parses_json_with_defaults() {
        let s = ExperimentSpec::from_json(
            r#"{"dataset":{"generator":"cycle:n=8"},"algorithms":["ours","ss"],"levels":[{"edges":0.9}]}"#,
        )
        .unwrap();
        assert_eq!(s.repeats, 1);
        assert_eq!(s.q, DEFAULT_Q);
        assert_eq!(s.metrics.len(), 4);
        assert_eq!("nodes=0.5".parse::<Level>().unwrap(), Level::Nodes(0.5));
        assert_eq!("ss".parse::<Algorithm>().unwrap(), Algorithm::SpielmanSrivastava);
    }
}
