//! Synthetic graph families. Every generator is deterministic for a seed.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::substream;

/// Resampling attempts for random families that must be connected.
pub const MAX_CONNECT_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLaw {
    Constant(f64),
    /// `exp(U(low, high))`.
    LogUniform { low: f64, high: f64 },
}

impl WeightLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            WeightLaw::Constant(w) if w > 0.0 && w.is_finite() => Ok(()),
            WeightLaw::LogUniform { low, high } if low.is_finite() && high.is_finite() && low <= high => Ok(()),
            other => Err(Error::InvalidParameter(format!("invalid weight law {other:?}"))),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            WeightLaw::Constant(w) => w,
            WeightLaw::LogUniform { low, high } if low == high => low.exp(),
            WeightLaw::LogUniform { low, high } => rng.random_range(low..high).exp(),
        }
    }
}

pub fn path(n: usize, weights: Option<&[f64]>) -> Result<WeightedGraph> {
    if n == 0 {
        return Err(Error::InvalidParameter("path needs at least one node".into()));
    }
    let weights: Vec<f64> = match weights {
        Some(w) if w.len() != n - 1 => {
            return Err(Error::InvalidParameter(format!("path({n}) needs {} weights, got {}", n - 1, w.len())))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n - 1],
    };
    let edges: Vec<_> = weights.iter().enumerate().map(|(i, &w)| (i, i + 1, w)).collect();
    WeightedGraph::from_edges(n, &edges)
}

pub fn cycle(n: usize) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::InvalidParameter("cycle needs at least 3 nodes".into()));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    WeightedGraph::from_edges(n, &edges)
}

/// `rows x cols` grid with wraparound; node `(i, j)` is `i * cols + j`.
pub fn torus<R: Rng + ?Sized>(rows: usize, cols: usize, law: WeightLaw, rng: &mut R) -> Result<WeightedGraph> {
    if rows < 3 || cols < 3 {
        return Err(Error::InvalidParameter("torus needs at least 3 rows and 3 columns".into()));
    }
    law.validate()?;
    let id = |i: usize, j: usize| i * cols + j;
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            edges.push((id(i, j), id(i, (j + 1) % cols), law.draw(rng)));
            edges.push((id(i, j), id((i + 1) % rows, j), law.draw(rng)));
        }
    }
    WeightedGraph::from_edges(rows * cols, &edges)
}

fn probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")))
    }
}

fn connected_sample<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    mut keep: impl FnMut(usize, usize, &mut R) -> bool,
) -> Result<WeightedGraph> {
    for _ in 0..MAX_CONNECT_ATTEMPTS {
        let mut g = WeightedGraph::with_nodes(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if keep(u, v, rng) {
                    g.add_edge(u, v, 1.0)?;
                }
            }
        }
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no connected sample in {MAX_CONNECT_ATTEMPTS} attempts"
    )))
}

/// Erdos-Renyi `G(n, p)` with unit weights, resampled until connected.
pub fn er<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<WeightedGraph> {
    probability(p)?;
    if n == 0 {
        return Err(Error::InvalidParameter("er needs at least one node".into()));
    }
    connected_sample(n, rng, |_, _, r| r.random::<f64>() < p)
}

/// Community of node `i` in a balanced `sbm(n, communities, ..)`.
pub fn sbm_block(i: usize, n: usize, communities: usize) -> usize {
    i * communities / n
}

/// Stochastic block model with balanced contiguous blocks, resampled until
/// connected.
pub fn sbm<R: Rng + ?Sized>(n: usize, communities: usize, p_in: f64, p_out: f64, rng: &mut R) -> Result<WeightedGraph> {
    probability(p_in)?;
    probability(p_out)?;
    if communities == 0 || communities > n {
        return Err(Error::InvalidParameter(format!("{communities} communities for {n} nodes")));
    }
    connected_sample(n, rng, |u, v, r| {
        let p = if sbm_block(u, n, communities) == sbm_block(v, n, communities) {
            p_in
        } else {
            p_out
        };
        r.random::<f64>() < p
    })
}

/// Grid with right, down and down-right neighbours; every interior node has
/// degree 6.
pub fn triangular_lattice(rows: usize, cols: usize) -> Result<WeightedGraph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("lattice needs positive dimensions".into()));
    }
    let id = |i: usize, j: usize| i * cols + j;
    let mut edges = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if j + 1 < cols {
                edges.push((id(i, j), id(i, j + 1), 1.0));
            }
            if i + 1 < rows {
                edges.push((id(i, j), id(i + 1, j), 1.0));
            }
            if i + 1 < rows && j + 1 < cols {
                edges.push((id(i, j), id(i + 1, j + 1), 1.0));
            }
        }
    }
    WeightedGraph::from_edges(rows * cols, &edges)
}

/// Uniform random recursive tree with unit weights.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<WeightedGraph> {
    if n == 0 {
        return Err(Error::InvalidParameter("tree needs at least one node".into()));
    }
    let edges: Vec<_> = (1..n).map(|i| (rng.random_range(0..i), i, 1.0)).collect();
    WeightedGraph::from_edges(n, &edges)
}

/// A generator with its parameters, written `kind:key=value,...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Path { n: usize, weights: Option<Vec<f64>> },
    Cycle { n: usize },
    Torus { rows: usize, cols: usize, law: WeightLaw },
    Er { n: usize, p: f64 },
    Sbm { n: usize, communities: usize, p_in: f64, p_out: f64 },
    TriangularLattice { rows: usize, cols: usize },
    RandomTree { n: usize },
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<WeightedGraph> {
        let mut rng = substream(seed, &[]);
        match self {
            GeneratorSpec::Path { n, weights } => path(*n, weights.as_deref()),
            GeneratorSpec::Cycle { n } => cycle(*n),
            GeneratorSpec::Torus { rows, cols, law } => torus(*rows, *cols, *law, &mut rng),
            GeneratorSpec::Er { n, p } => er(*n, *p, &mut rng),
            GeneratorSpec::Sbm {
                n,
                communities,
                p_in,
                p_out,
            } => sbm(*n, *communities, *p_in, *p_out, &mut rng),
            GeneratorSpec::TriangularLattice { rows, cols } => triangular_lattice(*rows, *cols),
            GeneratorSpec::RandomTree { n } => random_tree(*n, &mut rng),
        }
    }
}

pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<WeightedGraph> {
    spec.generate(seed)
}

struct Params<'a> {
    text: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn parse(text: &'a str, rest: &'a str) -> Result<Self> {
        let pairs = rest
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| Error::InvalidParameter(format!("`{kv}` in `{text}` is not key=value")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { text, pairs })
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::InvalidParameter(format!("`{}` is missing `{key}`", self.text)))?;
        v.parse()
            .map_err(|_| Error::InvalidParameter(format!("bad `{key}` in `{}`", self.text)))
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        if self.raw(key).is_some() {
            self.get(key)
        } else {
            Ok(default)
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    /// Examples: `path:n=4,weights=1;2;1`, `cycle:n=10`,
    /// `torus:rows=16,cols=16,low=-2,high=2`, `torus:rows=8,cols=8,weight=1`,
    /// `er:n=64,p=0.125`, `sbm:n=256,k=4,p_in=0.25,p_out=0.015625`,
    /// `lattice:rows=30,cols=30`, `tree:n=32`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let p = Params::parse(s, rest)?;
        Ok(match kind.trim() {
            "path" => GeneratorSpec::Path {
                n: p.get("n")?,
                weights: p
                    .raw("weights")
                    .map(|w| {
                        w.split(';')
                            .map(|x| {
                                x.trim()
                                    .parse()
                                    .map_err(|_| Error::InvalidParameter(format!("bad weight `{x}`")))
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .transpose()?,
            },
            "cycle" => GeneratorSpec::Cycle { n: p.get("n")? },
            "torus" => {
                let law = if p.raw("low").is_some() || p.raw("high").is_some() {
                    WeightLaw::LogUniform {
                        low: p.get("low")?,
                        high: p.get("high")?,
                    }
                } else {
                    WeightLaw::Constant(p.get_or("weight", 1.0)?)
                };
                GeneratorSpec::Torus {
                    rows: p.get("rows")?,
                    cols: p.get("cols")?,
                    law,
                }
            }
            "er" => GeneratorSpec::Er {
                n: p.get("n")?,
                p: p.get("p")?,
            },
            "sbm" => GeneratorSpec::Sbm {
                n: p.get("n")?,
                communities: p.get("k")?,
                p_in: p.get("p_in")?,
                p_out: p.get("p_out")?,
            },
            "lattice" | "triangular_lattice" => GeneratorSpec::TriangularLattice {
                rows: p.get("rows")?,
                cols: p.get("cols")?,
            },
            "tree" | "random_tree" => GeneratorSpec::RandomTree { n: p.get("n")? },
            other => return Err(Error::InvalidParameter(format!("unknown generator `{other}`"))),
        })
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::Path { n, weights: None } => write!(f, "path:n={n}"),
            GeneratorSpec::Path { n, weights: Some(w) } => {
                let w: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                write!(f, "path:n={n},weights={}", w.join(";"))
            }
            GeneratorSpec::Cycle { n } => write!(f, "cycle:n={n}"),
            GeneratorSpec::Torus {
                rows,
                cols,
                law: WeightLaw::Constant(w),
            } => write!(f, "torus:rows={rows},cols={cols},weight={w}"),
            GeneratorSpec::Torus {
                rows,
                cols,
                law: WeightLaw::LogUniform { low, high },
            } => write!(f, "torus:rows={rows},cols={cols},low={low},high={high}"),
            GeneratorSpec::Er { n, p } => write!(f, "er:n={n},p={p}"),
            GeneratorSpec::Sbm {
                n,
                communities,
                p_in,
                p_out,
            } => write!(f, "sbm:n={n},k={communities},p_in={p_in},p_out={p_out}"),
            GeneratorSpec::TriangularLattice { rows, cols } => write!(f, "lattice:rows={rows},cols={cols}"),
            GeneratorSpec::RandomTree { n } => write!(f, "tree:n={n}"),
        }
    }
}
