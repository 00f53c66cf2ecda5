//! Gap statistics of relaxation classes on random graphs.
//!
//! For a graph `f` and a class `P`, `μ_P[f]` is the mean of
//! `Δ_P[f](x) = (cav - LB_P) / (cav - vex)` over a shared sample set `I`.
//! The table reports, per class, the mean and population standard deviation
//! of `μ_P[f]` over the graph set `F`, and the average number of generating
//! structures `c_P`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_traits::{ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::envelopes::{cav_exact, lb_relax, sample_points, vex_exact, DEFAULT_CAP};
use crate::error::ExperimentError;
use crate::graph::{erdos_renyi, WeightSampler, WeightedGraph};
use crate::inequalities::{build_relaxation, ClassKind, ConstraintSystem, RelaxClass};
use crate::scalar::{mean_std, Rational};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub n: usize,
    pub p: f64,
    /// `|I|`
    pub samples: usize,
    /// `|F|`
    pub graphs: usize,
    pub classes: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// Denominator bound of the sampled coordinates.
    #[serde(default = "default_max_den")]
    pub max_den: u32,
    /// One of `normal`, `unit`, `sign`.
    #[serde(default = "default_weights")]
    pub weights: String,
    /// Worker threads; the global rayon pool when absent.
    #[serde(default)]
    pub jobs: Option<usize>,
}

fn default_max_den() -> u32 {
    10
}

fn default_weights() -> String {
    "normal".into()
}

impl StudyConfig {
    pub fn new(
        n: usize,
        p: f64,
        samples: usize,
        graphs: usize,
        classes: &[&str],
        seed: u64,
    ) -> Self {
        StudyConfig {
            n,
            p,
            samples,
            graphs,
            classes: classes.iter().map(|c| c.to_string()).collect(),
            seed,
            max_den: default_max_den(),
            weights: default_weights(),
            jobs: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: StudyConfig =
            toml::from_str(text).map_err(|e| ExperimentError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn parsed_classes(&self) -> Result<Vec<RelaxClass>, ExperimentError> {
        self.classes
            .iter()
            .map(|c| {
                RelaxClass::from_str(c)
                    .map_err(|_| ExperimentError::BadConfig(format!("unknown class {c:?}")))
            })
            .collect()
    }

    pub fn sampler(&self) -> Result<WeightSampler, ExperimentError> {
        match self.weights.to_ascii_lowercase().as_str() {
            "normal" => Ok(WeightSampler::Normal),
            "unit" => Ok(WeightSampler::Unit),
            "sign" => Ok(WeightSampler::RandomSign),
            w => Err(ExperimentError::BadConfig(format!(
                "unknown weight sampler {w:?}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::BadConfig(m));
        if self.samples == 0 || self.graphs == 0 {
            return bad("samples and graphs must be at least 1".into());
        }
        if self.classes.is_empty() {
            return bad("no classes given".into());
        }
        if self.n < 2 || self.n > DEFAULT_CAP {
            return bad(format!("n = {} is outside 2..={DEFAULT_CAP}", self.n));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad(format!("p = {} is outside (0, 1)", self.p));
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive".into());
        }
        self.parsed_classes()?;
        self.sampler()?;
        Ok(())
    }
}

/// Per-class outcome on one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassOnGraph {
    /// `μ_P[f]`; `None` when every sample was degenerate.
    pub mean_ratio: Option<Rational>,
    pub sources: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphRecord {
    pub index: usize,
    pub seed: u64,
    pub edges: usize,
    /// Samples with `cav = vex`, left out of every mean.
    pub degenerate: usize,
    /// Samples where some `LB_P` left `[LB_M, vex]`.
    pub sandwich_violations: usize,
    pub classes: Vec<ClassOnGraph>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub class: RelaxClass,
    /// `100 (μ_P - 1)`
    pub excess_pct: f64,
    /// `100 σ_P`
    pub sigma_pct: f64,
    /// Mean number of generating structures.
    pub sources: f64,
    /// Graphs that contributed to `μ_P`.
    pub graphs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
    pub graphs: Vec<GraphRecord>,
}

impl StudyReport {
    pub fn degenerate_samples(&self) -> usize {
        self.graphs.iter().map(|g| g.degenerate).sum()
    }

    pub fn sandwich_violations(&self) -> usize {
        self.graphs.iter().map(|g| g.sandwich_violations).sum()
    }

    pub fn row(&self, class: &str) -> Option<&StudyRow> {
        let c = RelaxClass::from_str(class).ok()?;
        self.rows.iter().find(|r| r.class == c)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["class", "mu_minus_1_pct", "sigma_pct", "c_p"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.class.to_string(),
                format!("{:.4}", r.excess_pct),
                format!("{:.4}", r.sigma_pct),
                format!("{:.2}", r.sources),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
    }

    /// Rows `index class mean sigma` for a gnuplot error-bar plot.
    pub fn to_dat(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "# G({}, {}), |I| = {}, |F| = {}, seed {}\n",
            c.n, c.p, c.samples, c.graphs, c.seed
        );
        out.push_str("# index class mu_minus_1_pct sigma_pct\n");
        for (k, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k} {} {:.6} {:.6}",
                r.class, r.excess_pct, r.sigma_pct
            );
        }
        out
    }

    /// Per-graph means as CSV, one column per class.
    pub fn per_graph_csv(&self) -> String {
        let mut out = String::from("graph,seed,edges,degenerate,sandwich_violations");
        for r in &self.rows {
            let _ = write!(out, ",{}", r.class);
        }
        out.push('\n');
        for g in &self.graphs {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                g.index, g.seed, g.edges, g.degenerate, g.sandwich_violations
            );
            for c in &g.classes {
                let v = c
                    .mean_ratio
                    .as_ref()
                    .and_then(|m| m.to_f64())
                    .map_or(String::new(), |m| m.to_string());
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Seeds for the sample set and the graphs, all drawn from one stream.
fn derive_seeds(seed: u64, graphs: usize) -> (u64, Vec<u64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = rng.next_u64();
    (samples, (0..graphs).map(|_| rng.next_u64()).collect())
}

fn study_graph(
    index: usize,
    seed: u64,
    cfg: &StudyConfig,
    classes: &[RelaxClass],
    points: &[Vec<Rational>],
) -> Result<GraphRecord, ExperimentError> {
    let g: WeightedGraph<Rational> = erdos_renyi(cfg.n, cfg.p, seed, cfg.sampler()?)?;
    let base: ConstraintSystem<Rational> =
        build_relaxation(&g, RelaxClass::new(ClassKind::M))?.system;
    let built = classes
        .iter()
        .map(|&c| build_relaxation::<Rational, Rational>(&g, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sums = vec![Rational::zero(); classes.len()];
    let (mut used, mut degenerate, mut violations) = (0usize, 0usize, 0usize);
    for x in points {
        let vex = vex_exact(&g, x)?.value;
        let cav = cav_exact(&g, x)?.value;
        if cav == vex {
            degenerate += 1;
            continue;
        }
        used += 1;
        let lb_m = lb_relax(&base, &g, x)?;
        let gap = &cav - &vex;
        let mut broken = lb_m > vex;
        for (k, r) in built.iter().enumerate() {
            let lb = if classes[k].kind == ClassKind::M {
                lb_m.clone()
            } else {
                lb_relax(&r.system, &g, x)?
            };
            broken |= lb < lb_m || lb > vex;
            sums[k] += (&cav - lb) / &gap;
        }
        violations += usize::from(broken);
    }
    let denom = Rational::from_integer(used.into());
    let classes = built
        .iter()
        .zip(sums)
        .map(|(r, s)| ClassOnGraph {
            mean_ratio: (used > 0).then(|| s / &denom),
            sources: r.sources,
        })
        .collect();
    Ok(GraphRecord {
        index,
        seed,
        edges: g.m(),
        degenerate,
        sandwich_violations: violations,
        classes,
    })
}

/// Runs the study. The outcome depends only on the configuration: graphs are
/// processed in parallel but collected in index order.
pub fn run_gap_study(cfg: &StudyConfig) -> Result<StudyReport, ExperimentError> {
    cfg.validate()?;
    let classes = cfg.parsed_classes()?;
    let (sample_seed, graph_seeds) = derive_seeds(cfg.seed, cfg.graphs);
    let points = sample_points(cfg.n, cfg.samples, cfg.max_den, sample_seed);
    let work = || {
        graph_seeds
            .par_iter()
            .enumerate()
            .map(|(k, &s)| study_graph(k, s, cfg, &classes, &points))
            .collect::<Result<Vec<_>, _>>()
    };
    let graphs = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| ExperimentError::BadConfig(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let rows = classes
        .iter()
        .enumerate()
        .map(|(k, &class)| {
            let means: Vec<f64> = graphs
                .iter()
                .filter_map(|g| g.classes[k].mean_ratio.as_ref())
                .map(|m| m.to_f64().expect("finite ratio"))
                .collect();
            let (mu, sigma) = mean_std(&means);
            let sources = graphs
                .iter()
                .map(|g| g.classes[k].sources as f64)
                .sum::<f64>()
                / graphs.len() as f64;
            StudyRow {
                class,
                excess_pct: 100.0 * (mu - 1.0),
                sigma_pct: 100.0 * sigma,
                sources,
                graphs: means.len(),
            }
        })
        .collect();
    Ok(StudyReport {
        config: cfg.clone(),
        rows,
        graphs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = StudyConfig::from_toml(
            "n = 6\np = 0.5\nsamples = 3\ngraphs = 2\nclasses = [\"M\", \"MQ4\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.max_den, 10);
        assert_eq!(
            cfg.parsed_classes().unwrap()[1],
            RelaxClass::sized(ClassKind::MQ, 4)
        );
        for bad in [
            "n = 6\np = 0.5\nsamples = 0\ngraphs = 2\nclasses = [\"M\"]\n",
            "n = 6\np = 0.5\nsamples = 1\ngraphs = 2\nclasses = []\n",
            "n = 6\np = 1.5\nsamples = 1\ngraphs = 2\nclasses = [\"M\"]\n",
            "n = 40\np = 0.5\nsamples = 1\ngraphs = 2\nclasses = [\"M\"]\n",
            "n = 6\np = 0.5\nsamples = 1\ngraphs = 2\nclasses = [\"MX\"]\n",
            "n = 6\np = 0.5\nsamples = 1\ngraphs = 2\nclasses = [\"M\"]\nextra = 1\n",
        ] {
            assert!(StudyConfig::from_toml(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn small_study_is_deterministic_and_sandwiched() {
        let mut cfg = StudyConfig::new(6, 0.6, 6, 3, &["M", "MT", "MQ", "MO"], 5);
        cfg.weights = "sign".into();
        let a = run_gap_study(&cfg).unwrap();
        let b = run_gap_study(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sandwich_violations(), 0);
        let m = a.row("M").unwrap();
        for r in &a.rows {
            assert!(r.excess_pct >= -1e-9);
            assert!(r.excess_pct <= m.excess_pct + 1e-9);
        }
        assert!(a
            .to_csv()
            .starts_with("class,mu_minus_1_pct,sigma_pct,c_p\nM,"));
        assert_eq!(a.to_dat().lines().count(), 2 + 4);
    }
}
