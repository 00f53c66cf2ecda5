//! Edge-weighted graphs, i.e. bilinear functions `f(x) = Σ a_ij x_i x_j`.
//!
//! Vertices are numbered `1..=n`. Edges are stored sorted by `(i, j)` with
//! `i < j` (or `i == j` for loops when the graph was built in loop mode).

use std::fmt::Write as _;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GraphError, ParseError};
use crate::scalar::{fraction, parse_rational, Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<S> {
    pub i: usize,
    pub j: usize,
    pub weight: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<S> {
    n: usize,
    edges: Vec<Edge<S>>,
    allow_loops: bool,
}

impl<S: Scalar> WeightedGraph<S> {
    /// Builds a loop-free graph. Endpoints may be given in either order.
    pub fn from_edge_list(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, S)>,
    ) -> Result<Self, GraphError> {
        Self::build(n, edges, false)
    }

    /// Like [`from_edge_list`](Self::from_edge_list) but accepts loops `(i, i)`,
    /// which stand for squared terms `a_ii x_i^2`.
    pub fn with_loops(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, S)>,
    ) -> Result<Self, GraphError> {
        Self::build(n, edges, true)
    }

    fn build(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, S)>,
        allow_loops: bool,
    ) -> Result<Self, GraphError> {
        let mut list = Vec::new();
        for (a, b, weight) in edges {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            if i == 0 || j > n || (i == j && !allow_loops) {
                return Err(GraphError::IndexOutOfRange { i: a, j: b, n });
            }
            if weight.is_zero() {
                return Err(GraphError::ZeroWeight(i, j));
            }
            list.push(Edge { i, j, weight });
        }
        list.sort_by_key(|e| (e.i, e.j));
        if let Some(w) = list
            .windows(2)
            .find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j))
        {
            return Err(GraphError::DuplicateEdge(w[0].i, w[0].j));
        }
        Ok(WeightedGraph {
            n,
            edges: list,
            allow_loops,
        })
    }

    pub fn complete(n: usize, weight: S) -> Self {
        let edges = pairs(n).map(|(i, j)| (i, j, weight.clone()));
        Self::from_edge_list(n, edges).expect("complete graph is well formed")
    }

    /// `K_n` with the edge `{n-1, n}` removed.
    pub fn complete_minus_edge(n: usize, weight: S) -> Self {
        let edges = pairs(n)
            .filter(|&(i, j)| !(i + 1 == n && j == n))
            .map(|(i, j)| (i, j, weight.clone()));
        Self::from_edge_list(n, edges).expect("well formed")
    }

    /// Cycle `C_n` with weight `a[k-1]` on edge `k`, where edge `k` joins
    /// `k` and `k+1` and edge `n` joins `1` and `n`.
    pub fn cycle(weights: &[S]) -> Result<Self, GraphError> {
        let n = weights.len();
        if n < 3 {
            return Err(GraphError::NotACycle);
        }
        let edges = (1..=n).map(|k| (k, if k == n { 1 } else { k + 1 }, weights[k - 1].clone()));
        Self::from_edge_list(n, edges)
    }

    /// Wheel `W_n`: rim cycle on `1..=n` (including `{1, n}`) and hub `n + 1`.
    pub fn wheel(n: usize, weight: S) -> Self {
        let rim = (1..=n).map(|k| (k, if k == n { 1 } else { k + 1 }));
        let spokes = (1..=n).map(|k| (k, n + 1));
        Self::from_edge_list(
            n + 1,
            rim.chain(spokes).map(|(i, j)| (i, j, weight.clone())),
        )
        .expect("well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn allow_loops(&self) -> bool {
        self.allow_loops
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.edges.binary_search_by_key(&key, |e| (e.i, e.j)).ok()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<&S> {
        self.edge_index(i, j).map(|k| &self.edges[k].weight)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_index(i, j).is_some()
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(|e| e.i == e.j)
    }

    /// `f(x)` evaluated exactly (up to the scalar type).
    pub fn evaluate(&self, x: &[S]) -> Result<S, GraphError> {
        self.check_dim(x)?;
        Ok(self.edges.iter().fold(S::zero(), |acc, e| {
            acc + e.weight.clone() * x[e.i - 1].clone() * x[e.j - 1].clone()
        }))
    }

    pub fn check_dim(&self, x: &[S]) -> Result<(), GraphError> {
        if x.len() != self.n {
            return Err(GraphError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Dimension and box check for a point.
    pub fn check_point(&self, x: &[S]) -> Result<(), GraphError> {
        self.check_dim(x)?;
        match x.iter().position(|v| *v < S::zero() || *v > S::one()) {
            Some(k) => Err(GraphError::OutOfBox(k + 1)),
            None => Ok(()),
        }
    }

    pub fn map_weights<T: Scalar>(&self, f: impl Fn(&S) -> T) -> WeightedGraph<T> {
        WeightedGraph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    i: e.i,
                    j: e.j,
                    weight: f(&e.weight),
                })
                .collect(),
            allow_loops: self.allow_loops,
        }
    }

    pub fn negated(&self) -> Self {
        self.map_weights(|w| -w.clone())
    }

    /// Sum of two functions over the same vertex set; cancelling terms vanish.
    pub fn sum(&self, other: &Self) -> Result<Self, GraphError> {
        if self.n != other.n {
            return Err(GraphError::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut merged: Vec<(usize, usize, S)> = Vec::new();
        for e in self.edges.iter().chain(&other.edges) {
            match merged.iter_mut().find(|(i, j, _)| (*i, *j) == (e.i, e.j)) {
                Some(slot) => slot.2 = slot.2.clone() + e.weight.clone(),
                None => merged.push((e.i, e.j, e.weight.clone())),
            }
        }
        merged.retain(|(_, _, w)| !w.is_zero());
        Self::build(self.n, merged, self.allow_loops || other.allow_loops)
    }

    /// Vertices touched by at least one edge.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.n + 1];
        for e in &self.edges {
            used[e.i] = true;
            used[e.j] = true;
        }
        (1..=self.n).filter(|&v| used[v]).collect()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(
            self.n,
            self.edges.iter().filter(|e| e.i != e.j).map(|e| (e.i, e.j)),
        )
    }

    /// Weights `a_1..a_n` in cycle order if the graph is exactly `C_n` with
    /// the standard edge numbering (edge `k` = `{k, k+1}`, edge `n` = `{1, n}`).
    pub fn cycle_weights(&self) -> Result<Vec<S>, GraphError> {
        let n = self.n;
        if n < 3 || self.m() != n || self.has_loops() {
            return Err(GraphError::NotACycle);
        }
        (1..=n)
            .map(|k| {
                let j = if k == n { 1 } else { k + 1 };
                self.weight(k, j).cloned().ok_or(GraphError::NotACycle)
            })
            .collect()
    }

    pub fn sign_partition(&self, semantics: CycleSemantics) -> Result<SignPartition, GraphError> {
        let a = self.cycle_weights()?;
        Ok(SignPartition::from_signs(
            &a.iter().map(|w| w.is_positive()).collect::<Vec<_>>(),
            semantics,
        ))
    }

    /// Text in the edge-list format: `n m`, then `i j weight` per edge.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m());
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.i, e.j, fraction(&e.weight.to_rational()));
        }
        out
    }

    pub fn to_rational(&self) -> WeightedGraph<Rational> {
        self.map_weights(|w| w.to_rational())
    }
}

impl WeightedGraph<Rational> {
    /// Parses the edge-list format. Weights may be integers, fractions
    /// `p/q` or decimals; `#` starts a comment. Loops `i i w` are accepted
    /// only when `allow_loops` is set.
    pub fn parse_edge_list(text: &str, allow_loops: bool) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| ParseError::Eof("missing header line".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(ParseError::at(hline, "header must be `n m`").into());
        }
        let n: usize = head[0]
            .parse()
            .map_err(|_| ParseError::at(hline, "bad vertex count"))?;
        let m: usize = head[1]
            .parse()
            .map_err(|_| ParseError::at(hline, "bad edge count"))?;
        let mut edges = Vec::with_capacity(m);
        for (line, body) in lines {
            let parts: Vec<&str> = body.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(ParseError::at(line, "edge line must be `i j weight`").into());
            }
            let i: usize = parts[0]
                .parse()
                .map_err(|_| ParseError::at(line, "bad vertex index"))?;
            let j: usize = parts[1]
                .parse()
                .map_err(|_| ParseError::at(line, "bad vertex index"))?;
            let w = parse_rational(parts[2]).map_err(|_| ParseError::at(line, "bad weight"))?;
            edges.push((i, j, w));
        }
        if edges.len() != m {
            return Err(ParseError::Eof(format!(
                "header announces {m} edges, found {}",
                edges.len()
            ))
            .into());
        }
        Self::build(n, edges, allow_loops)
    }
}

/// All pairs `i < j` of `1..=n` in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=n).flat_map(move |i| (i + 1..=n).map(move |j| (i, j)))
}

/// Which vertex sets play the role of `V^+` / `V^-` on a signed cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CycleSemantics {
    /// `V^±` are the vertices where two edges of the same sign meet. This
    /// makes the cycle pair coincide with odd-cycle inequalities for
    /// `D = E^-` and `D = E^+`.
    #[default]
    Junction,
    /// `V^± = { i : {i-1, i} ∈ E^± }`, read off the edge entering each vertex.
    Literal,
}

/// Sign data of a cycle with the standard numbering. Edge indices are
/// 1-based; vertex `i` lies between edge `i-1` and edge `i` (edge `0` means
/// edge `n`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPartition {
    pub e_plus: Vec<usize>,
    pub e_minus: Vec<usize>,
    pub v_plus: Vec<usize>,
    pub v_minus: Vec<usize>,
    /// `E^-` when its size is odd, else `E^+` when odd, else `None`.
    pub d_set: Option<Vec<usize>>,
    pub semantics: CycleSemantics,
}

impl SignPartition {
    /// `positive[k-1]` is the sign of edge `k`.
    pub fn from_signs(positive: &[bool], semantics: CycleSemantics) -> Self {
        let n = positive.len();
        let e_plus: Vec<usize> = (1..=n).filter(|&k| positive[k - 1]).collect();
        let e_minus: Vec<usize> = (1..=n).filter(|&k| !positive[k - 1]).collect();
        let entering = |v: usize| if v == 1 { n } else { v - 1 };
        let (v_plus, v_minus) = match semantics {
            CycleSemantics::Junction => (
                (1..=n)
                    .filter(|&v| positive[entering(v) - 1] && positive[v - 1])
                    .collect(),
                (1..=n)
                    .filter(|&v| !positive[entering(v) - 1] && !positive[v - 1])
                    .collect(),
            ),
            CycleSemantics::Literal => (
                (1..=n).filter(|&v| positive[entering(v) - 1]).collect(),
                (1..=n).filter(|&v| !positive[entering(v) - 1]).collect(),
            ),
        };
        let d_set = if e_minus.len() % 2 == 1 {
            Some(e_minus.clone())
        } else if e_plus.len() % 2 == 1 {
            Some(e_plus.clone())
        } else {
            None
        };
        SignPartition {
            e_plus,
            e_minus,
            v_plus,
            v_minus,
            d_set,
            semantics,
        }
    }
}

/// Dense adjacency matrix plus sorted neighbour lists (loops ignored).
#[derive(Debug, Clone)]
pub struct Adjacency {
    n: usize,
    matrix: Vec<bool>,
    neighbours: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut matrix = vec![false; (n + 1) * (n + 1)];
        let mut neighbours = vec![Vec::new(); n + 1];
        for (i, j) in edges {
            if i == j || matrix[i * (n + 1) + j] {
                continue;
            }
            matrix[i * (n + 1) + j] = true;
            matrix[j * (n + 1) + i] = true;
            neighbours[i].push(j);
            neighbours[j].push(i);
        }
        for list in &mut neighbours {
            list.sort_unstable();
        }
        Adjacency {
            n,
            matrix,
            neighbours,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.matrix[i * (self.n + 1) + j]
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.neighbours[v]
    }

    /// Cliques with between `k_min` and `k_max` vertices, each once, as
    /// sorted vertex lists in lexicographic order.
    pub fn cliques(&self, k_min: usize, k_max: usize) -> CliqueIter<'_> {
        CliqueIter {
            adj: self,
            k_min: k_min.max(1),
            k_max,
            current: Vec::new(),
            frames: vec![Frame {
                candidates: (1..=self.n).collect(),
                pos: 0,
            }],
        }
    }

    /// Simple cycles with between `k_min` and `k_max` vertices, each once.
    /// A cycle is reported starting at its smallest vertex, oriented so the
    /// second vertex is smaller than the last.
    pub fn cycles(&self, k_min: usize, k_max: usize) -> CycleIter<'_> {
        CycleIter {
            adj: self,
            k_min: k_min.max(3),
            k_max,
            start: 0,
            path: Vec::new(),
            cursors: Vec::new(),
            on_path: vec![false; self.n + 1],
        }
    }
}

#[derive(Debug)]
struct Frame {
    candidates: Vec<usize>,
    pos: usize,
}

pub struct CliqueIter<'a> {
    adj: &'a Adjacency,
    k_min: usize,
    k_max: usize,
    current: Vec<usize>,
    frames: Vec<Frame>,
}

impl Iterator for CliqueIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        loop {
            let depth = self.frames.len();
            let frame = self.frames.last_mut()?;
            let remaining = frame.candidates.len() - frame.pos;
            if remaining == 0 || self.current.len() + remaining < self.k_min {
                self.frames.pop();
                if depth > 1 {
                    self.current.pop();
                }
                continue;
            }
            let v = frame.candidates[frame.pos];
            frame.pos += 1;
            let next = if self.current.len() + 1 < self.k_max {
                frame.candidates[frame.pos..]
                    .iter()
                    .copied()
                    .filter(|&u| self.adj.adjacent(u, v))
                    .collect()
            } else {
                Vec::new()
            };
            self.current.push(v);
            self.frames.push(Frame {
                candidates: next,
                pos: 0,
            });
            if self.current.len() >= self.k_min {
                return Some(self.current.clone());
            }
        }
    }
}

pub struct CycleIter<'a> {
    adj: &'a Adjacency,
    k_min: usize,
    k_max: usize,
    start: usize,
    path: Vec<usize>,
    cursors: Vec<usize>,
    on_path: Vec<bool>,
}

impl Iterator for CycleIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        loop {
            if self.path.is_empty() {
                self.start += 1;
                if self.start > self.adj.n() || self.k_max < self.k_min {
                    return None;
                }
                self.path.push(self.start);
                self.cursors.push(0);
                self.on_path[self.start] = true;
                continue;
            }
            let depth = self.path.len();
            let last = self.path[depth - 1];
            let cursor = self.cursors[depth - 1];
            let neighbours = self.adj.neighbours(last);
            if depth >= self.k_max || cursor >= neighbours.len() {
                self.cursors.pop();
                self.on_path[last] = false;
                self.path.pop();
                continue;
            }
            self.cursors[depth - 1] += 1;
            let u = neighbours[cursor];
            if u <= self.start || self.on_path[u] {
                continue;
            }
            self.path.push(u);
            self.cursors.push(0);
            self.on_path[u] = true;
            let len = self.path.len();
            if len >= self.k_min && self.path[1] < u && self.adj.adjacent(u, self.start) {
                return Some(self.path.clone());
            }
        }
    }
}

pub fn enumerate_cliques<S: Scalar>(
    g: &WeightedGraph<S>,
    k_min: usize,
    k_max: usize,
) -> Vec<Vec<usize>> {
    g.adjacency().cliques(k_min, k_max).collect()
}

pub fn enumerate_cycles<S: Scalar>(
    g: &WeightedGraph<S>,
    k_min: usize,
    k_max: usize,
) -> Vec<Vec<usize>> {
    g.adjacency().cycles(k_min, k_max).collect()
}

/// How random edge weights are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightSampler {
    /// Standard normal double, converted exactly to the rational it denotes.
    #[default]
    Normal,
    Unit,
    RandomSign,
}

impl WeightSampler {
    fn draw<R: Rng>(self, rng: &mut R) -> Rational {
        match self {
            WeightSampler::Normal => loop {
                let v: f64 = StandardNormal.sample(rng);
                if v != 0.0 {
                    return v.to_rational();
                }
            },
            WeightSampler::Unit => Rational::one(),
            WeightSampler::RandomSign => {
                if rng.random_bool(0.5) {
                    Rational::one()
                } else {
                    -Rational::one()
                }
            }
        }
    }
}

/// `G(n, p)`: each pair `i < j` (lexicographic order) is kept with
/// probability `p`, and a weight is drawn for every kept pair.
pub fn erdos_renyi<S: Scalar>(
    n: usize,
    p: f64,
    seed: u64,
    sampler: WeightSampler,
) -> Result<WeightedGraph<S>, GraphError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(GraphError::InvalidProbability(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for (i, j) in pairs(n) {
        if rng.random_bool(p) {
            let w = sampler.draw(&mut rng);
            edges.push((i, j, S::from_rational(&w)));
        }
    }
    WeightedGraph::from_edge_list(n, edges)
}

/// Uniform random forest on `n` vertices: vertex `v > 1` attaches to a
/// uniformly chosen earlier vertex with probability `attach`, then labels
/// are shuffled.
pub fn random_forest<S: Scalar>(
    n: usize,
    attach: f64,
    seed: u64,
    sampler: WeightSampler,
) -> WeightedGraph<S> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (1..=n).collect();
    labels.shuffle(&mut rng);
    let mut edges = Vec::new();
    for v in 2..=n {
        if rng.random_bool(attach.clamp(0.0, 1.0)) {
            let u = rng.random_range(1..v);
            let w = sampler.draw(&mut rng);
            edges.push((labels[u - 1], labels[v - 1], S::from_rational(&w)));
        }
    }
    WeightedGraph::from_edge_list(n, edges).expect("forest edges are distinct")
}
