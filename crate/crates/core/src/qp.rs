//! Box-constrained (QC)QPs and their linear and convex relaxations.
//!
//! An instance is
//! `min x'Q⁰x + c⁰'x  s.t.  x'Qᵏx + cᵏ'x <= bᵏ (k = 1..K),  s·Σx = s,  x ∈ [0,1]^n`
//! with symmetric `Qᵏ`. Linearising replaces `x_i x_j` by `y_ij = y_ji`, so
//! `x'Qx` becomes `Σ_i Q_ii y_ii + 2 Σ_{i<j} Q_ij y_ij`, and adds McCormick
//! rows for every product in use plus triangle rows for the triangles of
//! each loop-free support graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ExperimentError, ParseError};
use crate::graph::{Adjacency, WeightedGraph};
use crate::inequalities::{mccormick, triangle, ConstraintSystem};
use crate::lp::{self, Direction, LpProblem, Sense};
use crate::lpfile::{system_to_lp, write_lp};
use crate::scalar::{fraction, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct QpInstance {
    pub n: usize,
    /// Whether the simplex row `Σx = 1` is active.
    pub simplex: bool,
    /// Upper triangles (`i <= j`, 1-based) of `Q⁰, Q¹, …, Qᴷ`.
    pub q: Vec<BTreeMap<(usize, usize), Rational>>,
    /// Sparse `c⁰, …, cᴷ` (1-based).
    pub c: Vec<BTreeMap<usize, Rational>>,
    /// `b¹, …, bᴷ`.
    pub b: Vec<Rational>,
}

impl QpInstance {
    /// Unconstrained instance with the given objective.
    pub fn new(n: usize, simplex: bool) -> Self {
        QpInstance {
            n,
            simplex,
            q: vec![BTreeMap::new()],
            c: vec![BTreeMap::new()],
            b: Vec::new(),
        }
    }

    /// Number of quadratic constraints `|K|`.
    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn set_q(&mut self, k: usize, i: usize, j: usize, v: Rational) {
        let key = if i <= j { (i, j) } else { (j, i) };
        if v.is_zero() {
            self.q[k].remove(&key);
        } else {
            self.q[k].insert(key, v);
        }
    }

    pub fn set_c(&mut self, k: usize, i: usize, v: Rational) {
        if v.is_zero() {
            self.c[k].remove(&i);
        } else {
            self.c[k].insert(i, v);
        }
    }

    /// Appends an empty constraint `0 <= b`; returns its index `k`.
    pub fn add_constraint(&mut self, b: Rational) -> usize {
        self.q.push(BTreeMap::new());
        self.c.push(BTreeMap::new());
        self.b.push(b);
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::MalformedInstance(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.q.len() != self.b.len() + 1 || self.c.len() != self.q.len() {
            return bad("Q, c and b blocks do not line up".into());
        }
        for (k, q) in self.q.iter().enumerate() {
            for &(i, j) in q.keys() {
                if i == 0 || i > j || j > self.n {
                    return bad(format!("Q{k} entry ({i}, {j}) is out of range"));
                }
            }
        }
        for (k, c) in self.c.iter().enumerate() {
            if let Some(&i) = c.keys().find(|&&i| i == 0 || i > self.n) {
                return bad(format!("c{k} entry {i} is out of range"));
            }
        }
        Ok(())
    }

    /// `x'Qᵏx + cᵏ'x`.
    pub fn value(&self, k: usize, x: &[Rational]) -> Rational {
        let quad = self.q[k]
            .iter()
            .fold(Rational::zero(), |acc, (&(i, j), v)| {
                let t = v * &x[i - 1] * &x[j - 1];
                if i == j {
                    acc + t
                } else {
                    acc + t * Rational::from_integer(2.into())
                }
            });
        self.c[k]
            .iter()
            .fold(quad, |acc, (&i, v)| acc + v * &x[i - 1])
    }

    /// Support graph of `Qᵏ`: weight `2Q_ij` on `ij`, `Q_ii` on loops.
    pub fn support(&self, k: usize) -> WeightedGraph<Rational> {
        let edges = self.q[k].iter().map(|(&(i, j), v)| {
            let w = if i == j {
                v.clone()
            } else {
                v * Rational::from_integer(2.into())
            };
            (i, j, w)
        });
        WeightedGraph::with_loops(self.n, edges).expect("validated instance")
    }

    /// Plain-text form: a header `n |K| s`, then for each `k` a block
    /// `Qk <count>` of `i j value` lines, `ck <count>` of `i value` lines and
    /// (for `k >= 1`) `bk value`. `#` starts a comment.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.k(), u8::from(self.simplex));
        for k in 0..self.q.len() {
            let _ = writeln!(out, "Q{k} {}", self.q[k].len());
            for (&(i, j), v) in &self.q[k] {
                let _ = writeln!(out, "{i} {j} {}", fraction(v));
            }
            let _ = writeln!(out, "c{k} {}", self.c[k].len());
            for (&i, v) in &self.c[k] {
                let _ = writeln!(out, "{i} {}", fraction(v));
            }
            if k >= 1 {
                let _ = writeln!(out, "b{k} {}", fraction(&self.b[k - 1]));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| ParseError::Eof(format!("expected {what}")))
        };
        let (ln, header) = next("the header 'n |K| s'")?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let num = |s: &str, ln: usize| {
            s.parse::<usize>()
                .map_err(|_| ParseError::at(ln, format!("expected an integer, got {s:?}")))
        };
        if h.len() != 3 {
            return Err(ParseError::at(ln, "header must be 'n |K| s'").into());
        }
        let (n, kk, s) = (num(h[0], ln)?, num(h[1], ln)?, num(h[2], ln)?);
        if s > 1 {
            return Err(ParseError::at(ln, "s must be 0 or 1").into());
        }
        let mut inst = QpInstance::new(n, s == 1);
        for _ in 0..kk {
            inst.add_constraint(Rational::zero());
        }
        let block = |line: (usize, &str), tag: String| -> Result<usize, ParseError> {
            let (ln, l) = line;
            let mut it = l.split_whitespace();
            if it.next() != Some(tag.as_str()) {
                return Err(ParseError::at(ln, format!("expected block {tag}")));
            }
            let count = it
                .next()
                .ok_or_else(|| ParseError::at(ln, format!("{tag} needs a count")))?;
            count
                .parse()
                .map_err(|_| ParseError::at(ln, format!("bad count {count:?}")))
        };
        for k in 0..=kk {
            let m = block(next("a Q block")?, format!("Q{k}"))?;
            for _ in 0..m {
                let (ln, l) = next("a Q entry")?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(ParseError::at(ln, "Q entries are 'i j value'").into());
                }
                let (i, j) = (num(f[0], ln)?, num(f[1], ln)?);
                inst.set_q(k, i, j, parse_rational(f[2])?);
            }
            let m = block(next("a c block")?, format!("c{k}"))?;
            for _ in 0..m {
                let (ln, l) = next("a c entry")?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 2 {
                    return Err(ParseError::at(ln, "c entries are 'i value'").into());
                }
                inst.set_c(k, num(f[0], ln)?, parse_rational(f[1])?);
            }
            if k >= 1 {
                let (ln, l) = next("a b line")?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 2 || f[0] != format!("b{k}") {
                    return Err(ParseError::at(ln, format!("expected 'b{k} value'")).into());
                }
                inst.b[k - 1] = parse_rational(f[1])?;
            }
        }
        if let Ok((ln, _)) = next("") {
            return Err(ParseError::at(ln, "trailing content").into());
        }
        inst.validate()?;
        Ok(inst)
    }
}

/// Triangles of the loop-free support graphs of all `Qᵏ`, deduplicated
/// and sorted.
pub fn qp_triangles(inst: &QpInstance) -> Vec<[usize; 3]> {
    let mut out = BTreeSet::new();
    for k in 0..inst.q.len() {
        let adj: Adjacency = inst.support(k).adjacency();
        for t in adj.cliques(3, 3) {
            out.insert([t[0], t[1], t[2]]);
        }
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Diagonal {
    /// Every product becomes a `y` variable.
    Linearize,
    /// Positive diagonal entries stay as `Q_ii x_i^2`.
    Convexify,
}

fn relaxation(
    inst: &QpInstance,
    triangles: &[[usize; 3]],
    mode: Diagonal,
) -> Result<LpProblem<Rational>, ExperimentError> {
    inst.validate()?;
    let kept_square =
        |i: usize, j: usize, v: &Rational| mode == Diagonal::Convexify && i == j && v.is_positive();
    let mut pairs = BTreeSet::new();
    for q in &inst.q {
        for (&(i, j), v) in q {
            if !kept_square(i, j, v) {
                pairs.insert((i, j));
            }
        }
    }
    let mut sys: ConstraintSystem<Rational> =
        ConstraintSystem::new("qp", inst.n, pairs.iter().copied());
    for &(i, j) in &pairs {
        sys.extend(mccormick(i, j))?;
    }
    for t in triangles {
        if t.iter().any(|&v| v == 0 || v > inst.n) {
            return Err(ExperimentError::MalformedInstance(format!(
                "triangle {t:?} is out of range"
            )));
        }
        sys.extend(triangle(t[0], t[1], t[2])).map_err(|_| {
            ExperimentError::MalformedInstance(format!("triangle {t:?} is not in the support"))
        })?;
    }
    let mut p = system_to_lp(&sys, None);
    p.name = match mode {
        Diagonal::Linearize => "qp-linearization".into(),
        Diagonal::Convexify => "qp-convexification".into(),
    };
    let n = inst.n;
    let two = Rational::from_integer(2.into());
    let linear_part = |k: usize| {
        let mut lin: BTreeMap<usize, Rational> = BTreeMap::new();
        let mut quad: Vec<(usize, Rational)> = Vec::new();
        for (&i, v) in &inst.c[k] {
            *lin.entry(i - 1).or_insert_with(Rational::zero) += v;
        }
        for (&(i, j), v) in &inst.q[k] {
            if kept_square(i, j, v) {
                quad.push((i - 1, v.clone()));
                continue;
            }
            let col = n + sys.y_index(i, j).expect("pair registered");
            let coef = if i == j { v.clone() } else { v * &two };
            *lin.entry(col).or_insert_with(Rational::zero) += coef;
        }
        let lin: Vec<(usize, Rational)> = lin.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        (lin, quad)
    };
    for k in 1..inst.q.len() {
        let (coeffs, quad) = linear_part(k);
        let r = p.add_row(format!("g{k}"), coeffs, Sense::Le, inst.b[k - 1].clone());
        p.rows[r].quad = quad;
    }
    if inst.simplex {
        p.add_row(
            "simplex",
            (0..n).map(|j| (j, Rational::one())).collect(),
            Sense::Eq,
            Rational::one(),
        );
    }
    let (obj, quad) = linear_part(0);
    p.set_objective(Direction::Minimize, obj);
    p.objective_quad = quad;
    Ok(p)
}

/// The linearised relaxation with all McCormick and triangle rows.
pub fn build_qp_linearization(inst: &QpInstance) -> Result<LpProblem<Rational>, ExperimentError> {
    relaxation(inst, &qp_triangles(inst), Diagonal::Linearize)
}

/// Like [`build_qp_linearization`] but with a chosen set of triangles.
pub fn build_qp_linearization_with(
    inst: &QpInstance,
    triangles: &[[usize; 3]],
) -> Result<LpProblem<Rational>, ExperimentError> {
    relaxation(inst, triangles, Diagonal::Linearize)
}

/// The convex relaxation: positive diagonal terms stay quadratic, every
/// other product is linearised, and McCormick/triangle rows cover the
/// linearised products.
pub fn qp_convexification(inst: &QpInstance) -> Result<LpProblem<Rational>, ExperimentError> {
    let tri: Vec<[usize; 3]> = qp_triangles(inst);
    relaxation(inst, &tri, Diagonal::Convexify)
}

const CONVEX_HEADER: &str = "\\ Convex relaxation of a box-constrained (QC)QP.
\\ Positive diagonal terms are kept as squares; all other products are
\\ replaced by y variables with McCormick and triangle rows. Its optimum
\\ lies between that of the linearisation (below) and that of the
\\ original problem (above).
";

pub fn emit_qp_convexification(inst: &QpInstance, path: &Path) -> Result<(), ExperimentError> {
    let p = qp_convexification(inst)?;
    std::fs::write(path, format!("{CONVEX_HEADER}{}", write_lp(&p)))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub fraction: f64,
    pub triangles: usize,
    pub bound: Rational,
    pub seconds: f64,
}

/// Solves the linearisation with growing random subsets of the triangles.
/// The subsets are nested: one seeded shuffle, then prefixes of length
/// `round(fraction · total)`, so the bounds never decrease.
pub fn triangle_sampling_curve(
    inst: &QpInstance,
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<CurvePoint>, ExperimentError> {
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(ExperimentError::BadConfig(format!(
            "fraction {f} lies outside [0, 1]"
        )));
    }
    let mut all = qp_triangles(inst);
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let take = ((f * all.len() as f64).round() as usize).min(all.len());
        let p = build_qp_linearization_with(inst, &all[..take])?;
        let start = Instant::now();
        let sol = lp::solve(&p)?;
        let seconds = start.elapsed().as_secs_f64();
        let bound = match sol.value {
            Some(v) if sol.is_optimal() => v,
            _ => {
                return Err(ExperimentError::MalformedInstance(format!(
                    "relaxation is {:?} with {take} triangles",
                    sol.status
                )))
            }
        };
        out.push(CurvePoint {
            fraction: f,
            triangles: take,
            bound,
            seconds,
        });
    }
    Ok(out)
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("fraction,triangles,bound,bound_exact,seconds\n");
    for p in points {
        let approx = crate::scalar::Scalar::to_f64(&p.bound);
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6}",
            p.fraction,
            p.triangles,
            approx,
            fraction(&p.bound),
            p.seconds
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpfile::parse_lp;
    use crate::scalar::{int, rat};

    /// `min -(x1 x2 + x2 x3 + x1 x3) + x1^2` over the simplex.
    fn small() -> QpInstance {
        let mut q = QpInstance::new(3, true);
        q.set_q(0, 1, 2, rat(-1, 2));
        q.set_q(0, 2, 3, rat(-1, 2));
        q.set_q(0, 1, 3, rat(-1, 2));
        q.set_q(0, 1, 1, int(1));
        q.set_c(0, 3, rat(1, 3));
        q
    }

    #[test]
    fn text_round_trip() {
        let mut q = small();
        let k = q.add_constraint(rat(3, 4));
        q.set_q(k, 2, 2, int(-1));
        q.set_c(k, 1, int(2));
        let text = q.to_text();
        assert_eq!(QpInstance::parse(&text).unwrap(), q);
        assert!(QpInstance::parse("3 0 2\nQ0 0\nc0 0\n").is_err());
        assert!(QpInstance::parse("3 0 0\nQ0 1\n1 4 1\nc0 0\n").is_err());
        assert!(QpInstance::parse("3 1 0\nQ0 0\nc0 0\nQ1 0\nc1 0\n").is_err());
    }

    #[test]
    fn linearization_matches_the_objective_on_binary_points() {
        let q = small();
        let p = build_qp_linearization(&q).unwrap();
        // 3 products + 1 loop: 3·4 + 3 McCormick rows, 4 triangle rows, 1 simplex row
        assert_eq!(p.rows.len(), 12 + 3 + 4 + 1);
        let sol = lp::solve(&p).unwrap();
        let bound = sol.value.clone().unwrap();
        // every vertex of the simplex is feasible for the original problem
        for v in 0..3 {
            let mut x = vec![int(0); 3];
            x[v] = int(1);
            assert!(bound <= q.value(0, &x));
        }
        assert!(lp::verify_optimality(&p, &sol).is_ok());
    }

    #[test]
    fn diagonal_only_has_no_triangles() {
        let mut q = QpInstance::new(3, false);
        for i in 1..=3 {
            q.set_q(0, i, i, int(-1));
        }
        assert!(qp_triangles(&q).is_empty());
        let p = build_qp_linearization(&q).unwrap();
        assert_eq!(p.rows.len(), 9);
        // with only non-positive diagonals the convex form is the same problem
        assert_eq!(qp_convexification(&q).unwrap().rows, p.rows);
        assert!(!qp_convexification(&q).unwrap().is_quadratic());
    }

    #[test]
    fn positive_diagonal_stays_quadratic() {
        let mut q = QpInstance::new(2, false);
        q.set_q(0, 1, 1, int(2));
        q.set_q(0, 2, 2, int(3));
        q.set_q(0, 1, 2, int(-1));
        let p = qp_convexification(&q).unwrap();
        assert_eq!(p.objective_quad, vec![(0, int(2)), (1, int(3))]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.lp");
        emit_qp_convexification(&q, &path).unwrap();
        let back = parse_lp(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back.objective_quad, p.objective_quad);
        assert_eq!(back.objective, p.objective);
    }

    #[test]
    fn nested_fractions_give_monotone_bounds() {
        let mut q = QpInstance::new(5, false);
        let w = [3, -2, 5, -1, 4, -3, 2, 1, -4, 2];
        for (k, (i, j)) in crate::graph::pairs(5).enumerate() {
            q.set_q(0, i, j, int(w[k]));
        }
        q.set_c(0, 2, int(1));
        let curve = triangle_sampling_curve(&q, &[0.0, 0.3, 0.6, 1.0], 11).unwrap();
        assert_eq!(curve[0].triangles, 0);
        assert_eq!(curve[3].triangles, 10);
        for w in curve.windows(2) {
            assert!(w[0].bound <= w[1].bound);
        }
        let mc = lp::solve(&build_qp_linearization_with(&q, &[]).unwrap())
            .unwrap()
            .value
            .unwrap();
        assert_eq!(curve[0].bound, mc);
        assert!(triangle_sampling_curve(&q, &[1.5], 1).is_err());
    }
}
