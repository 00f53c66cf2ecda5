//! Interval-set certificates.
//!
//! Assigning to each variable a finite union `X_i` of half-open intervals in
//! `[0, 1)` with Lebesgue measure `μ(X_i) = x_i` gives a point of `X(f)`:
//! `(x, Σ a_ij μ(X_i ∩ X_j))`. So any such family bounds `vex` from above
//! and `cav` from below. This module implements the set algebra and the
//! explicit families used for complete graphs, the almost complete graph
//! and signed cycles.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use crate::error::{GraphError, IntervalError, ParseError};
use crate::graph::{CycleSemantics, SignPartition, WeightedGraph};
use crate::scalar::{fraction, parse_rational, Rational, Scalar};

/// Finite union of disjoint half-open intervals `[a, b)` inside `[0, 1)`,
/// kept sorted with touching intervals merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet<S> {
    intervals: Vec<(S, S)>,
}

impl<S: Scalar> IntervalSet<S> {
    pub fn empty() -> Self {
        IntervalSet {
            intervals: Vec::new(),
        }
    }

    pub fn full() -> Self {
        IntervalSet {
            intervals: vec![(S::zero(), S::one())],
        }
    }

    /// `[a, b)`; empty when `a == b`.
    pub fn interval(a: S, b: S) -> Result<Self, IntervalError> {
        Self::from_intervals([(a, b)])
    }

    /// Normalises an arbitrary list of intervals (overlaps allowed).
    pub fn from_intervals(list: impl IntoIterator<Item = (S, S)>) -> Result<Self, IntervalError> {
        let mut raw: Vec<(S, S)> = Vec::new();
        for (a, b) in list {
            if a < S::zero() || b > S::one() || a > b {
                return Err(IntervalError::BadInterval(a.to_string(), b.to_string()));
            }
            if a < b {
                raw.push((a, b));
            }
        }
        Ok(Self::normalise(raw))
    }

    fn normalise(mut raw: Vec<(S, S)>) -> Self {
        raw.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("comparable endpoints"));
        let mut out: Vec<(S, S)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match out.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn intervals(&self) -> &[(S, S)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> S {
        self.intervals
            .iter()
            .fold(S::zero(), |acc, (a, b)| acc + b.clone() - a.clone())
    }

    pub fn contains(&self, t: &S) -> bool {
        self.intervals.iter().any(|(a, b)| a <= t && t < b)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::normalise(
            self.intervals
                .iter()
                .chain(&other.intervals)
                .cloned()
                .collect(),
        )
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (p, q) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < p.len() && j < q.len() {
            let lo = S::max_of(p[i].0.clone(), q[j].0.clone());
            let hi = S::min_of(p[i].1.clone(), q[j].1.clone());
            if lo < hi {
                out.push((lo, hi));
            }
            if p[i].1 < q[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { intervals: out }
    }

    /// `[0, 1) \ self`.
    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut pos = S::zero();
        for (a, b) in &self.intervals {
            if pos < *a {
                out.push((pos.clone(), a.clone()));
            }
            pos = b.clone();
        }
        if pos < S::one() {
            out.push((pos, S::one()));
        }
        IntervalSet { intervals: out }
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersect(&other.complement())
    }

    /// Leftmost part of the set with measure exactly `amount`.
    pub fn take_measure(&self, amount: &S) -> Result<Self, IntervalError> {
        let available = self.measure();
        if amount.is_negative() || *amount > available {
            return Err(IntervalError::TooMuch {
                requested: amount.to_string(),
                available: available.to_string(),
            });
        }
        let mut left = amount.clone();
        let mut out = Vec::new();
        for (a, b) in &self.intervals {
            if !left.is_positive() {
                break;
            }
            let len = b.clone() - a.clone();
            if len <= left {
                out.push((a.clone(), b.clone()));
                left = left - len;
            } else {
                out.push((a.clone(), a.clone() + left.clone()));
                left = S::zero();
            }
        }
        Ok(IntervalSet { intervals: out })
    }
}

impl<S: Scalar> fmt::Display for IntervalSet<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("∅");
        }
        for (k, (a, b)) in self.intervals.iter().enumerate() {
            if k > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(
                f,
                "[{}, {})",
                fraction(&a.to_rational()),
                fraction(&b.to_rational())
            )?;
        }
        Ok(())
    }
}

/// Measures `μ(R_ξ)` of the atoms `R_ξ = {t : t ∈ X_i ⇔ ξ_i = 1}`, for the
/// patterns `ξ` with positive measure, in lexicographic order of `ξ`.
pub fn atoms<S: Scalar>(sets: &[IntervalSet<S>]) -> Vec<(Vec<bool>, S)> {
    let mut points: Vec<S> = vec![S::zero(), S::one()];
    for s in sets {
        for (a, b) in s.intervals() {
            points.push(a.clone());
            points.push(b.clone());
        }
    }
    points.sort_by(|p, q| p.partial_cmp(q).expect("comparable endpoints"));
    points.dedup();
    let mut acc: BTreeMap<Vec<bool>, S> = BTreeMap::new();
    for w in points.windows(2) {
        let pattern: Vec<bool> = sets.iter().map(|s| s.contains(&w[0])).collect();
        let len = w[1].clone() - w[0].clone();
        let slot = acc.entry(pattern).or_insert_with(S::zero);
        *slot = slot.clone() + len;
    }
    acc.into_iter().filter(|(_, m)| m.is_positive()).collect()
}

/// `Σ a_ij μ(X_i ∩ X_j)` (loops contribute `a_ii μ(X_i)`).
pub fn certificate_value<S: Scalar>(
    sets: &[IntervalSet<S>],
    g: &WeightedGraph<S>,
) -> Result<S, IntervalError> {
    if sets.len() != g.n() {
        return Err(GraphError::DimensionMismatch {
            expected: g.n(),
            got: sets.len(),
        }
        .into());
    }
    Ok(g.edges().iter().fold(S::zero(), |acc, e| {
        let m = sets[e.i - 1].intersect(&sets[e.j - 1]).measure();
        acc + e.weight.clone() * m
    }))
}

/// Measures of the sets, i.e. the point they represent.
pub fn point_of<S: Scalar>(sets: &[IntervalSet<S>]) -> Vec<S> {
    sets.iter().map(|s| s.measure()).collect()
}

/// Lays the weights out as consecutive intervals and lets `X_i` collect the
/// intervals of the vertices with `ξ_i = 1`.
pub fn from_convex_combination<S: Scalar>(
    lambda: &[(Vec<bool>, S)],
) -> Result<Vec<IntervalSet<S>>, IntervalError> {
    let n = lambda.first().map_or(0, |(xi, _)| xi.len());
    if lambda.is_empty()
        || lambda
            .iter()
            .any(|(xi, l)| xi.len() != n || l.is_negative())
    {
        return Err(IntervalError::BadWeights);
    }
    let total = lambda.iter().fold(S::zero(), |acc, (_, l)| acc + l.clone());
    if !(total - S::one()).approx_zero() {
        return Err(IntervalError::BadWeights);
    }
    let mut pieces: Vec<Vec<(S, S)>> = vec![Vec::new(); n];
    let mut pos = S::zero();
    for (k, (xi, l)) in lambda.iter().enumerate() {
        // The last interval ends at exactly 1 even for inexact scalars.
        let end = if k + 1 == lambda.len() {
            S::one()
        } else {
            pos.clone() + l.clone()
        };
        for (i, &bit) in xi.iter().enumerate() {
            if bit {
                pieces[i].push((pos.clone(), end.clone()));
            }
        }
        pos = end;
    }
    pieces
        .into_iter()
        .map(IntervalSet::from_intervals)
        .collect()
}

/// Wrap-around layout: intervals of lengths `x_1, …, x_n` are concatenated
/// and read modulo 1. Every point of `[0, 1)` is covered by `s` or `s + 1`
/// sets where `s = ⌊Σx⌋`.
pub fn clique_construction<S: Scalar>(x: &[S]) -> Vec<IntervalSet<S>> {
    let mut pos = S::zero();
    x.iter()
        .map(|xi| {
            if xi.clone() >= S::one() {
                return IntervalSet::full();
            }
            let end = pos.clone() + xi.clone();
            let set = if end <= S::one() {
                IntervalSet::from_intervals([(pos.clone(), end.clone())])
            } else {
                let over = end.clone() - S::one();
                IntervalSet::from_intervals([(pos.clone(), S::one()), (S::zero(), over)])
            }
            .expect("pieces lie in [0, 1)");
            pos = if end >= S::one() { end - S::one() } else { end };
            set
        })
        .collect()
}

/// Outcome of the almost-complete-graph construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KnMinusConstruction<S> {
    /// `X_v` for every original vertex `v` (index `v - 1`).
    pub sets: Vec<IntervalSet<S>>,
    /// `order[k]` is the original vertex placed at sorted position `k + 1`.
    pub order: Vec<usize>,
    /// Final values of the two frontier markers.
    pub a: S,
    pub b: S,
}

/// Sets for `K_n^-` (the non-edge is `{n-1, n}`). The input is relabelled
/// so that `x_n <= x_{n-1}` and `x_1 >= … >= x_{n-2}`; vertices `n-1`, `n`
/// start at `[0, x)` and the others are placed one after another behind
/// the two frontiers `a <= b`.
pub fn kn_minus_construction<S: Scalar>(x: &[S]) -> KnMinusConstruction<S> {
    let n = x.len();
    assert!(n >= 3, "the construction needs at least three vertices");
    let mut head: Vec<usize> = (1..=n - 2).collect();
    // Stable sort keeps equal values in index order.
    head.sort_by(|&p, &q| x[q - 1].partial_cmp(&x[p - 1]).expect("comparable"));
    let (hi, lo) = if x[n - 1] <= x[n - 2] {
        (n - 1, n)
    } else {
        (n, n - 1)
    };
    let mut order = head.clone();
    order.push(hi);
    order.push(lo);

    let mut sets = vec![IntervalSet::empty(); n];
    let xs = |v: usize| x[v - 1].clone();
    sets[lo - 1] = IntervalSet::interval(S::zero(), xs(lo)).expect("x in box");
    sets[hi - 1] = IntervalSet::interval(S::zero(), xs(hi)).expect("x in box");
    let (mut a, mut b) = (xs(lo), xs(hi));
    let one = S::one();
    for &v in &head {
        let xv = xs(v);
        let set = if xv <= one.clone() - b.clone() {
            let s = IntervalSet::interval(b.clone(), b.clone() + xv.clone());
            b = b + xv;
            s
        } else if xv <= one.clone() - a.clone() {
            let end = a.clone() + xv.clone() + b.clone() - one.clone();
            let s =
                IntervalSet::from_intervals([(b.clone(), one.clone()), (a.clone(), end.clone())]);
            a = end;
            b = one.clone();
            s
        } else {
            let end = xv.clone() + a.clone() - one.clone();
            let s =
                IntervalSet::from_intervals([(a.clone(), one.clone()), (S::zero(), end.clone())]);
            a = end;
            s
        };
        sets[v - 1] = set.expect("pieces lie in [0, 1)");
    }
    KnMinusConstruction { sets, order, a, b }
}

/// Fills a set of measure `x` from `y[0]`, then `y[1]`, … (leftmost part
/// of each). The four sets must partition `[0, 1)`.
pub fn bucket<S: Scalar>(y: [&IntervalSet<S>; 4], x: &S) -> Result<IntervalSet<S>, IntervalError> {
    let mut union = IntervalSet::empty();
    let mut total = S::zero();
    for s in y {
        if !union.intersect(s).measure().approx_zero() {
            return Err(IntervalError::BadPartition);
        }
        union = union.union(s);
        total = total + s.measure();
    }
    if union != IntervalSet::full() || !(total - S::one()).approx_zero() {
        return Err(IntervalError::BadPartition);
    }
    if x.is_negative() || *x > S::one() {
        return Err(IntervalError::TooMuch {
            requested: x.to_string(),
            available: "1".into(),
        });
    }
    let mut out = IntervalSet::empty();
    let mut left = x.clone();
    for s in y {
        if !left.is_positive() {
            break;
        }
        let take = S::min_of(s.measure(), left.clone());
        out = out.union(&s.take_measure(&take)?);
        left = left - take;
    }
    Ok(out)
}

/// Quantities of the signed-cycle construction, in rotated coordinates
/// (edge `n` has the smallest `|a|`).
#[derive(Debug, Clone, PartialEq)]
pub struct CycleContext<S> {
    /// Rotated vertex `i` (1-based) is original vertex `rotation[i - 1]`.
    pub rotation: Vec<usize>,
    /// Rotated weights, edge `i = {i, i+1}`.
    pub a: Vec<S>,
    /// Rotated point.
    pub x: Vec<S>,
    /// `μ_i = min{x_i, x_{i+1}}`.
    pub mu: Vec<S>,
    /// `η_i = max{0, x_i + x_{i+1} - 1}`.
    pub eta: Vec<S>,
    /// `x(V^+) - x(V^-) + ⌊|E^-|/2⌋`.
    pub big_a: S,
    /// `δ_i` for `i = 2..=n`, stored at index `i - 2`.
    pub defects: Vec<S>,
    /// Edge values `μ(X_i ∩ X_{i+1})`.
    pub y: Vec<S>,
}

impl<S: Scalar> CycleContext<S> {
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn delta(&self, i: usize) -> &S {
        &self.defects[i - 2]
    }

    pub fn delta_n(&self) -> &S {
        self.defects.last().expect("n >= 2")
    }

    /// `Σ_{E^+} a_i μ_i + Σ_{E^-} a_i η_i - |a_n| δ_n`.
    pub fn closed_form_value(&self) -> S {
        let base = (0..self.n()).fold(S::zero(), |acc, k| {
            let v = if self.a[k].is_positive() {
                &self.mu[k]
            } else {
                &self.eta[k]
            };
            acc + self.a[k].clone() * v.clone()
        });
        base - self.a[self.n() - 1].abs() * self.delta_n().clone()
    }

    /// `Σ_{E^+} μ_i - Σ_{E^-} η_i - A`.
    pub fn gamma(&self) -> S {
        (0..self.n()).fold(S::zero(), |acc, k| {
            if self.a[k].is_positive() {
                acc + self.mu[k].clone()
            } else {
                acc - self.eta[k].clone()
            }
        }) - self.big_a.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleConstruction<S> {
    /// `X_v` for every original vertex `v` (index `v - 1`).
    pub sets: Vec<IntervalSet<S>>,
    pub context: CycleContext<S>,
}

/// Index of the edge with the smallest `|a|` (first one on ties), 1-based.
fn rotation_edge<S: Scalar>(a: &[S]) -> usize {
    let mut best = 0;
    for k in 1..a.len() {
        if a[k].abs() < a[best].abs() {
            best = k;
        }
    }
    best + 1
}

/// Sets certifying `cav[f](x)` on a signed cycle. The cycle is rotated so
/// that the edge of smallest `|a|` becomes edge `n`; `X_1 = [0, x_1)`,
/// `X_2` is aligned with or against `X_1` by the sign of `a_1`, and each
/// further `X_i` is filled from the four regions cut out by `X_1` and
/// `X_{i-1}` in an order chosen by the sign of `a_{i-1}` and the parity of
/// the number of negative edges among `i..=n`.
pub fn cycle_construction<S: Scalar>(
    g: &WeightedGraph<S>,
    x: &[S],
) -> Result<CycleConstruction<S>, IntervalError> {
    let weights = g.cycle_weights()?;
    g.check_point(x)?;
    let n = weights.len();
    let k = rotation_edge(&weights);
    let old = |i: usize| (k + i - 1) % n + 1;
    let rotation: Vec<usize> = (1..=n).map(old).collect();
    let a: Vec<S> = (1..=n).map(|i| weights[(k + i - 1) % n].clone()).collect();
    let xr: Vec<S> = rotation.iter().map(|&v| x[v - 1].clone()).collect();
    let next = |i: usize| if i == n { 1 } else { i + 1 };

    let mut sets: Vec<IntervalSet<S>> = Vec::with_capacity(n);
    sets.push(IntervalSet::interval(S::zero(), xr[0].clone())?);
    let x2 = xr[1].clone();
    sets.push(if a[0].is_positive() {
        IntervalSet::interval(S::zero(), x2)?
    } else {
        IntervalSet::interval(S::one() - x2, S::one())?
    });
    let negatives_from = |i: usize| a[i - 1..].iter().filter(|w| w.is_negative()).count();
    for i in 3..=n {
        let prev = &sets[i - 2];
        let first = &sets[0];
        let r1 = prev.difference(first);
        let r2 = prev.intersect(first);
        let r3 = first.union(prev).complement();
        let r4 = first.difference(prev);
        let odd = negatives_from(i) % 2 == 1;
        let order = match (a[i - 2].is_positive(), odd) {
            (true, true) => [&r1, &r2, &r3, &r4],
            (true, false) => [&r2, &r1, &r4, &r3],
            (false, true) => [&r3, &r4, &r1, &r2],
            (false, false) => [&r4, &r3, &r2, &r1],
        };
        let set = bucket(order, &xr[i - 1])?;
        sets.push(set);
    }

    let mu: Vec<S> = (1..=n)
        .map(|i| S::min_of(xr[i - 1].clone(), xr[next(i) - 1].clone()))
        .collect();
    let eta: Vec<S> = (1..=n)
        .map(|i| {
            S::max_of(
                S::zero(),
                xr[i - 1].clone() + xr[next(i) - 1].clone() - S::one(),
            )
        })
        .collect();
    let part = SignPartition::from_signs(
        &a.iter().map(|w| w.is_positive()).collect::<Vec<_>>(),
        CycleSemantics::Junction,
    );
    let sum = |vs: &[usize]| vs.iter().fold(S::zero(), |acc, &v| acc + xr[v - 1].clone());
    let big_a =
        sum(&part.v_plus) - sum(&part.v_minus) + S::from_int((part.e_minus.len() / 2) as i64);
    let defects: Vec<S> = (2..=n)
        .map(|i| {
            let common = sets[0].intersect(&sets[i - 1]).measure();
            if negatives_from(i) % 2 == 1 {
                common - S::max_of(S::zero(), xr[0].clone() + xr[i - 1].clone() - S::one())
            } else {
                S::min_of(xr[i - 1].clone(), xr[0].clone()) - common
            }
        })
        .collect();
    let y: Vec<S> = (1..=n)
        .map(|i| sets[i - 1].intersect(&sets[next(i) - 1]).measure())
        .collect();

    let mut original = vec![IntervalSet::empty(); n];
    for (i, set) in sets.into_iter().enumerate() {
        original[rotation[i] - 1] = set;
    }
    Ok(CycleConstruction {
        sets: original,
        context: CycleContext {
            rotation,
            a,
            x: xr,
            mu,
            eta,
            big_a,
            defects,
            y,
        },
    })
}

/// Mismatches found by [`defect_formula_check`]; all empty means the
/// construction behaves as claimed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DefectReport {
    /// `i` with `δ_i < 0`.
    pub negative: Vec<usize>,
    /// `i >= 3` with `δ_i > δ_{i-1}`.
    pub increasing: Vec<usize>,
    /// Edges `i < n` whose value is not `μ_i` (positive) or `η_i` (negative).
    pub edge_values: Vec<usize>,
    /// Whether `δ_n = Σ_{E^+} μ_i - Σ_{E^-} η_i - A` was asserted (`δ_n > 0`).
    pub formula_asserted: bool,
    pub formula_holds: bool,
    /// `|E^-|` even but some defect is positive.
    pub even_with_defect: bool,
}

impl DefectReport {
    pub fn violations(&self) -> usize {
        self.negative.len()
            + self.increasing.len()
            + self.edge_values.len()
            + usize::from(!self.formula_holds)
            + usize::from(self.even_with_defect)
    }
}

pub fn defect_formula_check<S: Scalar>(ctx: &CycleContext<S>) -> DefectReport {
    let n = ctx.n();
    let mut report = DefectReport {
        formula_holds: true,
        ..Default::default()
    };
    for i in 2..=n {
        if ctx.delta(i).is_negative() {
            report.negative.push(i);
        }
        if i >= 3 && ctx.delta(i) > ctx.delta(i - 1) {
            report.increasing.push(i);
        }
    }
    for i in 1..n {
        let target = if ctx.a[i - 1].is_positive() {
            &ctx.mu[i - 1]
        } else {
            &ctx.eta[i - 1]
        };
        if !(ctx.y[i - 1].clone() - target.clone()).approx_zero() {
            report.edge_values.push(i);
        }
    }
    let negatives = ctx.a.iter().filter(|w| w.is_negative()).count();
    if negatives % 2 == 0 && ctx.defects.iter().any(|d| d.approx_pos()) {
        report.even_with_defect = true;
    }
    if ctx.delta_n().approx_pos() {
        report.formula_asserted = true;
        report.formula_holds = (ctx.delta_n().clone() - ctx.gamma()).approx_zero();
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    #[default]
    Upper,
    Lower,
}

/// Feasible solution `(z, w, α)` of the dual of
/// `max { Σ a_i y_i : η <= y <= μ, y(E^+) - y(E^-) <= A }`
/// in rotated coordinates, i.e. `z_i - w_i ± α >= a_i` (`+` on `E^+`).
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate<S> {
    pub side: Side,
    pub context: CycleContext<S>,
    pub alpha: S,
    pub z: Vec<S>,
    pub w: Vec<S>,
    /// `Σ (μ_i z_i - η_i w_i) + A α` for the weights actually used (negated
    /// ones on the lower side).
    pub objective: S,
    /// Certificate value of the sets, same orientation as `objective`.
    pub primal_value: S,
}

impl<S: Scalar> DualCertificate<S> {
    pub fn feasible(&self) -> bool {
        let c = &self.context;
        !self.alpha.is_negative()
            && (0..c.n()).all(|i| {
                let lhs = if c.a[i].is_positive() {
                    self.z[i].clone() - self.w[i].clone() + self.alpha.clone()
                } else {
                    self.z[i].clone() - self.w[i].clone() - self.alpha.clone()
                };
                !self.z[i].is_negative()
                    && !self.w[i].is_negative()
                    && !(c.a[i].clone() - lhs).approx_pos()
            })
    }

    /// Bound on `f` implied by the certificate: `cav[f](x)` on the upper
    /// side, `vex[f](x)` on the lower side.
    pub fn bound(&self) -> S {
        match self.side {
            Side::Upper => self.objective.clone(),
            Side::Lower => -self.objective.clone(),
        }
    }
}

fn dual_objective<S: Scalar>(ctx: &CycleContext<S>, alpha: &S, z: &[S], w: &[S]) -> S {
    (0..ctx.n()).fold(ctx.big_a.clone() * alpha.clone(), |acc, i| {
        acc + ctx.mu[i].clone() * z[i].clone() - ctx.eta[i].clone() * w[i].clone()
    })
}

/// Dual certificate matching the set construction. With `δ_n > 0` it uses
/// `α = |a_n|` and shifts every weight by `a_n`; with `δ_n = 0` the
/// McCormick multipliers alone (`α = 0`) already meet the primal value.
/// The lower side runs the same machinery on `-f`.
pub fn cycle_dual_certificate<S: Scalar>(
    g: &WeightedGraph<S>,
    x: &[S],
    side: Side,
) -> Result<DualCertificate<S>, IntervalError> {
    let h = match side {
        Side::Upper => g.clone(),
        Side::Lower => g.negated(),
    };
    let built = cycle_construction(&h, x)?;
    let ctx = built.context;
    let primal_value = certificate_value(&built.sets, &h)?;
    let (alpha, z, w) = if ctx.delta_n().approx_pos() {
        alpha_certificate(&ctx)
    } else {
        let z = ctx
            .a
            .iter()
            .map(|ai| {
                if ai.is_positive() {
                    ai.clone()
                } else {
                    S::zero()
                }
            })
            .collect();
        let w = ctx
            .a
            .iter()
            .map(|ai| {
                if ai.is_positive() {
                    S::zero()
                } else {
                    -ai.clone()
                }
            })
            .collect();
        (S::zero(), z, w)
    };
    let objective = dual_objective(&ctx, &alpha, &z, &w);
    Ok(DualCertificate {
        side,
        context: ctx,
        alpha,
        z,
        w,
        objective,
        primal_value,
    })
}

/// The `α = |a_n|` multipliers. They are feasible for any signs because
/// `|a_n|` is the smallest weight magnitude.
pub fn alpha_certificate<S: Scalar>(ctx: &CycleContext<S>) -> (S, Vec<S>, Vec<S>) {
    let n = ctx.n();
    let an = ctx.a[n - 1].clone();
    let alpha = an.abs();
    let mut z = vec![S::zero(); n];
    let mut w = vec![S::zero(); n];
    for i in 0..n {
        let ai = ctx.a[i].clone();
        if an.is_positive() {
            if ai.is_positive() {
                z[i] = ai - an.clone();
            } else {
                w[i] = -ai - an.clone();
            }
        } else if ai.is_positive() {
            z[i] = ai + an.clone();
        } else {
            w[i] = an.clone() - ai;
        }
    }
    (alpha, z, w)
}

/// Objective of the `α = |a_n|` multipliers (for inspection; matches the
/// primal value only when `δ_n > 0`).
pub fn alpha_certificate_objective<S: Scalar>(ctx: &CycleContext<S>) -> S {
    let (alpha, z, w) = alpha_certificate(ctx);
    dual_objective(ctx, &alpha, &z, &w)
}

/// Text form: first line `n`, then one line per set listing its intervals
/// as `a b` pairs (`-` for the empty set).
pub fn write_certificate(sets: &[IntervalSet<Rational>]) -> String {
    let mut out = format!("{}\n", sets.len());
    for s in sets {
        if s.is_empty() {
            out.push_str("-\n");
            continue;
        }
        let parts: Vec<String> = s
            .intervals()
            .iter()
            .map(|(a, b)| format!("{} {}", fraction(a), fraction(b)))
            .collect();
        let _ = writeln!(out, "{}", parts.join(" "));
    }
    out
}

pub fn parse_certificate(text: &str) -> Result<Vec<IntervalSet<Rational>>, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines
        .next()
        .ok_or_else(|| ParseError::Eof("missing header".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| ParseError::at(ln, format!("expected the number of sets, got {header:?}")))?;
    let mut sets = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| ParseError::Eof(format!("expected {n} sets")))?;
        if line == "-" {
            sets.push(IntervalSet::empty());
            continue;
        }
        let nums: Vec<Rational> = line
            .split_whitespace()
            .map(parse_rational)
            .collect::<Result<_, _>>()?;
        if nums.len() % 2 != 0 {
            return Err(ParseError::at(ln, "interval endpoints must come in pairs"));
        }
        let set = IntervalSet::from_intervals(nums.chunks(2).map(|c| (c[0].clone(), c[1].clone())))
            .map_err(|e| ParseError::at(ln, e.to_string()))?;
        sets.push(set);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(ParseError::at(ln, "trailing content after the last set"));
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    type I = IntervalSet<Rational>;

    fn iv(a: (i64, i64), b: (i64, i64)) -> I {
        I::interval(rat(a.0, a.1), rat(b.0, b.1)).unwrap()
    }

    fn dec(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&k| rat(k, 10)).collect()
    }

    #[test]
    fn set_algebra() {
        let s = iv((0, 1), (1, 2)).union(&iv((3, 4), (1, 1)));
        assert_eq!(s.measure(), rat(3, 4));
        let t = iv((0, 1), (6, 10)).intersect(&iv((5, 10), (1, 1)));
        assert_eq!(t, iv((5, 10), (6, 10)));
        assert_eq!(t.measure(), rat(1, 10));
        assert_eq!(s.complement().complement(), s);
        assert_eq!(s.complement(), iv((1, 2), (3, 4)));
        // touching intervals merge
        assert_eq!(
            iv((0, 1), (1, 4)).union(&iv((1, 4), (1, 2))),
            iv((0, 1), (1, 2))
        );
        assert!(I::interval(rat(1, 2), rat(1, 4)).is_err());
        assert!(I::interval(int(0), rat(3, 2)).is_err());
    }

    #[test]
    fn leftmost_fill() {
        let s = iv((0, 1), (2, 10)).union(&iv((5, 10), (1, 1)));
        assert_eq!(
            s.take_measure(&rat(3, 10)).unwrap(),
            iv((0, 1), (2, 10)).union(&iv((5, 10), (6, 10)))
        );
        assert!(s.take_measure(&int(0)).unwrap().is_empty());
        assert_eq!(s.take_measure(&s.measure()).unwrap(), s);
        assert!(matches!(
            s.take_measure(&int(1)),
            Err(IntervalError::TooMuch { .. })
        ));
    }

    #[test]
    fn bucket_fill_order() {
        let y = [
            iv((0, 1), (2, 10)),
            iv((2, 10), (5, 10)),
            iv((5, 10), (9, 10)),
            iv((9, 10), (1, 1)),
        ];
        let out = bucket([&y[0], &y[1], &y[2], &y[3]], &rat(4, 10)).unwrap();
        assert_eq!(out, iv((0, 1), (4, 10)));
        assert_eq!(
            bucket([&y[0], &y[1], &y[2], &y[3]], &int(1)).unwrap(),
            I::full()
        );
        assert_eq!(
            bucket([&y[0], &y[1], &y[2], &y[3]], &rat(1, 10)).unwrap(),
            iv((0, 1), (1, 10))
        );
        let overlap = iv((0, 1), (3, 10));
        assert_eq!(
            bucket([&overlap, &y[1], &y[2], &y[3]], &rat(1, 10)).unwrap_err(),
            IntervalError::BadPartition
        );
    }

    /// The sets drawn for the five-vertex example point.
    fn figure_two_sets() -> Vec<I> {
        vec![
            iv((0, 1), (6, 10)),
            iv((6, 10), (9, 10)),
            iv((9, 10), (1, 1)).union(&iv((0, 1), (2, 10))),
            iv((2, 10), (1, 1)).union(&iv((0, 1), (1, 10))),
            iv((1, 10), (5, 10)),
        ]
    }

    #[test]
    fn example_sets_certify_two() {
        let sets = figure_two_sets();
        assert_eq!(point_of(&sets), dec(&[6, 3, 3, 9, 4]));
        let g = WeightedGraph::complete(5, int(1));
        assert_eq!(certificate_value(&sets, &g).unwrap(), int(2));
        let at = atoms(&sets);
        let total = at.iter().fold(int(0), |acc, (_, m)| acc + m);
        assert_eq!(total, int(1));
        let weights: Vec<Rational> = at.iter().map(|(_, m)| m.clone()).collect();
        assert_eq!(weights.len(), 6);
        let mut sorted = weights.clone();
        sorted.sort();
        assert_eq!(sorted, dec(&[1, 1, 1, 1, 3, 3]));
        // and the wrap-around construction produces the same sets
        assert_eq!(clique_construction(&dec(&[6, 3, 3, 9, 4])), sets);
    }

    #[test]
    fn convex_combination_round_trip() {
        let lambda = vec![
            (vec![true, false, true], rat(1, 4)),
            (vec![false, false, false], rat(1, 2)),
            (vec![true, true, true], rat(1, 4)),
        ];
        let sets = from_convex_combination(&lambda).unwrap();
        assert_eq!(point_of(&sets), vec![rat(1, 2), rat(1, 4), rat(1, 2)]);
        let mut expected = lambda.clone();
        expected.sort();
        assert_eq!(atoms(&sets), expected);
        assert_eq!(
            from_convex_combination(&[(vec![true], rat(1, 2))]).unwrap_err(),
            IntervalError::BadWeights
        );
        let single = from_convex_combination(&[(vec![true, false], int(1))]).unwrap();
        assert_eq!(single, vec![I::full(), I::empty()]);
    }

    #[test]
    fn empty_sets_have_one_atom() {
        let at = atoms(&[I::empty(), I::empty()]);
        assert_eq!(at, vec![(vec![false, false], int(1))]);
    }

    #[test]
    fn clique_construction_edge_cases() {
        let ones = clique_construction(&vec![int(1); 4]);
        assert!(ones.iter().all(|s| *s == I::full()));
        let g = WeightedGraph::complete(4, int(1));
        assert_eq!(certificate_value(&ones, &g).unwrap(), int(6));
        let small = clique_construction(&dec(&[2, 3, 1, 4]));
        assert_eq!(certificate_value(&small, &g).unwrap(), int(0));
    }

    #[test]
    fn almost_complete_layouts() {
        let left = kn_minus_construction(&dec(&[9, 6, 2, 1, 6, 4]));
        assert_eq!((left.a.clone(), left.b.clone()), (rat(8, 10), int(1)));
        assert_eq!(
            left.sets[0],
            iv((4, 10), (1, 1)).union(&iv((0, 1), (3, 10)))
        );
        let right = kn_minus_construction(&dec(&[9, 8, 2, 1, 6, 4]));
        assert_eq!((right.a.clone(), right.b.clone()), (rat(1, 10), rat(9, 10)));
        for c in [&left, &right] {
            assert!(c
                .sets
                .iter()
                .zip(point_of(&c.sets))
                .all(|(_, m)| m <= int(1)));
        }
        assert_eq!(point_of(&right.sets), dec(&[9, 8, 2, 1, 6, 4]));
        let ints = vec![int(1), int(0), int(1), int(1), int(0)];
        let c = kn_minus_construction(&ints);
        let g = WeightedGraph::complete_minus_edge(5, int(1));
        assert_eq!(
            certificate_value(&c.sets, &g).unwrap(),
            g.evaluate(&ints).unwrap()
        );
    }

    fn figure_five() -> (WeightedGraph<Rational>, Vec<Rational>) {
        let signs = [1, -1, 1, -1, -1, 1, 1, 1];
        let g = WeightedGraph::cycle(&signs.iter().map(|&s| int(s)).collect::<Vec<_>>()).unwrap();
        (g, dec(&[6, 5, 3, 5, 4, 6, 5, 6]))
    }

    #[test]
    fn signed_cycle_example() {
        let (g, x) = figure_five();
        let built = cycle_construction(&g, &x).unwrap();
        assert_eq!(point_of(&built.sets), x);
        assert_eq!(certificate_value(&built.sets, &g).unwrap(), rat(23, 10));
        let report = defect_formula_check(&built.context);
        assert_eq!(report.violations(), 0, "{report:?}");
        let dual = cycle_dual_certificate(&g, &x, Side::Upper).unwrap();
        assert!(dual.feasible());
        assert_eq!(dual.objective, dual.primal_value);
        assert_eq!(dual.bound(), rat(23, 10));
    }

    #[test]
    fn even_negative_count_has_no_defect() {
        let g = WeightedGraph::cycle(&[int(1), int(-2), int(3), int(-1), int(2)]).unwrap();
        let x = dec(&[7, 2, 9, 4, 5]);
        let ctx = cycle_construction(&g, &x).unwrap().context;
        assert!(ctx.defects.iter().all(|d| *d == int(0)));
    }

    #[test]
    fn odd_cycle_defect_reaches_the_closed_form() {
        // one negative edge; the edge of weight 1 is rotated to the end
        let g = WeightedGraph::cycle(&[int(3), int(1), int(-2), int(2)]).unwrap();
        let x = dec(&[6, 7, 8, 5]);
        let built = cycle_construction(&g, &x).unwrap();
        let ctx = &built.context;
        assert_eq!(ctx.rotation, vec![3, 4, 1, 2]);
        assert_eq!(ctx.a, vec![int(-2), int(2), int(3), int(1)]);
        let report = defect_formula_check(ctx);
        assert_eq!(report.violations(), 0, "{report:?}");
        assert_eq!(
            certificate_value(&built.sets, &g).unwrap(),
            ctx.closed_form_value()
        );
    }

    #[test]
    fn unit_positive_cycle_alpha_multipliers() {
        let g = WeightedGraph::cycle(&vec![int(1); 5]).unwrap();
        let x = dec(&[3, 8, 5, 1, 6]);
        let dual = cycle_dual_certificate(&g, &x, Side::Upper).unwrap();
        assert_eq!(dual.alpha, int(0));
        assert_eq!(dual.objective, dual.primal_value);
        let ctx = &dual.context;
        let (alpha, z, w) = alpha_certificate(ctx);
        assert_eq!(alpha, int(1));
        assert!(z.iter().chain(&w).all(|v| *v == int(0)));
        // feasible but loose: the objective is A = Σx
        assert_eq!(alpha_certificate_objective(ctx), rat(23, 10));
        assert!(alpha_certificate_objective(ctx) >= dual.primal_value);
    }

    #[test]
    fn certificate_text_round_trip() {
        let sets = figure_two_sets();
        let mut with_empty = sets.clone();
        with_empty.push(I::empty());
        let text = write_certificate(&with_empty);
        assert_eq!(parse_certificate(&text).unwrap(), with_empty);
        assert!(parse_certificate("2\n0 1/2\n").is_err());
        assert!(parse_certificate("1\n0 1/2 3/4\n").is_err());
    }
}
