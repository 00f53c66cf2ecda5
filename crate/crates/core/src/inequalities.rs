//! Valid inequalities for the Boolean quadric polytope and the relaxation
//! systems assembled from them.
//!
//! Every constraint is stored as `Σ c_v v ≤ rhs` over variables `x_i` and
//! `y_ij`. Coefficients of all generated families are integers, so the
//! systems can be built over any [`Scalar`] without loss.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use num_traits::One;

use crate::error::{GraphError, InequalityError};
use crate::graph::{pairs, Adjacency, CycleSemantics, SignPartition, WeightedGraph};
use crate::scalar::{fraction, Rational, Scalar};

/// A variable of the extended space: `x_i` or the product variable `y_ij`
/// (stored with `i <= j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    X(u32),
    Y(u32, u32),
}

impl VarRef {
    pub fn x(i: usize) -> Self {
        VarRef::X(i as u32)
    }

    pub fn y(i: usize, j: usize) -> Self {
        if i <= j {
            VarRef::Y(i as u32, j as u32)
        } else {
            VarRef::Y(j as u32, i as u32)
        }
    }

    /// Name used in LP files: `x3`, `y2_5`.
    pub fn name(&self) -> String {
        match *self {
            VarRef::X(i) => format!("x{i}"),
            VarRef::Y(i, j) => format!("y{i}_{j}"),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        if let Some(rest) = name.strip_prefix('x') {
            return rest.parse().ok().filter(|&i: &usize| i > 0).map(VarRef::x);
        }
        let rest = name.strip_prefix('y')?;
        let (a, b) = rest.split_once('_')?;
        let (i, j): (usize, usize) = (a.parse().ok()?, b.parse().ok()?);
        (i > 0 && j > 0).then(|| VarRef::y(i, j))
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    McCormick,
    Triangle,
    Clique,
    Cut,
    GeneralizedCut,
    OddCycle,
    /// One of the two signed-cycle inequalities (variant 1 or 2).
    CycleTheorem,
    /// Special clique inequalities of the almost complete graph (variant 1..3).
    CliqueMinus,
    Wheel,
    /// Rows read back from a file without a recognised label.
    Other,
}

impl Family {
    fn tag(self) -> &'static str {
        match self {
            Family::McCormick => "mc",
            Family::Triangle => "tri",
            Family::Clique => "clq",
            Family::Cut => "cut",
            Family::GeneralizedCut => "gcut",
            Family::OddCycle => "oc",
            Family::CycleTheorem => "cyc",
            Family::CliqueMinus => "knm",
            Family::Wheel => "whl",
            Family::Other => "row",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "mc" => Family::McCormick,
            "tri" => Family::Triangle,
            "clq" => Family::Clique,
            "cut" => Family::Cut,
            "gcut" => Family::GeneralizedCut,
            "oc" => Family::OddCycle,
            "cyc" => Family::CycleTheorem,
            "knm" => Family::CliqueMinus,
            "whl" => Family::Wheel,
            "row" => Family::Other,
            _ => return None,
        })
    }
}

/// Generator and parameters of a constraint. The textual form (used as
/// the row name in LP files) is `tag[variant](_set)*(_a<param>)?`, where a
/// set is a dot-separated vertex list and `-` denotes the empty set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Label {
    pub family: Family,
    pub variant: u8,
    pub sets: Vec<Vec<u32>>,
    pub param: Option<i64>,
}

impl Label {
    pub fn new(family: Family, variant: u8) -> Self {
        Label {
            family,
            variant,
            sets: Vec::new(),
            param: None,
        }
    }

    pub fn set(mut self, vertices: &[usize]) -> Self {
        self.sets.push(vertices.iter().map(|&v| v as u32).collect());
        self
    }

    pub fn param(mut self, p: i64) -> Self {
        self.param = Some(p);
        self
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family.tag())?;
        if self.variant > 0 {
            write!(f, "{}", self.variant)?;
        }
        for set in &self.sets {
            if set.is_empty() {
                f.write_str("_-")?;
            } else {
                let parts: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                write!(f, "_{}", parts.join("."))?;
            }
        }
        if let Some(p) = self.param {
            write!(f, "_a{p}")?;
        }
        Ok(())
    }
}

impl FromStr for Label {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let mut tokens = s.split('_');
        let head = tokens.next().ok_or(())?;
        let split = head
            .find(|c: char| c.is_ascii_digit())
            .unwrap_or(head.len());
        let family = Family::from_tag(&head[..split]).ok_or(())?;
        let variant = if split < head.len() {
            head[split..].parse().map_err(|_| ())?
        } else {
            0
        };
        let mut label = Label::new(family, variant);
        for tok in tokens {
            if let Some(p) = tok.strip_prefix('a') {
                label.param = Some(p.parse().map_err(|_| ())?);
            } else if tok == "-" {
                label.sets.push(Vec::new());
            } else {
                let set: Result<Vec<u32>, _> = tok.split('.').map(str::parse).collect();
                label.sets.push(set.map_err(|_| ())?);
            }
        }
        Ok(label)
    }
}

/// `Σ coeff · var ≤ rhs` with sorted, nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint<S> {
    coeffs: Vec<(VarRef, S)>,
    rhs: S,
    label: Label,
}

impl<S: Scalar> LinearConstraint<S> {
    /// Merges repeated variables and drops zero coefficients.
    pub fn new(terms: impl IntoIterator<Item = (VarRef, S)>, rhs: S, label: Label) -> Self {
        let mut terms: Vec<(VarRef, S)> = terms.into_iter().collect();
        terms.sort_by_key(|t| t.0);
        let mut coeffs: Vec<(VarRef, S)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match coeffs.last_mut() {
                Some(last) if last.0 == v => last.1 = last.1.clone() + c,
                _ => coeffs.push((v, c)),
            }
        }
        coeffs.retain(|(_, c)| !c.is_zero());
        LinearConstraint { coeffs, rhs, label }
    }

    pub fn coeffs(&self) -> &[(VarRef, S)] {
        &self.coeffs
    }

    pub fn rhs(&self) -> &S {
        &self.rhs
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    pub fn coeff(&self, v: VarRef) -> S {
        self.coeffs
            .binary_search_by_key(&v, |t| t.0)
            .map(|k| self.coeffs[k].1.clone())
            .unwrap_or_else(|_| S::zero())
    }

    /// Left-hand side at a point; `y` supplies the product variables.
    pub fn lhs(&self, x: &[S], y: impl Fn(usize, usize) -> S) -> S {
        self.coeffs.iter().fold(S::zero(), |acc, (v, c)| {
            let val = match *v {
                VarRef::X(i) => x[i as usize - 1].clone(),
                VarRef::Y(i, j) => y(i as usize, j as usize),
            };
            acc + c.clone() * val
        })
    }

    /// `lhs - rhs`; positive means violated.
    pub fn excess(&self, x: &[S], y: impl Fn(usize, usize) -> S) -> S {
        self.lhs(x, y) - self.rhs.clone()
    }

    /// Same coefficients and right-hand side (labels ignored).
    pub fn same_row(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs && self.rhs == other.rhs
    }

    pub fn convert<T: Scalar>(&self) -> LinearConstraint<T> {
        LinearConstraint {
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, c)| (*v, T::from_rational(&c.to_rational())))
                .collect(),
            rhs: T::from_rational(&self.rhs.to_rational()),
            label: self.label.clone(),
        }
    }

    fn key(&self) -> (Vec<(VarRef, Rational)>, Rational) {
        (
            self.coeffs
                .iter()
                .map(|(v, c)| (*v, c.to_rational()))
                .collect(),
            self.rhs.to_rational(),
        )
    }
}

impl<S: Scalar> fmt::Display for LinearConstraint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.label)?;
        if self.coeffs.is_empty() {
            f.write_str("0")?;
        }
        for (k, (v, c)) in self.coeffs.iter().enumerate() {
            let r = c.to_rational();
            let mag = num_traits::Signed::abs(&r);
            let sign = if num_traits::Signed::is_negative(&r) {
                "-"
            } else {
                "+"
            };
            if k > 0 || sign == "-" {
                write!(f, "{}{}", if k > 0 { " " } else { "" }, sign)?;
                if k > 0 {
                    f.write_str(" ")?;
                }
            }
            if mag.is_one() {
                write!(f, "{v}")?;
            } else {
                write!(f, "{} {v}", fraction(&mag))?;
            }
        }
        write!(f, " <= {}", fraction(&self.rhs.to_rational()))
    }
}

/// A named relaxation: explicit constraints plus the implied box
/// `0 <= x <= 1`, over a fixed universe of product variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem<S> {
    name: String,
    n: usize,
    universe: Vec<(usize, usize)>,
    constraints: Vec<LinearConstraint<S>>,
}

impl<S: Scalar> ConstraintSystem<S> {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        universe: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut universe: Vec<(usize, usize)> = universe
            .into_iter()
            .map(|(i, j)| if i <= j { (i, j) } else { (j, i) })
            .collect();
        universe.sort_unstable();
        universe.dedup();
        ConstraintSystem {
            name: name.into(),
            n,
            universe,
            constraints: Vec::new(),
        }
    }

    /// Empty system whose universe is the edge set of `g`.
    pub fn for_graph<T: Scalar>(name: impl Into<String>, g: &WeightedGraph<T>) -> Self {
        Self::new(name, g.n(), g.edges().iter().map(|e| (e.i, e.j)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rename(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn universe(&self) -> &[(usize, usize)] {
        &self.universe
    }

    pub fn y_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.universe.binary_search(&key).ok()
    }

    pub fn constraints(&self) -> &[LinearConstraint<S>] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn push(&mut self, c: LinearConstraint<S>) -> Result<(), InequalityError> {
        for (v, _) in c.coeffs() {
            let inside = match *v {
                VarRef::X(i) => i >= 1 && i as usize <= self.n,
                VarRef::Y(i, j) => self.y_index(i as usize, j as usize).is_some(),
            };
            if !inside {
                return Err(InequalityError::OutsideUniverse(v.name()));
            }
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn extend(
        &mut self,
        cs: impl IntoIterator<Item = LinearConstraint<S>>,
    ) -> Result<(), InequalityError> {
        cs.into_iter().try_for_each(|c| self.push(c))
    }

    /// Removes constraints whose label matches; returns how many were removed.
    pub fn remove_where(&mut self, pred: impl Fn(&Label) -> bool) -> usize {
        let before = self.constraints.len();
        self.constraints.retain(|c| !pred(c.label()));
        before - self.constraints.len()
    }

    /// Drops later constraints that repeat an earlier row exactly.
    pub fn dedup(&mut self) -> usize {
        let mut seen = HashSet::new();
        let before = self.constraints.len();
        self.constraints.retain(|c| seen.insert(c.key()));
        before - self.constraints.len()
    }

    /// Constraints violated at `(x, y)` together with their excess; `y` is
    /// indexed like [`universe`](Self::universe). Box bounds are not checked.
    pub fn violations(&self, x: &[S], y: &[S]) -> Vec<(usize, S)> {
        let lookup =
            |i: usize, j: usize| y[self.y_index(i, j).expect("variable in universe")].clone();
        self.constraints
            .iter()
            .enumerate()
            .filter_map(|(k, c)| {
                let e = c.excess(x, lookup);
                e.approx_pos().then_some((k, e))
            })
            .collect()
    }

    pub fn convert<T: Scalar>(&self) -> ConstraintSystem<T> {
        ConstraintSystem {
            name: self.name.clone(),
            n: self.n,
            universe: self.universe.clone(),
            constraints: self.constraints.iter().map(|c| c.convert()).collect(),
        }
    }
}

fn s_int<S: Scalar>(v: i64) -> S {
    S::from_int(v)
}

fn y_sum<S: Scalar>(set: &[usize], coeff: i64) -> impl Iterator<Item = (VarRef, S)> + '_ {
    set.iter().enumerate().flat_map(move |(a, &i)| {
        set[a + 1..]
            .iter()
            .map(move |&j| (VarRef::y(i, j), s_int(coeff)))
    })
}

fn x_sum<S: Scalar>(set: &[usize], coeff: i64) -> impl Iterator<Item = (VarRef, S)> + '_ {
    set.iter().map(move |&i| (VarRef::x(i), s_int(coeff)))
}

/// The four McCormick bounds for `y_ij`. With `i == j` (loop mode) the
/// bounds `y <= x_i` coincide and only three rows are returned.
pub fn mccormick<S: Scalar>(i: usize, j: usize) -> Vec<LinearConstraint<S>> {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    let y = VarRef::y(i, j);
    let lab = |v: u8| Label::new(Family::McCormick, v).set(&[i, j]);
    let mut out = vec![
        LinearConstraint::new([(y, s_int(-1))], S::zero(), lab(1)),
        LinearConstraint::new(
            [(y, s_int(1)), (VarRef::x(i), s_int(-1))],
            S::zero(),
            lab(2),
        ),
    ];
    if i != j {
        out.push(LinearConstraint::new(
            [(y, s_int(1)), (VarRef::x(j), s_int(-1))],
            S::zero(),
            lab(3),
        ));
    }
    out.push(LinearConstraint::new(
        [
            (VarRef::x(i), s_int(1)),
            (VarRef::x(j), s_int(1)),
            (y, s_int(-1)),
        ],
        S::one(),
        lab(4),
    ));
    out
}

/// Triangle inequalities T1..T4 for distinct `i, j, k`.
pub fn triangle<S: Scalar>(i: usize, j: usize, k: usize) -> Vec<LinearConstraint<S>> {
    let (yij, yik, yjk) = (VarRef::y(i, j), VarRef::y(i, k), VarRef::y(j, k));
    let lab = |v: u8| Label::new(Family::Triangle, v).set(&[i, j, k]);
    let row = |terms: [(VarRef, i64); 4], rhs: i64, v: u8| {
        LinearConstraint::new(terms.map(|(var, c)| (var, s_int(c))), s_int(rhs), lab(v))
    };
    vec![
        LinearConstraint::new(
            [
                (VarRef::x(i), s_int(1)),
                (VarRef::x(j), s_int(1)),
                (VarRef::x(k), s_int(1)),
                (yij, s_int(-1)),
                (yik, s_int(-1)),
                (yjk, s_int(-1)),
            ],
            S::one(),
            lab(1),
        ),
        row([(VarRef::x(i), -1), (yij, 1), (yik, 1), (yjk, -1)], 0, 2),
        row([(VarRef::x(j), -1), (yij, 1), (yik, -1), (yjk, 1)], 0, 3),
        row([(VarRef::x(k), -1), (yij, -1), (yik, 1), (yjk, 1)], 0, 4),
    ]
}

/// `α x(S) - y(E(S)) <= α(α+1)/2`, with `E(S)` all pairs inside `S`.
pub fn clique<S: Scalar>(
    set: &[usize],
    alpha: i64,
) -> Result<LinearConstraint<S>, InequalityError> {
    if set.len() < 3 {
        return Err(InequalityError::SetTooSmall);
    }
    let max = set.len() as i64 - 2;
    if alpha < 1 || alpha > max {
        return Err(InequalityError::BadAlpha { alpha, max });
    }
    Ok(clique_unchecked(
        set,
        alpha,
        Label::new(Family::Clique, 0).set(set).param(alpha),
    ))
}

fn clique_unchecked<S: Scalar>(set: &[usize], alpha: i64, label: Label) -> LinearConstraint<S> {
    LinearConstraint::new(
        x_sum(set, alpha).chain(y_sum(set, -1)),
        s_int(alpha * (alpha + 1) / 2),
        label,
    )
}

fn check_split(s: &[usize], t: &[usize]) -> Result<(), InequalityError> {
    if s.iter().any(|v| t.contains(v)) {
        return Err(InequalityError::Overlap);
    }
    if s.is_empty() || t.len() < 2 {
        return Err(InequalityError::SetTooSmall);
    }
    Ok(())
}

fn cross<S: Scalar>(s: &[usize], t: &[usize]) -> Vec<(VarRef, S)> {
    s.iter()
        .flat_map(|&i| t.iter().map(move |&j| (VarRef::y(i, j), S::one())))
        .collect()
}

/// `-x(S) - y(E(S)) + y(E(S:T)) - y(E(T)) <= 0`.
pub fn cut<S: Scalar>(s: &[usize], t: &[usize]) -> Result<LinearConstraint<S>, InequalityError> {
    check_split(s, t)?;
    let terms = x_sum(s, -1)
        .chain(y_sum(s, -1))
        .chain(cross(s, t))
        .chain(y_sum(t, -1));
    Ok(LinearConstraint::new(
        terms,
        S::zero(),
        Label::new(Family::Cut, 0).set(s).set(t),
    ))
}

/// `(s-t) x(S) + (t-s-1) x(T) - y(E(S)) + y(E(S:T)) - y(E(T)) <= (t-s)(t-s-1)/2`.
pub fn generalized_cut<S: Scalar>(
    s: &[usize],
    t: &[usize],
) -> Result<LinearConstraint<S>, InequalityError> {
    check_split(s, t)?;
    let (ns, nt) = (s.len() as i64, t.len() as i64);
    let terms = x_sum(s, ns - nt)
        .chain(x_sum(t, nt - ns - 1))
        .chain(y_sum(s, -1))
        .chain(cross(s, t))
        .chain(y_sum(t, -1));
    Ok(LinearConstraint::new(
        terms,
        s_int((nt - ns) * (nt - ns - 1) / 2),
        Label::new(Family::GeneralizedCut, 0).set(s).set(t),
    ))
}

/// Odd-cycle inequality on the cycle through `cycle` (in order, closing
/// back to the first vertex). `d` lists edge positions `1..=len`, where
/// position `p` joins `cycle[p-1]` and `cycle[p % len]`.
pub fn odd_cycle<S: Scalar>(
    cycle: &[usize],
    d: &[usize],
) -> Result<LinearConstraint<S>, InequalityError> {
    let len = cycle.len();
    if len < 3 {
        return Err(InequalityError::SetTooSmall);
    }
    let mut in_d = vec![false; len + 1];
    for &p in d {
        if p == 0 || p > len {
            return Err(InequalityError::Graph(GraphError::IndexOutOfRange {
                i: p,
                j: p,
                n: len,
            }));
        }
        in_d[p] = true;
    }
    let size = in_d.iter().filter(|&&b| b).count();
    if size % 2 == 0 {
        return Err(InequalityError::EvenD);
    }
    let mut sorted_d: Vec<usize> = (1..=len).filter(|&p| in_d[p]).collect();
    sorted_d.dedup();
    Ok(odd_cycle_terms(cycle, &in_d, size)
        .with_label(Label::new(Family::OddCycle, 0).set(cycle).set(&sorted_d)))
}

fn odd_cycle_terms<S: Scalar>(cycle: &[usize], in_d: &[bool], size: usize) -> LinearConstraint<S> {
    let len = cycle.len();
    let mut terms: Vec<(VarRef, S)> = Vec::with_capacity(2 * len);
    for p in 1..=len {
        let (u, v) = (cycle[p - 1], cycle[p % len]);
        terms.push((VarRef::y(u, v), s_int(if in_d[p] { -1 } else { 1 })));
    }
    for (idx, &u) in cycle.iter().enumerate() {
        let entering = if idx == 0 { len } else { idx };
        let leaving = idx + 1;
        match (in_d[entering], in_d[leaving]) {
            (true, true) => terms.push((VarRef::x(u), S::one())),
            (false, false) => terms.push((VarRef::x(u), s_int(-1))),
            _ => {}
        }
    }
    LinearConstraint::new(
        terms,
        s_int((size as i64 - 1) / 2),
        Label::new(Family::OddCycle, 0),
    )
}

/// One of the two signed-cycle inequalities on an arbitrary cycle of a
/// graph, built without the parity rule. `which = 1` uses `D = E^-`,
/// `which = 2` uses `D = E^+`. `positive[p-1]` is the sign of edge position
/// `p` of `cycle`.
pub fn cycle_inequality<S: Scalar>(
    cycle: &[usize],
    positive: &[bool],
    which: u8,
    semantics: CycleSemantics,
) -> LinearConstraint<S> {
    let len = cycle.len();
    let sp = SignPartition::from_signs(positive, semantics);
    // D = E^- for the first inequality, E^+ for the second.
    let (d, other, v0, v1) = if which == 1 {
        (&sp.e_minus, &sp.e_plus, &sp.v_minus, &sp.v_plus)
    } else {
        (&sp.e_plus, &sp.e_minus, &sp.v_plus, &sp.v_minus)
    };
    let edge = |p: usize| VarRef::y(cycle[p - 1], cycle[p % len]);
    let terms = d
        .iter()
        .map(|&p| (edge(p), s_int(-1)))
        .chain(other.iter().map(|&p| (edge(p), S::one())))
        .chain(v0.iter().map(|&k| (VarRef::x(cycle[k - 1]), S::one())))
        .chain(v1.iter().map(|&k| (VarRef::x(cycle[k - 1]), s_int(-1))));
    let variant = match semantics {
        CycleSemantics::Junction => which,
        CycleSemantics::Literal => which + 2,
    };
    LinearConstraint::new(
        terms,
        s_int(d.len() as i64 / 2),
        Label::new(Family::CycleTheorem, variant).set(cycle),
    )
}

/// The signed-cycle pair on a cycle of a graph, keeping only the
/// inequalities whose defining edge set has odd size.
pub fn cycle_pair_on<S: Scalar>(
    cycle: &[usize],
    positive: &[bool],
    semantics: CycleSemantics,
) -> Vec<LinearConstraint<S>> {
    let minus = positive.iter().filter(|&&p| !p).count();
    let plus = positive.len() - minus;
    let mut out = Vec::with_capacity(2);
    if minus % 2 == 1 {
        out.push(cycle_inequality(cycle, positive, 1, semantics));
    }
    if plus % 2 == 1 {
        out.push(cycle_inequality(cycle, positive, 2, semantics));
    }
    out
}

/// The pair for a graph that is exactly `C_n` with the standard numbering.
pub fn cycle_theorem_pair<S: Scalar, T: Scalar>(
    g: &WeightedGraph<T>,
    semantics: CycleSemantics,
) -> Result<Vec<LinearConstraint<S>>, InequalityError> {
    let a = g.cycle_weights()?;
    let cycle: Vec<usize> = (1..=g.n()).collect();
    let positive: Vec<bool> = a.iter().map(|w| w.is_positive()).collect();
    Ok(cycle_pair_on(&cycle, &positive, semantics))
}

/// McCormick plus the signed-cycle pair for `C_n`.
pub fn cycle_system<S: Scalar, T: Scalar>(
    g: &WeightedGraph<T>,
    semantics: CycleSemantics,
) -> Result<ConstraintSystem<S>, InequalityError> {
    let mut sys = mccormick_system(g);
    sys.rename("cycle");
    sys.extend(cycle_theorem_pair(g, semantics)?)?;
    Ok(sys)
}

/// McCormick bounds for every edge (and loop) of `g`.
pub fn mccormick_system<S: Scalar, T: Scalar>(g: &WeightedGraph<T>) -> ConstraintSystem<S> {
    let mut sys = ConstraintSystem::for_graph("M", g);
    for e in g.edges() {
        sys.constraints.extend(mccormick(e.i, e.j));
    }
    sys
}

/// The almost-complete-graph system: McCormick on every pair of `K_n`
/// (including the non-edge `{n-1, n}`) plus the `3n - 10` special clique
/// inequalities, labelled `knm<family>_a<s>`.
pub fn kn_minus_system<S: Scalar>(n: usize) -> Result<ConstraintSystem<S>, InequalityError> {
    if n < 5 {
        return Err(InequalityError::TooSmall { n, min: 5 });
    }
    let mut sys = ConstraintSystem::new("kn-minus", n, pairs(n));
    for (i, j) in pairs(n) {
        sys.constraints.extend(mccormick(i, j));
    }
    for (family, s) in kn_minus_index(n) {
        sys.constraints.push(kn_minus_inequality(n, family, s)?);
    }
    Ok(sys)
}

/// All `(family, s)` pairs of the special inequalities, in system order.
pub fn kn_minus_index(n: usize) -> Vec<(u8, usize)> {
    let upper = n.saturating_sub(3);
    let mut out: Vec<(u8, usize)> = (1..=upper).map(|s| (1, s)).collect();
    out.extend((1..=upper).map(|s| (2, s)));
    out.extend((2..=upper).map(|s| (3, s)));
    out
}

pub fn kn_minus_inequality<S: Scalar>(
    n: usize,
    family: u8,
    s: usize,
) -> Result<LinearConstraint<S>, InequalityError> {
    let upper = n.saturating_sub(3);
    let lower = if family == 3 { 2 } else { 1 };
    if !(1..=3).contains(&family) || s < lower || s > upper {
        return Err(InequalityError::BadIndex { family, s, n });
    }
    let set: Vec<usize> = match family {
        1 => (1..n).collect(),
        2 => (1..n - 1).chain([n]).collect(),
        _ => (1..=n).collect(),
    };
    let label = Label::new(Family::CliqueMinus, family).param(s as i64);
    Ok(clique_unchecked(&set, s as i64, label))
}

/// The textbook point `(x, y)` (with `y` indexed by the pairs of `K_n` in
/// lexicographic order) meant to satisfy every constraint of
/// [`kn_minus_system`] except the selected special inequality while
/// projecting outside `X(f)`.
///
/// Family 3 works as intended. For families 1 and 2 the point is returned
/// verbatim but it is not a witness: `y_{s,n} = 0` breaks the McCormick
/// bound `y_{s,n} >= x_s + x_n - 1 = 1/5`, and for `s >= 2` no repair
/// exists because the projection does not change when the inequality is
/// dropped. See [`necessity_point`] for points that do work.
pub fn minimality_witness<S: Scalar>(
    n: usize,
    family: u8,
    s: usize,
) -> Result<(Vec<S>, Vec<S>), InequalityError> {
    kn_minus_inequality::<S>(n, family, s)?;
    let r = |a: i64, b: i64| S::ratio(a, b);
    let mut x = vec![S::zero(); n];
    let mut y: Vec<S> = vec![S::zero(); n * (n - 1) / 2];
    let idx = |i: usize, j: usize| {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        (i - 1) * (2 * n - i) / 2 + (j - i - 1)
    };
    if family == 3 {
        let m = (n - 2) as i64;
        let s = s as i64;
        for xi in x.iter_mut().take(n - 2) {
            *xi = r(2 * s - 1, 2 * m);
        }
        x[n - 2] = r(1, 2);
        x[n - 1] = r(1, 2);
        y[idx(n - 1, n)] = r(1, 2);
        for (i, j) in pairs(n - 2) {
            y[idx(i, j)] = r((s - 1) * (s - 1) + 1, m * (m - 1));
        }
        for i in 1..=n - 2 {
            y[idx(i, n - 1)] = r(s - 2, 2 * m);
            y[idx(i, n)] = r(s - 2, 2 * m);
        }
        return Ok((x, y));
    }
    // Family 2 exchanges the roles of n-1 and n.
    let (big, small) = if family == 1 { (n - 1, n) } else { (n, n - 1) };
    for xi in x.iter_mut().take(s - 1) {
        *xi = S::one();
    }
    x[s - 1] = r(4, 5);
    x[s] = r(1, 5);
    x[big - 1] = r(3, 5);
    x[small - 1] = r(2, 5);
    for (i, j) in pairs(s - 1) {
        y[idx(i, j)] = S::one();
    }
    for i in 1..s {
        y[idx(i, s)] = r(4, 5);
        y[idx(i, s + 1)] = r(1, 5);
        y[idx(i, small)] = r(2, 5);
    }
    for i in 1..=s {
        y[idx(i, big)] = r(3, 5);
    }
    Ok((x, y))
}

/// A point `x` at which dropping the selected special inequality lowers
/// `LB` below `vex` for unit weights on `K_n^-`, when one is known.
///
/// Family 3 uses the `x` of [`minimality_witness`]. Families 1 and 2 have
/// such points only at the ends of the range: `s = 1` (three coordinates
/// at `1/2`) and `s = n - 3` (a block of ones followed by three halves).
/// For `2 <= s <= n - 4` the inequality is implied on the projection and
/// `None` is returned.
pub fn necessity_point<S: Scalar>(
    n: usize,
    family: u8,
    s: usize,
) -> Result<Option<Vec<S>>, InequalityError> {
    if family == 3 {
        return minimality_witness::<S>(n, family, s).map(|(x, _)| Some(x));
    }
    kn_minus_inequality::<S>(n, family, s)?;
    let half = S::ratio(1, 2);
    // position of the vertex that shares the clique with 1..n-2
    let (inside, outside) = if family == 1 { (n - 1, n) } else { (n, n - 1) };
    let mut x = vec![S::zero(); n];
    if s == 1 {
        x[0] = half.clone();
        x[2] = half.clone();
        x[inside - 1] = half;
    } else if s == n - 3 {
        for xi in x.iter_mut().take(n - 4) {
            *xi = S::one();
        }
        x[n - 4] = half.clone();
        x[n - 3] = half.clone();
        x[inside - 1] = half;
        x[outside - 1] = S::one();
    } else {
        return Ok(None);
    }
    Ok(Some(x))
}

/// `⌊n/2⌋ x_{n+1} + Σ x_i - y(E) <= ⌊n/2⌋`, and for odd `n` also
/// `((n+1)/2) x_{n+1} + 2 Σ x_i - y(E) <= n`, on the wheel `W_n`.
pub fn wheel_inequalities<S: Scalar>(
    n: usize,
) -> Result<Vec<LinearConstraint<S>>, InequalityError> {
    if n < 4 {
        return Err(InequalityError::TooSmall { n, min: 4 });
    }
    let hub = n + 1;
    let rim: Vec<usize> = (1..=n).collect();
    let edges: Vec<(VarRef, S)> = (1..=n)
        .map(|k| (VarRef::y(k, if k == n { 1 } else { k + 1 }), s_int(-1)))
        .chain((1..=n).map(|k| (VarRef::y(k, hub), s_int(-1))))
        .collect();
    let half = (n / 2) as i64;
    let mut out = vec![LinearConstraint::new(
        [(VarRef::x(hub), s_int(half))]
            .into_iter()
            .chain(x_sum(&rim, 1))
            .chain(edges.iter().cloned()),
        s_int(half),
        Label::new(Family::Wheel, 1).param(n as i64),
    )];
    if n % 2 == 1 {
        out.push(LinearConstraint::new(
            [(VarRef::x(hub), s_int((n as i64 + 1) / 2))]
                .into_iter()
                .chain(x_sum(&rim, 2))
                .chain(edges),
            s_int(n as i64),
            Label::new(Family::Wheel, 2).param(n as i64),
        ));
    }
    Ok(out)
}

/// McCormick plus the wheel inequalities on `W_n`.
pub fn wheel_system<S: Scalar, T: Scalar>(
    g: &WeightedGraph<T>,
) -> Result<ConstraintSystem<S>, InequalityError> {
    let n = g
        .n()
        .checked_sub(1)
        .ok_or(InequalityError::TooSmall { n: 0, min: 5 })?;
    let mut sys = mccormick_system(g);
    sys.rename("wheel");
    sys.extend(wheel_inequalities(n)?)?;
    Ok(sys)
}

/// [`wheel_system`] plus the triangle inequalities of every triangle of
/// `g`. On the unit-weight `W_5` the wheel rows alone leave `LB` below
/// `vex` (at `x = (0, 5/6, 3/8, 1, 1/5, 2/5)`, for instance); with the
/// triangles added the system is exact in every test run.
pub fn wheel_triangle_system<S: Scalar, T: Scalar>(
    g: &WeightedGraph<T>,
) -> Result<ConstraintSystem<S>, InequalityError> {
    let mut sys = wheel_system(g)?;
    sys.rename("wheel+tri");
    for t in g.adjacency().cliques(3, 3) {
        sys.extend(triangle(t[0], t[1], t[2]))?;
    }
    Ok(sys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassKind {
    M,
    MT,
    MQ,
    MC,
    MG,
    MO,
}

/// Relaxation class, optionally restricted to cliques or cycles with
/// exactly `k` vertices (`k >= 4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelaxClass {
    pub kind: ClassKind,
    pub k: Option<usize>,
}

impl RelaxClass {
    pub const fn new(kind: ClassKind) -> Self {
        RelaxClass { kind, k: None }
    }

    pub const fn sized(kind: ClassKind, k: usize) -> Self {
        RelaxClass { kind, k: Some(k) }
    }
}

impl fmt::Display for RelaxClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(k) = self.k {
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

impl FromStr for RelaxClass {
    type Err = InequalityError;

    fn from_str(s: &str) -> Result<Self, InequalityError> {
        let bad = || InequalityError::BadClass(s.to_string());
        let t = s.trim().to_ascii_uppercase();
        let split = t
            .find(|c: char| c.is_ascii_digit() || c == '_')
            .unwrap_or(t.len());
        let kind = match &t[..split] {
            "M" => ClassKind::M,
            "MT" => ClassKind::MT,
            "MQ" => ClassKind::MQ,
            "MC" => ClassKind::MC,
            "MG" => ClassKind::MG,
            "MO" => ClassKind::MO,
            _ => return Err(bad()),
        };
        let rest = t[split..].trim_start_matches('_');
        let k = if rest.is_empty() {
            None
        } else {
            let k: usize = rest.parse().map_err(|_| bad())?;
            if k < 4 || matches!(kind, ClassKind::M | ClassKind::MT) {
                return Err(bad());
            }
            Some(k)
        };
        Ok(RelaxClass { kind, k })
    }
}

/// A relaxation together with the number of generating structures
/// (edges, triangles, cliques or cycles) it was built from.
#[derive(Debug, Clone)]
pub struct Relaxation<S> {
    pub system: ConstraintSystem<S>,
    pub sources: usize,
}

pub fn relaxation_system<S: Scalar, T: Scalar>(
    g: &WeightedGraph<T>,
    class: RelaxClass,
) -> Result<ConstraintSystem<S>, InequalityError> {
    build_relaxation(g, class).map(|r| r.system)
}

/// Builds McCormick plus the class-specific inequalities. Cliques and
/// cycles start at four vertices; cut-type inequalities need `|S| >= 1`,
/// `|T| >= 2` and `|S| + |T| >= 4`, with `S ∪ T` inside a clique.
pub fn build_relaxation<S: Scalar, T: Scalar>(
    g: &WeightedGraph<T>,
    class: RelaxClass,
) -> Result<Relaxation<S>, InequalityError> {
    if let Some(k) = class.k {
        if k < 4 || matches!(class.kind, ClassKind::M | ClassKind::MT) {
            return Err(InequalityError::BadClass(class.to_string()));
        }
    }
    let mut system: ConstraintSystem<S> = mccormick_system(g);
    system.rename(class.to_string());
    let adj = g.adjacency();
    let n = g.n();
    let sources = match class.kind {
        ClassKind::M => g.edges().iter().filter(|e| e.i != e.j).count(),
        ClassKind::MT => {
            let mut count = 0;
            for t in adj.cliques(3, 3) {
                system.constraints.extend(triangle(t[0], t[1], t[2]));
                count += 1;
            }
            count
        }
        ClassKind::MQ => {
            let (hosts, subsets) = hosted_cliques(&adj, class.k, 3);
            for set in subsets {
                for alpha in 1..=set.len() as i64 - 2 {
                    let label = Label::new(Family::Clique, 0).set(&set).param(alpha);
                    system
                        .constraints
                        .push(clique_unchecked(&set, alpha, label));
                }
            }
            hosts
        }
        ClassKind::MC | ClassKind::MG => {
            let (hosts, subsets) = hosted_cliques(&adj, class.k, 4);
            for set in subsets {
                for_each_split(&set, |s, t| {
                    let row = if class.kind == ClassKind::MC {
                        cut(s, t)
                    } else {
                        generalized_cut(s, t)
                    };
                    system.constraints.push(row.expect("disjoint split"));
                });
            }
            hosts
        }
        ClassKind::MO => {
            let (lo, hi) = class.k.map_or((4, n), |k| (k, k));
            let mut count = 0;
            for cycle in adj.cycles(lo, hi) {
                let len = cycle.len();
                let positive: Vec<bool> = (0..len)
                    .map(|p| {
                        g.weight(cycle[p], cycle[(p + 1) % len])
                            .expect("cycle edge")
                            .is_positive()
                    })
                    .collect();
                system.constraints.extend(cycle_pair_on(
                    &cycle,
                    &positive,
                    CycleSemantics::Junction,
                ));
                count += 1;
            }
            count
        }
    };
    Ok(Relaxation { system, sources })
}

/// Vertex sets `U` with `|U| >= min_size` that lie inside some host clique,
/// where hosts are all cliques with at least four vertices, or exactly `k`
/// vertices when `k` is given. Returns the host count and the sets in
/// lexicographic order.
fn hosted_cliques(adj: &Adjacency, k: Option<usize>, min_size: usize) -> (usize, Vec<Vec<usize>>) {
    let n = adj.n();
    match k {
        Some(k) => {
            let mut found = BTreeSet::new();
            let mut hosts = 0;
            for q in adj.cliques(k, k) {
                hosts += 1;
                for mask in 0u64..(1u64 << q.len()) {
                    if (mask.count_ones() as usize) < min_size {
                        continue;
                    }
                    let u: Vec<usize> = (0..q.len())
                        .filter(|b| mask >> b & 1 == 1)
                        .map(|b| q[b])
                        .collect();
                    found.insert(u);
                }
            }
            (hosts, found.into_iter().collect())
        }
        None => {
            let big: Vec<Vec<usize>> = adj.cliques(4, n).collect();
            let hosts = big.len();
            let mut found: BTreeSet<Vec<usize>> = big.into_iter().collect();
            if min_size <= 3 {
                for t in adj.cliques(3, 3) {
                    let extendable = (1..=n).any(|v| t.iter().all(|&u| adj.adjacent(u, v)));
                    if extendable {
                        found.insert(t);
                    }
                }
            }
            (hosts, found.into_iter().collect())
        }
    }
}

/// Every ordered split of `set` into `S` (nonempty) and `T` (at least two
/// elements), in mask order.
fn for_each_split(set: &[usize], mut f: impl FnMut(&[usize], &[usize])) {
    let m = set.len();
    let mut s = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);
    for mask in 1u64..(1u64 << m) {
        let size = mask.count_ones() as usize;
        if m - size < 2 {
            continue;
        }
        s.clear();
        t.clear();
        for (b, &v) in set.iter().enumerate() {
            if mask >> b & 1 == 1 {
                s.push(v);
            } else {
                t.push(v);
            }
        }
        f(&s, &t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use num_traits::Zero;
    use std::collections::HashMap;

    type R = Rational;

    fn at(c: &LinearConstraint<R>, x: &[R], y: &HashMap<(usize, usize), R>) -> R {
        c.lhs(x, |i, j| y.get(&(i, j)).cloned().unwrap_or_else(R::zero))
    }

    #[test]
    fn mccormick_examples() {
        let rows: Vec<LinearConstraint<R>> = mccormick(1, 2);
        assert_eq!(rows.len(), 4);
        let x = [int(1), int(1)];
        let y1: HashMap<_, _> = [((1, 2), int(1))].into();
        assert!(rows.iter().all(|c| at(c, &x, &y1) <= *c.rhs()));
        let y0: HashMap<_, _> = [((1, 2), int(0))].into();
        assert_eq!(rows[3].excess(&x, |_, _| int(0)), int(1));
        assert!(rows[..3].iter().all(|c| at(c, &x, &y0) <= *c.rhs()));
        assert_eq!(mccormick::<R>(3, 3).len(), 3);
    }

    #[test]
    fn triangle_examples() {
        let rows: Vec<LinearConstraint<R>> = triangle(1, 2, 3);
        let half = [rat(1, 2), rat(1, 2), rat(1, 2)];
        assert_eq!(rows[0].lhs(&half, |_, _| int(0)), rat(3, 2));
        let e = [int(1), int(0), int(0)];
        for c in &rows {
            assert!(c.lhs(&e, |_, _| int(0)) <= *c.rhs());
        }
        assert_eq!(rows[1].lhs(&e, |_, _| int(0)), int(-1));
    }

    #[test]
    fn clique_alpha_contract_and_equality() {
        assert!(matches!(
            clique::<R>(&[1, 2, 3], 2),
            Err(InequalityError::BadAlpha { .. })
        ));
        assert!(clique::<R>(&[1, 2], 1).is_err());
        for n in 3..=8usize {
            let set: Vec<usize> = (1..=n).collect();
            let ones = vec![int(1); n];
            for alpha in 1..=n as i64 - 2 {
                let c: LinearConstraint<R> = clique(&set, alpha).unwrap();
                let lhs = c.lhs(&ones, |_, _| int(1));
                assert!(lhs <= *c.rhs());
            }
        }
    }

    #[test]
    fn cut_reduces_to_triangle() {
        let c: LinearConstraint<R> = cut(&[1], &[2, 3]).unwrap();
        let t = &triangle::<R>(1, 2, 3)[1];
        assert!(c.same_row(t));
        assert_eq!(cut::<R>(&[1], &[1, 2]), Err(InequalityError::Overlap));
        let ones = vec![int(1); 4];
        assert_eq!(c.lhs(&ones, |_, _| int(1)), int(0));
        let g: LinearConstraint<R> = generalized_cut(&[1], &[2, 3]).unwrap();
        assert!(g.same_row(&c));
    }

    #[test]
    fn odd_cycle_examples() {
        let c: LinearConstraint<R> = odd_cycle(&[1, 2, 3, 4], &[1]).unwrap();
        let expected = LinearConstraint::new(
            [
                (VarRef::x(3), int(-1)),
                (VarRef::x(4), int(-1)),
                (VarRef::y(2, 3), int(1)),
                (VarRef::y(3, 4), int(1)),
                (VarRef::y(1, 4), int(1)),
                (VarRef::y(1, 2), int(-1)),
            ],
            int(0),
            Label::new(Family::Other, 0),
        );
        assert!(c.same_row(&expected));
        assert_eq!(
            odd_cycle::<R>(&[1, 2, 3, 4], &[1, 2]),
            Err(InequalityError::EvenD)
        );
        let tri: Vec<LinearConstraint<R>> = triangle(1, 2, 3);
        assert!(odd_cycle::<R>(&[1, 2, 3], &[1, 2, 3])
            .unwrap()
            .same_row(&tri[0]));
        // D = {23}: the vertex where the other two edges meet is 1.
        assert!(odd_cycle::<R>(&[1, 2, 3], &[2]).unwrap().same_row(&tri[1]));
    }

    #[test]
    fn fig5_cycle_pair() {
        let signs = [1, -1, 1, -1, -1, 1, 1, 1];
        let g = WeightedGraph::cycle(&signs.map(int)).unwrap();
        let pair: Vec<LinearConstraint<R>> =
            cycle_theorem_pair(&g, CycleSemantics::Junction).unwrap();
        assert_eq!(pair.len(), 2);
        let x: Vec<R> = [6, 5, 3, 5, 4, 6, 5, 6]
            .iter()
            .map(|&v| rat(v, 10))
            .collect();
        let xpart = pair[0].lhs(&x, |_, _| int(0));
        assert_eq!(xpart, rat(4, 10) - rat(17, 10));
        assert_eq!(*pair[0].rhs(), int(1));
        let d = odd_cycle::<R>(&(1..=8).collect::<Vec<_>>(), &[2, 4, 5]).unwrap();
        assert!(d.same_row(&pair[0]));
        let c5 = WeightedGraph::cycle(&vec![int(1); 5]).unwrap();
        let p: Vec<LinearConstraint<R>> =
            cycle_theorem_pair(&c5, CycleSemantics::Junction).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].label().variant, 2);
        let c4 = WeightedGraph::cycle(&[int(1), int(-1), int(1), int(-1)]).unwrap();
        assert!(cycle_theorem_pair::<R, R>(&c4, CycleSemantics::Junction)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn kn_minus_counts_and_fig1() {
        for n in 5..=8 {
            let sys: ConstraintSystem<R> = kn_minus_system(n).unwrap();
            assert_eq!(sys.len(), 4 * n * (n - 1) / 2 + 3 * n - 10);
        }
        assert!(matches!(
            kn_minus_system::<R>(4),
            Err(InequalityError::TooSmall { .. })
        ));
    }

    fn edge_sum(sys: &ConstraintSystem<R>, y: &[R]) -> R {
        let n = sys.n();
        sys.universe()
            .iter()
            .zip(y)
            .filter(|(&(i, j), _)| !(i == n - 1 && j == n))
            .map(|(_, v)| v.clone())
            .sum()
    }

    #[test]
    fn third_family_witnesses_violate_only_their_row() {
        for n in 5..=9 {
            let sys: ConstraintSystem<R> = kn_minus_system(n).unwrap();
            for s in 2..=n - 3 {
                let (x, y) = minimality_witness::<R>(n, 3, s).unwrap();
                let bad = sys.violations(&x, &y);
                assert_eq!(bad.len(), 1, "n={n} s={s}: {bad:?}");
                let label = sys.constraints()[bad[0].0].label();
                assert_eq!((label.variant, label.param), (3, Some(s as i64)));
                let s = s as i64;
                assert_eq!(edge_sum(&sys, &y), rat(s * s - 2, 2));
            }
        }
        assert!(minimality_witness::<R>(6, 3, 1).is_err());
        assert!(minimality_witness::<R>(6, 1, 4).is_err());
    }

    #[test]
    fn textbook_points_of_the_first_two_families_break_mccormick() {
        let sys: ConstraintSystem<R> = kn_minus_system(6).unwrap();
        for family in [1, 2] {
            for s in 1..=3 {
                let (x, y) = minimality_witness::<R>(6, family, s).unwrap();
                let si = s as i64;
                assert_eq!(edge_sum(&sys, &y), rat(si * (si + 1), 2) - rat(2, 5));
                let small = if family == 1 { 6 } else { 5 };
                let labels: Vec<String> = sys
                    .violations(&x, &y)
                    .iter()
                    .map(|(k, _)| sys.constraints()[*k].label().to_string())
                    .collect();
                let lower = Label::new(Family::McCormick, 4)
                    .set(&[s, small])
                    .to_string();
                assert!(labels.contains(&lower), "family {family} s={s}: {labels:?}");
            }
        }
    }

    #[test]
    fn necessity_points_exist_only_at_the_ends() {
        for n in 5..=8 {
            for (family, s) in kn_minus_index(n) {
                let point = necessity_point::<R>(n, family, s).unwrap();
                assert_eq!(
                    point.is_some(),
                    family == 3 || s == 1 || s == n - 3,
                    "n={n} {family} {s}"
                );
            }
        }
        assert_eq!(
            necessity_point::<R>(6, 1, 3).unwrap().unwrap(),
            vec![int(1), int(1), rat(1, 2), rat(1, 2), rat(1, 2), int(1)]
        );
        assert_eq!(
            necessity_point::<R>(6, 2, 1).unwrap().unwrap(),
            vec![rat(1, 2), int(0), rat(1, 2), int(0), int(0), rat(1, 2)]
        );
    }

    #[test]
    fn wheel_rows() {
        let rows: Vec<LinearConstraint<R>> = wheel_inequalities(5).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].coeff(VarRef::x(6)), int(2));
        assert_eq!(*rows[0].rhs(), int(2));
        assert_eq!(rows[1].coeff(VarRef::x(6)), int(3));
        assert_eq!(rows[1].coeff(VarRef::x(1)), int(2));
        assert_eq!(*rows[1].rhs(), int(5));
        assert_eq!(
            rows[0]
                .coeffs()
                .iter()
                .filter(|(v, _)| matches!(v, VarRef::Y(..)))
                .count(),
            10
        );
        assert_eq!(wheel_inequalities::<R>(4).unwrap().len(), 1);
        let ones = vec![int(1); 6];
        assert_eq!(rows[0].lhs(&ones, |_, _| int(1)), int(-3));
    }

    #[test]
    fn labels_round_trip() {
        let labels = [
            Label::new(Family::Cut, 0).set(&[1]).set(&[2, 3]),
            Label::new(Family::CliqueMinus, 3).param(2),
            Label::new(Family::OddCycle, 0).set(&[1, 2, 3]).set(&[]),
            Label::new(Family::McCormick, 4).set(&[10, 12]),
        ];
        for l in labels {
            assert_eq!(l.to_string().parse::<Label>(), Ok(l));
        }
        assert!("bogus_1".parse::<Label>().is_err());
    }

    #[test]
    fn class_parsing() {
        assert_eq!(
            "MQ4".parse::<RelaxClass>().unwrap(),
            RelaxClass::sized(ClassKind::MQ, 4)
        );
        assert_eq!(
            "mo_5".parse::<RelaxClass>().unwrap(),
            RelaxClass::sized(ClassKind::MO, 5)
        );
        assert_eq!(
            "MT".parse::<RelaxClass>().unwrap(),
            RelaxClass::new(ClassKind::MT)
        );
        assert!("MT4".parse::<RelaxClass>().is_err());
        assert!("MQ3".parse::<RelaxClass>().is_err());
        assert!("XY".parse::<RelaxClass>().is_err());
    }

    #[test]
    fn relaxation_examples() {
        let c6 = WeightedGraph::cycle(&vec![int(1); 6]).unwrap();
        let m: ConstraintSystem<R> = relaxation_system(&c6, RelaxClass::new(ClassKind::M)).unwrap();
        let mt: ConstraintSystem<R> =
            relaxation_system(&c6, RelaxClass::new(ClassKind::MT)).unwrap();
        assert_eq!(m.constraints(), mt.constraints());
        let k4 = WeightedGraph::complete(4, int(1));
        let mo: Relaxation<R> = build_relaxation(&k4, RelaxClass::sized(ClassKind::MO, 4)).unwrap();
        assert_eq!(mo.sources, 3);
        // all-positive 4-cycles: |E^+| = 4 even, |E^-| = 0 even
        assert_eq!(mo.system.len(), 24);
        let k6 = WeightedGraph::complete(6, int(1));
        let mq4: Relaxation<R> =
            build_relaxation(&k6, RelaxClass::sized(ClassKind::MQ, 4)).unwrap();
        assert_eq!(mq4.sources, 15);
        // subsets of size 3 (one alpha) and 4 (two alphas) of the 6-set
        assert_eq!(mq4.system.len(), 60 + 20 + 2 * 15);
        let mc: Relaxation<R> = build_relaxation(&k4, RelaxClass::new(ClassKind::MC)).unwrap();
        // splits of a 4-set with |S| >= 1, |T| >= 2: 4 + 6
        assert_eq!(mc.system.len(), 24 + 10);
    }

    #[test]
    fn dedup_merges_cut_and_generalized_cut() {
        let k5 = WeightedGraph::complete(5, int(1));
        let mut sys: ConstraintSystem<R> =
            relaxation_system(&k5, RelaxClass::new(ClassKind::MC)).unwrap();
        let mg: ConstraintSystem<R> =
            relaxation_system(&k5, RelaxClass::new(ClassKind::MG)).unwrap();
        sys.extend(mg.constraints()[40..].iter().cloned()).unwrap();
        // gcut(S, T) equals cut(S, T) when t = s + 1 (ten 2+3 splits of
        // the 5-set) and cut(T, S) when s = t (thirty 2+2 splits)
        assert_eq!(sys.dedup(), 40);
        let mut twice = mg.clone();
        twice.extend(mg.constraints().iter().cloned()).unwrap();
        assert_eq!(twice.dedup(), mg.len());
    }

    #[test]
    fn push_checks_universe() {
        let g = WeightedGraph::cycle(&vec![int(1); 4]).unwrap();
        let mut sys: ConstraintSystem<R> = mccormick_system(&g);
        assert!(sys.push(triangle(1, 2, 3).remove(0)).is_err());
    }
}
