//! Linear programming over any [`Scalar`], exact for [`Rational`].
//!
//! The solver is a bounded-variable revised simplex with an explicit basis
//! inverse. Bounds live on the variables, not in the row set. Every row
//! gets a slack column (`[0, ∞)` for `<=`, `(-∞, 0]` for `>=`, `[0, 0]`
//! for `=`), and Phase I adds one artificial per row whose slack cannot
//! absorb the initial residual.
//!
//! For exact scalars the problem is first solved in `f64` with Dantzig
//! pricing. The final floating basis is then refactorized exactly and, when
//! it is primal feasible, exact Phase II continues from it with Bland's
//! rule (usually without a single pivot). Otherwise the exact solve starts
//! from scratch. Either way the reported optimum is exact and carries a
//! dual certificate.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::LpError;
use crate::inequalities::{ConstraintSystem, VarRef};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable<S> {
    pub name: String,
    /// `None` means unbounded below.
    pub lower: Option<S>,
    /// `None` means unbounded above.
    pub upper: Option<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row<S> {
    pub name: String,
    pub coeffs: Vec<(usize, S)>,
    pub sense: Sense,
    pub rhs: S,
    /// Squared terms `q · v^2` (file format only; the solver rejects them).
    pub quad: Vec<(usize, S)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<S> {
    pub name: String,
    pub direction: Direction,
    pub vars: Vec<Variable<S>>,
    pub rows: Vec<Row<S>>,
    pub objective: Vec<(usize, S)>,
    /// Squared objective terms `q · v^2`.
    pub objective_quad: Vec<(usize, S)>,
}

impl<S: Scalar> Default for LpProblem<S> {
    fn default() -> Self {
        Self::new("lp")
    }
}

impl<S: Scalar> LpProblem<S> {
    pub fn new(name: impl Into<String>) -> Self {
        LpProblem {
            name: name.into(),
            direction: Direction::Minimize,
            vars: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            objective_quad: Vec::new(),
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: Option<S>,
        upper: Option<S>,
    ) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.vars.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, S)>,
        sense: Sense,
        rhs: S,
    ) -> usize {
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            sense,
            rhs,
            quad: Vec::new(),
        });
        self.rows.len() - 1
    }

    pub fn set_objective(&mut self, direction: Direction, coeffs: Vec<(usize, S)>) {
        self.direction = direction;
        self.objective = coeffs;
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn is_quadratic(&self) -> bool {
        !self.objective_quad.is_empty() || self.rows.iter().any(|r| !r.quad.is_empty())
    }

    pub fn objective_value(&self, x: &[S]) -> S {
        let lin = self
            .objective
            .iter()
            .fold(S::zero(), |acc, (j, c)| acc + c.clone() * x[*j].clone());
        self.objective_quad.iter().fold(lin, |acc, (j, q)| {
            acc + q.clone() * x[*j].clone() * x[*j].clone()
        })
    }

    pub fn row_activity(&self, r: usize, x: &[S]) -> S {
        let row = &self.rows[r];
        let lin = row
            .coeffs
            .iter()
            .fold(S::zero(), |acc, (j, c)| acc + c.clone() * x[*j].clone());
        row.quad.iter().fold(lin, |acc, (j, q)| {
            acc + q.clone() * x[*j].clone() * x[*j].clone()
        })
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LpProblem<T> {
        let terms = |v: &[(usize, S)]| v.iter().map(|(j, c)| (*j, f(c))).collect::<Vec<_>>();
        LpProblem {
            name: self.name.clone(),
            direction: self.direction,
            vars: self
                .vars
                .iter()
                .map(|v| Variable {
                    name: v.name.clone(),
                    lower: v.lower.as_ref().map(&f),
                    upper: v.upper.as_ref().map(&f),
                })
                .collect(),
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    name: r.name.clone(),
                    coeffs: terms(&r.coeffs),
                    sense: r.sense,
                    rhs: f(&r.rhs),
                    quad: terms(&r.quad),
                })
                .collect(),
            objective: terms(&self.objective),
            objective_quad: terms(&self.objective_quad),
        }
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.is_quadratic() {
            return Err(LpError::MalformedProblem(
                "quadratic terms cannot be handled by the simplex solver".into(),
            ));
        }
        let nv = self.vars.len();
        let in_range = |terms: &[(usize, S)]| terms.iter().all(|(j, _)| *j < nv);
        if !in_range(&self.objective) || !self.rows.iter().all(|r| in_range(&r.coeffs)) {
            return Err(LpError::MalformedProblem(
                "variable index out of range".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    /// Objective value at optimality.
    pub value: Option<S>,
    /// Values of the problem variables (a feasible point when unbounded).
    pub primal: Vec<S>,
    /// Row multipliers `π` with `c = π A + d` (sign convention of the
    /// original direction).
    pub dual: Vec<S>,
    /// Reduced costs `d` of the problem variables.
    pub reduced_costs: Vec<S>,
    /// Improving direction of the variables when unbounded.
    pub ray: Option<Vec<S>>,
    /// Basic columns: variables are `0..nvars`, slacks follow in row order.
    pub basis: Vec<usize>,
    pub pivots: usize,
}

impl<S: Scalar> LpSolution<S> {
    fn verdict(status: LpStatus, pivots: usize) -> Self {
        LpSolution {
            status,
            value: None,
            primal: Vec::new(),
            dual: Vec::new(),
            reduced_costs: Vec::new(),
            ray: None,
            basis: Vec::new(),
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest eligible index for entering and leaving; cannot cycle.
    Bland,
    /// Most negative reduced cost; falls back to Bland after a long run of
    /// degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
    /// Free variable resting at zero.
    Zero,
}

struct Tableau<S> {
    m: usize,
    n_struct: usize,
    cols: Vec<Vec<(usize, S)>>,
    lower: Vec<Option<S>>,
    upper: Vec<Option<S>>,
    b: Vec<S>,
    x: Vec<S>,
    status: Vec<Status>,
    basis: Vec<usize>,
    binv: Vec<Vec<S>>,
    artificial_start: usize,
    pivots: usize,
    since_refactor: usize,
}

enum Step {
    Optimal,
    Unbounded(usize, bool),
    Progress,
}

const MAX_PIVOTS_FACTOR: usize = 200;

impl<S: Scalar> Tableau<S> {
    fn new(p: &LpProblem<S>) -> Self {
        let m = p.rows.len();
        let n = p.vars.len();
        let mut cols: Vec<Vec<(usize, S)>> = vec![Vec::new(); n + m];
        for (r, row) in p.rows.iter().enumerate() {
            for (j, c) in &row.coeffs {
                if c.is_zero() {
                    continue;
                }
                match cols[*j].last_mut() {
                    Some(last) if last.0 == r => last.1 = last.1.clone() + c.clone(),
                    _ => cols[*j].push((r, c.clone())),
                }
            }
            cols[n + r].push((r, S::one()));
        }
        for col in &mut cols {
            col.retain(|(_, c)| !c.is_zero());
        }
        let mut lower: Vec<Option<S>> = p.vars.iter().map(|v| v.lower.clone()).collect();
        let mut upper: Vec<Option<S>> = p.vars.iter().map(|v| v.upper.clone()).collect();
        for row in &p.rows {
            let (lo, up) = match row.sense {
                Sense::Le => (Some(S::zero()), None),
                Sense::Ge => (None, Some(S::zero())),
                Sense::Eq => (Some(S::zero()), Some(S::zero())),
            };
            lower.push(lo);
            upper.push(up);
        }
        let status: Vec<Status> = (0..n + m)
            .map(|j| match (&lower[j], &upper[j]) {
                (Some(_), _) => Status::Lower,
                (None, Some(_)) => Status::Upper,
                (None, None) => Status::Zero,
            })
            .collect();
        let x = (0..n + m)
            .map(|j| nonbasic_value(status[j], &lower[j], &upper[j]))
            .collect();
        Tableau {
            m,
            n_struct: n,
            cols,
            lower,
            upper,
            b: p.rows.iter().map(|r| r.rhs.clone()).collect(),
            x,
            status,
            basis: Vec::new(),
            binv: Vec::new(),
            artificial_start: n + m,
            pivots: 0,
            since_refactor: 0,
        }
    }

    fn ncols(&self) -> usize {
        self.cols.len()
    }

    fn residual(&self) -> Vec<S> {
        let mut r = self.b.clone();
        for j in 0..self.ncols() {
            if self.status[j] == Status::Basic || self.x[j].is_zero() {
                continue;
            }
            for (i, a) in &self.cols[j] {
                r[*i] = r[*i].clone() - a.clone() * self.x[j].clone();
            }
        }
        r
    }

    /// Slack basis; rows whose slack cannot take the residual get an
    /// artificial column instead.
    fn cold_start(&mut self) -> bool {
        let resid = self.residual();
        let n = self.n_struct;
        self.basis = Vec::with_capacity(self.m);
        let mut any_artificial = false;
        for r in 0..self.m {
            let s = n + r;
            let v = resid[r].clone();
            let fits = self.lower[s].as_ref().is_none_or(|l| v >= *l)
                && self.upper[s].as_ref().is_none_or(|u| v <= *u);
            if fits {
                self.status[s] = Status::Basic;
                self.x[s] = v;
                self.basis.push(s);
            } else {
                let sigma = if v.is_positive() { S::one() } else { -S::one() };
                let a = self.cols.len();
                self.cols.push(vec![(r, sigma.clone())]);
                self.lower.push(Some(S::zero()));
                self.upper.push(None);
                self.status.push(Status::Basic);
                self.x.push(v * sigma);
                self.basis.push(a);
                any_artificial = true;
            }
        }
        self.binv = (0..self.m)
            .map(|i| {
                let mut row = vec![S::zero(); self.m];
                let col = &self.cols[self.basis[i]];
                row[i] = S::one() / col[0].1.clone();
                row
            })
            .collect();
        any_artificial
    }

    /// Installs the given basis (one column per row) with the other columns
    /// at the given statuses. Returns false when the basis is singular.
    fn load_basis(&mut self, basis: &[usize], nonbasic: &[Status]) -> bool {
        if basis.len() != self.m {
            return false;
        }
        for j in 0..self.ncols() {
            self.status[j] = nonbasic.get(j).copied().unwrap_or(Status::Lower);
            if self.status[j] == Status::Basic {
                self.status[j] = Status::Lower;
            }
            if !status_allowed(self.status[j], &self.lower[j], &self.upper[j]) {
                self.status[j] = default_status(&self.lower[j], &self.upper[j]);
            }
            self.x[j] = nonbasic_value(self.status[j], &self.lower[j], &self.upper[j]);
        }
        for &j in basis {
            self.status[j] = Status::Basic;
        }
        self.basis = basis.to_vec();
        if !self.refactor() {
            return false;
        }
        self.recompute_basics();
        true
    }

    /// Recomputes `B^{-1}` by Gauss-Jordan elimination.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut mat: Vec<Vec<S>> = vec![vec![S::zero(); m]; m];
        for (k, &j) in self.basis.iter().enumerate() {
            for (i, a) in &self.cols[j] {
                mat[*i][k] = a.clone();
            }
        }
        let mut inv: Vec<Vec<S>> = (0..m)
            .map(|i| {
                let mut r = vec![S::zero(); m];
                r[i] = S::one();
                r
            })
            .collect();
        // mat · B-columns: solve so that inv becomes B^{-1} with row k of
        // the result belonging to basis position k.
        let mut row_of_pos = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for k in 0..m {
            let pivot_row = if S::EXACT {
                (0..m).find(|&i| !used[i] && !mat[i][k].is_zero())
            } else {
                (0..m)
                    .filter(|&i| !used[i] && mat[i][k].abs() > S::tolerance())
                    .max_by(|&a, &b| {
                        mat[a][k]
                            .abs()
                            .partial_cmp(&mat[b][k].abs())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
            };
            let Some(p) = pivot_row else {
                return false;
            };
            used[p] = true;
            row_of_pos[k] = p;
            let piv = mat[p][k].clone();
            if !piv.is_one() {
                for c in 0..m {
                    if !mat[p][c].is_zero() {
                        mat[p][c] = mat[p][c].clone() / piv.clone();
                    }
                    if !inv[p][c].is_zero() {
                        inv[p][c] = inv[p][c].clone() / piv.clone();
                    }
                }
            }
            let prow_mat: Vec<(usize, S)> = (0..m)
                .filter(|&c| !mat[p][c].is_zero())
                .map(|c| (c, mat[p][c].clone()))
                .collect();
            let prow_inv: Vec<(usize, S)> = (0..m)
                .filter(|&c| !inv[p][c].is_zero())
                .map(|c| (c, inv[p][c].clone()))
                .collect();
            for i in 0..m {
                if i == p || mat[i][k].is_zero() {
                    continue;
                }
                let f = mat[i][k].clone();
                for (c, v) in &prow_mat {
                    mat[i][*c] = mat[i][*c].clone() - f.clone() * v.clone();
                }
                for (c, v) in &prow_inv {
                    inv[i][*c] = inv[i][*c].clone() - f.clone() * v.clone();
                }
                if !S::EXACT {
                    mat[i][k] = S::zero();
                }
            }
        }
        self.binv = (0..m)
            .map(|k| std::mem::take(&mut inv[row_of_pos[k]]))
            .collect();
        self.since_refactor = 0;
        true
    }

    fn recompute_basics(&mut self) {
        let resid = self.residual();
        for k in 0..self.m {
            let v = self.binv[k]
                .iter()
                .zip(&resid)
                .filter(|(a, _)| !a.is_zero())
                .fold(S::zero(), |acc, (a, r)| acc + a.clone() * r.clone());
            let j = self.basis[k];
            self.x[j] = v;
        }
    }

    fn primal_feasible(&self) -> bool {
        self.basis.iter().all(|&j| {
            let v = &self.x[j];
            self.lower[j]
                .as_ref()
                .is_none_or(|l| !(l.clone() - v.clone()).approx_pos())
                && self.upper[j]
                    .as_ref()
                    .is_none_or(|u| !(v.clone() - u.clone()).approx_pos())
        })
    }

    fn duals(&self, cost: &[S]) -> Vec<S> {
        let mut pi = vec![S::zero(); self.m];
        for (k, &j) in self.basis.iter().enumerate() {
            let c = &cost[j];
            if c.is_zero() {
                continue;
            }
            for (i, v) in self.binv[k].iter().enumerate() {
                if !v.is_zero() {
                    pi[i] = pi[i].clone() + c.clone() * v.clone();
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, j: usize, cost: &[S], pi: &[S]) -> S {
        self.cols[j].iter().fold(cost[j].clone(), |acc, (i, a)| {
            acc - pi[*i].clone() * a.clone()
        })
    }

    fn column(&self, j: usize) -> Vec<S> {
        let mut alpha = vec![S::zero(); self.m];
        for (i, a) in &self.cols[j] {
            for (k, row) in self.binv.iter().enumerate() {
                let v = &row[*i];
                if !v.is_zero() {
                    alpha[k] = alpha[k].clone() + v.clone() * a.clone();
                }
            }
        }
        alpha
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!((&self.lower[j], &self.upper[j]), (Some(l), Some(u)) if l == u)
    }

    /// Entering candidate: `(column, increase?)`.
    fn price(&self, cost: &[S], pi: &[S], rule: PivotRule) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool, S)> = None;
        for j in 0..self.ncols() {
            if self.status[j] == Status::Basic || self.is_fixed(j) {
                continue;
            }
            let d = self.reduced_cost(j, cost, pi);
            let up = d.approx_neg() && matches!(self.status[j], Status::Lower | Status::Zero);
            let down = d.approx_pos() && matches!(self.status[j], Status::Upper | Status::Zero);
            if !(up || down) {
                continue;
            }
            match rule {
                PivotRule::Bland => return Some((j, up)),
                PivotRule::Dantzig => {
                    let mag = d.abs();
                    if best.as_ref().is_none_or(|(_, _, b)| mag > *b) {
                        best = Some((j, up, mag));
                    }
                }
            }
        }
        best.map(|(j, up, _)| (j, up))
    }

    fn step(&mut self, cost: &[S], rule: PivotRule) -> Step {
        let pi = self.duals(cost);
        let Some((q, increase)) = self.price(cost, &pi, rule) else {
            return Step::Optimal;
        };
        let alpha = self.column(q);
        // Moving x_q by t in direction `dir` changes x_B by -dir·t·alpha.
        let mut best: Option<(S, usize, bool)> = None;
        for (k, a) in alpha.iter().enumerate() {
            if a.approx_zero() {
                continue;
            }
            let j = self.basis[k];
            // effective rate at which x_j moves per unit t
            let rate = if increase { -a.clone() } else { a.clone() };
            let (limit, to_upper) = if rate.is_positive() {
                match &self.upper[j] {
                    Some(u) => (u.clone() - self.x[j].clone(), true),
                    None => continue,
                }
            } else {
                match &self.lower[j] {
                    Some(l) => (self.x[j].clone() - l.clone(), false),
                    None => continue,
                }
            };
            let limit = if limit.is_negative() {
                S::zero()
            } else {
                limit
            };
            let t = limit / rate.abs();
            let better = match &best {
                None => true,
                Some((bt, bk, _)) => match rule {
                    PivotRule::Bland => t < *bt || (t == *bt && j < self.basis[*bk]),
                    PivotRule::Dantzig => {
                        let tol = S::tolerance();
                        t < bt.clone() - tol.clone()
                            || ((t.clone() - bt.clone()).abs() <= tol && a.abs() > alpha[*bk].abs())
                    }
                },
            };
            if better {
                best = Some((t, k, to_upper));
            }
        }
        let range = match (&self.lower[q], &self.upper[q]) {
            (Some(l), Some(u)) => Some(u.clone() - l.clone()),
            _ => None,
        };
        let flip = match (&range, &best) {
            (Some(r), Some((t, _, _))) => *r <= *t,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if best.is_none() && !flip {
            return Step::Unbounded(q, increase);
        }
        let t = if flip {
            range.clone().expect("flip needs a range")
        } else {
            best.as_ref().expect("leaving row").0.clone()
        };
        let signed_t = if increase { t.clone() } else { -t.clone() };
        if !signed_t.is_zero() {
            for (k, a) in alpha.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let j = self.basis[k];
                self.x[j] = self.x[j].clone() - a.clone() * signed_t.clone();
            }
            self.x[q] = self.x[q].clone() + signed_t;
        }
        if flip {
            self.status[q] = if increase {
                Status::Upper
            } else {
                Status::Lower
            };
            self.x[q] = nonbasic_value(self.status[q], &self.lower[q], &self.upper[q]);
            return Step::Progress;
        }
        let (_, r, to_upper) = best.expect("leaving row");
        let leaving = self.basis[r];
        self.status[leaving] = if to_upper {
            Status::Upper
        } else {
            Status::Lower
        };
        self.x[leaving] = nonbasic_value(
            self.status[leaving],
            &self.lower[leaving],
            &self.upper[leaving],
        );
        self.pivot(r, q, &alpha);
        Step::Progress
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[S]) {
        let piv = alpha[r].clone();
        let prow: Vec<(usize, S)> = self.binv[r]
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(c, v)| (c, v.clone() / piv.clone()))
            .collect();
        for row in self.binv[r].iter_mut() {
            *row = S::zero();
        }
        for (c, v) in &prow {
            self.binv[r][*c] = v.clone();
        }
        for (k, a) in alpha.iter().enumerate() {
            if k == r || a.is_zero() {
                continue;
            }
            for (c, v) in &prow {
                self.binv[k][*c] = self.binv[k][*c].clone() - a.clone() * v.clone();
            }
        }
        self.basis[r] = q;
        self.status[q] = Status::Basic;
        self.pivots += 1;
        self.since_refactor += 1;
        if !S::EXACT && self.since_refactor >= 50 {
            self.refactor();
            self.recompute_basics();
        }
    }

    fn run(&mut self, cost: &[S], rule: PivotRule) -> Result<Step, LpError> {
        let limit = MAX_PIVOTS_FACTOR * (self.ncols() + self.m + 10);
        let mut rule_now = rule;
        let mut stall = 0usize;
        let mut last_obj: Option<S> = None;
        let start = self.pivots;
        loop {
            if self.pivots - start > limit {
                return Err(LpError::MalformedProblem("pivot limit exceeded".into()));
            }
            match self.step(cost, rule_now) {
                Step::Progress => {}
                other => return Ok(other),
            }
            if rule_now == PivotRule::Dantzig {
                let obj = self.objective(cost);
                let improved = last_obj
                    .as_ref()
                    .is_none_or(|o| (o.clone() - obj.clone()).approx_pos());
                stall = if improved { 0 } else { stall + 1 };
                if stall > 50 {
                    rule_now = PivotRule::Bland;
                }
                last_obj = Some(obj);
            }
        }
    }

    fn objective(&self, cost: &[S]) -> S {
        cost.iter()
            .zip(&self.x)
            .filter(|(c, _)| !c.is_zero())
            .fold(S::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
    }

    /// Pivots basic artificials at level zero out of the basis where a
    /// non-artificial column can replace them.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.artificial_start {
                continue;
            }
            let mut replaced = false;
            for j in 0..self.artificial_start {
                if self.status[j] == Status::Basic || self.is_fixed(j) && j >= self.n_struct {
                    continue;
                }
                let alpha = self.column(j);
                if alpha[r].approx_zero() {
                    continue;
                }
                let a = self.basis[r];
                self.status[a] = Status::Lower;
                self.x[a] = S::zero();
                self.pivot(r, j, &alpha);
                replaced = true;
                break;
            }
            if !replaced {
                continue;
            }
        }
    }
}

fn nonbasic_value<S: Scalar>(st: Status, lower: &Option<S>, upper: &Option<S>) -> S {
    match st {
        Status::Lower => lower.clone().unwrap_or_else(S::zero),
        Status::Upper => upper.clone().unwrap_or_else(S::zero),
        Status::Basic | Status::Zero => S::zero(),
    }
}

fn status_allowed<S>(st: Status, lower: &Option<S>, upper: &Option<S>) -> bool {
    match st {
        Status::Lower => lower.is_some(),
        Status::Upper => upper.is_some(),
        Status::Zero => lower.is_none() && upper.is_none(),
        Status::Basic => true,
    }
}

fn default_status<S>(lower: &Option<S>, upper: &Option<S>) -> Status {
    match (lower, upper) {
        (Some(_), _) => Status::Lower,
        (None, Some(_)) => Status::Upper,
        (None, None) => Status::Zero,
    }
}

struct Hint {
    basis: Vec<usize>,
    status: Vec<Status>,
}

/// Solves the problem. For exact scalars the result is exact.
pub fn solve<S: Scalar>(p: &LpProblem<S>) -> Result<LpSolution<S>, LpError> {
    p.validate()?;
    if !S::EXACT {
        return solve_core(p, PivotRule::Dantzig, None).map(|(s, _)| s);
    }
    let approx = p.map_scalar(|v| v.to_f64());
    let hint = match solve_core(&approx, PivotRule::Dantzig, None) {
        Ok((sol, hint)) if sol.is_optimal() => hint,
        _ => None,
    };
    solve_core(p, PivotRule::Bland, hint.as_ref()).map(|(s, _)| s)
}

/// Exact solve without the floating warm start.
pub fn solve_cold<S: Scalar>(p: &LpProblem<S>) -> Result<LpSolution<S>, LpError> {
    p.validate()?;
    solve_core(p, PivotRule::Bland, None).map(|(s, _)| s)
}

fn solve_core<S: Scalar>(
    p: &LpProblem<S>,
    rule: PivotRule,
    hint: Option<&Hint>,
) -> Result<(LpSolution<S>, Option<Hint>), LpError> {
    let n = p.vars.len();
    if p.vars
        .iter()
        .any(|v| matches!((&v.lower, &v.upper), (Some(l), Some(u)) if l > u))
    {
        return Ok((LpSolution::verdict(LpStatus::Infeasible, 0), None));
    }
    let flip = p.direction == Direction::Maximize;
    let mut cost = vec![S::zero(); n + p.rows.len()];
    for (j, c) in &p.objective {
        cost[*j] = cost[*j].clone() + if flip { -c.clone() } else { c.clone() };
    }

    let mut t = Tableau::new(p);
    let warm = hint.is_some_and(|h| t.load_basis(&h.basis, &h.status) && t.primal_feasible());
    if !warm {
        t = Tableau::new(p);
        if t.cold_start() {
            let phase1: Vec<S> = (0..t.ncols())
                .map(|j| {
                    if j >= t.artificial_start {
                        S::one()
                    } else {
                        S::zero()
                    }
                })
                .collect();
            t.run(&phase1, rule)?;
            if t.objective(&phase1).approx_pos() {
                return Ok((LpSolution::verdict(LpStatus::Infeasible, t.pivots), None));
            }
            for j in t.artificial_start..t.ncols() {
                t.upper[j] = Some(S::zero());
                if t.status[j] != Status::Basic {
                    t.status[j] = Status::Lower;
                    t.x[j] = S::zero();
                }
            }
            t.drive_out_artificials();
        }
    }
    cost.resize(t.ncols(), S::zero());

    match t.run(&cost, rule)? {
        Step::Unbounded(q, increase) => {
            let alpha = t.column(q);
            let dir = if increase { S::one() } else { -S::one() };
            let mut ray = vec![S::zero(); t.ncols()];
            ray[q] = dir.clone();
            for (k, a) in alpha.iter().enumerate() {
                ray[t.basis[k]] = -(a.clone() * dir.clone());
            }
            ray.truncate(n);
            let mut sol = LpSolution::verdict(LpStatus::Unbounded, t.pivots);
            sol.primal = t.x[..n].to_vec();
            sol.ray = Some(ray);
            Ok((sol, None))
        }
        Step::Optimal | Step::Progress => {
            let pi = t.duals(&cost);
            let mut dual = pi.clone();
            let mut reduced: Vec<S> = (0..n).map(|j| t.reduced_cost(j, &cost, &pi)).collect();
            if flip {
                dual.iter_mut().for_each(|v| *v = -v.clone());
                reduced.iter_mut().for_each(|v| *v = -v.clone());
            }
            let primal = t.x[..n].to_vec();
            let value = p.objective_value(&primal);
            let hint = (t.basis.iter().all(|&j| j < t.artificial_start)).then(|| Hint {
                basis: t.basis.clone(),
                status: t.status[..t.artificial_start].to_vec(),
            });
            let sol = LpSolution {
                status: LpStatus::Optimal,
                value: Some(value),
                primal,
                dual,
                reduced_costs: reduced,
                ray: None,
                basis: t.basis.clone(),
                pivots: t.pivots,
            };
            Ok((sol, hint))
        }
    }
}

/// Checks an optimal solution against the problem from scratch: primal
/// feasibility, `c = πA + d`, sign and complementary-slackness conditions
/// of the multipliers, and equality of the reported value. Together these
/// prove optimality.
pub fn verify_optimality(
    p: &LpProblem<Rational>,
    sol: &LpSolution<Rational>,
) -> Result<(), String> {
    if !sol.is_optimal() {
        return Err(format!("status is {:?}", sol.status));
    }
    let n = p.vars.len();
    if sol.primal.len() != n || sol.dual.len() != p.rows.len() || sol.reduced_costs.len() != n {
        return Err("solution vectors have the wrong length".into());
    }
    let x = &sol.primal;
    for (j, v) in p.vars.iter().enumerate() {
        if v.lower.as_ref().is_some_and(|l| x[j] < *l)
            || v.upper.as_ref().is_some_and(|u| x[j] > *u)
        {
            return Err(format!("variable {} violates its bounds", v.name));
        }
    }
    // Work in minimisation form.
    let s = if p.direction == Direction::Maximize {
        -Rational::one()
    } else {
        Rational::one()
    };
    let mut d: Vec<Rational> = vec![Rational::zero(); n];
    for (j, c) in &p.objective {
        d[*j] += c * &s;
    }
    for (r, row) in p.rows.iter().enumerate() {
        let pi = &sol.dual[r] * &s;
        let act = p.row_activity(r, x);
        let ok = match row.sense {
            Sense::Le => act <= row.rhs,
            Sense::Ge => act >= row.rhs,
            Sense::Eq => act == row.rhs,
        };
        if !ok {
            return Err(format!("row {} is violated", row.name));
        }
        let sign_ok = match row.sense {
            Sense::Le => pi <= Rational::zero(),
            Sense::Ge => pi >= Rational::zero(),
            Sense::Eq => true,
        };
        if !sign_ok {
            return Err(format!("multiplier of row {} has the wrong sign", row.name));
        }
        if !pi.is_zero() && act != row.rhs {
            return Err(format!(
                "row {} is slack but carries a multiplier",
                row.name
            ));
        }
        for (j, a) in &row.coeffs {
            d[*j] -= &pi * a;
        }
    }
    for (j, v) in p.vars.iter().enumerate() {
        if d[j] != &sol.reduced_costs[j] * &s {
            return Err(format!("reduced cost of {} does not match", v.name));
        }
        if d[j] > Rational::zero() && v.lower.as_ref() != Some(&x[j]) {
            return Err(format!(
                "{} has positive reduced cost but is not at its lower bound",
                v.name
            ));
        }
        if d[j] < Rational::zero() && v.upper.as_ref() != Some(&x[j]) {
            return Err(format!(
                "{} has negative reduced cost but is not at its upper bound",
                v.name
            ));
        }
    }
    if sol.value.as_ref() != Some(&p.objective_value(x)) {
        return Err("reported value differs from the objective at the primal point".into());
    }
    Ok(())
}

/// Result of optimising over the slice `{y : (x, y) ∈ P}` at a fixed `x`.
#[derive(Debug, Clone)]
pub struct FixedXSolution {
    /// The LP that was finally solved; its variables follow the system's
    /// universe order.
    pub lp: LpProblem<Rational>,
    pub solution: LpSolution<Rational>,
    /// System constraint index of every LP row.
    pub rows: Vec<usize>,
    /// Number of exact LP solves (more than one when rows were activated
    /// lazily).
    pub rounds: usize,
}

impl FixedXSolution {
    pub fn value(&self) -> &Rational {
        self.solution.value.as_ref().expect("optimal solution")
    }

    pub fn y(&self) -> &[Rational] {
        &self.solution.primal
    }
}

/// Systems with at most this many multi-variable rows are solved in one go.
const DIRECT_ROWS: usize = 400;
/// Most violated rows added per lazy round.
const BATCH: usize = 600;

struct Reduced {
    terms: Vec<(usize, Rational)>,
    rhs: Rational,
}

/// Optimises `Σ objective[e] · y_e` (indexed like the system universe) over
/// the slice of the system at `x`. The `x` variables are substituted, rows
/// in a single `y` become bounds, and for large systems the remaining rows
/// are activated lazily: floating-point rounds pick the violated rows, the
/// exact LP is solved on the active set, and every inactive row is then
/// checked against the exact optimum (rows whose floating slack exceeds a
/// rigorous rounding margin are accepted without exact evaluation).
pub fn fix_x_and_solve<T: Scalar>(
    sys: &ConstraintSystem<T>,
    x: &[Rational],
    objective: &[Rational],
    direction: Direction,
) -> Result<FixedXSolution, LpError> {
    let ny = sys.universe().len();
    if x.len() != sys.n() || objective.len() != ny {
        return Err(LpError::MalformedProblem(format!(
            "expected {} x values and {} objective coefficients",
            sys.n(),
            ny
        )));
    }
    let xf: Vec<f64> = x.iter().map(|v| v.to_f64()).collect();
    let mut lower: Vec<Option<Rational>> = vec![None; ny];
    let mut upper: Vec<Option<Rational>> = vec![None; ny];
    let mut multi: Vec<usize> = Vec::new();

    for (k, c) in sys.constraints().iter().enumerate() {
        let ys = c
            .coeffs()
            .iter()
            .filter(|(v, _)| matches!(v, VarRef::Y(..)))
            .count();
        if ys >= 2 {
            multi.push(k);
            continue;
        }
        let red = reduce(sys, k, x);
        match red.terms.first() {
            None => {
                if red.rhs.is_negative() {
                    return Err(LpError::InfeasibleAtX(format!("{}", c.label())));
                }
            }
            Some((e, a)) => {
                let bound = &red.rhs / a;
                if a.is_positive() {
                    if upper[*e].as_ref().is_none_or(|u| bound < *u) {
                        upper[*e] = Some(bound);
                    }
                } else if lower[*e].as_ref().is_none_or(|l| bound > *l) {
                    lower[*e] = Some(bound);
                }
            }
        }
    }
    for e in 0..ny {
        if let (Some(l), Some(u)) = (&lower[e], &upper[e]) {
            if l > u {
                let (i, j) = sys.universe()[e];
                return Err(LpError::InfeasibleAtX(format!("bounds of y{i}_{j} cross")));
            }
        }
    }

    let build = |active: &[usize]| -> LpProblem<Rational> {
        let mut lp = LpProblem::new(sys.name());
        for (e, &(i, j)) in sys.universe().iter().enumerate() {
            lp.add_var(VarRef::y(i, j).name(), lower[e].clone(), upper[e].clone());
        }
        for &k in active {
            let red = reduce(sys, k, x);
            lp.add_row(
                sys.constraints()[k].label().to_string(),
                red.terms,
                Sense::Le,
                red.rhs,
            );
        }
        let obj = objective
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (e, c.clone()))
            .collect();
        lp.set_objective(direction, obj);
        lp
    };

    let finish =
        |lp: LpProblem<Rational>, sol: LpSolution<Rational>, rows: Vec<usize>, rounds| match sol
            .status
        {
            LpStatus::Optimal => Ok(FixedXSolution {
                lp,
                solution: sol,
                rows,
                rounds,
            }),
            LpStatus::Infeasible => Err(LpError::InfeasibleAtX("slice LP is infeasible".into())),
            LpStatus::Unbounded => Err(LpError::Unbounded),
        };

    if multi.len() <= DIRECT_ROWS {
        let lp = build(&multi);
        let sol = solve(&lp)?;
        return finish(lp, sol, multi, 1);
    }

    let mut active: Vec<usize> = Vec::new();
    let mut is_active = vec![false; sys.len()];
    let mut rounds = 0;
    loop {
        // Floating rounds until the active set explains every row.
        for _ in 0..200 {
            let lp = build(&active).map_scalar(|v| v.to_f64());
            let sol = solve(&lp)?;
            match sol.status {
                LpStatus::Optimal => {}
                // Let the exact solve deliver the verdict.
                _ => break,
            }
            let added = activate(
                sys,
                &multi,
                &mut is_active,
                &mut active,
                &xf,
                &sol.primal,
                1e-9,
            );
            if added == 0 {
                break;
            }
        }
        let lp = build(&active);
        let sol = solve(&lp)?;
        rounds += 1;
        if !sol.is_optimal() {
            return finish(lp, sol, active, rounds);
        }
        let yf: Vec<f64> = sol.primal.iter().map(|v| v.to_f64()).collect();
        let mut violated = Vec::new();
        for &k in &multi {
            if is_active[k] {
                continue;
            }
            let (excess, scale) = float_excess(sys, k, &xf, &yf);
            if excess < -1e-9 * (1.0 + scale) {
                continue;
            }
            let exact = reduce(sys, k, x);
            let lhs = exact
                .terms
                .iter()
                .fold(Rational::zero(), |acc, (e, a)| acc + a * &sol.primal[*e]);
            if lhs > exact.rhs {
                violated.push(k);
            }
        }
        if violated.is_empty() {
            return finish(lp, sol, active, rounds);
        }
        for k in violated {
            is_active[k] = true;
            active.push(k);
        }
        active.sort_unstable();
    }
}

/// The row with `x` substituted: `Σ a_e y_e <= rhs - Σ c_i x_i`.
fn reduce<T: Scalar>(sys: &ConstraintSystem<T>, k: usize, x: &[Rational]) -> Reduced {
    let c = &sys.constraints()[k];
    let mut rhs = c.rhs().to_rational();
    let mut terms = Vec::new();
    for (v, a) in c.coeffs() {
        let a = a.to_rational();
        match *v {
            VarRef::X(i) => rhs -= a * &x[i as usize - 1],
            VarRef::Y(i, j) => {
                let e = sys
                    .y_index(i as usize, j as usize)
                    .expect("variable in universe");
                terms.push((e, a));
            }
        }
    }
    Reduced { terms, rhs }
}

/// Floating excess of a row and the magnitude scale used for its rounding
/// margin.
fn float_excess<T: Scalar>(
    sys: &ConstraintSystem<T>,
    k: usize,
    xf: &[f64],
    yf: &[f64],
) -> (f64, f64) {
    let c = &sys.constraints()[k];
    let rhs = c.rhs().to_f64();
    let mut lhs = 0.0;
    let mut scale = rhs.abs();
    for (v, a) in c.coeffs() {
        let a = a.to_f64();
        let val = match *v {
            VarRef::X(i) => xf[i as usize - 1],
            VarRef::Y(i, j) => {
                yf[sys
                    .y_index(i as usize, j as usize)
                    .expect("variable in universe")]
            }
        };
        lhs += a * val;
        scale += (a * val).abs();
    }
    (lhs - rhs, scale)
}

fn activate<T: Scalar>(
    sys: &ConstraintSystem<T>,
    multi: &[usize],
    is_active: &mut [bool],
    active: &mut Vec<usize>,
    xf: &[f64],
    yf: &[f64],
    tol: f64,
) -> usize {
    let mut cand: Vec<(f64, usize)> = multi
        .iter()
        .filter(|&&k| !is_active[k])
        .filter_map(|&k| {
            let (e, scale) = float_excess(sys, k, xf, yf);
            (e > tol * (1.0 + scale)).then_some((e, k))
        })
        .collect();
    cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    cand.truncate(BATCH);
    for &(_, k) in &cand {
        is_active[k] = true;
        active.push(k);
    }
    active.sort_unstable();
    cand.len()
}
