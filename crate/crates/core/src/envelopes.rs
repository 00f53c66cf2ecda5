//! Exact convex and concave envelopes of bilinear functions, relaxation
//! bounds at a fixed `x`, gap ratios and extended-formulation checks.
//!
//! `vex[f](x)` and `cav[f](x)` are computed by an LP over convex
//! combinations of the 0/1 vertices of the cube. Coordinates with `x_i` in
//! `{0, 1}` force `ξ_i = x_i` in every combination, so only the fractional
//! coordinates are enumerated.

use std::io::Write;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{EnvelopeError, GraphError, LpError};
use crate::graph::WeightedGraph;
use crate::inequalities::ConstraintSystem;
use crate::lp::{self, Direction, FixedXSolution, LpProblem, Sense};
use crate::scalar::{binomial, fraction, int, Rational, Scalar};

/// Default bound on `n` for vertex enumeration (`2^n` LP columns).
pub const DEFAULT_CAP: usize = 16;

/// Convex combination of 0/1 vertices: `Σ λ = 1`, `Σ λ ξ = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub terms: Vec<(Vec<bool>, Rational)>,
}

impl Witness {
    /// Checks that the combination is a valid representation of `x` and
    /// that `Σ λ f(ξ)` equals `value`.
    pub fn reconstructs(
        &self,
        g: &WeightedGraph<Rational>,
        x: &[Rational],
        value: &Rational,
    ) -> bool {
        let n = g.n();
        let mut total = Rational::zero();
        let mut point = vec![Rational::zero(); n];
        let mut obj = Rational::zero();
        for (xi, lambda) in &self.terms {
            if xi.len() != n || lambda.is_negative() {
                return false;
            }
            total += lambda;
            for (k, &bit) in xi.iter().enumerate() {
                if bit {
                    point[k] += lambda;
                }
            }
            obj += lambda * vertex_value(g, xi);
        }
        total.is_one() && point == x && obj == *value
    }

    /// Vertices as 0/1 strings, e.g. `"01101"`.
    pub fn vertex_strings(&self) -> Vec<(String, Rational)> {
        self.terms
            .iter()
            .map(|(xi, l)| {
                (
                    xi.iter().map(|&b| if b { '1' } else { '0' }).collect(),
                    l.clone(),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    pub value: Rational,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub vex: Rational,
    pub cav: Rational,
    pub vex_witness: Witness,
    pub cav_witness: Witness,
}

/// `f(ξ)` at a 0/1 vertex.
pub fn vertex_value(g: &WeightedGraph<Rational>, xi: &[bool]) -> Rational {
    g.edges()
        .iter()
        .filter(|e| xi[e.i - 1] && xi[e.j - 1])
        .fold(Rational::zero(), |acc, e| acc + &e.weight)
}

fn check_input(
    g: &WeightedGraph<Rational>,
    x: &[Rational],
    cap: usize,
) -> Result<(), EnvelopeError> {
    if g.n() > cap {
        return Err(EnvelopeError::TooLarge { n: g.n(), cap });
    }
    g.check_point(x)?;
    Ok(())
}

fn envelope_lp(
    g: &WeightedGraph<Rational>,
    x: &[Rational],
    cap: usize,
    direction: Direction,
) -> Result<Bound, EnvelopeError> {
    check_input(g, x, cap)?;
    let free: Vec<usize> = (0..g.n())
        .filter(|&k| !x[k].is_zero() && !x[k].is_one())
        .collect();
    let base: Vec<bool> = x.iter().map(|v| v.is_one()).collect();
    let vertex = |mask: usize| {
        let mut xi = base.clone();
        for (b, &k) in free.iter().enumerate() {
            xi[k] = mask >> b & 1 == 1;
        }
        xi
    };
    if free.is_empty() {
        let value = vertex_value(g, &base);
        return Ok(Bound {
            value,
            witness: Witness {
                terms: vec![(base, Rational::one())],
            },
        });
    }

    let mut p = LpProblem::new("envelope");
    let count = 1usize << free.len();
    let mut obj = Vec::with_capacity(count);
    for mask in 0..count {
        let v = p.add_var(format!("l{mask}"), Some(Rational::zero()), None);
        let fv = vertex_value(g, &vertex(mask));
        if !fv.is_zero() {
            obj.push((v, fv));
        }
    }
    for (b, &k) in free.iter().enumerate() {
        let coeffs = (0..count)
            .filter(|m| m >> b & 1 == 1)
            .map(|m| (m, Rational::one()))
            .collect();
        p.add_row(format!("x{}", k + 1), coeffs, Sense::Eq, x[k].clone());
    }
    p.add_row(
        "sum",
        (0..count).map(|m| (m, Rational::one())).collect(),
        Sense::Eq,
        Rational::one(),
    );
    p.set_objective(direction, obj);

    let sol = lp::solve(&p)?;
    let value = sol
        .value
        .clone()
        .ok_or_else(|| LpError::MalformedProblem("envelope LP has no optimum".into()))?;
    let terms = sol
        .primal
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_zero())
        .map(|(m, l)| (vertex(m), l.clone()))
        .collect();
    Ok(Bound {
        value,
        witness: Witness { terms },
    })
}

pub fn vex_exact(g: &WeightedGraph<Rational>, x: &[Rational]) -> Result<Bound, EnvelopeError> {
    vex_exact_capped(g, x, DEFAULT_CAP)
}

pub fn vex_exact_capped(
    g: &WeightedGraph<Rational>,
    x: &[Rational],
    cap: usize,
) -> Result<Bound, EnvelopeError> {
    envelope_lp(g, x, cap, Direction::Minimize)
}

pub fn cav_exact(g: &WeightedGraph<Rational>, x: &[Rational]) -> Result<Bound, EnvelopeError> {
    cav_exact_capped(g, x, DEFAULT_CAP)
}

/// With all weights positive the LP value is compared against the closed
/// form `Σ a_ij min{x_i, x_j}`.
pub fn cav_exact_capped(
    g: &WeightedGraph<Rational>,
    x: &[Rational],
    cap: usize,
) -> Result<Bound, EnvelopeError> {
    let bound = envelope_lp(g, x, cap, Direction::Maximize)?;
    if let Some(closed) = cav_positive_closed_form(g, x) {
        assert_eq!(
            closed, bound.value,
            "concave envelope disagrees with the closed form"
        );
    }
    Ok(bound)
}

pub fn envelope(
    g: &WeightedGraph<Rational>,
    x: &[Rational],
) -> Result<EnvelopeResult, EnvelopeError> {
    let vex = vex_exact(g, x)?;
    let cav = cav_exact(g, x)?;
    Ok(EnvelopeResult {
        vex: vex.value,
        cav: cav.value,
        vex_witness: vex.witness,
        cav_witness: cav.witness,
    })
}

/// `Σ a_ij min{x_i, x_j}` when every weight is positive.
pub fn cav_positive_closed_form(g: &WeightedGraph<Rational>, x: &[Rational]) -> Option<Rational> {
    if g.edges().iter().any(|e| !e.weight.is_positive()) {
        return None;
    }
    Some(g.edges().iter().fold(Rational::zero(), |acc, e| {
        let (a, b) = (&x[e.i - 1], &x[e.j - 1]);
        acc + &e.weight * if a < b { a } else { b }
    }))
}

/// Convex envelope of the unit-weight complete graph:
/// `s · Σx - C(s+1, 2)` with `s = ⌊Σx⌋`.
pub fn vex_clique_closed_form(x: &[Rational]) -> Rational {
    let total = x.iter().fold(Rational::zero(), |acc, v| acc + v);
    let s = total.floor().to_integer();
    let s = i64::try_from(s).expect("small sum");
    int(s) * total - binomial(s + 1, 2)
}

/// Objective coefficients of `f` aligned with the universe of `sys`.
pub fn aligned_objective<T: Scalar>(
    sys: &ConstraintSystem<T>,
    g: &WeightedGraph<Rational>,
) -> Result<Vec<Rational>, EnvelopeError> {
    let mut obj = vec![Rational::zero(); sys.universe().len()];
    for e in g.edges() {
        let k = sys.y_index(e.i, e.j).ok_or(GraphError::IndexOutOfRange {
            i: e.i,
            j: e.j,
            n: sys.n(),
        })?;
        obj[k] = e.weight.clone();
    }
    Ok(obj)
}

fn relax<T: Scalar>(
    sys: &ConstraintSystem<T>,
    g: &WeightedGraph<Rational>,
    x: &[Rational],
    direction: Direction,
) -> Result<FixedXSolution, EnvelopeError> {
    g.check_point(x)?;
    let obj = aligned_objective(sys, g)?;
    Ok(lp::fix_x_and_solve(sys, x, &obj, direction)?)
}

/// `LB_P[f](x) = min { Σ a_ij y_ij : (x, y) ∈ P }`.
pub fn lb_relax<T: Scalar>(
    sys: &ConstraintSystem<T>,
    g: &WeightedGraph<Rational>,
    x: &[Rational],
) -> Result<Rational, EnvelopeError> {
    Ok(relax(sys, g, x, Direction::Minimize)?.value().clone())
}

/// `UB_P[f](x) = max { Σ a_ij y_ij : (x, y) ∈ P }`.
pub fn ub_relax<T: Scalar>(
    sys: &ConstraintSystem<T>,
    g: &WeightedGraph<Rational>,
    x: &[Rational],
) -> Result<Rational, EnvelopeError> {
    Ok(relax(sys, g, x, Direction::Maximize)?.value().clone())
}

/// Full slice-LP solution (with certificate) behind [`lb_relax`].
pub fn lb_relax_solution<T: Scalar>(
    sys: &ConstraintSystem<T>,
    g: &WeightedGraph<Rational>,
    x: &[Rational],
) -> Result<FixedXSolution, EnvelopeError> {
    relax(sys, g, x, Direction::Minimize)
}

pub fn ub_relax_solution<T: Scalar>(
    sys: &ConstraintSystem<T>,
    g: &WeightedGraph<Rational>,
    x: &[Rational],
) -> Result<FixedXSolution, EnvelopeError> {
    relax(sys, g, x, Direction::Maximize)
}

/// `(cav - lb) / (cav - vex)` from precomputed values.
pub fn ratio_of(vex: &Rational, cav: &Rational, lb: &Rational) -> Result<Rational, EnvelopeError> {
    let gap_x = cav - vex;
    if gap_x.is_zero() {
        return Err(EnvelopeError::DegenerateGap);
    }
    Ok((cav - lb) / gap_x)
}

/// `Δ_P[f](x) = (cav - LB_P) / (cav - vex)`.
pub fn gap_ratio<T: Scalar>(
    sys: &ConstraintSystem<T>,
    g: &WeightedGraph<Rational>,
    x: &[Rational],
) -> Result<Rational, EnvelopeError> {
    let vex = vex_exact(g, x)?.value;
    let cav = cav_exact(g, x)?.value;
    if cav == vex {
        return Err(EnvelopeError::DegenerateGap);
    }
    let lb = lb_relax(sys, g, x)?;
    ratio_of(&vex, &cav, &lb)
}

/// Random points of the box whose coordinates are `p/q` with `q` drawn
/// uniformly from `1..=max_den` and `p` from `0..=q`.
pub fn sample_points(n: usize, count: usize, max_den: u32, seed: u64) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let q = rng.random_range(1..=max_den.max(1));
                    let p = rng.random_range(0..=q);
                    Rational::new(p.into(), q.into())
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub x: Vec<Rational>,
    pub vex: Rational,
    pub cav: Rational,
    pub lb: Rational,
    pub ub: Rational,
    /// `None` when `cav = vex`.
    pub ratio: Option<Rational>,
}

impl SampleRecord {
    pub fn exact(&self) -> bool {
        self.lb == self.vex && self.ub == self.cav
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionReport {
    pub system: String,
    pub records: Vec<SampleRecord>,
    /// Index of the first sample where `LB = vex` or `UB = cav` fails.
    pub first_failure: Option<usize>,
    /// Samples at which the system did not admit `x` at all.
    pub infeasible: Vec<usize>,
}

impl ExtensionReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none() && self.infeasible.is_empty()
    }

    pub fn counterexample(&self) -> Option<&SampleRecord> {
        self.first_failure.map(|k| &self.records[k])
    }

    /// CSV with one row per sample: `sample,x,vex,cav,lb,ub,ratio`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sample", "x", "vex", "cav", "lb", "ub", "ratio"])?;
        for (k, r) in self.records.iter().enumerate() {
            let x = r.x.iter().map(fraction).collect::<Vec<_>>().join(" ");
            w.write_record([
                k.to_string(),
                x,
                fraction(&r.vex),
                fraction(&r.cav),
                fraction(&r.lb),
                fraction(&r.ub),
                r.ratio.as_ref().map(fraction).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates one sample: envelopes, both relaxation bounds and the ratio.
pub fn evaluate_sample<T: Scalar>(
    g: &WeightedGraph<Rational>,
    sys: &ConstraintSystem<T>,
    x: &[Rational],
) -> Result<SampleRecord, EnvelopeError> {
    let vex = vex_exact(g, x)?.value;
    let cav = cav_exact(g, x)?.value;
    let lb = lb_relax(sys, g, x)?;
    let ub = ub_relax(sys, g, x)?;
    let ratio = ratio_of(&vex, &cav, &lb).ok();
    Ok(SampleRecord {
        x: x.to_vec(),
        vex,
        cav,
        lb,
        ub,
        ratio,
    })
}

/// Checks `LB_P = vex` and `UB_P = cav` exactly at every sample. A point
/// rejected by the system (possible only for an invalid system) counts as
/// a failure.
pub fn verify_extension<T: Scalar>(
    g: &WeightedGraph<Rational>,
    sys: &ConstraintSystem<T>,
    samples: &[Vec<Rational>],
) -> Result<ExtensionReport, EnvelopeError> {
    if g.n() > DEFAULT_CAP {
        return Err(EnvelopeError::TooLarge {
            n: g.n(),
            cap: DEFAULT_CAP,
        });
    }
    let results: Vec<Result<SampleRecord, EnvelopeError>> = samples
        .par_iter()
        .map(|x| evaluate_sample(g, sys, x))
        .collect();
    let mut records = Vec::with_capacity(samples.len());
    let mut infeasible = Vec::new();
    let mut first_failure = None;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => {
                if first_failure.is_none() && !rec.exact() {
                    first_failure = Some(records.len());
                }
                records.push(rec);
            }
            Err(EnvelopeError::Lp(LpError::InfeasibleAtX(_))) => infeasible.push(k),
            Err(e) => return Err(e),
        }
    }
    Ok(ExtensionReport {
        system: sys.name().to_string(),
        records,
        first_failure,
        infeasible,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombineReport {
    pub shared: Vec<usize>,
    pub first: ExtensionReport,
    pub second: ExtensionReport,
    pub combined: ExtensionReport,
}

impl CombineReport {
    pub fn passed(&self) -> bool {
        self.first.passed() && self.second.passed() && self.combined.passed()
    }
}

/// Union of two systems over the same vertex numbering.
pub fn union_system<T: Scalar>(
    a: &ConstraintSystem<T>,
    b: &ConstraintSystem<T>,
) -> ConstraintSystem<T> {
    let n = a.n().max(b.n());
    let universe = a.universe().iter().chain(b.universe()).copied();
    let mut sys = ConstraintSystem::new(format!("{}+{}", a.name(), b.name()), n, universe);
    sys.extend(a.constraints().iter().chain(b.constraints()).cloned())
        .expect("both universes are included");
    sys
}

/// Checks each part and then the sum `f + g` over the union of the two
/// systems. The parts may share at most one vertex.
pub fn combine_check<T: Scalar>(
    f: &WeightedGraph<Rational>,
    f_sys: &ConstraintSystem<T>,
    g: &WeightedGraph<Rational>,
    g_sys: &ConstraintSystem<T>,
    samples: &[Vec<Rational>],
) -> Result<CombineReport, EnvelopeError> {
    let fs = f.support();
    let shared: Vec<usize> = g.support().into_iter().filter(|v| fs.contains(v)).collect();
    if shared.len() > 1 {
        return Err(EnvelopeError::SharedTooMuch(shared.len()));
    }
    let sum = f.sum(g)?;
    let sys = union_system(f_sys, g_sys);
    Ok(CombineReport {
        shared,
        first: verify_extension(f, f_sys, samples)?,
        second: verify_extension(g, g_sys, samples)?,
        combined: verify_extension(&sum, &sys, samples)?,
    })
}
