//! CPLEX-style LP files.
//!
//! Coefficients with a terminating decimal expansion are written exactly.
//! Anything else (say `1/3`) is written as a rounded decimal preceded by a
//! `\ exact ...` comment listing the statement's values as fractions; the
//! parser prefers those, so a write/parse round trip is exact.
//!
//! Squared terms are supported in the objective (`[ 2q x ^2 ] / 2`) and in
//! constraints (`[ q x ^2 ]`). Cross products are not.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::error::ParseError;
use crate::inequalities::{ConstraintSystem, VarRef};
use crate::lp::{Direction, LpProblem, Row, Sense, Variable};
use crate::scalar::{approx_decimal, exact_decimal, fraction, parse_rational, Rational, Scalar};

const WRAP: usize = 240;
const DIGITS: usize = 20;

/// A value ready for printing plus whether it needed rounding.
fn number(r: &Rational) -> (String, bool) {
    match exact_decimal(r) {
        Some(s) => (s, false),
        None => (approx_decimal(r, DIGITS), true),
    }
}

/// Accumulates one statement, wrapping long lines and collecting the
/// values for the exact comment.
struct Statement {
    lines: Vec<String>,
    values: Vec<Rational>,
    rounded: bool,
}

impl Statement {
    fn new(head: String) -> Self {
        Statement {
            lines: vec![head],
            values: Vec::new(),
            rounded: false,
        }
    }

    fn push_raw(&mut self, text: &str) {
        let last = self.lines.last_mut().expect("nonempty");
        if last.len() + text.len() + 1 > WRAP {
            self.lines.push(format!("   {text}"));
        } else {
            last.push(' ');
            last.push_str(text);
        }
    }

    fn push_value(&mut self, r: &Rational) -> String {
        let (s, rounded) = number(r);
        self.values.push(r.clone());
        self.rounded |= rounded;
        s
    }

    /// ` + 3 x1` / ` - 3 x1`; the first term drops the leading `+`.
    fn push_term(&mut self, c: &Rational, name: &str, first: bool, suffix: &str) {
        let mag = c.abs();
        let sign = if c.is_negative() {
            "- "
        } else if first {
            ""
        } else {
            "+ "
        };
        let v = self.push_value(&mag);
        self.push_raw(&format!("{sign}{v} {name}{suffix}"));
    }

    fn finish(self, out: &mut String) {
        if self.rounded {
            let vals: Vec<String> = self.values.iter().map(fraction).collect();
            let _ = writeln!(out, "\\ exact {}", vals.join(" "));
        }
        for l in self.lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    name.chars()
        .all(|c| c.is_ascii_alphanumeric() || "_.!#$%&(){},;?@'~|".contains(c))
}

/// Row names that are invalid or repeated are replaced by `c<k>`.
fn row_names<S>(rows: &[Row<S>]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    rows.iter()
        .enumerate()
        .map(|(k, r)| {
            let sanitized: String = r
                .name
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            let name = if valid_name(&sanitized) && !sanitized.is_empty() {
                sanitized
            } else {
                format!("c{}", k + 1)
            };
            if seen.insert(name.clone()) {
                name
            } else {
                let alt = format!("c{}", k + 1);
                seen.insert(alt.clone());
                alt
            }
        })
        .collect()
}

pub fn write_lp(p: &LpProblem<Rational>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", p.name);
    out.push_str(match p.direction {
        Direction::Minimize => "Minimize\n",
        Direction::Maximize => "Maximize\n",
    });
    let mut obj = Statement::new(" obj:".into());
    for (k, (j, c)) in p.objective.iter().enumerate() {
        obj.push_term(c, &p.vars[*j].name, k == 0, "");
    }
    if !p.objective_quad.is_empty() {
        let lead = if p.objective.is_empty() { "[" } else { "+ [" };
        obj.push_raw(lead);
        for (k, (j, q)) in p.objective_quad.iter().enumerate() {
            obj.push_term(
                &(q * Rational::from_integer(2.into())),
                &p.vars[*j].name,
                k == 0,
                " ^2",
            );
        }
        obj.push_raw("] / 2");
    }
    obj.finish(&mut out);

    out.push_str("Subject To\n");
    for (row, name) in p.rows.iter().zip(row_names(&p.rows)) {
        let mut st = Statement::new(format!(" {name}:"));
        for (k, (j, c)) in row.coeffs.iter().enumerate() {
            st.push_term(c, &p.vars[*j].name, k == 0, "");
        }
        if !row.quad.is_empty() {
            st.push_raw(if row.coeffs.is_empty() { "[" } else { "+ [" });
            for (k, (j, q)) in row.quad.iter().enumerate() {
                st.push_term(q, &p.vars[*j].name, k == 0, " ^2");
            }
            st.push_raw("]");
        }
        if row.coeffs.is_empty() && row.quad.is_empty() {
            // keeps the row parseable; the variable is arbitrary
            if let Some(v) = p.vars.first() {
                st.push_raw(&format!("0 {}", v.name));
            }
        }
        let rhs = st.push_value(&row.rhs);
        st.push_raw(&format!("{} {rhs}", row.sense));
        st.finish(&mut out);
    }

    out.push_str("Bounds\n");
    for v in &p.vars {
        let mut st = Statement::new(String::new());
        match (&v.lower, &v.upper) {
            (None, None) => st.push_raw(&format!("{} free", v.name)),
            (Some(l), Some(u)) if l == u => {
                let s = st.push_value(l);
                st.push_raw(&format!("{} = {s}", v.name));
            }
            (l, u) => {
                let lo = match l {
                    Some(l) => st.push_value(l),
                    None => "-inf".into(),
                };
                let hi = match u {
                    Some(u) => st.push_value(u),
                    None => "+inf".into(),
                };
                st.push_raw(&format!("{lo} <= {} <= {hi}", v.name));
            }
        }
        st.finish(&mut out);
    }
    out.push_str("End\n");
    out
}

/// `sys` as an LP over `x` (bounded by the box) and free `y`, with an
/// optional objective aligned with the universe of `sys`.
pub fn system_to_lp<T: Scalar>(
    sys: &ConstraintSystem<T>,
    objective: Option<(Direction, &[Rational])>,
) -> LpProblem<Rational> {
    let n = sys.n();
    let mut p = LpProblem::new(sys.name());
    for i in 1..=n {
        p.add_var(
            VarRef::x(i).name(),
            Some(Rational::zero()),
            Some(Rational::one()),
        );
    }
    for &(i, j) in sys.universe() {
        p.add_var(VarRef::y(i, j).name(), None, None);
    }
    let column = |v: &VarRef| match *v {
        VarRef::X(i) => i as usize - 1,
        VarRef::Y(i, j) => {
            n + sys
                .y_index(i as usize, j as usize)
                .expect("inside universe")
        }
    };
    for c in sys.constraints() {
        let coeffs = c
            .coeffs()
            .iter()
            .map(|(v, a)| (column(v), a.to_rational()))
            .collect();
        p.add_row(
            c.label().to_string(),
            coeffs,
            Sense::Le,
            c.rhs().to_rational(),
        );
    }
    if let Some((direction, obj)) = objective {
        let coeffs = obj
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(k, a)| (n + k, a.clone()))
            .collect();
        p.set_objective(direction, coeffs);
    }
    p
}

pub fn write_system<T: Scalar>(sys: &ConstraintSystem<T>) -> String {
    write_lp(&system_to_lp(sys, None))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rational),
    Inf,
    Op(&'static str),
    /// Values of a `\ exact` comment.
    Exact(Vec<Rational>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Ignored,
}

fn section_of(line: &str) -> Option<(Section, Option<Direction>)> {
    let l = line.trim().to_ascii_lowercase();
    let dir = match l.as_str() {
        "minimize" | "minimum" | "min" => Some(Direction::Minimize),
        "maximize" | "maximum" | "max" => Some(Direction::Maximize),
        _ => None,
    };
    if dir.is_some() {
        return Some((Section::Objective, dir));
    }
    match l.as_str() {
        "subject to" | "such that" | "st" | "s.t." | "st." => Some((Section::Constraints, None)),
        "bounds" | "bound" => Some((Section::Bounds, None)),
        "general" | "generals" | "gen" | "binary" | "binaries" | "bin" => {
            Some((Section::Ignored, None))
        }
        "end" => Some((Section::Ignored, None)),
        _ => None,
    }
}

fn tokenize(line: &str, ln: usize, out: &mut Vec<(usize, Tok)>) -> Result<(), ParseError> {
    let b = line.as_bytes();
    let mut k = 0;
    while k < b.len() {
        let c = b[k] as char;
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let two = if k + 1 < b.len() { &line[k..k + 2] } else { "" };
        let op: Option<(&'static str, usize)> = match two {
            "<=" | "=<" => Some(("<=", 2)),
            ">=" | "=>" => Some((">=", 2)),
            _ => match c {
                '<' => Some(("<=", 1)),
                '>' => Some((">=", 1)),
                '=' => Some(("=", 1)),
                '+' => Some(("+", 1)),
                '-' => Some(("-", 1)),
                '[' => Some(("[", 1)),
                ']' => Some(("]", 1)),
                '^' => Some(("^", 1)),
                '*' => Some(("*", 1)),
                '/' => Some(("/", 1)),
                ':' => Some((":", 1)),
                _ => None,
            },
        };
        if let Some((o, len)) = op {
            out.push((ln, Tok::Op(o)));
            k += len;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < b.len() {
                let d = b[k] as char;
                let exp_sign =
                    (d == '+' || d == '-') && k > start && matches!(b[k - 1] as char, 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    k += 1;
                } else {
                    break;
                }
            }
            let v = parse_rational(&line[start..k])
                .map_err(|_| ParseError::at(ln, format!("bad number {:?}", &line[start..k])))?;
            out.push((ln, Tok::Num(v)));
            continue;
        }
        let start = k;
        while k < b.len() {
            let d = b[k] as char;
            if d.is_ascii_alphanumeric() || "_.!#$%&(){},;?@'~|\"".contains(d) {
                k += 1;
            } else {
                break;
            }
        }
        if k == start {
            return Err(ParseError::at(ln, format!("unexpected character {c:?}")));
        }
        let word = &line[start..k];
        match word.to_ascii_lowercase().as_str() {
            "inf" | "infinity" => out.push((ln, Tok::Inf)),
            _ => out.push((ln, Tok::Ident(word.to_string()))),
        }
    }
    Ok(())
}

struct Cursor<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, off: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + off).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos)?;
        self.pos += 1;
        Some(&t.1)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or(self.last_line, |(l, _)| *l)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.line(), msg)
    }
}

/// Linear and squared terms of one expression, in source order.
#[derive(Default)]
struct Expr {
    linear: Vec<(String, Rational)>,
    quad: Vec<(String, Rational)>,
}

/// Optional sign(s) followed by an optional number.
struct Lead {
    value: Option<Rational>,
    signed: bool,
}

impl Lead {
    fn coefficient(&self, negative_one: bool) -> Rational {
        match (&self.value, negative_one) {
            (Some(v), _) => v.clone(),
            (None, true) => -Rational::one(),
            (None, false) => Rational::one(),
        }
    }
}

fn lead(cur: &mut Cursor) -> (Lead, bool) {
    let mut negative = false;
    let mut signed = false;
    while let Some(Tok::Op(o @ ("+" | "-"))) = cur.peek() {
        negative ^= *o == "-";
        signed = true;
        cur.next();
    }
    let value = match cur.peek() {
        Some(Tok::Num(v)) => {
            let v = v.clone();
            cur.next();
            Some(if negative { -v } else { v })
        }
        _ => None,
    };
    (Lead { value, signed }, negative)
}

fn parse_expr(cur: &mut Cursor, in_objective: bool) -> Result<Expr, ParseError> {
    let two = Rational::from_integer(2.into());
    let mut e = Expr::default();
    let mut first = true;
    loop {
        match cur.peek() {
            None | Some(Tok::Op("<=" | ">=" | "=")) => break,
            _ => {}
        }
        let (head, negative) = lead(cur);
        if !first && !head.signed {
            return Err(cur.err("missing '+' or '-' between terms"));
        }
        match cur.next() {
            Some(Tok::Op("[")) => {
                let start = e.quad.len();
                let mut inner_first = true;
                loop {
                    if let Some(Tok::Op("]")) = cur.peek() {
                        cur.next();
                        break;
                    }
                    let (q, neg) = lead(cur);
                    if !inner_first && !q.signed {
                        return Err(cur.err("missing '+' or '-' inside brackets"));
                    }
                    inner_first = false;
                    let name = match cur.next() {
                        Some(Tok::Ident(n)) => n.clone(),
                        other => {
                            return Err(cur.err(format!("expected a variable, found {other:?}")))
                        }
                    };
                    match cur.next() {
                        Some(Tok::Op("^")) => {}
                        Some(Tok::Op("*")) => {
                            return Err(cur.err("cross products are not supported"))
                        }
                        other => return Err(cur.err(format!("expected '^', found {other:?}"))),
                    }
                    match cur.next() {
                        Some(Tok::Num(t)) if *t == two => {}
                        other => {
                            return Err(
                                cur.err(format!("only squares are supported, found {other:?}"))
                            )
                        }
                    }
                    e.quad.push((name, q.coefficient(neg)));
                }
                let mut factor = head.coefficient(negative);
                if let Some(Tok::Op("/")) = cur.peek() {
                    cur.next();
                    match cur.next() {
                        Some(Tok::Num(t)) if *t == two => factor = factor / two.clone(),
                        other => return Err(cur.err(format!("expected '/ 2', found {other:?}"))),
                    }
                } else if in_objective {
                    return Err(cur.err("objective quadratic block must be divided by 2"));
                }
                for (_, q) in e.quad[start..].iter_mut() {
                    *q = q.clone() * factor.clone();
                }
            }
            Some(Tok::Ident(name)) => e.linear.push((name.clone(), head.coefficient(negative))),
            other => return Err(cur.err(format!("expected a term, found {other:?}"))),
        }
        first = false;
    }
    Ok(e)
}

fn sense_of(op: &str) -> Sense {
    match op {
        "<=" => Sense::Le,
        ">=" => Sense::Ge,
        _ => Sense::Eq,
    }
}

/// Replaces the numbers of a statement by the exact comment, in order:
/// linear coefficients, squared coefficients (both as magnitudes; the sign
/// comes from the statement, and objective squares are listed doubled as
/// written), then `extra` (signed).
fn apply_exact(
    exact: Option<Vec<Rational>>,
    expr: &mut Expr,
    extra: &mut [&mut Rational],
    objective: bool,
    line: usize,
) -> Result<(), ParseError> {
    let Some(vals) = exact else { return Ok(()) };
    let want = expr.linear.len() + expr.quad.len() + extra.len();
    if vals.len() != want {
        return Err(ParseError::at(
            line,
            format!("exact comment has {} values, expected {want}", vals.len()),
        ));
    }
    let mut it = vals.into_iter();
    for (_, c) in expr.linear.iter_mut() {
        let v = it.next().expect("counted");
        *c = if c.is_negative() { -v.abs() } else { v.abs() };
    }
    for (_, q) in expr.quad.iter_mut() {
        let v = it.next().expect("counted");
        let v = if objective {
            v / Rational::from_integer(2.into())
        } else {
            v
        };
        *q = if q.is_negative() { -v.abs() } else { v.abs() };
    }
    for slot in extra.iter_mut() {
        **slot = it.next().expect("counted");
    }
    Ok(())
}

struct Builder {
    p: LpProblem<Rational>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        match self.p.var_index(name) {
            Some(j) => j,
            None => self.p.add_var(name, Some(Rational::zero()), None),
        }
    }

    fn terms(&mut self, list: Vec<(String, Rational)>) -> Vec<(usize, Rational)> {
        list.into_iter().map(|(n, c)| (self.var(&n), c)).collect()
    }
}

pub fn parse_lp(text: &str) -> Result<LpProblem<Rational>, ParseError> {
    let mut sections: Vec<(Section, Vec<(usize, Tok)>)> = Vec::new();
    let mut direction = None;
    let mut name = String::from("lp");
    let mut current = Section::None;
    let mut bound_lines: Vec<(usize, Vec<(usize, Tok)>)> = Vec::new();
    let mut pending_exact: Option<Vec<Rational>> = None;
    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let (body, comment) = match raw.find('\\') {
            Some(pos) => (&raw[..pos], Some(raw[pos + 1..].trim())),
            None => (raw, None),
        };
        if let Some(c) = comment {
            if let Some(rest) = c.strip_prefix("exact") {
                let vals = rest
                    .split_whitespace()
                    .map(parse_rational)
                    .collect::<Result<Vec<_>, _>>()?;
                pending_exact = Some(vals);
            } else if let Some(rest) = c.strip_prefix("Problem:") {
                name = rest.trim().to_string();
            }
        }
        if body.trim().is_empty() {
            continue;
        }
        if let Some((sec, dir)) = section_of(body) {
            if dir.is_some() {
                if direction.is_some() {
                    return Err(ParseError::at(ln, "second objective section"));
                }
                direction = dir;
            }
            current = sec;
            sections.push((sec, Vec::new()));
            continue;
        }
        let mut toks = Vec::new();
        if let Some(vals) = pending_exact.take() {
            toks.push((ln, Tok::Exact(vals)));
        }
        tokenize(body, ln, &mut toks)?;
        match current {
            Section::None => {
                return Err(ParseError::at(ln, "content before the objective section"))
            }
            Section::Bounds => bound_lines.push((ln, toks)),
            Section::Ignored => {}
            _ => sections.last_mut().expect("section opened").1.extend(toks),
        }
    }
    let direction = direction.ok_or_else(|| ParseError::Eof("no objective section".into()))?;
    let mut b = Builder {
        p: LpProblem::new(name),
    };

    // Bounds first so that variables keep the order in which they are listed.
    let mut bounds: Vec<(usize, Option<Rational>, Option<Rational>)> = Vec::new();
    for (ln, toks) in &bound_lines {
        let (var, lo, hi) = parse_bound(toks, *ln)?;
        let j = b.var(&var);
        bounds.push((j, lo, hi));
    }

    for (sec, toks) in &sections {
        let mut cur = Cursor {
            toks,
            pos: 0,
            last_line: toks.last().map_or(0, |t| t.0),
        };
        match sec {
            Section::Objective => {
                let exact = take_exact(&mut cur);
                if let (Some(Tok::Ident(_)), Some(Tok::Op(":"))) = (cur.peek(), cur.peek_at(1)) {
                    cur.pos += 2;
                }
                let line = cur.line();
                let mut expr = parse_expr(&mut cur, true)?;
                apply_exact(exact, &mut expr, &mut [], true, line)?;
                if cur.peek().is_some() {
                    return Err(cur.err("trailing tokens in the objective"));
                }
                let lin = b.terms(expr.linear);
                let quad = b.terms(expr.quad);
                b.p.objective = lin;
                b.p.objective_quad = quad;
                b.p.direction = direction;
            }
            Section::Constraints => {
                while cur.peek().is_some() {
                    let exact = take_exact(&mut cur);
                    let line = cur.line();
                    let row_name = match (cur.peek(), cur.peek_at(1)) {
                        (Some(Tok::Ident(n)), Some(Tok::Op(":"))) => {
                            let n = n.clone();
                            cur.pos += 2;
                            n
                        }
                        _ => format!("c{}", b.p.rows.len() + 1),
                    };
                    let mut expr = parse_expr(&mut cur, false)?;
                    let sense = match cur.next() {
                        Some(Tok::Op(o @ ("<=" | ">=" | "="))) => sense_of(o),
                        other => {
                            return Err(cur.err(format!("expected a comparison, found {other:?}")))
                        }
                    };
                    let mut rhs = match lead(&mut cur).0.value {
                        Some(v) => v,
                        None => return Err(cur.err("expected a number on the right-hand side")),
                    };
                    apply_exact(exact, &mut expr, &mut [&mut rhs], false, line)?;
                    let coeffs = b.terms(expr.linear);
                    let quad = b.terms(expr.quad);
                    b.p.rows.push(Row {
                        name: row_name,
                        coeffs,
                        sense,
                        rhs,
                        quad,
                    });
                }
            }
            _ => {}
        }
    }
    for (j, lo, hi) in bounds {
        let v: &mut Variable<Rational> = &mut b.p.vars[j];
        v.lower = lo;
        v.upper = hi;
    }
    Ok(b.p)
}

fn take_exact(cur: &mut Cursor) -> Option<Vec<Rational>> {
    if let Some(Tok::Exact(v)) = cur.peek() {
        cur.next();
        Some(v.clone())
    } else {
        None
    }
}

enum BoundVal {
    Finite(Rational),
    Infinite,
}

fn bound_value(cur: &mut Cursor) -> Result<Option<BoundVal>, ParseError> {
    let mut negative = false;
    let mut signed = false;
    while let Some(Tok::Op(o @ ("+" | "-"))) = cur.peek() {
        negative ^= *o == "-";
        signed = true;
        cur.next();
    }
    match cur.peek() {
        Some(Tok::Num(v)) => {
            let v = v.clone();
            cur.next();
            Ok(Some(BoundVal::Finite(if negative { -v } else { v })))
        }
        Some(Tok::Inf) => {
            cur.next();
            Ok(Some(BoundVal::Infinite))
        }
        _ if signed => Err(cur.err("sign without a value")),
        _ => Ok(None),
    }
}

type BoundLine = (String, Option<Rational>, Option<Rational>);

fn parse_bound(toks: &[(usize, Tok)], ln: usize) -> Result<BoundLine, ParseError> {
    let mut cur = Cursor {
        toks,
        pos: 0,
        last_line: ln,
    };
    let exact = take_exact(&mut cur);
    let mut finite: Vec<Rational> = Vec::new();
    let mut slots: Vec<(bool, usize)> = Vec::new(); // (is_lower, index into finite)
    let mut lower: Option<Rational> = Some(Rational::zero());
    let mut upper: Option<Rational> = None;
    let set = |is_lower: bool,
               v: BoundVal,
               lower: &mut Option<Rational>,
               upper: &mut Option<Rational>,
               finite: &mut Vec<Rational>,
               slots: &mut Vec<(bool, usize)>| {
        let val = match v {
            BoundVal::Finite(r) => {
                slots.push((is_lower, finite.len()));
                finite.push(r.clone());
                Some(r)
            }
            BoundVal::Infinite => None,
        };
        if is_lower {
            *lower = val;
        } else {
            *upper = val;
        }
    };
    let leading = bound_value(&mut cur)?;
    let var = if let Some(v) = leading {
        let op = match cur.next() {
            Some(Tok::Op(o @ ("<=" | ">=" | "="))) => *o,
            other => {
                return Err(ParseError::at(
                    ln,
                    format!("expected a comparison, found {other:?}"),
                ))
            }
        };
        let name = match cur.next() {
            Some(Tok::Ident(n)) => n.clone(),
            other => {
                return Err(ParseError::at(
                    ln,
                    format!("expected a variable, found {other:?}"),
                ))
            }
        };
        match op {
            "<=" => set(true, v, &mut lower, &mut upper, &mut finite, &mut slots),
            ">=" => set(false, v, &mut lower, &mut upper, &mut finite, &mut slots),
            _ => return Err(ParseError::at(ln, "use 'x = v' for fixed variables")),
        }
        name
    } else {
        match cur.next() {
            Some(Tok::Ident(n)) => n.clone(),
            other => {
                return Err(ParseError::at(
                    ln,
                    format!("expected a variable, found {other:?}"),
                ))
            }
        }
    };
    match cur.next() {
        None => {}
        Some(Tok::Ident(w)) if w.eq_ignore_ascii_case("free") => {
            lower = None;
            upper = None;
        }
        Some(Tok::Op(op @ ("<=" | ">=" | "="))) => {
            let v =
                bound_value(&mut cur)?.ok_or_else(|| ParseError::at(ln, "missing bound value"))?;
            match *op {
                "<=" => set(false, v, &mut lower, &mut upper, &mut finite, &mut slots),
                ">=" => set(true, v, &mut lower, &mut upper, &mut finite, &mut slots),
                _ => {
                    let BoundVal::Finite(r) = v else {
                        return Err(ParseError::at(ln, "cannot fix a variable at infinity"));
                    };
                    slots.push((true, finite.len()));
                    slots.push((false, finite.len()));
                    finite.push(r.clone());
                    lower = Some(r.clone());
                    upper = Some(r);
                }
            }
        }
        other => return Err(ParseError::at(ln, format!("unexpected {other:?} in bound"))),
    }
    if cur.peek().is_some() {
        return Err(ParseError::at(ln, "trailing tokens in bound"));
    }
    if let Some(vals) = exact {
        if vals.len() != finite.len() {
            return Err(ParseError::at(ln, "exact comment does not match the bound"));
        }
        for (is_lower, k) in slots {
            let v = Some(vals[k].clone());
            if is_lower {
                lower = v;
            } else {
                upper = v;
            }
        }
    }
    Ok((var, lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::inequalities::{mccormick_system, triangle};
    use crate::scalar::{int, rat};

    fn sample() -> LpProblem<Rational> {
        let mut p = LpProblem::new("sample");
        let x = p.add_var("x", Some(int(0)), Some(rat(5, 2)));
        let y = p.add_var("y", None, Some(rat(1, 3)));
        let z = p.add_var("z", None, None);
        let w = p.add_var("w", Some(rat(-1, 7)), Some(rat(-1, 7)));
        p.add_row(
            "first",
            vec![(x, int(2)), (y, rat(-1, 3)), (z, rat(1, 8))],
            Sense::Le,
            rat(7, 9),
        );
        p.add_row(
            "second row",
            vec![(x, int(1)), (w, int(-1))],
            Sense::Ge,
            int(-4),
        );
        p.add_row("", vec![(y, int(1)), (z, int(1))], Sense::Eq, int(0));
        p.set_objective(Direction::Maximize, vec![(x, int(3)), (z, rat(-2, 11))]);
        p.objective_quad = vec![(y, rat(1, 2))];
        p.rows[0].quad = vec![(w, int(3))];
        p
    }

    fn same(a: &LpProblem<Rational>, b: &LpProblem<Rational>) {
        assert_eq!(a.vars, b.vars);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.objective_quad, b.objective_quad);
        assert_eq!(a.direction, b.direction);
        assert_eq!(a.rows.len(), b.rows.len());
        for (r, s) in a.rows.iter().zip(&b.rows) {
            assert_eq!(
                (&r.coeffs, &r.quad, r.sense, &r.rhs),
                (&s.coeffs, &s.quad, s.sense, &s.rhs)
            );
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let p = sample();
        let text = write_lp(&p);
        assert!(text.contains("\\ exact"));
        assert!(text.contains("[ 1 y ^2 ] / 2"), "{text}");
        let q = parse_lp(&text).unwrap();
        same(&p, &q);
        assert_eq!(q.rows[1].name, "second_row");
        assert_eq!(q.rows[2].name, "c3");
        assert_eq!(write_lp(&q), text);
    }

    #[test]
    fn reads_hand_written_files() {
        let text = "\\ a comment\nMaximize\n obj: 3x + 2 y\nSubject To\n c1: x + y <= 4\n c2: x + 3 y\n   <= 6\n -x >= -3\nBounds\n y <= 10\nEnd\n";
        let p = parse_lp(text).unwrap();
        assert_eq!(p.vars.len(), 2);
        // x has the default bounds, y keeps the default lower bound
        assert_eq!(p.vars[p.var_index("x").unwrap()].upper, None);
        assert_eq!(p.vars[p.var_index("y").unwrap()].lower, Some(int(0)));
        assert_eq!(p.rows.len(), 3);
        assert_eq!(p.rows[2].coeffs, vec![(p.var_index("x").unwrap(), int(-1))]);
        let sol = crate::lp::solve(&p).unwrap();
        assert_eq!(sol.value, Some(int(11)));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_lp("Subject To\n x <= 1\nEnd").is_err());
        assert!(parse_lp("Minimize\n obj: x\nSubject To\n c: x + <= \nEnd").is_err());
        assert!(parse_lp("Minimize\n obj: [ x * y ] / 2\nEnd").is_err());
        assert!(parse_lp("Minimize\n obj: x\nBounds\n 0 <= x <= \nEnd").is_err());
        assert!(parse_lp("Minimize\n obj: x $\nEnd").is_err());
    }

    #[test]
    fn systems_serialize_with_their_labels() {
        let g = WeightedGraph::complete(3, int(1));
        let mut sys: ConstraintSystem<Rational> = mccormick_system(&g);
        sys.extend(triangle(1, 2, 3)).unwrap();
        let text = write_system(&sys);
        let p = parse_lp(&text).unwrap();
        assert_eq!(p.rows.len(), 16);
        assert_eq!(p.vars.len(), 6);
        assert_eq!(p.vars[0].upper, Some(int(1)));
        assert_eq!(p.vars[5].lower, None);
        same(&system_to_lp(&sys, None), &p);
    }
}
