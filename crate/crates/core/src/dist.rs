//! Exact finite joint tables and kernels, conditional independence, and the
//! fixing operator on distributions.
//!
//! Tables are row-major with the last variable varying fastest.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fixing::CondGraph;
use crate::graph::MixedGraph;
use crate::set::{VertexSet, MAX_VERTICES};

/// Largest number of cells a table may have.
pub const MAX_CELLS: u128 = 1 << 20;

/// Default tolerance for float-mode comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

pub type Rational = BigRational;

/// Arithmetic mode of a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

/// Number type for table entries.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    const MODE: Mode;
    fn to_f64(&self) -> f64;
    fn from_ratio(num: u64, den: u64) -> Self;
    /// Exact equality for rationals, `|a - b| <= tol` for floats.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;
    fn to_json(&self) -> Value;
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Rational;

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn to_json(&self) -> Value {
        serde_json::json!(self)
    }
}

fn abs_diff<S: Scalar>(a: &S, b: &S) -> f64 {
    (a.to_f64() - b.to_f64()).abs()
}

/// Named discrete variables with their cardinalities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    vars: Vec<Variable>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub card: usize,
}

impl StateSpace {
    pub fn new(vars: Vec<(String, usize)>) -> Result<Self> {
        if vars.len() > MAX_VERTICES {
            return Err(Error::TooManyVertices(vars.len()));
        }
        let mut seen = HashSet::new();
        let mut cells: u128 = 1;
        for (name, card) in &vars {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateVertex(name.clone()));
            }
            if *card == 0 {
                return Err(Error::InvalidDistribution(format!(
                    "variable `{name}` has cardinality 0"
                )));
            }
            cells = cells.saturating_mul(*card as u128);
            if cells > MAX_CELLS {
                return Err(Error::StateSpaceTooLarge(cells));
            }
        }
        Ok(StateSpace {
            vars: vars
                .into_iter()
                .map(|(name, card)| Variable { name, card })
                .collect(),
        })
    }

    /// Every vertex of `g` with cardinality `card`.
    pub fn for_graph(g: &MixedGraph, card: usize) -> Result<Self> {
        StateSpace::new(g.labels().iter().map(|l| (l.clone(), card)).collect())
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn name(&self, i: usize) -> &str {
        &self.vars[i].name
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.card).collect()
    }

    pub fn card(&self, i: usize) -> usize {
        self.vars[i].card
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn all(&self) -> VertexSet {
        VertexSet::full(self.len())
    }

    pub fn cells(&self) -> usize {
        self.vars.iter().map(|v| v.card).product()
    }

    /// Number of joint assignments of the variables in `set`.
    pub fn cells_of(&self, set: VertexSet) -> usize {
        set.iter().map(|i| self.vars[i].card).product()
    }

    pub fn subspace(&self, keep: VertexSet) -> StateSpace {
        StateSpace {
            vars: keep.iter().map(|i| self.vars[i].clone()).collect(),
        }
    }

    pub fn encode(&self, assignment: &[usize]) -> usize {
        assert_eq!(assignment.len(), self.len());
        assignment
            .iter()
            .zip(&self.vars)
            .fold(0, |acc, (&a, v)| acc * v.card + a)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (i, v) in self.vars.iter().enumerate().rev() {
            out[i] = index % v.card;
            index /= v.card;
        }
        out
    }

    /// For every cell, its index in the subspace over `keep`.
    pub fn projection(&self, keep: VertexSet) -> Vec<usize> {
        let n = self.len();
        let mut stride = vec![0usize; n];
        let mut s = 1;
        for i in (0..n).rev() {
            if keep.contains(i) {
                stride[i] = s;
                s *= self.vars[i].card;
            }
        }
        let mut out = Vec::with_capacity(self.cells());
        let mut digits = vec![0usize; n];
        let mut cur = 0usize;
        for _ in 0..self.cells() {
            out.push(cur);
            for i in (0..n).rev() {
                digits[i] += 1;
                cur += stride[i];
                if digits[i] < self.vars[i].card {
                    break;
                }
                cur -= stride[i] * digits[i];
                digits[i] = 0;
            }
        }
        out
    }

    /// Checks that the variables are exactly the vertices of `g`, in order.
    pub fn require_matches(&self, g: &MixedGraph) -> Result<()> {
        if self.names() != g.labels() {
            return Err(Error::NameMismatch(format!(
                "table has [{}], graph has [{}]",
                self.names().join(", "),
                g.labels().join(", ")
            )));
        }
        Ok(())
    }
}

/// A violating assignment and how far the two sides are apart.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub assignment: BTreeMap<String, usize>,
    pub magnitude: f64,
}

/// A joint probability table.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable<S> {
    space: StateSpace,
    probs: Vec<S>,
}

impl<S: Scalar> JointTable<S> {
    /// Validates length, nonnegativity and normalization.
    pub fn new(space: StateSpace, probs: Vec<S>) -> Result<Self> {
        if probs.len() != space.cells() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} entries, found {}",
                space.cells(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| *p < S::zero()) {
            return Err(Error::InvalidDistribution("negative entry".into()));
        }
        let total = probs.iter().cloned().fold(S::zero(), |a, b| a + b);
        if !total.approx_eq(&S::one(), 1e-12) {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {}",
                total.to_f64()
            )));
        }
        Ok(JointTable { space, probs })
    }

    pub(crate) fn from_parts(space: StateSpace, probs: Vec<S>) -> Self {
        debug_assert_eq!(space.cells(), probs.len());
        JointTable { space, probs }
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(space: StateSpace, weights: Vec<S>) -> Result<Self> {
        let total = weights.iter().cloned().fold(S::zero(), |a, b| a + b);
        if total.is_zero() {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / total.clone()).collect();
        JointTable::new(space, probs)
    }

    pub fn uniform(space: StateSpace) -> Self {
        let n = space.cells();
        let p = S::from_ratio(1, n as u64);
        JointTable {
            space,
            probs: vec![p; n],
        }
    }

    /// Point mass at `assignment`.
    pub fn point_mass(space: StateSpace, assignment: &[usize]) -> Self {
        let mut probs = vec![S::zero(); space.cells()];
        probs[space.encode(assignment)] = S::one();
        JointTable { space, probs }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn get(&self, assignment: &[usize]) -> &S {
        &self.probs[self.space.encode(assignment)]
    }

    /// Sums out every variable outside `keep`.
    pub fn marginal(&self, keep: VertexSet) -> JointTable<S> {
        let sub = self.space.subspace(keep);
        let mut probs = vec![S::zero(); sub.cells()];
        for (p, i) in self.probs.iter().zip(self.space.projection(keep)) {
            probs[i] = probs[i].clone() + p.clone();
        }
        JointTable { space: sub, probs }
    }

    /// Marginal over variables given by name, in table order.
    pub fn marginal_by_name<T: AsRef<str>>(&self, names: &[T]) -> Result<JointTable<S>> {
        let keep = names
            .iter()
            .map(|n| self.space.index_of(n.as_ref()))
            .collect::<Result<VertexSet>>()?;
        Ok(self.marginal(keep))
    }

    /// Same entries under new variable names.
    pub fn renamed<T: AsRef<str>>(&self, names: &[T]) -> Result<JointTable<S>> {
        if names.len() != self.space.len() {
            return Err(Error::NameMismatch("wrong number of names".into()));
        }
        let space = StateSpace::new(
            names
                .iter()
                .zip(&self.space.vars)
                .map(|(n, v)| (n.as_ref().to_string(), v.card))
                .collect(),
        )?;
        Ok(JointTable {
            space,
            probs: self.probs.clone(),
        })
    }

    /// Reorders variables: variable `order[i]` becomes the `i`-th.
    pub fn permute(&self, order: &[usize]) -> Result<JointTable<S>> {
        let n = self.space.len();
        let mut seen = vec![false; n];
        if order.len() != n
            || order
                .iter()
                .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::NameMismatch("not a permutation".into()));
        }
        let space = StateSpace {
            vars: order.iter().map(|&i| self.space.vars[i].clone()).collect(),
        };
        let mut probs = vec![S::zero(); space.cells()];
        for (idx, p) in self.probs.iter().enumerate() {
            let old = self.space.decode(idx);
            let new: Vec<usize> = order.iter().map(|&i| old[i]).collect();
            probs[space.encode(&new)] = p.clone();
        }
        Ok(JointTable { space, probs })
    }

    /// Reorders variables to follow the vertex order of `g`.
    pub fn aligned_to(&self, g: &MixedGraph) -> Result<JointTable<S>> {
        if self.space.names() == g.labels() {
            return Ok(self.clone());
        }
        let order = g
            .labels()
            .iter()
            .map(|l| {
                self.space
                    .index_of(l)
                    .map_err(|_| Error::NameMismatch(format!("no variable for vertex `{l}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if order.len() != self.space.len() {
            return Err(Error::NameMismatch(
                "variable count differs from vertex count".into(),
            ));
        }
        self.permute(&order)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.space == other.space
            && self
                .probs
                .iter()
                .zip(&other.probs)
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    /// Largest violation of `J ⫫ K | L`, if any.
    pub fn ci_test(&self, j: VertexSet, k: VertexSet, l: VertexSet, tol: f64) -> Option<Witness> {
        Kernel::from_joint(self.clone())
            .extended_ci_test(j, k, l, tol)
            .expect("no fixed variables")
    }

    pub fn ci_holds(&self, j: VertexSet, k: VertexSet, l: VertexSet, tol: f64) -> bool {
        self.ci_test(j, k, l, tol).is_none()
    }

    /// The distribution file representation.
    pub fn to_value(&self) -> Value {
        serde_json::to_value(TableFile {
            vars: self.space.vars.clone(),
            mode: S::MODE,
            probs: self.probs.iter().map(Scalar::to_json).collect(),
        })
        .expect("serializable")
    }

    pub fn to_f64(&self) -> JointTable<f64> {
        JointTable {
            space: self.space.clone(),
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// A family of distributions over the random variables, one per assignment
/// of the fixed variables.
///
/// Entries are stored over the full space. A slice is undefined when fixing
/// divided by a zero conditional on it; its entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<S> {
    space: StateSpace,
    fixed: VertexSet,
    probs: Vec<S>,
    defined: Vec<bool>,
}

impl<S: Scalar> Kernel<S> {
    pub fn from_joint(t: JointTable<S>) -> Self {
        Kernel {
            space: t.space,
            fixed: VertexSet::EMPTY,
            probs: t.probs,
            defined: vec![true],
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn fixed(&self) -> VertexSet {
        self.fixed
    }

    pub fn random(&self) -> VertexSet {
        self.space.all().difference(self.fixed)
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn slice_count(&self) -> usize {
        self.defined.len()
    }

    pub fn undefined_count(&self) -> usize {
        self.defined.iter().filter(|d| !**d).count()
    }

    /// Whether the slice at `fixed_values` (one value per fixed variable, in
    /// variable order) is defined.
    pub fn is_defined(&self, fixed_values: &[usize]) -> bool {
        self.defined[self.space.subspace(self.fixed).encode(fixed_values)]
    }

    /// The distribution over random variables at a fixed assignment.
    pub fn slice(&self, fixed_values: &[usize]) -> Option<JointTable<S>> {
        let fsub = self.space.subspace(self.fixed);
        let slot = fsub.encode(fixed_values);
        if !self.defined[slot] {
            return None;
        }
        let random = self.random();
        let rsub = self.space.subspace(random);
        let mut probs = vec![S::zero(); rsub.cells()];
        let fproj = self.space.projection(self.fixed);
        let rproj = self.space.projection(random);
        for (idx, p) in self.probs.iter().enumerate() {
            if fproj[idx] == slot {
                probs[rproj[idx]] = p.clone();
            }
        }
        Some(JointTable::from_parts(rsub, probs))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.space == other.space
            && self.fixed == other.fixed
            && self.defined == other.defined
            && self
                .probs
                .iter()
                .zip(&other.probs)
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    /// `{"fixed": [...], "slices": [{"fixed_values": {...}, "defined": .., "table": ..}]}`.
    pub fn to_value(&self) -> Value {
        let fsub = self.space.subspace(self.fixed);
        let slices: Vec<Value> = (0..fsub.cells())
            .map(|i| {
                let values = fsub.decode(i);
                let named: BTreeMap<String, usize> = fsub
                    .names()
                    .into_iter()
                    .zip(values.iter().copied())
                    .collect();
                let table = self
                    .slice(&values)
                    .map(|t| t.to_value())
                    .unwrap_or(Value::Null);
                serde_json::json!({
                    "fixed_values": named,
                    "defined": self.defined[i],
                    "table": table,
                })
            })
            .collect();
        serde_json::json!({ "fixed": fsub.names(), "slices": slices })
    }

    /// Equal entries on every slice defined in both kernels.
    pub fn agrees_where_defined(&self, other: &Self, tol: f64) -> bool {
        if self.space != other.space || self.fixed != other.fixed {
            return false;
        }
        let slot = self.space.projection(self.fixed);
        self.probs
            .iter()
            .zip(&other.probs)
            .zip(slot)
            .all(|((a, b), s)| !self.defined[s] || !other.defined[s] || a.approx_eq(b, tol))
    }

    /// Fixes `v`: divides by its conditional given its Markov background in `c`.
    pub fn fix(&self, c: &CondGraph, v: usize) -> Result<Kernel<S>> {
        if c.fixed() != self.fixed || c.graph().labels() != self.space.names() {
            return Err(Error::FixedSetMismatch);
        }
        if !c.is_fixable(v)? {
            return Err(Error::NotFixable(c.graph().label(v).to_string()));
        }
        let mbg = c.markov_background(v)?;
        let b_set = self.fixed.union(mbg);
        let a_set = b_set.with(v);
        let pa = self.space.projection(a_set);
        let pb = self.space.projection(b_set);
        let mut sum_a = vec![S::zero(); self.space.cells_of(a_set)];
        let mut sum_b = vec![S::zero(); self.space.cells_of(b_set)];
        for (idx, p) in self.probs.iter().enumerate() {
            sum_a[pa[idx]] = sum_a[pa[idx]].clone() + p.clone();
            sum_b[pb[idx]] = sum_b[pb[idx]].clone() + p.clone();
        }
        let new_fixed = self.fixed.with(v);
        let old_slot = self.space.projection(self.fixed);
        let new_slot = self.space.projection(new_fixed);
        let mut defined = vec![true; self.space.cells_of(new_fixed)];
        let mut probs = Vec::with_capacity(self.probs.len());
        for (idx, p) in self.probs.iter().enumerate() {
            let ns = new_slot[idx];
            if !self.defined[old_slot[idx]] {
                defined[ns] = false;
                probs.push(S::zero());
                continue;
            }
            let (a, b) = (&sum_a[pa[idx]], &sum_b[pb[idx]]);
            if b.is_zero() {
                probs.push(S::zero());
            } else if a.is_zero() {
                defined[ns] = false;
                probs.push(S::zero());
            } else {
                probs.push(p.clone() * b.clone() / a.clone());
            }
        }
        for (idx, p) in probs.iter_mut().enumerate() {
            if !defined[new_slot[idx]] {
                *p = S::zero();
            }
        }
        Ok(Kernel {
            space: self.space.clone(),
            fixed: new_fixed,
            probs,
            defined,
        })
    }

    /// Fixes along `seq`, returning the kernel and the matching graph.
    pub fn fix_sequence(&self, c: &CondGraph, seq: &[usize]) -> Result<(Kernel<S>, CondGraph)> {
        let mut k = self.clone();
        let mut c = c.clone();
        for &v in seq {
            k = k.fix(&c, v)?;
            c = c.fix(v)?;
        }
        Ok((k, c))
    }

    /// Largest violation of the extended independence of `K` from `L` given `M`.
    ///
    /// At most one of `K` and `L` may contain fixed variables. On every defined
    /// slice, the conditional of `K` given the random part of `L ∪ M` must not
    /// depend on the random part of `L` nor on the fixed variables in `L`.
    pub fn extended_ci_test(
        &self,
        k: VertexSet,
        l: VertexSet,
        m: VertexSet,
        tol: f64,
    ) -> Result<Option<Witness>> {
        let all = self.space.all();
        if !k.union(l).union(m).is_subset(all) {
            return Err(Error::UnknownVertex("variable outside table".into()));
        }
        if !k.is_disjoint(l) || !k.is_disjoint(m) || !l.is_disjoint(m) {
            return Err(Error::OverlappingSets);
        }
        if k.is_empty() || l.is_empty() {
            return Err(Error::EmptyQuerySet);
        }
        let f = self.fixed;
        let (k, l) = match (k.is_disjoint(f), l.is_disjoint(f)) {
            (false, false) => return Err(Error::BothSidesFixed),
            (false, true) => (l, k),
            _ => (k, l),
        };
        // Context that must not matter: all of L. Context that may: the rest.
        let outer = f.difference(l).union(m);
        let (co, cl, ck) = (
            self.space.cells_of(outer),
            self.space.cells_of(l),
            self.space.cells_of(k),
        );
        let po = self.space.projection(outer);
        let pl = self.space.projection(l);
        let pk = self.space.projection(k);
        let slot = self.space.projection(f);
        let mut num = vec![S::zero(); co * cl * ck];
        let mut den = vec![S::zero(); co * cl];
        let mut seen = vec![false; co * cl];
        for (idx, p) in self.probs.iter().enumerate() {
            if !self.defined[slot[idx]] {
                continue;
            }
            let ctx = po[idx] * cl + pl[idx];
            seen[ctx] = true;
            let cell = ctx * ck + pk[idx];
            num[cell] = num[cell].clone() + p.clone();
            den[ctx] = den[ctx].clone() + p.clone();
        }
        let mut worst: Option<(f64, usize, usize, usize)> = None;
        for o in 0..co {
            let reference = (0..cl).find(|&li| !den[o * cl + li].is_zero());
            let Some(r) = reference else { continue };
            let rctx = o * cl + r;
            for li in 0..cl {
                let ctx = o * cl + li;
                if li == r || !seen[ctx] || den[ctx].is_zero() {
                    continue;
                }
                for ki in 0..ck {
                    let lhs = num[ctx * ck + ki].clone() * den[rctx].clone();
                    let rhs = num[rctx * ck + ki].clone() * den[ctx].clone();
                    if !lhs.approx_eq(&rhs, tol) {
                        let mag = abs_diff(&lhs, &rhs);
                        if worst.is_none_or(|w| mag > w.0) {
                            worst = Some((mag, o, li, ki));
                        }
                    }
                }
            }
        }
        Ok(worst.map(|(magnitude, o, li, ki)| {
            let mut assignment = BTreeMap::new();
            for (set, index) in [(outer, o), (l, li), (k, ki)] {
                let values = self.space.subspace(set).decode(index);
                for (var, val) in set.iter().zip(values) {
                    assignment.insert(self.space.name(var).to_string(), val);
                }
            }
            Witness {
                assignment,
                magnitude,
            }
        }))
    }

    pub fn extended_ci_holds(
        &self,
        k: VertexSet,
        l: VertexSet,
        m: VertexSet,
        tol: f64,
    ) -> Result<bool> {
        Ok(self.extended_ci_test(k, l, m, tol)?.is_none())
    }
}

/// Parses `"p/q"` or `"p"` into a nonnegative rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidDistribution(format!("bad rational `{s}`"));
    let (n, d) = match s.trim().split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() || n.is_negative() || d.is_negative() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// A table in either arithmetic mode, as read from or written to JSON.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTable {
    Rational(JointTable<Rational>),
    Float(JointTable<f64>),
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    vars: Vec<Variable>,
    mode: Mode,
    probs: Vec<Value>,
}

impl AnyTable {
    pub fn mode(&self) -> Mode {
        match self {
            AnyTable::Rational(_) => Mode::Rational,
            AnyTable::Float(_) => Mode::Float,
        }
    }

    pub fn space(&self) -> &StateSpace {
        match self {
            AnyTable::Rational(t) => t.space(),
            AnyTable::Float(t) => t.space(),
        }
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let file: TableFile = serde_json::from_value(v)?;
        let space = StateSpace::new(file.vars.into_iter().map(|v| (v.name, v.card)).collect())?;
        match file.mode {
            Mode::Rational => {
                let probs = file
                    .probs
                    .iter()
                    .map(|p| match p {
                        Value::String(s) => parse_rational(s),
                        Value::Number(n) if n.as_u64().is_some() => {
                            Ok(BigRational::from_integer(BigInt::from(n.as_u64().unwrap())))
                        }
                        _ => Err(Error::InvalidDistribution(format!(
                            "rational entries must be strings, found {p}"
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(AnyTable::Rational(JointTable::new(space, probs)?))
            }
            Mode::Float => {
                let probs = file
                    .probs
                    .iter()
                    .map(|p| {
                        p.as_f64().ok_or_else(|| {
                            Error::InvalidDistribution(format!(
                                "float entries must be numbers, found {p}"
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(AnyTable::Float(JointTable::new(space, probs)?))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        AnyTable::from_value(serde_json::from_str(text)?)
    }

    pub fn to_value(&self) -> Value {
        match self {
            AnyTable::Rational(t) => t.to_value(),
            AnyTable::Float(t) => t.to_value(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable")
    }
}

impl From<JointTable<Rational>> for AnyTable {
    fn from(t: JointTable<Rational>) -> Self {
        AnyTable::Rational(t)
    }
}

impl From<JointTable<f64>> for AnyTable {
    fn from(t: JointTable<f64>) -> Self {
        AnyTable::Float(t)
    }
}
