//! Membership checkers for the graphical models of an ADMG, and a harness
//! tabulating how their verdicts relate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::dist::{JointTable, Kernel, Scalar, StateSpace, Witness};
use crate::error::{Error, Result};
use crate::fixing::{fixable_sets, tilde_fix, CondGraph};
use crate::graph::{GraphClass, MixedGraph, TopologicalOrder};
use crate::set::VertexSet;
use crate::transform::{augment, marginalize};
use crate::walk::SeparationQuery;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Model {
    GM,
    UM,
    LM,
    F,
    EF,
    A,
    NM,
}

impl Model {
    pub const ALL: [Model; 7] = [
        Model::GM,
        Model::UM,
        Model::LM,
        Model::F,
        Model::EF,
        Model::A,
        Model::NM,
    ];

    /// Whether the checker accepts graphs of these classes.
    pub fn applies_to(self, classes: &std::collections::BTreeSet<GraphClass>) -> bool {
        match self {
            Model::F => classes.contains(&GraphClass::Dag),
            Model::EF => classes.contains(&GraphClass::Unconfounded),
            _ => classes.contains(&GraphClass::Admg),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Precondition(format!("unknown model `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: String,
    /// Vertices fixed before testing, for nested constraints.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fixed: Vec<String>,
    pub witness: BTreeMap<String, usize>,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub model: Model,
    pub passed: bool,
    pub violations: Vec<Violation>,
    pub skipped_slices: usize,
    /// Number of constraints evaluated.
    pub constraints: usize,
    pub tol: f64,
}

impl CheckReport {
    fn new(model: Model, tol: f64) -> Self {
        CheckReport {
            model,
            passed: true,
            violations: Vec::new(),
            skipped_slices: 0,
            constraints: 0,
            tol,
        }
    }

    fn push(&mut self, constraint: String, fixed: Vec<String>, w: Witness) {
        self.passed = false;
        self.violations.push(Violation {
            constraint,
            fixed,
            witness: w.assignment,
            magnitude: w.magnitude,
        });
    }
}

fn independence(names: &dyn Fn(VertexSet) -> String, q: &SeparationQuery) -> String {
    format!("{} ⫫ {} | {}", names(q.j), names(q.k), names(q.l))
}

/// Disjoint `(J, K, L)` inside `within`, `J` and `K` nonempty, each unordered
/// pair `{J, K}` listed once.
pub fn disjoint_triples(within: VertexSet) -> Vec<SeparationQuery> {
    let members: Vec<usize> = within.iter().collect();
    let mut out = Vec::new();
    let total = 4usize.pow(members.len() as u32);
    for code in 0..total {
        let (mut j, mut k, mut l) = (VertexSet::EMPTY, VertexSet::EMPTY, VertexSet::EMPTY);
        let mut c = code;
        for &v in &members {
            match c % 4 {
                1 => j.insert(v),
                2 => k.insert(v),
                3 => l.insert(v),
                _ => {}
            }
            c /= 4;
        }
        if !j.is_empty() && !k.is_empty() && j.first() < k.first() {
            out.push(SeparationQuery { j, k, l });
        }
    }
    out
}

fn prepare<S: Scalar>(g: &MixedGraph, t: &JointTable<S>) -> Result<()> {
    g.require_acyclic()?;
    t.space().require_matches(g)
}

/// Global Markov: every m-separation holds as an independence.
pub fn check_gm<S: Scalar>(g: &MixedGraph, t: &JointTable<S>, tol: f64) -> Result<CheckReport> {
    prepare(g, t)?;
    let mut r = CheckReport::new(Model::GM, tol);
    gm_into(&mut r, g, t, tol, "")?;
    Ok(r)
}

fn gm_into<S: Scalar>(
    r: &mut CheckReport,
    g: &MixedGraph,
    t: &JointTable<S>,
    tol: f64,
    prefix: &str,
) -> Result<()> {
    let names = |s| g.format_set(s);
    for q in disjoint_triples(g.all()) {
        if g.m_separated(&q)? {
            r.constraints += 1;
            if let Some(w) = t.ci_test(q.j, q.k, q.l, tol) {
                r.push(
                    format!("{prefix}{}", independence(&names, &q)),
                    Vec::new(),
                    w,
                );
            }
        }
    }
    Ok(())
}

/// Unconditional Markov: sets joined by no arc are independent.
pub fn check_um<S: Scalar>(g: &MixedGraph, t: &JointTable<S>, tol: f64) -> Result<CheckReport> {
    prepare(g, t)?;
    let mut r = CheckReport::new(Model::UM, tol);
    let names = |s| g.format_set(s);
    for q in disjoint_triples(g.all()) {
        if !q.l.is_empty() || g.arc_connected(q.j, q.k)? {
            continue;
        }
        r.constraints += 1;
        if let Some(w) = t.ci_test(q.j, q.k, q.l, tol) {
            r.push(independence(&names, &q), Vec::new(), w);
        }
    }
    Ok(r)
}

/// Local Markov with respect to a topological order.
pub fn check_lm<S: Scalar>(
    g: &MixedGraph,
    t: &JointTable<S>,
    order: &TopologicalOrder,
    tol: f64,
) -> Result<CheckReport> {
    prepare(g, t)?;
    let order = TopologicalOrder::new(g, order.as_slice().to_vec())?;
    let mut r = CheckReport::new(Model::LM, tol);
    let names = |s| g.format_set(s);
    let mut pre = VertexSet::EMPTY;
    for &j in order.as_slice() {
        for rest in pre.subsets() {
            let k = rest.with(j);
            if !g.is_ancestral(k) {
                continue;
            }
            let (_, map) = g.relabel_map(k);
            let sub = g.induced_subgraph(k);
            let local = sub.markov_background(map[j])?;
            let back = |s: VertexSet| {
                s.iter()
                    .map(|v| k.iter().nth(v).unwrap())
                    .collect::<VertexSet>()
            };
            let mb = back(local);
            if cfg!(debug_assertions) {
                let projected = marginalize(g, k)?.markov_background(map[j])?;
                let direct = g
                    .district_within(j, k)
                    .union(g.parents_of_set(g.district_within(j, k)))
                    .intersection(k)
                    .without(j);
                debug_assert_eq!(back(projected), mb);
                debug_assert_eq!(direct, mb);
            }
            let others = k.difference(mb).without(j);
            if others.is_empty() {
                continue;
            }
            let q = SeparationQuery {
                j: VertexSet::singleton(j),
                k: others,
                l: mb,
            };
            r.constraints += 1;
            if let Some(w) = t.ci_test(q.j, q.k, q.l, tol) {
                r.push(independence(&names, &q), Vec::new(), w);
            }
        }
        pre.insert(j);
    }
    Ok(r)
}

/// Conditional `p(v_j | v_cond)` for every cell of the space, `None` where
/// `p(v_cond) = 0`.
fn conditionals<S: Scalar>(t: &JointTable<S>, j: usize, cond: VertexSet) -> Vec<Option<S>> {
    let space = t.space();
    let fam = cond.with(j);
    let pf = space.projection(fam);
    let pc = space.projection(cond);
    let mf = t.marginal(fam);
    let mc = t.marginal(cond);
    (0..space.cells())
        .map(|i| {
            let d = &mc.probs()[pc[i]];
            if d.is_zero() {
                None
            } else {
                Some(mf.probs()[pf[i]].clone() / d.clone())
            }
        })
        .collect()
}

fn factorization_into<S: Scalar>(
    r: &mut CheckReport,
    g: &MixedGraph,
    t: &JointTable<S>,
    base: Option<VertexSet>,
    tol: f64,
) {
    let space = t.space();
    let mut factors: Vec<Vec<Option<S>>> = Vec::new();
    let mut endo = g.all();
    if let Some(e) = base {
        let pe = space.projection(e);
        let me = t.marginal(e);
        factors.push(
            (0..space.cells())
                .map(|i| Some(me.probs()[pe[i]].clone()))
                .collect(),
        );
        endo = endo.difference(e);
    }
    for j in endo.iter() {
        factors.push(conditionals(t, j, g.parents(j)));
    }
    let label = match base {
        Some(e) => format!("p(v) = p({}) · Π p(v_j | v_pa(j))", names_joined(space, e)),
        None => "p(v) = Π p(v_j | v_pa(j))".to_string(),
    };
    let mut worst: Option<Witness> = None;
    for (i, p) in t.probs().iter().enumerate() {
        let mut prod = S::one();
        let mut defined = true;
        for f in &factors {
            match &f[i] {
                Some(x) => prod = prod * x.clone(),
                None => {
                    defined = false;
                    break;
                }
            }
        }
        if !defined {
            continue;
        }
        r.constraints += 1;
        if !prod.approx_eq(p, tol) {
            let magnitude = (prod.to_f64() - p.to_f64()).abs();
            if worst.as_ref().is_none_or(|w| magnitude > w.magnitude) {
                let values = space.decode(i);
                worst = Some(Witness {
                    assignment: space.names().into_iter().zip(values).collect(),
                    magnitude,
                });
            }
        }
    }
    if let Some(w) = worst {
        r.push(label, Vec::new(), w);
    }
}

fn names_joined(space: &StateSpace, s: VertexSet) -> String {
    let mut n: Vec<&str> = s.iter().map(|i| space.name(i)).collect();
    n.sort();
    format!("v_{{{}}}", n.join(", "))
}

/// DAG factorization, checked cell by cell wherever every conditional is defined.
pub fn check_factorization<S: Scalar>(
    g: &MixedGraph,
    t: &JointTable<S>,
    tol: f64,
) -> Result<CheckReport> {
    if !g.is_dag() {
        return Err(Error::NotDag);
    }
    t.space().require_matches(g)?;
    let mut r = CheckReport::new(Model::F, tol);
    factorization_into(&mut r, g, t, None, tol);
    Ok(r)
}

/// Exogenous factorization for unconfounded graphs.
pub fn check_ef<S: Scalar>(g: &MixedGraph, t: &JointTable<S>, tol: f64) -> Result<CheckReport> {
    prepare(g, t)?;
    if !g.is_unconfounded() {
        return Err(Error::Confounded);
    }
    let mut r = CheckReport::new(Model::EF, tol);
    let e = g.exogenous_vertices();
    factorization_into(&mut r, g, t, Some(e), tol);
    let sub = g.induced_subgraph(e);
    let te = t.marginal(e);
    gm_into(&mut r, &sub, &te, tol, "exogenous margin: ")?;
    Ok(r)
}

/// Undirected global Markov of every ancestral margin against its augmented graph.
pub fn check_augmentation<S: Scalar>(
    g: &MixedGraph,
    t: &JointTable<S>,
    tol: f64,
) -> Result<CheckReport> {
    prepare(g, t)?;
    let mut r = CheckReport::new(Model::A, tol);
    for anc in g.all().subsets() {
        if anc.len() < 2 || !g.is_ancestral(anc) {
            continue;
        }
        let sub = marginalize(g, anc)?;
        let u = augment(&sub);
        let tm = t.marginal(anc);
        for q in disjoint_triples(sub.all()) {
            if !u.separated(&q) {
                continue;
            }
            r.constraints += 1;
            if let Some(w) = tm.ci_test(q.j, q.k, q.l, tol) {
                let names = |s| sub.format_set(s);
                r.push(
                    format!("margin {}: {}", g.format_set(anc), independence(&names, &q)),
                    Vec::new(),
                    w,
                );
            }
        }
    }
    Ok(r)
}

/// Nested Markov: every kernel obtained by fixing a fixable set satisfies
/// the extended global Markov property of the tilde-fixed graph.
pub fn check_nm<S: Scalar>(g: &MixedGraph, t: &JointTable<S>, tol: f64) -> Result<CheckReport> {
    prepare(g, t)?;
    let mut r = CheckReport::new(Model::NM, tol);
    let base = Kernel::from_joint(t.clone());
    let start = CondGraph::new(g)?;
    let names = |s| g.format_set(s);
    for fs in fixable_sets(g)? {
        let (kernel, _) = base.fix_sequence(&start, &fs.order)?;
        r.skipped_slices += kernel.undefined_count();
        let sep = tilde_fix(g, fs.set)?.separation_graph();
        for q in disjoint_triples(g.all()) {
            if !q.j.is_disjoint(fs.set) && !q.k.is_disjoint(fs.set) {
                continue;
            }
            if !sep.m_separated(&q)? {
                continue;
            }
            r.constraints += 1;
            if let Some(w) = kernel.extended_ci_test(q.j, q.k, q.l, tol)? {
                r.push(independence(&names, &q), g.sorted_names(fs.set), w);
            }
        }
    }
    Ok(r)
}

/// Runs `model`; the local Markov check uses the first topological order.
pub fn check<S: Scalar>(
    model: Model,
    g: &MixedGraph,
    t: &JointTable<S>,
    tol: f64,
) -> Result<CheckReport> {
    match model {
        Model::GM => check_gm(g, t, tol),
        Model::UM => check_um(g, t, tol),
        Model::LM => {
            let order = g
                .topological_orders(1)?
                .into_iter()
                .next()
                .expect("acyclic graphs have an order");
            check_lm(g, t, &order, tol)
        }
        Model::F => check_factorization(g, t, tol),
        Model::EF => check_ef(g, t, tol),
        Model::A => check_augmentation(g, t, tol),
        Model::NM => check_nm(g, t, tol),
    }
}

/// Implications between models expected for a graph with these classes.
pub fn expected_implications(
    classes: &std::collections::BTreeSet<GraphClass>,
) -> Vec<(Model, Model)> {
    use Model::*;
    let mut eq_class = vec![GM, LM, A];
    let mut out = vec![(NM, GM), (GM, UM)];
    if classes.contains(&GraphClass::Unconfounded) {
        eq_class.extend([EF, NM]);
    }
    if classes.contains(&GraphClass::Dag) {
        eq_class.push(F);
    }
    if classes.contains(&GraphClass::Bidirected) {
        eq_class.push(UM);
    }
    for &a in &eq_class {
        for &b in &eq_class {
            if a != b {
                out.push((a, b));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Per-pair verdict counts over a corpus.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RelationMatrix {
    pub instances: usize,
    /// `[x][y]`: instances where both checkers ran.
    pub both: BTreeMap<Model, BTreeMap<Model, usize>>,
    /// `[x][y]`: instances where `x` passed and `y` failed.
    pub x_not_y: BTreeMap<Model, BTreeMap<Model, usize>>,
    /// Expected implications contradicted by some instance.
    pub hard_failures: Vec<String>,
    /// Strict implications for which the corpus holds no separating instance.
    pub missing_strictness: Vec<String>,
}

impl RelationMatrix {
    pub fn ok(&self) -> bool {
        self.hard_failures.is_empty()
    }
}

/// Runs every applicable checker on every pair and tabulates implications.
pub fn relation_matrix<S: Scalar>(
    corpus: &[(MixedGraph, JointTable<S>)],
    tol: f64,
) -> Result<RelationMatrix> {
    let mut m = RelationMatrix {
        instances: corpus.len(),
        ..Default::default()
    };
    let mut strict_seen: BTreeMap<(Model, Model), bool> = BTreeMap::new();
    for (idx, (g, t)) in corpus.iter().enumerate() {
        let classes = g.classify();
        let mut verdicts = BTreeMap::new();
        for model in Model::ALL {
            if model.applies_to(&classes) {
                verdicts.insert(model, check(model, g, t, tol)?.passed);
            }
        }
        for (&x, &px) in &verdicts {
            for (&y, &py) in &verdicts {
                if x == y {
                    continue;
                }
                *m.both.entry(x).or_default().entry(y).or_default() += 1;
                let cell = m.x_not_y.entry(x).or_default().entry(y).or_default();
                if px && !py {
                    *cell += 1;
                }
            }
        }
        for (x, y) in expected_implications(&classes) {
            let (Some(&px), Some(&py)) = (verdicts.get(&x), verdicts.get(&y)) else {
                continue;
            };
            if px && !py {
                m.hard_failures
                    .push(format!("instance {idx}: {x} passed but {y} failed"));
            }
        }
        for (x, y) in [(Model::NM, Model::GM), (Model::GM, Model::UM)] {
            let (Some(&px), Some(&py)) = (verdicts.get(&x), verdicts.get(&y)) else {
                continue;
            };
            let seen = strict_seen.entry((x, y)).or_default();
            *seen |= py && !px;
        }
    }
    for ((x, y), seen) in strict_seen {
        if !seen {
            m.missing_strictness
                .push(format!("no instance passes {y} and fails {x}"));
        }
    }
    Ok(m)
}

impl fmt::Display for RelationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instances: {}", self.instances)?;
        writeln!(
            f,
            "x passed, y failed (x rows, y columns; - = never both run):"
        )?;
        write!(f, "{:>4}", "")?;
        for y in Model::ALL {
            write!(f, "{:>6}", y.to_string())?;
        }
        writeln!(f)?;
        for x in Model::ALL {
            write!(f, "{:>4}", x.to_string())?;
            for y in Model::ALL {
                let both = self
                    .both
                    .get(&x)
                    .and_then(|r| r.get(&y))
                    .copied()
                    .unwrap_or(0);
                let cell = if x == y || both == 0 {
                    "-".to_string()
                } else {
                    self.x_not_y[&x][&y].to_string()
                };
                write!(f, "{cell:>6}")?;
            }
            writeln!(f)?;
        }
        for h in &self.hard_failures {
            writeln!(f, "FAIL {h}")?;
        }
        for s in &self.missing_strictness {
            writeln!(f, "note: {s}")?;
        }
        Ok(())
    }
}
