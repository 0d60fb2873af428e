//! Nonparametric equation systems: induced laws, potential outcomes by
//! recursive substitution, and exhaustive checks of their causal properties.
//!
//! Potential outcomes follow `V_j(v_I) = f_j(v_{pa(j) ∩ I}, V_{pa(j) \ I}(v_I), E_j)`.
//! An intervened vertex keeps its own equation; only its descendants see the
//! assigned value.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::checks::{check_gm, check_um, CheckReport, Violation};
use crate::corpus::dyadic_law;
use crate::dist::{AnyTable, JointTable, Kernel, Rational, Scalar, StateSpace, MAX_CELLS};
use crate::error::{Error, Result};
use crate::fixing::{canonical_order, fixable_permutations, CondGraph};
use crate::graph::{parse_graph, MixedGraph};
use crate::set::VertexSet;
use crate::transform::{enumerate_bidirected_cliques, swig, CliqueScope};

/// `V_j = f_j(V_pa(j), E_j)` for every vertex, with a joint law on the noise.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationSystem {
    graph: MixedGraph,
    space: StateSpace,
    noise: JointTable<Rational>,
    /// Per vertex, `f_j` indexed by `parent_index * |E_j| + e_j`.
    functions: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    order: Vec<usize>,
}

/// Values assigned to intervened vertices, indexed by vertex.
pub type Intervention = BTreeMap<usize, usize>;

impl EquationSystem {
    /// Validates shapes and that the noise law is unconditionally Markov with
    /// respect to the bidirected part of `graph`.
    pub fn new(
        graph: MixedGraph,
        cards: Vec<usize>,
        noise: JointTable<Rational>,
        functions: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let s = Self::unchecked(graph, cards, noise, functions)?;
        let bidirected = s.graph.bidirected_component();
        let renamed = s.noise.renamed(s.graph.labels())?;
        let um = check_um(&bidirected, &renamed, 0.0)?;
        if !um.passed {
            return Err(Error::InvalidSystem(format!(
                "noise violates {}",
                um.violations[0].constraint
            )));
        }
        Ok(s)
    }

    fn unchecked(
        graph: MixedGraph,
        cards: Vec<usize>,
        noise: JointTable<Rational>,
        functions: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n = graph.n();
        let order = graph.topological_sort().ok_or(Error::Cyclic)?;
        if cards.len() != n || functions.len() != n {
            return Err(Error::InvalidSystem(
                "one cardinality and function per vertex".into(),
            ));
        }
        let expected: Vec<String> = graph.labels().iter().map(|l| format!("E_{l}")).collect();
        if noise.space().names() != expected {
            return Err(Error::InvalidSystem(format!(
                "noise variables must be [{}]",
                expected.join(", ")
            )));
        }
        let space = StateSpace::new(graph.labels().iter().cloned().zip(cards).collect())?;
        let parents: Vec<Vec<usize>> = (0..n).map(|j| graph.parents(j).iter().collect()).collect();
        for j in 0..n {
            let rows: usize = parents[j].iter().map(|&p| space.card(p)).product();
            let want = rows * noise.space().card(j);
            if functions[j].len() != want {
                return Err(Error::InvalidSystem(format!(
                    "f_{} has {} cells, expected {want}",
                    graph.label(j),
                    functions[j].len()
                )));
            }
            if functions[j].iter().any(|&v| v >= space.card(j)) {
                return Err(Error::InvalidSystem(format!(
                    "f_{} takes a value outside its range",
                    graph.label(j)
                )));
            }
        }
        Ok(EquationSystem {
            graph,
            space,
            noise,
            functions,
            parents,
            order,
        })
    }

    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn noise(&self) -> &JointTable<Rational> {
        &self.noise
    }

    pub fn functions(&self) -> &[Vec<usize>] {
        &self.functions
    }

    fn apply(&self, j: usize, values: &[usize], e: usize) -> usize {
        let row = self.parents[j]
            .iter()
            .fold(0, |acc, &p| acc * self.space.card(p) + values[p]);
        self.functions[j][row * self.noise.space().card(j) + e]
    }

    /// `V(v_I)` at one noise point.
    pub fn evaluate(&self, noise: &[usize], intervention: &Intervention) -> Vec<usize> {
        let n = self.graph.n();
        let mut natural = vec![0; n];
        let mut seen = vec![0; n];
        for &j in &self.order {
            for &p in &self.parents[j] {
                seen[p] = intervention.get(&p).copied().unwrap_or(natural[p]);
            }
            natural[j] = self.apply(j, &seen, noise[j]);
        }
        natural
    }

    fn check_intervention(&self, intervention: &Intervention) -> Result<()> {
        for (&v, &val) in intervention {
            if v >= self.graph.n() {
                return Err(Error::UnknownVertex(format!("#{v}")));
            }
            if val >= self.space.card(v) {
                return Err(Error::Precondition(format!(
                    "value {val} out of range for {}",
                    self.graph.label(v)
                )));
            }
        }
        Ok(())
    }

    /// Law of `V(v_I)`.
    pub fn po_distribution(&self, intervention: &Intervention) -> Result<JointTable<Rational>> {
        self.check_intervention(intervention)?;
        let mut probs = vec![Rational::zero(); self.space.cells()];
        for (idx, p) in self.noise.probs().iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let e = self.noise.space().decode(idx);
            let v = self.space.encode(&self.evaluate(&e, intervention));
            probs[v] = probs[v].clone() + p.clone();
        }
        JointTable::new(self.space.clone(), probs)
    }

    /// Law of the observed variables.
    pub fn induced_joint(&self) -> JointTable<Rational> {
        self.po_distribution(&Intervention::new())
            .expect("empty intervention is valid")
    }

    /// All interventions, ordered by intervened set and then by values.
    pub fn interventions(&self) -> Vec<Intervention> {
        let mut out = Vec::new();
        for set in self.graph.all().subsets() {
            let sub = self.space.subspace(set);
            for idx in 0..sub.cells() {
                out.push(set.iter().zip(sub.decode(idx)).collect());
            }
        }
        out
    }

    /// Every potential outcome at every noise point.
    pub fn schedule(&self) -> Schedule {
        let interventions = self.interventions();
        let outcomes = (0..self.noise.space().cells())
            .map(|idx| {
                let e = self.noise.space().decode(idx);
                interventions.iter().map(|i| self.evaluate(&e, i)).collect()
            })
            .collect();
        Schedule {
            interventions,
            outcomes,
        }
    }

    pub fn to_value(&self) -> Value {
        let functions: Vec<Vec<Vec<usize>>> = (0..self.graph.n())
            .map(|j| {
                self.functions[j]
                    .chunks(self.noise.space().card(j))
                    .map(|c| c.to_vec())
                    .collect()
            })
            .collect();
        serde_json::to_value(SystemFile {
            graph: self.graph.to_string(),
            cards: self.space.cards(),
            noise: AnyTable::Rational(self.noise.clone()).to_value(),
            functions,
        })
        .expect("serializable")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        let graph = parse_graph(&file.graph)?;
        let noise = match AnyTable::from_value(file.noise)? {
            AnyTable::Rational(t) => t,
            AnyTable::Float(_) => {
                return Err(Error::InvalidSystem(
                    "noise must be in rational mode".into(),
                ))
            }
        };
        let functions = file.functions.into_iter().map(|f| f.concat()).collect();
        EquationSystem::new(graph, file.cards, noise, functions)
    }
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    graph: String,
    cards: Vec<usize>,
    noise: Value,
    functions: Vec<Vec<Vec<usize>>>,
}

/// Potential outcomes `V(v_I)` for every intervention and noise point.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub interventions: Vec<Intervention>,
    /// `outcomes[noise_index][intervention_index]`.
    pub outcomes: Vec<Vec<Vec<usize>>>,
}

/// Which causal property a [`VerifyReport`] covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Consistency,
    NoDirectEffect,
    SwigMarkov,
    FixingIdentity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub property: Property,
    pub passed: bool,
    pub violations: Vec<Violation>,
    pub checked: usize,
    pub skipped_slices: usize,
}

impl VerifyReport {
    fn new(property: Property) -> Self {
        VerifyReport {
            property,
            passed: true,
            violations: Vec::new(),
            checked: 0,
            skipped_slices: 0,
        }
    }

    fn fail(&mut self, constraint: String, witness: BTreeMap<String, usize>, magnitude: f64) {
        self.passed = false;
        self.violations.push(Violation {
            constraint,
            fixed: Vec::new(),
            witness,
            magnitude,
        });
    }
}

fn describe(g: &MixedGraph, i: &Intervention) -> String {
    let parts: Vec<String> = i
        .iter()
        .map(|(&v, &x)| format!("{}={x}", g.label(v)))
        .collect();
    format!("do({})", parts.join(", "))
}

fn noise_witness(s: &EquationSystem, idx: usize) -> BTreeMap<String, usize> {
    s.noise
        .space()
        .names()
        .into_iter()
        .zip(s.noise.space().decode(idx))
        .collect()
}

/// Checks a schedule for consistency and for the recursive equations.
///
/// On the event `V_{I'}(v_I) = v_{I'}`, `V(v_I, v_{I'})` must equal `V(v_I)`;
/// and every `V_j(v_I)` must equal `f_j` applied to its inputs.
pub fn verify_schedule(s: &EquationSystem, schedule: &Schedule) -> VerifyReport {
    let mut r = VerifyReport::new(Property::Consistency);
    let g = &s.graph;
    let position: BTreeMap<Vec<(usize, usize)>, usize> = schedule
        .interventions
        .iter()
        .enumerate()
        .map(|(i, iv)| (iv.iter().map(|(&a, &b)| (a, b)).collect(), i))
        .collect();
    for (idx, row) in schedule.outcomes.iter().enumerate() {
        let e = s.noise.space().decode(idx);
        for (ii, iv) in schedule.interventions.iter().enumerate() {
            let w = &row[ii];
            let set: VertexSet = iv.keys().copied().collect();
            let mut seen = w.clone();
            for (&v, &x) in iv {
                seen[v] = x;
            }
            for j in 0..g.n() {
                r.checked += 1;
                if s.apply(j, &seen, e[j]) != w[j] {
                    r.fail(
                        format!(
                            "{}: {} disagrees with its equation",
                            describe(g, iv),
                            g.label(j)
                        ),
                        noise_witness(s, idx),
                        1.0,
                    );
                }
            }
            for extra in g.all().difference(set).subsets().skip(1) {
                let mut joint = iv.clone();
                for v in extra.iter() {
                    joint.insert(v, w[v]);
                }
                let key: Vec<(usize, usize)> = joint.iter().map(|(&a, &b)| (a, b)).collect();
                r.checked += 1;
                if &row[position[&key]] != w {
                    r.fail(
                        format!(
                            "{} differs from {} where {} takes its natural value",
                            describe(g, &joint),
                            describe(g, iv),
                            g.format_set(extra)
                        ),
                        noise_witness(s, idx),
                        1.0,
                    );
                }
            }
        }
    }
    r
}

/// Consistency of every potential outcome, checked exhaustively.
pub fn verify_consistency(s: &EquationSystem) -> VerifyReport {
    verify_schedule(s, &s.schedule())
}

/// Every directed path from `L` to `J` meets `K`.
pub fn directed_paths_blocked(g: &MixedGraph, j: VertexSet, k: VertexSet, l: VertexSet) -> bool {
    let mut seen = l.difference(k);
    let mut stack: Vec<usize> = seen.iter().collect();
    while let Some(x) = stack.pop() {
        if j.contains(x) {
            return false;
        }
        for c in g.children(x).difference(k).iter() {
            if !seen.contains(c) {
                seen.insert(c);
                stack.push(c);
            }
        }
    }
    true
}

/// `V_J(v_K, v_L) = V_J(v_K)` at every noise point of positive probability.
pub fn verify_no_direct_effect(
    s: &EquationSystem,
    j: VertexSet,
    k: VertexSet,
    l: VertexSet,
) -> Result<VerifyReport> {
    let g = &s.graph;
    if !j.union(k).union(l).is_subset(g.all()) {
        return Err(Error::UnknownVertex("vertex outside graph".into()));
    }
    if !j.is_disjoint(k) || !j.is_disjoint(l) || !k.is_disjoint(l) {
        return Err(Error::OverlappingSets);
    }
    if !directed_paths_blocked(g, j, k, l) {
        return Err(Error::Precondition(format!(
            "a directed path from {} to {} avoids {}",
            g.format_set(l),
            g.format_set(j),
            g.format_set(k)
        )));
    }
    let mut r = VerifyReport::new(Property::NoDirectEffect);
    let (ks, ls) = (s.space.subspace(k), s.space.subspace(l));
    for (idx, p) in s.noise.probs().iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let e = s.noise.space().decode(idx);
        for ki in 0..ks.cells() {
            let base: Intervention = k.iter().zip(ks.decode(ki)).collect();
            let w = s.evaluate(&e, &base);
            for li in 0..ls.cells() {
                let mut both = base.clone();
                both.extend(l.iter().zip(ls.decode(li)));
                let w2 = s.evaluate(&e, &both);
                r.checked += 1;
                if j.iter().any(|v| w[v] != w2[v]) {
                    r.fail(
                        format!(
                            "{} under {} differs from {}",
                            g.format_set(j),
                            describe(g, &both),
                            describe(g, &base)
                        ),
                        noise_witness(s, idx),
                        1.0,
                    );
                }
            }
        }
    }
    Ok(r)
}

/// Global Markov property of `V(v_I)` with respect to the SWIG.
pub fn verify_swig_markov(s: &EquationSystem, intervention: &Intervention) -> Result<CheckReport> {
    let set: VertexSet = intervention.keys().copied().collect();
    let law = s.po_distribution(intervention)?;
    check_gm(&swig(&s.graph, set), &law, 0.0)
}

/// Compares the kernel from fixing `set` in the induced law against the
/// potential-outcome margins `V_{-J}(v_J)`, for every assignment of `set`.
/// With `all_orders`, every fixable permutation is checked, and the kernels
/// are compared on the slices where both are defined.
pub fn verify_fixing_identity(
    s: &EquationSystem,
    set: VertexSet,
    all_orders: bool,
) -> Result<VerifyReport> {
    let g = &s.graph;
    let orders = if all_orders {
        fixable_permutations(g, set)?
    } else {
        vec![canonical_order(g, set)?]
    };
    if orders.is_empty() {
        return Err(Error::SetNotFixable(g.format_set(set)));
    }
    let start = CondGraph::new(g)?;
    let base = Kernel::from_joint(s.induced_joint());
    let fspace = s.space.subspace(set);
    let rest = g.all().difference(set);
    let mut r = VerifyReport::new(Property::FixingIdentity);
    let mut first: Option<Kernel<Rational>> = None;
    for order in &orders {
        let (kernel, _) = base.fix_sequence(&start, order)?;
        let label: Vec<&str> = order.iter().map(|&v| g.label(v)).collect();
        for fi in 0..fspace.cells() {
            let values = fspace.decode(fi);
            let Some(slice) = kernel.slice(&values) else {
                r.skipped_slices += 1;
                continue;
            };
            let iv: Intervention = set.iter().zip(values.iter().copied()).collect();
            let po = s.po_distribution(&iv)?.marginal(rest);
            r.checked += 1;
            if slice != po {
                let magnitude = slice
                    .probs()
                    .iter()
                    .zip(po.probs())
                    .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
                    .fold(0.0, f64::max);
                r.fail(
                    format!(
                        "fixing along [{}] differs from the law of {} under {}",
                        label.join(", "),
                        g.format_set(rest),
                        describe(g, &iv)
                    ),
                    set.iter()
                        .map(|v| g.label(v).to_string())
                        .zip(values)
                        .collect(),
                    magnitude,
                );
            }
        }
        match &first {
            None => first = Some(kernel),
            Some(k0) => {
                r.checked += 1;
                if !k0.agrees_where_defined(&kernel, 0.0) {
                    r.fail(
                        format!(
                            "fixing along [{}] differs from the canonical order",
                            label.join(", ")
                        ),
                        BTreeMap::new(),
                        1.0,
                    );
                }
            }
        }
    }
    Ok(r)
}

/// Draws a system on `g` from the clique-latent construction.
///
/// Latents sit on every singleton and on every maximal bidirected clique with
/// at least two members, each with `noise_card` values and a random dyadic
/// law. `E_j` is the tuple of the latents of cliques containing `j`; the
/// functions are uniform random lookup tables into `{0, ..., var_card - 1}`.
pub fn generate_system(
    g: &MixedGraph,
    seed: u64,
    noise_card: usize,
    var_card: usize,
) -> Result<EquationSystem> {
    g.require_acyclic()?;
    if noise_card == 0 || var_card == 0 {
        return Err(Error::Precondition("cardinalities must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n();
    let mut cliques: Vec<VertexSet> = (0..n).map(VertexSet::singleton).collect();
    cliques.extend(
        enumerate_bidirected_cliques(g, CliqueScope::Maximal)
            .into_iter()
            .filter(|c| c.len() > 1),
    );
    let laws: Vec<Vec<Rational>> = cliques
        .iter()
        .map(|_| dyadic_law(&mut rng, noise_card))
        .collect();
    let member_of: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            (0..cliques.len())
                .filter(|&c| cliques[c].contains(j))
                .collect()
        })
        .collect();
    let mut noise_cards = Vec::with_capacity(n);
    let mut cells: u128 = 1;
    for m in &member_of {
        let card = (noise_card as u128)
            .checked_pow(m.len() as u32)
            .unwrap_or(u128::MAX);
        cells = cells.saturating_mul(card);
        if cells > MAX_CELLS {
            return Err(Error::StateSpaceTooLarge(cells));
        }
        noise_cards.push(card as usize);
    }
    let latent_cells = (noise_card as u128).saturating_pow(cliques.len() as u32);
    if latent_cells > MAX_CELLS {
        return Err(Error::StateSpaceTooLarge(latent_cells));
    }
    let noise_space = StateSpace::new(
        g.labels()
            .iter()
            .zip(&noise_cards)
            .map(|(l, &c)| (format!("E_{l}"), c))
            .collect(),
    )?;
    let latent_space = StateSpace::new(
        (0..cliques.len())
            .map(|c| (format!("c{c}"), noise_card))
            .collect(),
    )?;
    let mut probs = vec![Rational::zero(); noise_space.cells()];
    for li in 0..latent_space.cells() {
        let lat = latent_space.decode(li);
        let p = lat
            .iter()
            .enumerate()
            .fold(Rational::one(), |acc, (c, &x)| acc * laws[c][x].clone());
        let e: Vec<usize> = member_of
            .iter()
            .map(|m| m.iter().fold(0, |acc, &c| acc * noise_card + lat[c]))
            .collect();
        let idx = noise_space.encode(&e);
        probs[idx] = probs[idx].clone() + p;
    }
    let noise = JointTable::new(noise_space, probs)?;
    let functions = (0..n)
        .map(|j| {
            let rows: usize = g.parents(j).iter().map(|_| var_card).product();
            (0..rows * noise_cards[j])
                .map(|_| rng.gen_range(0..var_card))
                .collect()
        })
        .collect();
    EquationSystem::unchecked(g.clone(), vec![var_card; n], noise, functions)
}

/// A system on a DAG whose induced law is exactly `t`: independent noise per
/// vertex and inverse-CDF lookup tables.
pub fn system_from_dag_table(g: &MixedGraph, t: &JointTable<Rational>) -> Result<EquationSystem> {
    if !g.is_dag() {
        return Err(Error::NotDag);
    }
    t.space().require_matches(g)?;
    let space = t.space();
    let n = g.n();
    let mut noise_laws = Vec::with_capacity(n);
    let mut functions = Vec::with_capacity(n);
    for j in 0..n {
        let pa = g.parents(j);
        let fam = t.marginal(pa.with(j));
        let pspace = space.subspace(pa);
        let card = space.card(j);
        // Conditional CDFs of v_j for every parent row.
        let cdfs: Vec<Vec<Rational>> = (0..pspace.cells())
            .map(|row| {
                let cells: Vec<Rational> = (0..card)
                    .map(|x| fam.probs()[row * card + x].clone())
                    .collect();
                let total = cells.iter().cloned().fold(Rational::zero(), |a, b| a + b);
                if total.is_zero() {
                    // Unreachable parent row: always the first value.
                    return vec![Rational::one(); card];
                }
                let mut acc = Rational::zero();
                cells
                    .iter()
                    .map(|c| {
                        acc = acc.clone() + c.clone() / total.clone();
                        acc.clone()
                    })
                    .collect()
            })
            .collect();
        let mut breaks: Vec<Rational> = cdfs.iter().flatten().cloned().collect();
        breaks.push(Rational::zero());
        breaks.sort();
        breaks.dedup();
        let atoms: Vec<(Rational, Rational)> = breaks
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        noise_laws.push(
            atoms
                .iter()
                .map(|(a, b)| b.clone() - a.clone())
                .collect::<Vec<_>>(),
        );
        let mut f = Vec::with_capacity(pspace.cells() * atoms.len());
        for cdf in &cdfs {
            for (lo, _) in &atoms {
                f.push(cdf.iter().position(|c| c > lo).unwrap_or(card - 1));
            }
        }
        functions.push(f);
    }
    let noise_space = StateSpace::new(
        g.labels()
            .iter()
            .zip(&noise_laws)
            .map(|(l, law)| (format!("E_{l}"), law.len()))
            .collect(),
    )?;
    let mut probs = Vec::with_capacity(noise_space.cells());
    for idx in 0..noise_space.cells() {
        let e = noise_space.decode(idx);
        probs.push(e.iter().enumerate().fold(Rational::one(), |acc, (j, &x)| {
            acc * noise_laws[j][x].clone()
        }));
    }
    let noise = JointTable::new(noise_space, probs)?;
    EquationSystem::unchecked(g.clone(), space.cards(), noise, functions)
}
