//! Conditional ADMGs and the graphical fixing operator.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::set::VertexSet;

/// An ADMG whose vertices are split into random and fixed ones.
///
/// No real edge has an arrowhead at a fixed vertex. Bidirected edges among
/// fixed vertices added by [`tilde_fix`] live in a separate overlay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CondGraph {
    graph: MixedGraph,
    fixed: VertexSet,
    overlay: BTreeSet<(usize, usize)>,
}

impl CondGraph {
    /// Every vertex random.
    pub fn new(g: &MixedGraph) -> Result<Self> {
        g.require_acyclic()?;
        Ok(CondGraph {
            graph: g.clone(),
            fixed: VertexSet::EMPTY,
            overlay: BTreeSet::new(),
        })
    }

    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn fixed(&self) -> VertexSet {
        self.fixed
    }

    pub fn random(&self) -> VertexSet {
        self.graph.all().difference(self.fixed)
    }

    pub fn overlay(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.overlay.iter().copied()
    }

    fn check_random(&self, v: usize) -> Result<()> {
        if v >= self.graph.n() {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        if self.fixed.contains(v) {
            return Err(Error::AlreadyFixed(self.graph.label(v).to_string()));
        }
        Ok(())
    }

    /// No strict descendant of `v` shares its district.
    pub fn is_fixable(&self, v: usize) -> Result<bool> {
        self.check_random(v)?;
        let de = self.graph.strict_descendants(v)?;
        let dis = self.graph.district(v)?;
        Ok(de.is_disjoint(dis))
    }

    /// Fixes `v`, deleting every edge with an arrowhead at `v`.
    pub fn fix(&self, v: usize) -> Result<CondGraph> {
        if !self.is_fixable(v)? {
            return Err(Error::NotFixable(self.graph.label(v).to_string()));
        }
        Ok(self.fix_unchecked(v))
    }

    fn fix_unchecked(&self, v: usize) -> CondGraph {
        let g = &self.graph;
        let graph = MixedGraph::new(
            g.labels().to_vec(),
            g.directed_edges().filter(|&(_, h)| h != v),
            g.bidirected_edges().filter(|&(a, b)| a != v && b != v),
        )
        .expect("edge subset of a valid graph")
        .with_canonical(g.is_canonical());
        CondGraph {
            graph,
            fixed: self.fixed.with(v),
            overlay: self.overlay.clone(),
        }
    }

    /// Fixes the vertices of `seq` in order.
    pub fn fix_sequence(&self, seq: &[usize]) -> Result<CondGraph> {
        let mut c = self.clone();
        for &v in seq {
            c = c.fix(v)?;
        }
        Ok(c)
    }

    /// Markov background of a random vertex in the current graph.
    pub fn markov_background(&self, v: usize) -> Result<VertexSet> {
        self.check_random(v)?;
        self.graph.markov_background(v)
    }

    /// The graph used for m-separation: real edges plus overlay edges.
    pub fn separation_graph(&self) -> MixedGraph {
        self.graph
            .with_extra_bidirected(self.overlay.iter().copied())
    }
}

/// Fixes `set` along its canonical order, then joins its members by overlay
/// bidirected edges.
pub fn tilde_fix(g: &MixedGraph, set: VertexSet) -> Result<CondGraph> {
    let order = canonical_order(g, set)?;
    let mut c = CondGraph::new(g)?.fix_sequence(&order)?;
    for a in set.iter() {
        for b in set.iter().filter(|&b| b > a) {
            c.overlay.insert((a, b));
        }
    }
    Ok(c)
}

fn completion(
    c: &CondGraph,
    target: VertexSet,
    dead: &mut HashSet<VertexSet>,
    out: &mut Vec<usize>,
) -> bool {
    let rest = target.difference(c.fixed);
    if rest.is_empty() {
        return true;
    }
    if dead.contains(&c.fixed) {
        return false;
    }
    for v in rest.iter() {
        if c.is_fixable(v).unwrap_or(false) {
            out.push(v);
            if completion(&c.fix_unchecked(v), target, dead, out) {
                return true;
            }
            out.pop();
        }
    }
    dead.insert(c.fixed);
    false
}

/// Lexicographically smallest fixable permutation of `set`.
pub fn canonical_order(g: &MixedGraph, set: VertexSet) -> Result<Vec<usize>> {
    if !set.is_subset(g.all()) {
        return Err(Error::UnknownVertex("vertex outside graph".into()));
    }
    let c = CondGraph::new(g)?;
    let mut out = Vec::new();
    if completion(&c, set, &mut HashSet::new(), &mut out) {
        Ok(out)
    } else {
        Err(Error::SetNotFixable(g.format_set(set)))
    }
}

/// Every fixable permutation of `set`, in lexicographic order.
pub fn fixable_permutations(g: &MixedGraph, set: VertexSet) -> Result<Vec<Vec<usize>>> {
    fn rec(c: &CondGraph, target: VertexSet, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let rest = target.difference(c.fixed);
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for v in rest.iter() {
            if c.is_fixable(v).unwrap_or(false) {
                cur.push(v);
                rec(&c.fix_unchecked(v), target, cur, out);
                cur.pop();
            }
        }
    }
    let c = CondGraph::new(g)?;
    let mut out = Vec::new();
    rec(&c, set, &mut Vec::new(), &mut out);
    Ok(out)
}

/// A set admitting a fixable permutation, with its canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixableSet {
    pub set: VertexSet,
    pub order: Vec<usize>,
}

/// All fixable sets, ordered by size and then by sorted member indices.
pub fn fixable_sets(g: &MixedGraph) -> Result<Vec<FixableSet>> {
    let start = CondGraph::new(g)?;
    // The graph state after fixing depends only on the fixed set.
    let mut states: HashMap<VertexSet, CondGraph> = HashMap::new();
    let mut stack = vec![start.clone()];
    states.insert(VertexSet::EMPTY, start);
    while let Some(c) = stack.pop() {
        for v in c.random().iter() {
            let next = c.fixed.with(v);
            if states.contains_key(&next) || !c.is_fixable(v)? {
                continue;
            }
            let n = c.fix_unchecked(v);
            states.insert(next, n.clone());
            stack.push(n);
        }
    }
    let mut sets: Vec<VertexSet> = states.into_keys().collect();
    sets.sort_by_key(|s| (s.len(), s.iter().collect::<Vec<_>>()));
    sets.into_iter()
        .map(|set| {
            Ok(FixableSet {
                set,
                order: canonical_order(g, set)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;
    use crate::graph::tests::mixed4;

    pub(crate) const VERMA: &str = "vertices: V1 V2 V3 V4\nV1 -> V2\nV2 -> V3\nV3 -> V4\nV2 <-> V4";

    #[test]
    fn fixability_on_mixed4() {
        let g = mixed4();
        let c = CondGraph::new(&g).unwrap();
        let idx = |s: &str| g.index_of(s).unwrap();
        assert!(!c.is_fixable(idx("A")).unwrap());
        assert!(c.is_fixable(idx("B")).unwrap());
        let f = c.fix(idx("B")).unwrap();
        assert_eq!(
            f.graph().to_string(),
            "vertices: A B C D\nB -> C\nB -> D\nA <-> C\nC <-> D\n"
        );
        assert_eq!(f.fixed(), g.set_of(&["B"]).unwrap());
        assert_eq!(f.fix(idx("B")), Err(Error::AlreadyFixed("B".into())));
        assert_eq!(c.fix(idx("A")), Err(Error::NotFixable("A".into())));
    }

    #[test]
    fn isolated_vertex_fix() {
        let g = parse_graph("vertices: X").unwrap();
        let c = CondGraph::new(&g).unwrap().fix(0).unwrap();
        assert_eq!(c.random(), VertexSet::EMPTY);
        assert_eq!(c.graph().directed_count() + c.graph().bidirected_count(), 0);
    }

    #[test]
    fn tilde_fix_examples() {
        let g = mixed4();
        let b = g.set_of(&["B"]).unwrap();
        let t = tilde_fix(&g, b).unwrap();
        assert_eq!(t.overlay().count(), 0);
        assert_eq!(t, CondGraph::new(&g).unwrap().fix(1).unwrap());
        assert_eq!(tilde_fix(&g, VertexSet::EMPTY).unwrap().graph(), &g);

        let v = parse_graph(VERMA).unwrap();
        let t = tilde_fix(&v, v.set_of(&["V1", "V3"]).unwrap()).unwrap();
        assert_eq!(t.overlay().collect::<Vec<_>>(), vec![(0, 2)]);
        assert!(t.separation_graph().has_bidirected(0, 2));
        assert!(!t.graph().has_bidirected(0, 2));
    }

    #[test]
    fn fixable_sets_of_mixed4() {
        let g = mixed4();
        let sets: Vec<String> = fixable_sets(&g)
            .unwrap()
            .iter()
            .map(|f| g.format_set(f.set))
            .collect();
        for s in ["{}", "{B}", "{C}", "{B, C}", "{B, C, D}", "{A, B, C, D}"] {
            assert!(sets.contains(&s.to_string()), "{s} missing from {sets:?}");
        }
        assert!(!sets.contains(&"{A}".to_string()));
        // A becomes fixable once C is fixed.
        assert!(sets.contains(&"{A, C}".to_string()));
    }

    #[test]
    fn dag_sets_all_fixable() {
        let g = parse_graph("vertices: A B C\nA -> B\nB -> C\nA -> C").unwrap();
        assert_eq!(fixable_sets(&g).unwrap().len(), 8);
    }

    #[test]
    fn canonical_order_is_lexicographic_first() {
        let g = mixed4();
        let all = g.all();
        let perms = fixable_permutations(&g, all).unwrap();
        assert!(!perms.is_empty());
        assert_eq!(canonical_order(&g, all).unwrap(), perms[0]);
        for p in &perms {
            assert_eq!(
                CondGraph::new(&g).unwrap().fix_sequence(p).unwrap(),
                CondGraph::new(&g).unwrap().fix_sequence(&perms[0]).unwrap()
            );
        }
        assert!(matches!(
            canonical_order(&g, g.set_of(&["A"]).unwrap()),
            Err(Error::SetNotFixable(_))
        ));
    }
}
