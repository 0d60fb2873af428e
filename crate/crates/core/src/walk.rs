//! Walk algebra on directed mixed graphs: m-separation, arcs, districts,
//! Markov boundaries and backgrounds, ancestral closure.
//!
//! Blocking is walk-based: a walk is blocked by `L` when it has a collider
//! outside `L` or a non-collider inside `L`. Queries run as reachability over
//! states `(vertex, mark at arrival)`, so every vertex is visited at most twice.
//!
//! Reflexivity: [`MixedGraph::ancestors`] and [`MixedGraph::descendants`]
//! contain the vertex itself; the `strict_` variants do not.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::set::VertexSet;

/// Edge-end mark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mark {
    Tail,
    Head,
}

/// A disjoint triple `(J, K, L)` with `J` and `K` nonempty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeparationQuery {
    pub j: VertexSet,
    pub k: VertexSet,
    pub l: VertexSet,
}

impl SeparationQuery {
    pub fn new(j: VertexSet, k: VertexSet, l: VertexSet) -> Result<Self> {
        if j.is_empty() || k.is_empty() {
            return Err(Error::EmptyQuerySet);
        }
        if !j.is_disjoint(k) || !j.is_disjoint(l) || !k.is_disjoint(l) {
            return Err(Error::OverlappingSets);
        }
        Ok(SeparationQuery { j, k, l })
    }

    pub fn swapped(self) -> Self {
        SeparationQuery {
            j: self.k,
            k: self.j,
            l: self.l,
        }
    }
}

/// One traversed edge: `from` and `to` with the marks at each end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub from: usize,
    pub from_mark: Mark,
    pub to_mark: Mark,
    pub to: usize,
}

/// A nonempty sequence of connected steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    pub steps: Vec<Step>,
}

impl Walk {
    pub fn start(&self) -> usize {
        self.steps[0].from
    }

    pub fn end(&self) -> usize {
        self.steps[self.steps.len() - 1].to
    }

    /// Interior vertices with their collider status.
    pub fn interior(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.steps.windows(2).map(|w| {
            let collider = w[0].to_mark == Mark::Head && w[1].from_mark == Mark::Head;
            (w[0].to, collider)
        })
    }

    pub fn is_blocked_by(&self, l: VertexSet) -> bool {
        self.interior()
            .any(|(v, collider)| collider != l.contains(v))
    }

    pub fn format(&self, g: &MixedGraph) -> String {
        let mut s = g.label(self.start()).to_string();
        for st in &self.steps {
            let edge = match (st.from_mark, st.to_mark) {
                (Mark::Tail, Mark::Head) => "->",
                (Mark::Head, Mark::Tail) => "<-",
                (Mark::Head, Mark::Head) => "<->",
                (Mark::Tail, Mark::Tail) => "--",
            };
            s.push_str(&format!(" {edge} {}", g.label(st.to)));
        }
        s
    }
}

/// Every edge incident to `x`, as a step leaving `x`.
fn incident_steps(g: &MixedGraph, x: usize, include_loop: bool) -> impl Iterator<Item = Step> + '_ {
    let out = g.children(x).iter().map(move |c| Step {
        from: x,
        from_mark: Mark::Tail,
        to_mark: Mark::Head,
        to: c,
    });
    let inc = g.parents(x).iter().map(move |p| Step {
        from: x,
        from_mark: Mark::Head,
        to_mark: Mark::Tail,
        to: p,
    });
    let bi = g.siblings(x).iter().map(move |s| Step {
        from: x,
        from_mark: Mark::Head,
        to_mark: Mark::Head,
        to: s,
    });
    let lp = (include_loop && g.is_canonical()).then_some(Step {
        from: x,
        from_mark: Mark::Head,
        to_mark: Mark::Head,
        to: x,
    });
    out.chain(inc).chain(bi).chain(lp)
}

/// Reachability over `(vertex, arrival mark)` states. `admissible(x, arrival,
/// departure)` decides whether a walk may pass through interior vertex `x`.
fn reach_from(
    g: &MixedGraph,
    starts: VertexSet,
    first_step: impl Fn(&Step) -> bool,
    admissible: impl Fn(usize, Mark, Mark) -> bool,
) -> VertexSet {
    let n = g.n();
    let mut seen = vec![[false; 2]; n];
    let mut queue = VecDeque::new();
    let slot = |m: Mark| (m == Mark::Head) as usize;
    for s in starts.iter() {
        for st in incident_steps(g, s, false).filter(|st| first_step(st)) {
            if !seen[st.to][slot(st.to_mark)] {
                seen[st.to][slot(st.to_mark)] = true;
                queue.push_back((st.to, st.to_mark));
            }
        }
    }
    while let Some((x, arrival)) = queue.pop_front() {
        for st in incident_steps(g, x, false) {
            if !admissible(x, arrival, st.from_mark) {
                continue;
            }
            if !seen[st.to][slot(st.to_mark)] {
                seen[st.to][slot(st.to_mark)] = true;
                queue.push_back((st.to, st.to_mark));
            }
        }
    }
    (0..n).filter(|&v| seen[v][0] || seen[v][1]).collect()
}

impl MixedGraph {
    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("#{v}")))
        }
    }

    /// Vertices reachable from `j` by a walk unblocked given `l`.
    pub fn m_reachable(&self, j: VertexSet, l: VertexSet) -> VertexSet {
        reach_from(
            self,
            j,
            |_| true,
            |x, arrival, departure| {
                let collider = arrival == Mark::Head && departure == Mark::Head;
                collider == l.contains(x)
            },
        )
    }

    /// True iff some walk from `J` to `K` is unblocked given `L`.
    pub fn m_connected(&self, q: &SeparationQuery) -> Result<bool> {
        let q = SeparationQuery::new(q.j, q.k, q.l)?;
        Ok(!self.m_reachable(q.j, q.l).is_disjoint(q.k))
    }

    pub fn m_separated(&self, q: &SeparationQuery) -> Result<bool> {
        self.m_connected(q).map(|c| !c)
    }

    /// Vertices joined to `v` by bidirected edges, together with `v`.
    pub fn district(&self, v: usize) -> Result<VertexSet> {
        self.check_vertex(v)?;
        Ok(self.district_within(v, self.all()))
    }

    /// District of `v` among the vertices of `within`.
    pub(crate) fn district_within(&self, v: usize, within: VertexSet) -> VertexSet {
        let mut dis = VertexSet::singleton(v);
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for s in self.siblings(x).intersection(within).iter() {
                if !dis.contains(s) {
                    dis.insert(s);
                    stack.push(s);
                }
            }
        }
        dis
    }

    /// All districts, each listed once, ordered by smallest member.
    pub fn districts(&self) -> Vec<VertexSet> {
        let mut seen = VertexSet::EMPTY;
        let mut out = Vec::new();
        for v in 0..self.n() {
            if !seen.contains(v) {
                let d = self.district_within(v, self.all());
                seen = seen.union(d);
                out.push(d);
            }
        }
        out
    }

    /// Vertices other than `v` joined to `v` by a walk whose interior
    /// vertices are all colliders.
    pub fn markov_boundary(&self, v: usize) -> Result<VertexSet> {
        self.check_vertex(v)?;
        Ok(reach_from(
            self,
            VertexSet::singleton(v),
            |_| true,
            |_, arrival, departure| arrival == Mark::Head && departure == Mark::Head,
        )
        .without(v))
    }

    /// Vertices other than `v` joined to `v` by a collider-connected walk
    /// that ends with an arrowhead at `v`.
    pub fn markov_background(&self, v: usize) -> Result<VertexSet> {
        self.check_vertex(v)?;
        Ok(reach_from(
            self,
            VertexSet::singleton(v),
            |st| st.from_mark == Mark::Head,
            |_, arrival, departure| arrival == Mark::Head && departure == Mark::Head,
        )
        .without(v))
    }

    /// True iff a collider-free walk joins `J` and `K`.
    pub fn arc_connected(&self, j: VertexSet, k: VertexSet) -> Result<bool> {
        if j.is_empty() || k.is_empty() {
            return Err(Error::EmptyQuerySet);
        }
        if !j.is_disjoint(k) {
            return Err(Error::OverlappingSets);
        }
        let reached = reach_from(
            self,
            j,
            |_| true,
            |_, arrival, departure| !(arrival == Mark::Head && departure == Mark::Head),
        );
        Ok(!reached.is_disjoint(k))
    }

    /// Ancestors of `v`, including `v`.
    pub fn ancestors(&self, v: usize) -> Result<VertexSet> {
        self.check_vertex(v)?;
        Ok(self.ancestors_of_set(VertexSet::singleton(v)))
    }

    /// Descendants of `v`, including `v`.
    pub fn descendants(&self, v: usize) -> Result<VertexSet> {
        self.check_vertex(v)?;
        Ok(self.descendants_within(v, self.all()))
    }

    /// Descendants of `v` excluding `v` itself.
    pub fn strict_descendants(&self, v: usize) -> Result<VertexSet> {
        self.descendants(v).map(|d| d.without(v))
    }

    /// Ancestors of `v` excluding `v` itself.
    pub fn strict_ancestors(&self, v: usize) -> Result<VertexSet> {
        self.ancestors(v).map(|a| a.without(v))
    }

    pub(crate) fn descendants_within(&self, v: usize, within: VertexSet) -> VertexSet {
        let mut de = VertexSet::singleton(v);
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for c in self.children(x).intersection(within).iter() {
                if !de.contains(c) {
                    de.insert(c);
                    stack.push(c);
                }
            }
        }
        de
    }

    /// `S` together with all ancestors of its members.
    pub fn ancestors_of_set(&self, s: VertexSet) -> VertexSet {
        let mut an = s;
        let mut stack: Vec<usize> = s.iter().collect();
        while let Some(x) = stack.pop() {
            for p in self.parents(x).iter() {
                if !an.contains(p) {
                    an.insert(p);
                    stack.push(p);
                }
            }
        }
        an
    }

    /// Smallest ancestral superset of `s`.
    pub fn ancestral_closure(&self, s: VertexSet) -> Result<VertexSet> {
        self.require_acyclic()?;
        Ok(self.ancestors_of_set(s))
    }

    pub fn is_ancestral(&self, s: VertexSet) -> bool {
        self.parents_of_set(s).is_subset(s)
    }
}

/// Searches for an unblocked walk from `J` to `K` given `L` by explicit
/// enumeration of walks with at most `max_len` steps, canonical loops
/// included. Exponential; meant as a test oracle.
pub fn find_unblocked_walk(g: &MixedGraph, q: &SeparationQuery, max_len: usize) -> Option<Walk> {
    let mut steps = Vec::with_capacity(max_len);
    for j in q.j.iter() {
        if extend_walk(g, q, max_len, j, None, &mut steps) {
            return Some(Walk { steps });
        }
    }
    None
}

fn extend_walk(
    g: &MixedGraph,
    q: &SeparationQuery,
    max_len: usize,
    at: usize,
    arrival: Option<Mark>,
    steps: &mut Vec<Step>,
) -> bool {
    if arrival.is_some() && q.k.contains(at) {
        return true;
    }
    if steps.len() == max_len {
        return false;
    }
    for st in incident_steps(g, at, true) {
        if let Some(arr) = arrival {
            let collider = arr == Mark::Head && st.from_mark == Mark::Head;
            if collider != q.l.contains(at) {
                continue;
            }
        }
        steps.push(st);
        if extend_walk(g, q, max_len, st.to, Some(st.to_mark), steps) {
            return true;
        }
        steps.pop();
    }
    false
}

/// Enumeration oracle for [`MixedGraph::m_connected`].
pub fn m_connected_oracle(g: &MixedGraph, q: &SeparationQuery, max_len: usize) -> bool {
    find_unblocked_walk(g, q, max_len).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;
    use crate::graph::tests::mixed4;

    fn set(g: &MixedGraph, names: &[&str]) -> VertexSet {
        g.set_of(names).unwrap()
    }

    fn query(g: &MixedGraph, j: &[&str], k: &[&str], l: &[&str]) -> SeparationQuery {
        SeparationQuery::new(set(g, j), set(g, k), set(g, l)).unwrap()
    }

    #[test]
    fn m_connection_on_mixed4() {
        let g = mixed4();
        let max = 2 * g.n();
        // A <-> C <-> D with C conditioned.
        let q = query(&g, &["A"], &["D"], &["B", "C"]);
        assert!(g.m_connected(&q).unwrap());
        assert!(m_connected_oracle(&g, &q, max));
        let q = query(&g, &["A"], &["D"], &["B"]);
        assert!(!g.m_connected(&q).unwrap());
        assert!(!m_connected_oracle(&g, &q, max));
    }

    #[test]
    fn disconnected_components_are_separated() {
        let g = parse_graph("vertices: X Y Z\nX -> Z").unwrap();
        let q = query(&g, &["X"], &["Y"], &[]);
        assert!(!g.m_connected(&q).unwrap());
        assert!(!m_connected_oracle(&g, &q, 6));
    }

    #[test]
    fn oracle_single_edge() {
        let g = parse_graph("vertices: A B\nA -> B").unwrap();
        let q = query(&g, &["A"], &["B"], &[]);
        assert!(m_connected_oracle(&g, &q, 4));
        assert!(m_connected_oracle(&g, &q, 1));
        let w = find_unblocked_walk(&g, &q, 1).unwrap();
        assert_eq!(w.format(&g), "A -> B");
    }

    #[test]
    fn overlapping_query_rejected() {
        let g = mixed4();
        let q = SeparationQuery {
            j: set(&g, &["A"]),
            k: set(&g, &["A", "B"]),
            l: VertexSet::EMPTY,
        };
        assert_eq!(g.m_connected(&q), Err(Error::OverlappingSets));
    }

    #[test]
    fn districts() {
        let g = mixed4();
        assert_eq!(g.district(0).unwrap(), set(&g, &["A", "C", "D"]));
        assert_eq!(g.district(1).unwrap(), set(&g, &["B"]));
        let iso = parse_graph("vertices: X").unwrap();
        assert_eq!(iso.district(0).unwrap(), VertexSet::singleton(0));
        assert!(g.district(9).is_err());
        assert_eq!(g.districts().len(), 2);
    }

    #[test]
    fn markov_boundary_examples() {
        let collider = parse_graph("vertices: A B C\nA -> C\nB -> C").unwrap();
        assert_eq!(
            collider.markov_boundary(0).unwrap(),
            set(&collider, &["B", "C"])
        );
        let g = mixed4();
        assert_eq!(g.markov_boundary(1).unwrap(), set(&g, &["A", "C", "D"]));
        let iso = parse_graph("vertices: X").unwrap();
        assert!(iso.markov_boundary(0).unwrap().is_empty());
    }

    #[test]
    fn markov_background_examples() {
        let chain = parse_graph("vertices: A B C\nA -> B\nB -> C").unwrap();
        assert_eq!(chain.markov_background(2).unwrap(), set(&chain, &["B"]));
        let g = mixed4();
        assert_eq!(g.markov_background(2).unwrap(), set(&g, &["A", "B", "D"]));
        // A <-> C puts an arrowhead at A: C directly, D via collider C, B via B -> C <-> A.
        assert_eq!(g.markov_background(0).unwrap(), set(&g, &["B", "C", "D"]));
    }

    #[test]
    fn ancestral_closure_examples() {
        let g = mixed4();
        assert_eq!(
            g.ancestral_closure(set(&g, &["D"])).unwrap(),
            set(&g, &["A", "B", "D"])
        );
        assert_eq!(g.ancestral_closure(g.all()).unwrap(), g.all());
        assert_eq!(
            g.ancestral_closure(set(&g, &["A"])).unwrap(),
            set(&g, &["A"])
        );
    }

    #[test]
    fn arc_connection() {
        let collider = parse_graph("vertices: A B C\nA -> C\nB -> C").unwrap();
        assert!(!collider
            .arc_connected(set(&collider, &["A"]), set(&collider, &["B"]))
            .unwrap());
        let g = mixed4();
        assert!(g.arc_connected(set(&g, &["A"]), set(&g, &["D"])).unwrap());
        let iso = parse_graph("vertices: X Y").unwrap();
        assert!(!iso
            .arc_connected(VertexSet::singleton(0), VertexSet::singleton(1))
            .unwrap());
    }

    #[test]
    fn family_queries() {
        let g = mixed4();
        assert_eq!(g.descendants(1).unwrap(), set(&g, &["B", "C", "D"]));
        assert_eq!(g.strict_descendants(1).unwrap(), set(&g, &["C", "D"]));
        assert_eq!(g.parents(2), set(&g, &["B"]));
        assert_eq!(g.ancestors(0).unwrap(), set(&g, &["A"]));
        assert_eq!(g.children(1), set(&g, &["C", "D"]));
        assert!(g.ancestors(7).is_err());
    }
}
