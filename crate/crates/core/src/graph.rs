//! Directed mixed graphs, graph-class membership and the text file format.
//!
//! A [`MixedGraph`] holds a vertex list, directed edges and bidirected edges.
//! Canonical graphs carry an implicit bidirected loop at every vertex; loops
//! are never stored.
//!
//! File format:
//!
//! ```text
//! # comment
//! vertices: A B C D
//! A -> B
//! A <-> C
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::{VertexSet, MAX_VERTICES};

/// Graph classes a directed mixed graph can belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GraphClass {
    #[serde(rename = "ADMG")]
    Admg,
    #[serde(rename = "DAG")]
    Dag,
    Bidirected,
    Unconfounded,
}

impl fmt::Display for GraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphClass::Admg => "ADMG",
            GraphClass::Dag => "DAG",
            GraphClass::Bidirected => "Bidirected",
            GraphClass::Unconfounded => "Unconfounded",
        })
    }
}

/// A vertex sequence in which every directed edge points forward.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopologicalOrder(Vec<usize>);

impl TopologicalOrder {
    /// Validates `sequence` as a topological order of `g`.
    pub fn new(g: &MixedGraph, sequence: Vec<usize>) -> Result<Self> {
        let n = g.n();
        if sequence.len() != n {
            return Err(Error::InvalidOrder(format!(
                "expected {n} vertices, got {}",
                sequence.len()
            )));
        }
        let mut position = vec![usize::MAX; n];
        for (pos, &v) in sequence.iter().enumerate() {
            if v >= n || position[v] != usize::MAX {
                return Err(Error::InvalidOrder(
                    "not a permutation of the vertices".into(),
                ));
            }
            position[v] = pos;
        }
        for (tail, head) in g.directed_edges() {
            if position[tail] > position[head] {
                return Err(Error::InvalidOrder(format!(
                    "{} -> {} points backwards",
                    g.label(tail),
                    g.label(head)
                )));
            }
        }
        Ok(TopologicalOrder(sequence))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// A directed mixed graph `(V, D, B)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedGraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    directed: BTreeSet<(usize, usize)>,
    // Stored as (min, max); loops are never stored.
    bidirected: BTreeSet<(usize, usize)>,
    canonical: bool,
    parents: Vec<VertexSet>,
    children: Vec<VertexSet>,
    siblings: Vec<VertexSet>,
}

pub(crate) fn is_valid_label(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl MixedGraph {
    /// Builds a canonical graph from labels and index-based edge lists.
    pub fn new(
        labels: Vec<String>,
        directed: impl IntoIterator<Item = (usize, usize)>,
        bidirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = labels.len();
        if n > MAX_VERTICES {
            return Err(Error::TooManyVertices(n));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if !is_valid_label(l) {
                return Err(Error::InvalidLabel(l.clone()));
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(l.clone()));
            }
        }
        let mut d = BTreeSet::new();
        for (a, b) in directed {
            if a >= n || b >= n {
                return Err(Error::UnknownVertex(format!("#{}", a.max(b))));
            }
            if a == b {
                return Err(Error::SelfLoop(labels[a].clone()));
            }
            d.insert((a, b));
        }
        let mut bi = BTreeSet::new();
        for (a, b) in bidirected {
            if a >= n || b >= n {
                return Err(Error::UnknownVertex(format!("#{}", a.max(b))));
            }
            if a != b {
                bi.insert((a.min(b), a.max(b)));
            }
        }
        let mut parents = vec![VertexSet::EMPTY; n];
        let mut children = vec![VertexSet::EMPTY; n];
        let mut siblings = vec![VertexSet::EMPTY; n];
        for &(a, b) in &d {
            children[a].insert(b);
            parents[b].insert(a);
        }
        for &(a, b) in &bi {
            siblings[a].insert(b);
            siblings[b].insert(a);
        }
        Ok(MixedGraph {
            labels,
            index,
            directed: d,
            bidirected: bi,
            canonical: true,
            parents,
            children,
            siblings,
        })
    }

    /// Convenience constructor from label-based edge lists.
    pub fn from_labels(
        vertices: &[&str],
        directed: &[(&str, &str)],
        bidirected: &[(&str, &str)],
    ) -> Result<Self> {
        let labels: Vec<String> = vertices.iter().map(|s| s.to_string()).collect();
        let lookup = |s: &str| {
            vertices
                .iter()
                .position(|v| *v == s)
                .ok_or_else(|| Error::UnknownVertex(s.to_string()))
        };
        let d = directed
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>>>()?;
        let b = bidirected
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>>>()?;
        MixedGraph::new(labels, d, b)
    }

    /// Same edges, with the implicit bidirected loops switched on or off.
    pub fn with_canonical(mut self, canonical: bool) -> Self {
        self.canonical = canonical;
        self
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn all(&self) -> VertexSet {
        VertexSet::full(self.n())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn set_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<VertexSet> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    /// Labels of `set` in vertex order.
    pub fn names_of(&self, set: VertexSet) -> Vec<String> {
        set.iter().map(|v| self.labels[v].clone()).collect()
    }

    /// Labels of `set` sorted lexicographically.
    pub fn sorted_names(&self, set: VertexSet) -> Vec<String> {
        let mut names = self.names_of(set);
        names.sort();
        names
    }

    /// `{A, B}` with lexicographically sorted labels.
    pub fn format_set(&self, set: VertexSet) -> String {
        format!("{{{}}}", self.sorted_names(set).join(", "))
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    /// Bidirected edges as `(a, b)` with `a < b`.
    pub fn bidirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bidirected.iter().copied()
    }

    pub fn directed_count(&self) -> usize {
        self.directed.len()
    }

    pub fn bidirected_count(&self) -> usize {
        self.bidirected.len()
    }

    pub fn has_directed(&self, tail: usize, head: usize) -> bool {
        self.directed.contains(&(tail, head))
    }

    pub fn has_bidirected(&self, a: usize, b: usize) -> bool {
        self.bidirected.contains(&(a.min(b), a.max(b)))
    }

    pub fn parents(&self, v: usize) -> VertexSet {
        self.parents[v]
    }

    pub fn children(&self, v: usize) -> VertexSet {
        self.children[v]
    }

    /// Vertices joined to `v` by a bidirected edge (loops excluded).
    pub fn siblings(&self, v: usize) -> VertexSet {
        self.siblings[v]
    }

    pub fn parents_of_set(&self, set: VertexSet) -> VertexSet {
        set.iter()
            .fold(VertexSet::EMPTY, |acc, v| acc.union(self.parents[v]))
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_sort().is_some()
    }

    /// Kahn's algorithm, smallest index first.
    pub fn topological_sort(&self) -> Option<Vec<usize>> {
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in self.children[v].iter() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Vertices with no incoming directed edge.
    pub fn exogenous_vertices(&self) -> VertexSet {
        (0..self.n())
            .filter(|&v| self.parents[v].is_empty())
            .collect()
    }

    /// Bidirected edges between distinct vertices join exogenous vertices only.
    pub fn is_unconfounded(&self) -> bool {
        let exo = self.exogenous_vertices();
        self.bidirected
            .iter()
            .all(|&(a, b)| exo.contains(a) && exo.contains(b))
    }

    pub fn is_dag(&self) -> bool {
        self.bidirected.is_empty() && self.is_acyclic()
    }

    pub fn is_bidirected(&self) -> bool {
        self.directed.is_empty()
    }

    pub fn classify(&self) -> BTreeSet<GraphClass> {
        let mut classes = BTreeSet::new();
        let acyclic = self.is_acyclic();
        if acyclic {
            classes.insert(GraphClass::Admg);
            if self.bidirected.is_empty() {
                classes.insert(GraphClass::Dag);
            }
        }
        if self.directed.is_empty() {
            classes.insert(GraphClass::Bidirected);
        }
        if self.is_unconfounded() {
            classes.insert(GraphClass::Unconfounded);
        }
        classes
    }

    pub(crate) fn require_acyclic(&self) -> Result<()> {
        if self.is_acyclic() {
            Ok(())
        } else {
            Err(Error::Cyclic)
        }
    }

    /// Up to `limit` topological orders, in lexicographic order of vertex indices.
    pub fn topological_orders(&self, limit: usize) -> Result<Vec<TopologicalOrder>> {
        self.require_acyclic()?;
        let n = self.n();
        let mut out = Vec::new();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut placed = VertexSet::EMPTY;
        let mut current = Vec::with_capacity(n);
        self.orders_rec(limit, &mut indeg, &mut placed, &mut current, &mut out);
        Ok(out)
    }

    fn orders_rec(
        &self,
        limit: usize,
        indeg: &mut Vec<usize>,
        placed: &mut VertexSet,
        current: &mut Vec<usize>,
        out: &mut Vec<TopologicalOrder>,
    ) {
        if out.len() >= limit {
            return;
        }
        if current.len() == self.n() {
            out.push(TopologicalOrder(current.clone()));
            return;
        }
        for v in 0..self.n() {
            if placed.contains(v) || indeg[v] != 0 {
                continue;
            }
            placed.insert(v);
            current.push(v);
            for c in self.children[v].iter() {
                indeg[c] -= 1;
            }
            self.orders_rec(limit, indeg, placed, current, out);
            for c in self.children[v].iter() {
                indeg[c] += 1;
            }
            current.pop();
            placed.remove(v);
            if out.len() >= limit {
                return;
            }
        }
    }

    /// Subgraph induced by `keep`; vertex order is preserved.
    pub fn induced_subgraph(&self, keep: VertexSet) -> MixedGraph {
        let (labels, map) = self.relabel_map(keep);
        let d = self
            .directed
            .iter()
            .filter(|(a, b)| keep.contains(*a) && keep.contains(*b))
            .map(|&(a, b)| (map[a], map[b]));
        let bi = self
            .bidirected
            .iter()
            .filter(|(a, b)| keep.contains(*a) && keep.contains(*b))
            .map(|&(a, b)| (map[a], map[b]));
        MixedGraph::new(labels, d, bi)
            .expect("subgraph of a valid graph")
            .with_canonical(self.canonical)
    }

    pub(crate) fn relabel_map(&self, keep: VertexSet) -> (Vec<String>, Vec<usize>) {
        let mut map = vec![usize::MAX; self.n()];
        let mut labels = Vec::with_capacity(keep.len());
        for (new, old) in keep.iter().enumerate() {
            map[old] = new;
            labels.push(self.labels[old].clone());
        }
        (labels, map)
    }

    /// The graph with all directed edges dropped.
    pub fn bidirected_component(&self) -> MixedGraph {
        MixedGraph::new(
            self.labels.clone(),
            std::iter::empty(),
            self.bidirected.iter().copied(),
        )
        .expect("valid graph")
        .with_canonical(self.canonical)
    }

    /// The graph with extra bidirected edges added.
    pub(crate) fn with_extra_bidirected(
        &self,
        extra: impl IntoIterator<Item = (usize, usize)>,
    ) -> MixedGraph {
        MixedGraph::new(
            self.labels.clone(),
            self.directed.iter().copied(),
            self.bidirected.iter().copied().chain(extra),
        )
        .expect("valid graph")
        .with_canonical(self.canonical)
    }
}

/// Parses the graph text format into a canonical graph.
pub fn parse_graph(text: &str) -> Result<MixedGraph> {
    let mut labels: Option<Vec<String>> = None;
    let mut directed = Vec::new();
    let mut bidirected = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |message: String| Error::Syntax {
            line: line_no,
            message,
        };
        let Some(names) = &labels else {
            let rest = line
                .strip_prefix("vertices:")
                .ok_or_else(|| syntax("expected `vertices:` line".into()))?;
            let mut seen = BTreeSet::new();
            let mut names = Vec::new();
            for tok in rest.split_whitespace() {
                if !is_valid_label(tok) {
                    return Err(syntax(format!("invalid vertex label `{tok}`")));
                }
                if !seen.insert(tok) {
                    return Err(Error::DuplicateVertex(tok.to_string()));
                }
                names.push(tok.to_string());
            }
            labels = Some(names);
            continue;
        };
        let (a, b, is_bi) = if let Some((a, b)) = line.split_once("<->") {
            (a, b, true)
        } else if let Some((a, b)) = line.split_once("->") {
            (a, b, false)
        } else {
            return Err(syntax(format!(
                "expected `a -> b` or `a <-> b`, got `{line}`"
            )));
        };
        let (a, b) = (a.trim(), b.trim());
        for tok in [a, b] {
            if tok.is_empty() || tok.contains(char::is_whitespace) || !is_valid_label(tok) {
                return Err(syntax(format!("malformed edge `{line}`")));
            }
        }
        let lookup = |s: &str| {
            names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| Error::UnknownVertex(s.to_string()))
        };
        let (ia, ib) = (lookup(a)?, lookup(b)?);
        if is_bi {
            bidirected.push((ia, ib));
        } else {
            if ia == ib {
                return Err(Error::SelfLoop(a.to_string()));
            }
            directed.push((ia, ib));
        }
    }
    let labels = labels.ok_or(Error::Syntax {
        line: text.lines().count().max(1),
        message: "missing `vertices:` line".into(),
    })?;
    MixedGraph::new(labels, directed, bidirected)
}

impl FromStr for MixedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_graph(s)
    }
}

impl fmt::Display for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vertices:")?;
        for l in &self.labels {
            write!(f, " {l}")?;
        }
        writeln!(f)?;
        for &(a, b) in &self.directed {
            writeln!(f, "{} -> {}", self.labels[a], self.labels[b])?;
        }
        for &(a, b) in &self.bidirected {
            writeln!(f, "{} <-> {}", self.labels[a], self.labels[b])?;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const MIXED4: &str = "vertices: A B C D\nA -> B\nB -> C\nB -> D\nA <-> C\nC <-> D";

    pub(crate) fn mixed4() -> MixedGraph {
        parse_graph(MIXED4).unwrap()
    }

    #[test]
    fn parses_minimal_graph() {
        let g = parse_graph("vertices: A B\nA -> B").unwrap();
        assert_eq!(g.n(), 2);
        assert!(g.has_directed(0, 1));
        assert_eq!(g.directed_count(), 1);
        assert_eq!(g.bidirected_count(), 0);
        assert!(g.is_canonical());
    }

    #[test]
    fn parses_mixed4() {
        let g = mixed4();
        assert_eq!(g.labels(), ["A", "B", "C", "D"]);
        let d: Vec<_> = g.directed_edges().collect();
        assert_eq!(d, vec![(0, 1), (1, 2), (1, 3)]);
        let b: Vec<_> = g.bidirected_edges().collect();
        assert_eq!(b, vec![(0, 2), (2, 3)]);
    }

    #[test]
    fn rejects_self_loop_and_bad_input() {
        assert_eq!(
            parse_graph("vertices: A\nA -> A"),
            Err(Error::SelfLoop("A".into()))
        );
        assert_eq!(
            parse_graph("vertices: A B\nA -> C"),
            Err(Error::UnknownVertex("C".into()))
        );
        assert_eq!(
            parse_graph("vertices: A A"),
            Err(Error::DuplicateVertex("A".into()))
        );
        match parse_graph("# header\nvertices: A B\nA => B") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_graph("A -> B"),
            Err(Error::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn bidirected_pairs_are_deduplicated() {
        let g = parse_graph("vertices: A B\n  B<->A\nA <-> B\n# c\nA<->A").unwrap();
        assert_eq!(g.bidirected_count(), 1);
        assert!(g.has_bidirected(1, 0));
    }

    #[test]
    fn acyclicity() {
        assert!(mixed4().is_acyclic());
        let cyc = parse_graph("vertices: A B\nA -> B\nB -> A").unwrap();
        assert!(!cyc.is_acyclic());
        assert!(parse_graph("vertices: X Y Z").unwrap().is_acyclic());
    }

    #[test]
    fn classification() {
        use GraphClass::*;
        let g = mixed4();
        assert_eq!(g.classify(), BTreeSet::from([Admg]));
        let unconfounded = parse_graph(
            "vertices: A B C D E_A E_B E_C E_D\nE_A -> A\nE_B -> B\nE_C -> C\nE_D -> D\n\
             A -> B\nB -> C\nB -> D\nE_A <-> E_C\nE_C <-> E_D",
        )
        .unwrap();
        assert_eq!(
            unconfounded.classify(),
            BTreeSet::from([Admg, Unconfounded])
        );
        let bi = parse_graph("vertices: A B\nA <-> B").unwrap();
        assert_eq!(
            bi.classify(),
            BTreeSet::from([Admg, Bidirected, Unconfounded])
        );
        let dag = parse_graph("vertices: A B\nA -> B").unwrap();
        assert_eq!(dag.classify(), BTreeSet::from([Admg, Dag, Unconfounded]));
    }

    #[test]
    fn exogenous() {
        let g = mixed4();
        assert_eq!(g.exogenous_vertices(), g.set_of(&["A"]).unwrap());
        let single = parse_graph("vertices: X").unwrap();
        assert_eq!(single.exogenous_vertices(), VertexSet::singleton(0));
    }

    #[test]
    fn topological_order_enumeration() {
        let chain = parse_graph("vertices: A B C\nA -> B\nB -> C").unwrap();
        let orders = chain.topological_orders(10).unwrap();
        assert_eq!(orders.len(), 1);
        assert_eq!(orders[0].as_slice(), &[0, 1, 2]);

        let g = mixed4();
        let orders = g.topological_orders(10).unwrap();
        // A, B first; then C and D in either order.
        assert_eq!(orders.len(), 2);
        assert_eq!(orders[0].as_slice(), &[0, 1, 2, 3]);
        assert_eq!(orders[1].as_slice(), &[0, 1, 3, 2]);

        let iso = parse_graph("vertices: X Y").unwrap();
        assert_eq!(iso.topological_orders(10).unwrap().len(), 2);
        assert_eq!(iso.topological_orders(1).unwrap().len(), 1);

        let cyc = parse_graph("vertices: A B\nA -> B\nB -> A").unwrap();
        assert_eq!(cyc.topological_orders(3), Err(Error::Cyclic));
    }

    #[test]
    fn order_validation() {
        let g = mixed4();
        assert!(TopologicalOrder::new(&g, vec![0, 1, 3, 2]).is_ok());
        assert!(TopologicalOrder::new(&g, vec![1, 0, 2, 3]).is_err());
        assert!(TopologicalOrder::new(&g, vec![0, 1, 2]).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let g = mixed4();
        let text = g.to_string();
        assert_eq!(
            text,
            "vertices: A B C D\nA -> B\nB -> C\nB -> D\nA <-> C\nC <-> D\n"
        );
        assert_eq!(parse_graph(&text).unwrap(), g);
    }
}
