//! Graph-level operators: latent projection, latent-variable expansions,
//! bidirected cliques, single-world intervention graphs and augmentation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::set::{VertexSet, MAX_VERTICES};
use crate::walk::SeparationQuery;

/// Latent projection of `g` onto `keep`.
///
/// `a -> b` survives when a directed path from `a` to `b` has no interior
/// vertex in `keep`; `a <-> b` appears when a confounding arc between them
/// has no interior vertex in `keep`. Vertex order of `keep` is preserved.
pub fn marginalize(g: &MixedGraph, keep: VertexSet) -> Result<MixedGraph> {
    g.require_acyclic()?;
    if !keep.is_subset(g.all()) {
        return Err(Error::UnknownVertex("vertex outside graph".into()));
    }
    let hidden = g.all().difference(keep);
    // Hidden vertices with a directed path into v through hidden vertices only.
    let latent_ancestors: Vec<VertexSet> = (0..g.n())
        .map(|v| {
            if !keep.contains(v) {
                return VertexSet::EMPTY;
            }
            let mut seen = VertexSet::EMPTY;
            let mut stack = vec![v];
            while let Some(x) = stack.pop() {
                for p in g.parents(x).intersection(hidden).iter() {
                    if !seen.contains(p) {
                        seen.insert(p);
                        stack.push(p);
                    }
                }
            }
            seen
        })
        .collect();

    let (labels, map) = g.relabel_map(keep);
    let mut directed = Vec::new();
    let mut bidirected = Vec::new();
    for k in keep.iter() {
        let sources = g
            .parents(k)
            .union(g.parents_of_set(latent_ancestors[k]))
            .intersection(keep);
        for j in sources.iter() {
            directed.push((map[j], map[k]));
        }
    }
    let kept: Vec<usize> = keep.iter().collect();
    for (a, &j) in kept.iter().enumerate() {
        let top_j = latent_ancestors[j].with(j);
        for &k in &kept[a + 1..] {
            let top_k = latent_ancestors[k].with(k);
            let common = !latent_ancestors[j].is_disjoint(latent_ancestors[k]);
            let joined = common || top_j.iter().any(|x| !g.siblings(x).is_disjoint(top_k));
            if joined {
                bidirected.push((map[j], map[k]));
            }
        }
    }
    Ok(MixedGraph::new(labels, directed, bidirected)?.with_canonical(g.is_canonical()))
}

/// Which bidirected cliques to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CliqueScope {
    /// Every nonempty set whose members are pairwise bidirected-adjacent.
    #[default]
    All,
    /// As `All`, without singletons.
    NonSingleton,
    /// Inclusion-maximal cliques only.
    Maximal,
}

/// Bidirected cliques ordered by size, then lexicographically by vertex index.
pub fn enumerate_bidirected_cliques(g: &MixedGraph, scope: CliqueScope) -> Vec<VertexSet> {
    let mut out = Vec::new();
    fn grow(g: &MixedGraph, clique: VertexSet, candidates: VertexSet, out: &mut Vec<VertexSet>) {
        for v in candidates.iter() {
            let next = clique.with(v);
            out.push(next);
            let rest = candidates
                .intersection(g.siblings(v))
                .iter()
                .filter(|&u| u > v)
                .collect();
            grow(g, next, rest, out);
        }
    }
    grow(g, VertexSet::EMPTY, g.all(), &mut out);
    let key = |s: &VertexSet| (s.len(), s.iter().collect::<Vec<_>>());
    out.sort_by_key(key);
    match scope {
        CliqueScope::All => out,
        CliqueScope::NonSingleton => out.into_iter().filter(|c| c.len() > 1).collect(),
        CliqueScope::Maximal => {
            let all = out.clone();
            out.into_iter()
                .filter(|c| !all.iter().any(|d| d != c && c.is_subset(*d)))
                .collect()
        }
    }
}

fn with_latents(
    g: &MixedGraph,
    latents: Vec<(String, VertexSet)>,
    keep_bidirected: Vec<(usize, usize)>,
) -> Result<MixedGraph> {
    let n = g.n();
    if n + latents.len() > MAX_VERTICES {
        return Err(Error::TooManyVertices(n + latents.len()));
    }
    let mut labels = g.labels().to_vec();
    let mut directed: Vec<(usize, usize)> = g.directed_edges().collect();
    for (i, (name, targets)) in latents.into_iter().enumerate() {
        labels.push(name);
        directed.extend(targets.iter().map(|t| (n + i, t)));
    }
    MixedGraph::new(labels, directed, keep_bidirected)
}

/// Replaces every bidirected edge `j <-> k` by a latent parent `E_<j>_<k>`.
pub fn expand_pairwise(g: &MixedGraph) -> Result<MixedGraph> {
    g.require_acyclic()?;
    let latents = g
        .bidirected_edges()
        .map(|(a, b)| {
            (
                format!("E_{}_{}", g.label(a), g.label(b)),
                VertexSet::singleton(a).with(b),
            )
        })
        .collect();
    with_latents(g, latents, Vec::new())
}

/// Replaces every bidirected clique in `scope` by a latent parent `E_c<i>`,
/// numbered from 1 in clique order.
pub fn expand_clique(g: &MixedGraph, scope: CliqueScope) -> Result<MixedGraph> {
    g.require_acyclic()?;
    let latents = enumerate_bidirected_cliques(g, scope)
        .into_iter()
        .enumerate()
        .map(|(i, c)| (format!("E_c{}", i + 1), c))
        .collect();
    with_latents(g, latents, Vec::new())
}

/// Gives every vertex a noise parent `E_<j>` that inherits its bidirected edges.
pub fn expand_noise(g: &MixedGraph) -> Result<MixedGraph> {
    g.require_acyclic()?;
    let n = g.n();
    let latents = (0..n)
        .map(|v| (format!("E_{}", g.label(v)), VertexSet::singleton(v)))
        .collect();
    let bi = g.bidirected_edges().map(|(a, b)| (n + a, n + b)).collect();
    with_latents(g, latents, bi)
}

/// Removes every directed edge whose tail is in `intervened`.
pub fn swig(g: &MixedGraph, intervened: VertexSet) -> MixedGraph {
    MixedGraph::new(
        g.labels().to_vec(),
        g.directed_edges().filter(|(t, _)| !intervened.contains(*t)),
        g.bidirected_edges(),
    )
    .expect("edge subset of a valid graph")
    .with_canonical(g.is_canonical())
}

/// Display labels `V(i)` / `V(i=1)` for the vertices of a SWIG.
pub fn swig_labels(
    g: &MixedGraph,
    intervened: VertexSet,
    assignment: Option<&BTreeMap<usize, usize>>,
) -> Vec<String> {
    let tag: Vec<String> = intervened
        .iter()
        .map(|i| {
            let name = g.label(i).to_lowercase();
            match assignment.and_then(|a| a.get(&i)) {
                Some(val) => format!("{name}={val}"),
                None => name,
            }
        })
        .collect();
    let tag = tag.join(",");
    g.labels()
        .iter()
        .map(|l| {
            if intervened.is_empty() {
                l.clone()
            } else {
                format!("{l}({tag})")
            }
        })
        .collect()
}

/// A simple undirected graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    labels: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<VertexSet>,
}

impl UndirectedGraph {
    pub fn new(labels: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = labels.len();
        let mut set = BTreeSet::new();
        let mut adjacency = vec![VertexSet::EMPTY; n];
        for (a, b) in edges {
            assert!(a < n && b < n, "edge endpoint out of range");
            if a == b {
                continue;
            }
            set.insert((a.min(b), a.max(b)));
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        UndirectedGraph {
            labels,
            edges: set,
            adjacency,
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, v: usize) -> VertexSet {
        self.adjacency[v]
    }

    /// True iff every path from `J` to `K` passes through `L`.
    pub fn separated(&self, q: &SeparationQuery) -> bool {
        let mut seen = q.j;
        let mut stack: Vec<usize> = q.j.iter().collect();
        while let Some(x) = stack.pop() {
            for y in self.adjacency[x].difference(q.l).iter() {
                if q.k.contains(y) {
                    return false;
                }
                if !seen.contains(y) {
                    seen.insert(y);
                    stack.push(y);
                }
            }
        }
        true
    }
}

impl fmt::Display for UndirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vertices:")?;
        for l in &self.labels {
            write!(f, " {l}")?;
        }
        writeln!(f)?;
        for &(a, b) in &self.edges {
            writeln!(f, "{} -- {}", self.labels[a], self.labels[b])?;
        }
        Ok(())
    }
}

/// Joins every pair of distinct collider-connected vertices.
pub fn augment(g: &MixedGraph) -> UndirectedGraph {
    let edges: Vec<(usize, usize)> = (0..g.n())
        .flat_map(|v| {
            g.markov_boundary(v)
                .expect("vertex in range")
                .iter()
                .filter(move |&u| u > v)
                .map(move |u| (v, u))
                .collect::<Vec<_>>()
        })
        .collect();
    UndirectedGraph::new(g.labels().to_vec(), edges)
}

/// Undirected separation; fails on overlapping sets.
pub fn undirected_separated(u: &UndirectedGraph, q: &SeparationQuery) -> Result<bool> {
    let q = SeparationQuery::new(q.j, q.k, q.l)?;
    Ok(u.separated(&q))
}

/// m-separation decided through the augmented ancestral marginal.
pub fn m_separated_by_augmentation(g: &MixedGraph, q: &SeparationQuery) -> Result<bool> {
    let q = SeparationQuery::new(q.j, q.k, q.l)?;
    let anc = g.ancestral_closure(q.j.union(q.k).union(q.l))?;
    let sub = marginalize(g, anc)?;
    let (_, map) = g.relabel_map(anc);
    let remap = |s: VertexSet| s.iter().map(|v| map[v]).collect::<VertexSet>();
    let local = SeparationQuery {
        j: remap(q.j),
        k: remap(q.k),
        l: remap(q.l),
    };
    Ok(augment(&sub).separated(&local))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;
    use crate::graph::tests::mixed4;

    pub(crate) const CLIQUES6: &str = "vertices: V1 V2 V3 V4 V5 V6\n\
        V1 <-> V2\nV1 <-> V3\nV2 <-> V4\nV4 <-> V5\nV4 -> V3\nV4 -> V6";

    fn clique_codes(g: &MixedGraph, scope: CliqueScope) -> Vec<String> {
        enumerate_bidirected_cliques(g, scope)
            .into_iter()
            .map(|c| {
                c.iter()
                    .map(|v| g.label(v).trim_start_matches('V'))
                    .collect::<String>()
            })
            .collect()
    }

    #[test]
    fn fork_projects_to_bidirected_edge() {
        let g = parse_graph("vertices: V1 V2 V3\nV2 -> V1\nV2 -> V3").unwrap();
        let m = marginalize(&g, g.set_of(&["V1", "V3"]).unwrap()).unwrap();
        assert_eq!(m.to_string(), "vertices: V1 V3\nV1 <-> V3\n");
    }

    #[test]
    fn projection_creates_cliques() {
        let g = parse_graph(CLIQUES6).unwrap();
        let keep = g.set_of(&["V1", "V2", "V3", "V5", "V6"]).unwrap();
        let m = marginalize(&g, keep).unwrap();
        let edges: Vec<String> = m
            .bidirected_edges()
            .map(|(a, b)| format!("{}{}", m.label(a), m.label(b)))
            .collect();
        assert_eq!(
            edges,
            ["V1V2", "V1V3", "V2V3", "V2V6", "V3V5", "V3V6", "V5V6"]
        );
        assert_eq!(m.directed_count(), 0);
    }

    #[test]
    fn identity_projection() {
        let g = mixed4();
        assert_eq!(marginalize(&g, g.all()).unwrap(), g);
    }

    #[test]
    fn clique_lists_before_and_after_projection() {
        let g = parse_graph(CLIQUES6).unwrap();
        assert_eq!(
            clique_codes(&g, CliqueScope::All).join(", "),
            "1, 2, 3, 4, 5, 6, 12, 13, 24, 45"
        );
        let m = marginalize(&g, g.set_of(&["V1", "V2", "V3", "V5", "V6"]).unwrap()).unwrap();
        assert_eq!(
            clique_codes(&m, CliqueScope::All).join(", "),
            "1, 2, 3, 5, 6, 12, 13, 23, 26, 35, 36, 56, 123, 236, 356"
        );
    }

    #[test]
    fn triangle_cliques() {
        let g = parse_graph("vertices: X Y Z\nX <-> Y\nY <-> Z\nX <-> Z").unwrap();
        assert_eq!(enumerate_bidirected_cliques(&g, CliqueScope::All).len(), 7);
        assert_eq!(
            enumerate_bidirected_cliques(&g, CliqueScope::Maximal).len(),
            1
        );
        assert_eq!(
            enumerate_bidirected_cliques(&g, CliqueScope::NonSingleton).len(),
            4
        );
    }

    #[test]
    fn clique_expansion_of_mixed4() {
        let g = mixed4();
        let e = expand_clique(&g, CliqueScope::NonSingleton).unwrap();
        assert_eq!(
            e.to_string(),
            "vertices: A B C D E_c1 E_c2\nA -> B\nB -> C\nB -> D\n\
             E_c1 -> A\nE_c1 -> C\nE_c2 -> C\nE_c2 -> D\n"
        );
        let full = expand_clique(&g, CliqueScope::All).unwrap();
        // Four singleton latents precede the two pair latents.
        assert_eq!(full.n(), 10);
        assert!(full.is_dag());
        assert_eq!(marginalize(&full, g.all()).unwrap(), g);
    }

    #[test]
    fn noise_expansion_of_mixed4() {
        let g = mixed4();
        let e = expand_noise(&g).unwrap();
        assert_eq!(
            e.to_string(),
            "vertices: A B C D E_A E_B E_C E_D\nA -> B\nB -> C\nB -> D\n\
             E_A -> A\nE_B -> B\nE_C -> C\nE_D -> D\nE_A <-> E_C\nE_C <-> E_D\n"
        );
        assert!(e.is_unconfounded());
        let dag = parse_graph("vertices: A B\nA -> B").unwrap();
        let e = expand_noise(&dag).unwrap();
        assert_eq!(e.bidirected_count(), 0);
        assert!(e.is_dag());
    }

    #[test]
    fn pairwise_expansion() {
        let g = mixed4();
        let e = expand_pairwise(&g).unwrap();
        assert_eq!(e.labels(), ["A", "B", "C", "D", "E_A_C", "E_C_D"]);
        assert!(e.is_dag());
        assert_eq!(marginalize(&e, g.all()).unwrap(), g);
    }

    #[test]
    fn expansion_name_collision() {
        let g = parse_graph("vertices: A E_A").unwrap();
        assert_eq!(expand_noise(&g), Err(Error::DuplicateVertex("E_A".into())));
    }

    #[test]
    fn swig_examples() {
        let g = mixed4();
        let s = swig(&g, g.set_of(&["B"]).unwrap());
        assert_eq!(
            s.to_string(),
            "vertices: A B C D\nA -> B\nA <-> C\nC <-> D\n"
        );
        assert_eq!(swig(&g, VertexSet::EMPTY), g);
        let chain = parse_graph("vertices: A B C\nA -> B\nB -> C").unwrap();
        assert_eq!(
            swig(&chain, VertexSet::singleton(0)).to_string(),
            "vertices: A B C\nB -> C\n"
        );
        let labels = swig_labels(
            &g,
            g.set_of(&["B"]).unwrap(),
            Some(&BTreeMap::from([(1, 1)])),
        );
        assert_eq!(labels, ["A(b=1)", "B(b=1)", "C(b=1)", "D(b=1)"]);
    }

    #[test]
    fn augmentation_examples() {
        let collider = parse_graph("vertices: A B C\nA -> C\nB -> C").unwrap();
        let u = augment(&collider);
        assert_eq!(u.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
        let g = mixed4();
        assert_eq!(augment(&g).edges().count(), 6);
        let empty = parse_graph("vertices: A B C").unwrap();
        assert_eq!(augment(&empty).edges().count(), 0);
    }

    #[test]
    fn undirected_separation() {
        let path = UndirectedGraph::new(vec!["A".into(), "B".into(), "C".into()], [(0, 1), (1, 2)]);
        let q = SeparationQuery::new(
            VertexSet::singleton(0),
            VertexSet::singleton(2),
            VertexSet::singleton(1),
        )
        .unwrap();
        assert!(undirected_separated(&path, &q).unwrap());
        let q = SeparationQuery::new(
            VertexSet::singleton(0),
            VertexSet::singleton(2),
            VertexSet::EMPTY,
        )
        .unwrap();
        assert!(!undirected_separated(&path, &q).unwrap());

        let g = mixed4();
        let q = SeparationQuery::new(
            g.set_of(&["A"]).unwrap(),
            g.set_of(&["D"]).unwrap(),
            g.set_of(&["B", "C"]).unwrap(),
        )
        .unwrap();
        assert!(!augment(&g).separated(&q));
    }
}
