//! Random graphs and tables for property tests and the relation harness.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dist::{JointTable, Rational, Scalar, StateSpace};
use crate::error::Result;
use crate::graph::MixedGraph;
use crate::set::VertexSet;
use crate::transform::{enumerate_bidirected_cliques, CliqueScope};

/// Random positive law with denominator a power of two.
pub fn dyadic_law<R: Rng>(rng: &mut R, card: usize) -> Vec<Rational> {
    let denom = (4 * card).next_power_of_two() as u64;
    let mut cuts: Vec<u64> = Vec::with_capacity(card + 1);
    cuts.push(0);
    while cuts.len() < card {
        let c = rng.gen_range(1..denom);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.push(denom);
    cuts.sort_unstable();
    cuts.windows(2)
        .map(|w| Rational::from_ratio(w[1] - w[0], denom))
        .collect()
}

fn labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("V{i}")).collect()
}

/// Directed edges follow a random hidden order, so vertex order is not
/// always topological.
pub fn random_admg<R: Rng>(rng: &mut R, n: usize, p_dir: f64, p_bi: f64) -> MixedGraph {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut d = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p_dir) {
                d.push((perm[i], perm[j]));
            }
            if rng.gen_bool(p_bi) {
                b.push((perm[i], perm[j]));
            }
        }
    }
    MixedGraph::new(labels(n), d, b).expect("valid random graph")
}

pub fn random_dag<R: Rng>(rng: &mut R, n: usize, p_dir: f64) -> MixedGraph {
    random_admg(rng, n, p_dir, 0.0)
}

pub fn random_bidirected<R: Rng>(rng: &mut R, n: usize, p_bi: f64) -> MixedGraph {
    random_admg(rng, n, 0.0, p_bi)
}

/// Bidirected edges only among a random nonempty exogenous set.
pub fn random_unconfounded<R: Rng>(rng: &mut R, n: usize, p_dir: f64, p_bi: f64) -> MixedGraph {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let n_exo = rng.gen_range(1..=n);
    let mut d = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if j < n_exo {
                if rng.gen_bool(p_bi) {
                    b.push((perm[i], perm[j]));
                }
            } else if rng.gen_bool(p_dir) {
                d.push((perm[i], perm[j]));
            }
        }
    }
    MixedGraph::new(labels(n), d, b).expect("valid random graph")
}

/// A table from the clique-latent model: a latent per maximal bidirected
/// clique of size at least two, and random positive conditionals
/// `p(v_j | v_pa(j), latents of cliques containing j)`.
pub fn clique_latent_table<R: Rng>(
    rng: &mut R,
    g: &MixedGraph,
    card: usize,
    latent_card: usize,
) -> Result<JointTable<Rational>> {
    g.require_acyclic()?;
    let space = StateSpace::for_graph(g, card)?;
    let cliques: Vec<VertexSet> = enumerate_bidirected_cliques(g, CliqueScope::Maximal)
        .into_iter()
        .filter(|c| c.len() > 1)
        .collect();
    let latent_space = StateSpace::new(
        (0..cliques.len())
            .map(|c| (format!("c{c}"), latent_card))
            .collect(),
    )?;
    let latent_laws: Vec<Vec<Rational>> = cliques
        .iter()
        .map(|_| dyadic_law(rng, latent_card))
        .collect();
    let n = g.n();
    let member_of: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            (0..cliques.len())
                .filter(|&c| cliques[c].contains(j))
                .collect()
        })
        .collect();
    // conditionals[j][row] over values of v_j; rows index (parents, latents).
    let conditionals: Vec<Vec<Vec<Rational>>> = (0..n)
        .map(|j| {
            let rows =
                card.pow(g.parents(j).len() as u32) * latent_card.pow(member_of[j].len() as u32);
            (0..rows).map(|_| dyadic_law(rng, card)).collect()
        })
        .collect();
    let mut probs = vec![Rational::zero(); space.cells()];
    for li in 0..latent_space.cells() {
        let lat = latent_space.decode(li);
        let pl = lat
            .iter()
            .enumerate()
            .fold(Rational::one(), |acc, (c, &x)| {
                acc * latent_laws[c][x].clone()
            });
        for (vi, slot) in probs.iter_mut().enumerate() {
            let v = space.decode(vi);
            let mut p = pl.clone();
            for j in 0..n {
                let row = g.parents(j).iter().fold(0, |acc, q| acc * card + v[q]);
                let row = member_of[j]
                    .iter()
                    .fold(row, |acc, &c| acc * latent_card + lat[c]);
                p *= conditionals[j][row][v[j]].clone();
            }
            *slot = slot.clone() + p;
        }
    }
    JointTable::new(space, probs)
}

/// Strictly positive table with independent random weights.
pub fn random_table<R: Rng>(rng: &mut R, space: StateSpace) -> JointTable<Rational> {
    let weights = (0..space.cells())
        .map(|_| Rational::from_ratio(rng.gen_range(1..=16), 1))
        .collect();
    JointTable::normalized(space, weights).expect("positive weights")
}

/// Adds a random amount to one cell and renormalizes.
pub fn perturb<R: Rng>(rng: &mut R, t: &JointTable<Rational>) -> JointTable<Rational> {
    let mut probs = t.probs().to_vec();
    let i = rng.gen_range(0..probs.len());
    probs[i] = probs[i].clone() + Rational::from_ratio(rng.gen_range(1..=8), 16);
    JointTable::normalized(t.space().clone(), probs).expect("positive mass")
}
