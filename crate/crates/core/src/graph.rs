//! Structural properties of the reaction graph.
//!
//! Vertices are complexes (indexed by their position in
//! [`ReactionNetwork::complexes`]) and edges are reactions. Whenever a
//! choice between equally short paths exists, the path whose complex index
//! sequence is lexicographically smallest wins, so results are
//! reproducible.

use std::collections::{BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::lp::{self, LpOutcome, Q};
use crate::network::{Complex, Reaction, ReactionNetwork};

/// Reactions split into inflows `0 -> S_i`, outflows `S_i -> 0` and the rest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowDecomposition {
    pub core_reactions: Vec<usize>,
    pub inflow_reactions: Vec<usize>,
    pub outflow_reactions: Vec<usize>,
    pub inflow_species: BTreeSet<usize>,
    pub outflow_species: BTreeSet<usize>,
}

/// A strictly positive integer vector `w` with `w . (y' - y) = 0` for each
/// reaction of the set it was computed for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservationVector {
    pub weights: Vec<u64>,
}

impl ConservationVector {
    /// Exact `w . (y' - y)`.
    pub fn dot_change(&self, reaction: &Reaction) -> i128 {
        self.weights
            .iter()
            .zip(reaction.net_change())
            .map(|(&w, d)| i128::from(w) * i128::from(d))
            .sum()
    }
}

fn complex_graph(network: &ReactionNetwork) -> DiGraph<(), ()> {
    let mut g = DiGraph::new();
    let nodes: Vec<_> = network.complexes().iter().map(|_| g.add_node(())).collect();
    for r in network.reactions() {
        let s = network.complex_index(&r.source).unwrap();
        let p = network.complex_index(&r.product).unwrap();
        g.add_edge(nodes[s], nodes[p], ());
    }
    g
}

/// Sorted adjacency lists over complex indices.
fn successors(network: &ReactionNetwork) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); network.complexes().len()];
    for r in network.reactions() {
        let s = network.complex_index(&r.source).unwrap();
        let p = network.complex_index(&r.product).unwrap();
        adj[s].push(p);
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Connected components of the undirected reaction graph, each sorted,
/// ordered by their smallest complex index.
pub fn linkage_classes(network: &ReactionNetwork) -> Vec<Vec<usize>> {
    let n = network.complexes().len();
    let mut uf = UnionFind::new(n);
    for r in network.reactions() {
        let s = network.complex_index(&r.source).unwrap();
        let p = network.complex_index(&r.product).unwrap();
        uf.union(s, p);
    }
    group_by_label(n, |i| uf.find(i))
}

fn group_by_label(n: usize, label: impl Fn(usize) -> usize) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut slot = std::collections::HashMap::new();
    for i in 0..n {
        let id = *slot.entry(label(i)).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[id].push(i);
    }
    classes
}

/// Strongly connected components of the reaction graph, same ordering
/// convention as [`linkage_classes`].
pub fn strong_components(network: &ReactionNetwork) -> Vec<Vec<usize>> {
    let g = complex_graph(network);
    let mut label = vec![0usize; network.complexes().len()];
    for (k, comp) in tarjan_scc(&g).into_iter().enumerate() {
        for node in comp {
            label[node.index()] = k;
        }
    }
    group_by_label(label.len(), |i| label[i])
}

/// True iff every linkage class is strongly connected, i.e. every reaction
/// lies on a directed cycle.
pub fn is_weakly_reversible(network: &ReactionNetwork) -> bool {
    let g = complex_graph(network);
    let mut label = vec![usize::MAX; network.complexes().len()];
    for (k, comp) in tarjan_scc(&g).into_iter().enumerate() {
        for node in comp {
            label[node.index()] = k;
        }
    }
    network.reactions().iter().all(|r| {
        let s = network.complex_index(&r.source).unwrap();
        let p = network.complex_index(&r.product).unwrap();
        label[s] == label[p]
    })
}

/// `2S_i` is a complex for every species.
pub fn is_double_full(network: &ReactionNetwork) -> bool {
    let d = network.dim();
    (0..d).all(|i| network.complex_index(&Complex::double(d, i)).is_some())
}

/// Shortest directed path from `start` to a complex of order at most one.
/// Returns `None` if `start` is not a complex of the network or no such
/// complex is reachable.
pub fn path_to_low_order(network: &ReactionNetwork, start: &Complex) -> Option<Vec<Complex>> {
    let start_idx = network.complex_index(start)?;
    let adj = successors(network);
    let complexes = network.complexes();
    let path = bfs(start_idx, &adj, |i| complexes[i].order() <= 1)?;
    Some(path.into_iter().map(|i| complexes[i].clone()).collect())
}

/// Breadth-first search visiting successors in ascending index order. The
/// first goal dequeued ends the lexicographically smallest shortest path.
fn bfs(start: usize, adj: &[Vec<usize>], is_goal: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        if is_goal(u) {
            let mut path = vec![u];
            let mut v = u;
            while v != start {
                v = parent[v];
                path.push(v);
            }
            path.reverse();
            return Some(path);
        }
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

/// Shortest path `S_from -> S_i1 -> ... -> S_k` with `k` in `targets`, using
/// only reactions whose source and product are both unary. A species already
/// in `targets` yields the single-node path.
pub fn unary_chain(
    network: &ReactionNetwork,
    from_species: usize,
    targets: &BTreeSet<usize>,
) -> Option<Vec<Complex>> {
    let d = network.dim();
    let mut adj = vec![Vec::new(); d];
    for r in network.reactions() {
        if let (Some(s), Some(p)) = (r.source.as_unary(), r.product.as_unary()) {
            adj[s].push(p);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let path = bfs(from_species, &adj, |i| targets.contains(&i))?;
    Some(path.into_iter().map(|i| Complex::unary(d, i)).collect())
}

pub fn flow_decomposition(network: &ReactionNetwork) -> FlowDecomposition {
    let mut fd = FlowDecomposition {
        core_reactions: Vec::new(),
        inflow_reactions: Vec::new(),
        outflow_reactions: Vec::new(),
        inflow_species: BTreeSet::new(),
        outflow_species: BTreeSet::new(),
    };
    for (k, r) in network.reactions().iter().enumerate() {
        if let (true, Some(i)) = (r.source.is_zero(), r.product.as_unary()) {
            fd.inflow_reactions.push(k);
            fd.inflow_species.insert(i);
        } else if let (Some(i), true) = (r.source.as_unary(), r.product.is_zero()) {
            fd.outflow_reactions.push(k);
            fd.outflow_species.insert(i);
        } else {
            fd.core_reactions.push(k);
        }
    }
    fd
}

fn change_matrix(dim: usize, reactions: &[Reaction]) -> Vec<Vec<Q>> {
    reactions
        .iter()
        .map(|r| {
            let v = r.net_change();
            debug_assert_eq!(v.len(), dim);
            v.into_iter().map(lp::q).collect()
        })
        .collect()
}

/// Rational basis of `{w : w . (y' - y) = 0 for every reaction}`.
pub fn conservation_basis(dim: usize, reactions: &[Reaction]) -> Vec<Vec<Q>> {
    lp::null_space(&change_matrix(dim, reactions), dim)
}

/// Decide exactly whether the reactions admit a strictly positive
/// conservation vector. The witness minimizes `sum w_i` over
/// `{w : w . (y' - y) = 0, w_i >= 1}` and is scaled to coprime integers.
pub fn find_conservation_vector(dim: usize, reactions: &[Reaction]) -> Option<ConservationVector> {
    if dim == 0 {
        return None;
    }
    if conservation_basis(dim, reactions).is_empty() {
        return None;
    }
    // w = 1 + u, u >= 0:  M u = -M 1.
    let m = change_matrix(dim, reactions);
    let b: Vec<Q> = m.iter().map(|row| -row.iter().sum::<Q>()).collect();
    let cost = vec![Q::one(); dim];
    let u = match lp::minimize(&cost, &m, &b) {
        LpOutcome::Optimal(u) => u,
        LpOutcome::Infeasible => return None,
    };
    let w: Vec<Q> = u.into_iter().map(|x| x + Q::one()).collect();
    let denom_lcm = w.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = w.iter().map(|x| (x * &denom_lcm).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let weights: Option<Vec<u64>> = ints.iter().map(|x| (x / &g).to_u64()).collect();
    let cv = ConservationVector { weights: weights? };
    debug_assert!(cv.weights.iter().all(|&x| x > 0));
    debug_assert!(reactions.iter().all(|r| cv.dot_change(r) == 0));
    Some(cv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    const EX23: &str = "\
A -> 2B
2B <-> A + D
0 -> B
B + C -> 2C
2C -> D
D -> B + C
";

    const NETWORK6: &str = "\
2A <-> A + B
A + B <-> B
A <-> 2C
2C <-> B + C
2B <-> 0
C <-> A + C
";

    fn names(net: &ReactionNetwork, path: &[Complex]) -> Vec<String> {
        path.iter().map(|c| net.complex_name(c)).collect()
    }

    #[test]
    fn example_linkage_classes() {
        let net = parse_network(EX23).unwrap();
        assert_eq!(net.dim(), 4);
        assert_eq!(net.complexes().len(), 8);
        assert_eq!(net.reactions().len(), 7);
        assert_eq!(linkage_classes(&net).len(), 3);
        assert!(!is_weakly_reversible(&net));
    }

    #[test]
    fn triangle_is_weakly_reversible() {
        let net = parse_network("A -> B\nB -> 2C\n2C -> A").unwrap();
        assert!(is_weakly_reversible(&net));
        assert!(!is_weakly_reversible(&parse_network("A -> B").unwrap()));
        assert_eq!(linkage_classes(&parse_network("A -> B").unwrap()).len(), 1);
    }

    #[test]
    fn double_full() {
        assert!(is_double_full(&parse_network(NETWORK6).unwrap()));
        let net5 = parse_network("A -> B\nB -> 2C\n2C -> A\n0 <-> A\n0 <-> B\n0 <-> C").unwrap();
        assert!(!is_double_full(&net5));
        assert_eq!(linkage_classes(&net5).len(), 1);
        let empty = ReactionNetwork::new(Vec::<String>::new(), vec![]).unwrap();
        assert!(is_double_full(&empty));
    }

    #[test]
    fn low_order_paths() {
        let net = parse_network(NETWORK6).unwrap();
        let p = path_to_low_order(&net, &net.parse_complex("2A").unwrap()).unwrap();
        assert_eq!(names(&net, &p), ["2A", "A + B", "B"]);
        let p = path_to_low_order(&net, &net.parse_complex("2B").unwrap()).unwrap();
        assert_eq!(names(&net, &p), ["2B", "0"]);
        let p = path_to_low_order(&net, &net.parse_complex("2C").unwrap()).unwrap();
        assert_eq!(names(&net, &p), ["2C", "A"]);
        let closed = parse_network("2A <-> A + B").unwrap();
        assert!(path_to_low_order(&closed, &closed.parse_complex("2A").unwrap()).is_none());
    }

    #[test]
    fn unary_chains() {
        let enzyme = parse_network(
            "S <-> P\n0 -> P\n0 -> E\n0 <-> SE\nS + E <-> SE\nSE <-> E + P\nE -> 0\nP -> 0",
        )
        .unwrap();
        let s = enzyme.species_index("S").unwrap();
        let targets: BTreeSet<usize> = ["P", "E", "SE"]
            .iter()
            .map(|n| enzyme.species_index(n).unwrap())
            .collect();
        let p = unary_chain(&enzyme, s, &targets).unwrap();
        assert_eq!(names(&enzyme, &p), ["S", "P"]);
        let e = enzyme.species_index("E").unwrap();
        assert_eq!(unary_chain(&enzyme, e, &targets).unwrap().len(), 1);
        let net = parse_network("A + B -> C").unwrap();
        assert!(unary_chain(&net, 0, &BTreeSet::from([2])).is_none());
    }

    #[test]
    fn flows() {
        let net5 = parse_network("A -> B\nB -> 2C\n2C -> A\n0 <-> A\n0 <-> B\n0 <-> C").unwrap();
        let fd = flow_decomposition(&net5);
        assert_eq!(fd.core_reactions, vec![0, 1, 2]);
        assert_eq!(fd.inflow_species, BTreeSet::from([0, 1, 2]));
        assert_eq!(fd.outflow_species, BTreeSet::from([0, 1, 2]));
        let none = parse_network("A -> B").unwrap();
        let fd = flow_decomposition(&none);
        assert_eq!(fd.core_reactions, vec![0]);
        assert!(fd.inflow_species.is_empty() && fd.outflow_species.is_empty());
    }

    #[test]
    fn conservation_vectors() {
        let tri = parse_network("A -> B\nB -> 2C\n2C -> A").unwrap();
        let w = find_conservation_vector(3, tri.reactions()).unwrap();
        assert_eq!(w.weights, vec![2, 2, 1]);

        // Species order S, E, SE, P.
        let core = parse_network("S + E <-> SE\nSE <-> E + P\nS <-> P").unwrap();
        let w = find_conservation_vector(4, core.reactions()).unwrap();
        assert_eq!(w.weights, vec![1, 1, 2, 1]);

        let dimer = parse_network("2S1 -> S1").unwrap();
        assert!(find_conservation_vector(1, dimer.reactions()).is_none());

        let open = parse_network("0 -> A").unwrap();
        assert!(find_conservation_vector(1, open.reactions()).is_none());
    }

    #[test]
    fn conservation_needs_positivity() {
        // Kernel is spanned by (1, -1): nonzero but no positive member.
        let net = parse_network("A -> 0").unwrap();
        assert!(find_conservation_vector(1, net.reactions()).is_none());
        let net = parse_network("A + B -> 0\nA -> 2A + B").unwrap();
        assert!(!conservation_basis(2, net.reactions()).is_empty());
        assert!(find_conservation_vector(2, net.reactions()).is_none());
    }
}
