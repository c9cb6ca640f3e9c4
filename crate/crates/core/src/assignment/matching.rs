use std::collections::VecDeque;

use serde::Serialize;

use crate::channel::OrderedChannels;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Bipartite users-to-channels graph; user `n` is adjacent to channel `k`
/// iff `k` is one of `n`'s preferred channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceGraph {
    n_right: usize,
    adj: Vec<Vec<usize>>,
}

impl PreferenceGraph {
    /// Adjacency lists are sorted and deduplicated.
    pub fn new(n_right: usize, mut adj: Vec<Vec<usize>>) -> Result<Self> {
        for (u, list) in adj.iter_mut().enumerate() {
            if let Some(&k) = list.iter().find(|&&k| k >= n_right) {
                return Err(Error::InvalidInput(format!(
                    "user {u} adjacent to channel {k}, but only {n_right} channels exist"
                )));
            }
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { n_right, adj })
    }

    /// The M-best graph: every user linked to its `m` best channels.
    pub fn from_best_sets<T: Scalar>(ordered: &OrderedChannels<T>, m: usize) -> Result<Self> {
        let adj = (0..ordered.n_users())
            .map(|n| ordered.best_m_set(n, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ordered.n_channels(), adj)
    }

    pub fn complete(n_left: usize, n_right: usize) -> Self {
        Self {
            n_right,
            adj: vec![(0..n_right).collect(); n_left],
        }
    }

    pub fn n_left(&self) -> usize {
        self.adj.len()
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn right_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_right];
        self.adj.iter().flatten().for_each(|&k| deg[k] += 1);
        deg
    }

    pub fn has_edge(&self, u: usize, k: usize) -> bool {
        self.adj[u].binary_search(&k).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Matching {
    pub size: usize,
    /// Channel matched to each user, if any.
    pub left_to_right: Vec<Option<usize>>,
}

impl Matching {
    pub fn is_perfect(&self, graph: &PreferenceGraph) -> bool {
        self.size == graph.n_left() && self.size == graph.n_right()
    }
}

const FREE: usize = usize::MAX;

/// Maximum-cardinality matching (Hopcroft-Karp, O(E sqrt V)).
pub fn maximum_matching(graph: &PreferenceGraph) -> Matching {
    let n_left = graph.n_left();
    let mut match_l = vec![FREE; n_left];
    let mut match_r = vec![FREE; graph.n_right()];
    let mut dist = vec![0usize; n_left];
    let mut size = 0;

    while bfs(graph, &match_l, &match_r, &mut dist) {
        for u in 0..n_left {
            if match_l[u] == FREE && dfs(graph, u, &mut match_l, &mut match_r, &mut dist) {
                size += 1;
            }
        }
    }

    Matching {
        size,
        left_to_right: match_l.into_iter().map(|k| (k != FREE).then_some(k)).collect(),
    }
}

/// Layer free users by alternating-path distance; true if some augmenting path exists.
fn bfs(graph: &PreferenceGraph, match_l: &[usize], match_r: &[usize], dist: &mut [usize]) -> bool {
    let mut queue = VecDeque::new();
    for u in 0..graph.n_left() {
        if match_l[u] == FREE {
            dist[u] = 0;
            queue.push_back(u);
        } else {
            dist[u] = usize::MAX;
        }
    }
    let mut found = false;
    while let Some(u) = queue.pop_front() {
        for &k in graph.neighbors(u) {
            let w = match_r[k];
            if w == FREE {
                found = true;
            } else if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    found
}

fn dfs(
    graph: &PreferenceGraph,
    u: usize,
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for &k in graph.neighbors(u) {
        let w = match_r[k];
        if w == FREE || (dist[w] == dist[u] + 1 && dfs(graph, w, match_l, match_r, dist)) {
            match_l[u] = k;
            match_r[k] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}
