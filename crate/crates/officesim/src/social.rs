//! Small-world interaction network and email-driven awareness dynamics.
//!
//! Users sit on a Watts-Strogatz graph. While at their desks they occasionally
//! email a random neighbour about energy issues; each received email nudges
//! the recipient's awareness up (saturating at 100), and behavioural
//! probabilities follow the *current* awareness through the band table, which
//! is what lets a campaign change consumption.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::UserId;
use crate::rng::{purpose, tag, RngKey};
use crate::time::SimTime;

/// Normalisation for per-minute email emission: a contact rate of `r`
/// emails/user/day spread over a nominal working day of this many minutes.
pub const WORKING_MINUTES_PER_DAY: f64 = 480.0;

/// Undirected graph over user indices 0..n (users in ascending id order).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialNetwork {
    n: usize,
    /// Sorted neighbour lists.
    neighbors: Vec<Vec<u32>>,
}

#[derive(Debug, Error)]
pub enum SocialError {
    #[error(
        "invalid small-world parameters: need n > 2k and 0 <= p <= 1, got n={n}, k={k}, p={p}"
    )]
    InvalidParams { n: usize, k: usize, p: f64 },
    #[error("edge ({0}, {1}) out of range or degenerate")]
    BadEdge(usize, usize),
}

impl SocialNetwork {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[node]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&(b as u32)).is_ok()
    }

    /// Build from an explicit edge list (the JSON override format).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, SocialError> {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(SocialError::BadEdge(a, b));
            }
            if !neighbors[a].contains(&(b as u32)) {
                neighbors[a].push(b as u32);
                neighbors[b].push(a as u32);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(SocialNetwork { n, neighbors })
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, list) in self.neighbors.iter().enumerate() {
            for &b in list {
                if a < b as usize {
                    out.push((a, b as usize));
                }
            }
        }
        out
    }

    /// Breadth-first distances from `start`; unreachable nodes are `None`.
    pub fn bfs_distances(&self, start: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n];
        dist[start] = Some(0);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &w in &self.neighbors[v] {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(d + 1);
                    queue.push_back(w as usize);
                }
            }
        }
        dist
    }

    /// Mean shortest-path length over reachable ordered pairs.
    pub fn mean_path_length(&self) -> f64 {
        let mut total = 0u64;
        let mut pairs = 0u64;
        for start in 0..self.n {
            for d in self.bfs_distances(start).into_iter().flatten() {
                if d > 0 {
                    total += d as u64;
                    pairs += 1;
                }
            }
        }
        total as f64 / pairs as f64
    }
}

/// Watts-Strogatz construction: a ring lattice with `k` neighbours per side,
/// then each lattice edge is rewired with probability `p_rewire` to a uniform
/// non-duplicate target. Edge count stays `n * k`. Deterministic in `seed`.
pub fn build_small_world(
    n: usize,
    k: usize,
    p_rewire: f64,
    seed: u64,
) -> Result<SocialNetwork, SocialError> {
    if k == 0 || n <= 2 * k || !(0.0..=1.0).contains(&p_rewire) {
        return Err(SocialError::InvalidParams { n, k, p: p_rewire });
    }
    let key = RngKey::root(seed).with(tag::MODULE, 3);

    let mut neighbors: Vec<Vec<u32>> = vec![Vec::with_capacity(2 * k); n];
    let add = |nb: &mut Vec<Vec<u32>>, a: usize, b: usize| {
        nb[a].push(b as u32);
        nb[b].push(a as u32);
    };
    let has = |nb: &[Vec<u32>], a: usize, b: usize| nb[a].contains(&(b as u32));
    let remove = |nb: &mut Vec<Vec<u32>>, a: usize, b: usize| {
        nb[a].retain(|&x| x != b as u32);
        nb[b].retain(|&x| x != a as u32);
    };

    for i in 0..n {
        for j in 1..=k {
            add(&mut neighbors, i, (i + j) % n);
        }
    }

    for i in 0..n {
        for j in 1..=k {
            let edge_index = (i * k + j - 1) as u64;
            if !key
                .with(tag::PURPOSE, purpose::WS_REWIRE)
                .with(tag::INDEX, edge_index)
                .chance(p_rewire)
            {
                continue;
            }
            let old = (i + j) % n;
            remove(&mut neighbors, i, old);
            let mut rewired = false;
            for attempt in 0..(4 * n as u64) {
                let target = key
                    .with(tag::PURPOSE, purpose::WS_TARGET)
                    .with(tag::INDEX, edge_index)
                    .with(tag::ATTEMPT, attempt)
                    .pick(n);
                if target != i && !has(&neighbors, i, target) {
                    add(&mut neighbors, i, target);
                    rewired = true;
                    break;
                }
            }
            if !rewired {
                // Saturated node: keep the lattice edge.
                add(&mut neighbors, i, old);
            }
        }
    }

    for list in &mut neighbors {
        list.sort_unstable();
    }
    Ok(SocialNetwork { n, neighbors })
}

/// An email about energy issues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContactEvent {
    pub sender: UserId,
    pub recipient: UserId,
    pub tick: SimTime,
}

/// Decide whether a desk-bound user emails somebody this minute, and whom.
/// Returns the recipient node. `site` must be scoped to (user, day, minute).
/// Per-minute emission probability is
/// `contact_rate * p_email / WORKING_MINUTES_PER_DAY`.
pub fn emit_contact(
    node: usize,
    p_email: f64,
    contact_rate: f64,
    network: &SocialNetwork,
    site: RngKey,
) -> Option<usize> {
    if contact_rate <= 0.0 {
        return None;
    }
    let neighbors = network.neighbors(node);
    if neighbors.is_empty() {
        return None;
    }
    let p = contact_rate * p_email / WORKING_MINUTES_PER_DAY;
    if !site.with(tag::PURPOSE, purpose::EMAIL_GATE).chance(p) {
        return None;
    }
    let pick = site
        .with(tag::PURPOSE, purpose::EMAIL_RECIPIENT)
        .pick(neighbors.len());
    Some(neighbors[pick] as usize)
}

/// Receiving an email raises awareness by `delta`, saturating at 100.
pub fn apply_contact(recipient: &mut crate::population::EnergyUser, delta: f64) {
    debug_assert!(delta >= 0.0);
    recipient.awareness = (recipient.awareness + delta).min(100.0);
}
