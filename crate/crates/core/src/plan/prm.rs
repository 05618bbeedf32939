use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{distance, Algorithm, Config, Path, PlanError, PlanSpace, PlannerParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Edge {
    Unchecked,
    Valid,
    Invalid,
}

#[derive(Clone, Copy, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Clone, Debug)]
struct Roadmap {
    key: u64,
    seed: u64,
    rng: ChaCha8Rng,
    nodes: Vec<Config>,
    adj: Vec<Vec<usize>>,
    edges: BTreeMap<(usize, usize), Edge>,
    samples_drawn: usize,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Roadmap {
    fn new(key: u64, seed: u64) -> Self {
        Roadmap { key, seed, rng: ChaCha8Rng::seed_from_u64(seed), nodes: vec![], adj: vec![], edges: BTreeMap::new(), samples_drawn: 0 }
    }

    /// Adds `q` and links it to its `k` nearest nodes, unchecked.
    fn attach(&mut self, q: Config, k: usize) -> usize {
        let mut near: Vec<(f64, usize)> = self.nodes.iter().enumerate().map(|(i, n)| (distance(n, &q), i)).collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let id = self.nodes.len();
        self.nodes.push(q);
        self.adj.push(vec![]);
        for &(_, j) in near.iter().take(k) {
            self.adj[id].push(j);
            self.adj[j].push(id);
            self.edges.insert(edge_key(id, j), Edge::Unchecked);
        }
        id
    }

    /// Removes nodes from index `n` on, along with their edges.
    fn truncate(&mut self, n: usize) {
        self.nodes.truncate(n);
        self.adj.truncate(n);
        for a in &mut self.adj {
            a.retain(|j| *j < n);
        }
        self.edges.retain(|(_, b), _| *b < n);
    }

    /// Draws up to `count` collision-free samples, within the sample budget.
    fn grow(&mut self, space: &PlanSpace, count: usize, k: usize, budget: usize) -> usize {
        let mut added = 0;
        while added < count && self.samples_drawn < budget {
            self.samples_drawn += 1;
            let q = space.sample(&mut self.rng);
            if space.is_valid(&q) {
                self.attach(q, k);
                added += 1;
            }
        }
        added
    }

    fn shortest(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(Reverse((Cost(0.0), from)));
        while let Some(Reverse((Cost(d), u))) = heap.pop() {
            if u == to {
                let mut path = vec![to];
                let mut v = to;
                while v != from {
                    v = prev[v];
                    path.push(v);
                }
                path.reverse();
                return Some(path);
            }
            if d > dist[u] {
                continue;
            }
            for &v in &self.adj[u] {
                if self.edges[&edge_key(u, v)] == Edge::Invalid {
                    continue;
                }
                let nd = d + distance(&self.nodes[u], &self.nodes[v]);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Reverse((Cost(nd), v)));
                }
            }
        }
        None
    }
}

/// Lazy probabilistic roadmap. Edges are collision-checked only when they lie
/// on a candidate shortest path. The roadmap is kept across queries while the
/// space key and seed stay the same.
#[derive(Clone, Debug, Default)]
pub struct LazyPrm {
    roadmap: Option<Roadmap>,
}

impl LazyPrm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn roadmap_size(&self) -> usize {
        self.roadmap.as_ref().map_or(0, |r| r.nodes.len())
    }

    /// Number of edges collision-checked so far.
    pub fn checked_edges(&self) -> usize {
        self.roadmap.as_ref().map_or(0, |r| r.edges.values().filter(|e| **e != Edge::Unchecked).count())
    }

    pub fn query(&mut self, space: &PlanSpace, start: &[f64], goal: &[f64], params: &PlannerParams) -> Result<Path, PlanError> {
        super::check_query(space, start, goal, params)?;
        let fresh = match &self.roadmap {
            Some(r) => r.key != space.key || r.seed != params.seed || r.nodes.first().map_or(true, |n| n.len() != space.dim()),
            None => true,
        };
        if fresh {
            let mut r = Roadmap::new(space.key, params.seed);
            r.grow(space, params.prm_samples, params.prm_k, params.max_iterations);
            self.roadmap = Some(r);
        }
        let r = self.roadmap.as_mut().expect("roadmap built");
        let mut rounds = 0;
        loop {
            let base = r.nodes.len();
            let s = r.attach(start.to_vec(), params.prm_k);
            let g = r.attach(goal.to_vec(), params.prm_k);
            if !r.adj[s].contains(&g) {
                r.adj[s].push(g);
                r.adj[g].push(s);
                r.edges.insert(edge_key(s, g), Edge::Unchecked);
            }
            let found = loop {
                rounds += 1;
                let Some(route) = r.shortest(s, g) else { break None };
                let mut ok = true;
                for w in route.windows(2) {
                    let key = edge_key(w[0], w[1]);
                    if r.edges[&key] == Edge::Unchecked {
                        let valid = space.motion_valid(&r.nodes[w[0]], &r.nodes[w[1]]);
                        r.edges.insert(key, if valid { Edge::Valid } else { Edge::Invalid });
                    }
                    if r.edges[&key] == Edge::Invalid {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    break Some(route.iter().map(|i| r.nodes[*i].clone()).collect::<Vec<_>>());
                }
            };
            r.truncate(base);
            if let Some(waypoints) = found {
                return Ok(Path::new(Algorithm::LazyPrm, waypoints, r.samples_drawn + rounds));
            }
            // Graph exhausted: densify within the sample budget and retry.
            if r.grow(space, params.prm_samples, params.prm_k, params.max_iterations) == 0 {
                return Err(PlanError::NoPathFound { iterations: r.samples_drawn + rounds });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::plan::SpaceKind;

    #[test]
    fn roadmap_reused_until_key_changes() {
        let space = PlanSpace::new(SpaceKind::Base, vec![[0.0, 5.0], [0.0, 5.0]], 0.05, 1, Arc::new(|q: &[f64]| !(q[0] > 2.0 && q[0] < 3.0 && q[1] < 4.0))).unwrap();
        let params = PlannerParams::default();
        let mut prm = LazyPrm::new();
        prm.query(&space, &[1.0, 1.0], &[4.0, 1.0], &params).unwrap();
        let size = prm.roadmap_size();
        let checked = prm.checked_edges();
        prm.query(&space, &[1.0, 2.0], &[4.0, 2.0], &params).unwrap();
        assert_eq!(prm.roadmap_size(), size);
        assert!(prm.checked_edges() >= checked);
        // A new key drops the roadmap: same result as a fresh planner.
        let moved = PlanSpace { key: 2, ..space.clone() };
        let mut fresh = LazyPrm::new();
        let a = fresh.query(&moved, &[1.0, 2.0], &[4.0, 2.0], &params).unwrap();
        let b = prm.query(&moved, &[1.0, 2.0], &[4.0, 2.0], &params).unwrap();
        assert_eq!(a, b);
        assert_eq!(prm.checked_edges(), fresh.checked_edges());
    }
}
