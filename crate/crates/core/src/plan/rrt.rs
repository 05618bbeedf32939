use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{distance, Algorithm, Config, Path, PlanError, PlanSpace, PlannerParams};

struct Tree {
    nodes: Vec<Config>,
    parent: Vec<usize>,
}

impl Tree {
    fn new(root: &[f64]) -> Self {
        Tree { nodes: vec![root.to_vec()], parent: vec![0] }
    }

    /// Lowest index wins ties.
    fn nearest(&self, q: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = distance(n, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn push(&mut self, q: Config, parent: usize) -> usize {
        self.nodes.push(q);
        self.parent.push(parent);
        self.nodes.len() - 1
    }

    /// Root-to-node configurations.
    fn branch(&self, mut i: usize) -> Vec<Config> {
        let mut out = vec![self.nodes[i].clone()];
        while i != 0 {
            i = self.parent[i];
            out.push(self.nodes[i].clone());
        }
        out.reverse();
        out
    }
}

fn steer(from: &[f64], to: &[f64], step: f64) -> Config {
    let d = distance(from, to);
    if d <= step {
        to.to_vec()
    } else {
        from.iter().zip(to).map(|(a, b)| a + (b - a) * step / d).collect()
    }
}

/// One steer step of `tree` toward `target`; returns the new node if the motion is free.
fn extend(space: &PlanSpace, tree: &mut Tree, target: &[f64], step: f64) -> Option<usize> {
    let near = tree.nearest(target);
    let q = steer(&tree.nodes[near], target, step);
    if q == tree.nodes[near] || !space.motion_valid(&tree.nodes[near], &q) {
        return None;
    }
    Some(tree.push(q, near))
}

pub(super) fn rrt(space: &PlanSpace, start: &[f64], goal: &[f64], params: &PlannerParams) -> Result<Path, PlanError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut tree = Tree::new(start);
    if distance(start, goal) <= params.goal_tolerance && space.motion_valid(start, goal) {
        return Ok(Path::new(Algorithm::Rrt, vec![start.to_vec(), goal.to_vec()], 0));
    }
    for it in 1..=params.max_iterations {
        let target = if rng.gen::<f64>() < params.goal_bias { goal.to_vec() } else { space.sample(&mut rng) };
        let Some(new) = extend(space, &mut tree, &target, params.steer_step) else { continue };
        if distance(&tree.nodes[new], goal) <= params.goal_tolerance && space.motion_valid(&tree.nodes[new], goal) {
            let mut waypoints = tree.branch(new);
            if waypoints.last().map(Vec::as_slice) != Some(goal) {
                waypoints.push(goal.to_vec());
            }
            return Ok(Path::new(Algorithm::Rrt, waypoints, it));
        }
    }
    Err(PlanError::NoPathFound { iterations: params.max_iterations })
}

/// Greedily extends `tree` toward `target` until it arrives or is blocked.
fn connect(space: &PlanSpace, tree: &mut Tree, target: &[f64], step: f64) -> Option<usize> {
    loop {
        let new = extend(space, tree, target, step)?;
        if tree.nodes[new] == target {
            return Some(new);
        }
    }
}

pub(super) fn birrt(space: &PlanSpace, start: &[f64], goal: &[f64], params: &PlannerParams) -> Result<Path, PlanError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut a = Tree::new(start);
    let mut b = Tree::new(goal);
    let mut a_is_start = true;
    if space.motion_valid(start, goal) {
        return Ok(Path::new(Algorithm::BiRrt, vec![start.to_vec(), goal.to_vec()], 0));
    }
    for it in 1..=params.max_iterations {
        let target = if rng.gen::<f64>() < params.goal_bias { b.nodes[0].clone() } else { space.sample(&mut rng) };
        if let Some(new) = extend(space, &mut a, &target, params.steer_step) {
            let q = a.nodes[new].clone();
            if let Some(meet) = connect(space, &mut b, &q, params.steer_step) {
                let mut head = a.branch(new);
                let mut tail = b.branch(meet);
                // `meet` duplicates the last node of `head`.
                tail.pop();
                tail.reverse();
                head.extend(tail);
                if !a_is_start {
                    head.reverse();
                }
                return Ok(Path::new(Algorithm::BiRrt, head, it));
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    Err(PlanError::NoPathFound { iterations: params.max_iterations })
}
