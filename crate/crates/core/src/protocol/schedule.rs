//! Swap orderings over the route tree.

use std::collections::VecDeque;
use std::fmt;

use super::rules::RoutePlan;
use super::Scheduler;
use crate::network::{Direction, HeraldedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    /// GHZ(m) projection of the node's memories.
    Ghz(usize),
    /// X measurement of the node's single memory.
    X,
    Skip,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Ghz(m) => write!(f, "ghz({m})"),
            Action::X => write!(f, "X"),
            Action::Skip => write!(f, "skip"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Visit {
    pub node: usize,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SwapSchedule {
    pub visits: Vec<Visit>,
}

impl SwapSchedule {
    pub fn nodes(&self) -> Vec<usize> {
        self.visits.iter().map(|v| v.node).collect()
    }

    pub fn swap_count(&self) -> usize {
        self.visits.iter().filter(|v| matches!(v.action, Action::Ghz(_))).count()
    }
}

fn action_for(plan: &RoutePlan, node: usize) -> Action {
    match plan.ghz_sets[node].len() {
        0 => Action::Skip,
        1 => Action::X,
        m => Action::Ghz(m),
    }
}

/// Orders the helper visits.
///
/// Consumer-greedy grows the main state outward from Alice: breadth-first
/// over the tree from the helper on Alice's link, neighbours taken up, down,
/// left, right. Linear-sweep visits every node in row-major order, skipping
/// consumers; nodes off the tree are skipped.
pub fn plan_schedule(graph: &HeraldedGraph, plan: &RoutePlan, scheduler: Scheduler) -> SwapSchedule {
    let spec = graph.spec();
    let n = spec.num_nodes();
    let mut visits = Vec::new();
    match scheduler {
        Scheduler::LinearSweep => {
            for node in (0..n).filter(|&v| !spec.is_consumer(v)) {
                let action = if plan.in_tree(node) { action_for(plan, node) } else { Action::Skip };
                visits.push(Visit { node, action });
            }
        }
        Scheduler::ConsumerGreedy => {
            let Some(start) = plan.first_helper(graph).filter(|&v| !spec.is_consumer(v)) else {
                return SwapSchedule::default();
            };
            let mut seen = vec![false; n];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                visits.push(Visit {
                    node: u,
                    action: action_for(plan, u),
                });
                for dir in Direction::ALL {
                    if let Some(v) = graph.linked_neighbor(u, dir) {
                        let on_tree_link = plan.ghz_sets[u].contains(&crate::network::memory_id(u, dir));
                        if on_tree_link && plan.in_tree(v) && !seen[v] && !spec.is_consumer(v) {
                            seen[v] = true;
                            queue.push_back(v);
                        }
                    }
                }
            }
        }
    }
    SwapSchedule { visits }
}
