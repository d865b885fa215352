//! Polygon rules, consumer memory choice and the route tree.

use std::collections::VecDeque;

use super::KHop;
use crate::network::{memory_id, memory_node, Direction, HeraldedGraph};
use crate::state::MemoryId;

/// Result of the polygon rules on a heralded graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XRuleResult {
    /// Bottom-right memories that are X-measured, one per resolved corner.
    pub marked: Vec<MemoryId>,
    /// Helper memories that are the only one left at their node.
    pub leaves: Vec<MemoryId>,
    /// A polygon survived the rules without touching a consumer memory.
    pub abort: bool,
    removed: Vec<bool>,
}

impl XRuleResult {
    /// Whether the link at memory `m` is still part of the swap topology.
    pub fn keeps(&self, graph: &HeraldedGraph, m: MemoryId) -> bool {
        graph.partner(m).is_some() && !self.removed[m.0 as usize]
    }
}

/// Shortest path length from `from` to `to` over heralded links, using only
/// nodes with index below `limit` (lexicographically before it).
fn bounded_distance(graph: &HeraldedGraph, from: usize, to: usize, limit: usize) -> Option<usize> {
    let mut dist = vec![usize::MAX; limit];
    let mut queue = VecDeque::from([from]);
    dist[from] = 0;
    while let Some(u) = queue.pop_front() {
        if u == to {
            return Some(dist[u]);
        }
        for dir in Direction::ALL {
            if let Some(v) = graph.linked_neighbor(u, dir) {
                if v < limit && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    None
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Applies the polygon rules.
///
/// A helper node is the bottom-right corner of a polygon exactly when its
/// up and left links are heralded and their far ends are joined by a path
/// through earlier nodes; the polygon has at most `2k + 2` edges when that
/// path has at most `2k` edges. Such a node X-measures its left memory.
/// With finite `k`, any cycle left among the helpers aborts the round.
pub fn apply_x_rules(graph: &HeraldedGraph, k: KHop) -> XRuleResult {
    let spec = graph.spec();
    let n = spec.num_nodes();
    let max_path = match k {
        KHop::Hops(k) => 2 * k,
        KHop::Global => usize::MAX,
    };
    let mut removed = vec![false; 4 * n];
    let mut marked = Vec::new();
    for v in 0..n {
        if spec.is_consumer(v) {
            continue;
        }
        let (Some(up), Some(left)) = (
            graph.linked_neighbor(v, Direction::Up),
            graph.linked_neighbor(v, Direction::Left),
        ) else {
            continue;
        };
        if bounded_distance(graph, up, left, v).is_some_and(|d| d <= max_path) {
            let m = memory_id(v, Direction::Left);
            removed[m.0 as usize] = true;
            removed[graph.partner(m).expect("heralded").0 as usize] = true;
            marked.push(m);
        }
    }

    let mut abort = false;
    if matches!(k, KHop::Hops(_)) {
        let mut parent: Vec<usize> = (0..n).collect();
        for &(a, b) in graph.edges() {
            let (u, v) = (memory_node(a), memory_node(b));
            if removed[a.0 as usize] || spec.is_consumer(u) || spec.is_consumer(v) {
                continue;
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                abort = true;
                break;
            }
            parent[ru] = rv;
        }
    }

    let mut leaves = Vec::new();
    for v in (0..n).filter(|&v| !spec.is_consumer(v)) {
        let kept: Vec<MemoryId> = ghz_memories(graph, &marked, v);
        if kept.len() == 1 {
            leaves.push(kept[0]);
        }
    }
    XRuleResult {
        marked,
        leaves,
        abort,
        removed,
    }
}

/// Heralded memories of a helper node that it does not X-measure itself.
fn ghz_memories(graph: &HeraldedGraph, marked: &[MemoryId], v: usize) -> Vec<MemoryId> {
    Direction::ALL
        .into_iter()
        .map(|d| memory_id(v, d))
        .filter(|&m| graph.partner(m).is_some() && !marked.contains(&m))
        .collect()
}

/// The subgraph that carries the consumers' state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutePlan {
    pub alice_memory: MemoryId,
    pub bob_memory: MemoryId,
    /// Nodes of the tree joining the consumers.
    pub tree: Vec<bool>,
    /// Bell pairs that end up in the consumers' state: tree links plus
    /// removed links whose kept end is a tree helper.
    pub links: Vec<(MemoryId, MemoryId)>,
    /// Memories each helper fuses (empty for nodes outside the tree).
    pub ghz_sets: Vec<Vec<MemoryId>>,
    /// Memories X-measured on relevant links.
    pub x_measured: Vec<MemoryId>,
}

impl RoutePlan {
    pub fn in_tree(&self, node: usize) -> bool {
        self.tree[node]
    }

    /// Helper on the far side of Alice's chosen link.
    pub fn first_helper(&self, graph: &HeraldedGraph) -> Option<usize> {
        graph.partner(self.alice_memory).map(memory_node)
    }
}

/// Consumer memory order: up, left, down, right.
const CONSUMER_ORDER: [Direction; 4] = [Direction::Up, Direction::Left, Direction::Down, Direction::Right];

fn reaches(
    graph: &HeraldedGraph,
    usable: &dyn Fn(MemoryId) -> bool,
    from: usize,
    target: usize,
    avoid: usize,
) -> bool {
    let n = graph.spec().num_nodes();
    let mut seen = vec![false; n];
    seen[avoid] = true;
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == target {
            return true;
        }
        for dir in Direction::ALL {
            let m = memory_id(u, dir);
            if !usable(m) {
                continue;
            }
            let v = memory_node(graph.partner(m).expect("usable memories are heralded"));
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Chooses one memory per consumer and extracts the route tree. Returns
/// `None` when no heralded route joins the consumers.
pub fn plan_route(graph: &HeraldedGraph, rules: &XRuleResult) -> Option<RoutePlan> {
    let spec = graph.spec();
    let n = spec.num_nodes();
    let [alice, bob] = spec.consumer_nodes();
    let in_g1 = |m: MemoryId| rules.keeps(graph, m);

    let alice_memory = CONSUMER_ORDER.into_iter().map(|d| memory_id(alice, d)).find(|&m| {
        in_g1(m) && {
            let nb = memory_node(graph.partner(m).expect("kept"));
            reaches(graph, &in_g1, nb, bob, alice)
        }
    })?;
    let alice_extra = |m: MemoryId| memory_node(m) == alice && m != alice_memory;
    let usable_b = |m: MemoryId| {
        in_g1(m) && !alice_extra(m) && !alice_extra(graph.partner(m).expect("kept"))
    };
    let bob_memory = CONSUMER_ORDER.into_iter().map(|d| memory_id(bob, d)).find(|&m| {
        usable_b(m) && {
            let nb = memory_node(graph.partner(m).expect("kept"));
            reaches(graph, &usable_b, nb, alice, bob)
        }
    })?;

    let extra = |m: MemoryId| {
        let node = memory_node(m);
        (node == alice && m != alice_memory) || (node == bob && m != bob_memory)
    };
    let in_g2 = |m: MemoryId| in_g1(m) && !extra(m) && !extra(graph.partner(m).expect("kept"));

    let mut tree = vec![false; n];
    tree[alice] = true;
    let mut queue = VecDeque::from([alice]);
    let mut links = Vec::new();
    while let Some(u) = queue.pop_front() {
        for dir in Direction::ALL {
            let m = memory_id(u, dir);
            if !in_g2(m) {
                continue;
            }
            let partner = graph.partner(m).expect("kept");
            let v = memory_node(partner);
            if !tree[v] {
                tree[v] = true;
                links.push((m, partner));
                queue.push_back(v);
            }
        }
    }
    debug_assert!(tree[bob]);

    let mut ghz_sets = vec![Vec::new(); n];
    let mut x_measured = Vec::new();
    for &(a, b) in graph.edges() {
        for (kept, measured) in [(a, b), (b, a)] {
            let u = memory_node(kept);
            if !tree[u] || spec.is_consumer(u) || in_g2(kept) {
                continue;
            }
            // removed link kept by a tree helper: a stub whose other end is measured
            let measured_here = rules.marked.contains(&kept);
            if measured_here {
                continue;
            }
            links.push((kept, measured));
            x_measured.push(measured);
        }
    }
    for v in (0..n).filter(|&v| tree[v] && !spec.is_consumer(v)) {
        let set: Vec<MemoryId> = Direction::ALL
            .into_iter()
            .map(|d| memory_id(v, d))
            .filter(|&m| graph.partner(m).is_some() && !rules.marked.contains(&m))
            .filter(|&m| in_g2(m) || links.iter().any(|&(k, _)| k == m))
            .collect();
        if set.len() == 1 {
            x_measured.push(set[0]);
        }
        ghz_sets[v] = set;
    }
    Some(RoutePlan {
        alice_memory,
        bob_memory,
        tree,
        links,
        ghz_sets,
        x_measured,
    })
}
