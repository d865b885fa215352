use super::{memory_id, Direction, GridSpec, HeraldedGraph};
use crate::state::MemoryId;

/// A simple cycle of the heralded node graph, listed from its smallest node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cycle {
    pub nodes: Vec<usize>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CycleReport {
    /// Every simple cycle with at most `max_len` edges.
    pub cycles: Vec<Cycle>,
    /// Some cycle longer than `max_len` avoids both consumer nodes.
    pub oversized_present: bool,
}

impl CycleReport {
    pub fn count_of_len(&self, len: usize) -> usize {
        self.cycles.iter().filter(|c| c.len() == len).count()
    }
}

fn neighbors(graph: &HeraldedGraph, node: usize) -> impl Iterator<Item = usize> + '_ {
    Direction::ALL
        .into_iter()
        .filter_map(move |d| graph.linked_neighbor(node, d))
}

/// Enumerates simple cycles of length ≤ `max_len` by bounded DFS from each
/// start node through larger nodes only; each cycle is kept in the one
/// direction where its second node is smaller than its last.
pub fn enumerate_cycles(graph: &HeraldedGraph, max_len: usize) -> CycleReport {
    let n = graph.spec().num_nodes();
    let mut cycles = Vec::new();
    let mut on_path = vec![false; n];
    let mut path = Vec::new();
    for start in 0..n {
        path.push(start);
        on_path[start] = true;
        collect(graph, start, max_len, &mut path, &mut on_path, &mut cycles);
        on_path[start] = false;
        path.pop();
    }
    cycles.sort();
    CycleReport {
        oversized_present: has_long_cycle(graph, max_len, &graph.spec().consumer_nodes()),
        cycles,
    }
}

fn collect(
    graph: &HeraldedGraph,
    start: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Cycle>,
) {
    let cur = *path.last().expect("path is never empty");
    for next in neighbors(graph, cur) {
        if next == start && path.len() >= 3 && path[1] < cur {
            out.push(Cycle { nodes: path.clone() });
        } else if next > start && !on_path[next] && path.len() < max_len {
            on_path[next] = true;
            path.push(next);
            collect(graph, start, max_len, path, on_path, out);
            path.pop();
            on_path[next] = false;
        }
    }
}

/// Whether a simple cycle with more than `max_len` edges avoids `excluded`.
pub(crate) fn has_long_cycle(graph: &HeraldedGraph, max_len: usize, excluded: &[usize]) -> bool {
    let n = graph.spec().num_nodes();
    let mut on_path = vec![false; n];
    for &e in excluded {
        on_path[e] = true;
    }
    (0..n).filter(|s| !excluded.contains(s)).any(|start| {
        on_path[start] = true;
        let found = long_from(graph, start, start, 0, max_len, &mut on_path);
        on_path[start] = false;
        found
    })
}

fn long_from(graph: &HeraldedGraph, start: usize, cur: usize, len: usize, max_len: usize, on_path: &mut [bool]) -> bool {
    for next in neighbors(graph, cur) {
        if next == start && len + 1 > max_len && len >= 2 {
            return true;
        }
        if next > start && !on_path[next] {
            on_path[next] = true;
            let found = long_from(graph, start, next, len + 1, max_len, on_path);
            on_path[next] = false;
            if found {
                return true;
            }
        }
    }
    false
}

/// The memory a polygon's bottom-right node X-measures: the node with the
/// largest (row, col) and its left-facing memory. That node's two cycle
/// edges are always its up and left links.
pub fn bottom_right_memory(spec: &GridSpec, cycle: &Cycle) -> Option<MemoryId> {
    let node = cycle.nodes.iter().copied().max_by_key(|&v| spec.coord(v))?;
    Some(memory_id(node, Direction::Left))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_grid, memory_node, Coord, RegionLevel};

    fn spec(n: usize) -> GridSpec {
        GridSpec::new(n, Coord::new(0, 0), Coord::new(n - 1, n - 1)).unwrap()
    }

    #[test]
    fn unit_square() {
        let s = spec(3);
        let g = HeraldedGraph::from_node_pairs(s, &[(0, 1), (1, 4), (4, 3), (3, 0)]).unwrap();
        let r = enumerate_cycles(&g, 4);
        assert_eq!(r.cycles.len(), 1);
        assert_eq!(r.cycles[0].len(), 4);
        let m = bottom_right_memory(&s, &r.cycles[0]).unwrap();
        assert_eq!(memory_node(m), 4);
        assert_eq!(m, memory_id(4, Direction::Left));
        assert!(g.partner(m).is_some());
    }

    #[test]
    fn tree_has_no_cycles() {
        let s = spec(3);
        let g = HeraldedGraph::from_node_pairs(s, &[(0, 1), (1, 2), (1, 4), (4, 7), (3, 4)]).unwrap();
        assert!(enumerate_cycles(&g, 8).cycles.is_empty());
    }

    #[test]
    fn stacked_squares() {
        let s = GridSpec::new(3, Coord::new(0, 2), Coord::new(2, 2)).unwrap();
        let g = HeraldedGraph::from_node_pairs(s, &[(0, 1), (0, 3), (1, 4), (3, 4), (3, 6), (4, 7), (6, 7)]).unwrap();
        let r = enumerate_cycles(&g, 6);
        assert_eq!(r.count_of_len(4), 2);
        assert_eq!(r.count_of_len(6), 1);
        let six = r.cycles.iter().find(|c| c.len() == 6).unwrap();
        assert_eq!(memory_node(bottom_right_memory(&s, six).unwrap()), 7);
        // only the two squares are within the bound; the 6-cycle avoids consumers
        assert!(enumerate_cycles(&g, 4).oversized_present);
        assert!(!enumerate_cycles(&g, 6).oversized_present);
    }

    #[test]
    fn full_grid_squares() {
        for n in 2..6 {
            let grid = build_grid(spec(n), RegionLevel::All).unwrap();
            let g = HeraldedGraph::full(&grid);
            assert_eq!(enumerate_cycles(&g, 4).count_of_len(4), (n - 1) * (n - 1));
        }
    }
}
