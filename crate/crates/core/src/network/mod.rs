//! Square-grid topology, link heralding, polygon detection and regions.
//!
//! Nodes are numbered row-major (`node = row · n + col`, row 0 at the top).
//! Each node has one memory per grid direction; memory ids are
//! `4 · node + direction` with directions ordered up, down, left, right.

mod cycles;
mod region;

use std::fmt;

use rand::Rng;

use crate::state::MemoryId;
use crate::{Error, Result};

pub use cycles::{bottom_right_memory, enumerate_cycles, Cycle, CycleReport};
pub use region::{select_region, Region, RegionLevel};

/// A node position. Row 0 is the top row, column 0 the left column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub fn new(row: usize, col: usize) -> Self {
        Coord { row, col }
    }

    pub fn manhattan(self, other: Coord) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i]
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

/// Grid size and the two consumer nodes (Alice, Bob).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    size: usize,
    consumers: (Coord, Coord),
}

/// Largest supported grid edge.
pub const MAX_GRID: usize = 16;

impl GridSpec {
    pub fn new(size: usize, alice: Coord, bob: Coord) -> Result<Self> {
        if !(2..=MAX_GRID).contains(&size) {
            return Err(Error::config("grid", format!("grid size {size} outside 2..={MAX_GRID}")));
        }
        for c in [alice, bob] {
            if c.row >= size || c.col >= size {
                return Err(Error::config("consumers", format!("consumer {c} outside a {size}x{size} grid")));
            }
        }
        if alice == bob {
            return Err(Error::config("consumers", "consumers must be distinct nodes"));
        }
        Ok(GridSpec {
            size,
            consumers: (alice, bob),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn consumers(&self) -> (Coord, Coord) {
        self.consumers
    }

    pub fn num_nodes(&self) -> usize {
        self.size * self.size
    }

    pub fn node(&self, c: Coord) -> usize {
        c.row * self.size + c.col
    }

    pub fn coord(&self, node: usize) -> Coord {
        Coord::new(node / self.size, node % self.size)
    }

    pub fn consumer_nodes(&self) -> [usize; 2] {
        [self.node(self.consumers.0), self.node(self.consumers.1)]
    }

    pub fn is_consumer(&self, node: usize) -> bool {
        self.consumer_nodes().contains(&node)
    }

    pub fn neighbor(&self, node: usize, dir: Direction) -> Option<usize> {
        let Coord { row, col } = self.coord(node);
        let n = self.size;
        match dir {
            Direction::Up if row > 0 => Some(node - n),
            Direction::Down if row + 1 < n => Some(node + n),
            Direction::Left if col > 0 => Some(node - 1),
            Direction::Right if col + 1 < n => Some(node + 1),
            _ => None,
        }
    }

    /// Manhattan distance between the consumers.
    pub fn distance(&self) -> usize {
        self.consumers.0.manhattan(self.consumers.1)
    }
}

pub fn memory_id(node: usize, dir: Direction) -> MemoryId {
    MemoryId((4 * node + dir.index()) as u32)
}

pub fn memory_node(m: MemoryId) -> usize {
    m.0 as usize / 4
}

pub fn memory_direction(m: MemoryId) -> Direction {
    Direction::from_index(m.0 as usize % 4)
}

/// A grid with its active (non-idle) nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    region: Region,
    links: Vec<(MemoryId, MemoryId)>,
}

/// Builds the grid, marks nodes outside the region idle and lists the
/// links that will be attempted: pairs of adjacent active nodes, oriented
/// top to bottom and left to right.
pub fn build_grid(spec: GridSpec, level: RegionLevel) -> Result<Grid> {
    let region = select_region(&spec, level);
    for c in spec.consumer_nodes() {
        if !region.contains(c) {
            return Err(Error::config("region", "a consumer lies outside the selected region"));
        }
    }
    let mut links = Vec::new();
    for node in 0..spec.num_nodes() {
        if !region.contains(node) {
            continue;
        }
        for dir in [Direction::Down, Direction::Right] {
            if let Some(other) = spec.neighbor(node, dir) {
                if region.contains(other) {
                    links.push((memory_id(node, dir), memory_id(other, dir.opposite())));
                }
            }
        }
    }
    links.sort_by_key(|&(a, b)| (memory_node(a).min(memory_node(b)), a));
    Ok(Grid { spec, region, links })
}

impl Grid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.region.contains(node)
    }

    /// Links between active nodes, in a fixed order.
    pub fn links(&self) -> &[(MemoryId, MemoryId)] {
        &self.links
    }
}

/// The links that heralded in one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeraldedGraph {
    spec: GridSpec,
    edges: Vec<(MemoryId, MemoryId)>,
    partner: Vec<Option<MemoryId>>,
}

impl HeraldedGraph {
    /// Validates an explicit edge list: each edge joins facing memories of
    /// adjacent nodes and no memory is used twice.
    pub fn from_edges(spec: GridSpec, edges: Vec<(MemoryId, MemoryId)>) -> Result<Self> {
        let mut partner = vec![None; 4 * spec.num_nodes()];
        for &(a, b) in &edges {
            for m in [a, b] {
                if memory_node(m) >= spec.num_nodes() {
                    return Err(Error::domain(format!("memory {m} outside the grid")));
                }
            }
            let (na, da) = (memory_node(a), memory_direction(a));
            if spec.neighbor(na, da) != Some(memory_node(b)) || memory_direction(b) != da.opposite() {
                return Err(Error::domain(format!("memories {a} and {b} are not facing neighbours")));
            }
            for (m, other) in [(a, b), (b, a)] {
                if partner[m.0 as usize].replace(other).is_some() {
                    return Err(Error::domain(format!("memory {m} appears in two edges")));
                }
            }
        }
        Ok(HeraldedGraph { spec, edges, partner })
    }

    /// Every link between the given nodes (pairs of grid-adjacent nodes).
    pub fn from_node_pairs(spec: GridSpec, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(pairs.len());
        for &(u, v) in pairs {
            let dir = Direction::ALL
                .into_iter()
                .find(|&d| spec.neighbor(u, d) == Some(v))
                .ok_or_else(|| Error::domain(format!("nodes {u} and {v} are not adjacent")))?;
            edges.push((memory_id(u, dir), memory_id(v, dir.opposite())));
        }
        Self::from_edges(spec, edges)
    }

    /// All links of the grid heralded.
    pub fn full(grid: &Grid) -> Self {
        Self::from_edges(grid.spec, grid.links.clone()).expect("grid links are valid")
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn edges(&self) -> &[(MemoryId, MemoryId)] {
        &self.edges
    }

    pub fn partner(&self, m: MemoryId) -> Option<MemoryId> {
        self.partner.get(m.0 as usize).copied().flatten()
    }

    pub fn has_link(&self, node: usize, dir: Direction) -> bool {
        self.partner(memory_id(node, dir)).is_some()
    }

    /// Neighbour reached over a heralded link.
    pub fn linked_neighbor(&self, node: usize, dir: Direction) -> Option<usize> {
        self.partner(memory_id(node, dir)).map(memory_node)
    }

    pub fn degree(&self, node: usize) -> usize {
        Direction::ALL.iter().filter(|&&d| self.has_link(node, d)).count()
    }

    /// Debug dump: one edge per line as `memA memB`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (a, b) in &self.edges {
            s.push_str(&format!("{a} {b}\n"));
        }
        s
    }
}

/// Heralds each active link independently with probability `link_prob`.
pub fn herald_links<R: Rng + ?Sized>(grid: &Grid, link_prob: f64, rng: &mut R) -> Result<HeraldedGraph> {
    if !(0.0..=1.0).contains(&link_prob) {
        return Err(Error::domain(format!("link probability {link_prob} outside [0, 1]")));
    }
    let edges = grid
        .links
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(link_prob))
        .collect();
    HeraldedGraph::from_edges(grid.spec, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(n: usize) -> GridSpec {
        GridSpec::new(n, Coord::new(0, 0), Coord::new(n - 1, n - 1)).unwrap()
    }

    #[test]
    fn numbering() {
        let s = spec(4);
        assert_eq!(s.node(Coord::new(1, 2)), 6);
        assert_eq!(s.coord(13), Coord::new(3, 1));
        assert_eq!(s.neighbor(0, Direction::Up), None);
        assert_eq!(s.neighbor(5, Direction::Left), Some(4));
        assert_eq!(memory_id(6, Direction::Left), MemoryId(26));
        assert_eq!(memory_node(MemoryId(26)), 6);
        assert_eq!(memory_direction(MemoryId(26)), Direction::Left);
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(1, Coord::new(0, 0), Coord::new(0, 0)).is_err());
        assert!(GridSpec::new(3, Coord::new(0, 0), Coord::new(0, 0)).is_err());
        assert!(GridSpec::new(3, Coord::new(0, 0), Coord::new(3, 0)).is_err());
    }

    #[test]
    fn full_grid_link_count() {
        for n in 2..7 {
            let g = build_grid(spec(n), RegionLevel::All).unwrap();
            assert_eq!(g.links().len(), 2 * n * (n - 1));
        }
    }

    #[test]
    fn heralding_extremes() {
        let g = build_grid(spec(4), RegionLevel::All).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(herald_links(&g, 1.0, &mut rng).unwrap().edges().len(), 24);
        assert!(herald_links(&g, 0.0, &mut rng).unwrap().edges().is_empty());
        assert!(herald_links(&g, 1.5, &mut rng).is_err());
    }

    #[test]
    fn rejects_non_facing_edge() {
        let s = spec(3);
        assert!(HeraldedGraph::from_edges(s, vec![(memory_id(0, Direction::Right), memory_id(1, Direction::Right))]).is_err());
        assert!(HeraldedGraph::from_node_pairs(s, &[(0, 4)]).is_err());
        let g = HeraldedGraph::from_node_pairs(s, &[(0, 1), (1, 4)]).unwrap();
        assert_eq!(g.degree(1), 2);
        assert_eq!(g.dump(), "3 6\n5 16\n");
    }
}
