use std::fmt;
use std::str::FromStr;

use super::{Direction, GridSpec};
use crate::Error;

/// Region selector: level `j` or the whole grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionLevel {
    Level(usize),
    All,
}

impl fmt::Display for RegionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionLevel::Level(j) => write!(f, "{j}"),
            RegionLevel::All => write!(f, "all"),
        }
    }
}

impl FromStr for RegionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(RegionLevel::All);
        }
        s.parse::<usize>()
            .map(RegionLevel::Level)
            .map_err(|_| Error::config("region", format!("expected a level or \"all\", got {s:?}")))
    }
}

/// Active node set of a region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    level: RegionLevel,
    nodes: Vec<bool>,
}

impl Region {
    pub fn level(&self) -> RegionLevel {
        self.level
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.get(node).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| self.nodes[v]).collect()
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.nodes.iter().zip(&other.nodes).all(|(&a, &b)| !a || b)
    }
}

/// Region `j`: nodes lying on some simple consumer-to-consumer path with at
/// most `d + 2j` edges, `d` being the Manhattan distance. Level 0 is the
/// bounding rectangle of the consumers.
pub fn select_region(spec: &GridSpec, level: RegionLevel) -> Region {
    let n = spec.num_nodes();
    let nodes = match level {
        RegionLevel::All => vec![true; n],
        RegionLevel::Level(j) => {
            let bound = spec.distance() + 2 * j;
            (0..n).map(|v| on_bounded_path(spec, v, bound)).collect()
        }
    };
    Region { level, nodes }
}

fn on_bounded_path(spec: &GridSpec, via: usize, bound: usize) -> bool {
    let [a, b] = spec.consumer_nodes();
    if via == a || via == b {
        return true;
    }
    let dist = |x: usize, y: usize| spec.coord(x).manhattan(spec.coord(y));
    if dist(a, via) + dist(via, b) > bound {
        return false;
    }
    let mut on_path = vec![false; spec.num_nodes()];
    on_path[a] = true;
    search(spec, a, b, via, false, 0, bound, &mut on_path)
}

#[allow(clippy::too_many_arguments)]
fn search(
    spec: &GridSpec,
    cur: usize,
    target: usize,
    via: usize,
    seen: bool,
    len: usize,
    bound: usize,
    on_path: &mut [bool],
) -> bool {
    let dist = |x: usize, y: usize| spec.coord(x).manhattan(spec.coord(y));
    for dir in Direction::ALL {
        let Some(next) = spec.neighbor(cur, dir) else { continue };
        if on_path[next] {
            continue;
        }
        let seen = seen || next == via;
        if next == target {
            if seen {
                return true;
            }
            continue;
        }
        let remaining = if seen { dist(next, target) } else { dist(next, via) + dist(via, target) };
        if len + 1 + remaining > bound {
            continue;
        }
        on_path[next] = true;
        let found = search(spec, next, target, via, seen, len + 1, bound, on_path);
        on_path[next] = false;
        if found {
            return true;
        }
    }
    false
}
