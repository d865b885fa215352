//! One protocol round: herald, resolve polygons, choose consumer memories,
//! swap along a schedule and hand the consumers a Bell-diagonal state.

mod rules;
mod schedule;
mod tracker;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::distill::{ladder_distribution, sample_link, DistillationConfig, FidelityDistribution, LinkOutcome};
use crate::network::{build_grid, herald_links, Grid, GridSpec, HeraldedGraph, RegionLevel};
use crate::oracle::ReplayOp;
use crate::state::{coherent_information, werner_from_fidelity, GhzDiagonalState, MemoryId};
use crate::{Error, Result};

pub use rules::{apply_x_rules, plan_route, RoutePlan, XRuleResult};
pub use schedule::{plan_schedule, Action, SwapSchedule, Visit};
use tracker::Tracker;

/// Classical communication range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KHop {
    /// Polygons with up to `2k + 2` edges are resolved.
    Hops(usize),
    /// Every polygon is resolved; rounds never abort on polygons.
    Global,
}

impl KHop {
    /// Largest resolvable polygon, `None` when unbounded.
    pub fn max_polygon(self) -> Option<usize> {
        match self {
            KHop::Hops(k) => Some(2 * k + 2),
            KHop::Global => None,
        }
    }
}

impl fmt::Display for KHop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KHop::Hops(k) => write!(f, "{k}"),
            KHop::Global => write!(f, "global"),
        }
    }
}

impl FromStr for KHop {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("global") {
            return Ok(KHop::Global);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(KHop::Hops(k)),
            _ => Err(Error::config("k", format!("expected an integer ≥ 1 or \"global\", got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheduler {
    ConsumerGreedy,
    LinearSweep,
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheduler::ConsumerGreedy => "consumer-greedy",
            Scheduler::LinearSweep => "linear-sweep",
        })
    }
}

impl FromStr for Scheduler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consumer-greedy" => Ok(Scheduler::ConsumerGreedy),
            "linear-sweep" => Ok(Scheduler::LinearSweep),
            _ => Err(Error::config(
                "scheduler",
                format!("expected \"consumer-greedy\" or \"linear-sweep\", got {s:?}"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub grid: GridSpec,
    pub link_prob: f64,
    pub link_fidelity: f64,
    pub k_hop: KHop,
    pub region: RegionLevel,
    pub scheduler: Scheduler,
    pub distill_rounds: usize,
}

impl ProtocolConfig {
    /// Single time step, global communication, whole grid, consumer-greedy.
    pub fn new(grid: GridSpec, link_prob: f64, link_fidelity: f64) -> Self {
        ProtocolConfig {
            grid,
            link_prob,
            link_fidelity,
            k_hop: KHop::Global,
            region: RegionLevel::All,
            scheduler: Scheduler::ConsumerGreedy,
            distill_rounds: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.link_prob) {
            return Err(Error::config("link_prob", format!("{} outside [0, 1]", self.link_prob)));
        }
        if !(0.25..=1.0).contains(&self.link_fidelity) {
            return Err(Error::config("fidelity", format!("{} outside [1/4, 1]", self.link_fidelity)));
        }
        if self.k_hop == KHop::Hops(0) {
            return Err(Error::config("k", "k must be at least 1"));
        }
        DistillationConfig::new(self.distill_rounds, self.link_prob, self.link_fidelity)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AbortReason {
    Disconnected,
    OversizedPolygon,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbortReason::Disconnected => "disconnected",
            AbortReason::OversizedPolygon => "oversized-polygon",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    pub aborted: Option<AbortReason>,
    /// Bell-diagonal state on (Alice's memory, Bob's memory), frame resolved.
    pub final_state: Option<GhzDiagonalState>,
    pub swaps_performed: usize,
    pub max_state_qubits: usize,
}

impl RoundOutcome {
    fn abort(reason: AbortReason) -> Self {
        RoundOutcome {
            aborted: Some(reason),
            final_state: None,
            swaps_performed: 0,
            max_state_qubits: 0,
        }
    }

    /// Coherent information of the delivered state; `None` when aborted.
    pub fn coherent_information(&self) -> Option<f64> {
        self.final_state
            .as_ref()
            .map(|s| coherent_information(s).expect("final states have two qubits"))
    }
}

/// Everything recorded by a traced round.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RoundTrace {
    /// `node=(r,c) action=... state_qubits=Q` lines.
    pub lines: Vec<String>,
    /// Relevant links as `(memory, memory, Werner weight)`.
    pub links: Vec<(MemoryId, MemoryId, f64)>,
    /// Measurements in execution order, with sampled outcomes.
    pub ops: Vec<ReplayOp>,
    pub schedule: SwapSchedule,
    /// Final coefficients before the consumers apply their corrections.
    pub uncorrected: Vec<f64>,
}

/// Per-configuration data shared by all rounds.
#[derive(Clone, Debug)]
pub struct RoundRunner {
    config: ProtocolConfig,
    grid: Grid,
    base_weight: f64,
    links: Option<FidelityDistribution>,
    tier_weights: Vec<f64>,
}

impl RoundRunner {
    pub fn new(config: ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let grid = build_grid(config.grid, config.region)?;
        let base_weight = werner_from_fidelity(config.link_fidelity)?.weight();
        let (links, tier_weights) = if config.distill_rounds > 1 {
            let d = ladder_distribution(&DistillationConfig::new(
                config.distill_rounds,
                config.link_prob,
                config.link_fidelity,
            )?);
            let w = d
                .tiers()
                .iter()
                .map(|&(f, _)| werner_from_fidelity(f.min(1.0)).map(|p| p.weight()))
                .collect::<Result<Vec<_>>>()?;
            (Some(d), w)
        } else {
            (None, vec![base_weight])
        };
        Ok(RoundRunner {
            config,
            grid,
            base_weight,
            links,
            tier_weights,
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Heralds the links of one round and assigns each a Werner weight.
    pub fn herald<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(HeraldedGraph, LinkWeights)> {
        match &self.links {
            None => {
                let graph = herald_links(&self.grid, self.config.link_prob, rng)?;
                let weights = LinkWeights::uniform(self.base_weight);
                Ok((graph, weights))
            }
            Some(dist) => {
                let mut edges = Vec::new();
                let mut weights = LinkWeights::per_memory(4 * self.grid.spec().num_nodes());
                for &(a, b) in self.grid.links() {
                    if let LinkOutcome::Link { tier, .. } = sample_link(dist, rng) {
                        edges.push((a, b));
                        weights.set(a, b, self.tier_weights[tier]);
                    }
                }
                Ok((HeraldedGraph::from_edges(*self.grid.spec(), edges)?, weights))
            }
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RoundOutcome> {
        let (graph, weights) = self.herald(rng)?;
        run_on_graph(&graph, &weights, self.config.k_hop, self.config.scheduler, rng, None)
    }

    pub fn run_traced<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(RoundOutcome, RoundTrace)> {
        let (graph, weights) = self.herald(rng)?;
        let mut trace = RoundTrace::default();
        let out = run_on_graph(&graph, &weights, self.config.k_hop, self.config.scheduler, rng, Some(&mut trace))?;
        Ok((out, trace))
    }
}

/// Werner weight of every heralded link.
#[derive(Clone, Debug, PartialEq)]
pub enum LinkWeights {
    Uniform(f64),
    PerMemory(Vec<f64>),
}

impl LinkWeights {
    pub fn uniform(weight: f64) -> Self {
        LinkWeights::Uniform(weight)
    }

    pub fn per_memory(num_memories: usize) -> Self {
        LinkWeights::PerMemory(vec![f64::NAN; num_memories])
    }

    pub fn set(&mut self, a: MemoryId, b: MemoryId, weight: f64) {
        if let LinkWeights::PerMemory(w) = self {
            w[a.0 as usize] = weight;
            w[b.0 as usize] = weight;
        }
    }

    pub fn get(&self, m: MemoryId) -> f64 {
        match self {
            LinkWeights::Uniform(w) => *w,
            LinkWeights::PerMemory(w) => w[m.0 as usize],
        }
    }
}

/// Runs one round with the given configuration.
pub fn execute_round<R: Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> Result<RoundOutcome> {
    RoundRunner::new(*config)?.run(rng)
}

/// Runs the protocol on an already heralded graph.
pub fn run_on_graph<R: Rng + ?Sized>(
    graph: &HeraldedGraph,
    weights: &LinkWeights,
    k_hop: KHop,
    scheduler: Scheduler,
    rng: &mut R,
    trace: Option<&mut RoundTrace>,
) -> Result<RoundOutcome> {
    let rules = apply_x_rules(graph, k_hop);
    if rules.abort {
        return Ok(RoundOutcome::abort(AbortReason::OversizedPolygon));
    }
    let Some(plan) = plan_route(graph, &rules) else {
        return Ok(RoundOutcome::abort(AbortReason::Disconnected));
    };
    let schedule = plan_schedule(graph, &plan, scheduler);
    let spec = graph.spec();

    let mut states = Vec::with_capacity(plan.links.len());
    for &(a, b) in &plan.links {
        states.push(GhzDiagonalState::werner(a, b, weights.get(a))?);
    }
    let record = trace.is_some();
    let mut tracker = Tracker::new(4 * spec.num_nodes(), states, plan.x_measured.clone(), record);
    let mut lines = Vec::new();
    for visit in &schedule.visits {
        let set = &plan.ghz_sets[visit.node];
        let size = match visit.action {
            Action::Ghz(_) => tracker.fuse(set, rng)?,
            Action::X => tracker.request_x(set[0], rng)?,
            Action::Skip => 0,
        };
        if record {
            lines.push(format!(
                "node={} action={} state_qubits={}",
                spec.coord(visit.node),
                visit.action,
                size
            ));
        }
    }
    let swaps = tracker.swaps;
    let max_qubits = tracker.max_qubits;
    let (state, ops) = tracker.finish(plan.alice_memory)?;
    if state.num_qubits() != 2 || !state.contains(plan.bob_memory) {
        return Err(Error::protocol(format!(
            "final fragment spans {:?}, expected Alice's and Bob's memories",
            state.qubits()
        )));
    }
    let physical = GhzDiagonalState::new(state.qubits().to_vec(), state.physical_coeffs())?;
    let state = state.resolve_frame();
    // the frame permutes Bell labels, leaving coherent information untouched
    let ci_phys = coherent_information(&physical)?;
    let ci = coherent_information(&state)?;
    if (ci - ci_phys).abs() > 1e-12 {
        return Err(Error::protocol("Pauli frame changed the coherent information"));
    }
    // Bell-diagonal labels are symmetric under swapping the two qubits
    let state = state.relabel(vec![plan.alice_memory, plan.bob_memory])?;
    if let Some(t) = trace {
        t.lines = lines;
        t.links = plan.links.iter().map(|&(a, b)| (a, b, weights.get(a))).collect();
        t.ops = ops.unwrap_or_default();
        t.schedule = schedule;
        t.uncorrected = physical.coeffs().to_vec();
    }
    Ok(RoundOutcome {
        aborted: None,
        final_state: Some(state),
        swaps_performed: swaps,
        max_state_qubits: max_qubits,
    })
}
