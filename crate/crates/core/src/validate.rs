//! Oracle suites behind the `validate` command.
//!
//! Each suite compares a closed-form routine with an independent
//! computation and reports the largest deviation seen. The six-step ladder
//! is also set against its hand-derived closed form; that table is
//! informational and never fails the run.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distill::{bbpssw, ladder_distribution, simulate_ladder, six_step_closed_form, DistillationConfig, LinkOutcome};
use crate::montecarlo::trial_rng;
use crate::network::{Coord, GridSpec};
use crate::oracle::{bbpssw_dense, ghz_vector, project, replay, x_eigenvector, DensityMatrix};
use crate::protocol::{KHop, ProtocolConfig, RoundRunner, Scheduler};
use crate::state::{ghz_swap_equal, ghz_swap_mixed, merge_swap_with_outcome, x_measure, GhzBasisIndex, GhzDiagonalState, MemoryId, PauliFrame};
use crate::Result;

/// Tolerance of single-formula comparisons.
pub const FORMULA_TOL: f64 = 1e-12;
/// Tolerance of whole-round replays.
pub const ROUND_TOL: f64 = 1e-10;
/// Largest accepted z-score between the ladder and its simulation.
pub const LADDER_SIGMAS: f64 = 5.0;

/// Deliberate defects for exercising the failure path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Shift one coefficient of every closed-form state before comparing.
    CorruptCoefficient,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Samples per ladder length in the distillation suite.
    pub ladder_samples: u64,
    /// Random rounds replayed in the protocol suite.
    pub rounds: usize,
    pub fault: Option<Fault>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            seed: 1,
            ladder_samples: 200_000,
            rounds: 50,
            fault: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub failures: Vec<String>,
    pub note: Option<String>,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        SuiteReport {
            name,
            checks: 0,
            max_deviation: 0.0,
            tolerance,
            failures: Vec::new(),
            note: None,
        }
    }

    fn record(&mut self, what: impl FnOnce() -> String, deviation: f64) {
        self.checks += 1;
        if deviation.is_nan() || deviation > self.tolerance {
            self.failures.push(format!("{}: deviation {deviation:.3e}", what()));
        }
        if deviation.is_nan() || deviation > self.max_deviation {
            self.max_deviation = deviation;
        }
    }

    fn fail(&mut self, what: String) {
        self.checks += 1;
        self.failures.push(what);
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<16} checks={:<4} max_deviation={:.3e} tolerance={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.max_deviation,
            self.tolerance
        )?;
        if let Some(note) = &self.note {
            write!(f, " {note}")?;
        }
        for line in self.failures.iter().take(5) {
            write!(f, "\n    {line}")?;
        }
        if self.failures.len() > 5 {
            write!(f, "\n    ... {} more", self.failures.len() - 5)?;
        }
        Ok(())
    }
}

/// One outcome of the six-step ladder under three computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SixStepRow {
    pub outcome: &'static str,
    pub enumerated: f64,
    pub closed_form: f64,
    pub simulated: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SixStepTable {
    pub link_prob: f64,
    pub fidelity: f64,
    pub samples: u64,
    pub rows: Vec<SixStepRow>,
}

impl fmt::Display for SixStepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "six-step ladder at p={} F={} ({} samples)",
            self.link_prob, self.fidelity, self.samples
        )?;
        writeln!(f, "  {:<8} {:>12} {:>12} {:>12} {:>12}", "outcome", "enumerated", "closed-form", "simulated", "difference")?;
        for r in &self.rows {
            writeln!(
                f,
                "  {:<8} {:>12.8} {:>12.8} {:>12.8} {:>12.3e}",
                r.outcome,
                r.enumerated,
                r.closed_form,
                r.simulated,
                r.enumerated - r.closed_form
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub suites: Vec<SuiteReport>,
    pub six_step: SixStepTable,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(f, "{s}")?;
        }
        write!(f, "{}", self.six_step)
    }
}

pub fn run_validation(options: &ValidationOptions) -> Result<ValidationReport> {
    Ok(ValidationReport {
        suites: vec![state_suite(options)?, protocol_suite(options)?, ladder_suite(options)?],
        six_step: six_step_table(options)?,
    })
}

fn corrupt(state: GhzDiagonalState, fault: Option<Fault>) -> Vec<f64> {
    let mut c = state.physical_coeffs();
    if fault == Some(Fault::CorruptCoefficient) {
        c[0] -= 1e-3;
        c[1] += 1e-3;
    }
    c
}

fn deviation(coeffs: &[f64], rho: &DensityMatrix) -> Result<f64> {
    let (diag, off) = rho.ghz_diagonal_coefficients()?;
    Ok(coeffs.iter().zip(&diag).map(|(a, b)| (a - b).abs()).fold(off, f64::max))
}

fn random_state(rng: &mut ChaCha8Rng, qubits: Vec<MemoryId>) -> Result<GhzDiagonalState> {
    let n = qubits.len();
    let raw: Vec<f64> = (0..1 << n).map(|_| rng.gen::<f64>().powi(3)).collect();
    let sum: f64 = raw.iter().sum();
    let mut frame = PauliFrame::identity(n);
    for q in 0..n {
        if rng.gen_bool(0.3) {
            frame.apply_x(q);
        }
        if rng.gen_bool(0.3) {
            frame.apply_z(q);
        }
    }
    GhzDiagonalState::new(qubits, raw.iter().map(|c| c / sum).collect())?.with_frame(frame)
}

/// Werner pairs `(outer, node)`; the node halves are projected together.
fn dense_swap(weights: &[f64]) -> Result<DensityMatrix> {
    let factors: Vec<DensityMatrix> = weights.iter().map(|&w| DensityMatrix::werner(w)).collect();
    let measured: Vec<usize> = (0..weights.len()).map(|i| 2 * i + 1).collect();
    Ok(project(&factors, &measured, &ghz_vector(weights.len(), GhzBasisIndex::default())?)?.0)
}

fn state_suite(options: &ValidationOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("state-algebra", FORMULA_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for n in 2..=5 {
        for w in [0.0, 0.25, 0.5, 0.8, 0.95, 1.0] {
            let dev = deviation(&corrupt(ghz_swap_equal(n, w)?, options.fault), &dense_swap(&vec![w; n])?)?;
            report.record(|| format!("equal swap n={n} w={w}"), dev);
        }
    }
    for _ in 0..20 {
        let n = rng.gen_range(2..=4);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let dev = deviation(&corrupt(ghz_swap_mixed(&weights)?, options.fault), &dense_swap(&weights)?)?;
        report.record(|| format!("mixed swap {weights:?}"), dev);
    }
    for _ in 0..20 {
        let n = rng.gen_range(3..=5u32);
        let state = random_state(&mut rng, (0..n).map(MemoryId).collect())?;
        let pos = rng.gen_range(0..n as usize);
        for outcome in [false, true] {
            let (rho, _) = project(&[DensityMatrix::from_state(&state)?], &[pos], &x_eigenvector(outcome))?;
            let dev = deviation(&corrupt(x_measure(&state, pos, outcome)?, options.fault), &rho)?;
            report.record(|| format!("x measurement n={n} position={pos} outcome={outcome}"), dev);
        }
    }
    for _ in 0..30 {
        let main_n = rng.gen_range(2..=4u32);
        let main = random_state(&mut rng, (0..main_n).map(MemoryId).collect())?;
        let incident = (0..rng.gen_range(1..=3u32))
            .map(|i| random_state(&mut rng, vec![MemoryId(100 + 2 * i), MemoryId(101 + 2 * i)]))
            .collect::<Result<Vec<_>>>()?;
        let main_pos = rng.gen_range(0..main_n as usize);
        let mut node = vec![MemoryId(main_pos as u32)];
        let mut measured = vec![main_pos];
        let mut offset = main_n as usize;
        for i in 0..incident.len() {
            let side = rng.gen_range(0..2usize);
            node.push(MemoryId(100 + 2 * i as u32 + side as u32));
            measured.push(offset + side);
            offset += 2;
        }
        let outcome = GhzBasisIndex::unpack(rng.gen_range(0..1usize << node.len()));
        let fused = merge_swap_with_outcome(&main, &incident, &node, outcome)?;
        let mut factors = vec![DensityMatrix::from_state(&main)?];
        for s in &incident {
            factors.push(DensityMatrix::from_state(s)?);
        }
        let (rho, _) = project(&factors, &measured, &ghz_vector(node.len(), outcome)?)?;
        let dev = deviation(&corrupt(fused, options.fault), &rho)?;
        report.record(|| format!("merge swap main={main_n} arity={}", node.len()), dev);
    }
    Ok(report)
}

fn protocol_suite(options: &ValidationOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("protocol", ROUND_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x5eed);
    let placements = [((0, 0), (2, 2)), ((0, 1), (1, 1)), ((0, 2), (1, 0)), ((1, 0), (1, 2))];
    let mut delivered = 0;
    let mut attempt = 0u64;
    while delivered < options.rounds {
        attempt += 1;
        if attempt > 100 * options.rounds as u64 + 100 {
            report.fail("too few rounds delivered a state".into());
            break;
        }
        let (a, b) = placements[attempt as usize % placements.len()];
        let grid = GridSpec::new(3, Coord::new(a.0, a.1), Coord::new(b.0, b.1))?;
        let mut cfg = ProtocolConfig::new(grid, rng.gen_range(0.5..1.0), rng.gen_range(0.7..1.0));
        cfg.scheduler = if attempt % 2 == 0 { Scheduler::LinearSweep } else { Scheduler::ConsumerGreedy };
        cfg.k_hop = if attempt % 3 == 0 { KHop::Hops(1) } else { KHop::Global };
        let (out, trace) = RoundRunner::new(cfg)?.run_traced(&mut ChaCha8Rng::seed_from_u64(attempt))?;
        if out.final_state.is_none() {
            continue;
        }
        delivered += 1;
        let (_, rho) = replay(&trace.links, &trace.ops)?;
        let mut coeffs = trace.uncorrected.clone();
        if options.fault == Some(Fault::CorruptCoefficient) {
            coeffs[0] -= 1e-3;
            coeffs[1] += 1e-3;
        }
        let dev = deviation(&coeffs, &rho)?;
        report.record(|| format!("round {attempt} ({} links)", trace.links.len()), dev);
    }
    Ok(report)
}

fn tier_index(outcome: LinkOutcome) -> usize {
    match outcome {
        LinkOutcome::NoLink => 0,
        LinkOutcome::Link { tier, .. } => tier + 1,
    }
}

fn simulate_counts(cfg: &DistillationConfig, samples: u64, seed: u64) -> Vec<u64> {
    let key = cfg.rounds() as u64;
    let slots = cfg.tier_fidelities().len() + 1;
    (0..samples)
        .into_par_iter()
        .fold(
            || vec![0u64; slots],
            |mut acc, i| {
                acc[tier_index(simulate_ladder(cfg, &mut trial_rng(seed, key, i)))] += 1;
                acc
            },
        )
        .reduce(|| vec![0u64; slots], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect())
}

fn ladder_suite(options: &ValidationOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("distillation", FORMULA_TOL);
    for i in 0..=30 {
        let f = 0.25 + 0.75 * i as f64 / 30.0;
        let (fa, pa) = bbpssw(f)?;
        let (fd, pd) = bbpssw_dense(f)?;
        report.record(|| format!("bbpssw f={f}"), (fa - fd).abs().max((pa - pd).abs()));
    }
    let mut worst_z: f64 = 0.0;
    for t in [2, 4, 6] {
        let cfg = DistillationConfig::new(t, 0.6, 0.9)?;
        let d = ladder_distribution(&cfg);
        report.record(|| format!("ladder t={t} total"), (d.total() - 1.0).abs());
        let exact: Vec<f64> = std::iter::once(d.no_link()).chain(d.tiers().iter().map(|&(_, p)| p)).collect();
        let counts = simulate_counts(&cfg, options.ladder_samples, options.seed);
        let n = options.ladder_samples as f64;
        for (slot, (&q, &c)) in exact.iter().zip(&counts).enumerate() {
            let freq = c as f64 / n;
            let sigma = (q * (1.0 - q) / n).sqrt();
            let z = if sigma > 0.0 { (freq - q).abs() / sigma } else if c == 0 { 0.0 } else { f64::INFINITY };
            worst_z = worst_z.max(z);
            report.checks += 1;
            if z > LADDER_SIGMAS {
                report.failures.push(format!("ladder t={t} slot {slot}: exact {q:.6} simulated {freq:.6} ({z:.1} sigma)"));
            }
        }
    }
    report.note = Some(format!("ladder_max_z={worst_z:.2}"));
    Ok(report)
}

fn six_step_table(options: &ValidationOptions) -> Result<SixStepTable> {
    let (p, f) = (0.7, 0.85);
    let cfg = DistillationConfig::new(6, p, f)?;
    let d = ladder_distribution(&cfg);
    let printed = six_step_closed_form(p, f)?;
    let counts = simulate_counts(&cfg, options.ladder_samples, options.seed ^ 6);
    let n = options.ladder_samples as f64;
    let names = ["no-link", "f0", "f2", "f4"];
    let enumerated: Vec<f64> = std::iter::once(d.no_link()).chain(d.tiers().iter().map(|&(_, q)| q)).collect();
    let rows = (0..4)
        .map(|i| SixStepRow {
            outcome: names[i],
            enumerated: enumerated[i],
            closed_form: printed[i],
            simulated: counts[i] as f64 / n,
        })
        .collect();
    Ok(SixStepTable {
        link_prob: p,
        fidelity: f,
        samples: options.ladder_samples,
        rows,
    })
}
