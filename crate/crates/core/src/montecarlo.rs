//! Trial orchestration: rates, sweeps, envelopes and the polygon study.
//!
//! Every trial draws from its own ChaCha8 stream. The key of a stream is
//! derived from the master seed and the contents of the configuration, and
//! the stream number is the trial index, so a point gives the same numbers
//! whether it runs alone or inside a sweep, and regardless of how rayon
//! splits the work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::network::{build_grid, enumerate_cycles, herald_links, Coord, GridSpec, RegionLevel};
use crate::protocol::{apply_x_rules, KHop, ProtocolConfig, RoundRunner, Scheduler};
use crate::{Error, Result};

/// Minimum number of trials per point of the polygon study.
pub const MIN_CYCLE_TRIALS: u64 = 1000;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fold(words: &[u64]) -> u64 {
    words.iter().fold(0x6a09_e667_f3bc_c909, |h, &w| splitmix64(h ^ w))
}

/// Stream key of a configuration; equal configurations share it.
pub fn point_key(c: &ProtocolConfig) -> u64 {
    let (a, b) = c.grid.consumers();
    let region = match c.region {
        RegionLevel::Level(j) => j as u64,
        RegionLevel::All => u64::MAX,
    };
    let k = match c.k_hop {
        KHop::Hops(k) => k as u64,
        KHop::Global => u64::MAX,
    };
    let sched = match c.scheduler {
        Scheduler::ConsumerGreedy => 0,
        Scheduler::LinearSweep => 1,
    };
    fold(&[
        c.grid.size() as u64,
        a.row as u64,
        a.col as u64,
        b.row as u64,
        b.col as u64,
        c.link_prob.to_bits(),
        c.link_fidelity.to_bits(),
        k,
        region,
        sched,
        c.distill_rounds as u64,
    ])
}

/// The random stream of one trial.
pub fn trial_rng(master_seed: u64, point_key: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(point_key)));
    rng.set_stream(trial);
    rng
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct Sum {
    total: f64,
    carry: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.carry += (self.total - t) + x;
        } else {
            self.carry += (x - t) + self.total;
        }
        self.total = t;
    }

    fn value(&self) -> f64 {
        self.total + self.carry
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateStats {
    pub trials: u64,
    /// Mean of `max(0, I) / t`, aborted rounds counted as zero.
    pub mean_rate: f64,
    pub abort_fraction: f64,
    pub mean_swaps: f64,
    /// Standard error of `mean_rate`.
    pub std_error: f64,
    /// Mean of `I / t` without clamping, aborted rounds counted as zero.
    pub raw_mean_ci: f64,
}

#[derive(Clone, Copy, Debug)]
struct TrialResult {
    rate: f64,
    raw: f64,
    aborted: bool,
    swaps: usize,
}

fn aggregate(results: &[TrialResult]) -> AggregateStats {
    let n = results.len() as f64;
    let (mut rate, mut raw, mut swaps, mut aborts) = (Sum::default(), Sum::default(), Sum::default(), 0usize);
    for r in results {
        rate.add(r.rate);
        raw.add(r.raw);
        swaps.add(r.swaps as f64);
        aborts += usize::from(r.aborted);
    }
    let mean = rate.value() / n;
    let mut sq = Sum::default();
    for r in results {
        sq.add((r.rate - mean) * (r.rate - mean));
    }
    let std_error = if results.len() > 1 {
        (sq.value() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    AggregateStats {
        trials: results.len() as u64,
        mean_rate: mean.max(0.0),
        abort_fraction: aborts as f64 / n,
        mean_swaps: swaps.value() / n,
        std_error,
        raw_mean_ci: raw.value() / n,
    }
}

/// Runs `trials` independent rounds of one configuration.
pub fn run_trials(config: &ProtocolConfig, trials: u64, master_seed: u64) -> Result<AggregateStats> {
    if trials == 0 {
        return Err(Error::config("trials", "at least one trial is required"));
    }
    let runner = RoundRunner::new(*config)?;
    let key = point_key(config);
    let t = config.distill_rounds as f64;
    let results = (0..trials)
        .into_par_iter()
        .map(|i| {
            let out = runner.run(&mut trial_rng(master_seed, key, i))?;
            let ci = out.coherent_information();
            Ok(TrialResult {
                rate: ci.map_or(0.0, |c| c.max(0.0) / t),
                raw: ci.map_or(0.0, |c| c / t),
                aborted: out.aborted.is_some(),
                swaps: out.swaps_performed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&results))
}

/// Lists of values for each configuration field. The sweep is their
/// Cartesian product.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxes {
    pub fidelity: Vec<f64>,
    pub link_prob: Vec<f64>,
    pub grid: Vec<GridSpec>,
    pub region: Vec<RegionLevel>,
    pub k_hop: Vec<KHop>,
    pub scheduler: Vec<Scheduler>,
    pub distill_rounds: Vec<usize>,
}

impl SweepAxes {
    /// One value per axis.
    pub fn single(c: &ProtocolConfig) -> Self {
        SweepAxes {
            fidelity: vec![c.link_fidelity],
            link_prob: vec![c.link_prob],
            grid: vec![c.grid],
            region: vec![c.region],
            k_hop: vec![c.k_hop],
            scheduler: vec![c.scheduler],
            distill_rounds: vec![c.distill_rounds],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lens = [
            ("fidelity", self.fidelity.len()),
            ("link_prob", self.link_prob.len()),
            ("grid", self.grid.len()),
            ("region", self.region.len()),
            ("k", self.k_hop.len()),
            ("scheduler", self.scheduler.len()),
            ("distill_rounds", self.distill_rounds.len()),
        ];
        match lens.iter().find(|(_, n)| *n == 0) {
            Some((field, _)) => Err(Error::config(*field, "axis has no values")),
            None => Ok(()),
        }
    }

    /// Points of the product, fidelity varying fastest.
    pub fn points(&self) -> Vec<ProtocolConfig> {
        let mut out = Vec::new();
        for &grid in &self.grid {
            for &region in &self.region {
                for &k_hop in &self.k_hop {
                    for &scheduler in &self.scheduler {
                        for &distill_rounds in &self.distill_rounds {
                            for &link_prob in &self.link_prob {
                                for &link_fidelity in &self.fidelity {
                                    out.push(ProtocolConfig {
                                        grid,
                                        link_prob,
                                        link_fidelity,
                                        k_hop,
                                        region,
                                        scheduler,
                                        distill_rounds,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSpec {
    pub axes: SweepAxes,
    pub trials: u64,
    pub master_seed: u64,
}

impl SimulationSpec {
    pub fn single(config: ProtocolConfig, trials: u64, master_seed: u64) -> Self {
        SimulationSpec {
            axes: SweepAxes::single(&config),
            trials,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "at least one trial is required"));
        }
        self.axes.validate()?;
        for p in self.axes.points() {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub config: ProtocolConfig,
    pub stats: AggregateStats,
    /// Best mean rate among the rows sharing this row's fidelity, link
    /// probability and consumer distance.
    pub on_envelope: bool,
}

/// Best protocol variant for one (fidelity, link probability, distance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopePoint {
    pub fidelity: f64,
    pub link_prob: f64,
    pub distance: usize,
    pub mean_rate: f64,
    /// Index of the winning row.
    pub row: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub envelope: Vec<EnvelopePoint>,
}

/// Evaluates every point of the sweep and the upper envelope over protocol
/// variants (grid, region, k, scheduler, distillation rounds).
pub fn envelope_sweep(spec: &SimulationSpec) -> Result<SweepTable> {
    spec.validate()?;
    let mut rows = Vec::new();
    for config in spec.axes.points() {
        let stats = run_trials(&config, spec.trials, spec.master_seed)?;
        rows.push(SweepRow {
            config,
            stats,
            on_envelope: false,
        });
    }
    let mut envelope: Vec<EnvelopePoint> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let c = &r.config;
        let d = c.grid.distance();
        match envelope
            .iter_mut()
            .find(|e| e.fidelity == c.link_fidelity && e.link_prob == c.link_prob && e.distance == d)
        {
            Some(e) if r.stats.mean_rate > e.mean_rate => {
                e.mean_rate = r.stats.mean_rate;
                e.row = i;
            }
            Some(_) => {}
            None => envelope.push(EnvelopePoint {
                fidelity: c.link_fidelity,
                link_prob: c.link_prob,
                distance: d,
                mean_rate: r.stats.mean_rate,
                row: i,
            }),
        }
    }
    for e in &envelope {
        rows[e.row].on_envelope = true;
    }
    Ok(SweepTable { rows, envelope })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleRow {
    pub n: usize,
    pub p: f64,
    pub cycle_len: usize,
    /// Rounds whose heralded graph has a cycle of exactly `cycle_len` edges.
    pub fraction_pre: f64,
    /// Rounds in which a polygon survives the rules for `k = (cycle_len - 2) / 2`.
    pub fraction_post: f64,
}

/// Polygon statistics on the full `n × n` grid with consumers in opposite
/// corners. For each `k`, the polygon length is `2k + 2`.
pub fn cycle_fraction_study(sizes: &[usize], link_probs: &[f64], ks: &[usize], trials: u64, master_seed: u64) -> Result<Vec<CycleRow>> {
    if trials < MIN_CYCLE_TRIALS {
        return Err(Error::config("trials", format!("the polygon study needs at least {MIN_CYCLE_TRIALS} trials")));
    }
    for (field, empty) in [("grid", sizes.is_empty()), ("link_prob", link_probs.is_empty()), ("k", ks.is_empty())] {
        if empty {
            return Err(Error::config(field, "axis has no values"));
        }
    }
    if let Some(&k) = ks.iter().find(|&&k| k == 0) {
        return Err(Error::config("k", format!("k must be at least 1, got {k}")));
    }
    if let Some(&p) = link_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::config("link_prob", format!("{p} outside [0, 1]")));
    }
    let mut rows = Vec::new();
    for &n in sizes {
        let spec = GridSpec::new(n, Coord::new(0, 0), Coord::new(n.saturating_sub(1), n.saturating_sub(1)))?;
        let grid = build_grid(spec, RegionLevel::All)?;
        for &p in link_probs {
            let key = fold(&[0xc1c1e, n as u64, p.to_bits()]);
            let hits = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let g = herald_links(&grid, p, &mut trial_rng(master_seed, key, i))?;
                    let longest = ks.iter().map(|&k| 2 * k + 2).max().unwrap_or(4);
                    let report = enumerate_cycles(&g, longest);
                    Ok(ks
                        .iter()
                        .map(|&k| {
                            let pre = report.count_of_len(2 * k + 2) > 0;
                            let post = apply_x_rules(&g, KHop::Hops(k)).abort;
                            (pre, post)
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            for (j, &k) in ks.iter().enumerate() {
                let pre = hits.iter().filter(|h| h[j].0).count();
                let post = hits.iter().filter(|h| h[j].1).count();
                rows.push(CycleRow {
                    n,
                    p,
                    cycle_len: 2 * k + 2,
                    fraction_pre: pre as f64 / trials as f64,
                    fraction_post: post as f64 / trials as f64,
                });
            }
        }
    }
    Ok(rows)
}
