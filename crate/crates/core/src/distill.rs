//! Link-level 2→1 recurrence distillation.
//!
//! Over `t` time steps a link heralds `h ~ Binomial(t, p)` raw pairs of
//! fidelity `f_0`. Pairs are then distilled tier by tier: at tier `ℓ` the
//! pairs are matched two at a time, each success lands in tier `ℓ + 1`, an
//! odd pair stays behind. The link ends up with the best surviving pair.
//! Tier `ℓ` has fidelity `f_{2^ℓ}`, i.e. `f_0, f_2, f_4, ...`.

use std::fmt;

use rand::Rng;

use crate::{Error, Result};

/// Largest number of time steps handled.
pub const MAX_ROUNDS: usize = 8;

/// Output fidelity and success probability of one BBPSSW step on two
/// Werner pairs of fidelity `f`.
pub fn bbpssw(f: f64) -> Result<(f64, f64)> {
    if !(0.25..=1.0).contains(&f) {
        return Err(Error::domain(format!("fidelity {f} outside [1/4, 1]")));
    }
    let e = (1.0 - f) / 3.0;
    let success = f * f + 2.0 * f * e + 5.0 * e * e;
    Ok(((f * f + e * e) / success, success))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistillationConfig {
    rounds: usize,
    link_prob: f64,
    base_fidelity: f64,
}

impl DistillationConfig {
    pub fn new(rounds: usize, link_prob: f64, base_fidelity: f64) -> Result<Self> {
        if !(1..=MAX_ROUNDS).contains(&rounds) {
            return Err(Error::config("distill_rounds", format!("{rounds} outside 1..={MAX_ROUNDS}")));
        }
        if !(0.0..=1.0).contains(&link_prob) {
            return Err(Error::config("link_prob", format!("{link_prob} outside [0, 1]")));
        }
        if !(0.25..=1.0).contains(&base_fidelity) {
            return Err(Error::config("fidelity", format!("{base_fidelity} outside [1/4, 1]")));
        }
        Ok(DistillationConfig {
            rounds,
            link_prob,
            base_fidelity,
        })
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn link_prob(&self) -> f64 {
        self.link_prob
    }

    pub fn base_fidelity(&self) -> f64 {
        self.base_fidelity
    }

    /// Fidelities `f_0, f_2, f_4, ...` of the tiers reachable in `t` steps.
    pub fn tier_fidelities(&self) -> Vec<f64> {
        let tiers = usize::BITS as usize - self.rounds.leading_zeros() as usize;
        let mut out = vec![self.base_fidelity];
        while out.len() < tiers {
            let last = *out.last().expect("non-empty");
            out.push(bbpssw(last).expect("fidelity stays in range").0);
        }
        out
    }
}

/// Result of one link over `t` time steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinkOutcome {
    NoLink,
    Link { tier: usize, fidelity: f64 },
}

impl fmt::Display for LinkOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkOutcome::NoLink => write!(f, "no-link"),
            LinkOutcome::Link { tier, .. } => write!(f, "f{}", if *tier == 0 { 0 } else { 1 << tier }),
        }
    }
}

/// Probability mass over `{no-link, f_0, f_2, f_4, ...}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FidelityDistribution {
    no_link: f64,
    tiers: Vec<(f64, f64)>,
}

impl FidelityDistribution {
    pub fn no_link(&self) -> f64 {
        self.no_link
    }

    /// `(fidelity, probability)` per tier.
    pub fn tiers(&self) -> &[(f64, f64)] {
        &self.tiers
    }

    pub fn outcomes(&self) -> Vec<(LinkOutcome, f64)> {
        std::iter::once((LinkOutcome::NoLink, self.no_link))
            .chain(
                self.tiers
                    .iter()
                    .enumerate()
                    .map(|(tier, &(fidelity, p))| (LinkOutcome::Link { tier, fidelity }, p)),
            )
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.no_link + self.tiers.iter().map(|t| t.1).sum::<f64>()
    }

    /// Probability that the link is usable.
    pub fn link_prob(&self) -> f64 {
        1.0 - self.no_link
    }

    pub fn point_mass(outcome: LinkOutcome) -> Self {
        match outcome {
            LinkOutcome::NoLink => FidelityDistribution {
                no_link: 1.0,
                tiers: Vec::new(),
            },
            LinkOutcome::Link { tier, fidelity } => {
                let mut tiers = vec![(fidelity, 0.0); tier + 1];
                tiers[tier].1 = 1.0;
                FidelityDistribution { no_link: 0.0, tiers }
            }
        }
    }
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Exact distribution by enumerating heralding counts and distillation
/// successes tier by tier.
pub fn ladder_distribution(config: &DistillationConfig) -> FidelityDistribution {
    let fidelities = config.tier_fidelities();
    let success: Vec<f64> = fidelities.iter().map(|&f| bbpssw(f).expect("in range").1).collect();
    let mut mass = vec![0.0; fidelities.len() + 1]; // index 0 = no link, 1 + tier
    fn walk(level: usize, count: usize, best: usize, weight: f64, success: &[f64], mass: &mut [f64]) {
        if count == 0 {
            mass[best] += weight;
            return;
        }
        if count == 1 {
            mass[level + 1] += weight;
            return;
        }
        let pairs = count / 2;
        let best = if count % 2 == 1 { level + 1 } else { best };
        for s in 0..=pairs {
            walk(level + 1, s, best, weight * binomial_pmf(pairs, s, success[level]), success, mass);
        }
    }
    for h in 0..=config.rounds {
        walk(0, h, 0, binomial_pmf(config.rounds, h, config.link_prob), &success, &mut mass);
    }
    FidelityDistribution {
        no_link: mass[0],
        tiers: fidelities.into_iter().zip(mass[1..].iter().copied()).collect(),
    }
}

/// One draw from the distribution.
pub fn sample_link<R: Rng + ?Sized>(dist: &FidelityDistribution, rng: &mut R) -> LinkOutcome {
    let u: f64 = rng.gen();
    let mut acc = dist.no_link;
    if u < acc {
        return LinkOutcome::NoLink;
    }
    for (tier, &(fidelity, p)) in dist.tiers.iter().enumerate() {
        acc += p;
        if u < acc {
            return LinkOutcome::Link { tier, fidelity };
        }
    }
    // round-off: fall back to the last outcome with mass
    dist.tiers
        .iter()
        .enumerate()
        .rev()
        .find(|(_, t)| t.1 > 0.0)
        .map(|(tier, &(fidelity, _))| LinkOutcome::Link { tier, fidelity })
        .unwrap_or(LinkOutcome::NoLink)
}

/// Direct simulation of the ladder: herald pairs one step at a time, then
/// repeatedly distill the two lowest-tier pairs that share a tier.
pub fn simulate_ladder<R: Rng + ?Sized>(config: &DistillationConfig, rng: &mut R) -> LinkOutcome {
    let fidelities = config.tier_fidelities();
    let mut pool: Vec<usize> = (0..config.rounds)
        .filter(|_| rng.gen_bool(config.link_prob))
        .map(|_| 0)
        .collect();
    loop {
        pool.sort_unstable();
        let Some(i) = pool.windows(2).position(|w| w[0] == w[1]) else { break };
        let tier = pool[i];
        pool.drain(i..i + 2);
        let (_, p) = bbpssw(fidelities[tier]).expect("in range");
        if rng.gen_bool(p) {
            pool.push(tier + 1);
        }
    }
    match pool.iter().max() {
        None => LinkOutcome::NoLink,
        Some(&tier) => LinkOutcome::Link {
            tier,
            fidelity: fidelities[tier],
        },
    }
}

/// Hand-derived six-step distribution `[no-link, f_0, f_2, f_4]`, term by
/// term. It leaves out the branch where five pairs herald, both first-tier
/// distillations succeed and the second-tier one fails (the spare `f_0` pair
/// is then used), so it sums to `1 − 6p⁵(1−p)·P_0²(1−P_2)`.
pub fn six_step_closed_form(link_prob: f64, base_fidelity: f64) -> Result<[f64; 4]> {
    let p = link_prob;
    let q = 1.0 - p;
    let (f2, p0) = bbpssw(base_fidelity)?;
    let (_, p2) = bbpssw(f2)?;
    let no_link = q.powi(6)
        + 15.0 * p * p * q.powi(4) * (1.0 - p0)
        + 15.0 * p.powi(4) * q * q * ((1.0 - p0).powi(2) + p0 * p0 * (1.0 - p2))
        + p.powi(6) * ((1.0 - p0).powi(3) + 3.0 * (1.0 - p0) * p0 * p0 * (1.0 - p2));
    let f0 = 6.0 * p * q.powi(5) + 20.0 * p.powi(3) * q.powi(3) * (1.0 - p0) + 6.0 * p.powi(5) * q * (1.0 - p0).powi(2);
    let f2_mass = 15.0 * p * p * q.powi(4) * p0
        + 15.0 * p.powi(4) * q * q * 2.0 * p0 * (1.0 - p0)
        + p.powi(6) * (3.0 * (1.0 - p0).powi(2) * p0 + p0.powi(3) * (1.0 - p2))
        + 6.0 * p.powi(5) * q * 2.0 * p0 * (1.0 - p0)
        + 20.0 * p.powi(3) * q.powi(3) * p0;
    let f4 = 15.0 * p.powi(4) * q * q * p0 * p0 * p2
        + 6.0 * p.powi(5) * q * p0 * p0 * p2
        + p.powi(6) * (3.0 * (1.0 - p0) * p0 * p0 * p2 + p0.powi(3) * p2);
    Ok([no_link, f0, f2_mass, f4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bbpssw_fixed_points() {
        assert_eq!(bbpssw(1.0).unwrap(), (1.0, 1.0));
        assert_eq!(bbpssw(0.25).unwrap(), (0.25, 0.5));
        assert!(bbpssw(0.2).is_err());
    }

    #[test]
    fn bbpssw_improves_only_above_one_half() {
        let (half, _) = bbpssw(0.5).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
        for i in 1..200 {
            let f = 0.25 + 0.75 * i as f64 / 200.0;
            let (out, p) = bbpssw(f).unwrap();
            if f > 0.5 {
                assert!(out > f, "f={f}");
            } else if f < 0.5 {
                assert!(out < f, "f={f}");
            }
            assert!(p > 0.0 && p <= 1.0);
        }
    }

    #[test]
    fn one_and_two_steps() {
        let c = DistillationConfig::new(1, 0.3, 0.9).unwrap();
        let d = ladder_distribution(&c);
        assert!((d.no_link() - 0.7).abs() < 1e-15);
        assert!((d.tiers()[0].1 - 0.3).abs() < 1e-15);

        let (p, f) = (0.55, 0.9);
        let (_, p0) = bbpssw(f).unwrap();
        let d = ladder_distribution(&DistillationConfig::new(2, p, f).unwrap());
        assert!((d.no_link() - ((1.0 - p) * (1.0 - p) + p * p * (1.0 - p0))).abs() < 1e-15);
        assert!((d.tiers()[0].1 - 2.0 * p * (1.0 - p)).abs() < 1e-15);
        assert!((d.tiers()[1].1 - p * p * p0).abs() < 1e-15);
    }

    #[test]
    fn sums_to_one() {
        for t in 1..=MAX_ROUNDS {
            for pi in 1..=10 {
                for fi in 0..=8 {
                    let c = DistillationConfig::new(t, pi as f64 / 10.0, 0.6 + 0.05 * fi as f64).unwrap();
                    assert!((ladder_distribution(&c).total() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn six_step_closed_form_differs_by_one_branch() {
        let (p, f) = (0.7, 0.85);
        let d = ladder_distribution(&DistillationConfig::new(6, p, f).unwrap());
        let printed = six_step_closed_form(p, f).unwrap();
        let (f2, p0) = bbpssw(f).unwrap();
        let (_, p2) = bbpssw(f2).unwrap();
        let missing = 6.0 * p.powi(5) * (1.0 - p) * p0 * p0 * (1.0 - p2);
        assert!((d.no_link() - printed[0]).abs() < 1e-14);
        assert!((d.tiers()[0].1 - printed[1] - missing).abs() < 1e-14);
        assert!((d.tiers()[1].1 - printed[2]).abs() < 1e-14);
        assert!((d.tiers()[2].1 - printed[3]).abs() < 1e-14);
    }

    #[test]
    fn sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let point = FidelityDistribution::point_mass(LinkOutcome::Link { tier: 1, fidelity: 0.9 });
        assert_eq!(sample_link(&point, &mut rng), LinkOutcome::Link { tier: 1, fidelity: 0.9 });
        let none = FidelityDistribution::point_mass(LinkOutcome::NoLink);
        assert_eq!(sample_link(&none, &mut rng), LinkOutcome::NoLink);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(DistillationConfig::new(0, 0.5, 0.9).is_err());
        assert!(DistillationConfig::new(9, 0.5, 0.9).is_err());
        assert!(DistillationConfig::new(2, 1.5, 0.9).is_err());
        assert!(DistillationConfig::new(2, 0.5, 0.2).is_err());
    }
}
