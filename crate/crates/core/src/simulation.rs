//! Direct-method stochastic simulation and empirical transient laws.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kinetics::{intensity, jump};
use crate::network::ReactionNetwork;
use crate::LatticeState;

pub const DEFAULT_MAX_EVENTS: u64 = 10_000_000;
pub const DEFAULT_REPLICATES: u64 = 100_000;
pub const DEFAULT_BOX_RADIUS: u32 = 200;
/// Largest fraction of exploded replicates that is folded into the
/// out-of-box mass instead of failing the run.
pub const EXPLOSION_TOLERANCE: f64 = 1e-3;

/// Replicates handed to one worker task.
const CHUNK: u64 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub seed: u64,
    pub replicates: u64,
    pub max_events: u64,
}

impl SimulationConfig {
    pub fn new(seed: u64, replicates: u64) -> Self {
        SimulationConfig {
            seed,
            replicates,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    /// Independent stream for replicate `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    fn validate(&self) -> Result<(), SimulationError> {
        if self.replicates == 0 || self.max_events == 0 {
            return Err(SimulationError::InvalidConfig(
                "replicates and max_events must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("explosion guard: {events} events from {origin:?} before reaching time {time}")]
    Explosion {
        origin: LatticeState,
        time: f64,
        events: u64,
    },
    #[error("{exploded} of {replicates} replicates hit the event cap (more than 0.1%)")]
    TooManyExplosions { exploded: u64, replicates: u64 },
    #[error("invalid simulation input: {0}")]
    InvalidConfig(String),
}

/// Run one trajectory from `x0`, recording the state at each of `times`
/// (non-decreasing). Returns the recorded states or the time at which the
/// event cap was hit together with the states recorded before it.
fn run_trajectory<R: Rng>(
    network: &ReactionNetwork,
    x0: &[u32],
    times: &[f64],
    rng: &mut R,
    max_events: u64,
) -> Result<Vec<LatticeState>, (usize, u64)> {
    let reactions = network.reactions();
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut events = 0u64;
    let mut out = Vec::with_capacity(times.len());
    let mut rates = vec![0.0; reactions.len()];
    let mut next = 0;
    loop {
        let mut total = 0.0;
        for (slot, r) in rates.iter_mut().zip(reactions) {
            *slot = intensity(r, &x);
            total += *slot;
        }
        let hold: f64 = if total > 0.0 {
            rng.sample::<f64, _>(Exp1) / total
        } else {
            f64::INFINITY
        };
        let t_next = t + hold;
        while next < times.len() && times[next] < t_next {
            out.push(x.clone());
            next += 1;
        }
        if next == times.len() {
            return Ok(out);
        }
        if events == max_events {
            return Err((next, events));
        }
        // Select the channel with probability proportional to its intensity.
        let mut u = rng.random::<f64>() * total;
        let mut chosen = rates.len() - 1;
        for (i, &rate) in rates.iter().enumerate() {
            if u < rate {
                chosen = i;
                break;
            }
            u -= rate;
        }
        while rates[chosen] == 0.0 {
            chosen -= 1;
        }
        x = jump(&reactions[chosen], &x);
        t = t_next;
        events += 1;
    }
}

/// Exact sample of `X(t)` given `X(0) = x0`.
pub fn simulate_until<R: Rng>(
    network: &ReactionNetwork,
    x0: &[u32],
    t: f64,
    rng: &mut R,
    max_events: u64,
) -> Result<LatticeState, SimulationError> {
    match run_trajectory(network, x0, &[t], rng, max_events) {
        Ok(mut v) => Ok(v.pop().expect("one snapshot")),
        Err((_, events)) => Err(SimulationError::Explosion {
            origin: x0.to_vec(),
            time: t,
            events,
        }),
    }
}

/// States at every time of `times` along one trajectory.
pub fn simulate_snapshots<R: Rng>(
    network: &ReactionNetwork,
    x0: &[u32],
    times: &[f64],
    rng: &mut R,
    max_events: u64,
) -> Result<Vec<LatticeState>, SimulationError> {
    run_trajectory(network, x0, times, rng, max_events).map_err(|(reached, events)| {
        SimulationError::Explosion {
            origin: x0.to_vec(),
            time: times[reached],
            events,
        }
    })
}

/// Empirical law of `X(t)` over `[0, N]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientDistribution {
    pub origin: LatticeState,
    pub time: f64,
    pub box_radius: u32,
    pub counts: BTreeMap<LatticeState, u64>,
    pub replicates: u64,
    /// Replicates outside the box, including exploded ones.
    pub out_of_box: u64,
    pub exploded: u64,
    /// Coordinate sums over non-exploded replicates (in or out of the box).
    pub sums: Vec<u128>,
    pub sums_sq: Vec<u128>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransientSummary {
    pub origin: LatticeState,
    pub time: f64,
    pub box_radius: u32,
    pub replicates: u64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub out_of_box_mass: f64,
    pub exploded: u64,
    pub support_size: usize,
}

impl TransientDistribution {
    fn empty(origin: &[u32], time: f64, box_radius: u32) -> Self {
        TransientDistribution {
            origin: origin.to_vec(),
            time,
            box_radius,
            counts: BTreeMap::new(),
            replicates: 0,
            out_of_box: 0,
            exploded: 0,
            sums: vec![0; origin.len()],
            sums_sq: vec![0; origin.len()],
        }
    }

    fn record(&mut self, x: &[u32]) {
        self.replicates += 1;
        for (i, &v) in x.iter().enumerate() {
            self.sums[i] += u128::from(v);
            self.sums_sq[i] += u128::from(v) * u128::from(v);
        }
        if x.iter().all(|&v| v <= self.box_radius) {
            *self.counts.entry(x.to_vec()).or_insert(0) += 1;
        } else {
            self.out_of_box += 1;
        }
    }

    fn record_explosion(&mut self) {
        self.replicates += 1;
        self.exploded += 1;
        self.out_of_box += 1;
    }

    /// Integer-count merge; the result does not depend on merge order.
    fn merge(mut self, other: TransientDistribution) -> Self {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.replicates += other.replicates;
        self.out_of_box += other.out_of_box;
        self.exploded += other.exploded;
        for i in 0..self.sums.len() {
            self.sums[i] += other.sums[i];
            self.sums_sq[i] += other.sums_sq[i];
        }
        self
    }

    pub fn frequency(&self, x: &[u32]) -> f64 {
        self.counts.get(x).map_or(0.0, |&c| c as f64 / self.replicates as f64)
    }

    pub fn out_of_box_mass(&self) -> f64 {
        self.out_of_box as f64 / self.replicates as f64
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = (self.replicates - self.exploded) as f64;
        self.sums.iter().map(|&s| s as f64 / n).collect()
    }

    /// Unbiased sample variance per coordinate.
    pub fn variance(&self) -> Vec<f64> {
        let n = (self.replicates - self.exploded) as f64;
        self.sums
            .iter()
            .zip(&self.sums_sq)
            .map(|(&s, &q)| {
                let m = s as f64 / n;
                if n > 1.0 {
                    (q as f64 - n * m * m) / (n - 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn summary(&self) -> TransientSummary {
        TransientSummary {
            origin: self.origin.clone(),
            time: self.time,
            box_radius: self.box_radius,
            replicates: self.replicates,
            mean: self.mean(),
            variance: self.variance(),
            out_of_box_mass: self.out_of_box_mass(),
            exploded: self.exploded,
            support_size: self.counts.len(),
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("serializable")
    }

    /// One row per in-box state: coordinates, count, frequency.
    pub fn to_csv(&self, network: &ReactionNetwork) -> String {
        let mut out = String::new();
        for s in network.species() {
            out.push_str(&s.name);
            out.push(',');
        }
        out.push_str("count,frequency\n");
        for (state, &count) in &self.counts {
            for v in state {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&format!("{count},{}\n", count as f64 / self.replicates as f64));
        }
        out
    }
}

fn check_inputs(network: &ReactionNetwork, x0: &[u32], times: &[f64], config: &SimulationConfig) -> Result<(), SimulationError> {
    config.validate()?;
    if x0.len() != network.dim() {
        return Err(SimulationError::InvalidConfig(format!(
            "initial state has {} coordinates, network has {} species",
            x0.len(),
            network.dim()
        )));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(SimulationError::InvalidConfig(
            "times must be finite, non-negative and non-decreasing".into(),
        ));
    }
    Ok(())
}

/// Transient laws at every time of `times`, one trajectory per replicate.
/// Replicate `i` always uses stream `i` of the seed, so the result is
/// bit-identical for any worker count.
pub fn transient_distributions(
    network: &ReactionNetwork,
    x0: &[u32],
    times: &[f64],
    config: &SimulationConfig,
    box_radius: u32,
) -> Result<Vec<TransientDistribution>, SimulationError> {
    check_inputs(network, x0, times, config)?;
    let empty = || -> Vec<TransientDistribution> {
        times.iter().map(|&t| TransientDistribution::empty(x0, t, box_radius)).collect()
    };
    let chunks = config.replicates.div_ceil(CHUNK);
    let dists = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = empty();
            for i in c * CHUNK..((c + 1) * CHUNK).min(config.replicates) {
                let mut rng = config.stream(i);
                match run_trajectory(network, x0, times, &mut rng, config.max_events) {
                    Ok(states) => {
                        for (d, s) in acc.iter_mut().zip(&states) {
                            d.record(s);
                        }
                    }
                    Err((reached, _)) => {
                        // Snapshots taken before the cap are genuine; later
                        // ones go to the cemetery.
                        let (before, after) = acc.split_at_mut(reached);
                        let mut rng = config.stream(i);
                        let partial = run_trajectory(network, x0, &times[..reached], &mut rng, config.max_events)
                            .expect("prefix finished before the cap");
                        for (d, s) in before.iter_mut().zip(&partial) {
                            d.record(s);
                        }
                        for d in after {
                            d.record_explosion();
                        }
                    }
                }
            }
            acc
        })
        .reduce(empty, |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect());
    for d in &dists {
        if d.exploded as f64 > EXPLOSION_TOLERANCE * d.replicates as f64 {
            return Err(SimulationError::TooManyExplosions {
                exploded: d.exploded,
                replicates: d.replicates,
            });
        }
    }
    Ok(dists)
}

pub fn transient_distribution(
    network: &ReactionNetwork,
    x0: &[u32],
    t: f64,
    config: &SimulationConfig,
    box_radius: u32,
) -> Result<TransientDistribution, SimulationError> {
    Ok(transient_distributions(network, x0, &[t], config, box_radius)?.remove(0))
}

/// One-jump neighbours of `x` that stay inside `[0, N]^d`.
fn neighbours<'a>(network: &'a ReactionNetwork, x: &'a [u32], n: u32) -> impl Iterator<Item = LatticeState> + 'a {
    network
        .reactions()
        .iter()
        .filter(move |r| intensity(r, x) > 0.0)
        .map(move |r| jump(r, x))
        .filter(move |z| z.iter().all(|&v| v <= n))
}

fn reaches(network: &ReactionNetwork, from: &[u32], to: &[u32], n: u32) -> bool {
    if from == to {
        return true;
    }
    let mut seen: HashSet<LatticeState> = HashSet::from([from.to_vec()]);
    let mut queue = VecDeque::from([from.to_vec()]);
    while let Some(x) = queue.pop_front() {
        for z in neighbours(network, &x, n) {
            if z == to {
                return true;
            }
            if seen.insert(z.clone()) {
                queue.push_back(z);
            }
        }
    }
    false
}

/// Box-restricted check that `x0` and the origin communicate. A probe, not a
/// proof: paths leaving the box are not explored.
pub fn irreducibility_probe(network: &ReactionNetwork, x0: &[u32], box_radius: u32) -> bool {
    let origin = vec![0; network.dim()];
    if x0 == origin.as_slice() {
        // Nothing to compare against; look for any escape and return path.
        return match neighbours(network, x0, box_radius).next() {
            Some(z) => reaches(network, &z, x0, box_radius),
            None => false,
        };
    }
    reaches(network, x0, &origin, box_radius) && reaches(network, &origin, x0, box_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;
    use crate::networks;

    #[test]
    fn absorbing_network_stays_put() {
        let net = ReactionNetwork::new(["A", "B"], vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(simulate_until(&net, &[3, 4], 10.0, &mut rng, 10).unwrap(), vec![3, 4]);
        assert!(!irreducibility_probe(&net, &[1, 0], 5));
    }

    #[test]
    fn time_zero_is_point_mass() {
        let net = parse_network(networks::NETWORK5).unwrap();
        let d = transient_distribution(&net, &[2, 0, 1], 0.0, &SimulationConfig::new(3, 1000), 10).unwrap();
        assert_eq!(d.counts.len(), 1);
        assert_eq!(d.frequency(&[2, 0, 1]), 1.0);
        assert_eq!(d.out_of_box, 0);
    }

    #[test]
    fn explosion_guard() {
        let net = parse_network("0 -> S").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = simulate_until(&net, &[0], 1e6, &mut rng, 100).unwrap_err();
        assert!(matches!(err, SimulationError::Explosion { events: 100, .. }));
        let mut cfg = SimulationConfig::new(4, 200);
        cfg.max_events = 5;
        let err = transient_distribution(&net, &[0], 100.0, &cfg, 10).unwrap_err();
        assert!(matches!(err, SimulationError::TooManyExplosions { exploded: 200, .. }));
        // The guard applies to snapshot grids as well.
        cfg.replicates = 1;
        let snaps = transient_distributions(&net, &[0], &[0.0, 100.0], &cfg, 10);
        assert!(snaps.is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let net = parse_network("0 -> S").unwrap();
        let cfg = SimulationConfig::new(4, 0);
        assert!(transient_distribution(&net, &[0], 1.0, &cfg, 10).is_err());
        let cfg = SimulationConfig::new(4, 10);
        assert!(transient_distribution(&net, &[0, 1], 1.0, &cfg, 10).is_err());
        assert!(transient_distributions(&net, &[0], &[2.0, 1.0], &cfg, 10).is_err());
    }

    #[test]
    fn out_of_box_and_csv() {
        let net = parse_network("0 -> S @ 10").unwrap();
        let d = transient_distribution(&net, &[0], 1.0, &SimulationConfig::new(9, 2000), 5).unwrap();
        let total: u64 = d.counts.values().sum::<u64>() + d.out_of_box;
        assert_eq!(total, d.replicates);
        assert!(d.out_of_box_mass() > 0.9);
        let csv = d.to_csv(&net);
        assert!(csv.starts_with("S,count,frequency\n"));
        assert!(d.summary_json().contains("out_of_box_mass"));
    }

    #[test]
    fn snapshots_match_single_time_runs_in_law() {
        // Same stream, sequential grid: the last snapshot equals the single-time run.
        let net = parse_network(networks::NETWORK5).unwrap();
        let cfg = SimulationConfig::new(11, 1);
        let times = [0.5, 1.0, 2.0];
        let snaps = simulate_snapshots(&net, &[3, 3, 3], &times, &mut cfg.stream(0), 1000).unwrap();
        let single = simulate_until(&net, &[3, 3, 3], 2.0, &mut cfg.stream(0), 1000).unwrap();
        assert_eq!(snaps[2], single);
    }

    #[test]
    fn reproducible_across_threads() {
        let net = parse_network(networks::NETWORK6).unwrap();
        let cfg = SimulationConfig::new(42, 3000);
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| transient_distributions(&net, &[5, 5, 5], &[0.5, 2.0], &cfg, 50).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn closed_network_conserves_weight() {
        let net = parse_network("A + B <-> C @ 2, 3\n2C -> 2A + 2B @ 0.5\n2A + 2B -> 2C").unwrap();
        // w = (1, 1, 2)
        let cfg = SimulationConfig::new(5, 1);
        for i in 0..200 {
            let times: Vec<f64> = (0..20).map(|k| f64::from(k) * 0.1).collect();
            let snaps = simulate_snapshots(&net, &[4, 6, 1], &times, &mut cfg.stream(i), 100_000).unwrap();
            for s in snaps {
                assert_eq!(s[0] + s[1] + 2 * s[2], 12);
            }
        }
    }

    #[test]
    fn probe_examples() {
        let net = parse_network(networks::NETWORK5).unwrap();
        assert!(irreducibility_probe(&net, &[3, 3, 3], 20));
        let net = parse_network(networks::DIMER_DRAIN).unwrap();
        assert!(!irreducibility_probe(&net, &[5], 20));
        assert!(reaches(&net, &[5], &[0], 20));
    }
}
