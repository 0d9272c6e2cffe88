//! Total-variation distances on truncated lattice boxes and mixing-time
//! estimates along a time grid.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::{
    find_equilibrium, NewtonOptions, StationaryDistribution, StationaryReport, DEFAULT_BALANCE_TOLERANCE,
};
use crate::network::ReactionNetwork;
use crate::simulation::{
    irreducibility_probe, transient_distribution, transient_distributions, SimulationConfig, SimulationError,
    TransientDistribution,
};
use crate::LatticeState;

pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixingError {
    #[error("box mismatch: {0} vs {1}")]
    BoxMismatch(u32, u32),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("epsilon {0} must lie in (0, 1/2)")]
    BadEpsilon(f64),
    #[error("time grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

/// Truncated TV and the conservative upper-bound variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvEstimate {
    /// `1/2 sum_{z in box} |p(z) - q(z)|`
    pub truncated: f64,
    /// `truncated + (out_p + out_q) / 2`, capped at 1.
    pub conservative: f64,
}

/// TV between an empirical transient law and a stationary law on the
/// transient's box.
pub fn tv_distance(p: &TransientDistribution, q: &StationaryDistribution) -> Result<TvEstimate, MixingError> {
    let n = p.box_radius;
    let (in_box_q, out_q) = match q {
        StationaryDistribution::ProductPoisson { means } => {
            if means.len() != p.origin.len() {
                return Err(MixingError::DimensionMismatch(p.origin.len(), means.len()));
            }
            let m = q.box_mass(n);
            (m, (1.0 - m).max(0.0))
        }
        StationaryDistribution::Empirical {
            box_radius, out_of_box, ..
        } => {
            if *box_radius != n {
                return Err(MixingError::BoxMismatch(n, *box_radius));
            }
            (q.box_mass(n), *out_of_box)
        }
    };
    let total = p.replicates as f64;
    let mut l1 = 0.0;
    let mut q_on_support = 0.0;
    for (z, &c) in &p.counts {
        let qz = q.pmf(z);
        l1 += (c as f64 / total - qz).abs();
        q_on_support += qz;
    }
    // States in the box that were never visited contribute q(z) each.
    if let StationaryDistribution::Empirical { table, .. } = q {
        let off: f64 = table
            .iter()
            .filter(|(z, _)| !p.counts.contains_key(*z))
            .map(|(_, v)| v)
            .sum();
        l1 += off;
    } else {
        l1 += (in_box_q - q_on_support).max(0.0);
    }
    let truncated = (0.5 * l1).min(1.0);
    let conservative = (truncated + 0.5 * (p.out_of_box_mass() + out_q)).min(1.0);
    Ok(TvEstimate {
        truncated,
        conservative,
    })
}

/// Freeze an empirical law as a stationary estimate (e.g. from a long run).
pub fn empirical_stationary(p: &TransientDistribution) -> StationaryDistribution {
    let total = p.replicates as f64;
    StationaryDistribution::Empirical {
        table: p.counts.iter().map(|(k, &c)| (k.clone(), c as f64 / total)).collect(),
        box_radius: p.box_radius,
        out_of_box: p.out_of_box_mass(),
    }
}

/// `1/2 sum |p - q|` over the union of supports of two enumerated mass
/// functions.
pub fn tv_enumerated(p: &BTreeMap<LatticeState, f64>, q: &BTreeMap<LatticeState, f64>) -> f64 {
    let mut l1 = 0.0;
    for (z, &pz) in p {
        l1 += (pz - q.get(z).copied().unwrap_or(0.0)).abs();
    }
    for (z, &qz) in q {
        if !p.contains_key(z) {
            l1 += qz;
        }
    }
    0.5 * l1
}

/// Every state of `[0, n]^d` with its `q` mass.
pub fn enumerate_on_box(q: &StationaryDistribution, dim: usize, n: u32) -> BTreeMap<LatticeState, f64> {
    let mut out = BTreeMap::new();
    let mut x = vec![0u32; dim];
    loop {
        let v = q.pmf(&x);
        if v > 0.0 {
            out.insert(x.clone(), v);
        }
        let mut k = 0;
        loop {
            if k == dim {
                return out;
            }
            if x[k] < n {
                x[k] += 1;
                break;
            }
            x[k] = 0;
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingTimeEstimate {
    pub origin: LatticeState,
    pub epsilon: f64,
    pub t_grid: Vec<f64>,
    pub tv_curve: Vec<f64>,
    pub tv_conservative: Vec<f64>,
    /// First grid time with conservative TV at most epsilon.
    pub tau: Option<f64>,
    pub replicates: u64,
}

impl MixingTimeEstimate {
    pub fn not_reached(&self) -> bool {
        self.tau.is_none()
    }

    /// The common coordinate for diagonal origins `(m, ..., m)`, otherwise
    /// the coordinates joined by `;`.
    pub fn label(&self) -> String {
        match self.origin.first() {
            Some(&m) if self.origin.iter().all(|&v| v == m) => m.to_string(),
            _ => self.origin.iter().map(u32::to_string).collect::<Vec<_>>().join(";"),
        }
    }
}

/// `start:stop:step` grid, inclusive of `stop` up to rounding.
pub fn time_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

pub fn estimate_mixing_time(
    network: &ReactionNetwork,
    x0: &[u32],
    pi: &StationaryDistribution,
    epsilon: f64,
    t_grid: &[f64],
    config: &SimulationConfig,
    box_radius: u32,
) -> Result<MixingTimeEstimate, MixingError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(MixingError::BadEpsilon(epsilon));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MixingError::BadGrid);
    }
    let dists = transient_distributions(network, x0, t_grid, config, box_radius)?;
    let mut tv_curve = Vec::with_capacity(dists.len());
    let mut tv_conservative = Vec::with_capacity(dists.len());
    for d in &dists {
        let tv = tv_distance(d, pi)?;
        tv_curve.push(tv.truncated);
        tv_conservative.push(tv.conservative);
    }
    let tau = t_grid
        .iter()
        .zip(&tv_conservative)
        .find(|(_, &v)| v <= epsilon)
        .map(|(&t, _)| t);
    Ok(MixingTimeEstimate {
        origin: x0.to_vec(),
        epsilon,
        t_grid: t_grid.to_vec(),
        tv_curve,
        tv_conservative,
        tau,
        replicates: config.replicates,
    })
}

/// Seed offset for the long run behind an empirical reference law.
pub const REFERENCE_SEED_MASK: u64 = 0x5DEE_CE66_D1CE_4E5B;

/// Product-form law when Newton from all-ones lands on a complex-balanced
/// equilibrium and the probe from all-ones in box 20 passes. Otherwise the
/// empirical law of a run to `pi_time` from `x0` on an independent seed.
pub fn reference_stationary(
    network: &ReactionNetwork,
    x0: &[u32],
    box_radius: u32,
    pi_time: f64,
    config: &SimulationConfig,
) -> Result<StationaryDistribution, MixingError> {
    let d = network.dim();
    if let Ok(eq) = find_equilibrium(network, &vec![1.0; d], NewtonOptions::default()) {
        let probe = irreducibility_probe(network, &vec![1; d], 20);
        let report = StationaryReport::new(network, &eq, DEFAULT_BALANCE_TOLERANCE, probe);
        if report.pi_kind == "product-poisson" {
            return Ok(StationaryDistribution::product_poisson(eq.point));
        }
    }
    let long = SimulationConfig {
        seed: config.seed ^ REFERENCE_SEED_MASK,
        ..*config
    };
    let run = transient_distribution(network, x0, pi_time, &long, box_radius)?;
    Ok(empirical_stationary(&run))
}

pub const CURVE_HEADER: &str = "t,tv,tv_conservative,m,replicates";
pub const SUMMARY_HEADER: &str = "m,tau,epsilon,not_reached";

/// Long-format curve table and per-origin summary, both sorted by origin.
pub fn emit_curves(estimates: &[MixingTimeEstimate]) -> (String, String) {
    let mut sorted: Vec<&MixingTimeEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| a.origin.cmp(&b.origin));
    let mut curve = format!("{CURVE_HEADER}\n");
    let mut summary = format!("{SUMMARY_HEADER}\n");
    for e in sorted {
        let m = e.label();
        for ((t, tv), tvc) in e.t_grid.iter().zip(&e.tv_curve).zip(&e.tv_conservative) {
            curve.push_str(&format!("{t},{tv},{tvc},{m},{}\n", e.replicates));
        }
        let tau = e.tau.map_or(String::new(), |t| t.to_string());
        summary.push_str(&format!("{m},{tau},{},{}\n", e.epsilon, e.not_reached()));
    }
    (curve, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::poisson_pmf_table;
    use crate::network::parse_network;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    fn point_mass(x: Vec<u32>, box_radius: u32, replicates: u64) -> TransientDistribution {
        TransientDistribution {
            sums: x.iter().map(|&v| u128::from(v) * u128::from(replicates)).collect(),
            sums_sq: x.iter().map(|&v| u128::from(v * v) * u128::from(replicates)).collect(),
            counts: BTreeMap::from([(x.clone(), replicates)]),
            origin: x,
            time: 0.0,
            box_radius,
            replicates,
            out_of_box: 0,
            exploded: 0,
        }
    }

    #[test]
    fn point_mass_against_poisson() {
        let pi = StationaryDistribution::product_poisson(vec![1.0]);
        let tv = tv_distance(&point_mass(vec![0], 200, 10), &pi).unwrap();
        assert!((tv.truncated - (1.0 - (-1f64).exp())).abs() < 1e-12);
        assert!((tv.conservative - tv.truncated).abs() < 1e-15);

        let q = enumerate_on_box(&pi, 1, 200);
        let p = BTreeMap::from([(vec![0], 1.0)]);
        assert!((tv_enumerated(&p, &q) - (1.0 - (-1f64).exp())).abs() < 1e-9);
    }

    /// TV(Pois(1), Pois(2)): the densities cross between 1 and 2, so the
    /// distance is (p0 - q0) + (p1 - q1) = 2/e - 3/e^2.
    #[test]
    fn product_poisson_shift() {
        let e = std::f64::consts::E;
        let expected = 2.0 / e - 3.0 / (e * e);
        assert!((expected - 0.329_753_032_6).abs() < 1e-9);
        // Brute force over [0, 200]^3 using per-coordinate tables.
        let a = poisson_pmf_table(1.0, 200);
        let b = poisson_pmf_table(2.0, 200);
        let mut l1 = 0.0;
        for (&ai, &bi) in a.iter().zip(&b) {
            for &aj in &a {
                for &ak in &a {
                    l1 += (ai * aj * ak - bi * aj * ak).abs();
                }
            }
        }
        assert!((0.5 * l1 - expected).abs() < 1e-12);
        // Same value through the enumerated path on a smaller box.
        let p = enumerate_on_box(&StationaryDistribution::product_poisson(vec![1.0, 1.0, 1.0]), 3, 25);
        let q = enumerate_on_box(&StationaryDistribution::product_poisson(vec![2.0, 1.0, 1.0]), 3, 25);
        assert!((tv_enumerated(&p, &q) - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_is_zero() {
        let q = enumerate_on_box(&StationaryDistribution::product_poisson(vec![1.5, 0.5]), 2, 30);
        assert_eq!(tv_enumerated(&q, &q), 0.0);
        let t = point_mass(vec![1, 2], 10, 7);
        let e = empirical_stationary(&t);
        assert_eq!(tv_distance(&t, &e).unwrap().truncated, 0.0);
    }

    #[test]
    fn box_mismatch() {
        let e = empirical_stationary(&point_mass(vec![1, 2], 10, 7));
        assert_eq!(
            tv_distance(&point_mass(vec![1, 2], 20, 7), &e),
            Err(MixingError::BoxMismatch(20, 10))
        );
        let pi = StationaryDistribution::product_poisson(vec![1.0]);
        assert!(tv_distance(&point_mass(vec![1, 2], 20, 7), &pi).is_err());
    }

    #[test]
    fn noise_floor() {
        let lambda = 2.0;
        let r = 10_000u64;
        let pois = rand_distr::Poisson::new(lambda).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut t = point_mass(vec![0], 60, 0);
        t.counts.clear();
        for _ in 0..r {
            let k = pois.sample(&mut rng) as u32;
            *t.counts.entry(vec![k]).or_insert(0) += 1;
        }
        t.replicates = r;
        let pi = StationaryDistribution::product_poisson(vec![lambda]);
        let tv = tv_distance(&t, &pi).unwrap().truncated;
        let bound: f64 = poisson_pmf_table(lambda, 60)
            .iter()
            .map(|q| (q / r as f64).sqrt())
            .sum::<f64>()
            * 0.5
            * 1.5;
        assert!(tv <= bound, "{tv} > {bound}");
    }

    #[test]
    fn grid_and_tau() {
        assert_eq!(time_grid(0.0, 1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(time_grid(0.0, 20.0, 0.25).len(), 81);
        assert!(time_grid(1.0, 0.0, 0.25).is_empty());

        // With mean 0.1, the point mass at 0 is within 1 - e^{-0.1} < 0.1 of
        // pi, so the first grid point qualifies.
        let net = parse_network("0 -> S @ 0.1\nS -> 0").unwrap();
        let pi = StationaryDistribution::product_poisson(vec![0.1]);
        let cfg = SimulationConfig::new(3, 20_000);
        let est = estimate_mixing_time(&net, &[0], &pi, 0.1, &[0.0, 1.0], &cfg, 50).unwrap();
        assert_eq!(est.tau, Some(0.0));
        let est = estimate_mixing_time(&net, &[40], &pi, 0.1, &[0.0, 0.5], &cfg, 50).unwrap();
        assert!(est.not_reached());
        assert!(estimate_mixing_time(&net, &[1], &pi, 0.5, &[0.0], &cfg, 50).is_err());
        assert!(estimate_mixing_time(&net, &[1], &pi, 0.1, &[1.0, 1.0], &cfg, 50).is_err());
    }

    #[test]
    fn csv_tables() {
        let (c, s) = emit_curves(&[]);
        assert_eq!(c, format!("{CURVE_HEADER}\n"));
        assert_eq!(s, format!("{SUMMARY_HEADER}\n"));
        let mk = |m: u32, tau: Option<f64>| MixingTimeEstimate {
            origin: vec![m; 3],
            epsilon: 0.1,
            t_grid: vec![0.0, 0.25],
            tv_curve: vec![0.9, 0.05],
            tv_conservative: vec![0.9, 0.05],
            tau,
            replicates: 10,
        };
        let (_, s) = emit_curves(&[mk(1, Some(0.25))]);
        assert_eq!(s.lines().count(), 2);
        let (c, s) = emit_curves(&[mk(100, None), mk(1, Some(0.25)), mk(10, Some(0.25))]);
        let rows: Vec<&str> = s.lines().skip(1).collect();
        assert_eq!(rows, vec!["1,0.25,0.1,false", "10,0.25,0.1,false", "100,,0.1,true"]);
        assert_eq!(c.lines().nth(1), Some("0,0.9,0.9,1,10"));
    }

    fn arb_pmf() -> impl Strategy<Value = BTreeMap<LatticeState, f64>> {
        proptest::collection::vec(0.0f64..1.0, 9).prop_map(|w| {
            let total: f64 = w.iter().sum::<f64>() + 1e-9;
            w.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(i, &v)| (vec![(i / 3) as u32, (i % 3) as u32], v / total))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn symmetric_and_bounded(p in arb_pmf(), q in arb_pmf()) {
            let a = tv_enumerated(&p, &q);
            let b = tv_enumerated(&q, &p);
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
            prop_assert_eq!(tv_enumerated(&p, &p), 0.0);
        }

        #[test]
        fn triangle_inequality(p in arb_pmf(), q in arb_pmf(), r in arb_pmf()) {
            prop_assert!(tv_enumerated(&p, &r) <= tv_enumerated(&p, &q) + tv_enumerated(&q, &r) + 1e-12);
        }
    }
}
