//! SSA output against closed-form laws and a master-equation solve.

use std::collections::BTreeMap;

use crnmix::equilibrium::StationaryDistribution;
use crnmix::mixing::{enumerate_on_box, tv_distance, tv_enumerated};
use crnmix::simulation::{irreducibility_probe, transient_distribution, SimulationConfig};
use crnmix::{networks, parse_network};

#[test]
fn birth_death_mean_and_variance() {
    let net = parse_network("0 -> S @ 1").unwrap();
    let d = transient_distribution(&net, &[0], 5.0, &SimulationConfig::new(3, 100_000), 200).unwrap();
    assert!((d.mean()[0] - 5.0).abs() < 0.05, "{:?}", d.mean());
    assert!((d.variance()[0] - 5.0).abs() < 0.15, "{:?}", d.variance());

    let death = parse_network("S -> 0 @ 1").unwrap();
    let d = transient_distribution(&death, &[10], 1.0, &SimulationConfig::new(4, 100_000), 200).unwrap();
    let expect = 10.0 * (-1f64).exp();
    assert!((d.mean()[0] - expect).abs() < 0.05, "{:?}", d.mean());
}

#[test]
fn pure_birth_matches_poisson_law() {
    let net = parse_network("0 -> S @ 1").unwrap();
    let d = transient_distribution(&net, &[0], 2.0, &SimulationConfig::new(9, 100_000), 200).unwrap();
    let tv = tv_distance(&d, &StationaryDistribution::product_poisson(vec![2.0])).unwrap();
    assert!(tv.conservative <= 0.02, "{tv:?}");
}

#[test]
fn network5_relaxes_to_product_poisson() {
    let net = parse_network(networks::NETWORK5).unwrap();
    let d = transient_distribution(&net, &[1, 1, 1], 30.0, &SimulationConfig::new(17, 100_000), 200).unwrap();
    let tv = tv_distance(&d, &StationaryDistribution::product_poisson(vec![1.0; 3])).unwrap();
    assert!(tv.conservative <= 0.05, "{tv:?}");
}

/// Transient law of 2A <-> B with A + 2B = 10 by uniformization.
fn dimer_master_equation(t: f64, k_on: f64, k_off: f64) -> BTreeMap<Vec<u32>, f64> {
    let states: Vec<(u32, u32)> = (0..=5).map(|b| (10 - 2 * b, b)).collect();
    let n = states.len();
    let mut q = vec![vec![0.0; n]; n];
    for (i, &(a, b)) in states.iter().enumerate() {
        let fwd = k_on * a as f64 * (a as f64 - 1.0);
        let back = k_off * b as f64;
        if fwd > 0.0 {
            q[i][i + 1] += fwd;
            q[i][i] -= fwd;
        }
        if back > 0.0 {
            q[i][i - 1] += back;
            q[i][i] -= back;
        }
    }
    let rate = (0..n).map(|i| -q[i][i]).fold(0.0, f64::max);
    let mut p = vec![0.0; n];
    p[0] = 1.0;
    let mut term = p.clone();
    let mut weight = (-rate * t).exp();
    let mut out: Vec<f64> = p.iter().map(|v| v * weight).collect();
    for k in 1..2000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let pij = if i == j { 1.0 + q[i][j] / rate } else { q[i][j] / rate };
                next[j] += term[i] * pij;
            }
        }
        term = next;
        weight *= rate * t / k as f64;
        for j in 0..n {
            out[j] += term[j] * weight;
        }
    }
    states
        .iter()
        .zip(out)
        .map(|(&(a, b), v)| (vec![a, b], v))
        .collect()
}

#[test]
fn closed_dimerization_matches_master_equation() {
    let net = parse_network("2A <-> B @ 0.3, 1.2").unwrap();
    let d = transient_distribution(&net, &[10, 0], 0.7, &SimulationConfig::new(21, 100_000), 20).unwrap();
    let exact = dimer_master_equation(0.7, 0.3, 1.2);
    assert!((exact.values().sum::<f64>() - 1.0).abs() < 1e-12);
    let empirical: BTreeMap<Vec<u32>, f64> =
        d.counts.iter().map(|(x, &c)| (x.clone(), c as f64 / d.replicates as f64)).collect();
    let tv = tv_enumerated(&empirical, &exact);
    assert!(tv < 0.01, "{tv}");
}

#[test]
fn product_poisson_box_mass_matches_enumeration() {
    let pi = StationaryDistribution::product_poisson(vec![1.5, 0.5]);
    let table = enumerate_on_box(&pi, 2, 6);
    let total: f64 = table.values().sum();
    assert!((total - pi.box_mass(6)).abs() < 1e-12);
}

#[test]
fn probe_examples() {
    let net5 = parse_network(networks::NETWORK5).unwrap();
    assert!(irreducibility_probe(&net5, &[1, 1, 1], 20));
    let closed = parse_network("A + B <-> C").unwrap();
    assert!(!irreducibility_probe(&closed, &[1, 1, 1], 20));
}
