//! Fast golden checks behind `crnmix selftest`.

use crate::certification::{certify, CAVEAT_POINT_MASS};
use crate::equilibrium::{find_equilibrium, is_complex_balanced, NewtonOptions, DEFAULT_BALANCE_TOLERANCE};
use crate::graph::find_conservation_vector;
use crate::kinetics::{apply_generator, lyapunov_v};
use crate::mixing::{enumerate_on_box, tv_enumerated};
use crate::network::parse_network;
use crate::networks;
use crate::simulation::{transient_distribution, SimulationConfig};
use crate::tiers::{parse_profile, tier_partition};
use crate::equilibrium::StationaryDistribution;

type Check = (String, bool, String);

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Check {
    (name.to_string(), passed, detail.into())
}

fn sorted_tiers(text: &str, profile: &str) -> Vec<Vec<String>> {
    let net = parse_network(text).expect("bundled network parses");
    let p = parse_profile(&net, profile).expect("bundled profile parses");
    let mut tiers = tier_partition(&net, &p).named(&net);
    for t in &mut tiers {
        t.sort();
    }
    tiers
}

pub fn run() -> Vec<Check> {
    let mut out = Vec::new();

    let net5 = parse_network(networks::NETWORK5).expect("bundled");
    let c5 = certify(&net5);
    let w5 = c5.witnesses.conservation_vector.clone();
    out.push(check(
        "certify network5",
        c5.class_label == "Thm3.1-conservative" && w5 == Some(vec![2, 2, 1]),
        format!("{} w={w5:?}", c5.class_label),
    ));

    let net6 = parse_network(networks::NETWORK6).expect("bundled");
    let c6 = certify(&net6);
    out.push(check("certify network6", c6.class_label == "Thm3.2", c6.class_label.clone()));

    let dimer = certify(&parse_network(networks::DIMER_DRAIN).expect("bundled"));
    out.push(check(
        "certify dimer drain",
        dimer.class_label == "Cor6.2" && dimer.caveats.iter().any(|c| c == CAVEAT_POINT_MASS),
        dimer.class_label.clone(),
    ));

    let three = certify(&parse_network(networks::THREE_A).expect("bundled"));
    out.push(check("certify 3A -> B", !three.is_certified(), three.class_label.clone()));

    let t = sorted_tiers(networks::TIER_EXAMPLE, "A:n, B:0");
    out.push(check(
        "tiers (n,0)",
        t == [vec!["2A"], vec!["A", "A + B"], vec!["0", "B"]],
        format!("{t:?}"),
    ));
    let t = sorted_tiers(networks::TIER_EXAMPLE, "A:n, B:n+1");
    out.push(check(
        "tiers (n,n+1)",
        t == [vec!["2A", "A + B"], vec!["A", "B"], vec!["0"]],
        format!("{t:?}"),
    ));

    let core = net5.subnetwork(|r| !r.source.is_zero() && !r.product.is_zero());
    let w = find_conservation_vector(core.dim(), core.reactions());
    out.push(check(
        "conservation vector",
        w.as_ref().map(|w| w.weights.clone()) == Some(vec![2, 2, 1]),
        format!("{w:?}"),
    ));

    let av = apply_generator(&parse_network("0 <-> S").expect("literal"), lyapunov_v, &[0]);
    out.push(check("generator AV(0)", av == -1.0, format!("{av}")));

    let eq = find_equilibrium(&net5, &[3.0, 0.5, 2.0], NewtonOptions::default());
    let ok = eq.as_ref().is_ok_and(|e| {
        e.residual <= 1e-12
            && e.point.iter().all(|v| (v - 1.0).abs() < 1e-9)
            && is_complex_balanced(&net5, &e.point, DEFAULT_BALANCE_TOLERANCE)
    });
    out.push(check("equilibrium network5", ok, format!("{:?}", eq.map(|e| e.point))));

    let pois = enumerate_on_box(&StationaryDistribution::product_poisson(vec![1.0]), 1, 200);
    let delta = std::collections::BTreeMap::from([(vec![0], 1.0)]);
    let tv = tv_enumerated(&delta, &pois);
    out.push(check(
        "tv point mass vs Poisson(1)",
        (tv - (1.0 - (-1f64).exp())).abs() < 1e-9,
        format!("{tv}"),
    ));

    let birth = parse_network("0 -> S").expect("literal");
    let sim = transient_distribution(&birth, &[0], 5.0, &SimulationConfig::new(1, 20_000), 200);
    let ok = sim.as_ref().is_ok_and(|d| (d.mean()[0] - 5.0).abs() < 0.1);
    out.push(check("ssa Poisson(5) mean", ok, format!("{:?}", sim.map(|d| d.mean()))));

    out
}
