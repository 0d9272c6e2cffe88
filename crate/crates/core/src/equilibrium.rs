//! Positive equilibria of the deterministic mass-action system, complex
//! balance checks and product-form Poisson stationary distributions.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::network::{Complex, ReactionNetwork};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("initial guess must be strictly positive and of length {0}")]
    BadGuess(usize),
    #[error("Jacobian singular at iterate {iteration}: {point:?}")]
    SingularJacobian { iteration: usize, point: Vec<f64> },
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tolerance: 1e-12,
            max_iterations: 200,
        }
    }
}

pub const DEFAULT_BALANCE_TOLERANCE: f64 = 1e-9;

/// `c^y` for real `c`.
fn monomial(c: &[f64], y: &Complex) -> f64 {
    c.iter()
        .zip(y.coefficients())
        .map(|(&ci, &yi)| ci.powi(yi as i32))
        .product()
}

/// Deterministic vector field `F(c) = sum_r kappa_r c^{y_r} (y'_r - y_r)`.
pub fn vector_field(network: &ReactionNetwork, c: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; network.dim()];
    for r in network.reactions() {
        let flux = r.rate * monomial(c, &r.source);
        for (fi, d) in f.iter_mut().zip(r.net_change()) {
            *fi += flux * d as f64;
        }
    }
    f
}

fn jacobian(network: &ReactionNetwork, c: &[f64]) -> DMatrix<f64> {
    let d = network.dim();
    let mut j = DMatrix::zeros(d, d);
    for r in network.reactions() {
        let y = r.source.coefficients();
        let change = r.net_change();
        for k in 0..d {
            if y[k] == 0 {
                continue;
            }
            // d/dc_k of c^y
            let mut partial = f64::from(y[k]) * c[k].powi(y[k] as i32 - 1);
            for (m, (&cm, &ym)) in c.iter().zip(y).enumerate() {
                if m != k {
                    partial *= cm.powi(ym as i32);
                }
            }
            for i in 0..d {
                j[(i, k)] += r.rate * partial * change[i] as f64;
            }
        }
    }
    j
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton from a positive guess; steps are halved until the iterate
/// stays positive and the residual does not grow.
pub fn find_equilibrium(
    network: &ReactionNetwork,
    guess: &[f64],
    options: NewtonOptions,
) -> Result<Equilibrium, EquilibriumError> {
    let d = network.dim();
    if guess.len() != d || guess.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(EquilibriumError::BadGuess(d));
    }
    let mut c = guess.to_vec();
    let mut f = vector_field(network, &c);
    let mut res = sup_norm(&f);
    for iteration in 0..=options.max_iterations {
        if res <= options.tolerance {
            return Ok(Equilibrium {
                point: c,
                residual: res,
                iterations: iteration,
            });
        }
        if iteration == options.max_iterations {
            break;
        }
        let lu = jacobian(network, &c).lu();
        let rhs = DVector::from_iterator(d, f.iter().map(|v| -v));
        let step = lu.solve(&rhs).filter(|s| s.iter().all(|v| v.is_finite())).ok_or_else(|| {
            EquilibriumError::SingularJacobian {
                iteration,
                point: c.clone(),
            }
        })?;
        let mut lambda = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..60 {
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(ci, si)| ci + lambda * si).collect();
            if trial.iter().all(|&v| v > 0.0) {
                let ft = vector_field(network, &trial);
                let rt = sup_norm(&ft);
                if rt < res {
                    accepted = Some((trial, ft, rt));
                    break;
                }
                if fallback.is_none() {
                    fallback = Some((trial, ft, rt));
                }
            }
            lambda *= 0.5;
        }
        let Some((nc, nf, nr)) = accepted.or(fallback) else {
            break;
        };
        c = nc;
        f = nf;
        res = nr;
    }
    Err(EquilibriumError::NoConvergence {
        iterations: options.max_iterations,
        residual: res,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexResidual {
    pub complex: String,
    pub inflow: f64,
    pub outflow: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub balanced: bool,
    pub tolerance: f64,
    pub residuals: Vec<ComplexResidual>,
}

/// Per-complex flow balance at `c`.
pub fn complex_balance(network: &ReactionNetwork, c: &[f64], tolerance: f64) -> BalanceReport {
    let n = network.complexes().len();
    let mut inflow = vec![0.0; n];
    let mut outflow = vec![0.0; n];
    for r in network.reactions() {
        let flux = r.rate * monomial(c, &r.source);
        let s = network.complex_index(&r.source).expect("source is a complex");
        let p = network.complex_index(&r.product).expect("product is a complex");
        outflow[s] += flux;
        inflow[p] += flux;
    }
    let mut balanced = true;
    let residuals = network
        .complexes()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let residual = inflow[i] - outflow[i];
            if residual.abs() > tolerance * (1.0 + inflow[i].max(outflow[i])) {
                balanced = false;
            }
            ComplexResidual {
                complex: network.complex_name(z),
                inflow: inflow[i],
                outflow: outflow[i],
                residual,
            }
        })
        .collect();
    BalanceReport {
        balanced,
        tolerance,
        residuals,
    }
}

pub fn is_complex_balanced(network: &ReactionNetwork, c: &[f64], tolerance: f64) -> bool {
    complex_balance(network, c, tolerance).balanced
}

/// `ln P(Pois(mean) = k)`.
pub fn poisson_ln_pmf(mean: f64, k: u32) -> f64 {
    let ln_fact: f64 = (2..=k).map(|j| f64::from(j).ln()).sum();
    -mean + f64::from(k) * mean.ln() - ln_fact
}

/// `P(Pois(mean) = k)` for `k = 0..=n`.
pub fn poisson_pmf_table(mean: f64, n: u32) -> Vec<f64> {
    let ln_mean = mean.ln();
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut ln_p = -mean;
    for k in 0..=n {
        if k > 0 {
            ln_p += ln_mean - f64::from(k).ln();
        }
        out.push(ln_p.exp());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StationaryDistribution {
    ProductPoisson {
        means: Vec<f64>,
    },
    /// Long-run simulation estimate truncated to `[0, box_radius]^d`.
    Empirical {
        #[serde(serialize_with = "serialize_table")]
        table: BTreeMap<Vec<u32>, f64>,
        box_radius: u32,
        out_of_box: f64,
    },
}

fn serialize_table<S: serde::Serializer>(t: &BTreeMap<Vec<u32>, f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(t.len()))?;
    for (k, v) in t {
        seq.serialize_element(&(k, v))?;
    }
    seq.end()
}

impl StationaryDistribution {
    pub fn product_poisson(means: Vec<f64>) -> Self {
        assert!(means.iter().all(|&m| m > 0.0), "Poisson means must be positive");
        StationaryDistribution::ProductPoisson { means }
    }

    pub fn pmf(&self, x: &[u32]) -> f64 {
        match self {
            StationaryDistribution::ProductPoisson { means } => {
                means.iter().zip(x).map(|(&c, &k)| poisson_ln_pmf(c, k)).sum::<f64>().exp()
            }
            StationaryDistribution::Empirical { table, .. } => table.get(x).copied().unwrap_or(0.0),
        }
    }

    /// Probability of `[0, n]^d`.
    pub fn box_mass(&self, n: u32) -> f64 {
        match self {
            StationaryDistribution::ProductPoisson { means } => means
                .iter()
                .map(|&c| poisson_pmf_table(c, n).iter().sum::<f64>().min(1.0))
                .product(),
            StationaryDistribution::Empirical { table, .. } => {
                table.iter().filter(|(k, _)| k.iter().all(|&v| v <= n)).map(|(_, p)| p).sum()
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StationaryDistribution::ProductPoisson { .. } => "product-poisson",
            StationaryDistribution::Empirical { .. } => "empirical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryReport {
    pub equilibrium: Vec<f64>,
    pub newton_residual: f64,
    pub newton_iterations: usize,
    pub complex_balance: BalanceReport,
    pub irreducible_probe: bool,
    pub pi_kind: &'static str,
    pub caveats: Vec<String>,
}

impl StationaryReport {
    /// Product form is chosen only for a complex-balanced equilibrium on a
    /// state space that passed the irreducibility probe.
    pub fn new(network: &ReactionNetwork, eq: &Equilibrium, tolerance: f64, irreducible: bool) -> Self {
        let balance = complex_balance(network, &eq.point, tolerance);
        let mut caveats = Vec::new();
        if !balance.balanced {
            caveats.push("equilibrium is not complex balanced; use a long-run simulation estimate".to_string());
        }
        if !irreducible {
            caveats.push("irreducibility probe failed; product form not used".to_string());
        }
        let pi_kind = if balance.balanced && irreducible {
            "product-poisson"
        } else {
            "empirical"
        };
        StationaryReport {
            equilibrium: eq.point.clone(),
            newton_residual: eq.residual,
            newton_iterations: eq.iterations,
            complex_balance: balance,
            irreducible_probe: irreducible,
            pi_kind,
            caveats,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::apply_generator;
    use crate::network::parse_network;
    use crate::networks;

    /// Independent oracle: the vector field of network (5) written out by hand.
    fn field5(c: &[f64]) -> [f64; 3] {
        let (a, b, cc) = (c[0], c[1], c[2]);
        [
            -a + cc * cc + 1.0 - a,
            a - b + 1.0 - b,
            2.0 * b - 2.0 * cc * cc + 1.0 - cc,
        ]
    }

    #[test]
    fn network5_root_and_field() {
        let net = parse_network(networks::NETWORK5).unwrap();
        for c in [[0.3, 2.0, 1.5], [1.0, 1.0, 1.0], [4.0, 0.1, 0.7]] {
            let f = vector_field(&net, &c);
            let o = field5(&c);
            for i in 0..3 {
                assert!((f[i] - o[i]).abs() < 1e-12);
            }
        }
        let eq = find_equilibrium(&net, &[1.0, 1.0, 1.0], NewtonOptions::default()).unwrap();
        assert_eq!(eq.point, vec![1.0, 1.0, 1.0]);
        assert_eq!(eq.iterations, 0);
        let eq = find_equilibrium(&net, &[5.0, 0.2, 3.0], NewtonOptions::default()).unwrap();
        assert!(eq.residual <= 1e-12);
        for v in &eq.point {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn network6_root() {
        let net = parse_network(networks::NETWORK6).unwrap();
        assert_eq!(net.reactions().len(), 12);
        assert!(sup_norm(&vector_field(&net, &[1.0, 1.0, 1.0])) == 0.0);
        let eq = find_equilibrium(&net, &[2.0, 0.5, 1.3], NewtonOptions::default()).unwrap();
        assert!(eq.residual <= 1e-12);
        assert!(is_complex_balanced(&net, &eq.point, DEFAULT_BALANCE_TOLERANCE));
    }

    #[test]
    fn birth_death_mean() {
        let net = parse_network("0 -> S @ 3.5\nS -> 0 @ 0.5").unwrap();
        let eq = find_equilibrium(&net, &[1.0], NewtonOptions::default()).unwrap();
        assert!((eq.point[0] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn bad_guess_and_singular() {
        let net = parse_network(networks::NETWORK5).unwrap();
        assert!(matches!(
            find_equilibrium(&net, &[1.0, 0.0, 1.0], NewtonOptions::default()),
            Err(EquilibriumError::BadGuess(3))
        ));
        // Closed A <-> B has a conservation law, so the Jacobian is singular.
        let net = parse_network("A <-> B").unwrap();
        assert!(matches!(
            find_equilibrium(&net, &[1.0, 3.0], NewtonOptions::default()),
            Err(EquilibriumError::SingularJacobian { .. })
        ));
    }

    #[test]
    fn balance_checks() {
        let net = parse_network(networks::NETWORK5).unwrap();
        let rep = complex_balance(&net, &[1.0, 1.0, 1.0], DEFAULT_BALANCE_TOLERANCE);
        assert!(rep.balanced);
        let a = rep.residuals.iter().find(|r| r.complex == "A").unwrap();
        assert_eq!((a.inflow, a.outflow), (2.0, 2.0));
        let total_in: f64 = rep.residuals.iter().map(|r| r.inflow).sum();
        let total_out: f64 = rep.residuals.iter().map(|r| r.outflow).sum();
        assert_eq!(total_in, total_out);
        assert!(!is_complex_balanced(&net, &[2.0, 1.0, 1.0], DEFAULT_BALANCE_TOLERANCE));

        let net = parse_network("A -> B").unwrap();
        assert!(!is_complex_balanced(&net, &[1.0, 1.0], DEFAULT_BALANCE_TOLERANCE));
        let net = parse_network("A <-> B @ 1, 2").unwrap();
        assert!(is_complex_balanced(&net, &[2.0, 1.0], DEFAULT_BALANCE_TOLERANCE));
    }

    #[test]
    fn poisson_values() {
        let p = StationaryDistribution::product_poisson(vec![1.0, 1.0, 1.0]);
        assert!((p.pmf(&[0, 0, 0]) - (-3f64).exp()).abs() < 1e-15);
        let p = StationaryDistribution::product_poisson(vec![1.0]);
        assert!((p.pmf(&[1]) - (-1f64).exp()).abs() < 1e-15);
        let p = StationaryDistribution::product_poisson(vec![2.0, 1.0]);
        assert!((p.pmf(&[1, 0]) - 2.0 * (-3f64).exp()).abs() < 1e-15);
        assert!((p.box_mass(200) - 1.0).abs() < 1e-12);
        let t = poisson_pmf_table(2.5, 30);
        for (k, v) in t.iter().enumerate() {
            assert!((v - poisson_ln_pmf(2.5, k as u32).exp()).abs() < 1e-14);
        }
    }

    fn stationarity_sums(net: &ReactionNetwork, c: &[f64]) -> Vec<f64> {
        let d = c.len();
        let pi = StationaryDistribution::product_poisson(c.to_vec());
        // The box reaches c + 16 sqrt(c): at c + 12 sqrt(c) the cubic tail of
        // A f for the factorial moment under 2C -> A still leaves about 4e-8.
        let upper: Vec<u32> = c.iter().map(|&ci| (ci + 16.0 * ci.sqrt()).ceil() as u32).collect();
        let mut sums = vec![0.0; 2 * d];
        let mut x = vec![0u32; d];
        loop {
            let p = pi.pmf(&x);
            for i in 0..d {
                sums[i] += p * apply_generator(net, |z| f64::from(z[i]), &x);
                sums[d + i] += p * apply_generator(net, |z| f64::from(z[i]) * (f64::from(z[i]) - 1.0), &x);
            }
            let mut k = 0;
            loop {
                if k == d {
                    return sums;
                }
                if x[k] < upper[k] {
                    x[k] += 1;
                    break;
                }
                x[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn product_form_is_stationary() {
        for (text, guess) in [
            (networks::NETWORK5, vec![1.0, 1.0, 1.0]),
            (networks::NETWORK6, vec![1.0, 1.0, 1.0]),
            ("0 -> S @ 4\nS -> 0 @ 1", vec![1.0]),
        ] {
            let net = parse_network(text).unwrap();
            let eq = find_equilibrium(&net, &guess, NewtonOptions::default()).unwrap();
            assert!(is_complex_balanced(&net, &eq.point, DEFAULT_BALANCE_TOLERANCE));
            for s in stationarity_sums(&net, &eq.point) {
                assert!(s.abs() <= 1e-8, "{s}");
            }
        }
    }

    #[test]
    fn report_kinds() {
        let net = parse_network(networks::NETWORK5).unwrap();
        let eq = find_equilibrium(&net, &[1.0, 1.0, 1.0], NewtonOptions::default()).unwrap();
        let rep = StationaryReport::new(&net, &eq, DEFAULT_BALANCE_TOLERANCE, true);
        assert_eq!(rep.pi_kind, "product-poisson");
        assert!(rep.to_json().contains("\"residuals\""));
        let rep = StationaryReport::new(&net, &eq, DEFAULT_BALANCE_TOLERANCE, false);
        assert_eq!(rep.pi_kind, "empirical");
    }
}
