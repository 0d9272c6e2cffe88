//! Mass-action intensities, the generator, Lyapunov functions and
//! exhaustive drift scans over lattice boxes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ConservationVector;
use crate::network::{Reaction, ReactionNetwork};

/// `kappa * prod_i x_i! / (x_i - y_i)!`, zero when some `x_i < y_i`.
pub fn intensity(reaction: &Reaction, x: &[u32]) -> f64 {
    let mut value = reaction.rate;
    for (&xi, &yi) in x.iter().zip(reaction.source.coefficients()) {
        if xi < yi {
            return 0.0;
        }
        for k in 0..yi {
            value *= f64::from(xi - k);
        }
    }
    value
}

/// State after firing `reaction` once from `x`. Callers must ensure the
/// intensity is positive, which guarantees every coordinate stays >= 0.
pub fn jump(reaction: &Reaction, x: &[u32]) -> Vec<u32> {
    x.iter()
        .zip(reaction.source.coefficients())
        .zip(reaction.product.coefficients())
        .map(|((&xi, &s), &p)| xi - s + p)
        .collect()
}

/// `Af(x) = sum_r lambda_r(x) (f(x + y'_r - y_r) - f(x))`.
///
/// Reactions with zero intensity are skipped, so `f` is only evaluated on
/// reachable neighbours.
pub fn apply_generator(network: &ReactionNetwork, f: impl Fn(&[u32]) -> f64, x: &[u32]) -> f64 {
    let fx = f(x);
    network
        .reactions()
        .iter()
        .map(|r| {
            let lambda = intensity(r, x);
            if lambda == 0.0 {
                0.0
            } else {
                lambda * (f(&jump(r, x)) - fx)
            }
        })
        .sum()
}

/// `V(x) = sum_i [x_i (ln x_i - 1) + 1]`, with the `x_i = 0` term equal to 1.
pub fn lyapunov_v(x: &[u32]) -> f64 {
    x.iter()
        .map(|&xi| {
            if xi == 0 {
                1.0
            } else {
                let v = f64::from(xi);
                v * (v.ln() - 1.0) + 1.0
            }
        })
        .sum()
}

/// `W(x) = w . x`.
pub fn lyapunov_w(w: &ConservationVector, x: &[u32]) -> f64 {
    w.weights
        .iter()
        .zip(x)
        .map(|(&wi, &xi)| wi as f64 * f64::from(xi))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LyapunovKind {
    LogV,
    LinearW { weights: Vec<u64> },
}

impl LyapunovKind {
    pub fn linear(w: &ConservationVector) -> Self {
        LyapunovKind::LinearW {
            weights: w.weights.clone(),
        }
    }

    pub fn eval(&self, x: &[u32]) -> f64 {
        match self {
            LyapunovKind::LogV => lyapunov_v(x),
            LyapunovKind::LinearW { weights } => weights
                .iter()
                .zip(x)
                .map(|(&wi, &xi)| wi as f64 * f64::from(xi))
                .sum(),
        }
    }
}

/// The drift exponent `1 + delta`; only the two shapes the ergodicity
/// results use are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftExponent {
    /// `AV <= -aV + b`
    Linear,
    /// `AV <= -aV^{3/2} + b`
    ThreeHalves,
}

impl DriftExponent {
    pub fn from_delta(delta: f64) -> Option<Self> {
        if delta == 0.0 {
            Some(DriftExponent::Linear)
        } else if delta == 0.5 {
            Some(DriftExponent::ThreeHalves)
        } else {
            None
        }
    }

    pub fn delta(self) -> f64 {
        match self {
            DriftExponent::Linear => 0.0,
            DriftExponent::ThreeHalves => 0.5,
        }
    }

    fn power(self, v: f64) -> f64 {
        match self {
            DriftExponent::Linear => v,
            DriftExponent::ThreeHalves => v * v.sqrt(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriftError {
    #[error("box [0,{radius}]^{dim} has {states} states, more than the cap of {cap}")]
    BoxTooLarge {
        radius: u32,
        dim: usize,
        states: u128,
        cap: u128,
    },
    #[error("drift parameter out of range: {0}")]
    InvalidParameter(String),
}

/// Default cap on the number of lattice states a scan may visit.
pub const DEFAULT_STATE_CAP: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub lyapunov: LyapunovKind,
    pub a: f64,
    pub delta: f64,
    pub box_radius: u32,
    /// `max_x AV(x) + a V(x)^{1+delta}` over the box.
    pub b: f64,
    pub argmax_state: Vec<u32>,
    /// The argmax has no coordinate equal to the box radius.
    pub argmax_interior: bool,
    /// `AV(x) < 0` at every state with some coordinate equal to the radius.
    pub negative_on_shell: bool,
    /// Largest `AV` over the outer shell.
    pub shell_max_drift: f64,
    pub states_scanned: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    pub a: f64,
    pub exponent: DriftExponent,
    pub box_radius: u32,
    pub state_cap: u128,
}

impl DriftParams {
    pub fn new(a: f64, exponent: DriftExponent, box_radius: u32) -> Self {
        DriftParams {
            a,
            exponent,
            box_radius,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Decode a linear box index into a state (first coordinate most significant).
pub(crate) fn decode(mut index: u64, side: u64, dim: usize, out: &mut [u32]) {
    for slot in out.iter_mut().take(dim).rev() {
        *slot = (index % side) as u32;
        index /= side;
    }
}

pub(crate) fn box_size(radius: u32, dim: usize) -> u128 {
    (u128::from(radius) + 1).pow(dim as u32)
}

#[derive(Clone)]
struct ScanAcc {
    best: f64,
    best_state: Vec<u32>,
    shell_max: f64,
    count: u64,
}

impl ScanAcc {
    fn empty() -> Self {
        ScanAcc {
            best: f64::NEG_INFINITY,
            best_state: Vec::new(),
            shell_max: f64::NEG_INFINITY,
            count: 0,
        }
    }

    /// Order-insensitive merge: larger value wins, ties go to the
    /// lexicographically smaller state.
    fn merge(mut self, other: ScanAcc) -> ScanAcc {
        let take = match other.best.total_cmp(&self.best) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => self.best_state.is_empty() || other.best_state < self.best_state,
            std::cmp::Ordering::Less => false,
        };
        if take && !other.best_state.is_empty() {
            self.best = other.best;
            self.best_state = other.best_state;
        }
        self.shell_max = self.shell_max.max(other.shell_max);
        self.count += other.count;
        self
    }
}

/// Exhaustively evaluate `g(x) = AV(x) + a V(x)^{1+delta}` on `[0, N]^d`.
///
/// The reported `b` is the maximum of `g`, so `AV <= -a V^{1+delta} + b`
/// holds on the whole box by construction. Negative drift on the outer
/// shell together with an interior argmax is the finite-box evidence that
/// the inequality persists outside a compact set; it is not a proof.
pub fn drift_scan(
    network: &ReactionNetwork,
    lyapunov: &LyapunovKind,
    params: DriftParams,
) -> Result<DriftReport, DriftError> {
    if !(params.a.is_finite() && params.a > 0.0) {
        return Err(DriftError::InvalidParameter(format!("a = {} must be positive", params.a)));
    }
    if params.box_radius < 2 {
        return Err(DriftError::InvalidParameter(format!(
            "box radius {} must be at least 2",
            params.box_radius
        )));
    }
    if let LyapunovKind::LinearW { weights } = lyapunov {
        if weights.len() != network.dim() {
            return Err(DriftError::InvalidParameter("weight vector length differs from species count".into()));
        }
    }
    let dim = network.dim();
    let states = box_size(params.box_radius, dim);
    if states > params.state_cap {
        return Err(DriftError::BoxTooLarge {
            radius: params.box_radius,
            dim,
            states,
            cap: params.state_cap,
        });
    }
    let side = u64::from(params.box_radius) + 1;
    let radius = params.box_radius;
    let total = states as u64;
    let chunk = 4096u64;
    let chunks = total.div_ceil(chunk);
    let acc = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = ScanAcc::empty();
            let mut x = vec![0u32; dim];
            for idx in c * chunk..((c + 1) * chunk).min(total) {
                decode(idx, side, dim, &mut x);
                let v = lyapunov.eval(&x);
                let av = apply_generator(network, |z| lyapunov.eval(z), &x);
                let g = av + params.a * params.exponent.power(v);
                let better = match g.total_cmp(&acc.best) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Equal => acc.best_state.is_empty() || x < acc.best_state,
                    std::cmp::Ordering::Less => false,
                };
                if better {
                    acc.best = g;
                    acc.best_state.clone_from(&x);
                }
                if x.contains(&radius) {
                    acc.shell_max = acc.shell_max.max(av);
                }
                acc.count += 1;
            }
            acc
        })
        .reduce(ScanAcc::empty, ScanAcc::merge);

    let argmax_interior = !acc.best_state.contains(&radius);
    Ok(DriftReport {
        lyapunov: lyapunov.clone(),
        a: params.a,
        delta: params.exponent.delta(),
        box_radius: radius,
        b: acc.best,
        argmax_state: acc.best_state,
        argmax_interior,
        negative_on_shell: acc.shell_max < 0.0,
        shell_max_drift: acc.shell_max,
        states_scanned: acc.count,
    })
}

/// CSV of `AV` and `g` over the 2-D slice spanned by species `axes`, other
/// coordinates fixed to `fixed`.
pub fn drift_slice_csv(
    network: &ReactionNetwork,
    lyapunov: &LyapunovKind,
    params: DriftParams,
    axes: (usize, usize),
    fixed: &[u32],
) -> String {
    let names = network.species();
    let mut out = format!("{},{},AV,g\n", names[axes.0].name, names[axes.1].name);
    let mut x = fixed.to_vec();
    for i in 0..=params.box_radius {
        for j in 0..=params.box_radius {
            x[axes.0] = i;
            x[axes.1] = j;
            let av = apply_generator(network, |z| lyapunov.eval(z), &x);
            let g = av + params.a * params.exponent.power(lyapunov.eval(&x));
            out.push_str(&format!("{i},{j},{av},{g}\n"));
        }
    }
    out
}
