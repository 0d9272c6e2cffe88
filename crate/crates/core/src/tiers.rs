//! Tier partitions of complexes along monomial growth profiles.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::lp::Q;
use crate::network::{Complex, Reaction, ReactionNetwork};

/// Asymptotics of one coordinate of a tier sequence `x_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Growth {
    /// `x_{n,i} = scale * n^exponent + lower order`.
    Unbounded { exponent: Q, scale: Q },
    /// `x_{n,i} -> limit`.
    Bounded { limit: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthProfile {
    pub coordinates: Vec<Growth>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfileError {
    #[error("malformed profile entry `{0}`")]
    Malformed(String),
    #[error("unknown species `{0}` in profile")]
    UnknownSpecies(String),
    #[error("species `{0}` listed twice in profile")]
    Duplicate(String),
    #[error("species `{0}` missing from profile")]
    Missing(String),
    #[error("profile must have at least one unbounded species")]
    AllBounded,
    #[error("exponent and scale must be positive in `{0}`")]
    NonPositive(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("complex `{0}` is not in the partition")]
pub struct UnknownComplex(pub String);

impl GrowthProfile {
    pub fn new(coordinates: Vec<Growth>) -> Result<Self, ProfileError> {
        if !coordinates.iter().any(|g| matches!(g, Growth::Unbounded { .. })) {
            return Err(ProfileError::AllBounded);
        }
        for g in &coordinates {
            if let Growth::Unbounded { exponent, scale } = g {
                if !exponent.is_positive() || !scale.is_positive() {
                    return Err(ProfileError::NonPositive(format!("{exponent}, {scale}")));
                }
            }
        }
        Ok(GrowthProfile { coordinates })
    }

    /// Leading exponent of `(x_n v 1)^y`.
    pub fn exponent_of(&self, y: &Complex) -> Q {
        let mut e = Q::zero();
        for (g, &yi) in self.coordinates.iter().zip(y.coefficients()) {
            if let Growth::Unbounded { exponent, .. } = g {
                e += exponent * Q::from_integer(yi.into());
            }
        }
        e
    }

    /// Concrete value of coordinate `i` at index `n` (used by numeric checks).
    pub fn evaluate(&self, n: f64) -> Vec<f64> {
        self.coordinates
            .iter()
            .map(|g| match g {
                Growth::Unbounded { exponent, scale } => to_f64(scale) * n.powf(to_f64(exponent)),
                Growth::Bounded { limit } => f64::from(*limit),
            })
            .collect()
    }
}

fn to_f64(q: &Q) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

fn parse_rational(text: &str) -> Option<Q> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let (num, den) = match text.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (text, "1"),
    };
    if let (Ok(n), Ok(d)) = (num.parse::<i64>(), den.parse::<i64>()) {
        return (d != 0).then(|| Q::new(n.into(), d.into()));
    }
    // Finite decimals such as "0.5".
    if den == "1" {
        let (int, frac) = num.split_once('.')?;
        let digits = format!("{int}{frac}");
        let n: i64 = digits.parse().ok()?;
        let d = 10i64.checked_pow(frac.len() as u32)?;
        return Some(Q::new(n.into(), d.into()));
    }
    None
}

/// Parse one entry value: an integer limit, or a monomial such as `n`,
/// `n^2`, `3n`, `3*n^1/2`, `n^2*3`. Integer offsets (`n+1`) are lower order
/// and ignored.
fn parse_growth(value: &str) -> Option<Growth> {
    let value = value.trim();
    if !value.contains('n') {
        return value.parse::<u32>().ok().map(|limit| Growth::Bounded { limit });
    }
    let mut body = value.replace(' ', "");
    // Strip a trailing integer offset.
    if let Some(pos) = body.rfind(['+', '-']) {
        if pos > 0 && body[pos + 1..].chars().all(|c| c.is_ascii_digit()) && !body[pos + 1..].is_empty() {
            body.truncate(pos);
        }
    }
    let npos = body.find('n')?;
    if body[npos + 1..].contains('n') {
        return None;
    }
    let prefix = body[..npos].trim_end_matches('*');
    let mut scale = if prefix.is_empty() { Q::one() } else { parse_rational(prefix)? };
    let mut rest = &body[npos + 1..];
    let mut exponent = Q::one();
    if let Some(r) = rest.strip_prefix('^') {
        let end = r.find('*').unwrap_or(r.len());
        exponent = parse_rational(r[..end].trim_matches(['(', ')']))?;
        rest = &r[end..];
    }
    if let Some(r) = rest.strip_prefix('*') {
        scale *= parse_rational(r)?;
    } else if !rest.is_empty() {
        return None;
    }
    Some(Growth::Unbounded { exponent, scale })
}

/// Parse `"A:n, B:0, C:n^2*3"`. Every species must appear exactly once.
pub fn parse_profile(network: &ReactionNetwork, text: &str) -> Result<GrowthProfile, ProfileError> {
    let mut slots: Vec<Option<Growth>> = vec![None; network.dim()];
    for entry in text.split(',').map(str::trim).filter(|e| !e.is_empty()) {
        let (name, value) = entry
            .split_once(':')
            .ok_or_else(|| ProfileError::Malformed(entry.to_string()))?;
        let name = name.trim();
        let idx = network
            .species_index(name)
            .ok_or_else(|| ProfileError::UnknownSpecies(name.to_string()))?;
        if slots[idx].is_some() {
            return Err(ProfileError::Duplicate(name.to_string()));
        }
        let growth = parse_growth(value).ok_or_else(|| ProfileError::Malformed(entry.to_string()))?;
        slots[idx] = Some(growth);
    }
    let mut coords = Vec::with_capacity(slots.len());
    for (slot, sp) in slots.into_iter().zip(network.species()) {
        coords.push(slot.ok_or_else(|| ProfileError::Missing(sp.name.clone()))?);
    }
    GrowthProfile::new(coords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominance {
    Succeeds,
    Equivalent,
    Precedes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TierPartition {
    /// Tiers in descending exponent order; entries are complex indices.
    pub tiers: Vec<Vec<usize>>,
    /// Leading exponent shared by each tier.
    pub exponents: Vec<Q>,
    tier_of: Vec<usize>,
    complexes: Vec<Complex>,
}

impl TierPartition {
    /// 1-based tier number of `y`.
    pub fn tier_index(&self, y: &Complex) -> Option<usize> {
        let i = self.complexes.iter().position(|c| c == y)?;
        Some(self.tier_of[i] + 1)
    }

    pub fn tier_of_complex(&self, complex_index: usize) -> usize {
        self.tier_of[complex_index] + 1
    }

    /// Tiers rendered with species names.
    pub fn named(&self, network: &ReactionNetwork) -> Vec<Vec<String>> {
        self.tiers
            .iter()
            .map(|t| t.iter().map(|&i| network.complex_name(&self.complexes[i])).collect())
            .collect()
    }

    pub fn to_json(&self, network: &ReactionNetwork) -> String {
        let tiers: Vec<_> = self
            .named(network)
            .into_iter()
            .zip(&self.exponents)
            .enumerate()
            .map(|(i, (members, e))| {
                serde_json::json!({ "tier": i + 1, "exponent": e.to_string(), "complexes": members })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "tiers": tiers })).expect("serializable")
    }
}

pub fn tier_partition(network: &ReactionNetwork, profile: &GrowthProfile) -> TierPartition {
    let complexes = network.complexes().to_vec();
    let mut groups: BTreeMap<std::cmp::Reverse<Q>, Vec<usize>> = BTreeMap::new();
    for (i, y) in complexes.iter().enumerate() {
        groups
            .entry(std::cmp::Reverse(profile.exponent_of(y)))
            .or_default()
            .push(i);
    }
    let mut tier_of = vec![0; complexes.len()];
    let mut tiers = Vec::new();
    let mut exponents = Vec::new();
    for (t, (e, members)) in groups.into_iter().enumerate() {
        for &m in &members {
            tier_of[m] = t;
        }
        tiers.push(members);
        exponents.push(e.0);
    }
    TierPartition {
        tiers,
        exponents,
        tier_of,
        complexes,
    }
}

/// Compare `y` with `y'`: `Succeeds` means `y` sits in a strictly higher tier.
pub fn dominance(
    network: &ReactionNetwork,
    partition: &TierPartition,
    y: &Complex,
    y_prime: &Complex,
) -> Result<Dominance, UnknownComplex> {
    let ti = partition
        .tier_index(y)
        .ok_or_else(|| UnknownComplex(network.complex_name(y)))?;
    let tj = partition
        .tier_index(y_prime)
        .ok_or_else(|| UnknownComplex(network.complex_name(y_prime)))?;
    Ok(match ti.cmp(&tj) {
        Ordering::Less => Dominance::Succeeds,
        Ordering::Equal => Dominance::Equivalent,
        Ordering::Greater => Dominance::Precedes,
    })
}

/// `lim lambda(x_n) / (x_n v 1)^y` along the profile.
pub fn intensity_ratio_limit(reaction: &Reaction, profile: &GrowthProfile) -> f64 {
    let mut value = reaction.rate;
    for (g, &yi) in profile.coordinates.iter().zip(reaction.source.coefficients()) {
        if let Growth::Bounded { limit } = *g {
            if limit < yi {
                return 0.0;
            }
            let base = f64::from(limit.max(1));
            for k in 0..yi {
                value *= f64::from(limit - k) / base;
            }
        }
    }
    value
}
