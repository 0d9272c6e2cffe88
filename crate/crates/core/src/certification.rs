//! Structural ergodicity certification.
//!
//! Each candidate class is a set of purely graph-theoretic hypotheses on
//! the network. The certifier tests all of them, picks a primary class by
//! a fixed precedence, and records every witness the matched hypotheses
//! require (paths, species partition, conservation vector). The constants
//! `C` and `eta` in the convergence bounds are non-constructive and are
//! never reported.
//!
//! The "pre-flow" network `R` is the set of reactions that are neither
//! inflows `0 -> S_i` nor outflows `S_i -> 0`. Structural hypotheses and
//! conservativity are evaluated on it; inflows and outflows are matched
//! against the flow patterns each class allows.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{self, ConservationVector, FlowDecomposition};
use crate::network::{Complex, ReactionNetwork};

/// One family of sufficient conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// Open network around a binary, weakly reversible, single-linkage-class core.
    OpenWeaklyReversible,
    /// All outflows, any inflows, binary weakly reversible single-linkage-class core.
    OutflowWeaklyReversible,
    /// All outflows, any inflows, every binary complex drains to a low-order complex.
    OutflowLowOrderPaths,
    /// One outflow species reached from every other species by unary chains.
    SingleOutflowUnaryChains,
    /// Outflow species set reached from every remaining species by unary chains.
    PartitionedOutflowUnaryChains,
    /// Binary, double-full, every double complex drains to a low-order complex.
    DoubleFull,
}

impl Criterion {
    /// Precedence used to choose the primary label.
    pub const PRECEDENCE: [Criterion; 6] = [
        Criterion::OpenWeaklyReversible,
        Criterion::OutflowWeaklyReversible,
        Criterion::OutflowLowOrderPaths,
        Criterion::SingleOutflowUnaryChains,
        Criterion::PartitionedOutflowUnaryChains,
        Criterion::DoubleFull,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::OpenWeaklyReversible => "Thm3.1",
            Criterion::DoubleFull => "Thm3.2",
            Criterion::OutflowWeaklyReversible => "Cor6.1",
            Criterion::OutflowLowOrderPaths => "Cor6.2",
            Criterion::SingleOutflowUnaryChains => "Cor6.3",
            Criterion::PartitionedOutflowUnaryChains => "Cor6.4",
        }
    }

    pub fn is_uniform(self) -> bool {
        self == Criterion::DoubleFull
    }

    /// Classes whose stationary law may be degenerate on a closed class.
    fn may_have_point_mass(self) -> bool {
        matches!(
            self,
            Criterion::OutflowLowOrderPaths
                | Criterion::SingleOutflowUnaryChains
                | Criterion::PartitionedOutflowUnaryChains
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundForm {
    #[serde(rename = "B(x)=C(|x|+1)ln(|x|+2)")]
    LinearLog,
    #[serde(rename = "B(x)=C(|x|+1)")]
    Linear,
    #[serde(rename = "B(x)=C (uniform)")]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixingOrder {
    #[serde(rename = "O(log|x|)")]
    Logarithmic,
    #[serde(rename = "O(1)")]
    Constant,
    #[serde(rename = "unknown")]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessPath {
    /// `low-order` (drains a binary or double complex) or `unary-chain`.
    pub kind: String,
    pub complexes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub core_reactions: Vec<String>,
    pub inflow_species: Vec<String>,
    pub outflow_species: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeciesPartition {
    /// Species without an outflow, each linked to `exiting` by a unary chain.
    pub persistent: Vec<String>,
    /// Species carrying an outflow.
    pub exiting: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witnesses {
    pub conservation_vector: Option<Vec<u64>>,
    pub paths: Vec<WitnessPath>,
    pub flow_decomposition: FlowSummary,
    pub species_partition: Option<SpeciesPartition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedHypothesis {
    pub class: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErgodicityCertificate {
    pub class_label: String,
    pub bound_form: Option<BoundForm>,
    pub mixing_order: MixingOrder,
    pub uniform: bool,
    pub witnesses: Witnesses,
    pub caveats: Vec<String>,
    pub all_matching_classes: Vec<String>,
    pub failed_hypotheses: Vec<FailedHypothesis>,
}

pub const NOT_CERTIFIED: &str = "NotCertified";
pub const CAVEAT_POINT_MASS: &str = "stationary distribution may be a point mass";
pub const CAVEAT_REDUCIBLE: &str =
    "state space possibly reducible; the bound holds on each closed communication class";
pub const CAVEAT_NOT_CERTIFIED: &str =
    "not certified: the tested conditions are sufficient, not necessary; this is not a claim of non-ergodicity";
pub const CAVEAT_ALSO_UNIFORM: &str =
    "the double-full hypotheses (Thm3.2) also hold, so the convergence bound is also uniform in the initial state";

impl ErgodicityCertificate {
    pub fn is_certified(&self) -> bool {
        self.class_label != NOT_CERTIFIED
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Outcome of one criterion: the witnesses it produced or the first
/// hypothesis that failed.
#[derive(Debug, Clone)]
pub struct CriterionMatch {
    pub paths: Vec<WitnessPath>,
    pub partition: Option<(BTreeSet<usize>, BTreeSet<usize>)>,
}

struct Context<'a> {
    network: &'a ReactionNetwork,
    flows: FlowDecomposition,
    core: ReactionNetwork,
    all_species: BTreeSet<usize>,
}

impl<'a> Context<'a> {
    fn new(network: &'a ReactionNetwork) -> Self {
        let flows = graph::flow_decomposition(network);
        let core_set: BTreeSet<usize> = flows.core_reactions.iter().copied().collect();
        let mut k = 0;
        let core = network.subnetwork(|_| {
            let keep = core_set.contains(&k);
            k += 1;
            keep
        });
        Context {
            network,
            flows,
            core,
            all_species: (0..network.dim()).collect(),
        }
    }

    fn name(&self, c: &Complex) -> String {
        self.network.complex_name(c)
    }

    fn species_names(&self, set: &BTreeSet<usize>) -> Vec<String> {
        set.iter().map(|&i| self.network.species()[i].name.clone()).collect()
    }

    fn path(&self, kind: &str, complexes: &[Complex]) -> WitnessPath {
        WitnessPath {
            kind: kind.to_string(),
            complexes: complexes.iter().map(|c| self.name(c)).collect(),
        }
    }

    fn require_all_outflows(&self) -> Result<(), String> {
        let missing: BTreeSet<usize> =
            self.all_species.difference(&self.flows.outflow_species).copied().collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(format!(
                "missing outflow S -> 0 for {}",
                self.species_names(&missing).join(", ")
            ))
        }
    }

    fn require_binary_core(&self) -> Result<(), String> {
        if self.core.is_binary() {
            Ok(())
        } else {
            Err("not binary: some complex has order greater than 2".into())
        }
    }

    fn require_weakly_reversible_single_class(&self) -> Result<(), String> {
        if self.core.reactions().is_empty() {
            return Err("pre-flow network has no reactions".into());
        }
        let classes = graph::linkage_classes(&self.core).len();
        if classes != 1 {
            return Err(format!(
                "pre-flow network has {classes} linkage classes, expected 1"
            ));
        }
        if !graph::is_weakly_reversible(&self.core) {
            return Err("pre-flow network is not weakly reversible".into());
        }
        Ok(())
    }

    /// Every binary complex of the pre-flow network drains to a complex of
    /// order at most one.
    fn binary_paths(&self) -> Result<Vec<WitnessPath>, String> {
        let mut paths = Vec::new();
        for c in self.core.complexes().iter().filter(|c| c.order() == 2) {
            match graph::path_to_low_order(self.network, c) {
                Some(p) => paths.push(self.path("low-order", &p)),
                None => {
                    return Err(format!(
                        "no directed path from binary complex {} to a unary or zero complex",
                        self.name(c)
                    ))
                }
            }
        }
        Ok(paths)
    }

    fn unary_chains(&self, from: &BTreeSet<usize>, to: &BTreeSet<usize>) -> Result<Vec<WitnessPath>, String> {
        let mut paths = Vec::new();
        for &i in from {
            match graph::unary_chain(&self.core, i, to) {
                Some(p) => paths.push(self.path("unary-chain", &p)),
                None => {
                    return Err(format!(
                        "no unary chain from {} to {{{}}}",
                        self.network.species()[i].name,
                        self.species_names(to).join(", ")
                    ))
                }
            }
        }
        Ok(paths)
    }

    fn check(&self, criterion: Criterion) -> Result<CriterionMatch, String> {
        let plain = |paths| CriterionMatch {
            paths,
            partition: None,
        };
        match criterion {
            Criterion::OpenWeaklyReversible => {
                self.require_all_outflows()?;
                let missing: BTreeSet<usize> =
                    self.all_species.difference(&self.flows.inflow_species).copied().collect();
                if !missing.is_empty() {
                    return Err(format!(
                        "missing inflow 0 -> S for {}",
                        self.species_names(&missing).join(", ")
                    ));
                }
                self.require_binary_core()?;
                self.require_weakly_reversible_single_class()?;
                Ok(plain(Vec::new()))
            }
            Criterion::OutflowWeaklyReversible => {
                self.require_all_outflows()?;
                self.require_binary_core()?;
                self.require_weakly_reversible_single_class()?;
                Ok(plain(Vec::new()))
            }
            Criterion::OutflowLowOrderPaths => {
                self.require_all_outflows()?;
                self.require_binary_core()?;
                Ok(plain(self.binary_paths()?))
            }
            Criterion::SingleOutflowUnaryChains => {
                if self.flows.outflow_species.len() != 1 {
                    return Err(format!(
                        "requires exactly one outflow species, found {}",
                        self.flows.outflow_species.len()
                    ));
                }
                self.require_binary_core()?;
                let mut present = BTreeSet::new();
                for &k in self.flows.core_reactions.iter().chain(&self.flows.inflow_reactions) {
                    let r = &self.network.reactions()[k];
                    present.extend(r.source.as_unary());
                    present.extend(r.product.as_unary());
                }
                let absent: BTreeSet<usize> =
                    self.all_species.difference(&present).copied().collect();
                if !absent.is_empty() {
                    return Err(format!(
                        "species {} not present as unary complexes",
                        self.species_names(&absent).join(", ")
                    ));
                }
                let mut paths = self.binary_paths()?;
                let target = self.flows.outflow_species.clone();
                let others: BTreeSet<usize> = self.all_species.difference(&target).copied().collect();
                paths.extend(self.unary_chains(&others, &target)?);
                Ok(CriterionMatch {
                    paths,
                    partition: Some((others, target)),
                })
            }
            Criterion::PartitionedOutflowUnaryChains => {
                let exiting = self.flows.outflow_species.clone();
                if exiting.is_empty() {
                    return Err("no outflow reactions".into());
                }
                self.require_binary_core()?;
                let mut paths = self.binary_paths()?;
                let persistent: BTreeSet<usize> =
                    self.all_species.difference(&exiting).copied().collect();
                paths.extend(self.unary_chains(&persistent, &exiting)?);
                Ok(CriterionMatch {
                    paths,
                    partition: Some((persistent, exiting)),
                })
            }
            Criterion::DoubleFull => {
                let net = self.network;
                if net.dim() == 0 {
                    return Err("network has no species".into());
                }
                if !net.is_binary() {
                    return Err("not binary: some complex has order greater than 2".into());
                }
                let d = net.dim();
                let mut paths = Vec::new();
                for i in 0..d {
                    let double = Complex::double(d, i);
                    if net.complex_index(&double).is_none() {
                        return Err(format!("not double-full: {} is not a complex", self.name(&double)));
                    }
                    match graph::path_to_low_order(net, &double) {
                        Some(p) => paths.push(self.path("low-order", &p)),
                        None => {
                            return Err(format!(
                                "no directed path from {} to a unary or zero complex",
                                self.name(&double)
                            ))
                        }
                    }
                }
                Ok(plain(paths))
            }
        }
    }
}

/// Certificate class label for `criterion`, with the conservative suffix
/// where it applies.
pub fn class_label(criterion: Criterion, conservative: bool) -> String {
    if conservative && !criterion.is_uniform() {
        format!("{}-conservative", criterion.label())
    } else {
        criterion.label().to_string()
    }
}

/// Evaluate a single criterion without building a full certificate.
pub fn check_criterion(network: &ReactionNetwork, criterion: Criterion) -> Result<CriterionMatch, String> {
    Context::new(network).check(criterion)
}

/// Test every class and emit the certificate for the first match in
/// [`Criterion::PRECEDENCE`].
pub fn certify(network: &ReactionNetwork) -> ErgodicityCertificate {
    let ctx = Context::new(network);
    let conservation: Option<ConservationVector> =
        graph::find_conservation_vector(network.dim(), ctx.core.reactions());
    let conservative = conservation.is_some();

    let mut matches = Vec::new();
    let mut failed = Vec::new();
    for criterion in Criterion::PRECEDENCE {
        match ctx.check(criterion) {
            Ok(m) => matches.push((criterion, m)),
            Err(reason) => failed.push(FailedHypothesis {
                class: criterion.label().to_string(),
                reason,
            }),
        }
    }

    let flow_summary = FlowSummary {
        core_reactions: ctx
            .flows
            .core_reactions
            .iter()
            .map(|&k| {
                let r = &network.reactions()[k];
                format!("{} -> {}", ctx.name(&r.source), ctx.name(&r.product))
            })
            .collect(),
        inflow_species: ctx.species_names(&ctx.flows.inflow_species),
        outflow_species: ctx.species_names(&ctx.flows.outflow_species),
    };
    let all_matching: Vec<String> = matches
        .iter()
        .map(|(c, _)| class_label(*c, conservative))
        .collect();

    let open = ctx.flows.inflow_species == ctx.all_species && ctx.flows.outflow_species == ctx.all_species;

    let Some((primary, witness)) = matches.first().cloned() else {
        return ErgodicityCertificate {
            class_label: NOT_CERTIFIED.to_string(),
            bound_form: None,
            mixing_order: MixingOrder::Unknown,
            uniform: false,
            witnesses: Witnesses {
                conservation_vector: conservation.map(|w| w.weights),
                paths: Vec::new(),
                flow_decomposition: flow_summary,
                species_partition: None,
            },
            caveats: vec![CAVEAT_NOT_CERTIFIED.to_string()],
            all_matching_classes: Vec::new(),
            failed_hypotheses: failed,
        };
    };

    let mut caveats = Vec::new();
    if primary.may_have_point_mass() {
        caveats.push(CAVEAT_POINT_MASS.to_string());
    }
    if !open {
        caveats.push(CAVEAT_REDUCIBLE.to_string());
    }
    if !primary.is_uniform() && matches.iter().any(|(c, _)| c.is_uniform()) {
        caveats.push(CAVEAT_ALSO_UNIFORM.to_string());
    }

    let (bound_form, mixing_order) = if primary.is_uniform() {
        (BoundForm::Uniform, MixingOrder::Constant)
    } else if conservative {
        (BoundForm::Linear, MixingOrder::Logarithmic)
    } else {
        (BoundForm::LinearLog, MixingOrder::Logarithmic)
    };

    ErgodicityCertificate {
        class_label: class_label(primary, conservative),
        bound_form: Some(bound_form),
        mixing_order,
        uniform: primary.is_uniform(),
        witnesses: Witnesses {
            conservation_vector: if primary.is_uniform() {
                None
            } else {
                conservation.map(|w| w.weights)
            },
            paths: witness.paths,
            flow_decomposition: flow_summary,
            species_partition: witness.partition.map(|(p, e)| SpeciesPartition {
                persistent: ctx.species_names(&p),
                exiting: ctx.species_names(&e),
            }),
        },
        caveats,
        all_matching_classes: all_matching,
        failed_hypotheses: failed,
    }
}
