//! Reference networks bundled with the crate.

pub const NETWORK5: &str = include_str!("../networks/network5.crn");
pub const NETWORK6: &str = include_str!("../networks/network6.crn");
pub const ENZYME_WITH_OUTFLOWS: &str = include_str!("../networks/enzyme.crn");
pub const TIER_EXAMPLE: &str = include_str!("../networks/ex45.crn");
pub const THREE_LINKAGE_CLASSES: &str = include_str!("../networks/ex23.crn");
pub const NETWORK5_WITHOUT_C_OUTFLOW: &str = include_str!("../networks/network5_no_c_outflow.crn");
pub const DIMER_DRAIN: &str = include_str!("../networks/dimer_drain.crn");
pub const PATHS_WITH_OUTFLOWS: &str = include_str!("../networks/paths_with_outflows.crn");
pub const THREE_A: &str = include_str!("../networks/threeA.crn");
