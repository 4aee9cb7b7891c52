//! Stabilizing constructions.
//!
//! * [`build_stable_subset`]: a set of inputs conditioned on which the output
//!   spectrum concentrates around `s* lambda`.
//! * [`carve_partition`], [`carve_partition_per_message`], [`build_v_full`]:
//!   repeated carving into a partition `V` with a rate per label.
//! * [`build_q`]: the message quantizer `Q` and its stable/saturate split.
//! * [`build_net`]: a finite grid of channels with a bounded divergence gap.
//! * [`assemble_u`]: the combined `U = (V, Q, T)` and its domain checks.
//!
//! Every construction records the constants it used and the measured
//! probabilities next to their bounds, so callers can check them directly.

mod combined;
mod constants;
mod message;
mod net;
mod partition;
mod subset;

pub use combined::{assemble_u, stability_domain_membership, CombinedParams, CombinedU, DomainCheck, DomainMode, DomainPoint};
pub use constants::{alpha_max, eps_n, StableParams, MIN_N};
pub use message::{build_q, message_only_source, quantize, MessageCheck, MessageClass, MessageClassification, MessageStabilizer};
pub use net::{build_net, net_cardinality_bound, net_gap, net_threshold_n, DistributionNet};
pub use partition::{
    build_v_full, carve_partition, carve_partition_per_message, residual_bound, Carve, CarveGroup, EntropyCheck, FullPartition,
    GoodSet, LabelCheck, Partition, PartitionKind, RESIDUAL_RATE,
};
pub use subset::{build_stable_subset, StableSubset};
