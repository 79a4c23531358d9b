//! Component structure of the prefix space and the solvability decision.

pub mod broadcast;
pub mod dot;
pub mod limit;
pub mod partition;
pub mod solve;
pub mod unionfind;

pub use broadcast::{broadcast_check, BroadcastStatus, LassoWitness};
pub use dot::components_dot;
pub use limit::{find_fair_unfair, ForeverLink, LimitWitness, SiblingCertificate};
pub use partition::{assign_decision_sets, epsilon_components, Component, ComponentPartition, DecisionSets, ValenceConflict};
pub use solve::{decide_solvability, SolvabilityReport, SolvabilityVerdict, SolveOptions};
