//! Exact small-box Gibbs measures and the checks built on them.

mod exact;
mod transfer;
mod verify;

pub use exact::{ExactMeasure, Window};
pub use transfer::{contour_event, Intervals, ProductEvents, TransferMeasure};
pub use verify::{
    is_increasing, is_increasing_pairwise, occupation_tv, threshold_events, verify_coupling, verify_detailed_balance,
    verify_fkg, verify_peierls, verify_peierls_nested, verify_sandwich, CheckEntry, Event, Relation, Report,
    SandwichEvents,
};

/// Default limit on the number of enumerated states.
pub const DEFAULT_CAP: u128 = 100_000_000;
