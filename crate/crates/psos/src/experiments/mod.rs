pub mod appendix;
pub mod concentration;
pub mod correlation;
pub mod hitting;
pub mod schedule;
pub mod tail;

pub use appendix::{appendix_tail_check, AppendixReport, AppendixSettings};
pub use concentration::{concentration_experiment, ConcentrationReport, ConcentrationSettings};
pub use correlation::{correlation_decay_probe, CorrelationSettings, DecayCurve};
pub use hitting::{hitting_time_experiment, HittingReport, HittingSettings, StartKind};
pub use schedule::{d_of_p, LevelSchedule, TargetKind};
pub use tail::{estimate_h, estimate_infinite_tail, tail_rates, CiPolicy, TailRates, TailEstimate, TailMeasure, TailSettings, TypicalHeight};

/// Valid experiment names.
pub const EXPERIMENTS: [&str; 6] =
    ["tail-rates", "typical-height", "concentration", "hitting-time", "correlation-decay", "appendix-tail"];
