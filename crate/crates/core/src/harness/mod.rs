//! Link simulation, Monte-Carlo metrics, sweeps, range search, constellation
//! diagnostics, TDMA scheduling and the cross-technology setup.

mod constellation;
mod link;
mod stats;
mod sweep;
mod tdma;
mod xtech;

pub use constellation::{constellation_capture, wrap_deg, CapturedPoint, ConstellationSpec, ConstellationStats, QAM4};
pub use link::{frame_checksum, frame_payload, run_link, run_link_row, LinkReport, LinkSpec, TagSync, CHECKSUM_BITS};
pub use stats::{derive_seed, wilson, Interval, Z95};
pub use sweep::{ber_sweep, range_search, write_sweep_csv, RangeReport, RangeSearch, SweepAxis, SweepRow};
pub use tdma::{tdma_schedule, TdmaWindow};
pub use xtech::XtechSetup;
