//! Carrier sources, frequency planning, STF synchronization, path loss and AWGN.

mod carrier;
mod plan;
mod propagation;

pub use carrier::{
    ampdu_capacity, generate_carrier, stf_detect, stf_template, stf_waveform, CarrierSource, Segment, SegmentKind,
    AMPDU_BUDGET, STF_REPETITIONS, STF_SYMBOL_LEN,
};
pub use plan::{check_frequency_plan, FrequencyPlan, PlanVerdict};
pub use propagation::{apply_channel, path_loss_db, ChannelConfig, SPEED_OF_LIGHT};
