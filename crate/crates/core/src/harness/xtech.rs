//! LoRa synthesized on top of a Wi-Fi carrier whose payload emulates a tone.

use serde::{Deserialize, Serialize};

use super::link::{LinkSpec, TagSync, CHECKSUM_BITS};
use crate::channel::{ampdu_capacity, CarrierSource, ChannelConfig, AMPDU_BUDGET};
use crate::error::{invalid, Result};
use crate::modem::{LoraParams, ProtocolConfig};
use crate::tag::TagModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XtechSetup {
    pub lora: LoraParams,
    pub stf_duration: f64,
    pub subframe_duration: f64,
    pub n_subframes: usize,
    pub tone_offset: f64,
    pub budget: f64,
    pub stf_snr_db: f64,
    pub stf_threshold: f64,
    /// Gap range for the non-aggregated comparison.
    pub gap_min: f64,
    pub gap_max: f64,
    pub frame_bits: usize,
    pub tag: TagModel,
    pub channel: ChannelConfig,
    pub d_source_tag: f64,
    pub d_tag_rx: f64,
    pub trials: usize,
}

impl Default for XtechSetup {
    fn default() -> Self {
        Self {
            lora: LoraParams {
                sf: 7,
                bw: 125e3,
                oversample: 16,
            },
            stf_duration: 128e-6,
            subframe_duration: 200e-6,
            n_subframes: 360,
            tone_offset: 250e3,
            budget: AMPDU_BUDGET,
            stf_snr_db: 10.0,
            stf_threshold: 0.5,
            gap_min: 10e-6,
            gap_max: 100e-6,
            frame_bits: 64,
            tag: TagModel::default(),
            channel: ChannelConfig {
                fixed_snr_db: Some(0.0),
                ..ChannelConfig::default()
            },
            d_source_tag: 0.2,
            d_tag_rx: 1.0,
            trials: 100,
        }
    }
}

impl XtechSetup {
    /// LoRa symbols that fit in the aggregation budget.
    pub fn capacity(&self) -> usize {
        ampdu_capacity(self.lora.sf, self.lora.bw, self.budget)
    }

    /// Whole frames (payload plus checksum) that fit in [`capacity`](Self::capacity) symbols.
    pub fn frames(&self) -> usize {
        self.capacity() * self.lora.sf as usize / (self.frame_bits + CHECKSUM_BITS)
    }

    /// Link spec over an A-MPDU (`aggregated`) or over separate bursts with
    /// random gaps; both use the same seed for the gap draw.
    pub fn link_spec(&self, aggregated: bool, gap_seed: u64) -> Result<LinkSpec> {
        if self.frames() == 0 {
            return Err(invalid("the A-MPDU budget does not fit a single frame"));
        }
        let carrier = if aggregated {
            CarrierSource::WifiAmpdu {
                stf_duration: self.stf_duration,
                subframe_duration: self.subframe_duration,
                n_subframes: self.n_subframes,
                tone_offset: self.tone_offset,
            }
        } else {
            CarrierSource::WifiBursts {
                stf_duration: self.stf_duration,
                subframe_duration: self.subframe_duration,
                n_subframes: self.n_subframes,
                tone_offset: self.tone_offset,
                gap_min: self.gap_min,
                gap_max: self.gap_max,
                seed: gap_seed,
            }
        };
        Ok(LinkSpec {
            protocol: ProtocolConfig::Lora(self.lora),
            carrier: Some(carrier),
            tag: self.tag.clone(),
            tag_sync: TagSync::Stf {
                snr_db: self.stf_snr_db,
                threshold: self.stf_threshold,
            },
            d_source_tag: self.d_source_tag,
            d_tag_rx: self.d_tag_rx,
            channel: self.channel.clone(),
            payload_bits: self.frames() * self.frame_bits,
            frame_bits: self.frame_bits,
            trials: self.trials,
            boundary_samples: crate::impedance::DEFAULT_BOUNDARY_SAMPLES,
            // the receiver removes the known tone offset
            allow_invalid_plan: true,
        })
    }
}
