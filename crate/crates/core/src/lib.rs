//! Complex-baseband simulator for a backscatter tag that synthesizes
//! LoRa, ZigBee, BLE and Wi-Fi waveforms by programming its reflection
//! coefficient through two bias-controlled resistive loads.

pub mod channel;
pub mod error;
pub mod harness;
pub mod impedance;
pub mod iq;
pub mod modem;
pub mod tag;

pub use channel::{CarrierSource, ChannelConfig, FrequencyPlan, PlanVerdict};
pub use error::{Error, Result};
pub use harness::{LinkReport, LinkSpec};
pub use impedance::{Gamma, Impedance, MatchingElement, MatchingNetwork, ModulationSpace};
pub use iq::IqStream;
pub use modem::ProtocolConfig;
pub use tag::{BiasWaveform, TagConfig, TagModel, TransistorCurve};
