//! Baseband modems. Modulators produce unit-bounded target streams for the
//! tag; demodulators are the receiver side.

pub mod ble;
pub mod lora;
pub mod ofdm;
pub mod wifi11b;
pub mod zigbee;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::iq::IqStream;

pub use ble::BleParams;
pub use lora::{bits_to_symbols, lora_demodulate, lora_modulate, symbols_to_bits, ChirpParams};
pub use ofdm::{Constellation, OfdmParams};
pub use wifi11b::Wifi11bParams;
pub use zigbee::ZigbeeParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoraParams {
    pub sf: u8,
    pub bw: f64,
    /// Samples per chip.
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn default_oversample() -> usize {
    2
}

impl LoraParams {
    pub fn new(sf: u8, bw: f64) -> Self {
        Self {
            sf,
            bw,
            oversample: default_oversample(),
        }
    }

    pub fn chirp(&self) -> ChirpParams {
        ChirpParams::new(self.sf, self.bw)
    }

    pub fn sample_rate(&self) -> f64 {
        self.bw * self.oversample as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProtocolConfig {
    Lora(LoraParams),
    Zigbee(ZigbeeParams),
    Ble(BleParams),
    Wifi11b(Wifi11bParams),
    WifiOfdm(OfdmParams),
}

impl ProtocolConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolConfig::Lora(_) => "lora",
            ProtocolConfig::Zigbee(_) => "zigbee",
            ProtocolConfig::Ble(_) => "ble",
            ProtocolConfig::Wifi11b(_) => "wifi11b",
            ProtocolConfig::WifiOfdm(_) => "wifi-ofdm",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProtocolConfig::Lora(p) => {
                p.chirp().validate()?;
                if p.oversample == 0 {
                    return Err(invalid("LoRa oversampling must be at least 1"));
                }
                Ok(())
            }
            ProtocolConfig::Zigbee(p) => p.validate(),
            ProtocolConfig::Ble(p) => p.validate(),
            ProtocolConfig::Wifi11b(p) => p.validate(),
            ProtocolConfig::WifiOfdm(p) => p.validate(),
        }
    }

    pub fn sample_rate(&self) -> f64 {
        match self {
            ProtocolConfig::Lora(p) => p.sample_rate(),
            ProtocolConfig::Zigbee(p) => p.sample_rate(),
            ProtocolConfig::Ble(p) => p.sample_rate(),
            ProtocolConfig::Wifi11b(p) => p.sample_rate(),
            ProtocolConfig::WifiOfdm(p) => p.sample_rate,
        }
    }

    /// Raw PHY bit rate in bits per second.
    pub fn nominal_rate(&self) -> f64 {
        match self {
            ProtocolConfig::Lora(p) => p.sf as f64 * p.bw / (1u64 << p.sf) as f64,
            ProtocolConfig::Zigbee(p) => p.nominal_rate(),
            ProtocolConfig::Ble(p) => p.bit_rate,
            ProtocolConfig::Wifi11b(p) => p.nominal_rate(),
            ProtocolConfig::WifiOfdm(p) => p.nominal_rate(),
        }
    }

    /// Tag modulation frequency: half the occupied bandwidth of the target.
    pub fn modulation_frequency(&self) -> f64 {
        match self {
            ProtocolConfig::Lora(p) => p.bw / 2.0,
            ProtocolConfig::Zigbee(p) => p.chip_rate / 2.0,
            ProtocolConfig::Ble(p) => p.deviation() + p.bit_rate / 2.0,
            ProtocolConfig::Wifi11b(p) => p.chip_rate / 2.0,
            ProtocolConfig::WifiOfdm(p) => p.occupied_half_bandwidth(),
        }
    }

    /// Payload lengths must be a multiple of this.
    pub fn bit_granularity(&self) -> usize {
        match self {
            ProtocolConfig::Lora(p) => p.sf as usize,
            ProtocolConfig::Zigbee(_) => 4,
            ProtocolConfig::WifiOfdm(p) => p.bits_per_ofdm_symbol(),
            ProtocolConfig::Ble(_) | ProtocolConfig::Wifi11b(_) => 1,
        }
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<IqStream> {
        self.validate()?;
        match self {
            ProtocolConfig::Lora(p) => {
                let symbols = bits_to_symbols(bits, p.sf);
                lora_modulate(&symbols, &p.chirp(), p.sample_rate())
            }
            ProtocolConfig::Zigbee(p) => p.modulate(bits),
            ProtocolConfig::Ble(p) => p.modulate(bits),
            ProtocolConfig::Wifi11b(p) => p.modulate(bits),
            ProtocolConfig::WifiOfdm(p) => p.modulate(bits),
        }
    }

    /// Demodulated bits; may be longer than the payload when padding was added.
    pub fn demodulate(&self, rx: &IqStream) -> Result<Vec<u8>> {
        self.validate()?;
        match self {
            ProtocolConfig::Lora(p) => Ok(symbols_to_bits(&lora_demodulate(rx, &p.chirp())?, p.sf)),
            ProtocolConfig::Zigbee(p) => p.demodulate(rx),
            ProtocolConfig::Ble(p) => p.demodulate(rx),
            ProtocolConfig::Wifi11b(p) => p.demodulate(rx),
            ProtocolConfig::WifiOfdm(p) => p.demodulate(rx),
        }
    }
}
