//! OOK query downlink: envelope-detector receiver and the query frame format.
//!
//! Wire format, MSB first: `0xAA | tag_id | slot_index | carrier_kind |
//! protocol_id | checksum`, where the checksum is the XOR of the four payload
//! octets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::iq::IqStream;

pub const QUERY_PREAMBLE: u8 = 0xAA;
pub const QUERY_BITS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarrierKind {
    Tone,
    WifiAmpdu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    Lora,
    Zigbee,
    Ble,
    Wifi11b,
    WifiOfdm,
}

impl CarrierKind {
    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(CarrierKind::Tone),
            1 => Ok(CarrierKind::WifiAmpdu),
            _ => Err(Error::BadField {
                field: "carrier_kind",
                code,
            }),
        }
    }
}

impl ProtocolId {
    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => ProtocolId::Lora,
            1 => ProtocolId::Zigbee,
            2 => ProtocolId::Ble,
            3 => ProtocolId::Wifi11b,
            4 => ProtocolId::WifiOfdm,
            _ => {
                return Err(Error::BadField {
                    field: "protocol_id",
                    code,
                })
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub tag_id: u8,
    pub slot_index: u8,
    pub carrier_kind: CarrierKind,
    pub protocol_id: ProtocolId,
}

impl Query {
    fn payload(&self) -> [u8; 4] {
        [
            self.tag_id,
            self.slot_index,
            self.carrier_kind.code(),
            self.protocol_id.code(),
        ]
    }

    pub fn checksum(&self) -> u8 {
        self.payload().iter().fold(0, |acc, b| acc ^ b)
    }
}

fn push_octet(bits: &mut Vec<u8>, byte: u8) {
    bits.extend((0..8).rev().map(|i| (byte >> i) & 1));
}

fn octet(bits: &[u8]) -> u8 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1))
}

pub fn encode_query(q: &Query) -> Vec<u8> {
    let mut bits = Vec::with_capacity(QUERY_BITS);
    push_octet(&mut bits, QUERY_PREAMBLE);
    for b in q.payload() {
        push_octet(&mut bits, b);
    }
    push_octet(&mut bits, q.checksum());
    bits
}

pub fn parse_query(bits: &[u8]) -> Result<Query> {
    if bits.len() < QUERY_BITS {
        return Err(Error::TooShort {
            need: QUERY_BITS,
            got: bits.len(),
        });
    }
    let octets: Vec<u8> = bits[..QUERY_BITS].chunks(8).map(octet).collect();
    if octets[0] != QUERY_PREAMBLE {
        return Err(Error::BadPreamble(octets[0]));
    }
    let expected = octets[1..5].iter().fold(0, |acc, b| acc ^ b);
    if octets[5] != expected {
        return Err(Error::BadChecksum {
            expected,
            got: octets[5],
        });
    }
    Ok(Query {
        tag_id: octets[1],
        slot_index: octets[2],
        carrier_kind: CarrierKind::from_code(octets[3])?,
        protocol_id: ProtocolId::from_code(octets[4])?,
    })
}

/// On-off keyed carrier: amplitude 1 for a one, 0 for a zero.
pub fn ook_modulate(bits: &[u8], bit_rate: f64, sample_rate: f64) -> Result<IqStream> {
    let spb = samples_per_bit(bit_rate, sample_rate)?;
    let samples = bits
        .iter()
        .flat_map(|&b| std::iter::repeat_n(Complex64::new(f64::from(b & 1), 0.0), spb))
        .collect();
    IqStream::new(samples, sample_rate)
}

fn samples_per_bit(bit_rate: f64, sample_rate: f64) -> Result<usize> {
    if !(bit_rate > 0.0 && sample_rate > 0.0) {
        return Err(invalid("bit rate and sample rate must be positive"));
    }
    let spb = (sample_rate / bit_rate).round();
    if spb < 1.0 {
        return Err(invalid(format!(
            "sample rate {sample_rate} Hz is below the bit rate {bit_rate} bps"
        )));
    }
    Ok(spb as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConfig {
    /// Minimum 5th-to-95th percentile spread of the smoothed envelope.
    pub min_spread: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self { min_spread: 1e-6 }
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let idx = p * (sorted.len() - 1) as f64;
    let (lo, hi) = (idx.floor() as usize, idx.ceil() as usize);
    sorted[lo] + (idx - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Envelope detector: magnitude, one-bit moving average, midpoint threshold
/// between the 5th and 95th percentiles, and slicing at bit centres.
pub fn envelope_decode(rx: &IqStream, bit_rate: f64, cfg: &EnvelopeConfig) -> Result<Vec<u8>> {
    let spb = samples_per_bit(bit_rate, rx.sample_rate)?;
    if rx.len() < spb {
        return Err(Error::TooShort {
            need: spb,
            got: rx.len(),
        });
    }
    let mag = rx.amplitude();
    // prefix sums for the moving average
    let mut prefix = Vec::with_capacity(mag.len() + 1);
    prefix.push(0.0);
    for m in &mag {
        prefix.push(prefix.last().unwrap() + m);
    }
    let smooth: Vec<f64> = (0..=mag.len() - spb)
        .map(|start| (prefix[start + spb] - prefix[start]) / spb as f64)
        .collect();
    let mut sorted = smooth.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let (p5, p95) = (percentile(&sorted, 0.05), percentile(&sorted, 0.95));
    if p95 - p5 < cfg.min_spread {
        return Err(Error::NoSignal {
            spread: p95 - p5,
            floor: cfg.min_spread,
        });
    }
    let threshold = 0.5 * (p5 + p95);
    // the window starting at k·spb averages exactly bit k
    Ok((0..rx.len() / spb)
        .map(|k| u8::from(smooth[k * spb] > threshold))
        .collect())
}
