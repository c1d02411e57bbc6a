//! Passive tag model: transistor calibration, I-Q combine network, bias
//! compilation, reflection with frequency shifting, and the OOK downlink.

mod curve;
mod downlink;
mod frontend;

pub use curve::{resistance_of_rho, rho_of_resistance, CurveCsvError, CurvePoint, TransistorCurve};
pub use downlink::{
    encode_query, envelope_decode, ook_modulate, parse_query, CarrierKind, EnvelopeConfig, ProtocolId, Query,
    QUERY_BITS, QUERY_PREAMBLE,
};
pub use frontend::{
    compile_bias, compile_bias_with_amplitude, gamma_of_bias, reflect, BiasWaveform, ShiftMode, TagConfig, TagModel,
};
