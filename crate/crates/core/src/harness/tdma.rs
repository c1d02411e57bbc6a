use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tag::Query;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdmaWindow {
    pub tag_id: u8,
    pub slot_index: u8,
    /// Seconds after the end of the query.
    pub start: f64,
    pub end: f64,
}

/// Slot `k` occupies `[query_end + k·slot, query_end + (k+1)·slot)`. Windows
/// come back ordered by slot.
pub fn tdma_schedule(queries: &[Query], slot_duration: f64, query_end: f64) -> Result<Vec<TdmaWindow>> {
    if !(slot_duration > 0.0 && query_end >= 0.0) {
        return Err(invalid("slot duration must be positive and the query end non-negative"));
    }
    let mut seen = HashSet::new();
    for q in queries {
        if !seen.insert(q.slot_index) {
            return Err(Error::DuplicateSlot { slot: q.slot_index });
        }
    }
    let mut windows: Vec<TdmaWindow> = queries
        .iter()
        .map(|q| TdmaWindow {
            tag_id: q.tag_id,
            slot_index: q.slot_index,
            start: query_end + q.slot_index as f64 * slot_duration,
            end: query_end + (q.slot_index as f64 + 1.0) * slot_duration,
        })
        .collect();
    windows.sort_by_key(|w| w.slot_index);
    Ok(windows)
}
