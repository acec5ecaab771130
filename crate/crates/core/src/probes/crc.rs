//! CRC-TPC: classify normalized contrast differences by the sign of their
//! projection onto the top principal component.

use alloc::vec::Vec;

use super::{top_principal_component, DirectionProbe};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

pub fn crc_tpc(diffs: &Matrix) -> Result<DirectionProbe> {
    top_principal_component(diffs)
}

/// Label 1 iff `u . diff > 0` (ties give 0); a flipped probe inverts.
pub fn crc_predict(probe: &DirectionProbe, diffs: &Matrix) -> Result<Vec<u8>> {
    if diffs.cols() != probe.u.len() {
        return Err(Error::Shape(alloc::format!(
            "probe has d = {}, differences have d = {}",
            probe.u.len(),
            diffs.cols()
        )));
    }
    Ok(diffs
        .row_iter()
        .map(|r| u8::from(dot(&probe.u, r) > 0.0) ^ u8::from(probe.flipped))
        .collect())
}
