//! RAW container: a 16-bit P5 mosaic plus a JSON sidecar with the CFA
//! pattern and code-domain metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::json::{from_versioned_value, to_versioned_string};
use super::pnm::{encode_pnm, parse_pnm, Pnm, PnmKind};
use crate::error::{Error, FormatCode, Result};
use crate::raw::{denormalize_raw, normalize_raw, BayerImage, CfaPattern, SensorMeta};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSidecar {
    pub cfa: CfaPattern,
    pub bit_depth: u32,
    pub black_level: u32,
    pub white_level: u32,
    pub sensor_name: String,
}

impl RawSidecar {
    pub fn of(bayer: &BayerImage) -> Self {
        let m = bayer.meta();
        Self {
            cfa: bayer.cfa(),
            bit_depth: m.bit_depth,
            black_level: m.black_level,
            white_level: m.white_level,
            sensor_name: m.sensor_name.clone(),
        }
    }

    pub fn meta(&self) -> SensorMeta {
        SensorMeta {
            bit_depth: self.bit_depth,
            black_level: self.black_level,
            white_level: self.white_level,
            sensor_name: self.sensor_name.clone(),
        }
    }
}

/// `<stem>.json` next to the mosaic.
pub fn sidecar_path_for(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

fn sidecar_error(e: Error) -> Error {
    match e {
        Error::Format { code, path, detail } => {
            let code = match code {
                FormatCode::JsonParse => FormatCode::SidecarParse,
                FormatCode::JsonMissingField | FormatCode::JsonUnknownField => FormatCode::SidecarField,
                FormatCode::JsonValue => FormatCode::SidecarValue,
                other => other,
            };
            Error::Format { code, path, detail }
        }
        other => other,
    }
}

pub fn parse_sidecar(text: &str, path: &Path) -> Result<RawSidecar> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::format(FormatCode::SidecarParse, path, e.to_string()))?;
    let s: RawSidecar = from_versioned_value(v, path).map_err(sidecar_error)?;
    s.meta()
        .validate()
        .map_err(|e| Error::format(FormatCode::SidecarValue, path, e.to_string()))?;
    Ok(s)
}

/// Decodes a container held in memory; paths label errors.
pub fn decode_raw(pgm: &[u8], pgm_path: &Path, sidecar: &str, sidecar_path: &Path) -> Result<BayerImage> {
    let side = parse_sidecar(sidecar, sidecar_path)?;
    let img = parse_pnm(pgm, pgm_path)?;
    if img.kind != PnmKind::Gray {
        return Err(Error::format(FormatCode::PgmMagic, pgm_path, "RAW mosaic must be a P5 graymap"));
    }
    if img.maxval != u16::MAX {
        return Err(Error::format(
            FormatCode::PgmMaxval,
            pgm_path,
            format!("RAW mosaic maxval must be 65535, got {}", img.maxval),
        ));
    }
    if img.width == 0 || img.height == 0 || img.width % 2 != 0 || img.height % 2 != 0 {
        return Err(Error::format(
            FormatCode::OddDims,
            pgm_path,
            format!("mosaic is {}x{}; both dimensions must be even and non-zero", img.width, img.height),
        ));
    }
    let max = side.meta().max_code();
    if let Some(i) = img.samples.iter().position(|&c| u32::from(c) > max) {
        return Err(Error::format(
            FormatCode::CodeRange,
            pgm_path,
            format!("code {} at sample {i} exceeds 2^{} - 1", img.samples[i], side.bit_depth),
        ));
    }
    normalize_raw(&img.samples, img.width, img.height, side.meta(), side.cfa)
}

pub fn read_raw(pgm_path: &Path, sidecar_path: &Path) -> Result<BayerImage> {
    let text = std::fs::read_to_string(sidecar_path).map_err(|e| Error::io(sidecar_path, e))?;
    let bytes = std::fs::read(pgm_path).map_err(|e| Error::io(pgm_path, e))?;
    decode_raw(&bytes, pgm_path, &text, sidecar_path)
}

/// Mosaic bytes and sidecar text for `bayer`.
pub fn encode_raw(bayer: &BayerImage) -> Result<(Vec<u8>, String)> {
    let pnm = Pnm {
        kind: PnmKind::Gray,
        width: bayer.width(),
        height: bayer.height(),
        maxval: u16::MAX,
        samples: denormalize_raw(bayer),
    };
    Ok((encode_pnm(&pnm), to_versioned_string(&RawSidecar::of(bayer))?))
}

pub fn write_raw(bayer: &BayerImage, pgm_path: &Path, sidecar_path: &Path) -> Result<()> {
    let (bytes, text) = encode_raw(bayer)?;
    std::fs::write(pgm_path, bytes).map_err(|e| Error::io(pgm_path, e))?;
    std::fs::write(sidecar_path, text).map_err(|e| Error::io(sidecar_path, e))
}
