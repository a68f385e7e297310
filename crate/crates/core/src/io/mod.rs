//! File formats: the RAW container, PNM image outputs, versioned JSON
//! documents and record CSVs. Writers overwrite their target paths; callers
//! must not share an output path between concurrent writers.

pub mod json;
pub mod pnm;
pub mod raw;
pub mod records;
pub mod rgb;

pub use json::{from_versioned_str, read_json, to_versioned_string, write_json, SCHEMA_VERSION};
pub use pnm::{parse_pnm, read_pnm, Pnm, PnmKind};
pub use raw::{decode_raw, encode_raw, read_raw, sidecar_path_for, write_raw, RawSidecar};
pub use records::{read_records, records_to_csv, trace_to_csv, write_trace_csv};
pub use rgb::{decode_rgb, encode_rgb, read_gray, read_rgb, write_gray16, write_gray8, write_rgb, RgbMode};
