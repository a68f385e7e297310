//! Evaluation record files and fit trace CSV.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::json::from_versioned_value;
use crate::error::{Error, FormatCode, Result};
use crate::fit::{FitTrace, LUT_OFFSET_DIM, SEARCH_NAMES};
use crate::metrics::EvalRecord;

const HEADER: [&str; 3] = ["method", "condition", "score"];

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RecordsDoc {
    records: Vec<EvalRecord>,
}

pub fn parse_records_csv(text: &str, path: &Path) -> Result<Vec<EvalRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::format(FormatCode::Csv, path, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::format(
            FormatCode::Csv,
            path,
            format!("header must be `method,condition,score`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<EvalRecord>().enumerate() {
        let rec = row.map_err(|e| Error::format(FormatCode::Csv, path, format!("row {}: {e}", i + 2)))?;
        out.push(rec);
    }
    Ok(out)
}

/// A versioned `{"records": [...]}` document or a bare array of records.
pub fn parse_records_json(text: &str, path: &Path) -> Result<Vec<EvalRecord>> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::format(FormatCode::JsonParse, path, e.to_string()))?;
    if v.is_array() {
        return serde_json::from_value(v).map_err(|e| Error::format(FormatCode::JsonValue, path, e.to_string()));
    }
    Ok(from_versioned_value::<RecordsDoc>(v, path)?.records)
}

/// Dispatches on the extension: `.csv` or JSON otherwise.
pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        parse_records_csv(&text, path)
    } else {
        parse_records_json(&text, path)
    }
}

pub fn records_to_csv(records: &[EvalRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

/// `eval_index,loss,best_loss,<slot names>` with `{:?}` float formatting so
/// values round-trip.
pub fn trace_to_csv(trace: &FitTrace) -> String {
    let dim = trace.entries.first().map_or(SEARCH_NAMES.len(), |e| e.params.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["eval_index".into(), "loss".into(), "best_loss".into()];
    header.extend(SEARCH_NAMES.iter().map(|s| s.to_string()));
    header.extend((0..dim.saturating_sub(SEARCH_NAMES.len()).min(LUT_OFFSET_DIM)).map(|i| format!("lut_bias{i}")));
    w.write_record(&header).expect("in-memory csv write");
    for e in &trace.entries {
        let mut row = vec![e.eval_index.to_string(), format!("{:?}", e.loss), format!("{:?}", e.best_loss)];
        row.extend(e.params.iter().map(|v| format!("{v:?}")));
        w.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

pub fn write_trace_csv(trace: &FitTrace, path: &Path) -> Result<()> {
    std::fs::write(path, trace_to_csv(trace)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::TraceEntry;

    #[test]
    fn csv_and_json_agree() {
        let recs = vec![EvalRecord::new("baseline", "normal", 0.877), EvalRecord::new("baseline", "fog", 0.7)];
        let csv = records_to_csv(&recs);
        assert!(csv.starts_with("method,condition,score\n"));
        assert_eq!(parse_records_csv(&csv, Path::new("r.csv")).unwrap(), recs);
        let arr = serde_json::to_string(&recs).unwrap();
        assert_eq!(parse_records_json(&arr, Path::new("r.json")).unwrap(), recs);
        let doc = format!("{{\"schema_version\":1,\"records\":{arr}}}");
        assert_eq!(parse_records_json(&doc, Path::new("r.json")).unwrap(), recs);
    }

    #[test]
    fn csv_errors() {
        let p = Path::new("r.csv");
        assert_eq!(parse_records_csv("a,b,c\nx,y,1\n", p).unwrap_err().code(), "E_CSV");
        assert_eq!(parse_records_csv("method,condition,score\nx,y,high\n", p).unwrap_err().code(), "E_CSV");
    }

    #[test]
    fn trace_csv_layout() {
        let t = FitTrace {
            entries: vec![TraceEntry {
                eval_index: 0,
                params: vec![0.1; 14],
                loss: 0.5,
                best_loss: 0.5,
            }],
        };
        let s = trace_to_csv(&t);
        let mut lines = s.lines();
        assert!(lines.next().unwrap().starts_with("eval_index,loss,best_loss,dg,dr1"));
        assert_eq!(lines.next().unwrap().split(',').count(), 17);
    }
}
