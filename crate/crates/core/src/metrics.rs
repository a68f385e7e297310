//! Corruption degradation (CD), relative CD and benchmark reports over
//! externally supplied task scores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::pairwise_sum;

/// Condition name of the uncorrupted evaluation.
pub const NORMAL: &str = "normal";

/// One score (mAP or mIoU as a fraction) of one method under one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRecord {
    pub method: String,
    pub condition: String,
    pub score: f64,
}

impl EvalRecord {
    pub fn new(method: impl Into<String>, condition: impl Into<String>, score: f64) -> Self {
        Self {
            method: method.into(),
            condition: condition.into(),
            score,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.score) {
            Ok(())
        } else {
            Err(Error::InvalidScore {
                method: self.method.clone(),
                condition: self.condition.clone(),
                score: self.score,
            })
        }
    }
}

/// How scores in an input file are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreScale {
    Fraction,
    Percent,
    /// Percent if any score exceeds 1, otherwise fraction.
    #[default]
    Auto,
}

/// Converts scores to fractions.
pub fn normalize_scores(records: &mut [EvalRecord], scale: ScoreScale) {
    let percent = match scale {
        ScoreScale::Fraction => false,
        ScoreScale::Percent => true,
        ScoreScale::Auto => records.iter().any(|r| r.score > 1.0),
    };
    if percent {
        for r in records {
            r.score /= 100.0;
        }
    }
}

fn check_score(name: &str, s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::param(name, format!("score must lie in [0, 1], got {s}")))
    }
}

/// `CD = (1 − score_f) / (1 − score_ref)`.
pub fn corruption_degradation(score_f: f64, score_ref: f64) -> Result<f64> {
    cd_for("", score_f, score_ref)
}

fn cd_for(condition: &str, score_f: f64, score_ref: f64) -> Result<f64> {
    check_score("score_f", score_f)?;
    check_score("score_ref", score_ref)?;
    if score_ref == 1.0 {
        return Err(Error::UndefinedReference {
            condition: condition.into(),
        });
    }
    Ok((1.0 - score_f) / (1.0 - score_ref))
}

/// `rCD = (score_f_normal − score_f_c) / (score_ref_normal − score_ref_c)`.
pub fn relative_cd(score_f_c: f64, score_f_normal: f64, score_ref_c: f64, score_ref_normal: f64) -> Result<f64> {
    for (n, s) in [
        ("score_f_c", score_f_c),
        ("score_f_normal", score_f_normal),
        ("score_ref_c", score_ref_c),
        ("score_ref_normal", score_ref_normal),
    ] {
        check_score(n, s)?;
    }
    let num = (1.0 - score_f_c) - (1.0 - score_f_normal);
    let den = (1.0 - score_ref_c) - (1.0 - score_ref_normal);
    if den == 0.0 {
        return Err(Error::UndefinedRcd {
            ref_corrupted: score_ref_c,
            ref_normal: score_ref_normal,
        });
    }
    Ok(num / den)
}

/// Drops one minimum and one maximum (first occurrences under a stable
/// sort) and averages the rest.
pub fn truncated_mean(values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::TooFewValues {
            need: 3,
            got: values.len(),
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::param("values", format!("non-finite value {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let inner = &sorted[1..sorted.len() - 1];
    Ok(pairwise_sum(inner) / inner.len() as f64)
}

mod na {
    //! `Option<f64>` as a number or the string `"n/a"`.
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("n/a"),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(Some(x)),
            Repr::Str(s) if s == "n/a" => Ok(None),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"n/a\", got `{s}`"))),
        }
    }
}

/// CD and rCD of one (method, condition) cell, as fractions. Undefined
/// cells are `None` and serialize as `"n/a"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportCell {
    pub score: f64,
    #[serde(with = "na")]
    pub cd: Option<f64>,
    #[serde(with = "na")]
    pub rcd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodReport {
    pub conditions: BTreeMap<String, ReportCell>,
    /// Truncated mean of the defined corruption rCD values; `n/a` with fewer
    /// than three.
    #[serde(with = "na")]
    pub truncated_mean_rcd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessReport {
    pub reference: String,
    pub methods: BTreeMap<String, MethodReport>,
}

/// Builds the CD/rCD table against `reference`. Ingestion order does not
/// matter.
pub fn build_report(records: &[EvalRecord], reference: &str) -> Result<RobustnessReport> {
    let mut table: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        if table
            .entry(r.method.as_str())
            .or_default()
            .insert(r.condition.as_str(), r.score)
            .is_some()
        {
            return Err(Error::DuplicateRecord {
                method: r.method.clone(),
                condition: r.condition.clone(),
            });
        }
    }
    let conditions: BTreeSet<&str> = records.iter().map(|r| r.condition.as_str()).collect();
    let empty = BTreeMap::new();
    let ref_scores = table.get(reference).unwrap_or(&empty);
    for c in &conditions {
        if !ref_scores.contains_key(c) {
            return Err(Error::MissingReference {
                method: reference.into(),
                condition: (*c).into(),
            });
        }
    }
    let mut methods = BTreeMap::new();
    for (method, scores) in &table {
        let mut cells = BTreeMap::new();
        let mut rcds = Vec::new();
        for (cond, &score) in scores {
            let ref_c = ref_scores[cond];
            let cd = cd_for(cond, score, ref_c).ok();
            let rcd = if *cond == NORMAL {
                None
            } else {
                match (scores.get(NORMAL), ref_scores.get(NORMAL)) {
                    (Some(&f_n), Some(&r_n)) => relative_cd(score, f_n, ref_c, r_n).ok(),
                    _ => None,
                }
            };
            if let Some(v) = rcd {
                rcds.push(v);
            }
            cells.insert((*cond).to_string(), ReportCell { score, cd, rcd });
        }
        methods.insert(
            (*method).to_string(),
            MethodReport {
                conditions: cells,
                truncated_mean_rcd: truncated_mean(&rcds).ok(),
            },
        );
    }
    Ok(RobustnessReport {
        reference: reference.into(),
        methods,
    })
}

fn pct(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.1}%", 100.0 * x),
        None => "n/a".into(),
    }
}

/// Plain-text table with one row per (method, condition), percentages to
/// one decimal.
pub fn render_table(report: &RobustnessReport) -> String {
    let mut rows: Vec<[String; 5]> = vec![[
        "method".into(),
        "condition".into(),
        "score".into(),
        "CD".into(),
        "rCD".into(),
    ]];
    for (m, mr) in &report.methods {
        for (c, cell) in &mr.conditions {
            rows.push([m.clone(), c.clone(), pct(Some(cell.score)), pct(cell.cd), pct(cell.rcd)]);
        }
        rows.push([
            m.clone(),
            "truncated_mean".into(),
            String::new(),
            String::new(),
            pct(mr.truncated_mean_rcd),
        ]);
    }
    let widths: Vec<usize> = (0..5).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
    let mut out = format!("reference: {}\n", report.reference);
    for r in &rows {
        let line = format!(
            "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}  {:>w4$}",
            r[0],
            r[1],
            r[2],
            r[3],
            r[4],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3],
            w4 = widths[4]
        );
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}
