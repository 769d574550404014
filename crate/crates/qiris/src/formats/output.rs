use std::fmt::Write;

use qiris_core::{ProbDist, QpdEstimate, ShotHistogram};
use serde_json::Value;

use crate::runtime::Payload;

/// Twelve decimals with trailing zeros removed: `0.5`, `1`, `0.333333333333`.
pub fn format_probability(p: f64) -> String {
    let s = format!("{p:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// `0` for an exactly zero deviation, nine decimals otherwise.
pub fn format_std(std: f64) -> String {
    if std == 0.0 {
        "0".to_string()
    } else {
        format!("{std:.9}")
    }
}

/// `<bits> <probability>` lines in key order.
pub fn probability_lines(dist: &ProbDist) -> String {
    let mut out = String::new();
    for (k, p) in dist.iter() {
        let _ = writeln!(out, "{k} {}", format_probability(p));
    }
    out
}

fn histogram_summary(h: &ShotHistogram) -> String {
    let mut out = String::new();
    for (k, n) in h.counts() {
        let _ = write!(out, "{k}={n} ");
    }
    let _ = write!(out, "shots={}", h.shots());
    out
}

/// One-line description of a task payload.
pub fn payload_summary(payload: &Payload) -> String {
    match payload {
        Payload::Histogram(h) => histogram_summary(h),
        Payload::Distribution(d) => {
            d.iter().map(|(k, p)| format!("{k}={}", format_probability(p))).collect::<Vec<_>>().join(" ")
        }
        Payload::Host(v) => {
            if let Some(json) = v.downcast_ref::<Value>() {
                json.to_string()
            } else if let Some(e) = v.downcast_ref::<QpdEstimate>() {
                format!("estimate={:.9}", e.value)
            } else if let Some(h) = v.downcast_ref::<ShotHistogram>() {
                histogram_summary(h)
            } else if let Some(x) = v.downcast_ref::<f64>() {
                x.to_string()
            } else if let Some(s) = v.downcast_ref::<String>() {
                s.clone()
            } else {
                "<opaque>".to_string()
            }
        }
    }
}

/// `rep,value` rows, then `mean,` and `std,` rows.
pub fn validation_csv(values: &[f64], mean: f64, std: f64) -> String {
    let mut out = String::from("rep,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{v:.9}");
    }
    let _ = writeln!(out, "mean,{mean:.9}");
    let _ = writeln!(out, "std,{}", format_std(std));
    out
}
