use serde::{Deserialize, Serialize};

use qiris_core::{Pauli, PrepLabel, QpdTerm, WireCutDecomposition};

use super::FormatError;

/// Largest elementwise channel error accepted for a loaded table.
const CHANNEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermEntry {
    k: usize,
    c: f64,
    obs: String,
    prep: String,
}

/// Reads `[{"k":1,"c":0.5,"obs":"I","prep":"0"}, ...]`. The table is only
/// accepted if it reproduces the identity channel.
pub fn parse_decomposition(text: &str) -> Result<WireCutDecomposition, FormatError> {
    let entries: Vec<TermEntry> = serde_json::from_str(text)?;
    let mut terms = Vec::with_capacity(entries.len());
    for e in entries {
        let mut chars = e.obs.chars();
        let observable = match (chars.next().and_then(Pauli::from_symbol), chars.next()) {
            (Some(p), None) => p,
            _ => return Err(FormatError::Invalid(format!("term {}: unknown observable `{}`", e.k, e.obs))),
        };
        let prep: PrepLabel = e
            .prep
            .parse()
            .map_err(|_| FormatError::Invalid(format!("term {}: unknown preparation `{}`", e.k, e.prep)))?;
        terms.push(QpdTerm { index: e.k, coefficient: e.c, observable, prep });
    }
    let decomp = WireCutDecomposition::from_terms(terms)?;
    decomp.validate(CHANNEL_TOLERANCE)?;
    Ok(decomp)
}

pub fn decomposition_to_json(decomp: &WireCutDecomposition) -> String {
    let entries: Vec<TermEntry> = decomp
        .terms()
        .iter()
        .map(|t| TermEntry {
            k: t.index,
            c: t.coefficient,
            obs: t.observable.symbol().to_string(),
            prep: t.prep.symbol().to_string(),
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("terms serialize")
}
