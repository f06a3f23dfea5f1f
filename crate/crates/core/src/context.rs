//! Context-size accounting between plain-text and ERM representations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts tokens in a piece of text.
pub trait TokenCounter {
    fn count(&self, text: &str) -> usize;
}

impl<F: Fn(&str) -> usize> TokenCounter for F {
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

/// Whitespace-delimited token count; the default counter.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReduction {
    pub plain_tokens: usize,
    pub erm_tokens: usize,
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextReductionReport {
    pub pairs: Vec<PairReduction>,
    pub mean_reduction_pct: f64,
}

pub fn measure_context_reduction<S, C>(pairs: &[(S, S)], counter: &C) -> Result<ContextReductionReport>
where
    S: AsRef<str>,
    C: TokenCounter + ?Sized,
{
    if pairs.is_empty() {
        return Err(Error::NoPairs);
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for (i, (plain, erm)) in pairs.iter().enumerate() {
        let plain_tokens = counter.count(plain.as_ref());
        if plain_tokens == 0 {
            return Err(Error::ZeroPlainTokens(i));
        }
        let erm_tokens = counter.count(erm.as_ref());
        let reduction_pct = 100.0 * (plain_tokens as f64 - erm_tokens as f64) / plain_tokens as f64;
        rows.push(PairReduction {
            plain_tokens,
            erm_tokens,
            reduction_pct,
        });
    }
    let mean_reduction_pct = rows.iter().map(|r| r.reduction_pct).sum::<f64>() / rows.len() as f64;
    Ok(ContextReductionReport {
        pairs: rows,
        mean_reduction_pct,
    })
}

impl ContextReductionReport {
    /// Plain-text table, one row per pair plus the mean.
    pub fn to_table(&self, labels: Option<&[String]>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24} {:>12} {:>12} {:>12}", "Pair", "Plain", "ERM", "Reduction %");
        for (i, row) in self.pairs.iter().enumerate() {
            let label = labels
                .and_then(|l| l.get(i).cloned())
                .unwrap_or_else(|| i.to_string());
            let _ = writeln!(
                out,
                "{:<24} {:>12} {:>12} {:>12.2}",
                label, row.plain_tokens, row.erm_tokens, row.reduction_pct
            );
        }
        let _ = writeln!(out, "{:<24} {:>12} {:>12} {:>12.2}", "mean", "", "", self.mean_reduction_pct);
        out
    }
}
