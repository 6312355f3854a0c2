//! Side-by-side metric table over several embeddings.

use serde::Serialize;

use crate::error::Result;
use crate::io::fmt_f64;
use crate::pe::{cosine_field, EmbeddingField};
use crate::pesi;

pub const COMPARE_HEADER: &str = "method,m_u,m_d,a_su";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub m_u: f64,
    pub m_d: f64,
    pub a_su: f64,
}

pub fn score_embedding(method: &str, emb: &EmbeddingField, n_buckets: usize) -> Result<CompareRow> {
    let field = cosine_field(emb)?;
    Ok(CompareRow {
        method: method.to_string(),
        m_u: pesi::undirected_monotonicity(&field),
        m_d: pesi::directed_monotonicity(&field, n_buckets)?,
        a_su: pesi::undirected_asymmetry(&field),
    })
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = format!("{COMPARE_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.method,
            fmt_f64(r.m_u),
            fmt_f64(r.m_d),
            fmt_f64(r.a_su)
        ));
    }
    out
}
