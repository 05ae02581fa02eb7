//! On-disk spec format: a JSON document holding one truncated joint series
//! (moment or cumulant kind), plus a small matrix file used for symmetric
//! convolution arguments.
//!
//! Rationals are text in canonical lowest terms with positive denominator
//! ("p/q", zero as "0/1"). A coefficient is either dense — `d*d` rows
//! (output basis, row-major) of `(d*d)^(order-1)` columns (input slots,
//! first slot most significant) — or a sparse list of
//! `{out: [i,j], in: [[k,l], ..], val: "p/q"}` cells with 1-based indices.
//! Absent (order, indices) entries are zero maps. [`save_spec`] always
//! writes the dense form with entries sorted by (order, indices) and a
//! trailing newline, so canonical files round-trip byte-identically.

use std::fmt::Write as _;
use std::path::Path;

use amalgam_core::balgebra::{rat_from_str, rat_to_str, BMatrix, MultilinearCoefficient};
use amalgam_core::cumulant_engine::SeriesTable;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Cumulant,
    Moment,
}

impl SpecKind {
    pub fn name(self) -> &'static str {
        match self {
            SpecKind::Cumulant => "cumulant",
            SpecKind::Moment => "moment",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    pub d: usize,
    pub s: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub kind: SpecKind,
    pub entries: Vec<EntryDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub order: usize,
    pub indices: Vec<usize>,
    pub coefficient: CoefficientDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientDoc {
    Dense(Vec<Vec<String>>),
    Sparse(Vec<SparseCellDoc>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseCellDoc {
    pub out: [usize; 2],
    #[serde(rename = "in")]
    pub input: Vec<[usize; 2]>,
    pub val: String,
}

/// A parsed and validated spec file.
#[derive(Debug)]
pub struct LoadedSpec {
    pub kind: SpecKind,
    pub table: SeriesTable,
}

/// Cap on dense coefficient width, to reject absurd (d, order) headers
/// before allocating.
const MAX_CELLS: usize = 1 << 22;

fn columns_for(d: usize, order: usize) -> Result<usize, String> {
    (d * d)
        .checked_pow((order - 1) as u32)
        .filter(|&c| c <= MAX_CELLS)
        .ok_or_else(|| format!("coefficient of order {order} at dimension {d} is too large"))
}

pub fn load_spec(path: &Path) -> Result<LoadedSpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc: SpecDoc = serde_json::from_str(&text)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    spec_from_doc(&doc).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn spec_from_doc(doc: &SpecDoc) -> Result<LoadedSpec, String> {
    if doc.d == 0 || doc.s == 0 || doc.n == 0 {
        return Err("d, s, and N must be positive".into());
    }
    let d = doc.d;
    let mut table =
        SeriesTable::new(doc.d, doc.s, doc.n).map_err(|e| e.to_string())?;
    let mut seen: Vec<&[usize]> = Vec::new();
    for (i, entry) in doc.entries.iter().enumerate() {
        let where_ = |msg: String| format!("entries[{i}]: {msg}");
        if entry.order != entry.indices.len() {
            return Err(where_(format!(
                "order {} does not match {} indices",
                entry.order,
                entry.indices.len()
            )));
        }
        if entry.order == 0 || entry.order > doc.n {
            return Err(where_(format!(
                "order {} outside 1..={}",
                entry.order, doc.n
            )));
        }
        if let Some(&v) = entry.indices.iter().find(|&&v| v == 0 || v > doc.s) {
            return Err(where_(format!("variable index {v} outside 1..={}", doc.s)));
        }
        if seen.contains(&entry.indices.as_slice()) {
            return Err(where_(format!("duplicate entry for indices {:?}", entry.indices)));
        }
        seen.push(&entry.indices);
        let arity = entry.order - 1;
        let cols = columns_for(d, entry.order).map_err(where_)?;
        let mut coeff = MultilinearCoefficient::zero(d, arity);
        match &entry.coefficient {
            CoefficientDoc::Dense(rows) => {
                if rows.len() != d * d {
                    return Err(where_(format!(
                        "coefficient has {} rows, expected {}",
                        rows.len(),
                        d * d
                    )));
                }
                for (r, row) in rows.iter().enumerate() {
                    if row.len() != cols {
                        return Err(where_(format!(
                            "coefficient row {r} has {} columns, expected {cols}",
                            row.len()
                        )));
                    }
                    for (c, cell) in row.iter().enumerate() {
                        let value = rat_from_str(cell).map_err(|e| {
                            where_(format!("coefficient[{r}][{c}]: {e}"))
                        })?;
                        let basis = decode_basis(c, d, arity);
                        coeff
                            .value_at_basis_mut(&basis)
                            .set(r / d, r % d, value);
                    }
                }
            }
            CoefficientDoc::Sparse(cells) => {
                let mut filled: Vec<(usize, usize)> = Vec::new();
                for (j, cell) in cells.iter().enumerate() {
                    let at = |msg: String| where_(format!("coefficient[{j}]: {msg}"));
                    let [oi, oj] = cell.out;
                    if oi == 0 || oi > d || oj == 0 || oj > d {
                        return Err(at(format!("output index [{oi},{oj}] outside 1..={d}")));
                    }
                    if cell.input.len() != arity {
                        return Err(at(format!(
                            "{} input units, expected {arity}",
                            cell.input.len()
                        )));
                    }
                    let mut basis = Vec::with_capacity(arity);
                    for &[k, l] in &cell.input {
                        if k == 0 || k > d || l == 0 || l > d {
                            return Err(at(format!("input index [{k},{l}] outside 1..={d}")));
                        }
                        basis.push((k - 1) * d + (l - 1));
                    }
                    let flat = basis.iter().fold(0usize, |acc, &b| acc * d * d + b);
                    let out_flat = (oi - 1) * d + (oj - 1);
                    if filled.contains(&(out_flat, flat)) {
                        return Err(at("duplicate cell".into()));
                    }
                    filled.push((out_flat, flat));
                    let value = rat_from_str(&cell.val).map_err(|e| at(e.to_string()))?;
                    coeff.value_at_basis_mut(&basis).set(oi - 1, oj - 1, value);
                }
            }
        }
        table
            .insert(entry.indices.clone(), coeff)
            .map_err(|e| where_(e.to_string()))?;
    }
    Ok(LoadedSpec {
        kind: doc.kind,
        table,
    })
}

/// Decode a dense column index into the basis tuple it addresses (first
/// slot most significant).
fn decode_basis(mut flat: usize, d: usize, arity: usize) -> Vec<usize> {
    let dd = d * d;
    let mut basis = vec![0usize; arity];
    for slot in (0..arity).rev() {
        basis[slot] = flat % dd;
        flat /= dd;
    }
    basis
}

/// Canonical document for a table: dense coefficients, entries sorted by
/// (order, indices), zero maps omitted.
pub fn doc_from_table(table: &SeriesTable, kind: SpecKind) -> SpecDoc {
    let d = table.d();
    let mut keys: Vec<&Vec<usize>> = table.entries().map(|(k, _)| k).collect();
    keys.sort_by(|a, b| (a.len(), *a).cmp(&(b.len(), *b)));
    let entries = keys
        .into_iter()
        .map(|key| {
            let coeff = table.coefficient(key).expect("key comes from the table");
            let arity = key.len() - 1;
            let cols = (d * d).pow(arity as u32);
            let rows = (0..d * d)
                .map(|r| {
                    (0..cols)
                        .map(|c| {
                            let basis = decode_basis(c, d, arity);
                            rat_to_str(coeff.value_at_basis(&basis).get(r / d, r % d))
                        })
                        .collect()
                })
                .collect();
            EntryDoc {
                order: key.len(),
                indices: key.clone(),
                coefficient: CoefficientDoc::Dense(rows),
            }
        })
        .collect();
    SpecDoc {
        d,
        s: table.s(),
        n: table.truncation(),
        kind,
        entries,
    }
}

/// Canonical serialization: pretty JSON plus a trailing newline.
pub fn save_spec(table: &SeriesTable, kind: SpecKind) -> String {
    let doc = doc_from_table(table, kind);
    let mut body = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    body.push('\n');
    body
}

/// Short human-readable summary of a table (used by `--format text` for
/// commands whose JSON output is a spec file).
pub fn describe_table(table: &SeriesTable, kind: SpecKind) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} series: d={}, s={}, N={}, {} entries",
        kind.name(),
        table.d(),
        table.s(),
        table.truncation(),
        table.entries().count()
    );
    let mut keys: Vec<&Vec<usize>> = table.entries().map(|(k, _)| k).collect();
    keys.sort_by(|a, b| (a.len(), *a).cmp(&(b.len(), *b)));
    for key in keys {
        let coeff = table.coefficient(key).expect("key comes from the table");
        let mut nonzero = 0usize;
        for m in coeff.table() {
            nonzero += m.nonzero_iter().count();
        }
        let _ = writeln!(
            out,
            "  order {} indices {:?}: {} nonzero {}",
            key.len(),
            key,
            nonzero,
            if nonzero == 1 { "cell" } else { "cells" }
        );
    }
    out
}

/// Load a d x d matrix of canonical rationals (a bare nested array).
pub fn load_matrix(path: &Path, d: usize) -> Result<BMatrix, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let rows: Vec<Vec<String>> = serde_json::from_str(&text)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let fail = |msg: String| format!("{}: {msg}", path.display());
    if rows.len() != d {
        return Err(fail(format!("{} rows, expected {d}", rows.len())));
    }
    let mut out = BMatrix::zero(d);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(fail(format!("row {i} has {} columns, expected {d}", row.len())));
        }
        for (j, cell) in row.iter().enumerate() {
            let value =
                rat_from_str(cell).map_err(|e| fail(format!("matrix[{i}][{j}]: {e}")))?;
            out.set(i, j, value);
        }
    }
    Ok(out)
}
