use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::RelationMatrix;
use crate::postproc::cosine;
use crate::registry::{EntityId, Registry};

/// Records sharing one attribute schema. `None` marks a missing value.
#[derive(Debug, Clone, Default)]
pub struct TabularSource {
    columns: Vec<String>,
    rows: Vec<Vec<Option<String>>>,
}

impl TabularSource {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, record: Vec<Option<String>>) -> Result<()> {
        if record.len() != self.columns.len() {
            return Err(Error::LengthMismatch(record.len(), self.columns.len()));
        }
        self.rows.push(record);
        Ok(())
    }

    /// Convenience for literals: empty strings become missing values.
    pub fn from_rows(columns: &[&str], rows: &[&[&str]]) -> Result<Self> {
        let mut src = Self::new(columns.iter().map(|s| s.to_string()).collect());
        for r in rows {
            src.push(r.iter().map(|v| (!v.is_empty()).then(|| v.to_string())).collect())?;
        }
        Ok(src)
    }

    /// Reads a delimiter-separated file with a header row. Empty fields are missing.
    pub fn read(path: &Path, delimiter: u8) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .flexible(false)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let columns: Vec<String> =
            rdr.headers().map_err(|e| csv_error(path, e))?.iter().map(|h| h.trim().to_string()).collect();
        let mut src = Self::new(columns);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            src.rows.push(
                rec.iter()
                    .map(|v| {
                        let v = v.trim();
                        (!v.is_empty()).then(|| v.to_string())
                    })
                    .collect(),
            );
        }
        Ok(src)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, attr: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == attr)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown attribute `{attr}`")))
    }

    /// Records where both attributes are present, as `(a, b)` value pairs.
    pub fn pairs(&self, a: &str, b: &str) -> Result<impl Iterator<Item = (&str, &str)> + '_> {
        let (ia, ib) = (self.column_index(a)?, self.column_index(b)?);
        Ok(self.rows.iter().filter_map(move |r| match (&r[ia], &r[ib]) {
            (Some(x), Some(y)) => Some((x.as_str(), y.as_str())),
            _ => None,
        }))
    }

    /// Numeric feature vectors keyed by `key`. Rows with a missing key are
    /// skipped, missing features read as 0, and repeated keys are summed.
    pub fn features(&self, key: &str, feature_attrs: &[&str]) -> Result<Vec<(String, Vec<f64>)>> {
        let ik = self.column_index(key)?;
        let idx: Vec<usize> = feature_attrs.iter().map(|a| self.column_index(a)).collect::<Result<_>>()?;
        let mut order: Vec<String> = Vec::new();
        let mut acc: HashMap<String, Vec<f64>> = HashMap::new();
        for (line, r) in self.rows.iter().enumerate() {
            let Some(k) = &r[ik] else { continue };
            let mut v = Vec::with_capacity(idx.len());
            for &i in &idx {
                let x = match &r[i] {
                    Some(s) => s.parse::<f64>().map_err(|_| {
                        Error::InvalidArgument(format!(
                            "record {}: `{}` is not numeric in column `{}`",
                            line + 1,
                            s,
                            self.columns[i]
                        ))
                    })?,
                    None => 0.0,
                };
                v.push(x);
            }
            match acc.get_mut(k) {
                Some(prev) => prev.iter_mut().zip(&v).for_each(|(p, x)| *p += x),
                None => {
                    order.push(k.clone());
                    acc.insert(k.clone(), v);
                }
            }
        }
        Ok(order
            .into_iter()
            .map(|k| {
                let v = acc.remove(&k).expect("key recorded");
                (k, v)
            })
            .collect())
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::parse(path, line, e.to_string())
}

/// Cell `(a, b)` counts the records with `attr_a = a` and `attr_b = b`.
pub fn cooccurrence(
    registry: &mut Registry,
    source: &TabularSource,
    attr_a: &str,
    attr_b: &str,
) -> Result<RelationMatrix> {
    if attr_a == attr_b {
        return Err(Error::InvalidArgument(format!(
            "co-occurrence of `{attr_a}` with itself; use a co-attendance matrix"
        )));
    }
    let pairs: Vec<(&str, &str)> = source.pairs(attr_a, attr_b)?.collect();
    let ta = registry.ensure_type(attr_a)?;
    let tb = registry.ensure_type(attr_b)?;
    let mut triplets = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        triplets.push((registry.register(ta, a)?, registry.register(tb, b)?, 1.0));
    }
    RelationMatrix::build(registry, ta, tb, triplets)
}

/// Cell `(a1, a2)` is the number of distinct `via_attr` values shared by `a1`
/// and `a2`. The diagonal is excluded and columns use the `attr_a-ctx` alias.
pub fn coattendance(
    registry: &mut Registry,
    source: &TabularSource,
    attr_a: &str,
    via_attr: &str,
) -> Result<RelationMatrix> {
    if attr_a == via_attr {
        return Err(Error::InvalidArgument("co-attendance attributes must differ".into()));
    }
    let pairs: Vec<(&str, &str)> = source.pairs(attr_a, via_attr)?.collect();
    let ta = registry.ensure_type(attr_a)?;
    let tctx = registry.ensure_context_of(ta)?;

    // via value -> set of row ids attending it
    let mut via_ids: HashMap<&str, usize> = HashMap::new();
    let mut attendees: Vec<BTreeSet<EntityId>> = Vec::new();
    let mut ctx_of_row: Vec<EntityId> = Vec::new();
    for (a, v) in pairs {
        let row = registry.register(ta, a)?;
        let ctx = registry.register(tctx, a)?;
        if ctx_of_row.len() <= row {
            ctx_of_row.resize(row + 1, usize::MAX);
        }
        ctx_of_row[row] = ctx;
        let vi = *via_ids.entry(v).or_insert_with(|| {
            attendees.push(BTreeSet::new());
            attendees.len() - 1
        });
        attendees[vi].insert(row);
    }

    let mut counts: HashMap<(EntityId, EntityId), f64> = HashMap::new();
    for group in &attendees {
        let members: Vec<EntityId> = group.iter().copied().collect();
        for (i, &x) in members.iter().enumerate() {
            for &y in &members[i + 1..] {
                *counts.entry((x, ctx_of_row[y])).or_default() += 1.0;
                *counts.entry((y, ctx_of_row[x])).or_default() += 1.0;
            }
        }
    }
    RelationMatrix::build(registry, ta, tctx, counts.into_iter().map(|((r, c), w)| (r, c, w)))
}

/// Cosine similarity between entity feature vectors, `i != j`, kept when above
/// `threshold` and optionally sparsified to the `top_k` strongest per row.
/// Negative similarities are clamped to 0; zero-norm vectors yield no cells.
pub fn similarity_matrix(
    registry: &mut Registry,
    type_name: &str,
    features: &[(String, Vec<f64>)],
    threshold: f64,
    top_k: Option<usize>,
) -> Result<RelationMatrix> {
    let Some((_, first)) = features.first() else {
        return Err(Error::InvalidArgument("no feature vectors".into()));
    };
    let width = first.len();
    if let Some((name, v)) = features.iter().find(|(_, v)| v.len() != width) {
        return Err(Error::InvalidArgument(format!(
            "feature vector of `{name}` has length {}, expected {width}",
            v.len()
        )));
    }
    if features.iter().all(|(_, v)| v.iter().all(|x| *x == 0.0)) {
        return Err(Error::InvalidArgument("all feature vectors are zero".into()));
    }
    let t = registry.ensure_type(type_name)?;
    let tctx = registry.ensure_context_of(t)?;
    let mut rows = Vec::with_capacity(features.len());
    let mut cols = Vec::with_capacity(features.len());
    for (name, _) in features {
        rows.push(registry.register(t, name)?);
        cols.push(registry.register(tctx, name)?);
    }

    let mut triplets = Vec::new();
    let mut row_cells: Vec<(EntityId, f64)> = Vec::new();
    for (i, (_, fi)) in features.iter().enumerate() {
        row_cells.clear();
        for (j, (_, fj)) in features.iter().enumerate() {
            if i == j {
                continue;
            }
            let s = cosine(fi, fj).max(0.0);
            if s > threshold && s > 0.0 {
                row_cells.push((cols[j], s));
            }
        }
        if let Some(k) = top_k {
            row_cells.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            row_cells.truncate(k);
        }
        triplets.extend(row_cells.iter().map(|&(c, s)| (rows[i], c, s)));
    }
    RelationMatrix::build(registry, t, tctx, triplets)
}
