use super::{ColumnKind, Dataset, FeatureSchema};
use crate::{NcdError, Result};
use ndarray::Array2;
use std::collections::BTreeSet;
use std::path::Path;

/// Fitted encoding state: category lists per categorical column and the
/// label-string map, both in sorted order. Reapplying the encoder to further
/// files (e.g. a test split) keeps column layout and label ids aligned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvEncoder {
    /// (column name, sorted categories) per categorical column, schema order.
    pub categories: Vec<(String, Vec<String>)>,
    /// Sorted label strings; a label's id is its index here.
    pub label_names: Vec<String>,
}

/// Loads a CSV file, fitting the categorical and label encodings on it.
///
/// Numeric columns parse as reals; categorical columns expand to one-hot
/// blocks with categories in sorted order; label strings map to contiguous
/// ids in sorted order.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<(Dataset, CsvEncoder)> {
    let rows = read_rows(path.as_ref(), schema)?;

    let mut categories = Vec::new();
    for (c, (name, kind)) in schema.columns.iter().enumerate() {
        if *kind == ColumnKind::Categorical {
            let distinct: BTreeSet<String> =
                rows.iter().map(|r| r.features[c].clone()).collect();
            categories.push((name.clone(), distinct.into_iter().collect()));
        }
    }
    let label_names: Vec<String> = rows
        .iter()
        .map(|r| r.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let encoder = CsvEncoder {
        categories,
        label_names,
    };
    let ds = encode(path.as_ref(), schema, &encoder, rows)?;
    Ok((ds, encoder))
}

/// Loads a CSV file under a previously fitted encoder. A category or label
/// unseen at fit time is an error rather than a silent new column.
pub fn load_csv_with(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    encoder: &CsvEncoder,
) -> Result<Dataset> {
    let rows = read_rows(path.as_ref(), schema)?;
    encode(path.as_ref(), schema, encoder, rows)
}

/// Writes a dataset as CSV with a header row. Feature values use the
/// shortest representation that parses back to the same float, so a
/// save/load cycle is bit-identical. The label column is written last,
/// named `label`, using class names.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = ds.feature_names.clone();
    if ds.y.is_some() {
        header.push("label".into());
    }
    writer.write_record(&header)?;
    for (i, row) in ds.x.rows().into_iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        if let Some(y) = &ds.y {
            record.push(ds.class_names[y[i]].clone());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

struct RawRow {
    features: Vec<String>,
    label: String,
}

fn read_rows(path: &Path, schema: &FeatureSchema) -> Result<Vec<RawRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let n_features = schema.columns.len();
    let width = n_features + 1;

    // Feature position -> file column, label -> file column.
    let mut feature_pos: Vec<usize>;
    let label_pos: usize;

    let mut records = reader.records();
    if schema.has_header {
        let header = records
            .next()
            .ok_or_else(|| NcdError::Schema(format!("{}: empty file", path.display())))??;
        let find = |name: &str| -> Result<usize> {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| NcdError::Schema(format!("missing column `{name}`")))
        };
        feature_pos = Vec::with_capacity(n_features);
        for (name, _) in &schema.columns {
            feature_pos.push(find(name)?);
        }
        label_pos = find(&schema.label_column)?;
    } else {
        // Headerless convention: columns appear in schema order with the
        // label at `label_index` (last when unspecified).
        label_pos = schema.label_index.unwrap_or(n_features);
        if label_pos > n_features {
            return Err(NcdError::Schema(format!(
                "label index {label_pos} out of range for {width} columns"
            )));
        }
        feature_pos = (0..width).filter(|&c| c != label_pos).collect();
    }

    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record.map_err(|e| NcdError::Parse {
            path: path.display().to_string(),
            row: i + 1,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let cell = |pos: usize| -> Result<&str> {
            record.get(pos).ok_or_else(|| NcdError::Parse {
                path: path.display().to_string(),
                row: i + 1,
                message: format!("expected at least {} columns, found {}", width, record.len()),
            })
        };
        let features = feature_pos
            .iter()
            .map(|&pos| cell(pos).map(str::to_owned))
            .collect::<Result<Vec<_>>>()?;
        let label = cell(label_pos)?.to_owned();
        rows.push(RawRow { features, label });
    }
    if rows.is_empty() {
        return Err(NcdError::Schema(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(rows)
}

fn encode(
    path: &Path,
    schema: &FeatureSchema,
    encoder: &CsvEncoder,
    rows: Vec<RawRow>,
) -> Result<Dataset> {
    let mut feature_names = Vec::new();
    let mut onehot_mask = Vec::new();
    // Per schema column: starting output index, and category list if any.
    let mut layout: Vec<(usize, Option<&Vec<String>>)> = Vec::with_capacity(schema.columns.len());
    let mut cat_iter = encoder.categories.iter();
    let mut out_col = 0usize;
    for (name, kind) in &schema.columns {
        match kind {
            ColumnKind::Numeric => {
                layout.push((out_col, None));
                feature_names.push(name.clone());
                onehot_mask.push(false);
                out_col += 1;
            }
            ColumnKind::Categorical => {
                let (enc_name, cats) = cat_iter
                    .next()
                    .ok_or_else(|| NcdError::Schema("encoder is missing a categorical column".into()))?;
                if enc_name != name {
                    return Err(NcdError::Schema(format!(
                        "encoder column `{enc_name}` does not match schema column `{name}`"
                    )));
                }
                layout.push((out_col, Some(cats)));
                for cat in cats {
                    feature_names.push(format!("{name}={cat}"));
                    onehot_mask.push(true);
                }
                out_col += cats.len();
            }
        }
    }

    let d = out_col;
    let n = rows.len();
    let mut x = Array2::zeros((n, d));
    let mut y = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        for (c, (start, cats)) in layout.iter().enumerate() {
            let raw = &row.features[c];
            match cats {
                None => {
                    let value: f64 = raw.parse().map_err(|_| NcdError::Parse {
                        path: path.display().to_string(),
                        row: i + 1,
                        message: format!(
                            "column `{}`: cannot parse `{raw}` as a number",
                            schema.columns[c].0
                        ),
                    })?;
                    if !value.is_finite() {
                        return Err(NcdError::Parse {
                            path: path.display().to_string(),
                            row: i + 1,
                            message: format!("column `{}`: non-finite value", schema.columns[c].0),
                        });
                    }
                    x[[i, *start]] = value;
                }
                Some(cats) => {
                    let slot = cats.binary_search(raw).map_err(|_| NcdError::Parse {
                        path: path.display().to_string(),
                        row: i + 1,
                        message: format!(
                            "column `{}`: unseen category `{raw}`",
                            schema.columns[c].0
                        ),
                    })?;
                    x[[i, start + slot]] = 1.0;
                }
            }
        }
        let label = encoder
            .label_names
            .binary_search(&row.label)
            .map_err(|_| NcdError::Parse {
                path: path.display().to_string(),
                row: i + 1,
                message: format!("unseen label `{}`", row.label),
            })?;
        y.push(label);
    }

    Dataset::with_onehot(
        x,
        Some(y),
        feature_names,
        encoder.label_names.clone(),
        onehot_mask,
    )
}
