use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::PipelineError;
use crate::preprocess::{columns, Cell, ColumnKind, ColumnSpec, FeatureTable, LABEL_COLUMN};

/// Config hash and seed stamped into every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn comment_line(&self) -> String {
        format!(
            "# impact-pipeline config_hash={} seed={}\n",
            self.config_hash, self.seed
        )
    }
}

pub(crate) fn ensure_dir(path: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(path).map_err(|e| PipelineError::io(path, e))
}

/// Writes a CSV preceded by the provenance comment line.
pub(crate) fn write_csv<I, R, S>(
    path: &Path,
    provenance: &Provenance,
    header: &[S],
    rows: I,
) -> Result<(), PipelineError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
    S: AsRef<str>,
{
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let file = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(provenance.comment_line().as_bytes())
        .map_err(|e| PipelineError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(header.iter().map(AsRef::as_ref))
        .map_err(|e| PipelineError::csv(path, e))?;
    for row in rows {
        writer
            .write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(|e| PipelineError::csv(path, e))?;
    }
    writer.flush().map_err(|e| PipelineError::io(path, e))
}

/// Serializes `value` as pretty JSON with provenance keys in front.
pub(crate) fn write_json<T: Serialize>(
    path: &Path,
    provenance: &Provenance,
    value: &T,
) -> Result<(), PipelineError> {
    let body = serde_json::to_value(value).map_err(|e| PipelineError::csv(path, e))?;
    let mut doc = serde_json::Map::new();
    doc.insert("config_hash".into(), provenance.config_hash.clone().into());
    doc.insert("seed".into(), provenance.seed.into());
    match body {
        serde_json::Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("data".into(), other);
        }
    }
    write_text(
        path,
        &(serde_json::to_string_pretty(&doc).expect("json serializes") + "\n"),
    )
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// Reader for pipeline-written CSVs (skips `#` lines).
pub(crate) fn open_csv(path: &Path) -> Result<csv::Reader<File>, PipelineError> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file))
}

fn column_kind(name: &str) -> ColumnKind {
    match name {
        LABEL_COLUMN => ColumnKind::Label,
        columns::OUT_NOT_OUT
        | columns::HOME_AWAY
        | columns::WIN_LOSS
        | columns::WEATHER
        | "match_id"
        | "player"
        | "Start Date"
        | "Ground"
        | "Opposition"
        | "Pitch" => ColumnKind::Categorical,
        _ => ColumnKind::Numeric,
    }
}

/// Loads a derived feature CSV. Blank cells become missing; `match_id`
/// supplies row identifiers when present.
pub fn read_feature_table(path: &Path) -> Result<FeatureTable, PipelineError> {
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| PipelineError::csv(path, e))?
        .clone();
    if !headers.iter().any(|h| h == LABEL_COLUMN) {
        return Err(PipelineError::MissingColumn {
            path: path.to_path_buf(),
            column: LABEL_COLUMN.into(),
        });
    }
    let specs: Vec<ColumnSpec> = headers
        .iter()
        .map(|h| ColumnSpec::new(h, column_kind(h)))
        .collect();
    let id_col = headers.iter().position(|h| h == "match_id");
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| PipelineError::csv(path, e))?;
        if record.len() != specs.len() {
            return Err(PipelineError::csv(
                path,
                format!(
                    "row {} has {} fields, header has {}",
                    i + 1,
                    record.len(),
                    specs.len()
                ),
            ));
        }
        ids.push(id_col.map_or_else(|| format!("row-{}", i + 1), |c| record[c].to_string()));
        rows.push(
            specs
                .iter()
                .zip(record.iter())
                .map(|(s, raw)| Cell::parse(raw, s.kind))
                .collect(),
        );
    }
    FeatureTable::new(specs, rows, ids).map_err(|e| PipelineError::csv(path, e))
}
