//! Feature schema and raw data loading.
//!
//! A dataset is described by a JSON schema (user fields, item fields, and
//! the scenario vocabulary), an interaction log, and one feature CSV per
//! entity side.  The first field on each side must be a sparse id field;
//! its vocabulary defines the valid id range for the interaction log, and
//! its value for an entity is the entity id itself (so feature CSVs carry
//! only the remaining fields).

use crate::error::{PerscenError, Result};
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Sparse,
    Dense,
    Sequence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub user: Vec<FieldSpec>,
    pub item: Vec<FieldSpec>,
    pub scenario_vocab: usize,
}

impl FeatureSchema {
    pub fn validate(&self) -> Result<()> {
        for (side, fields) in [("user", &self.user), ("item", &self.item)] {
            if fields.is_empty() {
                return Err(PerscenError::validation(format!("{side}: no fields declared")));
            }
            let mut seen = std::collections::HashSet::new();
            for f in fields {
                if !seen.insert(f.name.as_str()) {
                    return Err(PerscenError::validation(format!(
                        "{side}: duplicate field name '{}'",
                        f.name
                    )));
                }
                match f.kind {
                    FieldKind::Sparse | FieldKind::Sequence => {
                        if f.vocab_size.map_or(true, |v| v == 0) {
                            return Err(PerscenError::validation(format!(
                                "{side}.{}: {:?} field needs vocab_size >= 1",
                                f.name, f.kind
                            )));
                        }
                    }
                    FieldKind::Dense => {
                        if f.vocab_size.is_some() {
                            return Err(PerscenError::validation(format!(
                                "{side}.{}: dense field must not set vocab_size",
                                f.name
                            )));
                        }
                    }
                }
            }
            if fields[0].kind != FieldKind::Sparse {
                return Err(PerscenError::validation(format!(
                    "{side}: first field '{}' must be a sparse id field",
                    fields[0].name
                )));
            }
        }
        if self.scenario_vocab == 0 {
            return Err(PerscenError::validation("scenario_vocab must be >= 1"));
        }
        Ok(())
    }

    pub fn user_vocab(&self) -> usize {
        self.user[0].vocab_size.unwrap_or(0)
    }

    pub fn item_vocab(&self) -> usize {
        self.item[0].vocab_size.unwrap_or(0)
    }

    pub fn fields(&self, side: Side) -> &[FieldSpec] {
        match side {
            Side::User => &self.user,
            Side::Item => &self.item,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    User,
    Item,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::User => "user",
            Side::Item => "item",
        }
    }
}

/// Parses and validates a schema document.
pub fn parse_schema(json: &str, path: &str) -> Result<FeatureSchema> {
    let schema: FeatureSchema = serde_json::from_str(json).map_err(|e| PerscenError::Parse {
        path: path.to_string(),
        line: e.line() as u64,
        msg: e.to_string(),
    })?;
    schema.validate()?;
    Ok(schema)
}

pub fn load_schema(path: &Path) -> Result<FeatureSchema> {
    let mut buf = String::new();
    std::fs::File::open(path)
        .map_err(|e| PerscenError::validation(format!("cannot open schema '{}': {e}", path.display())))?
        .read_to_string(&mut buf)?;
    parse_schema(&buf, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub user_id: u32,
    pub item_id: u32,
    pub scenario_id: u32,
    pub timestamp: i64,
    pub label: u8,
}

/// Loads `user_id,item_id,scenario_id,timestamp,label` rows, preserving file
/// order.  Every malformed or out-of-range row is reported with its line.
pub fn load_interactions(path: &Path, schema: &FeatureSchema) -> Result<Vec<Interaction>> {
    let file = std::fs::File::open(path)
        .map_err(|e| PerscenError::validation(format!("cannot open '{}': {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let pathname = path.display().to_string();
    let parse_err = |line: u64, msg: String| PerscenError::Parse { path: pathname.clone(), line, msg };

    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
    let expect = ["user_id", "item_id", "scenario_id", "timestamp", "label"];
    let got: Vec<&str> = headers.iter().collect();
    if got != expect {
        return Err(parse_err(1, format!("expected header {expect:?}, got {got:?}")));
    }

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 5 {
            return Err(parse_err(line, format!("expected 5 columns, got {}", record.len())));
        }
        let field = |i: usize, what: &str| -> Result<u64> {
            record[i]
                .trim()
                .parse::<u64>()
                .map_err(|_| parse_err(line, format!("bad {what} '{}'", &record[i])))
        };
        let user_id = field(0, "user_id")? as u32;
        let item_id = field(1, "item_id")? as u32;
        let scenario_id = field(2, "scenario_id")? as u32;
        let timestamp = record[3]
            .trim()
            .parse::<i64>()
            .map_err(|_| parse_err(line, format!("bad timestamp '{}'", &record[3])))?;
        let label = field(4, "label")?;
        if label > 1 {
            return Err(parse_err(line, format!("label must be 0 or 1, got {label}")));
        }
        if user_id as usize >= schema.user_vocab() {
            return Err(parse_err(
                line,
                format!("user_id {user_id} outside vocab {}", schema.user_vocab()),
            ));
        }
        if item_id as usize >= schema.item_vocab() {
            return Err(parse_err(
                line,
                format!("item_id {item_id} outside vocab {}", schema.item_vocab()),
            ));
        }
        if scenario_id as usize >= schema.scenario_vocab {
            return Err(parse_err(
                line,
                format!("scenario_id {scenario_id} outside vocab {}", schema.scenario_vocab),
            ));
        }
        out.push(Interaction { user_id, item_id, scenario_id, timestamp, label: label as u8 });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldValue {
    Sparse(u32),
    Dense(f64),
    Sequence(Vec<u32>),
}

/// One entity's features, aligned with the schema's field list (the leading
/// id field holds the entity id).
pub type EntityRecord = Vec<FieldValue>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureTable {
    pub side: Side,
    /// Indexed by entity id; covers the full id vocabulary.
    pub records: Vec<EntityRecord>,
}

/// Loads `entity_id,<field>,...` rows for every entity of a side.  Columns
/// after `entity_id` follow the schema's field order, skipping the leading id
/// field.  Sequence cells are `|`-joined ids (empty cell = empty sequence).
/// The table must cover every id in the vocabulary exactly once.
pub fn load_features(path: &Path, schema: &FeatureSchema, side: Side) -> Result<FeatureTable> {
    let fields = schema.fields(side);
    let vocab = fields[0].vocab_size.unwrap();
    let file = std::fs::File::open(path)
        .map_err(|e| PerscenError::validation(format!("cannot open '{}': {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let pathname = path.display().to_string();
    let parse_err = |line: u64, msg: String| PerscenError::Parse { path: pathname.clone(), line, msg };

    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
    let mut expect = vec!["entity_id".to_string()];
    expect.extend(fields[1..].iter().map(|f| f.name.clone()));
    let got: Vec<&str> = headers.iter().collect();
    if got != expect.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(parse_err(1, format!("expected header {expect:?}, got {got:?}")));
    }

    let mut records: Vec<Option<EntityRecord>> = vec![None; vocab];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != fields.len() {
            return Err(parse_err(
                line,
                format!("expected {} columns, got {}", fields.len(), record.len()),
            ));
        }
        let id = record[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| parse_err(line, format!("bad entity_id '{}'", &record[0])))?;
        if id >= vocab {
            return Err(parse_err(line, format!("entity_id {id} outside vocab {vocab}")));
        }
        if records[id].is_some() {
            return Err(parse_err(line, format!("duplicate entity_id {id}")));
        }
        let mut values: EntityRecord = vec![FieldValue::Sparse(id as u32)];
        for (spec, cell) in fields[1..].iter().zip(record.iter().skip(1)) {
            let cell = cell.trim();
            let value = match spec.kind {
                FieldKind::Sparse => {
                    let v = cell
                        .parse::<u32>()
                        .map_err(|_| parse_err(line, format!("{}: bad sparse value '{cell}'", spec.name)))?;
                    if v as usize >= spec.vocab_size.unwrap() {
                        return Err(parse_err(
                            line,
                            format!("{}: value {v} outside vocab {}", spec.name, spec.vocab_size.unwrap()),
                        ));
                    }
                    FieldValue::Sparse(v)
                }
                FieldKind::Dense => {
                    let v = cell
                        .parse::<f64>()
                        .map_err(|_| parse_err(line, format!("{}: bad dense value '{cell}'", spec.name)))?;
                    if !v.is_finite() {
                        return Err(parse_err(line, format!("{}: non-finite dense value", spec.name)));
                    }
                    FieldValue::Dense(v)
                }
                FieldKind::Sequence => {
                    let mut seq = Vec::new();
                    if !cell.is_empty() {
                        for part in cell.split('|') {
                            let v = part.parse::<u32>().map_err(|_| {
                                parse_err(line, format!("{}: bad sequence entry '{part}'", spec.name))
                            })?;
                            if v as usize >= spec.vocab_size.unwrap() {
                                return Err(parse_err(
                                    line,
                                    format!("{}: entry {v} outside vocab {}", spec.name, spec.vocab_size.unwrap()),
                                ));
                            }
                            seq.push(v);
                        }
                    }
                    FieldValue::Sequence(seq)
                }
            };
            values.push(value);
        }
        records[id] = Some(values);
    }

    let mut out = Vec::with_capacity(vocab);
    for (id, rec) in records.into_iter().enumerate() {
        match rec {
            Some(r) => out.push(r),
            None => {
                return Err(PerscenError::validation(format!(
                    "{}: no feature row for {} id {id}",
                    pathname,
                    side.name()
                )))
            }
        }
    }
    Ok(FeatureTable { side, records: out })
}
