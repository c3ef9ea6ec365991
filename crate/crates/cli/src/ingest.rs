//! Query specifications (TOML or JSON) and their CSV relations.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use relclust::ghd::GhdSpec;
use relclust::relational::{Database, Relation};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Spec { path: PathBuf, message: String },
    #[error("{path}:{line}: column {column}: cannot parse {value:?} as a finite decimal number")]
    Parse { path: PathBuf, line: u64, column: String, value: String },
    #[error("{path}: schema mismatch: {message}")]
    SchemaMismatch { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] relclust::Error),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationSpec {
    pub name: String,
    /// CSV path, relative to the specification file.
    pub file: PathBuf,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    pub bags: Vec<Vec<String>>,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
    pub cover: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    /// Global attribute order; defaults to first appearance across relations.
    pub attributes: Option<Vec<String>>,
    pub relations: Vec<RelationSpec>,
    pub ghd: Option<DecompositionSpec>,
}

impl QuerySpec {
    pub fn parse(text: &str, path: &Path) -> Result<Self, IngestError> {
        let spec_error = |message: String| IngestError::Spec { path: path.to_path_buf(), message };
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(text).map_err(|e| spec_error(e.to_string())),
            Some("toml") => toml::from_str(text).map_err(|e| spec_error(e.to_string())),
            _ => Err(spec_error("specification must be a .toml or .json file".into())),
        }
    }

    fn attribute_order(&self) -> Vec<String> {
        if let Some(order) = &self.attributes {
            return order.clone();
        }
        let mut order: Vec<String> = Vec::new();
        for attr in self.relations.iter().flat_map(|r| &r.attributes) {
            if !order.contains(attr) {
                order.push(attr.clone());
            }
        }
        order
    }
}

/// A loaded instance with its optional decomposition.
#[derive(Debug)]
pub struct Ingested {
    pub db: Database,
    pub ghd: Option<GhdSpec>,
}

pub fn ingest(spec_path: &Path) -> Result<Ingested, IngestError> {
    let text = std::fs::read_to_string(spec_path).map_err(|source| IngestError::Io { path: spec_path.to_path_buf(), source })?;
    let spec = QuerySpec::parse(&text, spec_path)?;
    let mismatch = |message: String| IngestError::SchemaMismatch { path: spec_path.to_path_buf(), message };
    if spec.relations.is_empty() {
        return Err(mismatch("no relations".into()));
    }
    let order = spec.attribute_order();
    for r in &spec.relations {
        if let Some(a) = r.attributes.iter().find(|a| !order.contains(a)) {
            return Err(mismatch(format!("relation {} uses attribute {a}, which the attribute list omits", r.name)));
        }
    }
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let mut relations = Vec::with_capacity(spec.relations.len());
    for r in &spec.relations {
        let rows = read_csv(&base.join(&r.file), &r.attributes)?;
        let attrs = r.attributes.iter().map(|a| order.iter().position(|b| b == a).expect("checked above")).collect();
        relations.push(Relation::new(r.name.clone(), attrs, rows)?);
    }
    let db = Database::new(order, relations)?;
    let ghd = match &spec.ghd {
        None => None,
        Some(d) => Some(GhdSpec::from_names(&db.query(), &d.bags, d.edges.clone(), d.cover.clone())?),
    };
    log::info!("loaded {} relations over {} attributes", db.relations().len(), db.dim());
    Ok(Ingested { db, ghd })
}

/// Reads the columns named `attributes` from a headed CSV file.
pub fn read_csv(path: &Path, attributes: &[String]) -> Result<Vec<Vec<f64>>, IngestError> {
    let io = |source: std::io::Error| IngestError::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let csv_error = |e: csv::Error| IngestError::Spec { path: path.to_path_buf(), message: e.to_string() };
    let header: HashMap<String, usize> =
        reader.headers().map_err(csv_error)?.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
    let columns = attributes
        .iter()
        .map(|a| {
            header.get(a).copied().ok_or_else(|| IngestError::SchemaMismatch {
                path: path.to_path_buf(),
                message: format!("missing column {a}"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if header.len() > columns.len() {
        log::warn!("{}: ignoring {} extra columns", path.display(), header.len() - columns.len());
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let row = columns
            .iter()
            .zip(attributes)
            .map(|(&c, name)| {
                let raw = record.get(c).unwrap_or_default();
                raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| IngestError::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: name.clone(),
                    value: raw.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}
