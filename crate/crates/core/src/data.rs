//! Tabular data with role-tagged metadata columns.
//!
//! CSV layout: optional leading `#key=value` lines (`label_kind`,
//! `population_size`, `tree`), then a header row and one row per
//! observation. Column roles come from an explicit [`Schema`] or are
//! inferred from reserved header names (`y`, `cluster`, `coord_x`, ...).

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{CategoryTree, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Feature,
    Label,
    Cluster,
    CoordX,
    CoordY,
    Unit,
    Pi,
    Time,
    Season,
    Ignore,
}

impl Role {
    fn from_reserved_name(name: &str) -> Option<Role> {
        Some(match name {
            "y" | "label" => Role::Label,
            "cluster" => Role::Cluster,
            "coord_x" => Role::CoordX,
            "coord_y" => Role::CoordY,
            "unit" => Role::Unit,
            "pi" => Role::Pi,
            "time" => Role::Time,
            "season" => Role::Season,
            _ => return None,
        })
    }

    fn reserved_name(self) -> &'static str {
        match self {
            Role::Label => "y",
            Role::Cluster => "cluster",
            Role::CoordX => "coord_x",
            Role::CoordY => "coord_y",
            Role::Unit => "unit",
            Role::Pi => "pi",
            Role::Time => "time",
            Role::Season => "season",
            Role::Feature | Role::Ignore => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    #[default]
    Real,
    Class,
    Hier,
}

impl std::str::FromStr for LabelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "real" => Ok(LabelKind::Real),
            "class" => Ok(LabelKind::Class),
            "hier" => Ok(LabelKind::Hier),
            other => Err(Error::Schema(format!("unknown label kind {other:?}"))),
        }
    }
}

/// Column-role mapping. Columns absent from `columns` are an error unless
/// the schema was inferred.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    #[serde(default)]
    pub columns: BTreeMap<String, Role>,
    #[serde(default)]
    pub label_kind: Option<LabelKind>,
    #[serde(default)]
    pub tree: Option<PathBuf>,
    #[serde(default)]
    pub population_size: Option<usize>,
    /// Infer roles of unlisted columns from their header names.
    #[serde(default)]
    pub infer: bool,
}

impl Schema {
    /// Roles from reserved header names; every other column is a feature.
    pub fn inferred() -> Self {
        Schema { infer: true, ..Default::default() }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn with_role(mut self, column: &str, role: Role) -> Self {
        self.columns.insert(column.to_string(), role);
        self
    }

    fn role_of(&self, column: &str) -> Result<Role> {
        if let Some(r) = self.columns.get(column) {
            return Ok(*r);
        }
        if self.infer {
            return Ok(Role::from_reserved_name(column).unwrap_or(Role::Feature));
        }
        Err(Error::Schema(format!("column {column:?} has no role assignment")))
    }
}

#[derive(Debug, Clone)]
pub enum Label {
    Real(Vec<f64>),
    Class(Vec<usize>),
    Hier { leaves: Vec<NodeId>, tree: Arc<CategoryTree> },
}

impl Label {
    pub fn len(&self) -> usize {
        match self {
            Label::Real(v) => v.len(),
            Label::Class(v) => v.len(),
            Label::Hier { leaves, .. } => leaves.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> LabelKind {
        match self {
            Label::Real(_) => LabelKind::Real,
            Label::Class(_) => LabelKind::Class,
            Label::Hier { .. } => LabelKind::Hier,
        }
    }

    fn select(&self, idx: &[usize]) -> Label {
        match self {
            Label::Real(v) => Label::Real(idx.iter().map(|&i| v[i]).collect()),
            Label::Class(v) => Label::Class(idx.iter().map(|&i| v[i]).collect()),
            Label::Hier { leaves, tree } => {
                Label::Hier { leaves: idx.iter().map(|&i| leaves[i]).collect(), tree: Arc::clone(tree) }
            }
        }
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Label::Real(a), Label::Real(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()),
            (Label::Class(a), Label::Class(b)) => a == b,
            (Label::Hier { leaves: a, tree: ta }, Label::Hier { leaves: b, tree: tb }) => a == b && ta == tb,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta {
    pub cluster_id: Option<Vec<i64>>,
    pub coords: Option<Vec<[f64; 2]>>,
    pub unit_id: Option<Vec<i64>>,
    pub inclusion_prob: Option<Vec<f64>>,
    pub time: Option<Vec<f64>>,
    pub season: Option<Vec<u32>>,
}

fn pick<T: Clone>(v: &Option<Vec<T>>, idx: &[usize]) -> Option<Vec<T>> {
    v.as_ref().map(|v| idx.iter().map(|&i| v[i].clone()).collect())
}

impl Meta {
    fn select(&self, idx: &[usize]) -> Meta {
        Meta {
            cluster_id: pick(&self.cluster_id, idx),
            coords: pick(&self.coords, idx),
            unit_id: pick(&self.unit_id, idx),
            inclusion_prob: pick(&self.inclusion_prob, idx),
            time: pick(&self.time, idx),
            season: pick(&self.season, idx),
        }
    }
}

/// Immutable observation table: n rows, p features, one label column and
/// optional metadata columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    feature_names: Vec<String>,
    features: Vec<f64>,
    label: Label,
    meta: Meta,
    population_size: Option<usize>,
}

impl Dataset {
    /// `features` is row-major with `feature_names.len()` columns.
    pub fn new(feature_names: Vec<String>, features: Vec<f64>, label: Label) -> Result<Self> {
        let p = feature_names.len();
        let n = label.len();
        if n == 0 {
            return Err(Error::data("dataset has no rows"));
        }
        if p == 0 {
            return Err(Error::data("dataset has no feature columns"));
        }
        if features.len() != n * p {
            return Err(Error::data(format!(
                "feature matrix has {} entries, expected {n} rows x {p} columns",
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite feature value"));
        }
        match &label {
            Label::Real(v) if v.iter().any(|x| !x.is_finite()) => return Err(Error::data("non-finite label value")),
            Label::Hier { leaves, tree } => {
                if let Some(&bad) = leaves.iter().find(|&&l| !tree.is_leaf(l)) {
                    return Err(Error::data(format!("hierarchical label node {bad} is not a leaf")));
                }
            }
            _ => {}
        }
        Ok(Dataset { n, p, feature_names, features, label, meta: Meta::default(), population_size: None })
    }

    /// Convenience constructor from row vectors with generated names `x1..xp`.
    pub fn from_rows(rows: &[Vec<f64>], label: Label) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::data("ragged feature rows"));
        }
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Dataset::new(names, rows.concat(), label)
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.n {
            return Err(Error::data(format!("{what} column has {len} entries, dataset has {} rows", self.n)));
        }
        Ok(())
    }

    pub fn with_cluster_ids(mut self, ids: Vec<i64>) -> Result<Self> {
        self.check_len(ids.len(), "cluster")?;
        self.meta.cluster_id = Some(ids);
        Ok(self)
    }

    pub fn with_unit_ids(mut self, ids: Vec<i64>) -> Result<Self> {
        self.check_len(ids.len(), "unit")?;
        self.meta.unit_id = Some(ids);
        Ok(self)
    }

    pub fn with_coords(mut self, coords: Vec<[f64; 2]>) -> Result<Self> {
        self.check_len(coords.len(), "coordinate")?;
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite coordinate"));
        }
        self.meta.coords = Some(coords);
        Ok(self)
    }

    pub fn with_inclusion_prob(mut self, pi: Vec<f64>) -> Result<Self> {
        self.check_len(pi.len(), "inclusion probability")?;
        if let Some(v) = pi.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::data(format!("inclusion probability out of range (0,1]: {v}")));
        }
        self.meta.inclusion_prob = Some(pi);
        self.check_population()?;
        Ok(self)
    }

    pub fn with_time(mut self, t: Vec<f64>) -> Result<Self> {
        self.check_len(t.len(), "time")?;
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite time value"));
        }
        self.meta.time = Some(t);
        Ok(self)
    }

    pub fn with_seasons(mut self, s: Vec<u32>) -> Result<Self> {
        self.check_len(s.len(), "season")?;
        if s.contains(&0) {
            return Err(Error::data("season indices start at 1"));
        }
        self.meta.season = Some(s);
        Ok(self)
    }

    pub fn with_population_size(mut self, big_n: usize) -> Result<Self> {
        if big_n == 0 {
            return Err(Error::data("population size must be positive"));
        }
        self.population_size = Some(big_n);
        self.check_population()?;
        Ok(self)
    }

    fn check_population(&self) -> Result<()> {
        if let (Some(big_n), Some(pi)) = (self.population_size, &self.meta.inclusion_prob) {
            let s: f64 = pi.iter().sum();
            if s > big_n as f64 * (1.0 + 1e-12) {
                return Err(Error::data(format!(
                    "inclusion probabilities sum to {s}, exceeding population size {big_n}"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Row-major feature matrix.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.p..(i + 1) * self.p]
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn population_size(&self) -> Option<usize> {
        self.population_size
    }

    pub fn real_labels(&self) -> Result<&[f64]> {
        match &self.label {
            Label::Real(v) => Ok(v),
            _ => Err(Error::data("expected real-valued labels")),
        }
    }

    pub fn class_labels(&self) -> Result<&[usize]> {
        match &self.label {
            Label::Class(v) => Ok(v),
            _ => Err(Error::data("expected class labels")),
        }
    }

    pub fn hier_labels(&self) -> Result<(&[NodeId], &Arc<CategoryTree>)> {
        match &self.label {
            Label::Hier { leaves, tree } => Ok((leaves, tree)),
            _ => Err(Error::data("expected hierarchical labels")),
        }
    }

    /// Season index per row: the stored season column, or the time column
    /// binned into `bins` equal-width intervals over [0, 1].
    pub fn seasons(&self, bins: Option<u32>) -> Result<Vec<u32>> {
        if let Some(s) = &self.meta.season {
            return Ok(s.clone());
        }
        match (&self.meta.time, bins) {
            (Some(t), Some(b)) if b >= 1 => Ok(t.iter().map(|&t| season_of(t, b)).collect()),
            (Some(_), _) => Err(Error::data("time column present but no season count configured")),
            (None, _) => Err(Error::data("dataset has neither season nor time column")),
        }
    }

    /// Rows `idx` in the given order; metadata sliced alongside.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        if idx.is_empty() {
            return Err(Error::data("empty index list"));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n) {
            return Err(Error::data(format!("index {bad} out of range for {} rows", self.n)));
        }
        let mut features = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        Ok(Dataset {
            n: idx.len(),
            p: self.p,
            feature_names: self.feature_names.clone(),
            features,
            label: self.label.select(idx),
            meta: self.meta.select(idx),
            population_size: self.population_size,
        })
    }

    /// Copy with feature column `j` removed.
    pub fn drop_feature(&self, j: usize) -> Result<Dataset> {
        if j >= self.p || self.p == 1 {
            return Err(Error::data(format!("cannot drop feature {j} of {}", self.p)));
        }
        let mut features = Vec::with_capacity(self.n * (self.p - 1));
        for i in 0..self.n {
            let r = self.row(i);
            features.extend(r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v));
        }
        let mut names = self.feature_names.clone();
        names.remove(j);
        Ok(Dataset { p: self.p - 1, feature_names: names, features, ..self.clone() })
    }
}

/// Season `s` covers t in [(s-1)/S, s/S); t = 1 belongs to season S.
pub fn season_of(t: f64, seasons: u32) -> u32 {
    let s = (t * seasons as f64).floor() as i64 + 1;
    s.clamp(1, seasons as i64) as u32
}

fn parse_f64(s: &str, col: &str, row: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::data(format!("row {row}, column {col:?}: cannot parse {s:?} as a number")))?;
    if !v.is_finite() {
        return Err(Error::data(format!("row {row}, column {col:?}: non-finite value {s:?}")));
    }
    Ok(v)
}

fn parse_int(s: &str, col: &str, row: usize) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| Error::data(format!("row {row}, column {col:?}: cannot parse {s:?} as an integer")))
}

/// Loads a CSV dataset.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_dataset(&text, schema, &base)
}

/// Parses CSV text; relative tree paths resolve against `base_dir`.
pub fn parse_dataset(text: &str, schema: &Schema, base_dir: &Path) -> Result<Dataset> {
    let mut directives: BTreeMap<String, String> = BTreeMap::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                directives.insert(k.trim().to_string(), v.trim().to_string());
            }
            body_start += line.len();
        } else if t.is_empty() {
            body_start += line.len();
        } else {
            break;
        }
    }
    let body = &text[body_start..];

    let label_kind = match (schema.label_kind, directives.get("label_kind")) {
        (Some(k), _) => k,
        (None, Some(k)) => k.parse()?,
        (None, None) => LabelKind::Real,
    };
    let population_size = match (schema.population_size, directives.get("population_size")) {
        (Some(n), _) => Some(n),
        (None, Some(v)) => {
            Some(v.parse::<usize>().map_err(|_| Error::Schema(format!("bad population_size {v:?}")))?)
        }
        (None, None) => None,
    };
    let tree_path = schema.tree.clone().or_else(|| directives.get("tree").map(PathBuf::from));

    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(body.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let header_set: HashSet<&str> = header.iter().map(String::as_str).collect();
    if header_set.len() != header.len() {
        return Err(Error::Schema("duplicate column name in header".into()));
    }
    if let Some(missing) = schema.columns.keys().find(|c| !header_set.contains(c.as_str())) {
        return Err(Error::Schema(format!("schema column {missing:?} not found in file")));
    }
    let roles: Vec<Role> = header.iter().map(|c| schema.role_of(c)).collect::<Result<_>>()?;
    let mut unique: BTreeMap<Role, usize> = BTreeMap::new();
    for (j, &r) in roles.iter().enumerate() {
        if matches!(r, Role::Feature | Role::Ignore) {
            continue;
        }
        if let Some(prev) = unique.insert(r, j) {
            return Err(Error::Schema(format!(
                "duplicate role assignment: columns {:?} and {:?} both have role {r:?}",
                header[prev], header[j]
            )));
        }
    }
    let label_col = *unique.get(&Role::Label).ok_or_else(|| Error::Schema("no label column assigned".into()))?;
    if unique.contains_key(&Role::CoordX) != unique.contains_key(&Role::CoordY) {
        return Err(Error::Schema("coord_x and coord_y must be assigned together".into()));
    }
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| roles[j] == Role::Feature).collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns assigned".into()));
    }

    let tree = match (label_kind, tree_path) {
        (LabelKind::Hier, Some(p)) => {
            let p = if p.is_relative() { base_dir.join(p) } else { p };
            Some(Arc::new(CategoryTree::read(p)?))
        }
        (LabelKind::Hier, None) => None,
        _ => None,
    };

    let mut features = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut cluster = Vec::new();
    let mut unit = Vec::new();
    let mut cx = Vec::new();
    let mut cy = Vec::new();
    let mut pi = Vec::new();
    let mut time = Vec::new();
    let mut season = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::data(format!("row {row} has {} fields, header has {}", rec.len(), header.len())));
        }
        for (j, field) in rec.iter().enumerate() {
            let col = header[j].as_str();
            if field.is_empty() && roles[j] != Role::Ignore {
                return Err(Error::data(format!("row {row}, column {col:?}: missing value")));
            }
            match roles[j] {
                Role::Feature => features.push(parse_f64(field, col, row)?),
                Role::Label => raw_labels.push(field.to_string()),
                Role::Cluster => cluster.push(parse_int(field, col, row)?),
                Role::Unit => unit.push(parse_int(field, col, row)?),
                Role::CoordX => cx.push(parse_f64(field, col, row)?),
                Role::CoordY => cy.push(parse_f64(field, col, row)?),
                Role::Pi => {
                    let v = parse_f64(field, col, row)?;
                    if !(v > 0.0 && v <= 1.0) {
                        return Err(Error::data(format!(
                            "row {row}: inclusion probability out of range (0,1]: {v}"
                        )));
                    }
                    pi.push(v)
                }
                Role::Time => time.push(parse_f64(field, col, row)?),
                Role::Season => {
                    let s = parse_int(field, col, row)?;
                    if s < 1 || s > u32::MAX as i64 {
                        return Err(Error::data(format!("row {row}: season index {s} must be >= 1")));
                    }
                    season.push(s as u32)
                }
                Role::Ignore => {}
            }
        }
    }
    if raw_labels.is_empty() {
        return Err(Error::data("dataset has no rows"));
    }
    let label_name = &header[label_col];
    let label = match label_kind {
        LabelKind::Real => Label::Real(
            raw_labels.iter().enumerate().map(|(i, s)| parse_f64(s, label_name, i)).collect::<Result<_>>()?,
        ),
        LabelKind::Class => Label::Class(
            raw_labels
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::data(format!("row {i}: class label {s:?} is not a class id")))
                })
                .collect::<Result<_>>()?,
        ),
        LabelKind::Hier => {
            let tree = match tree {
                Some(t) => t,
                None => Arc::new(CategoryTree::from_leaf_labels(&raw_labels)?),
            };
            let mut leaves = Vec::with_capacity(raw_labels.len());
            for (i, s) in raw_labels.iter().enumerate() {
                let id = tree
                    .node(s)
                    .map_err(|_| Error::data(format!("row {i}: unresolved hierarchical label {s:?}")))?;
                if !tree.is_leaf(id) {
                    return Err(Error::data(format!("row {i}: hierarchical label {s:?} is not a leaf")));
                }
                leaves.push(id);
            }
            Label::Hier { leaves, tree }
        }
    };
    let names = feature_cols.iter().map(|&j| header[j].clone()).collect();
    let mut d = Dataset::new(names, features, label)?;
    if unique.contains_key(&Role::Cluster) {
        d = d.with_cluster_ids(cluster)?;
    }
    if unique.contains_key(&Role::Unit) {
        d = d.with_unit_ids(unit)?;
    }
    if unique.contains_key(&Role::CoordX) {
        d = d.with_coords(cx.into_iter().zip(cy).map(|(x, y)| [x, y]).collect())?;
    }
    if unique.contains_key(&Role::Time) {
        d = d.with_time(time)?;
    }
    if unique.contains_key(&Role::Season) {
        d = d.with_seasons(season)?;
    }
    if let Some(big_n) = population_size {
        d = d.with_population_size(big_n)?;
    }
    if unique.contains_key(&Role::Pi) {
        d = d.with_inclusion_prob(pi)?;
    }
    Ok(d)
}

/// Writes `d` as CSV with reserved role headers. Hierarchical datasets also
/// get a `<file>.tree` sibling referenced from a `#tree=` line.
pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tree_file = match d.label() {
        Label::Hier { tree, .. } => {
            let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
            name.push(".tree");
            let tp = path.with_file_name(&name);
            tree.write(&tp)?;
            Some(name.to_string_lossy().into_owned())
        }
        _ => None,
    };
    std::fs::write(path, render_dataset(d, tree_file.as_deref()))?;
    Ok(())
}

/// CSV text for `d`; `tree_file` is echoed as a `#tree=` directive.
pub fn render_dataset(d: &Dataset, tree_file: Option<&str>) -> String {
    let mut out = String::new();
    let kind = match d.label.kind() {
        LabelKind::Real => "real",
        LabelKind::Class => "class",
        LabelKind::Hier => "hier",
    };
    let _ = writeln!(out, "#label_kind={kind}");
    if let Some(big_n) = d.population_size {
        let _ = writeln!(out, "#population_size={big_n}");
    }
    if let Some(t) = tree_file {
        let _ = writeln!(out, "#tree={t}");
    }
    let m = &d.meta;
    let mut header: Vec<String> = d.feature_names.clone();
    header.push(Role::Label.reserved_name().into());
    let optional: [(bool, Role); 5] = [
        (m.cluster_id.is_some(), Role::Cluster),
        (m.unit_id.is_some(), Role::Unit),
        (m.inclusion_prob.is_some(), Role::Pi),
        (m.time.is_some(), Role::Time),
        (m.season.is_some(), Role::Season),
    ];
    for (present, role) in optional {
        if present {
            header.push(role.reserved_name().into());
        }
    }
    if m.coords.is_some() {
        header.push("coord_x".into());
        header.push("coord_y".into());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..d.n {
        let mut fields: Vec<String> = d.row(i).iter().map(|v| format!("{v:?}")).collect();
        fields.push(match &d.label {
            Label::Real(v) => format!("{:?}", v[i]),
            Label::Class(v) => v[i].to_string(),
            Label::Hier { leaves, tree } => tree.label(leaves[i]).to_string(),
        });
        if let Some(v) = &m.cluster_id {
            fields.push(v[i].to_string());
        }
        if let Some(v) = &m.unit_id {
            fields.push(v[i].to_string());
        }
        if let Some(v) = &m.inclusion_prob {
            fields.push(format!("{:?}", v[i]));
        }
        if let Some(v) = &m.time {
            fields.push(format!("{:?}", v[i]));
        }
        if let Some(v) = &m.season {
            fields.push(v[i].to_string());
        }
        if let Some(v) = &m.coords {
            fields.push(format!("{:?}", v[i][0]));
            fields.push(format!("{:?}", v[i][1]));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
