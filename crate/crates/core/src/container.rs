//! FMU-like container on disk: a `modelDescription.xml`, decompiled sources
//! under `sources/`, and optional CSV traces under `traces/`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("{0}: modelDescription.xml not found")]
    MissingDescription(PathBuf),

    #[error("{0}: no sources/ directory with decompiled .c files")]
    MissingSources(PathBuf),

    #[error("modelDescription.xml{}: {reason}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    MalformedDescription { line: Option<u32>, reason: String },

    #[error("{}{}: {reason}", file.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<trace>".into()), line.map(|l| format!(":{l}")).unwrap_or_default())]
    MalformedTrace {
        file: Option<PathBuf>,
        line: Option<u64>,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ContainerError {
    fn description(line: Option<u32>, reason: impl Into<String>) -> Self {
        ContainerError::MalformedDescription {
            line,
            reason: reason.into(),
        }
    }

    fn trace(line: Option<u64>, reason: impl Into<String>) -> Self {
        ContainerError::MalformedTrace {
            file: None,
            line,
            reason: reason.into(),
        }
    }

    fn with_file(self, path: &Path) -> Self {
        match self {
            ContainerError::MalformedTrace { line, reason, .. } => ContainerError::MalformedTrace {
                file: Some(path.to_path_buf()),
                line,
                reason,
            },
            other => other,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ContainerError + '_ {
    move |source| ContainerError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarType {
    Real,
    Integer,
    Boolean,
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarType::Real => "Real",
            VarType::Integer => "Integer",
            VarType::Boolean => "Boolean",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Causality {
    Input,
    Output,
    Parameter,
    Local,
}

impl Causality {
    /// Outputs and locals are determined by the equation system.
    pub fn is_unknown(self) -> bool {
        matches!(self, Causality::Output | Causality::Local)
    }

    pub fn is_interface(self) -> bool {
        matches!(self, Causality::Input | Causality::Output)
    }
}

impl fmt::Display for Causality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Causality::Input => "input",
            Causality::Output => "output",
            Causality::Parameter => "parameter",
            Causality::Local => "local",
        })
    }
}

/// A literal of one of the supported scalar types.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Real(f64),
    Integer(i64),
    Boolean(bool),
}

impl Value {
    pub fn var_type(self) -> VarType {
        match self {
            Value::Real(_) => VarType::Real,
            Value::Integer(_) => VarType::Integer,
            Value::Boolean(_) => VarType::Boolean,
        }
    }

    /// Numeric view used by the simulator: booleans are exactly 0/1.
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Real(v) => v,
            Value::Integer(v) => v as f64,
            Value::Boolean(b) => {
                if b {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn parse(vtype: VarType, text: &str) -> Option<Value> {
        let text = text.trim();
        match vtype {
            VarType::Real => text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Value::Real),
            VarType::Integer => text.parse::<i64>().ok().map(Value::Integer),
            VarType::Boolean => match text {
                "true" | "1" => Some(Value::Boolean(true)),
                "false" | "0" => Some(Value::Boolean(false)),
                _ => None,
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(v) => f.write_str(&format_real(*v)),
            Value::Integer(v) => write!(f, "{v}"),
            Value::Boolean(b) => write!(f, "{b}"),
        }
    }
}

/// Shortest decimal string that parses back to the same `f64`, always
/// carrying a decimal point or exponent.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableDescriptor {
    pub name: String,
    pub value_reference: u64,
    pub vtype: VarType,
    pub causality: Causality,
    pub start: Option<Value>,
}

/// Variables in description order. Positions are stable: chromosome genes
/// index into this table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VariableTable {
    variables: Vec<VariableDescriptor>,
    index: HashMap<String, usize>,
}

impl VariableTable {
    pub fn new(variables: Vec<VariableDescriptor>) -> Result<Self, ContainerError> {
        let mut index = HashMap::with_capacity(variables.len());
        let mut refs = HashSet::with_capacity(variables.len());
        for (pos, v) in variables.iter().enumerate() {
            if v.name.is_empty() {
                return Err(ContainerError::description(
                    None,
                    format!("variable #{pos} has an empty name"),
                ));
            }
            if index.insert(v.name.clone(), pos).is_some() {
                return Err(ContainerError::description(
                    None,
                    format!("duplicate variable name `{}`", v.name),
                ));
            }
            if !refs.insert(v.value_reference) {
                return Err(ContainerError::description(
                    None,
                    format!(
                        "duplicate valueReference {} (variable `{}`)",
                        v.value_reference, v.name
                    ),
                ));
            }
            if v.causality == Causality::Parameter && v.start.is_none() {
                return Err(ContainerError::description(
                    None,
                    format!("parameter `{}` has no start value", v.name),
                ));
            }
            if let Some(start) = v.start {
                if start.var_type() != v.vtype {
                    return Err(ContainerError::description(
                        None,
                        format!(
                            "start value of `{}` is {} but the variable is {}",
                            v.name,
                            start.var_type(),
                            v.vtype
                        ),
                    ));
                }
            }
        }
        Ok(VariableTable { variables, index })
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn get(&self, pos: usize) -> Option<&VariableDescriptor> {
        self.variables.get(pos)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<&VariableDescriptor> {
        self.position(name).map(|p| &self.variables[p])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, VariableDescriptor> {
        self.variables.iter()
    }

    pub fn as_slice(&self) -> &[VariableDescriptor] {
        &self.variables
    }
}

impl std::ops::Index<usize> for VariableTable {
    type Output = VariableDescriptor;

    fn index(&self, pos: usize) -> &VariableDescriptor {
        &self.variables[pos]
    }
}

impl<'a> IntoIterator for &'a VariableTable {
    type Item = &'a VariableDescriptor;
    type IntoIter = std::slice::Iter<'a, VariableDescriptor>;

    fn into_iter(self) -> Self::IntoIter {
        self.variables.iter()
    }
}

/// Parsed subset of an FMI 2.0 model description.
#[derive(Clone, Debug)]
pub struct ModelDescription {
    pub model_name: Option<String>,
    pub variables: VariableTable,
    /// Ignored elements and attributes outside the supported subset.
    pub warnings: Vec<String>,
}

const KNOWN_VARIABLE_ATTRS: &[&str] = &["name", "valueReference", "causality", "start"];
// Attributes that carry no meaning for reconstruction and are dropped silently.
const QUIET_VARIABLE_ATTRS: &[&str] = &["description", "variability", "initial"];

pub fn parse_model_description(text: &str) -> Result<ModelDescription, ContainerError> {
    let doc = roxmltree::Document::parse(text)
        .map_err(|e| ContainerError::description(Some(e.pos().row), e.to_string()))?;
    let line_of = |node: roxmltree::Node| doc.text_pos_at(node.range().start).row;

    let root = doc.root_element();
    let model_name = root.attribute("modelName").map(str::to_string);
    let mut warnings = Vec::new();

    let mut model_variables = None;
    for child in root.children().filter(|n| n.is_element()) {
        if child.tag_name().name() == "ModelVariables" {
            model_variables = Some(child);
        } else {
            warnings.push(format!(
                "line {}: ignored element <{}>",
                line_of(child),
                child.tag_name().name()
            ));
        }
    }
    let model_variables = if root.tag_name().name() == "ModelVariables" {
        root
    } else {
        model_variables.ok_or_else(|| {
            ContainerError::description(Some(line_of(root)), "no <ModelVariables> element")
        })?
    };

    let mut variables = Vec::new();
    let mut seen_names: HashMap<String, u32> = HashMap::new();
    let mut seen_refs: HashMap<u64, u32> = HashMap::new();
    for sv in model_variables.children().filter(|n| n.is_element()) {
        let line = line_of(sv);
        if sv.tag_name().name() != "ScalarVariable" {
            warnings.push(format!(
                "line {line}: ignored element <{}>",
                sv.tag_name().name()
            ));
            continue;
        }
        let err = |reason: String| ContainerError::description(Some(line), reason);

        let name = sv
            .attribute("name")
            .filter(|n| !n.is_empty())
            .ok_or_else(|| err("ScalarVariable without a name".into()))?
            .to_string();
        if let Some(first) = seen_names.insert(name.clone(), line) {
            return Err(err(format!(
                "duplicate variable name `{name}` (first declared on line {first})"
            )));
        }
        let vr_text = sv
            .attribute("valueReference")
            .ok_or_else(|| err(format!("`{name}` has no valueReference")))?;
        let value_reference: u64 = vr_text
            .trim()
            .parse()
            .map_err(|_| err(format!("`{name}` has invalid valueReference `{vr_text}`")))?;
        if let Some(first) = seen_refs.insert(value_reference, line) {
            return Err(err(format!(
                "duplicate valueReference {value_reference} on `{name}` (first used on line {first})"
            )));
        }
        let causality = match sv.attribute("causality") {
            None => Causality::Local,
            Some("input") => Causality::Input,
            Some("output") => Causality::Output,
            Some("parameter") | Some("calculatedParameter") => Causality::Parameter,
            Some("local") => Causality::Local,
            Some(other) => {
                return Err(err(format!("`{name}` has unsupported causality `{other}`")))
            }
        };
        for attr in sv.attributes() {
            let attr_name = attr.name();
            if !KNOWN_VARIABLE_ATTRS.contains(&attr_name)
                && !QUIET_VARIABLE_ATTRS.contains(&attr_name)
            {
                warnings.push(format!(
                    "line {line}: ignored attribute `{attr_name}` on `{name}`"
                ));
            }
        }

        let mut type_elems = sv.children().filter(|n| n.is_element());
        let type_elem = type_elems
            .next()
            .ok_or_else(|| err(format!("`{name}` has no type element")))?;
        if let Some(extra) = type_elems.next() {
            warnings.push(format!(
                "line {}: ignored element <{}> in `{name}`",
                line_of(extra),
                extra.tag_name().name()
            ));
        }
        let vtype = match type_elem.tag_name().name() {
            "Real" => VarType::Real,
            "Integer" => VarType::Integer,
            "Boolean" => VarType::Boolean,
            other => {
                return Err(err(format!(
                    "`{name}` has unsupported type element <{other}>"
                )))
            }
        };
        let start_text = type_elem
            .attribute("start")
            .or_else(|| sv.attribute("start"));
        let start =
            match start_text {
                None => None,
                Some(text) => Some(Value::parse(vtype, text).ok_or_else(|| {
                    err(format!("`{name}`: cannot parse start `{text}` as {vtype}"))
                })?),
            };
        if causality == Causality::Parameter && start.is_none() {
            return Err(err(format!("parameter `{name}` has no start value")));
        }
        variables.push(VariableDescriptor {
            name,
            value_reference,
            vtype,
            causality,
            start,
        });
    }

    Ok(ModelDescription {
        model_name,
        variables: VariableTable::new(variables)?,
        warnings,
    })
}

/// Time-indexed signal samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    times: Vec<f64>,
    columns: BTreeMap<String, Vec<f64>>,
    // Column order as read, for stable re-serialization.
    order: Vec<String>,
}

impl Trace {
    pub fn new(times: Vec<f64>, columns: Vec<(String, Vec<f64>)>) -> Result<Self, ContainerError> {
        if times.len() < 2 {
            return Err(ContainerError::trace(
                None,
                format!("need at least 2 samples, got {}", times.len()),
            ));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(ContainerError::trace(
                None,
                format!("non-finite time at sample {i}"),
            ));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(ContainerError::trace(
                None,
                format!(
                    "time is not strictly increasing at sample {} ({} after {})",
                    i + 1,
                    times[i + 1],
                    times[i]
                ),
            ));
        }
        let mut map = BTreeMap::new();
        let mut order = Vec::with_capacity(columns.len());
        for (name, values) in columns {
            if name == "time" || name.is_empty() {
                return Err(ContainerError::trace(
                    None,
                    format!("invalid column name `{name}`"),
                ));
            }
            if values.len() != times.len() {
                return Err(ContainerError::trace(
                    None,
                    format!(
                        "column `{name}` has {} values for {} samples",
                        values.len(),
                        times.len()
                    ),
                ));
            }
            order.push(name.clone());
            if map.insert(name.clone(), values).is_some() {
                return Err(ContainerError::trace(
                    None,
                    format!("duplicate column `{name}`"),
                ));
            }
        }
        Ok(Trace {
            times,
            columns: map,
            order,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for name in &self.order {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format_real(*t));
            for name in &self.order {
                out.push(',');
                out.push_str(&format_real(self.columns[name][i]));
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_trace(text: &str) -> Result<Trace, ContainerError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| ContainerError::trace(Some(1), e.to_string()))?
        .clone();
    if headers.get(0) != Some("time") {
        return Err(ContainerError::trace(
            Some(1),
            "first column must be `time`",
        ));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut times = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            ContainerError::trace(line, format!("ragged row: {e}"))
        })?;
        let line = record.position().map(|p| p.line());
        let mut cells = record.iter().map(|cell| {
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ContainerError::trace(line, format!("non-numeric cell `{cell}`")))
        });
        let t = cells
            .next()
            .ok_or_else(|| ContainerError::trace(line, "empty row"))??;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(ContainerError::trace(
                    line,
                    format!("time {t} does not increase after {prev}"),
                ));
            }
        }
        times.push(t);
        for (col, cell) in values.iter_mut().zip(cells) {
            col.push(cell?);
        }
    }
    Trace::new(times, names.into_iter().zip(values).collect())
}

pub fn load_trace(path: &Path) -> Result<Trace, ContainerError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_trace(&text).map_err(|e| e.with_file(path))
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<(), ContainerError> {
    fs::write(path, trace.to_csv()).map_err(io_err(path))
}

#[derive(Clone, Debug)]
pub struct ContainerModel {
    pub root: PathBuf,
    pub model_name: Option<String>,
    pub variable_table: VariableTable,
    /// `(file name, decompiled C text)`, sorted by file name.
    pub sources: Vec<(String, String)>,
    pub input_trace: Option<Trace>,
    pub reference_trace: Option<Trace>,
    pub warnings: Vec<String>,
}

pub const DESCRIPTION_FILE: &str = "modelDescription.xml";
pub const INPUT_TRACE: &str = "traces/input.csv";
pub const REFERENCE_TRACE: &str = "traces/reference.csv";

pub fn load_container(path: &Path) -> Result<ContainerModel, ContainerError> {
    let description_path = path.join(DESCRIPTION_FILE);
    if !description_path.is_file() {
        return Err(ContainerError::MissingDescription(path.to_path_buf()));
    }
    let sources_dir = path.join("sources");
    if !sources_dir.is_dir() {
        return Err(ContainerError::MissingSources(path.to_path_buf()));
    }

    let text = fs::read_to_string(&description_path).map_err(io_err(&description_path))?;
    let description = parse_model_description(&text)?;

    let mut sources = Vec::new();
    for entry in fs::read_dir(&sources_dir).map_err(io_err(&sources_dir))? {
        let entry = entry.map_err(io_err(&sources_dir))?;
        let file = entry.path();
        if file.extension().and_then(|e| e.to_str()) != Some("c") {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let text = fs::read_to_string(&file).map_err(io_err(&file))?;
        sources.push((name, text));
    }
    if sources.is_empty() {
        return Err(ContainerError::MissingSources(path.to_path_buf()));
    }
    sources.sort_by(|a, b| a.0.cmp(&b.0));

    let optional_trace = |rel: &str| -> Result<Option<Trace>, ContainerError> {
        let p = path.join(rel);
        if p.is_file() {
            load_trace(&p).map(Some)
        } else {
            Ok(None)
        }
    };

    Ok(ContainerModel {
        root: path.to_path_buf(),
        model_name: description.model_name,
        variable_table: description.variables,
        sources,
        input_trace: optional_trace(INPUT_TRACE)?,
        reference_trace: optional_trace(REFERENCE_TRACE)?,
        warnings: description.warnings,
    })
}
