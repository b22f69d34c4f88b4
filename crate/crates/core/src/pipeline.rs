//! End-to-end helpers: container on disk to typed equation model, mapping
//! files, and reference generation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::check::{infer_symbol_types, validate_assignment, CheckError, ValidationReport};
use crate::container::{load_container, ContainerError, ContainerModel, Trace};
use crate::cparse::{parse_c_unit, CodeUnit, ParseError};
use crate::ga::{Chromosome, GaError, Problem};
use crate::isolate::{
    isolate_step_function, normalize_primitives, IsolateError, RuleConfig, StepBody,
};
use crate::model::{apply_assignment, BoundModel, ModelError};
use crate::sim::{causalize, output_names, simulate, SimError};
use crate::translate::{
    eliminate_temporaries, translate_to_equations, EquationModel, TranslateError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Container(#[from] ContainerError),
    #[error("{file}:{err}")]
    Parse { file: String, err: ParseError },
    #[error("function `{name}` is defined in both {first} and {second}")]
    DuplicateFunction {
        name: String,
        first: String,
        second: String,
    },
    #[error("{0}")]
    Isolate(#[from] IsolateError),
    #[error("{0}")]
    Translate(#[from] TranslateError),
    #[error("{0}")]
    Check(#[from] CheckError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Sim(#[from] SimError),
    #[error("{0}")]
    Ga(#[from] GaError),
    #[error("mapping {}: {reason}", path.display())]
    Mapping { path: PathBuf, reason: String },
    #[error("mapping is not a valid assignment:\n{0}")]
    InvalidMapping(ValidationReport),
    #[error("container has no input trace")]
    NoInputTrace,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Parses every source file into one unit.
pub fn parse_sources(sources: &[(String, String)]) -> Result<CodeUnit, PipelineError> {
    let mut unit = CodeUnit::default();
    let mut origin: Vec<(String, String)> = Vec::new();
    for (file, text) in sources {
        let parsed = parse_c_unit(text).map_err(|err| PipelineError::Parse {
            file: file.clone(),
            err,
        })?;
        for f in parsed.functions {
            if let Some((_, first)) = origin.iter().find(|(n, _)| *n == f.name) {
                return Err(PipelineError::DuplicateFunction {
                    name: f.name.clone(),
                    first: first.clone(),
                    second: file.clone(),
                });
            }
            origin.push((f.name.clone(), file.clone()));
            unit.functions.push(f);
        }
    }
    Ok(unit)
}

/// A container carried through parsing, isolation, translation and type
/// inference.
#[derive(Clone, Debug)]
pub struct Translated {
    pub container: ContainerModel,
    pub rules: RuleConfig,
    pub step: StepBody,
    pub model: EquationModel,
}

impl Translated {
    pub fn model_name(&self) -> String {
        self.container
            .model_name
            .clone()
            .unwrap_or_else(|| "Synthesized".to_string())
    }

    pub fn problem(&self) -> Problem {
        Problem::new(
            self.model.clone(),
            self.container.variable_table.clone(),
            self.container.input_trace.clone(),
            self.container.reference_trace.clone(),
        )
    }

    pub fn bind(&self, c: &Chromosome) -> Result<BoundModel, PipelineError> {
        Ok(apply_assignment(
            &self.model,
            c,
            &self.container.variable_table,
        )?)
    }
}

pub fn translate_step(
    unit: &CodeUnit,
    rules: &RuleConfig,
) -> Result<(StepBody, EquationModel), PipelineError> {
    let step = isolate_step_function(unit, rules)?;
    let step = normalize_primitives(&step, rules)?;
    let step = eliminate_temporaries(&step)?;
    let model = translate_to_equations(&step, rules)?;
    let model = infer_symbol_types(&model)?;
    Ok((step, model))
}

pub fn translate_container(path: &Path) -> Result<Translated, PipelineError> {
    let container = load_container(path)?;
    let rules = RuleConfig::load(path)?;
    let unit = parse_sources(&container.sources)?;
    let (step, model) = translate_step(&unit, &rules)?;
    Ok(Translated {
        container,
        rules,
        step,
        model,
    })
}

#[derive(Serialize, Deserialize)]
struct MappingFile {
    genes: Vec<usize>,
}

pub fn parse_mapping(text: &str) -> Result<Chromosome, String> {
    serde_json::from_str::<MappingFile>(text)
        .map(|m| Chromosome::new(m.genes))
        .map_err(|e| e.to_string())
}

pub fn mapping_json(c: &Chromosome) -> String {
    let mut s = serde_json::to_string(&MappingFile {
        genes: c.genes.clone(),
    })
    .expect("mapping serializes");
    s.push('\n');
    s
}

pub fn load_mapping(path: &Path) -> Result<Chromosome, PipelineError> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mapping(&text).map_err(|reason| PipelineError::Mapping {
        path: path.to_path_buf(),
        reason,
    })
}

/// Simulates a mapping over `inputs`, returning one column per output
/// variable. The mapping must pass every validity constraint.
pub fn simulate_mapping(
    t: &Translated,
    c: &Chromosome,
    inputs: &Trace,
) -> Result<Trace, PipelineError> {
    let report = validate_assignment(&t.model, &t.container.variable_table, c);
    if !report.valid {
        return Err(PipelineError::InvalidMapping(report));
    }
    let bound = t.bind(c)?;
    let plan = causalize(&bound)?;
    Ok(simulate(
        &plan,
        inputs,
        &output_names(&t.container.variable_table),
    )?)
}

pub fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}
