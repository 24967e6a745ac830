use std::fmt;
use std::str::FromStr;

/// Annotation objective, each with its own prompt template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    ModelingProcess,
    GeometricStructure,
    FunctionalType,
}

pub const MULTI_PART_SUBJECT: &str = "multi-component assembly";
pub const SINGLE_PART_SUBJECT: &str = "single-part model";
pub const NLT_PLACEHOLDER: &str = "{NLT}";

impl Task {
    pub const ALL: [Task; 3] = [Task::ModelingProcess, Task::GeometricStructure, Task::FunctionalType];

    /// Short name used on the command line and in logs.
    pub fn key(self) -> &'static str {
        match self {
            Task::ModelingProcess => "process",
            Task::GeometricStructure => "structure",
            Task::FunctionalType => "function",
        }
    }

    /// Prompt template with the `{NLT}` placeholder, as written for assemblies.
    pub fn template(self) -> &'static str {
        let raw = match self {
            Task::ModelingProcess => include_str!("../../resources/prompts/modeling_process.txt"),
            Task::GeometricStructure => include_str!("../../resources/prompts/geometric_structure.txt"),
            Task::FunctionalType => include_str!("../../resources/prompts/functional_type.txt"),
        };
        raw.trim_end()
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task `{0}`; expected process, structure or function")]
pub struct UnknownTask(pub String);

impl FromStr for Task {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL.into_iter().find(|t| t.key() == s).ok_or_else(|| UnknownTask(s.to_string()))
    }
}

/// The task's template with the transcription substituted. A single-part
/// model swaps the assembly wording for the single-part one.
pub fn build_prompt(nlt: &str, task: Task, multi_part: bool) -> String {
    let mut t = task.template().to_string();
    if !multi_part {
        t = t.replace(MULTI_PART_SUBJECT, SINGLE_PART_SUBJECT);
    }
    t.replace(NLT_PLACEHOLDER, nlt)
}
