//! Structured prompt rendering: intake, task, optional examples, output format.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::parser::parse_plans;
use crate::profile::ConsumptionProfile;
use crate::scalar::Scalar;

pub const DEFAULT_TEMPLATE: &str = include_str!("../assets/default_template.txt");
pub const DEFAULT_EXAMPLES: [&str; 2] = [
    include_str!("../assets/few_shot_1.txt"),
    include_str!("../assets/few_shot_2.txt"),
];

pub const INTAKE_HEADER: &str = "User's recent intake:";
pub const EXAMPLE_FENCE: &str = "--- EXAMPLE ---";
pub const REFERENCE_HEADER: &str = "REFERENCE NUTRITION (USDA)";
pub const UNVERIFIED_HEADER: &str = "UNVERIFIED ITEMS";

pub const PLACEHOLDERS: [&str; 4] = ["total_calories", "target_protein", "target_sugar", "menu_input"];

/// Clauses a task template must carry, as (name, lowercase needle).
pub const MANDATORY_CLAUSES: [(&str, &str); 10] = [
    ("total_calories", "{total_calories}"),
    ("target_protein", "{target_protein}"),
    ("target_sugar", "{target_sugar}"),
    ("menu_input", "{menu_input}"),
    ("three_options", "three different meal plan options"),
    ("per_meal_kcal", "calorie count for each meal"),
    ("plan_totals", "total calories, total fat, total protein, and total carbohydrate"),
    ("portion_sizes", "portion sizes"),
    ("recipes", "short recipe"),
    ("familiar_dishes", "familiar dishes"),
];

const OUTPUT_FORMAT: &str = "\
Respond in the exact sectioned format below for every option, one option after another:
Meal Plan <number>:
Breakfast: <kcal> kcal
- <dish> (<portion>) — <kcal> kcal
  Recipe: <one or two sentences>
Lunch: <kcal> kcal
- <dish> (<portion>) — <kcal> kcal
  Recipe: <one or two sentences>
Dinner: <kcal> kcal
- <dish> (<portion>) — <kcal> kcal
  Recipe: <one or two sentences>
Snacks: <kcal> kcal
- <dish> (<portion>) — <kcal> kcal
  Recipe: <one or two sentences>
Total: <kcal> kcal, Fat: <g> g, Protein: <g> g, Carbohydrate: <g> g";

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("template placeholder `{{{0}}}` has no value")]
    UnboundPlaceholder(String),
    #[error("template or input is missing the `{0}` clause")]
    MissingClause(String),
    #[error("few-shot example {0} does not parse as a meal plan")]
    MalformedExample(usize),
    #[error("reading template {path}: {message}")]
    Io { path: String, message: String },
}

/// A task template with `{placeholder}` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub task: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self { task: DEFAULT_TEMPLATE.trim_end().to_owned() }
    }
}

impl PromptTemplate {
    pub fn new(task: impl Into<String>) -> Self {
        Self { task: task.into() }
    }

    pub fn from_file(path: &Path) -> Result<Self, PromptError> {
        std::fs::read_to_string(path)
            .map(|t| Self::new(t.trim_end()))
            .map_err(|e| PromptError::Io { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn placeholders(&self) -> BTreeSet<String> {
        PLACEHOLDER.captures_iter(&self.task).map(|c| c[1].to_owned()).collect()
    }

    /// Fails on the first mandatory clause the template lacks.
    pub fn check_clauses(&self) -> Result<(), PromptError> {
        let lower = self.task.to_lowercase();
        match MANDATORY_CLAUSES.iter().find(|(_, needle)| !lower.contains(needle)) {
            Some((name, _)) => Err(PromptError::MissingClause((*name).to_owned())),
            None => Ok(()),
        }
    }
}

/// A few-shot block written in the output grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleBlock(pub String);

impl ExampleBlock {
    pub fn defaults() -> Vec<ExampleBlock> {
        DEFAULT_EXAMPLES.iter().map(|s| ExampleBlock(s.trim_end().to_owned())).collect()
    }
}

/// A rendered prompt, kept in sections so examples and reference data can be
/// attached after rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptText {
    pub i_current: String,
    pub t_task: String,
    pub examples: Vec<String>,
    pub o_output: String,
    pub reference: Option<String>,
    pub menu_input: Vec<String>,
}

impl PromptText {
    /// The text sent to a model.
    pub fn render(&self) -> String {
        let mut parts: Vec<&str> = vec![&self.i_current, &self.t_task];
        let fenced: Vec<String> = self.examples.iter().map(|e| format!("{EXAMPLE_FENCE}\n{e}\n{EXAMPLE_FENCE}")).collect();
        parts.extend(fenced.iter().map(String::as_str));
        parts.push(&self.o_output);
        if let Some(r) = &self.reference {
            parts.push(r);
        }
        let mut out = parts.join("\n\n");
        out.push('\n');
        out
    }
}

/// Renders quantities with at least one decimal place ("54.0", "1573.25").
pub fn format_quantity<T: Scalar>(value: T) -> String {
    let s = value.to_decimal_string();
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn intake_section<T: Scalar>(profile: &ConsumptionProfile<T>) -> String {
    let mut lines = vec![INTAKE_HEADER.to_owned()];
    for e in &profile.entries {
        let name = if e.name.is_empty() { &e.food_id } else { &e.name };
        lines.push(format!("- {name} x {}", format_quantity(e.quantity)));
    }
    let t = &profile.totals;
    lines.push(format!(
        "Intake totals: {} kcal, {} g protein, {} g sugar.",
        format_quantity(t.calories),
        format_quantity(t.protein),
        format_quantity(t.sugar)
    ));
    lines.push(format!("Planning horizon: {} days.", profile.targets.duration_days));
    lines.join("\n")
}

pub fn menu_items<T: Scalar>(profile: &ConsumptionProfile<T>) -> Vec<String> {
    profile
        .entries
        .iter()
        .map(|e| if e.name.is_empty() { e.food_id.clone() } else { e.name.clone() })
        .collect()
}

/// Renders intake, task and output sections for one profile.
pub fn render_prompt<T: Scalar>(profile: &ConsumptionProfile<T>, template: &PromptTemplate) -> Result<PromptText, PromptError> {
    template.check_clauses()?;
    let menu = menu_items(profile);
    if menu.is_empty() {
        return Err(PromptError::MissingClause("menu_input".into()));
    }
    let targets = &profile.targets;
    let value = |name: &str| -> Option<String> {
        match name {
            "total_calories" => Some(format_quantity(targets.total_calories)),
            "target_protein" => Some(format_quantity(targets.target_protein)),
            "target_sugar" => Some(format_quantity(targets.target_sugar)),
            "menu_input" => Some(menu.join("; ")),
            _ => None,
        }
    };
    if let Some(unbound) = template.placeholders().into_iter().find(|p| value(p).is_none()) {
        return Err(PromptError::UnboundPlaceholder(unbound));
    }
    let t_task = PLACEHOLDER
        .replace_all(&template.task, |c: &Captures| value(&c[1]).expect("checked above"))
        .into_owned();
    Ok(PromptText {
        i_current: intake_section(profile),
        t_task,
        examples: Vec::new(),
        o_output: OUTPUT_FORMAT.to_owned(),
        reference: None,
        menu_input: menu,
    })
}

/// Adds fenced examples between the task and the output format. Each block
/// must parse into at least one plan with no warnings.
pub fn attach_few_shot(mut prompt: PromptText, examples: &[ExampleBlock]) -> Result<PromptText, PromptError> {
    for (i, ex) in examples.iter().enumerate() {
        let (plans, warnings) = parse_plans::<f64>(&ex.0);
        if plans.is_empty() || !warnings.is_empty() {
            return Err(PromptError::MalformedExample(i));
        }
    }
    prompt.examples.extend(examples.iter().map(|e| e.0.trim_end().to_owned()));
    Ok(prompt)
}

/// Appends catalog values for every menu item, replacing any earlier
/// reference section. Items the catalog cannot resolve are listed separately.
pub fn augment_with_retrieval<T: Scalar>(
    mut prompt: PromptText,
    profile: &ConsumptionProfile<T>,
    catalog: &Catalog<T>,
) -> PromptText {
    let mut known = Vec::new();
    let mut unverified = Vec::new();
    for entry in &profile.entries {
        let name = if entry.name.is_empty() { &entry.food_id } else { &entry.name };
        let record = catalog.get(&entry.food_id).or_else(|| catalog.lookup_exact(name));
        match record {
            Some(r) => {
                let n = &r.per_serving;
                known.push(format!(
                    "- {name}: {} kcal, {} g protein, {} g sugar per {}",
                    n.calories.to_decimal_string(),
                    n.protein.to_decimal_string(),
                    n.sugar.to_decimal_string(),
                    r.serving_desc
                ));
            }
            None => unverified.push(format!("- {name}")),
        }
    }
    let mut section = format!("{REFERENCE_HEADER}\n{}", known.join("\n"));
    if !unverified.is_empty() {
        section.push_str(&format!("\n{UNVERIFIED_HEADER}\n{}", unverified.join("\n")));
    }
    prompt.reference = Some(section.trim_end().to_owned());
    prompt
}
