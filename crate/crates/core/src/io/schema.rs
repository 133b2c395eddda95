//! Structural checks on parsed JSON that report every offending field at
//! once, before typed deserialization.

use serde_json::Value;

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Number,
    Count,
    Text,
    Vec3,
    Numbers,
    Choice(&'static [&'static str]),
    Object(&'static [Field]),
    List(&'static Kind),
}

#[derive(Debug, Clone, Copy)]
pub struct Field {
    pub name: &'static str,
    pub kind: Kind,
    pub required: bool,
}

const fn req(name: &'static str, kind: Kind) -> Field {
    Field { name, kind, required: true }
}

const fn opt(name: &'static str, kind: Kind) -> Field {
    Field { name, kind, required: false }
}

pub const PATH_FEATURES: &[Field] = &[
    opt("lambda", Kind::Number),
    opt("sigmoid_center", Kind::Number),
    opt("beta", Kind::Number),
    opt("gamma", Kind::Number),
    opt("side_plane_normal", Kind::Vec3),
];

pub const VELOCITY_FEATURES: &[Field] = &[
    opt("n", Kind::Count),
    opt("epsilon", Kind::Number),
    opt("v_min", Kind::Number),
    opt("v_max", Kind::Number),
    opt("d_c", Kind::Number),
];

pub const ROBOT: &[Field] = &[
    opt("theta_rp", Kind::Numbers),
    opt("theta_rv", Kind::Number),
    opt("v_robot", Kind::Number),
    opt("d_safe", Kind::Number),
    opt("kappa", Kind::Number),
];

pub const PLANNER: &[Field] = &[
    opt("n_samples", Kind::Count),
    opt("n_segments", Kind::Count),
    opt("t_goal", Kind::Number),
    opt("grid", Kind::Count),
    opt("seeds", Kind::Count),
    opt("tolerance", Kind::Number),
    opt("max_path_evals", Kind::Count),
    opt("max_velocity_evals", Kind::Count),
    opt("t_upp_factor", Kind::Number),
];

pub const SCENARIO: &[Field] = &[
    req("format_version", Kind::Count),
    opt("name", Kind::Text),
    req("start", Kind::Vec3),
    req("goal", Kind::Vec3),
    req("obstacle_center", Kind::Vec3),
    req("obstacle_radius", Kind::Number),
    req("table_height", Kind::Number),
    req("workspace_low", Kind::Vec3),
    req("workspace_upp", Kind::Vec3),
    opt("robot_base", Kind::Vec3),
    opt("path_features", Kind::Object(PATH_FEATURES)),
    opt("velocity_features", Kind::Object(VELOCITY_FEATURES)),
    opt("robot", Kind::Object(ROBOT)),
    opt("planner", Kind::Object(PLANNER)),
];

const DEMO_SAMPLE: &[Field] = &[req("t", Kind::Number), req("x", Kind::Vec3), opt("v", Kind::Vec3)];

pub const DEMONSTRATION: &[Field] = &[
    req("format_version", Kind::Count),
    req("samples", Kind::List(&Kind::Object(DEMO_SAMPLE))),
    opt("mode", Kind::Choice(&["path", "velocity", "both"])),
];

fn join(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

fn describe(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn check_kind(value: &Value, kind: &Kind, path: &str, problems: &mut Vec<String>) {
    let numbers = |v: &Value| v.as_array().map(|a| a.iter().all(Value::is_number)).unwrap_or(false);
    match kind {
        Kind::Number if !value.is_number() => {
            problems.push(format!("{path}: expected a number, found {}", describe(value)))
        }
        Kind::Count if !value.is_u64() => {
            problems.push(format!("{path}: expected a non-negative integer, found {}", describe(value)))
        }
        Kind::Text if !value.is_string() => {
            problems.push(format!("{path}: expected a string, found {}", describe(value)))
        }
        Kind::Vec3 if !(numbers(value) && value.as_array().map(Vec::len) == Some(3)) => {
            problems.push(format!("{path}: expected an array of 3 numbers"))
        }
        Kind::Numbers if !numbers(value) => problems.push(format!("{path}: expected an array of numbers")),
        Kind::Choice(options) => match value.as_str() {
            Some(s) if options.contains(&s) => {}
            _ => problems.push(format!("{path}: expected one of {}", options.join(", "))),
        },
        Kind::Object(fields) => check(value, fields, path, problems),
        Kind::List(item) => match value.as_array() {
            Some(items) => {
                for (i, v) in items.iter().enumerate() {
                    check_kind(v, item, &format!("{path}[{i}]"), problems);
                }
            }
            None => problems.push(format!("{path}: expected an array, found {}", describe(value))),
        },
        _ => {}
    }
}

/// Appends one line per missing, unknown or mistyped field of `value`.
pub fn check(value: &Value, fields: &[Field], path: &str, problems: &mut Vec<String>) {
    let Some(object) = value.as_object() else {
        let at = if path.is_empty() { "document" } else { path };
        problems.push(format!("{at}: expected an object, found {}", describe(value)));
        return;
    };
    for field in fields {
        match object.get(field.name) {
            None if field.required => problems.push(format!("{}: missing required field", join(path, field.name))),
            None => {}
            Some(v) => check_kind(v, &field.kind, &join(path, field.name), problems),
        }
    }
    for key in object.keys() {
        if !fields.iter().any(|f| f.name == key) {
            problems.push(format!("{}: unknown field", join(path, key)));
        }
    }
}

pub fn problems(value: &Value, fields: &[Field]) -> Vec<String> {
    let mut out = Vec::new();
    check(value, fields, "", &mut out);
    out
}
