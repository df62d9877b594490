//! File formats: JSON net descriptions, JSON model files with exact
//! decimal-string coefficients, coordinate-text model export with a
//! variable index sidecar, construction config files, and instance files
//! for the problem generators.
//!
//! Parsing is strict by default: unknown keys are errors, named by their
//! JSON path. Lenient mode ignores unknown keys but validates everything
//! else identically.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::bqn::{Assignment, BinaryQuadraticNet};
use crate::coeff::{self, Coeff};
use crate::constructions::{
    conflict_penalty, exactly_once, firing_count_penalty, firing_variables, invariant,
    marking_variables, precedence_penalty, BoundednessMode, ConflictSet,
    ConstructionError, FiringSemantics, MarkingMode, SlackSharing,
};
use crate::expr::{QuadExpr, VarId, VarType};
use crate::petri::{
    self, build_net, Arc, NetSpec, PetriError, PetriNet, Place, Transition,
};
use crate::problems::{
    assemble, deadline_penalty, Component, ComponentRole, CompiledModel, DecodeHints, Graph,
    JobShopInstance, ProblemError,
};
use crate::solver::SampleSet;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{at}: {message}")]
    Field { at: String, message: String },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { at: String, key: String },
    #[error(transparent)]
    Net(#[from] PetriError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

fn field_err(at: &str, message: impl Into<String>) -> IoError {
    IoError::Field {
        at: at.to_string(),
        message: message.into(),
    }
}

/// Object reader tracking which keys were consumed; `done` rejects the
/// rest unless lenient.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    at: String,
    lenient: bool,
    seen: BTreeSet<&'a str>,
}

impl<'a> Obj<'a> {
    fn new(value: &'a Value, at: &str, lenient: bool) -> Result<Self, IoError> {
        let map = value
            .as_object()
            .ok_or_else(|| field_err(at, "expected an object"))?;
        Ok(Obj {
            map,
            at: at.to_string(),
            lenient,
            seen: BTreeSet::new(),
        })
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        let found = self.map.get_key_value(key);
        if let Some((k, _)) = found {
            self.seen.insert(k.as_str());
        }
        found.map(|(_, v)| v)
    }

    fn require(&mut self, key: &'static str) -> Result<&'a Value, IoError> {
        self.get(key)
            .ok_or_else(|| field_err(&self.at, format!("missing required key `{key}`")))
    }

    fn done(self) -> Result<(), IoError> {
        if self.lenient {
            return Ok(());
        }
        for key in self.map.keys() {
            if !self.seen.contains(key.as_str()) {
                return Err(IoError::UnknownKey {
                    at: self.at,
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }
}

fn as_str<'a>(v: &'a Value, at: &str) -> Result<&'a str, IoError> {
    v.as_str().ok_or_else(|| field_err(at, "expected a string"))
}

fn as_u32(v: &Value, at: &str) -> Result<u32, IoError> {
    v.as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| field_err(at, "expected a non-negative integer"))
}

fn as_usize(v: &Value, at: &str) -> Result<usize, IoError> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| field_err(at, "expected a non-negative integer"))
}

fn as_i64(v: &Value, at: &str) -> Result<i64, IoError> {
    v.as_i64()
        .ok_or_else(|| field_err(at, "expected an integer"))
}

fn as_bool(v: &Value, at: &str) -> Result<bool, IoError> {
    v.as_bool()
        .ok_or_else(|| field_err(at, "expected a boolean"))
}

fn as_coeff(v: &Value, at: &str) -> Result<Coeff, IoError> {
    coeff::from_json(v).map_err(|e| field_err(at, e.to_string()))
}

fn as_array<'a>(v: &'a Value, at: &str) -> Result<&'a [Value], IoError> {
    v.as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| field_err(at, "expected an array"))
}

fn as_var(v: &Value, at: &str) -> Result<VarId, IoError> {
    let text = as_str(v, at)?;
    VarId::from_str(text).map_err(|e| field_err(at, e.to_string()))
}

pub fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a JSON net description. Required keys: `places` (id, name,
/// initial), `transitions` (id, name), `arcs` (from, to). Optional:
/// place `capacity`/`resource`/`invariant_weight`, transition `duration`
/// (default 0), arc `weight` (default 1, must be >= 1).
pub fn parse_net_str(text: &str, lenient: bool) -> Result<PetriNet, IoError> {
    let value: Value = serde_json::from_str(text)?;
    let mut top = Obj::new(&value, "net", lenient)?;
    let mut spec = NetSpec::default();

    for (i, entry) in as_array(top.require("places")?, "places")?.iter().enumerate() {
        let at = format!("places[{i}]");
        let mut obj = Obj::new(entry, &at, lenient)?;
        let id = as_str(obj.require("id")?, &format!("{at}.id"))?.to_string();
        let name = as_str(obj.require("name")?, &format!("{at}.name"))?.to_string();
        let initial = as_u32(obj.require("initial")?, &format!("{at}.initial"))?;
        let capacity = obj
            .get("capacity")
            .map(|v| as_u32(v, &format!("{at}.capacity")))
            .transpose()?;
        let resource = obj
            .get("resource")
            .map(|v| as_bool(v, &format!("{at}.resource")))
            .transpose()?
            .unwrap_or(false);
        let invariant_weight = obj
            .get("invariant_weight")
            .map(|v| as_coeff(v, &format!("{at}.invariant_weight")))
            .transpose()?;
        obj.done()?;
        spec.places.push(Place {
            id,
            name,
            initial,
            capacity,
            invariant_weight,
            resource,
        });
    }

    for (i, entry) in as_array(top.require("transitions")?, "transitions")?
        .iter()
        .enumerate()
    {
        let at = format!("transitions[{i}]");
        let mut obj = Obj::new(entry, &at, lenient)?;
        let id = as_str(obj.require("id")?, &format!("{at}.id"))?.to_string();
        let name = as_str(obj.require("name")?, &format!("{at}.name"))?.to_string();
        let duration = obj
            .get("duration")
            .map(|v| as_u32(v, &format!("{at}.duration")))
            .transpose()?
            .unwrap_or(0);
        obj.done()?;
        spec.transitions.push(Transition { id, name, duration });
    }

    for (i, entry) in as_array(top.require("arcs")?, "arcs")?.iter().enumerate() {
        let at = format!("arcs[{i}]");
        let mut obj = Obj::new(entry, &at, lenient)?;
        let from = as_str(obj.require("from")?, &format!("{at}.from"))?.to_string();
        let to = as_str(obj.require("to")?, &format!("{at}.to"))?.to_string();
        let weight = obj
            .get("weight")
            .map(|v| as_i64(v, &format!("{at}.weight")))
            .transpose()?
            .unwrap_or(1);
        if weight < 1 {
            return Err(field_err(
                &format!("{at}.weight"),
                format!("arc weight must be >= 1, got {weight}"),
            ));
        }
        obj.done()?;
        spec.arcs.push(Arc { from, to, weight });
    }

    top.done()?;
    Ok(build_net(spec)?)
}

pub fn load_net(path: &Path, lenient: bool) -> Result<PetriNet, IoError> {
    parse_net_str(&read_file(path)?, lenient)
}

/// Render a net back to its JSON description (inverse of
/// [`parse_net_str`] up to formatting).
pub fn net_to_json(net: &PetriNet) -> String {
    let mut places = Vec::new();
    for p in net.places() {
        let mut obj = Map::new();
        obj.insert("id".into(), Value::String(p.id.clone()));
        obj.insert("name".into(), Value::String(p.name.clone()));
        obj.insert("initial".into(), Value::from(p.initial));
        if let Some(c) = p.capacity {
            obj.insert("capacity".into(), Value::from(c));
        }
        if let Some(w) = &p.invariant_weight {
            obj.insert("invariant_weight".into(), Value::String(coeff::render(w)));
        }
        if p.resource {
            obj.insert("resource".into(), Value::Bool(true));
        }
        places.push(Value::Object(obj));
    }
    let mut transitions = Vec::new();
    for t in net.transitions() {
        let mut obj = Map::new();
        obj.insert("id".into(), Value::String(t.id.clone()));
        obj.insert("name".into(), Value::String(t.name.clone()));
        if t.duration > 0 {
            obj.insert("duration".into(), Value::from(t.duration));
        }
        transitions.push(Value::Object(obj));
    }
    let mut arcs = Vec::new();
    for p in 0..net.place_count() {
        for t in 0..net.transition_count() {
            if net.pre(p, t) > 0 {
                let mut obj = Map::new();
                obj.insert("from".into(), Value::String(net.places()[p].id.clone()));
                obj.insert("to".into(), Value::String(net.transitions()[t].id.clone()));
                if net.pre(p, t) > 1 {
                    obj.insert("weight".into(), Value::from(net.pre(p, t)));
                }
                arcs.push(Value::Object(obj));
            }
            if net.post(p, t) > 0 {
                let mut obj = Map::new();
                obj.insert("from".into(), Value::String(net.transitions()[t].id.clone()));
                obj.insert("to".into(), Value::String(net.places()[p].id.clone()));
                if net.post(p, t) > 1 {
                    obj.insert("weight".into(), Value::from(net.post(p, t)));
                }
                arcs.push(Value::Object(obj));
            }
        }
    }
    let mut root = Map::new();
    root.insert("places".into(), Value::Array(places));
    root.insert("transitions".into(), Value::Array(transitions));
    root.insert("arcs".into(), Value::Array(arcs));
    let mut out = serde_json::to_string_pretty(&Value::Object(root)).expect("valid JSON tree");
    out.push('\n');
    out
}

fn coeff_value(c: &Coeff, float: bool) -> Value {
    if float {
        Value::from(coeff::to_f64(c))
    } else {
        Value::String(coeff::render(c))
    }
}

/// Serialize a model to the JSON model format. Coefficients are exact
/// strings unless `float` asks for f64 approximations.
pub fn model_to_json(net: &BinaryQuadraticNet, hints: &DecodeHints, float: bool) -> String {
    let mut root = Map::new();
    root.insert(
        "vartype".into(),
        Value::String(net.var_type.to_string()),
    );
    root.insert(
        "variables".into(),
        Value::Array(
            net.places
                .keys()
                .map(|v| Value::String(v.to_string()))
                .collect(),
        ),
    );
    let mut linear = Map::new();
    for (v, w) in &net.places {
        linear.insert(v.to_string(), coeff_value(w, float));
    }
    root.insert("linear".into(), Value::Object(linear));
    let quadratic: Vec<Value> = net
        .transitions
        .iter()
        .map(|((a, b), w)| {
            Value::Array(vec![
                Value::String(a.to_string()),
                Value::String(b.to_string()),
                coeff_value(w, float),
            ])
        })
        .collect();
    root.insert("quadratic".into(), Value::Array(quadratic));
    root.insert("offset".into(), coeff_value(&net.offset, float));
    root.insert(
        "decode_hints".into(),
        serde_json::to_value(hints).expect("hints serialize"),
    );
    let mut out = serde_json::to_string_pretty(&Value::Object(root)).expect("valid JSON tree");
    out.push('\n');
    out
}

/// Parse the JSON model format back into a net and its decode hints.
/// The `variables` list is the authoritative variable set; `linear` and
/// `quadratic` entries must stay within it, and quadratic pairs must be
/// listed in canonical (first < second) order without duplicates.
pub fn parse_model_str(
    text: &str,
    lenient: bool,
) -> Result<(BinaryQuadraticNet, DecodeHints), IoError> {
    let value: Value = serde_json::from_str(text)?;
    let mut top = Obj::new(&value, "model", lenient)?;

    let vt_text = as_str(top.require("vartype")?, "vartype")?;
    let var_type = match vt_text {
        "binary" => VarType::Binary,
        "spin" => VarType::Spin,
        other => {
            return Err(field_err(
                "vartype",
                format!("expected \"binary\" or \"spin\", got \"{other}\""),
            ))
        }
    };
    let mut net = BinaryQuadraticNet::new(var_type);

    let mut declared = BTreeSet::new();
    let variables = as_array(top.require("variables")?, "variables")?;
    for (i, v) in variables.iter().enumerate() {
        let at = format!("variables[{i}]");
        let var = as_var(v, &at)?;
        if let Some(&last) = declared.iter().next_back() {
            if var <= last {
                return Err(field_err(
                    &at,
                    format!("variables must be in strictly increasing canonical order ({var} after {last})"),
                ));
            }
        }
        declared.insert(var);
        net.ensure_place(var);
    }

    if let Some(linear) = top.get("linear") {
        let entries = linear
            .as_object()
            .ok_or_else(|| field_err("linear", "expected an object"))?;
        for (key, w) in entries {
            let at = format!("linear.{key}");
            let var = VarId::from_str(key).map_err(|e| field_err(&at, e.to_string()))?;
            if !declared.contains(&var) {
                return Err(field_err(&at, "variable not in the variables list"));
            }
            net.add_place_weight(var, as_coeff(w, &at)?);
        }
    }

    if let Some(quadratic) = top.get("quadratic") {
        let mut seen_pairs = BTreeSet::new();
        for (i, entry) in as_array(quadratic, "quadratic")?.iter().enumerate() {
            let at = format!("quadratic[{i}]");
            let triple = as_array(entry, &at)?;
            if triple.len() != 3 {
                return Err(field_err(&at, "expected [first, second, coefficient]"));
            }
            let a = as_var(&triple[0], &at)?;
            let b = as_var(&triple[1], &at)?;
            if a >= b {
                return Err(field_err(
                    &at,
                    format!("pair must be in canonical order with distinct variables, got [{a}, {b}]"),
                ));
            }
            for v in [a, b] {
                if !declared.contains(&v) {
                    return Err(field_err(&at, format!("variable {v} not in the variables list")));
                }
            }
            if !seen_pairs.insert((a, b)) {
                return Err(field_err(&at, format!("duplicate pair [{a}, {b}]")));
            }
            net.add_transition_weight(a, b, as_coeff(&triple[2], &at)?);
        }
    }

    if let Some(offset) = top.get("offset") {
        net.offset = as_coeff(offset, "offset")?;
    }

    let hints = match top.get("decode_hints") {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| field_err("decode_hints", e.to_string()))?,
        None => DecodeHints::Custom {
            description: "imported model".into(),
        },
    };
    top.done()?;
    Ok((net, hints))
}

pub fn load_model(
    path: &Path,
    lenient: bool,
) -> Result<(BinaryQuadraticNet, DecodeHints), IoError> {
    parse_model_str(&read_file(path)?, lenient)
}

/// Coordinate-text export: one line per coefficient, `i i w` for linear
/// terms and `i j w` (i < j) for pairs, after `# vartype` and `# offset`
/// header comments. Returns the body and the variable index sidecar
/// mapping each index to its canonical variable name.
pub fn model_to_coordinate(net: &BinaryQuadraticNet) -> (String, String) {
    let vars = net.vars();
    let index: BTreeMap<VarId, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut body = String::new();
    body.push_str(&format!("# vartype {}\n", net.var_type));
    body.push_str(&format!("# offset {}\n", coeff::render(&net.offset)));
    for (v, w) in &net.places {
        let i = index[v];
        body.push_str(&format!("{i} {i} {}\n", coeff::render(w)));
    }
    for ((a, b), w) in &net.transitions {
        body.push_str(&format!(
            "{} {} {}\n",
            index[a],
            index[b],
            coeff::render(w)
        ));
    }
    let mut sidecar = String::new();
    for (i, v) in vars.iter().enumerate() {
        sidecar.push_str(&format!("{i} {v}\n"));
    }
    (body, sidecar)
}

/// Re-import coordinate text using its variable index sidecar.
pub fn coordinate_to_model(body: &str, sidecar: &str) -> Result<BinaryQuadraticNet, IoError> {
    let mut vars = Vec::new();
    for (lineno, line) in sidecar.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let at = format!("variable index line {}", lineno + 1);
        let mut parts = line.split_whitespace();
        let (idx, name) = match (parts.next(), parts.next(), parts.next()) {
            (Some(i), Some(n), None) => (i, n),
            _ => return Err(field_err(&at, "expected `index variable`")),
        };
        let idx: usize = idx
            .parse()
            .map_err(|_| field_err(&at, "expected a numeric index"))?;
        if idx != vars.len() {
            return Err(field_err(&at, format!("expected index {}", vars.len())));
        }
        vars.push(VarId::from_str(name).map_err(|e| field_err(&at, e.to_string()))?);
    }

    let mut var_type = VarType::Binary;
    let mut offset = coeff::coeff(0);
    let mut entries = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        let at = format!("line {}", lineno + 1);
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("vartype"), Some("binary")) => var_type = VarType::Binary,
                (Some("vartype"), Some("spin")) => var_type = VarType::Spin,
                (Some("vartype"), other) => {
                    return Err(field_err(
                        &at,
                        format!("unknown vartype {:?}", other.unwrap_or("")),
                    ))
                }
                (Some("offset"), Some(text)) => {
                    offset = coeff::parse(text).map_err(|e| field_err(&at, e.to_string()))?;
                }
                _ => {} // other comments pass through
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (i, j, w) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(i), Some(j), Some(w), None) => (i, j, w),
            _ => return Err(field_err(&at, "expected `i j coefficient`")),
        };
        let i: usize = i
            .parse()
            .map_err(|_| field_err(&at, "expected a numeric index"))?;
        let j: usize = j
            .parse()
            .map_err(|_| field_err(&at, "expected a numeric index"))?;
        if i > j {
            return Err(field_err(&at, format!("indices must be ascending, got {i} {j}")));
        }
        if j >= vars.len() {
            return Err(field_err(&at, format!("index {j} outside the variable index")));
        }
        let w = coeff::parse(w).map_err(|e| field_err(&at, e.to_string()))?;
        entries.push((i, j, w));
    }

    let mut net = BinaryQuadraticNet::new(var_type);
    net.offset = offset;
    for &v in &vars {
        net.ensure_place(v);
    }
    for (i, j, w) in entries {
        if i == j {
            net.add_place_weight(vars[i], w);
        } else {
            net.add_transition_weight(vars[i], vars[j], w);
        }
    }
    Ok(net)
}

/// Which variable family a compiled net uses and over what horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyConfig {
    Marking { horizon: u32, max_tokens: Option<u32> },
    Firing { horizon: u32, max_firings: Option<u32> },
}

/// One requested construction with its scale factor.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstructionItem {
    OneHotLevels {
        scale: Coeff,
    },
    Boundedness {
        mode: BoundednessMode,
        sharing: SlackSharing,
        bounds: BTreeMap<String, u32>,
        scale: Coeff,
    },
    Invariant {
        weights: BTreeMap<String, Coeff>,
        target: Coeff,
        scale: Coeff,
    },
    Conflict {
        timed: bool,
        scale: Coeff,
    },
    FiringCounts {
        counts: BTreeMap<String, u32>,
        scale: Coeff,
    },
    ExactlyOnce {
        transitions: Option<Vec<String>>,
        scale: Coeff,
    },
    Precedence {
        timed: bool,
        scale: Coeff,
    },
    Deadline {
        scale: Coeff,
    },
}

/// Parsed construction config: the variable family plus the penalty
/// terms to superpose.
#[derive(Debug, Clone, PartialEq)]
pub struct CompileConfig {
    pub family: FamilyConfig,
    pub constructions: Vec<ConstructionItem>,
}

pub fn parse_config_str(text: &str, lenient: bool) -> Result<CompileConfig, IoError> {
    let value: Value = serde_json::from_str(text)?;
    let mut top = Obj::new(&value, "config", lenient)?;

    let mut fam = Obj::new(top.require("variables")?, "variables", lenient)?;
    let family_kind = as_str(fam.require("family")?, "variables.family")?.to_string();
    let horizon = as_u32(fam.require("horizon")?, "variables.horizon")?;
    let family = match family_kind.as_str() {
        "marking" => {
            let max_tokens = fam
                .get("max_tokens")
                .map(|v| as_u32(v, "variables.max_tokens"))
                .transpose()?;
            FamilyConfig::Marking { horizon, max_tokens }
        }
        "firing" => {
            let max_firings = fam
                .get("max_firings")
                .map(|v| as_u32(v, "variables.max_firings"))
                .transpose()?;
            FamilyConfig::Firing {
                horizon,
                max_firings,
            }
        }
        other => {
            return Err(field_err(
                "variables.family",
                format!("expected \"marking\" or \"firing\", got \"{other}\""),
            ))
        }
    };
    fam.done()?;

    let mut constructions = Vec::new();
    for (i, entry) in as_array(top.require("constructions")?, "constructions")?
        .iter()
        .enumerate()
    {
        let at = format!("constructions[{i}]");
        let mut obj = Obj::new(entry, &at, lenient)?;
        let kind = as_str(obj.require("kind")?, &format!("{at}.kind"))?.to_string();
        let scale = obj
            .get("scale")
            .map(|v| as_coeff(v, &format!("{at}.scale")))
            .transpose()?
            .unwrap_or_else(|| coeff::coeff(1));
        let item = match kind.as_str() {
            "one-hot-levels" => ConstructionItem::OneHotLevels { scale },
            "boundedness" => {
                let mode = match as_str(obj.require("mode")?, &format!("{at}.mode"))? {
                    "equality" => BoundednessMode::Equality,
                    "upper" => BoundednessMode::Upper,
                    other => {
                        return Err(field_err(
                            &format!("{at}.mode"),
                            format!("expected \"equality\" or \"upper\", got \"{other}\""),
                        ))
                    }
                };
                let sharing = match obj.get("sharing") {
                    None => SlackSharing::Shared,
                    Some(v) => match as_str(v, &format!("{at}.sharing"))? {
                        "shared" => SlackSharing::Shared,
                        "per-step" => SlackSharing::PerStep,
                        other => {
                            return Err(field_err(
                                &format!("{at}.sharing"),
                                format!("expected \"shared\" or \"per-step\", got \"{other}\""),
                            ))
                        }
                    },
                };
                let mut bounds = BTreeMap::new();
                let entries = obj
                    .require("bounds")?
                    .as_object()
                    .ok_or_else(|| field_err(&format!("{at}.bounds"), "expected an object"))?;
                for (place, bound) in entries {
                    bounds.insert(
                        place.clone(),
                        as_u32(bound, &format!("{at}.bounds.{place}"))?,
                    );
                }
                ConstructionItem::Boundedness {
                    mode,
                    sharing,
                    bounds,
                    scale,
                }
            }
            "invariant" => {
                let mut weights = BTreeMap::new();
                let entries = obj
                    .require("weights")?
                    .as_object()
                    .ok_or_else(|| field_err(&format!("{at}.weights"), "expected an object"))?;
                for (place, w) in entries {
                    weights.insert(place.clone(), as_coeff(w, &format!("{at}.weights.{place}"))?);
                }
                let target = as_coeff(obj.require("target")?, &format!("{at}.target"))?;
                ConstructionItem::Invariant {
                    weights,
                    target,
                    scale,
                }
            }
            "conflict" => ConstructionItem::Conflict {
                timed: obj
                    .get("timed")
                    .map(|v| as_bool(v, &format!("{at}.timed")))
                    .transpose()?
                    .unwrap_or(false),
                scale,
            },
            "firing-counts" => {
                let mut counts = BTreeMap::new();
                let entries = obj
                    .require("counts")?
                    .as_object()
                    .ok_or_else(|| field_err(&format!("{at}.counts"), "expected an object"))?;
                for (t, c) in entries {
                    counts.insert(t.clone(), as_u32(c, &format!("{at}.counts.{t}"))?);
                }
                ConstructionItem::FiringCounts { counts, scale }
            }
            "exactly-once" => {
                let transitions = match obj.get("transitions") {
                    None => None,
                    Some(v) => {
                        let list = as_array(v, &format!("{at}.transitions"))?;
                        let mut ids = Vec::new();
                        for (j, t) in list.iter().enumerate() {
                            ids.push(
                                as_str(t, &format!("{at}.transitions[{j}]"))?.to_string(),
                            );
                        }
                        Some(ids)
                    }
                };
                ConstructionItem::ExactlyOnce { transitions, scale }
            }
            "precedence" => ConstructionItem::Precedence {
                timed: obj
                    .get("timed")
                    .map(|v| as_bool(v, &format!("{at}.timed")))
                    .transpose()?
                    .unwrap_or(false),
                scale,
            },
            "deadline" => ConstructionItem::Deadline { scale },
            other => {
                return Err(field_err(
                    &format!("{at}.kind"),
                    format!("unknown construction kind \"{other}\""),
                ))
            }
        };
        obj.done()?;
        constructions.push(item);
    }
    top.done()?;
    Ok(CompileConfig {
        family,
        constructions,
    })
}

pub fn load_config(path: &Path, lenient: bool) -> Result<CompileConfig, IoError> {
    parse_config_str(&read_file(path)?, lenient)
}

fn lookup_place(net: &PetriNet, id: &str, at: &str) -> Result<usize, IoError> {
    net.find_place(id)
        .ok_or_else(|| field_err(at, format!("unknown place `{id}`")))
}

fn lookup_transition(net: &PetriNet, id: &str, at: &str) -> Result<usize, IoError> {
    net.find_transition(id)
        .ok_or_else(|| field_err(at, format!("unknown transition `{id}`")))
}

fn sum_exprs(exprs: &[QuadExpr]) -> QuadExpr {
    let mut total = QuadExpr::zero(VarType::Binary);
    for e in exprs {
        total.add_assign(e);
    }
    total
}

/// Compile a net against a construction config into a model whose
/// components are the configured penalties.
pub fn compile_net(net: &PetriNet, config: &CompileConfig) -> Result<CompiledModel, IoError> {
    enum Family {
        Marking(crate::constructions::MarkingVariableFamily),
        Firing(crate::constructions::FiringVariableFamily),
    }
    let (family, base_one_hots, horizon) = match config.family {
        FamilyConfig::Marking { horizon, max_tokens } => {
            let mode = match max_tokens {
                None => MarkingMode::SingleToken,
                Some(n) => MarkingMode::MultiToken { max_tokens: n },
            };
            let (f, hots) = marking_variables(net, horizon, mode);
            (Family::Marking(f), hots, horizon)
        }
        FamilyConfig::Firing {
            horizon,
            max_firings,
        } => {
            let semantics = match max_firings {
                None => FiringSemantics::SingleServer,
                Some(n) => FiringSemantics::NServer { max_firings: n },
            };
            let (f, hots) = firing_variables(net, horizon, semantics);
            (Family::Firing(f), hots, horizon)
        }
    };

    let mut components = Vec::new();
    let mut extra_vars: Vec<VarId> = Vec::new();
    for (i, item) in config.constructions.iter().enumerate() {
        let at = format!("constructions[{i}]");
        let require_marking = |f: &Family| -> Result<(), IoError> {
            match f {
                Family::Marking(_) => Ok(()),
                Family::Firing(_) => Err(field_err(
                    &at,
                    "this construction needs marking variables",
                )),
            }
        };
        let require_firing = |f: &Family| -> Result<(), IoError> {
            match f {
                Family::Firing(_) => Ok(()),
                Family::Marking(_) => Err(field_err(
                    &at,
                    "this construction needs firing variables",
                )),
            }
        };
        let (name, scale, expr) = match item {
            ConstructionItem::OneHotLevels { scale } => {
                if base_one_hots.is_empty() {
                    return Err(field_err(
                        &at,
                        "one-hot-levels needs multi-token or n-server variables",
                    ));
                }
                ("one-hot-levels", *scale, sum_exprs(&base_one_hots))
            }
            ConstructionItem::Boundedness {
                mode,
                sharing,
                bounds,
                scale,
            } => {
                require_marking(&family)?;
                let f = match &family {
                    Family::Marking(f) => f,
                    Family::Firing(_) => unreachable!(),
                };
                let mut by_index = BTreeMap::new();
                for (id, &bound) in bounds {
                    by_index.insert(
                        lookup_place(net, id, &format!("{at}.bounds.{id}"))?,
                        bound,
                    );
                }
                let penalty = crate::constructions::boundedness(f, &by_index, *mode, *sharing)?;
                extra_vars.extend(penalty.slack_vars.iter().copied());
                ("boundedness", *scale, penalty.expr)
            }
            ConstructionItem::Invariant {
                weights,
                target,
                scale,
            } => {
                require_marking(&family)?;
                let f = match &family {
                    Family::Marking(f) => f,
                    Family::Firing(_) => unreachable!(),
                };
                let mut by_index = vec![coeff::coeff(0); net.place_count()];
                for (id, &w) in weights {
                    by_index[lookup_place(net, id, &format!("{at}.weights.{id}"))?] = w;
                }
                ("invariant", *scale, invariant(f, &by_index, *target)?)
            }
            ConstructionItem::Conflict { timed, scale } => {
                require_firing(&family)?;
                let f = match &family {
                    Family::Firing(f) => f,
                    Family::Marking(_) => unreachable!(),
                };
                let set = if *timed {
                    ConflictSet::Timed(petri::timed_conflict_set(net, horizon))
                } else {
                    ConflictSet::Untimed(petri::conflict_pairs(net))
                };
                (
                    if *timed { "timed-conflict" } else { "conflict" },
                    *scale,
                    conflict_penalty(f, &set)?,
                )
            }
            ConstructionItem::FiringCounts { counts, scale } => {
                require_firing(&family)?;
                let f = match &family {
                    Family::Firing(f) => f,
                    Family::Marking(_) => unreachable!(),
                };
                let mut by_index = BTreeMap::new();
                for (id, &c) in counts {
                    by_index.insert(
                        lookup_transition(net, id, &format!("{at}.counts.{id}"))?,
                        c,
                    );
                }
                ("firing-counts", *scale, firing_count_penalty(f, &by_index)?)
            }
            ConstructionItem::ExactlyOnce { transitions, scale } => {
                require_firing(&family)?;
                let f = match &family {
                    Family::Firing(f) => f,
                    Family::Marking(_) => unreachable!(),
                };
                let ids = match transitions {
                    None => (0..net.transition_count()).collect::<Vec<_>>(),
                    Some(list) => {
                        let mut ids = Vec::new();
                        for (j, id) in list.iter().enumerate() {
                            ids.push(lookup_transition(
                                net,
                                id,
                                &format!("{at}.transitions[{j}]"),
                            )?);
                        }
                        ids
                    }
                };
                ("exactly-once", *scale, exactly_once(f, &ids)?)
            }
            ConstructionItem::Precedence { timed, scale } => {
                require_firing(&family)?;
                let f = match &family {
                    Family::Firing(f) => f,
                    Family::Marking(_) => unreachable!(),
                };
                let pairs = petri::precedence_pairs(net);
                (
                    if *timed {
                        "timed-precedence"
                    } else {
                        "precedence"
                    },
                    *scale,
                    precedence_penalty(f, &pairs, *timed)?,
                )
            }
            ConstructionItem::Deadline { scale } => {
                require_firing(&family)?;
                let f = match &family {
                    Family::Firing(f) => f,
                    Family::Marking(_) => unreachable!(),
                };
                ("deadline", *scale, deadline_penalty(f, horizon))
            }
        };
        components.push(Component {
            name: name.to_string(),
            scale,
            expr,
            role: ComponentRole::Constraint,
        });
    }

    let family_vars = match &family {
        Family::Marking(f) => f.vars(),
        Family::Firing(f) => f.vars(),
    };
    let all_vars: Vec<VarId> = family_vars.into_iter().chain(extra_vars).collect();
    let names: Vec<&str> = components.iter().map(|c| c.name.as_str()).collect();
    let description = format!(
        "compiled net ({} places, {} transitions, horizon {horizon}): {}",
        net.place_count(),
        net.transition_count(),
        if names.is_empty() {
            "no constructions".to_string()
        } else {
            names.join(", ")
        }
    );
    let bqn = assemble(VarType::Binary, &components, all_vars);
    Ok(CompiledModel {
        bqn,
        components,
        petri: Some(net.clone()),
        hints: DecodeHints::Custom { description },
    })
}

/// Assignment input for decode/verify: either a samples file produced by
/// `solve` or a bare `{variable: value}` object.
#[derive(Debug, Clone, PartialEq)]
pub enum AssignmentInput {
    Samples(SampleSet),
    Single(Assignment),
}

impl AssignmentInput {
    /// The assignment to act on: the best sample, or the bare assignment.
    pub fn primary(&self) -> Option<&Assignment> {
        match self {
            AssignmentInput::Samples(set) => set.best().map(|s| &s.assignment),
            AssignmentInput::Single(a) => Some(a),
        }
    }
}

pub fn parse_assignment_input(text: &str) -> Result<AssignmentInput, IoError> {
    let value: Value = serde_json::from_str(text)?;
    let is_samples = value
        .as_object()
        .map(|m| m.contains_key("samples"))
        .unwrap_or(false);
    if is_samples {
        Ok(AssignmentInput::Samples(serde_json::from_value(value)?))
    } else {
        Ok(AssignmentInput::Single(serde_json::from_value(value)?))
    }
}

pub fn load_assignment_input(path: &Path) -> Result<AssignmentInput, IoError> {
    parse_assignment_input(&read_file(path)?)
}

pub fn load_graph(path: &Path) -> Result<Graph, IoError> {
    let value: Value = serde_json::from_str(&read_file(path)?)?;
    let mut top = Obj::new(&value, "graph", false)?;
    let n = as_usize(top.require("n")?, "n")?;
    let mut edges = Vec::new();
    for (i, e) in as_array(top.require("edges")?, "edges")?.iter().enumerate() {
        let at = format!("edges[{i}]");
        let pair = as_array(e, &at)?;
        if pair.len() != 2 {
            return Err(field_err(&at, "expected [u, v]"));
        }
        edges.push((as_usize(&pair[0], &at)?, as_usize(&pair[1], &at)?));
    }
    top.done()?;
    Ok(Graph::new(n, edges)?)
}

/// Distance matrix file: a bare square array of numbers or exact
/// strings.
pub fn load_distances(path: &Path) -> Result<Vec<Vec<Coeff>>, IoError> {
    let value: Value = serde_json::from_str(&read_file(path)?)?;
    let rows = as_array(&value, "distances")?;
    let mut matrix = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let at = format!("distances[{i}]");
        let mut out = Vec::new();
        for (j, cell) in as_array(row, &at)?.iter().enumerate() {
            out.push(as_coeff(cell, &format!("{at}[{j}]"))?);
        }
        matrix.push(out);
    }
    Ok(matrix)
}

pub fn load_jobshop(path: &Path) -> Result<JobShopInstance, IoError> {
    let instance: JobShopInstance = serde_json::from_str(&read_file(path)?)?;
    instance.validate()?;
    Ok(instance)
}
