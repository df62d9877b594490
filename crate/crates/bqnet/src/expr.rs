//! Symbolic linear and quadratic expressions over named binary or spin
//! variables.
//!
//! Variables follow a fixed naming grammar (`m[i][k]`, `m[i][n][k]`,
//! `x[i][k]`, `x[i][n][k]`, `u[i][m]`, `u[i][m][k]`) and order by their
//! rendered text, so pair keys and exports are deterministic. Quadratic
//! expressions reduce squares by variable domain: `v*v = v` for binary
//! variables, `v*v = 1` for spin variables.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff::{self, coeff, Coeff};

/// Domain of the variables in an expression or net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    /// Variables take values in {0, 1}.
    Binary,
    /// Variables take values in {-1, +1}.
    Spin,
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarType::Binary => write!(f, "binary"),
            VarType::Spin => write!(f, "spin"),
        }
    }
}

/// A named model variable.
///
/// The text form is bijective: every variant renders to a distinct string
/// and parses back to the same value. Ordering compares rendered text
/// byte-wise, which keeps map iteration order equal to export order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarId {
    /// `m[place][step]`: marking of a place at a time step.
    Marking { place: u32, step: u32 },
    /// `m[place][level][step]`: one-hot token-count level of a place.
    MarkingLevel { place: u32, level: u32, step: u32 },
    /// `x[transition][step]`: transition firing at a time step.
    Firing { transition: u32, step: u32 },
    /// `x[transition][level][step]`: one-hot firing-count level.
    FiringLevel { transition: u32, level: u32, step: u32 },
    /// `u[place][index]`: slack bit shared across all steps.
    Slack { place: u32, index: u32 },
    /// `u[place][index][step]`: slack bit for one step.
    SlackStep { place: u32, index: u32, step: u32 },
}

impl VarId {
    pub fn marking(place: u32, step: u32) -> Self {
        VarId::Marking { place, step }
    }

    pub fn marking_level(place: u32, level: u32, step: u32) -> Self {
        VarId::MarkingLevel { place, level, step }
    }

    pub fn firing(transition: u32, step: u32) -> Self {
        VarId::Firing { transition, step }
    }

    pub fn firing_level(transition: u32, level: u32, step: u32) -> Self {
        VarId::FiringLevel {
            transition,
            level,
            step,
        }
    }

    pub fn slack(place: u32, index: u32) -> Self {
        VarId::Slack { place, index }
    }

    pub fn slack_step(place: u32, index: u32, step: u32) -> Self {
        VarId::SlackStep { place, index, step }
    }

    fn parts(&self) -> (u8, [u32; 3], usize) {
        match *self {
            VarId::Marking { place, step } => (b'm', [place, step, 0], 2),
            VarId::MarkingLevel { place, level, step } => (b'm', [place, level, step], 3),
            VarId::Firing { transition, step } => (b'x', [transition, step, 0], 2),
            VarId::FiringLevel {
                transition,
                level,
                step,
            } => (b'x', [transition, level, step], 3),
            VarId::Slack { place, index } => (b'u', [place, index, 0], 2),
            VarId::SlackStep { place, index, step } => (b'u', [place, index, step], 3),
        }
    }

    /// Render into a stack buffer; used for allocation-free ordering.
    fn canonical_buf(&self) -> ([u8; 40], usize) {
        let (letter, idx, arity) = self.parts();
        let mut buf = [0u8; 40];
        let mut len = 0;
        buf[len] = letter;
        len += 1;
        for &v in &idx[..arity] {
            buf[len] = b'[';
            len += 1;
            let mut digits = [0u8; 10];
            let mut n = v;
            let mut d = 0;
            loop {
                digits[d] = b'0' + (n % 10) as u8;
                n /= 10;
                d += 1;
                if n == 0 {
                    break;
                }
            }
            for i in (0..d).rev() {
                buf[len] = digits[i];
                len += 1;
            }
            buf[len] = b']';
            len += 1;
        }
        (buf, len)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (buf, len) = self.canonical_buf();
        f.write_str(std::str::from_utf8(&buf[..len]).expect("ascii"))
    }
}

impl Ord for VarId {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, la) = self.canonical_buf();
        let (b, lb) = other.canonical_buf();
        a[..la].cmp(&b[..lb])
    }
}

impl PartialOrd for VarId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VarParseError {
    #[error("invalid variable name `{0}`")]
    Invalid(String),
}

fn parse_index(text: &str) -> Option<u32> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if text.len() > 1 && text.starts_with('0') {
        return None;
    }
    text.parse().ok()
}

impl FromStr for VarId {
    type Err = VarParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || VarParseError::Invalid(s.to_string());
        let mut chars = s.chars();
        let letter = chars.next().ok_or_else(invalid)?;
        let rest = chars.as_str();
        if !rest.starts_with('[') || !rest.ends_with(']') {
            return Err(invalid());
        }
        let inner = &rest[1..rest.len() - 1];
        let mut idx = Vec::with_capacity(3);
        for part in inner.split("][") {
            // Digit-only parts guarantee the whole string was well bracketed.
            idx.push(parse_index(part).ok_or_else(invalid)?);
        }
        match (letter, idx.as_slice()) {
            ('m', &[a, b]) => Ok(VarId::marking(a, b)),
            ('m', &[a, b, c]) => Ok(VarId::marking_level(a, b, c)),
            ('x', &[a, b]) => Ok(VarId::firing(a, b)),
            ('x', &[a, b, c]) => Ok(VarId::firing_level(a, b, c)),
            ('u', &[a, b]) => Ok(VarId::slack(a, b)),
            ('u', &[a, b, c]) => Ok(VarId::slack_step(a, b, c)),
            _ => Err(invalid()),
        }
    }
}

impl Serialize for VarId {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for VarId {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("no value assigned to variable {0}")]
    MissingVariable(VarId),
}

/// Affine expression: `offset + sum(coeff * var)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinExpr {
    pub offset: Coeff,
    pub terms: BTreeMap<VarId, Coeff>,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Coeff) -> Self {
        LinExpr {
            offset: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn variable(v: VarId) -> Self {
        let mut e = LinExpr::zero();
        e.add_term(v, coeff(1));
        e
    }

    pub fn add_const(&mut self, c: Coeff) {
        self.offset += c;
    }

    pub fn add_term(&mut self, v: VarId, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(v).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&v);
        }
    }

    pub fn add_assign(&mut self, other: &LinExpr) {
        self.offset += other.offset;
        for (&v, &c) in &other.terms {
            self.add_term(v, c);
        }
    }

    pub fn scale(&mut self, factor: Coeff) {
        if factor.is_zero() {
            *self = LinExpr::zero();
            return;
        }
        self.offset *= factor;
        for c in self.terms.values_mut() {
            *c *= factor;
        }
    }

    pub fn eval(&self, values: &BTreeMap<VarId, i64>) -> Result<Coeff, ExprError> {
        let mut total = self.offset;
        for (v, c) in &self.terms {
            let val = values.get(v).ok_or(ExprError::MissingVariable(*v))?;
            total += *c * coeff(*val);
        }
        Ok(total)
    }

    /// Expand `self * other` into a quadratic expression, reducing squares
    /// by the given variable domain.
    pub fn multiply(&self, other: &LinExpr, var_type: VarType) -> QuadExpr {
        let mut q = QuadExpr::zero(var_type);
        q.add_const(self.offset * other.offset);
        for (&v, &c) in &other.terms {
            q.add_linear(v, self.offset * c);
        }
        for (&v, &c) in &self.terms {
            q.add_linear(v, other.offset * c);
        }
        for (&a, &ca) in &self.terms {
            for (&b, &cb) in &other.terms {
                q.add_quadratic(a, b, ca * cb);
            }
        }
        q
    }

    /// Expand `self * self`.
    pub fn squared(&self, var_type: VarType) -> QuadExpr {
        self.multiply(self, var_type)
    }
}

/// Quadratic expression over one variable domain:
/// `offset + sum(coeff * var) + sum(coeff * var_a * var_b)`.
///
/// Quadratic keys always hold two distinct variables with the lower one
/// (by rendered text) first. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadExpr {
    pub var_type: VarType,
    pub offset: Coeff,
    pub linear: BTreeMap<VarId, Coeff>,
    pub quadratic: BTreeMap<(VarId, VarId), Coeff>,
}

impl QuadExpr {
    pub fn zero(var_type: VarType) -> Self {
        QuadExpr {
            var_type,
            offset: Coeff::zero(),
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
        }
    }

    pub fn constant(var_type: VarType, c: Coeff) -> Self {
        let mut q = Self::zero(var_type);
        q.offset = c;
        q
    }

    pub fn from_linear(var_type: VarType, lin: &LinExpr) -> Self {
        let mut q = Self::zero(var_type);
        q.offset = lin.offset;
        for (&v, &c) in &lin.terms {
            q.add_linear(v, c);
        }
        q
    }

    pub fn is_zero(&self) -> bool {
        self.offset.is_zero() && self.linear.is_empty() && self.quadratic.is_empty()
    }

    pub fn add_const(&mut self, c: Coeff) {
        self.offset += c;
    }

    pub fn add_linear(&mut self, v: VarId, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let entry = self.linear.entry(v).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.linear.remove(&v);
        }
    }

    /// Add `c * a * b`, canonicalizing pair order and reducing `v * v`
    /// to `v` (binary) or `1` (spin).
    pub fn add_quadratic(&mut self, a: VarId, b: VarId, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match a.cmp(&b) {
            Ordering::Equal => match self.var_type {
                VarType::Binary => self.add_linear(a, c),
                VarType::Spin => self.add_const(c),
            },
            Ordering::Less => self.insert_pair((a, b), c),
            Ordering::Greater => self.insert_pair((b, a), c),
        }
    }

    fn insert_pair(&mut self, key: (VarId, VarId), c: Coeff) {
        let entry = self.quadratic.entry(key).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.quadratic.remove(&key);
        }
    }

    pub fn add_assign(&mut self, other: &QuadExpr) {
        assert_eq!(
            self.var_type, other.var_type,
            "cannot add expressions over different variable domains"
        );
        self.offset += other.offset;
        for (&v, &c) in &other.linear {
            self.add_linear(v, c);
        }
        for (&(a, b), &c) in &other.quadratic {
            self.add_quadratic(a, b, c);
        }
    }

    pub fn scale(&mut self, factor: Coeff) {
        if factor.is_zero() {
            let vt = self.var_type;
            *self = QuadExpr::zero(vt);
            return;
        }
        self.offset *= factor;
        for c in self.linear.values_mut() {
            *c *= factor;
        }
        for c in self.quadratic.values_mut() {
            *c *= factor;
        }
    }

    /// Every variable mentioned by the expression.
    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut set: BTreeSet<VarId> = self.linear.keys().copied().collect();
        for &(a, b) in self.quadratic.keys() {
            set.insert(a);
            set.insert(b);
        }
        set
    }

    pub fn eval(&self, values: &BTreeMap<VarId, i64>) -> Result<Coeff, ExprError> {
        let mut total = self.offset;
        for (v, c) in &self.linear {
            let val = values.get(v).ok_or(ExprError::MissingVariable(*v))?;
            total += *c * coeff(*val);
        }
        for ((a, b), c) in &self.quadratic {
            let va = values.get(a).ok_or(ExprError::MissingVariable(*a))?;
            let vb = values.get(b).ok_or(ExprError::MissingVariable(*b))?;
            total += *c * coeff(*va) * coeff(*vb);
        }
        Ok(total)
    }

    /// Rebuild the expression with every variable replaced by a linear
    /// expression, reducing under the new variable domain. Variables
    /// absent from the map stay themselves.
    pub fn substitute_all(
        &self,
        replacements: &BTreeMap<VarId, LinExpr>,
        new_var_type: VarType,
    ) -> QuadExpr {
        let image = |v: &VarId| -> LinExpr {
            replacements
                .get(v)
                .cloned()
                .unwrap_or_else(|| LinExpr::variable(*v))
        };
        let mut out = QuadExpr::zero(new_var_type);
        out.add_const(self.offset);
        for (v, &c) in &self.linear {
            let mut r = image(v);
            r.scale(c);
            out.add_const(r.offset);
            for (&w, &cw) in &r.terms {
                out.add_linear(w, cw);
            }
        }
        for ((a, b), &c) in &self.quadratic {
            let mut prod = image(a).multiply(&image(b), new_var_type);
            prod.scale(c);
            out.add_assign(&prod);
        }
        out
    }

    /// Pin one variable to a constant value and fold it out.
    pub fn fix_var(&self, v: VarId, value: Coeff) -> QuadExpr {
        let mut map = BTreeMap::new();
        map.insert(v, LinExpr::constant(value));
        self.substitute_all(&map, self.var_type)
    }
}

fn write_term(
    f: &mut fmt::Formatter<'_>,
    first: &mut bool,
    c: &Coeff,
    body: Option<String>,
) -> fmt::Result {
    let negative = c < &Coeff::zero();
    let mag = coeff::abs(c);
    if *first {
        if negative {
            write!(f, "-")?;
        }
        *first = false;
    } else if negative {
        write!(f, " - ")?;
    } else {
        write!(f, " + ")?;
    }
    match body {
        Some(body) => {
            if mag == coeff(1) {
                write!(f, "{body}")
            } else {
                write!(f, "{}*{}", coeff::render(&mag), body)
            }
        }
        None => write!(f, "{}", coeff::render(&mag)),
    }
}

impl fmt::Display for QuadExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        if !self.offset.is_zero() {
            write_term(f, &mut first, &self.offset, None)?;
        }
        for (v, c) in &self.linear {
            write_term(f, &mut first, c, Some(v.to_string()))?;
        }
        for ((a, b), c) in &self.quadratic {
            write_term(f, &mut first, c, Some(format!("{a}*{b}")))?;
        }
        Ok(())
    }
}
