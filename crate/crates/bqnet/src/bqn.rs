//! Binary quadratic nets: the compilation target. Places carry linear
//! weights, transitions carry pairwise weights between two places, plus a
//! constant offset. Energy of an assignment is
//! `offset + sum(w_p * value_p) + sum(w_pq * value_p * value_q)`.
//!
//! Nets compose by weight superposition, scale coefficient-wise, and
//! convert exactly between binary and spin variable domains by symbolic
//! substitution (`x = (s + 1) / 2`, `s = 2x - 1`).

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff::{coeff, ratio, Coeff};
use crate::expr::{LinExpr, QuadExpr, VarId, VarType};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BqnError {
    #[error("variable domains differ: {0} vs {1}")]
    VarTypeMismatch(VarType, VarType),
    #[error("assignment has no value for {0}")]
    MissingVariable(VarId),
    #[error("value {value} for {var} is outside the {var_type} domain")]
    ValueOutOfDomain {
        var: VarId,
        value: i64,
        var_type: VarType,
    },
    #[error("primitive index {0} out of range 0..=15")]
    PrimitiveIndex(usize),
    #[error("primitive requires two distinct variables")]
    PrimitiveVarsEqual,
}

/// One value per variable, from the net's domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    pub values: BTreeMap<VarId, i64>,
}

impl Assignment {
    pub fn new(values: BTreeMap<VarId, i64>) -> Self {
        Assignment { values }
    }

    pub fn from_pairs(pairs: &[(VarId, i64)]) -> Self {
        Assignment {
            values: pairs.iter().copied().collect(),
        }
    }

    pub fn get(&self, v: &VarId) -> Option<i64> {
        self.values.get(v).copied()
    }
}

fn check_domain(var: &VarId, value: i64, var_type: VarType) -> Result<(), BqnError> {
    let ok = match var_type {
        VarType::Binary => value == 0 || value == 1,
        VarType::Spin => value == -1 || value == 1,
    };
    if ok {
        Ok(())
    } else {
        Err(BqnError::ValueOutOfDomain {
            var: *var,
            value,
            var_type,
        })
    }
}

/// Quadratic energy model over named binary or spin variables.
///
/// Transition pairs always hold two distinct places in canonical text
/// order, and both endpoints are registered as places. Zero weights are
/// legal (scaling by zero keeps the structure).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryQuadraticNet {
    pub var_type: VarType,
    pub places: BTreeMap<VarId, Coeff>,
    pub transitions: BTreeMap<(VarId, VarId), Coeff>,
    pub offset: Coeff,
}

impl BinaryQuadraticNet {
    pub fn new(var_type: VarType) -> Self {
        BinaryQuadraticNet {
            var_type,
            places: BTreeMap::new(),
            transitions: BTreeMap::new(),
            offset: Coeff::zero(),
        }
    }

    /// Register a place, keeping any existing weight.
    pub fn ensure_place(&mut self, v: VarId) {
        self.places.entry(v).or_insert_with(Coeff::zero);
    }

    /// Add to a place weight, registering the place if needed.
    pub fn add_place_weight(&mut self, v: VarId, w: Coeff) {
        *self.places.entry(v).or_insert_with(Coeff::zero) += w;
    }

    /// Add to a transition weight; endpoints are registered as places.
    /// Panics if the endpoints are equal (degree reduction must have
    /// happened upstream).
    pub fn add_transition_weight(&mut self, a: VarId, b: VarId, w: Coeff) {
        assert_ne!(a, b, "transition endpoints must be distinct places");
        let key = if a < b { (a, b) } else { (b, a) };
        self.ensure_place(a);
        self.ensure_place(b);
        *self.transitions.entry(key).or_insert_with(Coeff::zero) += w;
    }

    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn vars(&self) -> Vec<VarId> {
        self.places.keys().copied().collect()
    }

    /// Evaluate the energy of a full assignment.
    pub fn energy(&self, a: &Assignment) -> Result<Coeff, BqnError> {
        let mut total = self.offset;
        for (v, w) in &self.places {
            let value = a.get(v).ok_or(BqnError::MissingVariable(*v))?;
            check_domain(v, value, self.var_type)?;
            total += *w * coeff(value);
        }
        for ((p, q), w) in &self.transitions {
            let vp = a.get(p).ok_or(BqnError::MissingVariable(*p))?;
            let vq = a.get(q).ok_or(BqnError::MissingVariable(*q))?;
            total += *w * coeff(vp) * coeff(vq);
        }
        Ok(total)
    }

    /// View the net as a quadratic expression (zero weights drop out).
    pub fn to_expr(&self) -> QuadExpr {
        let mut q = QuadExpr::zero(self.var_type);
        q.add_const(self.offset);
        for (&v, &w) in &self.places {
            q.add_linear(v, w);
        }
        for (&(a, b), &w) in &self.transitions {
            q.add_quadratic(a, b, w);
        }
        q
    }
}

/// Turn a reduced quadratic expression into a net: linear terms become
/// place weights, pair terms become transition weights, the constant
/// becomes the offset. Energy is preserved at every assignment.
pub fn lower(q: &QuadExpr) -> BinaryQuadraticNet {
    let mut net = BinaryQuadraticNet::new(q.var_type);
    net.offset = q.offset;
    for v in q.vars() {
        net.ensure_place(v);
    }
    for (&v, &c) in &q.linear {
        net.add_place_weight(v, c);
    }
    for (&(a, b), &c) in &q.quadratic {
        net.add_transition_weight(a, b, c);
    }
    net
}

/// Superpose two nets: union of places and transitions with summed
/// weights, offsets added.
pub fn compose(
    h: &BinaryQuadraticNet,
    k: &BinaryQuadraticNet,
) -> Result<BinaryQuadraticNet, BqnError> {
    if h.var_type != k.var_type {
        return Err(BqnError::VarTypeMismatch(h.var_type, k.var_type));
    }
    let mut out = h.clone();
    out.offset += k.offset;
    for (&v, &w) in &k.places {
        out.add_place_weight(v, w);
    }
    for (&(a, b), &w) in &k.transitions {
        out.add_transition_weight(a, b, w);
    }
    Ok(out)
}

/// Multiply every weight and the offset by `factor`; structure is kept
/// even at factor zero.
pub fn scale(net: &BinaryQuadraticNet, factor: Coeff) -> BinaryQuadraticNet {
    let mut out = net.clone();
    for w in out.places.values_mut() {
        *w *= factor;
    }
    for w in out.transitions.values_mut() {
        *w *= factor;
    }
    out.offset *= factor;
    out
}

/// Linear image of a variable under domain conversion.
fn conversion_image(v: VarId, from: VarType) -> LinExpr {
    let mut r = LinExpr::variable(v);
    match from {
        // Replace binary x with (s + 1) / 2 over the spin domain.
        VarType::Binary => {
            r.scale(ratio(1, 2));
            r.add_const(ratio(1, 2));
        }
        // Replace spin s with 2x - 1 over the binary domain.
        VarType::Spin => {
            r.scale(coeff(2));
            r.add_const(coeff(-1));
        }
    }
    r
}

/// Convert a net to the other variable domain (or clone it when the
/// target matches). Energies agree exactly at corresponding assignments
/// (`x = 0` pairs with `s = -1`). The place and transition structure is
/// preserved one-to-one, including zero-weight entries.
pub fn convert(net: &BinaryQuadraticNet, target: VarType) -> BinaryQuadraticNet {
    if net.var_type == target {
        return net.clone();
    }
    let mut map = BTreeMap::new();
    for &v in net.places.keys() {
        map.insert(v, conversion_image(v, net.var_type));
    }
    let converted = net.to_expr().substitute_all(&map, target);
    let mut out = lower(&converted);
    // Substitution drops zero coefficients; re-register the original
    // structure so conversion is structure-preserving.
    for &v in net.places.keys() {
        out.ensure_place(v);
    }
    for &(a, b) in net.transitions.keys() {
        out.transitions.entry((a, b)).or_insert_with(Coeff::zero);
    }
    out
}

/// Map an assignment across domain conversion: `x = (s + 1) / 2`,
/// `s = 2x - 1`.
pub fn convert_assignment(a: &Assignment, from: VarType, target: VarType) -> Assignment {
    if from == target {
        return a.clone();
    }
    let values = a
        .values
        .iter()
        .map(|(&v, &value)| {
            let mapped = match target {
                VarType::Spin => 2 * value - 1,
                VarType::Binary => (value + 1) / 2,
            };
            (v, mapped)
        })
        .collect();
    Assignment { values }
}

/// All assignments over a variable list, low bit first. Bit 1 maps to
/// value 1; bit 0 maps to 0 (binary) or -1 (spin).
pub fn enumerate_assignments(
    vars: &[VarId],
    var_type: VarType,
) -> impl Iterator<Item = Assignment> + '_ {
    let n = vars.len();
    assert!(n < 64, "enumeration over {n} variables is not tractable");
    (0u64..1 << n).map(move |bits| {
        let values = vars
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let bit = (bits >> i) & 1;
                let value = match (var_type, bit) {
                    (_, 1) => 1,
                    (VarType::Binary, _) => 0,
                    (VarType::Spin, _) => -1,
                };
                (v, value)
            })
            .collect();
        Assignment { values }
    })
}

/// Closed-form energy rows of the 16 two-variable interaction tables,
/// as (constant, w_i, w_j, w_ij). Row r's truth table reads the bits of
/// r from the high end over inputs (0,0), (0,1), (1,0), (1,1).
const QUBO_PRIMITIVES: [(i64, i64, i64, i64); 16] = [
    (0, 0, 0, 0),
    (0, 0, 0, 1),
    (0, 1, 0, -1),
    (0, 1, 0, 0),
    (0, 0, 1, -1),
    (0, 0, 1, 0),
    (0, 1, 1, -2),
    (0, 1, 1, -1),
    (1, -1, -1, 1),
    (1, -1, -1, 2),
    (1, 0, -1, 0),
    (1, 0, -1, 1),
    (1, -1, 0, 0),
    (1, -1, 0, 1),
    (1, 0, 0, -1),
    (1, 0, 0, 0),
];

/// Spin-domain rows in quarter units, same layout; inputs read
/// (-1,-1), (-1,+1), (+1,-1), (+1,+1).
const ISING_PRIMITIVES_QUARTERS: [(i64, i64, i64, i64); 16] = [
    (0, 0, 0, 0),
    (1, 1, 1, 1),
    (1, 1, -1, -1),
    (2, 2, 0, 0),
    (1, -1, 1, -1),
    (2, 0, 2, 0),
    (2, 0, 0, -2),
    (3, 1, 1, -1),
    (1, -1, -1, 1),
    (2, 0, 0, 2),
    (2, 0, -2, 0),
    (3, 1, -1, 1),
    (2, -2, 0, 0),
    (3, -1, 1, 1),
    (3, -1, -1, -1),
    (4, 0, 0, 0),
];

/// Energy expression of interaction primitive row `index` over two
/// distinct variables.
pub fn primitive(
    index: usize,
    var_type: VarType,
    v_i: VarId,
    v_j: VarId,
) -> Result<QuadExpr, BqnError> {
    if index > 15 {
        return Err(BqnError::PrimitiveIndex(index));
    }
    if v_i == v_j {
        return Err(BqnError::PrimitiveVarsEqual);
    }
    let (c, wi, wj, wij, denom) = match var_type {
        VarType::Binary => {
            let (c, wi, wj, wij) = QUBO_PRIMITIVES[index];
            (c, wi, wj, wij, 1)
        }
        VarType::Spin => {
            let (c, wi, wj, wij) = ISING_PRIMITIVES_QUARTERS[index];
            (c, wi, wj, wij, 4)
        }
    };
    let mut q = QuadExpr::zero(var_type);
    q.add_const(ratio(c, denom));
    q.add_linear(v_i, ratio(wi, denom));
    q.add_linear(v_j, ratio(wj, denom));
    q.add_quadratic(v_i, v_j, ratio(wij, denom));
    Ok(q)
}

/// Truth-table cell of primitive row `index` at cell position
/// 0..=3 over inputs ordered (low, low), (low, high), (high, low),
/// (high, high).
pub fn primitive_table_cell(index: usize, cell: usize) -> i64 {
    ((index >> (3 - cell)) & 1) as i64
}
