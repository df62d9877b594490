//! Penalty constructions: generate marking/firing variable families over a
//! net and a horizon, and lower each constraint class into a quadratic
//! penalty that is zero exactly on satisfying assignments.
//!
//! Scale factors are not applied here; callers weight each penalty via
//! net scaling after lowering.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::coeff::{coeff, Coeff};
use crate::expr::{LinExpr, QuadExpr, VarId, VarType};
use crate::petri::PetriNet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("one-hot group is empty")]
    EmptyGroup,
    #[error("place index {0} outside the family")]
    UnknownPlace(usize),
    #[error("transition index {0} outside the family")]
    UnknownTransition(usize),
    #[error("bound {bound} for place {place} exceeds the token-count range {max}")]
    BoundAboveRange { place: usize, bound: u32, max: u32 },
    #[error("expected {expected} invariant weights, got {got}")]
    WeightCountMismatch { expected: usize, got: usize },
    #[error("step index {index} beyond horizon {horizon}")]
    BeyondHorizon { index: u32, horizon: u32 },
    #[error("firing count {count} for transition {transition} cannot fit in {max} slots")]
    InfeasibleFiringCount {
        transition: usize,
        count: u32,
        max: u32,
    },
    #[error("this construction requires single-server firing variables")]
    RequiresSingleServer,
}

/// How marking variables encode token counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkingMode {
    /// One variable `m[i][k]` per place and step; the place holds 0 or 1
    /// tokens.
    SingleToken,
    /// One-hot level encoding `m[i][n][k]`, `n = 0..=max_tokens`.
    MultiToken { max_tokens: u32 },
}

/// Marking variables for every place over steps `0..=horizon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkingVariableFamily {
    place_count: usize,
    horizon: u32,
    mode: MarkingMode,
}

impl MarkingVariableFamily {
    pub fn new(place_count: usize, horizon: u32, mode: MarkingMode) -> Self {
        if let MarkingMode::MultiToken { max_tokens } = mode {
            assert!(max_tokens >= 1, "multi-token mode needs max_tokens >= 1");
        }
        MarkingVariableFamily {
            place_count,
            horizon,
            mode,
        }
    }

    pub fn place_count(&self) -> usize {
        self.place_count
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn mode(&self) -> MarkingMode {
        self.mode
    }

    /// Highest representable token count per place.
    pub fn max_tokens(&self) -> u32 {
        match self.mode {
            MarkingMode::SingleToken => 1,
            MarkingMode::MultiToken { max_tokens } => max_tokens,
        }
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for i in 0..self.place_count as u32 {
            match self.mode {
                MarkingMode::SingleToken => {
                    for k in 0..=self.horizon {
                        out.push(VarId::marking(i, k));
                    }
                }
                MarkingMode::MultiToken { max_tokens } => {
                    for n in 0..=max_tokens {
                        for k in 0..=self.horizon {
                            out.push(VarId::marking_level(i, n, k));
                        }
                    }
                }
            }
        }
        out
    }

    /// Level variables of one place at one step (multi-token mode).
    pub fn level_group(&self, place: usize, step: u32) -> Vec<VarId> {
        match self.mode {
            MarkingMode::SingleToken => vec![VarId::marking(place as u32, step)],
            MarkingMode::MultiToken { max_tokens } => (0..=max_tokens)
                .map(|n| VarId::marking_level(place as u32, n, step))
                .collect(),
        }
    }

    /// Token count of a place at a step as a linear expression.
    pub fn count_expr(&self, place: usize, step: u32) -> LinExpr {
        let mut e = LinExpr::zero();
        match self.mode {
            MarkingMode::SingleToken => {
                e.add_term(VarId::marking(place as u32, step), coeff(1));
            }
            MarkingMode::MultiToken { max_tokens } => {
                for n in 1..=max_tokens {
                    e.add_term(
                        VarId::marking_level(place as u32, n, step),
                        coeff(n as i64),
                    );
                }
            }
        }
        e
    }

    /// One-hot penalties making each multi-token level group select
    /// exactly one count. Single-token mode needs none.
    pub fn one_hots(&self) -> Vec<QuadExpr> {
        match self.mode {
            MarkingMode::SingleToken => Vec::new(),
            MarkingMode::MultiToken { .. } => {
                let mut out = Vec::new();
                for i in 0..self.place_count {
                    for k in 0..=self.horizon {
                        out.push(one_hot(&self.level_group(i, k)).expect("nonempty group"));
                    }
                }
                out
            }
        }
    }
}

/// Emit the marking variable family of a net plus its one-hot penalties.
pub fn marking_variables(
    net: &PetriNet,
    horizon: u32,
    mode: MarkingMode,
) -> (MarkingVariableFamily, Vec<QuadExpr>) {
    let family = MarkingVariableFamily::new(net.place_count(), horizon, mode);
    let one_hots = family.one_hots();
    (family, one_hots)
}

/// How many times a transition may fire within one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiringSemantics {
    /// At most one firing per step: variables `x[i][k]`.
    SingleServer,
    /// Up to `max_firings` per step, one-hot encoded as `x[i][n][k]`.
    NServer { max_firings: u32 },
}

/// Firing variables for every transition over steps `0..=horizon`,
/// remembering firing durations for the timed constructions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiringVariableFamily {
    durations: Vec<u32>,
    horizon: u32,
    semantics: FiringSemantics,
}

impl FiringVariableFamily {
    pub fn new(durations: Vec<u32>, horizon: u32, semantics: FiringSemantics) -> Self {
        if let FiringSemantics::NServer { max_firings } = semantics {
            assert!(max_firings >= 1, "n-server mode needs max_firings >= 1");
        }
        FiringVariableFamily {
            durations,
            horizon,
            semantics,
        }
    }

    pub fn transition_count(&self) -> usize {
        self.durations.len()
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn semantics(&self) -> FiringSemantics {
        self.semantics
    }

    pub fn duration(&self, transition: usize) -> u32 {
        self.durations[transition]
    }

    pub fn is_single_server(&self) -> bool {
        matches!(self.semantics, FiringSemantics::SingleServer)
    }

    /// The single-server firing variable of a transition at a step.
    pub fn firing_var(&self, transition: usize, step: u32) -> VarId {
        VarId::firing(transition as u32, step)
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for t in 0..self.durations.len() as u32 {
            match self.semantics {
                FiringSemantics::SingleServer => {
                    for k in 0..=self.horizon {
                        out.push(VarId::firing(t, k));
                    }
                }
                FiringSemantics::NServer { max_firings } => {
                    for n in 0..=max_firings {
                        for k in 0..=self.horizon {
                            out.push(VarId::firing_level(t, n, k));
                        }
                    }
                }
            }
        }
        out
    }

    /// Firing count of a transition at one step as a linear expression.
    pub fn count_expr(&self, transition: usize, step: u32) -> LinExpr {
        let mut e = LinExpr::zero();
        match self.semantics {
            FiringSemantics::SingleServer => {
                e.add_term(VarId::firing(transition as u32, step), coeff(1));
            }
            FiringSemantics::NServer { max_firings } => {
                for n in 1..=max_firings {
                    e.add_term(
                        VarId::firing_level(transition as u32, n, step),
                        coeff(n as i64),
                    );
                }
            }
        }
        e
    }

    pub fn one_hots(&self) -> Vec<QuadExpr> {
        match self.semantics {
            FiringSemantics::SingleServer => Vec::new(),
            FiringSemantics::NServer { max_firings } => {
                let mut out = Vec::new();
                for t in 0..self.durations.len() as u32 {
                    for k in 0..=self.horizon {
                        let group: Vec<VarId> = (0..=max_firings)
                            .map(|n| VarId::firing_level(t, n, k))
                            .collect();
                        out.push(one_hot(&group).expect("nonempty group"));
                    }
                }
                out
            }
        }
    }
}

/// Emit the firing variable family of a net plus one-hot penalties for
/// n-server level groups.
pub fn firing_variables(
    net: &PetriNet,
    horizon: u32,
    semantics: FiringSemantics,
) -> (FiringVariableFamily, Vec<QuadExpr>) {
    let durations = (0..net.transition_count()).map(|t| net.duration(t)).collect();
    let family = FiringVariableFamily::new(durations, horizon, semantics);
    let one_hots = family.one_hots();
    (family, one_hots)
}

/// `(sum(group) - 1)^2` over binary variables: zero iff exactly one
/// member is set.
pub fn one_hot(group: &[VarId]) -> Result<QuadExpr, ConstructionError> {
    if group.is_empty() {
        return Err(ConstructionError::EmptyGroup);
    }
    let mut sum = LinExpr::zero();
    for &v in group {
        sum.add_term(v, coeff(1));
    }
    sum.add_const(coeff(-1));
    Ok(sum.squared(VarType::Binary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundednessMode {
    /// Token count must equal the bound at every step.
    Equality,
    /// Token count must not exceed the bound; slack variables one-hot
    /// encode the actual count.
    Upper,
}

/// Whether upper-bound slack variables are shared across steps (the
/// count must then be constant over time) or allocated per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackSharing {
    Shared,
    PerStep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundednessPenalty {
    pub expr: QuadExpr,
    pub slack_vars: Vec<VarId>,
}

/// Penalize deviation of token counts from per-place bounds over every
/// step. Bounds are keyed by place index.
pub fn boundedness(
    family: &MarkingVariableFamily,
    bounds: &BTreeMap<usize, u32>,
    mode: BoundednessMode,
    sharing: SlackSharing,
) -> Result<BoundednessPenalty, ConstructionError> {
    let max = family.max_tokens();
    for (&place, &bound) in bounds {
        if place >= family.place_count() {
            return Err(ConstructionError::UnknownPlace(place));
        }
        if bound > max {
            return Err(ConstructionError::BoundAboveRange { place, bound, max });
        }
    }
    let mut expr = QuadExpr::zero(VarType::Binary);
    let mut slack_vars = Vec::new();
    for (&place, &bound) in bounds {
        match mode {
            BoundednessMode::Equality => {
                for k in 0..=family.horizon() {
                    let mut dev = family.count_expr(place, k);
                    dev.add_const(coeff(-(bound as i64)));
                    expr.add_assign(&dev.squared(VarType::Binary));
                }
            }
            BoundednessMode::Upper => match sharing {
                SlackSharing::Shared => {
                    let group: Vec<VarId> = (0..=bound)
                        .map(|m| VarId::slack(place as u32, m))
                        .collect();
                    let mut slack_count = LinExpr::zero();
                    for (m, &v) in group.iter().enumerate() {
                        slack_count.add_term(v, coeff(m as i64));
                    }
                    for k in 0..=family.horizon() {
                        let mut dev = family.count_expr(place, k);
                        let mut neg = slack_count.clone();
                        neg.scale(coeff(-1));
                        dev.add_assign(&neg);
                        expr.add_assign(&dev.squared(VarType::Binary));
                    }
                    expr.add_assign(&one_hot(&group)?);
                    slack_vars.extend(group);
                }
                SlackSharing::PerStep => {
                    for k in 0..=family.horizon() {
                        let group: Vec<VarId> = (0..=bound)
                            .map(|m| VarId::slack_step(place as u32, m, k))
                            .collect();
                        let mut dev = family.count_expr(place, k);
                        for (m, &v) in group.iter().enumerate() {
                            dev.add_term(v, coeff(-(m as i64)));
                        }
                        expr.add_assign(&dev.squared(VarType::Binary));
                        expr.add_assign(&one_hot(&group)?);
                        slack_vars.extend(group);
                    }
                }
            },
        }
    }
    Ok(BoundednessPenalty { expr, slack_vars })
}

/// Penalize deviation of the weighted token sum from `target` at every
/// step: `sum_k (sum_i weight_i * count_i_k - target)^2`.
pub fn invariant(
    family: &MarkingVariableFamily,
    weights: &[Coeff],
    target: Coeff,
) -> Result<QuadExpr, ConstructionError> {
    if weights.len() != family.place_count() {
        return Err(ConstructionError::WeightCountMismatch {
            expected: family.place_count(),
            got: weights.len(),
        });
    }
    let mut expr = QuadExpr::zero(VarType::Binary);
    for k in 0..=family.horizon() {
        let mut dev = LinExpr::zero();
        for (place, &w) in weights.iter().enumerate() {
            let mut count = family.count_expr(place, k);
            count.scale(w);
            dev.add_assign(&count);
        }
        dev.add_const(-target);
        expr.add_assign(&dev.squared(VarType::Binary));
    }
    Ok(expr)
}

/// Conflicting firings to penalize: per-step pairs, or explicit
/// start-time combinations from a timed conflict set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConflictSet {
    Untimed(BTreeSet<(usize, usize)>),
    Timed(BTreeSet<(usize, usize, u32, u32)>),
}

fn check_transition(
    family: &FiringVariableFamily,
    t: usize,
) -> Result<(), ConstructionError> {
    if t >= family.transition_count() {
        return Err(ConstructionError::UnknownTransition(t));
    }
    Ok(())
}

fn check_step(family: &FiringVariableFamily, k: u32) -> Result<(), ConstructionError> {
    if k > family.horizon() {
        return Err(ConstructionError::BeyondHorizon {
            index: k,
            horizon: family.horizon(),
        });
    }
    Ok(())
}

/// One product term per conflicting co-firing; zero iff no conflicting
/// pair fires in overlapping windows.
pub fn conflict_penalty(
    family: &FiringVariableFamily,
    conflicts: &ConflictSet,
) -> Result<QuadExpr, ConstructionError> {
    if !family.is_single_server() {
        return Err(ConstructionError::RequiresSingleServer);
    }
    let mut expr = QuadExpr::zero(VarType::Binary);
    match conflicts {
        ConflictSet::Untimed(pairs) => {
            for &(i, j) in pairs {
                check_transition(family, i)?;
                check_transition(family, j)?;
                for k in 0..=family.horizon() {
                    expr.add_quadratic(family.firing_var(i, k), family.firing_var(j, k), coeff(1));
                }
            }
        }
        ConflictSet::Timed(tuples) => {
            for &(i, j, k, h) in tuples {
                check_transition(family, i)?;
                check_transition(family, j)?;
                check_step(family, k)?;
                check_step(family, h)?;
                expr.add_quadratic(family.firing_var(i, k), family.firing_var(j, h), coeff(1));
            }
        }
    }
    Ok(expr)
}

/// Squared deviation of each transition's total firings from its target
/// count, summed over the listed transitions.
pub fn firing_count_penalty(
    family: &FiringVariableFamily,
    counts: &BTreeMap<usize, u32>,
) -> Result<QuadExpr, ConstructionError> {
    let slots = family.horizon() + 1;
    let max = match family.semantics() {
        FiringSemantics::SingleServer => slots,
        FiringSemantics::NServer { max_firings } => max_firings * slots,
    };
    let mut expr = QuadExpr::zero(VarType::Binary);
    for (&t, &count) in counts {
        check_transition(family, t)?;
        if count > max {
            return Err(ConstructionError::InfeasibleFiringCount {
                transition: t,
                count,
                max,
            });
        }
        let mut total = LinExpr::zero();
        for k in 0..=family.horizon() {
            total.add_assign(&family.count_expr(t, k));
        }
        total.add_const(coeff(-(count as i64)));
        expr.add_assign(&total.squared(VarType::Binary));
    }
    Ok(expr)
}

/// Each listed transition must fire exactly once over the horizon.
pub fn exactly_once(
    family: &FiringVariableFamily,
    transitions: &[usize],
) -> Result<QuadExpr, ConstructionError> {
    let counts = transitions.iter().map(|&t| (t, 1)).collect();
    firing_count_penalty(family, &counts)
}

/// Penalize a successor starting before its predecessor completes. A
/// predecessor firing at `k` blocks successor starts at every
/// `h < k + max(duration, 1)` when timed, or `h <= k` when untimed.
pub fn precedence_penalty(
    family: &FiringVariableFamily,
    precedence: &BTreeSet<(usize, usize)>,
    timed: bool,
) -> Result<QuadExpr, ConstructionError> {
    if !family.is_single_server() {
        return Err(ConstructionError::RequiresSingleServer);
    }
    let mut expr = QuadExpr::zero(VarType::Binary);
    for &(i, j) in precedence {
        check_transition(family, i)?;
        check_transition(family, j)?;
        let block = if timed { family.duration(i).max(1) } else { 1 };
        for k in 0..=family.horizon() {
            for h in 0..=family.horizon() {
                if h < k + block {
                    expr.add_quadratic(family.firing_var(i, k), family.firing_var(j, h), coeff(1));
                }
            }
        }
    }
    Ok(expr)
}
