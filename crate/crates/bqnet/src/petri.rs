//! Place/transition Petri nets with firing durations: construction from an
//! arc list, token-game execution, timed-schedule simulation, and the
//! structural extractions (conflict, timed conflict, precedence) consumed
//! by the penalty constructions.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::coeff::Coeff;

#[derive(Debug, Clone, PartialEq)]
pub struct Place {
    pub id: String,
    pub name: String,
    pub initial: u32,
    pub capacity: Option<u32>,
    pub invariant_weight: Option<Coeff>,
    /// Resource places model shared machines via self-loop arcs; they are
    /// skipped when extracting structural precedence.
    pub resource: bool,
}

impl Place {
    pub fn new(id: &str, initial: u32) -> Self {
        Place {
            id: id.to_string(),
            name: id.to_string(),
            initial,
            capacity: None,
            invariant_weight: None,
            resource: false,
        }
    }

    pub fn resource(id: &str, initial: u32) -> Self {
        Place {
            resource: true,
            ..Place::new(id, initial)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    pub name: String,
    /// Firing duration: output tokens become available this many time
    /// units after the firing starts.
    pub duration: u32,
}

impl Transition {
    pub fn new(id: &str, duration: u32) -> Self {
        Transition {
            id: id.to_string(),
            name: id.to_string(),
            duration,
        }
    }
}

/// Arc of a net description; direction is inferred from which endpoint is
/// a place and which is a transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub from: String,
    pub to: String,
    pub weight: i64,
}

impl Arc {
    pub fn new(from: &str, to: &str, weight: i64) -> Self {
        Arc {
            from: from.to_string(),
            to: to.to_string(),
            weight,
        }
    }
}

/// Structured net description consumed by [`build_net`].
#[derive(Debug, Clone, Default)]
pub struct NetSpec {
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<Arc>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PetriError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("arc references unknown node `{0}`")]
    UnknownNode(String),
    #[error("arc {from} -> {to} has negative weight {weight}")]
    NegativeWeight { from: String, to: String, weight: i64 },
    #[error("arc {from} -> {to} must connect one place and one transition")]
    BadArcEndpoints { from: String, to: String },
    #[error("place `{place}` starts with {initial} tokens above capacity {capacity}")]
    CapacityExceeded {
        place: String,
        initial: u32,
        capacity: u32,
    },
    #[error("expected vector of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("firing would drive place `{0}` below zero tokens")]
    TokenDeficit(String),
    #[error("schedule entry at time {time} exceeds horizon {horizon}")]
    BeyondHorizon { time: u32, horizon: u32 },
    #[error("schedule references transition index {0} out of range")]
    UnknownTransition(usize),
}

/// Validated place/transition net with `pre`/`post` incidence matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct PetriNet {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    pre: Vec<Vec<u32>>,
    post: Vec<Vec<u32>>,
}

/// Fold a net description into a validated net.
pub fn build_net(spec: NetSpec) -> Result<PetriNet, PetriError> {
    let mut place_index = BTreeMap::new();
    let mut transition_index = BTreeMap::new();
    for (i, p) in spec.places.iter().enumerate() {
        if place_index.insert(p.id.clone(), i).is_some() {
            return Err(PetriError::DuplicateId(p.id.clone()));
        }
        if let Some(cap) = p.capacity {
            if p.initial > cap {
                return Err(PetriError::CapacityExceeded {
                    place: p.id.clone(),
                    initial: p.initial,
                    capacity: cap,
                });
            }
        }
    }
    for (j, t) in spec.transitions.iter().enumerate() {
        if place_index.contains_key(&t.id) {
            return Err(PetriError::DuplicateId(t.id.clone()));
        }
        if transition_index.insert(t.id.clone(), j).is_some() {
            return Err(PetriError::DuplicateId(t.id.clone()));
        }
    }
    let np = spec.places.len();
    let nt = spec.transitions.len();
    let mut pre = vec![vec![0u32; nt]; np];
    let mut post = vec![vec![0u32; nt]; np];
    for arc in &spec.arcs {
        if arc.weight < 0 {
            return Err(PetriError::NegativeWeight {
                from: arc.from.clone(),
                to: arc.to.clone(),
                weight: arc.weight,
            });
        }
        let w = arc.weight as u32;
        match (
            place_index.get(&arc.from),
            transition_index.get(&arc.from),
            place_index.get(&arc.to),
            transition_index.get(&arc.to),
        ) {
            (Some(&p), None, None, Some(&t)) => pre[p][t] += w,
            (None, Some(&t), Some(&p), None) => post[p][t] += w,
            (None, None, _, _) => return Err(PetriError::UnknownNode(arc.from.clone())),
            (_, _, None, None) => return Err(PetriError::UnknownNode(arc.to.clone())),
            _ => {
                return Err(PetriError::BadArcEndpoints {
                    from: arc.from.clone(),
                    to: arc.to.clone(),
                })
            }
        }
    }
    Ok(PetriNet {
        places: spec.places,
        transitions: spec.transitions,
        pre,
        post,
    })
}

impl PetriNet {
    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn pre(&self, place: usize, transition: usize) -> u32 {
        self.pre[place][transition]
    }

    pub fn post(&self, place: usize, transition: usize) -> u32 {
        self.post[place][transition]
    }

    pub fn duration(&self, transition: usize) -> u32 {
        self.transitions[transition].duration
    }

    pub fn find_place(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p.id == id)
    }

    pub fn find_transition(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    pub fn initial_marking(&self) -> Marking {
        Marking {
            counts: self.places.iter().map(|p| p.initial).collect(),
            step: 0,
        }
    }

    /// Input places of a transition, optionally skipping resource places.
    fn pre_set(&self, transition: usize, skip_resources: bool) -> BTreeSet<usize> {
        (0..self.place_count())
            .filter(|&p| self.pre[p][transition] > 0)
            .filter(|&p| !(skip_resources && self.places[p].resource))
            .collect()
    }

    fn post_set(&self, transition: usize, skip_resources: bool) -> BTreeSet<usize> {
        (0..self.place_count())
            .filter(|&p| self.post[p][transition] > 0)
            .filter(|&p| !(skip_resources && self.places[p].resource))
            .collect()
    }
}

/// Token counts per place at one step or time instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marking {
    pub counts: Vec<u32>,
    pub step: u32,
}

/// How many times each transition fires at one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiringCountVector {
    pub counts: Vec<u32>,
}

impl FiringCountVector {
    pub fn new(counts: Vec<u32>) -> Self {
        FiringCountVector { counts }
    }
}

/// Start time per scheduled firing, bounded by a horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    entries: Vec<(usize, u32)>,
    horizon: u32,
}

impl Schedule {
    pub fn new(mut entries: Vec<(usize, u32)>, horizon: u32) -> Result<Self, PetriError> {
        for &(_, time) in &entries {
            if time > horizon {
                return Err(PetriError::BeyondHorizon { time, horizon });
            }
        }
        entries.sort_by_key(|&(t, time)| (time, t));
        Ok(Schedule { entries, horizon })
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn start_time(&self, transition: usize) -> Option<u32> {
        self.entries
            .iter()
            .find(|&&(t, _)| t == transition)
            .map(|&(_, k)| k)
    }

    /// Latest completion time over all entries, using the net's durations.
    pub fn makespan(&self, net: &PetriNet) -> u32 {
        self.entries
            .iter()
            .map(|&(t, k)| k + net.duration(t))
            .max()
            .unwrap_or(0)
    }
}

/// Transitions whose every input place holds enough tokens.
pub fn enabled(net: &PetriNet, m: &Marking) -> BTreeSet<usize> {
    (0..net.transition_count())
        .filter(|&t| (0..net.place_count()).all(|p| m.counts[p] >= net.pre[p][t]))
        .collect()
}

/// Apply one synchronous firing step: `M' = M + (post - pre) * x`.
pub fn fire(net: &PetriNet, m: &Marking, x: &FiringCountVector) -> Result<Marking, PetriError> {
    if m.counts.len() != net.place_count() {
        return Err(PetriError::LengthMismatch {
            expected: net.place_count(),
            got: m.counts.len(),
        });
    }
    if x.counts.len() != net.transition_count() {
        return Err(PetriError::LengthMismatch {
            expected: net.transition_count(),
            got: x.counts.len(),
        });
    }
    let mut counts = Vec::with_capacity(net.place_count());
    for p in 0..net.place_count() {
        let consumed: i64 = (0..net.transition_count())
            .map(|t| net.pre[p][t] as i64 * x.counts[t] as i64)
            .sum();
        let produced: i64 = (0..net.transition_count())
            .map(|t| net.post[p][t] as i64 * x.counts[t] as i64)
            .sum();
        if (m.counts[p] as i64) < consumed {
            return Err(PetriError::TokenDeficit(net.places[p].id.clone()));
        }
        counts.push((m.counts[p] as i64 - consumed + produced) as u32);
    }
    Ok(Marking {
        counts,
        step: m.step + 1,
    })
}

/// Why a schedule replay stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationFailure {
    pub time: u32,
    pub place: usize,
    pub demanded: u32,
    pub available: u32,
    pub transitions: Vec<usize>,
}

/// Outcome of replaying a schedule against the token game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationResult {
    pub feasible: bool,
    pub trajectory: Vec<Marking>,
    pub failure: Option<SimulationFailure>,
}

/// Replay a schedule with token timestamps: a token produced by a firing
/// at time `k` carries stamp `k + duration` and is unavailable earlier.
/// All firings sharing a start time consume their inputs simultaneously.
/// Infeasibility is reported in the result, not as an error.
pub fn simulate_schedule(net: &PetriNet, schedule: &Schedule) -> Result<SimulationResult, PetriError> {
    for &(t, _) in schedule.entries() {
        if t >= net.transition_count() {
            return Err(PetriError::UnknownTransition(t));
        }
    }
    // Per-place multiset of token timestamps.
    let mut tokens: Vec<BTreeMap<u32, u32>> = net
        .places
        .iter()
        .map(|p| {
            if p.initial > 0 {
                BTreeMap::from([(0u32, p.initial)])
            } else {
                BTreeMap::new()
            }
        })
        .collect();
    let total = |toks: &BTreeMap<u32, u32>| toks.values().sum::<u32>();
    let mut trajectory = vec![net.initial_marking()];
    let mut by_time: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &(t, k) in schedule.entries() {
        by_time.entry(k).or_default().push(t);
    }
    for (&time, firing) in &by_time {
        // Simultaneous enabling check: total demand against tokens whose
        // stamp has been reached.
        for (p, place_tokens) in tokens.iter().enumerate() {
            let demanded: u32 = firing.iter().map(|&t| net.pre[p][t]).sum();
            if demanded == 0 {
                continue;
            }
            let available: u32 = place_tokens
                .iter()
                .filter(|&(&stamp, _)| stamp <= time)
                .map(|(_, &c)| c)
                .sum();
            if available < demanded {
                return Ok(SimulationResult {
                    feasible: false,
                    trajectory,
                    failure: Some(SimulationFailure {
                        time,
                        place: p,
                        demanded,
                        available,
                        transitions: firing.clone(),
                    }),
                });
            }
        }
        for (p, place_tokens) in tokens.iter_mut().enumerate() {
            let mut demanded: u32 = firing.iter().map(|&t| net.pre[p][t]).sum();
            // Consume earliest-stamped tokens first.
            while demanded > 0 {
                let (&stamp, &count) = place_tokens.iter().next().expect("availability checked");
                let take = demanded.min(count);
                if take == count {
                    place_tokens.remove(&stamp);
                } else {
                    place_tokens.insert(stamp, count - take);
                }
                demanded -= take;
            }
        }
        for &t in firing {
            for (p, place_tokens) in tokens.iter_mut().enumerate() {
                if net.post[p][t] > 0 {
                    *place_tokens.entry(time + net.duration(t)).or_insert(0) += net.post[p][t];
                }
            }
        }
        trajectory.push(Marking {
            counts: (0..net.place_count()).map(|p| total(&tokens[p])).collect(),
            step: time + 1,
        });
    }
    Ok(SimulationResult {
        feasible: true,
        trajectory,
        failure: None,
    })
}

/// Unordered pairs of transitions competing for a shared input place that
/// cannot supply both from the initial marking.
pub fn conflict_pairs(net: &PetriNet) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for i in 0..net.transition_count() {
        for j in i + 1..net.transition_count() {
            for p in 0..net.place_count() {
                let (a, b) = (net.pre[p][i], net.pre[p][j]);
                if a > 0 && b > 0 && net.places[p].initial < a + b {
                    pairs.insert((i, j));
                    break;
                }
            }
        }
    }
    pairs
}

fn effective_duration(net: &PetriNet, t: usize) -> u32 {
    net.duration(t).max(1)
}

/// Conflicting start-time combinations over a horizon: `(t_i, t_j, k, h)`
/// is included when the execution windows `[k, k + max(FD_i, 1))` and
/// `[h, h + max(FD_j, 1))` overlap.
pub fn timed_conflict_set(net: &PetriNet, horizon: u32) -> BTreeSet<(usize, usize, u32, u32)> {
    let mut set = BTreeSet::new();
    for &(i, j) in &conflict_pairs(net) {
        let di = effective_duration(net, i);
        let dj = effective_duration(net, j);
        for k in 0..=horizon {
            for h in 0..=horizon {
                if k < h + dj && h < k + di {
                    set.insert((i, j, k, h));
                }
            }
        }
    }
    set
}

/// Ordered pairs `(t_i, t_j)` where `t_i` structurally precedes `t_j`:
/// every non-resource output place of `t_i` feeds `t_j`, and the inputs
/// of `t_i` are not all outputs of `t_j` (which would make a cycle, not
/// a precedence).
pub fn precedence_pairs(net: &PetriNet) -> BTreeSet<(usize, usize)> {
    let nt = net.transition_count();
    let pre_sets: Vec<_> = (0..nt).map(|t| net.pre_set(t, true)).collect();
    let post_sets: Vec<_> = (0..nt).map(|t| net.post_set(t, true)).collect();
    let mut pairs = BTreeSet::new();
    for i in 0..nt {
        for j in 0..nt {
            if i == j {
                continue;
            }
            if post_sets[i].is_subset(&pre_sets[j]) && !pre_sets[i].is_subset(&post_sets[j]) {
                pairs.insert((i, j));
            }
        }
    }
    pairs
}
