//! Minimization of binary quadratic nets: exhaustive search over a
//! Gray-code walk for small nets, simulated annealing beyond, both with
//! exact rational energies. Also decodes assignments back into
//! problem-domain solutions and verifies them against the source model.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bqn::{Assignment, BinaryQuadraticNet, BqnError};
use crate::coeff::{self, serde_coeff, Coeff};
use crate::expr::{ExprError, VarId, VarType};
use crate::petri::{self, PetriError, Schedule, SimulationFailure};
use crate::problems::{CompiledModel, ComponentRole, DecodeHints};

/// Exhaustive search walks all 2^n assignments; past this it is off the
/// table by default.
pub const BRUTE_FORCE_CAP: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("{count} variables exceed the exhaustive-search cap of {cap}")]
    TooManyVariables { count: usize, cap: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("assignment has no value for {0}")]
    MissingVariable(VarId),
    #[error("value {value} for {var} is outside the {expected} domain")]
    BadValue {
        var: VarId,
        value: i64,
        expected: VarType,
    },
    #[error("{group} selects {count} options, expected exactly 1")]
    OneHotViolation { group: String, count: usize },
    #[error("model has no problem-level decoder ({0})")]
    NoDecoder(String),
    #[error(transparent)]
    Petri(#[from] PetriError),
}

/// One distinct assignment found by a solver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub assignment: Assignment,
    #[serde(with = "serde_coeff")]
    pub energy: Coeff,
    pub occurrences: u32,
}

/// How a sample set was produced; annealing fields stay empty for the
/// exhaustive solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveMetadata {
    pub solver: String,
    pub variables: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sweeps: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reads: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_hot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_cold: Option<f64>,
}

/// Distinct assignments sorted by energy, then by assignment. The
/// exhaustive solver returns every minimum-energy assignment; annealing
/// returns the best state of each read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub metadata: SolveMetadata,
}

impl SampleSet {
    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn min_energy(&self) -> Option<Coeff> {
        self.samples.first().map(|s| s.energy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub seed: u64,
    pub sweeps: u32,
    pub reads: u32,
    /// Starting temperature; defaults to the largest coefficient magnitude.
    pub t_hot: Option<f64>,
    /// Final temperature; defaults to 1% of the smallest nonzero magnitude.
    pub t_cold: Option<f64>,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            seed: 42,
            sweeps: 1000,
            reads: 32,
            t_hot: None,
            t_cold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveConfig {
    pub anneal: AnnealConfig,
    pub brute_cap: Option<usize>,
}

impl SolveConfig {
    pub fn brute_cap(&self) -> usize {
        self.brute_cap.unwrap_or(BRUTE_FORCE_CAP)
    }
}

/// Integer view of a net: every coefficient multiplied by the common
/// denominator, so energies and flip deltas are exact i128 arithmetic.
struct ScaledNet {
    vars: Vec<VarId>,
    var_type: VarType,
    denom: i128,
    offset: i128,
    linear: Vec<i128>,
    pairs: Vec<(usize, usize, i128)>,
    adjacency: Vec<Vec<(usize, i128)>>,
}

impl ScaledNet {
    fn new(net: &BinaryQuadraticNet) -> Self {
        let vars = net.vars();
        let index: BTreeMap<VarId, usize> =
            vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut denom: i128 = 1;
        denom = denom.lcm(&(*net.offset.denom() as i128));
        for w in net.places.values() {
            denom = denom.lcm(&(*w.denom() as i128));
        }
        for w in net.transitions.values() {
            denom = denom.lcm(&(*w.denom() as i128));
        }
        let scale = |c: &Coeff| (*c.numer() as i128) * (denom / (*c.denom() as i128));

        let mut linear = vec![0i128; vars.len()];
        for (v, w) in &net.places {
            linear[index[v]] = scale(w);
        }
        let mut pairs = Vec::with_capacity(net.transitions.len());
        let mut adjacency = vec![Vec::new(); vars.len()];
        for ((a, b), w) in &net.transitions {
            let (i, j, s) = (index[a], index[b], scale(w));
            pairs.push((i, j, s));
            adjacency[i].push((j, s));
            adjacency[j].push((i, s));
        }
        ScaledNet {
            vars,
            var_type: net.var_type,
            denom,
            offset: scale(&net.offset),
            linear,
            pairs,
            adjacency,
        }
    }

    /// Value of variable `i` under the packed state: bit set means 1
    /// (binary) or +1 (spin), clear means 0 or -1.
    fn value(&self, state: u64, i: usize) -> i128 {
        let bit = (state >> i) & 1;
        match self.var_type {
            VarType::Binary => bit as i128,
            VarType::Spin => 2 * bit as i128 - 1,
        }
    }

    fn eval(&self, state: u64) -> i128 {
        let mut total = self.offset;
        for (i, &w) in self.linear.iter().enumerate() {
            total += w * self.value(state, i);
        }
        for &(i, j, w) in &self.pairs {
            total += w * self.value(state, i) * self.value(state, j);
        }
        total
    }

    /// Energy change from flipping variable `i` in `state`.
    fn flip_delta(&self, state: u64, i: usize) -> i128 {
        let mut field = self.linear[i];
        for &(j, w) in &self.adjacency[i] {
            field += w * self.value(state, j);
        }
        let step = match self.var_type {
            VarType::Binary => 1 - 2 * self.value(state, i),
            VarType::Spin => -2 * self.value(state, i),
        };
        step * field
    }

    fn energy_coeff(&self, scaled: i128) -> Coeff {
        let g = scaled.gcd(&self.denom).max(1);
        let numer =
            i64::try_from(scaled / g).expect("energy exceeds the 64-bit rational range");
        let denom =
            i64::try_from(self.denom / g).expect("energy exceeds the 64-bit rational range");
        Coeff::new(numer, denom)
    }

    fn assignment(&self, state: u64) -> Assignment {
        let values = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, self.value(state, i) as i64))
            .collect();
        Assignment::new(values)
    }

    /// Largest and smallest-nonzero coefficient magnitudes, in physical
    /// (unscaled) units.
    fn magnitude_range(&self) -> Option<(f64, f64)> {
        let mut max: Option<i128> = None;
        let mut min: Option<i128> = None;
        for w in self
            .linear
            .iter()
            .copied()
            .chain(self.pairs.iter().map(|&(_, _, w)| w))
        {
            let m = w.abs();
            if m == 0 {
                continue;
            }
            max = Some(max.map_or(m, |x: i128| x.max(m)));
            min = Some(min.map_or(m, |x: i128| x.min(m)));
        }
        let d = self.denom as f64;
        Some((max? as f64 / d, min? as f64 / d))
    }
}

fn finish(samples: Vec<Sample>, metadata: SolveMetadata) -> SampleSet {
    let mut samples = samples;
    samples.sort_by(|a, b| {
        a.energy
            .cmp(&b.energy)
            .then_with(|| a.assignment.cmp(&b.assignment))
    });
    SampleSet { samples, metadata }
}

/// Enumerate all assignments along a Gray-code walk (one flip per step,
/// constant-time energy updates) and return every minimum-energy
/// assignment.
pub fn brute_force(net: &BinaryQuadraticNet) -> Result<SampleSet, SolverError> {
    brute_force_capped(net, BRUTE_FORCE_CAP)
}

pub fn brute_force_capped(
    net: &BinaryQuadraticNet,
    cap: usize,
) -> Result<SampleSet, SolverError> {
    let scaled = ScaledNet::new(net);
    let n = scaled.vars.len();
    if n > cap.min(63) {
        return Err(SolverError::TooManyVariables {
            count: n,
            cap: cap.min(63),
        });
    }
    let mut state: u64 = 0;
    let mut energy = scaled.eval(0);
    let mut best = energy;
    let mut minima = vec![0u64];
    for k in 1..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        energy += scaled.flip_delta(state, i);
        state ^= 1 << i;
        if energy < best {
            best = energy;
            minima.clear();
            minima.push(state);
        } else if energy == best {
            minima.push(state);
        }
    }
    let samples = minima
        .into_iter()
        .map(|s| Sample {
            assignment: scaled.assignment(s),
            energy: scaled.energy_coeff(best),
            occurrences: 1,
        })
        .collect();
    let metadata = SolveMetadata {
        solver: "brute-force".into(),
        variables: n,
        seed: None,
        sweeps: None,
        reads: None,
        t_hot: None,
        t_cold: None,
    };
    Ok(finish(samples, metadata))
}

/// Single-flip Metropolis annealing on a geometric temperature ramp.
/// Each read runs on its own deterministic stream and reports the best
/// state it visited; identical configs give identical sample sets.
pub fn simulated_annealing(net: &BinaryQuadraticNet, config: &AnnealConfig) -> SampleSet {
    let scaled = ScaledNet::new(net);
    let n = scaled.vars.len();
    let (default_hot, default_cold) = match scaled.magnitude_range() {
        Some((max, min)) => (max.max(1e-9), (0.01 * min).max(1e-12)),
        None => (1.0, 1e-3),
    };
    let t_hot = config.t_hot.unwrap_or(default_hot);
    let t_cold = config.t_cold.unwrap_or(default_cold).min(t_hot);
    let sweeps = config.sweeps.max(1);
    let reads = config.reads.max(1);
    let ratio = t_cold / t_hot;

    let mut found: BTreeMap<u64, u32> = BTreeMap::new();
    for read in 0..reads {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(read as u64));
        let mask = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
        let mut state = rng.gen::<u64>() & mask;
        let mut energy = scaled.eval(state);
        let mut best_state = state;
        let mut best_energy = energy;
        for sweep in 0..sweeps {
            let progress = if sweeps > 1 {
                sweep as f64 / (sweeps - 1) as f64
            } else {
                1.0
            };
            let t = t_hot * ratio.powf(progress);
            for i in 0..n {
                let delta = scaled.flip_delta(state, i);
                let accept = delta <= 0 || {
                    let physical = delta as f64 / scaled.denom as f64;
                    rng.gen::<f64>() < (-physical / t).exp()
                };
                if accept {
                    state ^= 1 << i;
                    energy += delta;
                    if energy < best_energy {
                        best_energy = energy;
                        best_state = state;
                    }
                }
            }
        }
        *found.entry(best_state).or_insert(0) += 1;
    }

    let samples = found
        .into_iter()
        .map(|(state, occurrences)| Sample {
            assignment: scaled.assignment(state),
            energy: scaled.energy_coeff(scaled.eval(state)),
            occurrences,
        })
        .collect();
    let metadata = SolveMetadata {
        solver: "simulated-annealing".into(),
        variables: n,
        seed: Some(config.seed),
        sweeps: Some(sweeps),
        reads: Some(reads),
        t_hot: Some(t_hot),
        t_cold: Some(t_cold),
    };
    finish(samples, metadata)
}

/// Exhaustive search when the net fits under the cap, annealing
/// otherwise.
pub fn solve_auto(
    net: &BinaryQuadraticNet,
    config: &SolveConfig,
) -> Result<SampleSet, SolverError> {
    if net.num_places() <= config.brute_cap().min(63) {
        brute_force_capped(net, config.brute_cap())
    } else {
        Ok(simulated_annealing(net, &config.anneal))
    }
}

/// A problem-domain reading of an assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    VertexSet(Vec<usize>),
    Partition { left: Vec<usize>, right: Vec<usize> },
    Tour(Vec<usize>),
    Schedule(Schedule),
}

impl fmt::Display for Decoded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decoded::VertexSet(vs) => {
                write!(f, "cover of {} vertices {{", vs.len())?;
                for (i, v) in vs.iter().enumerate() {
                    write!(f, "{}{v}", if i > 0 { ", " } else { "" })?;
                }
                write!(f, "}}")
            }
            Decoded::Partition { left, right } => {
                write!(f, "partition {left:?} / {right:?}")
            }
            Decoded::Tour(cities) => {
                write!(f, "tour ")?;
                for (i, c) in cities.iter().enumerate() {
                    write!(f, "{}{c}", if i > 0 { " -> " } else { "" })?;
                }
                Ok(())
            }
            Decoded::Schedule(s) => {
                write!(f, "schedule")?;
                for &(t, k) in s.entries() {
                    write!(f, " t{t}@{k}")?;
                }
                Ok(())
            }
        }
    }
}

fn read_value(
    assignment: &Assignment,
    var: VarId,
    expected: VarType,
) -> Result<i64, DecodeError> {
    let value = assignment
        .get(&var)
        .ok_or(DecodeError::MissingVariable(var))?;
    let ok = match expected {
        VarType::Binary => value == 0 || value == 1,
        VarType::Spin => value == -1 || value == 1,
    };
    if ok {
        Ok(value)
    } else {
        Err(DecodeError::BadValue {
            var,
            value,
            expected,
        })
    }
}

/// Read an assignment back as a problem solution, reporting the first
/// violated selection constraint if it is not decodable. Values are read
/// in the model's current domain, so decoding works on converted models
/// too: "selected" is value 1 in either domain.
pub fn decode(model: &CompiledModel, assignment: &Assignment) -> Result<Decoded, DecodeError> {
    let domain = model.bqn.var_type;
    match &model.hints {
        DecodeHints::VertexCover { graph, .. } => {
            let mut cover = Vec::new();
            for v in 0..graph.n {
                if read_value(assignment, VarId::marking(v as u32, 0), domain)? == 1 {
                    cover.push(v);
                }
            }
            Ok(Decoded::VertexSet(cover))
        }
        DecodeHints::Partition { graph, .. } => {
            let mut left = Vec::new();
            let mut right = Vec::new();
            for v in 0..graph.n {
                match read_value(assignment, VarId::marking(v as u32, 0), domain)? {
                    1 => left.push(v),
                    _ => right.push(v),
                }
            }
            Ok(Decoded::Partition { left, right })
        }
        DecodeHints::Tsp {
            distances,
            clamp_start,
            ..
        } => {
            let n = distances.len();
            let mut tour = Vec::with_capacity(n);
            for k in 0..n {
                let mut cities = Vec::new();
                for i in 0..n {
                    let value = if *clamp_start && i == 0 && k == 0 {
                        1
                    } else {
                        read_value(assignment, VarId::marking(i as u32, k as u32), domain)?
                    };
                    if value == 1 {
                        cities.push(i);
                    }
                }
                if cities.len() != 1 {
                    return Err(DecodeError::OneHotViolation {
                        group: format!("step {k}"),
                        count: cities.len(),
                    });
                }
                tour.push(cities[0]);
            }
            for i in 0..n {
                let count = tour.iter().filter(|&&c| c == i).count();
                if count != 1 {
                    return Err(DecodeError::OneHotViolation {
                        group: format!("city {i}"),
                        count,
                    });
                }
            }
            Ok(Decoded::Tour(tour))
        }
        DecodeHints::JobShop { instance, .. } => {
            let horizon = instance.max_time;
            let mut entries = Vec::new();
            for t in 0..instance.task_count() {
                let mut starts = Vec::new();
                for k in 0..=horizon {
                    if read_value(assignment, VarId::firing(t as u32, k), domain)? == 1 {
                        starts.push(k);
                    }
                }
                if starts.len() != 1 {
                    return Err(DecodeError::OneHotViolation {
                        group: format!("task {t} start time"),
                        count: starts.len(),
                    });
                }
                entries.push((t, starts[0]));
            }
            Ok(Decoded::Schedule(Schedule::new(entries, horizon)?))
        }
        DecodeHints::Custom { description } => Err(DecodeError::NoDecoder(description.clone())),
    }
}

/// Energy of one penalty component at an assignment, before and after
/// its scale factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentReport {
    pub name: String,
    pub raw: Coeff,
    pub scaled: Coeff,
    pub role: ComponentRole,
}

/// Token-game replay outcome for models that carry a net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationVerdict {
    pub feasible: bool,
    pub failure: Option<SimulationFailure>,
}

/// Everything `verify` can say about one assignment: total energy, each
/// component's share, the decode outcome, and (for scheduling models)
/// whether the decoded schedule replays through the token game.
#[derive(Debug)]
pub struct VerifyReport {
    pub energy: Coeff,
    pub components: Vec<ComponentReport>,
    pub decoded: Result<Decoded, DecodeError>,
    pub simulation: Option<SimulationVerdict>,
}

impl VerifyReport {
    /// True when every constraint component is zero, the assignment decodes
    /// (models without a problem-level decoder are exempt), and any decoded
    /// schedule replays through the token game.
    pub fn is_feasible(&self) -> bool {
        let constraints_hold = self
            .components
            .iter()
            .filter(|c| c.role == ComponentRole::Constraint)
            .all(|c| c.raw == coeff::coeff(0));
        let decodes = match &self.decoded {
            Ok(_) | Err(DecodeError::NoDecoder(_)) => true,
            Err(_) => false,
        };
        constraints_hold && decodes && self.simulation.as_ref().is_none_or(|s| s.feasible)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "energy: {}", coeff::render(&self.energy))?;
        for c in &self.components {
            let tag = match c.role {
                ComponentRole::Constraint => "",
                ComponentRole::Cost => ", cost",
            };
            writeln!(
                f,
                "  {}: {} (scaled {}{})",
                c.name,
                coeff::render(&c.raw),
                coeff::render(&c.scaled),
                tag
            )?;
        }
        match &self.decoded {
            Ok(d) => writeln!(f, "decoded: {d}")?,
            Err(DecodeError::NoDecoder(_)) => {
                writeln!(f, "decoded: n/a (no problem-level decoder)")?
            }
            Err(e) => writeln!(f, "decode failed: {e}")?,
        }
        if let Some(sim) = &self.simulation {
            if sim.feasible {
                writeln!(f, "replay: feasible")?;
            } else if let Some(fail) = &sim.failure {
                writeln!(
                    f,
                    "replay: infeasible at time {} (place {} demanded {} with {} available)",
                    fail.time, fail.place, fail.demanded, fail.available
                )?;
            } else {
                writeln!(f, "replay: infeasible")?;
            }
        }
        Ok(())
    }
}

/// Evaluate an assignment against a compiled model: total and
/// per-component energies, decode, and token-game replay when the model
/// carries a net.
pub fn verify(model: &CompiledModel, assignment: &Assignment) -> Result<VerifyReport, BqnError> {
    let energy = model.bqn.energy(assignment)?;
    let mut components = Vec::new();
    for c in &model.components {
        let raw = c.expr.eval(&assignment.values).map_err(|e| match e {
            ExprError::MissingVariable(v) => BqnError::MissingVariable(v),
        })?;
        components.push(ComponentReport {
            name: c.name.clone(),
            raw,
            scaled: raw * c.scale,
            role: c.role,
        });
    }
    let decoded = decode(model, assignment);
    let simulation = match (&decoded, &model.petri) {
        (Ok(Decoded::Schedule(schedule)), Some(net)) => {
            let sim = petri::simulate_schedule(net, schedule)
                .expect("decoded schedules stay within the model horizon");
            Some(SimulationVerdict {
                feasible: sim.feasible,
                failure: sim.failure,
            })
        }
        _ => None,
    };
    Ok(VerifyReport {
        energy,
        components,
        decoded,
        simulation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bqn::enumerate_assignments;
    use crate::coeff::{coeff, ratio};
    use crate::problems::{
        graph_partitioning_model, job_shop_model, tsp_model, vertex_cover_model, Graph,
        JobShopInstance, Task,
    };

    /// Deterministic net with mixed rational weights; not structured, so
    /// it exercises the solvers without a known closed form.
    fn scrambled_net(n: u32, spin: bool) -> BinaryQuadraticNet {
        let var_type = if spin { VarType::Spin } else { VarType::Binary };
        let mut net = BinaryQuadraticNet::new(var_type);
        net.offset = ratio(1, 3);
        for i in 0..n {
            let w = ratio((i as i64 * 7) % 11 - 5, 1 + (i as i64 % 3));
            net.add_place_weight(VarId::marking(i, 0), w);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (i * 31 + j * 17) % 4 == 0 {
                    let w = ratio((i as i64 * 13 + j as i64 * 5) % 9 - 4, 2);
                    net.add_transition_weight(VarId::marking(i, 0), VarId::marking(j, 0), w);
                }
            }
        }
        net
    }

    fn exhaustive_min(net: &BinaryQuadraticNet) -> (Coeff, usize) {
        let vars = net.vars();
        let mut best: Option<Coeff> = None;
        let mut count = 0;
        for a in enumerate_assignments(&vars, net.var_type) {
            let e = net.energy(&a).unwrap();
            match &best {
                Some(b) if e > *b => {}
                Some(b) if e == *b => count += 1,
                _ => {
                    best = Some(e);
                    count = 1;
                }
            }
        }
        (best.unwrap(), count)
    }

    #[test]
    fn gray_walk_matches_direct_evaluation() {
        for spin in [false, true] {
            let net = scrambled_net(10, spin);
            let found = brute_force(&net).unwrap();
            let (want, ties) = exhaustive_min(&net);
            assert_eq!(found.min_energy(), Some(want));
            assert_eq!(found.samples.len(), ties);
            for s in &found.samples {
                assert_eq!(net.energy(&s.assignment).unwrap(), s.energy);
            }
        }
    }

    #[test]
    fn brute_force_returns_every_ground_state() {
        let g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let model = vertex_cover_model(&g, coeff(2), coeff(1)).unwrap();
        let found = brute_force(&model.bqn).unwrap();
        assert_eq!(found.min_energy(), Some(coeff(2)));
        assert_eq!(found.samples.len(), 3);
        let covers: Vec<Vec<usize>> = found
            .samples
            .iter()
            .map(|s| match decode(&model, &s.assignment).unwrap() {
                Decoded::VertexSet(vs) => vs,
                other => panic!("unexpected decode {other}"),
            })
            .collect();
        // Sample order follows assignment values, lowest bits first.
        assert_eq!(covers, vec![vec![1, 2], vec![0, 2], vec![0, 1]]);
    }

    #[test]
    fn brute_force_handles_the_empty_net() {
        let mut net = BinaryQuadraticNet::new(VarType::Binary);
        net.offset = ratio(5, 2);
        let found = brute_force(&net).unwrap();
        assert_eq!(found.samples.len(), 1);
        assert_eq!(found.min_energy(), Some(ratio(5, 2)));
        assert!(found.samples[0].assignment.values.is_empty());
    }

    #[test]
    fn brute_force_respects_the_cap() {
        let mut net = BinaryQuadraticNet::new(VarType::Binary);
        for i in 0..25 {
            net.add_place_weight(VarId::marking(i, 0), coeff(1 + i as i64));
        }
        assert_eq!(
            brute_force(&net),
            Err(SolverError::TooManyVariables { count: 25, cap: 24 })
        );
        let raised = brute_force_capped(&net, 25).unwrap();
        assert_eq!(raised.min_energy(), Some(coeff(0)));
        assert_eq!(raised.samples.len(), 1);
    }

    #[test]
    fn annealing_is_deterministic_and_never_beats_exhaustive() {
        for seed in [1u64, 7, 99] {
            let net = scrambled_net(12, false);
            let config = AnnealConfig {
                seed,
                sweeps: 200,
                reads: 8,
                ..AnnealConfig::default()
            };
            let a = simulated_annealing(&net, &config);
            let b = simulated_annealing(&net, &config);
            assert_eq!(a, b);
            let exact = brute_force(&net).unwrap();
            assert!(a.min_energy().unwrap() >= exact.min_energy().unwrap());
            for s in &a.samples {
                assert_eq!(net.energy(&s.assignment).unwrap(), s.energy);
            }
        }
    }

    #[test]
    fn annealing_finds_the_small_cover() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let model = vertex_cover_model(&g, coeff(2), coeff(1)).unwrap();
        let found = simulated_annealing(&model.bqn, &AnnealConfig::default());
        assert_eq!(found.min_energy(), Some(coeff(1)));
        assert_eq!(found.metadata.solver, "simulated-annealing");
        let total: u32 = found.samples.iter().map(|s| s.occurrences).sum();
        assert_eq!(total, 32);
    }

    #[test]
    fn annealing_handles_spin_nets() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let model = graph_partitioning_model(&g, coeff(4), coeff(1)).unwrap();
        let found = simulated_annealing(&model.bqn, &AnnealConfig::default());
        assert_eq!(found.min_energy(), Some(coeff(2)));
        for s in &found.samples {
            for v in s.assignment.values.values() {
                assert!(*v == 1 || *v == -1);
            }
        }
    }

    #[test]
    fn auto_solver_switches_on_size() {
        let small = scrambled_net(4, false);
        let found = solve_auto(&small, &SolveConfig::default()).unwrap();
        assert_eq!(found.metadata.solver, "brute-force");
        let config = SolveConfig {
            brute_cap: Some(3),
            ..SolveConfig::default()
        };
        let found = solve_auto(&small, &config).unwrap();
        assert_eq!(found.metadata.solver, "simulated-annealing");
    }

    #[test]
    fn tour_decode_round_trip() {
        let d = vec![
            vec![coeff(0), coeff(1), coeff(4)],
            vec![coeff(1), coeff(0), coeff(2)],
            vec![coeff(4), coeff(2), coeff(0)],
        ];
        let model = tsp_model(&d, coeff(10), coeff(10), coeff(1), false).unwrap();
        let found = brute_force(&model.bqn).unwrap();
        for s in &found.samples {
            match decode(&model, &s.assignment).unwrap() {
                Decoded::Tour(t) => assert_eq!(t.len(), 3),
                other => panic!("unexpected decode {other}"),
            }
        }
    }

    #[test]
    fn clamped_tour_decodes_with_the_pinned_city() {
        let d = vec![
            vec![coeff(0), coeff(1), coeff(4)],
            vec![coeff(1), coeff(0), coeff(2)],
            vec![coeff(4), coeff(2), coeff(0)],
        ];
        let model = tsp_model(&d, coeff(10), coeff(10), coeff(1), true).unwrap();
        let best = brute_force(&model.bqn).unwrap();
        let tour = match decode(&model, &best.samples[0].assignment).unwrap() {
            Decoded::Tour(t) => t,
            other => panic!("unexpected decode {other}"),
        };
        assert_eq!(tour[0], 0);
    }

    #[test]
    fn overfilled_step_reports_the_violated_group() {
        let d = vec![vec![coeff(0), coeff(1)], vec![coeff(1), coeff(0)]];
        let model = tsp_model(&d, coeff(10), coeff(10), coeff(1), false).unwrap();
        let bad = Assignment::from_pairs(&[
            (VarId::marking(0, 0), 1),
            (VarId::marking(1, 0), 1),
            (VarId::marking(0, 1), 0),
            (VarId::marking(1, 1), 0),
        ]);
        assert_eq!(
            decode(&model, &bad),
            Err(DecodeError::OneHotViolation {
                group: "step 0".into(),
                count: 2
            })
        );
    }

    #[test]
    fn decode_rejects_out_of_domain_values() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        let model = vertex_cover_model(&g, coeff(2), coeff(1)).unwrap();
        let bad = Assignment::from_pairs(&[
            (VarId::marking(0, 0), 2),
            (VarId::marking(1, 0), 0),
        ]);
        assert!(matches!(
            decode(&model, &bad),
            Err(DecodeError::BadValue { value: 2, .. })
        ));
        let missing = Assignment::from_pairs(&[(VarId::marking(0, 0), 1)]);
        assert!(matches!(
            decode(&model, &missing),
            Err(DecodeError::MissingVariable(_))
        ));
    }

    fn shared_machine_instance() -> JobShopInstance {
        JobShopInstance {
            jobs: vec![
                vec![Task {
                    resource: "m0".into(),
                    duration: 1,
                }],
                vec![Task {
                    resource: "m0".into(),
                    duration: 2,
                }],
            ],
            resources: vec!["m0".into()],
            max_time: 3,
        }
    }

    #[test]
    fn zero_energy_schedule_replays_feasibly() {
        let model =
            job_shop_model(&shared_machine_instance(), coeff(1), coeff(1), coeff(1)).unwrap();
        let found = brute_force(&model.bqn).unwrap();
        assert_eq!(found.min_energy(), Some(coeff(0)));
        for s in &found.samples {
            let report = verify(&model, &s.assignment).unwrap();
            assert!(report.is_feasible(), "{report}");
            assert_eq!(report.energy, coeff(0));
        }
    }

    #[test]
    fn conflicting_schedule_decodes_but_fails_replay() {
        let model =
            job_shop_model(&shared_machine_instance(), coeff(1), coeff(1), coeff(1)).unwrap();
        // Both tasks start at 0 on the one machine.
        let mut pairs = Vec::new();
        for t in 0..2u32 {
            for k in 0..=3u32 {
                pairs.push((VarId::firing(t, k), if k == 0 { 1 } else { 0 }));
            }
        }
        let both_at_zero = Assignment::from_pairs(&pairs);
        let report = verify(&model, &both_at_zero).unwrap();
        assert!(matches!(report.decoded, Ok(Decoded::Schedule(_))));
        assert!(!report.is_feasible());
        assert!(report.energy > coeff(0));
        let sim = report.simulation.unwrap();
        assert!(!sim.feasible);
        assert_eq!(sim.failure.unwrap().time, 0);
    }

    #[test]
    fn verify_reports_component_energies() {
        let d = vec![
            vec![coeff(0), coeff(1), coeff(4)],
            vec![coeff(1), coeff(0), coeff(2)],
            vec![coeff(4), coeff(2), coeff(0)],
        ];
        let model = tsp_model(&d, coeff(10), coeff(10), coeff(1), false).unwrap();
        let best = brute_force(&model.bqn).unwrap();
        let report = verify(&model, &best.samples[0].assignment).unwrap();
        assert_eq!(report.energy, coeff(7));
        assert_eq!(report.components.len(), 3);
        assert_eq!(report.components[0].raw, coeff(0));
        assert_eq!(report.components[1].raw, coeff(0));
        assert_eq!(report.components[2].raw, coeff(7));
        let text = report.to_string();
        assert!(text.contains("energy: 7"));
        assert!(text.contains("tour-length: 7 (scaled 7, cost)"));
    }

    #[test]
    fn sample_sets_serialize_round_trip() {
        let net = scrambled_net(5, false);
        let found = brute_force(&net).unwrap();
        let json = serde_json::to_string(&found).unwrap();
        let back: SampleSet = serde_json::from_str(&json).unwrap();
        assert_eq!(found, back);
    }
}
