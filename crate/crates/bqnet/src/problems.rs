//! Problem front-ends: compile vertex cover, graph partitioning, TSP, and
//! job-shop scheduling instances into binary quadratic nets, with decode
//! hints describing what each variable means and the raw penalty
//! components kept for verification.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bqn::{self, BinaryQuadraticNet, BqnError};
use crate::coeff::{coeff, serde_coeff, serde_coeff_matrix, Coeff};
use crate::constructions::{
    conflict_penalty, exactly_once, firing_variables, one_hot, precedence_penalty, ConflictSet,
    ConstructionError, FiringSemantics, FiringVariableFamily, MarkingMode, MarkingVariableFamily,
};
use crate::expr::{LinExpr, QuadExpr, VarId, VarType};
use crate::petri::{
    self, build_net, Arc, NetSpec, PetriError, PetriNet, Place, Schedule, Transition,
};
use crate::solver::{solve_auto, SolveConfig, SolverError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} outside 0..{n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("scale factor {name} must be positive")]
    NonPositiveScale { name: String },
    #[error("graph partitioning needs an even vertex count, got {0}")]
    OddVertexCount(usize),
    #[error("distance matrix row {row} has {got} entries, expected {expected}")]
    NonSquareMatrix {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("distance ({i}, {j}) is negative")]
    NegativeDistance { i: usize, j: usize },
    #[error("a tour needs at least 2 cities, got {0}")]
    TooFewCities(usize),
    #[error("job {job} task {task} uses unknown resource `{resource}`")]
    UnknownResource {
        job: usize,
        task: usize,
        resource: String,
    },
    #[error("job {job} task {task} has zero duration")]
    ZeroDuration { job: usize, task: usize },
    #[error("duplicate resource id `{0}`")]
    DuplicateResource(String),
    #[error("MaxTime must be at least 1")]
    ZeroMaxTime,
    #[error("no feasible schedule found even at the serialization bound {0}")]
    InfeasibleAtUpperBound(u32),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Petri(#[from] PetriError),
    #[error(transparent)]
    Bqn(#[from] BqnError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Decode(#[from] crate::solver::DecodeError),
}

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validate and normalize: endpoints in range, no self-loops, no
    /// duplicates, each edge stored lower-vertex first.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, ProblemError> {
        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u == v {
                return Err(ProblemError::SelfLoop(u));
            }
            for w in [u, v] {
                if w >= n {
                    return Err(ProblemError::VertexOutOfRange { vertex: w, n });
                }
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(ProblemError::DuplicateEdge(e.0, e.1));
            }
            normalized.push(e);
        }
        normalized.sort_unstable();
        Ok(Graph {
            n,
            edges: normalized,
        })
    }
}

/// One task of a job: which resource it occupies and for how long.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub resource: String,
    pub duration: u32,
}

/// Jobs as task sequences over shared resources, with a deadline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobShopInstance {
    pub jobs: Vec<Vec<Task>>,
    pub resources: Vec<String>,
    pub max_time: u32,
}

impl JobShopInstance {
    pub fn validate(&self) -> Result<(), ProblemError> {
        let mut seen = BTreeSet::new();
        for r in &self.resources {
            if !seen.insert(r.clone()) {
                return Err(ProblemError::DuplicateResource(r.clone()));
            }
        }
        for (j, job) in self.jobs.iter().enumerate() {
            for (t, task) in job.iter().enumerate() {
                if task.duration == 0 {
                    return Err(ProblemError::ZeroDuration { job: j, task: t });
                }
                if !seen.contains(&task.resource) {
                    return Err(ProblemError::UnknownResource {
                        job: j,
                        task: t,
                        resource: task.resource.clone(),
                    });
                }
            }
        }
        if self.max_time == 0 {
            return Err(ProblemError::ZeroMaxTime);
        }
        Ok(())
    }

    pub fn task_count(&self) -> usize {
        self.jobs.iter().map(Vec::len).sum()
    }

    /// Longest single-job duration sum: a lower bound on any makespan.
    pub fn max_job_duration(&self) -> u32 {
        self.jobs
            .iter()
            .map(|job| job.iter().map(|t| t.duration).sum())
            .max()
            .unwrap_or(0)
    }

    /// Total duration over all tasks: serializing everything meets it.
    pub fn total_duration(&self) -> u32 {
        self.jobs
            .iter()
            .flat_map(|job| job.iter().map(|t| t.duration))
            .sum()
    }
}

/// Whether a model component encodes a hard constraint (must be zero on
/// feasible solutions) or an objective cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentRole {
    Constraint,
    Cost,
}

/// One weighted penalty or cost term of a compiled model. The stored
/// expression is unscaled; the model energy sums `scale * expr`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub scale: Coeff,
    pub expr: QuadExpr,
    pub role: ComponentRole,
}

/// What the variables of a compiled model mean, with enough of the source
/// instance to rebuild the model for verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "kebab-case")]
pub enum DecodeHints {
    VertexCover {
        graph: Graph,
        #[serde(with = "serde_coeff")]
        a: Coeff,
        #[serde(with = "serde_coeff")]
        b: Coeff,
    },
    Partition {
        graph: Graph,
        #[serde(with = "serde_coeff")]
        a: Coeff,
        #[serde(with = "serde_coeff")]
        b: Coeff,
    },
    Tsp {
        #[serde(with = "serde_coeff_matrix")]
        distances: Vec<Vec<Coeff>>,
        #[serde(with = "serde_coeff")]
        a: Coeff,
        #[serde(with = "serde_coeff")]
        b: Coeff,
        #[serde(with = "serde_coeff")]
        c: Coeff,
        clamp_start: bool,
    },
    JobShop {
        instance: JobShopInstance,
        #[serde(with = "serde_coeff")]
        a: Coeff,
        #[serde(with = "serde_coeff")]
        b: Coeff,
        #[serde(with = "serde_coeff")]
        c: Coeff,
    },
    /// Compiled from a net and construction config; variables keep their
    /// family meaning but no problem-level decoder applies.
    Custom { description: String },
}

impl DecodeHints {
    pub fn describe(&self) -> String {
        match self {
            DecodeHints::VertexCover { graph, .. } => format!(
                "vertex cover: m[v][0] = 1 puts vertex v (of {}) in the cover",
                graph.n
            ),
            DecodeHints::Partition { graph, .. } => format!(
                "graph partitioning: m[v][0] = +1/-1 assigns vertex v (of {}) a side",
                graph.n
            ),
            DecodeHints::Tsp { distances, .. } => format!(
                "tsp: m[i][k] = 1 visits city i (of {}) at step k",
                distances.len()
            ),
            DecodeHints::JobShop { instance, .. } => format!(
                "job shop: x[t][k] = 1 starts task t (of {}) at time k <= {}",
                instance.task_count(),
                instance.max_time
            ),
            DecodeHints::Custom { description } => description.clone(),
        }
    }
}

/// A problem compiled to a binary quadratic net, keeping the penalty
/// components and (for firing-based models) the problem-domain net.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub bqn: BinaryQuadraticNet,
    pub components: Vec<Component>,
    pub petri: Option<PetriNet>,
    pub hints: DecodeHints,
}

impl CompiledModel {
    /// Re-express the model over the other variable domain. Energies are
    /// unchanged at corresponding assignments, for the total as well as
    /// for every component.
    pub fn with_var_type(&self, target: VarType) -> CompiledModel {
        let components = self
            .components
            .iter()
            .map(|c| Component {
                name: c.name.clone(),
                scale: c.scale,
                expr: bqn::convert(&bqn::lower(&c.expr), target).to_expr(),
                role: c.role,
            })
            .collect();
        CompiledModel {
            bqn: bqn::convert(&self.bqn, target),
            components,
            petri: self.petri.clone(),
            hints: self.hints.clone(),
        }
    }
}

fn require_positive(name: &str, value: Coeff) -> Result<(), ProblemError> {
    if value <= Coeff::zero() {
        return Err(ProblemError::NonPositiveScale {
            name: name.to_string(),
        });
    }
    Ok(())
}

/// Superpose scaled components into one net and register the full
/// variable grid (variables may have zero net weight).
pub(crate) fn assemble(
    var_type: VarType,
    components: &[Component],
    all_vars: impl IntoIterator<Item = VarId>,
) -> BinaryQuadraticNet {
    let mut total = BinaryQuadraticNet::new(var_type);
    for c in components {
        let net = bqn::scale(&bqn::lower(&c.expr), c.scale);
        total = bqn::compose(&total, &net).expect("components share one domain");
    }
    for v in all_vars {
        total.ensure_place(v);
    }
    total
}

fn vertex_var(v: usize) -> VarId {
    VarId::marking(v as u32, 0)
}

/// Compile minimum vertex cover: binary variable per vertex, penalty `a`
/// per uncovered edge, cost `b` per chosen vertex. Any `a > b > 0` makes
/// ground states exactly the minimum covers.
pub fn vertex_cover_model(
    graph: &Graph,
    a: Coeff,
    b: Coeff,
) -> Result<CompiledModel, ProblemError> {
    require_positive("A", a)?;
    require_positive("B", b)?;
    let mut uncovered = QuadExpr::zero(VarType::Binary);
    for &(u, v) in &graph.edges {
        let mut lu = LinExpr::constant(coeff(1));
        lu.add_term(vertex_var(u), coeff(-1));
        let mut lv = LinExpr::constant(coeff(1));
        lv.add_term(vertex_var(v), coeff(-1));
        uncovered.add_assign(&lu.multiply(&lv, VarType::Binary));
    }
    let mut size = QuadExpr::zero(VarType::Binary);
    for v in 0..graph.n {
        size.add_linear(vertex_var(v), coeff(1));
    }
    let components = vec![
        Component {
            name: "uncovered-edges".into(),
            scale: a,
            expr: uncovered,
            role: ComponentRole::Constraint,
        },
        Component {
            name: "cover-size".into(),
            scale: b,
            expr: size,
            role: ComponentRole::Cost,
        },
    ];
    let bqn = assemble(
        VarType::Binary,
        &components,
        (0..graph.n).map(vertex_var),
    );
    Ok(CompiledModel {
        bqn,
        components,
        petri: None,
        hints: DecodeHints::VertexCover {
            graph: graph.clone(),
            a,
            b,
        },
    })
}

/// Compile balanced graph partitioning: spin variable per vertex,
/// imbalance penalty `a * (sum s)^2`, cut cost `b` per cut edge
/// (via the disagree interaction `(1 - s_u s_v) / 2`).
pub fn graph_partitioning_model(
    graph: &Graph,
    a: Coeff,
    b: Coeff,
) -> Result<CompiledModel, ProblemError> {
    if !graph.n.is_multiple_of(2) {
        return Err(ProblemError::OddVertexCount(graph.n));
    }
    require_positive("A", a)?;
    require_positive("B", b)?;
    let mut spin_sum = LinExpr::zero();
    for v in 0..graph.n {
        spin_sum.add_term(vertex_var(v), coeff(1));
    }
    let imbalance = spin_sum.squared(VarType::Spin);
    let mut cut = QuadExpr::zero(VarType::Spin);
    for &(u, v) in &graph.edges {
        let disagree =
            bqn::primitive(6, VarType::Spin, vertex_var(u), vertex_var(v)).expect("distinct vars");
        cut.add_assign(&disagree);
    }
    let components = vec![
        Component {
            name: "imbalance".into(),
            scale: a,
            expr: imbalance,
            role: ComponentRole::Constraint,
        },
        Component {
            name: "cut-size".into(),
            scale: b,
            expr: cut,
            role: ComponentRole::Cost,
        },
    ];
    let bqn = assemble(VarType::Spin, &components, (0..graph.n).map(vertex_var));
    Ok(CompiledModel {
        bqn,
        components,
        petri: None,
        hints: DecodeHints::Partition {
            graph: graph.clone(),
            a,
            b,
        },
    })
}

/// Compile a traveling-salesman tour: `m[i][k] = 1` visits city `i` at
/// step `k`, with one-hot families per city and per step, and the cyclic
/// tour length as cost. `clamp_start` pins city 0 to step 0 by variable
/// elimination.
pub fn tsp_model(
    distances: &[Vec<Coeff>],
    a: Coeff,
    b: Coeff,
    c: Coeff,
    clamp_start: bool,
) -> Result<CompiledModel, ProblemError> {
    let n = distances.len();
    if n < 2 {
        return Err(ProblemError::TooFewCities(n));
    }
    for (row, entries) in distances.iter().enumerate() {
        if entries.len() != n {
            return Err(ProblemError::NonSquareMatrix {
                row,
                got: entries.len(),
                expected: n,
            });
        }
        for (col, d) in entries.iter().enumerate() {
            if *d < Coeff::zero() {
                return Err(ProblemError::NegativeDistance { i: row, j: col });
            }
        }
    }
    require_positive("A", a)?;
    require_positive("B", b)?;
    require_positive("C", c)?;

    let family = MarkingVariableFamily::new(n, (n - 1) as u32, MarkingMode::SingleToken);
    let city_at = |i: usize, k: usize| VarId::marking(i as u32, k as u32);

    let mut visited_once = QuadExpr::zero(VarType::Binary);
    for i in 0..n {
        let group: Vec<VarId> = (0..n).map(|k| city_at(i, k)).collect();
        visited_once.add_assign(&one_hot(&group)?);
    }
    let mut one_city_per_step = QuadExpr::zero(VarType::Binary);
    for k in 0..n {
        let group: Vec<VarId> = (0..n).map(|i| city_at(i, k)).collect();
        one_city_per_step.add_assign(&one_hot(&group)?);
    }
    let mut tour_length = QuadExpr::zero(VarType::Binary);
    for (i, row) in distances.iter().enumerate() {
        for (j, &leg) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            for k in 0..n {
                tour_length.add_quadratic(city_at(i, k), city_at(j, (k + 1) % n), leg);
            }
        }
    }

    let mut components = vec![
        Component {
            name: "city-visited-once".into(),
            scale: a,
            expr: visited_once,
            role: ComponentRole::Constraint,
        },
        Component {
            name: "one-city-per-step".into(),
            scale: b,
            expr: one_city_per_step,
            role: ComponentRole::Constraint,
        },
        Component {
            name: "tour-length".into(),
            scale: c,
            expr: tour_length,
            role: ComponentRole::Cost,
        },
    ];
    if clamp_start {
        for comp in &mut components {
            comp.expr = comp.expr.fix_var(city_at(0, 0), coeff(1));
        }
    }
    let grid = family
        .vars()
        .into_iter()
        .filter(|&v| !(clamp_start && v == city_at(0, 0)));
    let bqn = assemble(VarType::Binary, &components, grid);
    Ok(CompiledModel {
        bqn,
        components,
        petri: None,
        hints: DecodeHints::Tsp {
            distances: distances.to_vec(),
            a,
            b,
            c,
            clamp_start,
        },
    })
}

/// Build the timed net of a job-shop instance: a place/transition chain
/// per job (places `p0, p1, ...`, transitions `t0, t1, ...` numbered
/// job-major) plus one single-token resource place per resource id,
/// attached to its tasks by self-loop arcs.
pub fn job_shop_net(instance: &JobShopInstance) -> Result<PetriNet, ProblemError> {
    instance.validate()?;
    let mut spec = NetSpec::default();
    for r in &instance.resources {
        spec.places.push(Place::resource(r, 1));
    }
    let mut place = 0usize;
    let mut transition = 0usize;
    for job in &instance.jobs {
        let start = format!("p{place}");
        spec.places.push(Place::new(&start, 1));
        place += 1;
        let mut prev = start;
        for task in job {
            let t = format!("t{transition}");
            transition += 1;
            let next = format!("p{place}");
            place += 1;
            spec.transitions.push(Transition::new(&t, task.duration));
            spec.places.push(Place::new(&next, 0));
            spec.arcs.push(Arc::new(&prev, &t, 1));
            spec.arcs.push(Arc::new(&t, &next, 1));
            spec.arcs.push(Arc::new(&task.resource, &t, 1));
            spec.arcs.push(Arc::new(&t, &task.resource, 1));
            prev = next;
        }
    }
    Ok(build_net(spec)?)
}

/// Compile a job-shop instance over firing variables `x[t][k]`,
/// `k = 0..=MaxTime`: structural precedence (scale `a`), timed resource
/// conflicts (scale `b`), and exactly-once firing plus the completion
/// deadline (scale `c`). Minimum energy is zero iff a schedule finishing
/// by MaxTime exists.
pub fn job_shop_model(
    instance: &JobShopInstance,
    a: Coeff,
    b: Coeff,
    c: Coeff,
) -> Result<CompiledModel, ProblemError> {
    require_positive("A", a)?;
    require_positive("B", b)?;
    require_positive("C", c)?;
    let net = job_shop_net(instance)?;
    let horizon = instance.max_time;
    let (family, _) = firing_variables(&net, horizon, FiringSemantics::SingleServer);

    let prec = petri::precedence_pairs(&net);
    let precedence = precedence_penalty(&family, &prec, true)?;
    let conflicts = ConflictSet::Timed(petri::timed_conflict_set(&net, horizon));
    let conflict = conflict_penalty(&family, &conflicts)?;
    let all: Vec<usize> = (0..net.transition_count()).collect();
    let firings = exactly_once(&family, &all)?;
    let deadline = deadline_penalty(&family, horizon);

    let components = vec![
        Component {
            name: "precedence".into(),
            scale: a,
            expr: precedence,
            role: ComponentRole::Constraint,
        },
        Component {
            name: "resource-conflict".into(),
            scale: b,
            expr: conflict,
            role: ComponentRole::Constraint,
        },
        Component {
            name: "fire-exactly-once".into(),
            scale: c,
            expr: firings,
            role: ComponentRole::Constraint,
        },
        Component {
            name: "deadline".into(),
            scale: c,
            expr: deadline,
            role: ComponentRole::Constraint,
        },
    ];
    let bqn = assemble(VarType::Binary, &components, family.vars());
    Ok(CompiledModel {
        bqn,
        components,
        petri: Some(net),
        hints: DecodeHints::JobShop {
            instance: instance.clone(),
            a,
            b,
            c,
        },
    })
}

/// One penalty unit per firing that would complete after the horizon.
pub fn deadline_penalty(family: &FiringVariableFamily, horizon: u32) -> QuadExpr {
    let mut expr = QuadExpr::zero(VarType::Binary);
    for t in 0..family.transition_count() {
        let duration = family.duration(t);
        for k in 0..=horizon {
            if k + duration > horizon {
                expr.add_linear(family.firing_var(t, k), coeff(1));
            }
        }
    }
    expr
}

/// Result of the makespan search: the smallest deadline that admits a
/// feasible schedule, and one such schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MakespanResult {
    pub makespan: u32,
    pub schedule: Schedule,
}

/// Binary search the smallest MaxTime with a zero-energy, token-game
/// feasible schedule, between the longest job (lower bound) and full
/// serialization (upper bound).
pub fn job_shop_minimize_makespan(
    jobs: &[Vec<Task>],
    resources: &[String],
    a: Coeff,
    b: Coeff,
    c: Coeff,
    config: &SolveConfig,
) -> Result<MakespanResult, ProblemError> {
    let template = JobShopInstance {
        jobs: jobs.to_vec(),
        resources: resources.to_vec(),
        max_time: 1,
    };
    if template.task_count() == 0 {
        return Ok(MakespanResult {
            makespan: 0,
            schedule: Schedule::new(Vec::new(), 0)?,
        });
    }
    let lower = template.max_job_duration().max(1);
    let upper = template.total_duration().max(1);

    let probe = |max_time: u32| -> Result<Option<Schedule>, ProblemError> {
        let instance = JobShopInstance {
            max_time,
            ..template.clone()
        };
        let model = job_shop_model(&instance, a, b, c)?;
        let samples = solve_auto(&model.bqn, config)?;
        let best = match samples.samples.first() {
            Some(s) if s.energy.is_zero() => s,
            _ => return Ok(None),
        };
        let schedule = match crate::solver::decode(&model, &best.assignment)? {
            crate::solver::Decoded::Schedule(s) => s,
            _ => unreachable!("job-shop models decode to schedules"),
        };
        let net = model.petri.as_ref().expect("job-shop keeps its net");
        let sim = petri::simulate_schedule(net, &schedule)?;
        Ok(sim.feasible.then_some(schedule))
    };

    let mut found = match probe(upper)? {
        Some(s) => Some((upper, s)),
        None => return Err(ProblemError::InfeasibleAtUpperBound(upper)),
    };
    let (mut lo, mut hi) = (lower, upper);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match probe(mid)? {
            Some(s) => {
                found = Some((mid, s));
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let (makespan, schedule) = match found {
        Some((t, s)) if t == lo => (t, s),
        _ => {
            let s = probe(lo)?.expect("binary search kept a feasible bound");
            (lo, s)
        }
    };
    Ok(MakespanResult { makespan, schedule })
}
