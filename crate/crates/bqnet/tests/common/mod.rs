//! Oracles and instance generators shared by the integration suite.
//! Every oracle enumerates directly over the problem domain and never
//! touches the compilation or solving paths it is used to judge.
//!
//! Each test binary links its own copy and uses its own subset.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bqnet::bqn::BinaryQuadraticNet;
use bqnet::coeff::{coeff, ratio, Coeff};
use bqnet::expr::{VarId, VarType};
use bqnet::problems::{Graph, JobShopInstance, Task};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_coeff(r: &mut ChaCha8Rng, rational: bool) -> Coeff {
    let num = r.gen_range(-9..=9i64);
    let den = if rational { r.gen_range(1..=3i64) } else { 1 };
    ratio(num, den)
}

/// Random net over a subset of `pool`: most pool variables get a weight,
/// some are registered with weight zero, pairs appear with fixed density.
pub fn random_bqn(
    r: &mut ChaCha8Rng,
    pool: &[VarId],
    var_type: VarType,
    rational: bool,
) -> BinaryQuadraticNet {
    let mut net = BinaryQuadraticNet::new(var_type);
    net.offset = random_coeff(r, rational);
    for &v in pool {
        if r.gen_bool(0.8) {
            net.add_place_weight(v, random_coeff(r, rational));
        } else if r.gen_bool(0.5) {
            net.ensure_place(v);
        }
    }
    for i in 0..pool.len() {
        for j in (i + 1)..pool.len() {
            if r.gen_bool(0.3) {
                net.add_transition_weight(pool[i], pool[j], random_coeff(r, rational));
            }
        }
    }
    net
}

pub fn var_pool(n: usize) -> Vec<VarId> {
    (0..n as u32).map(|i| VarId::marking(i, 0)).collect()
}

pub fn random_graph(r: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if r.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).expect("generated edges are already normalized")
}

pub fn is_vertex_cover(graph: &Graph, mask: u64) -> bool {
    graph
        .edges
        .iter()
        .all(|&(u, v)| mask >> u & 1 == 1 || mask >> v & 1 == 1)
}

/// Minimum cover size and every cover attaining it, as vertex bitmasks.
pub fn min_vertex_covers(graph: &Graph) -> (u32, Vec<u64>) {
    let mut best = u32::MAX;
    let mut covers = Vec::new();
    for mask in 0..1u64 << graph.n {
        if !is_vertex_cover(graph, mask) {
            continue;
        }
        let size = mask.count_ones();
        if size < best {
            best = size;
            covers = vec![mask];
        } else if size == best {
            covers.push(mask);
        }
    }
    (best, covers)
}

/// Edges with endpoints on different sides of the vertex bitmask.
pub fn cut_size(graph: &Graph, mask: u64) -> usize {
    graph
        .edges
        .iter()
        .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
        .count()
}

/// Minimum cut over all balanced bipartitions (even vertex count).
pub fn min_balanced_cut(graph: &Graph) -> usize {
    assert_eq!(graph.n % 2, 0);
    let mut best = usize::MAX;
    for mask in 0..1u64 << graph.n {
        if mask.count_ones() as usize != graph.n / 2 {
            continue;
        }
        best = best.min(cut_size(graph, mask));
    }
    best
}

/// Cyclic tour length of visiting order `order` (all cities, each once).
pub fn tour_length(distances: &[Vec<Coeff>], order: &[usize]) -> Coeff {
    let n = order.len();
    let mut total = coeff(0);
    for k in 0..n {
        total += distances[order[k]][order[(k + 1) % n]];
    }
    total
}

/// Shortest cyclic tour length by brute force over permutations with
/// city 0 pinned first.
pub fn optimal_tour_length(distances: &[Vec<Coeff>]) -> Coeff {
    let n = distances.len();
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best: Option<Coeff> = None;
    permute(&mut rest, 0, &mut |tail| {
        let mut order = vec![0];
        order.extend_from_slice(tail);
        let len = tour_length(distances, &order);
        best = Some(match best {
            Some(b) if b <= len => b,
            _ => len,
        });
    });
    best.expect("at least one tour exists")
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Smallest completion time over every start-time combination that
/// respects job order and unit-capacity resources, with all tasks done
/// by `horizon`. `None` when no such combination exists.
pub fn oracle_min_makespan(instance: &JobShopInstance, horizon: u32) -> Option<u32> {
    let resources: Vec<&str> = instance.resources.iter().map(String::as_str).collect();
    let mut tasks = Vec::new();
    for (j, job) in instance.jobs.iter().enumerate() {
        for task in job {
            let r = resources
                .iter()
                .position(|&name| name == task.resource)
                .expect("validated instance");
            tasks.push((j, r, task.duration));
        }
    }
    let mut job_ready = vec![0u32; instance.jobs.len()];
    let mut occupied: Vec<Vec<(u32, u32)>> = vec![Vec::new(); resources.len()];
    place_tasks(&tasks, 0, horizon, &mut job_ready, &mut occupied)
}

fn place_tasks(
    tasks: &[(usize, usize, u32)],
    idx: usize,
    horizon: u32,
    job_ready: &mut Vec<u32>,
    occupied: &mut Vec<Vec<(u32, u32)>>,
) -> Option<u32> {
    if idx == tasks.len() {
        return Some(job_ready.iter().copied().max().unwrap_or(0));
    }
    let (job, resource, duration) = tasks[idx];
    if duration > horizon {
        return None;
    }
    let mut best: Option<u32> = None;
    for start in job_ready[job]..=(horizon - duration) {
        let end = start + duration;
        if occupied[resource]
            .iter()
            .any(|&(a, b)| start < b && a < end)
        {
            continue;
        }
        occupied[resource].push((start, end));
        let prev = job_ready[job];
        job_ready[job] = end;
        if let Some(m) = place_tasks(tasks, idx + 1, horizon, job_ready, occupied) {
            best = Some(best.map_or(m, |b| b.min(m)));
        }
        job_ready[job] = prev;
        occupied[resource].pop();
    }
    best
}

/// Random job-shop instance small enough that every deadline probe up to
/// full serialization stays within the exact solver's variable cap.
pub fn random_jobshop(r: &mut ChaCha8Rng, var_cap: usize) -> JobShopInstance {
    loop {
        let resources: Vec<String> = (0..r.gen_range(1..=2))
            .map(|i| format!("m{i}"))
            .collect();
        let jobs: Vec<Vec<Task>> = (0..r.gen_range(1..=3))
            .map(|_| {
                (0..r.gen_range(1..=3))
                    .map(|_| Task {
                        resource: resources[r.gen_range(0..resources.len())].clone(),
                        duration: r.gen_range(1..=3),
                    })
                    .collect()
            })
            .collect();
        let instance = JobShopInstance {
            jobs,
            resources,
            max_time: 1,
        };
        let tasks = instance.task_count();
        let total = instance.total_duration();
        if tasks * (total as usize + 1) <= var_cap {
            let max_time = r.gen_range(instance.max_job_duration().max(2) - 1..=total);
            return JobShopInstance {
                max_time,
                ..instance
            };
        }
    }
}

/// Ordered pairs (a, b) and (b, a) never both present.
pub fn is_antisymmetric(pairs: &BTreeSet<(usize, usize)>) -> bool {
    pairs
        .iter()
        .all(|&(a, b)| a == b || !pairs.contains(&(b, a)))
}
