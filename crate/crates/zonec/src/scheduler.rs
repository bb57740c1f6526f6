//! Dependency construction and load-balanced multi-AOD scheduling.
//!
//! Instructions arrive as ordered groups (move-in jobs, rydberg pulses, 1Q
//! chains, move-out jobs, per stage). Trap dependencies allow partial
//! overlap between jobs; qubit dependencies forbid any overlap. Job groups
//! are distributed across AODs longest-first.

use std::collections::BTreeMap;

use crate::arch::TrapId;
use crate::error::{CompileError, Result};

#[derive(Debug, Clone)]
pub struct JobDesc {
    /// Caller-chosen identifier mapped back in the schedule.
    pub tag: usize,
    pub qubits: Vec<usize>,
    pub begin_traps: Vec<TrapId>,
    pub end_traps: Vec<TrapId>,
    pub pickup_finish_us: f64,
    pub move_finish_us: f64,
    pub duration_us: f64,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone)]
pub struct RydbergDesc {
    pub tag: usize,
    pub zone_id: usize,
    pub stage: usize,
    pub qubits: Vec<usize>,
    pub duration_us: f64,
}

#[derive(Debug, Clone)]
pub struct OneQDesc {
    pub tag: usize,
    pub qubit: usize,
    pub duration_us: f64,
}

/// One program-order group of instructions.
#[derive(Debug, Clone)]
pub enum SchedGroup {
    /// Parallelizable rearrangement jobs of one stage boundary.
    Jobs { stage: usize, inbound: bool, jobs: Vec<JobDesc> },
    /// The Rydberg pulses of one stage (one per zone in use).
    Rydberg { stage: usize, pulses: Vec<RydbergDesc> },
    /// A 1Q stage, executed sequentially.
    OneQChain { gates: Vec<OneQDesc> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepKind {
    Trap,
    Qubit,
    /// Ordering imposed by the stage grouping (move-in before the pulse,
    /// the pulse before move-out) and by sequential 1Q execution.
    Seq,
}

#[derive(Debug, Clone, Copy)]
pub struct DependencyEdge {
    pub from: usize,
    pub to: usize,
    pub kind: DepKind,
}

#[derive(Debug, Clone)]
pub struct ScheduledEntry {
    pub tag: usize,
    pub start_us: f64,
    pub end_us: f64,
    pub aod_id: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Schedule {
    /// Keyed by instruction tag.
    pub entries: BTreeMap<usize, ScheduledEntry>,
    pub makespan_us: f64,
}

// Flat view used internally.
enum Flat<'a> {
    Job(&'a JobDesc),
    Rydberg(&'a RydbergDesc),
    OneQ(&'a OneQDesc),
}

impl Flat<'_> {
    fn qubits(&self) -> &[usize] {
        match self {
            Flat::Job(j) => &j.qubits,
            Flat::Rydberg(r) => &r.qubits,
            Flat::OneQ(g) => std::slice::from_ref(&g.qubit),
        }
    }
}

fn flatten<'a>(groups: &'a [SchedGroup]) -> Vec<Flat<'a>> {
    let mut flat = Vec::new();
    for g in groups {
        match g {
            SchedGroup::Jobs { jobs, .. } => flat.extend(jobs.iter().map(Flat::Job)),
            SchedGroup::Rydberg { pulses, .. } => flat.extend(pulses.iter().map(Flat::Rydberg)),
            SchedGroup::OneQChain { gates } => flat.extend(gates.iter().map(Flat::OneQ)),
        }
    }
    flat
}

/// Build trap, qubit, and grouping dependencies over the flattened program.
pub fn build_dependencies(groups: &[SchedGroup]) -> Result<Vec<DependencyEdge>> {
    let flat = flatten(groups);
    let mut edges = Vec::new();

    // Qubit edges: consecutive instructions on the same qubit.
    let mut last_on_qubit: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, inst) in flat.iter().enumerate() {
        for &q in inst.qubits() {
            if let Some(&prev) = last_on_qubit.get(&q) {
                edges.push(DependencyEdge { from: prev, to: i, kind: DepKind::Qubit });
            }
            last_on_qubit.insert(q, i);
        }
    }

    // Trap edges: a job dropping onto a trap another job vacated may overlap
    // partially (its move must finish after the vacating pickup finishes).
    let mut vacated_by: BTreeMap<TrapId, usize> = BTreeMap::new();
    for (i, inst) in flat.iter().enumerate() {
        if let Flat::Job(j) = inst {
            for &t in &j.end_traps {
                if let Some(&prev) = vacated_by.get(&t) {
                    if prev != i {
                        edges.push(DependencyEdge { from: prev, to: i, kind: DepKind::Trap });
                    }
                }
            }
            for &t in &j.begin_traps {
                vacated_by.insert(t, i);
            }
        }
    }

    // Grouping edges: move-in jobs precede their stage's pulses; pulses
    // precede the stage's move-out jobs; 1Q chains run sequentially.
    let mut offset = 0usize;
    let mut bounds: Vec<(usize, usize)> = Vec::new(); // flat [start, end) per group
    for g in groups {
        let len = match g {
            SchedGroup::Jobs { jobs, .. } => jobs.len(),
            SchedGroup::Rydberg { pulses, .. } => pulses.len(),
            SchedGroup::OneQChain { gates } => gates.len(),
        };
        bounds.push((offset, offset + len));
        offset += len;
    }
    for (gi, g) in groups.iter().enumerate() {
        match g {
            SchedGroup::Rydberg { stage, .. } => {
                for (gj, other) in groups.iter().enumerate() {
                    if let SchedGroup::Jobs { stage: s, inbound, .. } = other {
                        if s == stage && *inbound {
                            for from in bounds[gj].0..bounds[gj].1 {
                                for to in bounds[gi].0..bounds[gi].1 {
                                    edges.push(DependencyEdge { from, to, kind: DepKind::Seq });
                                }
                            }
                        }
                        if s == stage && !*inbound {
                            for from in bounds[gi].0..bounds[gi].1 {
                                for to in bounds[gj].0..bounds[gj].1 {
                                    edges.push(DependencyEdge { from, to, kind: DepKind::Seq });
                                }
                            }
                        }
                    }
                }
            }
            SchedGroup::OneQChain { gates } => {
                for w in 0..gates.len().saturating_sub(1) {
                    edges.push(DependencyEdge {
                        from: bounds[gi].0 + w,
                        to: bounds[gi].0 + w + 1,
                        kind: DepKind::Seq,
                    });
                }
            }
            SchedGroup::Jobs { .. } => {}
        }
    }

    for e in &edges {
        if e.from >= e.to {
            return Err(CompileError::Internal(format!(
                "dependency cycle: edge {} -> {} is not forward",
                e.from, e.to
            )));
        }
    }
    Ok(edges)
}

/// Assign start times; distribute each job group across AODs longest-first.
/// `aods` lists (aod_id, max_rows, max_cols).
pub fn schedule(
    groups: &[SchedGroup],
    edges: &[DependencyEdge],
    aods: &[(usize, usize, usize)],
) -> Result<Schedule> {
    if aods.is_empty()
        && groups.iter().any(|g| matches!(g, SchedGroup::Jobs { jobs, .. } if !jobs.is_empty()))
    {
        return Err(CompileError::Input("architecture defines no AOD".into()));
    }
    let flat = flatten(groups);
    let n = flat.len();
    let mut incoming: Vec<Vec<&DependencyEdge>> = vec![Vec::new(); n];
    for e in edges {
        incoming[e.to].push(e);
    }

    let mut start = vec![0.0f64; n];
    let mut end = vec![0.0f64; n];
    let mut aod_of: Vec<Option<usize>> = vec![None; n];
    let mut aod_avail: BTreeMap<usize, f64> = aods.iter().map(|&(id, _, _)| (id, 0.0)).collect();

    let dep_bound = |i: usize,
                     flat: &[Flat],
                     start: &[f64],
                     end: &[f64],
                     incoming: &[Vec<&DependencyEdge>]|
     -> f64 {
        let mut earliest: f64 = 0.0;
        for e in &incoming[i] {
            let b = match e.kind {
                DepKind::Qubit | DepKind::Seq => end[e.from],
                DepKind::Trap => {
                    let from_pickup = match &flat[e.from] {
                        Flat::Job(j) => j.pickup_finish_us,
                        _ => 0.0,
                    };
                    let to_move_finish = match &flat[i] {
                        Flat::Job(j) => j.move_finish_us,
                        _ => 0.0,
                    };
                    start[e.from] + from_pickup - to_move_finish
                }
            };
            earliest = earliest.max(b);
        }
        earliest
    };

    let mut offset = 0usize;
    for g in groups {
        match g {
            SchedGroup::Jobs { jobs, .. } => {
                // longest first, ties by tag
                let mut order: Vec<usize> = (0..jobs.len()).collect();
                order.sort_by(|&a, &b| {
                    jobs[b]
                        .duration_us
                        .partial_cmp(&jobs[a].duration_us)
                        .unwrap()
                        .then(jobs[a].tag.cmp(&jobs[b].tag))
                });
                for ji in order {
                    let i = offset + ji;
                    let job = &jobs[ji];
                    let aod = aods
                        .iter()
                        .filter(|&&(_, r, c)| job.rows <= r && job.cols <= c)
                        .min_by(|&&(ida, _, _), &&(idb, _, _)| {
                            aod_avail[&ida].partial_cmp(&aod_avail[&idb]).unwrap().then(ida.cmp(&idb))
                        })
                        .map(|&(id, _, _)| id)
                        .ok_or_else(|| {
                            CompileError::Capacity(format!(
                                "job with {}x{} grid exceeds every AOD",
                                job.rows, job.cols
                            ))
                        })?;
                    let s = aod_avail[&aod].max(dep_bound(i, &flat, &start, &end, &incoming));
                    start[i] = s;
                    end[i] = s + job.duration_us;
                    aod_of[i] = Some(aod);
                    aod_avail.insert(aod, end[i]);
                }
                offset += jobs.len();
            }
            SchedGroup::Rydberg { pulses, .. } => {
                for (pi, p) in pulses.iter().enumerate() {
                    let i = offset + pi;
                    let s = dep_bound(i, &flat, &start, &end, &incoming);
                    start[i] = s;
                    end[i] = s + p.duration_us;
                }
                offset += pulses.len();
            }
            SchedGroup::OneQChain { gates } => {
                for (wi, w) in gates.iter().enumerate() {
                    let i = offset + wi;
                    let s = dep_bound(i, &flat, &start, &end, &incoming);
                    start[i] = s;
                    end[i] = s + w.duration_us;
                }
                offset += gates.len();
            }
        }
    }

    let mut entries = BTreeMap::new();
    let mut makespan = 0.0f64;
    for (i, inst) in flat.iter().enumerate() {
        let tag = match inst {
            Flat::Job(j) => j.tag,
            Flat::Rydberg(r) => r.tag,
            Flat::OneQ(o) => o.tag,
        };
        makespan = makespan.max(end[i]);
        entries.insert(
            tag,
            ScheduledEntry { tag, start_us: start[i], end_us: end[i], aod_id: aod_of[i] },
        );
    }
    Ok(Schedule { entries, makespan_us: makespan })
}
