//! Idealized fidelity upper bounds for the optimality study. Each bound
//! replays the compiled movement structure under progressively stronger
//! assumptions and re-runs the real scheduler on the synthetic jobs:
//!
//! * perfect movement: every boundary's movements merge into one job whose
//!   duration uses the actual worst displacement;
//! * perfect placement: additionally every layer takes the minimum possible
//!   duration, two transfers plus one zone-separation move;
//! * perfect reuse: additionally every qubit that could be reused is, saving
//!   the two atom transfers of its return trip.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::arch::Architecture;
use crate::circuit::StagedCircuit;
use crate::error::Result;
use crate::fidelity::{evaluate, HardwareParams, UsageCounters};
use crate::routing::{Movement, MovementPlan};
use crate::scheduler::{build_dependencies, schedule, JobDesc, OneQDesc, RydbergDesc, SchedGroup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub perfect_movement: f64,
    pub perfect_placement: f64,
    pub perfect_reuse: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Movement,
    Placement,
    Reuse,
}

pub fn bound_perfect_movement(
    arch: &Architecture,
    circuit: &StagedCircuit,
    plan: &MovementPlan,
    hw: &HardwareParams,
    aods: &[(usize, usize, usize)],
) -> Result<f64> {
    bound(arch, circuit, plan, hw, aods, Mode::Movement)
}

pub fn bound_perfect_placement(
    arch: &Architecture,
    circuit: &StagedCircuit,
    plan: &MovementPlan,
    hw: &HardwareParams,
    aods: &[(usize, usize, usize)],
) -> Result<f64> {
    bound(arch, circuit, plan, hw, aods, Mode::Placement)
}

pub fn bound_perfect_reuse(
    arch: &Architecture,
    circuit: &StagedCircuit,
    plan: &MovementPlan,
    hw: &HardwareParams,
    aods: &[(usize, usize, usize)],
) -> Result<f64> {
    bound(arch, circuit, plan, hw, aods, Mode::Reuse)
}

/// Compute all three bounds for a compiled circuit whose fidelity came out
/// as `actual_fidelity`. Every relaxation keeps the schedules of the level
/// below it feasible (assuming all movements compatible does not forbid the
/// compiled batching; shorter ideal distances only shrink durations), so
/// each reported bound is floored by the previous level: with several AODs
/// the merged-layer construction can otherwise lose to a well-parallelized
/// compiled schedule.
pub fn compute_bounds(
    arch: &Architecture,
    circuit: &StagedCircuit,
    plan: &MovementPlan,
    hw: &HardwareParams,
    aods: &[(usize, usize, usize)],
    actual_fidelity: f64,
) -> Result<BoundReport> {
    let pm = bound_perfect_movement(arch, circuit, plan, hw, aods)?.max(actual_fidelity);
    let pp = bound_perfect_placement(arch, circuit, plan, hw, aods)?.max(pm);
    let pr = bound_perfect_reuse(arch, circuit, plan, hw, aods)?.max(pp);
    Ok(BoundReport { perfect_movement: pm, perfect_placement: pp, perfect_reuse: pr })
}

/// Qubits sharing a gate in both stage `t` and stage `t+1`.
fn reusable_after(circuit: &StagedCircuit, t: usize) -> BTreeSet<usize> {
    let this: BTreeSet<usize> = circuit.rydberg_stage_qubits(t).into_iter().collect();
    let next: BTreeSet<usize> = circuit.rydberg_stage_qubits(t + 1).into_iter().collect();
    this.intersection(&next).copied().collect()
}

struct TagGen(usize);

impl TagGen {
    fn next(&mut self) -> usize {
        self.0 += 1;
        self.0
    }
}

fn oneq_chains(
    circuit: &StagedCircuit,
    stages_after: usize,
    hw: &HardwareParams,
    tags: &mut TagGen,
    groups: &mut Vec<SchedGroup>,
    busy: &mut [f64],
) {
    for stage in circuit.oneq_stages_after(stages_after) {
        let gates = stage
            .gates
            .iter()
            .map(|g| {
                busy[g.qubits[0]] += hw.t_1q_us;
                OneQDesc { tag: tags.next(), qubit: g.qubits[0], duration_us: hw.t_1q_us }
            })
            .collect();
        groups.push(SchedGroup::OneQChain { gates });
    }
}

#[allow(clippy::too_many_arguments)]
fn make_job(
    arch: &Architecture,
    movements: &[Movement],
    mode: Mode,
    hw: &HardwareParams,
    tags: &mut TagGen,
    busy: &mut [f64],
    n_tran: &mut usize,
) -> Option<JobDesc> {
    if movements.is_empty() {
        return None;
    }
    let move_us = match mode {
        Mode::Movement => {
            let max_d = movements
                .iter()
                .map(|m| arch.trap(m.from).pos.distance(&arch.trap(m.to).pos))
                .fold(0.0f64, f64::max);
            hw.movement_time_us(max_d)
        }
        Mode::Placement | Mode::Reuse => hw.movement_time_us(hw.d_sep_um),
    };
    for m in movements {
        busy[m.qubit] += 2.0 * hw.t_tran_us;
        *n_tran += 2;
    }
    Some(JobDesc {
        tag: tags.next(),
        qubits: movements.iter().map(|m| m.qubit).collect(),
        begin_traps: movements.iter().map(|m| m.from).collect(),
        end_traps: movements.iter().map(|m| m.to).collect(),
        pickup_finish_us: hw.t_tran_us,
        move_finish_us: hw.t_tran_us + move_us,
        duration_us: 2.0 * hw.t_tran_us + move_us,
        rows: 1,
        cols: 1,
    })
}

fn bound(
    arch: &Architecture,
    circuit: &StagedCircuit,
    plan: &MovementPlan,
    hw: &HardwareParams,
    aods: &[(usize, usize, usize)],
    mode: Mode,
) -> Result<f64> {
    let mut groups: Vec<SchedGroup> = Vec::new();
    let mut busy = vec![0.0f64; circuit.num_qubits];
    let mut n_tran = 0usize;
    let mut tags = TagGen(0);

    oneq_chains(circuit, 0, hw, &mut tags, &mut groups, &mut busy);
    for stage in &plan.stages {
        let t = stage.t;
        let inbound =
            make_job(arch, &stage.to_entanglement, mode, hw, &mut tags, &mut busy, &mut n_tran);
        groups.push(SchedGroup::Jobs { stage: t, inbound: true, jobs: inbound.into_iter().collect() });

        let zones: BTreeSet<usize> =
            stage.gate_sites.iter().map(|&(_, s)| arch.site(s).zone_id).collect();
        let mut pulses = Vec::new();
        for z in zones {
            let qubits: Vec<usize> = stage
                .gate_sites
                .iter()
                .filter(|&&(_, s)| arch.site(s).zone_id == z)
                .flat_map(|&(g, _)| circuit.rydberg_stage(t)[g].qubits.clone())
                .collect();
            pulses.push(RydbergDesc {
                tag: tags.next(),
                zone_id: z,
                stage: t,
                qubits,
                duration_us: hw.t_ryd_us,
            });
        }
        for &(g, _) in &stage.gate_sites {
            for &q in &circuit.rydberg_stage(t)[g].qubits {
                busy[q] += hw.t_ryd_us;
            }
        }
        groups.push(SchedGroup::Rydberg { stage: t, pulses });

        oneq_chains(circuit, t, hw, &mut tags, &mut groups, &mut busy);

        let outbound_moves: Vec<Movement> = match mode {
            Mode::Movement | Mode::Placement => stage.to_storage.clone(),
            Mode::Reuse => {
                let reusable = reusable_after(circuit, t);
                stage
                    .to_storage
                    .iter()
                    .copied()
                    .filter(|m| !reusable.contains(&m.qubit))
                    .collect()
            }
        };
        let outbound = make_job(arch, &outbound_moves, mode, hw, &mut tags, &mut busy, &mut n_tran);
        groups
            .push(SchedGroup::Jobs { stage: t, inbound: false, jobs: outbound.into_iter().collect() });
    }

    let edges = build_dependencies(&groups)?;
    let sched = schedule(&groups, &edges, aods)?;
    let counters = UsageCounters {
        g1: circuit.g1,
        g2: circuit.g2,
        n_exc: 0,
        n_tran,
        busy_us: busy,
    };
    Ok(evaluate(sched.makespan_us, &counters, hw).total)
}
