//! End-to-end compilation: placement, routing, scheduling, ZAIR emission,
//! replay validation, and the fidelity report.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::arch::{AodSpec, Architecture, TrapId};
use crate::bounds::{compute_bounds, BoundReport};
use crate::circuit::StagedCircuit;
use crate::error::{CompileError, Result};
use crate::fidelity::{evaluate, FidelityReport, HardwareParams};
use crate::placement::{anneal_initial_placement, plan_all_stages, CompilerConfig};
use crate::routing::{
    batch_movements, expand_job, movement_plan_from_stage_plans, MovementPlan, RearrangementJob,
};
use crate::scheduler::{build_dependencies, schedule, JobDesc, OneQDesc, RydbergDesc, SchedGroup};
use crate::zair::{validate_replay, QLoc, ReplayReport, ZairInst, ZairProgram};

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub config: CompilerConfig,
    pub hw: HardwareParams,
    /// Override the number of AODs visible to the scheduler.
    pub num_aods: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub t: usize,
    pub gates: usize,
    pub to_entanglement_jobs: usize,
    pub to_storage_jobs: usize,
    pub moved_in: usize,
    pub returned: usize,
    pub kept_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub fidelity: FidelityReport,
    pub bounds: BoundReport,
    pub num_aods: usize,
    pub stages: Vec<StageStats>,
    pub zair_instructions_per_gate: Option<f64>,
    pub machine_instructions_per_gate: Option<f64>,
}

impl ReportDoc {
    pub fn serialize_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

#[derive(Debug, Clone)]
pub struct CompileArtifacts {
    pub program: ZairProgram,
    pub report: ReportDoc,
    pub replay: ReplayReport,
    pub makespan_us: f64,
}

/// Resolve the AOD list, honouring a count override (extra AODs clone the
/// first one).
pub fn resolve_aods(arch: &Architecture, num_aods: Option<usize>) -> Result<Vec<AodSpec>> {
    let mut aods = arch.spec.aods.clone();
    aods.sort_by_key(|a| a.aod_id);
    let Some(n) = num_aods else { return Ok(aods) };
    if n == 0 {
        return Err(CompileError::Input("at least one AOD is required".into()));
    }
    if n <= aods.len() {
        aods.truncate(n);
        return Ok(aods);
    }
    let Some(template) = aods.first().cloned() else {
        return Err(CompileError::Input("architecture defines no AOD to replicate".into()));
    };
    let mut next_id = aods.iter().map(|a| a.aod_id).max().unwrap() + 1;
    while aods.len() < n {
        aods.push(AodSpec { aod_id: next_id, ..template.clone() });
        next_id += 1;
    }
    Ok(aods)
}

/// An AOD count override amends the architecture itself, so that emitted
/// programs stay self-consistent with the architecture they are replayed
/// against. Returns None when no amendment is needed.
pub fn amended_architecture(
    arch: &Architecture,
    num_aods: Option<usize>,
) -> Result<Option<Architecture>> {
    let aods = resolve_aods(arch, num_aods)?;
    if aods == arch.spec.aods {
        return Ok(None);
    }
    let spec = crate::arch::ArchSpec { aods, zones: arch.spec.zones.clone() };
    Ok(Some(Architecture::from_spec(spec)?))
}

/// Compile a staged circuit end to end on the given architecture.
pub fn compile_circuit(
    arch: &Architecture,
    circuit: &StagedCircuit,
    options: &PipelineOptions,
) -> Result<CompileArtifacts> {
    options.config.validate()?;
    let initial = anneal_initial_placement(arch, circuit, &options.config)?;
    let plans = plan_all_stages(arch, circuit, &options.config, &initial)?;
    let plan = movement_plan_from_stage_plans(&initial, &plans);
    compile_movement_plan(arch, circuit, &plan, options)
}

/// Back half of the pipeline, shared by the normal path and by logical-block
/// mode (which synthesizes the movement plan at a coarsened architecture).
pub fn compile_movement_plan(
    arch: &Architecture,
    circuit: &StagedCircuit,
    plan: &MovementPlan,
    options: &PipelineOptions,
) -> Result<CompileArtifacts> {
    options.config.validate()?;
    let hw = &options.hw;
    hw.validate()?;
    let amended = amended_architecture(arch, options.num_aods)?;
    let arch = amended.as_ref().unwrap_or(arch);
    let aods = resolve_aods(arch, None)?;
    let aod_tuples: Vec<(usize, usize, usize)> =
        aods.iter().map(|a| (a.aod_id, a.max_num_row, a.max_num_col)).collect();
    let cap_rows = aods.iter().map(|a| a.max_num_row).min().unwrap_or(usize::MAX);
    let cap_cols = aods.iter().map(|a| a.max_num_col).min().unwrap_or(usize::MAX);
    let min_sep = aods.iter().map(|a| a.min_sep).fold(f64::INFINITY, f64::min);
    let min_sep = if min_sep.is_finite() { min_sep } else { 2.0 };

    if plan.initial.len() != circuit.num_qubits {
        return Err(CompileError::Internal("initial placement does not cover the circuit".into()));
    }

    // World state walked in program order.
    let mut world: BTreeMap<TrapId, usize> =
        plan.initial.iter().enumerate().map(|(q, &t)| (t, q)).collect();
    let mut positions = plan.initial.clone();

    let mut insts: Vec<ZairInst> = Vec::new();
    let mut groups: Vec<SchedGroup> = Vec::new();
    let mut stats: Vec<StageStats> = Vec::new();
    let mut jobs: Vec<RearrangementJob> = Vec::new();
    let mut next_job_id = 0usize;
    let mut machine_inst_count = 0usize;

    let emit_oneq = |after: usize,
                     insts: &mut Vec<ZairInst>,
                     groups: &mut Vec<SchedGroup>,
                     positions: &[TrapId]| {
        for stage in circuit.oneq_stages_after(after) {
            let mut chain = Vec::new();
            for g in &stage.gates {
                let q = g.qubits[0];
                let tag = insts.len();
                insts.push(ZairInst::OneQGate {
                    unitary: [g.params[0], g.params[1], g.params[2]],
                    qlocs: vec![QLoc::of(arch, q, positions[q])],
                    start_us: None,
                    end_us: None,
                });
                chain.push(OneQDesc { tag, qubit: q, duration_us: hw.t_1q_us });
            }
            groups.push(SchedGroup::OneQChain { gates: chain });
        }
    };

    emit_oneq(0, &mut insts, &mut groups, &positions);

    for stage in &plan.stages {
        let t = stage.t;
        let mut stage_stat = StageStats {
            t,
            gates: stage.gate_sites.len(),
            to_entanglement_jobs: 0,
            to_storage_jobs: 0,
            moved_in: stage.to_entanglement.len(),
            returned: stage.to_storage.len(),
            kept_after: stage.kept.len(),
        };

        for (inbound, movements) in
            [(true, &stage.to_entanglement), (false, &stage.to_storage)]
        {
            let mut descs = Vec::new();
            for batch in batch_movements(arch, movements, cap_rows, cap_cols) {
                let job = expand_job(arch, next_job_id, batch, &world, min_sep, hw)?;
                next_job_id += 1;
                for m in &job.movements {
                    world.remove(&m.from);
                }
                for m in &job.movements {
                    if world.insert(m.to, m.qubit).is_some() {
                        return Err(CompileError::Internal(format!(
                            "two qubits routed onto trap {}",
                            m.to
                        )));
                    }
                    positions[m.qubit] = m.to;
                }
                let tag = insts.len();
                machine_inst_count += job.insts.len();
                let cols: BTreeSet<i64> = job
                    .movements
                    .iter()
                    .map(|m| (arch.trap(m.from).pos.x * 1e6).round() as i64)
                    .collect();
                descs.push(JobDesc {
                    tag,
                    qubits: job.qubits(),
                    begin_traps: job.movements.iter().map(|m| m.from).collect(),
                    end_traps: job.movements.iter().map(|m| m.to).collect(),
                    pickup_finish_us: job.pickup_finish_us(),
                    move_finish_us: job.move_finish_us(),
                    duration_us: job.duration_us(),
                    rows: job.begin_rows.len(),
                    cols: cols.len(),
                });
                insts.push(ZairInst::RearrangeJob {
                    id: job.id,
                    aod_id: None,
                    begin_locs: job
                        .begin_rows
                        .iter()
                        .map(|r| r.iter().map(|&(q, tr)| QLoc::of(arch, q, tr)).collect())
                        .collect(),
                    end_locs: job
                        .end_rows
                        .iter()
                        .map(|r| r.iter().map(|&(q, tr)| QLoc::of(arch, q, tr)).collect())
                        .collect(),
                    insts: job.insts.clone(),
                    pickup_us: job.pickup_us,
                    move_us: job.move_us,
                    dropoff_us: job.dropoff_us,
                    start_us: None,
                    end_us: None,
                });
                jobs.push(job);
            }
            if inbound {
                stage_stat.to_entanglement_jobs = descs.len();
                groups.push(SchedGroup::Jobs { stage: t, inbound: true, jobs: descs });

                // Rydberg pulses, one per zone hosting gates of this stage.
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
                    let tag = insts.len();
                    insts.push(ZairInst::Rydberg {
                        zone_id: z,
                        stage: t,
                        start_us: None,
                        end_us: None,
                    });
                    pulses.push(RydbergDesc {
                        tag,
                        zone_id: z,
                        stage: t,
                        qubits,
                        duration_us: hw.t_ryd_us,
                    });
                }
                groups.push(SchedGroup::Rydberg { stage: t, pulses });
                emit_oneq(t, &mut insts, &mut groups, &positions);
            } else {
                stage_stat.to_storage_jobs = descs.len();
                groups.push(SchedGroup::Jobs { stage: t, inbound: false, jobs: descs });
            }
        }
        stats.push(stage_stat);
    }

    // Timing.
    let edges = build_dependencies(&groups)?;
    let sched = schedule(&groups, &edges, &aod_tuples)?;
    for (tag, entry) in &sched.entries {
        match &mut insts[*tag] {
            ZairInst::OneQGate { start_us, end_us, .. }
            | ZairInst::Rydberg { start_us, end_us, .. } => {
                *start_us = Some(entry.start_us);
                *end_us = Some(entry.end_us);
            }
            ZairInst::RearrangeJob { start_us, end_us, aod_id, .. } => {
                *start_us = Some(entry.start_us);
                *end_us = Some(entry.end_us);
                *aod_id = entry.aod_id;
            }
        }
    }

    let program = ZairProgram {
        init: plan
            .initial
            .iter()
            .enumerate()
            .map(|(q, &t)| QLoc::of(arch, q, t))
            .collect(),
        insts,
    };

    // Soundness gate: replay the emitted program.
    let replay = validate_replay(&program, arch, circuit, hw);

    let fidelity = evaluate(sched.makespan_us, &replay.counters, hw);
    let bounds = compute_bounds(arch, circuit, plan, hw, &aod_tuples, fidelity.total)?;
    let total_gates = circuit.g1 + circuit.g2;
    let report = ReportDoc {
        fidelity,
        bounds,
        num_aods: aods.len(),
        stages: stats,
        zair_instructions_per_gate: (total_gates > 0)
            .then(|| program.insts.len() as f64 / total_gates as f64),
        machine_instructions_per_gate: (total_gates > 0).then(|| {
            let machine = machine_inst_count + circuit.g1
                + program
                    .insts
                    .iter()
                    .filter(|i| matches!(i, ZairInst::Rydberg { .. }))
                    .count();
            machine as f64 / total_gates as f64
        }),
    };

    Ok(CompileArtifacts { program, report, replay, makespan_us: sched.makespan_us })
}
