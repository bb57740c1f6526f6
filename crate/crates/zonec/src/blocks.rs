//! Logical-block mode: compile a circuit of transversal gates over code
//! blocks at a coarsened architecture, then expand every block movement into
//! rigid per-physical-qubit movements on the real architecture.

use serde::{Deserialize, Serialize};

use crate::arch::{Architecture, ArchSpec, SlmSpec, TrapId, ZoneSpec};
use crate::circuit::{Gate, GateKind, GateStage, StagedCircuit};
use crate::error::{CompileError, Result};
use crate::routing::{Movement, MovementPlan, StageMovements};

/// Footprint of one code block, in traps (storage) and sites (entanglement).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub rows: usize,
    pub cols: usize,
}

impl BlockShape {
    pub fn members(&self) -> usize {
        self.rows * self.cols
    }

    pub fn parse(text: &str) -> Result<BlockShape> {
        let (r, c) = text
            .split_once(['x', 'X'])
            .ok_or_else(|| CompileError::Input(format!("block shape '{text}' is not RxC")))?;
        let rows = r.trim().parse().map_err(|_| CompileError::Input("bad block rows".into()))?;
        let cols = c.trim().parse().map_err(|_| CompileError::Input("bad block cols".into()))?;
        if rows == 0 || cols == 0 {
            return Err(CompileError::Input("block shape must be positive".into()));
        }
        Ok(BlockShape { rows, cols })
    }
}

/// The coarsened architecture plus the coarse-trap -> physical-trap map.
pub struct Coarsening {
    pub coarse: Architecture,
    pub shape: BlockShape,
    /// Indexed by coarse trap id; one physical trap per block member, in
    /// (dr, dc) row-major order.
    members: Vec<Vec<TrapId>>,
}

impl Coarsening {
    pub fn member_traps(&self, coarse_trap: TrapId) -> &[TrapId] {
        &self.members[coarse_trap]
    }
}

/// Build the coarse architecture: every SLM grid shrinks by the block shape
/// (floor division), keeping the bottom-left anchor of each block.
pub fn coarsen(phys: &Architecture, shape: BlockShape) -> Result<Coarsening> {
    let mut zones = Vec::new();
    for zone in &phys.spec.zones {
        let mut slms = Vec::new();
        for slm in &zone.slms {
            let num_row = slm.num_row / shape.rows;
            let num_col = slm.num_col / shape.cols;
            if num_row == 0 || num_col == 0 {
                return Err(CompileError::Input(format!(
                    "block shape {}x{} exhausts slm {}",
                    shape.rows, shape.cols, slm.slm_id
                )));
            }
            slms.push(SlmSpec {
                slm_id: slm.slm_id,
                num_col,
                num_row,
                sep: [slm.sep[0] * shape.cols as f64, slm.sep[1] * shape.rows as f64],
                offset: slm.offset,
            });
        }
        zones.push(ZoneSpec {
            zone_id: zone.zone_id,
            kind: zone.kind,
            offset: zone.offset,
            dimension: zone.dimension,
            slms,
        });
    }
    let coarse = Architecture::from_spec(ArchSpec { aods: phys.spec.aods.clone(), zones })?;

    let mut members = Vec::with_capacity(coarse.traps.len());
    for trap in &coarse.traps {
        let mut list = Vec::with_capacity(shape.members());
        for dr in 0..shape.rows {
            for dc in 0..shape.cols {
                let (r, c) = (trap.row * shape.rows + dr, trap.col * shape.cols + dc);
                let id = phys.trap_by_key(trap.slm_id, r, c).ok_or_else(|| {
                    CompileError::Internal(format!(
                        "coarse trap ({}, {}, {}) has no physical member at ({r}, {c})",
                        trap.slm_id, trap.row, trap.col
                    ))
                })?;
                list.push(id);
            }
        }
        members.push(list);
    }
    Ok(Coarsening { coarse, shape, members })
}

/// Physical qubit index of a block member.
pub fn member_qubit(shape: BlockShape, block: usize, member: usize) -> usize {
    block * shape.members() + member
}

/// Expand a block-level staged circuit into the physical staged circuit:
/// a transversal CZ becomes one CZ per member pair, a block U3 one U3 per
/// member, preserving the stage structure.
pub fn expand_circuit(coarse_circuit: &StagedCircuit, shape: BlockShape) -> StagedCircuit {
    let s = shape.members();
    let mut g1 = 0;
    let mut g2 = 0;
    let mut source = 0usize;
    let stages = coarse_circuit
        .stages
        .iter()
        .map(|stage| {
            let mut gates = Vec::with_capacity(stage.gates.len() * s);
            for g in &stage.gates {
                for m in 0..s {
                    let mut pg = match g.kind {
                        GateKind::Cz => Gate::cz(
                            member_qubit(shape, g.qubits[0], m),
                            member_qubit(shape, g.qubits[1], m),
                        ),
                        GateKind::U3 => Gate::u3(
                            member_qubit(shape, g.qubits[0], m),
                            g.params[0],
                            g.params[1],
                            g.params[2],
                        ),
                    };
                    pg.source_index = source;
                    source += 1;
                    match pg.kind {
                        GateKind::Cz => g2 += 1,
                        GateKind::U3 => g1 += 1,
                    }
                    gates.push(pg);
                }
            }
            GateStage { kind: stage.kind, rydberg_index: stage.rydberg_index, gates }
        })
        .collect::<Vec<_>>();
    StagedCircuit { num_qubits: coarse_circuit.num_qubits * s, stages, g1, g2 }
}

/// Expand a coarse movement plan into physical movements: each block member
/// mirrors its block's move with the block-internal offset preserved.
pub fn expand_movement_plan(
    phys: &Architecture,
    coarsening: &Coarsening,
    plan: &MovementPlan,
) -> Result<MovementPlan> {
    let shape = coarsening.shape;
    let s = shape.members();

    let initial = {
        let mut out = vec![0usize; plan.initial.len() * s];
        for (block, &ct) in plan.initial.iter().enumerate() {
            for (m, &pt) in coarsening.member_traps(ct).iter().enumerate() {
                out[member_qubit(shape, block, m)] = pt;
            }
        }
        out
    };

    let mut stages = Vec::with_capacity(plan.stages.len());
    for stage in &plan.stages {
        let expand_moves = |moves: &[Movement]| -> Vec<Movement> {
            let mut out = Vec::with_capacity(moves.len() * s);
            for mv in moves {
                let from = coarsening.member_traps(mv.from);
                let to = coarsening.member_traps(mv.to);
                for m in 0..s {
                    out.push(Movement {
                        qubit: member_qubit(shape, mv.qubit, m),
                        from: from[m],
                        to: to[m],
                    });
                }
            }
            out
        };

        // Gate sites: coarse gate index gi expands to physical gate indices
        // gi*s + m; the coarse site's member (dr, dc) is the physical site
        // holding that member pair.
        let mut gate_sites = Vec::with_capacity(stage.gate_sites.len() * s);
        for &(gi, cs) in &stage.gate_sites {
            let coarse_site = coarsening.coarse.site(cs);
            let left_members = coarsening.member_traps(coarse_site.left);
            for (m, &plt) in left_members.iter().enumerate() {
                let (ps, _) = phys.site_of_trap(plt).ok_or_else(|| {
                    CompileError::Internal("block member trap is not a site trap".into())
                })?;
                gate_sites.push((gi * s + m, ps));
            }
        }

        stages.push(StageMovements {
            t: stage.t,
            gate_sites,
            to_entanglement: expand_moves(&stage.to_entanglement),
            to_storage: expand_moves(&stage.to_storage),
            kept: stage
                .kept
                .iter()
                .flat_map(|&b| (0..s).map(move |m| member_qubit(shape, b, m)))
                .collect(),
        });
    }
    Ok(MovementPlan { initial, stages })
}
