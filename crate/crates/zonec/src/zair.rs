//! ZAIR: the zoned-architecture IR. Programs hold an `init` placement plus
//! `1qGate`, `rydberg`, and `rearrangeJob` instructions (the latter nesting
//! machine-level AOD instructions). The replay validator walks a program
//! against an architecture and a staged circuit, enforcing geometry and
//! legality and accumulating the counters the fidelity model consumes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::arch::{Architecture, TrapId, ZoneKind};
use crate::circuit::StagedCircuit;
use crate::error::{CompileError, Result};
use crate::fidelity::{HardwareParams, UsageCounters};
use crate::geom::COORD_EPS;
use crate::routing::MachineInst;

/// Qubit location: (q, a, r, c) — qubit q at row r, column c of SLM array a.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QLoc(pub usize, pub usize, pub usize, pub usize);

impl QLoc {
    pub fn qubit(&self) -> usize {
        self.0
    }

    pub fn resolve(&self, arch: &Architecture) -> Option<TrapId> {
        arch.trap_by_key(self.1, self.2, self.3)
    }

    pub fn of(arch: &Architecture, qubit: usize, trap: TrapId) -> QLoc {
        let t = arch.trap(trap);
        QLoc(qubit, t.slm_id, t.row, t.col)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ZairInst {
    #[serde(rename = "1qGate")]
    OneQGate {
        unitary: [f64; 3],
        qlocs: Vec<QLoc>,
        start_us: Option<f64>,
        end_us: Option<f64>,
    },
    #[serde(rename = "rydberg")]
    Rydberg { zone_id: usize, stage: usize, start_us: Option<f64>, end_us: Option<f64> },
    #[serde(rename = "rearrangeJob")]
    RearrangeJob {
        id: usize,
        aod_id: Option<usize>,
        begin_locs: Vec<Vec<QLoc>>,
        end_locs: Vec<Vec<QLoc>>,
        insts: Vec<MachineInst>,
        pickup_us: f64,
        move_us: f64,
        dropoff_us: f64,
        start_us: Option<f64>,
        end_us: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZairProgram {
    pub init: Vec<QLoc>,
    pub insts: Vec<ZairInst>,
}

impl ZairProgram {
    pub fn serialize_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serialization")
    }
}

pub fn parse_zair(text: &str) -> Result<ZairProgram> {
    serde_json::from_str(text).map_err(|e| CompileError::Input(format!("zair program: {e}")))
}

// ---------------------------------------------------------------------------
// Replay validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Malformed,
    Ordering,
    Occupancy,
    Transfer,
    UnrealizedGate,
    UnintendedPairing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Body instruction index (`insts.len()` flags end-of-program checks).
    pub index: usize,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub violations: Vec<Violation>,
    pub counters: UsageCounters,
}

impl ReplayReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn quant(v: f64) -> i64 {
    (v * 1e6).round() as i64
}

struct Replay<'a> {
    arch: &'a Architecture,
    circuit: &'a StagedCircuit,
    hw: &'a HardwareParams,
    /// Trap portion of the world state; riding atoms are absent here.
    occ: BTreeMap<TrapId, usize>,
    pos: Vec<Option<TrapId>>,
    trap_at: BTreeMap<(i64, i64), TrapId>,
    counters: UsageCounters,
    realized: BTreeSet<(usize, usize)>,
    violations: Vec<Violation>,
    index: usize,
}

impl<'a> Replay<'a> {
    fn flag(&mut self, kind: ViolationKind, message: String) {
        self.violations.push(Violation { index: self.index, kind, message });
    }

    fn trap_at_point(&self, x: f64, y: f64) -> Option<TrapId> {
        self.trap_at.get(&(quant(x), quant(y))).copied()
    }
}

/// Replay a program instruction by instruction: atom transfers only at
/// activate/deactivate, AOD rows and columns strictly ordered with the
/// minimum separation, no trap double-occupancy, the Rydberg accounting of
/// gates vs. stray excitations, and end-of-program gate realization.
pub fn validate_replay(
    program: &ZairProgram,
    arch: &Architecture,
    circuit: &StagedCircuit,
    hw: &HardwareParams,
) -> ReplayReport {
    let trap_at = arch
        .traps
        .iter()
        .enumerate()
        .map(|(i, t)| ((quant(t.pos.x), quant(t.pos.y)), i))
        .collect();
    let mut rp = Replay {
        arch,
        circuit,
        hw,
        occ: BTreeMap::new(),
        pos: vec![None; circuit.num_qubits],
        trap_at,
        counters: UsageCounters {
            busy_us: vec![0.0; circuit.num_qubits],
            ..Default::default()
        },
        realized: BTreeSet::new(),
        violations: Vec::new(),
        index: 0,
    };

    // init: every qubit exactly once, every trap distinct and existing
    let mut seen = BTreeSet::new();
    for loc in &program.init {
        let q = loc.qubit();
        if q >= circuit.num_qubits {
            rp.flag(ViolationKind::Malformed, format!("init qubit {q} out of range"));
            continue;
        }
        if !seen.insert(q) {
            rp.flag(ViolationKind::Malformed, format!("init lists qubit {q} twice"));
            continue;
        }
        match loc.resolve(arch) {
            Some(t) => {
                if rp.occ.insert(t, q).is_some() {
                    rp.flag(ViolationKind::Occupancy, format!("init doubles up trap {t}"));
                }
                rp.pos[q] = Some(t);
            }
            None => rp.flag(
                ViolationKind::Malformed,
                format!("init qloc ({}, {}, {}, {}) is no trap", loc.0, loc.1, loc.2, loc.3),
            ),
        }
    }
    if seen.len() != circuit.num_qubits {
        rp.flag(
            ViolationKind::Malformed,
            format!("init covers {} of {} qubits", seen.len(), circuit.num_qubits),
        );
    }

    for (i, inst) in program.insts.iter().enumerate() {
        rp.index = i;
        match inst {
            ZairInst::OneQGate { qlocs, .. } => rp.replay_oneq(qlocs),
            ZairInst::Rydberg { zone_id, stage, .. } => rp.replay_rydberg(*zone_id, *stage),
            ZairInst::RearrangeJob { aod_id, begin_locs, end_locs, insts, .. } => {
                rp.replay_job(*aod_id, begin_locs, end_locs, insts)
            }
        }
    }

    // Every 2Q gate must have been realized exactly once.
    rp.index = program.insts.len();
    for t in 1..=circuit.num_rydberg_stages() {
        for (gi, g) in circuit.rydberg_stage(t).iter().enumerate() {
            if !rp.realized.contains(&(t, gi)) {
                rp.flag(
                    ViolationKind::UnrealizedGate,
                    format!("gate {gi} of stage {t} on qubits {:?} never executed", g.qubits),
                );
            }
        }
    }

    ReplayReport { violations: rp.violations, counters: rp.counters }
}

impl Replay<'_> {
    fn replay_oneq(&mut self, qlocs: &[QLoc]) {
        for loc in qlocs {
            let q = loc.qubit();
            if q >= self.pos.len() {
                self.flag(ViolationKind::Malformed, format!("1q gate on unknown qubit {q}"));
                continue;
            }
            match (loc.resolve(self.arch), self.pos[q]) {
                (Some(t), Some(cur)) if t == cur => {
                    self.counters.g1 += 1;
                    self.counters.busy_us[q] += self.hw.t_1q_us;
                }
                (t, cur) => self.flag(
                    ViolationKind::Malformed,
                    format!("1q qloc of qubit {q} resolves to {t:?} but qubit sits at {cur:?}"),
                ),
            }
        }
    }

    fn replay_rydberg(&mut self, zone_id: usize, stage: usize) {
        let Some(zone) = self.arch.spec.zones.iter().find(|z| z.zone_id == zone_id) else {
            self.flag(ViolationKind::Malformed, format!("rydberg names unknown zone {zone_id}"));
            return;
        };
        if zone.kind != ZoneKind::Entanglement {
            self.flag(
                ViolationKind::Malformed,
                format!("rydberg zone {zone_id} is not an entanglement zone"),
            );
            return;
        }
        let gates = self.circuit.rydberg_stage(stage);
        if gates.is_empty() && stage > self.circuit.num_rydberg_stages() {
            self.flag(ViolationKind::Malformed, format!("rydberg names unknown stage {stage}"));
            return;
        }
        let site_ids: Vec<usize> = self
            .arch
            .sites
            .iter()
            .enumerate()
            .filter(|(_, s)| s.zone_id == zone_id)
            .map(|(i, _)| i)
            .collect();
        for sid in site_ids {
            let site = self.arch.site(sid);
            let occupants: Vec<usize> = [site.left, site.right]
                .iter()
                .filter_map(|t| self.occ.get(t).copied())
                .collect();
            match occupants.as_slice() {
                [] => {}
                [q] => {
                    // a lone excited qubit costs fidelity but is legal
                    self.counters.n_exc += 1;
                    let _ = q;
                }
                [qa, qb] => {
                    let found = gates.iter().enumerate().find(|(_, g)| {
                        (g.qubits[0] == *qa && g.qubits[1] == *qb)
                            || (g.qubits[0] == *qb && g.qubits[1] == *qa)
                    });
                    match found {
                        Some((gi, _)) if !self.realized.contains(&(stage, gi)) => {
                            self.realized.insert((stage, gi));
                            self.counters.g2 += 1;
                            self.counters.busy_us[*qa] += self.hw.t_ryd_us;
                            self.counters.busy_us[*qb] += self.hw.t_ryd_us;
                        }
                        _ => self.flag(
                            ViolationKind::UnintendedPairing,
                            format!(
                                "qubits {qa} and {qb} share site ({}, {}) without a pending stage-{stage} gate",
                                site.row, site.col
                            ),
                        ),
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    fn replay_job(
        &mut self,
        aod_id: Option<usize>,
        begin_locs: &[Vec<QLoc>],
        end_locs: &[Vec<QLoc>],
        insts: &[MachineInst],
    ) {
        // ---- static grid checks -------------------------------------------------
        if begin_locs.len() != end_locs.len()
            || begin_locs.iter().zip(end_locs).any(|(b, e)| b.len() != e.len())
        {
            self.flag(ViolationKind::Malformed, "begin/end grids differ in shape".into());
            return;
        }
        let min_sep = match aod_id.and_then(|id| self.arch.aod(id)) {
            Some(a) => {
                let rows = begin_locs.len();
                let cols: BTreeSet<i64> = begin_locs
                    .iter()
                    .flatten()
                    .filter_map(|l| l.resolve(self.arch))
                    .map(|t| quant(self.arch.trap(t).pos.x))
                    .collect();
                if rows > a.max_num_row || cols.len() > a.max_num_col {
                    self.flag(
                        ViolationKind::Malformed,
                        format!("job exceeds aod {} capacity", a.aod_id),
                    );
                }
                a.min_sep
            }
            None => {
                self.flag(ViolationKind::Malformed, "job has no valid aod_id".into());
                self.arch.spec.aods.first().map_or(0.0, |a| a.min_sep)
            }
        };

        let mut end_trap_of: BTreeMap<usize, TrapId> = BTreeMap::new();
        let mut begin_trap_of: BTreeMap<usize, TrapId> = BTreeMap::new();
        let mut ok = true;
        for (b_row, e_row) in begin_locs.iter().zip(end_locs) {
            for (b, e) in b_row.iter().zip(e_row) {
                if b.qubit() != e.qubit() {
                    self.flag(ViolationKind::Malformed, "begin/end grids permute qubits".into());
                    ok = false;
                    continue;
                }
                match (b.resolve(self.arch), e.resolve(self.arch)) {
                    (Some(bt), Some(et)) => {
                        if begin_trap_of.insert(b.qubit(), bt).is_some() {
                            self.flag(
                                ViolationKind::Malformed,
                                format!("qubit {} appears twice in a job", b.qubit()),
                            );
                            ok = false;
                        }
                        end_trap_of.insert(b.qubit(), et);
                    }
                    _ => {
                        self.flag(ViolationKind::Malformed, "job qloc is no trap".into());
                        ok = false;
                    }
                }
            }
        }
        if !ok {
            return;
        }
        // AOD grids must be strictly ordered at both ends.
        for (locs, trap_of, what) in [
            (begin_locs, &begin_trap_of, "begin"),
            (end_locs, &end_trap_of, "end"),
        ] {
            let mut prev_y = f64::NEG_INFINITY;
            for row in locs {
                let ys: Vec<f64> = row
                    .iter()
                    .map(|l| self.arch.trap(trap_of[&l.qubit()]).pos.y)
                    .collect();
                if ys.windows(2).any(|w| (w[0] - w[1]).abs() > COORD_EPS) {
                    self.flag(ViolationKind::Ordering, format!("{what} row mixes y values"));
                }
                let xs: Vec<f64> = row
                    .iter()
                    .map(|l| self.arch.trap(trap_of[&l.qubit()]).pos.x)
                    .collect();
                if xs.windows(2).any(|w| w[1] - w[0] <= COORD_EPS) {
                    self.flag(ViolationKind::Ordering, format!("{what} row not increasing in x"));
                }
                if !ys.is_empty() {
                    if ys[0] - prev_y <= COORD_EPS {
                        self.flag(ViolationKind::Ordering, format!("{what} rows not increasing"));
                    }
                    prev_y = ys[0];
                }
            }
        }

        // ---- machine instruction simulation ------------------------------------
        // Lines are kept as (position, alive) and never re-indexed.
        let mut rows: Vec<(f64, bool)> = Vec::new();
        let mut cols: Vec<(f64, bool)> = Vec::new();
        // riding atoms: qubit -> (row line, col line)
        let mut riding: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        let mut transfers: BTreeMap<usize, usize> = BTreeMap::new();

        for minst in insts {
            match minst {
                MachineInst::Activate { rows: ys, cols: xs } => {
                    let new_rows: Vec<usize> = ys
                        .iter()
                        .map(|&y| {
                            rows.push((y, true));
                            rows.len() - 1
                        })
                        .collect();
                    let new_cols: Vec<usize> = xs
                        .iter()
                        .map(|&x| {
                            cols.push((x, true));
                            cols.len() - 1
                        })
                        .collect();
                    self.check_lines(&rows, min_sep, "rows");
                    self.check_lines(&cols, min_sep, "cols");
                    // pickups at every aligned intersection touching a new line
                    for (ri, &(ry, r_alive)) in rows.iter().enumerate() {
                        for (ci, &(cx, c_alive)) in cols.iter().enumerate() {
                            if !r_alive || !c_alive {
                                continue;
                            }
                            if !new_rows.contains(&ri) && !new_cols.contains(&ci) {
                                continue;
                            }
                            let Some(trap) = self.trap_at_point(cx, ry) else { continue };
                            let Some(&atom) = self.occ.get(&trap) else { continue };
                            if begin_trap_of.get(&atom) == Some(&trap) && !riding.contains_key(&atom)
                            {
                                self.occ.remove(&trap);
                                self.pos[atom] = None;
                                riding.insert(atom, (ri, ci));
                                self.counters.n_tran += 1;
                                *transfers.entry(atom).or_insert(0) += 1;
                                self.counters.busy_us[atom] += self.hw.t_tran_us;
                            } else {
                                self.flag(
                                    ViolationKind::Transfer,
                                    format!("activate picks up foreign atom {atom} at trap {trap}"),
                                );
                            }
                        }
                    }
                }
                MachineInst::ParkMove { rows: rmv, cols: cmv, .. }
                | MachineInst::Move { rows: rmv, cols: cmv, .. } => {
                    let rows_before = rows.clone();
                    let cols_before = cols.clone();
                    if !self.apply_moves(&mut rows, rmv, "row")
                        | !self.apply_moves(&mut cols, cmv, "col")
                    {
                        return;
                    }
                    // sampled waypoints: ordering and separation at the
                    // midpoint and the endpoint (moves are linear retunes)
                    let mid = |a: &[(f64, bool)], b: &[(f64, bool)]| -> Vec<(f64, bool)> {
                        a.iter()
                            .zip(b)
                            .map(|(&(p0, alive), &(p1, _))| ((p0 + p1) / 2.0, alive))
                            .collect()
                    };
                    self.check_lines(&mid(&rows_before, &rows), min_sep, "rows");
                    self.check_lines(&mid(&cols_before, &cols), min_sep, "cols");
                    self.check_lines(&rows, min_sep, "rows");
                    self.check_lines(&cols, min_sep, "cols");
                }
                MachineInst::Deactivate { rows: ys, cols: xs } => {
                    let off_rows = self.kill_lines(&mut rows, ys, "row");
                    let off_cols = self.kill_lines(&mut cols, xs, "col");
                    let released: Vec<usize> = riding
                        .iter()
                        .filter(|(_, &(ri, ci))| off_rows.contains(&ri) || off_cols.contains(&ci))
                        .map(|(&q, _)| q)
                        .collect();
                    for q in released {
                        let (ri, ci) = riding.remove(&q).unwrap();
                        let (x, y) = (cols[ci].0, rows[ri].0);
                        match self.trap_at_point(x, y) {
                            Some(t) => {
                                if let Some(&other) = self.occ.get(&t) {
                                    self.flag(
                                        ViolationKind::Occupancy,
                                        format!("atom {q} dropped onto trap {t} held by {other}"),
                                    );
                                } else {
                                    self.occ.insert(t, q);
                                    self.pos[q] = Some(t);
                                    self.counters.n_tran += 1;
                                    *transfers.entry(q).or_insert(0) += 1;
                                    self.counters.busy_us[q] += self.hw.t_tran_us;
                                }
                            }
                            None => self.flag(
                                ViolationKind::Transfer,
                                format!("atom {q} released at ({x}, {y}) away from any trap"),
                            ),
                        }
                    }
                }
            }
        }

        if !riding.is_empty() {
            self.flag(
                ViolationKind::Malformed,
                format!("job ends with atoms still riding: {:?}", riding.keys()),
            );
        }
        for (&q, &et) in &end_trap_of {
            if self.pos[q] != Some(et) {
                self.flag(
                    ViolationKind::Malformed,
                    format!("qubit {q} finished at {:?}, end_locs say trap {et}", self.pos[q]),
                );
            }
            let seen = transfers.get(&q).copied().unwrap_or(0);
            if seen != 2 {
                self.flag(
                    ViolationKind::Transfer,
                    format!("qubit {q} saw {seen} transfers in one job"),
                );
            }
        }
    }

    fn check_lines(&mut self, lines: &[(f64, bool)], min_sep: f64, what: &str) {
        let mut alive: Vec<f64> = lines.iter().filter(|l| l.1).map(|l| l.0).collect();
        alive.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in alive.windows(2) {
            if w[1] - w[0] + COORD_EPS < min_sep {
                self.flag(
                    ViolationKind::Ordering,
                    format!("{what} separated by {} below min_sep {min_sep}", w[1] - w[0]),
                );
            }
        }
    }

    /// Apply [from, to] line moves; ordering among alive lines must persist.
    /// Sources are resolved against the pre-move positions before anything
    /// updates, since one line's target may equal another line's source.
    fn apply_moves(&mut self, lines: &mut [(f64, bool)], moves: &[[f64; 2]], what: &str) -> bool {
        let order_before: Vec<usize> = sorted_alive(lines);
        let mut taken = vec![false; lines.len()];
        let mut resolved = Vec::with_capacity(moves.len());
        for mv in moves {
            let Some(i) = lines.iter().enumerate().position(|(i, &(p, alive))| {
                alive && !taken[i] && (p - mv[0]).abs() <= COORD_EPS
            }) else {
                self.flag(
                    ViolationKind::Malformed,
                    format!("{what} move references no active line at {}", mv[0]),
                );
                return false;
            };
            taken[i] = true;
            resolved.push((i, mv[1]));
        }
        for (i, to) in resolved {
            lines[i].0 = to;
        }
        let order_after: Vec<usize> = sorted_alive(lines);
        if order_before != order_after {
            self.flag(ViolationKind::Ordering, format!("{what}s crossed during a move"));
        }
        true
    }

    fn kill_lines(&mut self, lines: &mut [(f64, bool)], coords: &[f64], what: &str) -> BTreeSet<usize> {
        let mut off = BTreeSet::new();
        for &c in coords {
            match lines
                .iter()
                .position(|&(p, alive)| alive && (p - c).abs() <= COORD_EPS)
            {
                Some(i) => {
                    lines[i].1 = false;
                    off.insert(i);
                }
                None => self.flag(
                    ViolationKind::Malformed,
                    format!("deactivate references no active {what} at {c}"),
                ),
            }
        }
        off
    }
}

fn sorted_alive(lines: &[(f64, bool)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..lines.len()).filter(|&i| lines[i].1).collect();
    idx.sort_by(|&a, &b| lines[a].0.partial_cmp(&lines[b].0).unwrap());
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{stage_asap, Gate};
    use crate::testutil::fig_example_arch;
    use proptest::prelude::*;

    #[test]
    fn storage_square_job_round_trips() {
        let text = r#"{
          "init": [[0,0,0,0],[1,0,0,1],[2,0,1,0],[3,0,1,1]],
          "insts": [
            {"kind": "rearrangeJob", "id": 0, "aod_id": 0,
             "begin_locs": [[[0,0,0,0],[1,0,0,1]],[[2,0,1,0],[3,0,1,1]]],
             "end_locs": [[[0,1,0,2],[1,2,0,2]],[[2,1,1,2],[3,2,1,2]]],
             "insts": [], "pickup_us": 30.0, "move_us": 60.0, "dropoff_us": 30.0,
             "start_us": null, "end_us": null}
          ]
        }"#;
        let program = parse_zair(text).unwrap();
        match &program.insts[0] {
            ZairInst::RearrangeJob { begin_locs, end_locs, .. } => {
                assert_eq!(begin_locs[0][0], QLoc(0, 0, 0, 0));
                assert_eq!(end_locs[1][1], QLoc(3, 2, 1, 2));
            }
            _ => unreachable!(),
        }
        let again = parse_zair(&program.serialize_pretty()).unwrap();
        assert_eq!(program, again);
    }

    #[test]
    fn init_only_round_trips() {
        let program = ZairProgram { init: vec![QLoc(0, 0, 0, 0)], insts: vec![] };
        let again = parse_zair(&program.serialize_pretty()).unwrap();
        assert_eq!(program, again);
    }

    proptest! {
        #[test]
        fn random_programs_round_trip(
            n_init in 0usize..5,
            params in proptest::collection::vec(0.0f64..10.0, 3),
            zone in 0usize..4,
            durs in proptest::collection::vec(0.0f64..100.0, 3),
        ) {
            let init: Vec<QLoc> = (0..n_init).map(|q| QLoc(q, 0, q, 2 * q)).collect();
            let program = ZairProgram {
                init,
                insts: vec![
                    ZairInst::OneQGate {
                        unitary: [params[0], params[1], params[2]],
                        qlocs: vec![QLoc(0, 0, 0, 0)],
                        start_us: Some(durs[0]),
                        end_us: Some(durs[0] + 52.0),
                    },
                    ZairInst::Rydberg { zone_id: zone, stage: 1, start_us: None, end_us: None },
                    ZairInst::RearrangeJob {
                        id: 7,
                        aod_id: None,
                        begin_locs: vec![vec![QLoc(0, 0, 0, 0)]],
                        end_locs: vec![vec![QLoc(0, 1, 0, 0)]],
                        insts: vec![
                            MachineInst::Activate { rows: vec![durs[1]], cols: vec![durs[2]] },
                            MachineInst::Move {
                                rows: vec![[durs[1], durs[1] + 1.0]],
                                cols: vec![[durs[2], durs[2] + 2.0]],
                                duration_us: durs[0],
                            },
                            MachineInst::Deactivate { rows: vec![durs[1] + 1.0], cols: vec![durs[2] + 2.0] },
                        ],
                        pickup_us: 15.0,
                        move_us: durs[0],
                        dropoff_us: 15.0,
                        start_us: None,
                        end_us: Some(30.0 + durs[0]),
                    },
                ],
            };
            let again = parse_zair(&program.serialize_pretty()).unwrap();
            prop_assert_eq!(program, again);
        }
    }

    fn hw() -> HardwareParams {
        HardwareParams::default()
    }

    /// A hand-built single-gate program on the fig-example architecture.
    fn tiny_program(arch: &Architecture) -> (ZairProgram, StagedCircuit) {
        let circuit = stage_asap(2, &[Gate::cz(0, 1)]).unwrap();
        let site = arch.site_by_row_col(0, 0).unwrap();
        let s = arch.site(site);
        let t0 = arch.trap_by_key(0, 3, 0).unwrap();
        let t1 = arch.trap_by_key(0, 3, 1).unwrap();
        let f0 = arch.trap(t0).pos;
        let f1 = arch.trap(t1).pos;
        let e0 = arch.trap(s.left).pos;
        let e1 = arch.trap(s.right).pos;
        let job = ZairInst::RearrangeJob {
            id: 0,
            aod_id: Some(0),
            begin_locs: vec![vec![QLoc::of(arch, 0, t0), QLoc::of(arch, 1, t1)]],
            end_locs: vec![vec![QLoc::of(arch, 0, s.left), QLoc::of(arch, 1, s.right)]],
            insts: vec![
                MachineInst::Activate { rows: vec![f0.y], cols: vec![f0.x, f1.x] },
                MachineInst::Move {
                    rows: vec![[f0.y, e0.y]],
                    cols: vec![[f0.x, e0.x], [f1.x, e1.x]],
                    duration_us: 70.0,
                },
                MachineInst::Deactivate { rows: vec![e0.y], cols: vec![e0.x, e1.x] },
            ],
            pickup_us: 15.0,
            move_us: 70.0,
            dropoff_us: 15.0,
            start_us: None,
            end_us: None,
        };
        let program = ZairProgram {
            init: vec![QLoc::of(arch, 0, t0), QLoc::of(arch, 1, t1)],
            insts: vec![job, ZairInst::Rydberg { zone_id: 1, stage: 1, start_us: None, end_us: None }],
        };
        (program, circuit)
    }

    #[test]
    fn tiny_program_replays_clean() {
        let arch = fig_example_arch();
        let (program, circuit) = tiny_program(&arch);
        let report = validate_replay(&program, &arch, &circuit, &hw());
        assert!(report.ok(), "{:?}", report.violations);
        assert_eq!(report.counters.g2, 1);
        assert_eq!(report.counters.n_tran, 4);
        assert_eq!(report.counters.n_exc, 0);
        // two transfers each plus the pulse
        let expect = 2.0 * hw().t_tran_us + hw().t_ryd_us;
        assert!((report.counters.busy_us[0] - expect).abs() < 1e-9);
    }

    #[test]
    fn double_drop_flags_occupancy() {
        let arch = fig_example_arch();
        let (mut program, circuit) = tiny_program(&arch);
        // corrupt: both qubits dropped on the left trap (columns merge)
        if let ZairInst::RearrangeJob { insts, end_locs, .. } = &mut program.insts[0] {
            let left = end_locs[0][0];
            end_locs[0][1] = QLoc(1, left.1, left.2, left.3);
            if let MachineInst::Move { cols, .. } = &mut insts[1] {
                cols[1][1] = cols[0][1];
            }
            if let MachineInst::Deactivate { cols, .. } = &mut insts[2] {
                cols[1] = cols[0];
            }
        }
        let report = validate_replay(&program, &arch, &circuit, &hw());
        assert!(!report.ok());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v.kind, ViolationKind::Occupancy | ViolationKind::Ordering)),
            "{:?}",
            report.violations
        );
    }

    #[test]
    fn idle_qubit_in_zone_counts_excitation() {
        let arch = fig_example_arch();
        let circuit = stage_asap(3, &[Gate::cz(0, 1)]).unwrap();
        let site = arch.site(arch.site_by_row_col(0, 0).unwrap());
        let lone = arch.site(arch.site_by_row_col(0, 1).unwrap());
        let program = ZairProgram {
            init: vec![
                QLoc::of(&arch, 0, site.left),
                QLoc::of(&arch, 1, site.right),
                QLoc::of(&arch, 2, lone.left),
            ],
            insts: vec![ZairInst::Rydberg { zone_id: 1, stage: 1, start_us: None, end_us: None }],
        };
        let report = validate_replay(&program, &arch, &circuit, &hw());
        assert!(report.ok(), "{:?}", report.violations);
        assert_eq!(report.counters.n_exc, 1);
        assert_eq!(report.counters.g2, 1);
    }

    #[test]
    fn unrealized_gate_is_flagged() {
        let arch = fig_example_arch();
        let circuit = stage_asap(2, &[Gate::cz(0, 1)]).unwrap();
        let t0 = arch.trap_by_key(0, 0, 0).unwrap();
        let t1 = arch.trap_by_key(0, 0, 1).unwrap();
        let program = ZairProgram {
            init: vec![QLoc::of(&arch, 0, t0), QLoc::of(&arch, 1, t1)],
            insts: vec![],
        };
        let report = validate_replay(&program, &arch, &circuit, &hw());
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::UnrealizedGate));
    }

    #[test]
    fn incomplete_init_is_flagged() {
        let arch = fig_example_arch();
        let circuit = stage_asap(3, &[Gate::cz(0, 1)]).unwrap();
        let t0 = arch.trap_by_key(0, 0, 0).unwrap();
        let t1 = arch.trap_by_key(0, 0, 1).unwrap();
        // qubit 2 missing, qubit 1 listed twice
        let program = ZairProgram {
            init: vec![QLoc::of(&arch, 0, t0), QLoc::of(&arch, 1, t1), QLoc::of(&arch, 1, t1)],
            insts: vec![],
        };
        let report = validate_replay(&program, &arch, &circuit, &hw());
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Malformed
            && v.message.contains("twice")));
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Malformed
            && v.message.contains("covers")));
    }

    #[test]
    fn unintended_pair_is_flagged() {
        let arch = fig_example_arch();
        // circuit expects gate (0,1); program parks (0,2) at a site instead
        let circuit = stage_asap(3, &[Gate::cz(0, 1)]).unwrap();
        let site = arch.site(arch.site_by_row_col(0, 0).unwrap());
        let t1 = arch.trap_by_key(0, 0, 5).unwrap();
        let program = ZairProgram {
            init: vec![
                QLoc::of(&arch, 0, site.left),
                QLoc::of(&arch, 1, t1),
                QLoc::of(&arch, 2, site.right),
            ],
            insts: vec![ZairInst::Rydberg { zone_id: 1, stage: 1, start_us: None, end_us: None }],
        };
        let report = validate_replay(&program, &arch, &circuit, &hw());
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::UnintendedPairing));
    }
}
