//! Turn per-stage placement deltas into rearrangement jobs: group compatible
//! movements through a conflict graph and maximal independent sets, then
//! expand each job into machine-level AOD instructions (row-by-row pickup
//! with parking, one stretch move, row-by-row dropoff).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::arch::{Architecture, SiteId, TrapId};
use crate::error::{CompileError, Result};
use crate::fidelity::HardwareParams;
use crate::geom::{Point, COORD_EPS};
use crate::placement::{Placement, StagePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Movement {
    pub qubit: usize,
    pub from: TrapId,
    pub to: TrapId,
}

/// Machine-level AOD instructions nested in a rearrangement job. Activate
/// and deactivate list the aligned coordinates of the rows and columns they
/// switch; park and stretch moves carry per-line [from, to] displacements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MachineInst {
    #[serde(rename = "activate")]
    Activate { rows: Vec<f64>, cols: Vec<f64> },
    #[serde(rename = "parkMove")]
    ParkMove { rows: Vec<[f64; 2]>, cols: Vec<[f64; 2]>, duration_us: f64 },
    #[serde(rename = "move")]
    Move { rows: Vec<[f64; 2]>, cols: Vec<[f64; 2]>, duration_us: f64 },
    #[serde(rename = "deactivate")]
    Deactivate { rows: Vec<f64>, cols: Vec<f64> },
}

/// One AOD's pickup/move/dropoff unit.
#[derive(Debug, Clone)]
pub struct RearrangementJob {
    pub id: usize,
    pub aod_id: Option<usize>,
    pub movements: Vec<Movement>,
    /// Rows of (qubit, trap), bottom row first, left to right within a row.
    pub begin_rows: Vec<Vec<(usize, TrapId)>>,
    /// Same shape as `begin_rows`.
    pub end_rows: Vec<Vec<(usize, TrapId)>>,
    pub insts: Vec<MachineInst>,
    pub pickup_us: f64,
    pub move_us: f64,
    pub dropoff_us: f64,
}

impl RearrangementJob {
    pub fn duration_us(&self) -> f64 {
        self.pickup_us + self.move_us + self.dropoff_us
    }

    /// Finish of the pickup phase relative to the job start.
    pub fn pickup_finish_us(&self) -> f64 {
        self.pickup_us
    }

    /// Finish of the move phase relative to the job start.
    pub fn move_finish_us(&self) -> f64 {
        self.pickup_us + self.move_us
    }

    pub fn qubits(&self) -> Vec<usize> {
        let mut qs: Vec<usize> = self.movements.iter().map(|m| m.qubit).collect();
        qs.sort_unstable();
        qs
    }
}

/// Movements of one stage with its gate placement, the unit the back half of
/// the pipeline consumes.
#[derive(Debug, Clone)]
pub struct StageMovements {
    pub t: usize,
    pub gate_sites: Vec<(usize, SiteId)>,
    pub to_entanglement: Vec<Movement>,
    pub to_storage: Vec<Movement>,
    /// Qubits kept at their sites across the boundary after this stage.
    pub kept: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MovementPlan {
    pub initial: Placement,
    pub stages: Vec<StageMovements>,
}

/// Derive the stage's movements from a committed plan: qubits entering the
/// entanglement zone for the stage, and qubits returning after it.
pub fn movements_for_stage(plan: &StagePlan) -> (Vec<Movement>, Vec<Movement>) {
    let mut to_ent = Vec::new();
    for (q, (&b, &d)) in plan.before.iter().zip(plan.during.iter()).enumerate() {
        if b != d {
            to_ent.push(Movement { qubit: q, from: b, to: d });
        }
    }
    let mut to_storage = Vec::new();
    for (q, (&d, &a)) in plan.during.iter().zip(plan.after.iter()).enumerate() {
        if d != a {
            to_storage.push(Movement { qubit: q, from: d, to: a });
        }
    }
    (to_ent, to_storage)
}

pub fn movement_plan_from_stage_plans(initial: &Placement, plans: &[StagePlan]) -> MovementPlan {
    let stages = plans
        .iter()
        .map(|p| {
            let (to_entanglement, to_storage) = movements_for_stage(p);
            StageMovements {
                t: p.t,
                gate_sites: p.gate_sites.iter().map(|(&g, &s)| (g, s)).collect(),
                to_entanglement,
                to_storage,
                kept: p.kept.iter().copied().collect(),
            }
        })
        .collect();
    MovementPlan { initial: initial.clone(), stages }
}

fn sgn(d: f64) -> i8 {
    if d > COORD_EPS {
        1
    } else if d < -COORD_EPS {
        -1
    } else {
        0
    }
}

/// Two movements can ride one AOD iff their x-order and y-order agree at both
/// endpoints (equal coordinates mean a shared, rigid row or column) and the
/// four traps involved are distinct.
pub fn compatible(arch: &Architecture, a: &Movement, b: &Movement) -> bool {
    debug_assert_ne!(a.qubit, b.qubit);
    let traps = [a.from, a.to, b.from, b.to];
    for i in 0..4 {
        for j in i + 1..4 {
            if traps[i] == traps[j] {
                return false;
            }
        }
    }
    let (af, at) = (arch.trap(a.from).pos, arch.trap(a.to).pos);
    let (bf, bt) = (arch.trap(b.from).pos, arch.trap(b.to).pos);
    sgn(af.x - bf.x) == sgn(at.x - bt.x) && sgn(af.y - bf.y) == sgn(at.y - bt.y)
}

/// Partition movements into rearrangement jobs: vertices are movements,
/// conflict edges join incompatible pairs, and maximal independent sets are
/// peeled off greedily (minimum remaining conflict degree first, ties by
/// qubit index). `max_rows`/`max_cols` cap a job at the AOD capacity.
pub fn batch_movements(
    arch: &Architecture,
    moves: &[Movement],
    max_rows: usize,
    max_cols: usize,
) -> Vec<Vec<Movement>> {
    let n = moves.len();
    let mut conflicts: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if !compatible(arch, &moves[i], &moves[j]) {
                conflicts[i].insert(j);
                conflicts[j].insert(i);
            }
        }
    }

    let mut pool: BTreeSet<usize> = (0..n).collect();
    let mut jobs = Vec::new();
    while !pool.is_empty() {
        let mut cand = pool.clone();
        let mut set: Vec<usize> = Vec::new();
        let mut rows: BTreeSet<i64> = BTreeSet::new();
        let mut cols: BTreeSet<i64> = BTreeSet::new();
        while !cand.is_empty() {
            let pick = *cand
                .iter()
                .min_by_key(|&&v| {
                    let deg = conflicts[v].iter().filter(|u| cand.contains(u)).count();
                    (deg, moves[v].qubit)
                })
                .unwrap();
            cand.remove(&pick);
            let p = arch.trap(moves[pick].from).pos;
            let (rk, ck) = (quant(p.y), quant(p.x));
            let new_rows = rows.contains(&rk) as usize;
            let new_cols = cols.contains(&ck) as usize;
            if rows.len() + 1 - new_rows > max_rows || cols.len() + 1 - new_cols > max_cols {
                continue; // would exceed the AOD grid; leave for a later job
            }
            rows.insert(rk);
            cols.insert(ck);
            set.push(pick);
            for u in &conflicts[pick] {
                cand.remove(u);
            }
        }
        for &v in &set {
            pool.remove(&v);
        }
        jobs.push(set.into_iter().map(|v| moves[v]).collect());
    }
    jobs
}

fn quant(v: f64) -> i64 {
    (v * 1e6).round() as i64
}

fn pos_key(p: Point) -> (i64, i64) {
    (quant(p.x), quant(p.y))
}

/// Rows of (qubit, trap), bottom row first, left to right within a row.
pub type JobGrid = Vec<Vec<(usize, TrapId)>>;

/// Arrange a compatible movement set into begin/end grids sorted by (y, x).
pub fn job_grids(arch: &Architecture, movements: &[Movement]) -> (JobGrid, JobGrid) {
    let mut sorted: Vec<&Movement> = movements.iter().collect();
    sorted.sort_by(|a, b| {
        let (pa, pb) = (arch.trap(a.from).pos, arch.trap(b.from).pos);
        quant(pa.y).cmp(&quant(pb.y)).then(quant(pa.x).cmp(&quant(pb.x)))
    });
    let mut begin: Vec<Vec<(usize, TrapId)>> = Vec::new();
    let mut end: Vec<Vec<(usize, TrapId)>> = Vec::new();
    let mut last_y: Option<i64> = None;
    for m in sorted {
        let y = quant(arch.trap(m.from).pos.y);
        if last_y != Some(y) {
            begin.push(Vec::new());
            end.push(Vec::new());
            last_y = Some(y);
        }
        begin.last_mut().unwrap().push((m.qubit, m.from));
        end.last_mut().unwrap().push((m.qubit, m.to));
    }
    (begin, end)
}

struct Line {
    begin: f64,
    cur: f64,
    target: f64,
    active: bool,
}

/// Expand one job into machine instructions. `occupancy` maps every occupied
/// trap (including this job's own qubits at their begin traps) to its qubit,
/// reflecting program state when the job starts.
pub fn expand_job(
    arch: &Architecture,
    id: usize,
    movements: Vec<Movement>,
    occupancy: &BTreeMap<TrapId, usize>,
    min_sep: f64,
    hw: &HardwareParams,
) -> Result<RearrangementJob> {
    let (begin_rows, end_rows) = job_grids(arch, &movements);

    // Row and column lines keyed by their begin coordinate.
    let mut row_lines: Vec<Line> = Vec::new();
    let mut col_lines: Vec<Line> = Vec::new();
    let mut row_index: BTreeMap<i64, usize> = BTreeMap::new();
    let mut col_index: BTreeMap<i64, usize> = BTreeMap::new();
    for m in &movements {
        let (f, t) = (arch.trap(m.from).pos, arch.trap(m.to).pos);
        for (key, begin, target, lines, index) in [
            (quant(f.y), f.y, t.y, &mut row_lines, &mut row_index),
            (quant(f.x), f.x, t.x, &mut col_lines, &mut col_index),
        ] {
            match index.get(&key) {
                Some(&i) => {
                    if (lines[i].target - target).abs() > COORD_EPS {
                        return Err(CompileError::Internal(format!(
                            "job {id}: shared line splits; batching bug"
                        )));
                    }
                }
                None => {
                    index.insert(key, lines.len());
                    lines.push(Line { begin, cur: begin, target, active: false });
                }
            }
        }
    }
    check_order("begin rows", row_lines.iter().map(|l| (l.begin, l.target)), id)?;
    check_order("begin cols", col_lines.iter().map(|l| (l.begin, l.target)), id)?;

    // Trap occupancy by position; updated as atoms are picked.
    let mut slm_occ: BTreeMap<(i64, i64), usize> = occupancy
        .iter()
        .map(|(&t, &q)| (pos_key(arch.trap(t).pos), q))
        .collect();
    let job_qubit_of: BTreeMap<(i64, i64), usize> = movements
        .iter()
        .map(|m| (pos_key(arch.trap(m.from).pos), m.qubit))
        .collect();
    for m in &movements {
        let key = pos_key(arch.trap(m.from).pos);
        match slm_occ.get(&key) {
            Some(&q) if q == m.qubit => {}
            other => {
                return Err(CompileError::Internal(format!(
                    "job {id}: qubit {} expected at its begin trap, found {other:?}",
                    m.qubit
                )))
            }
        }
    }

    let mut insts: Vec<MachineInst> = Vec::new();
    let mut pickup_us = 0.0;

    // Pickup: activate rows bottom to top, parking misaligned hazards away.
    for row in &begin_rows {
        let ri = row_index[&quant(arch.trap(row[0].1).pos.y)];
        let needed_cols: Vec<usize> =
            row.iter().map(|&(_, t)| col_index[&quant(arch.trap(t).pos.x)]).collect();

        // Columns that must sit aligned for this activation.
        let mut adjustments: Vec<(bool, usize, f64)> = Vec::new(); // (is_row, idx, new pos)
        for &ci in &needed_cols {
            if col_lines[ci].active && (col_lines[ci].cur - col_lines[ci].begin).abs() > COORD_EPS
            {
                adjustments.push((false, ci, col_lines[ci].begin));
            }
        }

        // Resolve hazards: any aligned intersection over an atom that this
        // activation does not intend to pick gets a line parked away.
        let park = min_sep / 2.0;
        for _attempt in 0..(4 * (row_lines.len() + col_lines.len()) + 4) {
            let row_pos = |i: usize| -> Option<f64> {
                let l = &row_lines[i];
                if l.active || i == ri {
                    Some(applied(&adjustments, true, i).unwrap_or(l.cur))
                } else {
                    None
                }
            };
            let col_pos = |i: usize| -> Option<f64> {
                let l = &col_lines[i];
                if l.active || needed_cols.contains(&i) {
                    Some(applied(&adjustments, false, i).unwrap_or(if l.active {
                        l.cur
                    } else {
                        l.begin
                    }))
                } else {
                    None
                }
            };
            let mut hazard: Option<(bool, usize)> = None;
            'scan: for rj in 0..row_lines.len() {
                let Some(ry) = row_pos(rj) else { continue };
                for cj in 0..col_lines.len() {
                    let Some(cx) = col_pos(cj) else { continue };
                    let key = (quant(cx), quant(ry));
                    let Some(&atom) = slm_occ.get(&key) else { continue };
                    let intended = rj == ri && job_qubit_of.get(&key) == Some(&atom);
                    if intended {
                        continue;
                    }
                    // park whichever line is not pinned by this activation
                    let row_pinned = rj == ri;
                    let col_pinned = needed_cols.contains(&cj);
                    if row_pinned && col_pinned {
                        return Err(CompileError::Internal(format!(
                            "job {id}: foreign atom at a required pickup intersection"
                        )));
                    }
                    hazard = Some(if col_pinned || (!row_pinned && rj != ri) {
                        (true, rj)
                    } else {
                        (false, cj)
                    });
                    break 'scan;
                }
            }
            let Some((is_row, idx)) = hazard else { break };
            let cur = if is_row {
                applied(&adjustments, true, idx).unwrap_or(row_lines[idx].cur)
            } else {
                applied(&adjustments, false, idx).unwrap_or(col_lines[idx].cur)
            };
            let mut parked = None;
            for cand in [cur - park, cur + park] {
                let ok = if is_row {
                    line_fits(cand, idx, &row_lines, &adjustments, true, min_sep, ri, &needed_cols)
                } else {
                    line_fits(cand, idx, &col_lines, &adjustments, false, min_sep, ri, &needed_cols)
                };
                if ok {
                    parked = Some(cand);
                    break;
                }
            }
            let Some(newpos) = parked else {
                return Err(CompileError::Internal(format!(
                    "job {id}: no parking offset clears the hazard"
                )));
            };
            adjustments.retain(|&(r, i, _)| (r, i) != (is_row, idx));
            adjustments.push((is_row, idx, newpos));
        }

        if !adjustments.is_empty() {
            let mut rows_mv: Vec<[f64; 2]> = Vec::new();
            let mut cols_mv: Vec<[f64; 2]> = Vec::new();
            let mut max_d: f64 = 0.0;
            for &(is_row, idx, to) in &adjustments {
                let line = if is_row { &mut row_lines[idx] } else { &mut col_lines[idx] };
                if !line.active {
                    return Err(CompileError::Internal(format!(
                        "job {id}: parking an inactive line"
                    )));
                }
                max_d = max_d.max((to - line.cur).abs());
                if is_row {
                    rows_mv.push([line.cur, to]);
                } else {
                    cols_mv.push([line.cur, to]);
                }
                line.cur = to;
            }
            let duration_us = hw.movement_time_us(max_d);
            pickup_us += duration_us;
            insts.push(MachineInst::ParkMove { rows: rows_mv, cols: cols_mv, duration_us });
        }

        // Activate the row and any new columns; pick up atoms at aligned
        // intersections.
        let mut new_cols: Vec<f64> = Vec::new();
        for &ci in &needed_cols {
            if !col_lines[ci].active {
                col_lines[ci].active = true;
                col_lines[ci].cur = col_lines[ci].begin;
                new_cols.push(col_lines[ci].begin);
            }
        }
        row_lines[ri].active = true;
        row_lines[ri].cur = row_lines[ri].begin;
        insts.push(MachineInst::Activate { rows: vec![row_lines[ri].begin], cols: new_cols });
        pickup_us += hw.t_tran_us;
        for &(q, t) in row {
            let removed = slm_occ.remove(&pos_key(arch.trap(t).pos));
            debug_assert_eq!(removed, Some(q));
        }
    }

    // Single stretch move to the targets; parked offsets are absorbed here.
    let mut max_disp: f64 = 0.0;
    for m in &movements {
        let (f, t) = (arch.trap(m.from).pos, arch.trap(m.to).pos);
        let ry = row_lines[row_index[&quant(f.y)]].cur;
        let cx = col_lines[col_index[&quant(f.x)]].cur;
        let d = Point::new(cx, ry).distance(&Point::new(t.x, t.y));
        max_disp = max_disp.max(d);
    }
    let move_us = hw.movement_time_us(max_disp);
    let rows_mv: Vec<[f64; 2]> = row_lines.iter().map(|l| [l.cur, l.target]).collect();
    let cols_mv: Vec<[f64; 2]> = col_lines.iter().map(|l| [l.cur, l.target]).collect();
    insts.push(MachineInst::Move { rows: rows_mv, cols: cols_mv, duration_us: move_us });
    for l in row_lines.iter_mut().chain(col_lines.iter_mut()) {
        l.cur = l.target;
    }
    check_order("end rows", row_lines.iter().map(|l| (l.cur, l.cur)), id)?;
    check_order("end cols", col_lines.iter().map(|l| (l.cur, l.cur)), id)?;

    // Dropoff: deactivate rows bottom to top; a column switches off with the
    // row that drops its last atom.
    let mut dropoff_us = 0.0;
    let mut last_row_of_col: BTreeMap<usize, usize> = BTreeMap::new();
    for m in movements.iter() {
        let f = arch.trap(m.from).pos;
        let ci = col_index[&quant(f.x)];
        let ri = row_index[&quant(f.y)];
        let entry = last_row_of_col.entry(ci).or_insert(ri);
        // rows activate and deactivate in ascending begin-y order
        if row_lines[ri].begin > row_lines[*entry].begin {
            *entry = ri;
        }
    }
    for (grid_row, row) in begin_rows.iter().enumerate() {
        let ri = row_index[&quant(arch.trap(row[0].1).pos.y)];
        let cols: Vec<f64> = last_row_of_col
            .iter()
            .filter(|&(_, &r)| r == ri)
            .map(|(&c, _)| col_lines[c].cur)
            .collect();
        insts.push(MachineInst::Deactivate { rows: vec![row_lines[ri].cur], cols });
        dropoff_us += hw.t_tran_us;
        for &(q, _) in &end_rows[grid_row] {
            let m = movements.iter().find(|m| m.qubit == q).unwrap();
            slm_occ.insert(pos_key(arch.trap(m.to).pos), q);
        }
    }

    Ok(RearrangementJob {
        id,
        aod_id: None,
        movements,
        begin_rows,
        end_rows,
        insts,
        pickup_us,
        move_us,
        dropoff_us,
    })
}

fn applied(adjustments: &[(bool, usize, f64)], is_row: bool, idx: usize) -> Option<f64> {
    adjustments
        .iter()
        .find(|&&(r, i, _)| r == is_row && i == idx)
        .map(|&(_, _, p)| p)
}

/// A parked position is admissible when it keeps strict ordering and the
/// minimum separation against every other active line on the same axis.
#[allow(clippy::too_many_arguments)]
fn line_fits(
    cand: f64,
    idx: usize,
    lines: &[Line],
    adjustments: &[(bool, usize, f64)],
    is_row: bool,
    min_sep: f64,
    active_row: usize,
    needed_cols: &[usize],
) -> bool {
    for (j, l) in lines.iter().enumerate() {
        if j == idx {
            continue;
        }
        let live = l.active || if is_row { j == active_row } else { needed_cols.contains(&j) };
        if !live {
            continue;
        }
        let pos = applied(adjustments, is_row, j).unwrap_or(if l.active { l.cur } else { l.begin });
        if (cand - pos).abs() + COORD_EPS < min_sep {
            return false;
        }
        // ordering by begin coordinate must be preserved
        let before = lines[idx].begin < l.begin;
        if before != (cand < pos) {
            return false;
        }
    }
    true
}

fn check_order(
    what: &str,
    coords: impl Iterator<Item = (f64, f64)>,
    id: usize,
) -> Result<()> {
    let v: Vec<(f64, f64)> = coords.collect();
    let mut sorted = v.clone();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in sorted.windows(2) {
        if w[1].0 - w[0].0 <= COORD_EPS || w[1].1 - w[0].1 <= COORD_EPS {
            return Err(CompileError::Internal(format!(
                "job {id}: {what} are not strictly ordered"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::fig_example_arch;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn hw() -> HardwareParams {
        HardwareParams::default()
    }

    fn mv(arch: &Architecture, q: usize, from: (usize, usize), to_site: (usize, usize, bool)) -> Movement {
        let from = arch.trap_by_key(0, from.0, from.1).unwrap();
        let site = arch.site_by_row_col(to_site.0, to_site.1).unwrap();
        let s = arch.site(site);
        Movement { qubit: q, from, to: if to_site.2 { s.right } else { s.left } }
    }

    #[test]
    fn same_row_pair_to_one_site_is_compatible() {
        let arch = fig_example_arch();
        let a = mv(&arch, 0, (3, 0), (0, 0, false));
        let b = mv(&arch, 1, (3, 1), (0, 0, true));
        assert!(compatible(&arch, &a, &b));
    }

    #[test]
    fn crossing_pair_is_incompatible() {
        let arch = fig_example_arch();
        // a starts left of b but ends right of it
        let a = mv(&arch, 0, (3, 0), (0, 1, false));
        let b = mv(&arch, 1, (3, 1), (0, 0, false));
        assert!(!compatible(&arch, &a, &b));
    }

    #[test]
    fn shared_trap_is_incompatible() {
        let arch = fig_example_arch();
        let t0 = arch.trap_by_key(0, 0, 0).unwrap();
        let t1 = arch.trap_by_key(0, 0, 1).unwrap();
        let t2 = arch.trap_by_key(0, 1, 1).unwrap();
        let a = Movement { qubit: 0, from: t0, to: t1 };
        let b = Movement { qubit: 1, from: t2, to: t0 };
        assert!(!compatible(&arch, &a, &b));
    }

    /// Simulation oracle: sample the joint linear trajectories and check that
    /// distinct columns and rows never coincide or cross.
    fn trajectory_oracle(arch: &Architecture, a: &Movement, b: &Movement) -> bool {
        let traps = [a.from, a.to, b.from, b.to];
        for i in 0..4 {
            for j in i + 1..4 {
                if traps[i] == traps[j] {
                    return false;
                }
            }
        }
        let (af, at) = (arch.trap(a.from).pos, arch.trap(a.to).pos);
        let (bf, bt) = (arch.trap(b.from).pos, arch.trap(b.to).pos);
        let shared_col = (af.x - bf.x).abs() <= COORD_EPS;
        let shared_row = (af.y - bf.y).abs() <= COORD_EPS;
        if shared_col && (at.x - bt.x).abs() > COORD_EPS {
            return false; // one column cannot split
        }
        if shared_row && (at.y - bt.y).abs() > COORD_EPS {
            return false;
        }
        for step in 0..=16 {
            let s = step as f64 / 16.0;
            let ax = af.x + s * (at.x - af.x);
            let bx = bf.x + s * (bt.x - bf.x);
            let ay = af.y + s * (at.y - af.y);
            let by = bf.y + s * (bt.y - bf.y);
            if !shared_col && (sgn(ax - bx) != sgn(af.x - bf.x)) {
                return false;
            }
            if !shared_row && (sgn(ay - by) != sgn(af.y - bf.y)) {
                return false;
            }
        }
        true
    }

    #[test]
    fn compatibility_matches_trajectory_oracle() {
        let arch = fig_example_arch();
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..400 {
            let pick = |rng: &mut StdRng| -> TrapId {
                let r = rng.gen_range(0..4usize);
                let c = rng.gen_range(0..4usize);
                arch.trap_by_key(0, r, c).unwrap()
            };
            let (a_from, a_to) = (pick(&mut rng), pick(&mut rng));
            let (b_from, b_to) = (pick(&mut rng), pick(&mut rng));
            if a_from == a_to || b_from == b_to {
                continue;
            }
            let a = Movement { qubit: 0, from: a_from, to: a_to };
            let b = Movement { qubit: 1, from: b_from, to: b_to };
            assert_eq!(
                compatible(&arch, &a, &b),
                trajectory_oracle(&arch, &a, &b),
                "a: {a:?} b: {b:?}"
            );
        }
    }

    #[test]
    fn batch_all_compatible_is_one_job() {
        let arch = fig_example_arch();
        let moves = vec![
            mv(&arch, 0, (0, 0), (0, 0, false)),
            mv(&arch, 1, (0, 1), (0, 0, true)),
            mv(&arch, 2, (1, 0), (1, 0, false)),
            mv(&arch, 3, (1, 1), (1, 0, true)),
        ];
        let jobs = batch_movements(&arch, &moves, 10, 10);
        assert_eq!(jobs.len(), 1);
        assert_eq!(jobs[0].len(), 4);
    }

    #[test]
    fn storage_square_to_two_sites_is_one_job() {
        // four qubits on a 2x2 storage square ride one AOD into sites (0,2)
        // and (1,2) of the reference entanglement zone
        let arch = crate::testutil::reference_arch();
        let site = |r: usize, c: usize, right: bool| {
            let s = arch.site(arch.site_by_row_col(r, c).unwrap());
            if right {
                s.right
            } else {
                s.left
            }
        };
        let moves = vec![
            Movement { qubit: 0, from: arch.trap_by_key(0, 0, 0).unwrap(), to: site(0, 2, false) },
            Movement { qubit: 1, from: arch.trap_by_key(0, 0, 1).unwrap(), to: site(0, 2, true) },
            Movement { qubit: 2, from: arch.trap_by_key(0, 1, 0).unwrap(), to: site(1, 2, false) },
            Movement { qubit: 3, from: arch.trap_by_key(0, 1, 1).unwrap(), to: site(1, 2, true) },
        ];
        let jobs = batch_movements(&arch, &moves, 100, 100);
        assert_eq!(jobs.len(), 1);
        let (begin, end) = job_grids(&arch, &jobs[0]);
        let qgrid: Vec<Vec<usize>> =
            begin.iter().map(|r| r.iter().map(|&(q, _)| q).collect()).collect();
        assert_eq!(qgrid, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(end.len(), 2);
        assert_eq!(end[0].len(), 2);
    }

    #[test]
    fn batch_incompatible_pair_splits() {
        let arch = fig_example_arch();
        let a = mv(&arch, 0, (3, 0), (0, 1, false));
        let b = mv(&arch, 1, (3, 1), (0, 0, false));
        let jobs = batch_movements(&arch, &[a, b], 10, 10);
        assert_eq!(jobs.len(), 2);
    }

    #[test]
    fn batches_are_independent_and_maximal() {
        let arch = fig_example_arch();
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..120 {
            let n = rng.gen_range(1..=10usize);
            let mut froms = BTreeSet::new();
            let mut tos = BTreeSet::new();
            let mut moves = Vec::new();
            for q in 0..n {
                let from = loop {
                    let t = arch.trap_by_key(0, rng.gen_range(0..4), rng.gen_range(0..10)).unwrap();
                    if froms.insert(t) {
                        break t;
                    }
                };
                let to = loop {
                    let s = arch.site_by_row_col(rng.gen_range(0..2), rng.gen_range(0..5)).unwrap();
                    let t = if rng.gen_bool(0.5) { arch.site(s).left } else { arch.site(s).right };
                    if !froms.contains(&t) && tos.insert(t) {
                        break t;
                    }
                };
                moves.push(Movement { qubit: q, from, to });
            }
            let jobs = batch_movements(&arch, &moves, 100, 100);
            let mut covered = BTreeSet::new();
            for job in &jobs {
                for m in job {
                    assert!(covered.insert(m.qubit), "movement batched twice");
                }
                for (i, a) in job.iter().enumerate() {
                    for b in job.iter().skip(i + 1) {
                        assert!(compatible(&arch, a, b), "incompatible pair in one job");
                    }
                }
                // move duration follows the d = a*t^2 law; exact for
                // park-free expansions
                let occ: BTreeMap<TrapId, usize> =
                    job.iter().map(|m| (m.from, m.qubit)).collect();
                let expanded = expand_job(&arch, 0, job.clone(), &occ, 2.0, &hw()).unwrap();
                if !expanded.insts.iter().any(|i| matches!(i, MachineInst::ParkMove { .. })) {
                    let max_d = job
                        .iter()
                        .map(|m| arch.trap(m.from).pos.distance(&arch.trap(m.to).pos))
                        .fold(0.0f64, f64::max);
                    assert!((expanded.move_us - hw().movement_time_us(max_d)).abs() < 1e-9);
                }
            }
            assert_eq!(covered.len(), moves.len());
            // maximality: every movement of a later batch conflicts with some
            // member of every earlier batch
            for (ji, job) in jobs.iter().enumerate() {
                for later in jobs.iter().skip(ji + 1) {
                    for m in later {
                        assert!(
                            job.iter().any(|a| !compatible(&arch, a, m)),
                            "movement {m:?} fits an earlier job"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn expand_single_qubit_job() {
        let arch = fig_example_arch();
        // 10 um straight up from (1, 9) to (1, 19)? use storage->storage for
        // an exact 10 um displacement: (1, 0) -> (1, 9) is 9 um; instead use
        // trap (0,0,0) at (1,0) to site... take begin (1, 9), end (0, 19)
        // displacement sqrt(1 + 100) = 10.0499. For the exact example use a
        // vertical move within storage: (1, 0) row 0 to row (1, 9)? rows are
        // 3 um apart; (r0,c0)=(1,0) to (r3,c0)=(1,9) gives 9 um. Use the
        // site drop that is exactly 10 um: x matches at col 0: begin (1,9),
        // target site row 0 left trap (0,19): not 10. So assert the law, not
        // a fixed duration: t = sqrt(d / a).
        let from = arch.trap_by_key(0, 3, 0).unwrap();
        let site = arch.site_by_row_col(0, 0).unwrap();
        let to = arch.site(site).left;
        let m = Movement { qubit: 0, from, to };
        let occ: BTreeMap<TrapId, usize> = [(from, 0usize)].into_iter().collect();
        let job = expand_job(&arch, 0, vec![m], &occ, 2.0, &hw()).unwrap();
        assert_eq!(job.insts.len(), 3);
        assert!(matches!(job.insts[0], MachineInst::Activate { .. }));
        assert!(matches!(job.insts[1], MachineInst::Move { .. }));
        assert!(matches!(job.insts[2], MachineInst::Deactivate { .. }));
        assert_eq!(job.pickup_us, 15.0);
        assert_eq!(job.dropoff_us, 15.0);
        let d = arch.trap(from).pos.distance(&arch.trap(to).pos);
        assert!((job.move_us - hw().movement_time_us(d)).abs() < 1e-9);
        // movement-time law reference point: 10 um -> 60.30 us
        assert!((hw().movement_time_us(10.0) - 60.30).abs() < 0.01);
    }

    #[test]
    fn expand_full_rectangle_has_no_parking() {
        let arch = fig_example_arch();
        let moves = vec![
            mv(&arch, 0, (0, 0), (0, 0, false)),
            mv(&arch, 1, (0, 1), (0, 0, true)),
            mv(&arch, 2, (1, 0), (1, 0, false)),
            mv(&arch, 3, (1, 1), (1, 0, true)),
        ];
        let occ: BTreeMap<TrapId, usize> =
            moves.iter().map(|m| (m.from, m.qubit)).collect();
        let job = expand_job(&arch, 0, moves, &occ, 2.0, &hw()).unwrap();
        assert!(
            !job.insts.iter().any(|i| matches!(i, MachineInst::ParkMove { .. })),
            "{:?}",
            job.insts
        );
        assert_eq!(job.pickup_us, 30.0);
        assert_eq!(job.dropoff_us, 30.0);
    }

    #[test]
    fn expand_parking_scenario() {
        let arch = fig_example_arch();
        // 2x3 block of atoms; q2 (row 0, col 2) and q3 (row 1, col 0) stay.
        let moves = vec![
            mv(&arch, 0, (0, 0), (0, 0, false)),
            mv(&arch, 1, (0, 1), (0, 0, true)),
            mv(&arch, 4, (1, 1), (1, 0, true)),
            mv(&arch, 5, (1, 2), (1, 1, false)),
        ];
        let mut occ: BTreeMap<TrapId, usize> = moves.iter().map(|m| (m.from, m.qubit)).collect();
        occ.insert(arch.trap_by_key(0, 0, 2).unwrap(), 2);
        occ.insert(arch.trap_by_key(0, 1, 0).unwrap(), 3);
        let job = expand_job(&arch, 0, moves, &occ, 2.0, &hw()).unwrap();
        let kinds: Vec<&'static str> = job
            .insts
            .iter()
            .map(|i| match i {
                MachineInst::Activate { .. } => "activate",
                MachineInst::ParkMove { .. } => "parkMove",
                MachineInst::Move { .. } => "move",
                MachineInst::Deactivate { .. } => "deactivate",
            })
            .collect();
        assert_eq!(
            kinds,
            vec!["activate", "parkMove", "activate", "move", "deactivate", "deactivate"],
            "{:?}",
            job.insts
        );
        // the park shifts the first row (y=0) and the first column (x=1)
        if let MachineInst::ParkMove { rows, cols, .. } = &job.insts[1] {
            assert_eq!(rows.len(), 1);
            assert_eq!(cols.len(), 1);
            assert!((rows[0][0] - 0.0).abs() < 1e-9);
            assert!((cols[0][0] - 1.0).abs() < 1e-9);
        } else {
            unreachable!()
        }
        // pickup includes two transfers and one park
        let park_time = match &job.insts[1] {
            MachineInst::ParkMove { duration_us, .. } => *duration_us,
            _ => 0.0,
        };
        assert!((job.pickup_us - (30.0 + park_time)).abs() < 1e-9);
    }

    #[test]
    fn movements_for_stage_trivial_cases() {
        use crate::circuit::{stage_asap, Gate};
        use crate::placement::{plan_all_stages, seed_placement, CompilerConfig};
        let arch = fig_example_arch();
        let config = CompilerConfig::default();
        let staged = stage_asap(2, &[Gate::cz(0, 1)]).unwrap();
        let initial = seed_placement(&arch, 2).unwrap();
        let plans = plan_all_stages(&arch, &staged, &config, &initial).unwrap();
        let (to_ent, to_storage) = movements_for_stage(&plans[0]);
        assert_eq!(to_ent.len(), 2);
        assert_eq!(to_storage.len(), 2);
        // the qubit with the smaller current x takes the left trap
        let site = arch.site_of_trap(to_ent[0].to).unwrap().0;
        let s = arch.site(site);
        let left_mv = to_ent.iter().find(|m| m.to == s.left).unwrap();
        let right_mv = to_ent.iter().find(|m| m.to == s.right).unwrap();
        assert!(arch.trap(left_mv.from).pos.x < arch.trap(right_mv.from).pos.x);
        // a fully reused stage has no movements at all
        let staged2 = stage_asap(2, &[Gate::cz(0, 1), Gate::cz(0, 1)]).unwrap();
        let plans2 = plan_all_stages(&arch, &staged2, &config, &initial).unwrap();
        let (in2, out2) = movements_for_stage(&plans2[1]);
        assert!(in2.is_empty(), "{in2:?}");
        let _ = out2;
    }
}
