//! Reuse-aware placement: simulated-annealing initial placement, per-stage
//! reuse matching, gate-to-site assignment, and return-to-storage assignment.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arch::{Architecture, SiteId, TrapId, ZoneKind};
use crate::circuit::{Gate, StagedCircuit};
use crate::error::{CompileError, Result};
use crate::geom::{distance, Point, COORD_EPS};
use crate::matching::{max_cardinality_matching, min_weight_full_matching};

#[derive(Debug, Clone)]
pub struct CompilerConfig {
    pub sa_iteration_limit: usize,
    pub sa_seed: u64,
    /// Initial Chebyshev radius (in site indices) of a gate's candidate set.
    pub delta: usize,
    /// Neighbouring storage traps kept along row/column for return candidates.
    pub k_neighbors: usize,
    /// Lookahead weight in the return cost.
    pub alpha: f64,
    /// Commit credit per kept qubit when comparing the reuse and no-reuse
    /// plans, in the same sqrt-um unit as the matching weights. A kept qubit
    /// skips its return trip and its next move-in, four atom transfers; the
    /// default converts that time through the movement-time law.
    pub reuse_transfer_discount: f64,
    pub reuse_enabled: bool,
    pub dynamic_placement_enabled: bool,
    pub sa_enabled: bool,
}

impl CompilerConfig {
    /// Movement time of one sqrt-um of weight under d = a * t^2, in us.
    fn us_per_sqrt_um(accel_m_s2: f64) -> f64 {
        (1e-6 / accel_m_s2).sqrt() * 1e6
    }

    /// Transfer-savings credit for the default hardware (4 transfers).
    pub fn default_reuse_discount(t_tran_us: f64, accel_m_s2: f64) -> f64 {
        4.0 * t_tran_us / Self::us_per_sqrt_um(accel_m_s2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta < 1 {
            return Err(CompileError::Input("delta must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CompileError::Input("alpha must lie in [0, 1]".into()));
        }
        if self.reuse_transfer_discount < 0.0 {
            return Err(CompileError::Input("reuse_transfer_discount must be non-negative".into()));
        }
        Ok(())
    }
}

impl Default for CompilerConfig {
    fn default() -> Self {
        CompilerConfig {
            sa_iteration_limit: 1000,
            sa_seed: 1,
            delta: 2,
            k_neighbors: 1,
            alpha: 0.1,
            reuse_transfer_discount: CompilerConfig::default_reuse_discount(15.0, 2750.0),
            reuse_enabled: true,
            dynamic_placement_enabled: true,
            sa_enabled: true,
        }
    }
}

/// A total qubit -> trap map.
pub type Placement = Vec<TrapId>;

// ---------------------------------------------------------------------------
// Cost model
// ---------------------------------------------------------------------------

/// Movement cost of a 2Q gate to a site: sum of square-root distances when
/// the qubits sit in different rows (sequential movements), max otherwise
/// (one AOD row moves them together). Distances are taken to the site's
/// reference (left-trap) position.
pub fn g_cost(arch: &Architecture, site: SiteId, a: Point, b: Point) -> f64 {
    let site_pos = arch.site_pos(site);
    let da = distance(site_pos, a).sqrt();
    let db = distance(site_pos, b).sqrt();
    if (a.y - b.y).abs() > COORD_EPS {
        da + db
    } else {
        da.max(db)
    }
}

/// Stage weight of Eq-style initial cost: earlier stages dominate.
pub fn stage_weight(t: usize) -> f64 {
    (1.0 - 0.1 * (t as f64 - 1.0)).max(0.1)
}

/// The middle site between the two qubits' nearest sites (floor midpoint in
/// site indices). Falls back to the site nearest the positional midpoint when
/// the index-midpoint site does not exist (irregular multi-zone layouts).
pub fn nearest_site_for_gate(arch: &Architecture, a: Point, b: Point) -> SiteId {
    let sa = arch.site(arch.nearest_site(a));
    let sb = arch.site(arch.nearest_site(b));
    let row = (sa.row + sb.row) / 2;
    let col = (sa.col + sb.col) / 2;
    match arch.site_by_row_col(row, col) {
        Some(s) => s,
        None => arch.nearest_site(Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)),
    }
}

/// Total weighted movement cost of an initial (storage-only) placement.
pub fn initial_placement_cost(arch: &Architecture, circuit: &StagedCircuit, m: &Placement) -> f64 {
    let mut total = 0.0;
    for (t, gate) in circuit.gates_with_stage() {
        let a = arch.trap(m[gate.qubits[0]]).pos;
        let b = arch.trap(m[gate.qubits[1]]).pos;
        let site = nearest_site_for_gate(arch, a, b);
        total += stage_weight(t) * g_cost(arch, site, a, b);
    }
    total
}

// ---------------------------------------------------------------------------
// Initial placement
// ---------------------------------------------------------------------------

/// Sequential placement: qubits in index order fill the storage row nearest
/// the first entanglement zone, wrapping row by row.
pub fn seed_placement(arch: &Architecture, num_qubits: usize) -> Result<Placement> {
    if arch.storage_traps.len() < num_qubits {
        return Err(CompileError::Capacity(format!(
            "{num_qubits} qubits need {num_qubits} storage traps, but only {} are available",
            arch.storage_traps.len()
        )));
    }
    let first_zone = *arch
        .entanglement_zones()
        .first()
        .ok_or_else(|| CompileError::Input("no entanglement zone".into()))?;
    let site_ys: Vec<f64> = arch
        .sites
        .iter()
        .filter(|s| s.zone_id == first_zone)
        .map(|s| arch.traps[s.left].pos.y)
        .collect();

    // Group storage traps into rows by y.
    let mut rows: Vec<(f64, Vec<TrapId>)> = Vec::new();
    let mut sorted = arch.storage_traps.clone();
    sorted.sort_by(|&a, &b| {
        let (pa, pb) = (arch.trap(a).pos, arch.trap(b).pos);
        pa.y.partial_cmp(&pb.y).unwrap().then(pa.x.partial_cmp(&pb.x).unwrap())
    });
    for id in sorted {
        let y = arch.trap(id).pos.y;
        match rows.last_mut() {
            Some((ry, v)) if (*ry - y).abs() <= COORD_EPS => v.push(id),
            _ => rows.push((y, vec![id])),
        }
    }
    rows.sort_by(|(ya, _), (yb, _)| {
        let da = site_ys.iter().map(|sy| (sy - ya).abs()).fold(f64::INFINITY, f64::min);
        let db = site_ys.iter().map(|sy| (sy - yb).abs()).fold(f64::INFINITY, f64::min);
        da.partial_cmp(&db).unwrap().then(ya.partial_cmp(yb).unwrap())
    });

    let order: Vec<TrapId> = rows.into_iter().flat_map(|(_, v)| v).collect();
    Ok(order.into_iter().take(num_qubits).collect())
}

/// Simulated annealing over the weighted gate-cost objective. Deterministic
/// for a given seed; returns the best placement visited, which never costs
/// more than the seed placement.
pub fn anneal_initial_placement(
    arch: &Architecture,
    circuit: &StagedCircuit,
    config: &CompilerConfig,
) -> Result<Placement> {
    let seed = seed_placement(arch, circuit.num_qubits)?;
    if !config.sa_enabled || circuit.g2 == 0 {
        return Ok(seed);
    }

    let gates: Vec<(usize, usize, usize, f64)> = circuit
        .gates_with_stage()
        .iter()
        .map(|(t, g)| (g.qubits[0], g.qubits[1], *t, stage_weight(*t)))
        .collect();
    let mut gates_on_qubit: Vec<Vec<usize>> = vec![Vec::new(); circuit.num_qubits];
    for (i, (a, b, _, _)) in gates.iter().enumerate() {
        gates_on_qubit[*a].push(i);
        gates_on_qubit[*b].push(i);
    }

    let mut current = seed.clone();
    let mut nearest: Vec<SiteId> = current.iter().map(|&t| arch.nearest_site(arch.trap(t).pos)).collect();

    let gate_cost = |m: &Placement, near: &[SiteId], gi: usize| -> f64 {
        let (qa, qb, _, w) = gates[gi];
        let (a, b) = (arch.trap(m[qa]).pos, arch.trap(m[qb]).pos);
        let (sa, sb) = (arch.site(near[qa]), arch.site(near[qb]));
        let site = arch
            .site_by_row_col((sa.row + sb.row) / 2, (sa.col + sb.col) / 2)
            .unwrap_or_else(|| arch.nearest_site(Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)));
        w * g_cost(arch, site, a, b)
    };

    let mut cost: f64 = (0..gates.len()).map(|gi| gate_cost(&current, &nearest, gi)).sum();
    if cost <= 0.0 {
        return Ok(seed);
    }

    let mut empties: Vec<TrapId> = {
        let used: BTreeSet<TrapId> = current.iter().copied().collect();
        arch.storage_traps.iter().copied().filter(|t| !used.contains(t)).collect()
    };
    let mut trap_owner: BTreeMap<TrapId, usize> =
        current.iter().enumerate().map(|(q, &t)| (t, q)).collect();

    let mut best = current.clone();
    let mut best_cost = cost;
    let mut temp = cost / 10.0;
    let mut rejects = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.sa_seed);

    for _ in 0..config.sa_iteration_limit {
        if rejects >= 200 {
            break;
        }
        enum Proposal {
            Swap(usize, usize),
            Jump(usize, usize), // qubit, index into empties
        }
        let proposal = if circuit.num_qubits >= 2 && (empties.is_empty() || rng.gen_bool(0.5)) {
            let qa = rng.gen_range(0..circuit.num_qubits);
            let mut qb = rng.gen_range(0..circuit.num_qubits);
            if qa == qb {
                qb = (qb + 1) % circuit.num_qubits;
            }
            Proposal::Swap(qa, qb)
        } else if !empties.is_empty() {
            Proposal::Jump(rng.gen_range(0..circuit.num_qubits), rng.gen_range(0..empties.len()))
        } else {
            break; // single qubit, no empty traps: nothing to explore
        };

        let touched: Vec<usize> = match proposal {
            Proposal::Swap(a, b) => {
                let mut v = gates_on_qubit[a].clone();
                v.extend(&gates_on_qubit[b]);
                v.sort_unstable();
                v.dedup();
                v
            }
            Proposal::Jump(q, _) => gates_on_qubit[q].clone(),
        };
        let old: f64 = touched.iter().map(|&gi| gate_cost(&current, &nearest, gi)).sum();

        // apply
        type Undo = Box<dyn Fn(&mut Placement, &mut Vec<SiteId>)>;
        let undo: Undo;
        match proposal {
            Proposal::Swap(a, b) => {
                current.swap(a, b);
                nearest.swap(a, b);
                undo = Box::new(move |m, n| {
                    m.swap(a, b);
                    n.swap(a, b);
                });
            }
            Proposal::Jump(q, ei) => {
                let from = current[q];
                let to = empties[ei];
                let old_near = nearest[q];
                current[q] = to;
                nearest[q] = arch.nearest_site(arch.trap(to).pos);
                undo = Box::new(move |m, n| {
                    m[q] = from;
                    n[q] = old_near;
                });
            }
        }
        let new: f64 = touched.iter().map(|&gi| gate_cost(&current, &nearest, gi)).sum();
        let delta = new - old;
        let accept = delta <= 0.0 || rng.gen_bool((-delta / temp).exp().clamp(0.0, 1.0));
        if accept {
            cost += delta;
            match proposal {
                Proposal::Swap(a, b) => {
                    trap_owner.insert(current[a], a);
                    trap_owner.insert(current[b], b);
                }
                Proposal::Jump(q, ei) => {
                    let vacated = trap_owner
                        .iter()
                        .find(|(_, &owner)| owner == q)
                        .map(|(&t, _)| t)
                        .filter(|&t| t != current[q]);
                    if let Some(vacated) = vacated {
                        trap_owner.remove(&vacated);
                        empties[ei] = vacated;
                    }
                    trap_owner.insert(current[q], q);
                }
            }
            if cost < best_cost - 1e-12 {
                best_cost = cost;
                best = current.clone();
            }
            rejects = 0;
        } else {
            undo(&mut current, &mut nearest);
            rejects += 1;
        }
        temp *= 0.98;
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Per-stage planning
// ---------------------------------------------------------------------------

/// The committed decisions around one Rydberg stage: where its gates run,
/// which qubits stay for the next stage, and where the others return.
#[derive(Debug, Clone)]
pub struct StagePlan {
    /// 1-based Rydberg stage index.
    pub t: usize,
    /// Stage-gate index -> assigned site (inherited sites included).
    pub gate_sites: BTreeMap<usize, SiteId>,
    /// Next-stage gate index -> site it inherits through reuse.
    pub reuse_next: BTreeMap<usize, SiteId>,
    /// Qubits kept at their sites across the boundary after this stage.
    pub kept: BTreeSet<usize>,
    /// Returning qubit -> storage trap.
    pub returns: BTreeMap<usize, TrapId>,
    /// Placement entering the stage (before move-in).
    pub before: Placement,
    /// Placement while the Rydberg laser fires.
    pub during: Placement,
    /// Placement after the returns.
    pub after: Placement,
    /// Summed matching weights used for the commit decision.
    pub cost: f64,
    pub used_reuse: bool,
}

/// Maximum-cardinality matching between gates of two consecutive stages;
/// an edge exists when the gates share a qubit. Returns, per next-stage gate
/// index, the index of the current-stage gate whose site it inherits.
pub fn match_reuse(stage_gates: &[Gate], next_gates: &[Gate]) -> BTreeMap<usize, usize> {
    let adj: Vec<Vec<usize>> = stage_gates
        .iter()
        .map(|g| {
            next_gates
                .iter()
                .enumerate()
                .filter(|(_, n)| n.qubits.iter().any(|q| g.qubits.contains(q)))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let matched = max_cardinality_matching(next_gates.len(), &adj);
    matched
        .into_iter()
        .enumerate()
        .filter_map(|(gt, gn)| gn.map(|gn| (gn, gt)))
        .collect()
}

/// Edge weight for assigning `gate` (qubit positions `a`, `b`) to `site`,
/// including the movement cost of any next-stage partner that will join the
/// surviving qubit there.
pub fn gate_edge_weight(
    arch: &Architecture,
    site: SiteId,
    a: Point,
    b: Point,
    incoming: &[Point],
) -> f64 {
    let mut w = g_cost(arch, site, a, b);
    let site_pos = arch.site_pos(site);
    for p in incoming {
        w += distance(site_pos, *p).sqrt();
    }
    w
}

/// Assign the given gates to Rydberg sites by minimum-weight full matching
/// over candidate neighbourhoods; the neighbourhood radius doubles until a
/// full matching exists.
pub fn place_gates(
    arch: &Architecture,
    gates: &[(usize, Point, Point)],
    reuse_sites: &BTreeSet<SiteId>,
    incoming: &BTreeMap<usize, Vec<Point>>,
    delta: usize,
) -> Result<(BTreeMap<usize, SiteId>, f64)> {
    if gates.is_empty() {
        return Ok((BTreeMap::new(), 0.0));
    }
    let free_sites = arch.sites.len().saturating_sub(reuse_sites.len());
    if gates.len() > free_sites {
        return Err(CompileError::Capacity(format!(
            "stage needs {} sites but only {} are free",
            gates.len(),
            free_sites
        )));
    }
    let anchors: Vec<(usize, usize)> = gates
        .iter()
        .map(|&(_, a, b)| {
            let s = arch.site(nearest_site_for_gate(arch, a, b));
            (s.row, s.col)
        })
        .collect();
    let (rows, cols) = arch.site_grid_dims();
    let cap = rows.max(cols);
    let mut radius = delta.max(1);

    loop {
        // Candidate sites per gate: Chebyshev ball around the anchor minus
        // the reuse-occupied sites.
        let candidates: Vec<Vec<SiteId>> = anchors
            .iter()
            .map(|&(ar, ac)| {
                arch.sites
                    .iter()
                    .enumerate()
                    .filter(|(sid, s)| {
                        !reuse_sites.contains(sid)
                            && s.row.abs_diff(ar) <= radius
                            && s.col.abs_diff(ac) <= radius
                    })
                    .map(|(sid, _)| sid)
                    .collect()
            })
            .collect();
        let mut union: Vec<SiteId> = candidates.iter().flatten().copied().collect();
        union.sort_unstable();
        union.dedup();
        let index_of: BTreeMap<SiteId, usize> =
            union.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let adj: Vec<Vec<usize>> = candidates
            .iter()
            .map(|c| c.iter().map(|s| index_of[s]).collect())
            .collect();
        let feasible =
            max_cardinality_matching(union.len(), &adj).iter().flatten().count() == gates.len();
        if !feasible {
            if radius >= cap {
                return Err(CompileError::Capacity(format!(
                    "no full gate-to-site matching for {} gates even at radius {}",
                    gates.len(),
                    radius
                )));
            }
            radius = (radius * 2).min(cap);
            continue;
        }

        let cand_sets: Vec<BTreeSet<usize>> =
            adj.iter().map(|c| c.iter().copied().collect()).collect();
        let weight = |l: usize, r: usize| -> Option<f64> {
            if !cand_sets[l].contains(&r) {
                return None;
            }
            let (gi, a, b) = gates[l];
            let inc = incoming.get(&gi).map(Vec::as_slice).unwrap_or(&[]);
            Some(gate_edge_weight(arch, union[r], a, b, inc))
        };
        let (assign, total) = min_weight_full_matching(gates.len(), union.len(), weight)
            .ok_or_else(|| CompileError::Internal("feasible matching vanished".into()))?;
        let map = gates
            .iter()
            .enumerate()
            .map(|(l, &(gi, _, _))| (gi, union[assign[l]]))
            .collect();
        return Ok((map, total));
    }
}

/// Candidate storage traps for a returning qubit: all empty traps inside the
/// bounding box of (a) the qubit's home trap, (b) the storage trap nearest
/// its current site plus the k-neighbours along that trap's row and column,
/// and (c) the storage trap nearest its related qubit, when one exists.
pub fn return_candidates(
    arch: &Architecture,
    current: Point,
    home: TrapId,
    related: Option<Point>,
    occupied: &BTreeSet<TrapId>,
    k: usize,
) -> Vec<TrapId> {
    let mut anchors: Vec<Point> = vec![arch.trap(home).pos];
    let near = arch.nearest_storage_trap(current);
    let nt = arch.trap(near);
    anchors.push(nt.pos);
    for d in 1..=k {
        for (r, c) in [
            (nt.row.wrapping_sub(d), nt.col),
            (nt.row + d, nt.col),
            (nt.row, nt.col.wrapping_sub(d)),
            (nt.row, nt.col + d),
        ] {
            if let Some(id) = arch.trap_by_key(nt.slm_id, r, c) {
                anchors.push(arch.trap(id).pos);
            }
        }
    }
    if let Some(rp) = related {
        anchors.push(arch.trap(arch.nearest_storage_trap(rp)).pos);
    }
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &anchors {
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
    }
    arch.storage_traps
        .iter()
        .copied()
        .filter(|&t| {
            if occupied.contains(&t) {
                return false;
            }
            let p = arch.trap(t).pos;
            p.x >= min_x - COORD_EPS
                && p.x <= max_x + COORD_EPS
                && p.y >= min_y - COORD_EPS
                && p.y <= max_y + COORD_EPS
        })
        .collect()
}

/// Return weight of Eq-3 form: travel of the qubit plus a discounted
/// lookahead toward its related qubit.
pub fn return_edge_weight(trap_pos: Point, q_pos: Point, related: Option<Point>, alpha: f64) -> f64 {
    let mut w = distance(trap_pos, q_pos).sqrt();
    if let Some(rp) = related {
        w += alpha * distance(trap_pos, rp).sqrt();
    }
    w
}

/// Assign returning qubits to storage traps by minimum-weight full matching.
/// `qubits` carries (qubit, current position, related-qubit position).
pub fn place_returns(
    arch: &Architecture,
    qubits: &[(usize, Point, Option<Point>)],
    home: &[TrapId],
    occupied: &BTreeSet<TrapId>,
    config: &CompilerConfig,
) -> Result<(BTreeMap<usize, TrapId>, f64)> {
    if qubits.is_empty() {
        return Ok((BTreeMap::new(), 0.0));
    }
    if !config.dynamic_placement_enabled {
        // Static placement: every qubit returns to its home trap.
        let mut map = BTreeMap::new();
        let mut total = 0.0;
        for &(q, pos, related) in qubits {
            let t = home[q];
            if occupied.contains(&t) {
                return Err(CompileError::Internal(format!(
                    "home trap of qubit {q} is occupied in static placement"
                )));
            }
            map.insert(q, t);
            total += return_edge_weight(arch.trap(t).pos, pos, related, config.alpha);
        }
        return Ok((map, total));
    }

    let solve = |cands: &[Vec<TrapId>]| -> Option<(Vec<usize>, f64, Vec<TrapId>)> {
        let mut union: Vec<TrapId> = cands.iter().flatten().copied().collect();
        union.sort_unstable();
        union.dedup();
        let index_of: BTreeMap<TrapId, usize> =
            union.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let sets: Vec<BTreeSet<usize>> = cands
            .iter()
            .map(|c| c.iter().map(|t| index_of[t]).collect())
            .collect();
        let weight = |l: usize, r: usize| -> Option<f64> {
            if !sets[l].contains(&r) {
                return None;
            }
            let (_, pos, related) = qubits[l];
            Some(return_edge_weight(arch.trap(union[r]).pos, pos, related, config.alpha))
        };
        min_weight_full_matching(qubits.len(), union.len(), weight)
            .map(|(a, w)| (a, w, union))
    };

    let boxed: Vec<Vec<TrapId>> = qubits
        .iter()
        .map(|&(q, pos, related)| {
            return_candidates(arch, pos, home[q], related, occupied, config.k_neighbors)
        })
        .collect();
    let solved = solve(&boxed).or_else(|| {
        // Bounding boxes can starve when home traps were taken while a qubit
        // stayed in the entanglement zone; widen to every empty storage trap.
        let all: Vec<TrapId> = arch
            .storage_traps
            .iter()
            .copied()
            .filter(|t| !occupied.contains(t))
            .collect();
        let wide: Vec<Vec<TrapId>> = qubits.iter().map(|_| all.clone()).collect();
        solve(&wide)
    });
    let (assign, total, union) = solved.ok_or_else(|| {
        CompileError::Capacity("not enough empty storage traps for returning qubits".into())
    })?;
    let map = qubits
        .iter()
        .enumerate()
        .map(|(l, &(q, _, _))| (q, union[assign[l]]))
        .collect();
    Ok((map, total))
}

/// Plan one Rydberg stage: place its gates (honouring sites inherited from
/// the previous stage's committed reuse), pick the reuse matching toward the
/// next stage, and assign returns. Builds the reuse and no-reuse variants
/// and commits the cheaper one.
pub fn plan_stage(
    arch: &Architecture,
    circuit: &StagedCircuit,
    config: &CompilerConfig,
    t: usize,
    before: &Placement,
    home: &[TrapId],
    inherited: &BTreeMap<usize, SiteId>,
) -> Result<StagePlan> {
    let stage_gates = circuit.rydberg_stage(t);
    let next_gates = circuit.rydberg_stage(t + 1);

    let build = |with_reuse: bool| -> Result<StagePlan> {
        let matching = if with_reuse && !next_gates.is_empty() {
            match_reuse(stage_gates, next_gates)
        } else {
            BTreeMap::new()
        };

        // Movement lookahead: the partner qubit joining a surviving qubit.
        let mut incoming: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
        let mut kept: BTreeSet<usize> = BTreeSet::new();
        for (&gn, &gt) in &matching {
            let this = &stage_gates[gt];
            let next = &next_gates[gn];
            for &q in &next.qubits {
                if this.qubits.contains(&q) {
                    kept.insert(q);
                } else {
                    incoming
                        .entry(gt)
                        .or_default()
                        .push(arch.trap(before[q]).pos);
                }
            }
        }

        let reuse_sites: BTreeSet<SiteId> = inherited.values().copied().collect();
        let to_place: Vec<(usize, Point, Point)> = stage_gates
            .iter()
            .enumerate()
            .filter(|(gi, _)| !inherited.contains_key(gi))
            .map(|(gi, g)| {
                (gi, arch.trap(before[g.qubits[0]]).pos, arch.trap(before[g.qubits[1]]).pos)
            })
            .collect();
        let (placed, w_gates) =
            place_gates(arch, &to_place, &reuse_sites, &incoming, config.delta)?;
        let mut gate_sites = inherited.clone();
        gate_sites.extend(placed);

        // Placement during the pulse: both qubits of every gate at its site.
        let mut during = before.clone();
        for (&gi, &site) in &gate_sites {
            let g = &stage_gates[gi];
            let (qa, qb) = (g.qubits[0], g.qubits[1]);
            let s = arch.site(site);
            let (lt, rt) = (s.left, s.right);
            let a_here = before[qa] == lt || before[qa] == rt;
            let b_here = before[qb] == lt || before[qb] == rt;
            match (a_here, b_here) {
                (true, true) => {}
                (true, false) => during[qb] = if before[qa] == lt { rt } else { lt },
                (false, true) => during[qa] = if before[qb] == lt { rt } else { lt },
                (false, false) => {
                    let (pa, pb) = (arch.trap(before[qa]).pos, arch.trap(before[qb]).pos);
                    let a_left = pa.x < pb.x - COORD_EPS
                        || ((pa.x - pb.x).abs() <= COORD_EPS && qa < qb);
                    during[qa] = if a_left { lt } else { rt };
                    during[qb] = if a_left { rt } else { lt };
                }
            }
        }
        debug_assert_injective(&during);

        // Returns for every stage qubit not kept.
        let stage_qubits = circuit.rydberg_stage_qubits(t);
        let occupied: BTreeSet<TrapId> = during
            .iter()
            .filter(|&&tr| arch.trap(tr).zone_kind == ZoneKind::Storage)
            .copied()
            .collect();
        let returning: Vec<(usize, Point, Option<Point>)> = stage_qubits
            .iter()
            .copied()
            .filter(|q| !kept.contains(q))
            .map(|q| {
                let related = next_gates
                    .iter()
                    .find(|g| g.qubits.contains(&q))
                    .map(|g| {
                        let other = if g.qubits[0] == q { g.qubits[1] } else { g.qubits[0] };
                        arch.trap(during[other]).pos
                    });
                (q, arch.trap(during[q]).pos, related)
            })
            .collect();
        let (returns, w_ret) = place_returns(arch, &returning, home, &occupied, config)?;

        let mut after = during.clone();
        for (&q, &tr) in &returns {
            after[q] = tr;
        }
        debug_assert_injective(&after);

        let reuse_next = matching
            .iter()
            .map(|(&gn, &gt)| (gn, gate_sites[&gt]))
            .collect();
        Ok(StagePlan {
            t,
            gate_sites,
            reuse_next,
            kept,
            returns,
            before: before.clone(),
            during,
            after,
            cost: w_gates + w_ret,
            used_reuse: with_reuse && !matching.is_empty(),
        })
    };

    if !config.reuse_enabled || next_gates.is_empty() {
        return build(false);
    }
    let with = build(true)?;
    let without = build(false)?;
    // Each kept qubit also saves atom transfers that the matching weights do
    // not see; credit them in the comparison. Ties go to the reuse plan.
    let credit = config.reuse_transfer_discount * with.kept.len() as f64;
    if with.cost - credit <= without.cost + 1e-12 {
        Ok(with)
    } else {
        Ok(without)
    }
}

fn debug_assert_injective(m: &Placement) {
    if cfg!(debug_assertions) {
        let mut seen = BTreeSet::new();
        for &t in m {
            assert!(seen.insert(t), "placement maps two qubits to one trap");
        }
    }
}

/// Run the whole per-stage planning pipeline from an initial placement.
pub fn plan_all_stages(
    arch: &Architecture,
    circuit: &StagedCircuit,
    config: &CompilerConfig,
    initial: &Placement,
) -> Result<Vec<StagePlan>> {
    let mut plans = Vec::new();
    let mut current = initial.clone();
    let mut home = initial.clone();
    let mut inherited: BTreeMap<usize, SiteId> = BTreeMap::new();
    for t in 1..=circuit.num_rydberg_stages() {
        let plan = plan_stage(arch, circuit, config, t, &current, &home, &inherited)?;
        for (&q, &tr) in &plan.returns {
            home[q] = tr;
        }
        current = plan.after.clone();
        inherited = plan.reuse_next.clone();
        plans.push(plan);
    }
    Ok(plans)
}
