//! Zoned-architecture specification: parsing, validation, and geometric queries.
//!
//! An architecture is a set of AOD arrays plus a set of zones (storage,
//! entanglement, readout), each zone holding zero or more SLM trap arrays.
//! Parsing derives the flat trap list and, inside entanglement zones, the
//! Rydberg sites (pairs of adjacent traps in the same row).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CompileError, Result};
use crate::geom::{distance, Point, Rect, COORD_EPS};

pub type TrapId = usize;
pub type SiteId = usize;

// ---------------------------------------------------------------------------
// Specification document (the on-disk JSON schema)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AodSpec {
    pub aod_id: usize,
    pub max_num_col: usize,
    pub max_num_row: usize,
    /// Minimum separation between any two rows and any two columns, in um.
    pub min_sep: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlmSpec {
    pub slm_id: usize,
    pub num_col: usize,
    pub num_row: usize,
    /// (x, y) trap separation in um.
    pub sep: [f64; 2],
    /// Position of the bottom-left trap, in um.
    pub offset: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneKind {
    Entanglement,
    Storage,
    Readout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub zone_id: usize,
    pub kind: ZoneKind,
    /// Bottom-left corner of the zone region, in um.
    pub offset: [f64; 2],
    /// (width, height) of the zone region, in um.
    pub dimension: [f64; 2],
    #[serde(default)]
    pub slms: Vec<SlmSpec>,
}

impl ZoneSpec {
    pub fn rect(&self) -> Rect {
        Rect {
            x: self.offset[0],
            y: self.offset[1],
            width: self.dimension[0],
            height: self.dimension[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub aods: Vec<AodSpec>,
    pub zones: Vec<ZoneSpec>,
}

// ---------------------------------------------------------------------------
// Derived geometry
// ---------------------------------------------------------------------------

/// One SLM trap with its resolved position and owning zone.
#[derive(Debug, Clone, PartialEq)]
pub struct Trap {
    pub slm_id: usize,
    pub row: usize,
    pub col: usize,
    pub pos: Point,
    pub zone_id: usize,
    pub zone_kind: ZoneKind,
}

/// Which trap of a Rydberg site a qubit occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteSide {
    Left,
    Right,
}

/// A pair of adjacent same-row traps in an entanglement zone. The left trap
/// is the site's reference location for all distance computations.
#[derive(Debug, Clone, PartialEq)]
pub struct RydbergSite {
    /// Global site row index (shared across all entanglement zones, by y).
    pub row: usize,
    /// Global site column index (by reference x).
    pub col: usize,
    pub left: TrapId,
    pub right: TrapId,
    pub zone_id: usize,
}

#[derive(Debug, Clone)]
pub struct Architecture {
    pub spec: ArchSpec,
    pub traps: Vec<Trap>,
    pub sites: Vec<RydbergSite>,
    /// Trap ids of all storage-zone traps.
    pub storage_traps: Vec<TrapId>,
    /// Non-fatal findings from validation (e.g. zones closer than the site pitch).
    pub warnings: Vec<String>,
    trap_index: BTreeMap<(usize, usize, usize), TrapId>,
    site_by_rc: BTreeMap<(usize, usize), SiteId>,
    /// For entanglement-zone traps: the site they belong to and the side.
    trap_site: Vec<Option<(SiteId, SiteSide)>>,
}

impl Architecture {
    /// Parse and validate an architecture from its JSON text.
    pub fn parse(doc: &str) -> Result<Architecture> {
        let spec: ArchSpec = serde_json::from_str(doc)
            .map_err(|e| CompileError::Input(format!("architecture schema: {e}")))?;
        Architecture::from_spec(spec)
    }

    pub fn from_spec(spec: ArchSpec) -> Result<Architecture> {
        validate_spec(&spec)?;

        let mut traps = Vec::new();
        let mut trap_index = BTreeMap::new();
        for zone in &spec.zones {
            let zrect = zone.rect();
            for slm in &zone.slms {
                for r in 0..slm.num_row {
                    for c in 0..slm.num_col {
                        let pos = Point::new(
                            slm.offset[0] + c as f64 * slm.sep[0],
                            slm.offset[1] + r as f64 * slm.sep[1],
                        );
                        if !zrect.contains(pos) {
                            return Err(CompileError::Input(format!(
                                "trap ({},{},{}) at ({},{}) lies outside zone {}",
                                slm.slm_id, r, c, pos.x, pos.y, zone.zone_id
                            )));
                        }
                        let id = traps.len();
                        traps.push(Trap {
                            slm_id: slm.slm_id,
                            row: r,
                            col: c,
                            pos,
                            zone_id: zone.zone_id,
                            zone_kind: zone.kind,
                        });
                        trap_index.insert((slm.slm_id, r, c), id);
                    }
                }
            }
        }

        let sites = pair_sites(&spec, &traps)?;

        let mut trap_site = vec![None; traps.len()];
        let mut site_by_rc = BTreeMap::new();
        for (sid, site) in sites.iter().enumerate() {
            trap_site[site.left] = Some((sid, SiteSide::Left));
            trap_site[site.right] = Some((sid, SiteSide::Right));
            site_by_rc.insert((site.row, site.col), sid);
        }

        let storage_traps = traps
            .iter()
            .enumerate()
            .filter(|(_, t)| t.zone_kind == ZoneKind::Storage)
            .map(|(i, _)| i)
            .collect();

        let warnings = zone_separation_warnings(&spec);

        Ok(Architecture {
            spec,
            traps,
            sites,
            storage_traps,
            warnings,
            trap_index,
            site_by_rc,
            trap_site,
        })
    }

    pub fn trap(&self, id: TrapId) -> &Trap {
        &self.traps[id]
    }

    pub fn site(&self, id: SiteId) -> &RydbergSite {
        &self.sites[id]
    }

    /// Reference position of a site (its left trap).
    pub fn site_pos(&self, id: SiteId) -> Point {
        self.traps[self.sites[id].left].pos
    }

    pub fn trap_by_key(&self, slm_id: usize, row: usize, col: usize) -> Option<TrapId> {
        self.trap_index.get(&(slm_id, row, col)).copied()
    }

    pub fn site_by_row_col(&self, row: usize, col: usize) -> Option<SiteId> {
        self.site_by_rc.get(&(row, col)).copied()
    }

    /// Site membership of an entanglement-zone trap.
    pub fn site_of_trap(&self, id: TrapId) -> Option<(SiteId, SiteSide)> {
        self.trap_site[id]
    }

    /// The site whose reference position is closest to `p`; ties broken by
    /// lower row, then lower column.
    pub fn nearest_site(&self, p: Point) -> SiteId {
        assert!(!self.sites.is_empty(), "architecture has no Rydberg sites");
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (id, site) in self.sites.iter().enumerate() {
            let d = distance(p, self.traps[site.left].pos);
            if d + COORD_EPS < best_d {
                best = id;
                best_d = d;
            } else if (d - best_d).abs() <= COORD_EPS {
                let b = &self.sites[best];
                if (site.row, site.col) < (b.row, b.col) {
                    best = id;
                }
            }
        }
        best
    }

    /// The storage trap closest to `p`; ties broken by lower row, then lower
    /// column, then lower SLM id.
    pub fn nearest_storage_trap(&self, p: Point) -> TrapId {
        assert!(!self.storage_traps.is_empty(), "architecture has no storage traps");
        let mut best = self.storage_traps[0];
        let mut best_d = f64::INFINITY;
        for &id in &self.storage_traps {
            let t = &self.traps[id];
            let d = distance(p, t.pos);
            if d + COORD_EPS < best_d {
                best = id;
                best_d = d;
            } else if (d - best_d).abs() <= COORD_EPS {
                let b = &self.traps[best];
                if (t.row, t.col, t.slm_id) < (b.row, b.col, b.slm_id) {
                    best = id;
                }
            }
        }
        best
    }

    /// All entanglement zone ids, ascending.
    pub fn entanglement_zones(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .spec
            .zones
            .iter()
            .filter(|z| z.kind == ZoneKind::Entanglement)
            .map(|z| z.zone_id)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Number of distinct site rows / columns (global indices).
    pub fn site_grid_dims(&self) -> (usize, usize) {
        let rows = self.sites.iter().map(|s| s.row).max().map_or(0, |m| m + 1);
        let cols = self.sites.iter().map(|s| s.col).max().map_or(0, |m| m + 1);
        (rows, cols)
    }

    pub fn aod(&self, aod_id: usize) -> Option<&AodSpec> {
        self.spec.aods.iter().find(|a| a.aod_id == aod_id)
    }
}

fn validate_spec(spec: &ArchSpec) -> Result<()> {
    let fail = |msg: String| Err(CompileError::Input(msg));

    let mut aod_ids = Vec::new();
    for aod in &spec.aods {
        if aod.max_num_col < 1 || aod.max_num_row < 1 {
            return fail(format!("aod {} must have at least one row and column", aod.aod_id));
        }
        if aod.min_sep <= 0.0 {
            return fail(format!("aod {} min_sep must be positive", aod.aod_id));
        }
        if aod_ids.contains(&aod.aod_id) {
            return fail(format!("duplicate aod_id {}", aod.aod_id));
        }
        aod_ids.push(aod.aod_id);
    }

    let mut zone_ids = Vec::new();
    let mut slm_ids = Vec::new();
    for zone in &spec.zones {
        if zone_ids.contains(&zone.zone_id) {
            return fail(format!("duplicate zone_id {}", zone.zone_id));
        }
        zone_ids.push(zone.zone_id);
        if zone.dimension[0] <= 0.0 || zone.dimension[1] <= 0.0 {
            return fail(format!("zone {} has non-positive dimension", zone.zone_id));
        }
        for slm in &zone.slms {
            if slm.num_col < 1 || slm.num_row < 1 {
                return fail(format!("slm {} must have at least one row and column", slm.slm_id));
            }
            if slm.sep[0] <= 0.0 || slm.sep[1] <= 0.0 {
                return fail(format!("slm {} separation must be positive", slm.slm_id));
            }
            if slm_ids.contains(&slm.slm_id) {
                return fail(format!("duplicate slm_id {}", slm.slm_id));
            }
            slm_ids.push(slm.slm_id);
        }
    }

    for (i, a) in spec.zones.iter().enumerate() {
        for b in spec.zones.iter().skip(i + 1) {
            if a.rect().overlaps(&b.rect()) {
                return fail(format!("zones {} and {} overlap", a.zone_id, b.zone_id));
            }
        }
    }

    if !spec.zones.iter().any(|z| z.kind == ZoneKind::Storage) {
        return fail("architecture needs at least one storage zone".into());
    }
    if !spec.zones.iter().any(|z| z.kind == ZoneKind::Entanglement) {
        return fail("architecture needs at least one entanglement zone".into());
    }
    Ok(())
}

/// Pair entanglement-zone traps into Rydberg sites: sort traps by (y, x);
/// consecutive traps with equal y form one site, left trap first. Site rows
/// and columns are indexed globally across zones by distinct y and x values.
fn pair_sites(spec: &ArchSpec, traps: &[Trap]) -> Result<Vec<RydbergSite>> {
    let mut pairs: Vec<(Point, TrapId, TrapId, usize)> = Vec::new();
    for zone in &spec.zones {
        if zone.kind != ZoneKind::Entanglement {
            continue;
        }
        let mut zone_traps: Vec<TrapId> = traps
            .iter()
            .enumerate()
            .filter(|(_, t)| t.zone_id == zone.zone_id)
            .map(|(i, _)| i)
            .collect();
        zone_traps.sort_by(|&a, &b| {
            let (pa, pb) = (traps[a].pos, traps[b].pos);
            pa.y.partial_cmp(&pb.y)
                .unwrap()
                .then(pa.x.partial_cmp(&pb.x).unwrap())
        });
        let mut it = zone_traps.into_iter().peekable();
        while let Some(left) = it.next() {
            let right = it.next().ok_or_else(|| {
                CompileError::Input(format!(
                    "unpaired trap in entanglement zone {} at ({},{})",
                    zone.zone_id, traps[left].pos.x, traps[left].pos.y
                ))
            })?;
            if (traps[left].pos.y - traps[right].pos.y).abs() > COORD_EPS {
                return Err(CompileError::Input(format!(
                    "unpaired trap in entanglement zone {} at ({},{})",
                    zone.zone_id, traps[left].pos.x, traps[left].pos.y
                )));
            }
            pairs.push((traps[left].pos, left, right, zone.zone_id));
        }
    }

    // Global (row, col) indices from distinct reference coordinates.
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.0.y).collect();
    let mut xs: Vec<f64> = pairs.iter().map(|p| p.0.x).collect();
    dedup_coords(&mut ys);
    dedup_coords(&mut xs);

    let mut sites: Vec<RydbergSite> = pairs
        .into_iter()
        .map(|(pos, left, right, zone_id)| RydbergSite {
            row: coord_index(&ys, pos.y),
            col: coord_index(&xs, pos.x),
            left,
            right,
            zone_id,
        })
        .collect();
    sites.sort_by_key(|s| (s.row, s.col));
    Ok(sites)
}

fn dedup_coords(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() <= COORD_EPS);
}

fn coord_index(sorted: &[f64], value: f64) -> usize {
    sorted
        .iter()
        .position(|&c| (c - value).abs() <= COORD_EPS)
        .expect("coordinate must be indexed")
}

/// Warn (do not fail) when two zones of different kinds sit closer than the
/// largest intra-entanglement site pitch.
fn zone_separation_warnings(spec: &ArchSpec) -> Vec<String> {
    let mut pitch: f64 = 0.0;
    for zone in &spec.zones {
        if zone.kind != ZoneKind::Entanglement {
            continue;
        }
        // Within one zone, SLMs share the pitch structure: row pitch is sep.y,
        // the gap between neighbouring sites along x is sep.x minus the
        // in-site trap spacing (the x offset difference of the paired SLMs).
        let mut offs: Vec<f64> = zone.slms.iter().map(|s| s.offset[0]).collect();
        offs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let in_site = if offs.len() >= 2 { offs[1] - offs[0] } else { 0.0 };
        for slm in &zone.slms {
            pitch = pitch.max(slm.sep[1]).max(slm.sep[0] - in_site);
        }
    }
    let mut warnings = Vec::new();
    for (i, a) in spec.zones.iter().enumerate() {
        for b in spec.zones.iter().skip(i + 1) {
            if a.kind == b.kind {
                continue;
            }
            let gap = a.rect().gap(&b.rect());
            if gap + COORD_EPS < pitch {
                warnings.push(format!(
                    "zones {} and {} are separated by {:.3} um, below the site pitch {:.3} um",
                    a.zone_id, b.zone_id, gap, pitch
                ));
            }
        }
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{fig_example_arch, reference_arch, two_zone_arch};

    #[test]
    fn reference_architecture_counts() {
        let arch = reference_arch();
        assert_eq!(arch.sites.len(), 140);
        assert_eq!(arch.storage_traps.len(), 10_000);
        assert!(arch.warnings.is_empty(), "{:?}", arch.warnings);
        let (rows, cols) = arch.site_grid_dims();
        assert_eq!((rows, cols), (7, 20));
    }

    #[test]
    fn minimal_architecture() {
        let doc = r#"{
          "aods": [{"aod_id": 0, "max_num_col": 4, "max_num_row": 4, "min_sep": 2.0}],
          "zones": [
            {"zone_id": 0, "kind": "storage", "offset": [0, 0], "dimension": [4, 4],
             "slms": [{"slm_id": 0, "num_col": 1, "num_row": 1, "sep": [3, 3], "offset": [1, 1]}]},
            {"zone_id": 1, "kind": "entanglement", "offset": [0, 14], "dimension": [6, 4],
             "slms": [{"slm_id": 1, "num_col": 1, "num_row": 1, "sep": [12, 10], "offset": [1, 15]},
                      {"slm_id": 2, "num_col": 1, "num_row": 1, "sep": [12, 10], "offset": [3, 15]}]}
          ]
        }"#;
        let arch = Architecture::parse(doc).unwrap();
        assert_eq!(arch.sites.len(), 1);
        assert_eq!(arch.storage_traps.len(), 1);
    }

    #[test]
    fn two_zone_architecture_counts() {
        let arch = two_zone_arch();
        assert_eq!(arch.sites.len(), 60);
        let (rows, cols) = arch.site_grid_dims();
        assert_eq!((rows, cols), (6, 10));
    }

    #[test]
    fn trap_positions_recompute() {
        let arch = fig_example_arch();
        for zone in &arch.spec.zones {
            for slm in &zone.slms {
                for t in arch.traps.iter().filter(|t| t.slm_id == slm.slm_id) {
                    let expect = Point::new(
                        slm.offset[0] + t.col as f64 * slm.sep[0],
                        slm.offset[1] + t.row as f64 * slm.sep[1],
                    );
                    assert!(t.pos.approx_eq(&expect));
                }
            }
        }
    }

    #[test]
    fn sites_share_row_and_zone() {
        let arch = two_zone_arch();
        for site in &arch.sites {
            let (l, r) = (arch.trap(site.left), arch.trap(site.right));
            assert!((l.pos.y - r.pos.y).abs() <= COORD_EPS);
            assert_eq!(l.zone_id, r.zone_id);
            assert_eq!(l.zone_id, site.zone_id);
            assert!(l.pos.x < r.pos.x);
        }
    }

    #[test]
    fn nearest_site_examples() {
        let arch = fig_example_arch();
        // Exact reference position of a site maps to itself.
        let s = arch.site_by_row_col(1, 3).unwrap();
        assert_eq!(arch.nearest_site(arch.site_pos(s)), s);
        // Equidistant between (0,0) and (0,1) breaks ties toward lower column.
        let p0 = arch.site_pos(arch.site_by_row_col(0, 0).unwrap());
        let p1 = arch.site_pos(arch.site_by_row_col(0, 1).unwrap());
        let mid = Point::new((p0.x + p1.x) / 2.0, p0.y);
        let found = arch.nearest_site(mid);
        assert_eq!((arch.site(found).row, arch.site(found).col), (0, 0));
    }

    #[test]
    fn nearest_site_matches_exhaustive_scan() {
        let arch = two_zone_arch();
        let mut k = 0u64;
        for _ in 0..200 {
            // deterministic pseudo-random points over the layout
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (k >> 11) as f64 / (1u64 << 53) as f64 * 130.0 - 5.0;
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = (k >> 11) as f64 / (1u64 << 53) as f64 * 100.0 - 45.0;
            let p = Point::new(x, y);
            let got = arch.nearest_site(p);
            let best = (0..arch.sites.len())
                .min_by(|&a, &b| {
                    distance(p, arch.site_pos(a))
                        .partial_cmp(&distance(p, arch.site_pos(b)))
                        .unwrap()
                        .then_with(|| {
                            let (sa, sb) = (arch.site(a), arch.site(b));
                            (sa.row, sa.col).cmp(&(sb.row, sb.col))
                        })
                })
                .unwrap();
            assert!(
                (distance(p, arch.site_pos(got)) - distance(p, arch.site_pos(best))).abs()
                    <= COORD_EPS
            );
        }
    }

    #[test]
    fn nearest_storage_trap_examples() {
        let arch = fig_example_arch();
        let t = arch.trap_by_key(0, 3, 4).unwrap();
        assert_eq!(arch.nearest_storage_trap(arch.trap(t).pos), t);
        // Between (0,0) and (0,1): tie goes to the lower column.
        let a = arch.trap(arch.trap_by_key(0, 0, 0).unwrap()).pos;
        let b = arch.trap(arch.trap_by_key(0, 0, 1).unwrap()).pos;
        let mid = Point::new((a.x + b.x) / 2.0, a.y);
        let got = arch.nearest_storage_trap(mid);
        assert_eq!((arch.trap(got).row, arch.trap(got).col), (0, 0));

        let mut k = 7u64;
        for _ in 0..100 {
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (k >> 11) as f64 / (1u64 << 53) as f64 * 40.0 - 5.0;
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = (k >> 11) as f64 / (1u64 << 53) as f64 * 40.0 - 5.0;
            let p = Point::new(x, y);
            let got = arch.nearest_storage_trap(p);
            let best_d = arch
                .storage_traps
                .iter()
                .map(|&t| distance(p, arch.trap(t).pos))
                .fold(f64::INFINITY, f64::min);
            assert!((distance(p, arch.trap(got).pos) - best_d).abs() <= COORD_EPS);
        }
    }

    #[test]
    fn spec_round_trips() {
        let arch = reference_arch();
        let text = serde_json::to_string(&arch.spec).unwrap();
        let again = Architecture::parse(&text).unwrap();
        assert_eq!(arch.spec, again.spec);
        assert_eq!(arch.sites.len(), again.sites.len());
        assert_eq!(arch.traps.len(), again.traps.len());
    }

    #[test]
    fn rejects_bad_specs() {
        let neg_sep = r#"{
          "aods": [], "zones": [
            {"zone_id": 0, "kind": "storage", "offset": [0,0], "dimension": [4,4],
             "slms": [{"slm_id": 0, "num_col": 2, "num_row": 1, "sep": [-3, 3], "offset": [0,0]}]},
            {"zone_id": 1, "kind": "entanglement", "offset": [0,10], "dimension": [4,4],
             "slms": [{"slm_id": 1, "num_col": 1, "num_row": 1, "sep": [12,10], "offset": [0,10]},
                      {"slm_id": 2, "num_col": 1, "num_row": 1, "sep": [12,10], "offset": [2,10]}]}
          ]}"#;
        assert!(matches!(Architecture::parse(neg_sep), Err(CompileError::Input(_))));

        let overlap = r#"{
          "aods": [], "zones": [
            {"zone_id": 0, "kind": "storage", "offset": [0,0], "dimension": [10,10], "slms": []},
            {"zone_id": 1, "kind": "entanglement", "offset": [5,5], "dimension": [10,10], "slms": []}
          ]}"#;
        assert!(matches!(Architecture::parse(overlap), Err(CompileError::Input(_))));

        let outside = r#"{
          "aods": [], "zones": [
            {"zone_id": 0, "kind": "storage", "offset": [0,0], "dimension": [2,2],
             "slms": [{"slm_id": 0, "num_col": 5, "num_row": 1, "sep": [3,3], "offset": [0,0]}]},
            {"zone_id": 1, "kind": "entanglement", "offset": [0,10], "dimension": [4,4],
             "slms": [{"slm_id": 1, "num_col": 1, "num_row": 1, "sep": [12,10], "offset": [0,10]},
                      {"slm_id": 2, "num_col": 1, "num_row": 1, "sep": [12,10], "offset": [2,10]}]}
          ]}"#;
        assert!(matches!(Architecture::parse(outside), Err(CompileError::Input(_))));

        let unpaired = r#"{
          "aods": [], "zones": [
            {"zone_id": 0, "kind": "storage", "offset": [0,0], "dimension": [4,4],
             "slms": [{"slm_id": 0, "num_col": 1, "num_row": 1, "sep": [3,3], "offset": [0,0]}]},
            {"zone_id": 1, "kind": "entanglement", "offset": [0,10], "dimension": [30,4],
             "slms": [{"slm_id": 1, "num_col": 3, "num_row": 1, "sep": [12,10], "offset": [0,10]}]}
          ]}"#;
        assert!(matches!(Architecture::parse(unpaired), Err(CompileError::Input(_))));

        let no_storage = r#"{
          "aods": [], "zones": [
            {"zone_id": 1, "kind": "entanglement", "offset": [0,10], "dimension": [4,4],
             "slms": [{"slm_id": 1, "num_col": 1, "num_row": 1, "sep": [12,10], "offset": [0,10]},
                      {"slm_id": 2, "num_col": 1, "num_row": 1, "sep": [12,10], "offset": [2,10]}]}
          ]}"#;
        assert!(matches!(Architecture::parse(no_storage), Err(CompileError::Input(_))));
    }

    #[test]
    fn close_zones_warn_but_parse() {
        // Entanglement zone only 4 um above the storage zone: pitch is 10.
        let doc = r#"{
          "aods": [{"aod_id": 0, "max_num_col": 4, "max_num_row": 4, "min_sep": 2.0}],
          "zones": [
            {"zone_id": 0, "kind": "storage", "offset": [0, 0], "dimension": [9, 6],
             "slms": [{"slm_id": 0, "num_col": 4, "num_row": 3, "sep": [3, 3], "offset": [0, 0]}]},
            {"zone_id": 1, "kind": "entanglement", "offset": [0, 10], "dimension": [16, 2],
             "slms": [{"slm_id": 1, "num_col": 2, "num_row": 1, "sep": [12, 10], "offset": [0, 10]},
                      {"slm_id": 2, "num_col": 2, "num_row": 1, "sep": [12, 10], "offset": [2, 10]}]}
          ]
        }"#;
        let arch = Architecture::parse(doc).unwrap();
        assert_eq!(arch.warnings.len(), 1, "{:?}", arch.warnings);
    }
}
