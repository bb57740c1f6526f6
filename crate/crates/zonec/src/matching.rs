//! Bipartite matching primitives used by the placement passes: maximum
//! cardinality matching (Hopcroft-Karp) and minimum weight full matching
//! (Jonker-Volgenant style shortest augmenting paths).

use std::collections::VecDeque;

const UNMATCHED: usize = usize::MAX;

/// Maximum-cardinality bipartite matching via Hopcroft-Karp.
///
/// `adj[l]` lists the right vertices reachable from left vertex `l`.
/// Returns, per left vertex, the matched right vertex if any.
pub fn max_cardinality_matching(n_right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let n_left = adj.len();
    let mut match_l = vec![UNMATCHED; n_left];
    let mut match_r = vec![UNMATCHED; n_right];
    let mut dist = vec![0usize; n_left];

    loop {
        // BFS layering from free left vertices.
        let mut queue: VecDeque<usize> = VecDeque::new();
        for l in 0..n_left {
            if match_l[l] == UNMATCHED {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = UNMATCHED;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let l2 = match_r[r];
                if l2 == UNMATCHED {
                    found = true;
                } else if dist[l2] == UNMATCHED {
                    dist[l2] = dist[l] + 1;
                    queue.push_back(l2);
                }
            }
        }
        if !found {
            break;
        }
        for l in 0..n_left {
            if match_l[l] == UNMATCHED {
                augment(l, adj, &mut match_l, &mut match_r, &mut dist);
            }
        }
    }

    match_l.into_iter().map(|r| (r != UNMATCHED).then_some(r)).collect()
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for &r in &adj[l] {
        let l2 = match_r[r];
        if l2 == UNMATCHED || (dist[l2] == dist[l] + 1 && augment(l2, adj, match_l, match_r, dist))
        {
            match_l[l] = r;
            match_r[r] = l;
            return true;
        }
    }
    dist[l] = UNMATCHED;
    false
}

/// Minimum-weight full matching of every left vertex to a distinct right
/// vertex (`n_left <= n_right`). `cost(l, r)` returns `None` where no edge
/// exists. Returns `None` when no full matching over the given edges exists.
///
/// Shortest-augmenting-path assignment (Jonker-Volgenant). Missing edges are
/// modelled with a large finite penalty; a result that uses one is rejected.
pub fn min_weight_full_matching(
    n_left: usize,
    n_right: usize,
    cost: impl Fn(usize, usize) -> Option<f64>,
) -> Option<(Vec<usize>, f64)> {
    if n_left == 0 {
        return Some((Vec::new(), 0.0));
    }
    if n_left > n_right {
        return None;
    }
    const BIG: f64 = 1e12;
    let matrix: Vec<Vec<f64>> = (0..n_left)
        .map(|l| (0..n_right).map(|r| cost(l, r).unwrap_or(BIG)).collect())
        .collect();

    // job[w] = left vertex assigned to right vertex w (extra slot for the
    // virtual start column).
    let mut job = vec![UNMATCHED; n_right + 1];
    let mut pot_l = vec![0.0f64; n_left];
    let mut pot_r = vec![0.0f64; n_right + 1];

    for l_start in 0..n_left {
        let mut w_cur = n_right;
        job[w_cur] = l_start;
        let mut min_to = vec![f64::INFINITY; n_right + 1];
        let mut prev = vec![UNMATCHED; n_right + 1];
        let mut in_tree = vec![false; n_right + 1];

        while job[w_cur] != UNMATCHED {
            in_tree[w_cur] = true;
            let l = job[w_cur];
            let mut delta = f64::INFINITY;
            let mut w_next = n_right;
            for w in 0..n_right {
                if in_tree[w] {
                    continue;
                }
                let reduced = matrix[l][w] - pot_l[l] - pot_r[w];
                if reduced < min_to[w] {
                    min_to[w] = reduced;
                    prev[w] = w_cur;
                }
                if min_to[w] < delta || (min_to[w] == delta && job[w] == UNMATCHED) {
                    delta = min_to[w];
                    w_next = w;
                }
            }
            if delta == f64::INFINITY {
                return None;
            }
            for w in 0..=n_right {
                if in_tree[w] {
                    pot_l[job[w]] += delta;
                    pot_r[w] -= delta;
                } else {
                    min_to[w] -= delta;
                }
            }
            w_cur = w_next;
        }
        while w_cur != n_right {
            let w_prev = prev[w_cur];
            job[w_cur] = job[w_prev];
            w_cur = w_prev;
        }
    }

    let mut assignment = vec![UNMATCHED; n_left];
    let mut total = 0.0;
    for (w, &l) in job.iter().enumerate().take(n_right) {
        if l != UNMATCHED {
            assignment[l] = w;
        }
    }
    for (l, &w) in assignment.iter().enumerate() {
        debug_assert_ne!(w, UNMATCHED);
        let c = matrix[l][w];
        if c >= BIG {
            return None; // had to cross a missing edge: no full matching
        }
        total += c;
    }
    Some((assignment, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Exhaustive maximum matching size via bitmask DP over right vertices.
    pub(crate) fn brute_force_max_matching(n_right: usize, adj: &[Vec<usize>]) -> usize {
        fn go(l: usize, used: u32, adj: &[Vec<usize>]) -> usize {
            if l == adj.len() {
                return 0;
            }
            let mut best = go(l + 1, used, adj); // leave l unmatched
            for &r in &adj[l] {
                if used & (1 << r) == 0 {
                    best = best.max(1 + go(l + 1, used | (1 << r), adj));
                }
            }
            best
        }
        assert!(n_right <= 32);
        go(0, 0, adj)
    }

    /// Exhaustive minimum-weight full matching.
    pub(crate) fn brute_force_min_weight(
        n_left: usize,
        n_right: usize,
        cost: &dyn Fn(usize, usize) -> Option<f64>,
    ) -> Option<f64> {
        fn go(
            l: usize,
            n_left: usize,
            n_right: usize,
            used: u32,
            acc: f64,
            best: &mut Option<f64>,
            cost: &dyn Fn(usize, usize) -> Option<f64>,
        ) {
            if l == n_left {
                if best.is_none() || acc < best.unwrap() {
                    *best = Some(acc);
                }
                return;
            }
            for r in 0..n_right {
                if used & (1 << r) != 0 {
                    continue;
                }
                if let Some(c) = cost(l, r) {
                    go(l + 1, n_left, n_right, used | (1 << r), acc + c, best, cost);
                }
            }
        }
        let mut best = None;
        go(0, n_left, n_right, 0, 0.0, &mut best, cost);
        best
    }

    #[test]
    fn hopcroft_karp_small() {
        let adj = vec![vec![0, 1], vec![0], vec![1]];
        let m = max_cardinality_matching(2, &adj);
        let size = m.iter().flatten().count();
        assert_eq!(size, 2);
        // no two left vertices share a right vertex
        let mut rights: Vec<usize> = m.iter().flatten().copied().collect();
        rights.sort_unstable();
        rights.dedup();
        assert_eq!(rights.len(), size);
    }

    #[test]
    fn hopcroft_karp_matches_brute_force() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..300 {
            let n_left = rng.gen_range(1..=8);
            let n_right = rng.gen_range(1..=8);
            let adj: Vec<Vec<usize>> = (0..n_left)
                .map(|_| (0..n_right).filter(|_| rng.gen_bool(0.4)).collect())
                .collect();
            let got = max_cardinality_matching(n_right, &adj).iter().flatten().count();
            assert_eq!(got, brute_force_max_matching(n_right, &adj));
        }
    }

    #[test]
    fn jv_matches_brute_force() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..300 {
            let n_left = rng.gen_range(1..=4);
            let n_right = rng.gen_range(n_left..=7);
            let dense: Vec<Vec<Option<f64>>> = (0..n_left)
                .map(|_| {
                    (0..n_right)
                        .map(|_| rng.gen_bool(0.8).then(|| rng.gen_range(0.0..100.0)))
                        .collect()
                })
                .collect();
            let cost = |l: usize, r: usize| dense[l][r];
            let brute = brute_force_min_weight(n_left, n_right, &cost);
            let jv = min_weight_full_matching(n_left, n_right, cost);
            match (brute, jv) {
                (None, None) => {}
                (Some(b), Some((assign, total))) => {
                    assert!((b - total).abs() <= 1e-9, "brute {b} vs jv {total}");
                    let mut seen = vec![false; n_right];
                    for &r in &assign {
                        assert!(!seen[r]);
                        seen[r] = true;
                    }
                }
                (b, jv) => panic!("feasibility disagreement: brute {b:?}, jv {:?}", jv.map(|x| x.1)),
            }
        }
    }

    #[test]
    fn jv_rejects_infeasible() {
        // Two left vertices forced onto the same right vertex.
        let cost = |_: usize, r: usize| (r == 0).then_some(1.0);
        assert!(min_weight_full_matching(2, 2, cost).is_none());
    }
}
