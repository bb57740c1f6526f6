//! Shared fixtures for unit and integration tests: the bundled architectures
//! and the regression circuits.

use crate::arch::Architecture;
use crate::circuit::Gate;

pub fn reference_arch() -> Architecture {
    Architecture::parse(include_str!("../data/arch/reference.json")).expect("reference arch")
}

pub fn two_zone_arch() -> Architecture {
    Architecture::parse(include_str!("../data/arch/two_zone.json")).expect("two-zone arch")
}

pub fn fig_example_arch() -> Architecture {
    Architecture::parse(include_str!("../data/arch/fig_example.json")).expect("fig-example arch")
}

/// The 6-qubit running example: two gates in stage one, three reachable in
/// stage two, one in stage three.
pub fn running_example() -> (usize, Vec<Gate>) {
    (
        6,
        vec![
            Gate::cz(0, 1),
            Gate::cz(2, 3),
            Gate::cz(1, 2),
            Gate::cz(3, 5),
            Gate::cz(0, 4),
            Gate::cz(4, 5),
        ],
    )
}

/// Linear chain of CZs over `n` qubits.
pub fn chain_circuit(n: usize) -> (usize, Vec<Gate>) {
    (n, (0..n - 1).map(|i| Gate::cz(i, i + 1)).collect())
}

/// GHZ-style circuit: one leading U3 then a CZ fan from qubit 0's chain.
pub fn ghz_circuit(n: usize) -> (usize, Vec<Gate>) {
    let mut gates = vec![Gate::u3(0, std::f64::consts::FRAC_PI_2, 0.0, std::f64::consts::PI)];
    gates.extend((0..n - 1).map(|i| Gate::cz(i, i + 1)));
    (n, gates)
}

/// Parallel Ising-style rounds: disjoint nearest-neighbour pairs with
/// alternating offsets, `rounds` times, with a U3 sprinkle per round.
pub fn ising_circuit(n: usize, rounds: usize) -> (usize, Vec<Gate>) {
    let mut gates = Vec::new();
    for r in 0..rounds {
        let off = r % 2;
        for q in (off..n - 1).step_by(2) {
            gates.push(Gate::cz(q, q + 1));
        }
        gates.push(Gate::u3(r % n, 0.3, 0.1, 0.2));
    }
    (n, gates)
}

/// The regression suite: 4-20 qubit chains, GHZ-style, Ising-style rounds,
/// and the running example.
pub fn regression_suite() -> Vec<(String, usize, Vec<Gate>)> {
    let mut suite = Vec::new();
    for n in [4usize, 7, 12, 20] {
        let (q, g) = chain_circuit(n);
        suite.push((format!("chain_n{n}"), q, g));
    }
    for n in [5usize, 9, 16] {
        let (q, g) = ghz_circuit(n);
        suite.push((format!("ghz_n{n}"), q, g));
    }
    for (n, rounds) in [(6usize, 2usize), (10, 3), (18, 2)] {
        let (q, g) = ising_circuit(n, rounds);
        suite.push((format!("ising_n{n}_r{rounds}"), q, g));
    }
    let (q, g) = running_example();
    suite.push(("running_example".into(), q, g));
    suite
}
