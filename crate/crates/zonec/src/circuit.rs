//! Circuit ingestion: parse {CZ, U3} gate lists and build the staged circuit
//! (alternating 1Q and Rydberg stages, as-soon-as-possible).

use serde::{Deserialize, Serialize};

use crate::error::{CompileError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Cz,
    U3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    /// (theta, phi, lambda) in radians for U3; empty for CZ.
    #[serde(default)]
    pub params: Vec<f64>,
    /// Position in the source gate list.
    #[serde(default)]
    pub source_index: usize,
}

impl Gate {
    pub fn cz(a: usize, b: usize) -> Gate {
        assert_ne!(a, b, "CZ needs two distinct qubits");
        Gate { kind: GateKind::Cz, qubits: vec![a, b], params: vec![], source_index: 0 }
    }

    pub fn u3(q: usize, theta: f64, phi: f64, lambda: f64) -> Gate {
        Gate { kind: GateKind::U3, qubits: vec![q], params: vec![theta, phi, lambda], source_index: 0 }
    }

    fn check(&self, num_qubits: usize) -> Result<()> {
        match self.kind {
            GateKind::Cz => {
                if self.qubits.len() != 2 || self.qubits[0] == self.qubits[1] {
                    return Err(CompileError::Input("cz needs two distinct qubits".into()));
                }
                if !self.params.is_empty() {
                    return Err(CompileError::Input("cz takes no parameters".into()));
                }
            }
            GateKind::U3 => {
                if self.qubits.len() != 1 {
                    return Err(CompileError::Input("u3 acts on exactly one qubit".into()));
                }
                if self.params.len() != 3 {
                    return Err(CompileError::Input("u3 needs three angles".into()));
                }
            }
        }
        for &q in &self.qubits {
            if q >= num_qubits {
                return Err(CompileError::Input(format!(
                    "qubit index {q} out of range (num_qubits = {num_qubits})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircuitFormat {
    Qasm2Subset,
    JsonGates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCircuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

/// Parse a circuit. The QASM subset accepts only `qreg`, `cz` and `u3`/`u`
/// statements (plus the standard header lines, comments, and `barrier`, which
/// are ignored); anything else is a hard error and signals that the input
/// must be transpiled to the {CZ, U3} gate set first.
pub fn parse_circuit(doc: &str, format: CircuitFormat) -> Result<ParsedCircuit> {
    match format {
        CircuitFormat::Qasm2Subset => parse_qasm(doc),
        CircuitFormat::JsonGates => parse_json_gates(doc),
    }
}

#[derive(Debug, Deserialize)]
struct JsonCircuitDoc {
    num_qubits: usize,
    gates: Vec<JsonGate>,
}

#[derive(Debug, Deserialize)]
struct JsonGate {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default)]
    params: Vec<f64>,
}

fn parse_json_gates(doc: &str) -> Result<ParsedCircuit> {
    let parsed: JsonCircuitDoc =
        serde_json::from_str(doc).map_err(|e| CompileError::Input(format!("json-gates: {e}")))?;
    let mut gates = Vec::with_capacity(parsed.gates.len());
    for (i, g) in parsed.gates.into_iter().enumerate() {
        let kind = match g.kind.as_str() {
            "cz" => GateKind::Cz,
            "u3" => GateKind::U3,
            other => {
                return Err(CompileError::Input(format!(
                    "unsupported gate '{other}' (resynthesize to the {{cz, u3}} gate set first)"
                )))
            }
        };
        let gate = Gate { kind, qubits: g.qubits, params: g.params, source_index: i };
        gate.check(parsed.num_qubits)?;
        gates.push(gate);
    }
    Ok(ParsedCircuit { num_qubits: parsed.num_qubits, gates })
}

// ---------------------------------------------------------------------------
// QASM 2 subset
// ---------------------------------------------------------------------------

fn parse_qasm(doc: &str) -> Result<ParsedCircuit> {
    let mut regs: Vec<(String, usize, usize)> = Vec::new(); // (name, size, base index)
    let mut num_qubits = 0usize;
    let mut gates: Vec<Gate> = Vec::new();

    let mut text = String::new();
    for line in doc.lines() {
        let line = match line.find("//") {
            Some(i) => &line[..i],
            None => line,
        };
        text.push_str(line);
        text.push('\n');
    }

    for (lineno, raw) in text.split(';').enumerate() {
        let stmt = raw.trim();
        if stmt.is_empty() {
            continue;
        }
        let err = |msg: String| CompileError::Input(format!("qasm statement {}: {msg}", lineno + 1));

        if stmt.starts_with("OPENQASM") || stmt.starts_with("include") {
            continue;
        }
        if let Some(rest) = stmt.strip_prefix("qreg") {
            let rest = rest.trim();
            let (name, size) = parse_reg_decl(rest).map_err(&err)?;
            if regs.iter().any(|(n, _, _)| n == &name) {
                return Err(err(format!("register '{name}' already declared")));
            }
            regs.push((name, size, num_qubits));
            num_qubits += size;
            continue;
        }
        if stmt.starts_with("barrier") {
            continue;
        }
        if stmt.starts_with("creg") || stmt.starts_with("measure") || stmt.starts_with("reset") {
            return Err(err(format!("unsupported statement '{stmt}'")));
        }

        // Gate application: name[(params)] operand[, operand]
        let (head, operands) = split_gate_stmt(stmt).map_err(&err)?;
        let (name, params_src) = match head.find('(') {
            Some(i) => {
                if !head.ends_with(')') {
                    return Err(err("unbalanced parameter list".into()));
                }
                (head[..i].trim(), Some(&head[i + 1..head.len() - 1]))
            }
            None => (head.trim(), None),
        };
        let qubits = operands
            .iter()
            .map(|op| resolve_operand(op, &regs))
            .collect::<std::result::Result<Vec<usize>, String>>()
            .map_err(&err)?;
        match name {
            "cz" => {
                if params_src.is_some() {
                    return Err(err("cz takes no parameters".into()));
                }
                if qubits.len() != 2 {
                    return Err(err("cz needs two operands".into()));
                }
                let mut g = Gate::cz(qubits[0], qubits[1]);
                g.source_index = gates.len();
                gates.push(g);
            }
            "u3" | "u" => {
                let src = params_src.ok_or_else(|| err("u3 needs three angles".into()))?;
                let params = src
                    .split(',')
                    .map(|e| eval_angle(e.trim()))
                    .collect::<std::result::Result<Vec<f64>, String>>()
                    .map_err(&err)?;
                if params.len() != 3 || qubits.len() != 1 {
                    return Err(err("u3 needs three angles and one operand".into()));
                }
                let mut g = Gate::u3(qubits[0], params[0], params[1], params[2]);
                g.source_index = gates.len();
                gates.push(g);
            }
            other => {
                return Err(err(format!(
                    "unsupported gate '{other}' (resynthesize to the {{cz, u3}} gate set first)"
                )))
            }
        }
    }

    let circuit = ParsedCircuit { num_qubits, gates };
    for g in &circuit.gates {
        g.check(circuit.num_qubits)?;
    }
    Ok(circuit)
}

fn parse_reg_decl(s: &str) -> std::result::Result<(String, usize), String> {
    let open = s.find('[').ok_or("qreg needs a size, e.g. qreg q[4]")?;
    let close = s.find(']').ok_or("qreg needs a closing bracket")?;
    let name = s[..open].trim().to_string();
    if name.is_empty() {
        return Err("qreg needs a name".into());
    }
    let size: usize = s[open + 1..close].trim().parse().map_err(|_| "bad register size")?;
    if size == 0 {
        return Err("register size must be positive".into());
    }
    Ok((name, size))
}

fn split_gate_stmt(stmt: &str) -> std::result::Result<(&str, Vec<&str>), String> {
    // The operand list starts after the gate name and optional parameter list.
    let body_start = match stmt.find('(') {
        Some(i) => {
            let close = stmt[i..].find(')').ok_or("unbalanced parameter list")? + i;
            close + 1
        }
        None => stmt.find(char::is_whitespace).ok_or("gate needs operands")?,
    };
    let head = stmt[..body_start].trim();
    let ops: Vec<&str> = stmt[body_start..]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if ops.is_empty() {
        return Err("gate needs operands".into());
    }
    Ok((head, ops))
}

fn resolve_operand(op: &str, regs: &[(String, usize, usize)]) -> std::result::Result<usize, String> {
    let open = op.find('[').ok_or_else(|| format!("operand '{op}' must be indexed"))?;
    let close = op.find(']').ok_or_else(|| format!("operand '{op}' must be indexed"))?;
    let name = op[..open].trim();
    let idx: usize = op[open + 1..close].trim().parse().map_err(|_| format!("bad index in '{op}'"))?;
    let (_, size, base) = regs
        .iter()
        .find(|(n, _, _)| n == name)
        .ok_or_else(|| format!("unknown register '{name}'"))?;
    if idx >= *size {
        return Err(format!("index {idx} out of range for register '{name}'"));
    }
    Ok(base + idx)
}

/// Tiny expression evaluator for gate angles: numbers, `pi`, + - * /, unary
/// minus, and parentheses.
fn eval_angle(src: &str) -> std::result::Result<f64, String> {
    struct P<'a> {
        s: &'a [u8],
        i: usize,
    }
    impl<'a> P<'a> {
        fn skip_ws(&mut self) {
            while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
                self.i += 1;
            }
        }
        fn peek(&mut self) -> Option<u8> {
            self.skip_ws();
            self.s.get(self.i).copied()
        }
        fn expr(&mut self) -> std::result::Result<f64, String> {
            let mut v = self.term()?;
            loop {
                match self.peek() {
                    Some(b'+') => {
                        self.i += 1;
                        v += self.term()?;
                    }
                    Some(b'-') => {
                        self.i += 1;
                        v -= self.term()?;
                    }
                    _ => return Ok(v),
                }
            }
        }
        fn term(&mut self) -> std::result::Result<f64, String> {
            let mut v = self.factor()?;
            loop {
                match self.peek() {
                    Some(b'*') => {
                        self.i += 1;
                        v *= self.factor()?;
                    }
                    Some(b'/') => {
                        self.i += 1;
                        let d = self.factor()?;
                        if d == 0.0 {
                            return Err("division by zero in angle".into());
                        }
                        v /= d;
                    }
                    _ => return Ok(v),
                }
            }
        }
        fn factor(&mut self) -> std::result::Result<f64, String> {
            match self.peek() {
                Some(b'-') => {
                    self.i += 1;
                    Ok(-self.factor()?)
                }
                Some(b'(') => {
                    self.i += 1;
                    let v = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err("unbalanced parentheses in angle".into());
                    }
                    self.i += 1;
                    Ok(v)
                }
                Some(c) if c == b'p' || c == b'P' => {
                    if self.s[self.i..].len() >= 2
                        && self.s[self.i + 1].eq_ignore_ascii_case(&b'i')
                    {
                        self.i += 2;
                        Ok(std::f64::consts::PI)
                    } else {
                        Err("unknown identifier in angle".into())
                    }
                }
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    let start = self.i;
                    while self.i < self.s.len()
                        && (self.s[self.i].is_ascii_digit()
                            || self.s[self.i] == b'.'
                            || self.s[self.i] == b'e'
                            || self.s[self.i] == b'E'
                            || ((self.s[self.i] == b'+' || self.s[self.i] == b'-')
                                && matches!(self.s[self.i - 1], b'e' | b'E')))
                    {
                        self.i += 1;
                    }
                    std::str::from_utf8(&self.s[start..self.i])
                        .unwrap()
                        .parse::<f64>()
                        .map_err(|_| "bad number in angle".into())
                }
                _ => Err("empty angle expression".into()),
            }
        }
    }
    let mut p = P { s: src.as_bytes(), i: 0 };
    let v = p.expr()?;
    p.skip_ws();
    if p.i != p.s.len() {
        return Err(format!("trailing input in angle '{src}'"));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Staging
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Rydberg,
    OneQ,
}

#[derive(Debug, Clone)]
pub struct GateStage {
    pub kind: StageKind,
    /// 1-based index over Rydberg stages only; None for 1Q stages.
    pub rydberg_index: Option<usize>,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone)]
pub struct StagedCircuit {
    pub num_qubits: usize,
    pub stages: Vec<GateStage>,
    pub g1: usize,
    pub g2: usize,
}

impl StagedCircuit {
    /// Number of Rydberg stages.
    pub fn num_rydberg_stages(&self) -> usize {
        self.stages.iter().filter(|s| s.kind == StageKind::Rydberg).count()
    }

    /// Gates of the 1-based Rydberg stage `t`.
    pub fn rydberg_stage(&self, t: usize) -> &[Gate] {
        self.stages
            .iter()
            .find(|s| s.rydberg_index == Some(t))
            .map(|s| s.gates.as_slice())
            .unwrap_or(&[])
    }

    /// Qubits touched by 2Q gates of Rydberg stage `t`, sorted.
    pub fn rydberg_stage_qubits(&self, t: usize) -> Vec<usize> {
        let mut qs: Vec<usize> =
            self.rydberg_stage(t).iter().flat_map(|g| g.qubits.iter().copied()).collect();
        qs.sort_unstable();
        qs.dedup();
        qs
    }

    /// 1Q stages positioned after Rydberg stage `t` (t = 0 means leading
    /// stages before the first Rydberg stage), in circuit order.
    pub fn oneq_stages_after(&self, t: usize) -> Vec<&GateStage> {
        let mut seen = 0usize;
        let mut out = Vec::new();
        for stage in &self.stages {
            match stage.kind {
                StageKind::Rydberg => seen += 1,
                StageKind::OneQ => {
                    if seen == t {
                        out.push(stage);
                    }
                }
            }
        }
        out
    }

    /// All 2Q gates with their 1-based Rydberg stage index.
    pub fn gates_with_stage(&self) -> Vec<(usize, &Gate)> {
        let mut out = Vec::new();
        for stage in &self.stages {
            if let Some(t) = stage.rydberg_index {
                for g in &stage.gates {
                    out.push((t, g));
                }
            }
        }
        out
    }
}

/// Greedy as-soon-as-possible layering. Each gate goes to the earliest stage
/// of its kind after every stage containing a gate it depends on (shared
/// qubit, earlier source order), creating a new trailing stage when none
/// fits. Rydberg stages are numbered 1, 2, ... in order.
pub fn stage_asap(num_qubits: usize, gates: &[Gate]) -> Result<StagedCircuit> {
    for g in gates {
        g.check(num_qubits)?;
    }

    struct Layer {
        kind: StageKind,
        gates: Vec<Gate>,
        used: Vec<bool>,
    }
    let mut layers: Vec<Layer> = Vec::new();
    // Earliest admissible layer per qubit (one past the last layer touching it).
    let mut qubit_front = vec![0usize; num_qubits];

    for (i, gate) in gates.iter().enumerate() {
        let kind = match gate.kind {
            GateKind::Cz => StageKind::Rydberg,
            GateKind::U3 => StageKind::OneQ,
        };
        let earliest = gate.qubits.iter().map(|&q| qubit_front[q]).max().unwrap_or(0);
        let mut slot = None;
        for (li, layer) in layers.iter().enumerate().skip(earliest) {
            if layer.kind == kind && gate.qubits.iter().all(|&q| !layer.used[q]) {
                slot = Some(li);
                break;
            }
        }
        let li = match slot {
            Some(li) => li,
            None => {
                layers.push(Layer { kind, gates: Vec::new(), used: vec![false; num_qubits] });
                layers.len() - 1
            }
        };
        let mut gate = gate.clone();
        gate.source_index = i;
        for &q in &gate.qubits {
            layers[li].used[q] = true;
            qubit_front[q] = li + 1;
        }
        layers[li].gates.push(gate);
    }

    let mut g1 = 0;
    let mut g2 = 0;
    let mut rydberg_count = 0;
    let stages = layers
        .into_iter()
        .map(|l| {
            let rydberg_index = match l.kind {
                StageKind::Rydberg => {
                    rydberg_count += 1;
                    g2 += l.gates.len();
                    Some(rydberg_count)
                }
                StageKind::OneQ => {
                    g1 += l.gates.len();
                    None
                }
            };
            GateStage { kind: l.kind, rydberg_index, gates: l.gates }
        })
        .collect();

    Ok(StagedCircuit { num_qubits, stages, g1, g2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stage_sets(c: &StagedCircuit) -> Vec<Vec<usize>> {
        c.stages
            .iter()
            .filter(|s| s.kind == StageKind::Rydberg)
            .map(|s| {
                let mut v: Vec<usize> = s.gates.iter().map(|g| g.source_index).collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    #[test]
    fn qasm_single_cz() {
        let c = parse_circuit("qreg q[2]; cz q[0],q[1];", CircuitFormat::Qasm2Subset).unwrap();
        assert_eq!(c.num_qubits, 2);
        assert_eq!(c.gates, vec![Gate::cz(0, 1)]);
    }

    #[test]
    fn qasm_u3_with_pi() {
        let c = parse_circuit("qreg q[1]; u3(pi,0,pi) q[0];", CircuitFormat::Qasm2Subset).unwrap();
        assert_eq!(c.gates.len(), 1);
        let g = &c.gates[0];
        assert_eq!(g.kind, GateKind::U3);
        assert!((g.params[0] - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(g.params[1], 0.0);
        assert!((g.params[2] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn qasm_ghz_style_file() {
        let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n// build a GHZ-like state\nqreg q[3];\nu3(pi/2,0,pi) q[0];\ncz q[0],q[1];\ncz q[1],q[2];\n";
        let c = parse_circuit(src, CircuitFormat::Qasm2Subset).unwrap();
        assert_eq!(c.num_qubits, 3);
        assert_eq!(c.gates.len(), 3);
        assert_eq!(c.gates[0].kind, GateKind::U3);
        assert_eq!(c.gates[1], Gate { source_index: 1, ..Gate::cz(0, 1) });
        assert_eq!(c.gates[2], Gate { source_index: 2, ..Gate::cz(1, 2) });
    }

    #[test]
    fn qasm_rejects_unsupported() {
        let h = parse_circuit("qreg q[1]; h q[0];", CircuitFormat::Qasm2Subset);
        assert!(matches!(h, Err(CompileError::Input(m)) if m.contains("unsupported gate 'h'")));
        let m = parse_circuit("qreg q[1]; creg c[1]; measure q[0] -> c[0];", CircuitFormat::Qasm2Subset);
        assert!(matches!(m, Err(CompileError::Input(_))));
        let oob = parse_circuit("qreg q[2]; cz q[0],q[2];", CircuitFormat::Qasm2Subset);
        assert!(matches!(oob, Err(CompileError::Input(_))));
        let broadcast = parse_circuit("qreg q[2]; u3(0,0,0) q;", CircuitFormat::Qasm2Subset);
        assert!(matches!(broadcast, Err(CompileError::Input(_))));
    }

    #[test]
    fn qasm_multiple_registers_flatten() {
        let src = "qreg a[2]; qreg b[2]; cz a[1],b[0]; u3(0,0,0) b[1];";
        let c = parse_circuit(src, CircuitFormat::Qasm2Subset).unwrap();
        assert_eq!(c.num_qubits, 4);
        assert_eq!(c.gates[0].qubits, vec![1, 2]);
        assert_eq!(c.gates[1].qubits, vec![3]);
    }

    #[test]
    fn qasm_ignores_barrier_and_comments() {
        let src = "qreg q[2]; // two qubits\nbarrier q[0], q[1];\ncz q[0],q[1];";
        let c = parse_circuit(src, CircuitFormat::Qasm2Subset).unwrap();
        assert_eq!(c.gates.len(), 1);
    }

    #[test]
    fn json_gates_format() {
        let doc = r#"{"num_qubits": 3, "gates": [
            {"kind": "cz", "qubits": [0, 1]},
            {"kind": "u3", "qubits": [2], "params": [1.0, 2.0, 3.0]}
        ]}"#;
        let c = parse_circuit(doc, CircuitFormat::JsonGates).unwrap();
        assert_eq!(c.num_qubits, 3);
        assert_eq!(c.gates[0].kind, GateKind::Cz);
        assert_eq!(c.gates[1].params, vec![1.0, 2.0, 3.0]);
        let bad = r#"{"num_qubits": 2, "gates": [{"kind": "swap", "qubits": [0, 1]}]}"#;
        assert!(parse_circuit(bad, CircuitFormat::JsonGates).is_err());
    }

    #[test]
    fn stage_disjoint_gates_share_stage() {
        let staged = stage_asap(4, &[Gate::cz(0, 1), Gate::cz(2, 3)]).unwrap();
        assert_eq!(stage_sets(&staged), vec![vec![0, 1]]);
    }

    #[test]
    fn stage_shared_qubit_splits() {
        let staged = stage_asap(3, &[Gate::cz(0, 1), Gate::cz(1, 2)]).unwrap();
        assert_eq!(stage_sets(&staged), vec![vec![0], vec![1]]);
    }

    #[test]
    fn running_example_stages() {
        let staged = stage_asap(6, &running_example()).unwrap();
        assert_eq!(stage_sets(&staged), vec![vec![0, 1], vec![2, 3, 4], vec![5]]);
        assert_eq!(staged.g2, 6);
        // verified against a dependency-DAG longest-path oracle
        assert_eq!(staged.num_rydberg_stages(), longest_chain(6, &running_example()));
    }

    fn running_example() -> Vec<Gate> {
        vec![
            Gate::cz(0, 1),
            Gate::cz(2, 3),
            Gate::cz(1, 2),
            Gate::cz(3, 5),
            Gate::cz(0, 4),
            Gate::cz(4, 5),
        ]
    }

    /// Longest chain of qubit-sharing 2Q gates (DAG longest path).
    fn longest_chain(num_qubits: usize, gates: &[Gate]) -> usize {
        let mut depth = vec![0usize; num_qubits];
        let mut best = 0;
        for g in gates {
            assert_eq!(g.kind, GateKind::Cz);
            let d = 1 + g.qubits.iter().map(|&q| depth[q]).max().unwrap();
            for &q in &g.qubits {
                depth[q] = d;
            }
            best = best.max(d);
        }
        best
    }

    #[test]
    fn staging_matches_longest_path_on_random_cz_circuits() {
        let mut seed = 0x5eedu64;
        for n in [3usize, 5, 8] {
            for _ in 0..40 {
                let mut gates = Vec::new();
                for _ in 0..12 {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let a = (seed >> 33) as usize % n;
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let mut b = (seed >> 33) as usize % n;
                    if b == a {
                        b = (b + 1) % n;
                    }
                    gates.push(Gate::cz(a, b));
                }
                let staged = stage_asap(n, &gates).unwrap();
                assert_eq!(staged.num_rydberg_stages(), longest_chain(n, &gates));
                // every gate appears exactly once
                let total: usize = staged.stages.iter().map(|s| s.gates.len()).sum();
                assert_eq!(total, gates.len());
                // source order is preserved between stages for shared qubits
                let mut stage_of = vec![0usize; gates.len()];
                for (si, s) in staged.stages.iter().enumerate() {
                    for g in &s.gates {
                        stage_of[g.source_index] = si;
                    }
                }
                for (i, a) in gates.iter().enumerate() {
                    for (j, b) in gates.iter().enumerate().skip(i + 1) {
                        if a.qubits.iter().any(|q| b.qubits.contains(q)) {
                            assert!(stage_of[i] < stage_of[j]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn oneq_stages_interleave() {
        let gates = vec![
            Gate::u3(0, 0.1, 0.2, 0.3),
            Gate::cz(0, 1),
            Gate::u3(0, 0.4, 0.5, 0.6),
            Gate::cz(0, 1),
        ];
        let staged = stage_asap(2, &gates).unwrap();
        let kinds: Vec<StageKind> = staged.stages.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![StageKind::OneQ, StageKind::Rydberg, StageKind::OneQ, StageKind::Rydberg]
        );
        assert_eq!(staged.g1, 2);
        assert_eq!(staged.g2, 2);
        assert_eq!(staged.oneq_stages_after(0).len(), 1);
        assert_eq!(staged.oneq_stages_after(1).len(), 1);
        assert_eq!(staged.oneq_stages_after(2).len(), 0);
    }
}
