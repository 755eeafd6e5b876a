//! Gate set, circuit representation and the plain-text dump format.
//!
//! A [`Circuit`] is an ordered list of [`Gate`]s over `qubit_count` qubits and
//! `classical_count` write-once classical bits. Every qubit carries an
//! [`InitState`] tag so that gadget builders can declare which wires are data
//! and which are ancillas prepared in `|0>` or `|+>`.
//!
//! Global phase is not represented anywhere.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassicalBitId(pub usize);

/// Position of a T or T† gate among all T-type gates of a circuit, in gate order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TSite(pub usize);

impl From<usize> for QubitId {
    fn from(index: usize) -> Self {
        QubitId(index)
    }
}

impl From<usize> for ClassicalBitId {
    fn from(index: usize) -> Self {
        ClassicalBitId(index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    H(QubitId),
    X(QubitId),
    Z(QubitId),
    S(QubitId),
    Sdg(QubitId),
    T(QubitId),
    Tdg(QubitId),
    Cnot {
        control: QubitId,
        target: QubitId,
    },
    Cz(QubitId, QubitId),
    MeasureZ {
        qubit: QubitId,
        bit: ClassicalBitId,
    },
    Conditional {
        bit: ClassicalBitId,
        gate: Box<Gate>,
    },
}

impl Gate {
    pub fn h(q: usize) -> Self {
        Gate::H(QubitId(q))
    }
    pub fn x(q: usize) -> Self {
        Gate::X(QubitId(q))
    }
    pub fn z(q: usize) -> Self {
        Gate::Z(QubitId(q))
    }
    pub fn s(q: usize) -> Self {
        Gate::S(QubitId(q))
    }
    pub fn sdg(q: usize) -> Self {
        Gate::Sdg(QubitId(q))
    }
    pub fn t(q: usize) -> Self {
        Gate::T(QubitId(q))
    }
    pub fn tdg(q: usize) -> Self {
        Gate::Tdg(QubitId(q))
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot {
            control: QubitId(control),
            target: QubitId(target),
        }
    }
    pub fn cz(a: usize, b: usize) -> Self {
        Gate::Cz(QubitId(a), QubitId(b))
    }
    pub fn measure(qubit: usize, bit: usize) -> Self {
        Gate::MeasureZ {
            qubit: QubitId(qubit),
            bit: ClassicalBitId(bit),
        }
    }
    pub fn conditional(bit: usize, gate: Gate) -> Self {
        Gate::Conditional {
            bit: ClassicalBitId(bit),
            gate: Box::new(gate),
        }
    }

    /// Short mnemonic used in the dump format and in error messages.
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::X(_) => "X",
            Gate::Z(_) => "Z",
            Gate::S(_) => "S",
            Gate::Sdg(_) => "SDG",
            Gate::T(_) => "T",
            Gate::Tdg(_) => "TDG",
            Gate::Cnot { .. } => "CNOT",
            Gate::Cz(..) => "CZ",
            Gate::MeasureZ { .. } => "MZ",
            Gate::Conditional { .. } => "IF",
        }
    }

    pub fn is_t_type(&self) -> bool {
        matches!(self, Gate::T(_) | Gate::Tdg(_))
    }

    /// True for every gate except T/T†, measurements and conditionals wrapping non-Cliffords.
    pub fn is_clifford(&self) -> bool {
        match self {
            Gate::T(_) | Gate::Tdg(_) | Gate::MeasureZ { .. } => false,
            Gate::Conditional { gate, .. } => gate.is_clifford(),
            _ => true,
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, Gate::MeasureZ { .. } | Gate::Conditional { .. })
    }

    pub fn qubits(&self) -> Vec<QubitId> {
        match self {
            Gate::H(q)
            | Gate::X(q)
            | Gate::Z(q)
            | Gate::S(q)
            | Gate::Sdg(q)
            | Gate::T(q)
            | Gate::Tdg(q) => vec![*q],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Cz(a, b) => vec![*a, *b],
            Gate::MeasureZ { qubit, .. } => vec![*qubit],
            Gate::Conditional { gate, .. } => gate.qubits(),
        }
    }

    /// Inverse of a unitary gate; `None` for measurements and conditionals.
    pub fn inverse(&self) -> Option<Gate> {
        Some(match self {
            Gate::S(q) => Gate::Sdg(*q),
            Gate::Sdg(q) => Gate::S(*q),
            Gate::T(q) => Gate::Tdg(*q),
            Gate::Tdg(q) => Gate::T(*q),
            Gate::MeasureZ { .. } | Gate::Conditional { .. } => return None,
            g => g.clone(),
        })
    }

    /// Rewrites qubit and classical-bit operands.
    pub fn remap(
        &self,
        qubit: &impl Fn(QubitId) -> QubitId,
        bit: &impl Fn(ClassicalBitId) -> ClassicalBitId,
    ) -> Gate {
        match self {
            Gate::H(q) => Gate::H(qubit(*q)),
            Gate::X(q) => Gate::X(qubit(*q)),
            Gate::Z(q) => Gate::Z(qubit(*q)),
            Gate::S(q) => Gate::S(qubit(*q)),
            Gate::Sdg(q) => Gate::Sdg(qubit(*q)),
            Gate::T(q) => Gate::T(qubit(*q)),
            Gate::Tdg(q) => Gate::Tdg(qubit(*q)),
            Gate::Cnot { control, target } => Gate::Cnot {
                control: qubit(*control),
                target: qubit(*target),
            },
            Gate::Cz(a, b) => Gate::Cz(qubit(*a), qubit(*b)),
            Gate::MeasureZ { qubit: q, bit: b } => Gate::MeasureZ {
                qubit: qubit(*q),
                bit: bit(*b),
            },
            Gate::Conditional { bit: b, gate } => Gate::Conditional {
                bit: bit(*b),
                gate: Box::new(gate.remap(qubit, bit)),
            },
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q)
            | Gate::X(q)
            | Gate::Z(q)
            | Gate::S(q)
            | Gate::Sdg(q)
            | Gate::T(q)
            | Gate::Tdg(q) => write!(f, "{} {}", self.name(), q.0),
            Gate::Cnot { control, target } => write!(f, "CNOT {} {}", control.0, target.0),
            Gate::Cz(a, b) => write!(f, "CZ {} {}", a.0, b.0),
            Gate::MeasureZ { qubit, bit } => write!(f, "MZ {} -> c{}", qubit.0, bit.0),
            Gate::Conditional { bit, gate } => write!(f, "IF c{}: {}", bit.0, gate),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum InitState {
    Zero,
    Plus,
    #[default]
    Data,
}

impl InitState {
    pub fn as_str(self) -> &'static str {
        match self {
            InitState::Zero => "zero",
            InitState::Plus => "plus",
            InitState::Data => "data",
        }
    }
}

impl FromStr for InitState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(InitState::Zero),
            "plus" => Ok(InitState::Plus),
            "data" => Ok(InitState::Data),
            other => Err(format!("unknown initial state `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("{gate}: qubit index {index} out of range (circuit has {count} qubits)")]
    QubitOutOfRange {
        gate: String,
        index: usize,
        count: usize,
    },
    #[error("{gate}: classical bit c{index} out of range (circuit has {count} bits)")]
    BitOutOfRange {
        gate: String,
        index: usize,
        count: usize,
    },
    #[error("{gate}: identical operands ({index})")]
    IdenticalOperands { gate: String, index: usize },
    #[error("{gate}: conditional body must be a non-conditional unitary gate")]
    InvalidConditionalBody { gate: String },
    #[error("{gate}: classical bit c{index} is already written")]
    BitAlreadyWritten { gate: String, index: usize },
    #[error("{gate}: classical bit c{index} is read before any measurement writes it")]
    BitReadBeforeWrite { gate: String, index: usize },
    #[error("non-unitary circuit has no inverse")]
    NonUnitary,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Immutable-by-convention gate sequence with per-qubit initial-state tags.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Circuit {
    qubit_count: usize,
    classical_count: usize,
    gates: Vec<Gate>,
    initial_states: Vec<InitState>,
    written: Vec<bool>,
}

impl Circuit {
    /// Empty circuit; every qubit starts tagged as data.
    pub fn new(qubit_count: usize, classical_count: usize) -> Self {
        Circuit {
            qubit_count,
            classical_count,
            gates: Vec::new(),
            initial_states: vec![InitState::Data; qubit_count],
            written: vec![false; classical_count],
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn classical_count(&self) -> usize {
        self.classical_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn initial_states(&self) -> &[InitState] {
        &self.initial_states
    }

    pub fn initial_state(&self, q: QubitId) -> InitState {
        self.initial_states[q.0]
    }

    /// Returns a copy of `self` with `gate` appended.
    pub fn append(&self, gate: Gate) -> Result<Circuit, CircuitError> {
        let mut next = self.clone();
        next.push(gate)?;
        Ok(next)
    }

    /// Returns a copy with qubit `q` retagged.
    pub fn with_init(&self, q: usize, state: InitState) -> Result<Circuit, CircuitError> {
        let mut next = self.clone();
        next.set_init(q, state)?;
        Ok(next)
    }

    pub(crate) fn set_init(&mut self, q: usize, state: InitState) -> Result<(), CircuitError> {
        if q >= self.qubit_count {
            return Err(CircuitError::QubitOutOfRange {
                gate: "init".into(),
                index: q,
                count: self.qubit_count,
            });
        }
        self.initial_states[q] = state;
        Ok(())
    }

    /// In-place append used by builders that own the circuit they are assembling.
    pub(crate) fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        self.validate(&gate, false)?;
        if let Gate::MeasureZ { bit, .. } = gate {
            self.written[bit.0] = true;
        }
        self.gates.push(gate);
        Ok(())
    }

    pub(crate) fn push_all(
        &mut self,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Result<(), CircuitError> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    fn validate(&self, gate: &Gate, nested: bool) -> Result<(), CircuitError> {
        let label = gate.to_string();
        for q in gate.qubits() {
            if q.0 >= self.qubit_count {
                return Err(CircuitError::QubitOutOfRange {
                    gate: label,
                    index: q.0,
                    count: self.qubit_count,
                });
            }
        }
        match gate {
            Gate::Cnot {
                control: a,
                target: b,
            }
            | Gate::Cz(a, b)
                if a == b =>
            {
                Err(CircuitError::IdenticalOperands {
                    gate: label,
                    index: a.0,
                })
            }
            Gate::MeasureZ { bit, .. } => {
                if nested {
                    return Err(CircuitError::InvalidConditionalBody { gate: label });
                }
                self.check_bit(&label, *bit)?;
                if self.written[bit.0] {
                    return Err(CircuitError::BitAlreadyWritten {
                        gate: label,
                        index: bit.0,
                    });
                }
                Ok(())
            }
            Gate::Conditional { bit, gate: inner } => {
                if nested || !inner.is_unitary() {
                    return Err(CircuitError::InvalidConditionalBody { gate: label });
                }
                self.check_bit(&label, *bit)?;
                if !self.written[bit.0] {
                    return Err(CircuitError::BitReadBeforeWrite {
                        gate: label,
                        index: bit.0,
                    });
                }
                self.validate(inner, true)
            }
            _ => Ok(()),
        }
    }

    fn check_bit(&self, label: &str, bit: ClassicalBitId) -> Result<(), CircuitError> {
        if bit.0 >= self.classical_count {
            return Err(CircuitError::BitOutOfRange {
                gate: label.to_string(),
                index: bit.0,
                count: self.classical_count,
            });
        }
        Ok(())
    }

    /// Appends every gate of `other`, sending its qubit `i` to `qubit_map[i]`
    /// and its classical bit `j` to `j + bit_offset`.
    pub(crate) fn embed(
        &mut self,
        other: &Circuit,
        qubit_map: &[usize],
        bit_offset: usize,
    ) -> Result<(), CircuitError> {
        assert_eq!(
            qubit_map.len(),
            other.qubit_count,
            "qubit map must cover the embedded circuit"
        );
        let qmap = |q: QubitId| QubitId(qubit_map[q.0]);
        let bmap = |b: ClassicalBitId| ClassicalBitId(b.0 + bit_offset);
        for g in &other.gates {
            self.push(g.remap(&qmap, &bmap))?;
        }
        Ok(())
    }

    pub fn is_unitary(&self) -> bool {
        self.gates.iter().all(Gate::is_unitary)
    }

    pub fn has_measurements(&self) -> bool {
        !self.is_unitary()
    }

    /// Gate indices of every T and T† gate, in gate order.
    pub fn t_sites(&self) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.is_t_type())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn t_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_t_type()).count()
    }

    /// Reversed gate list with every gate inverted.
    pub fn inverse(&self) -> Result<Circuit, CircuitError> {
        let mut inv = Circuit {
            gates: Vec::with_capacity(self.gates.len()),
            ..self.clone()
        };
        for g in self.gates.iter().rev() {
            inv.gates.push(g.inverse().ok_or(CircuitError::NonUnitary)?);
        }
        Ok(inv)
    }

    /// The text dump: header lines, then one gate per line.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "qubits {}\ncbits {}\n",
            self.qubit_count, self.classical_count
        );
        for (q, s) in self.initial_states.iter().enumerate() {
            if *s != InitState::Data {
                out.push_str(&format!("init q{q} {}\n", s.as_str()));
            }
        }
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        let mut qubits = None;
        let mut cbits = None;
        let mut circuit: Option<Circuit> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| CircuitError::Parse {
                line: line_no,
                message,
            };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default();
            match head {
                "qubits" | "cbits" => {
                    if circuit.as_ref().is_some_and(|c| !c.gates.is_empty()) {
                        return Err(err(format!("`{head}` header after gates")));
                    }
                    let n = parse_index(words.next(), "count").map_err(err)?;
                    if head == "qubits" {
                        qubits = Some(n);
                    } else {
                        cbits = Some(n);
                    }
                    circuit = None;
                }
                "init" => {
                    let c = ensure_circuit(&mut circuit, qubits, cbits).map_err(err)?;
                    let q = parse_prefixed(words.next(), 'q').map_err(err)?;
                    let state = words
                        .next()
                        .ok_or_else(|| err("missing initial state".into()))?
                        .parse::<InitState>()
                        .map_err(err)?;
                    c.set_init(q, state).map_err(|e| err(e.to_string()))?;
                }
                _ => {
                    let c = ensure_circuit(&mut circuit, qubits, cbits).map_err(err)?;
                    let gate = parse_gate(line).map_err(err)?;
                    c.push(gate).map_err(|e| err(e.to_string()))?;
                }
            }
        }
        match circuit {
            Some(c) => Ok(c),
            None => {
                let q = qubits.ok_or(CircuitError::Parse {
                    line: 0,
                    message: "missing `qubits` header".into(),
                })?;
                Ok(Circuit::new(q, cbits.unwrap_or(0)))
            }
        }
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Circuit {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Circuit::parse(s)
    }
}

fn ensure_circuit(
    circuit: &mut Option<Circuit>,
    qubits: Option<usize>,
    cbits: Option<usize>,
) -> Result<&mut Circuit, String> {
    if circuit.is_none() {
        let q = qubits.ok_or("missing `qubits` header")?;
        *circuit = Some(Circuit::new(q, cbits.unwrap_or(0)));
    }
    Ok(circuit.as_mut().expect("initialised above"))
}

fn parse_index(word: Option<&str>, what: &str) -> Result<usize, String> {
    let w = word.ok_or_else(|| format!("missing {what}"))?;
    w.parse::<usize>()
        .map_err(|_| format!("invalid {what} `{w}`"))
}

fn parse_prefixed(word: Option<&str>, prefix: char) -> Result<usize, String> {
    let w = word.ok_or_else(|| format!("missing `{prefix}` operand"))?;
    let digits = w
        .strip_prefix(prefix)
        .ok_or_else(|| format!("expected `{prefix}<index>`, found `{w}`"))?;
    digits
        .parse::<usize>()
        .map_err(|_| format!("invalid index `{w}`"))
}

fn parse_gate(line: &str) -> Result<Gate, String> {
    if let Some(rest) = line.strip_prefix("IF ") {
        let (bit, body) = rest
            .split_once(':')
            .ok_or_else(|| format!("conditional without `:` in `{line}`"))?;
        let bit = parse_prefixed(Some(bit.trim()), 'c')?;
        let inner = parse_gate(body.trim())?;
        return Ok(Gate::conditional(bit, inner));
    }
    let words: Vec<&str> = line.split_whitespace().collect();
    let arity = |n: usize| -> Result<(), String> {
        if words.len() == n + 1 {
            Ok(())
        } else {
            Err(format!("`{}` expects {n} operand(s)", words[0]))
        }
    };
    let idx = |i: usize| parse_index(words.get(i).copied(), "qubit index");
    let gate = match words[0] {
        "H" | "X" | "Z" | "S" | "SDG" | "T" | "TDG" => {
            arity(1)?;
            let q = idx(1)?;
            match words[0] {
                "H" => Gate::h(q),
                "X" => Gate::x(q),
                "Z" => Gate::z(q),
                "S" => Gate::s(q),
                "SDG" => Gate::sdg(q),
                "T" => Gate::t(q),
                _ => Gate::tdg(q),
            }
        }
        "CNOT" => {
            arity(2)?;
            Gate::cnot(idx(1)?, idx(2)?)
        }
        "CZ" => {
            arity(2)?;
            Gate::cz(idx(1)?, idx(2)?)
        }
        "MZ" => {
            arity(3)?;
            if words[2] != "->" {
                return Err(format!("expected `->` in `{line}`"));
            }
            Gate::measure(idx(1)?, parse_prefixed(Some(words[3]), 'c')?)
        }
        other => return Err(format!("unknown gate `{other}`")),
    };
    Ok(gate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn build_and_append_is_value_semantics() {
        let c = Circuit::new(1, 0);
        let c1 = c.append(Gate::h(0)).unwrap();
        assert_eq!(c.gates().len(), 0);
        assert_eq!(c1.gates().len(), 1);
        assert_eq!(c1.t_count(), 0);
    }

    #[test]
    fn t_sites_follow_gate_order() {
        let c = Circuit::new(1, 0)
            .append(Gate::t(0))
            .unwrap()
            .append(Gate::tdg(0))
            .unwrap();
        assert_eq!(c.t_sites(), vec![0, 1]);
        let c = Circuit::new(2, 0)
            .append(Gate::h(0))
            .and_then(|c| c.append(Gate::t(1)))
            .and_then(|c| c.append(Gate::cnot(0, 1)))
            .and_then(|c| c.append(Gate::tdg(0)))
            .unwrap();
        assert_eq!(c.t_sites(), vec![1, 3]);
        assert_eq!(c.t_count(), 2);
    }

    #[test]
    fn identical_operands_rejected() {
        let err = Circuit::new(2, 0).append(Gate::cnot(0, 0)).unwrap_err();
        assert!(err.to_string().contains("identical operands"), "{err}");
        assert!(Circuit::new(2, 0).append(Gate::cz(1, 1)).is_err());
    }

    #[test]
    fn out_of_range_names_gate_and_index() {
        let err = Circuit::new(2, 0).append(Gate::cnot(0, 5)).unwrap_err();
        assert_eq!(
            err,
            CircuitError::QubitOutOfRange {
                gate: "CNOT 0 5".into(),
                index: 5,
                count: 2
            }
        );
        assert!(Circuit::new(1, 1).append(Gate::measure(0, 3)).is_err());
    }

    #[test]
    fn classical_bits_are_write_once_and_read_after_write() {
        let c = Circuit::new(2, 1);
        let err = c.append(Gate::conditional(0, Gate::x(1))).unwrap_err();
        assert!(matches!(err, CircuitError::BitReadBeforeWrite { .. }));
        let c = c.append(Gate::measure(0, 0)).unwrap();
        assert!(matches!(
            c.append(Gate::measure(1, 0)).unwrap_err(),
            CircuitError::BitAlreadyWritten { .. }
        ));
        assert!(c.append(Gate::conditional(0, Gate::x(1))).is_ok());
    }

    #[test]
    fn conditional_body_must_be_plain_unitary() {
        let c = Circuit::new(2, 2).append(Gate::measure(0, 0)).unwrap();
        assert!(c.append(Gate::conditional(0, Gate::measure(1, 1))).is_err());
        assert!(c
            .append(Gate::conditional(0, Gate::conditional(0, Gate::x(1))))
            .is_err());
    }

    #[test]
    fn inverse_examples() {
        let c = Circuit::new(1, 0).append(Gate::h(0)).unwrap();
        assert_eq!(c.inverse().unwrap(), c);

        let c = Circuit::new(2, 0)
            .append(Gate::t(0))
            .and_then(|c| c.append(Gate::cnot(0, 1)))
            .unwrap();
        let inv = c.inverse().unwrap();
        assert_eq!(inv.gates(), &[Gate::cnot(0, 1), Gate::tdg(0)]);
    }

    #[test]
    fn inverse_of_measured_circuit_fails() {
        let c = Circuit::new(1, 1).append(Gate::measure(0, 0)).unwrap();
        let err = c.inverse().unwrap_err();
        assert_eq!(err.to_string(), "non-unitary circuit has no inverse");
    }

    #[test]
    fn dump_format_lines() {
        let mut c = Circuit::new(3, 1);
        c.set_init(2, InitState::Zero).unwrap();
        c.push_all([
            Gate::h(2),
            Gate::cnot(0, 2),
            Gate::tdg(2),
            Gate::measure(2, 0),
            Gate::conditional(0, Gate::cz(0, 1)),
        ])
        .unwrap();
        assert_eq!(
            c.to_text(),
            "qubits 3\ncbits 1\ninit q2 zero\nH 2\nCNOT 0 2\nTDG 2\nMZ 2 -> c0\nIF c0: CZ 0 1\n"
        );
        assert_eq!(Circuit::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Circuit::parse("qubits 2\ncbits 0\nH 0\nFOO 1\n").unwrap_err();
        assert!(matches!(err, CircuitError::Parse { line: 4, .. }), "{err}");
        let err = Circuit::parse("qubits 2\nCNOT 1 1\n").unwrap_err();
        assert!(err.to_string().contains("identical operands"));
        assert!(Circuit::parse("H 0\n").is_err());
        assert!(Circuit::parse("qubits 1\nMZ 0 c0\n").is_err());
    }

    #[test]
    fn parse_skips_comments_and_blank_lines() {
        let c = Circuit::parse("# header\nqubits 1\n\ncbits 0\nT 0\n").unwrap();
        assert_eq!(c.t_count(), 1);
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let q = 0..n;
        prop_oneof![
            (q.clone(), 0..7u8).prop_map(|(q, k)| match k {
                0 => Gate::h(q),
                1 => Gate::x(q),
                2 => Gate::z(q),
                3 => Gate::s(q),
                4 => Gate::sdg(q),
                5 => Gate::t(q),
                _ => Gate::tdg(q),
            }),
            (q.clone(), 1..n).prop_map(move |(a, d)| Gate::cnot(a, (a + d) % n)),
            (q, 1..n).prop_map(move |(a, d)| Gate::cz(a, (a + d) % n)),
        ]
    }

    fn arb_circuit() -> impl Strategy<Value = Circuit> {
        (2usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(arb_gate(n), 0..30),
                prop::collection::vec(0u8..3, n),
                prop::collection::vec((0..n, 1..n, any::<bool>()), 0..3),
            )
                .prop_map(move |(gates, tags, tail)| {
                    let mut c = Circuit::new(n, tail.len());
                    for (q, t) in tags.iter().enumerate() {
                        let s = [InitState::Data, InitState::Zero, InitState::Plus][*t as usize];
                        c.set_init(q, s).unwrap();
                    }
                    c.push_all(gates).unwrap();
                    for (bit, (q, d, cz)) in tail.into_iter().enumerate() {
                        c.push(Gate::measure(q, bit)).unwrap();
                        let body = if cz {
                            Gate::cz(q, (q + d) % n)
                        } else {
                            Gate::x((q + d) % n)
                        };
                        c.push(Gate::conditional(bit, body)).unwrap();
                    }
                    c
                })
        })
    }

    proptest! {
        #[test]
        fn text_round_trip_is_byte_identical(c in arb_circuit()) {
            let text = c.to_text();
            let parsed = Circuit::parse(&text).unwrap();
            prop_assert_eq!(&parsed, &c);
            prop_assert_eq!(parsed.to_text(), text);
        }

        #[test]
        fn double_inverse_is_identity(c in arb_circuit()) {
            if c.is_unitary() {
                prop_assert_eq!(c.inverse().unwrap().inverse().unwrap(), c);
            }
        }

        #[test]
        fn t_sites_match_filtered_gate_order(c in arb_circuit()) {
            let sites = c.t_sites();
            prop_assert_eq!(sites.len(), c.t_count());
            prop_assert!(sites.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(sites.iter().all(|&i| c.gates()[i].is_t_type()));
        }
    }
}
