//! Exact dense state-vector simulation.
//!
//! Basis ordering: qubit 0 is the most significant bit of the basis index, so
//! `|x, y, z>` on qubits `(0, 1, 2)` is amplitude `4x + 2y + z`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::circuit::{Circuit, ClassicalBitId, Gate, InitState, QubitId};

pub const MAX_QUBITS: usize = 16;
/// Entrywise tolerance for operator equality.
pub const OPERATOR_TOL: f64 = 1e-10;
/// Tolerance for state norms.
pub const NORM_TOL: f64 = 1e-12;
/// Seed used for the random data states of gadget checks unless overridden.
pub const DEFAULT_GADGET_SEED: u64 = 0x7f0f_f011;

/// Branches whose probability falls below this are treated as impossible.
const BRANCH_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("state has {state} qubits but the circuit has {circuit}")]
    DimensionMismatch { state: usize, circuit: usize },
    #[error("matrix dimensions differ: {0} vs {1}")]
    MatrixMismatch(usize, usize),
    #[error("{0} qubits exceed the dense simulation limit of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("fixed outcome policy does not supply measured bit c{0}")]
    MissingOutcome(usize),
    #[error("fixed outcome c{bit}={value} has zero probability")]
    ImpossibleOutcome { bit: usize, value: bool },
    #[error("circuit contains measurements; it has no unitary")]
    NotUnitary,
    #[error("state vector length {0} is not a power of two")]
    BadLength(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubit_count: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|index>`.
    pub fn basis(qubit_count: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubit_count];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        StateVector {
            qubit_count,
            amplitudes,
        }
    }

    pub fn zero(qubit_count: usize) -> Self {
        Self::basis(qubit_count, 0)
    }

    /// Wraps raw amplitudes, normalising them.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(SimError::BadLength(len));
        }
        let mut s = StateVector {
            qubit_count: len.trailing_zeros() as usize,
            amplitudes,
        };
        s.normalize();
        Ok(s)
    }

    /// Haar-ish random state from i.i.d. complex Gaussians.
    pub fn random(qubit_count: usize, rng: &mut impl Rng) -> Self {
        let amplitudes = (0..1usize << qubit_count)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_amplitudes(amplitudes).expect("power-of-two length")
    }

    /// Product state built from initial-state tags (`data` is treated as `|0>`).
    pub fn from_tags(tags: &[InitState]) -> Self {
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for tag in tags {
            let single = match tag {
                InitState::Plus => [Complex64::new(FRAC_1_SQRT_2, 0.0); 2],
                InitState::Zero | InitState::Data => {
                    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
                }
            };
            amps = amps
                .iter()
                .flat_map(|a| single.iter().map(move |s| a * s))
                .collect();
        }
        StateVector {
            qubit_count: tags.len(),
            amplitudes: amps,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `1 - |<self|other>|`, zero iff equal up to global phase.
    pub fn phase_insensitive_distance(&self, other: &StateVector) -> f64 {
        1.0 - self.inner(other).norm()
    }

    /// Places `data` on the qubits listed in `data_qubits` (first listed is
    /// most significant) and `rest` on the remaining qubits in ascending order.
    pub fn interleave(
        total: usize,
        data_qubits: &[QubitId],
        data: &StateVector,
        rest: &StateVector,
    ) -> StateVector {
        let layout = Layout::new(total, data_qubits);
        assert_eq!(data.qubit_count, data_qubits.len());
        assert_eq!(rest.qubit_count, layout.others.len());
        let amplitudes = (0..1usize << total)
            .map(|i| {
                let (d, r) = layout.split(i);
                data.amplitudes[d] * rest.amplitudes[r]
            })
            .collect();
        StateVector {
            qubit_count: total,
            amplitudes,
        }
    }

    fn mask(&self, q: QubitId) -> usize {
        1 << (self.qubit_count - 1 - q.0)
    }

    pub fn apply(&mut self, gate: &Gate) {
        let i = Complex64::i();
        let omega = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        match gate {
            Gate::H(q) => {
                let m = self.mask(*q);
                for k in (0..self.dim()).filter(|k| k & m == 0) {
                    let (a, b) = (self.amplitudes[k], self.amplitudes[k | m]);
                    self.amplitudes[k] = (a + b) * FRAC_1_SQRT_2;
                    self.amplitudes[k | m] = (a - b) * FRAC_1_SQRT_2;
                }
            }
            Gate::X(q) => {
                let m = self.mask(*q);
                for k in (0..self.dim()).filter(|k| k & m == 0) {
                    self.amplitudes.swap(k, k | m);
                }
            }
            Gate::Z(q) => self.phase(*q, Complex64::new(-1.0, 0.0)),
            Gate::S(q) => self.phase(*q, i),
            Gate::Sdg(q) => self.phase(*q, -i),
            Gate::T(q) => self.phase(*q, omega),
            Gate::Tdg(q) => self.phase(*q, omega.conj()),
            Gate::Cnot { control, target } => {
                let (c, t) = (self.mask(*control), self.mask(*target));
                for k in (0..self.dim()).filter(|k| k & c != 0 && k & t == 0) {
                    self.amplitudes.swap(k, k | t);
                }
            }
            Gate::Cz(a, b) => {
                let m = self.mask(*a) | self.mask(*b);
                for k in (0..self.dim()).filter(|k| k & m == m) {
                    self.amplitudes[k] = -self.amplitudes[k];
                }
            }
            Gate::MeasureZ { .. } | Gate::Conditional { .. } => {
                panic!("apply() takes unitary gates only, got `{gate}`")
            }
        }
    }

    fn phase(&mut self, q: QubitId, factor: Complex64) {
        let m = self.mask(q);
        for (k, a) in self.amplitudes.iter_mut().enumerate() {
            if k & m != 0 {
                *a *= factor;
            }
        }
    }

    pub fn probability_of_one(&self, q: QubitId) -> f64 {
        let m = self.mask(q);
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| k & m != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects qubit `q` onto `value` and renormalises; returns the outcome probability.
    fn collapse(&mut self, q: QubitId, value: bool) -> f64 {
        let m = self.mask(q);
        let mut p = 0.0;
        for (k, a) in self.amplitudes.iter_mut().enumerate() {
            if (k & m != 0) == value {
                p += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        self.normalize();
        p
    }

    /// Factors `self` as `psi ⊗ phi` with `psi` given on `data_qubits`.
    ///
    /// Returns the norm of the residual `self - psi ⊗ phi` where `phi` is the
    /// best-fitting state of the other qubits. The residual is zero iff the
    /// data register holds `psi` up to phase and is unentangled from the rest.
    pub fn factor_residual(&self, data_qubits: &[QubitId], psi: &StateVector) -> f64 {
        let layout = Layout::new(self.qubit_count, data_qubits);
        let mut phi = vec![Complex64::new(0.0, 0.0); 1 << layout.others.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let (d, r) = layout.split(i);
            phi[r] += psi.amplitudes[d].conj() * a;
        }
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let (d, r) = layout.split(i);
                (a - psi.amplitudes[d] * phi[r]).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Data-register state when the register is unentangled (projected onto the
    /// dominant configuration of the other qubits).
    pub fn extract(&self, data_qubits: &[QubitId]) -> StateVector {
        let layout = Layout::new(self.qubit_count, data_qubits);
        let mut weights = vec![0.0; 1 << layout.others.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            weights[layout.split(i).1] += a.norm_sqr();
        }
        let best = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(r, _)| r)
            .unwrap_or(0);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << data_qubits.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let (d, r) = layout.split(i);
            if r == best {
                amps[d] = *a;
            }
        }
        StateVector::from_amplitudes(amps).expect("power-of-two length")
    }
}

/// Splits a full basis index into (data index, rest index).
struct Layout {
    total: usize,
    data: Vec<usize>,
    others: Vec<usize>,
}

impl Layout {
    fn new(total: usize, data_qubits: &[QubitId]) -> Self {
        let data: Vec<usize> = data_qubits.iter().map(|q| q.0).collect();
        let others = (0..total).filter(|q| !data.contains(q)).collect();
        Layout {
            total,
            data,
            others,
        }
    }

    fn bit(&self, index: usize, q: usize) -> usize {
        (index >> (self.total - 1 - q)) & 1
    }

    fn split(&self, index: usize) -> (usize, usize) {
        let gather = |qs: &[usize]| qs.iter().fold(0, |acc, &q| (acc << 1) | self.bit(index, q));
        (gather(&self.data), gather(&self.others))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseUnitary {
    dim: usize,
    /// Row-major entries.
    entries: Vec<Complex64>,
}

impl DenseUnitary {
    pub fn identity(qubits: usize) -> Self {
        let dim = 1 << qubits;
        Self::from_fn(dim, |r, c| if r == c { 1.0.into() } else { 0.0.into() })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let entries = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        DenseUnitary { dim, entries }
    }

    /// Matrix with `|perm(c)> <c|` columns.
    pub fn permutation(dim: usize, perm: impl Fn(usize) -> usize) -> Self {
        let mut m = Self::from_fn(dim, |_, _| 0.0.into());
        for c in 0..dim {
            m.entries[perm(c) * dim + c] = 1.0.into();
        }
        m
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        Self::from_fn(diag.len(), |r, c| if r == c { diag[r] } else { 0.0.into() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubit_count(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn column(&self, col: usize) -> StateVector {
        StateVector {
            qubit_count: self.qubit_count(),
            amplitudes: (0..self.dim).map(|r| self.get(r, col)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn mul(&self, other: &DenseUnitary) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_fn(self.dim, |r, c| {
            (0..self.dim)
                .map(|k| self.get(r, k) * other.get(k, c))
                .sum()
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(r, c) * factor)
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        assert_eq!(self.dim, state.dim());
        StateVector {
            qubit_count: state.qubit_count,
            amplitudes: (0..self.dim)
                .map(|r| {
                    (0..self.dim)
                        .map(|c| self.get(r, c) * state.amplitudes[c])
                        .sum()
                })
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &DenseUnitary) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let id = DenseUnitary::identity(self.qubit_count());
        self.adjoint().mul(self).max_abs_diff(&id)
    }

    /// Controlled version with `controls` extra control qubits placed before the
    /// wires of `self`.
    pub fn controlled(&self, controls: usize) -> Self {
        let dim = self.dim << controls;
        let offset = dim - self.dim;
        Self::from_fn(dim, |r, c| {
            if r >= offset && c >= offset {
                self.get(r - offset, c - offset)
            } else if r == c {
                1.0.into()
            } else {
                0.0.into()
            }
        })
    }
}

/// `1 - |tr(U† V)| / dim`.
pub fn phase_insensitive_distance(u: &DenseUnitary, v: &DenseUnitary) -> Result<f64, SimError> {
    if u.dim != v.dim {
        return Err(SimError::MatrixMismatch(u.dim, v.dim));
    }
    let trace: Complex64 = u
        .entries
        .iter()
        .zip(&v.entries)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(1.0 - trace.norm() / u.dim as f64)
}

#[derive(Clone, Debug)]
pub enum OutcomePolicy {
    Enumerate,
    Fixed(BTreeMap<ClassicalBitId, bool>),
    Sample(u64),
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub outcomes: BTreeMap<ClassicalBitId, bool>,
    pub probability: f64,
    pub post_state: StateVector,
}

impl Branch {
    pub fn outcome(&self, bit: usize) -> Option<bool> {
        self.outcomes.get(&ClassicalBitId(bit)).copied()
    }
}

fn check_dims(circuit: &Circuit, input: &StateVector) -> Result<(), SimError> {
    if circuit.qubit_count() > MAX_QUBITS {
        return Err(SimError::TooManyQubits(circuit.qubit_count()));
    }
    if input.qubit_count != circuit.qubit_count() {
        return Err(SimError::DimensionMismatch {
            state: input.qubit_count,
            circuit: circuit.qubit_count(),
        });
    }
    Ok(())
}

/// Runs `circuit` on `input`, branching at measurements according to `policy`.
pub fn run(
    circuit: &Circuit,
    input: &StateVector,
    policy: &OutcomePolicy,
) -> Result<Vec<Branch>, SimError> {
    check_dims(circuit, input)?;
    let mut rng = match policy {
        OutcomePolicy::Sample(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut branches = vec![Branch {
        outcomes: BTreeMap::new(),
        probability: 1.0,
        post_state: input.clone(),
    }];
    for gate in circuit.gates() {
        match gate {
            Gate::MeasureZ { qubit, bit } => {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for b in branches {
                    let p1 = b.post_state.probability_of_one(*qubit);
                    let choices: Vec<bool> = match policy {
                        OutcomePolicy::Enumerate => [false, true]
                            .into_iter()
                            .filter(|&v| (if v { p1 } else { 1.0 - p1 }) > BRANCH_EPS)
                            .collect(),
                        OutcomePolicy::Fixed(bits) => {
                            let v = *bits.get(bit).ok_or(SimError::MissingOutcome(bit.0))?;
                            if (if v { p1 } else { 1.0 - p1 }) <= BRANCH_EPS {
                                return Err(SimError::ImpossibleOutcome {
                                    bit: bit.0,
                                    value: v,
                                });
                            }
                            vec![v]
                        }
                        OutcomePolicy::Sample(_) => {
                            let r: f64 = rng.as_mut().expect("sampling rng").random();
                            vec![r < p1]
                        }
                    };
                    for v in choices {
                        let mut state = b.post_state.clone();
                        let p = state.collapse(*qubit, v);
                        let mut outcomes = b.outcomes.clone();
                        outcomes.insert(*bit, v);
                        next.push(Branch {
                            outcomes,
                            probability: b.probability * p,
                            post_state: state,
                        });
                    }
                }
                branches = next;
            }
            Gate::Conditional { bit, gate } => {
                for b in &mut branches {
                    if b.outcomes.get(bit).copied().unwrap_or(false) {
                        b.post_state.apply(gate);
                    }
                }
            }
            g => branches.iter_mut().for_each(|b| b.post_state.apply(g)),
        }
    }
    Ok(branches)
}

/// Unitary run without branching.
pub fn evolve(circuit: &Circuit, input: &StateVector) -> Result<StateVector, SimError> {
    check_dims(circuit, input)?;
    if !circuit.is_unitary() {
        return Err(SimError::NotUnitary);
    }
    let mut state = input.clone();
    circuit.gates().iter().for_each(|g| state.apply(g));
    Ok(state)
}

/// Simulates every computational basis input to obtain the circuit's matrix.
pub fn extract_unitary(circuit: &Circuit) -> Result<DenseUnitary, SimError> {
    if !circuit.is_unitary() {
        return Err(SimError::NotUnitary);
    }
    let n = circuit.qubit_count();
    if n > MAX_QUBITS {
        return Err(SimError::TooManyQubits(n));
    }
    let dim = 1 << n;
    let columns: Vec<StateVector> = (0..dim)
        .map(|c| evolve(circuit, &StateVector::basis(n, c)))
        .collect::<Result<_, _>>()?;
    Ok(DenseUnitary::from_fn(dim, |r, c| columns[c].amplitudes[r]))
}

#[derive(Clone, Debug)]
pub struct GadgetOptions {
    pub tol: f64,
    pub random_states: usize,
    pub seed: u64,
    /// Overrides the tag-derived product state of the non-data qubits.
    pub ancilla_state: Option<StateVector>,
}

impl Default for GadgetOptions {
    fn default() -> Self {
        GadgetOptions {
            tol: OPERATOR_TOL,
            random_states: 8,
            seed: DEFAULT_GADGET_SEED,
            ancilla_state: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GadgetInput {
    Basis(usize),
    Random(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetFailure {
    pub input: GadgetInput,
    pub outcomes: BTreeMap<ClassicalBitId, bool>,
    pub branch_probability: f64,
    pub residual: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetCheck {
    pub inputs_checked: usize,
    pub branches_checked: usize,
    /// Distinct measurement records seen across all inputs.
    pub distinct_outcomes: usize,
    pub max_residual: f64,
    pub seed: u64,
    pub failure: Option<GadgetFailure>,
}

impl GadgetCheck {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks that every branch of `circuit` leaves `target · input` on `data_qubits`
/// with the ancillas disentangled, for all basis inputs and seeded random inputs.
pub fn gadget_implements(
    circuit: &Circuit,
    target: &DenseUnitary,
    data_qubits: &[QubitId],
    opts: &GadgetOptions,
) -> Result<GadgetCheck, SimError> {
    let d = data_qubits.len();
    if target.qubit_count() != d {
        return Err(SimError::MatrixMismatch(target.dim(), 1 << d));
    }
    let rest = match &opts.ancilla_state {
        Some(s) => s.clone(),
        None => {
            let tags: Vec<InitState> = (0..circuit.qubit_count())
                .filter(|q| !data_qubits.contains(&QubitId(*q)))
                .map(|q| circuit.initial_state(QubitId(q)))
                .collect();
            StateVector::from_tags(&tags)
        }
    };
    if rest.qubit_count() + d != circuit.qubit_count() {
        return Err(SimError::DimensionMismatch {
            state: rest.qubit_count() + d,
            circuit: circuit.qubit_count(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let inputs = (0..1usize << d)
        .map(|i| (GadgetInput::Basis(i), StateVector::basis(d, i)))
        .chain(
            (0..opts.random_states)
                .map(|k| (GadgetInput::Random(k), StateVector::random(d, &mut rng))),
        );

    let mut check = GadgetCheck {
        inputs_checked: 0,
        branches_checked: 0,
        distinct_outcomes: 0,
        max_residual: 0.0,
        seed: opts.seed,
        failure: None,
    };
    let mut records = std::collections::BTreeSet::new();
    for (label, data) in inputs {
        check.inputs_checked += 1;
        let full = StateVector::interleave(circuit.qubit_count(), data_qubits, &data, &rest);
        let expected = target.apply(&data);
        let branches = run(circuit, &full, &OutcomePolicy::Enumerate)?;
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        if (total - 1.0).abs() > opts.tol {
            check.failure = Some(GadgetFailure {
                input: label,
                outcomes: BTreeMap::new(),
                branch_probability: total,
                residual: f64::NAN,
                message: format!("branch probabilities sum to {total}"),
            });
            return Ok(check);
        }
        for b in branches {
            check.branches_checked += 1;
            records.insert(b.outcomes.clone());
            let residual = b.post_state.factor_residual(data_qubits, &expected);
            check.max_residual = check.max_residual.max(residual);
            if residual > opts.tol {
                check.failure = Some(GadgetFailure {
                    input: label,
                    outcomes: b.outcomes,
                    branch_probability: b.probability,
                    residual,
                    message:
                        "data register differs from target action or is entangled with ancillas"
                            .into(),
                });
                check.distinct_outcomes = records.len();
                return Ok(check);
            }
        }
    }
    check.distinct_outcomes = records.len();
    Ok(check)
}
