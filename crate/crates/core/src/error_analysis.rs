//! Pauli fault injection at T sites of the error-detecting Toffoli.
//!
//! Every fault pattern over the eight T sites is classified by exact
//! simulation. Pattern counts per weight give the acceptance and
//! accepted-but-faulty probabilities as exact integer polynomials in the
//! basis `p^k (1-p)^(8-k)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, QubitId, TSite};
use crate::constructions::{build_error_detecting_toffoli, reference_toffoli, SYNDROME_BIT};
use crate::sim::{self, OutcomePolicy, SimError, StateVector, OPERATOR_TOL};

/// Random data states mixed into every classification.
pub const CLASSIFY_RANDOM_STATES: usize = 4;
pub const CLASSIFY_SEED: u64 = 0xe44_0000;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("T site {site} out of range (circuit has {count} T gates)")]
    SiteOutOfRange { site: usize, count: usize },
    #[error("T site {0} faulted twice")]
    DuplicateSite(usize),
    #[error(
        "syndrome for Z pattern {pattern} is not deterministic (P(1) = {p_one}) on input {input}"
    )]
    NonDeterministicSyndrome {
        pattern: String,
        p_one: f64,
        input: usize,
    },
    #[error("syndrome for Z pattern {pattern} depends on the data input")]
    InputDependentSyndrome { pattern: String },
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("circuit has {0} T sites; the analysis needs at most 16")]
    TooManySites(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Pauli {
    X,
    Z,
}

/// Faults keyed by T site; at most one Pauli per site.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ErrorPattern {
    faults: BTreeMap<TSite, Pauli>,
}

impl ErrorPattern {
    pub fn new() -> Self {
        Self::default()
    }

    /// Z faults on the sites whose bits are set in `mask`.
    pub fn z_from_mask(mask: u32) -> Self {
        let faults = (0..32)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| (TSite(i), Pauli::Z))
            .collect();
        ErrorPattern { faults }
    }

    pub fn single(site: usize, pauli: Pauli) -> Self {
        ErrorPattern {
            faults: BTreeMap::from([(TSite(site), pauli)]),
        }
    }

    pub fn with(mut self, site: usize, pauli: Pauli) -> Result<Self, AnalysisError> {
        if self.faults.insert(TSite(site), pauli).is_some() {
            return Err(AnalysisError::DuplicateSite(site));
        }
        Ok(self)
    }

    pub fn weight(&self) -> usize {
        self.faults.len()
    }

    pub fn faults(&self) -> &BTreeMap<TSite, Pauli> {
        &self.faults
    }

    pub fn is_pure_z(&self) -> bool {
        self.faults.values().all(|p| *p == Pauli::Z)
    }
}

impl std::fmt::Display for ErrorPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("{")?;
        for (i, (site, p)) in self.faults.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:{:?}", site.0, p)?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternClass {
    Detected,
    AcceptedCorrect,
    AcceptedFaulty,
}

/// Inserts the faulting Pauli immediately after each faulted T/T† gate.
pub fn inject(circuit: &Circuit, pattern: &ErrorPattern) -> Result<Circuit, AnalysisError> {
    let sites = circuit.t_sites();
    if let Some((site, _)) = pattern.faults.iter().find(|(s, _)| s.0 >= sites.len()) {
        return Err(AnalysisError::SiteOutOfRange {
            site: site.0,
            count: sites.len(),
        });
    }
    let mut after: BTreeMap<usize, Pauli> = BTreeMap::new();
    for (site, p) in &pattern.faults {
        after.insert(sites[site.0], *p);
    }
    let mut out = Circuit::new(circuit.qubit_count(), circuit.classical_count());
    for (q, tag) in circuit.initial_states().iter().enumerate() {
        out.set_init(q, *tag).expect("same width");
    }
    for (i, g) in circuit.gates().iter().enumerate() {
        out.push(g.clone()).expect("copied from a valid circuit");
        if let Some(p) = after.get(&i) {
            let q = g.qubits()[0];
            let fault = match p {
                Pauli::X => Gate::X(q),
                Pauli::Z => Gate::Z(q),
            };
            out.push(fault).expect("same qubit as the T gate");
        }
    }
    Ok(out)
}

/// Classification result with the syndrome statistics that led to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub class: PatternClass,
    /// P(syndrome = 1) on each tested input, basis inputs first.
    pub reject_probability: Vec<f64>,
}

/// Classifies `pattern` on the error-detecting Toffoli.
pub fn classify(pattern: &ErrorPattern) -> Result<PatternClass, AnalysisError> {
    classify_detailed(&build_error_detecting_toffoli(), pattern).map(|c| c.class)
}

/// Classifies `pattern` on a circuit with data on qubits 0..3, a syndrome on
/// classical bit 0 and a Toffoli target action.
pub fn classify_detailed(
    circuit: &Circuit,
    pattern: &ErrorPattern,
) -> Result<Classification, AnalysisError> {
    let faulty = inject(circuit, pattern)?;
    let tof = reference_toffoli();
    let data = [QubitId(0), QubitId(1), QubitId(2)];
    let rest = StateVector::from_tags(&faulty.initial_states()[3..]);
    let mut rng = ChaCha8Rng::seed_from_u64(CLASSIFY_SEED);
    let inputs: Vec<StateVector> = (0..8)
        .map(|i| StateVector::basis(3, i))
        .chain((0..CLASSIFY_RANDOM_STATES).map(|_| StateVector::random(3, &mut rng)))
        .collect();

    let mut rejects = Vec::with_capacity(inputs.len());
    let mut accepted_correct = true;
    for (k, input) in inputs.iter().enumerate() {
        let full = StateVector::interleave(faulty.qubit_count(), &data, input, &rest);
        let branches = sim::run(&faulty, &full, &OutcomePolicy::Enumerate)?;
        let p_one: f64 = branches
            .iter()
            .filter(|b| b.outcome(SYNDROME_BIT) == Some(true))
            .map(|b| b.probability)
            .sum();
        if pattern.is_pure_z() && p_one > OPERATOR_TOL && p_one < 1.0 - OPERATOR_TOL {
            return Err(AnalysisError::NonDeterministicSyndrome {
                pattern: pattern.to_string(),
                p_one,
                input: k,
            });
        }
        rejects.push(p_one);
        let expected = tof.apply(input);
        for b in branches
            .iter()
            .filter(|b| b.outcome(SYNDROME_BIT) == Some(false))
        {
            if b.post_state.factor_residual(&data, &expected) > OPERATOR_TOL {
                accepted_correct = false;
            }
        }
    }
    if pattern.is_pure_z()
        && rejects
            .iter()
            .any(|p| (p - rejects[0]).abs() > OPERATOR_TOL)
    {
        return Err(AnalysisError::InputDependentSyndrome {
            pattern: pattern.to_string(),
        });
    }
    let class = if rejects.iter().all(|p| *p > 1.0 - OPERATOR_TOL) {
        PatternClass::Detected
    } else if accepted_correct {
        PatternClass::AcceptedCorrect
    } else {
        PatternClass::AcceptedFaulty
    };
    Ok(Classification {
        class,
        reject_probability: rejects,
    })
}

/// Integer pattern counts `c_k` for `Σ c_k p^k (1-p)^(n-k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BernsteinPoly {
    pub sites: usize,
    pub counts: Vec<u64>,
}

impl BernsteinPoly {
    pub fn zero(sites: usize) -> Self {
        BernsteinPoly {
            sites,
            counts: vec![0; sites + 1],
        }
    }

    pub fn eval(&self, p: f64) -> f64 {
        let n = self.sites as i32;
        self.counts
            .iter()
            .enumerate()
            .map(|(k, c)| *c as f64 * p.powi(k as i32) * (1.0 - p).powi(n - k as i32))
            .sum()
    }

    /// Exact coefficients in the monomial basis `Σ a_j p^j`.
    pub fn monomial(&self) -> Vec<i128> {
        let n = self.sites;
        let mut out = vec![0i128; n + 1];
        for (k, &c) in self.counts.iter().enumerate() {
            // p^k (1-p)^(n-k) = Σ_i C(n-k, i) (-1)^i p^(k+i)
            for i in 0..=n - k {
                let sign = if i % 2 == 0 { 1 } else { -1 };
                out[k + i] += sign * binomial(n - k, i) as i128 * c as i128;
            }
        }
        out
    }

    /// Lowest weight with a nonzero count.
    pub fn leading(&self) -> Option<(usize, u64)> {
        self.counts
            .iter()
            .enumerate()
            .find(|(_, c)| **c > 0)
            .map(|(k, c)| (k, *c))
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternRow {
    pub mask: u32,
    pub sites: Vec<usize>,
    pub weight: usize,
    pub class: PatternClass,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightCounts {
    pub weight: usize,
    pub detected: u64,
    pub accepted_correct: u64,
    pub accepted_faulty: u64,
}

/// Exact enumeration of all Z patterns on the error-detecting Toffoli.
#[derive(Clone, Debug, Serialize)]
pub struct PosteriorReport {
    pub sites: usize,
    pub accept_poly: BernsteinPoly,
    pub faulty_poly: BernsteinPoly,
    pub per_weight: Vec<WeightCounts>,
    pub patterns: Vec<PatternRow>,
}

impl PosteriorReport {
    pub fn accept_probability(&self, p: f64) -> f64 {
        self.accept_poly.eval(p)
    }

    pub fn reject_probability(&self, p: f64) -> f64 {
        self.reject_poly().eval(p)
    }

    pub fn reject_poly(&self) -> BernsteinPoly {
        let counts = self
            .accept_poly
            .counts
            .iter()
            .enumerate()
            .map(|(k, a)| binomial(self.sites, k) - a)
            .collect();
        BernsteinPoly {
            sites: self.sites,
            counts,
        }
    }

    /// P(accepted ∧ faulty).
    pub fn faulty_probability(&self, p: f64) -> f64 {
        self.faulty_poly.eval(p)
    }

    /// P(faulty | accepted).
    pub fn posterior(&self, p: f64) -> f64 {
        self.faulty_poly.eval(p) / self.accept_poly.eval(p)
    }

    /// Class of the pattern with fault mask `mask`.
    pub fn class_of(&self, mask: u32) -> PatternClass {
        self.patterns[mask as usize].class
    }
}

/// Classifies every Z pattern of `circuit`'s T sites.
pub fn enumerate_patterns(circuit: &Circuit) -> Result<PosteriorReport, AnalysisError> {
    let sites = circuit.t_count();
    if sites > 16 {
        return Err(AnalysisError::TooManySites(sites));
    }
    let patterns: Vec<PatternRow> = (0u32..1 << sites)
        .into_par_iter()
        .map(|mask| {
            let pattern = ErrorPattern::z_from_mask(mask);
            let class = classify_detailed(circuit, &pattern)?.class;
            Ok(PatternRow {
                mask,
                sites: pattern.faults().keys().map(|s| s.0).collect(),
                weight: pattern.weight(),
                class,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;

    let mut accept_poly = BernsteinPoly::zero(sites);
    let mut faulty_poly = BernsteinPoly::zero(sites);
    let mut per_weight: Vec<WeightCounts> = (0..=sites)
        .map(|weight| WeightCounts {
            weight,
            detected: 0,
            accepted_correct: 0,
            accepted_faulty: 0,
        })
        .collect();
    for row in &patterns {
        let w = &mut per_weight[row.weight];
        match row.class {
            PatternClass::Detected => w.detected += 1,
            PatternClass::AcceptedCorrect => {
                w.accepted_correct += 1;
                accept_poly.counts[row.weight] += 1;
            }
            PatternClass::AcceptedFaulty => {
                w.accepted_faulty += 1;
                accept_poly.counts[row.weight] += 1;
                faulty_poly.counts[row.weight] += 1;
            }
        }
    }
    Ok(PosteriorReport {
        sites,
        accept_poly,
        faulty_poly,
        per_weight,
        patterns,
    })
}

/// All 2⁸ Z patterns of the error-detecting Toffoli.
pub fn enumerate_all() -> Result<PosteriorReport, AnalysisError> {
    enumerate_patterns(&build_error_detecting_toffoli())
}

/// P(syndrome = 1) for `circuit` started from its tagged initial state, with
/// i.i.d. Z faults of probability `p` on every T site.
pub fn rejection_probability(circuit: &Circuit, p: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::BadProbability(p));
    }
    let n = circuit.t_count();
    if n > 16 {
        return Err(AnalysisError::TooManySites(n));
    }
    let input = StateVector::from_tags(circuit.initial_states());
    (0u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            let faulty = inject(circuit, &ErrorPattern::z_from_mask(mask))?;
            let p_one: f64 = sim::run(&faulty, &input, &OutcomePolicy::Enumerate)?
                .iter()
                .filter(|b| b.outcome(SYNDROME_BIT) == Some(true))
                .map(|b| b.probability)
                .sum();
            let k = mask.count_ones() as i32;
            Ok(p.powi(k) * (1.0 - p).powi(n as i32 - k) * p_one)
        })
        .collect::<Result<Vec<f64>, AnalysisError>>()
        .map(|v| v.iter().sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Wilson score interval at z = 1.96.
pub fn wilson_interval(successes: u64, trials: u64) -> Interval {
    const Z: f64 = 1.959_963_984_540_054;
    if trials == 0 {
        return Interval {
            estimate: f64::NAN,
            lower: 0.0,
            upper: 1.0,
        };
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        estimate: phat,
        lower: if successes == 0 {
            0.0
        } else {
            (centre - half).max(0.0)
        },
        upper: if successes == trials {
            1.0
        } else {
            (centre + half).min(1.0)
        },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloResult {
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub accepted: u64,
    pub accepted_faulty: u64,
    pub acceptance: Interval,
    /// Faulty fraction among accepted trials.
    pub posterior: Interval,
}

const MC_SHARDS: u64 = 16;

/// Samples i.i.d. Bernoulli(p) Z faults per T site and tallies outcomes using
/// the exact per-pattern classes of `report`.
pub fn monte_carlo(
    report: &PosteriorReport,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloResult, AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::BadProbability(p));
    }
    let sites = report.sites;
    let shard = |index: u64| {
        let share = trials / MC_SHARDS + u64::from(index < trials % MC_SHARDS);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let (mut acc, mut bad) = (0u64, 0u64);
        for _ in 0..share {
            let mask =
                (0..sites).fold(0u32, |m, i| if rng.random_bool(p) { m | 1 << i } else { m });
            match report.class_of(mask) {
                PatternClass::Detected => {}
                PatternClass::AcceptedCorrect => acc += 1,
                PatternClass::AcceptedFaulty => {
                    acc += 1;
                    bad += 1;
                }
            }
        }
        (acc, bad)
    };
    let (accepted, accepted_faulty) = (0..MC_SHARDS)
        .into_par_iter()
        .map(shard)
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(MonteCarloResult {
        p,
        trials,
        seed,
        accepted,
        accepted_faulty,
        acceptance: wilson_interval(accepted, trials),
        posterior: wilson_interval(accepted_faulty, accepted),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct XSurveyRow {
    pub site: usize,
    pub class: PatternClass,
    /// P(syndrome = 1) on each basis input followed by the random inputs.
    pub reject_probability: Vec<f64>,
}

/// Ground-truth classes of the eight single-X patterns.
pub fn x_error_survey() -> Result<Vec<XSurveyRow>, AnalysisError> {
    let circuit = build_error_detecting_toffoli();
    (0..circuit.t_count())
        .map(|site| {
            let c = classify_detailed(&circuit, &ErrorPattern::single(site, Pauli::X))?;
            Ok(XSurveyRow {
                site,
                class: c.class,
                reject_probability: c.reject_probability,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inject_empty_is_identity() {
        let c = build_error_detecting_toffoli();
        assert_eq!(inject(&c, &ErrorPattern::new()).unwrap(), c);
    }

    #[test]
    fn inject_places_z_after_first_t() {
        let c = build_error_detecting_toffoli();
        let out = inject(&c, &ErrorPattern::single(0, Pauli::Z)).unwrap();
        let first = c.t_sites()[0];
        assert_eq!(out.gates().len(), c.gates().len() + 1);
        let t_qubit = c.gates()[first].qubits()[0];
        assert_eq!(out.gates()[first + 1], Gate::Z(t_qubit));
        assert_eq!(out.t_count(), c.t_count());
    }

    #[test]
    fn duplicate_and_out_of_range_sites_rejected() {
        let err = ErrorPattern::single(3, Pauli::Z)
            .with(3, Pauli::Z)
            .unwrap_err();
        assert!(matches!(err, AnalysisError::DuplicateSite(3)));
        let err = inject(
            &build_error_detecting_toffoli(),
            &ErrorPattern::single(8, Pauli::Z),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            AnalysisError::SiteOutOfRange { site: 8, count: 8 }
        ));
    }

    #[test]
    fn empty_pattern_is_accepted_correct() {
        assert_eq!(
            classify(&ErrorPattern::new()).unwrap(),
            PatternClass::AcceptedCorrect
        );
    }

    #[test]
    fn single_z_faults_are_detected() {
        for site in 0..8 {
            assert_eq!(
                classify(&ErrorPattern::single(site, Pauli::Z)).unwrap(),
                PatternClass::Detected,
                "site {site}"
            );
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(8, 2), 28);
        assert_eq!(binomial(8, 0), 1);
        assert_eq!(binomial(8, 8), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!((0..=8).map(|k| binomial(8, k)).sum::<u64>(), 256);
    }

    #[test]
    fn bernstein_to_monomial() {
        // (1-p)^2 = 1 - 2p + p^2
        let poly = BernsteinPoly {
            sites: 2,
            counts: vec![1, 0, 0],
        };
        assert_eq!(poly.monomial(), vec![1, -2, 1]);
        // full basis sums to 1
        let all = BernsteinPoly {
            sites: 8,
            counts: (0..=8).map(|k| binomial(8, k)).collect(),
        };
        let mut one = vec![0i128; 9];
        one[0] = 1;
        assert_eq!(all.monomial(), one);
        for p in [0.0, 0.1, 0.5, 0.9] {
            assert!((all.eval(p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wilson_interval_basics() {
        let w = wilson_interval(50, 100);
        assert!((w.estimate - 0.5).abs() < 1e-15);
        assert!(w.lower < 0.5 && w.upper > 0.5);
        // reference value for 50/100: [0.4038, 0.5962]
        assert!((w.lower - 0.4038).abs() < 1e-4 && (w.upper - 0.5962).abs() < 1e-4);
        let z = wilson_interval(0, 1000);
        assert_eq!(z.lower, 0.0);
        assert!(z.upper > 0.0 && z.upper < 0.005);
    }

    #[test]
    fn x_survey_shape_and_determinism() {
        let a = x_error_survey().unwrap();
        let b = x_error_survey().unwrap();
        assert_eq!(a.len(), 8);
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.class, rb.class);
            assert_eq!(ra.reject_probability, rb.reject_probability);
        }
    }
}
