//! Magic-state distillation cost recurrence and Toffoli scheme comparison.
//!
//! Each distillation round consumes `n_in` states of error `p` and, on success
//! (probability `(1-p)^n_in`), emits `n_out` states of error `c·p^k`. The
//! expected raw-state cost per output state multiplies by
//! `(n_in / n_out) / P_success` per round.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::constructions::{
    build_error_detecting_toffoli, build_four_t_toffoli, build_standard_seven_t_toffoli,
};
use crate::error_analysis::PosteriorReport;

/// Longest pipeline considered by [`min_rounds`].
pub const MAX_ROUNDS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResourceError {
    #[error("protocol {name}: {reason}")]
    InvalidProtocol { name: String, reason: String },
    #[error("raw error probability {0} must lie in (0, 1)")]
    InvalidRawError(f64),
    #[error("pipeline not contractive: round {round} ({protocol}) maps p = {p_in:e} to {p_out:e}")]
    NotContractive {
        round: usize,
        protocol: String,
        p_in: f64,
        p_out: f64,
    },
    #[error(
        "round {round} ({protocol}) input error {p_in:e} exceeds its applicability bound {max:e}"
    )]
    OutsideRange {
        round: usize,
        protocol: String,
        p_in: f64,
        max: f64,
    },
    #[error("target {target:e} unreachable from p_raw = {p_raw:e} within {max_rounds} rounds")]
    Unreachable {
        p_raw: f64,
        target: f64,
        max_rounds: usize,
    },
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("error-detecting scheme needs an exact pattern enumeration")]
    MissingPosterior,
    #[error("config: {0}")]
    Config(String),
}

/// One distillation round type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillationProtocol {
    pub name: String,
    pub n_in: u32,
    pub n_out: u32,
    /// Output error is `error_coeff · p_in^error_power`.
    pub error_coeff: f64,
    pub error_power: u32,
    /// Largest input error for which the leading-order output law is applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_input_error: Option<f64>,
}

impl DistillationProtocol {
    /// 15-to-1 with cubic suppression.
    pub fn bravyi_kitaev() -> Self {
        DistillationProtocol {
            name: "BK".into(),
            n_in: 15,
            n_out: 1,
            error_coeff: 35.0,
            error_power: 3,
            max_input_error: None,
        }
    }

    /// 10-to-2 with quadratic suppression, used only on pre-distilled inputs.
    pub fn meier_eastin_knill() -> Self {
        DistillationProtocol {
            name: "MEK".into(),
            n_in: 10,
            n_out: 2,
            error_coeff: 8.0,
            error_power: 2,
            max_input_error: Some(1e-3),
        }
    }

    pub fn validate(&self) -> Result<(), ResourceError> {
        let bad = |reason: &str| {
            Err(ResourceError::InvalidProtocol {
                name: self.name.clone(),
                reason: reason.into(),
            })
        };
        if self.n_out < 1 || self.n_in <= self.n_out {
            return bad("requires n_in > n_out >= 1");
        }
        if !(self.error_coeff > 0.0 && self.error_coeff.is_finite()) {
            return bad("error_coeff must be positive");
        }
        if self.error_power < 2 {
            return bad("error_power must be at least 2");
        }
        if self.max_input_error.is_some_and(|m| !(m > 0.0 && m < 1.0)) {
            return bad("max_input_error must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn output_error(&self, p_in: f64) -> f64 {
        self.error_coeff * p_in.powi(self.error_power as i32)
    }

    pub fn success_probability(&self, p_in: f64) -> f64 {
        (1.0 - p_in).powi(self.n_in as i32)
    }

    /// Expected input states per output state.
    pub fn cost_factor(&self, p_in: f64) -> f64 {
        (self.n_in as f64 / self.n_out as f64) / self.success_probability(p_in)
    }
}

pub fn default_menu() -> Vec<DistillationProtocol> {
    vec![
        DistillationProtocol::bravyi_kitaev(),
        DistillationProtocol::meier_eastin_knill(),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub rounds: Vec<DistillationProtocol>,
    pub p_raw: f64,
}

impl Pipeline {
    pub fn new(p_raw: f64, rounds: Vec<DistillationProtocol>) -> Self {
        Pipeline { rounds, p_raw }
    }

    pub fn names(&self) -> Vec<String> {
        self.rounds.iter().map(|r| r.name.clone()).collect()
    }
}

fn decimal<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:e}"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTrace {
    pub protocol: String,
    #[serde(serialize_with = "decimal")]
    pub p_in: f64,
    #[serde(serialize_with = "decimal")]
    pub p_out: f64,
    #[serde(serialize_with = "decimal")]
    pub success_probability: f64,
    /// Raw states per output state after this round.
    #[serde(serialize_with = "decimal")]
    pub raw_states: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineCost {
    pub raw_states_per_output: f64,
    pub p_out: f64,
    pub trace: Vec<RoundTrace>,
}

pub fn pipeline_cost(pipeline: &Pipeline) -> Result<PipelineCost, ResourceError> {
    if !(pipeline.p_raw > 0.0 && pipeline.p_raw < 1.0) {
        return Err(ResourceError::InvalidRawError(pipeline.p_raw));
    }
    let mut cost = 1.0;
    let mut p = pipeline.p_raw;
    let mut trace = Vec::with_capacity(pipeline.rounds.len());
    for (round, proto) in pipeline.rounds.iter().enumerate() {
        proto.validate()?;
        if let Some(max) = proto.max_input_error {
            if p > max {
                return Err(ResourceError::OutsideRange {
                    round,
                    protocol: proto.name.clone(),
                    p_in: p,
                    max,
                });
            }
        }
        let p_out = proto.output_error(p);
        if p_out >= p {
            return Err(ResourceError::NotContractive {
                round,
                protocol: proto.name.clone(),
                p_in: p,
                p_out,
            });
        }
        cost *= proto.cost_factor(p);
        trace.push(RoundTrace {
            protocol: proto.name.clone(),
            p_in: p,
            p_out,
            success_probability: proto.success_probability(p),
            raw_states: cost,
        });
        p = p_out;
    }
    Ok(PipelineCost {
        raw_states_per_output: cost,
        p_out: p,
        trace,
    })
}

/// Cheapest pipeline over sequences of `menu` (up to `max_rounds` long) whose
/// output error satisfies `accept`. Ties keep the first sequence found in
/// depth-first menu order.
pub fn cheapest_pipeline(
    p_raw: f64,
    menu: &[DistillationProtocol],
    max_rounds: usize,
    accept: impl Fn(f64) -> bool,
) -> Option<(Pipeline, PipelineCost)> {
    fn search(
        current: &mut Vec<DistillationProtocol>,
        p_raw: f64,
        menu: &[DistillationProtocol],
        left: usize,
        accept: &dyn Fn(f64) -> bool,
        best: &mut Option<(Pipeline, PipelineCost)>,
    ) {
        let pipeline = Pipeline::new(p_raw, current.clone());
        let Ok(cost) = pipeline_cost(&pipeline) else {
            return;
        };
        // every extra round multiplies the cost by more than one
        if best.as_ref().is_some_and(|(_, b)| {
            cost.raw_states_per_output >= b.raw_states_per_output * (1.0 - 1e-12)
        }) {
            return;
        }
        if accept(cost.p_out) {
            *best = Some((pipeline, cost));
            return;
        }
        if left == 0 {
            return;
        }
        for proto in menu {
            current.push(proto.clone());
            search(current, p_raw, menu, left - 1, accept, best);
            current.pop();
        }
    }
    let mut best = None;
    search(&mut Vec::new(), p_raw, menu, max_rounds, &accept, &mut best);
    best
}

/// Cheapest pipeline reaching `p_out <= target`.
pub fn min_rounds(
    p_raw: f64,
    target: f64,
    menu: &[DistillationProtocol],
) -> Result<Pipeline, ResourceError> {
    if !(p_raw > 0.0 && p_raw < 1.0) {
        return Err(ResourceError::InvalidRawError(p_raw));
    }
    for proto in menu {
        proto.validate()?;
    }
    cheapest_pipeline(p_raw, menu, MAX_ROUNDS, |p| p <= target)
        .map(|(pipeline, _)| pipeline)
        .ok_or(ResourceError::Unreachable {
            p_raw,
            target,
            max_rounds: MAX_ROUNDS,
        })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    SevenT,
    FourT,
    ErrorDetecting,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::SevenT => "seven_t",
            SchemeKind::FourT => "four_t",
            SchemeKind::ErrorDetecting => "error_detecting",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = ResourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seven_t" => Ok(SchemeKind::SevenT),
            "four_t" => Ok(SchemeKind::FourT),
            "error_detecting" => Ok(SchemeKind::ErrorDetecting),
            other => Err(ResourceError::UnknownScheme(other.into())),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ToffoliErrorModel {
    /// Any faulty T gate spoils the Toffoli: error `t · p`.
    Linear,
    /// Post-selected error-detecting circuit.
    Posterior(Arc<PosteriorReport>),
}

#[derive(Clone, Debug)]
pub struct ToffoliScheme {
    pub kind: SchemeKind,
    pub t_gates_needed: usize,
    pub error_model: ToffoliErrorModel,
}

impl ToffoliScheme {
    pub fn seven_t() -> Self {
        ToffoliScheme {
            kind: SchemeKind::SevenT,
            t_gates_needed: build_standard_seven_t_toffoli().t_count(),
            error_model: ToffoliErrorModel::Linear,
        }
    }

    pub fn four_t() -> Self {
        ToffoliScheme {
            kind: SchemeKind::FourT,
            t_gates_needed: build_four_t_toffoli().t_count(),
            error_model: ToffoliErrorModel::Linear,
        }
    }

    pub fn error_detecting(report: Arc<PosteriorReport>) -> Self {
        ToffoliScheme {
            kind: SchemeKind::ErrorDetecting,
            t_gates_needed: build_error_detecting_toffoli().t_count(),
            error_model: ToffoliErrorModel::Posterior(report),
        }
    }

    pub fn from_kind(
        kind: SchemeKind,
        report: Option<&Arc<PosteriorReport>>,
    ) -> Result<Self, ResourceError> {
        Ok(match kind {
            SchemeKind::SevenT => Self::seven_t(),
            SchemeKind::FourT => Self::four_t(),
            SchemeKind::ErrorDetecting => {
                Self::error_detecting(report.cloned().ok_or(ResourceError::MissingPosterior)?)
            }
        })
    }

    pub fn toffoli_error(&self, p_t: f64) -> f64 {
        match &self.error_model {
            ToffoliErrorModel::Linear => self.t_gates_needed as f64 * p_t,
            ToffoliErrorModel::Posterior(r) => r.posterior(p_t),
        }
    }

    /// Probability that one preparation attempt is kept.
    pub fn acceptance(&self, p_t: f64) -> f64 {
        match &self.error_model {
            ToffoliErrorModel::Linear => 1.0,
            ToffoliErrorModel::Posterior(r) => r.accept_probability(p_t),
        }
    }
}

/// Expected raw states per Toffoli, including preparation retries.
pub fn scheme_cost(scheme: &ToffoliScheme, pipeline: &Pipeline) -> Result<f64, ResourceError> {
    let cost = pipeline_cost(pipeline)?;
    Ok(scheme.t_gates_needed as f64 * cost.raw_states_per_output / scheme.acceptance(cost.p_out))
}

/// `1 - (1 - e)^n`.
pub fn aggregate_failure(toffoli_error: f64, n_toffolis: f64) -> f64 {
    -(n_toffolis * (-toffoli_error).ln_1p()).exp_m1()
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeEntry {
    pub scheme: SchemeKind,
    pub t_gates: usize,
    pub pipeline: Vec<String>,
    pub trace: Vec<RoundTrace>,
    pub p_t_final: f64,
    pub raw_states_per_t: f64,
    pub acceptance: f64,
    pub raw_states_total: f64,
    pub toffoli_error: f64,
    pub meets_target: bool,
    pub aggregate_failure: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_cost: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Savings {
    pub baseline: SchemeKind,
    pub alternative: SchemeKind,
    pub factor: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeReport {
    pub p_raw: f64,
    pub target_toffoli_error: f64,
    pub n_toffolis: f64,
    pub schemes: Vec<SchemeEntry>,
    /// `cost(four_t) / cost(error_detecting)` when both are present.
    pub savings_factor: Option<f64>,
    pub savings: Vec<Savings>,
}

impl SchemeReport {
    pub fn entry(&self, kind: SchemeKind) -> Option<&SchemeEntry> {
        self.schemes.iter().find(|e| e.scheme == kind)
    }

    pub fn savings_between(&self, baseline: SchemeKind, alternative: SchemeKind) -> Option<f64> {
        self.savings
            .iter()
            .find(|s| s.baseline == baseline && s.alternative == alternative)
            .map(|s| s.factor)
    }
}

/// Options shared by [`compare`] and [`evaluate_fixed`].
#[derive(Clone, Debug)]
pub struct CompareOptions {
    pub n_toffolis: f64,
    /// Multiplier applied once per distillation round to obtain a volume-weighted cost.
    pub volume_weight: Option<f64>,
    pub max_rounds: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            n_toffolis: 1e6,
            volume_weight: None,
            max_rounds: MAX_ROUNDS,
        }
    }
}

fn entry(
    scheme: &ToffoliScheme,
    pipeline: &Pipeline,
    cost: PipelineCost,
    target: f64,
    opts: &CompareOptions,
) -> SchemeEntry {
    let acceptance = scheme.acceptance(cost.p_out);
    let raw_states_total = scheme.t_gates_needed as f64 * cost.raw_states_per_output / acceptance;
    let toffoli_error = scheme.toffoli_error(cost.p_out);
    SchemeEntry {
        scheme: scheme.kind,
        t_gates: scheme.t_gates_needed,
        pipeline: pipeline.names(),
        trace: cost.trace,
        p_t_final: cost.p_out,
        raw_states_per_t: cost.raw_states_per_output,
        acceptance,
        raw_states_total,
        toffoli_error,
        meets_target: toffoli_error <= target,
        aggregate_failure: aggregate_failure(toffoli_error, opts.n_toffolis),
        weighted_cost: opts
            .volume_weight
            .map(|w| raw_states_total * w.powi(pipeline.rounds.len() as i32)),
    }
}

fn assemble(
    p_raw: f64,
    target: f64,
    opts: &CompareOptions,
    schemes: Vec<SchemeEntry>,
) -> SchemeReport {
    let mut savings = Vec::new();
    for b in &schemes {
        for a in &schemes {
            if a.scheme != b.scheme {
                savings.push(Savings {
                    baseline: b.scheme,
                    alternative: a.scheme,
                    factor: b.raw_states_total / a.raw_states_total,
                });
            }
        }
    }
    let mut report = SchemeReport {
        p_raw,
        target_toffoli_error: target,
        n_toffolis: opts.n_toffolis,
        schemes,
        savings_factor: None,
        savings,
    };
    report.savings_factor = report.savings_between(SchemeKind::FourT, SchemeKind::ErrorDetecting);
    report
}

/// Pairs every scheme with its cheapest pipeline meeting `target_toffoli_error`.
pub fn compare(
    schemes: &[ToffoliScheme],
    p_raw: f64,
    target_toffoli_error: f64,
    menu: &[DistillationProtocol],
    opts: &CompareOptions,
) -> Result<SchemeReport, ResourceError> {
    if !(p_raw > 0.0 && p_raw < 1.0) {
        return Err(ResourceError::InvalidRawError(p_raw));
    }
    for proto in menu {
        proto.validate()?;
    }
    let entries = schemes
        .iter()
        .map(|s| {
            let (pipeline, cost) = cheapest_pipeline(p_raw, menu, opts.max_rounds, |p| {
                s.toffoli_error(p) <= target_toffoli_error
            })
            .ok_or(ResourceError::Unreachable {
                p_raw,
                target: target_toffoli_error,
                max_rounds: opts.max_rounds,
            })?;
            Ok(entry(s, &pipeline, cost, target_toffoli_error, opts))
        })
        .collect::<Result<_, ResourceError>>()?;
    Ok(assemble(p_raw, target_toffoli_error, opts, entries))
}

/// Evaluates every scheme on one fixed pipeline (e.g. no distillation at all).
pub fn evaluate_fixed(
    schemes: &[ToffoliScheme],
    pipeline: &Pipeline,
    target_toffoli_error: f64,
    opts: &CompareOptions,
) -> Result<SchemeReport, ResourceError> {
    let cost = pipeline_cost(pipeline)?;
    let entries = schemes
        .iter()
        .map(|s| entry(s, pipeline, cost.clone(), target_toffoli_error, opts))
        .collect();
    Ok(assemble(
        pipeline.p_raw,
        target_toffoli_error,
        opts,
        entries,
    ))
}

fn default_schemes() -> Vec<SchemeKind> {
    vec![
        SchemeKind::SevenT,
        SchemeKind::FourT,
        SchemeKind::ErrorDetecting,
    ]
}
fn default_p_raw() -> f64 {
    1e-2
}
fn default_target() -> f64 {
    1e-12
}
fn default_n_toffolis() -> f64 {
    1e6
}
fn default_max_rounds() -> usize {
    MAX_ROUNDS
}

/// JSON configuration for the `resources` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    #[serde(default = "default_menu")]
    pub protocols: Vec<DistillationProtocol>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SchemeKind>,
    #[serde(default = "default_p_raw")]
    pub p_raw: f64,
    #[serde(default = "default_target")]
    pub target_toffoli_error: f64,
    #[serde(default = "default_n_toffolis")]
    pub n_toffolis: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default)]
    pub volume_weight: Option<f64>,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        ResourceConfig {
            protocols: default_menu(),
            schemes: default_schemes(),
            p_raw: default_p_raw(),
            target_toffoli_error: default_target(),
            n_toffolis: default_n_toffolis(),
            max_rounds: default_max_rounds(),
            volume_weight: None,
        }
    }
}

impl ResourceConfig {
    pub fn from_json(text: &str) -> Result<Self, ResourceError> {
        let cfg: ResourceConfig =
            serde_json::from_str(text).map_err(|e| ResourceError::Config(e.to_string()))?;
        for p in &cfg.protocols {
            p.validate()?;
        }
        Ok(cfg)
    }

    pub fn options(&self) -> CompareOptions {
        CompareOptions {
            n_toffolis: self.n_toffolis,
            volume_weight: self.volume_weight,
            max_rounds: self.max_rounds,
        }
    }
}
