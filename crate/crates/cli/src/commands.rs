use std::fs;
use std::sync::Arc;

use ftoffoli::error_analysis::{self, PatternClass};
use ftoffoli::resources::{self, Pipeline, ResourceConfig, ToffoliScheme};
use ftoffoli::{Construction, GadgetReport};
use serde_json::{json, Value};

use crate::report::{csv, Report};
use crate::{Cli, Command, Outcome};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable inputs (exit 2).
    Usage(String),
    /// A computation failed outright (exit 1).
    Failure(String),
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

pub fn dispatch(cli: &Cli) -> Result<(Outcome, bool), CliError> {
    if let Some(name) = &cli.dump_circuit {
        let construction: Construction = name.parse().map_err(CliError::Usage)?;
        let circuit = construction.circuit().map_err(failure)?;
        return Ok((Outcome::Text(circuit.to_text()), true));
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Usage(
            "a subcommand (verify, errors, resources) or --dump-circuit is required".into(),
        ));
    };
    let report = match command {
        Command::Verify { name } => verify(cli, name)?,
        Command::Errors { p, trials } => errors(cli, p, *trials)?,
        Command::Resources {
            config,
            p_raw,
            target,
            no_distillation,
        } => resources(cli, config.as_deref(), *p_raw, *target, *no_distillation)?,
    };
    match report {
        (report, Some(table)) if cli.csv => {
            let passed = report.summary.passed;
            Ok((Outcome::Text(table), passed))
        }
        (report, _) => Ok((Outcome::Report(report), true)),
    }
}

fn parse_targets(name: &str) -> Result<Vec<Construction>, CliError> {
    if name == "all" {
        return Ok(Construction::all());
    }
    name.parse::<Construction>()
        .map(|c| vec![c])
        .map_err(CliError::Usage)
}

fn section(report: &GadgetReport) -> Value {
    json!({
        "name": report.construction.to_string(),
        "verified": report.verified,
        "t_count": report.t_count,
        "expected_t_count": report.expected_t_count,
        "qubits": report.circuit.qubit_count(),
        "cbits": report.circuit.classical_count(),
        "gates": report.circuit.gates().len(),
        "checks": report.checks,
    })
}

fn verify(cli: &Cli, name: &str) -> Result<(Report, Option<String>), CliError> {
    let targets = parse_targets(name)?;
    let reports: Vec<GadgetReport> = targets
        .iter()
        .map(|c| c.verify().map_err(failure))
        .collect::<Result<_, _>>()?;
    let checks: Vec<bool> = reports.iter().map(|r| r.verified).collect();
    let table = csv(
        &["construction", "check", "passed", "detail"],
        reports.iter().flat_map(|r| {
            r.checks.iter().map(move |c| {
                vec![
                    r.construction.to_string(),
                    c.name.clone(),
                    c.passed.to_string(),
                    c.detail.clone(),
                ]
            })
        }),
    );
    let results = json!({ "sections": reports.iter().map(section).collect::<Vec<_>>() });
    let report = Report::new(
        "verify",
        cli.seed,
        json!({ "name": name }),
        results,
        &checks,
    );
    Ok((report, Some(table)))
}

fn to_i64(v: &[i128]) -> Vec<i64> {
    v.iter()
        .map(|x| i64::try_from(*x).expect("8-site coefficients fit in i64"))
        .collect()
}

fn errors(cli: &Cli, ps: &[f64], trials: u64) -> Result<(Report, Option<String>), CliError> {
    if let Some(bad) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CliError::Usage(format!("--p {bad} is outside [0, 1]")));
    }
    let report = error_analysis::enumerate_all().map_err(failure)?;
    let survey = error_analysis::x_error_survey().map_err(failure)?;

    let evaluations: Vec<Value> = ps
        .iter()
        .map(|&p| {
            json!({
                "p": p,
                "accept": report.accept_probability(p),
                "reject": report.reject_probability(p),
                "accepted_and_faulty": report.faulty_probability(p),
                "posterior": report.posterior(p),
            })
        })
        .collect();

    let mut checks = vec![
        report.per_weight[1].detected == 8,
        report.faulty_poly.counts[2] == 28,
        report.accept_poly.counts[0] == 1 && report.accept_poly.counts[1] == 0,
    ];
    let monte_carlo = if trials > 0 {
        let mut runs = Vec::new();
        for (i, &p) in ps.iter().enumerate() {
            let seed = cli.seed.wrapping_add(i as u64);
            let mc = error_analysis::monte_carlo(&report, p, trials, seed).map_err(failure)?;
            let within = |est: f64, exact: f64, width: f64| {
                exact.is_nan() || (est - exact).abs() <= 3.0 * width
            };
            let ok = within(
                mc.acceptance.estimate,
                report.accept_probability(p),
                mc.acceptance.width(),
            ) && (mc.accepted == 0
                || within(
                    mc.posterior.estimate,
                    report.posterior(p),
                    mc.posterior.width(),
                ));
            checks.push(ok);
            runs.push(json!({ "result": mc, "within_three_widths": ok }));
        }
        Some(runs)
    } else {
        None
    };

    let results = json!({
        "sites": report.sites,
        "per_weight": report.per_weight,
        "accept_counts": report.accept_poly.counts,
        "reject_counts": report.reject_poly().counts,
        "faulty_counts": report.faulty_poly.counts,
        "accept_monomial": to_i64(&report.accept_poly.monomial()),
        "faulty_monomial": to_i64(&report.faulty_poly.monomial()),
        "evaluations": evaluations,
        "patterns": report.patterns,
        "x_error_survey": survey,
        "monte_carlo": monte_carlo,
    });
    let table = csv(
        &["mask", "sites", "weight", "class"],
        report.patterns.iter().map(|row| {
            let class = match row.class {
                PatternClass::Detected => "detected",
                PatternClass::AcceptedCorrect => "accepted_correct",
                PatternClass::AcceptedFaulty => "accepted_faulty",
            };
            vec![
                row.mask.to_string(),
                row.sites
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
                row.weight.to_string(),
                class.to_string(),
            ]
        }),
    );
    let params = json!({ "p": ps, "trials": trials });
    Ok((
        Report::new("errors", cli.seed, params, results, &checks),
        Some(table),
    ))
}

fn resources(
    cli: &Cli,
    config: Option<&std::path::Path>,
    p_raw: Option<f64>,
    target: Option<f64>,
    no_distillation: bool,
) -> Result<(Report, Option<String>), CliError> {
    let (mut cfg, source) = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let cfg =
                ResourceConfig::from_json(&text).map_err(|e| CliError::Usage(e.to_string()))?;
            (cfg, path.display().to_string())
        }
        None => (ResourceConfig::default(), "built-in defaults".to_string()),
    };
    if let Some(p) = p_raw {
        cfg.p_raw = p;
    }
    if let Some(t) = target {
        cfg.target_toffoli_error = t;
    }
    if !(cfg.p_raw > 0.0 && cfg.p_raw < 1.0) {
        return Err(CliError::Usage(format!(
            "p_raw {} must lie in (0, 1)",
            cfg.p_raw
        )));
    }

    let posterior = if cfg.schemes.contains(&resources::SchemeKind::ErrorDetecting) {
        Some(Arc::new(error_analysis::enumerate_all().map_err(failure)?))
    } else {
        None
    };
    let schemes: Vec<ToffoliScheme> = cfg
        .schemes
        .iter()
        .map(|k| ToffoliScheme::from_kind(*k, posterior.as_ref()))
        .collect::<Result<_, _>>()
        .map_err(failure)?;
    let opts = cfg.options();
    let comparison = if no_distillation {
        resources::evaluate_fixed(
            &schemes,
            &Pipeline::new(cfg.p_raw, vec![]),
            cfg.target_toffoli_error,
            &opts,
        )
    } else {
        resources::compare(
            &schemes,
            cfg.p_raw,
            cfg.target_toffoli_error,
            &cfg.protocols,
            &opts,
        )
    }
    .map_err(failure)?;

    let checks: Vec<bool> = if no_distillation {
        Vec::new()
    } else {
        comparison.schemes.iter().map(|s| s.meets_target).collect()
    };
    let table = csv(
        &[
            "scheme",
            "t_gates",
            "pipeline",
            "p_t_final",
            "raw_states_per_t",
            "raw_states_total",
            "toffoli_error",
            "meets_target",
        ],
        comparison.schemes.iter().map(|s| {
            vec![
                s.scheme.to_string(),
                s.t_gates.to_string(),
                s.pipeline.join("+"),
                format!("{:e}", s.p_t_final),
                s.raw_states_per_t.to_string(),
                s.raw_states_total.to_string(),
                format!("{:e}", s.toffoli_error),
                s.meets_target.to_string(),
            ]
        }),
    );
    let params = json!({
        "config_source": source,
        "p_raw": cfg.p_raw,
        "target_toffoli_error": cfg.target_toffoli_error,
        "no_distillation": no_distillation,
    });
    let results = json!({ "config": cfg, "comparison": comparison });
    Ok((
        Report::new("resources", cli.seed, params, results, &checks),
        Some(table),
    ))
}
