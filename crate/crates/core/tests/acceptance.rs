//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ftoffoli::constructions::{controlled_phase_on_controls, prepared_resource_state};
use ftoffoli::error_analysis::{rejection_probability, PatternClass};
use ftoffoli::resources::{default_menu, CompareOptions};
use ftoffoli::sim::GadgetOptions;
use ftoffoli::*;
use num_complex::Complex64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn ensure(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tof_data() -> [QubitId; 3] {
    [QubitId(0), QubitId(1), QubitId(2)]
}

fn exact_four_t() -> Outcome {
    let circuit = build_four_t_toffoli();
    let check = gadget_implements(
        &circuit,
        &reference_toffoli(),
        &tof_data(),
        &GadgetOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        check.passed()
            && check.inputs_checked >= 16
            && check.distinct_outcomes == 2
            && check.max_residual < 1e-10
            && circuit.t_count() == 4,
        format!(
            "{} inputs, {} branches, {} outcome records, max residual {:.1e}, t_count {}",
            check.inputs_checked,
            check.branches_checked,
            check.distinct_outcomes,
            check.max_residual,
            circuit.t_count()
        ),
    )
}

fn toffoli_star_identity() -> Outcome {
    let u = extract_unitary(&build_toffoli_star()).map_err(|e| e.to_string())?;
    let expected = reference_toffoli().mul(&controlled_phase_on_controls(-Complex64::i()));
    let d = phase_insensitive_distance(&u, &expected).map_err(|e| e.to_string())?;
    let entry = u.max_abs_diff(&expected);
    ensure(
        d < 1e-10 && entry < 1e-10,
        format!("distance {d:.1e}, max entry diff {entry:.1e}"),
    )
}

fn multi_control_law() -> Outcome {
    let start = Instant::now();
    let cnot = ControlledGate::cnot();
    let mut costs = Vec::new();
    for n in 1..=3 {
        let g = build_multi_controlled(&cnot, n).map_err(|e| e.to_string())?;
        if g.t_cost != 4 * n || !g.verified() {
            return Err(format!(
                "n={n}: t_cost {} verified {}",
                g.t_cost,
                g.verified()
            ));
        }
        costs.push(g.t_cost);
    }
    let c3x = build_multi_controlled(&cnot, 2).map_err(|e| e.to_string())?;
    let perm = DenseUnitary::permutation(16, |i| if i >= 0b1110 { i ^ 1 } else { i });
    let check = gadget_implements(
        &c3x.realization,
        &perm,
        &c3x.data_qubits(),
        &GadgetOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(
        check.passed() && elapsed < Duration::from_secs(10),
        format!(
            "t_costs {costs:?}, C3X {} branches over {} inputs, {:.2}s",
            check.branches_checked,
            check.inputs_checked,
            elapsed.as_secs_f64()
        ),
    )
}

fn detection_completeness() -> Outcome {
    let detected = (0..8)
        .filter(|&s| {
            classify(&ErrorPattern::single(s, Pauli::Z)).ok() == Some(PatternClass::Detected)
        })
        .count();
    let circuit = build_error_detecting_toffoli();
    let mut deterministic = true;
    for i in 0..8 {
        let input = StateVector::interleave(
            4,
            &tof_data(),
            &StateVector::basis(3, i),
            &StateVector::zero(1),
        );
        let br = run(&circuit, &input, &OutcomePolicy::Enumerate).map_err(|e| e.to_string())?;
        deterministic &= br.len() == 1 && br[0].outcome(0) == Some(false);
    }
    ensure(
        detected == 8 && deterministic,
        format!(
            "{detected}/8 single-Z patterns detected, noiseless syndrome always 0: {deterministic}"
        ),
    )
}

fn exact_coefficients(report: &PosteriorReport) -> Outcome {
    let a = &report.accept_poly.counts;
    let f = &report.faulty_poly.counts;
    let mono = report.accept_poly.monomial();
    ensure(
        a[0] == 1
            && a[1] == 0
            && f[2] == 28
            && f[0] == 0
            && f[1] == 0
            && mono[0] == 1
            && mono[1] == -8,
        format!(
            "accept counts {a:?}, faulty counts {f:?}, P_accept = {} {:+}p + ...",
            mono[0], mono[1]
        ),
    )
}

fn posterior_evaluation(report: &PosteriorReport) -> Outcome {
    let post = report.posterior(1e-4);
    ensure(
        (2.7e-7..=2.9e-7).contains(&post),
        format!("posterior(1e-4) = {post:.4e}"),
    )
}

fn monte_carlo_cross_check(report: &PosteriorReport) -> Outcome {
    let p = 0.01;
    let mc = monte_carlo(report, p, 1_000_000, 2012).map_err(|e| e.to_string())?;
    let exact_accept = report.accept_probability(p);
    let exact_post = report.posterior(p);
    let da = (mc.acceptance.estimate - exact_accept).abs();
    let dp = (mc.posterior.estimate - exact_post).abs();
    ensure(
        da <= 3.0 * mc.acceptance.width() && dp <= 3.0 * mc.posterior.width(),
        format!(
            "acceptance {:.6} vs {:.6} (|Δ| {:.1e}, width {:.1e}); posterior {:.3e} vs {:.3e} (|Δ| {:.1e}, width {:.1e})",
            mc.acceptance.estimate,
            exact_accept,
            da,
            mc.acceptance.width(),
            mc.posterior.estimate,
            exact_post,
            dp,
            mc.posterior.width()
        ),
    )
}

fn ancilla_protocol() -> Outcome {
    let (resource, _) = prepared_resource_state().map_err(|e| e.to_string())?;
    let opts = GadgetOptions {
        ancilla_state: Some(resource),
        ..GadgetOptions::default()
    };
    let check = gadget_implements(
        &build_ancilla_consumption(),
        &reference_toffoli(),
        &tof_data(),
        &opts,
    )
    .map_err(|e| e.to_string())?;
    let reject = rejection_probability(&build_ancilla_prep(), 1e-8).map_err(|e| e.to_string())?;
    ensure(
        check.passed()
            && check.distinct_outcomes == 8
            && check.max_residual < 1e-10
            && (reject - 8e-8).abs() <= 1e-9,
        format!(
            "{} outcome branches, max residual {:.1e}; prep rejection at p=1e-8: {reject:.4e}",
            check.distinct_outcomes, check.max_residual
        ),
    )
}

fn resource_figures(report: &Arc<PosteriorReport>) -> Outcome {
    let menu = default_menu();
    let bk = menu[0].clone();
    let mek = menu[1].clone();
    let ed = scheme_cost(
        &ToffoliScheme::error_detecting(report.clone()),
        &Pipeline::new(1e-2, vec![bk.clone(), mek.clone()]),
    )
    .map_err(|e| e.to_string())?;
    let three = Pipeline::new(1e-2, vec![bk, mek.clone(), mek]);
    let four = scheme_cost(&ToffoliScheme::four_t(), &three).map_err(|e| e.to_string())?;
    let cmp = compare(
        &[
            ToffoliScheme::four_t(),
            ToffoliScheme::error_detecting(report.clone()),
        ],
        1e-2,
        1e-12,
        &menu,
        &CompareOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let savings = cmp.savings_factor.unwrap_or(f64::NAN);
    let trace = pipeline_cost(&three).map_err(|e| e.to_string())?.trace;
    let levels: Vec<f64> = trace.iter().map(|r| r.p_out).collect();
    let levels_ok = (levels[0] - 3.5e-5).abs() < 1e-7
        && (5e-9..=2e-8).contains(&levels[1])
        && (1e-16..=1e-15).contains(&levels[2]);
    ensure(
        (ed / 697.6 - 1.0).abs() < 0.01
            && (four / 1744.8 - 1.0).abs() < 0.01
            && (savings / 2.5 - 1.0).abs() < 0.02
            && levels_ok,
        format!(
            "error_detecting {ed:.2}, four_t {four:.2}, savings {savings:.4}, levels {:?}",
            levels
                .iter()
                .map(|p| format!("{p:.2e}"))
                .collect::<Vec<_>>()
        ),
    )
}

fn baseline(report: &Arc<PosteriorReport>) -> Outcome {
    let circuit = build_standard_seven_t_toffoli();
    let d = phase_insensitive_distance(
        &extract_unitary(&circuit).map_err(|e| e.to_string())?,
        &reference_toffoli(),
    )
    .map_err(|e| e.to_string())?;
    let cmp = compare(
        &[
            ToffoliScheme::seven_t(),
            ToffoliScheme::four_t(),
            ToffoliScheme::error_detecting(report.clone()),
        ],
        1e-2,
        1e-12,
        &default_menu(),
        &CompareOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let factor = cmp
        .savings_between(SchemeKind::SevenT, SchemeKind::FourT)
        .unwrap_or(f64::NAN);
    ensure(
        d < 1e-10 && circuit.t_count() == 7 && (factor - 7.0 / 4.0).abs() < 1e-9,
        format!(
            "distance {d:.1e}, t_count {}, seven_t/four_t cost ratio {factor:.6}",
            circuit.t_count()
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let report = match enumerate_all() {
        Ok(r) => Arc::new(r),
        Err(e) => {
            eprintln!("pattern enumeration failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: Vec<Criterion> = vec![
        ("exact 4-T Toffoli", Box::new(exact_four_t)),
        ("Toffoli* = Tof·CS†", Box::new(toffoli_star_identity)),
        ("multi-control 4n law", Box::new(multi_control_law)),
        ("detection completeness", Box::new(detection_completeness)),
        (
            "exact polynomial coefficients",
            Box::new({
                let r = report.clone();
                move || exact_coefficients(&r)
            }),
        ),
        (
            "posterior at p = 1e-4",
            Box::new({
                let r = report.clone();
                move || posterior_evaluation(&r)
            }),
        ),
        (
            "Monte Carlo cross-check",
            Box::new({
                let r = report.clone();
                move || monte_carlo_cross_check(&r)
            }),
        ),
        ("Toffoli ancilla protocol", Box::new(ancilla_protocol)),
        (
            "distillation resource figures",
            Box::new({
                let r = report.clone();
                move || resource_figures(&r)
            }),
        ),
        (
            "7-T baseline",
            Box::new({
                let r = report.clone();
                move || baseline(&r)
            }),
        ),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.2}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
