//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use superres::RayonExecutor;
use superres_core::cfi::{measurement_cfi, sld_measurement, MeasurementKind};
use superres_core::crlb::{asymptotic_precisions, loglog_slope, precisions, sweep, SweepRow, SweepSpec};
use superres_core::measure_opt::{optimize_measurement, DesignSpec, Objective};
use superres_core::montecarlo::{crlb_saturation_study, StudySpec};
use superres_core::psf::{moments, overlaps};
use superres_core::qfi::oracle::grid_compatibility;
use superres_core::qfi::{
    compatibility_check, qfim_closed_form, qfim_grid_oracle, qfim_rank2, rho_eigensystem, GridSpec, SubspaceRep,
};
use superres_core::{FisherMatrix, Param, PsfModel, Result, SourceParams};

const S_GRID: [f64; 6] = [0.05, 0.2, 0.5, 1.0, 2.0, 4.0];
const Q_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.95];

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn(&PsfModel) -> Outcome);

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn standard_points() -> impl Iterator<Item = SourceParams> {
    Q_GRID
        .iter()
        .flat_map(|&q| S_GRID.iter().map(move |&s| SourceParams::new(0.0, s, q).unwrap()))
}

fn closed(psf: &PsfModel, p: SourceParams) -> Result<FisherMatrix> {
    qfim_closed_form(&overlaps(psf, p.s)?, &moments(psf)?, p)
}

fn balanced_constancy(psf: &PsfModel) -> Outcome {
    let (mut closed_err, mut grid_err) = (0.0f64, 0.0f64);
    for (i, s) in log_grid(0.01, 3.0, 60).into_iter().enumerate() {
        let p = SourceParams::new(0.0, s, 0.5)?;
        closed_err = closed_err.max((precisions(&closed(psf, p)?).h_s() - 0.25).abs());
        if i % 3 == 0 {
            let g = qfim_grid_oracle(psf, p, &GridSpec::default())?;
            grid_err = grid_err.max((precisions(&g).h_s() - 0.25).abs());
        }
    }
    Ok((
        closed_err <= 1e-12 && grid_err <= 1e-6,
        format!("max |Hs - 1/4|: closed {closed_err:.2e}, grid {grid_err:.2e}"),
    ))
}

fn oracle_agreement(psf: &PsfModel) -> Outcome {
    let mut worst = 0.0f64;
    let mom = moments(psf)?;
    for p in standard_points() {
        let ov = overlaps(psf, p.s)?;
        let c = qfim_closed_form(&ov, &mom, p)?;
        let r = qfim_rank2(&SubspaceRep::new(&ov, &mom, p)?, &rho_eigensystem(&ov, p.q)?)?;
        let g = qfim_grid_oracle(psf, p, &GridSpec::default())?;
        worst = worst
            .max(c.max_abs_diff(&r))
            .max(c.max_abs_diff(&g))
            .max(r.max_abs_diff(&g));
    }
    Ok((
        worst <= 1e-6,
        format!("max entrywise spread {worst:.2e} over 30 points"),
    ))
}

fn saturability(psf: &PsfModel) -> Outcome {
    let mom = moments(psf)?;
    let (mut span, mut grid) = (0.0f64, 0.0f64);
    for p in standard_points() {
        let ov = overlaps(psf, p.s)?;
        let sub = SubspaceRep::new(&ov, &mom, p)?;
        span = span.max(compatibility_check(&sub, &rho_eigensystem(&ov, p.q)?)?.max_abs);
        grid = grid.max(grid_compatibility(psf, p, &GridSpec::default())?.max_abs);
    }
    Ok((
        span < 1e-9 && grid < 1e-9,
        format!("max |Tr(rho[L_a,L_b])|: subspace {span:.2e}, grid {grid:.2e}"),
    ))
}

fn small_s_rows(psf: &PsfModel, q: &[f64]) -> Result<Vec<SweepRow>> {
    let spec = SweepSpec {
        s_values: log_grid(1e-3, 1e-2, 20),
        q_values: q.to_vec(),
        s0: 0.0,
        measurements: vec![("direct".into(), MeasurementKind::Direct)],
    };
    sweep(&RayonExecutor, psf, &spec)
}

fn slope_of(rows: &[SweepRow], q: f64, h: impl Fn(&SweepRow) -> f64) -> Result<f64> {
    let series: Vec<(f64, f64)> = rows.iter().filter(|r| r.q == q).map(|r| (r.s, h(r))).collect();
    Ok(loglog_slope(&series)?.slope)
}

fn scaling_exponents(psf: &PsfModel) -> Outcome {
    let rows = small_s_rows(psf, &[0.5, 0.3, 0.1])?;
    let mut checks = Vec::new();
    for q in [0.5, 0.3, 0.1] {
        let balanced = q == 0.5;
        checks.push((
            "Hs_opt",
            q,
            slope_of(&rows, q, |r| r.quantum.h_s())?,
            if balanced { 0.0 } else { 2.0 },
        ));
        checks.push((
            "Hs_int",
            q,
            slope_of(&rows, q, |r| r.classical[0].h_s())?,
            if balanced { 2.0 } else { 4.0 },
        ));
        checks.push(("Hq_opt", q, slope_of(&rows, q, |r| r.quantum.h_q())?, 4.0));
        checks.push(("Hq_int", q, slope_of(&rows, q, |r| r.classical[0].h_q())?, 6.0));
    }
    let worst = checks.iter().map(|c| (c.2 - c.3).abs()).fold(0.0, f64::max);
    let detail = checks
        .iter()
        .map(|(n, q, got, _)| format!("{n}(q={q})={got:.4}"))
        .collect::<Vec<_>>()
        .join(" ");
    Ok((worst <= 0.05, format!("max deviation {worst:.1e}; {detail}")))
}

fn advantage_factor(psf: &PsfModel) -> Outcome {
    let rows = small_s_rows(psf, &[0.5, 0.3, 0.1])?;
    let mut slopes = Vec::new();
    for q in [0.5, 0.3, 0.1] {
        slopes.push(slope_of(&rows, q, |r| r.quantum.h_s() / r.classical[0].h_s())?);
    }
    let ok = slopes.iter().all(|k| (k + 2.0).abs() <= 0.1);
    Ok((
        ok,
        format!("exponents of Hs_opt/Hs_int for q=0.5,0.3,0.1: {slopes:.4?}"),
    ))
}

fn asymptotics(psf: &PsfModel) -> Outcome {
    let mom = moments(psf)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let (mut pos, mut brightness) = (0.0f64, 0.0f64);
    for s in log_grid(1e-3, 0.05, 15) {
        for q in [0.1, 0.3, 0.5] {
            let p = SourceParams::new(0.0, s, q)?;
            let exact = precisions(&closed(psf, p)?);
            let approx = asymptotic_precisions(&mom, p)?;
            if q != 0.5 {
                pos = pos
                    .max(rel(approx.h_s(), exact.h_s()))
                    .max(rel(approx.h_s0(), exact.h_s0()));
            }
            if q != 0.1 {
                brightness = brightness.max(rel(approx.h_q(), exact.h_q()));
            }
        }
    }
    let scaled: Vec<f64> = [0.01, 0.02, 0.05]
        .iter()
        .map(|&q| Ok(precisions(&closed(psf, SourceParams::new(0.0, 0.01, q)?)?).h_q() * q))
        .collect::<Result<_>>()?;
    let spread =
        scaled.iter().cloned().fold(f64::MIN, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min) - 1.0;
    Ok((
        pos <= 0.01 && brightness <= 0.01 && spread <= 0.05,
        format!(
            "max rel err: Hs/Hs0 {pos:.2e}, Hq {brightness:.2e}; Hq*q spread {:.2}%",
            100.0 * spread
        ),
    ))
}

fn data_processing(psf: &PsfModel) -> Outcome {
    let mut kinds: Vec<(String, MeasurementKind)> = vec![("direct".into(), MeasurementKind::Direct)];
    for n in 1..=6 {
        kinds.push((format!("hg{n}"), MeasurementKind::ModeBasis(n)));
    }
    for p in Param::ALL {
        kinds.push((format!("sld-{}", p.symbol()), MeasurementKind::Sld(p)));
    }
    for w in [0.25, 1.0] {
        kinds.push((
            format!("bins{w}"),
            MeasurementKind::Bins {
                width: w,
                half_range: 10.0,
            },
        ));
    }
    let mut worst = (f64::INFINITY, String::new());
    for p in standard_points() {
        let q = closed(psf, p)?;
        for (name, kind) in &kinds {
            let gap = q.loewner_gap(&kind.cfi(psf, p)?);
            if gap < worst.0 {
                worst = (gap, format!("{name} at s={} q={}", p.s, p.q));
            }
        }
    }
    Ok((
        worst.0 >= -1e-9,
        format!(
            "min eig(Q - F) = {:.2e} ({}) over {} measurements",
            worst.0,
            worst.1,
            kinds.len()
        ),
    ))
}

fn sld_attainment(psf: &PsfModel) -> Outcome {
    let mut errs = Vec::new();
    for (s, q) in [(1.0, 0.5), (0.5, 0.3)] {
        let p = SourceParams::new(0.0, s, q)?;
        let f = measurement_cfi(&sld_measurement(psf, p, Param::Separation)?, psf, p)?;
        let qss = closed(psf, p)?.get(Param::Separation, Param::Separation);
        errs.push((f.get(Param::Separation, Param::Separation) - qss).abs());
    }
    let ok = errs.iter().all(|&e| e <= 1e-6);
    Ok((ok, format!("|F_ss - Q_ss| = {:.2e}, {:.2e}", errs[0], errs[1])))
}

fn crlb_saturation(psf: &PsfModel) -> Outcome {
    let truth = SourceParams::new(0.0, 1.0, 0.5)?;
    let spec = StudySpec::new(MeasurementKind::Direct, 100_000, 200, 1);
    let run = crlb_saturation_study(&RayonExecutor, psf, truth, &spec)?;
    let r = run.ratios[Param::Separation.index()].unwrap_or(f64::NAN);
    Ok((
        (0.85..=1.15).contains(&r),
        format!(
            "Var(s)*n*F_ss = {r:.4} ({} trials, {} boundary hits)",
            run.trials(),
            run.boundary_hits
        ),
    ))
}

fn optimizer(psf: &PsfModel) -> Outcome {
    let p = SourceParams::new(0.0, 0.5, 0.5)?;
    let spec = DesignSpec::new(4, Objective::Hs, 42);
    let a = optimize_measurement(&RayonExecutor, &spec, psf, p)?;
    let b = optimize_measurement(&RayonExecutor, &spec, psf, p)?;
    let qss = a.quantum.get(Param::Separation, Param::Separation);
    let fss = a.fisher.get(Param::Separation, Param::Separation);
    let ratio = fss / qss;
    Ok((
        ratio >= 0.99 && a == b,
        format!("F_ss/Q_ss = {ratio:.10}, repeat identical: {}", a == b),
    ))
}

fn main() -> ExitCode {
    let psf = PsfModel::gaussian(1.0).expect("unit Gaussian");
    let criteria: [Criterion; 10] = [
        ("balanced-source constancy", balanced_constancy),
        ("three-way QFIM agreement", oracle_agreement),
        ("saturability", saturability),
        ("scaling exponents", scaling_exponents),
        ("quantum advantage factor", advantage_factor),
        ("small-separation asymptotics", asymptotics),
        ("data-processing inequality", data_processing),
        ("SLD-POVM attainment", sld_attainment),
        ("Monte Carlo CRLB saturation", crlb_saturation),
        ("optimizer benchmark", optimizer),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (ok, detail) = check(&psf).unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = started.elapsed().as_secs_f64();
        println!(
            "[{}] {} {name}: {detail} ({secs:.2} s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
        if !ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
