//! End-to-end acceptance checks. Runs the shipped configurations and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hpcpg::cpg::{assemble_step_matrix, solve, solve_step, ProblemDef};
use hpcpg::mesh::TimeMesh;
use hpcpg::metrics::{eoc, error_report};
use hpcpg::orthopoly::{gauss_legendre_rule, legendre_eval, shifted_basis_sample};
use hpcpg::projection::project_piecewise;
use hpcpg::ExactSolution;
use hpcpg_cli::report::energy_csv_string;
use hpcpg_cli::{csv_string, run, CellResult, ExperimentConfig, Report};

/// Errors below this are at the rounding floor and carry no order information.
const ROUNDING_FLOOR: f64 = 1e-14;

const L2: usize = 0;
const H1: usize = 1;
const H2: usize = 2;
const LINF: usize = 3;
const DLINF: usize = 4;
const NODAL_VAL: usize = 5;
const NODAL_DERIV: usize = 6;

/// A reference row: degree, `1/k`, errors and orders of the listed columns.
struct Row {
    r: usize,
    inv_k: u32,
    values: &'static [f64],
    orders: &'static [f64],
}

const fn row(r: usize, inv_k: u32, values: &'static [f64], orders: &'static [f64]) -> Row {
    Row {
        r,
        inv_k,
        values,
        orders,
    }
}

const SCALAR_COLS: [usize; 5] = [L2, H1, H2, LINF, DLINF];
#[rustfmt::skip]
const SCALAR_H: [Row; 12] = [
    row(2, 64, &[2.41e-5, 6.14e-5, 3.85e-3, 5.10e-5, 1.02e-4], &[2.00, 2.00, 1.00, 2.00, 1.99]),
    row(2, 128, &[6.02e-6, 1.53e-5, 1.92e-3, 1.28e-5, 2.56e-5], &[2.00, 2.00, 1.00, 2.00, 1.99]),
    row(2, 256, &[1.50e-6, 3.83e-6, 9.62e-4, 3.19e-6, 6.42e-6], &[2.00, 2.00, 1.00, 2.00, 2.00]),
    row(3, 32, &[1.63e-9, 9.16e-8, 1.90e-5, 4.20e-9, 2.09e-7], &[4.00, 3.00, 2.00, 3.96, 3.02]),
    row(3, 64, &[1.02e-10, 1.15e-8, 4.75e-6, 2.66e-10, 2.59e-8], &[4.00, 3.00, 2.00, 3.98, 3.01]),
    row(3, 128, &[6.37e-12, 1.43e-9, 1.19e-6, 1.67e-11, 3.22e-9], &[4.00, 3.00, 2.00, 3.99, 3.01]),
    row(4, 16, &[4.08e-11, 4.32e-9, 6.56e-7, 7.14e-11, 7.94e-9], &[5.01, 4.00, 3.00, 5.03, 4.00]),
    row(4, 32, &[1.27e-12, 2.70e-10, 8.20e-8, 2.21e-12, 4.97e-10], &[5.00, 4.00, 3.00, 5.01, 4.00]),
    row(4, 64, &[3.98e-14, 1.69e-11, 1.02e-8, 6.88e-14, 3.10e-11], &[5.00, 4.00, 3.00, 5.01, 4.00]),
    row(5, 8, &[3.41e-12, 2.54e-10, 2.53e-8, 9.50e-12, 5.78e-10], &[6.00, 5.00, 4.00, 5.91, 4.93]),
    row(5, 16, &[5.34e-14, 7.96e-12, 1.58e-9, 1.52e-13, 1.85e-11], &[6.00, 5.00, 4.00, 5.96, 4.97]),
    row(5, 32, &[9.28e-16, 2.49e-13, 9.88e-11, 2.33e-15, 5.85e-13], &[5.85, 5.00, 4.00, 6.03, 4.98]),
];

const NODAL_COLS: [usize; 2] = [NODAL_VAL, NODAL_DERIV];
#[rustfmt::skip]
const SCALAR_NODAL: [Row; 9] = [
    row(3, 8, &[5.72e-7, 1.15e-6], &[4.0, 4.0]),
    row(3, 16, &[3.55e-8, 7.18e-8], &[4.0, 4.0]),
    row(3, 32, &[2.22e-9, 4.48e-9], &[4.0, 4.0]),
    row(4, 4, &[2.79e-8, 4.89e-8], &[6.0, 6.0]),
    row(4, 8, &[4.37e-10, 7.65e-10], &[6.0, 6.0]),
    row(4, 16, &[6.84e-12, 1.20e-11], &[6.0, 6.0]),
    // the r = 5, k = 1/2 pair is pre-asymptotic
    row(5, 4, &[4.71e-12, 9.44e-12], &[8.0, 8.0]),
    row(5, 8, &[1.79e-14, 3.67e-14], &[8.0, 8.0]),
    row(5, 2, &[1.28e-9, 2.54e-9], &[]),
];

const SPACE_TIME_COLS: [usize; 4] = [L2, H1, H2, LINF];
#[rustfmt::skip]
const LINEAR_WAVE: [Row; 6] = [
    row(3, 32, &[4.22e-11, 4.99e-9, 1.03e-6, 8.27e-11], &[4.00, 3.00, 2.00, 3.99]),
    row(3, 64, &[2.64e-12, 6.24e-10, 2.59e-7, 5.17e-12], &[4.00, 3.00, 2.00, 4.00]),
    row(3, 128, &[1.64e-13, 7.80e-11, 6.47e-8, 3.23e-13], &[4.00, 3.00, 2.00, 4.00]),
    row(4, 8, &[2.67e-11, 1.41e-9, 1.07e-7, 6.18e-11], &[5.02, 4.01, 3.00, 4.99]),
    row(4, 16, &[8.32e-13, 8.82e-11, 1.34e-8, 1.95e-12], &[5.00, 4.00, 3.00, 4.99]),
    row(4, 32, &[2.60e-14, 5.51e-12, 1.67e-9, 6.09e-14], &[5.00, 4.00, 3.00, 5.00]),
];

#[rustfmt::skip]
const SINE_GORDON: [Row; 2] = [
    row(3, 64, &[3.23e-7, 3.42e-5, 1.42e-2, 5.11e-7], &[4.0, 3.0, 2.0, 4.0]),
    row(3, 128, &[2.02e-8, 4.27e-6, 3.55e-3, 3.20e-8], &[4.0, 3.0, 2.0, 4.0]),
];

#[rustfmt::skip]
const SINE_GORDON_NODAL: [Row; 3] = [
    row(3, 16, &[], &[4.0, 4.0]),
    row(3, 32, &[], &[4.0, 4.0]),
    row(3, 64, &[], &[4.0, 4.0]),
];

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"));
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{e}"))
}

fn timed_run(name: &str) -> (Report, Duration) {
    let cfg = config(name);
    let start = Instant::now();
    let report = run(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
    (report, start.elapsed())
}

fn find(report: &Report, r: usize, inv_k: u32) -> Option<&CellResult> {
    report
        .cells
        .iter()
        .find(|c| c.r == r && (c.k * inv_k as f64 - 1.0).abs() < 1e-12)
}

fn within_factor(value: f64, reference: f64, factor: f64) -> bool {
    value > 0.0 && value <= factor * reference && reference <= factor * value
}

fn no_failures(out: &mut Outcome, name: &str, report: &Report) {
    for c in &report.cells {
        out.check(c.failure.is_none(), || {
            format!(
                "{name} r={} k={}: {}",
                c.r,
                c.step,
                c.failure.clone().unwrap_or_default()
            )
        });
    }
}

/// Compares the listed rows against `report`: values within `factor`, orders
/// within `tol`. Orders whose finer error lies below the rounding floor are
/// counted but not compared.
fn compare_rows(
    out: &mut Outcome,
    report: &Report,
    rows: &[Row],
    cols: &[usize],
    factor: f64,
    tol: f64,
) {
    let mut floor = 0;
    for row in rows {
        let Some(cell) = find(report, row.r, row.inv_k) else {
            out.check(false, || format!("r={} k=1/{} missing", row.r, row.inv_k));
            continue;
        };
        let Some(errors) = cell.errors else {
            out.check(false, || {
                format!("r={} k=1/{} has no errors", row.r, row.inv_k)
            });
            continue;
        };
        let values = errors.values();
        for (j, &col) in cols.iter().enumerate() {
            if let Some(&reference) = row.values.get(j) {
                let v = values[col];
                out.check(within_factor(v, reference, factor), || {
                    format!(
                        "r={} k=1/{} col {col}: {v:.3e} vs {reference:.2e}",
                        row.r, row.inv_k
                    )
                });
            }
            if let Some(&expected) = row.orders.get(j) {
                if values[col] < ROUNDING_FLOOR {
                    floor += 1;
                    continue;
                }
                let got = cell.eoc[col];
                out.check(got.is_some_and(|o| (o - expected).abs() <= tol), || {
                    format!(
                        "r={} k=1/{} col {col}: order {got:?} vs {expected}",
                        row.r, row.inv_k
                    )
                });
            }
        }
    }
    if floor > 0 {
        out.note(format!(
            "{floor} order(s) at the rounding floor not compared"
        ));
    }
}

fn runtime(out: &mut Outcome, elapsed: Duration, limit_s: u64) {
    out.note(format!("{:.1} s", elapsed.as_secs_f64()));
    out.check(elapsed < Duration::from_secs(limit_s), || {
        format!("runtime {:.1} s exceeds {limit_s} s", elapsed.as_secs_f64())
    });
}

fn criterion_1(scalar_h: &Report, elapsed: Duration) -> Outcome {
    let mut out = Outcome::new();
    no_failures(&mut out, "ex1_h_version", scalar_h);
    compare_rows(&mut out, scalar_h, &SCALAR_H, &SCALAR_COLS, 3.0, 0.1);
    runtime(&mut out, elapsed, 30);
    out
}

fn criterion_2(scalar_nodal: &Report) -> Outcome {
    let mut out = Outcome::new();
    no_failures(&mut out, "ex1_nodal", scalar_nodal);
    compare_rows(
        &mut out,
        scalar_nodal,
        &SCALAR_NODAL,
        &NODAL_COLS,
        3.0,
        0.15,
    );
    out
}

fn criterion_3(n1: &Report, n4: &Report) -> Outcome {
    let mut out = Outcome::new();
    for (name, report) in [("N=1", n1), ("N=4", n4)] {
        no_failures(&mut out, name, report);
        let h1: Vec<f64> = report
            .cells
            .iter()
            .map(|c| c.errors.map_or(f64::NAN, |e| e.h1))
            .collect();
        for (i, w) in h1.windows(2).enumerate() {
            let plateau = w[0].max(w[1]) < ROUNDING_FLOOR;
            out.check(w[1] <= w[0] || plateau, || {
                format!(
                    "{name}: H1 error rises from {:.3e} to {:.3e} at r={}",
                    w[0],
                    w[1],
                    i + 4
                )
            });
        }
        out.note(format!(
            "{name} r=14: {:.2e}",
            h1.last().copied().unwrap_or(f64::NAN)
        ));
    }
    let last = n1.cells.iter().find(|c| c.r == 14).and_then(|c| c.errors);
    out.check(last.is_some_and(|e| e.h1 < 1e-12), || {
        format!("N=1 r=14 H1 error {last:?} not below 1e-12")
    });
    out
}

fn sine(t: f64, d: usize) -> f64 {
    match d % 4 {
        0 => t.sin(),
        1 => t.cos(),
        2 => -t.sin(),
        _ => -t.cos(),
    }
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let exact = ExactSolution::new(2, |t, d, o| o[0] = sine(t, d));
    let counts = [2usize, 4, 8, 16];
    let steps: Vec<f64> = counts.iter().map(|&n| 1.0 / n as f64).collect();
    let mut worst_end = 0.0f64;
    let mut worst_orth = 0.0f64;
    for r in 3..=5 {
        let mut norms = [Vec::new(), Vec::new(), Vec::new()];
        for &n in &counts {
            let pi = project_piecewise(sine, &TimeMesh::uniform(1.0, n, r).unwrap()).unwrap();
            let e = error_report(&pi, &exact).unwrap();
            norms[0].push(e.l2);
            norms[1].push(e.h1);
            norms[2].push(e.h2);
            for local in pi.locals() {
                let (a, b) = local.interval();
                for t in [a, b] {
                    for d in 0..2 {
                        worst_end = worst_end.max((local.eval(t, d)[0] - sine(t, d)).abs());
                    }
                }
                let rule = gauss_legendre_rule(2 * r + 8);
                let half = 0.5 * (b - a);
                for i in 0..=r - 2 {
                    let q: f64 = rule
                        .nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&x, &w)| {
                            let t = a + half * (x + 1.0);
                            w * (sine(t, 2) - local.eval(t, 2)[0]) * legendre_eval(i, x, 0)
                        })
                        .sum();
                    worst_orth = worst_orth.max(q.abs());
                }
            }
        }
        for (norm, expected) in norms.iter().zip([r + 1, r, r - 1]) {
            let order = eoc(norm, &steps).unwrap().last().copied().flatten();
            out.check(
                order.is_some_and(|o| (o - expected as f64).abs() <= 0.1),
                || format!("r={r}: order {order:?}, expected {expected}"),
            );
        }
    }
    out.check(worst_end <= 1e-11, || {
        format!("endpoint mismatch {worst_end:.2e}")
    });
    out.check(worst_orth <= 1e-10, || {
        format!("orthogonality defect {worst_orth:.2e}")
    });
    out.note(format!(
        "endpoints {worst_end:.1e}, orthogonality {worst_orth:.1e}"
    ));
    out
}

fn source<F>(f: F, u0: f64, u1: f64) -> ProblemDef
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    ProblemDef::new(
        move |t, _: &[f64], _: &[f64], out: &mut [f64]| {
            out[0] = f(t);
            Ok(())
        },
        vec![u0],
        vec![u1],
        1.0,
    )
    .unwrap()
}

fn criterion_5(reports: &[(&str, &Report)]) -> Outcome {
    let mut out = Outcome::new();

    let (u, stats) = solve_step(
        &source(|_| 0.0, 1.0, 2.0),
        (0.0, 0.5),
        2,
        &[1.0],
        &[2.0],
        Default::default(),
    )
    .unwrap();
    let affine = (0..=10)
        .map(|i| 0.05 * i as f64)
        .map(|t| (u.eval(t, 0)[0] - (1.0 + 2.0 * t)).abs())
        .fold(0.0, f64::max);
    out.check(stats.iterations == 1 && affine < 1e-14, || {
        format!(
            "affine step: {} iterations, error {affine:.2e}",
            stats.iterations
        )
    });

    let (u, _) = solve_step(
        &source(|t| 6.0 * t, 0.0, 0.0),
        (0.0, 1.0),
        3,
        &[0.0],
        &[0.0],
        Default::default(),
    )
    .unwrap();
    let cubic = (0..=20)
        .map(|i| 0.05 * i as f64)
        .map(|t| (u.eval(t, 0)[0] - t * t * t).abs())
        .fold(0.0, f64::max);
    out.check(cubic < 1e-12, || format!("cubic step error {cubic:.2e}"));

    let quintic = source(|t| 20.0 * t.powi(3) - 12.0 * t, 0.0, 1.0);
    let mesh = TimeMesh::from_arrays(vec![0.0, 0.3, 0.45, 1.1, 2.0], vec![5, 6, 7, 5]).unwrap();
    let s = solve(&quintic, &mesh, Default::default()).unwrap();
    let poly = (0..=200)
        .map(|i| 0.01 * i as f64)
        .map(|t| (s.eval(t, 0).unwrap()[0] - (t.powi(5) - 2.0 * t.powi(3) + t)).abs())
        .fold(0.0, f64::max);
    out.check(poly < 1e-11, || {
        format!("quintic on a graded mesh: {poly:.2e}")
    });

    let mut worst_matrix = 0.0f64;
    for r in 2..=12 {
        for &k in &[1.0, 0.5, 1.0 / 64.0, 3.7] {
            let a = assemble_step_matrix(k, r).unwrap();
            let a = a.matrix();
            let scale = 1.0f64.max(a.amax());
            let rule = gauss_legendre_rule(r);
            let nodes = rule.mapped_nodes(0.0, k);
            let s = shifted_basis_sample((0.0, k), r, &nodes, 2).unwrap();
            let second = s.second.as_ref().unwrap();
            let ends = shifted_basis_sample((0.0, k), r, &[0.0], 1).unwrap();
            let first = ends.first.as_ref().unwrap();
            for j in 0..=r {
                for i in 0..r - 1 {
                    let q: f64 = (0..r)
                        .map(|p| 0.5 * k * rule.weights[p] * second[(j, p)] * s.values[(i, p)])
                        .sum();
                    worst_matrix = worst_matrix.max((a[(i, j)] - q).abs() / scale);
                }
                worst_matrix = worst_matrix.max((a[(r - 1, j)] - ends.values[(j, 0)]).abs());
                worst_matrix = worst_matrix.max((a[(r, j)] - first[(j, 0)]).abs() / scale);
            }
        }
    }
    out.check(worst_matrix <= 1e-11, || {
        format!("step matrix differs from the quadrature oracle by {worst_matrix:.2e}")
    });

    let mut worst_jump = 0.0f64;
    for (name, report) in reports {
        for c in &report.cells {
            let (dv, dd) = c.continuity;
            let jump = dv.max(dd);
            worst_jump = worst_jump.max(jump);
            out.check(jump <= 1e-11, || {
                format!("{name} r={} k={}: C1 jump {jump:.2e}", c.r, c.step)
            });
        }
    }
    out.note(format!(
        "step matrix {worst_matrix:.1e}, largest C1 jump {worst_jump:.1e}"
    ));
    out
}

fn criterion_6(energy: &Report, elapsed: Duration) -> Outcome {
    let mut out = Outcome::new();
    no_failures(&mut out, "two_body", energy);
    for c in &energy.cells {
        let first = c.energy.as_ref().and_then(|s| s.errors.first().copied());
        out.check(first == Some(0.0), || {
            format!("k={}: E(t0) = {first:?}", c.step)
        });
    }
    let orders: Vec<Option<f64>> = energy.cells.iter().skip(1).map(|c| c.energy_eoc).collect();
    out.check(!orders.is_empty(), || "no energy orders".into());
    for o in &orders {
        out.check(o.is_some_and(|o| (o - 4.0).abs() <= 0.3), || {
            format!("energy order {o:?}, expected 4")
        });
    }
    out.note(format!(
        "orders {}",
        orders
            .iter()
            .map(|o| o.map_or("-".into(), |o| format!("{o:.2}")))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    runtime(&mut out, elapsed, 60);
    out
}

fn criterion_7(linear_wave: &Report, elapsed: Duration) -> Outcome {
    let mut out = Outcome::new();
    no_failures(&mut out, "linear_wave", linear_wave);
    compare_rows(
        &mut out,
        linear_wave,
        &LINEAR_WAVE,
        &SPACE_TIME_COLS,
        3.0,
        0.1,
    );
    runtime(&mut out, elapsed, 120);
    out
}

fn criterion_8(sine_gordon: &Report, elapsed: Duration) -> Outcome {
    let mut out = Outcome::new();
    no_failures(&mut out, "sine_gordon", sine_gordon);
    compare_rows(
        &mut out,
        sine_gordon,
        &SINE_GORDON,
        &SPACE_TIME_COLS,
        5.0,
        0.15,
    );
    compare_rows(
        &mut out,
        sine_gordon,
        &SINE_GORDON_NODAL,
        &NODAL_COLS,
        f64::INFINITY,
        0.2,
    );
    runtime(&mut out, elapsed, 600);
    out
}

fn criterion_9(first: &[(&str, &Report)]) -> Outcome {
    let mut out = Outcome::new();
    for (name, report) in first {
        let (again, _) = timed_run(name);
        out.check(
            csv_string(report, false) == csv_string(&again, false),
            || format!("{name}: report.csv differs between runs"),
        );
        out.check(
            energy_csv_string(report) == energy_csv_string(&again),
            || format!("{name}: energy.csv differs between runs"),
        );
    }
    out.note(format!("{} configurations compared", first.len()));
    out
}

fn main() -> ExitCode {
    let (scalar_h, t1) = timed_run("ex1_h_version");
    let (scalar_nodal, _) = timed_run("ex1_nodal");
    let (n1, _) = timed_run("p_version_n1");
    let (n4, _) = timed_run("p_version_n4");
    let (energy, t6) = timed_run("two_body_energy");
    let (linear_wave, t7) = timed_run("linear_wave");
    let (sine_gordon, t8) = timed_run("sine_gordon");
    let reports = [
        ("ex1_h_version", &scalar_h),
        ("ex1_nodal", &scalar_nodal),
        ("p_version_n1", &n1),
        ("p_version_n4", &n4),
        ("two_body_energy", &energy),
        ("linear_wave", &linear_wave),
        ("sine_gordon", &sine_gordon),
    ];

    let criteria = [
        (
            "scalar nonlinear problem errors and orders",
            criterion_1(&scalar_h, t1),
        ),
        ("nodal superconvergence", criterion_2(&scalar_nodal)),
        (
            "p-version decay on 1 and 4 intervals",
            criterion_3(&n1, &n4),
        ),
        (
            "projector orders, endpoints and orthogonality",
            criterion_4(),
        ),
        ("exactness suite and C1 continuity", criterion_5(&reports)),
        ("two-body energy order", criterion_6(&energy, t6)),
        (
            "linear wave errors and orders",
            criterion_7(&linear_wave, t7),
        ),
        (
            "sine-Gordon errors and nodal orders",
            criterion_8(&sine_gordon, t8),
        ),
        ("bit-identical CSV output", criterion_9(&reports)),
    ];

    let mut failed = 0;
    for (i, (name, outcome)) in criteria.iter().enumerate() {
        let status = if outcome.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "criterion {} [{status}] {name} ({})",
            i + 1,
            outcome.notes.join("; ")
        );
        for f in &outcome.failures {
            println!("    {f}");
        }
        failed += usize::from(!outcome.failures.is_empty());
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
