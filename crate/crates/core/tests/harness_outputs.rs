use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Duration;

use hysfem::fem::{error_norms, FeFunction, Mesh};
use hysfem::harness::{
    preisach_demo, run_h_study_with, write_bench_outputs, write_demo_outputs, BenchReport, BenchRow, CaseId,
    ErrorTable, GridConfig, HarnessError, PreisachDemoConfig, ReferenceCache,
};
use hysfem::solver::SolverChoice;
use hysfem::stepping::{zero_space, zero_space_time, HysteresisSpec, ProblemKind, TransientDriver, TransientProblem};

fn csv_bytes(t: &ErrorTable) -> Vec<u8> {
    let mut out = Vec::new();
    t.write_csv(&mut out).unwrap();
    out
}

fn small_grid(r_h: usize) -> GridConfig {
    GridConfig { n_ref: 64, k_ref: 64, n_init: 8, k_init: 8, r_h, r_tau: 0 }
}

fn case1(n: usize, k: usize) -> Result<TransientProblem, HarnessError> {
    CaseId::new(1)?.problem(n, k, Some(0.25))
}

#[test]
fn studies_are_deterministic_and_cached_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let solver = SolverChoice::default();
    let cache = ReferenceCache::new(Some(dir.path().to_path_buf()));
    let a = run_h_study_with(&case1, &small_grid(2), &solver, &cache, "case1").unwrap();
    let b = run_h_study_with(&case1, &small_grid(2), &solver, &ReferenceCache::disabled(), "case1").unwrap();
    let c = run_h_study_with(&case1, &small_grid(2), &solver, &cache, "case1").unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    assert_eq!(csv_bytes(&a), csv_bytes(&c));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn single_level_has_no_orders() {
    let t = run_h_study_with(&case1, &small_grid(0), &SolverChoice::default(), &ReferenceCache::disabled(), "c").unwrap();
    assert_eq!(t.rows.len(), 1);
    let csv = String::from_utf8(csv_bytes(&t)).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.ends_with(",-") && row.split(',').nth(4) == Some("-"), "{row}");
}

#[test]
fn zero_data_gives_zero_errors() {
    let zero = |n: usize, k: usize| -> Result<TransientProblem, HarnessError> {
        Ok(TransientProblem {
            kind: ProblemKind::Semilinear,
            mesh: Mesh::uniform(1, n)?,
            t_final: 1.0,
            k_steps: k,
            source: zero_space_time(),
            boundary: zero_space_time(),
            initial: zero_space(),
            hysteresis: HysteresisSpec::None,
        })
    };
    let t = run_h_study_with(&zero, &small_grid(2), &SolverChoice::default(), &ReferenceCache::disabled(), "z").unwrap();
    let csv = String::from_utf8(csv_bytes(&t)).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[3], f[4], f[5], f[6]), ("0.000000e0", "-", "0.000000e0", "-"), "{line}");
    }
}

#[test]
fn manufactured_heat_solution_has_second_order_l2_error() {
    // u = sin(pi x) solves u_t - u_xx = pi^2 sin(pi x) with zero boundary values.
    let exact_mesh = Mesh::uniform(1, 512).unwrap();
    let exact: Vec<f64> = (0..exact_mesh.num_vertices()).map(|i| (PI * exact_mesh.vertex(i)[0]).sin()).collect();
    let exact_fn = FeFunction::new(&exact_mesh, &exact).unwrap();
    let mut errors = Vec::new();
    for n in [8, 16, 32, 64] {
        let prob = TransientProblem {
            kind: ProblemKind::Semilinear,
            mesh: Mesh::uniform(1, n).unwrap(),
            t_final: 0.5,
            k_steps: 50,
            source: Arc::new(|x, _| PI * PI * (PI * x[0]).sin()),
            boundary: zero_space_time(),
            initial: Arc::new(|x| (PI * x[0]).sin()),
            hysteresis: HysteresisSpec::None,
        };
        let driver = TransientDriver::new(prob).unwrap();
        let u = driver.run(&SolverChoice::default(), &[]).unwrap().final_state.u;
        errors.push(error_norms(&exact_fn, &FeFunction::new(driver.mesh(), &u).unwrap()).unwrap().l2);
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&order), "order {order} from {errors:?}");
    }
}

fn points(svg: &str, label: &str) -> Vec<(f64, f64)> {
    let doc = roxmltree::Document::parse(svg).unwrap();
    let group = doc
        .descendants()
        .find(|n| n.attribute("data-label") == Some(label))
        .unwrap_or_else(|| panic!("no series {label}"));
    let poly = group.children().find(|n| n.has_tag_name("polyline")).unwrap();
    poly.attribute("points")
        .unwrap()
        .split_whitespace()
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

#[test]
fn residual_svg_matches_csv() {
    let row = |name: &str, hist: Vec<f64>| BenchRow {
        solver: name.into(),
        converged: true,
        wall_time: Duration::from_millis(3),
        nonlinear_iterations: hist.len() - 1,
        linear_iterations: 10,
        function_evaluations: 4,
        jacobian_evaluations: 2,
        residual_history: hist,
        solution: None,
    };
    let report = BenchReport {
        matched_step: 7,
        rows: vec![
            row("smoothing-newton", vec![1e-1, 3e-3, 8e-6, 1e-12]),
            row("fixed-point", (0..10).map(|k| 0.1 * 0.05f64.powi(k)).collect()),
        ],
        transient: vec![],
    };
    let dir = tempfile::tempdir().unwrap();
    write_bench_outputs(&report, dir.path()).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("bench_residuals.svg")).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("bench_residuals.csv")).unwrap();
    for r in &report.rows {
        let pts = points(&svg, &r.solver);
        let from_csv: Vec<f64> = csv
            .lines()
            .skip(1)
            .filter(|l| l.starts_with(&format!("{},", r.solver)))
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(pts.len(), from_csv.len());
        // Screen y decreases exactly when the residual decreases.
        for k in 1..pts.len() {
            assert_eq!(pts[k].1 > pts[k - 1].1, from_csv[k] < from_csv[k - 1]);
        }
    }
}

#[test]
fn loop_svg_matches_csv() {
    let cfg = PreisachDemoConfig {
        preisach_nodes: 30,
        samples_per_period: 200,
        periods: 2,
        initial_peak: 308.672,
        output_dir: None,
    };
    let report = preisach_demo(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_demo_outputs(&report, dir.path()).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("preisach_loop.svg")).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("preisach_loop.csv")).unwrap();
    let pts = points(&svg, "loop");
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[1], f[2])
        })
        .collect();
    assert_eq!(pts.len(), rows.len());
    // The pixel mapping is affine and increasing in u; check the extremes line up.
    let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, &x)| if x > v[b] { i } else { b });
    let us: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let px: Vec<f64> = pts.iter().map(|p| p.0).collect();
    assert_eq!(us[argmax(&us)], us[argmax(&px)]);
}
