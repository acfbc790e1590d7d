use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hysfem::fem::{assemble_mass, assemble_stiffness, Mesh};
use hysfem::hysteresis::{PlayParams, PreisachInit, PreisachParams};
use hysfem::solver::{NewtonConfig, SolverChoice};
use hysfem::stepping::{
    zero_space, zero_space_time, HysteresisSpec, ProblemKind, TransientDriver, TransientProblem,
};

fn bump(dim: usize, amp: f64) -> hysfem::stepping::SpaceFn {
    Arc::new(move |x: &[f64]| amp * x[..dim].iter().map(|&v| 4.0 * v * (1.0 - v)).product::<f64>())
}

fn play_problem(kind: ProblemKind, dim: usize, n: usize, k: usize, c: f64) -> TransientProblem {
    TransientProblem {
        kind,
        mesh: Mesh::uniform(dim, n).unwrap(),
        t_final: 0.2,
        k_steps: k,
        source: Arc::new(|x, t| 20.0 * (6.0 * t).sin() * x[0]),
        boundary: Arc::new(|x, t| x[0] * t),
        initial: bump(dim, 3.0),
        hysteresis: HysteresisSpec::Play { params: PlayParams::new(-0.5, 0.5, c).unwrap(), w0: zero_space() },
    }
}

fn newton(tol: f64) -> SolverChoice {
    SolverChoice::SmoothingNewton(NewtonConfig { tol, ..Default::default() })
}

#[test]
fn step_operator_is_strongly_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in [ProblemKind::Semilinear, ProblemKind::Quasilinear] {
        let driver = TransientDriver::new(play_problem(kind, 2, 6, 10, 2.0)).unwrap();
        let state = driver.initial_state().unwrap();
        let mp = driver.build_step_system(&state).unwrap().problem;
        let rows = mp.a.to_dense();
        let a = DMatrix::from_fn(mp.n(), mp.n(), |i, j| rows[i][j]);
        let lambda_min = a.symmetric_eigenvalues().min();
        for _ in 0..200 {
            let u1: Vec<f64> = (0..mp.n()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let u2: Vec<f64> = (0..mp.n()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (h1, h2) = (mp.residual(&u1), mp.residual(&u2));
            let lhs: f64 = (0..mp.n()).map(|i| (h1[i] - h2[i]) * (u1[i] - u2[i])).sum();
            let dist2: f64 = u1.iter().zip(&u2).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(lhs >= lambda_min * dist2 - 1e-8, "{lhs} < {}", lambda_min * dist2);
        }
    }
}

#[test]
fn restarting_from_a_snapshot_reproduces_the_trajectory() {
    let prob = play_problem(ProblemKind::Quasilinear, 1, 32, 20, 2.0);
    let driver = TransientDriver::new(prob).unwrap();
    let solver = newton(1e-11);
    let traj = driver.run(&solver, &[7, 8]).unwrap();
    let (at7, at8) = (&traj.snapshots[0], &traj.snapshots[1]);
    assert_eq!((at7.step, at8.step), (7, 8));
    let (again, _) = driver.advance(at7, &solver).unwrap();
    assert_eq!(again.u, at8.u);
    assert_eq!(again.w, at8.w);
    assert_eq!(again.memories, at8.memories);
}

#[test]
fn quasilinear_energy_decays_without_data() {
    for (dim, hysteresis) in [
        (1, HysteresisSpec::Play { params: PlayParams::new(-0.5, 0.5, 2.0).unwrap(), w0: zero_space() }),
        (2, HysteresisSpec::Play { params: PlayParams::new(-0.2, 0.3, 1.0).unwrap(), w0: zero_space() }),
        (
            2,
            HysteresisSpec::Preisach {
                params: PreisachParams::lorentzian_benchmark(20).unwrap(),
                init: PreisachInit::LowerBoundThenPath(vec![-1e9]),
            },
        ),
    ] {
        let amp = if matches!(hysteresis, HysteresisSpec::Preisach { .. }) { 300.0 } else { 3.0 };
        let prob = TransientProblem {
            kind: ProblemKind::Quasilinear,
            mesh: Mesh::uniform(dim, 8).unwrap(),
            t_final: 0.5,
            k_steps: 25,
            source: zero_space_time(),
            boundary: zero_space_time(),
            initial: bump(dim, amp),
            hysteresis,
        };
        let driver = TransientDriver::new(prob).unwrap();
        let mut state = driver.initial_state().unwrap();
        let mut energy = driver.energy(&state.u);
        for _ in 0..25 {
            state = driver.advance(&state, &newton(1e-11)).unwrap().0;
            let next = driver.energy(&state.u);
            assert!(next <= energy * (1.0 + 1e-12) + 1e-14, "energy grew from {energy} to {next}");
            energy = next;
        }
    }
}

#[test]
fn vanishing_hysteresis_recovers_the_heat_equation() {
    let heat = TransientProblem { hysteresis: HysteresisSpec::None, ..play_problem(ProblemKind::Quasilinear, 2, 8, 5, 1.0) };
    let tiny = play_problem(ProblemKind::Quasilinear, 2, 8, 5, 1e-13);
    let a = TransientDriver::new(heat).unwrap().run(&newton(1e-13), &[]).unwrap().final_state;
    let b = TransientDriver::new(tiny).unwrap().run(&newton(1e-13), &[]).unwrap().final_state;
    let diff = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn heat_step_matches_dense_solve() {
    let n = 12;
    let prob = TransientProblem { hysteresis: HysteresisSpec::None, ..play_problem(ProblemKind::Semilinear, 1, n, 4, 1.0) };
    let tau = prob.tau();
    let mesh = prob.mesh.clone();
    let driver = TransientDriver::new(prob.clone()).unwrap();
    let state = driver.initial_state().unwrap();
    let (next, _) = driver.advance(&state, &newton(1e-13)).unwrap();

    // (M + tau K) u1 = M (tau f(t_1/2) + u0) with Dirichlet rows replaced.
    let m = assemble_mass(&mesh).to_dense();
    let k = assemble_stiffness(&mesh).to_dense();
    let nv = mesh.num_vertices();
    let mut a = DMatrix::from_fn(nv, nv, |i, j| m[i][j] + tau * k[i][j]);
    let load: Vec<f64> = (0..nv).map(|i| tau * (prob.source)(mesh.vertex(i), 0.5 * tau) + state.u[i]).collect();
    let mut rhs = DVector::from_fn(nv, |i, _| (0..nv).map(|j| m[i][j] * load[j]).sum());
    for &i in mesh.boundary_nodes() {
        a.row_mut(i).fill(0.0);
        a[(i, i)] = 1.0;
        rhs[i] = (prob.boundary)(mesh.vertex(i), tau);
    }
    let exact = a.lu().solve(&rhs).unwrap();
    let diff = next.u.iter().zip(exact.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}
