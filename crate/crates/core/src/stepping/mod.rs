//! Backward-Euler time stepping. Each step assembles a [`ModelProblem`] on
//! the free nodes, hands it to a solver and then advances the nodal
//! hysteresis memories with the new values.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::fem::{assemble_lumped_mass, assemble_mass, assemble_stiffness, FemError, Mesh, SparseMatrix};
use crate::hysteresis::{
    play_init, play_level_function, play_update, preisach_init, preisach_level_function, preisach_output,
    HysteresisError, PlayParams, PlayState, PreisachInit, PreisachMemory, PreisachParams,
};
use crate::piecewise::ScalarPiecewiseC2;
use crate::solver::{ModelProblem, SolveError, SolveReport, SolverChoice};

/// Function of position.
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Function of position and time.
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

pub fn zero_space() -> SpaceFn {
    Arc::new(|_| 0.0)
}

pub fn zero_space_time() -> SpaceTimeFn {
    Arc::new(|_, _| 0.0)
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Hysteresis(#[from] HysteresisError),
    #[error("step {step}")]
    Solve {
        step: usize,
        #[source]
        source: SolveError,
    },
    #[error("invalid transient problem: {0}")]
    Invalid(String),
    #[error("state has {got} nodes, mesh has {expected}")]
    StateSize { expected: usize, got: usize },
    #[error("all {0} steps are done")]
    Finished(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where the hysteresis term enters the equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    /// `u_t - Δu + W[u] = f`
    Semilinear,
    /// `(u + W[u])_t - Δu = f`
    Quasilinear,
}

#[derive(Clone)]
pub enum HysteresisSpec {
    None,
    Play { params: PlayParams, w0: SpaceFn },
    Preisach { params: PreisachParams, init: PreisachInit },
}

impl std::fmt::Debug for HysteresisSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::None => write!(f, "None"),
            Self::Play { params, .. } => write!(f, "Play({params:?})"),
            Self::Preisach { params, .. } => write!(f, "Preisach({} nodes)", params.len()),
        }
    }
}

#[derive(Clone)]
pub struct TransientProblem {
    pub kind: ProblemKind,
    pub mesh: Mesh,
    pub t_final: f64,
    pub k_steps: usize,
    pub source: SpaceTimeFn,
    pub boundary: SpaceTimeFn,
    pub initial: SpaceFn,
    pub hysteresis: HysteresisSpec,
}

impl TransientProblem {
    pub fn tau(&self) -> f64 {
        self.t_final / self.k_steps as f64
    }

    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(StepError::Invalid(format!("final time {} must be positive", self.t_final)));
        }
        if self.k_steps == 0 {
            return Err(StepError::Invalid("at least one time step is required".into()));
        }
        if let HysteresisSpec::Play { params, .. } = &self.hysteresis {
            params.validate()?;
        }
        Ok(())
    }
}

/// Nodal hysteresis memories.
#[derive(Clone, Debug, PartialEq)]
pub enum Memories {
    None,
    Play(Vec<PlayState>),
    Preisach(Vec<PreisachMemory>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransientState {
    pub step: usize,
    pub time: f64,
    pub u: Vec<f64>,
    pub memories: Memories,
    /// Hysteresis output at every node.
    pub w: Vec<f64>,
}

/// Step system on the free nodes together with the Dirichlet values.
#[derive(Clone, Debug)]
pub struct StepSystem {
    pub problem: ModelProblem,
    pub free: Vec<usize>,
    /// Full-length vector with boundary values at `t_{k+1}` and zeros elsewhere.
    pub prescribed: Vec<f64>,
}

/// Matrices shared by all steps of one problem.
pub struct TransientDriver {
    prob: TransientProblem,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    lumped: Vec<f64>,
    /// `M + τK` on the free nodes.
    a_free: SparseMatrix,
    /// `M + τK` on all nodes, used for the boundary lift.
    a_full: SparseMatrix,
    free: Vec<usize>,
}

impl TransientDriver {
    pub fn new(prob: TransientProblem) -> Result<Self, StepError> {
        prob.validate()?;
        let mass = assemble_mass(&prob.mesh);
        let stiffness = assemble_stiffness(&prob.mesh);
        let lumped = assemble_lumped_mass(&prob.mesh);
        let a_full = mass.add_scaled(&stiffness, prob.tau())?;
        let free = prob.mesh.free_nodes();
        let n = prob.mesh.num_vertices();
        let mut col_map = vec![None; n];
        for (k, &i) in free.iter().enumerate() {
            col_map[i] = Some(k);
        }
        let a_free = a_full.submatrix(&free, &col_map, free.len()).into_square()?;
        Ok(Self { prob, mass, stiffness, lumped, a_free, a_full, free })
    }

    pub fn problem(&self) -> &TransientProblem {
        &self.prob
    }

    pub fn mesh(&self) -> &Mesh {
        &self.prob.mesh
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn tau(&self) -> f64 {
        self.prob.tau()
    }

    /// Nodal interpolation of the initial data with fresh memories.
    pub fn initial_state(&self) -> Result<TransientState, StepError> {
        let mesh = &self.prob.mesh;
        let u: Vec<f64> = (0..mesh.num_vertices()).map(|i| (self.prob.initial)(mesh.vertex(i))).collect();
        let (memories, w) = match &self.prob.hysteresis {
            HysteresisSpec::None => (Memories::None, vec![0.0; u.len()]),
            HysteresisSpec::Play { params, w0 } => {
                let states: Vec<PlayState> = u
                    .iter()
                    .enumerate()
                    .map(|(i, &ui)| play_init(ui, w0(mesh.vertex(i)), params))
                    .collect();
                let w = states.iter().map(|s| s.w).collect();
                (Memories::Play(states), w)
            }
            HysteresisSpec::Preisach { params, init } => {
                let mems = u
                    .par_iter()
                    .map(|&ui| preisach_init(ui, init, params))
                    .collect::<Result<Vec<_>, _>>()?;
                let w = mems.par_iter().map(|m| preisach_output(m, params)).collect();
                (Memories::Preisach(mems), w)
            }
        };
        Ok(TransientState { step: 0, time: 0.0, u, memories, w })
    }

    fn check_state(&self, state: &TransientState) -> Result<(), StepError> {
        let n = self.prob.mesh.num_vertices();
        if state.u.len() != n || state.w.len() != n {
            return Err(StepError::StateSize { expected: n, got: state.u.len() });
        }
        if state.step >= self.prob.k_steps {
            return Err(StepError::Finished(self.prob.k_steps));
        }
        Ok(())
    }

    /// Assembles `A = M + τK`, the load vector and the nodal nonlinearities
    /// for the step from `state.step` to `state.step + 1`.
    pub fn build_step_system(&self, state: &TransientState) -> Result<StepSystem, StepError> {
        self.check_state(state)?;
        let mesh = &self.prob.mesh;
        let tau = self.tau();
        let t_mid = state.time + 0.5 * tau;
        let t_next = (state.step + 1) as f64 * tau;
        let n = mesh.num_vertices();

        let load: Vec<f64> = (0..n).map(|i| tau * (self.prob.source)(mesh.vertex(i), t_mid) + state.u[i]).collect();
        let mut rhs = self.mass.mul_vec(&load);
        let mut prescribed = vec![0.0; n];
        for &i in mesh.boundary_nodes() {
            prescribed[i] = (self.prob.boundary)(mesh.vertex(i), t_next);
        }
        let lift = self.a_full.mul_vec(&prescribed);
        for (r, l) in rhs.iter_mut().zip(&lift) {
            *r -= l;
        }
        let f: Vec<f64> = self.free.iter().map(|&i| rhs[i]).collect();

        let (scale_factor, quasi) = match self.prob.kind {
            ProblemKind::Semilinear => (tau, false),
            ProblemKind::Quasilinear => (1.0, true),
        };
        let node_phi = |i: usize| -> ScalarPiecewiseC2 {
            let scale = scale_factor * self.lumped[i];
            let offset = if quasi { -state.w[i] * self.lumped[i] } else { 0.0 };
            match (&self.prob.hysteresis, &state.memories) {
                (HysteresisSpec::Play { params, .. }, Memories::Play(s)) => {
                    play_level_function(s[i].w, params, scale).with_offset(offset)
                }
                (HysteresisSpec::Preisach { params, .. }, Memories::Preisach(m)) => {
                    preisach_level_function(&m[i], params, scale, offset)
                }
                _ => ScalarPiecewiseC2::affine(0.0, 0.0),
            }
        };
        if !matches!(
            (&self.prob.hysteresis, &state.memories),
            (HysteresisSpec::None, Memories::None)
                | (HysteresisSpec::Play { .. }, Memories::Play(_))
                | (HysteresisSpec::Preisach { .. }, Memories::Preisach(_))
        ) {
            return Err(StepError::Invalid("state memories do not match the hysteresis model".into()));
        }
        let phi: Vec<ScalarPiecewiseC2> = self.free.par_iter().map(|&i| node_phi(i)).collect();
        let problem = ModelProblem::new(self.a_free.clone(), f, phi)
            .map_err(|source| StepError::Solve { step: state.step, source })?;
        Ok(StepSystem { problem, free: self.free.clone(), prescribed })
    }

    /// Solves one step and updates the memories with the new values.
    pub fn advance(
        &self,
        state: &TransientState,
        solver: &SolverChoice,
    ) -> Result<(TransientState, SolveReport), StepError> {
        let parts = self.build_step_system(state)?;
        let x0: Vec<f64> = parts.free.iter().map(|&i| state.u[i]).collect();
        let (x, report) = solver
            .solve(&parts.problem, &x0)
            .map_err(|source| StepError::Solve { step: state.step + 1, source })?;
        let mut u = parts.prescribed;
        for (&i, &v) in parts.free.iter().zip(&x) {
            u[i] = v;
        }
        let (memories, w) = self.advance_memories(&state.memories, &u);
        let step = state.step + 1;
        let next = TransientState { step, time: step as f64 * self.tau(), u, memories, w };
        Ok((next, report))
    }

    fn advance_memories(&self, memories: &Memories, u: &[f64]) -> (Memories, Vec<f64>) {
        match (&self.prob.hysteresis, memories) {
            (HysteresisSpec::Play { params, .. }, Memories::Play(s)) => {
                let next: Vec<PlayState> = s.iter().zip(u).map(|(&si, &ui)| play_update(si, ui, params)).collect();
                let w = next.iter().map(|s| s.w).collect();
                (Memories::Play(next), w)
            }
            (HysteresisSpec::Preisach { params, .. }, Memories::Preisach(m)) => {
                let next: Vec<PreisachMemory> = m
                    .par_iter()
                    .zip(u.par_iter())
                    .map(|(mi, &ui)| {
                        let mut mi = mi.clone();
                        mi.update(ui, params);
                        mi
                    })
                    .collect();
                let w = next.par_iter().map(|m| preisach_output(m, params)).collect();
                (Memories::Preisach(next), w)
            }
            _ => (Memories::None, vec![0.0; u.len()]),
        }
    }

    /// Runs all steps, keeping the states whose step index is listed in
    /// `snapshots` (the final state is always kept).
    pub fn run(&self, solver: &SolverChoice, snapshots: &[usize]) -> Result<Trajectory, StepError> {
        let mut state = self.initial_state()?;
        let mut traj = Trajectory { snapshots: Vec::new(), reports: Vec::new(), final_state: state.clone() };
        if snapshots.contains(&0) {
            traj.snapshots.push(state.clone());
        }
        while state.step < self.prob.k_steps {
            let (next, report) = self.advance(&state, solver)?;
            state = next;
            traj.reports.push(report);
            if snapshots.contains(&state.step) {
                traj.snapshots.push(state.clone());
            }
        }
        traj.final_state = state;
        Ok(traj)
    }

    /// `u^T K u`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.stiffness.bilinear(u, u)
    }

    /// Writes one CSV row per node: id, coordinates, u, w.
    pub fn write_snapshot_csv<W: Write>(&self, state: &TransientState, out: W) -> Result<(), StepError> {
        write_snapshot_csv(&self.prob.mesh, state, out)
    }
}

/// States kept during a run plus the per-step solver reports.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<TransientState>,
    pub reports: Vec<SolveReport>,
    pub final_state: TransientState,
}

pub fn run_transient(prob: TransientProblem, solver: &SolverChoice) -> Result<Trajectory, StepError> {
    TransientDriver::new(prob)?.run(solver, &[])
}

pub fn write_snapshot_csv<W: Write>(mesh: &Mesh, state: &TransientState, out: W) -> Result<(), StepError> {
    let mut wtr = csv::Writer::from_writer(out);
    let axes = ["x", "y", "z"];
    let mut header = vec!["node".to_string()];
    header.extend(axes[..mesh.dim()].iter().map(|s| s.to_string()));
    header.extend(["u".to_string(), "w".to_string()]);
    wtr.write_record(&header)?;
    for i in 0..mesh.num_vertices() {
        let mut row = vec![i.to_string()];
        row.extend(mesh.vertex(i).iter().map(|c| format!("{c}")));
        row.push(format!("{:e}", state.u[i]));
        row.push(format!("{:e}", state.w[i]));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
