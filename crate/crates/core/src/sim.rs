//! Closed-loop assembly and integration: exosystem, distributed observers,
//! and plants under chain feedback, driven through an attack schedule, with
//! derived error series, Lyapunov diagnostics, and settling metrics.

use crate::dos::{theta, AttackBudget, AttackSchedule};
use crate::gains::ChannelGains;
use crate::graph::{CouplingMatrix, DirectedGraph, GainMatrixK};
use crate::numerics::{
    integrate_fixed_rk4_each, sig_scalar, solve_linear, Mat, NumericsError,
};
use crate::observer::{lyapunov_v, ObserverCertificate, ObserverConstants, ObserverParams};
use crate::regulation::{AgentModel, ExosystemModel, NormalForm, RegulatorSolution};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state became non-finite at t = {at}")]
    NonFiniteState { at: f64 },
}

/// Everything synthesized for one agent: plant, steady-state maps, chain
/// coordinates, and the per-channel feedback design.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDesign {
    pub model: AgentModel,
    pub regulator: RegulatorSolution,
    pub normal_form: NormalForm,
    pub channels: Vec<ChannelGains>,
}

/// A complete runnable scenario. The certificate is optional so that designs
/// outside the certified regime (baseline comparisons, failure studies) can
/// still be simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDesign {
    pub graph: DirectedGraph,
    pub coupling: CouplingMatrix,
    pub gain_k: GainMatrixK,
    pub exo: ExosystemModel,
    pub observer: ObserverParams,
    pub certificate: Option<ObserverCertificate>,
    pub agents: Vec<AgentDesign>,
    pub schedule: AttackSchedule,
    pub budget: AttackBudget,
}

impl ScenarioDesign {
    /// Stacked dimension of `[v; η_1..η_N; x_1..x_N]`.
    pub fn state_dim(&self) -> usize {
        let q = self.exo.dim();
        q + self.agents.len() * q
            + self.agents.iter().map(|a| a.model.state_dim()).sum::<usize>()
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    fn validate(&self) -> Result<(), SimError> {
        let n_agents = self.agents.len();
        let q = self.exo.dim();
        if self.graph.agent_count() != n_agents
            || self.coupling.agent_count() != n_agents
            || self.gain_k.diagonal().len() != n_agents
        {
            return Err(SimError::DimensionMismatch(format!(
                "graph/coupling/gain sized for {}/{}/{} agents, design has {n_agents}",
                self.graph.agent_count(),
                self.coupling.agent_count(),
                self.gain_k.diagonal().len()
            )));
        }
        for (i, agent) in self.agents.iter().enumerate() {
            let n = agent.model.state_dim();
            let m = agent.model.input_dim();
            if agent.model.exo_dim() != q {
                return Err(SimError::DimensionMismatch(format!(
                    "agent {i} expects exosystem dimension {}, scenario has {q}",
                    agent.model.exo_dim()
                )));
            }
            if agent.regulator.pi.rows() != n
                || agent.regulator.pi.cols() != q
                || agent.regulator.gamma.rows() != m
                || agent.regulator.gamma.cols() != q
            {
                return Err(SimError::DimensionMismatch(format!(
                    "agent {i} regulator solution has wrong shape"
                )));
            }
            let nf = &agent.normal_form;
            if nf.t_mat.rows() != n
                || nf.t_mat.cols() != n
                || nf.x_mat.rows() != m
                || nf.x_mat.cols() != m
                || nf.u_mat.rows() != m
                || nf.u_mat.cols() != n
            {
                return Err(SimError::DimensionMismatch(format!(
                    "agent {i} normal form has wrong shape"
                )));
            }
            if agent.channels.len() != m {
                return Err(SimError::DimensionMismatch(format!(
                    "agent {i} has {} channel designs for {m} inputs",
                    agent.channels.len()
                )));
            }
            let order_sum: usize = agent.channels.iter().map(|c| c.order).sum();
            if order_sum != n || nf.indices.iter().sum::<usize>() != n {
                return Err(SimError::DimensionMismatch(format!(
                    "agent {i} chain orders sum to {order_sum}, state dimension is {n}"
                )));
            }
            for (r, ch) in agent.channels.iter().enumerate() {
                if ch.order != nf.indices[r] {
                    return Err(SimError::DimensionMismatch(format!(
                        "agent {i} channel {r} order {} mismatches chain length {}",
                        ch.order, nf.indices[r]
                    )));
                }
                if ch.psi.len() != ch.order
                    || ch.psi_bar.len() != ch.order
                    || ch.gamma.len() != ch.order
                    || ch.gamma_bar.len() != ch.order
                {
                    return Err(SimError::DimensionMismatch(format!(
                        "agent {i} channel {r} vectors mismatch its order"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Assembled right-hand side with preallocated scratch. Obtain via
/// [`assemble_closed_loop`]; drive with [`ClosedLoop::rhs_into`].
pub struct ClosedLoop<'a> {
    design: &'a ScenarioDesign,
    q: usize,
    x_offsets: Vec<usize>,
    x_invs: Vec<Mat>,
    scratch: ControlScratch,
    sigma: Vec<f64>,
    s_eta: Vec<f64>,
}

struct ControlScratch {
    xt: Vec<f64>,
    chain: Vec<f64>,
    w: Vec<f64>,
    u: Vec<f64>,
}

impl ControlScratch {
    fn for_design(design: &ScenarioDesign) -> ControlScratch {
        let max_n = design.agents.iter().map(|a| a.model.state_dim()).max().unwrap_or(0);
        let max_m = design.agents.iter().map(|a| a.model.input_dim()).max().unwrap_or(0);
        ControlScratch {
            xt: vec![0.0; max_n],
            chain: vec![0.0; max_n],
            w: vec![0.0; max_m],
            u: vec![0.0; max_m],
        }
    }
}

/// Inverts each agent's input gain once so the runtime law is matrix-free.
fn invert_input_gains(design: &ScenarioDesign) -> Result<Vec<Mat>, SimError> {
    let mut out = Vec::with_capacity(design.agents.len());
    for (i, agent) in design.agents.iter().enumerate() {
        let x = &agent.normal_form.x_mat;
        let m = x.rows();
        let mut inv = Mat::zeros(m, m);
        for j in 0..m {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            let col = solve_linear(x, &e).map_err(|_| {
                SimError::DimensionMismatch(format!("agent {i} input gain is singular"))
            })?;
            for r in 0..m {
                inv.set(r, j, col[r]);
            }
        }
        out.push(inv);
    }
    Ok(out)
}

/// Chain feedback for one agent, writing the input into `scratch.u`:
/// x̃ = x − Πη, chain = T·x̃, per channel ω_r = −Σ_k(ψ sig^γ + ψ̄ sig^γ̄),
/// u = X⁻¹(ω − U·x̃) + Γη.
fn control_into(agent: &AgentDesign, x_inv: &Mat, x: &[f64], eta: &[f64], s: &mut ControlScratch) {
    let n = agent.model.state_dim();
    let m = agent.model.input_dim();
    let nf = &agent.normal_form;
    let xt = &mut s.xt[..n];
    for i in 0..n {
        let mut acc = x[i];
        for l in 0..eta.len() {
            acc -= agent.regulator.pi.at(i, l) * eta[l];
        }
        xt[i] = acc;
    }
    let chain = &mut s.chain[..n];
    nf.t_mat.matvec_into(xt, chain);
    let w = &mut s.w[..m];
    let mut off = 0usize;
    for (r, ch) in agent.channels.iter().enumerate() {
        let mut omega = 0.0;
        for k in 0..ch.order {
            let rho = chain[off + k];
            omega -= ch.psi[k] * sig_scalar(rho, ch.gamma[k])
                + ch.psi_bar[k] * sig_scalar(rho, ch.gamma_bar[k]);
        }
        let mut drift = 0.0;
        for i in 0..n {
            drift += nf.u_mat.at(r, i) * xt[i];
        }
        w[r] = omega - drift;
        off += ch.order;
    }
    let u = &mut s.u[..m];
    x_inv.matvec_into(w, u);
    for r in 0..m {
        for l in 0..eta.len() {
            u[r] += agent.regulator.gamma.at(r, l) * eta[l];
        }
    }
}

/// Reference entry point for the feedback law of a synthesized design.
pub fn control_input(
    design: &ScenarioDesign,
    agent_index: usize,
    x: &[f64],
    eta: &[f64],
) -> Result<Vec<f64>, SimError> {
    design.validate()?;
    let agent = design.agents.get(agent_index).ok_or_else(|| {
        SimError::DimensionMismatch(format!("agent index {agent_index} out of range"))
    })?;
    if x.len() != agent.model.state_dim() || eta.len() != design.exo.dim() {
        return Err(SimError::DimensionMismatch(
            "state or observer slice has the wrong length".into(),
        ));
    }
    let x_invs = invert_input_gains(design)?;
    let mut scratch = ControlScratch::for_design(design);
    control_into(agent, &x_invs[agent_index], x, eta, &mut scratch);
    Ok(scratch.u[..agent.model.input_dim()].to_vec())
}

/// Validates the design and prepares the stacked right-hand side over
/// `[v; η_1..η_N; x_1..x_N]`.
pub fn assemble_closed_loop(design: &ScenarioDesign) -> Result<ClosedLoop<'_>, SimError> {
    design.validate()?;
    let q = design.exo.dim();
    let n_agents = design.agents.len();
    let mut x_offsets = Vec::with_capacity(n_agents);
    let mut off = q + n_agents * q;
    for agent in &design.agents {
        x_offsets.push(off);
        off += agent.model.state_dim();
    }
    Ok(ClosedLoop {
        design,
        q,
        x_offsets,
        x_invs: invert_input_gains(design)?,
        scratch: ControlScratch::for_design(design),
        sigma: vec![0.0; q],
        s_eta: vec![0.0; q],
    })
}

impl ClosedLoop<'_> {
    pub fn state_dim(&self) -> usize {
        self.design.state_dim()
    }

    /// Stacked derivative at time `t`; the link state is read from the
    /// schedule, and integration steps are aligned with its switches.
    pub fn rhs_into(&mut self, state: &[f64], t: f64, out: &mut [f64]) {
        let q = self.q;
        let design = self.design;
        let th = theta(&design.schedule, t);
        let v = &state[..q];
        design.exo.s().matvec_into(v, &mut out[..q]);

        let n_agents = design.agents.len();
        let mu1 = design.observer.mu1;
        let mu2 = design.observer.mu2;
        let mu3 = design.observer.mu3;
        let alpha = design.observer.alpha;
        let beta = design.observer.beta;
        for i in 0..n_agents {
            let eta_i = &state[q + i * q..q + (i + 1) * q];
            let node = i + 1;
            for l in 0..q {
                self.sigma[l] = 0.0;
            }
            for j in 0..n_agents {
                let w = design.graph.weight(node, j + 1);
                if w > 0.0 {
                    let eta_j = &state[q + j * q..q + (j + 1) * q];
                    for l in 0..q {
                        self.sigma[l] += w * (eta_i[l] - eta_j[l]);
                    }
                }
            }
            let w0 = design.graph.weight(node, 0);
            if w0 > 0.0 {
                for l in 0..q {
                    self.sigma[l] += w0 * (eta_i[l] - v[l]);
                }
            }
            design.exo.s().matvec_into(eta_i, &mut self.s_eta);
            let d = &mut out[q + i * q..q + (i + 1) * q];
            for l in 0..q {
                let s = th * self.sigma[l];
                d[l] = self.s_eta[l]
                    - mu1 * s
                    - mu2 * sig_scalar(s, alpha)
                    - mu3 * sig_scalar(s, beta);
            }
        }

        for i in 0..n_agents {
            let agent = &design.agents[i];
            let n = agent.model.state_dim();
            let xo = self.x_offsets[i];
            let x_i = &state[xo..xo + n];
            let eta_i = &state[q + i * q..q + (i + 1) * q];
            control_into(agent, &self.x_invs[i], x_i, eta_i, &mut self.scratch);
            let m = agent.model.input_dim();
            let a = agent.model.a();
            let b = agent.model.b();
            let e = agent.model.e();
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += a.at(r, c) * x_i[c];
                }
                for c in 0..m {
                    acc += b.at(r, c) * self.scratch.u[c];
                }
                for c in 0..q {
                    acc += e.at(r, c) * v[c];
                }
                out[xo + r] = acc;
            }
        }
    }
}

/// Integration window and settling tolerance for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub t0: f64,
    pub horizon: f64,
    pub h: f64,
    pub settle_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { t0: 0.0, horizon: 160.0, h: 1e-3, settle_tol: 1e-3 }
    }
}

/// Earliest settling instants at the run's tolerance; `None` means the norm
/// never stayed below tolerance through the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettlingSummary {
    pub observer_settle: Option<f64>,
    pub output_settle: Option<f64>,
    pub tol: f64,
}

/// Full run output: the stacked trajectory plus derived per-sample series.
/// All series share the trajectory's length.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub state_dim: usize,
    pub exo_dim: usize,
    pub agent_state_dims: Vec<usize>,
    pub agent_output_dims: Vec<usize>,
    pub agent_input_dims: Vec<usize>,
    /// Observer errors `η_i − v`, stride `N·q`.
    pub eta_err: Vec<f64>,
    /// Regulated outputs `e_i`, stride `Σ p_i`.
    pub outputs: Vec<f64>,
    /// Control inputs `u_i`, stride `Σ m_i`.
    pub inputs: Vec<f64>,
    /// Lyapunov diagnostic over the stacked neighborhood errors.
    pub lyapunov: Vec<f64>,
    /// Link state at each sample.
    pub theta: Vec<f64>,
    /// `max_i ‖η_i − v‖` per sample.
    pub observer_norm: Vec<f64>,
    /// `max_i ‖e_i‖` per sample.
    pub output_norm: Vec<f64>,
    pub settling: SettlingSummary,
}

impl SimulationResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, idx: usize) -> &[f64] {
        &self.states[idx * self.state_dim..(idx + 1) * self.state_dim]
    }
}

/// Earliest grid time `τ` such that `norms` stays strictly below `tol` from
/// `τ` through the end; `None` if the final sample still violates.
pub fn settling_time(times: &[f64], norms: &[f64], tol: f64) -> Option<f64> {
    assert_eq!(times.len(), norms.len(), "series lengths must agree");
    let mut idx = None;
    for k in (0..norms.len()).rev() {
        if norms[k] >= tol {
            break;
        }
        idx = Some(k);
    }
    idx.map(|k| times[k])
}

/// Integrates the closed loop from `initial_state = [v0; η0; x0]` and
/// derives every reported series. Steps are aligned to the schedule's attack
/// boundaries so the link state is constant across each step.
pub fn run(
    design: &ScenarioDesign,
    initial_state: &[f64],
    opts: &RunOptions,
) -> Result<SimulationResult, SimError> {
    let mut closed_loop = assemble_closed_loop(design)?;
    let dim = closed_loop.state_dim();
    if initial_state.len() != dim {
        return Err(SimError::DimensionMismatch(format!(
            "initial state has {} entries, design needs {dim}",
            initial_state.len()
        )));
    }
    if !(opts.h > 0.0) {
        return Err(SimError::DimensionMismatch(format!(
            "step size must be positive, got {}",
            opts.h
        )));
    }

    let breakpoints = design.schedule.switch_times();
    let step_estimate = ((opts.horizon - opts.t0) / opts.h).ceil() as usize
        + breakpoints.len()
        + 2;
    let mut times: Vec<f64> = Vec::with_capacity(step_estimate);
    let mut states: Vec<f64> = Vec::with_capacity(step_estimate * dim);
    integrate_fixed_rk4_each(
        &mut |s: &[f64], t: f64, o: &mut [f64]| closed_loop.rhs_into(s, t, o),
        initial_state,
        opts.t0,
        opts.horizon,
        opts.h,
        &breakpoints,
        |t, x| {
            times.push(t);
            states.extend_from_slice(x);
        },
    )
    .map_err(|e| match e {
        NumericsError::NonFiniteState { at } => SimError::NonFiniteState { at },
        other => SimError::DimensionMismatch(other.to_string()),
    })?;

    // Derived series in one pass over the stored samples.
    let q = design.exo.dim();
    let n_agents = design.agents.len();
    let p_total: usize = design.agents.iter().map(|a| a.model.output_dim()).sum();
    let m_total: usize = design.agents.iter().map(|a| a.model.input_dim()).sum();
    let steps = times.len();
    let mut eta_err = vec![0.0; steps * n_agents * q];
    let mut outputs = vec![0.0; steps * p_total];
    let mut inputs = vec![0.0; steps * m_total];
    let mut lyap = vec![0.0; steps];
    let mut theta_series = vec![0.0; steps];
    let mut observer_norm = vec![0.0; steps];
    let mut output_norm = vec![0.0; steps];
    let mut sigma_stack = vec![0.0; n_agents * q];
    let h_mat = design.coupling.matrix();

    for k in 0..steps {
        let state = &states[k * dim..(k + 1) * dim];
        let v = &state[..q];
        let err_row = &mut eta_err[k * n_agents * q..(k + 1) * n_agents * q];
        let mut obs_max = 0.0_f64;
        for i in 0..n_agents {
            let eta_i = &state[q + i * q..q + (i + 1) * q];
            let mut sq = 0.0;
            for l in 0..q {
                let d = eta_i[l] - v[l];
                err_row[i * q + l] = d;
                sq += d * d;
            }
            obs_max = obs_max.max(sq.sqrt());
        }
        observer_norm[k] = obs_max;

        // ς = (H⊗I_q)·η̃ feeds the Lyapunov diagnostic.
        if n_agents > 0 {
            sigma_stack.fill(0.0);
            for i in 0..n_agents {
                for j in 0..n_agents {
                    let w = h_mat.at(i, j);
                    if w != 0.0 {
                        for l in 0..q {
                            sigma_stack[i * q + l] += w * err_row[j * q + l];
                        }
                    }
                }
            }
            lyap[k] = lyapunov_v(&sigma_stack, &design.gain_k, &design.observer);
        }
        theta_series[k] = theta(&design.schedule, times[k]);

        let mut p_off = 0usize;
        let mut m_off = 0usize;
        let mut out_max = 0.0_f64;
        for (i, agent) in design.agents.iter().enumerate() {
            let n = agent.model.state_dim();
            let xo = closed_loop.x_offsets[i];
            let x_i = &state[xo..xo + n];
            let eta_i = &state[q + i * q..q + (i + 1) * q];
            let p = agent.model.output_dim();
            let mut sq = 0.0;
            for r in 0..p {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += agent.model.c().at(r, c) * x_i[c];
                }
                for c in 0..q {
                    acc += agent.model.f().at(r, c) * v[c];
                }
                outputs[k * p_total + p_off + r] = acc;
                sq += acc * acc;
            }
            out_max = out_max.max(sq.sqrt());
            p_off += p;

            control_into(agent, &closed_loop.x_invs[i], x_i, eta_i, &mut closed_loop.scratch);
            let m = agent.model.input_dim();
            inputs[k * m_total + m_off..k * m_total + m_off + m]
                .copy_from_slice(&closed_loop.scratch.u[..m]);
            m_off += m;
        }
        output_norm[k] = out_max;
    }

    let settling = SettlingSummary {
        observer_settle: settling_time(&times, &observer_norm, opts.settle_tol),
        output_settle: settling_time(&times, &output_norm, opts.settle_tol),
        tol: opts.settle_tol,
    };

    Ok(SimulationResult {
        times,
        states,
        state_dim: dim,
        exo_dim: q,
        agent_state_dims: design.agents.iter().map(|a| a.model.state_dim()).collect(),
        agent_output_dims: design.agents.iter().map(|a| a.model.output_dim()).collect(),
        agent_input_dims: design.agents.iter().map(|a| a.model.input_dim()).collect(),
        eta_err,
        outputs,
        inputs,
        lyapunov: lyap,
        theta: theta_series,
        observer_norm,
        output_norm,
        settling,
    })
}

/// Estimation layer integrated on its own: times and the worst per-agent
/// estimation error `max_i ‖η_i − v‖` at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverOnlyRun {
    pub times: Vec<f64>,
    pub worst_err: Vec<f64>,
}

/// Integrates the reference and observer states alone from
/// `initial = [v0; η0]`, with `params` in place of the design's observer
/// gains. The estimation dynamics never read the plant, so this reproduces
/// the observer blocks of a full closed-loop run at a fraction of the cost;
/// gain studies and baseline comparisons use it to sweep parameters without
/// rebuilding agent designs.
pub fn run_observer_only(
    design: &ScenarioDesign,
    params: &ObserverParams,
    initial: &[f64],
    opts: &RunOptions,
) -> Result<ObserverOnlyRun, SimError> {
    let q = design.exo.dim();
    let n_agents = design.agents.len();
    let dim = q + n_agents * q;
    if initial.len() != dim {
        return Err(SimError::DimensionMismatch(format!(
            "initial state has {} entries, observer stack needs {dim}",
            initial.len()
        )));
    }
    if !(opts.h > 0.0) {
        return Err(SimError::DimensionMismatch(format!(
            "step size must be positive, got {}",
            opts.h
        )));
    }

    let mut sigma = vec![0.0; q];
    let mut s_eta = vec![0.0; q];
    let (mu1, mu2, mu3, alpha, beta) =
        (params.mu1, params.mu2, params.mu3, params.alpha, params.beta);
    let mut rhs = |state: &[f64], t: f64, out: &mut [f64]| {
        let th = theta(&design.schedule, t);
        let v = &state[..q];
        design.exo.s().matvec_into(v, &mut out[..q]);
        for i in 0..n_agents {
            let eta_i = &state[q + i * q..q + (i + 1) * q];
            let node = i + 1;
            for l in 0..q {
                sigma[l] = 0.0;
            }
            for j in 0..n_agents {
                let w = design.graph.weight(node, j + 1);
                if w > 0.0 {
                    let eta_j = &state[q + j * q..q + (j + 1) * q];
                    for l in 0..q {
                        sigma[l] += w * (eta_i[l] - eta_j[l]);
                    }
                }
            }
            let w0 = design.graph.weight(node, 0);
            if w0 > 0.0 {
                for l in 0..q {
                    sigma[l] += w0 * (eta_i[l] - v[l]);
                }
            }
            design.exo.s().matvec_into(eta_i, &mut s_eta);
            let d = &mut out[q + i * q..q + (i + 1) * q];
            for l in 0..q {
                let s = th * sigma[l];
                d[l] = s_eta[l]
                    - mu1 * s
                    - mu2 * sig_scalar(s, alpha)
                    - mu3 * sig_scalar(s, beta);
            }
        }
    };

    let mut times = Vec::new();
    let mut worst_err = Vec::new();
    integrate_fixed_rk4_each(
        &mut rhs,
        initial,
        opts.t0,
        opts.horizon,
        opts.h,
        &design.schedule.switch_times(),
        |t, x| {
            let v = &x[..q];
            let mut worst = 0.0_f64;
            for i in 0..n_agents {
                let mut sq = 0.0;
                for l in 0..q {
                    let d = x[q + i * q + l] - v[l];
                    sq += d * d;
                }
                worst = worst.max(sq.sqrt());
            }
            times.push(t);
            worst_err.push(worst);
        },
    )
    .map_err(|e| match e {
        NumericsError::NonFiniteState { at } => SimError::NonFiniteState { at },
        other => SimError::DimensionMismatch(other.to_string()),
    })?;
    Ok(ObserverOnlyRun { times, worst_err })
}

/// Worst difference-quotient slack of the Lyapunov diagnostic per regime;
/// nonpositive slacks mean every sampled step satisfied its decay/growth
/// inequality within the numerical margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovReport {
    pub healthy_worst_slack: f64,
    pub attacked_worst_slack: f64,
    pub healthy_pairs: usize,
    pub attacked_pairs: usize,
}

impl LyapunovReport {
    pub fn passes(&self) -> bool {
        self.healthy_worst_slack <= 0.0 && self.attacked_worst_slack <= 0.0
    }
}

/// Checks `ΔV/Δt ≤ −c₁/(5c₂)·V + ε` on healthy steps and `ΔV/Δt ≤ c₅·V + ε`
/// on attacked steps, with `ε = 1e−2·(1+V)` absorbing discretization error.
/// Steps never straddle a switch, so each pair belongs to one regime.
pub fn verify_lyapunov_bounds(
    result: &SimulationResult,
    constants: &ObserverConstants,
    schedule: &AttackSchedule,
) -> LyapunovReport {
    let decay = constants.c1 / (5.0 * constants.c2);
    let growth = constants.c5;
    let mut report = LyapunovReport {
        healthy_worst_slack: f64::NEG_INFINITY,
        attacked_worst_slack: f64::NEG_INFINITY,
        healthy_pairs: 0,
        attacked_pairs: 0,
    };
    for k in 0..result.times.len().saturating_sub(1) {
        let dt = result.times[k + 1] - result.times[k];
        if dt <= 0.0 {
            continue;
        }
        let v0 = result.lyapunov[k];
        let v1 = result.lyapunov[k + 1];
        let quotient = (v1 - v0) / dt;
        let eps = 1e-2 * (1.0 + v0);
        // Half-open attack intervals make the left endpoint's regime govern
        // the whole step.
        if theta(schedule, result.times[k]) > 0.5 {
            let slack = quotient - (-decay * v0 + eps);
            report.healthy_worst_slack = report.healthy_worst_slack.max(slack);
            report.healthy_pairs += 1;
        } else {
            let slack = quotient - (growth * v0 + eps);
            report.attacked_worst_slack = report.attacked_worst_slack.max(slack);
            report.attacked_pairs += 1;
        }
    }
    report
}

/// Streams the run as CSV: `t`, exosystem components, then per agent the
/// observer-error, output, and input components, then the Lyapunov value and
/// link state. Nine significant digits throughout.
pub fn write_csv<W: std::io::Write>(
    result: &SimulationResult,
    w: &mut W,
) -> std::io::Result<()> {
    let q = result.exo_dim;
    let n_agents = result.agent_state_dims.len();
    let mut header = String::from("t");
    for l in 1..=q {
        header.push_str(&format!(",v{l}"));
    }
    for i in 1..=n_agents {
        for l in 1..=q {
            header.push_str(&format!(",eta_err{i}_{l}"));
        }
        for l in 1..=result.agent_output_dims[i - 1] {
            header.push_str(&format!(",e{i}_{l}"));
        }
        for l in 1..=result.agent_input_dims[i - 1] {
            header.push_str(&format!(",u{i}_{l}"));
        }
    }
    header.push_str(",V,theta");
    writeln!(w, "{header}")?;

    let p_total: usize = result.agent_output_dims.iter().sum();
    let m_total: usize = result.agent_input_dims.iter().sum();
    let mut line = String::new();
    for k in 0..result.len() {
        line.clear();
        line.push_str(&format!("{:.8e}", result.times[k]));
        let state = result.state(k);
        for l in 0..q {
            line.push_str(&format!(",{:.8e}", state[l]));
        }
        let mut p_off = 0usize;
        let mut m_off = 0usize;
        for i in 0..n_agents {
            for l in 0..q {
                line.push_str(&format!(",{:.8e}", result.eta_err[k * n_agents * q + i * q + l]));
            }
            for l in 0..result.agent_output_dims[i] {
                line.push_str(&format!(",{:.8e}", result.outputs[k * p_total + p_off + l]));
            }
            p_off += result.agent_output_dims[i];
            for l in 0..result.agent_input_dims[i] {
                line.push_str(&format!(",{:.8e}", result.inputs[k * m_total + m_off + l]));
            }
            m_off += result.agent_input_dims[i];
        }
        line.push_str(&format!(",{:.8e},{:.8e}", result.lyapunov[k], result.theta[k]));
        writeln!(w, "{line}")?;
    }
    Ok(())
}
