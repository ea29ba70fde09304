//! Declarative scenario configuration and the synthesis pipeline that turns
//! it into a runnable [`ScenarioDesign`]: graph wiring, gain construction,
//! regulator solves, chain coordinates, channel designs, observer
//! certification, and the attack schedule. Also home of the bundled
//! five-pendulum benchmark and the plain-text run summary.

use crate::dos::{generate_schedule, validate_budget, AttackBudget, AttackSchedule, BudgetVerdict};
use crate::gains::{design_channel, total_settling_bound, ChannelGains};
use crate::graph::{build_h_matrix, compute_gain_matrix_k, DirectedGraph, GainMatrixK};
use crate::numerics::{spectral_norm, Mat};
use crate::observer::{certify, ObserverParams};
use crate::regulation::{
    luenberger_normal_form, solve_regulator_equations, AgentModel, ExosystemModel,
};
use crate::sim::{AgentDesign, RunOptions, ScenarioDesign, SimulationResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    /// The configuration is self-inconsistent; carries the offending field.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    /// The configuration parses but a design step cannot be completed.
    #[error("{field}: {message}")]
    Synthesis { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.to_string(), message: message.into() }
}

fn synthesis(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Synthesis { field: field.to_string(), message: message.into() }
}

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub node_count: usize,
    pub edges: Vec<EdgeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentMatricesConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitAgentsConfig {
    pub models: Vec<AgentMatricesConfig>,
}

/// Agents come either from a named parametric family or as raw matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentsConfig {
    Generator(GeneratorConfig),
    Explicit(ExplicitAgentsConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExosystemConfig {
    pub s: Vec<Vec<f64>>,
    pub v0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Feedback coefficients for every chain of a given length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSetConfig {
    pub order: usize,
    pub psi: Vec<f64>,
    pub psi_bar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub gamma_terminal: f64,
    pub gamma_bar_terminal: f64,
    pub q_scale: f64,
    pub q_bar_scale: f64,
    pub coefficients: Vec<CoefficientSetConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub nu_d_seconds: f64,
    pub p_d_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitScheduleConfig {
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedScheduleConfig {
    pub seed: u64,
    pub mean_on_seconds: f64,
    pub mean_off_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Explicit(ExplicitScheduleConfig),
    Generated(GeneratedScheduleConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t0_seconds: f64,
    pub horizon_seconds: f64,
    pub h_seconds: f64,
    pub settle_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { t0_seconds: 0.0, horizon_seconds: 160.0, h_seconds: 1e-3, settle_tol: 1e-3 }
    }
}

/// Initial conditions for observers and plants; omitted blocks start at zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub eta: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub x: Option<Vec<Vec<f64>>>,
}

/// Complete declarative description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub graph: GraphConfig,
    /// Explicit diagonal consensus gain; omitted means constructive design.
    #[serde(default)]
    pub gain_diagonal: Option<Vec<f64>>,
    pub agents: AgentsConfig,
    pub exosystem: ExosystemConfig,
    pub observer: ObserverConfig,
    pub controller: ControllerConfig,
    pub budget: BudgetConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<ScenarioConfig, ScenarioError> {
        serde_json::from_str(text)
            .map_err(|e| invalid("config", format!("malformed document: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

// ---------------------------------------------------------------------------
// Inverted-pendulum family
// ---------------------------------------------------------------------------

/// Cart-pendulum physical parameters; the fleet is indexed so the whole
/// benchmark is reproducible from small integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub m1: f64,
    pub m2: f64,
    pub l: f64,
    pub f: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub g: f64,
}

/// Member `index` (1-based) of the pendulum family: masses, arm length, and
/// disturbance couplings all scale linearly with the index.
pub fn pendulum_params(index: usize) -> PendulumParams {
    let i = index as f64;
    PendulumParams {
        m1: 2.0 * i,
        m2: 0.5 * i,
        l: i,
        f: 0.2,
        chi1: 0.3 * i,
        chi2: 0.5 * i,
        g: 9.8,
    }
}

/// Linearized cart-pendulum dynamics with a rotating-disturbance input and
/// the tracking output `position − l·angle + reference`.
pub fn pendulum_agent(p: &PendulumParams) -> AgentModel {
    let lm1 = p.l * p.m1;
    let a = Mat::from_rows(&[
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, p.g, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![0.0, p.f / lm1, (p.m1 + p.m2) * p.g / lm1, -p.f / p.m1],
    ]);
    let b = Mat::from_rows(&[vec![0.0], vec![0.0], vec![0.0], vec![1.0 / lm1]]);
    let c = Mat::from_rows(&[vec![1.0, 0.0, -p.l, 0.0]]);
    let e = Mat::from_rows(&[
        vec![0.0, 0.0],
        vec![(p.chi1 + p.chi2) / p.m1, 0.0],
        vec![0.0, 0.0],
        vec![p.chi2 / lm1, 0.0],
    ]);
    let f = Mat::from_rows(&[vec![1.0, 2.0]]);
    AgentModel::new(a, b, c, e, f).expect("pendulum family matrices are consistent")
}

// ---------------------------------------------------------------------------
// Bundled benchmark
// ---------------------------------------------------------------------------

/// Plant initial states used by the benchmark's headline run.
pub const BENCHMARK_X0: [[f64; 4]; 5] = [
    [9.7014, -7.0776, 4.2279, -2.6172],
    [-4.4514, -3.6204, 3.8463, -2.5113],
    [3.9321, 8.9157, -7.4931, -0.5721],
    [-2.5113, 4.0533, 4.4166, -4.4445],
    [-3.1023, 6.4695, 4.3026, 4.3101],
];

/// Exosystem initial state for the benchmark's headline run.
pub const BENCHMARK_V0: [f64; 2] = [1.7135, -2.3265];

/// The bundled five-pendulum study: rotating exosystem, a rooted six-node
/// communication graph, uniform consensus gain 1.78, fixed-time observer
/// gains, shared fourth-order chain coefficients, and a generated attack
/// schedule honoring the (0.2 s, 4.9) budget.
pub fn benchmark_config(seed: u64) -> ScenarioConfig {
    let edges = [(0, 1), (0, 2), (0, 3), (1, 5), (3, 5), (2, 4), (5, 4)]
        .iter()
        .map(|&(from, to)| EdgeConfig { from, to, weight: 1.0 })
        .collect();
    ScenarioConfig {
        graph: GraphConfig { node_count: 6, edges },
        gain_diagonal: Some(vec![1.78; 5]),
        agents: AgentsConfig::Generator(GeneratorConfig {
            name: "inverted_pendulum".to_string(),
            count: 5,
        }),
        exosystem: ExosystemConfig {
            s: vec![vec![0.0, -0.2], vec![0.2, 0.0]],
            v0: BENCHMARK_V0.to_vec(),
        },
        observer: ObserverConfig { mu1: 7.5, mu2: 7.0, mu3: 11.0, alpha: 0.7, beta: 1.45 },
        controller: ControllerConfig {
            gamma_terminal: 0.6,
            gamma_bar_terminal: 1.2,
            q_scale: 0.02,
            q_bar_scale: 0.02,
            coefficients: vec![CoefficientSetConfig {
                order: 4,
                psi: vec![2.0, 4.5, 4.5, 1.8],
                psi_bar: vec![1.0, 4.0, 5.0, 4.0],
            }],
        },
        budget: BudgetConfig { nu_d_seconds: 0.2, p_d_ratio: 4.9 },
        schedule: ScheduleConfig::Generated(GeneratedScheduleConfig {
            seed,
            mean_on_seconds: 0.7,
            mean_off_seconds: 3.5,
        }),
        run: RunConfig::default(),
        initial: InitialConfig {
            eta: None,
            x: Some(BENCHMARK_X0.iter().map(|r| r.to_vec()).collect()),
        },
        out_dir: None,
    }
}

// ---------------------------------------------------------------------------
// Synthesis pipeline
// ---------------------------------------------------------------------------

/// A fully synthesized scenario plus everything a runner needs. When the
/// observer cannot be certified the design still builds (for baselines and
/// failure studies) and `certificate_issue` says why.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltScenario {
    pub design: ScenarioDesign,
    pub initial_state: Vec<f64>,
    pub run: RunOptions,
    pub certificate_issue: Option<String>,
    pub out_dir: Option<String>,
}

impl BuiltScenario {
    /// Chain-feedback settling bound and total bound, available once the
    /// observer certificate exists. Returns `(t_c, t_a)`.
    pub fn settling_bounds(&self) -> Option<(f64, f64)> {
        let cert = self.design.certificate.as_ref()?;
        let bounds: Vec<f64> = self
            .design
            .agents
            .iter()
            .flat_map(|a| a.channels.iter().map(|c| c.t_c_channel))
            .collect();
        if bounds.is_empty() {
            return None;
        }
        Some(total_settling_bound(cert.times.t_o, &bounds))
    }
}

fn mat_from_config(field: &str, rows: &[Vec<f64>]) -> Result<Mat, ScenarioError> {
    if rows.is_empty() {
        return Err(invalid(field, "matrix needs at least one row"));
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(invalid(field, "matrix needs at least one column"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(invalid(
                field,
                format!("row {i} has {} entries, expected {cols}", r.len()),
            ));
        }
        if let Some(x) = r.iter().find(|x| !x.is_finite()) {
            return Err(invalid(field, format!("row {i} contains non-finite entry {x}")));
        }
    }
    Ok(Mat::from_rows(rows))
}

fn build_models(config: &ScenarioConfig) -> Result<Vec<AgentModel>, ScenarioError> {
    match &config.agents {
        AgentsConfig::Generator(g) => {
            if g.name != "inverted_pendulum" {
                return Err(invalid(
                    "agents.generator.name",
                    format!("unknown generator '{}', expected 'inverted_pendulum'", g.name),
                ));
            }
            Ok((1..=g.count).map(|i| pendulum_agent(&pendulum_params(i))).collect())
        }
        AgentsConfig::Explicit(ex) => {
            let mut models = Vec::with_capacity(ex.models.len());
            for (i, m) in ex.models.iter().enumerate() {
                let field = format!("agents.explicit.models[{i}]");
                let a = mat_from_config(&format!("{field}.a"), &m.a)?;
                let b = mat_from_config(&format!("{field}.b"), &m.b)?;
                let c = mat_from_config(&format!("{field}.c"), &m.c)?;
                let e = mat_from_config(&format!("{field}.e"), &m.e)?;
                let f = mat_from_config(&format!("{field}.f"), &m.f)?;
                models.push(
                    AgentModel::new(a, b, c, e, f)
                        .map_err(|err| invalid(&field, err.to_string()))?,
                );
            }
            Ok(models)
        }
    }
}

/// Turns a parsed configuration into a runnable design, surfacing the first
/// problem as a field-addressed error.
pub fn build_scenario(config: &ScenarioConfig) -> Result<BuiltScenario, ScenarioError> {
    // Graph and consensus gain.
    if config.graph.node_count == 0 {
        return Err(invalid("graph.node_count", "need at least the reference node"));
    }
    for (k, e) in config.graph.edges.iter().enumerate() {
        if e.from >= config.graph.node_count || e.to >= config.graph.node_count {
            return Err(invalid(
                &format!("graph.edges[{k}]"),
                format!(
                    "edge {} -> {} leaves the node range 0..{}",
                    e.from, e.to, config.graph.node_count
                ),
            ));
        }
    }
    let edge_list: Vec<(usize, usize, f64)> =
        config.graph.edges.iter().map(|e| (e.from, e.to, e.weight)).collect();
    let graph = DirectedGraph::from_edges(config.graph.node_count, &edge_list)
        .map_err(|e| invalid("graph.edges", e.to_string()))?;
    let coupling = build_h_matrix(&graph);
    let gain_k = match &config.gain_diagonal {
        Some(diag) => {
            let k = GainMatrixK::from_diagonal(&coupling, diag.clone())
                .map_err(|e| invalid("gain_diagonal", e.to_string()))?;
            if !k.is_certified() {
                return Err(synthesis(
                    "gain_diagonal",
                    format!(
                        "diagonal gain misses the positivity margin (slack {:.3e})",
                        k.lambda_min_slack()
                    ),
                ));
            }
            k
        }
        None => compute_gain_matrix_k(&coupling)
            .map_err(|e| synthesis("graph", e.to_string()))?,
    };

    // Exosystem.
    let s = mat_from_config("exosystem.s", &config.exosystem.s)?;
    if s.rows() != s.cols() {
        return Err(invalid("exosystem.s", "drift matrix must be square"));
    }
    let exo = ExosystemModel::new(s).map_err(|e| invalid("exosystem.s", e.to_string()))?;
    let q = exo.dim();
    if config.exosystem.v0.len() != q {
        return Err(invalid(
            "exosystem.v0",
            format!("has {} entries, drift matrix is {q}x{q}", config.exosystem.v0.len()),
        ));
    }

    // Agents and per-agent synthesis.
    let models = build_models(config)?;
    let n_agents = models.len();
    if graph.agent_count() != n_agents {
        return Err(invalid(
            "graph.node_count",
            format!(
                "graph serves {} agents but the scenario defines {n_agents}",
                graph.agent_count()
            ),
        ));
    }
    let ctl = &config.controller;
    if !(ctl.q_scale > 0.0) || !(ctl.q_bar_scale > 0.0) {
        return Err(invalid("controller.q_scale", "Lyapunov scales must be positive"));
    }
    let mut agents = Vec::with_capacity(n_agents);
    for (i, model) in models.into_iter().enumerate() {
        let field = format!("agents[{i}]");
        if model.exo_dim() != q {
            return Err(invalid(
                &field,
                format!("agent couples to a {}-dimensional exosystem, scenario has {q}", model.exo_dim()),
            ));
        }
        let regulator = solve_regulator_equations(&model, &exo)
            .map_err(|e| synthesis(&field, e.to_string()))?;
        let normal_form =
            luenberger_normal_form(&model).map_err(|e| synthesis(&field, e.to_string()))?;
        let mut channels: Vec<ChannelGains> = Vec::with_capacity(normal_form.indices.len());
        for (r, &order) in normal_form.indices.iter().enumerate() {
            let coeffs = ctl
                .coefficients
                .iter()
                .find(|c| c.order == order)
                .ok_or_else(|| {
                    invalid(
                        "controller.coefficients",
                        format!("no coefficient set for chain length {order} (agent {i} channel {r})"),
                    )
                })?;
            if coeffs.psi.len() != order || coeffs.psi_bar.len() != order {
                return Err(invalid(
                    "controller.coefficients",
                    format!("set for order {order} has wrong-length vectors"),
                ));
            }
            let channel = design_channel(
                coeffs.psi.clone(),
                coeffs.psi_bar.clone(),
                ctl.gamma_terminal,
                ctl.gamma_bar_terminal,
                Mat::identity(order).scale(ctl.q_scale),
                Mat::identity(order).scale(ctl.q_bar_scale),
            )
            .map_err(|e| synthesis(&format!("{field}.channels[{r}]"), e.to_string()))?;
            channels.push(channel);
        }
        agents.push(AgentDesign { model, regulator, normal_form, channels });
    }

    // Attack budget and schedule.
    let budget = AttackBudget::new(config.budget.nu_d_seconds, config.budget.p_d_ratio)
        .map_err(|e| invalid("budget", e.to_string()))?;
    let run = RunOptions {
        t0: config.run.t0_seconds,
        horizon: config.run.horizon_seconds,
        h: config.run.h_seconds,
        settle_tol: config.run.settle_tol,
    };
    if !(run.horizon > run.t0) {
        return Err(invalid("run.horizon_seconds", "horizon must exceed the start time"));
    }
    if !(run.h > 0.0) {
        return Err(invalid("run.h_seconds", "step size must be positive"));
    }
    if !(run.settle_tol > 0.0) {
        return Err(invalid("run.settle_tol", "tolerance must be positive"));
    }
    let schedule = match &config.schedule {
        ScheduleConfig::Explicit(ex) => {
            let schedule = AttackSchedule::new(ex.intervals.clone(), run.horizon)
                .map_err(|e| invalid("schedule.explicit.intervals", e.to_string()))?;
            match validate_budget(&schedule, &budget, run.t0) {
                BudgetVerdict::Valid => schedule,
                BudgetVerdict::Violation { at, excess } => {
                    return Err(invalid(
                        "schedule.explicit.intervals",
                        format!("breaks the attack budget at t = {at} by {excess:.6} s"),
                    ));
                }
            }
        }
        ScheduleConfig::Generated(g) => generate_schedule(
            g.seed,
            &budget,
            run.horizon,
            g.mean_on_seconds,
            g.mean_off_seconds,
        )
        .map_err(|e| invalid("schedule.generated", e.to_string()))?,
    };

    // Observer certificate; failures downgrade to an explained absence so
    // baseline designs stay runnable.
    let observer = ObserverParams {
        mu1: config.observer.mu1,
        mu2: config.observer.mu2,
        mu3: config.observer.mu3,
        alpha: config.observer.alpha,
        beta: config.observer.beta,
    };
    let (certificate, certificate_issue) = if n_agents == 0 {
        (None, Some("no agents to certify".to_string()))
    } else {
        match certify(&observer, &gain_k, n_agents, q, spectral_norm(exo.s()), &budget, run.t0) {
            Ok(cert) => (Some(cert), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    // Initial stacked state [v; η...; x...].
    let mut initial_state = Vec::new();
    initial_state.extend_from_slice(&config.exosystem.v0);
    match &config.initial.eta {
        Some(eta) => {
            if eta.len() != n_agents {
                return Err(invalid(
                    "initial.eta",
                    format!("has {} blocks for {n_agents} agents", eta.len()),
                ));
            }
            for (i, block) in eta.iter().enumerate() {
                if block.len() != q {
                    return Err(invalid(
                        &format!("initial.eta[{i}]"),
                        format!("has {} entries, observer state is {q}-dimensional", block.len()),
                    ));
                }
                initial_state.extend_from_slice(block);
            }
        }
        None => initial_state.extend(std::iter::repeat_n(0.0, n_agents * q)),
    }
    match &config.initial.x {
        Some(x) => {
            if x.len() != n_agents {
                return Err(invalid(
                    "initial.x",
                    format!("has {} blocks for {n_agents} agents", x.len()),
                ));
            }
            for (i, block) in x.iter().enumerate() {
                let n = agents[i].model.state_dim();
                if block.len() != n {
                    return Err(invalid(
                        &format!("initial.x[{i}]"),
                        format!("has {} entries, agent state is {n}-dimensional", block.len()),
                    ));
                }
                initial_state.extend_from_slice(block);
            }
        }
        None => {
            let total: usize = agents.iter().map(|a| a.model.state_dim()).sum();
            initial_state.extend(std::iter::repeat_n(0.0, total));
        }
    }

    let design = ScenarioDesign {
        graph,
        coupling,
        gain_k,
        exo,
        observer,
        certificate,
        agents,
        schedule,
        budget,
    };
    Ok(BuiltScenario {
        design,
        initial_state,
        run,
        certificate_issue,
        out_dir: config.out_dir.clone(),
    })
}

// ---------------------------------------------------------------------------
// Plain-text summary
// ---------------------------------------------------------------------------

/// Writes the human-readable run summary: settling outcomes, certificate
/// constants and settling bounds when available, and schedule statistics.
pub fn write_summary<W: std::io::Write>(
    built: &BuiltScenario,
    result: &SimulationResult,
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "agents: {}", built.design.agents.len())?;
    writeln!(w, "stacked_dimension: {}", built.design.state_dim())?;
    writeln!(w, "horizon_seconds: {}", built.run.horizon)?;
    writeln!(w, "step_seconds: {}", built.run.h)?;
    writeln!(w, "settle_tolerance: {}", result.settling.tol)?;
    match result.settling.observer_settle {
        Some(t) => writeln!(w, "observer_settle_seconds: {t:.6}")?,
        None => writeln!(w, "observer_settle_seconds: not settled within horizon")?,
    }
    match result.settling.output_settle {
        Some(t) => writeln!(w, "output_settle_seconds: {t:.6}")?,
        None => writeln!(w, "output_settle_seconds: not settled within horizon")?,
    }
    let attacked: f64 = built
        .design
        .schedule
        .intervals()
        .iter()
        .map(|&(s, e)| e - s)
        .sum();
    writeln!(w, "attack_intervals: {}", built.design.schedule.intervals().len())?;
    writeln!(w, "attacked_seconds: {attacked:.6}")?;
    match (&built.design.certificate, &built.certificate_issue) {
        (Some(cert), _) => {
            let c = &cert.constants;
            writeln!(w, "certificate: present")?;
            writeln!(
                w,
                "  c1 {:.6}  c2 {:.6}  c3 {:.6}  c4 {:.6}  c5 {:.6}",
                c.c1, c.c2, c.c3, c.c4, c.c5
            )?;
            writeln!(
                w,
                "  hat_c1 {:.6}  hat_c2 {:.6}  tilde_c1 {:.6}  tilde_c2 {:.6}",
                c.hat_c1, c.hat_c2, c.tilde_c1, c.tilde_c2
            )?;
            writeln!(
                w,
                "  attacked_phase_bound_seconds: {:.6}",
                cert.times.bar_t_o
            )?;
            writeln!(w, "  observer_bound_seconds: {:.6}", cert.times.t_o)?;
            writeln!(
                w,
                "  condition_slacks: {:.6} {:.6} {:.6}",
                cert.conditions.slack[0], cert.conditions.slack[1], cert.conditions.slack[2]
            )?;
            if let Some((t_c, t_a)) = built.settling_bounds() {
                writeln!(w, "  feedback_bound_seconds: {t_c:.6}")?;
                writeln!(w, "  total_bound_seconds: {t_a:.6}")?;
            }
        }
        (None, Some(issue)) => writeln!(w, "certificate: absent ({issue})")?,
        (None, None) => writeln!(w, "certificate: absent")?,
    }
    Ok(())
}
