//! Distributed fixed-time exosystem observer: the consensus-error dynamics,
//! the constant block of its convergence certificate, the duration-budget
//! conditions, the settling-time bound, and the Lyapunov diagnostic.

use crate::dos::AttackBudget;
use crate::graph::{DirectedGraph, GainMatrixK};
use crate::numerics::{find_root_bisect, sig_scalar, Mat};
use crate::regulation::ExosystemModel;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObserverError {
    #[error("exponents must satisfy 0 < alpha < 1 < 1/alpha < beta, got alpha={alpha}, beta={beta}")]
    InvalidExponents { alpha: f64, beta: f64 },
    #[error("linear gain mu1={mu1} must exceed the coupling norm {bound}")]
    GainTooSmall { mu1: f64, bound: f64 },
    #[error("certificate condition ({which}) fails with slack {slack:.6e}")]
    ConditionFailed { which: char, slack: f64 },
    #[error("gain {which} must be positive, got {value}")]
    NonPositiveGain { which: &'static str, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Observer gains and homogeneity exponents. Plain data; the certificate
/// entry points validate the exponent ordering and the gain gate, so raw
/// right-hand-side evaluation stays usable for exploratory parameter sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverParams {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ObserverParams {
    pub fn validate(&self) -> Result<(), ObserverError> {
        for (which, v) in [("mu1", self.mu1), ("mu2", self.mu2), ("mu3", self.mu3)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ObserverError::NonPositiveGain { which, value: v });
            }
        }
        let ok = 0.0 < self.alpha
            && self.alpha < 1.0
            && self.beta > 1.0 / self.alpha
            && self.beta.is_finite();
        if !ok {
            return Err(ObserverError::InvalidExponents { alpha: self.alpha, beta: self.beta });
        }
        Ok(())
    }
}

/// Constant block of the convergence certificate, all derived from the
/// gains, the coupling gain, the network size, and the exosystem norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub hat_c1: f64,
    pub hat_c2: f64,
    pub tilde_c1: f64,
    pub tilde_c2: f64,
    /// Spectral norm of the Kronecker coupling `K⊗S`; the gate `mu1` must
    /// clear. Diagonal `K` makes this exactly `k_M·‖S‖`.
    pub k_kron_s_norm: f64,
}

/// Two-phase settling bound: the error energy is driven into a fixed basin
/// by `bar_t_o`, then to zero by `t_o`. The `*_bisected` fields re-derive
/// each instant from its defining transcendental equation as a cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettlingTimes {
    pub bar_t_o: f64,
    pub t_o: f64,
    pub bar_t_o_bisected: f64,
    pub t_o_bisected: f64,
}

/// Signed slacks for the three budget conditions; `holds` applies each
/// condition's inequality direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub holds: [bool; 3],
    pub slack: [f64; 3],
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|&h| h)
    }
}

/// Full certificate as produced by [`certify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverCertificate {
    pub params: ObserverParams,
    pub constants: ObserverConstants,
    pub times: SettlingTimes,
    pub conditions: ConditionReport,
}

/// Evaluates the certificate constants. `n_agents` and `q` set the stacked
/// error dimension `Nq`; `s_norm` is the exosystem's spectral norm.
pub fn compute_constants(
    params: &ObserverParams,
    k: &GainMatrixK,
    n_agents: usize,
    q: usize,
    s_norm: f64,
) -> Result<ObserverConstants, ObserverError> {
    params.validate()?;
    if n_agents == 0 || q == 0 {
        return Err(ObserverError::DimensionMismatch(
            "need at least one agent and a nonempty exosystem state".into(),
        ));
    }
    let (mu1, mu2, mu3) = (params.mu1, params.mu2, params.mu3);
    let (alpha, beta) = (params.alpha, params.beta);
    let k_m = k.k_max();
    let nq = (n_agents * q) as f64;
    let kos = k_m * s_norm;
    if mu1 <= kos {
        return Err(ObserverError::GainTooSmall { mu1, bound: kos });
    }

    let c1 = 0.5
        * (mu1 * mu1 - kos * kos)
            .min(mu2 * mu2)
            .min(mu3 * mu3 * nq.powf(1.0 - beta));
    let c2 = (mu1 * k_m / 2.0)
        .max(mu2 * k_m / (alpha + 1.0) * nq.powf((1.0 - alpha) / 2.0))
        .max(mu3 * k_m / (beta + 1.0));
    let base_max = (mu1 * k_m / 2.0)
        .max(mu2 * k_m / (alpha + 1.0))
        .max(mu3 * k_m / (beta + 1.0));
    let c3 = (3.0 * nq).powf((beta - 1.0) / (beta + 1.0))
        * base_max.powf(2.0 * beta / (beta + 1.0));
    let pow_a = 2.0 * alpha / (alpha + 1.0);
    let c4 = ((mu1 * k_m / 2.0).powf(pow_a) * nq.powf((1.0 - alpha) / (alpha + 1.0)))
        .max((mu2 * k_m / (alpha + 1.0)).powf(pow_a) * nq.powf(1.0 - alpha))
        .max((mu3 * k_m / (beta + 1.0)).powf(pow_a));
    let qf = q as f64;
    let c5 = qf
        .powf((1.0 - alpha) / 2.0)
        .max(qf.powf((beta - 1.0) / 2.0))
        * s_norm
        * (beta + 1.0);

    Ok(ObserverConstants {
        c1,
        c2,
        c3,
        c4,
        c5,
        hat_c1: c1 * (1.0 - alpha) / (5.0 * c4 * (alpha + 1.0)),
        hat_c2: c5 * (1.0 - alpha) / (alpha + 1.0),
        tilde_c1: c1 * (beta - 1.0) / (5.0 * c2 * (beta + 1.0)),
        tilde_c2: c5 * (beta - 1.0) / (beta + 1.0),
        k_kron_s_norm: kos,
    })
}

fn condition_i_slack(c: &ObserverConstants, budget: &AttackBudget) -> f64 {
    c.c1 * (budget.p_d() - 1.0) / (5.0 * c.c2) - c.c5
}

fn condition_ii_slack(c: &ObserverConstants, budget: &AttackBudget) -> f64 {
    c.hat_c2 * (c.hat_c2 * budget.nu_d()).exp() - c.hat_c1 * (budget.p_d() - 1.0)
}

fn condition_iii_slack(c: &ObserverConstants, times: &SettlingTimes, budget: &AttackBudget) -> f64 {
    let dt = (times.t_o - times.bar_t_o) / budget.p_d();
    (c.hat_c2 * (dt + budget.nu_d())).exp() - c.hat_c1 * (budget.p_d() - 1.0) * dt
        + c.hat_c1 * budget.nu_d()
}

/// Evaluates all three conditions. Condition (iii) needs the settling
/// instants; pass `None` before they exist and it reports as failed with a
/// NaN slack.
pub fn check_conditions(
    constants: &ObserverConstants,
    times: Option<&SettlingTimes>,
    budget: &AttackBudget,
) -> ConditionReport {
    let s1 = condition_i_slack(constants, budget);
    let s2 = condition_ii_slack(constants, budget);
    let (h3, s3) = match times {
        Some(t) => {
            let s = condition_iii_slack(constants, t, budget);
            (s <= 0.0, s)
        }
        None => (false, f64::NAN),
    };
    ConditionReport { holds: [s1 > 0.0, s2 < 0.0, h3], slack: [s1, s2, s3] }
}

/// Closed-form settling instants, each cross-checked by bisection on its
/// defining equation to 1e−8. Requires conditions (i) and (ii); a vanishing
/// `hat_c2` (zero exosystem norm) leaves the second phase without a finite
/// bound from this construction, reported as `t_o = ∞`.
pub fn compute_settling_certificate(
    constants: &ObserverConstants,
    budget: &AttackBudget,
    t0: f64,
) -> Result<SettlingTimes, ObserverError> {
    let c = constants;
    let (nu_d, p_d) = (budget.nu_d(), budget.p_d());
    let s1 = condition_i_slack(c, budget);
    if s1 <= 0.0 {
        return Err(ObserverError::ConditionFailed { which: 'i', slack: s1 });
    }
    let s2 = condition_ii_slack(c, budget);
    if s2 >= 0.0 {
        return Err(ObserverError::ConditionFailed { which: 'b', slack: s2 });
    }

    let rate1 = c.tilde_c1 * (p_d - 1.0) - c.tilde_c2;
    let bar_t_o =
        t0 + p_d * ((1.0 + c.c3 / c.c2).ln() + (c.tilde_c1 + c.tilde_c2) * nu_d) / rate1;
    let t_o = if c.hat_c2 > 0.0 {
        bar_t_o
            + (p_d / c.hat_c2) * ((c.hat_c1 * (p_d - 1.0) / c.hat_c2).ln() - c.hat_c2 * nu_d)
    } else {
        f64::INFINITY
    };

    // First-phase equation: accumulated decay minus the basin offset.
    let g1 = |t: f64| {
        c.c2 * (rate1 * (t - t0) / p_d - (c.tilde_c1 + c.tilde_c2) * nu_d).exp() - c.c2 - c.c3
    };
    let hi = bar_t_o + (bar_t_o - t0).abs() + 1.0;
    let bar_bis = find_root_bisect(g1, t0, hi, 1e-10).map_err(|_| {
        ObserverError::ConditionFailed { which: 'i', slack: s1 }
    })?;
    let t_o_bis = if t_o.is_finite() {
        let g2 = |t: f64| {
            c.hat_c2 * (c.hat_c2 * ((t - bar_t_o) / p_d + nu_d)).exp()
                - c.hat_c1 * (p_d - 1.0)
        };
        let hi2 = t_o + (t_o - bar_t_o).abs() + 1.0;
        find_root_bisect(g2, bar_t_o, hi2, 1e-10)
            .map_err(|_| ObserverError::ConditionFailed { which: 'b', slack: s2 })?
    } else {
        f64::INFINITY
    };
    let agree = (bar_t_o - bar_bis).abs() <= 1e-8
        && (!t_o.is_finite() || (t_o - t_o_bis).abs() <= 1e-8);
    if !agree {
        return Err(ObserverError::ConditionFailed {
            which: 'x',
            slack: (bar_t_o - bar_bis).abs().max((t_o - t_o_bis).abs()),
        });
    }
    Ok(SettlingTimes { bar_t_o, t_o, bar_t_o_bisected: bar_bis, t_o_bisected: t_o_bis })
}

/// Runs the whole certification pipeline for one scenario.
pub fn certify(
    params: &ObserverParams,
    k: &GainMatrixK,
    n_agents: usize,
    q: usize,
    s_norm: f64,
    budget: &AttackBudget,
    t0: f64,
) -> Result<ObserverCertificate, ObserverError> {
    let constants = compute_constants(params, k, n_agents, q, s_norm)?;
    let times = compute_settling_certificate(&constants, budget, t0)?;
    let conditions = check_conditions(&constants, Some(&times), budget);
    if !conditions.holds[2] {
        return Err(ObserverError::ConditionFailed { which: 'g', slack: conditions.slack[2] });
    }
    Ok(ObserverCertificate { params: *params, constants, times, conditions })
}

/// Consensus-error observer derivative for every agent. The link state
/// `theta` multiplies the whole neighborhood sum: an attack severs all edges
/// at once, leaving each observer to coast on the exosystem model.
pub fn observer_rhs(
    etas: &[Vec<f64>],
    v: &[f64],
    graph: &DirectedGraph,
    theta: f64,
    params: &ObserverParams,
    exo: &ExosystemModel,
) -> Result<Vec<Vec<f64>>, ObserverError> {
    let n = graph.agent_count();
    let q = exo.dim();
    if etas.len() != n {
        return Err(ObserverError::DimensionMismatch(format!(
            "{} observer states for {n} agents",
            etas.len()
        )));
    }
    if v.len() != q || etas.iter().any(|e| e.len() != q) {
        return Err(ObserverError::DimensionMismatch(format!(
            "observer and exosystem states must have dimension {q}"
        )));
    }
    let s = exo.s();
    let mut out = Vec::with_capacity(n);
    let mut sigma = vec![0.0; q];
    for i in 0..n {
        let node = i + 1;
        sigma.fill(0.0);
        for j in 0..n {
            let w = graph.weight(node, j + 1);
            if w > 0.0 {
                for l in 0..q {
                    sigma[l] += w * (etas[i][l] - etas[j][l]);
                }
            }
        }
        let w0 = graph.weight(node, 0);
        if w0 > 0.0 {
            for l in 0..q {
                sigma[l] += w0 * (etas[i][l] - v[l]);
            }
        }
        for x in &mut sigma {
            *x *= theta;
        }
        let mut d = vec![0.0; q];
        s.matvec_into(&etas[i], &mut d);
        for l in 0..q {
            d[l] -= params.mu1 * sigma[l]
                + params.mu2 * sig_scalar(sigma[l], params.alpha)
                + params.mu3 * sig_scalar(sigma[l], params.beta);
        }
        out.push(d);
    }
    Ok(out)
}

/// Lyapunov diagnostic over the stacked neighborhood errors, one block of
/// dimension `q` per agent, weighted by the agent's coupling gain.
pub fn lyapunov_v(sigma: &[f64], k: &GainMatrixK, params: &ObserverParams) -> f64 {
    let n = k.diagonal().len();
    assert!(
        n > 0 && sigma.len().is_multiple_of(n),
        "stacked error length {} must be a multiple of the {n} gains",
        sigma.len()
    );
    let q = sigma.len() / n;
    let mut v = 0.0;
    for (i, &ki) in k.diagonal().iter().enumerate() {
        let block = &sigma[i * q..(i + 1) * q];
        let mut quad = 0.0;
        let mut pa = 0.0;
        let mut pb = 0.0;
        for &x in block {
            let a = x.abs();
            quad += a * a;
            pa += a.powf(params.alpha + 1.0);
            pb += a.powf(params.beta + 1.0);
        }
        v += ki
            * (params.mu1 / 2.0 * quad
                + params.mu2 / (params.alpha + 1.0) * pa
                + params.mu3 / (params.beta + 1.0) * pb);
    }
    v
}

/// Stacked neighborhood error `(H⊗I_q)·η̃` used by the Lyapunov diagnostic.
pub fn stacked_sigma(h: &Mat, eta_err: &[f64], q: usize) -> Vec<f64> {
    let n = h.rows();
    assert_eq!(eta_err.len(), n * q, "stacked error must be N·q long");
    let mut out = vec![0.0; n * q];
    for i in 0..n {
        for j in 0..n {
            let w = h.at(i, j);
            if w != 0.0 {
                for l in 0..q {
                    out[i * q + l] += w * eta_err[j * q + l];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_h_matrix, DirectedGraph};
    use rand_core::{RngCore, SeedableRng};

    fn reproduction_gain() -> GainMatrixK {
        let g = DirectedGraph::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (1, 5, 1.0),
                (3, 5, 1.0),
                (2, 4, 1.0),
                (5, 4, 1.0),
            ],
        )
        .unwrap();
        GainMatrixK::from_diagonal(&build_h_matrix(&g), vec![1.78; 5]).unwrap()
    }

    fn reproduction_params() -> ObserverParams {
        ObserverParams { mu1: 7.5, mu2: 7.0, mu3: 11.0, alpha: 0.7, beta: 1.45 }
    }

    #[test]
    fn constants_match_frozen_values() {
        let c = compute_constants(&reproduction_params(), &reproduction_gain(), 5, 2, 0.2)
            .unwrap();
        assert!((c.c1 - 21.466210048631314).abs() < 1e-12);
        assert!((c.c2 - 10.353069297646778).abs() < 1e-12);
        assert!((c.c3 - 21.864866090329247).abs() < 1e-12);
        assert!((c.c4 - 10.289869438311044).abs() < 1e-12);
        assert!((c.c5 - 0.5727008517950104).abs() < 1e-12);
        assert!((c.hat_c1 - 0.07362881982467855).abs() < 1e-15);
        assert!((c.hat_c2 - 0.10106485619911951).abs() < 1e-15);
        assert!((c.tilde_c1 - 0.07616626839607044).abs() < 1e-15);
        assert!((c.tilde_c2 - 0.10518995237051211).abs() < 1e-15);
        assert!((c.k_kron_s_norm - 0.356).abs() < 1e-15);
    }

    #[test]
    fn constants_degenerate_exosystem() {
        let g = DirectedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let k = GainMatrixK::from_diagonal(&build_h_matrix(&g), vec![1.0]).unwrap();
        let p = ObserverParams { mu1: 1.0, mu2: 1.0, mu3: 1.0, alpha: 0.5, beta: 2.5 };
        let c = compute_constants(&p, &k, 1, 1, 0.0).unwrap();
        assert_eq!(c.c5, 0.0);
        assert!((c.c1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parameter_gates() {
        let k = reproduction_gain();
        let mut p = reproduction_params();
        p.alpha = 1.2;
        assert!(matches!(
            compute_constants(&p, &k, 5, 2, 0.2),
            Err(ObserverError::InvalidExponents { .. })
        ));
        let mut p = reproduction_params();
        p.beta = 1.2; // below 1/alpha = 1/0.7
        assert!(matches!(
            compute_constants(&p, &k, 5, 2, 0.2),
            Err(ObserverError::InvalidExponents { .. })
        ));
        let mut p = reproduction_params();
        p.mu1 = 0.3; // below k_M·‖S‖ = 0.356
        assert!(matches!(
            compute_constants(&p, &k, 5, 2, 0.2),
            Err(ObserverError::GainTooSmall { .. })
        ));
        let mut p = reproduction_params();
        p.mu2 = 0.0;
        assert!(matches!(
            compute_constants(&p, &k, 5, 2, 0.2),
            Err(ObserverError::NonPositiveGain { .. })
        ));
    }

    #[test]
    fn settling_times_match_frozen_values() {
        let c = compute_constants(&reproduction_params(), &reproduction_gain(), 5, 2, 0.2)
            .unwrap();
        let budget = AttackBudget::new(0.2, 4.9).unwrap();
        let t = compute_settling_certificate(&c, &budget, 0.0).unwrap();
        assert!((t.bar_t_o - 29.920001417241696).abs() < 1e-9);
        assert!((t.t_o - 79.56915434849248).abs() < 1e-9);
        assert!((t.bar_t_o - t.bar_t_o_bisected).abs() <= 1e-8);
        assert!((t.t_o - t.t_o_bisected).abs() <= 1e-8);
        // Published rounding of the same quantity.
        assert!((t.t_o - 79.5692).abs() <= 1e-3 * 79.5692);
    }

    #[test]
    fn conditions_match_frozen_slacks() {
        let c = compute_constants(&reproduction_params(), &reproduction_gain(), 5, 2, 0.2)
            .unwrap();
        let budget = AttackBudget::new(0.2, 4.9).unwrap();
        let t = compute_settling_certificate(&c, &budget, 0.0).unwrap();
        let rep = check_conditions(&c, Some(&t), &budget);
        assert!(rep.all_hold());
        assert!((rep.slack[0] - 1.044562913814885).abs() < 1e-12);
        assert!((rep.slack[1] - (-0.18402393453433336)).abs() < 1e-12);
        assert!((rep.slack[2] - (-0.05357166448161791)).abs() < 1e-9);
    }

    #[test]
    fn conditions_fail_for_hostile_budgets() {
        let c = compute_constants(&reproduction_params(), &reproduction_gain(), 5, 2, 0.2)
            .unwrap();
        let barely = AttackBudget::new(0.2, 1.0001).unwrap();
        let rep = check_conditions(&c, None, &barely);
        assert!(!rep.holds[0], "rate denominator near 1 starves healthy time");
        assert!(matches!(
            compute_settling_certificate(&c, &barely, 0.0),
            Err(ObserverError::ConditionFailed { which: 'i', .. })
        ));
        let deluge = AttackBudget::new(1e3, 4.9).unwrap();
        let rep = check_conditions(&c, None, &deluge);
        assert!(rep.holds[0]);
        assert!(!rep.holds[1], "huge burst allowance breaks the basin entry");
    }

    #[test]
    fn certificate_is_bitwise_reproducible() {
        let budget = AttackBudget::new(0.2, 4.9).unwrap();
        let a = certify(&reproduction_params(), &reproduction_gain(), 5, 2, 0.2, &budget, 0.0)
            .unwrap();
        let b = certify(&reproduction_params(), &reproduction_gain(), 5, 2, 0.2, &budget, 0.0)
            .unwrap();
        let fields = |c: &ObserverCertificate| {
            [
                c.constants.c1,
                c.constants.c2,
                c.constants.c3,
                c.constants.c4,
                c.constants.c5,
                c.constants.hat_c1,
                c.constants.hat_c2,
                c.constants.tilde_c1,
                c.constants.tilde_c2,
                c.times.bar_t_o,
                c.times.t_o,
                c.conditions.slack[0],
                c.conditions.slack[1],
                c.conditions.slack[2],
            ]
            .map(f64::to_bits)
        };
        assert_eq!(fields(&a), fields(&b));
    }

    #[test]
    fn rhs_attack_freezes_consensus_terms() {
        let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let exo = ExosystemModel::new(Mat::from_rows(&[vec![0.0, -0.2], vec![0.2, 0.0]]))
            .unwrap();
        let p = reproduction_params();
        let etas = vec![vec![1.0, 2.0], vec![-3.0, 0.5]];
        let v = vec![0.3, -0.7];
        let d = observer_rhs(&etas, &v, &g, 0.0, &p, &exo).unwrap();
        for (i, eta) in etas.iter().enumerate() {
            let mut want = vec![0.0; 2];
            exo.s().matvec_into(eta, &mut want);
            assert_eq!(d[i], want, "attacked regime coasts on the exosystem model");
        }
    }

    #[test]
    fn rhs_consensus_manifold_is_invariant() {
        let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let exo = ExosystemModel::new(Mat::from_rows(&[vec![0.0, -0.2], vec![0.2, 0.0]]))
            .unwrap();
        let p = reproduction_params();
        let v = vec![0.9, -1.4];
        let etas = vec![v.clone(), v.clone()];
        let d = observer_rhs(&etas, &v, &g, 1.0, &p, &exo).unwrap();
        let mut want = vec![0.0; 2];
        exo.s().matvec_into(&v, &mut want);
        for di in &d {
            for l in 0..2 {
                assert!((di[l] - want[l]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rhs_single_agent_example() {
        let g = DirectedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let exo = ExosystemModel::new(Mat::from_rows(&[vec![0.0]])).unwrap();
        let p = ObserverParams { mu1: 1.0, mu2: 1.0, mu3: 1.0, alpha: 0.5, beta: 2.0 };
        let d = observer_rhs(&[vec![4.0]], &[0.0], &g, 1.0, &p, &exo).unwrap();
        assert!((d[0][0] - (-22.0)).abs() < 1e-12, "got {}", d[0][0]);
    }

    #[test]
    fn lyapunov_examples_and_positivity() {
        let g = DirectedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let k = GainMatrixK::from_diagonal(&build_h_matrix(&g), vec![1.0]).unwrap();
        let p = ObserverParams { mu1: 7.5, mu2: 7.0, mu3: 11.0, alpha: 0.7, beta: 1.45 };
        assert_eq!(lyapunov_v(&[0.0], &k, &p), 0.0);
        let want = 7.5 / 2.0 + 7.0 / 1.7 + 11.0 / 2.45;
        assert!((lyapunov_v(&[1.0], &k, &p) - want).abs() < 1e-12);

        let kk = reproduction_gain();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let sigma: Vec<f64> = (0..10)
                .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 8.0 - 4.0)
                .collect();
            if sigma.iter().any(|&x| x != 0.0) {
                assert!(lyapunov_v(&sigma, &kk, &p) > 0.0);
            }
        }
    }

    #[test]
    fn stacked_sigma_matches_direct_sum() {
        let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let h = build_h_matrix(&g);
        // err = [η̃₁; η̃₂] with q = 2
        let err = vec![1.0, -1.0, 0.5, 2.0];
        let s = stacked_sigma(h.matrix(), &err, 2);
        // agent 1: 1·η̃₁; agent 2: 2·(η̃₂−η̃₁)
        assert_eq!(&s[..2], &[1.0, -1.0]);
        assert!((s[2] - 2.0 * (0.5 - 1.0)).abs() < 1e-15);
        assert!((s[3] - 2.0 * (2.0 + 1.0)).abs() < 1e-15);
    }
}
