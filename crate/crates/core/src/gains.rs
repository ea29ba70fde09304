//! Per-channel fixed-time feedback design: homogeneity exponent chains,
//! Hurwitz validation of the coefficient vectors, Lyapunov certificates for
//! the two companion systems, and the channel/total settling bounds.

use crate::numerics::{routh_hurwitz, solve_lyapunov, symmetric_eigen_range, Mat};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GainsError {
    #[error("exponent recursion degenerates at step {index}: denominator {denominator:.6e}")]
    DegenerateRecursion { index: usize, denominator: f64 },
    #[error("{which} coefficient vector is not Hurwitz")]
    NotHurwitz { which: &'static str },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Lyapunov certificate failed: {0}")]
    LyapunovFailed(String),
}

/// Complete design data for one input channel of one agent: coefficient
/// vectors, exponent chains, Lyapunov solutions with their spectral
/// extremes, and the settling bound split into its two phase terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGains {
    pub order: usize,
    pub psi: Vec<f64>,
    pub psi_bar: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_bar: Vec<f64>,
    pub p: Mat,
    pub p_bar: Mat,
    pub q_lyap: Mat,
    pub q_bar_lyap: Mat,
    /// (λ_min, λ_max) of `p` and `p_bar`.
    pub p_extremes: (f64, f64),
    pub p_bar_extremes: (f64, f64),
    /// Contributions of the contraction (γ < 1) and approach (γ̄ > 1) phases.
    pub t_c_terms: (f64, f64),
    pub t_c_channel: f64,
}

/// Builds the exponent chains of length `order` ending at the given terminal
/// values, walking the recursion `γ_{r−1} = γ_r γ_{r+1}/(2γ_{r+1} − γ_r)`
/// downward from the anchor `γ_{order+1} = 1`.
pub fn homogeneity_exponents(
    gamma_n: f64,
    gamma_bar_n: f64,
    order: usize,
) -> Result<(Vec<f64>, Vec<f64>), GainsError> {
    if order == 0 {
        return Err(GainsError::DimensionMismatch("channel order must be positive".into()));
    }
    if !(gamma_n > 0.0 && gamma_n < 1.0) {
        return Err(GainsError::DegenerateRecursion { index: order, denominator: gamma_n });
    }
    if !(gamma_bar_n > 1.0) || !gamma_bar_n.is_finite() {
        return Err(GainsError::DegenerateRecursion { index: order, denominator: gamma_bar_n });
    }
    let chain = |terminal: f64| -> Result<Vec<f64>, GainsError> {
        let mut out = vec![0.0; order];
        out[order - 1] = terminal;
        let mut next = 1.0; // anchor value one past the end
        for r in (0..order - 1).rev() {
            let cur = out[r + 1];
            let den = 2.0 * next - cur;
            if den <= 0.0 {
                return Err(GainsError::DegenerateRecursion { index: r + 1, denominator: den });
            }
            out[r] = cur * next / den;
            next = cur;
        }
        Ok(out)
    };
    Ok((chain(gamma_n)?, chain(gamma_bar_n)?))
}

/// Companion matrix whose characteristic polynomial is
/// `s^n + c_n s^{n−1} + … + c_1` for `coeffs = (c_1, …, c_n)`.
pub fn companion(coeffs: &[f64]) -> Mat {
    let n = coeffs.len();
    Mat::from_fn(n, n, |i, j| {
        if i + 1 == n {
            -coeffs[j]
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// Routh-Hurwitz verdicts for both coefficient vectors, interpreting each as
/// the ascending-power tail `(c_1, …, c_n)` of a monic polynomial.
pub fn validate_coefficients(psi: &[f64], psi_bar: &[f64]) -> (bool, bool) {
    let verdict = |c: &[f64]| {
        if c.is_empty() {
            return false;
        }
        // routh expects descending order below the leading 1.
        let descending: Vec<f64> = c.iter().rev().copied().collect();
        routh_hurwitz(&descending)
    };
    (verdict(psi), verdict(psi_bar))
}

/// Solves the channel's two Lyapunov equations and evaluates the settling
/// bound. The Lyapunov energy is the half-quadratic form ½ϱᵀPϱ, so the
/// effective right-hand side is Q/2 in both the solve and the decay-rate
/// denominators; the design table reports the user-chosen Q unmodified.
pub fn design_channel(
    psi: Vec<f64>,
    psi_bar: Vec<f64>,
    gamma_n: f64,
    gamma_bar_n: f64,
    q_lyap: Mat,
    q_bar_lyap: Mat,
) -> Result<ChannelGains, GainsError> {
    let order = psi.len();
    if psi_bar.len() != order {
        return Err(GainsError::DimensionMismatch(format!(
            "coefficient vectors disagree in length: {} vs {}",
            order,
            psi_bar.len()
        )));
    }
    if q_lyap.rows() != order || q_lyap.cols() != order || q_bar_lyap.rows() != order
        || q_bar_lyap.cols() != order
    {
        return Err(GainsError::DimensionMismatch(format!(
            "Lyapunov right-hand sides must be {order}x{order}"
        )));
    }
    let (gamma, gamma_bar) = homogeneity_exponents(gamma_n, gamma_bar_n, order)?;
    let (h1, h2) = validate_coefficients(&psi, &psi_bar);
    if !h1 {
        return Err(GainsError::NotHurwitz { which: "psi" });
    }
    if !h2 {
        return Err(GainsError::NotHurwitz { which: "psi_bar" });
    }

    let solve_certified = |coeffs: &[f64], q: &Mat, which: &str| -> Result<(Mat, (f64, f64)), GainsError> {
        let psi_mat = companion(coeffs);
        let q_eff = q.scale(0.5);
        let p = solve_lyapunov(&psi_mat, &q_eff)
            .map_err(|e| GainsError::LyapunovFailed(format!("{which}: {e}")))?;
        let residual = p
            .matmul(&psi_mat)
            .add(&psi_mat.transpose().matmul(&p))
            .add(&q_eff)
            .frobenius_norm();
        if residual > 1e-8 * (1.0 + q_eff.frobenius_norm()) {
            return Err(GainsError::LyapunovFailed(format!(
                "{which}: residual {residual:.3e} after solve"
            )));
        }
        let (lo, hi) = symmetric_eigen_range(&p, 1e-13 * (1.0 + p.frobenius_norm()))
            .map_err(|e| GainsError::LyapunovFailed(format!("{which}: {e}")))?;
        if lo <= 0.0 {
            return Err(GainsError::LyapunovFailed(format!(
                "{which}: solution not positive definite (lambda_min = {lo:.3e})"
            )));
        }
        Ok((p, (lo, hi)))
    };
    let (p, p_extremes) = solve_certified(&psi, &q_lyap, "psi")?;
    let (p_bar, p_bar_extremes) = solve_certified(&psi_bar, &q_bar_lyap, "psi_bar")?;

    let qm = |m: &Mat| -> Result<f64, GainsError> {
        let (lo, _) = symmetric_eigen_range(m, 1e-13 * (1.0 + m.frobenius_norm()))
            .map_err(|e| GainsError::LyapunovFailed(e.to_string()))?;
        Ok(lo / 2.0)
    };
    let (g, gb) = (gamma_n, gamma_bar_n);
    let term1 = g * p_extremes.1.powf(1.0 / g) / ((1.0 - g) * qm(&q_lyap)?);
    let term2 =
        gb * p_bar_extremes.1.powf((2.0 * gb - 1.0) / gb) / ((gb - 1.0) * qm(&q_bar_lyap)?);

    Ok(ChannelGains {
        order,
        psi,
        psi_bar,
        gamma,
        gamma_bar,
        p,
        p_bar,
        q_lyap,
        q_bar_lyap,
        p_extremes,
        p_bar_extremes,
        t_c_terms: (term1, term2),
        t_c_channel: term1 + term2,
    })
}

/// Settling bound of one designed channel.
pub fn channel_settling_bound(gains: &ChannelGains) -> f64 {
    gains.t_c_channel
}

/// Aggregates the per-channel bounds: the slowest channel dominates, and the
/// total adds the observer settling instant.
pub fn total_settling_bound(t_o: f64, channel_bounds: &[f64]) -> (f64, f64) {
    let t_c = channel_bounds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (t_c, t_o + t_c)
}
