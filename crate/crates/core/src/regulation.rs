//! Steady-state and structural synthesis per agent: the regulator equations
//! coupling plant and exosystem, and the Luenberger normal form yielding the
//! chain output matrix `R`, input decoupling matrix `X`, and drift row `U`.

use crate::numerics::{kron, mat_from_vec_col, solve_linear, vec_col, Mat, NumericsError};
use thiserror::Error;

/// Relative rank tolerance for controllability-index selection.
pub const TOL_RANK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegulationError {
    #[error("regulator equations have no solution; least-squares residual {residual:.3e}")]
    NoSolution { residual: f64 },
    #[error("state pair (a, b) is not controllable: chain lengths reach {reached} of {needed}")]
    NotControllable { reached: usize, needed: usize },
    #[error("input matrix has rank {rank}, below its {cols} columns")]
    RankDeficientB { rank: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("normal-form certification failed: {0}")]
    CertificationFailed(String),
}

/// One agent's plant data: dynamics `a` (n×n), input map `b` (n×m, m ≥ 1),
/// regulated output `c` (p×n), disturbance injection `e` (n×q), and output
/// feedthrough `f` (p×q) from the exogenous state.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    a: Mat,
    b: Mat,
    c: Mat,
    e: Mat,
    f: Mat,
}

impl AgentModel {
    pub fn new(a: Mat, b: Mat, c: Mat, e: Mat, f: Mat) -> Result<AgentModel, RegulationError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(RegulationError::DimensionMismatch(format!(
                "dynamics matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != n || b.cols() == 0 || b.cols() > n {
            return Err(RegulationError::DimensionMismatch(format!(
                "input matrix must be {n}x(1..={n}), got {}x{}",
                b.rows(),
                b.cols()
            )));
        }
        if c.cols() != n || c.rows() == 0 {
            return Err(RegulationError::DimensionMismatch(format!(
                "output matrix must have {n} columns and at least one row, got {}x{}",
                c.rows(),
                c.cols()
            )));
        }
        if e.rows() != n || f.rows() != c.rows() || e.cols() != f.cols() {
            return Err(RegulationError::DimensionMismatch(format!(
                "exogenous maps must be {n}x{q} and {p}x{q}, got {}x{} and {}x{}",
                e.rows(),
                e.cols(),
                f.rows(),
                f.cols(),
                q = e.cols(),
                p = c.rows()
            )));
        }
        Ok(AgentModel { a, b, c, e, f })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.rows()
    }

    pub fn exo_dim(&self) -> usize {
        self.e.cols()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    pub fn e(&self) -> &Mat {
        &self.e
    }

    pub fn f(&self) -> &Mat {
        &self.f
    }
}

/// Autonomous exogenous generator `v̇ = S v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExosystemModel {
    s: Mat,
}

impl ExosystemModel {
    pub fn new(s: Mat) -> Result<ExosystemModel, RegulationError> {
        if s.rows() != s.cols() {
            return Err(RegulationError::DimensionMismatch(format!(
                "exosystem matrix must be square, got {}x{}",
                s.rows(),
                s.cols()
            )));
        }
        Ok(ExosystemModel { s })
    }

    pub fn s(&self) -> &Mat {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.rows()
    }
}

/// Steady-state maps: `pi` (n×q) lifts the exogenous state to the invariant
/// plant manifold; `gamma` (m×q) is the feedforward input on it.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorSolution {
    pub pi: Mat,
    pub gamma: Mat,
}

/// Luenberger second canonical form data. `t_mat` maps plant coordinates to
/// stacked integrator chains of lengths `indices`; `r_mat` reads each chain
/// head; `x_mat` is the (nonsingular) input gain onto chain tails; `u_mat` is
/// the residual drift row of each chain tail; `g_mat` normalizes the input.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub t_mat: Mat,
    pub g_mat: Mat,
    pub indices: Vec<usize>,
    pub r_mat: Mat,
    pub x_mat: Mat,
    pub u_mat: Mat,
}

/// Solves `AΠ + BΓ + E = ΠS` and `CΠ + F = 0` jointly for `(Π, Γ)` by
/// stacking `z = [vec Π; vec Γ]` into one linear system. Non-square cases
/// fall back to least squares; either way the result is accepted only when
/// both residuals sit below `1e−9·(1 + ‖E‖_F + ‖F‖_F)`.
pub fn solve_regulator_equations(
    agent: &AgentModel,
    exo: &ExosystemModel,
) -> Result<RegulatorSolution, RegulationError> {
    let (n, m, p) = (agent.state_dim(), agent.input_dim(), agent.output_dim());
    let q = exo.dim();
    if agent.exo_dim() != q {
        return Err(RegulationError::DimensionMismatch(format!(
            "agent expects exogenous dimension {}, exosystem has {q}",
            agent.exo_dim()
        )));
    }
    let eye_q = Mat::identity(q);
    let eye_n = Mat::identity(n);
    // vec(AΠ) = (I_q⊗A)vecΠ, vec(ΠS) = (Sᵀ⊗I_n)vecΠ, column-major stacking.
    let a_pi = kron(&eye_q, agent.a()).sub(&kron(&exo.s().transpose(), &eye_n));
    let b_gam = kron(&eye_q, agent.b());
    let c_pi = kron(&eye_q, agent.c());

    let rows = n * q + p * q;
    let cols = n * q + m * q;
    let mut big = Mat::zeros(rows, cols);
    for i in 0..n * q {
        for j in 0..n * q {
            big.set(i, j, a_pi.at(i, j));
        }
        for j in 0..m * q {
            big.set(i, n * q + j, b_gam.at(i, j));
        }
    }
    for i in 0..p * q {
        for j in 0..n * q {
            big.set(n * q + i, j, c_pi.at(i, j));
        }
    }
    let mut rhs = vec_col(agent.e());
    rhs.extend_from_slice(&vec_col(agent.f()));
    for v in &mut rhs {
        *v = -*v;
    }

    let z = if rows == cols {
        match solve_linear(&big, &rhs) {
            Ok(z) => z,
            Err(NumericsError::SingularMatrix { .. }) => least_squares(&big, &rhs),
            Err(other) => panic!("joint regulator system assembly is consistent: {other}"),
        }
    } else {
        least_squares(&big, &rhs)
    };

    let pi = mat_from_vec_col(&z[..n * q], n, q);
    let gamma = mat_from_vec_col(&z[n * q..], m, q);

    let scale = 1.0 + agent.e().frobenius_norm() + agent.f().frobenius_norm();
    let dyn_res = agent
        .a()
        .matmul(&pi)
        .add(&agent.b().matmul(&gamma))
        .add(agent.e())
        .sub(&pi.matmul(exo.s()))
        .frobenius_norm();
    let out_res = agent.c().matmul(&pi).add(agent.f()).frobenius_norm();
    if dyn_res > 1e-9 * scale || out_res > 1e-9 * scale {
        return Err(RegulationError::NoSolution {
            residual: dyn_res.hypot(out_res),
        });
    }
    Ok(RegulatorSolution { pi, gamma })
}

/// Minimum-norm-ish least squares via (possibly ridge-stabilized) normal
/// equations; used both for non-square joint systems and to quantify the
/// residual of inconsistent ones.
fn least_squares(a: &Mat, b: &[f64]) -> Vec<f64> {
    let at = a.transpose();
    let ata = at.matmul(a);
    let atb = at.matvec(b);
    match solve_linear(&ata, &atb) {
        Ok(z) => z,
        Err(_) => {
            // Tiny ridge keeps the diagnostic solvable when the normal
            // equations are singular; only the residual magnitude matters.
            let ridge = 1e-12 * (1.0 + ata.inf_norm());
            let mut reg = ata;
            for i in 0..reg.rows() {
                let v = reg.at(i, i) + ridge;
                reg.set(i, i, v);
            }
            solve_linear(&reg, &atb).expect("ridge-regularized system is positive definite")
        }
    }
}

/// Computes controllability indices by scanning `b₁..b_m, Ab₁..Ab_m, …` and
/// keeping each column independent of those already kept, then builds the
/// chain coordinates from the distinguished rows of the kept-column inverse.
/// Every structural invariant is re-checked numerically before returning.
pub fn luenberger_normal_form(agent: &AgentModel) -> Result<NormalForm, RegulationError> {
    let n = agent.state_dim();
    let m = agent.input_dim();
    let a = agent.a();
    let b = agent.b();

    // Powers A^k b_j, k = 0..n-1, kept lazily per input.
    let mut power_cols: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m);
    for j in 0..m {
        let col: Vec<f64> = (0..n).map(|i| b.at(i, j)).collect();
        power_cols.push(vec![col]);
    }

    let mut basis: Vec<Vec<f64>> = Vec::new(); // orthonormalized kept columns
    let mut kept_per_input = vec![0usize; m];
    let mut closed = vec![false; m];
    let mut max_col_norm = 0.0_f64;
    let mut kept_total = 0usize;

    'scan: for k in 0..n {
        for j in 0..m {
            if closed[j] {
                continue;
            }
            if power_cols[j].len() <= k {
                let prev = &power_cols[j][k - 1];
                let mut next = vec![0.0; n];
                a.matvec_into(prev, &mut next);
                power_cols[j].push(next);
            }
            let mut v = power_cols[j][k].clone();
            max_col_norm = max_col_norm.max(norm2(&v));
            // Two Gram-Schmidt passes keep the independence test stable.
            for _ in 0..2 {
                for q in &basis {
                    let d = dot(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= d * qi;
                    }
                }
            }
            let res = norm2(&v);
            if res > TOL_RANK * max_col_norm {
                let inv = 1.0 / res;
                for vi in &mut v {
                    *vi *= inv;
                }
                basis.push(v);
                kept_per_input[j] += 1;
                kept_total += 1;
                if kept_total == n {
                    break 'scan;
                }
            } else {
                // A dependent power makes every higher power dependent too.
                closed[j] = true;
            }
        }
        if closed.iter().all(|&c| c) {
            break;
        }
    }

    let b_rank = kept_per_input.iter().filter(|&&q| q > 0).count();
    if kept_per_input.contains(&0) {
        return Err(RegulationError::RankDeficientB { rank: b_rank, cols: m });
    }
    if kept_total < n {
        return Err(RegulationError::NotControllable { reached: kept_total, needed: n });
    }

    // Kept columns grouped per input, chain order.
    let mut l = Mat::zeros(n, n);
    let mut col = 0usize;
    for j in 0..m {
        for k in 0..kept_per_input[j] {
            for i in 0..n {
                l.set(i, col, power_cols[j][k][i]);
            }
            col += 1;
        }
    }
    let lt = l.transpose();

    // τ_r = distinguished row of L⁻¹ for chain r, rescaled so its
    // largest-magnitude entry becomes +1.
    let mut taus: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut sigma = 0usize;
    for j in 0..m {
        sigma += kept_per_input[j];
        let mut e = vec![0.0; n];
        e[sigma - 1] = 1.0;
        let mut tau = solve_linear(&lt, &e).map_err(|_| {
            RegulationError::CertificationFailed("kept-column matrix is singular".into())
        })?;
        let mut pivot = 0usize;
        for (i, &v) in tau.iter().enumerate() {
            if v.abs() > tau[pivot].abs() {
                pivot = i;
            }
        }
        let d = tau[pivot];
        for v in &mut tau {
            *v /= d;
        }
        taus.push(tau);
    }

    // T stacks each chain τ_r, τ_r A, …, τ_r A^{q_r−1}; R reads chain heads;
    // X and U come from the chain tails.
    let indices = kept_per_input;
    let mut t_mat = Mat::zeros(n, n);
    let mut r_mat = Mat::zeros(m, n);
    let mut x_mat = Mat::zeros(m, m);
    let mut u_mat = Mat::zeros(m, n);
    let mut row = 0usize;
    for (r, tau) in taus.iter().enumerate() {
        let mut cur = tau.clone();
        for i in 0..n {
            r_mat.set(r, i, tau[i]);
        }
        for k in 0..indices[r] {
            for i in 0..n {
                t_mat.set(row, i, cur[i]);
            }
            row += 1;
            if k + 1 == indices[r] {
                // tail row: input gain and drift
                for jm in 0..m {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += cur[i] * b.at(i, jm);
                    }
                    x_mat.set(r, jm, acc);
                }
                let mut next = vec![0.0; n];
                row_times_mat(&cur, a, &mut next);
                for i in 0..n {
                    u_mat.set(r, i, next[i]);
                }
            } else {
                let mut next = vec![0.0; n];
                row_times_mat(&cur, a, &mut next);
                cur = next;
            }
        }
    }
    let g_mat = x_mat.clone();

    let form = NormalForm { t_mat, g_mat, indices, r_mat, x_mat, u_mat };
    certify_normal_form(&form, agent)?;
    Ok(form)
}

/// Re-derives every structural claim numerically: chain-head output zeros,
/// shift-row structure of `T A T⁻¹`, selector structure of `T B G⁻¹`, and
/// nonsingularity of `T` and `X`.
fn certify_normal_form(form: &NormalForm, agent: &AgentModel) -> Result<(), RegulationError> {
    let n = agent.state_dim();
    let m = agent.input_dim();
    let a = agent.a();
    let b = agent.b();
    let fail = |msg: String| Err(RegulationError::CertificationFailed(msg));

    // R_j A^l B = 0 for l = 0..q_j−2.
    for j in 0..m {
        let mut row: Vec<f64> = form.r_mat.row(j).to_vec();
        for l in 0..form.indices[j].saturating_sub(1) {
            let mut prod = vec![0.0; m];
            for (jm, p) in prod.iter_mut().enumerate() {
                *p = (0..n).map(|i| row[i] * b.at(i, jm)).sum();
            }
            let norm_b: f64 = 1.0 + b.frobenius_norm();
            if prod.iter().any(|&v| v.abs() > 1e-7 * norm_b * norm_row(&row)) {
                return fail(format!("chain {j} output hits the input at power {l}"));
            }
            let mut next = vec![0.0; n];
            row_times_mat(&row, a, &mut next);
            row = next;
        }
    }

    // T⁻¹ column by column; also certifies T nonsingular.
    let mut t_inv = Mat::zeros(n, n);
    for jcol in 0..n {
        let mut e = vec![0.0; n];
        e[jcol] = 1.0;
        let x = solve_linear(&form.t_mat, &e)
            .map_err(|_| RegulationError::CertificationFailed("t_mat is singular".into()))?;
        for i in 0..n {
            t_inv.set(i, jcol, x[i]);
        }
    }
    let abar = form.t_mat.matmul(a).matmul(&t_inv);
    let tol = 1e-7 * (1.0 + abar.inf_norm());
    let mut row0 = 0usize;
    for &qr in &form.indices {
        for k in 0..qr - 1 {
            let i = row0 + k;
            for j in 0..n {
                let want = if j == i + 1 { 1.0 } else { 0.0 };
                if (abar.at(i, j) - want).abs() > tol {
                    return fail(format!("chain row {i} deviates from a pure shift at {j}"));
                }
            }
        }
        row0 += qr;
    }

    // T B G⁻¹ = block-diagonal chain-tail selectors; certifies X nonsingular.
    let tb = form.t_mat.matmul(b);
    let mut tbg = Mat::zeros(n, m);
    let gt = form.g_mat.transpose();
    for i in 0..n {
        // row i of T B G⁻¹ solves Gᵀ y = (T B row i)ᵀ.
        let y = solve_linear(&gt, tb.row(i))
            .map_err(|_| RegulationError::CertificationFailed("x_mat is singular".into()))?;
        for j in 0..m {
            tbg.set(i, j, y[j]);
        }
    }
    let mut tails = Vec::with_capacity(m);
    let mut acc = 0usize;
    for &qr in &form.indices {
        acc += qr;
        tails.push(acc - 1);
    }
    for i in 0..n {
        for j in 0..m {
            let want = if tails[j] == i { 1.0 } else { 0.0 };
            if (tbg.at(i, j) - want).abs() > 1e-7 * (1.0 + tbg.inf_norm()) {
                return fail(format!("input selector deviates at ({i},{j})"));
            }
        }
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn norm_row(v: &[f64]) -> f64 {
    1.0 + norm2(v)
}

/// `out = rowᵀ·M` for a row vector.
fn row_times_mat(row: &[f64], m: &Mat, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = (0..row.len()).map(|i| row[i] * m.at(i, j)).sum();
    }
}
