//! Dense double-precision kernels: matrices, Kronecker products, signed power
//! maps, a cyclic Jacobi eigensolver, Lyapunov and linear solves, the
//! Routh-Hurwitz test, bisection, and a fixed-step Runge-Kutta integrator
//! with breakpoint-aligned switching.
//!
//! Everything here is self-contained and deterministic; problem sizes stay
//! small (tens of states), so no sparse or blocked algorithms are needed.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("exponent must be positive, got {0}")]
    NonPositiveExponent(f64),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular linear system: pivot magnitude {pivot:.3e} below threshold")]
    SingularMatrix { pivot: f64 },
    #[error("Lyapunov solve failed; coefficient matrix is likely not Hurwitz")]
    SingularSystem,
    #[error("no sign change bracketing a root on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("state became non-finite at t = {at}")]
    NonFiniteState { at: f64 },
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from nested rows. Panics on ragged input; callers validate
    /// user-supplied shapes before reaching this constructor.
    pub fn from_rows(rows: &[Vec<f64>]) -> Mat {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows in matrix literal");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Mat {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from its diagonal entries.
    pub fn diag(d: &[f64]) -> Mat {
        let n = d.len();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = d[i];
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    #[inline]
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec shape mismatch");
        assert_eq!(out.len(), self.rows, "matvec output shape mismatch");
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            out[i] = acc;
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a.at(i, j);
            if s == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out.set(i * b.rows + k, j * b.cols + l, s * b.at(k, l));
                }
            }
        }
    }
    out
}

/// Column-major vectorization (stacks columns), the convention under which
/// `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
pub(crate) fn vec_col(m: &Mat) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.rows * m.cols);
    for j in 0..m.cols {
        for i in 0..m.rows {
            v.push(m.at(i, j));
        }
    }
    v
}

pub(crate) fn mat_from_vec_col(v: &[f64], rows: usize, cols: usize) -> Mat {
    assert_eq!(v.len(), rows * cols);
    Mat::from_fn(rows, cols, |i, j| v[j * rows + i])
}

/// Elementwise signed power: `sign(x_i) |x_i|^c`, with `sig^c(0) = 0`.
pub fn sig_power(x: &[f64], c: f64) -> Result<Vec<f64>, NumericsError> {
    if !(c > 0.0) {
        return Err(NumericsError::NonPositiveExponent(c));
    }
    Ok(x.iter().map(|&v| sig_scalar(v, c)).collect())
}

/// Scalar signed power used in integration hot paths (exponent validated once
/// at synthesis time).
#[inline]
pub fn sig_scalar(v: f64, c: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(c)
    }
}

/// Extremal eigenvalues of a symmetric matrix via cyclic Jacobi rotations,
/// iterated until the off-diagonal Frobenius norm drops to `tol` (absolute,
/// floored at machine precision relative to the input scale). The input is
/// symmetrized first; it must be square.
pub fn symmetric_eigen_range(m: &Mat, tol: f64) -> Result<(f64, f64), NumericsError> {
    if m.rows != m.cols {
        return Err(NumericsError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    if n == 0 {
        // Empty spectrum: vacuous range, used by agentless degenerate cases.
        return Ok((0.0, 0.0));
    }
    let mut a = Mat::from_fn(n, n, |i, j| 0.5 * (m.at(i, j) + m.at(j, i)));
    let scale = a.frobenius_norm();
    let stop = tol.max(f64::EPSILON * (1.0 + scale));
    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a.at(i, j) * a.at(i, j);
                }
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                if apq.abs() <= f64::EPSILON * scale {
                    continue;
                }
                let app = a.at(p, p);
                let aqq = a.at(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut lo = a.at(0, 0);
    let mut hi = a.at(0, 0);
    for i in 1..n {
        lo = lo.min(a.at(i, i));
        hi = hi.max(a.at(i, i));
    }
    Ok((lo, hi))
}

/// Spectral norm `√λ_max(MᵀM)`.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.rows == 0 || m.cols == 0 {
        return 0.0;
    }
    let gram = m.transpose().matmul(m);
    let (_, hi) = symmetric_eigen_range(&gram, 1e-14 * (1.0 + gram.frobenius_norm()))
        .expect("gram matrix is square");
    hi.max(0.0).sqrt()
}

/// Solves `P Ψ + Ψᵀ P = −Q` by vectorization and returns the symmetrized `P`.
/// Fails when the vectorized system is singular or the residual exceeds
/// `1e−8 ‖Q‖_F`, both of which signal a non-Hurwitz `Ψ` or severe
/// ill-conditioning.
pub fn solve_lyapunov(psi: &Mat, q: &Mat) -> Result<Mat, NumericsError> {
    if psi.rows != psi.cols {
        return Err(NumericsError::NotSquare { rows: psi.rows, cols: psi.cols });
    }
    if q.rows != psi.rows || q.cols != psi.cols {
        return Err(NumericsError::DimensionMismatch(format!(
            "Lyapunov right-hand side is {}x{}, expected {}x{}",
            q.rows, q.cols, psi.rows, psi.rows
        )));
    }
    let n = psi.rows;
    let psi_t = psi.transpose();
    // vec(Ψᵀ P) = (I ⊗ Ψᵀ) vec(P) and vec(P Ψ) = (Ψᵀ ⊗ I) vec(P).
    let sys = kron(&Mat::identity(n), &psi_t).add(&kron(&psi_t, &Mat::identity(n)));
    let rhs: Vec<f64> = vec_col(q).iter().map(|v| -v).collect();
    let sol = solve_linear(&sys, &rhs).map_err(|_| NumericsError::SingularSystem)?;
    let p = mat_from_vec_col(&sol, n, n);
    let resid = p.matmul(psi).add(&psi_t.matmul(&p)).add(q).frobenius_norm();
    if resid > 1e-8 * q.frobenius_norm() {
        return Err(NumericsError::SingularSystem);
    }
    Ok(Mat::from_fn(n, n, |i, j| 0.5 * (p.at(i, j) + p.at(j, i))))
}

/// Gaussian elimination with partial pivoting; rejects pivots below
/// `1e−12 ‖A‖_∞`.
pub fn solve_linear(a: &Mat, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if a.rows != a.cols {
        return Err(NumericsError::NotSquare { rows: a.rows, cols: a.cols });
    }
    if b.len() != a.rows {
        return Err(NumericsError::DimensionMismatch(format!(
            "right-hand side has {} entries, expected {}",
            b.len(),
            a.rows
        )));
    }
    let n = a.rows;
    let threshold = 1e-12 * a.inf_norm();
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in (col + 1)..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= threshold {
            return Err(NumericsError::SingularMatrix { pivot: best });
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let factor = m[r * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            m[r * n + col] = 0.0;
            for j in (col + 1)..n {
                m[r * n + j] -= factor * m[col * n + j];
            }
            x[r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in (col + 1)..n {
            acc -= m[col * n + j] * x[j];
        }
        x[col] = acc / m[col * n + col];
    }
    Ok(x)
}

/// First column of the Routh table for the monic polynomial
/// `s^n + c[0] s^(n−1) + … + c[n−1]` (coefficients in descending powers,
/// leading 1 omitted). Returns `None` when a pivot vanishes, which the
/// stability test treats as "not Hurwitz" rather than perturbing.
pub fn routh_first_column(monic_coeffs: &[f64]) -> Option<Vec<f64>> {
    let n = monic_coeffs.len();
    if n == 0 {
        return Some(vec![1.0]);
    }
    let mut poly = Vec::with_capacity(n + 1);
    poly.push(1.0);
    poly.extend_from_slice(monic_coeffs);
    let width = n / 2 + 1;
    let mut prev: Vec<f64> = (0..width).map(|j| poly.get(2 * j).copied().unwrap_or(0.0)).collect();
    let mut curr: Vec<f64> =
        (0..width).map(|j| poly.get(2 * j + 1).copied().unwrap_or(0.0)).collect();
    let mut first = vec![prev[0]];
    for _row in 1..=n {
        first.push(curr[0]);
        if curr[0] == 0.0 {
            return None;
        }
        let mut next = vec![0.0; width];
        for j in 0..width - 1 {
            next[j] = (curr[0] * prev[j + 1] - prev[0] * curr[j + 1]) / curr[0];
        }
        prev = std::mem::take(&mut curr);
        curr = next;
    }
    Some(first)
}

/// Routh-Hurwitz test: true iff every root of the monic polynomial has a
/// negative real part. Any nonpositive or vanishing first-column entry yields
/// a conservative `false`.
pub fn routh_hurwitz(monic_coeffs: &[f64]) -> bool {
    match routh_first_column(monic_coeffs) {
        Some(col) => col.iter().all(|&v| v > 0.0),
        None => false,
    }
}

/// Bisection on a bracketing interval; the result is within `tol` of a sign
/// change of `f`.
pub fn find_root_bisect(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, NumericsError> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() * fhi.signum() > 0.0 {
        return Err(NumericsError::NoBracket { lo, hi });
    }
    for _ in 0..200 {
        if (hi - lo) * 0.5 <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Time-stamped states produced by the integrator: a uniform grid of step `h`
/// with breakpoints injected as extra grid points.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    data: Vec<f64>,
    dimension: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }
}

/// Classical fixed-step RK4. Steps follow the uniform grid `t0 + k·h` but are
/// shortened so that every breakpoint (and `t1`) lands exactly on a grid
/// point; consequently no step interior straddles a breakpoint and the
/// right-hand side is never evaluated across one. `rhs(x, t, dx)` writes the
/// derivative into `dx`.
pub fn integrate_fixed_rk4<F>(
    mut rhs: F,
    x0: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
    breakpoints: &[f64],
) -> Result<Trajectory, NumericsError>
where
    F: FnMut(&[f64], f64, &mut [f64]),
{
    let dim = x0.len();
    let mut times = Vec::new();
    let mut data = Vec::new();
    integrate_fixed_rk4_each(&mut rhs, x0, t0, t1, h, breakpoints, |t, x| {
        times.push(t);
        data.extend_from_slice(x);
    })?;
    Ok(Trajectory { times, data, dimension: dim })
}

/// Streaming form of [`integrate_fixed_rk4`]: invokes `visit(t, state)` at
/// `t0` and after every accepted step instead of storing the trajectory.
/// Ensemble studies use this to keep memory flat.
pub fn integrate_fixed_rk4_each<F, V>(
    rhs: &mut F,
    x0: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
    breakpoints: &[f64],
    mut visit: V,
) -> Result<(), NumericsError>
where
    F: FnMut(&[f64], f64, &mut [f64]),
    V: FnMut(f64, &[f64]),
{
    assert!(h > 0.0, "step size must be positive");
    assert!(t1 >= t0, "integration interval is reversed");
    let dim = x0.len();
    let tie = 1e-9 * h.min(1.0);

    let mut bps: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > t0 + tie && b < t1 - tie)
        .collect();
    bps.sort_by(|a, b| a.partial_cmp(b).expect("non-finite breakpoint"));
    bps.dedup_by(|a, b| (*a - *b).abs() <= tie);

    let mut x = x0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];

    visit(t0, &x);
    let mut t = t0;
    let mut uniform_count: u64 = 1;
    let mut bp_idx = 0;
    while t < t1 - tie {
        let t_uniform = t0 + uniform_count as f64 * h;
        let mut t_next = t_uniform.min(t1);
        if bp_idx < bps.len() {
            let b = bps[bp_idx];
            if (b - t_next).abs() <= tie {
                // Breakpoint coincides with a grid point; consume it.
                bp_idx += 1;
            } else if b < t_next {
                t_next = b;
                bp_idx += 1;
            }
        }
        if t_next >= t_uniform - tie {
            uniform_count += 1;
        }
        let step = t_next - t;
        if step <= tie {
            t = t_next;
            continue;
        }

        rhs(&x, t, &mut k1);
        for i in 0..dim {
            stage[i] = x[i] + 0.5 * step * k1[i];
        }
        rhs(&stage, t + 0.5 * step, &mut k2);
        for i in 0..dim {
            stage[i] = x[i] + 0.5 * step * k2[i];
        }
        rhs(&stage, t + 0.5 * step, &mut k3);
        for i in 0..dim {
            stage[i] = x[i] + step * k3[i];
        }
        rhs(&stage, t_next, &mut k4);
        for i in 0..dim {
            x[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFiniteState { at: t_next });
        }
        t = t_next;
        visit(t, &x);
    }
    Ok(())
}
