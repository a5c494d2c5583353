//! Dense complex linear algebra on top of `ndarray`.
//!
//! The Hermitian eigensolver reduces the matrix to a real symmetric
//! tridiagonal form with Householder reflectors, removes the residual
//! phases of the off-diagonal with a diagonal unitary, and then runs the
//! implicit QL iteration with Wilkinson shifts. Eigenvalues come back in
//! ascending order with orthonormal eigenvectors stored as columns.

use alloc::vec;
use alloc::vec::Vec;

use ndarray::Array2;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{CMatrix, Error, Result, C64};

const QL_MAX_ITER: usize = 60;

/// Eigendecomposition `A = V diag(values) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

struct Reflector {
    offset: usize,
    u: Vec<C64>,
    tau: f64,
}

struct Tridiagonal {
    diag: Vec<f64>,
    // off[k] couples k and k+1; off[n-1] = 0
    off: Vec<f64>,
    phases: Vec<C64>,
    reflectors: Vec<Reflector>,
}

fn check_square(a: &CMatrix) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    Ok(r)
}

fn tridiagonalize(a: &CMatrix, keep_reflectors: bool) -> Result<Tridiagonal> {
    let n = check_square(a)?;
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("eigensolver input"));
    }
    // Hermitian part in a flat row-major buffer.
    let mut w = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
        }
    }

    let mut sub = vec![C64::new(0.0, 0.0); n.max(1)];
    let mut reflectors = Vec::new();
    let mut p = vec![C64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let xmax = (0..m).map(|i| w[(k + 1 + i) * n + k].norm()).fold(0.0, f64::max);
        if xmax == 0.0 {
            sub[k] = C64::new(0.0, 0.0);
            continue;
        }
        let alpha = xmax
            * (0..m)
                .map(|i| (w[(k + 1 + i) * n + k] / xmax).norm_sqr())
                .sum::<f64>()
                .sqrt();
        let x0 = w[(k + 1) * n + k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        // u = x/α + phase e₁, so |u|² = 2(1 + |x₀|/α) and τ = 2/|u|².
        let mut u: Vec<C64> = (0..m).map(|i| w[(k + 1 + i) * n + k] / alpha).collect();
        u[0] += phase;
        let tau = 1.0 / (1.0 + x0.norm() / alpha);
        sub[k] = -phase * alpha;

        // p = tau B u, on the trailing block B = w[k+1.., k+1..]
        for (i, pi) in p.iter_mut().enumerate().take(m) {
            let row = (k + 1 + i) * n + k + 1;
            let acc: C64 = w[row..row + m].iter().zip(&u[..m]).map(|(a, b)| a * b).sum();
            *pi = acc * tau;
        }
        let up: C64 = (0..m).map(|i| u[i].conj() * p[i]).sum();
        let kk = 0.5 * tau * up.re;
        for i in 0..m {
            p[i] -= u[i] * kk;
        }
        for i in 0..m {
            let row = (k + 1 + i) * n + k + 1;
            let (ui, qi) = (u[i], p[i]);
            for j in 0..m {
                w[row + j] -= ui * p[j].conj() + qi * u[j].conj();
            }
        }
        if keep_reflectors {
            reflectors.push(Reflector { offset: k + 1, u, tau });
        }
    }
    if n >= 2 {
        sub[n - 2] = w[(n - 1) * n + n - 2];
    }

    let diag: Vec<f64> = (0..n).map(|i| w[i * n + i].re).collect();
    let mut off = vec![0.0; n];
    let mut phases = vec![C64::new(1.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        let mag = sub[k].norm();
        off[k] = mag;
        phases[k + 1] = if mag > 0.0 { phases[k] * sub[k] / mag } else { phases[k] };
    }
    Ok(Tridiagonal { diag, off, phases, reflectors })
}

/// Implicit QL on a real symmetric tridiagonal matrix. When `z` is given it
/// is right-multiplied by the accumulated rotations (row-major, n×n).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    let scale = d.iter().zip(e.iter()).map(|(a, b)| a.abs() + b.abs()).fold(0.0, f64::max);
    let floor = f64::EPSILON * scale;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::EigenSolver);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let zi = z[k * n + i];
                        let zi1 = z[k * n + i + 1];
                        z[k * n + i + 1] = s * zi + c * zi1;
                        z[k * n + i] = c * zi - s * zi1;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues and orthonormal eigenvectors of the Hermitian part of `a`.
pub fn eigh(a: &CMatrix) -> Result<Eigh> {
    let n = check_square(a)?;
    let Tridiagonal { mut diag, mut off, phases, reflectors } = tridiagonalize(a, true)?;
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tridiagonal_ql(&mut diag, &mut off, Some(&mut z))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));

    // V = Q D Z with columns permuted into ascending order.
    let mut v = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for (col, &src) in order.iter().enumerate() {
            v[i * n + col] = phases[i] * z[i * n + src];
        }
    }
    let mut s = vec![C64::new(0.0, 0.0); n];
    for r in reflectors.iter().rev() {
        let m = r.u.len();
        s.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for i in 0..m {
            let ui = r.u[i].conj();
            let row = &v[(r.offset + i) * n..(r.offset + i + 1) * n];
            for (acc, x) in s.iter_mut().zip(row) {
                *acc += ui * x;
            }
        }
        for i in 0..m {
            let f = r.u[i] * r.tau;
            let row = &mut v[(r.offset + i) * n..(r.offset + i + 1) * n];
            for (x, acc) in row.iter_mut().zip(&s) {
                *x -= f * acc;
            }
        }
    }

    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Array2::from_shape_vec((n, n), v).expect("shape matches buffer");
    Ok(Eigh { values, vectors })
}

/// Ascending eigenvalues of the Hermitian part of `a`.
pub fn eigvalsh(a: &CMatrix) -> Result<Vec<f64>> {
    let Tridiagonal { mut diag, mut off, .. } = tridiagonalize(a, false)?;
    tridiagonal_ql(&mut diag, &mut off, None)?;
    diag.sort_by(f64::total_cmp);
    Ok(diag)
}

pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    let mut out = a.clone();
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
        }
    }
    out
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diag().iter().sum()
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest `|A_ij - conj(A_ji)|`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm of the off-diagonal part.
pub fn offdiagonal_norm(a: &CMatrix) -> f64 {
    a.indexed_iter()
        .filter(|((i, j), _)| i != j)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Square root of a positive-semidefinite Hermitian matrix; eigenvalues
/// below `clamp` are set to zero.
pub fn psd_sqrt(a: &CMatrix, clamp: f64) -> Result<CMatrix> {
    let Eigh { values, vectors } = eigh(a)?;
    let roots: Vec<f64> = values.iter().map(|&x| if x < clamp { 0.0 } else { x.sqrt() }).collect();
    Ok(scale_columns_and_reassemble(&vectors, &roots))
}

/// `V diag(w) V†`.
pub fn scale_columns_and_reassemble(v: &CMatrix, w: &[f64]) -> CMatrix {
    let mut scaled = v.clone();
    for (mut col, &x) in scaled.columns_mut().into_iter().zip(w) {
        col.mapv_inplace(|z| z * x);
    }
    scaled.dot(&adjoint(v))
}

/// Trace norm `‖A‖₁` of a Hermitian matrix.
pub fn trace_norm_hermitian(a: &CMatrix) -> Result<f64> {
    Ok(eigvalsh(a)?.iter().map(|x| x.abs()).sum())
}

/// Trace distance `½‖A - B‖₁` between Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let n = check_square(a)?;
    if b.dim() != (n, n) {
        return Err(Error::DimensionMismatch { expected: n, found: b.nrows() });
    }
    Ok(0.5 * trace_norm_hermitian(&hermitian_part(&(a - b)))?)
}

/// Square operator in compressed sparse row form, or a plain diagonal.
#[derive(Debug, Clone)]
pub enum SparseOp {
    Diagonal(Vec<C64>),
    Csr { n: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<C64> },
}

impl SparseOp {
    /// Keeps entries whose modulus exceeds `drop_tol` times the largest one.
    pub fn from_dense(a: &CMatrix, drop_tol: f64) -> SparseOp {
        let n = a.nrows();
        let max = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = drop_tol * max;
        let diagonal = a.indexed_iter().all(|((r, c), z)| r == c || z.norm() <= cut);
        if diagonal {
            return SparseOp::Diagonal((0..n).map(|i| a[(i, i)]).collect());
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..n {
            for c in 0..n {
                let z = a[(r, c)];
                if z.norm() > cut {
                    indices.push(c);
                    values.push(z);
                }
            }
            indptr.push(indices.len());
        }
        SparseOp::Csr { n, indptr, indices, values }
    }

    pub fn dim(&self) -> usize {
        match self {
            SparseOp::Diagonal(d) => d.len(),
            SparseOp::Csr { n, .. } => *n,
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            SparseOp::Diagonal(d) => d.len(),
            SparseOp::Csr { values, .. } => values.len(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, SparseOp::Diagonal(_))
    }

    /// `out += s · A x`.
    pub fn left_mul_add(&self, x: &[C64], s: C64, out: &mut [C64]) {
        let n = self.dim();
        match self {
            SparseOp::Diagonal(d) => {
                for r in 0..n {
                    let f = s * d[r];
                    for c in 0..n {
                        out[r * n + c] += f * x[r * n + c];
                    }
                }
            }
            SparseOp::Csr { indptr, indices, values, .. } => {
                for r in 0..n {
                    let row = &mut out[r * n..(r + 1) * n];
                    for k in indptr[r]..indptr[r + 1] {
                        let f = s * values[k];
                        let src = &x[indices[k] * n..(indices[k] + 1) * n];
                        for (o, v) in row.iter_mut().zip(src) {
                            *o += f * v;
                        }
                    }
                }
            }
        }
    }

    /// `out += s · x A`.
    pub fn right_mul_add(&self, x: &[C64], s: C64, out: &mut [C64]) {
        let n = self.dim();
        match self {
            SparseOp::Diagonal(d) => {
                for r in 0..n {
                    for c in 0..n {
                        out[r * n + c] += s * x[r * n + c] * d[c];
                    }
                }
            }
            SparseOp::Csr { indptr, indices, values, .. } => {
                // (x A)_{r,c} = Σ_k x_{r,k} A_{k,c}
                for r in 0..n {
                    for k in 0..n {
                        let f = s * x[r * n + k];
                        if f.re == 0.0 && f.im == 0.0 {
                            continue;
                        }
                        for p in indptr[k]..indptr[k + 1] {
                            out[r * n + indices[p]] += f * values[p];
                        }
                    }
                }
            }
        }
    }

    pub fn diagonal(&self) -> Option<&[C64]> {
        match self {
            SparseOp::Diagonal(d) => Some(d),
            SparseOp::Csr { .. } => None,
        }
    }
}
