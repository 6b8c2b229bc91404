//! Legendre/Gauss-Lobatto operators on [-1, 1] and their tensor-product
//! extension to the reference cube.
//!
//! All matrices are dense and row-major. A [`NodalBasis`] is immutable once
//! built and can be shared freely between threads.

use std::f64::consts::PI;

use thiserror::Error;

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 30;

const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("polynomial degree {0} outside supported range 1..={MAX_DEGREE}")]
    DegreeOutOfRange(usize),
    #[error("Gauss-Lobatto Newton iteration did not converge for node {node} (degree {degree})")]
    NoConvergence { degree: usize, node: usize },
    #[error("degree mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Evaluates `L_n(x)` and `L_n'(x)` by the three-term recurrence and its
/// differentiated form.
pub fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    // L_{k+1} = ((2k+1) x L_k - k L_{k-1}) / (k+1)
    // L'_{k+1} = L'_{k-1} + (2k+1) L_k
    let (mut l_prev, mut l_cur) = (1.0, x);
    let (mut dl_prev, mut dl_cur) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let l_next = ((2.0 * kf + 1.0) * x * l_cur - kf * l_prev) / (kf + 1.0);
        let dl_next = dl_prev + (2.0 * kf + 1.0) * l_cur;
        l_prev = l_cur;
        l_cur = l_next;
        dl_prev = dl_cur;
        dl_cur = dl_next;
    }
    (l_cur, dl_cur)
}

/// Legendre-Gauss-Lobatto nodes (ascending) and weights for degree `n`.
///
/// Interior nodes are the roots of `(1 - x^2) L_n'(x)`, found by Newton
/// iteration from Chebyshev-Gauss-Lobatto guesses. The Legendre ODE gives the
/// derivative of that polynomial in closed form, `-n(n+1) L_n(x)`.
pub fn gauss_lobatto(n: usize) -> Result<(Vec<f64>, Vec<f64>), SpectralError> {
    if n == 0 || n > MAX_DEGREE {
        return Err(SpectralError::DegreeOutOfRange(n));
    }
    let nf = n as f64;
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    let tol = 4.0 * f64::EPSILON;
    // Only the left half is iterated; the rule is symmetric about 0.
    for j in 1..=(n - 1) / 2 {
        let mut x = -(PI * j as f64 / nf).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (l, dl) = legendre_eval(n, x);
            let q = (1.0 - x * x) * dl;
            let dq = -nf * (nf + 1.0) * l;
            let delta = q / dq;
            x -= delta;
            if delta.abs() <= tol * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SpectralError::NoConvergence { degree: n, node: j });
        }
        nodes[j] = x;
        nodes[n - j] = -x;
    }
    if n.is_multiple_of(2) {
        nodes[n / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (l, _) = legendre_eval(n, x);
            2.0 / (nf * (nf + 1.0) * l * l)
        })
        .collect();
    Ok((nodes, weights))
}

/// Nodal Lagrange basis collocated at the LGL points of one degree.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalBasis {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    d: Vec<f64>,
    q: Vec<f64>,
}

impl NodalBasis {
    pub fn new(degree: usize) -> Result<Self, SpectralError> {
        let (nodes, weights) = gauss_lobatto(degree)?;
        let np = degree + 1;
        let bary: Vec<f64> = (0..np)
            .map(|j| {
                let prod: f64 = (0..np)
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();
        let mut d = vec![0.0; np * np];
        for i in 0..np {
            let mut diag = 0.0;
            for j in 0..np {
                if i != j {
                    let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                    d[i * np + j] = v;
                    diag -= v;
                }
            }
            d[i * np + i] = diag;
        }
        let q = (0..np * np).map(|ij| weights[ij / np] * d[ij]).collect();
        Ok(Self {
            degree,
            nodes,
            weights,
            bary,
            d,
            q,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of nodes per direction, `N + 1`.
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn barycentric_weights(&self) -> &[f64] {
        &self.bary
    }

    /// `D[i][j] = l_j'(x_i)`.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[i * (self.degree + 1) + j]
    }

    pub fn d_matrix(&self) -> &[f64] {
        &self.d
    }

    /// `Q = M D` with the diagonal mass matrix `M = diag(w)`.
    #[inline]
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * (self.degree + 1) + j]
    }

    pub fn q_matrix(&self) -> &[f64] {
        &self.q
    }

    /// Entry of the boundary matrix `B = diag(-1, 0, ..., 0, 1)`.
    pub fn boundary(&self, i: usize, j: usize) -> f64 {
        if i != j {
            0.0
        } else if i == 0 {
            -1.0
        } else if i == self.degree {
            1.0
        } else {
            0.0
        }
    }

    fn check_len(&self, len: usize) -> Result<(), SpectralError> {
        if len != self.len() {
            Err(SpectralError::LengthMismatch {
                expected: self.len(),
                got: len,
            })
        } else {
            Ok(())
        }
    }

    /// Barycentric evaluation of the interpolant through `values` at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&xj, &uj)) in self.nodes.iter().zip(values).enumerate() {
            let diff = x - xj;
            if diff == 0.0 {
                return uj;
            }
            let t = self.bary[j] / diff;
            num += t * uj;
            den += t;
        }
        num / den
    }

    /// Row `j` holds the Lagrange polynomials evaluated at `targets[j]`.
    pub fn interpolation_matrix(&self, targets: &[f64]) -> Vec<f64> {
        let np = self.len();
        let mut out = vec![0.0; targets.len() * np];
        for (r, &x) in targets.iter().enumerate() {
            let row = &mut out[r * np..(r + 1) * np];
            if let Some(k) = self.nodes.iter().position(|&xj| xj == x) {
                row[k] = 1.0;
                continue;
            }
            let mut den = 0.0;
            for j in 0..np {
                let t = self.bary[j] / (x - self.nodes[j]);
                row[j] = t;
                den += t;
            }
            row.iter_mut().for_each(|v| *v /= den);
        }
        out
    }

    /// Nodal derivative `D u`.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        let np = self.len();
        (0..np)
            .map(|i| (0..np).map(|j| self.d(i, j) * values[j]).sum())
            .collect()
    }

    pub fn quadrature(&self, values: &[f64]) -> Result<f64, SpectralError> {
        self.check_len(values.len())?;
        Ok(values.iter().zip(&self.weights).map(|(f, w)| f * w).sum())
    }

    /// `<u, v>_N = sum_j u_j v_j w_j`.
    pub fn inner_product(&self, u: &[f64], v: &[f64]) -> Result<f64, SpectralError> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        Ok(u.iter()
            .zip(v)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum())
    }

    /// Tensor-product inner product over the reference cube.
    pub fn inner_product_3d(&self, u: &[f64], v: &[f64]) -> Result<f64, SpectralError> {
        let np = self.len();
        let expected = np * np * np;
        for len in [u.len(), v.len()] {
            if len != expected {
                return Err(SpectralError::LengthMismatch { expected, got: len });
            }
        }
        let mut s = 0.0;
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let idx = i + np * (j + np * k);
                    s += u[idx] * v[idx] * self.weights[i] * self.weights[j] * self.weights[k];
                }
            }
        }
        Ok(s)
    }

    /// Discrete Legendre coefficients of the interpolant of `u`:
    /// `C_k = <u, L_k>_N / <L_k, L_k>_N`.
    pub fn aliasing_coefficients(&self, u: &[f64]) -> Result<Vec<f64>, SpectralError> {
        self.check_len(u.len())?;
        (0..=self.degree)
            .map(|k| {
                let lk: Vec<f64> = self.nodes.iter().map(|&x| legendre_eval(k, x).0).collect();
                Ok(self.inner_product(u, &lk)? / self.inner_product(&lk, &lk)?)
            })
            .collect()
    }

    /// Three-dimensional weight `w_i w_j w_k` at a flattened node index.
    #[inline]
    pub fn weight_3d(&self, idx: usize) -> f64 {
        let np = self.len();
        self.weights[idx % np] * self.weights[(idx / np) % np] * self.weights[idx / (np * np)]
    }
}

/// Values on the `(N+1)^3` tensor grid, `i` (xi) fastest, then `j` (eta),
/// then `k` (zeta).
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField3D<T> {
    degree: usize,
    values: Vec<T>,
}

impl<T: Clone> NodalField3D<T> {
    pub fn filled(degree: usize, value: T) -> Self {
        let np = degree + 1;
        Self {
            degree,
            values: vec![value; np * np * np],
        }
    }

    pub fn from_fn(degree: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let np = degree + 1;
        let mut values = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    values.push(f(i, j, k));
                }
            }
        }
        Self { degree, values }
    }

    pub fn from_values(degree: usize, values: Vec<T>) -> Result<Self, SpectralError> {
        let np = degree + 1;
        if values.len() != np * np * np {
            return Err(SpectralError::LengthMismatch {
                expected: np * np * np,
                got: values.len(),
            });
        }
        Ok(Self { degree, values })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let np = self.degree + 1;
        i + np * (j + np * k)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> &T {
        &self.values[self.index(i, j, k)]
    }
}

/// Applies `D` along one reference direction (0 = xi, 1 = eta, 2 = zeta).
pub fn directional_derivative(basis: &NodalBasis, values: &[f64], dir: usize) -> Vec<f64> {
    let np = basis.len();
    let stride = [1, np, np * np][dir];
    let mut out = vec![0.0; values.len()];
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                let idx = i + np * (j + np * k);
                let line = [i, j, k][dir];
                let base = idx - line * stride;
                let mut s = 0.0;
                for n in 0..np {
                    s += basis.d(line, n) * values[base + n * stride];
                }
                out[idx] = s;
            }
        }
    }
    out
}

/// Spectral gradient on the reference cube.
pub fn tensor_gradient(basis: &NodalBasis, field: &NodalField3D<f64>) -> [NodalField3D<f64>; 3] {
    assert_eq!(
        field.degree(),
        basis.degree(),
        "field/basis degree mismatch"
    );
    std::array::from_fn(|dir| NodalField3D {
        degree: field.degree,
        values: directional_derivative(basis, &field.values, dir),
    })
}

/// Spectral divergence on the reference cube.
pub fn tensor_divergence(basis: &NodalBasis, flux: &[NodalField3D<f64>; 3]) -> NodalField3D<f64> {
    let mut out = NodalField3D::filled(basis.degree(), 0.0);
    for (dir, comp) in flux.iter().enumerate() {
        assert_eq!(comp.degree(), basis.degree(), "field/basis degree mismatch");
        let deriv = directional_derivative(basis, &comp.values, dir);
        for (o, v) in out.values.iter_mut().zip(deriv) {
            *o += v;
        }
    }
    out
}
