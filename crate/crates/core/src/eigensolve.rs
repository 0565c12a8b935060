//! Symmetric eigensolver: Householder reduction to tridiagonal form followed
//! by the implicit-shift QL iteration, with eigenvector accumulation.
//!
//! Deterministic: identical inputs give bitwise-identical outputs. Eigenpairs
//! are returned in ascending eigenvalue order and each eigenvector is
//! normalised with its first significant component positive.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::SingleParticleHamiltonian;

/// Maximum QL sweeps per eigenvalue before giving up.
const MAX_QL_ITER: usize = 50;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Column k is the eigenvector for `values[k]`.
    pub vectors: Array2<f64>,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Eigendecomposition of the one-electron chain Hamiltonian (zero diagonal,
/// nearest-neighbour hopping).
pub fn eig_tridiagonal(h: &SingleParticleHamiltonian) -> Result<EigenDecomposition> {
    let n = h.n_sites();
    if h.hopping.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("non-finite hopping element".into()));
    }
    let mut d = vec![0.0; n];
    // e[i] couples sites i and i+1; e[n-1] is scratch.
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&h.hopping);
    let mut z = Array2::eye(n);
    ql_implicit_shift(&mut d, &mut e, &mut z)?;
    Ok(finish(d, z))
}

/// Eigendecomposition of a dense symmetric matrix.
pub fn eig_symmetric(a: &Array2<f64>) -> Result<EigenDecomposition> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "matrix must be square, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix element".into()));
    }
    let mut amax: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            amax = amax.max(a[(i, j)].abs());
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > 1e-10 * amax.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric (deviation {asym:.3e})"
        )));
    }

    let (mut d, mut e, mut z) = householder_tridiagonalize(a.clone());
    ql_implicit_shift(&mut d, &mut e, &mut z)?;
    Ok(finish(d, z))
}

/// Reduces a symmetric matrix to tridiagonal form by Householder reflections,
/// accumulating the orthogonal transformation. Returns (diagonal, coupling
/// `e[i]` between i and i+1 with `e[n-1]` scratch, transform).
fn householder_tridiagonalize(mut a: Array2<f64>) -> (Vec<f64>, Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[(j, i)] = a[(i, j)] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[(j, k)] * a[(i, k)];
                    }
                    for k in j + 1..=l {
                        g += a[(k, j)] * a[(i, k)];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * a[(i, j)];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[(j, k)] -= f * e[k] + g * a[(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }

    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[(i, k)] * a[(k, j)];
                }
                for k in 0..i {
                    a[(k, j)] -= g * a[(k, i)];
                }
            }
        }
        d[i] = a[(i, i)];
        a[(i, i)] = 1.0;
        for j in 0..i {
            a[(j, i)] = 0.0;
            a[(i, j)] = 0.0;
        }
    }

    // Renumber so e[i] couples i and i+1.
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    (d, e, a)
}

/// QL iteration with implicit shifts on a symmetric tridiagonal matrix.
/// `d` is the diagonal, `e[i]` couples i and i+1 (`e[n-1]` scratch), and the
/// rotations are accumulated onto the columns of `z`.
fn ql_implicit_shift(d: &mut [f64], e: &mut [f64], z: &mut Array2<f64>) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITER {
                return Err(Error::EigenNoConvergence { size: n, index: l });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
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
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
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

/// Sorts eigenpairs ascending and applies the sign convention (first
/// significant component of each vector positive).
fn finish(d: Vec<f64>, z: Array2<f64>) -> EigenDecomposition {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        values.push(d[src]);
        let col = z.column(src);
        let vmax = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let flip = col
            .iter()
            .find(|v| v.abs() > 1e-12 * vmax)
            .map_or(false, |&v| v < 0.0);
        for k in 0..n {
            vectors[(k, dst)] = if flip { -col[k] } else { col[k] };
        }
    }
    EigenDecomposition { values, vectors }
}
