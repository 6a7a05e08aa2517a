//! Stationary distributions of finite Markov chains.

/// Row-sparse transition matrix.
#[derive(Debug, Clone, Default)]
pub struct SparseChain {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseChain {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut dense = vec![vec![0.0; n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                dense[i][j] += p;
            }
        }
        dense
    }
}

#[derive(Debug, Clone)]
pub struct Stationary {
    pub distribution: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on the lazy chain `(I + P) / 2`, which has the same
/// stationary distributions as `P` but no periodicity. Stops when the L1 change
/// between sweeps drops to `tol`.
pub fn stationary_power(chain: &SparseChain, start: &[f64], tol: f64, max_iter: usize) -> Stationary {
    let n = chain.len();
    let mut pi = start.to_vec();
    let mut next = vec![0.0; n];
    for it in 1..=max_iter {
        next.iter_mut().zip(&pi).for_each(|(nx, p)| *nx = 0.5 * p);
        for (i, row) in chain.rows.iter().enumerate() {
            let w = 0.5 * pi[i];
            if w == 0.0 {
                continue;
            }
            for &(j, p) in row {
                next[j] += w * p;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change <= tol {
            return Stationary {
                distribution: pi,
                iterations: it,
                converged: true,
            };
        }
    }
    Stationary {
        distribution: pi,
        iterations: max_iter,
        converged: false,
    }
}

/// Solves `pi P = pi, sum(pi) = 1` by Gaussian elimination with partial
/// pivoting. Returns `None` if the system is singular (several recurrent
/// classes).
pub fn stationary_direct(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = p.len();
    if n == 0 {
        return None;
    }
    // rows: (P^T - I), last row replaced by the normalization
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        let lead = a[col][col];
        for k in col..=n {
            a[col][k] /= lead;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    Some(a.iter().map(|row| row[n]).collect())
}
