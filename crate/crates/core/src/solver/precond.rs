//! Preconditioners for conjugate gradients.

use crate::par::{self, Execution};
use crate::solver::sparse::CsrMatrix;
use crate::solver::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    /// Inverse diagonal.
    Jacobi,
    /// Zero fill-in incomplete Cholesky, diagonally shifted on breakdown.
    IncompleteCholesky,
    /// Additive Schwarz over caller-supplied overlapping index sets
    /// (vertex patches for the least-squares system). Without patches it
    /// reduces to Jacobi.
    #[default]
    Schwarz,
}

pub(crate) enum Built {
    Jacobi(Vec<f64>),
    Cholesky(IncompleteCholesky),
    Schwarz(AdditiveSchwarz),
}

impl Built {
    pub fn new(kind: Preconditioner, a: &CsrMatrix, patches: Option<&[Vec<usize>]>, exec: Execution) -> Result<Self, SolverError> {
        let diag = a.diagonal();
        if let Some((row, &value)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
            return Err(SolverError::NonPositiveDiagonal { row, value });
        }
        Ok(match (kind, patches) {
            (Preconditioner::Jacobi, _) | (Preconditioner::Schwarz, None) => Built::Jacobi(diag.iter().map(|d| 1.0 / d).collect()),
            (Preconditioner::IncompleteCholesky, _) => Built::Cholesky(IncompleteCholesky::new(a)),
            (Preconditioner::Schwarz, Some(p)) => Built::Schwarz(AdditiveSchwarz::new(a, p, exec)?),
        })
    }

    /// `z = M^{-1} r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Built::Jacobi(inv) => {
                for ((z, r), d) in z.iter_mut().zip(r).zip(inv) {
                    *z = r * d;
                }
            }
            Built::Cholesky(ic) => ic.solve(r, z),
            Built::Schwarz(s) => s.apply(r, z),
        }
    }
}

/// `M^{-1} = Σ_p R_pᵀ A_p^{-1} R_p` with dense Cholesky factors of the
/// principal submatrices; indices outside every patch use the diagonal.
pub struct AdditiveSchwarz {
    patches: Vec<Vec<usize>>,
    factors: Vec<Vec<f64>>,
    uncovered: Vec<(usize, f64)>,
    exec: Execution,
}

impl AdditiveSchwarz {
    pub fn new(a: &CsrMatrix, patches: &[Vec<usize>], exec: Execution) -> Result<Self, SolverError> {
        let n = a.n();
        let mut covered = vec![false; n];
        for p in patches {
            debug_assert!(p.windows(2).all(|w| w[0] < w[1]), "patch indices must be sorted");
            for &i in p {
                covered[i] = true;
            }
        }
        let uncovered = (0..n).filter(|&i| !covered[i]).map(|i| (i, 1.0 / a.get(i, i))).collect();
        let factors = par::map_range(exec, patches.len(), |k| {
            let dofs = &patches[k];
            let m = dofs.len();
            let mut local = vec![0.0; m * m];
            for (li, &i) in dofs.iter().enumerate() {
                let (cols, vals) = a.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    if let Ok(lj) = dofs.binary_search(&(j as usize)) {
                        local[li * m + lj] = v;
                    }
                }
            }
            if cholesky_in_place(&mut local, m) {
                Ok(local)
            } else {
                Err(SolverError::Breakdown {
                    iteration: 0,
                    curvature: f64::NAN,
                })
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        Ok(AdditiveSchwarz {
            patches: patches.to_vec(),
            factors,
            uncovered,
            exec,
        })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let local = par::map_range(self.exec, self.patches.len(), |k| {
            let mut x: Vec<f64> = self.patches[k].iter().map(|&i| r[i]).collect();
            cholesky_solve(&self.factors[k], &mut x);
            x
        });
        z.iter_mut().for_each(|v| *v = 0.0);
        for (dofs, x) in self.patches.iter().zip(&local) {
            for (&i, &v) in dofs.iter().zip(x) {
                z[i] += v;
            }
        }
        for &(i, d) in &self.uncovered {
            z[i] = r[i] * d;
        }
    }
}

/// Overwrites the lower triangle of a row-major SPD matrix with its
/// Cholesky factor. False if a pivot is not positive.
fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], x: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

/// Lower factor `L` with `L Lᵀ ≈ A` on the lower-triangular pattern of `A`.
pub struct IncompleteCholesky {
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    /// Diagonal shift `α` used (`A + α diag(A)`); zero when none was needed.
    pub shift: f64,
}

impl IncompleteCholesky {
    pub fn new(a: &CsrMatrix) -> Self {
        let n = a.n();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut base = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j as usize <= i {
                    col_idx.push(j);
                    base.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let mut shift = 0.0;
        loop {
            let mut ic = IncompleteCholesky {
                row_ptr: row_ptr.clone(),
                col_idx: col_idx.clone(),
                values: base.clone(),
                shift,
            };
            if ic.factor() {
                return ic;
            }
            shift = if shift == 0.0 { 1e-4 } else { 4.0 * shift };
        }
    }

    /// In-place factorization; false on a non-positive pivot.
    fn factor(&mut self) -> bool {
        let n = self.row_ptr.len() - 1;
        for i in 0..n {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            // last entry of each row is the diagonal
            debug_assert_eq!(self.col_idx[hi - 1] as usize, i);
            self.values[hi - 1] *= 1.0 + self.shift;
            for p in lo..hi - 1 {
                let k = self.col_idx[p] as usize;
                let (klo, khi) = (self.row_ptr[k], self.row_ptr[k + 1]);
                // Σ_{j<k} L_ij L_kj over the common pattern
                let mut s = 0.0;
                let (mut a, mut b) = (lo, klo);
                while a < p && b < khi - 1 {
                    let (ca, cb) = (self.col_idx[a], self.col_idx[b]);
                    if ca == cb {
                        s += self.values[a] * self.values[b];
                        a += 1;
                        b += 1;
                    } else if ca < cb {
                        a += 1;
                    } else {
                        b += 1;
                    }
                }
                self.values[p] = (self.values[p] - s) / self.values[khi - 1];
            }
            let d = self.values[hi - 1] - self.values[lo..hi - 1].iter().map(|v| v * v).sum::<f64>();
            if !(d > 0.0) {
                return false;
            }
            self.values[hi - 1] = d.sqrt();
        }
        true
    }

    /// Solves `L Lᵀ z = r`.
    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.row_ptr.len() - 1;
        for i in 0..n {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = r[i];
            for p in lo..hi - 1 {
                s -= self.values[p] * z[self.col_idx[p] as usize];
            }
            z[i] = s / self.values[hi - 1];
        }
        for i in (0..n).rev() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            z[i] /= self.values[hi - 1];
            let zi = z[i];
            for p in lo..hi - 1 {
                z[self.col_idx[p] as usize] -= self.values[p] * zi;
            }
        }
    }
}
