//! Linear solvers for the symmetric positive definite nodal systems.

use crate::error::{Error, Result};

/// Compressed sparse row matrix storing both triangles.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(c, _)| i.abs_diff(c))).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(c, v)| (self.get(c, i) - v).abs() <= tol * v.abs().max(1.0)))
    }

    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.mul_vec(x, &mut ax);
        let num: f64 = ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

/// Banded Cholesky factor `A = L L^T`, rows of `L` stored densely over the band.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    band: usize,
    // row i holds L[i][i-band ..= i] at offsets 0..=band
    data: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let band = a.bandwidth();
        let w = band + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            for (c, v) in a.row(i) {
                if c <= i {
                    data[i * w + (c + band - i)] = v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(band);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(band));
                let mut s = data[i * w + (j + band - i)];
                let ri = i * w + band - i;
                let rj = j * w + band - j;
                for k in klo..j {
                    s -= data[ri + k] * data[rj + k];
                }
                if j == i {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::InvalidConfig(format!("matrix not positive definite at row {i}")));
                    }
                    data[ri + i] = s.sqrt();
                } else {
                    data[ri + j] = s / data[rj + j];
                }
            }
        }
        Ok(Self { n, band, data })
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [f64]) {
        let w = self.band + 1;
        let band = self.band;
        for i in 0..self.n {
            let lo = i.saturating_sub(band);
            let ri = i * w + band - i;
            let mut s = b[i];
            for k in lo..i {
                s -= self.data[ri + k] * b[k];
            }
            b[i] = s / self.data[ri + i];
        }
        for i in (0..self.n).rev() {
            let lo = i.saturating_sub(band);
            let ri = i * w + band - i;
            let xi = b[i] / self.data[ri + i];
            b[i] = xi;
            for k in lo..i {
                b[k] -= self.data[ri + k] * xi;
            }
        }
    }
}

/// Jacobi-preconditioned conjugate gradients, for systems too large to factor.
pub fn pcg(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut x: Vec<f64> = b.iter().zip(&diag).map(|(b, d)| b / d).collect();
    let mut r = vec![0.0; n];
    a.mul_vec(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm / bnorm <= rel_tol {
            return Ok(x);
        }
        a.mul_vec(&p, &mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = a.relative_residual(&x, b);
    if residual <= rel_tol {
        Ok(x)
    } else {
        Err(Error::SolverNonConvergence { residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_chain(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn cholesky_and_cg_agree() {
        let a = laplacian_chain(50);
        assert_eq!(a.bandwidth(), 1);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let chol = BandCholesky::factor(&a).unwrap();
        let mut x = b.clone();
        chol.solve(&mut x);
        assert!(a.relative_residual(&x, &b) < 1e-13);
        let y = pcg(&a, &b, 1e-12, 1000).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn indefinite_rejected() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(BandCholesky::factor(&a).is_err());
    }
}
