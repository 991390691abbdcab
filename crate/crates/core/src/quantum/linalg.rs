//! Dense complex matrices for qubit-to-ququart systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Row-major entries of an `n × n` matrix.
    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}×{n} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Quantum("non-finite matrix entry".into()));
        }
        Ok(CMatrix { n, data })
    }

    pub fn from_real(n: usize, data: &[f64]) -> Result<Self> {
        CMatrix::from_vec(n, data.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn outer(psi: &[Complex64]) -> Self {
        let n = psi.len();
        let mut m = CMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m.data[r * n + c] = psi[r] * psi[c].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.n + c]
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        out
    }

    /// `self ⊗ other`, with `self` on the slow index.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (p, q) = (self.n, other.n);
        let n = p * q;
        let mut out = CMatrix::zeros(n);
        for i in 0..p {
            for j in 0..p {
                let a = self.data[i * p + j];
                for k in 0..q {
                    for l in 0..q {
                        out.data[(i * q + k) * n + j * q + l] = a * other.data[k * q + l];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    /// `Tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> Complex64 {
        let n = self.n;
        let mut t = Complex64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                t += self.data[r * n + c] * other.data[c * n + r];
            }
        }
        t
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    ///
    /// Runs cyclic Jacobi on the real symmetric embedding
    /// `[[Re A, −Im A], [Im A, Re A]]`, whose spectrum is that of `A` with
    /// every eigenvalue doubled.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let m = 2 * n;
        let mut a = vec![0.0; m * m];
        for r in 0..n {
            for c in 0..n {
                // Symmetrize away any residual anti-Hermitian part.
                let z = (self.get(r, c) + self.get(c, r).conj()) * 0.5;
                a[r * m + c] = z.re;
                a[(r + n) * m + c + n] = z.re;
                a[(r + n) * m + c] = z.im;
                a[r * m + c + n] = -z.im;
            }
        }
        jacobi_eigenvalues(&mut a, m);
        let mut eig: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
        eig.sort_by(f64::total_cmp);
        eig.into_iter().step_by(2).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()[0]
    }
}

/// Diagonalizes a real symmetric matrix in place.
fn jacobi_eigenvalues(a: &mut [f64], m: usize) {
    let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|r| (0..m).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[r * m + c] * a[r * m + c])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm {
            return;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pauli_y_spectrum() {
        let y = CMatrix::from_vec(2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let eig = y.hermitian_eigenvalues();
        assert!((eig[0] + 1.0).abs() < 1e-14 && (eig[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kron_and_trace() {
        let z = CMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let zz = z.kron(&z);
        assert_eq!(zz.trace(), c(0.0, 0.0));
        assert_eq!(zz.get(3, 3), c(1.0, 0.0));
        assert_eq!(zz.get(1, 1), c(-1.0, 0.0));
        let i4 = CMatrix::identity(4);
        assert_eq!(zz.mul(&zz), i4);
        assert_eq!(zz.trace_product(&i4), zz.trace());
    }

    #[test]
    fn projector_spectrum() {
        let psi = [c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)];
        let p = CMatrix::outer(&psi);
        let eig = p.hermitian_eigenvalues();
        assert!(eig[0].abs() < 1e-14 && eig[1].abs() < 1e-14 && (eig[2] - 1.0).abs() < 1e-14);
        assert!(p.hermiticity_defect() < 1e-16);
    }
}
