//! Dense complex LU with partial pivoting over double-double scalars.

use num_traits::{One, Zero};

use crate::scalar::{abs, real, to_f64, Cx, Real};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<Cx>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Cx::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Cx::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Cx) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Cx] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[Cx]) -> Vec<Cx> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Cx::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// Largest absolute column sum.
    pub fn norm1(&self) -> Real {
        (0..self.n)
            .map(|j| (0..self.n).fold(Real::zero(), |acc, i| acc + abs(self[(i, j)])))
            .fold(Real::zero(), |a, b| if b > a { b } else { a })
    }

    /// Largest entry modulus of `self - other^H`; zero for Hermitian pairs.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = Real::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let d = abs(self[(i, j)] - self[(j, i)].conj());
                if d > worst {
                    worst = d;
                }
            }
        }
        to_f64(worst)
    }

    /// Scales every row to unit max-modulus. Returns the applied factors.
    fn equilibrate_rows(&mut self) -> Vec<Real> {
        let n = self.n;
        let mut scales = Vec::with_capacity(n);
        for i in 0..n {
            let row = &mut self.data[i * n..(i + 1) * n];
            let big = row
                .iter()
                .map(|z| abs(*z))
                .fold(Real::zero(), |a, b| if b > a { b } else { a });
            let s = if big > Real::zero() {
                Real::one() / big
            } else {
                Real::one()
            };
            for z in row.iter_mut() {
                *z = *z * s;
            }
            scales.push(s);
        }
        scales
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Cx;
    fn index(&self, (i, j): (usize, usize)) -> &Cx {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx {
        &mut self.data[i * self.n + j]
    }
}

/// `P A = L U` with unit-diagonal `L` stored below the diagonal.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<Cx>,
    // row i of P A is row perm[i] of A
    perm: Vec<usize>,
    singular: bool,
}

impl Lu {
    pub fn factor(a: Matrix) -> Self {
        let n = a.n;
        let mut lu = a.data;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;

        for col in 0..n {
            let mut piv = col;
            let mut best = abs(lu[col * n + col]);
            for r in col + 1..n {
                let m = abs(lu[r * n + col]);
                if m > best {
                    best = m;
                    piv = r;
                }
            }
            if best == Real::zero() {
                singular = true;
                continue;
            }
            if piv != col {
                for j in 0..n {
                    lu.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
            }
            let inv_pivot = Cx::one() / lu[col * n + col];
            for r in col + 1..n {
                let factor = lu[r * n + col] * inv_pivot;
                lu[r * n + col] = factor;
                if factor.is_zero() {
                    continue;
                }
                for j in col + 1..n {
                    let upd = factor * lu[col * n + j];
                    lu[r * n + j] = lu[r * n + j] - upd;
                }
            }
        }
        Self {
            n,
            lu,
            perm,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Cx]) -> Vec<Cx> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<Cx> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            x[i] = row.iter().zip(&x[..i]).fold(x[i], |s, (&l, &xj)| s - l * xj);
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = row.iter().zip(&x[i + 1..]).fold(x[i], |s, (&u, &xj)| s - u * xj);
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[Cx]) -> Vec<Cx> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // A^H = U^H L^H P
        let mut z = b.to_vec();
        for i in 0..n {
            let s = (0..i).fold(z[i], |s, j| s - self.lu[j * n + i].conj() * z[j]);
            z[i] = s / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            z[i] = (i + 1..n).fold(z[i], |s, j| s - self.lu[j * n + i].conj() * z[j]);
        }
        let mut x = vec![Cx::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    /// Hager–Higham estimate of `‖A⁻¹‖₁` (lower bound, usually tight).
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        if self.singular {
            return f64::INFINITY;
        }
        let l1 = |v: &[Cx]| v.iter().fold(Real::zero(), |a, z| a + abs(*z));
        let mut x = vec![Cx::new(real(1.0 / n as f64), Real::zero()); n];
        let mut est = Real::zero();
        for iter in 0..5 {
            let y = self.solve(&x);
            let ny = l1(&y);
            if iter > 0 && ny <= est {
                break;
            }
            est = ny;
            let sign: Vec<Cx> = y
                .iter()
                .map(|z| {
                    let m = abs(*z);
                    if m == Real::zero() {
                        Cx::one()
                    } else {
                        *z / Cx::new(m, Real::zero())
                    }
                })
                .collect();
            let z = self.solve_adjoint(&sign);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, abs(*v)))
                .fold((0, Real::zero()), |acc, c| if c.1 > acc.1 { c } else { acc });
            let ztx = z
                .iter()
                .zip(&x)
                .fold(Cx::zero(), |acc, (a, b)| acc + a.conj() * *b)
                .re;
            if iter > 0 && zmax <= ztx {
                break;
            }
            x = vec![Cx::zero(); n];
            x[j] = Cx::one();
        }
        // Higham's alternating test vector guards against the rare underestimate.
        if n > 1 {
            let alt: Vec<Cx> = (0..n)
                .map(|i| {
                    let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                    Cx::new(real(s * (1.0 + i as f64 / (n - 1) as f64)), Real::zero())
                })
                .collect();
            let y = self.solve(&alt);
            let alt_est = real(2.0) * l1(&y) / real(3.0 * n as f64);
            if alt_est > est {
                est = alt_est;
            }
        }
        to_f64(est)
    }
}

/// Solution of a row-equilibrated dense system together with the 1-norm
/// condition estimate of the equilibrated matrix.
pub struct EquilibratedSolve {
    pub x: Vec<Cx>,
    pub condition: f64,
}

pub fn solve_equilibrated(mut a: Matrix, b: &[Cx]) -> EquilibratedSolve {
    let scales = a.equilibrate_rows();
    let rhs: Vec<Cx> = b.iter().zip(&scales).map(|(z, s)| *z * *s).collect();
    let norm = to_f64(a.norm1());
    let lu = Lu::factor(a);
    if lu.is_singular() {
        return EquilibratedSolve {
            x: vec![Cx::zero(); b.len()],
            condition: f64::INFINITY,
        };
    }
    let x = lu.solve(&rhs);
    let condition = norm * lu.inverse_norm1_estimate();
    EquilibratedSolve { x, condition }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cx, relative_gap_vec};

    fn sample() -> Matrix {
        Matrix::from_fn(4, |i, j| {
            cx(
                ((i * 7 + j * 3) % 5) as f64 - 2.0 + if i == j { 6.0 } else { 0.0 },
                (i as f64 - j as f64) * 0.5,
            )
        })
    }

    #[test]
    fn solve_recovers_rhs() {
        let a = sample();
        let b: Vec<Cx> = (0..4).map(|i| cx(i as f64, 1.0 - i as f64)).collect();
        let x = Lu::factor(a.clone()).solve(&b);
        assert!(relative_gap_vec(&a.mul_vec(&x), &b) < 1e-28);
    }

    #[test]
    fn adjoint_solve_recovers_rhs() {
        let a = sample();
        let ah = Matrix::from_fn(4, |i, j| a[(j, i)].conj());
        let b: Vec<Cx> = (0..4).map(|i| cx(1.0, i as f64)).collect();
        let x = Lu::factor(a).solve_adjoint(&b);
        assert!(relative_gap_vec(&ah.mul_vec(&x), &b) < 1e-28);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_fn(2, |i, j| if i == j { cx(0.0, 0.0) } else { cx(1.0, 0.0) });
        let x = Lu::factor(a).solve(&[cx(2.0, 0.0), cx(3.0, 0.0)]);
        assert_eq!(to_f64(x[0].re), 3.0);
        assert_eq!(to_f64(x[1].re), 2.0);
    }

    #[test]
    fn condition_estimate_of_diagonal_is_exact() {
        let a = Matrix::from_fn(3, |i, j| {
            if i == j {
                cx([1.0, 1e-3, 10.0][i], 0.0)
            } else {
                cx(0.0, 0.0)
            }
        });
        let lu = Lu::factor(a);
        assert!((lu.inverse_norm1_estimate() - 1e3).abs() < 1e-9);
    }

    #[test]
    fn singular_matrix_reports_infinite_condition() {
        let a = Matrix::from_fn(2, |_, _| cx(1.0, 0.0));
        let s = solve_equilibrated(a, &[cx(1.0, 0.0), cx(1.0, 0.0)]);
        assert!(s.condition.is_infinite());
    }
}
