//! Fixed-size complex matrices and the small dense solvers the dynamics need.
//!
//! Everything here is sized for a single momentum mode: 4×4 operators on the
//! two-fermion Fock space, 2×2 blocks for the unitary strokes and the 16×16
//! Liouvillian superoperator.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::scalar::{re, Real, C};

/// Dense 4×4 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat4<T>(pub [[C<T>; 4]; 4]);

impl<T: Real> CMat4<T> {
    pub fn zeros() -> Self {
        CMat4([[C::zero(); 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = C::one();
        }
        m
    }

    pub fn from_real_diagonal(d: [T; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = re(d[i]);
        }
        m
    }

    /// `|i⟩⟨j|`
    pub fn unit(i: usize, j: usize) -> Self {
        let mut m = Self::zeros();
        m.0[i][j] = C::one();
        m
    }

    pub fn outer(u: &[C<T>; 4], v: &[C<T>; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C<T> {
        (0..4).fold(C::zero(), |acc, i| acc + self.0[i][i])
    }

    pub fn diagonal(&self) -> [C<T>; 4] {
        [self.0[0][0], self.0[1][1], self.0[2][2], self.0[3][3]]
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|x| *x = *x * s);
        m
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(re(s))
    }

    pub fn norm_fro(&self) -> T {
        self.0
            .iter()
            .flatten()
            .map(|x| x.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |acc, x| acc.max(x.norm()))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    /// Largest entry of `self - self†`.
    pub fn hermiticity_defect(&self) -> T {
        let mut d = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        d
    }

    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_real(T::lit(0.5))
    }

    pub fn apply(&self, v: &[C<T>; 4]) -> [C<T>; 4] {
        let mut out = [C::zero(); 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).fold(C::zero(), |acc, j| acc + self.0[i][j] * v[j]);
        }
        out
    }

    /// `⟨v|M|v⟩`
    pub fn expectation(&self, v: &[C<T>; 4]) -> C<T> {
        let mv = self.apply(v);
        (0..4).fold(C::zero(), |acc, i| acc + v[i].conj() * mv[i])
    }

    /// Row-major vectorisation, `vec(M)[4i + j] = M[i][j]`.
    pub fn to_vec16(&self) -> [C<T>; 16] {
        let mut out = [C::zero(); 16];
        for i in 0..4 {
            for j in 0..4 {
                out[4 * i + j] = self.0[i][j];
            }
        }
        out
    }

    pub fn from_vec16(v: &[C<T>]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = v[4 * i + j];
            }
        }
        m
    }
}

impl<T: Real> Index<(usize, usize)> for CMat4<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.0[i][j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMat4<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.0[i][j]
    }
}

impl<T: Real> Add for CMat4<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Real> AddAssign for CMat4<T> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
    }
}

impl<T: Real> Sub for CMat4<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        self
    }
}

impl<T: Real> Neg for CMat4<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_real(-T::one())
    }
}

impl<T: Real> Mul for CMat4<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..4 {
                    m.0[i][j] = m.0[i][j] + a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

/// 2×2 complex matrix, row-major. Used for propagators of the closed
/// `{|0,0⟩, |1,1⟩}` block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat2<T>(pub [[C<T>; 2]; 2]);

impl<T: Real> CMat2<T> {
    pub fn identity() -> Self {
        CMat2([[C::one(), C::zero()], [C::zero(), C::one()]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        CMat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn apply(&self, v: [C<T>; 2]) -> [C<T>; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// `exp(-i n·σ)` for a real Pauli vector `n = (x, y, z)`.
    pub fn su2_exp(n: [T; 3]) -> Self {
        let theta = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let (s, c) = theta.sin_cos();
        let sinc = if theta > T::zero() { s / theta } else { T::one() };
        let (x, y, z) = (n[0] * sinc, n[1] * sinc, n[2] * sinc);
        CMat2([
            [C::new(c, -z), C::new(-y, -x)],
            [C::new(y, -x), C::new(c, z)],
        ])
    }

    /// Embeds the block into a 4×4 operator acting on basis states 0 and 3,
    /// identity on states 1 and 2.
    pub fn embed_block(&self) -> CMat4<T> {
        let mut m = CMat4::identity();
        m.0[0][0] = self.0[0][0];
        m.0[0][3] = self.0[0][1];
        m.0[3][0] = self.0[1][0];
        m.0[3][3] = self.0[1][1];
        m
    }

    /// Largest entry of `U†U - 1`.
    pub fn unitarity_defect(&self) -> T {
        let p = self.adjoint() * *self;
        let mut d = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { C::one() } else { C::zero() };
                d = d.max((p.0[i][j] - target).norm());
            }
        }
        d
    }
}

impl<T: Real> Mul for CMat2<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        CMat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Eigenvalues of a Hermitian 4×4 matrix, ascending, by cyclic complex Jacobi
/// rotations. Only the Hermitian part of `m` is used.
pub fn hermitian_eigenvalues<T: Real>(m: &CMat4<T>) -> [T; 4] {
    let mut a = m.hermitian_part();
    let scale = a.max_abs().max(T::min_positive_value());
    let tol = T::epsilon() * scale * T::lit(0.5);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..4 {
            for q in (p + 1)..4 {
                off = off.max(a.0[p][q].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                let apq = a.0[p][q];
                let b = apq.norm();
                if b <= tol {
                    continue;
                }
                // Phase rotation making a[p][q] real, then a real Givens rotation.
                let phase = apq / re(b);
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                let tau = (aqq - app) / (T::lit(2.0) * b);
                let t = tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let mut g = CMat4::identity();
                g.0[p][p] = re(c);
                g.0[q][q] = re(c);
                g.0[p][q] = re(s);
                g.0[q][p] = re(-s);
                let mut ph = CMat4::identity();
                ph.0[q][q] = phase.conj();
                let u = ph * g;
                a = u.adjoint() * a * u;
                a.0[p][q] = C::zero();
                a.0[q][p] = C::zero();
            }
        }
    }
    let mut ev = [a.0[0][0].re, a.0[1][1].re, a.0[2][2].re, a.0[3][3].re];
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Square dense complex matrix with row-major storage.
#[derive(Clone, Debug)]
pub struct DenseC<T> {
    n: usize,
    data: Vec<C<T>>,
}

impl<T: Real> DenseC<T> {
    pub fn zeros(n: usize) -> Self {
        DenseC {
            n,
            data: vec![C::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C<T>) {
        self.data[i * self.n + j] = v;
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, x| acc.max(x.norm()))
    }

    /// Numerical rank by Gaussian elimination with complete pivoting.
    /// Pivots below `rel_tol * max|a|` count as zero.
    pub fn rank(&self, rel_tol: T) -> usize {
        let n = self.n;
        let mut a = self.data.clone();
        let cutoff = rel_tol * self.max_abs();
        let mut rank = 0;
        for k in 0..n {
            let (mut pi, mut pj, mut best) = (k, k, T::zero());
            for i in k..n {
                for j in k..n {
                    let v = a[i * n + j].norm();
                    if v > best {
                        best = v;
                        pi = i;
                        pj = j;
                    }
                }
            }
            if best <= cutoff {
                break;
            }
            rank += 1;
            if pi != k {
                for j in 0..n {
                    a.swap(k * n + j, pi * n + j);
                }
            }
            if pj != k {
                for i in 0..n {
                    a.swap(i * n + k, i * n + pj);
                }
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                if f.is_zero() {
                    continue;
                }
                for j in k..n {
                    let upd = a[k * n + j] * f;
                    a[i * n + j] = a[i * n + j] - upd;
                }
            }
        }
        rank
    }

    /// Solves `A x = b` by LU with partial pivoting. Returns `None` when a
    /// pivot vanishes.
    pub fn solve(&self, b: &[C<T>]) -> Option<Vec<C<T>>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let (mut pi, mut best) = (k, T::zero());
            for i in k..n {
                let v = a[i * n + k].norm();
                if v > best {
                    best = v;
                    pi = i;
                }
            }
            if best == T::zero() {
                return None;
            }
            if pi != k {
                for j in 0..n {
                    a.swap(k * n + j, pi * n + j);
                }
                x.swap(k, pi);
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                if f.is_zero() {
                    continue;
                }
                for j in k..n {
                    let upd = a[k * n + j] * f;
                    a[i * n + j] = a[i * n + j] - upd;
                }
                let upd = x[k] * f;
                x[i] = x[i] - upd;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in (k + 1)..n {
                s = s - a[k * n + j] * x[j];
            }
            x[k] = s / a[k * n + k];
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::im;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_matches_known_spectrum() {
        // diag(1,2,3,4) conjugated by a complex unitary built from two rotations.
        let d = CMat4::from_real_diagonal([1.0, 2.0, 3.0, 4.0]);
        let u = CMat2::su2_exp([0.3, -0.7, 0.2]).embed_block();
        let mut v = CMat4::<f64>::identity();
        v.0[1][1] = C::new(0.6, 0.0);
        v.0[1][2] = im(0.8);
        v.0[2][1] = im(0.8);
        v.0[2][2] = C::new(0.6, 0.0);
        let w = u * v;
        let m = w * d * w.adjoint();
        let ev = hermitian_eigenvalues(&m);
        for (got, want) in ev.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-13);
        }
    }

    #[test]
    fn su2_exp_is_unitary() {
        let u = CMat2::<f64>::su2_exp([1.3, 0.2, -4.0]);
        assert!(u.unitarity_defect() < 1e-15);
        let z = CMat2::<f64>::su2_exp([0.0, 0.0, 0.0]);
        assert_eq!(z, CMat2::identity());
    }

    #[test]
    fn rank_and_solve() {
        let mut a = DenseC::<f64>::zeros(3);
        a.set(0, 0, re(2.0));
        a.set(0, 1, re(1.0));
        a.set(1, 0, re(4.0));
        a.set(1, 1, re(2.0));
        a.set(2, 2, im(1.0));
        assert_eq!(a.rank(1e-12), 2);
        a.set(1, 1, re(3.0));
        assert_eq!(a.rank(1e-12), 3);
        let x = a.solve(&[re(3.0), re(7.0), im(2.0)]).unwrap();
        assert_abs_diff_eq!(x[0].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[2].re, 2.0, epsilon = 1e-14);
    }
}
