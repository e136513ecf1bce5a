//! Free-fermion working medium decomposed into independent momentum modes.
//!
//! Each positive momentum `k` carries a two-fermion Fock space with ordered
//! basis `{|0,0⟩, |1_k,0⟩, |0,1_{-k}⟩, |1_k,1_{-k}⟩}` (indices 0..4). The mode
//! Hamiltonian only couples `|0,0⟩` and `|1,1⟩`:
//!
//! ```text
//!        | d   0  0  b |
//!  H_k = | 0   0  0  0 |        d = λ + a_k,  b = b_k
//!        | 0   0  0  0 |
//!        | b*  0  0 -d |
//! ```
//!
//! with spectrum `{-ε, 0, 0, +ε}`, `ε = sqrt(d² + |b|²)`. For the transverse
//! field Ising chain (J = ħ = 1) `d = 2(h + cos k)` and `b = 2 sin k`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMat2, CMat4};
use crate::scalar::{re, Real, C};

/// Antiperiodic-sector momenta `k_m = (2m - 1)π/L`, `m = 1..=L/2`.
pub fn momentum_grid<T: Real>(length: usize) -> Result<Vec<T>> {
    if length < 2 || length % 2 != 0 {
        return Err(Error::InvalidLength(length));
    }
    let l = T::from_count(length);
    Ok((1..=length / 2)
        .map(|m| T::from_count(2 * m - 1) * T::PI() / l)
        .collect())
}

/// Parameters of one momentum mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeHamiltonian<T> {
    /// Momentum in `(0, π)`.
    pub k: T,
    /// Real coefficient of `σ^z`, `λ + a_k`.
    pub diag: T,
    /// Complex coefficient `b_k` of `σ^+`.
    pub offdiag: C<T>,
}

impl<T: Real> ModeHamiltonian<T> {
    pub fn new(k: T, diag: T, offdiag: C<T>) -> Self {
        ModeHamiltonian { k, diag, offdiag }
    }

    /// `diag·σ^z + b σ^+ + b* σ^-` on `Ψ_k`.
    pub fn matrix2(&self) -> CMat2<T> {
        CMat2([
            [re(self.diag), self.offdiag],
            [self.offdiag.conj(), re(-self.diag)],
        ])
    }

    /// Full 4×4 operator in the two-fermion Fock basis.
    pub fn matrix4(&self) -> CMat4<T> {
        self.matrix2().embed_block()
            - CMat4::from_real_diagonal([T::zero(), T::one(), T::one(), T::zero()])
    }

    /// Real Pauli vector `(x, y, z)` with `H_block = x σ^x + y σ^y + z σ^z`.
    pub fn pauli_vector(&self) -> [T; 3] {
        [self.offdiag.re, -self.offdiag.im, self.diag]
    }

    /// Positive eigenvalue `ε` of the block; the 4×4 spectrum is `{-ε, 0, 0, ε}`.
    pub fn level(&self) -> T {
        self.diag.hypot(self.offdiag.norm())
    }

    /// Spectral radius of the 4×4 matrix.
    pub fn spectral_radius(&self) -> T {
        self.level()
    }

    /// Normalised `(ground, excited)` eigenvectors of the 2×2 block, in the
    /// `(|0,0⟩, |1,1⟩)` components. The first nonzero component of each vector
    /// is real and positive.
    pub fn block_eigenvectors(&self) -> ([C<T>; 2], [C<T>; 2]) {
        let d = self.diag;
        let b = self.offdiag;
        let e = self.level();
        if e == T::zero() {
            let one = C::new(T::one(), T::zero());
            let zero = C::new(T::zero(), T::zero());
            return ([zero, one], [one, zero]);
        }
        // Pick the algebraically stable branch for each vector.
        let ground = if d >= T::zero() {
            [b, re(-(d + e))]
        } else {
            [re(e - d), -b.conj()]
        };
        let excited = if d >= T::zero() {
            [re(d + e), b.conj()]
        } else {
            [b, re(e - d)]
        };
        (normalise_phase(ground), normalise_phase(excited))
    }

    /// Ground state of the 4×4 operator (energy `-ε`).
    pub fn ground_vector(&self) -> [C<T>; 4] {
        let (g, _) = self.block_eigenvectors();
        let z = C::new(T::zero(), T::zero());
        [g[0], z, z, g[1]]
    }

    /// Unitary whose columns are the eigenbasis `(ground, |1,0⟩, |0,1⟩, excited)`.
    pub fn eigenframe(&self) -> CMat4<T> {
        let (g, e) = self.block_eigenvectors();
        CMat2([[g[0], e[0]], [g[1], e[1]]]).embed_block()
    }
}

fn normalise_phase<T: Real>(v: [C<T>; 2]) -> [C<T>; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let lead = if v[0].norm() > T::zero() { v[0] } else { v[1] };
    let phase = lead.conj() / re(lead.norm());
    [v[0] * phase / re(n), v[1] * phase / re(n)]
}

/// Transverse-field Ising mode: `diag = 2(h + cos k)`, `offdiag = 2 sin k`.
pub fn tim_mode<T: Real>(h: T, k: T) -> ModeHamiltonian<T> {
    let two = T::lit(2.0);
    ModeHamiltonian::new(k, two * (h + k.cos()), re(two * k.sin()))
}

/// Consecutive-level gap of a mode: `sqrt(diag² + |offdiag|²)`. For the Ising
/// chain this is `E_k = 2 sqrt((h + cos k)² + sin² k)`.
pub fn gap<T: Real>(m: &ModeHamiltonian<T>) -> T {
    m.level()
}

/// `E_k` of the Ising chain.
pub fn tim_gap<T: Real>(h: T, k: T) -> T {
    gap(&tim_mode(h, k))
}

/// Exact many-body ground-state energy `-Σ_k E_k` of the Ising chain.
pub fn ground_state_energy<T: Real>(h: T, length: usize) -> Result<T> {
    Ok(momentum_grid::<T>(length)?
        .into_iter()
        .map(|k| -tim_gap(h, k))
        .sum())
}

/// Whether a ramp between two fields crosses, ends at, or avoids the
/// quantum critical points `h = ±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuenchClass {
    /// Critical point crossed during the ramp.
    Crossing = 1,
    /// Ramp terminates at (or next to) the critical point.
    EndsAtCritical = 2,
}

impl QuenchClass {
    pub fn from_flag(x: u8) -> Result<Self> {
        match x {
            1 => Ok(QuenchClass::Crossing),
            2 => Ok(QuenchClass::EndsAtCritical),
            _ => Err(invalid("x", format!("quench class flag must be 1 or 2, got {x}"))),
        }
    }

    pub fn flag(self) -> u8 {
        self as u8
    }
}

/// Equilibrium critical exponents of the crossed critical point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents<T> {
    pub nu: T,
    pub z: T,
    pub d: u32,
    pub x: QuenchClass,
}

impl<T: Real> CriticalExponents<T> {
    pub fn new(nu: T, z: T, d: u32, x: QuenchClass) -> Result<Self> {
        if !(nu > T::zero()) {
            return Err(invalid("nu", "must be positive"));
        }
        if !(z > T::zero()) {
            return Err(invalid("z", "must be positive"));
        }
        if d < 1 {
            return Err(invalid("d", "must be at least 1"));
        }
        Ok(CriticalExponents { nu, z, d, x })
    }

    /// Ising universality class, `ν = z = d = 1`.
    pub fn ising(x: QuenchClass) -> Self {
        CriticalExponents {
            nu: T::one(),
            z: T::one(),
            d: 1,
            x,
        }
    }

    pub fn dim(&self) -> T {
        T::from_count(self.d as usize)
    }
}
