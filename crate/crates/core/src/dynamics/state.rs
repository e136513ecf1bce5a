use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMat4};
use crate::scalar::{re, Real, C};

/// Hermiticity and trace tolerance for a valid state.
pub const STATE_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted before a state is rejected.
pub const POSITIVITY_FLOOR: f64 = -1e-10;

/// Density matrix of one momentum mode in the ordered Fock basis
/// `{|0,0⟩, |1_k,0⟩, |0,1_{-k}⟩, |1_k,1_{-k}⟩}`.
///
/// Construction validates Hermiticity, unit trace and positivity, so every
/// value of this type is a physical state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix4<T> {
    entries: CMat4<T>,
}

impl<T: Real> DensityMatrix4<T> {
    pub fn new(m: CMat4<T>) -> Result<Self> {
        check_state(&m)?;
        Ok(Self::wrap(m))
    }

    /// Symmetrises `m` (discarding its anti-Hermitian part) before validating.
    /// Used at the end of integrations where rounding leaves ulp-level
    /// asymmetry; a defect larger than `1e-9` is still an error.
    pub fn from_integrated(m: CMat4<T>) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > T::tol(1e-9) {
            return Err(state_error("hermiticity", defect));
        }
        Self::new(m.hermitian_part())
    }

    fn wrap(entries: CMat4<T>) -> Self {
        DensityMatrix4 { entries }
    }

    pub fn matrix(&self) -> CMat4<T> {
        self.entries
    }

    /// `I/4`.
    pub fn maximally_mixed() -> Self {
        Self::wrap(CMat4::from_real_diagonal([T::lit(0.25); 4]))
    }

    /// Projector onto a (not necessarily normalised) nonzero vector.
    pub fn pure(v: &[C<T>; 4]) -> Result<Self> {
        let n: T = v.iter().map(|x| x.norm_sqr()).sum();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(state_error("normalisable vector", n.to_f64().unwrap_or(f64::NAN)));
        }
        let s = T::one() / n.sqrt();
        let u = v.map(|x| x * re(s));
        Self::new(CMat4::outer(&u, &u).hermitian_part())
    }

    /// Diagonal occupation probabilities in basis order.
    pub fn populations(&self) -> [T; 4] {
        [0, 1, 2, 3].map(|i| self.entries.0[i][i].re)
    }

    pub fn eigenvalues(&self) -> [T; 4] {
        hermitian_eigenvalues(&self.matrix())
    }

    /// `⟨v|ρ|v⟩` for a normalised `v`.
    pub fn overlap(&self, v: &[C<T>; 4]) -> T {
        self.matrix().expectation(v).re
    }

    /// Frobenius distance to another state.
    pub fn distance(&self, other: &Self) -> T {
        (self.matrix() - other.matrix()).norm_fro()
    }

    pub fn trace(&self) -> T {
        self.populations().into_iter().sum()
    }
}

fn state_error<T: Real>(invariant: &'static str, deviation: T) -> Error {
    Error::InvalidState {
        invariant,
        deviation: deviation.to_f64().unwrap_or(f64::NAN),
    }
}

/// Checks the three state invariants with the crate tolerances.
pub fn check_state<T: Real>(m: &CMat4<T>) -> Result<()> {
    if m.0.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(state_error("finite entries", T::nan()));
    }
    let herm = m.hermiticity_defect();
    if herm > T::tol(STATE_TOL) {
        return Err(state_error("hermiticity", herm));
    }
    let tr = m.trace();
    let dev = (tr - re(T::one())).norm();
    if dev > T::tol(STATE_TOL) {
        return Err(state_error("unit trace", dev));
    }
    let low = hermitian_eigenvalues(m)[0];
    if low < -T::tol(-POSITIVITY_FLOOR) {
        return Err(state_error("positivity", low));
    }
    if low < T::zero() {
        log::trace!("state eigenvalue {low} within positivity floor");
    }
    Ok(())
}

/// `Re Tr(Hρ)`.
///
/// # Panics
/// If the imaginary part exceeds `1e-10` relative to `‖H‖`, which can only
/// happen when `h` is not Hermitian.
pub fn energy<T: Real>(rho: &DensityMatrix4<T>, h: &CMat4<T>) -> T {
    let e = (*h * rho.matrix()).trace();
    let scale = h.max_abs().max(T::one());
    assert!(
        e.im.abs() <= T::tol(1e-10) * scale,
        "energy has imaginary part {}",
        e.im
    );
    e.re
}
