use serde::{Deserialize, Serialize};

use super::bath::{BathSpec, Dissipator, FermionSign};
use super::state::DensityMatrix4;
use super::IntegratorControls;
use crate::error::{invalid, Error, Result};
use crate::linalg::{CMat4, DenseC};
use crate::model::ModeHamiltonian;
use crate::scalar::{im, re, Real, C};

/// How long a dissipative stroke lasts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrokePolicy<T> {
    /// Integrate for exactly this duration.
    Fixed(T),
    /// Run until `‖dρ/dt‖_F < tol`.
    SteadyState { tol: T },
}

/// Solver used for [`StrokePolicy::SteadyState`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyStateMethod {
    /// Null vector of the 16×16 Liouvillian.
    #[default]
    Direct,
    /// Time evolution with the fixed-step integrator until the residual is met.
    Evolve,
}

/// `−i[H, ρ] + D[ρ]` for one mode.
#[derive(Clone, Debug)]
pub struct Liouvillian<T> {
    h: CMat4<T>,
    dissipator: Dissipator<T>,
}

impl<T: Real> Liouvillian<T> {
    pub fn new(mode: &ModeHamiltonian<T>, bath: &BathSpec<T>, sign: FermionSign) -> Self {
        Liouvillian {
            h: mode.matrix4(),
            dissipator: Dissipator::new(bath, mode, sign),
        }
    }

    pub fn hamiltonian(&self) -> &CMat4<T> {
        &self.h
    }

    pub fn apply(&self, rho: &CMat4<T>) -> CMat4<T> {
        let comm = self.h.commutator(rho).scale(im(-T::one()));
        comm + self.dissipator.apply(rho)
    }

    /// Largest rate scale: spectral radius of `H` or the summed bath rates.
    pub fn stiffness(&self) -> T {
        let omega = crate::linalg::hermitian_eigenvalues(&self.h)
            .iter()
            .fold(T::zero(), |a, e| a.max(e.abs()));
        omega.max(self.dissipator.total_rate())
    }

    /// Matrix of the map on row-major `vec(ρ)`, built column by column from
    /// the action on the matrix units.
    pub fn superoperator(&self) -> DenseC<T> {
        let mut s = DenseC::zeros(16);
        for col in 0..16 {
            let image = self.apply(&CMat4::unit(col / 4, col % 4)).to_vec16();
            for (row, v) in image.iter().enumerate() {
                s.set(row, col, *v);
            }
        }
        s
    }

    fn rk4_step(&self, rho: &CMat4<T>, dt: T) -> CMat4<T> {
        let half = T::lit(0.5) * dt;
        let k1 = self.apply(rho);
        let k2 = self.apply(&(*rho + k1.scale_real(half)));
        let k3 = self.apply(&(*rho + k2.scale_real(half)));
        let k4 = self.apply(&(*rho + k3.scale_real(dt)));
        let two = T::lit(2.0);
        *rho + (k1 + k2.scale_real(two) + k3.scale_real(two) + k4).scale_real(dt / T::lit(6.0))
    }
}

/// `dρ/dt = −i[H, ρ] + Σ_j κ_j (L_j ρ L_j† − ½{L_j†L_j, ρ})`.
///
/// The result is Hermitian and traceless. Rejects `rho` whose anti-Hermitian
/// part exceeds `1e-9`.
pub fn liouvillian_rhs<T: Real>(
    rho: &CMat4<T>,
    mode: &ModeHamiltonian<T>,
    bath: &BathSpec<T>,
    sign: FermionSign,
) -> Result<CMat4<T>> {
    let defect = rho.hermiticity_defect();
    if defect > T::tol(1e-9) {
        return Err(Error::InvalidState {
            invariant: "hermiticity",
            deviation: defect.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(Liouvillian::new(mode, bath, sign).apply(rho))
}

/// Unique trace-one fixed point of the Liouvillian, from the 16×16 linear
/// system with one equation replaced by `Tr ρ = 1`.
pub fn steady_state_direct<T: Real>(
    mode: &ModeHamiltonian<T>,
    bath: &BathSpec<T>,
    sign: FermionSign,
) -> Result<DensityMatrix4<T>> {
    steady_state_of(&Liouvillian::new(mode, bath, sign))
}

pub(crate) fn steady_state_of<T: Real>(l: &Liouvillian<T>) -> Result<DensityMatrix4<T>> {
    let mut s = l.superoperator();
    let rank = s.rank(T::rank_tolerance());
    if rank < 15 {
        return Err(Error::DegenerateSteadyState { nullity: 16 - rank });
    }
    // Every row of the superoperator image is traceless, so dropping row 0 in
    // favour of the trace row loses no information.
    for col in 0..16 {
        let diag = col / 4 == col % 4;
        s.set(0, col, if diag { re(T::one()) } else { C::new(T::zero(), T::zero()) });
    }
    let mut rhs = vec![C::new(T::zero(), T::zero()); 16];
    rhs[0] = re(T::one());
    let x = s.solve(&rhs).ok_or(Error::DegenerateSteadyState { nullity: 16 - rank })?;
    DensityMatrix4::from_integrated(CMat4::from_vec16(&x))
}

/// Dissipative stroke at fixed field.
pub fn evolve_dissipative<T: Real>(
    rho0: &DensityMatrix4<T>,
    mode: &ModeHamiltonian<T>,
    bath: &BathSpec<T>,
    sign: FermionSign,
    policy: StrokePolicy<T>,
    controls: &IntegratorControls<T>,
) -> Result<DensityMatrix4<T>> {
    let l = Liouvillian::new(mode, bath, sign);
    match policy {
        StrokePolicy::Fixed(tau) => {
            if !(tau >= T::zero()) || !tau.is_finite() {
                return Err(invalid("tau", "stroke duration must be finite and nonnegative"));
            }
            if tau == T::zero() {
                return Ok(*rho0);
            }
            let dt = controls.dissipative_step(tau, l.stiffness());
            let steps = (tau / dt).ceil().to_usize().unwrap_or(usize::MAX).max(1);
            let dt = tau / T::from_count(steps);
            let mut rho = rho0.matrix();
            for _ in 0..steps {
                rho = l.rk4_step(&rho, dt);
            }
            DensityMatrix4::from_integrated(rho)
        }
        StrokePolicy::SteadyState { tol } => {
            if !(tol > T::zero()) {
                return Err(invalid("steady_tol", "must be positive"));
            }
            match controls.steady_method {
                SteadyStateMethod::Direct => {
                    let rho = steady_state_of(&l)?;
                    let residual = l.apply(&rho.matrix()).norm_fro();
                    if residual >= tol {
                        return Err(Error::SteadyStateNotReached {
                            residual: residual.to_f64().unwrap_or(f64::NAN),
                            tol: tol.to_f64().unwrap_or(f64::NAN),
                            steps: 0,
                        });
                    }
                    Ok(rho)
                }
                SteadyStateMethod::Evolve => evolve_to_steady(rho0, &l, tol, controls),
            }
        }
    }
}

fn evolve_to_steady<T: Real>(
    rho0: &DensityMatrix4<T>,
    l: &Liouvillian<T>,
    tol: T,
    controls: &IntegratorControls<T>,
) -> Result<DensityMatrix4<T>> {
    let dt = controls.dissipative_courant / l.stiffness();
    let check_every = 64;
    let mut rho = rho0.matrix();
    let mut steps = 0;
    let mut residual = l.apply(&rho).norm_fro();
    while residual >= tol {
        if steps >= controls.steady_step_budget {
            return Err(Error::SteadyStateNotReached {
                residual: residual.to_f64().unwrap_or(f64::NAN),
                tol: tol.to_f64().unwrap_or(f64::NAN),
                steps,
            });
        }
        for _ in 0..check_every {
            rho = l.rk4_step(&rho, dt);
        }
        steps += check_every;
        // Renormalising the Hermitian part keeps rounding from drifting
        // over very long runs; the fixed point is unaffected.
        rho = rho.hermitian_part();
        residual = l.apply(&rho).norm_fro();
    }
    DensityMatrix4::from_integrated(rho)
}
