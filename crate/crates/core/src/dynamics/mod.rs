//! Single-mode stroke dynamics: Lindblad strokes at fixed field, unitary
//! ramps, and the dissipative steady state.

mod bath;
mod lindblad;
mod state;
mod unitary;

use serde::{Deserialize, Serialize};

pub use bath::{jump_operators, BathFrame, BathRole, BathSpec, Dissipator, FermionSign};
pub use lindblad::{
    evolve_dissipative, liouvillian_rhs, steady_state_direct, Liouvillian, SteadyStateMethod,
    StrokePolicy,
};
pub use state::{check_state, energy, DensityMatrix4, POSITIVITY_FLOOR, STATE_TOL};
pub use unitary::{evolve_linear_ramp, evolve_unitary_ramp, ramp_propagator};

use crate::scalar::Real;

/// Step-size rules shared by all strokes.
///
/// Ramps use `dt = min(τ/ramp_min_steps, ramp_courant/Ω_max, ramp_max_step)`
/// and fixed-length
/// dissipative strokes `dt = min(τ/dissipative_min_steps,
/// dissipative_courant/max(Ω, Σκ))`, rounded down so an integer number of
/// steps covers the stroke exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorControls<T> {
    pub ramp_courant: T,
    pub ramp_min_steps: usize,
    /// Absolute cap on the ramp step. The Magnus error is set by how fast the
    /// field direction turns, which the Courant rule misses when `Ω_max` is small.
    pub ramp_max_step: T,
    pub dissipative_courant: T,
    pub dissipative_min_steps: usize,
    pub steady_method: SteadyStateMethod,
    /// RK4 step budget for steady states found by time evolution.
    pub steady_step_budget: usize,
}

impl<T: Real> Default for IntegratorControls<T> {
    fn default() -> Self {
        IntegratorControls {
            ramp_courant: T::lit(0.25),
            ramp_min_steps: 1000,
            ramp_max_step: T::lit(0.025),
            dissipative_courant: T::lit(0.05),
            dissipative_min_steps: 1000,
            steady_method: SteadyStateMethod::Direct,
            steady_step_budget: 50_000_000,
        }
    }
}

impl<T: Real> IntegratorControls<T> {
    pub fn ramp_step(&self, tau: T, omega_max: T) -> T {
        let by_count = (tau / T::from_count(self.ramp_min_steps.max(1))).min(self.ramp_max_step);
        if omega_max > T::zero() {
            by_count.min(self.ramp_courant / omega_max)
        } else {
            by_count
        }
    }

    pub fn dissipative_step(&self, tau: T, stiffness: T) -> T {
        let by_count = tau / T::from_count(self.dissipative_min_steps.max(1));
        if stiffness > T::zero() {
            by_count.min(self.dissipative_courant / stiffness)
        } else {
            by_count
        }
    }

    /// Same rules with every step halved.
    pub fn refined(&self) -> Self {
        IntegratorControls {
            ramp_courant: self.ramp_courant * T::lit(0.5),
            ramp_min_steps: self.ramp_min_steps * 2,
            ramp_max_step: self.ramp_max_step * T::lit(0.5),
            dissipative_courant: self.dissipative_courant * T::lit(0.5),
            dissipative_min_steps: self.dissipative_min_steps * 2,
            ..*self
        }
    }

    pub fn validate(&self) -> crate::error::Result<()> {
        use crate::error::invalid;
        if !(self.ramp_courant > T::zero()) || !self.ramp_courant.is_finite() {
            return Err(invalid("ramp_courant", "must be positive and finite"));
        }
        if !(self.ramp_max_step > T::zero()) || !self.ramp_max_step.is_finite() {
            return Err(invalid("ramp_max_step", "must be positive and finite"));
        }
        if !(self.dissipative_courant > T::zero()) || !self.dissipative_courant.is_finite() {
            return Err(invalid("dissipative_courant", "must be positive and finite"));
        }
        if self.ramp_min_steps == 0 {
            return Err(invalid("ramp_min_steps", "must be at least 1"));
        }
        if self.dissipative_min_steps == 0 {
            return Err(invalid("dissipative_min_steps", "must be at least 1"));
        }
        Ok(())
    }
}
