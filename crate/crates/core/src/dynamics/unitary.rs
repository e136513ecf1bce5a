use super::state::DensityMatrix4;
use super::IntegratorControls;
use crate::error::{invalid, Result};
use crate::linalg::CMat2;
use crate::model::{tim_mode, ModeHamiltonian};
use crate::scalar::{Real, C};

/// Propagator of the `{|0,0⟩, |1,1⟩}` block for `H(t)` interpolating linearly
/// from `start` to `end` over `tau`.
///
/// Fourth-order Magnus expansion with two Gauss points per step: each step is
/// the exact SU(2) exponential of
/// `Ω = (dt/2)(h₁ + h₂) + (√3/6) dt² (h₂ × h₁)` in Pauli-vector form, so the
/// result is unitary to rounding regardless of step size.
pub fn ramp_propagator<T: Real>(
    start: &ModeHamiltonian<T>,
    end: &ModeHamiltonian<T>,
    tau: T,
    controls: &IntegratorControls<T>,
) -> Result<CMat2<T>> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(invalid("tau", "ramp duration must be positive and finite"));
    }
    let omega = start.level().max(end.level());
    let dt = controls.ramp_step(tau, omega);
    let steps = (tau / dt).ceil().to_usize().unwrap_or(usize::MAX).max(1);
    let dt = tau / T::from_count(steps);

    let p0 = start.pauli_vector();
    let p1 = end.pauli_vector();
    let at = |s: T| -> [T; 3] { [0, 1, 2].map(|i| p0[i] + (p1[i] - p0[i]) * s) };
    let half = T::lit(0.5);
    let g = T::lit(3.0).sqrt() / T::lit(6.0);
    let n_steps = T::from_count(steps);

    // The propagator is kept as a unit quaternion, U = q₀ − i q·σ.
    let mut q = [T::one(), T::zero(), T::zero(), T::zero()];
    let c2 = g * dt * dt;
    for n in 0..steps {
        let base = T::from_count(n);
        let a = at((base + half - g) / n_steps);
        let b = at((base + half + g) / n_steps);
        let cross = [
            b[1] * a[2] - b[2] * a[1],
            b[2] * a[0] - b[0] * a[2],
            b[0] * a[1] - b[1] * a[0],
        ];
        let theta = [0, 1, 2].map(|i| half * dt * (a[i] + b[i]) + c2 * cross[i]);
        q = quat_mul(exp_quat(theta), q);
        if n % 256 == 255 {
            q = normalise(q);
        }
    }
    let [q0, x, y, z] = normalise(q);
    Ok(CMat2([
        [C::new(q0, -z), C::new(-y, -x)],
        [C::new(y, -x), C::new(q0, z)],
    ]))
}

/// `exp(−i θ·σ)` as a unit quaternion.
fn exp_quat<T: Real>(theta: [T; 3]) -> [T; 4] {
    let norm = (theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]).sqrt();
    let (s, c) = norm.sin_cos();
    let sinc = if norm > T::zero() { s / norm } else { T::one() };
    [c, theta[0] * sinc, theta[1] * sinc, theta[2] * sinc]
}

/// Product of `a₀ − i a·σ` and `b₀ − i b·σ`.
fn quat_mul<T: Real>(a: [T; 4], b: [T; 4]) -> [T; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + b[0] * a[1] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] + b[0] * a[2] + a[3] * b[1] - a[1] * b[3],
        a[0] * b[3] + b[0] * a[3] + a[1] * b[2] - a[2] * b[1],
    ]
}

fn normalise<T: Real>(q: [T; 4]) -> [T; 4] {
    let n = q.iter().map(|x| *x * *x).sum::<T>().sqrt();
    q.map(|x| x / n)
}

/// Unitary stroke between two mode Hamiltonians whose parameters vary linearly
/// in time. Only the `{|0,0⟩, |1,1⟩}` block evolves; the singly occupied
/// populations and their mutual coherence are untouched because both levels
/// sit at zero energy.
pub fn evolve_linear_ramp<T: Real>(
    rho0: &DensityMatrix4<T>,
    start: &ModeHamiltonian<T>,
    end: &ModeHamiltonian<T>,
    tau: T,
    controls: &IntegratorControls<T>,
) -> Result<DensityMatrix4<T>> {
    let w = ramp_propagator(start, end, tau, controls)?.embed_block();
    DensityMatrix4::from_integrated(w * rho0.matrix() * w.adjoint())
}

/// Ising ramp `h(t) = h_start + (h_end − h_start) t/τ` at momentum `k`.
pub fn evolve_unitary_ramp<T: Real>(
    rho0: &DensityMatrix4<T>,
    k: T,
    h_start: T,
    h_end: T,
    tau: T,
    controls: &IntegratorControls<T>,
) -> Result<DensityMatrix4<T>> {
    evolve_linear_ramp(rho0, &tim_mode(h_start, k), &tim_mode(h_end, k), tau, controls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat4;

    #[test]
    fn propagator_is_unitary() {
        let c = IntegratorControls::default();
        let u = ramp_propagator(&tim_mode(70.0, 0.3), &tim_mode(-5.0, 0.3), 100.0, &c).unwrap();
        assert!(u.unitarity_defect() < 1e-14);
        let v = CMat2::su2_exp([0.3, -0.2, 0.9]) * CMat2::su2_exp([0.1, 0.5, -0.4]);
        let q = quat_mul(exp_quat([0.3, -0.2, 0.9]), exp_quat([0.1, 0.5, -0.4]));
        assert!((v.0[0][0] - C::new(q[0], -q[3])).norm() < 1e-15);
        assert!((v.0[1][0] - C::new(q[2], -q[1])).norm() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_duration() {
        let c = IntegratorControls::default();
        let rho = DensityMatrix4::<f64>::maximally_mixed();
        assert!(evolve_unitary_ramp(&rho, 1.0, 1.0, 2.0, 0.0, &c).is_err());
        assert!(evolve_unitary_ramp(&rho, 1.0, 1.0, 2.0, -1.0, &c).is_err());
    }

    #[test]
    fn sudden_limit_leaves_state() {
        let c = IntegratorControls::default();
        let m = tim_mode(70.0, 1.0);
        let rho = DensityMatrix4::pure(&m.ground_vector()).unwrap();
        let out = evolve_unitary_ramp(&rho, 1.0, 70.0, -5.0, 1e-15, &c).unwrap();
        assert!(out.distance(&rho) < 1e-12);
    }

    #[test]
    fn adiabatic_ramp_follows_ground_state() {
        let c = IntegratorControls::default();
        let k = 1.2;
        let rho = DensityMatrix4::pure(&tim_mode(5.0, k).ground_vector()).unwrap();
        let out = evolve_unitary_ramp(&rho, k, 5.0, 2.0, 200.0, &c).unwrap();
        assert!(out.overlap(&tim_mode(2.0, k).ground_vector()) > 0.999);
    }

    #[test]
    fn middle_block_is_untouched() {
        let c = IntegratorControls::default();
        let mut m = CMat4::from_real_diagonal([0.3, 0.2, 0.1, 0.4]);
        m.0[1][2] = C::new(0.05, 0.02);
        m.0[2][1] = C::new(0.05, -0.02);
        m.0[0][3] = C::new(0.1, 0.0);
        m.0[3][0] = C::new(0.1, 0.0);
        let rho = DensityMatrix4::new(m).unwrap();
        let out = evolve_unitary_ramp(&rho, 0.7, -3.0, 4.0, 7.0, &c).unwrap().matrix();
        assert_eq!(out.0[1][1], m.0[1][1]);
        assert_eq!(out.0[2][2], m.0[2][2]);
        assert_eq!(out.0[1][2], m.0[1][2]);
    }
}
