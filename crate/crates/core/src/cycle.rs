//! The four-stroke Otto cycle over all momentum modes.
//!
//! Strokes: A→B energizing bath at `h₁`, B→C ramp `h₁→h₂` over `τ₁`, C→D
//! relaxing bath at `h₂`, D→A ramp `h₂→h₁` over `τ₂`. Corner energies use the
//! Hamiltonian at the corner's field. Sign conventions: heat flowing into the
//! medium is positive and `W = −(Q_in + Q_out)` is negative when the machine
//! delivers work.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    energy, evolve_dissipative, evolve_unitary_ramp, BathFrame, BathRole, BathSpec,
    DensityMatrix4, FermionSign, IntegratorControls, StrokePolicy,
};
use crate::error::{invalid, Error, Result};
use crate::model::{momentum_grid, tim_mode};
use crate::scalar::Real;

/// Limit-cycle iteration controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRepeat<T> {
    pub max_cycles: usize,
    /// Frobenius change of a mode's A-state below which it counts as converged.
    pub tol: T,
}

impl<T: Real> Default for CycleRepeat<T> {
    fn default() -> Self {
        CycleRepeat {
            max_cycles: 10,
            tol: T::tol(1e-10),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig<T> {
    pub length: usize,
    pub h1: T,
    pub h2: T,
    pub tau1: T,
    pub tau2: T,
    pub energizing: BathSpec<T>,
    pub relaxing: BathSpec<T>,
    pub energizing_policy: StrokePolicy<T>,
    pub relaxing_policy: StrokePolicy<T>,
    /// Time charged to a steady-state energizing stroke in `τ_total`.
    pub energizing_time: T,
    /// Time charged to a steady-state relaxing stroke in `τ_total`.
    pub relaxing_time: T,
    pub cycle_repeat: CycleRepeat<T>,
    pub integrator: IntegratorControls<T>,
    pub sign: FermionSign,
    /// Ground-state population the relaxing stroke must reach for the
    /// adiabatic-limit analysis to apply.
    pub ground_population_min: T,
}

impl<T: Real> CycleConfig<T> {
    /// Ising cycle with steady-state strokes and default controls.
    pub fn tim(
        length: usize,
        h1: T,
        h2: T,
        tau1: T,
        tau2: T,
        energizing: BathSpec<T>,
        relaxing: BathSpec<T>,
    ) -> Self {
        let steady = StrokePolicy::SteadyState { tol: T::tol(1e-10) };
        CycleConfig {
            length,
            h1,
            h2,
            tau1,
            tau2,
            energizing,
            relaxing,
            energizing_policy: steady,
            relaxing_policy: steady,
            energizing_time: T::zero(),
            relaxing_time: T::zero(),
            cycle_repeat: CycleRepeat::default(),
            integrator: IntegratorControls::default(),
            sign: FermionSign::default(),
            ground_population_min: T::lit(0.999),
        }
    }

    /// Both fields deep in the paramagnetic phase (`h₁ = 70`, `h₂ = −5`),
    /// crossing both critical points on each ramp.
    pub fn para_para() -> Self {
        Self::kz_preset(T::lit(70.0), T::lit(-5.0))
    }

    /// Paramagnet to ferromagnet (`h₁ = 10`, `h₂ = 0`).
    pub fn para_ferro() -> Self {
        Self::kz_preset(T::lit(10.0), T::zero())
    }

    /// Starts next to the critical point (`h₁ = 0.99`, `h₂ = 0`).
    pub fn critical_ferro() -> Self {
        Self::kz_preset(T::lit(0.99), T::zero())
    }

    fn kz_preset(h1: T, h2: T) -> Self {
        let energizing = BathSpec::tim(T::lit(0.995), T::one(), BathRole::Energizing)
            .expect("preset rates are valid");
        let relaxing = BathSpec::tim(T::one(), T::zero(), BathRole::Relaxing)
            .expect("preset rates are valid")
            .with_frame(BathFrame::Eigenmode);
        Self::tim(100, h1, h2, T::lit(0.01), T::lit(100.0), energizing, relaxing)
    }

    /// Cycle confined to large fields, with bare-mode baths on both sides.
    pub fn generalized(h2: T) -> Self {
        let energizing = BathSpec::tim(T::lit(0.995), T::one(), BathRole::Energizing)
            .expect("preset rates are valid");
        let relaxing = BathSpec::tim(T::lit(0.95), T::one(), BathRole::Relaxing)
            .expect("preset rates are valid");
        Self::tim(100, T::lit(70.0), h2, T::lit(0.1), T::lit(100.0), energizing, relaxing)
    }

    pub fn validate(&self) -> Result<()> {
        momentum_grid::<T>(self.length)?;
        for (name, v) in [("h1", self.h1), ("h2", self.h2)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.h1 < self.h2 {
            return Err(invalid("h2", "must not exceed h1"));
        }
        for (name, v) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(invalid(name, "ramp duration must be positive and finite"));
            }
        }
        for (bath, policy) in [
            (&self.energizing, self.energizing_policy),
            (&self.relaxing, self.relaxing_policy),
        ] {
            let steady = matches!(policy, StrokePolicy::SteadyState { .. });
            if steady || bath.kappa.iter().any(|k| *k != T::zero()) {
                BathSpec::new(bath.kappa, bath.label, bath.frame)?;
            }
            match policy {
                StrokePolicy::Fixed(t) if !(t >= T::zero()) || !t.is_finite() => {
                    return Err(invalid("bath_time", "fixed stroke duration must be finite and nonnegative"));
                }
                StrokePolicy::SteadyState { tol } if !(tol > T::zero()) => {
                    return Err(invalid("steady_tol", "must be positive"));
                }
                _ => {}
            }
        }
        for (name, v) in [
            ("energizing_time", self.energizing_time),
            ("relaxing_time", self.relaxing_time),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(invalid(name, "must be finite and nonnegative"));
            }
        }
        if self.cycle_repeat.max_cycles == 0 {
            return Err(invalid("max_cycles", "must be at least 1"));
        }
        if !(self.cycle_repeat.tol > T::zero()) {
            return Err(invalid("cycle_tol", "must be positive"));
        }
        if !(self.ground_population_min >= T::zero() && self.ground_population_min <= T::one()) {
            return Err(invalid("ground_population_min", "must lie in [0, 1]"));
        }
        self.integrator.validate()
    }

    /// `τ₁ + τ₂` plus the bath stroke durations (fixed policies) or the
    /// configured effective times (steady-state policies).
    pub fn tau_total(&self) -> T {
        let bath_time = |policy: StrokePolicy<T>, effective: T| match policy {
            StrokePolicy::Fixed(t) => t,
            StrokePolicy::SteadyState { .. } => effective,
        };
        self.tau1
            + self.tau2
            + bath_time(self.energizing_policy, self.energizing_time)
            + bath_time(self.relaxing_policy, self.relaxing_time)
    }

    /// With both baths run to their (unique) steady states the state at B
    /// does not depend on the state at A.
    pub fn is_history_free(&self) -> bool {
        matches!(self.energizing_policy, StrokePolicy::SteadyState { .. })
            && matches!(self.relaxing_policy, StrokePolicy::SteadyState { .. })
    }
}

/// Sign pattern of the heat and work flows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineClass {
    Engine,
    Refrigerator,
    HeatDistributor,
    Other,
}

impl MachineClass {
    pub fn as_str(self) -> &'static str {
        match self {
            MachineClass::Engine => "engine",
            MachineClass::Refrigerator => "refrigerator",
            MachineClass::HeatDistributor => "heat_distributor",
            MachineClass::Other => "other",
        }
    }
}

impl std::fmt::Display for MachineClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_mode<T: Real>(q_in: T, q_out: T, w: T) -> MachineClass {
    let zero = T::zero();
    if q_in > zero && q_out < zero && w < zero {
        MachineClass::Engine
    } else if q_in < zero && q_out > zero && w > zero {
        MachineClass::Refrigerator
    } else if q_out < zero && w > zero {
        MachineClass::HeatDistributor
    } else {
        MachineClass::Other
    }
}

/// Corner energies and flows of one momentum mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord<T> {
    pub k: T,
    pub e_a: T,
    pub e_b: T,
    pub e_c: T,
    pub e_d: T,
    pub e_a_ground: T,
    pub e_d_ground: T,
    pub q_in: T,
    pub q_out: T,
    pub w: T,
    pub class: MachineClass,
    /// Overlap of the state at D with the ground state at `h₂`.
    pub ground_population_d: T,
    /// Number of cycles this mode ran before its A-state converged.
    pub cycles: usize,
}

/// Aggregates over the momentum grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleTotals<T> {
    pub e_a: T,
    pub e_b: T,
    pub e_c: T,
    pub e_d: T,
    pub e_a_ground: T,
    pub e_d_ground: T,
    pub e_ex_a: T,
    pub q_in: T,
    pub q_out: T,
    pub w: T,
    /// `−W/Q_in`; absent when `Q_in = 0`.
    pub eta: Option<T>,
    pub power: T,
    pub tau_total: T,
    pub class: MachineClass,
}

/// Worst-case invariant deviations seen over every state of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics<T> {
    pub min_eigenvalue: T,
    pub max_trace_error: T,
    pub max_hermiticity_defect: T,
    /// Largest change of the sorted spectrum of ρ across a unitary stroke.
    pub max_ramp_spectrum_change: T,
    /// Largest change of the singly occupied populations across a unitary stroke.
    pub max_ramp_middle_change: T,
    pub min_ground_population_d: T,
    pub cycles: usize,
}

impl<T: Real> RunDiagnostics<T> {
    fn empty() -> Self {
        RunDiagnostics {
            min_eigenvalue: T::infinity(),
            max_trace_error: T::zero(),
            max_hermiticity_defect: T::zero(),
            max_ramp_spectrum_change: T::zero(),
            max_ramp_middle_change: T::zero(),
            min_ground_population_d: T::infinity(),
            cycles: 0,
        }
    }

    fn observe(&mut self, rho: &DensityMatrix4<T>) {
        let m = rho.matrix();
        self.min_eigenvalue = self.min_eigenvalue.min(rho.eigenvalues()[0]);
        self.max_trace_error = self.max_trace_error.max((m.trace().re - T::one()).abs());
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(m.hermiticity_defect());
    }

    fn observe_ramp(&mut self, before: &DensityMatrix4<T>, after: &DensityMatrix4<T>) {
        let (a, b) = (before.eigenvalues(), after.eigenvalues());
        let spec = (0..4).fold(T::zero(), |acc, i| acc.max((a[i] - b[i]).abs()));
        self.max_ramp_spectrum_change = self.max_ramp_spectrum_change.max(spec);
        let (p, q) = (before.populations(), after.populations());
        let mid = (p[1] - q[1]).abs().max((p[2] - q[2]).abs());
        self.max_ramp_middle_change = self.max_ramp_middle_change.max(mid);
    }

    fn merge(&mut self, o: &Self) {
        self.min_eigenvalue = self.min_eigenvalue.min(o.min_eigenvalue);
        self.max_trace_error = self.max_trace_error.max(o.max_trace_error);
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(o.max_hermiticity_defect);
        self.max_ramp_spectrum_change = self.max_ramp_spectrum_change.max(o.max_ramp_spectrum_change);
        self.max_ramp_middle_change = self.max_ramp_middle_change.max(o.max_ramp_middle_change);
        self.min_ground_population_d = self.min_ground_population_d.min(o.min_ground_population_d);
        self.cycles = self.cycles.max(o.cycles);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord<T> {
    pub per_mode: Vec<ModeRecord<T>>,
    pub totals: CycleTotals<T>,
    pub diagnostics: RunDiagnostics<T>,
}

/// States at the corners of one cycle of one mode.
#[derive(Clone, Copy, Debug)]
pub struct CornerStates<T> {
    pub a: DensityMatrix4<T>,
    pub b: DensityMatrix4<T>,
    pub c: DensityMatrix4<T>,
    pub d: DensityMatrix4<T>,
    /// State after the closing ramp, which starts the next cycle.
    pub a_next: DensityMatrix4<T>,
}

/// Runs the four strokes once for mode `k`, starting from `a`.
pub fn mode_strokes<T: Real>(
    cfg: &CycleConfig<T>,
    k: T,
    a: &DensityMatrix4<T>,
) -> Result<CornerStates<T>> {
    let m1 = tim_mode(cfg.h1, k);
    let m2 = tim_mode(cfg.h2, k);
    let ctl = &cfg.integrator;
    let b = evolve_dissipative(a, &m1, &cfg.energizing, cfg.sign, cfg.energizing_policy, ctl)?;
    let c = evolve_unitary_ramp(&b, k, cfg.h1, cfg.h2, cfg.tau1, ctl)?;
    let d = evolve_dissipative(&c, &m2, &cfg.relaxing, cfg.sign, cfg.relaxing_policy, ctl)?;
    let a_next = evolve_unitary_ramp(&d, k, cfg.h2, cfg.h1, cfg.tau2, ctl)?;
    Ok(CornerStates { a: *a, b, c, d, a_next })
}

fn mode_record<T: Real>(
    cfg: &CycleConfig<T>,
    k: T,
    s: &CornerStates<T>,
    cycles: usize,
    diag: &mut RunDiagnostics<T>,
) -> ModeRecord<T> {
    let m1 = tim_mode(cfg.h1, k);
    let m2 = tim_mode(cfg.h2, k);
    let (h1, h2) = (m1.matrix4(), m2.matrix4());
    for rho in [&s.a, &s.b, &s.c, &s.d, &s.a_next] {
        diag.observe(rho);
    }
    diag.observe_ramp(&s.b, &s.c);
    diag.observe_ramp(&s.d, &s.a_next);
    let ground_population_d = s.d.overlap(&m2.ground_vector());
    diag.min_ground_population_d = diag.min_ground_population_d.min(ground_population_d);
    diag.cycles = diag.cycles.max(cycles);

    let e_a = energy(&s.a, &h1);
    let e_b = energy(&s.b, &h1);
    let e_c = energy(&s.c, &h2);
    let e_d = energy(&s.d, &h2);
    let q_in = e_b - e_a;
    let q_out = e_d - e_c;
    let w = -(q_in + q_out);
    ModeRecord {
        k,
        e_a,
        e_b,
        e_c,
        e_d,
        e_a_ground: -m1.level(),
        e_d_ground: -m2.level(),
        q_in,
        q_out,
        w,
        class: classify_mode(q_in, q_out, w),
        ground_population_d,
        cycles,
    }
}

/// One cycle for every mode from the given A-states (ascending `k`).
/// Returns the record and the A-states that start the next cycle.
pub fn run_single_cycle<T: Real>(
    cfg: &CycleConfig<T>,
    a_states: &[DensityMatrix4<T>],
) -> Result<(CycleRecord<T>, Vec<DensityMatrix4<T>>)> {
    cfg.validate()?;
    let ks = momentum_grid::<T>(cfg.length)?;
    if a_states.len() != ks.len() {
        return Err(invalid("a_states", format!("expected {} states, got {}", ks.len(), a_states.len())));
    }
    let out: Vec<(ModeRecord<T>, RunDiagnostics<T>, DensityMatrix4<T>)> = ks
        .par_iter()
        .zip(a_states.par_iter())
        .map(|(&k, a)| {
            let s = mode_strokes(cfg, k, a)?;
            let mut diag = RunDiagnostics::empty();
            let rec = mode_record(cfg, k, &s, 1, &mut diag);
            Ok((rec, diag, s.a_next))
        })
        .collect::<Result<_>>()?;
    let next = out.iter().map(|o| o.2).collect();
    Ok((assemble(cfg, out.into_iter().map(|o| (o.0, o.1)).collect()), next))
}

/// Ground states at `h₁`, the default starting point of the cycle.
pub fn initial_states<T: Real>(cfg: &CycleConfig<T>) -> Result<Vec<DensityMatrix4<T>>> {
    momentum_grid::<T>(cfg.length)?
        .into_iter()
        .map(|k| DensityMatrix4::pure(&tim_mode(cfg.h1, k).ground_vector()))
        .collect()
}

fn mode_limit_cycle<T: Real>(cfg: &CycleConfig<T>, k: T) -> Result<(ModeRecord<T>, RunDiagnostics<T>)> {
    let mut a = DensityMatrix4::pure(&tim_mode(cfg.h1, k).ground_vector())?;
    let mut diag = RunDiagnostics::empty();
    if cfg.is_history_free() {
        // B, C and D do not depend on A, so the cycle that starts from the
        // returned A-state has exactly these corners.
        let mut s = mode_strokes(cfg, k, &a)?;
        s.a = s.a_next;
        let rec = mode_record(cfg, k, &s, 1, &mut diag);
        return Ok((rec, diag));
    }
    let mut change = T::infinity();
    for cycle in 1..=cfg.cycle_repeat.max_cycles {
        let s = mode_strokes(cfg, k, &a)?;
        change = s.a_next.distance(&a);
        if change < cfg.cycle_repeat.tol {
            let rec = mode_record(cfg, k, &s, cycle, &mut diag);
            return Ok((rec, diag));
        }
        a = s.a_next;
    }
    Err(Error::LimitCycleNotConverged {
        change: change.to_f64().unwrap_or(f64::NAN),
        cycles: cfg.cycle_repeat.max_cycles,
    })
}

/// Runs the cycle to its limit cycle, independently for each mode, and
/// aggregates in ascending `k`.
pub fn run_cycle<T: Real>(cfg: &CycleConfig<T>) -> Result<CycleRecord<T>> {
    cfg.validate()?;
    let ks = momentum_grid::<T>(cfg.length)?;
    let out = ks
        .par_iter()
        .map(|&k| mode_limit_cycle(cfg, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(cfg, out))
}

fn assemble<T: Real>(cfg: &CycleConfig<T>, out: Vec<(ModeRecord<T>, RunDiagnostics<T>)>) -> CycleRecord<T> {
    let mut diagnostics = RunDiagnostics::empty();
    let zero = T::zero();
    let mut t = [zero; 6];
    for (rec, d) in &out {
        diagnostics.merge(d);
        t[0] += rec.e_a;
        t[1] += rec.e_b;
        t[2] += rec.e_c;
        t[3] += rec.e_d;
        t[4] += rec.e_a_ground;
        t[5] += rec.e_d_ground;
    }
    let [e_a, e_b, e_c, e_d, e_a_ground, e_d_ground] = t;
    let q_in = e_b - e_a;
    let q_out = e_d - e_c;
    let w = -(q_in + q_out);
    let tau_total = cfg.tau_total();
    let totals = CycleTotals {
        e_a,
        e_b,
        e_c,
        e_d,
        e_a_ground,
        e_d_ground,
        e_ex_a: e_a - e_a_ground,
        q_in,
        q_out,
        w,
        eta: (q_in != zero).then(|| -w / q_in),
        power: w / tau_total,
        tau_total,
        class: classify_mode(q_in, q_out, w),
    };
    CycleRecord {
        per_mode: out.into_iter().map(|(r, _)| r).collect(),
        totals,
        diagnostics,
    }
}

/// `(η, P)` from the aggregate flows: `η = −W/Q_in`, `P = W/τ_total`.
pub fn aggregate_efficiency_power<T: Real>(rec: &CycleRecord<T>) -> Result<(T, T)> {
    let t = &rec.totals;
    if t.q_in == T::zero() {
        return Err(Error::ZeroDivision("total Q_in is zero"));
    }
    Ok((-t.w / t.q_in, t.w / t.tau_total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tim_gap;
    use approx::assert_relative_eq;

    #[test]
    fn classification_examples() {
        assert_eq!(classify_mode(2.0, -1.0, -1.0), MachineClass::Engine);
        assert_eq!(classify_mode(-2.0, 1.0, 1.0), MachineClass::Refrigerator);
        assert_eq!(classify_mode(1.0, -3.0, 2.0), MachineClass::HeatDistributor);
        assert_eq!(classify_mode(1.0, 1.0, -2.0), MachineClass::Other);
        assert_eq!(classify_mode(0.0, 0.0, 0.0), MachineClass::Other);
    }

    #[test]
    fn config_validation() {
        let base = CycleConfig::<f64>::para_para();
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.length = 99;
        assert_eq!(c.validate(), Err(Error::InvalidLength(99)));
        let mut c = base.clone();
        c.tau2 = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.h2 = 71.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.relaxing.kappa = [0.0; 4];
        assert!(c.validate().is_err());
        let mut c = base;
        c.cycle_repeat.max_cycles = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn tau_total_rules() {
        let mut c = CycleConfig::<f64>::para_para();
        c.tau2 = 50.0;
        assert_eq!(c.tau_total(), 50.01);
        c.energizing_time = 2.0;
        assert_eq!(c.tau_total(), 52.01);
        c.relaxing_policy = StrokePolicy::Fixed(3.0);
        c.relaxing_time = 100.0;
        assert_eq!(c.tau_total(), 55.01);
    }

    #[test]
    fn bookkeeping_and_mode_sums() {
        let mut c = CycleConfig::<f64>::para_para();
        c.length = 20;
        c.tau2 = 30.0;
        let rec = run_cycle(&c).unwrap();
        let mut w = 0.0;
        for m in &rec.per_mode {
            assert!((m.w + m.q_in + m.q_out).abs() < 1e-9);
            w += m.w;
        }
        assert_eq!(rec.totals.w, -(rec.totals.q_in + rec.totals.q_out));
        assert!((rec.totals.w - w).abs() < 1e-9);
        assert!(rec.totals.e_ex_a > -1e-9);
        assert_eq!(rec.diagnostics.cycles, 1);
        let (eta, p) = aggregate_efficiency_power(&rec).unwrap();
        assert_eq!(Some(eta), rec.totals.eta);
        assert_eq!(p, rec.totals.w / c.tau_total());
        assert!(eta > 0.0 && eta < 1.0);
    }

    #[test]
    fn relaxed_single_mode_energy() {
        let mut c = CycleConfig::<f64>::para_para();
        c.length = 2;
        let rec = run_cycle(&c).unwrap();
        let m = &rec.per_mode[0];
        assert_relative_eq!(m.k, std::f64::consts::FRAC_PI_2);
        assert!((m.e_d + tim_gap(-5.0, m.k)).abs() < 1e-6);
    }

    #[test]
    fn degenerate_fields_do_no_work() {
        let mut c = CycleConfig::<f64>::generalized(70.0);
        c.length = 10;
        let rec = run_cycle(&c).unwrap();
        assert!(rec.totals.w.abs() < 1e-9);
        let (eta, _) = aggregate_efficiency_power(&rec).unwrap();
        assert!(eta.abs() < 1e-9);
    }
}
