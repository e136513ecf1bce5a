//! Closed-form large-field limits, the adiabatic work `W∞`, Kibble-Zurek
//! exponents and fits, power optimisation and the efficiency bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycle::{run_cycle, CycleConfig, CycleRecord};
use crate::dynamics::{
    energy, evolve_dissipative, evolve_unitary_ramp, BathSpec, DensityMatrix4, StrokePolicy,
};
use crate::error::{invalid, Error, Result};
use crate::model::{momentum_grid, tim_gap, tim_mode, CriticalExponents, QuenchClass};
use crate::scalar::Real;

/// Large-field corner energies of the Ising cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppendixEnergies<T> {
    pub e_b: T,
    pub e_c: T,
    /// `−L|h₂|`, the leading term of the ground energy at `h₂`.
    pub e_d_ground_approx: T,
}

/// `E_B = L h₁ (μ−1)/(μ+1)`, `E_C = L h₂ (μ−1)/(μ+1)`, `E_D ≈ −L|h₂|`.
/// Accurate when `h₁, |h₂| ≫ 1`; the regime is not enforced.
pub fn appendix_energies<T: Real>(length: usize, h1: T, h2: T, mu_e: T) -> AppendixEnergies<T> {
    let l = T::from_count(length);
    let f = (mu_e - T::one()) / (mu_e + T::one());
    AppendixEnergies {
        e_b: l * h1 * f,
        e_c: l * h2 * f,
        e_d_ground_approx: -l * h2.abs(),
    }
}

/// Large-field steady-state populations `(P₁, P₂, P₃, P₄)` of a bath with loss
/// to gain ratio `μ`: `P₁ = 1/(1+μ)²`, `P₂ = P₃ = μ/(1+μ)²`, `P₄ = μ²/(1+μ)²`.
/// For `h > 0` these are the diagonal entries on `|1,1⟩, |0,1⟩, |1,0⟩, |0,0⟩`.
pub fn appendix_populations<T: Real>(mu: T) -> [T; 4] {
    let d = (T::one() + mu) * (T::one() + mu);
    [T::one() / d, mu / d, mu / d, mu * mu / d]
}

/// `η = 1 − h₂/h₁` and
/// `P = −(L(h₁−h₂)/τ_total)·[(μ_E−1)/(μ_E+1) − (μ_R−1)/(μ_R+1)]`.
/// Valid for `h₁, h₂ ≫ 1` without a critical crossing (not enforced).
pub fn generalized_eta_power<T: Real>(length: usize, h1: T, h2: T, mu_e: T, mu_r: T, tau_total: T) -> (T, T) {
    let l = T::from_count(length);
    let f = |mu: T| (mu - T::one()) / (mu + T::one());
    let eta = T::one() - h2 / h1;
    let p = -(l * (h1 - h2) / tau_total) * (f(mu_e) - f(mu_r));
    (eta, p)
}

/// Ingredients of the adiabatic-limit work, from exact steady states and
/// exact ground energies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticLimit<T> {
    pub e_b: T,
    pub e_c: T,
    pub e_a_ground: T,
    pub e_d_ground: T,
    pub w_inf: T,
    /// Smallest ground-state population reached by the relaxing stroke.
    pub min_ground_population: T,
}

/// Corner energies for `τ₂ → ∞`: the closing ramp then returns the relaxed
/// ground state at `h₂` to the ground state at `h₁`, so A is the ground state.
pub fn adiabatic_limit<T: Real>(cfg: &CycleConfig<T>) -> Result<AdiabaticLimit<T>> {
    cfg.validate()?;
    let ks = momentum_grid::<T>(cfg.length)?;
    let per_mode = ks
        .par_iter()
        .map(|&k| -> Result<[T; 5]> {
            let m1 = tim_mode(cfg.h1, k);
            let m2 = tim_mode(cfg.h2, k);
            let ctl = &cfg.integrator;
            let a = DensityMatrix4::pure(&m1.ground_vector())?;
            let b = evolve_dissipative(&a, &m1, &cfg.energizing, cfg.sign, cfg.energizing_policy, ctl)?;
            let c = evolve_unitary_ramp(&b, k, cfg.h1, cfg.h2, cfg.tau1, ctl)?;
            let d = evolve_dissipative(&c, &m2, &cfg.relaxing, cfg.sign, cfg.relaxing_policy, ctl)?;
            Ok([
                energy(&b, &m1.matrix4()),
                energy(&c, &m2.matrix4()),
                -m1.level(),
                -m2.level(),
                d.overlap(&m2.ground_vector()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = [T::zero(); 4];
    let mut min_pop = T::infinity();
    let mut worst_k = T::zero();
    for (k, v) in ks.iter().zip(&per_mode) {
        for i in 0..4 {
            acc[i] += v[i];
        }
        if v[4] < min_pop {
            min_pop = v[4];
            worst_k = *k;
        }
    }
    let [e_b, e_c, e_a_ground, e_d_ground] = acc;
    let lim = AdiabaticLimit {
        e_b,
        e_c,
        e_a_ground,
        e_d_ground,
        w_inf: -(e_b - e_a_ground + e_d_ground - e_c),
        min_ground_population: min_pop,
    };
    if min_pop < cfg.ground_population_min {
        return Err(Error::NotGroundState {
            k: worst_k.to_f64().unwrap_or(f64::NAN),
            population: min_pop.to_f64().unwrap_or(f64::NAN),
            required: cfg.ground_population_min.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(lim)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WInfMethod {
    /// `−(2L/(1+μ_E))(μ_E h₁ − |h₂|)`, for both fields deep in the paramagnet.
    Analytic,
    /// Exact steady states and exact ground energies.
    Numeric,
}

/// Smallest `|h|` at which the analytic large-field formula is accepted.
pub const ANALYTIC_MIN_FIELD: f64 = 5.0;

/// Adiabatic-limit work `W∞ = −(E_B − E_A^G + E_D^G − E_C)`.
pub fn w_infinity<T: Real>(cfg: &CycleConfig<T>, method: WInfMethod) -> Result<T> {
    match method {
        WInfMethod::Numeric => Ok(adiabatic_limit(cfg)?.w_inf),
        WInfMethod::Analytic => {
            cfg.validate()?;
            let min_field = T::lit(ANALYTIC_MIN_FIELD);
            if cfg.h1.abs() < min_field || cfg.h2.abs() < min_field {
                return Err(Error::OutsideRegime(format!(
                    "needs |h1|, |h2| >= {ANALYTIC_MIN_FIELD} (got h1 = {}, h2 = {})",
                    cfg.h1, cfg.h2
                )));
            }
            if !matches!(cfg.energizing_policy, StrokePolicy::SteadyState { .. }) {
                return Err(Error::OutsideRegime("energizing stroke must reach its steady state".into()));
            }
            let mu = loss_gain_ratio(&cfg.energizing)?;
            let l = T::from_count(cfg.length);
            let two = T::lit(2.0);
            Ok(-(two * l / (T::one() + mu)) * (mu * cfg.h1 - cfg.h2.abs()))
        }
    }
}

/// `μ/μ′` for a bath with the Ising rate pattern.
fn loss_gain_ratio<T: Real>(bath: &BathSpec<T>) -> Result<T> {
    match bath.tim_rates() {
        Some((mu, mu_prime)) if mu_prime > T::zero() => Ok(mu / mu_prime),
        _ => Err(Error::OutsideRegime(
            "energizing bath must have the Ising pattern with nonzero gain".into(),
        )),
    }
}

/// Kibble-Zurek exponent of the excess energy (and of `W − W∞`):
/// `−νd/(νz+1)` when the ramp crosses the critical point and
/// `−ν(d+z)/(νz+1)` when it ends there.
pub fn predicted_work_exponent<T: Real>(e: &CriticalExponents<T>) -> T {
    let denom = e.nu * e.z + T::one();
    match e.x {
        QuenchClass::Crossing => -e.nu * e.dim() / denom,
        QuenchClass::EndsAtCritical => -e.nu * (e.dim() + e.z) / denom,
    }
}

/// Exponent of the excitation term in the power curve,
/// `−(νd + xνz + 1)/(νz + 1)`.
pub fn power_excess_exponent<T: Real>(e: &CriticalExponents<T>) -> T {
    let x = T::from_count(e.x.flag() as usize);
    -(e.nu * e.dim() + x * e.nu * e.z + T::one()) / (e.nu * e.z + T::one())
}

/// Log-log least-squares fit of `W − W∞` against `τ₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit<T> {
    pub exponent: T,
    /// `R` in `W − W∞ = R τ₂^exponent`.
    pub amplitude: T,
    /// RMS of the residuals of `ln(W − W∞)`.
    pub residual: T,
    pub window: (T, T),
    pub n_points: usize,
    pub predicted: T,
}

impl<T: Real> ScalingFit<T> {
    pub fn deviation(&self) -> T {
        (self.exponent - self.predicted).abs()
    }
}

/// Relative excess above which a point is pre-asymptotic.
pub const WINDOW_MAX_EXCESS: f64 = 0.1;
/// Relative excess below which a point sits on the finite-size floor.
pub const WINDOW_MIN_EXCESS: f64 = 1e-6;
pub const MIN_FIT_POINTS: usize = 5;

/// Default fit window: the `τ₂` range of the points whose excess
/// `E_ex = W − W∞` lies in `[1e-6, 0.1]·|W∞|`.
pub fn default_window<T: Real>(points: &[(T, T)], w_inf: T) -> Result<(T, T)> {
    let scale = w_inf.abs();
    let lo = T::lit(WINDOW_MIN_EXCESS) * scale;
    let hi = T::lit(WINDOW_MAX_EXCESS) * scale;
    let kept: Vec<T> = points
        .iter()
        .filter(|(_, w)| {
            let ex = *w - w_inf;
            ex >= lo && ex <= hi
        })
        .map(|(t, _)| *t)
        .collect();
    if kept.is_empty() {
        return Err(Error::FitWindow("no point has excess within [1e-6, 0.1]·|W∞|".into()));
    }
    let min = kept.iter().copied().fold(T::infinity(), T::min);
    let max = kept.iter().copied().fold(T::neg_infinity(), T::max);
    Ok((min, max))
}

/// Ordinary least squares of `ln(W − W∞)` on `ln τ₂` over the points whose
/// `τ₂` lies in `window` (inclusive).
pub fn fit_kz_exponent<T: Real>(
    points: &[(T, T)],
    w_inf: T,
    window: (T, T),
    e: &CriticalExponents<T>,
) -> Result<ScalingFit<T>> {
    let (xs, ys) = window_logs(points, w_inf, window)?;
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    Ok(ScalingFit {
        exponent: slope,
        amplitude: intercept.exp(),
        residual,
        window,
        n_points: xs.len(),
        predicted: predicted_work_exponent(e),
    })
}

/// Amplitude of `W − W∞ = R τ₂^exponent` with the exponent held fixed:
/// `ln R` is the mean of `ln(W − W∞) − exponent·ln τ₂` over the window.
pub fn amplitude_at_exponent<T: Real>(points: &[(T, T)], w_inf: T, window: (T, T), exponent: T) -> Result<T> {
    let (xs, ys) = window_logs(points, w_inf, window)?;
    let n = T::from_count(xs.len());
    let mean = xs.iter().zip(&ys).map(|(x, y)| *y - exponent * *x).sum::<T>() / n;
    Ok(mean.exp())
}

fn window_logs<T: Real>(points: &[(T, T)], w_inf: T, window: (T, T)) -> Result<(Vec<T>, Vec<T>)> {
    let (lo, hi) = window;
    if !(lo <= hi) || !(lo > T::zero()) {
        return Err(Error::FitWindow(format!("invalid window [{lo}, {hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(tau, w) in points.iter().filter(|(t, _)| *t >= lo && *t <= hi) {
        let ex = w - w_inf;
        if !(ex > T::zero()) {
            return Err(Error::FitWindow(format!(
                "non-positive excess W - W∞ = {ex} at tau2 = {tau}"
            )));
        }
        xs.push(tau.ln());
        ys.push(ex.ln());
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::FitWindow(format!(
            "{} points in window, need at least {MIN_FIT_POINTS}",
            xs.len()
        )));
    }
    Ok((xs, ys))
}

/// Line fit `y = a x + b`; returns `(a, b, rms residual)`.
pub fn least_squares<T: Real>(xs: &[T], ys: &[T]) -> (T, T, T) {
    let n = T::from_count(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (x, y) in xs.iter().zip(ys) {
        sxx += (*x - mx) * (*x - mx);
        sxy += (*x - mx) * (*y - my);
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss: T = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = *y - (a * *x + b);
            r * r
        })
        .sum();
    (a, b, (ss / n).sqrt())
}

/// `P(τ₂) = W∞/τ₂ + R τ₂^{−(νd + xνz + 1)/(νz+1)}`.
pub fn power_curve<T: Real>(w_inf: T, r: T, e: &CriticalExponents<T>, tau2: T) -> T {
    w_inf / tau2 + r * tau2.powf(power_excess_exponent(e))
}

/// Stationary point of [`power_curve`],
/// `τ_opt = [R(νd + xνz + 1)/(|W∞|(νz + 1))]^{(νz+1)/(νd + (x−1)νz)}`.
pub fn tau_opt<T: Real>(w_inf: T, r: T, e: &CriticalExponents<T>) -> Result<T> {
    if !(r > T::zero()) {
        return Err(invalid("R", "amplitude must be positive"));
    }
    if !(w_inf < T::zero()) {
        return Err(invalid("w_inf", "must be negative (engine)"));
    }
    let x = T::from_count(e.x.flag() as usize);
    let nz1 = e.nu * e.z + T::one();
    let denom = e.nu * e.dim() + (x - T::one()) * e.nu * e.z;
    if denom == T::zero() {
        return Err(Error::ZeroDivision("nu*d + (x-1)*nu*z"));
    }
    let num = e.nu * e.dim() + x * e.nu * e.z + T::one();
    Ok((r * num / (w_inf.abs() * nz1)).powf(nz1 / denom))
}

/// Efficiency at the predicted power maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPowerPrediction<T> {
    pub tau_opt: T,
    /// `R τ_opt^{predicted exponent}`.
    pub e_ex: T,
    /// `E_B − E_A^G`.
    pub adiabatic_heat_in: T,
    pub eta_hat: T,
}

/// `η̂ = −(W∞ + E_ex)/(E_B − E_A^G − E_ex)` with `E_ex = E_ex,A(τ_opt)`.
pub fn eta_hat<T: Real>(adiabatic_heat_in: T, w_inf: T, e_ex: T) -> Result<T> {
    let q = adiabatic_heat_in - e_ex;
    if q == T::zero() {
        return Err(Error::ZeroDivision("E_B - E_A^G - E_ex"));
    }
    Ok(-(w_inf + e_ex) / q)
}

/// Analytic chain `R → τ_opt → E_ex,A(τ_opt) → η̂`, with `E_B − E_A^G` from
/// exact steady states of `cfg`.
pub fn eta_at_max_power<T: Real>(
    cfg: &CycleConfig<T>,
    w_inf: T,
    r: T,
    e: &CriticalExponents<T>,
) -> Result<MaxPowerPrediction<T>> {
    let lim = adiabatic_limit(cfg)?;
    let t = tau_opt(w_inf, r, e)?;
    let e_ex = r * t.powf(predicted_work_exponent(e));
    let q = lim.e_b - lim.e_a_ground;
    Ok(MaxPowerPrediction {
        tau_opt: t,
        e_ex,
        adiabatic_heat_in: q,
        eta_hat: eta_hat(q, w_inf, e_ex)?,
    })
}

/// Measured optimum of the delivered power `−P` over `τ₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOptimum<T> {
    pub tau2: T,
    pub record: CycleRecord<T>,
}

/// Golden-section search in `ln τ₂` for the largest delivered power `−P`.
/// Assumes a single maximum inside `[lo, hi]`.
pub fn measured_power_optimum<T: Real>(cfg: &CycleConfig<T>, lo: T, hi: T, rel_tol: T) -> Result<PowerOptimum<T>> {
    if !(lo > T::zero() && hi > lo) {
        return Err(invalid("tau2 bracket", "need 0 < lo < hi"));
    }
    let run = |ln_tau: T| -> Result<(T, CycleRecord<T>)> {
        let mut c = cfg.clone();
        c.tau2 = ln_tau.exp();
        let rec = run_cycle(&c)?;
        Ok((-rec.totals.power, rec))
    };
    let phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = run(x1)?;
    let mut f2 = run(x2)?;
    let tol = rel_tol.max(T::epsilon());
    while b - a > tol {
        if f1.0 > f2.0 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = run(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = run(x2)?;
        }
    }
    let (x, best) = if f1.0 > f2.0 { (x1, f1) } else { (x2, f2) };
    Ok(PowerOptimum {
        tau2: x.exp(),
        record: best.1,
    })
}

/// Where `Δ_min` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSource {
    /// Minimum of `E_k(h₂)` over the momentum grid.
    Grid,
    /// Finite-size gap `(2π/L)^z` at the critical point.
    FiniteSize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult<T> {
    pub delta_max: T,
    pub delta_min: T,
    pub delta_min_source: GapSource,
    pub delta_min_grid: T,
    /// `(2π/L)^z`, reported only when `h₂` is critical.
    pub delta_min_finite_size: Option<T>,
    pub t_max: T,
    pub t_min: T,
    pub eta_max: T,
}

/// `η_max = 1 − (Δ_min/Δ_max)·ln(κ₂^E/κ₁^E)/ln(κ₂^R/κ₁^R)` with
/// `Δ_max = max_k E_k(h₁)` and `Δ_min = min_k E_k(h₂)`. At `|h₂| = 1` the
/// smaller of the grid minimum and `(2π/L)^z` (Ising `z = 1`) is used.
pub fn efficiency_bound<T: Real>(cfg: &CycleConfig<T>) -> Result<BoundResult<T>> {
    cfg.validate()?;
    let ln_ratio = |bath: &BathSpec<T>, name: &str| -> Result<T> {
        let [k1, k2, k3, k4] = bath.kappa;
        if !(k2 > k1 && k1 > T::zero()) {
            return Err(Error::RateAssumption(format!(
                "{name} bath needs kappa2 > kappa1 > 0 (got {k1}, {k2})"
            )));
        }
        // Same loss/gain ratio on both momenta, κ₁/κ₂ = κ₃/κ₄.
        if (k1 * k4 - k2 * k3).abs() > T::tol(1e-12) * (k1 * k4).abs().max(k2 * k3) {
            return Err(Error::RateAssumption(format!(
                "{name} bath needs kappa1/kappa2 = kappa3/kappa4 (got {k1}/{k2} vs {k3}/{k4})"
            )));
        }
        Ok((k2 / k1).ln())
    };
    let ln_e = ln_ratio(&cfg.energizing, "energizing")?;
    let ln_r = ln_ratio(&cfg.relaxing, "relaxing")?;
    let ks = momentum_grid::<T>(cfg.length)?;
    let delta_max = ks.iter().map(|&k| tim_gap(cfg.h1, k)).fold(T::zero(), T::max);
    let delta_min_grid = ks.iter().map(|&k| tim_gap(cfg.h2, k)).fold(T::infinity(), T::min);
    let critical = (cfg.h2.abs() - T::one()).abs() <= T::tol(1e-12);
    let finite_size = critical.then(|| T::lit(2.0) * T::PI() / T::from_count(cfg.length));
    let (delta_min, delta_min_source) = match finite_size {
        Some(f) if f < delta_min_grid => (f, GapSource::FiniteSize),
        _ => (delta_min_grid, GapSource::Grid),
    };
    if !(delta_min > T::zero()) {
        return Err(Error::ZeroDivision("minimum gap vanishes"));
    }
    let t_max = delta_max / ln_e;
    let t_min = delta_min / ln_r;
    Ok(BoundResult {
        delta_max,
        delta_min,
        delta_min_source,
        delta_min_grid,
        delta_min_finite_size: finite_size,
        t_max,
        t_min,
        eta_max: T::one() - t_min / t_max,
    })
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    if n < 2 || !(lo > T::zero()) || !(hi > lo) {
        return Err(invalid("grid", "need n >= 2 and 0 < lo < hi"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let last = T::from_count(n - 1);
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (a + (b - a) * T::from_count(i) / last).exp(),
        })
        .collect())
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    if n < 2 || !(hi > lo) {
        return Err(invalid("grid", "need n >= 2 and lo < hi"));
    }
    let last = T::from_count(n - 1);
    Ok((0..n)
        .map(|i| match i {
            i if i == n - 1 => hi,
            i => lo + (hi - lo) * T::from_count(i) / last,
        })
        .collect())
}
