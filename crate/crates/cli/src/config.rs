//! INI-style run configuration.
//!
//! Sections `[medium]`, `[baths]`, `[strokes]`, `[integrator]`, `[sweep]` and
//! `[fit]` hold `key = value` lines; `#` and `;` start comments. Unknown
//! sections or keys are errors, and every problem found is reported with its
//! line number before giving up.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ottokz_core::cycle::{CycleConfig, CycleRepeat};
use ottokz_core::dynamics::{
    BathFrame, BathRole, BathSpec, FermionSign, IntegratorControls, SteadyStateMethod, StrokePolicy,
};
use ottokz_core::model::{CriticalExponents, QuenchClass};
use ottokz_core::CycleConfig64;

use crate::format::sci;

/// One problem found in a config file.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError(pub Vec<Diagnostic>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.0.len())?;
        for d in &self.0 {
            writeln!(f, "  {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Tau2,
    H2,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Tau2 => "tau2",
            SweepAxis::H2 => "h2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub spacing: Spacing,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepSpec {
    pub fn grid(&self) -> ottokz_core::Result<Vec<f64>> {
        match self.spacing {
            Spacing::Log => ottokz_core::analysis::log_grid(self.start, self.stop, self.points),
            Spacing::Linear => ottokz_core::analysis::linear_grid(self.start, self.stop, self.points),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WInfSource {
    Numeric,
    Analytic,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitSpec {
    pub exponents: CriticalExponents<f64>,
    pub w_inf: WInfSource,
    /// `None` selects the excess-energy window.
    pub window: Option<(f64, f64)>,
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec {
            exponents: CriticalExponents::ising(QuenchClass::Crossing),
            w_inf: WInfSource::Numeric,
            window: None,
        }
    }
}

/// A parsed and validated configuration with every default filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub cycle: CycleConfig64,
    pub sweep: Option<SweepSpec>,
    pub fit: FitSpec,
}

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

const SECTIONS: [&str; 6] = ["medium", "baths", "strokes", "integrator", "sweep", "fit"];

struct Reader {
    entries: BTreeMap<(String, String), Entry>,
    present: Vec<String>,
    errors: Vec<Diagnostic>,
}

impl Reader {
    fn scan(text: &str) -> Reader {
        let mut r = Reader {
            entries: BTreeMap::new(),
            present: Vec::new(),
            errors: Vec::new(),
        };
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    r.error(line, None, format!("malformed section header `{content}`"));
                    continue;
                };
                let name = name.trim().to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    r.error(line, None, format!("unknown section [{name}]"));
                    section = None;
                    continue;
                }
                if r.present.contains(&name) {
                    r.error(line, None, format!("section [{name}] appears twice"));
                }
                r.present.push(name.clone());
                section = Some(name);
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                r.error(line, None, format!("expected `key = value`, got `{content}`"));
                continue;
            };
            let key = key.trim().to_string();
            let Some(sec) = section.clone() else {
                r.error(line, Some(key), "key outside any section".into());
                continue;
            };
            let field = format!("{sec}.{key}");
            if !known_key(&sec, &key) {
                r.error(line, Some(field), "unknown key".into());
                continue;
            }
            let value = value.trim().to_string();
            if let Some(prev) = r.entries.get(&(sec.clone(), key.clone())) {
                let msg = format!("duplicate key (first set on line {})", prev.line);
                r.error(line, Some(field), msg);
                continue;
            }
            r.entries.insert((sec, key), Entry { value, line, used: false });
        }
        r
    }

    fn error(&mut self, line: usize, field: Option<String>, message: String) {
        self.errors.push(Diagnostic {
            line: Some(line),
            field,
            message,
        });
    }

    fn has_section(&self, s: &str) -> bool {
        self.present.iter().any(|p| p == s)
    }

    fn has(&self, sec: &str, key: &str) -> bool {
        self.entries.contains_key(&(sec.to_string(), key.to_string()))
    }

    fn raw(&mut self, sec: &str, key: &str) -> Option<(String, usize)> {
        let e = self.entries.get_mut(&(sec.to_string(), key.to_string()))?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    /// Parses an optional key; a bad value is recorded and yields `None`.
    fn get<V>(&mut self, sec: &str, key: &str, parse: impl Fn(&str) -> Result<V, String>) -> Option<V> {
        let (value, line) = self.raw(sec, key)?;
        match parse(&value) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.error(line, Some(format!("{sec}.{key}")), msg);
                None
            }
        }
    }

    fn required<V>(&mut self, sec: &str, key: &str, parse: impl Fn(&str) -> Result<V, String>) -> Option<V> {
        if !self.has(sec, key) {
            self.missing(sec, key);
            return None;
        }
        self.get(sec, key, parse)
    }

    fn missing(&mut self, sec: &str, key: &str) {
        self.errors.push(Diagnostic {
            line: None,
            field: Some(format!("{sec}.{key}")),
            message: "missing required key".into(),
        });
    }

    fn line_of(&self, sec: &str, key: &str) -> Option<usize> {
        self.entries.get(&(sec.to_string(), key.to_string())).map(|e| e.line)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn known_key(sec: &str, key: &str) -> bool {
    let keys: &[&str] = match sec {
        "medium" => &["length", "h1", "h2"],
        "baths" => &[
            "energizing_mu",
            "energizing_mu_prime",
            "energizing_kappa",
            "energizing_frame",
            "relaxing_mu",
            "relaxing_mu_prime",
            "relaxing_kappa",
            "relaxing_frame",
            "fermion_sign",
        ],
        "strokes" => &[
            "tau1",
            "tau2",
            "energizing",
            "energizing_time",
            "relaxing",
            "relaxing_time",
            "steady_tol",
            "max_cycles",
            "cycle_tol",
            "ground_population_min",
        ],
        "integrator" => &[
            "ramp_courant",
            "ramp_min_steps",
            "ramp_max_step",
            "dissipative_courant",
            "dissipative_min_steps",
            "steady_method",
            "steady_step_budget",
        ],
        "sweep" => &["axis", "spacing", "start", "stop", "points", "step"],
        "fit" => &["nu", "z", "d", "x", "w_inf", "window"],
        _ => &[],
    };
    keys.contains(&key)
}

fn number(s: &str) -> Result<f64, String> {
    match f64::from_str(s) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("expected a finite number, got `{s}`")),
        Err(_) => Err(format!("expected a number, got `{s}`")),
    }
}

fn count(s: &str) -> Result<usize, String> {
    usize::from_str(s).map_err(|_| format!("expected a nonnegative integer, got `{s}`"))
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| number(p.trim())).collect()
}

fn choice<V: Copy>(options: &'static [(&'static str, V)]) -> impl Fn(&str) -> Result<V, String> {
    move |s| {
        options.iter().find(|(name, _)| *name == s).map(|(_, v)| *v).ok_or_else(|| {
            let names: Vec<_> = options.iter().map(|(n, _)| *n).collect();
            format!("expected one of {}, got `{s}`", names.join(" | "))
        })
    }
}

const FRAMES: &[(&str, BathFrame)] = &[("bare", BathFrame::Bare), ("eigenmode", BathFrame::Eigenmode)];
const POLICIES: &[(&str, bool)] = &[("steady", true), ("fixed", false)];

fn read_bath(r: &mut Reader, side: &str, role: BathRole) -> Option<BathSpec<f64>> {
    let kappa_key = format!("{side}_kappa");
    let mu_key = format!("{side}_mu");
    let mu_prime_key = format!("{side}_mu_prime");
    let frame = r.get("baths", &format!("{side}_frame"), choice(FRAMES)).unwrap_or_default();
    let kappa = if r.has("baths", &kappa_key) {
        for k in [&mu_key, &mu_prime_key] {
            if let Some(line) = r.line_of("baths", k) {
                r.raw("baths", k);
                r.error(line, Some(format!("baths.{k}")), format!("conflicts with baths.{kappa_key}"));
            }
        }
        let v = r.get("baths", &kappa_key, |s| {
            let v = numbers(s)?;
            <[f64; 4]>::try_from(v).map_err(|v| format!("expected four rates, got {}", v.len()))
        })?;
        Some(v)
    } else if r.has("baths", &mu_key) || r.has("baths", &mu_prime_key) {
        let mu = r.required("baths", &mu_key, number);
        let mu_prime = r.required("baths", &mu_prime_key, number);
        Some([mu?, mu_prime?, mu?, mu_prime?])
    } else {
        r.errors.push(Diagnostic {
            line: None,
            field: Some(format!("baths.{mu_key}")),
            message: format!("missing required key (with baths.{mu_prime_key}, or baths.{kappa_key})"),
        });
        if !r.has("baths", &mu_prime_key) {
            r.missing("baths", &mu_prime_key);
        }
        None
    }?;
    match BathSpec::new(kappa, role, frame) {
        Ok(b) => Some(b),
        Err(e) => {
            let line = r.line_of("baths", &kappa_key).or(r.line_of("baths", &mu_key));
            r.errors.push(Diagnostic {
                line,
                field: Some(format!("baths.{side}")),
                message: e.to_string(),
            });
            None
        }
    }
}

/// Parses and validates `text`, returning every problem found.
pub fn parse_config(text: &str) -> Result<ResolvedConfig, ConfigError> {
    let mut r = Reader::scan(text);

    let length = r.required("medium", "length", count);
    let h1 = r.required("medium", "h1", number);
    let h2 = r.required("medium", "h2", number);

    let energizing = read_bath(&mut r, "energizing", BathRole::Energizing);
    let relaxing = read_bath(&mut r, "relaxing", BathRole::Relaxing);
    let sign = r
        .get("baths", "fermion_sign", choice(&[("minus", FermionSign::Minus), ("plus", FermionSign::Plus)]))
        .unwrap_or_default();

    let tau1 = r.required("strokes", "tau1", number);
    let tau2 = r.required("strokes", "tau2", number);
    let steady_tol = r.get("strokes", "steady_tol", number).unwrap_or(1e-10);
    let policy = |r: &mut Reader, side: &str| -> (StrokePolicy<f64>, f64) {
        let steady = r.get("strokes", side, choice(POLICIES)).unwrap_or(true);
        let time_key = format!("{side}_time");
        if steady {
            let t = r.get("strokes", &time_key, number).unwrap_or(0.0);
            (StrokePolicy::SteadyState { tol: steady_tol }, t)
        } else {
            let t = r.required("strokes", &time_key, number).unwrap_or(0.0);
            (StrokePolicy::Fixed(t), 0.0)
        }
    };
    let (energizing_policy, energizing_time) = policy(&mut r, "energizing");
    let (relaxing_policy, relaxing_time) = policy(&mut r, "relaxing");
    let repeat_default = CycleRepeat::<f64>::default();
    let cycle_repeat = CycleRepeat {
        max_cycles: r.get("strokes", "max_cycles", count).unwrap_or(repeat_default.max_cycles),
        tol: r.get("strokes", "cycle_tol", number).unwrap_or(repeat_default.tol),
    };
    let ground_population_min = r.get("strokes", "ground_population_min", number).unwrap_or(0.999);

    let d = IntegratorControls::<f64>::default();
    let integrator = IntegratorControls {
        ramp_courant: r.get("integrator", "ramp_courant", number).unwrap_or(d.ramp_courant),
        ramp_min_steps: r.get("integrator", "ramp_min_steps", count).unwrap_or(d.ramp_min_steps),
        ramp_max_step: r.get("integrator", "ramp_max_step", number).unwrap_or(d.ramp_max_step),
        dissipative_courant: r.get("integrator", "dissipative_courant", number).unwrap_or(d.dissipative_courant),
        dissipative_min_steps: r
            .get("integrator", "dissipative_min_steps", count)
            .unwrap_or(d.dissipative_min_steps),
        steady_method: r
            .get(
                "integrator",
                "steady_method",
                choice(&[("direct", SteadyStateMethod::Direct), ("evolve", SteadyStateMethod::Evolve)]),
            )
            .unwrap_or(d.steady_method),
        steady_step_budget: r.get("integrator", "steady_step_budget", count).unwrap_or(d.steady_step_budget),
    };

    let sweep = if r.has_section("sweep") { read_sweep(&mut r) } else { None };
    let fit = read_fit(&mut r);

    for ((sec, key), e) in &r.entries {
        if !e.used {
            log::warn!("{sec}.{key} on line {} has no effect", e.line);
        }
    }

    let (Some(length), Some(h1), Some(h2), Some(tau1), Some(tau2), Some(energizing), Some(relaxing)) =
        (length, h1, h2, tau1, tau2, energizing, relaxing)
    else {
        return Err(ConfigError(r.errors));
    };
    if !r.errors.is_empty() {
        return Err(ConfigError(r.errors));
    }
    let cycle = CycleConfig {
        length,
        h1,
        h2,
        tau1,
        tau2,
        energizing,
        relaxing,
        energizing_policy,
        relaxing_policy,
        energizing_time,
        relaxing_time,
        cycle_repeat,
        integrator,
        sign,
        ground_population_min,
    };
    if let Err(e) = cycle.validate() {
        let field = match &e {
            ottokz_core::Error::InvalidParameter { name, .. } => Some(*name),
            ottokz_core::Error::InvalidLength(_) => Some("length"),
            _ => None,
        };
        let located = field.and_then(|f| locate(&r, f));
        return Err(ConfigError(vec![Diagnostic {
            line: located.as_ref().map(|(_, l)| *l),
            field: located.map(|(f, _)| f),
            message: e.to_string(),
        }]));
    }
    Ok(ResolvedConfig { cycle, sweep, fit })
}

/// Finds the line of a core parameter name in any section.
fn locate(r: &Reader, name: &str) -> Option<(String, usize)> {
    SECTIONS
        .iter()
        .find_map(|s| r.line_of(s, name).map(|l| (format!("{s}.{name}"), l)))
}

fn read_sweep(r: &mut Reader) -> Option<SweepSpec> {
    let axis = r.required("sweep", "axis", choice(&[("tau2", SweepAxis::Tau2), ("h2", SweepAxis::H2)]));
    let default_spacing = match axis {
        Some(SweepAxis::H2) => Spacing::Linear,
        _ => Spacing::Log,
    };
    let spacing = r
        .get("sweep", "spacing", choice(&[("log", Spacing::Log), ("linear", Spacing::Linear)]))
        .unwrap_or(default_spacing);
    let start = r.required("sweep", "start", number);
    let stop = r.required("sweep", "stop", number);
    let points = match (r.has("sweep", "points"), r.has("sweep", "step")) {
        (true, true) => {
            let line = r.line_of("sweep", "step").unwrap_or(0);
            r.raw("sweep", "step");
            r.error(line, Some("sweep.step".into()), "give either points or step, not both".into());
            None
        }
        (true, false) => r.get("sweep", "points", count),
        (false, true) => {
            let line = r.line_of("sweep", "step").unwrap_or(0);
            let step = r.get("sweep", "step", number)?;
            if spacing != Spacing::Linear {
                r.error(line, Some("sweep.step".into()), "step needs linear spacing".into());
                return None;
            }
            let span = (stop? - start?) / step;
            let n = span.round();
            if !(step > 0.0) || (span - n).abs() > 1e-9 * n.max(1.0) {
                r.error(line, Some("sweep.step".into()), "step must be positive and divide stop - start".into());
                return None;
            }
            Some(n as usize + 1)
        }
        (false, false) => {
            r.missing("sweep", "points");
            None
        }
    };
    let spec = SweepSpec {
        axis: axis?,
        spacing,
        start: start?,
        stop: stop?,
        points: points?,
    };
    if let Err(e) = spec.grid() {
        let line = r.line_of("sweep", "start");
        r.errors.push(Diagnostic {
            line,
            field: Some("sweep".into()),
            message: e.to_string(),
        });
        return None;
    }
    Some(spec)
}

fn read_fit(r: &mut Reader) -> FitSpec {
    let mut fit = FitSpec::default();
    let nu = r.get("fit", "nu", number).unwrap_or(1.0);
    let z = r.get("fit", "z", number).unwrap_or(1.0);
    let d = r.get("fit", "d", |s| u32::from_str(s).map_err(|_| format!("expected a positive integer, got `{s}`")));
    let x = r.get("fit", "x", |s| {
        let v = u8::from_str(s).map_err(|_| format!("expected 1 or 2, got `{s}`"))?;
        QuenchClass::from_flag(v).map_err(|e| e.to_string())
    });
    match CriticalExponents::new(nu, z, d.unwrap_or(1), x.unwrap_or(QuenchClass::Crossing)) {
        Ok(e) => fit.exponents = e,
        Err(e) => {
            let line = r.line_of("fit", "nu").or(r.line_of("fit", "z")).or(r.line_of("fit", "d"));
            r.errors.push(Diagnostic {
                line,
                field: Some("fit".into()),
                message: e.to_string(),
            });
        }
    }
    if let Some(w) = r.get("fit", "w_inf", |s| match s {
        "numeric" => Ok(WInfSource::Numeric),
        "analytic" => Ok(WInfSource::Analytic),
        v => number(v)
            .map(WInfSource::Value)
            .map_err(|_| format!("expected numeric | analytic | a number, got `{v}`")),
    }) {
        fit.w_inf = w;
    }
    if let Some(window) = r.get("fit", "window", |s| {
        if s == "auto" {
            return Ok(None);
        }
        match numbers(s)?.as_slice() {
            [lo, hi] if *lo > 0.0 && hi >= lo => Ok(Some((*lo, *hi))),
            _ => Err(format!("expected auto or `lo, hi` with 0 < lo <= hi, got `{s}`")),
        }
    }) {
        fit.window = window;
    }
    fit
}

impl ResolvedConfig {
    /// Every setting in a fixed order with 17 significant digits; this is
    /// what the config hash covers, and it parses back to `self`.
    pub fn canonical(&self) -> String {
        use std::fmt::Write;
        let c = &self.cycle;
        let mut s = String::new();
        let frame = |f: BathFrame| match f {
            BathFrame::Bare => "bare",
            BathFrame::Eigenmode => "eigenmode",
        };
        let rates = |b: &BathSpec<f64>| b.kappa.map(sci).join(", ");
        let _ = writeln!(s, "[medium]\nlength = {}\nh1 = {}\nh2 = {}\n", c.length, sci(c.h1), sci(c.h2));
        let _ = writeln!(
            s,
            "[baths]\nenergizing_kappa = {}\nenergizing_frame = {}\nrelaxing_kappa = {}\nrelaxing_frame = {}\nfermion_sign = {}\n",
            rates(&c.energizing),
            frame(c.energizing.frame),
            rates(&c.relaxing),
            frame(c.relaxing.frame),
            match c.sign {
                FermionSign::Minus => "minus",
                FermionSign::Plus => "plus",
            }
        );
        let _ = writeln!(s, "[strokes]\ntau1 = {}\ntau2 = {}", sci(c.tau1), sci(c.tau2));
        let mut steady_tol = None;
        for (name, policy, time) in [
            ("energizing", c.energizing_policy, c.energizing_time),
            ("relaxing", c.relaxing_policy, c.relaxing_time),
        ] {
            match policy {
                StrokePolicy::SteadyState { tol } => {
                    steady_tol = Some(tol);
                    let _ = writeln!(s, "{name} = steady\n{name}_time = {}", sci(time));
                }
                StrokePolicy::Fixed(t) => {
                    let _ = writeln!(s, "{name} = fixed\n{name}_time = {}", sci(t));
                }
            }
        }
        let _ = writeln!(
            s,
            "steady_tol = {}\nmax_cycles = {}\ncycle_tol = {}\nground_population_min = {}\n",
            sci(steady_tol.unwrap_or(1e-10)),
            c.cycle_repeat.max_cycles,
            sci(c.cycle_repeat.tol),
            sci(c.ground_population_min)
        );
        let i = &c.integrator;
        let _ = writeln!(
            s,
            "[integrator]\nramp_courant = {}\nramp_min_steps = {}\nramp_max_step = {}\ndissipative_courant = {}\ndissipative_min_steps = {}\nsteady_method = {}\nsteady_step_budget = {}\n",
            sci(i.ramp_courant),
            i.ramp_min_steps,
            sci(i.ramp_max_step),
            sci(i.dissipative_courant),
            i.dissipative_min_steps,
            match i.steady_method {
                SteadyStateMethod::Direct => "direct",
                SteadyStateMethod::Evolve => "evolve",
            },
            i.steady_step_budget
        );
        if let Some(sw) = &self.sweep {
            let _ = writeln!(
                s,
                "[sweep]\naxis = {}\nspacing = {}\nstart = {}\nstop = {}\npoints = {}\n",
                sw.axis.as_str(),
                match sw.spacing {
                    Spacing::Log => "log",
                    Spacing::Linear => "linear",
                },
                sci(sw.start),
                sci(sw.stop),
                sw.points
            );
        }
        let f = &self.fit;
        let e = &f.exponents;
        let _ = write!(
            s,
            "[fit]\nnu = {}\nz = {}\nd = {}\nx = {}\nw_inf = {}\nwindow = {}\n",
            sci(e.nu),
            sci(e.z),
            e.d,
            e.x.flag(),
            match f.w_inf {
                WInfSource::Numeric => "numeric".to_string(),
                WInfSource::Analytic => "analytic".to_string(),
                WInfSource::Value(v) => sci(v),
            },
            match f.window {
                None => "auto".to_string(),
                Some((lo, hi)) => format!("{}, {}", sci(lo), sci(hi)),
            }
        );
        s
    }

    /// Copy of the cycle with the swept parameter set to `value`.
    pub fn cycle_at(&self, axis: SweepAxis, value: f64) -> CycleConfig64 {
        let mut c = self.cycle.clone();
        match axis {
            SweepAxis::Tau2 => c.tau2 = value,
            SweepAxis::H2 => c.h2 = value,
        }
        c
    }
}
