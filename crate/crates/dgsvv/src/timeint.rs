//! Explicit Runge–Kutta time stepping with CFL control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::Solver;
use crate::state::State5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScheme {
    /// Three-stage strong-stability-preserving RK3.
    Rk3Ssp,
    /// Carpenter–Kennedy five-stage, fourth-order, two-register scheme.
    #[default]
    Rk4LowStorage,
}

impl TimeScheme {
    pub fn order(self) -> usize {
        match self {
            TimeScheme::Rk3Ssp => 3,
            TimeScheme::Rk4LowStorage => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub scheme: TimeScheme,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    /// Fixed step overriding the CFL estimate.
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_cfl() -> f64 {
    0.4
}

impl TimeConfig {
    pub fn new(scheme: TimeScheme, cfl: f64, t_end: f64) -> Self {
        TimeConfig { scheme, cfl, t_end, dt: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0) {
            return Err(Error::Config(format!("CFL must be positive, got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("fixed dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }
}

/// A semi-discrete system `q' = R(t, q)`.
pub trait System {
    fn rhs(&mut self, t: f64, q: &[State5], dq: &mut [State5]) -> Result<()>;

    /// Largest stable step for the given CFL number.
    fn stable_dt(&self, q: &[State5], cfl: f64) -> Result<f64>;

    /// Called once before the first stage of every step.
    fn begin_step(&mut self) {}

    /// Validates a completed step.
    fn check(&self, _q: &[State5]) -> Result<()> {
        Ok(())
    }
}

impl System for Solver {
    fn rhs(&mut self, _t: f64, q: &[State5], dq: &mut [State5]) -> Result<()> {
        Solver::rhs(self, q, dq)
    }

    fn stable_dt(&self, q: &[State5], cfl: f64) -> Result<f64> {
        Solver::stable_dt(self, q, cfl)
    }

    fn begin_step(&mut self) {
        Solver::begin_step(self)
    }

    fn check(&self, q: &[State5]) -> Result<()> {
        self.check_admissible(q)
    }
}

const CK_A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
const CK_B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
const CK_C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363183900.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// Stage storage for one scheme.
pub struct Stepper {
    scheme: TimeScheme,
    k: Vec<State5>,
    tmp: Vec<State5>,
    stage: Vec<State5>,
}

impl Stepper {
    pub fn new(scheme: TimeScheme, len: usize) -> Self {
        Stepper { scheme, k: vec![State5::ZERO; len], tmp: vec![State5::ZERO; len], stage: vec![State5::ZERO; len] }
    }

    /// Advances `q` from `t` by `dt` in place.
    pub fn step<S: System + ?Sized>(&mut self, sys: &mut S, q: &mut [State5], t: f64, dt: f64) -> Result<()> {
        match self.scheme {
            TimeScheme::Rk4LowStorage => {
                for s in 0..5 {
                    sys.rhs(t + CK_C[s] * dt, q, &mut self.tmp)?;
                    for ((k, f), qi) in self.k.iter_mut().zip(&self.tmp).zip(q.iter_mut()) {
                        *k = *k * CK_A[s] + *f * dt;
                        *qi += *k * CK_B[s];
                    }
                }
                Ok(())
            }
            TimeScheme::Rk3Ssp => {
                // Increment form of the Shu–Osher scheme: q ← q + dt(k1 + k2 + 4k3)/6.
                sys.rhs(t, q, &mut self.k)?;
                for ((st, qi), f) in self.stage.iter_mut().zip(q.iter()).zip(&self.k) {
                    *st = *qi + *f * dt;
                }
                sys.rhs(t + dt, &self.stage, &mut self.tmp)?;
                for (((st, qi), k), f) in self.stage.iter_mut().zip(q.iter()).zip(self.k.iter_mut()).zip(&self.tmp) {
                    *k += *f;
                    *st = *qi + *k * (0.25 * dt);
                }
                sys.rhs(t + 0.5 * dt, &self.stage, &mut self.tmp)?;
                for ((qi, k), f) in q.iter_mut().zip(&self.k).zip(&self.tmp) {
                    *qi += (*k * (1.0 / 6.0) + *f * (2.0 / 3.0)) * dt;
                }
                Ok(())
            }
        }
    }

    fn reset(&mut self) {
        self.k.iter_mut().for_each(|v| *v = State5::ZERO);
    }
}

/// What the observer sees after each completed step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdvanceSummary {
    pub steps: usize,
    pub t: f64,
}

/// Integrates from `t0` to `cfg.t_end`, calling `observe` after every step.
/// Failures are reported with the time of the step that produced them.
pub fn advance<S: System + ?Sized>(
    sys: &mut S,
    q: &mut [State5],
    t0: f64,
    cfg: &TimeConfig,
    mut observe: impl FnMut(&StepInfo, &S, &[State5]) -> Result<()>,
) -> Result<AdvanceSummary> {
    cfg.validate()?;
    let mut stepper = Stepper::new(cfg.scheme, q.len());
    let mut t = t0;
    let mut steps = 0;
    let at = |t: f64| move |e: Error| Error::AtTime { t, source: Box::new(e) };
    while t < cfg.t_end {
        sys.begin_step();
        let mut dt = match cfg.dt {
            Some(dt) => dt,
            None => sys.stable_dt(q, cfg.cfl).map_err(at(t))?,
        };
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::AtTime { t, source: Box::new(Error::Config(format!("invalid time step {dt}"))) });
        }
        let last = t + dt * (1.0 + 1e-12) >= cfg.t_end;
        if last {
            dt = cfg.t_end - t;
        }
        stepper.reset();
        stepper.step(sys, q, t, dt).map_err(at(t))?;
        t = if last { cfg.t_end } else { t + dt };
        sys.check(q).map_err(at(t))?;
        steps += 1;
        observe(&StepInfo { step: steps, t, dt }, sys, q)?;
    }
    Ok(AdvanceSummary { steps, t })
}
