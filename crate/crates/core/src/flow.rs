//! Integrators for the extended combinatorial Ricci flow `dl/dt = K̃(l)`.
//!
//! The right-hand side is bounded and continuous on all of `ℝᴺ`, so explicit
//! steps never get stuck on degenerate tetrahedra. Because `C K̃ = 0`, every
//! scheme here preserves `C l` and stays on the gauge slice it starts on.
//! Near the solution the Newton-hybrid scheme switches to damped Newton steps
//! on `Ker(C)`, where `Λ` is negative definite.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::assembly::{self, CurvatureState, EdgeLengths};
use crate::error::{Error, Result};
use crate::triangulation::{CuspMatrix, CuspedTriangulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Euler,
    Rk4,
    NewtonHybrid,
    Calabi,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Self::Euler => "euler",
            Self::Rk4 => "rk4",
            Self::NewtonHybrid => "newton-hybrid",
            Self::Calabi => "calabi",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Self::Euler),
            "rk4" => Ok(Self::Rk4),
            "newton-hybrid" | "newton" => Ok(Self::NewtonHybrid),
            "calabi" => Ok(Self::Calabi),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Explicit Runge-Kutta variant used by [`ricci_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Explicit {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowConfig {
    pub scheme: Scheme,
    /// Time step `h`.
    pub step: f64,
    /// Stop once `‖K̃‖_∞ < tol`.
    pub tol: f64,
    pub max_steps: usize,
    pub trace_every: usize,
    /// Project the initial metric onto `Ker(C)` before flowing.
    pub gauge_fix: bool,
    /// Retry explicit steps with `h/2` when the energy rises by more than
    /// `10 h² ‖K̃‖²`, and Calabi steps when `‖K̃‖₂` grows.
    pub adaptive: bool,
    /// Store the full metric in every trace row.
    pub record_lengths: bool,
    /// `‖K̃‖_∞` below which the Newton-hybrid scheme tries Newton steps.
    pub newton_switch: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::NewtonHybrid,
            step: 0.1,
            tol: 1e-10,
            max_steps: 1_000_000,
            trace_every: 1,
            gauge_fix: true,
            adaptive: false,
            record_lengths: false,
            newton_switch: 0.1,
        }
    }
}

impl FlowConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidConfig(format!("step must be positive, got {}", self.step)));
        }
        if self.step > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "step {} exceeds the explicit stability guard of 1",
                self.step
            )));
        }
        if !(self.tol >= 1e-14) {
            return Err(Error::InvalidConfig(format!("tol must be at least 1e-14, got {}", self.tol)));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidConfig("trace_every must be at least 1".into()));
        }
        if !(self.newton_switch > 0.0) {
            return Err(Error::InvalidConfig("newton_switch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    /// Flow time; Newton steps advance it by the nominal step `h`.
    pub t: f64,
    pub knorm_inf: f64,
    pub knorm_2: f64,
    pub energy: f64,
    pub volume: f64,
    pub degenerate_tets: usize,
    /// `‖C l(t) - C l(0)‖_∞`.
    pub gauge_drift: f64,
    pub lengths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Initial,
    Explicit,
    Newton,
    Calabi,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
    /// How the state of each row was reached.
    pub kinds: Vec<StepKind>,
}

impl FlowTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_gauge_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.gauge_drift).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowResult {
    pub final_l: Vec<f64>,
    pub converged: bool,
    pub steps_taken: usize,
    pub newton_steps: usize,
    pub final_curvature_norm: f64,
    pub final_volume: f64,
    pub final_energy: f64,
    pub max_gauge_drift: f64,
    /// Initial metric after the optional gauge projection.
    pub initial_l: Vec<f64>,
    pub tol: f64,
    #[serde(skip)]
    pub trace: FlowTrace,
}

impl FlowResult {
    pub fn final_lengths(&self) -> EdgeLengths {
        EdgeLengths::from(self.final_l.clone())
    }
}

fn rhs(t: &CuspedTriangulation, l: &EdgeLengths) -> Result<DVector<f64>> {
    Ok(assembly::curvature(t, l)?.k)
}

/// One explicit step of `dl/dt = K̃(l)`.
pub fn ricci_step(t: &CuspedTriangulation, l: &EdgeLengths, h: f64, scheme: Explicit) -> Result<EdgeLengths> {
    let k1 = rhs(t, l)?;
    let out = match scheme {
        Explicit::Euler => &l.0 + h * k1,
        Explicit::Rk4 => {
            let k2 = rhs(t, &EdgeLengths(&l.0 + 0.5 * h * &k1))?;
            let k3 = rhs(t, &EdgeLengths(&l.0 + 0.5 * h * &k2))?;
            let k4 = rhs(t, &EdgeLengths(&l.0 + h * &k3))?;
            &l.0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        }
    };
    Ok(EdgeLengths(out))
}

/// One Euler step of the Calabi flow `dl/dt = -Λ K`. Fails on degenerate
/// metrics, where `Λ` is undefined.
pub fn calabi_step(t: &CuspedTriangulation, l: &EdgeLengths, h: f64) -> Result<EdgeLengths> {
    let k = rhs(t, l)?;
    let lap = assembly::laplacian(t, l)?;
    Ok(EdgeLengths(&l.0 - h * (lap * k)))
}

/// Equilibrium test on a finished run: converged below tolerance and
/// `‖K̃‖_∞` non-increasing over the last few trace rows.
pub fn detect_equilibrium(result: &FlowResult) -> bool {
    const WINDOW: usize = 5;
    if !(result.final_curvature_norm < result.tol) {
        return false;
    }
    let rows = &result.trace.rows;
    let start = rows.len().saturating_sub(WINDOW);
    rows[start..]
        .windows(2)
        .all(|w| w[1].knorm_inf <= w[0].knorm_inf)
}

/// [`detect_equilibrium`] for a run that may have aborted.
pub fn detect_equilibrium_outcome(outcome: &Result<FlowResult>) -> bool {
    outcome.as_ref().map(detect_equilibrium).unwrap_or(false)
}

/// Precomputed gauge data shared by all steps of a run.
struct Gauge {
    c: CuspMatrix,
    kernel: DMatrix<f64>,
    initial: DVector<f64>,
}

impl Gauge {
    fn drift(&self, l: &EdgeLengths) -> f64 {
        (self.c.apply(l) - &self.initial).amax()
    }
}

struct Runner<'a> {
    tri: &'a CuspedTriangulation,
    cfg: &'a FlowConfig,
    gauge: Gauge,
    l: EdgeLengths,
    state: CurvatureState,
    time: f64,
    trace: FlowTrace,
}

/// Outcome of a single accepted step.
struct Step {
    l: EdgeLengths,
    state: CurvatureState,
    kind: StepKind,
}

impl<'a> Runner<'a> {
    fn record(&mut self, kind: StepKind) {
        self.trace.rows.push(TraceRow {
            t: self.time,
            knorm_inf: self.state.knorm_inf(),
            knorm_2: self.state.knorm_2(),
            energy: self.state.energy,
            volume: self.state.total_volume,
            degenerate_tets: self.state.degenerate_tets.len(),
            gauge_drift: self.gauge.drift(&self.l),
            lengths: self.cfg.record_lengths.then(|| self.l.as_slice().to_vec()),
        });
        self.trace.kinds.push(kind);
    }

    fn slack(h: f64, state: &CurvatureState) -> f64 {
        10.0 * h * h * state.k.norm_squared()
    }

    /// Explicit step with optional energy guard. `strict` demands an actual
    /// energy decrease (used by the Newton-hybrid scheme).
    fn explicit(&self, scheme: Explicit, strict: bool) -> Result<Step> {
        let mut h = self.cfg.step;
        loop {
            let l = ricci_step(self.tri, &self.l, h, scheme)?;
            let state = assembly::curvature(self.tri, &l)?;
            let rise = state.energy - self.state.energy;
            let ok = if strict {
                rise < 0.0
            } else {
                !self.cfg.adaptive || rise <= Self::slack(h, &self.state)
            };
            if ok || h < 1e-12 {
                return Ok(Step {
                    l,
                    state,
                    kind: StepKind::Explicit,
                });
            }
            h *= 0.5;
        }
    }

    fn calabi(&self) -> Result<Step> {
        let mut h = self.cfg.step;
        loop {
            let l = calabi_step(self.tri, &self.l, h)?;
            let state = assembly::curvature(self.tri, &l)?;
            // the Calabi flow descends ‖K̃‖², not F̃
            let settled = state.knorm_2() <= self.state.knorm_2();
            if !self.cfg.adaptive || settled || h < 1e-12 {
                return Ok(Step {
                    l,
                    state,
                    kind: StepKind::Calabi,
                });
            }
            h *= 0.5;
        }
    }

    /// Damped Newton step on `Ker(C)`: solve `(Pᵀ Λ P) y = -Pᵀ K̃`, then
    /// backtrack on the energy. `None` when no acceptable step exists.
    fn newton(&self) -> Result<Option<Step>> {
        let p = &self.gauge.kernel;
        if p.ncols() == 0 {
            return Ok(None);
        }
        let lap = assembly::laplacian(self.tri, &self.l)?;
        let neg_hess = -(p.transpose() * lap * p);
        let neg_hess = 0.5 * (&neg_hess + neg_hess.transpose());
        let Some(chol) = neg_hess.cholesky() else {
            return Ok(None);
        };
        let g = p.transpose() * &self.state.k;
        let delta = p * chol.solve(&g);
        // directional derivative of the energy along delta is -K̃·delta < 0
        let slope = self.state.k.dot(&delta);
        if !(slope > 0.0) {
            return Ok(None);
        }
        let resolution = 64.0 * f64::EPSILON * self.state.energy.abs().max(1.0);
        let mut s = 1.0;
        for _ in 0..40 {
            let l = EdgeLengths(&self.l.0 + s * &delta);
            let state = assembly::curvature(self.tri, &l)?;
            let decrease = self.state.energy - state.energy;
            let sufficient = decrease >= 1e-4 * s * slope && decrease > 0.0;
            // Below the energy's floating-point resolution the Armijo test is
            // noise; accept on a drop in curvature instead.
            let unresolved = slope < resolution && state.knorm_inf() < self.state.knorm_inf();
            if sufficient || unresolved {
                return Ok(Some(Step {
                    l,
                    state,
                    kind: StepKind::Newton,
                }));
            }
            s *= 0.5;
        }
        Ok(None)
    }

    fn advance(&mut self) -> Result<Step> {
        match self.cfg.scheme {
            Scheme::Euler => self.explicit(Explicit::Euler, false),
            Scheme::Rk4 => self.explicit(Explicit::Rk4, false),
            Scheme::Calabi => {
                if self.state.all_nondegenerate() {
                    self.calabi()
                } else {
                    self.explicit(Explicit::Euler, false)
                }
            }
            Scheme::NewtonHybrid => {
                if self.state.all_nondegenerate() && self.state.knorm_inf() < self.cfg.newton_switch {
                    if let Some(step) = self.newton()? {
                        return Ok(step);
                    }
                }
                self.explicit(Explicit::Euler, true)
            }
        }
    }
}

/// Integrate the flow from `l0` until `‖K̃‖_∞ < tol` or `max_steps`.
///
/// Exhausting `max_steps` is not an error; the result reports
/// `converged = false`. A non-finite state aborts with [`Error::NonFinite`].
pub fn run_flow(t: &CuspedTriangulation, l0: &EdgeLengths, cfg: &FlowConfig) -> Result<FlowResult> {
    cfg.validate()?;
    if l0.len() != t.num_edges {
        return Err(Error::LengthMismatch {
            got: l0.len(),
            expected: t.num_edges,
        });
    }
    if !l0.is_finite() {
        return Err(Error::NonFinite { steps: 0 });
    }
    let c = t.cusp_matrix()?;
    let l = if cfg.gauge_fix { c.gauge_project(l0)? } else { l0.clone() };
    let kernel = c.kernel_basis();
    let initial = c.apply(&l);
    let state = assembly::curvature(t, &l)?;
    let mut runner = Runner {
        tri: t,
        cfg,
        gauge: Gauge { c, kernel, initial },
        l: l.clone(),
        state,
        time: 0.0,
        trace: FlowTrace::default(),
    };
    runner.record(StepKind::Initial);

    let mut steps = 0;
    let mut newton_steps = 0;
    let mut last_recorded = true;
    while steps < cfg.max_steps && !(runner.state.knorm_inf() < cfg.tol) {
        let step = runner.advance()?;
        steps += 1;
        if !step.l.is_finite() || !step.state.energy.is_finite() {
            return Err(Error::NonFinite { steps });
        }
        if step.kind == StepKind::Newton {
            newton_steps += 1;
        }
        runner.l = step.l;
        runner.state = step.state;
        runner.time += cfg.step;
        last_recorded = steps % cfg.trace_every == 0;
        if last_recorded {
            runner.record(step.kind);
        }
    }
    if !last_recorded {
        let kind = *runner.trace.kinds.last().unwrap_or(&StepKind::Explicit);
        runner.record(kind);
    }

    let knorm = runner.state.knorm_inf();
    Ok(FlowResult {
        final_l: runner.l.as_slice().to_vec(),
        converged: knorm < cfg.tol,
        steps_taken: steps,
        newton_steps,
        final_curvature_norm: knorm,
        final_volume: runner.state.total_volume,
        final_energy: runner.state.energy,
        max_gauge_drift: runner.trace.max_gauge_drift(),
        initial_l: l.as_slice().to_vec(),
        tol: cfg.tol,
        trace: runner.trace,
    })
}

/// Independent runs from several initial metrics, one thread each. Results
/// come back in input order.
pub fn run_many(t: &CuspedTriangulation, inits: &[EdgeLengths], cfg: &FlowConfig) -> Vec<Result<FlowResult>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = inits
            .iter()
            .map(|l0| scope.spawn(move || run_flow(t, l0, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("flow thread panicked"))
            .collect()
    })
}

/// Geometric decay factor of `‖K̃‖_∞` over the last `window` trace rows:
/// the largest ratio between consecutive rows, ignoring rows already at the
/// floating-point floor.
pub fn fitted_decay_rate(trace: &FlowTrace, window: usize) -> Option<f64> {
    let rows: Vec<f64> = trace
        .rows
        .iter()
        .map(|r| r.knorm_inf)
        .filter(|&k| k > 1e-13)
        .collect();
    if rows.len() < 3 {
        return None;
    }
    let start = rows.len().saturating_sub(window.max(2));
    rows[start..]
        .windows(2)
        .map(|w| w[1] / w[0])
        .reduce(f64::max)
}

/// Upper bound on `‖K̃‖_∞` anywhere: `2π` plus `π` per incident slot.
pub fn curvature_bound(t: &CuspedTriangulation) -> f64 {
    let max_deg = t.edge_degrees().into_iter().max().unwrap_or(0);
    2.0 * PI + PI * max_deg as f64
}
