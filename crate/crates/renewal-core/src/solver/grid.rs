//! Time-step selection and age-grid construction.
//!
//! The time step is refined (by an integer scan on the step count) until every
//! control breakpoint, every generation time inside the horizon, and the
//! age-grid divisibility constraints of constant-rate populations land on the
//! grid. Alignment is what makes piecewise-constant controls exactly
//! representable and keeps the control-polynomial structure exact on the grid.

use crate::error::{Error, Result};
use crate::population::{PerPopulation, Population};
use crate::solver::control::ControlSchedule;
use crate::solver::scenario::Scenario;

/// Requested resolution. Everything defaults: time step to 1/2000 of the
/// horizon, upwind cells to 1/2000 of the sale age span.
#[derive(Clone, Copy, Debug, Default)]
pub struct GridSpec {
    /// Target time step for the characteristics solver, refined for alignment.
    pub dt: Option<f64>,
    /// Cell width for the upwind oracle.
    pub upwind_da: Option<f64>,
}

impl GridSpec {
    pub fn with_dt(dt: f64) -> Self {
        GridSpec { dt: Some(dt), upwind_da: None }
    }

    pub fn with_upwind_da(da: f64) -> Self {
        GridSpec { dt: None, upwind_da: Some(da) }
    }
}

/// Uniform age axis: node `i` sits at `start + i * step`, `i = 0..count-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct AgeAxis {
    start: f64,
    step: f64,
    count: usize,
}

impl AgeAxis {
    pub(crate) fn new(start: f64, step: f64, count: usize) -> Self {
        debug_assert!(count >= 2 && step > 0.0);
        Self { start, step, count }
    }

    pub fn age(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.age(self.count - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Node count (cells + 1).
    pub fn count(&self) -> usize {
        self.count
    }
}

/// Resolved discretization for one characteristics solve.
#[derive(Clone, Debug)]
pub(crate) struct SolverGrid {
    pub dt: f64,
    pub steps: usize,
    pub axes: PerPopulation<AgeAxis>,
    /// Whether transport is exact along grid diagonals (constant growth).
    pub exact: PerPopulation<bool>,
    /// Sale-axis node index of each sell age, strictly inside the axis.
    pub sell_nodes: Vec<usize>,
    /// Sell ages after snapping onto the sale axis (exact under alignment).
    pub sell_ages: Vec<f64>,
}

const SCAN_FACTOR: usize = 8;
const ALIGN_RTOL: f64 = 1e-9;

fn misaligned(value: f64, dt: f64) -> bool {
    let ratio = value / dt;
    (ratio - ratio.round()).abs() > ALIGN_RTOL * ratio.max(1.0)
}

/// Everything that must be an integer multiple of the time step, with labels
/// for diagnostics.
fn alignment_targets(scenario: &Scenario, controls: &ControlSchedule) -> Vec<(String, f64)> {
    let mut targets = Vec::new();
    for b in controls.interior_breakpoints(scenario.horizon()) {
        targets.push((format!("control breakpoint {b}"), b));
    }
    for (l, t) in scenario.clock().times().iter().enumerate().skip(1) {
        if *t < scenario.horizon() && misaligned_candidate(*t, scenario.horizon()) {
            targets.push((format!("generation time {l} = {t}"), *t));
        }
    }
    if let Some(g) = scenario.growth(Population::Juvenile).constant_value() {
        targets.push((
            "maturity age over juvenile growth".into(),
            scenario.abar() / g,
        ));
    }
    if let Some(g) = scenario.growth(Population::Sale).constant_value() {
        for a in scenario.sell_ages() {
            targets.push((format!("sell age {a} offset over sale growth"), (a - scenario.abar()) / g));
        }
    }
    targets
}

/// Generation times that coincide with the horizon are aligned for free.
fn misaligned_candidate(t: f64, horizon: f64) -> bool {
    (t - horizon).abs() > ALIGN_RTOL * horizon.max(1.0)
}

pub(crate) fn align(
    scenario: &Scenario,
    controls: &ControlSchedule,
    spec: &GridSpec,
) -> Result<SolverGrid> {
    let horizon = scenario.horizon();
    let base_steps = match spec.dt {
        Some(dt) if dt.is_finite() && dt > 0.0 => ((horizon / dt).round() as usize).max(1),
        Some(dt) => {
            return Err(Error::InvalidArgument(format!("time step {dt} must be positive")))
        }
        None => 2000,
    };

    let targets = alignment_targets(scenario, controls);
    let mut chosen = None;
    for steps in base_steps..=base_steps * SCAN_FACTOR {
        let dt = horizon / steps as f64;
        if targets.iter().all(|(_, v)| !misaligned(*v, dt)) {
            chosen = Some(steps);
            break;
        }
    }
    let steps = chosen.ok_or_else(|| {
        let dt = horizon / (base_steps * SCAN_FACTOR) as f64;
        let offenders: Vec<String> = targets
            .iter()
            .filter(|(_, v)| misaligned(*v, dt))
            .map(|(name, _)| name.clone())
            .collect();
        Error::GridAlignment(format!(
            "no step count in [{}, {}] puts these on the time grid: {}",
            base_steps,
            base_steps * SCAN_FACTOR,
            offenders.join("; ")
        ))
    })?;
    let dt = horizon / steps as f64;

    let mut axes = PerPopulation::uniform(AgeAxis::new(0.0, 1.0, 2));
    let mut exact = PerPopulation::uniform(false);
    for pop in Population::ALL {
        let (lo, hi) = match pop {
            Population::Juvenile => (0.0, scenario.abar()),
            _ => (scenario.abar(), scenario.amax()),
        };
        let g = scenario.growth(pop);
        let axis = match g.constant_value() {
            Some(gv) => {
                *exact.get_mut(pop) = true;
                let da = gv * dt;
                if pop == Population::Juvenile {
                    // Alignment guarantees abar/da is integral; renormalize the
                    // step so the axis ends exactly at abar.
                    let n = (hi / da).round() as usize;
                    AgeAxis::new(0.0, hi / n as f64, n + 1)
                } else {
                    let n = ((hi - lo) / da - ALIGN_RTOL).ceil().max(1.0) as usize;
                    AgeAxis::new(lo, da, n + 1)
                }
            }
            None => {
                // Interpolated transport: cells at least one transport step
                // wide so a backtracked foot never leaves its upwind cell.
                let da_min = g.upper_bound() * dt;
                let n = ((hi - lo) / da_min).floor() as usize;
                if n < 1 {
                    return Err(Error::GridAlignment(format!(
                        "the {} age span {} is shorter than one transport step {da_min}",
                        pop.label(),
                        hi - lo
                    )));
                }
                AgeAxis::new(lo, (hi - lo) / n as f64, n + 1)
            }
        };
        *axes.get_mut(pop) = axis;
    }

    let sale_axis = axes.get(Population::Sale).clone();
    let mut sell_nodes = Vec::with_capacity(scenario.sell_ages().len());
    let mut sell_ages = Vec::with_capacity(scenario.sell_ages().len());
    for a in scenario.sell_ages() {
        let k = ((a - sale_axis.start()) / sale_axis.step()).round() as usize;
        if k == 0 || k + 1 >= sale_axis.count() {
            return Err(Error::GridAlignment(format!(
                "sell age {a} snaps onto the boundary of the sale age axis"
            )));
        }
        if sell_nodes.last() == Some(&k) {
            return Err(Error::GridAlignment(format!(
                "sell ages are closer than one age cell near {a}"
            )));
        }
        sell_nodes.push(k);
        sell_ages.push(sale_axis.age(k));
    }

    Ok(SolverGrid { dt, steps, axes, exact, sell_nodes, sell_ages })
}
