//! Independent first-order finite-volume route used to cross-check the
//! characteristics solver. Cell averages advance in flux form with upwind
//! interface values; sell ages sit on cell interfaces and scale the flux
//! crossing them. Deliberately shares no marching code with the main solver.

use super::control::ControlSchedule;
use super::grid::{AgeAxis, GridSpec};
use super::scenario::Scenario;
use super::{Snapshot, Trajectory};
use crate::characteristics::RateField;
use crate::error::{Error, Result};
use crate::functionals::QuadraticJuvenileCost;
use crate::population::{PerPopulation, Population};

const CFL: f64 = 0.5;
const SCAN_FACTOR: usize = 8;
const ALIGN_RTOL: f64 = 1e-9;

#[derive(Clone)]
struct CellGrid {
    lo: f64,
    da: f64,
    n: usize,
}

impl CellGrid {
    fn fit(lo: f64, hi: f64, da_request: f64) -> CellGrid {
        let n = (((hi - lo) / da_request).round() as usize).max(2);
        CellGrid { lo, da: (hi - lo) / n as f64, n }
    }

    fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.da
    }

    fn interface(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.da
    }

    fn axis(&self) -> AgeAxis {
        AgeAxis::new(self.center(0), self.da, self.n)
    }

    fn sample(&self, profile: &super::scenario::AgeProfile) -> Vec<f64> {
        (0..self.n).map(|i| profile.eval(self.center(i))).collect()
    }
}

/// One explicit update of a population's cell averages. `scaled` lists
/// (interface index, multiplier) pairs for sell-age crossings.
fn advance(
    grid: &CellGrid,
    g: &RateField,
    r: &RateField,
    tm: f64,
    dt: f64,
    old: &[f64],
    new: &mut [f64],
    flux: &mut [f64],
    boundary_value: f64,
    scaled: &[(usize, f64)],
) {
    flux[0] = g.eval(tm, grid.interface(0)) * boundary_value;
    for k in 1..=grid.n {
        flux[k] = g.eval(tm, grid.interface(k)) * old[k - 1];
    }
    let lam = dt / grid.da;
    for i in 0..grid.n {
        // The harvest at a sell interface withholds inflow from the cell
        // just downstream; the upstream cell still sheds its full outflux.
        let mut inflow = flux[i];
        if let Some(&(_, th)) = scaled.iter().find(|(k, _)| *k == i) {
            inflow *= th;
        }
        let phi = (r.eval(tm, grid.center(i)) * dt).exp();
        new[i] = phi * (old[i] - lam * (flux[i + 1] - inflow));
    }
}

fn midpoint_cost(
    poly: &crate::functionals::ValuePolynomial,
    t: f64,
    grid: &CellGrid,
    values: &[f64],
) -> f64 {
    if poly.is_zero() {
        return 0.0;
    }
    values
        .iter()
        .enumerate()
        .map(|(i, v)| poly.eval(t, grid.center(i), *v))
        .sum::<f64>()
        * grid.da
}

#[allow(clippy::too_many_arguments)]
fn record(
    scenario: &Scenario,
    quad: &Option<QuadraticJuvenileCost>,
    t: f64,
    grids: &PerPopulation<CellGrid>,
    j: &[f64],
    s: &[f64],
    r: &[f64],
    totals: &mut PerPopulation<Vec<f64>>,
    density: &mut PerPopulation<Vec<f64>>,
    min_sample: &mut f64,
    max_abs_brood: &mut f64,
) -> Result<()> {
    let econ = scenario.econ();
    let gj = grids.get(Population::Juvenile);
    let gs = grids.get(Population::Sale);
    let gr = grids.get(Population::Brood);
    let total_j: f64 = j.iter().sum::<f64>() * gj.da;
    let total_s: f64 = s.iter().sum::<f64>() * gs.da;
    let total_r: f64 = r.iter().sum::<f64>() * gr.da;
    let dens_j = match quad {
        Some(q) => {
            q.apply_sign(j.iter().map(|v| (v - q.target) * (v - q.target)).sum::<f64>() * gj.da)
        }
        None => midpoint_cost(econ.running(Population::Juvenile), t, gj, j),
    };
    let dens_s = midpoint_cost(econ.running(Population::Sale), t, gs, s);
    let dens_r = midpoint_cost(econ.running(Population::Brood), t, gr, r);

    let aggregate = total_j + total_s + total_r + dens_j + dens_s + dens_r;
    if !aggregate.is_finite() {
        for (grid, arr) in [(gj, j), (gs, s), (gr, r)] {
            if let Some(i) = arr.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    t,
                    age: grid.center(i),
                    message: format!("non-finite cell average {}", arr[i]),
                });
            }
        }
        return Err(Error::Numerical { t, age: f64::NAN, message: "non-finite cost density".into() });
    }

    totals.get_mut(Population::Juvenile).push(total_j);
    totals.get_mut(Population::Sale).push(total_s);
    totals.get_mut(Population::Brood).push(total_r);
    density.get_mut(Population::Juvenile).push(dens_j);
    density.get_mut(Population::Sale).push(dens_s);
    density.get_mut(Population::Brood).push(dens_r);
    for arr in [j, s, r] {
        for v in arr {
            if *v < *min_sample {
                *min_sample = *v;
            }
        }
    }
    for v in r {
        let av = v.abs();
        if av > *max_abs_brood {
            *max_abs_brood = av;
        }
    }
    Ok(())
}

/// Solves the system with the finite-volume scheme. The cell size comes from
/// [`GridSpec::with_upwind_da`] (default `abar / 100`); the time step follows
/// from a CFL number of one half and is refined until control breakpoints
/// land on time nodes. Returns a [`Trajectory`] on cell-center axes.
pub fn solve_upwind_oracle(
    scenario: &Scenario,
    controls: &ControlSchedule,
    spec: &GridSpec,
) -> Result<Trajectory> {
    controls.validate_for(scenario.sell_ages().len(), scenario.horizon())?;
    let da_request = spec.upwind_da.unwrap_or(scenario.abar() / 100.0);
    if !(da_request.is_finite() && da_request > 0.0) {
        return Err(Error::InvalidArgument(format!("upwind cell size {da_request} must be positive")));
    }

    let abar = scenario.abar();
    let amax = scenario.amax();
    let horizon = scenario.horizon();
    let grid_j = CellGrid::fit(0.0, abar, da_request);
    let grid_r = CellGrid::fit(abar, amax, da_request);

    // The sale grid must put every sell age on an interface.
    let span = amax - abar;
    let n0 = ((span / da_request).round() as usize).max(2);
    let mut grid_s = None;
    'scan: for n in n0..=SCAN_FACTOR * n0 {
        let da = span / n as f64;
        for &sell in scenario.sell_ages() {
            let x = (sell - abar) / da;
            if (x - x.round()).abs() > ALIGN_RTOL * x.max(1.0) {
                continue 'scan;
            }
        }
        grid_s = Some(CellGrid { lo: abar, da, n });
        break;
    }
    let grid_s = grid_s.ok_or_else(|| {
        Error::GridAlignment(format!(
            "no sale cell count in [{n0}, {}] puts every sell age on an interface",
            SCAN_FACTOR * n0
        ))
    })?;
    let sell_interfaces: Vec<usize> = scenario
        .sell_ages()
        .iter()
        .map(|&sell| ((sell - abar) / grid_s.da).round() as usize)
        .collect();
    for (&k, &sell) in sell_interfaces.iter().zip(scenario.sell_ages()) {
        if k == 0 || k >= grid_s.n {
            return Err(Error::InvalidScenario(format!(
                "sell age {sell} does not lie strictly inside the sale domain"
            )));
        }
    }

    // CFL bound over every population, then refine for breakpoint alignment.
    let courant = |grid: &CellGrid, pop: Population| {
        CFL * grid.da / scenario.growth(pop).upper_bound()
    };
    let dt_cap = courant(&grid_j, Population::Juvenile)
        .min(courant(&grid_s, Population::Sale))
        .min(courant(&grid_r, Population::Brood));
    let m0 = ((horizon / dt_cap).ceil() as usize).max(1);
    let targets = controls.interior_breakpoints(horizon);
    let mut steps = None;
    'time: for m in m0..=SCAN_FACTOR * m0 {
        let dt = horizon / m as f64;
        for &v in &targets {
            let x = v / dt;
            if (x - x.round()).abs() > ALIGN_RTOL * x.max(1.0) {
                continue 'time;
            }
        }
        steps = Some(m);
        break;
    }
    let nt = steps.ok_or_else(|| {
        Error::GridAlignment(format!(
            "no step count in [{m0}, {}] puts every control breakpoint on a time node",
            SCAN_FACTOR * m0
        ))
    })?;
    let dt = horizon / nt as f64;

    let initial = scenario.initial();
    let mut j = grid_j.sample(&initial.juvenile);
    let mut s = grid_s.sample(&initial.sale);
    let mut r = grid_r.sample(&initial.brood);
    let mut new_j = vec![0.0; grid_j.n];
    let mut new_s = vec![0.0; grid_s.n];
    let mut new_r = vec![0.0; grid_r.n];
    let mut flux_j = vec![0.0; grid_j.n + 1];
    let mut flux_s = vec![0.0; grid_s.n + 1];
    let mut flux_r = vec![0.0; grid_r.n + 1];

    let n_sell = sell_interfaces.len();
    let mut traces: Vec<Vec<f64>> = vec![Vec::with_capacity(nt + 1); n_sell];
    let mut theta_applied: Vec<Vec<f64>> = vec![Vec::with_capacity(nt + 1); n_sell];
    for (i, &k) in sell_interfaces.iter().enumerate() {
        traces[i].push(s[k - 1]);
        theta_applied[i].push(controls.theta(i)?.eval(0.0));
    }

    let grids = PerPopulation::new(grid_j.clone(), grid_s.clone(), grid_r.clone());
    let quad = scenario.econ().quadratic_juvenile().copied();
    let mut totals = PerPopulation::uniform(Vec::with_capacity(nt + 1));
    let mut density = PerPopulation::uniform(Vec::with_capacity(nt + 1));
    let mut min_sample = f64::INFINITY;
    let mut max_abs_brood = 0.0;
    record(
        scenario, &quad, 0.0, &grids, &j, &s, &r, &mut totals, &mut density, &mut min_sample,
        &mut max_abs_brood,
    )?;

    let snap_stride = (nt / super::SNAPSHOT_SLOTS).max(1);
    let mut snapshots = vec![Snapshot {
        time_index: 0,
        t: 0.0,
        juvenile: j.clone(),
        sale: s.clone(),
        brood: r.clone(),
    }];

    let g_j = scenario.growth(Population::Juvenile);
    let g_s = scenario.growth(Population::Sale);
    let g_r = scenario.growth(Population::Brood);
    let fert = scenario.fertility();
    let mut scaled = vec![(0usize, 0.0); n_sell];

    for step in 1..=nt {
        let t0 = (step - 1) as f64 * dt;
        let t1 = step as f64 * dt;
        let tm = 0.5 * (t0 + t1);
        let e = controls.eta().eval(tm);

        let outflux = g_j.eval(tm, abar) * j[grid_j.n - 1];
        let births: f64 =
            (0..grid_r.n).map(|i| fert.eval(grid_r.center(i)) * r[i]).sum::<f64>() * grid_r.da;

        for (slot, (i, &k)) in scaled.iter_mut().zip(sell_interfaces.iter().enumerate()) {
            *slot = (k, controls.theta(i)?.eval(tm));
        }
        advance(
            &grid_j,
            g_j,
            scenario.source(Population::Juvenile),
            tm,
            dt,
            &j,
            &mut new_j,
            &mut flux_j,
            births / g_j.eval(tm, 0.0),
            &[],
        );
        advance(
            &grid_s,
            g_s,
            scenario.source(Population::Sale),
            tm,
            dt,
            &s,
            &mut new_s,
            &mut flux_s,
            e * outflux / g_s.eval(tm, abar),
            &scaled,
        );
        advance(
            &grid_r,
            g_r,
            scenario.source(Population::Brood),
            tm,
            dt,
            &r,
            &mut new_r,
            &mut flux_r,
            (1.0 - e) * outflux / g_r.eval(tm, abar),
            &[],
        );
        std::mem::swap(&mut j, &mut new_j);
        std::mem::swap(&mut s, &mut new_s);
        std::mem::swap(&mut r, &mut new_r);

        for (i, &k) in sell_interfaces.iter().enumerate() {
            traces[i].push(s[k - 1]);
            theta_applied[i].push(controls.theta(i)?.eval(t1));
        }
        record(
            scenario, &quad, t1, &grids, &j, &s, &r, &mut totals, &mut density, &mut min_sample,
            &mut max_abs_brood,
        )?;
        if step % snap_stride == 0 || step == nt {
            snapshots.push(Snapshot {
                time_index: step,
                t: t1,
                juvenile: j.clone(),
                sale: s.clone(),
                brood: r.clone(),
            });
        }
    }

    Ok(Trajectory {
        dt,
        steps: nt,
        horizon,
        axes: PerPopulation::new(grid_j.axis(), grid_s.axis(), grid_r.axis()),
        sell_nodes: sell_interfaces.iter().map(|k| k - 1).collect(),
        sell_ages: scenario.sell_ages().to_vec(),
        terminal: PerPopulation::new(j, s, r),
        traces,
        theta_applied,
        totals,
        cost_density: density,
        econ: scenario.econ().clone(),
        min_sample,
        max_abs_brood,
        snapshots,
    })
}
