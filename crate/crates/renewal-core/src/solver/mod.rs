//! Time marching for the three-population renewal system.
//!
//! Each population advances along its characteristics. With constant growth
//! the age step equals the transport distance per time step, so advection is
//! an exact index shift and the only arithmetic is the source factor; with
//! tabulated rates a backtracked foot is interpolated linearly in age. The
//! junction, birth, and sell-age couplings are applied nodewise each step in
//! dependency order.

pub mod control;
pub mod grid;
pub mod scenario;
mod upwind;

pub use control::{ControlLayout, ControlSchedule, PieceValue, PiecewiseConstant};
pub use grid::{AgeAxis, GridSpec};
pub use scenario::{AgeProfile, InitialData, Scenario, ScenarioBuilder};
pub use upwind::solve_upwind_oracle;

use crate::characteristics::{characteristic_age, psi_factor, RateField};
use crate::error::{Error, Result};
use crate::functionals::{trapezoid, EconomicData, QuadraticJuvenileCost, ValuePolynomial};
use crate::population::{PerPopulation, Population};
use grid::SolverGrid;

/// Full age slices of all three populations at one time node.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time_index: usize,
    pub t: f64,
    pub juvenile: Vec<f64>,
    pub sale: Vec<f64>,
    pub brood: Vec<f64>,
}

impl Snapshot {
    pub fn values(&self, pop: Population) -> &[f64] {
        match pop {
            Population::Juvenile => &self.juvenile,
            Population::Sale => &self.sale,
            Population::Brood => &self.brood,
        }
    }
}

/// Output of one solve: grids, terminal slices, sell-age traces, per-step
/// totals and cost densities, and strided full snapshots. Immutable.
#[derive(Clone, Debug)]
pub struct Trajectory {
    dt: f64,
    steps: usize,
    horizon: f64,
    axes: PerPopulation<AgeAxis>,
    sell_nodes: Vec<usize>,
    sell_ages: Vec<f64>,
    terminal: PerPopulation<Vec<f64>>,
    traces: Vec<Vec<f64>>,
    theta_applied: Vec<Vec<f64>>,
    totals: PerPopulation<Vec<f64>>,
    cost_density: PerPopulation<Vec<f64>>,
    econ: EconomicData,
    min_sample: f64,
    max_abs_brood: f64,
    snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of time steps; there are `steps + 1` time nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time_nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn ages(&self, pop: Population) -> &AgeAxis {
        self.axes.get(pop)
    }

    pub fn ages_juvenile(&self) -> &AgeAxis {
        self.ages(Population::Juvenile)
    }

    /// Slice at the horizon.
    pub fn terminal(&self, pop: Population) -> &[f64] {
        self.terminal.get(pop)
    }

    pub fn sell_age_count(&self) -> usize {
        self.sell_nodes.len()
    }

    /// Sell age after snapping onto the sale age axis.
    pub fn sell_age(&self, i: usize) -> Result<f64> {
        self.sell_ages.get(i).copied().ok_or_else(|| self.sell_index_error(i))
    }

    pub fn sell_nodes(&self) -> &[usize] {
        &self.sell_nodes
    }

    /// Left trace at sell age `i` on all time nodes, before the jump.
    pub fn trace(&self, i: usize) -> Result<&[f64]> {
        self.traces.get(i).map(Vec::as_slice).ok_or_else(|| self.sell_index_error(i))
    }

    /// Retention fraction applied at each time node of sell age `i`.
    pub fn theta_applied(&self, i: usize) -> Result<&[f64]> {
        self.theta_applied.get(i).map(Vec::as_slice).ok_or_else(|| self.sell_index_error(i))
    }

    /// Age integral of the population at every time node (jump corrected at
    /// sell ages for the sale population).
    pub fn totals(&self, pop: Population) -> &[f64] {
        self.totals.get(pop)
    }

    /// Running-cost age integral at every time node, signed, evaluated with
    /// the economics the trajectory was solved with.
    pub fn cost_density(&self, pop: Population) -> &[f64] {
        self.cost_density.get(pop)
    }

    /// The economics the cost densities were accumulated with.
    pub fn econ(&self) -> &EconomicData {
        &self.econ
    }

    /// Smallest sample seen anywhere in the solve.
    pub fn min_sample(&self) -> f64 {
        self.min_sample
    }

    /// Largest absolute brood sample seen anywhere in the solve.
    pub fn max_abs_brood(&self) -> f64 {
        self.max_abs_brood
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    fn sell_index_error(&self, i: usize) -> Error {
        Error::DimensionMismatch(format!(
            "sell age index {i} out of range ({} sell ages)",
            self.sell_nodes.len()
        ))
    }
}

/// Left trace of the sale population at sell age `i` over all time nodes.
pub fn boundary_trace(trajectory: &Trajectory, i: usize) -> Result<&[f64]> {
    trajectory.trace(i)
}

/// How one population advances over one time step.
struct PopStepper<'a> {
    axis: AgeAxis,
    exact: bool,
    g: &'a RateField,
    r: &'a RateField,
    /// Source factor per step when both rates are constant.
    const_factor: Option<f64>,
    substep: f64,
}

impl<'a> PopStepper<'a> {
    fn new(scenario: &'a Scenario, pop: Population, grid: &SolverGrid) -> Self {
        let g = scenario.growth(pop);
        let r = scenario.source(pop);
        let exact = *grid.exact.get(pop);
        let const_factor = match (exact, r.constant_value()) {
            (true, Some(rv)) => Some((rv * grid.dt).exp()),
            _ => None,
        };
        PopStepper {
            axis: grid.axes.get(pop).clone(),
            exact,
            g,
            r,
            const_factor,
            substep: scenario.characteristic_step().min(grid.dt),
        }
    }

    /// Fills `new[1..]` from `old`; the boundary node stays for the caller.
    /// `left_limits` carries (node, pre-jump value at `t0`) pairs so the
    /// interpolated path never mixes values across a sell-age discontinuity.
    fn advect_interior(
        &self,
        t0: f64,
        t1: f64,
        old: &[f64],
        new: &mut [f64],
        left_limits: &[(usize, f64)],
    ) -> Result<()> {
        let n = self.axis.count();
        if self.exact {
            if let Some(phi) = self.const_factor {
                for i in 1..n {
                    new[i] = old[i - 1] * phi;
                }
            } else {
                for i in 1..n {
                    let phi = psi_factor(self.g, self.r, t0, t1, self.axis.age(i), self.substep)?;
                    new[i] = old[i - 1] * phi;
                }
            }
            return Ok(());
        }
        for i in 1..n {
            let a = self.axis.age(i);
            let foot = characteristic_age(self.g, t0, t1, a, self.substep)?.max(self.axis.start());
            let x = (foot - self.axis.start()) / self.axis.step();
            let k = (x.floor() as usize).min(n - 2);
            let w = (x - k as f64).clamp(0.0, 1.0);
            // Approaching a sell node from below must see its left limit.
            let hi = left_limits
                .iter()
                .find(|(ks, _)| *ks == k + 1)
                .map(|(_, v)| *v)
                .unwrap_or(old[k + 1]);
            let phi = psi_factor(self.g, self.r, t0, t1, a, self.substep)?;
            new[i] = (old[k] * (1.0 - w) + hi * w) * phi;
        }
        Ok(())
    }
}

/// Trapezoid integral of `C(t, a_i, v_i)` over an age axis.
fn weighted_cost(poly: &ValuePolynomial, t: f64, axis: &AgeAxis, values: &[f64]) -> f64 {
    if poly.is_zero() {
        return 0.0;
    }
    let da = axis.step();
    let last = values.len() - 1;
    let mut acc = 0.5 * (poly.eval(t, axis.age(0), values[0]) + poly.eval(t, axis.age(last), values[last]));
    for (i, v) in values.iter().enumerate().take(last).skip(1) {
        acc += poly.eval(t, axis.age(i), *v);
    }
    acc * da
}

/// Trapezoid integral of `(v - target)^2` over an age axis.
fn weighted_square(target: f64, axis: &AgeAxis, values: &[f64]) -> f64 {
    let da = axis.step();
    let last = values.len() - 1;
    let sq = |v: f64| (v - target) * (v - target);
    let mut acc = 0.5 * (sq(values[0]) + sq(values[last]));
    for v in &values[1..last] {
        acc += sq(*v);
    }
    acc * da
}

struct StepDiagnostics<'a> {
    scenario: &'a Scenario,
    quad: Option<QuadraticJuvenileCost>,
}

impl<'a> StepDiagnostics<'a> {
    /// Totals, cost densities, extrema. Jump corrections replace the stored
    /// post-jump sale value by the left limit on the upstream side of each
    /// sell node (the stored array is continuous from the right there).
    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        t: f64,
        axes: &PerPopulation<AgeAxis>,
        sell_nodes: &[usize],
        pre_jump: &[f64],
        j: &[f64],
        s: &[f64],
        r: &[f64],
        totals: &mut PerPopulation<Vec<f64>>,
        density: &mut PerPopulation<Vec<f64>>,
        min_sample: &mut f64,
        max_abs_brood: &mut f64,
    ) -> Result<()> {
        let ja = axes.get(Population::Juvenile);
        let sa = axes.get(Population::Sale);
        let ra = axes.get(Population::Brood);

        let mut total_s = trapezoid(sa.step(), s);
        for (&ks, &pre) in sell_nodes.iter().zip(pre_jump.iter()) {
            total_s += 0.5 * sa.step() * (pre - s[ks]);
        }
        let total_j = trapezoid(ja.step(), j);
        let total_r = trapezoid(ra.step(), r);

        let econ = self.scenario.econ();
        let dens_j = match &self.quad {
            Some(q) => q.apply_sign(weighted_square(q.target, ja, j)),
            None => weighted_cost(econ.running(Population::Juvenile), t, ja, j),
        };
        let cs = econ.running(Population::Sale);
        let mut dens_s = weighted_cost(cs, t, sa, s);
        if !cs.is_zero() {
            for (&ks, &pre) in sell_nodes.iter().zip(pre_jump.iter()) {
                let age = sa.age(ks);
                dens_s += 0.5 * sa.step() * (cs.eval(t, age, pre) - cs.eval(t, age, s[ks]));
            }
        }
        let dens_r = weighted_cost(econ.running(Population::Brood), t, ra, r);

        let aggregate = total_j + total_s + total_r + dens_j + dens_s + dens_r;
        if !aggregate.is_finite() {
            for (axis, arr) in [(ja, j), (sa, s), (ra, r)] {
                if let Some(i) = arr.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Numerical {
                        t,
                        age: axis.age(i),
                        message: format!("non-finite sample {}", arr[i]),
                    });
                }
            }
            return Err(Error::Numerical {
                t,
                age: f64::NAN,
                message: "non-finite cost density".into(),
            });
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
}

/// Maximum number of retained full snapshots (plus the terminal one).
const SNAPSHOT_SLOTS: usize = 32;

/// Solves the system on `[0, horizon]` and returns the trajectory.
///
/// The time step is the requested one refined for alignment; see
/// [`grid::GridSpec`]. Controls must cover the horizon and match the
/// scenario's sell ages.
pub fn solve(
    scenario: &Scenario,
    controls: &ControlSchedule,
    spec: &GridSpec,
) -> Result<Trajectory> {
    controls.validate_for(scenario.sell_ages().len(), scenario.horizon())?;
    let grid = grid::align(scenario, controls, spec)?;
    march(scenario, controls, grid)
}

fn march(scenario: &Scenario, controls: &ControlSchedule, grid: SolverGrid) -> Result<Trajectory> {
    let dt = grid.dt;
    let nt = grid.steps;
    let axes = grid.axes.clone();
    let ja = axes.get(Population::Juvenile).clone();
    let sa = axes.get(Population::Sale).clone();
    let ra = axes.get(Population::Brood).clone();

    let sample = |axis: &AgeAxis, profile: &AgeProfile| -> Vec<f64> {
        (0..axis.count()).map(|i| profile.eval(axis.age(i))).collect()
    };
    let initial = scenario.initial();
    let mut j = sample(&ja, &initial.juvenile);
    let mut s = sample(&sa, &initial.sale);
    let mut r = sample(&ra, &initial.brood);

    let n_sell = grid.sell_nodes.len();
    let mut traces: Vec<Vec<f64>> = vec![Vec::with_capacity(nt + 1); n_sell];
    let mut theta_applied: Vec<Vec<f64>> = vec![Vec::with_capacity(nt + 1); n_sell];
    let mut pre_jump = vec![0.0; n_sell];

    // The jump condition holds at every time node, including t = 0.
    for (i, &ks) in grid.sell_nodes.iter().enumerate() {
        let pre = s[ks];
        let th = controls.theta(i)?.eval(0.0);
        traces[i].push(pre);
        theta_applied[i].push(th);
        pre_jump[i] = pre;
        s[ks] = th * pre;
    }

    let diag = StepDiagnostics {
        scenario,
        quad: scenario.econ().quadratic_juvenile().copied(),
    };
    let mut totals = PerPopulation::uniform(Vec::with_capacity(nt + 1));
    let mut density = PerPopulation::uniform(Vec::with_capacity(nt + 1));
    let mut min_sample = f64::INFINITY;
    let mut max_abs_brood = 0.0;
    diag.record(
        0.0,
        &axes,
        &grid.sell_nodes,
        &pre_jump,
        &j,
        &s,
        &r,
        &mut totals,
        &mut density,
        &mut min_sample,
        &mut max_abs_brood,
    )?;

    let snap_stride = (nt / SNAPSHOT_SLOTS).max(1);
    let mut snapshots = Vec::new();
    let push_snapshot = |idx: usize, j: &[f64], s: &[f64], r: &[f64], snaps: &mut Vec<Snapshot>| {
        snaps.push(Snapshot {
            time_index: idx,
            t: idx as f64 * dt,
            juvenile: j.to_vec(),
            sale: s.to_vec(),
            brood: r.to_vec(),
        });
    };
    push_snapshot(0, &j, &s, &r, &mut snapshots);

    let stepper_j = PopStepper::new(scenario, Population::Juvenile, &grid);
    let stepper_s = PopStepper::new(scenario, Population::Sale, &grid);
    let stepper_r = PopStepper::new(scenario, Population::Brood, &grid);
    let g_j = scenario.growth(Population::Juvenile);
    let g_s = scenario.growth(Population::Sale);
    let g_r = scenario.growth(Population::Brood);
    let abar = scenario.abar();
    let nj_top = ja.count() - 1;

    // Fertility-weighted trapezoid coefficients on the brood axis.
    let birth_w: Vec<f64> = (0..ra.count())
        .map(|i| {
            let end = i == 0 || i + 1 == ra.count();
            ra.step() * if end { 0.5 } else { 1.0 } * scenario.fertility().eval(ra.age(i))
        })
        .collect();

    let mut new_j = vec![0.0; ja.count()];
    let mut new_s = vec![0.0; sa.count()];
    let mut new_r = vec![0.0; ra.count()];
    let mut left_limits: Vec<(usize, f64)> = vec![(0, 0.0); n_sell];

    for step in 1..=nt {
        let t0 = (step - 1) as f64 * dt;
        let t1 = step as f64 * dt;
        let e = controls.eta().eval(t1);

        stepper_j.advect_interior(t0, t1, &j, &mut new_j, &[])?;
        stepper_r.advect_interior(t0, t1, &r, &mut new_r, &[])?;

        let flux = g_j.eval(t1, abar) * new_j[nj_top];
        new_r[0] = (1.0 - e) * flux / g_r.eval(t1, abar);

        let births: f64 = birth_w.iter().zip(new_r.iter()).map(|(w, v)| w * v).sum();
        new_j[0] = births / g_j.eval(t1, 0.0);

        for (slot, (i, &ks)) in left_limits.iter_mut().zip(grid.sell_nodes.iter().enumerate()) {
            *slot = (ks, traces[i][step - 1]);
        }
        stepper_s.advect_interior(t0, t1, &s, &mut new_s, &left_limits)?;
        new_s[0] = e * flux / g_s.eval(t1, abar);

        for (i, &ks) in grid.sell_nodes.iter().enumerate() {
            let pre = new_s[ks];
            let th = controls.theta(i)?.eval(t1);
            traces[i].push(pre);
            theta_applied[i].push(th);
            pre_jump[i] = pre;
            new_s[ks] = th * pre;
        }

        diag.record(
            t1,
            &axes,
            &grid.sell_nodes,
            &pre_jump,
            &new_j,
            &new_s,
            &new_r,
            &mut totals,
            &mut density,
            &mut min_sample,
            &mut max_abs_brood,
        )?;

        std::mem::swap(&mut j, &mut new_j);
        std::mem::swap(&mut s, &mut new_s);
        std::mem::swap(&mut r, &mut new_r);

        if step % snap_stride == 0 || step == nt {
            push_snapshot(step, &j, &s, &r, &mut snapshots);
        }
    }

    Ok(Trajectory {
        dt,
        steps: nt,
        horizon: scenario.horizon(),
        axes,
        sell_nodes: grid.sell_nodes,
        sell_ages: grid.sell_ages,
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::Fertility;
    use crate::functionals::{cost, income, profit};

    fn unit_growth_scenario(horizon: f64) -> ScenarioBuilder {
        Scenario::builder(1.0, horizon)
            .sell_age(1.5)
            .fertility(Fertility::indicator(120.0, 1.0, 4.0).unwrap())
    }

    fn eta_constant(v: f64) -> ControlSchedule {
        ControlSchedule::new(
            PiecewiseConstant::constant(v).unwrap(),
            vec![PiecewiseConstant::constant(0.0).unwrap()],
        )
        .unwrap()
    }

    fn coarse() -> GridSpec {
        GridSpec::with_dt(2.0 / 200.0)
    }

    #[test]
    fn zero_initial_data_stay_zero() {
        let sc = unit_growth_scenario(2.0)
            .initial(InitialData::juvenile_only(AgeProfile::zero()))
            .build()
            .unwrap();
        let traj = solve(&sc, &eta_constant(0.5), &coarse()).unwrap();
        assert_eq!(traj.min_sample(), 0.0);
        assert!(traj.totals(Population::Juvenile).iter().all(|v| *v == 0.0));
        assert!(traj.totals(Population::Sale).iter().all(|v| *v == 0.0));
        assert!(traj.terminal(Population::Brood).iter().all(|v| *v == 0.0));
        assert_eq!(profit(&traj, sc.econ()).unwrap(), 0.0);
    }

    #[test]
    fn tent_profile_mass_is_conserved_without_sinks() {
        // Piecewise-linear data with node-aligned kinks transport exactly and
        // integrate exactly, so the three totals must sum to the initial mass
        // while nothing is sold and nothing dies.
        let tent = AgeProfile::Tabulated {
            ages: vec![0.0, 0.5, 1.0],
            values: vec![0.0, 1.0, 0.0],
        };
        let sc = Scenario::builder(1.0, 2.0)
            .sell_age(1.5)
            .fertility(Fertility::indicator(0.0, 1.0, 4.0).unwrap())
            .initial(InitialData::juvenile_only(tent))
            .build()
            .unwrap();
        let controls = ControlSchedule::with_free_final_theta(
            PiecewiseConstant::constant(0.6).unwrap(),
            vec![PiecewiseConstant::constant(1.0).unwrap()],
        )
        .unwrap();
        let traj = solve(&sc, &controls, &coarse()).unwrap();
        for idx in 0..traj.time_nodes() {
            let total = traj.totals(Population::Juvenile)[idx]
                + traj.totals(Population::Sale)[idx]
                + traj.totals(Population::Brood)[idx];
            assert!((total - 0.5).abs() < 1e-12, "mass {total} at node {idx}");
        }
        // Junction split: the sale boundary node carries eta times the flux.
        for snap in traj.snapshots() {
            let j_top = snap.juvenile[traj.ages(Population::Juvenile).count() - 1];
            assert!((snap.sale[0] - 0.6 * j_top).abs() < 1e-14);
            assert!((snap.brood[0] - 0.4 * j_top).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_mortality_matches_the_closed_form_on_nodes() {
        let tent = AgeProfile::Tabulated {
            ages: vec![0.0, 0.5, 1.0],
            values: vec![0.0, 1.0, 0.0],
        };
        let sc = Scenario::builder(1.0, 2.0)
            .sell_age(1.5)
            .fertility(Fertility::indicator(0.0, 1.0, 4.0).unwrap())
            .mortality(Population::Juvenile, RateField::constant(1.5))
            .initial(InitialData::juvenile_only(tent.clone()))
            .build()
            .unwrap();
        let traj = solve(&sc, &eta_constant(1.0), &coarse()).unwrap();
        let axis = traj.ages(Population::Juvenile).clone();
        for snap in traj.snapshots() {
            let decay = (-1.5 * snap.t).exp();
            for i in 0..axis.count() {
                let a = axis.age(i);
                if a >= snap.t {
                    let expected = tent.eval(a - snap.t) * decay;
                    assert!(
                        (snap.juvenile[i] - expected).abs() <= 1e-12 * expected.max(1.0),
                        "node {i} at t = {}",
                        snap.t
                    );
                }
            }
        }
    }

    #[test]
    fn birth_law_holds_on_every_snapshot() {
        let sc = unit_growth_scenario(2.0)
            .initial(InitialData::juvenile_only(AgeProfile::Constant(1.0)))
            .build()
            .unwrap();
        let traj = solve(&sc, &eta_constant(0.0), &coarse()).unwrap();
        let ra = traj.ages(Population::Brood).clone();
        for snap in traj.snapshots().iter().skip(1) {
            let mut births = 0.0;
            for i in 0..ra.count() {
                let end = i == 0 || i + 1 == ra.count();
                births += ra.step()
                    * if end { 0.5 } else { 1.0 }
                    * sc.fertility().eval(ra.age(i))
                    * snap.brood[i];
            }
            let lhs = snap.juvenile[0];
            assert!(
                (lhs - births).abs() <= 1e-12 * births.abs().max(1.0),
                "birth law off at t = {}: {lhs} vs {births}",
                snap.t
            );
        }
    }

    #[test]
    fn retention_one_removes_the_jump_and_zero_empties_downstream() {
        let sc = unit_growth_scenario(2.0)
            .initial(InitialData::juvenile_only(AgeProfile::Constant(1.0)))
            .build()
            .unwrap();

        let keep = ControlSchedule::with_free_final_theta(
            PiecewiseConstant::constant(1.0).unwrap(),
            vec![PiecewiseConstant::constant(1.0).unwrap()],
        )
        .unwrap();
        let traj = solve(&sc, &keep, &coarse()).unwrap();
        let ks = traj.sell_nodes()[0];
        let trace = traj.trace(0).unwrap();
        assert_eq!(trace[traj.steps()], traj.terminal(Population::Sale)[ks]);

        let sell = eta_constant(1.0);
        let traj = solve(&sc, &sell, &coarse()).unwrap();
        let ks = traj.sell_nodes()[0];
        assert!(traj.terminal(Population::Sale)[ks..].iter().all(|v| *v == 0.0));
        // Mid horizon the initial cohort is crossing the sell age.
        assert!(traj.trace(0).unwrap()[traj.steps() / 2] > 0.0);
    }

    #[test]
    fn positivity_and_default_alignment() {
        let sc = unit_growth_scenario(2.0)
            .mortality(Population::Juvenile, RateField::constant(1.5))
            .mortality(Population::Sale, RateField::constant(0.5))
            .mortality(Population::Brood, RateField::constant(0.75))
            .initial(InitialData::juvenile_only(AgeProfile::Constant(1.0)))
            .build()
            .unwrap();
        let traj = solve(&sc, &eta_constant(0.3), &GridSpec::default()).unwrap();
        assert_eq!(traj.steps(), 2000);
        assert!(traj.min_sample() >= -1e-10);
        assert!(traj.totals(Population::Juvenile).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn no_fertility_and_full_routing_keep_the_brood_empty() {
        let sc = Scenario::builder(1.0, 2.0)
            .sell_age(1.5)
            .fertility(Fertility::indicator(0.0, 1.0, 4.0).unwrap())
            .initial(InitialData::juvenile_only(AgeProfile::Constant(1.0)))
            .build()
            .unwrap();
        let traj = solve(&sc, &eta_constant(1.0), &coarse()).unwrap();
        assert_eq!(traj.max_abs_brood(), 0.0);
        // Past one generation the purely birth-fed region is exactly empty.
        let t1 = sc.clock().times()[1];
        let axis = traj.ages(Population::Juvenile).clone();
        let mut checked = 0;
        for snap in traj.snapshots() {
            if snap.t <= t1 {
                continue;
            }
            for i in 0..axis.count() {
                if axis.age(i) < snap.t - t1 {
                    assert_eq!(snap.juvenile[i], 0.0, "age {} at t = {}", axis.age(i), snap.t);
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn linearity_in_initial_data_is_exact() {
        let build = |scale: f64| {
            unit_growth_scenario(2.0)
                .mortality(Population::Juvenile, RateField::constant(1.5))
                .initial(InitialData::juvenile_only(AgeProfile::Constant(scale)))
                .build()
                .unwrap()
        };
        let controls = eta_constant(0.4);
        let one = solve(&build(1.0), &controls, &coarse()).unwrap();
        let three = solve(&build(3.0), &controls, &coarse()).unwrap();
        for idx in 0..one.time_nodes() {
            for pop in Population::ALL {
                let a = one.totals(pop)[idx];
                let b = three.totals(pop)[idx];
                assert!((b - 3.0 * a).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
        for (a, b) in one.trace(0).unwrap().iter().zip(three.trace(0).unwrap()) {
            assert!((b - 3.0 * a).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn income_sees_theta_through_the_stored_series() {
        use crate::functionals::{Coefficient, EconomicData};
        let econ = EconomicData::linear(
            Coefficient::Constant(0.0),
            vec![Coefficient::Constant(8.0)],
            PerPopulation::uniform(Coefficient::Constant(0.0)),
        )
        .unwrap();
        let sc = unit_growth_scenario(2.0)
            .initial(InitialData::juvenile_only(AgeProfile::Constant(1.0)))
            .econ(econ.clone())
            .build()
            .unwrap();
        let traj = solve(&sc, &eta_constant(1.0), &coarse()).unwrap();
        let inc = income(&traj, &econ).unwrap();
        // Everything at the sell age is sold; the income is 8 times the trace
        // integral over time.
        let trace_int = trapezoid(traj.dt(), traj.trace(0).unwrap());
        assert!((inc - 8.0 * trace_int).abs() < 1e-12 * inc.abs().max(1.0));
        assert_eq!(cost(&traj, &econ).unwrap(), 0.0);
        let mismatched = EconomicData::zero(1);
        assert!(cost(&traj, &mismatched).is_err());
        assert!(income(&traj, &mismatched).is_ok());
    }
}
