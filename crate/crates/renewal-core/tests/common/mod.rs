//! Scenario builders shared by the integration suites: the two worked
//! examples the crate also ships as command-line presets. Each suite uses
//! its own subset.
#![allow(dead_code)]

use renewal_core::characteristics::{Fertility, RateField};
use renewal_core::functionals::{profit, Coefficient, EconomicData};
use renewal_core::solver::{
    solve, AgeProfile, ControlSchedule, GridSpec, InitialData, PiecewiseConstant, Scenario,
};
use renewal_core::{PerPopulation, Population};

/// One-generation horizon split: eta is constant on each generation and the
/// single sell age keeps its forced-zero final retention.
pub fn generational_controls(e1: f64, e2: f64) -> ControlSchedule {
    ControlSchedule::new(
        PiecewiseConstant::new(vec![0.0, 1.0, 2.0], vec![e1, e2]).unwrap(),
        vec![PiecewiseConstant::constant(0.0).unwrap()],
    )
    .unwrap()
}

/// Two-generation example: juveniles mature at age one, sell age one and a
/// half, unit growth, constant mortalities, indicator fertility, terminal
/// price zero, sale price 8, juvenile running cost one quarter.
pub fn two_generation_scenario() -> Scenario {
    let econ = EconomicData::linear(
        Coefficient::Constant(0.0),
        vec![Coefficient::Constant(8.0)],
        PerPopulation::new(
            Coefficient::Constant(0.25),
            Coefficient::Constant(0.0),
            Coefficient::Constant(0.0),
        ),
    )
    .unwrap();
    Scenario::builder(1.0, 2.0)
        .sell_age(1.5)
        .fertility(Fertility::indicator(120.0, 1.0, 4.0).unwrap())
        .mortality(Population::Juvenile, RateField::constant(1.5))
        .mortality(Population::Sale, RateField::constant(0.5))
        .mortality(Population::Brood, RateField::constant(0.75))
        .initial(InitialData::juvenile_only(AgeProfile::Constant(1.0)))
        .econ(econ)
        .build()
        .unwrap()
}

/// Half-period alternation of the same two eta values over two generations.
pub fn periodic_controls(e1: f64, e2: f64) -> ControlSchedule {
    ControlSchedule::new(
        PiecewiseConstant::new(vec![0.0, 0.5, 1.0, 1.5, 2.0], vec![e1, e2, e1, e2]).unwrap(),
        vec![PiecewiseConstant::constant(0.0).unwrap()],
    )
    .unwrap()
}

/// Periodic example: same ages and growth as the two-generation example but
/// lighter fertility, rising mortalities, terminal price one, sale price 8.2,
/// and a running cost of one quarter on every population.
pub fn periodic_scenario() -> Scenario {
    let econ = EconomicData::linear(
        Coefficient::Constant(1.0),
        vec![Coefficient::Constant(8.2)],
        PerPopulation::uniform(Coefficient::Constant(0.25)),
    )
    .unwrap();
    Scenario::builder(1.0, 2.0)
        .sell_age(1.5)
        .fertility(Fertility::indicator(10.0, 1.0, 4.0).unwrap())
        .mortality(Population::Juvenile, RateField::constant(0.5))
        .mortality(Population::Sale, RateField::constant(1.0))
        .mortality(Population::Brood, RateField::constant(1.5))
        .initial(InitialData::juvenile_only(AgeProfile::Constant(1.0)))
        .econ(econ)
        .build()
        .unwrap()
}

/// Profit of one solve at `steps` uniform time steps.
pub fn profit_at(scenario: &Scenario, controls: &ControlSchedule, steps: usize) -> f64 {
    let spec = GridSpec::with_dt(scenario.horizon() / steps as f64);
    let traj = solve(scenario, controls, &spec).unwrap();
    profit(&traj, scenario.econ()).unwrap()
}
