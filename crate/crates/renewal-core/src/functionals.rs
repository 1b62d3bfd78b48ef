//! Income, cost, and profit functionals evaluated on a solved trajectory.
//!
//! Income is recomputed from the stored terminal slice and sell-age traces,
//! so it accepts any economic data. Running costs are accumulated during the
//! solve (storing full space-time fields would dwarf everything else), which
//! ties [`cost`] to the economic data the trajectory was solved with; passing
//! anything else is an error rather than a silently wrong number.

use crate::error::{Error, Result};
use crate::population::{PerPopulation, Population};
use crate::solver::Trajectory;

/// A scalar coefficient function of time and age: constant, or sampled on one
/// axis with linear interpolation and clamping outside the sample range.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    Time { nodes: Vec<f64>, values: Vec<f64> },
    Age { nodes: Vec<f64>, values: Vec<f64> },
}

impl Coefficient {
    pub fn validate(&self) -> Result<()> {
        match self {
            Coefficient::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::InvalidScenario(format!("coefficient {v} is not finite")));
                }
            }
            Coefficient::Time { nodes, values } | Coefficient::Age { nodes, values } => {
                if nodes.len() != values.len() || nodes.is_empty() {
                    return Err(Error::InvalidScenario(
                        "sampled coefficient needs matching, nonempty node and value lists".into(),
                    ));
                }
                for pair in nodes.windows(2) {
                    if !(pair[1] > pair[0]) {
                        return Err(Error::InvalidScenario(format!(
                            "coefficient nodes not strictly increasing at {} -> {}",
                            pair[0], pair[1]
                        )));
                    }
                }
                if nodes.iter().chain(values.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidScenario("coefficient samples must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, a: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Time { nodes, values } => interp_clamped(nodes, values, t),
            Coefficient::Age { nodes, values } => interp_clamped(nodes, values, a),
        }
    }
}

fn interp_clamped(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= nodes[0] {
        return values[0];
    }
    if x >= *nodes.last().unwrap() {
        return *values.last().unwrap();
    }
    let hi = nodes.partition_point(|n| *n <= x);
    let lo = hi - 1;
    let w = (x - nodes[lo]) / (nodes[hi] - nodes[lo]);
    values[lo] + w * (values[hi] - values[lo])
}

/// Polynomial in a population value `v` with coefficient functions of `(t, a)`:
/// `Q(t, a, v) = sum_q coeff[q](t, a) * v^q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValuePolynomial {
    coefficients: Vec<Coefficient>,
}

impl ValuePolynomial {
    pub fn new(coefficients: Vec<Coefficient>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidScenario("polynomial needs at least one coefficient".into()));
        }
        for c in &coefficients {
            c.validate()?;
        }
        Ok(Self { coefficients })
    }

    pub fn zero() -> Self {
        Self { coefficients: vec![Coefficient::Constant(0.0)] }
    }

    /// The linear case `price * v` with zero constant term.
    pub fn linear(price: Coefficient) -> Result<Self> {
        Self::new(vec![Coefficient::Constant(0.0), price])
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[Coefficient] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| matches!(c, Coefficient::Constant(0.0)))
    }

    pub fn eval(&self, t: f64, a: f64, v: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coefficients.iter().rev() {
            acc = acc * v + c.eval(t, a);
        }
        acc
    }
}

/// Sign convention for the quadratic juvenile cost.
///
/// `AsPrinted` keeps the leading minus of the source formula, making the
/// deviation term a negative cost (profit rewards deviation from the target).
/// `Stabilizing` flips it so deviation is penalized. Default is `AsPrinted`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadraticSign {
    AsPrinted,
    Stabilizing,
}

/// Replaces the linear juvenile running cost with
/// `sign * integral of (J - target)^2` over time and juvenile ages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticJuvenileCost {
    pub target: f64,
    pub sign: QuadraticSign,
}

impl QuadraticJuvenileCost {
    /// Signed contribution of one squared deviation integral to the cost.
    pub fn apply_sign(&self, squared_integral: f64) -> f64 {
        match self.sign {
            QuadraticSign::AsPrinted => -squared_integral,
            QuadraticSign::Stabilizing => squared_integral,
        }
    }
}

/// Prices and running costs of a run.
///
/// `terminal` values the juvenile stock left at the horizon, as a polynomial
/// in `J` with age-dependent coefficients. `sale` holds one polynomial in the
/// sold amount per sell age, with time-dependent coefficients. `running` is
/// one polynomial per population in the standing density. When
/// `quadratic_juvenile` is set it replaces the juvenile entry of `running`.
#[derive(Clone, Debug, PartialEq)]
pub struct EconomicData {
    terminal: ValuePolynomial,
    sale: Vec<ValuePolynomial>,
    running: PerPopulation<ValuePolynomial>,
    quadratic_juvenile: Option<QuadraticJuvenileCost>,
}

impl EconomicData {
    pub fn new(
        terminal: ValuePolynomial,
        sale: Vec<ValuePolynomial>,
        running: PerPopulation<ValuePolynomial>,
    ) -> Self {
        Self { terminal, sale, running, quadratic_juvenile: None }
    }

    /// Everything free: zero prices, zero costs, `n_sell` sale slots.
    pub fn zero(n_sell: usize) -> Self {
        Self::new(
            ValuePolynomial::zero(),
            vec![ValuePolynomial::zero(); n_sell],
            PerPopulation::uniform(ValuePolynomial::zero()),
        )
    }

    /// The linear special case: terminal price `p(a)`, sale prices `p_i(t)`,
    /// unit running costs `c_u(t, a)`.
    pub fn linear(
        terminal_price: Coefficient,
        sale_prices: Vec<Coefficient>,
        unit_costs: PerPopulation<Coefficient>,
    ) -> Result<Self> {
        let sale = sale_prices.into_iter().map(ValuePolynomial::linear).collect::<Result<_>>()?;
        let mut running = PerPopulation::uniform(ValuePolynomial::zero());
        for pop in Population::ALL {
            *running.get_mut(pop) = ValuePolynomial::linear(unit_costs.get(pop).clone())?;
        }
        Ok(Self::new(ValuePolynomial::linear(terminal_price)?, sale, running))
    }

    pub fn with_quadratic_juvenile(mut self, target: f64, sign: QuadraticSign) -> Result<Self> {
        if !target.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "quadratic cost target {target} is not finite"
            )));
        }
        self.quadratic_juvenile = Some(QuadraticJuvenileCost { target, sign });
        Ok(self)
    }

    pub fn terminal(&self) -> &ValuePolynomial {
        &self.terminal
    }

    pub fn sale(&self, i: usize) -> Result<&ValuePolynomial> {
        self.sale.get(i).ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "sale polynomial index {i} out of range ({} sell ages)",
                self.sale.len()
            ))
        })
    }

    pub fn sale_count(&self) -> usize {
        self.sale.len()
    }

    pub fn running(&self, pop: Population) -> &ValuePolynomial {
        self.running.get(pop)
    }

    pub fn quadratic_juvenile(&self) -> Option<&QuadraticJuvenileCost> {
        self.quadratic_juvenile.as_ref()
    }

    pub fn validate(&self, n_sell: usize) -> Result<()> {
        if self.sale.len() != n_sell {
            return Err(Error::InvalidScenario(format!(
                "{} sale polynomials for {} sell ages",
                self.sale.len(),
                n_sell
            )));
        }
        Ok(())
    }

    /// Largest polynomial degree across all value functions.
    pub fn max_degree(&self) -> usize {
        let mut d = self.terminal.degree();
        for s in &self.sale {
            d = d.max(s.degree());
        }
        for pop in Population::ALL {
            d = d.max(self.running.get(pop).degree());
        }
        if self.quadratic_juvenile.is_some() {
            d = d.max(2);
        }
        d
    }
}

/// Composite trapezoid on a uniform grid.
pub(crate) fn trapezoid(step: f64, values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        _ => {
            let inner: f64 = values[1..values.len() - 1].iter().sum();
            step * (0.5 * (values[0] + values[values.len() - 1]) + inner)
        }
    }
}

/// Terminal value of the remaining juveniles plus the accumulated revenue of
/// each sell age: the priced amount at a sell age is `(1 - theta_i(t))` times
/// the left trace there.
pub fn income(trajectory: &Trajectory, econ: &EconomicData) -> Result<f64> {
    econ.validate(trajectory.sell_age_count())?;
    let horizon = trajectory.horizon();

    let axis = trajectory.ages_juvenile();
    let terminal = trajectory.terminal(Population::Juvenile);
    let mut slice = Vec::with_capacity(terminal.len());
    for (i, j) in terminal.iter().enumerate() {
        slice.push(econ.terminal().eval(horizon, axis.age(i), *j));
    }
    let mut total = trapezoid(axis.step(), &slice);

    let dt = trajectory.dt();
    let mut integrand = Vec::with_capacity(trajectory.time_nodes());
    for i in 0..trajectory.sell_age_count() {
        let trace = trajectory.trace(i)?;
        let theta = trajectory.theta_applied(i)?;
        let price = econ.sale(i)?;
        let age = trajectory.sell_age(i)?;
        integrand.clear();
        for (j, s) in trace.iter().enumerate() {
            let sold = (1.0 - theta[j]) * s;
            integrand.push(price.eval(j as f64 * dt, age, sold));
        }
        total += trapezoid(dt, &integrand);
    }
    Ok(total)
}

/// Time integral of the per-step cost densities accumulated by the solver.
/// `econ` must be the economic data the trajectory was solved with.
pub fn cost(trajectory: &Trajectory, econ: &EconomicData) -> Result<f64> {
    if econ != trajectory.econ() {
        return Err(Error::InvalidArgument(
            "cost densities were accumulated with different economic data; \
             re-solve with the economics to evaluate"
                .into(),
        ));
    }
    let dt = trajectory.dt();
    let mut total = 0.0;
    for pop in Population::ALL {
        total += trapezoid(dt, trajectory.cost_density(pop));
    }
    Ok(total)
}

/// Income minus cost.
pub fn profit(trajectory: &Trajectory, econ: &EconomicData) -> Result<f64> {
    Ok(income(trajectory, econ)? - cost(trajectory, econ)?)
}
