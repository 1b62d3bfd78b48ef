//! Model data for one run: ages, rates, fertility, initial data, economics.

use crate::characteristics::{generation_times, Fertility, GenerationClock, RateField};
use crate::error::{Error, Result};
use crate::functionals::EconomicData;
use crate::population::{PerPopulation, Population};

/// Initial age profile of one population. Tabulated profiles are piecewise
/// linear between their nodes and identically zero outside them, so sale and
/// brood data have compact support by construction.
#[derive(Clone, Debug, PartialEq)]
pub enum AgeProfile {
    Constant(f64),
    Tabulated { ages: Vec<f64>, values: Vec<f64> },
}

impl AgeProfile {
    pub fn zero() -> Self {
        AgeProfile::Constant(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AgeProfile::Constant(v) => {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(Error::InvalidScenario(format!(
                        "initial profile value {v} must be finite and nonnegative"
                    )));
                }
            }
            AgeProfile::Tabulated { ages, values } => {
                if ages.len() != values.len() || ages.is_empty() {
                    return Err(Error::InvalidScenario(
                        "tabulated profile needs matching, nonempty age and value lists".into(),
                    ));
                }
                for pair in ages.windows(2) {
                    if !(pair[1] > pair[0]) {
                        return Err(Error::InvalidScenario(format!(
                            "profile ages not strictly increasing at {} -> {}",
                            pair[0], pair[1]
                        )));
                    }
                }
                if ages.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidScenario("profile ages must be finite".into()));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidScenario(
                        "profile values must be finite and nonnegative".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, a: f64) -> f64 {
        match self {
            AgeProfile::Constant(v) => *v,
            AgeProfile::Tabulated { ages, values } => {
                if a < ages[0] || a > *ages.last().unwrap() {
                    return 0.0;
                }
                if ages.len() == 1 {
                    return values[0];
                }
                let hi = ages.partition_point(|x| *x <= a).min(ages.len() - 1);
                let lo = hi - 1;
                let w = (a - ages[lo]) / (ages[hi] - ages[lo]);
                values[lo] + w * (values[hi] - values[lo])
            }
        }
    }

    /// True when the profile is identically zero on `[b, infinity)`. For a
    /// nonnegative piecewise-linear profile this holds exactly when the value
    /// at `b` and at every node past `b` is zero.
    pub fn vanishes_beyond(&self, b: f64) -> bool {
        match self {
            AgeProfile::Constant(v) => *v == 0.0,
            AgeProfile::Tabulated { ages, values } => {
                self.eval(b) == 0.0
                    && ages
                        .iter()
                        .zip(values.iter())
                        .all(|(a, v)| *a < b || *v == 0.0)
            }
        }
    }
}

/// Initial densities of the three populations.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub juvenile: AgeProfile,
    pub sale: AgeProfile,
    pub brood: AgeProfile,
}

impl InitialData {
    pub fn new(juvenile: AgeProfile, sale: AgeProfile, brood: AgeProfile) -> Self {
        Self { juvenile, sale, brood }
    }

    /// Juveniles only; sale and brood start empty.
    pub fn juvenile_only(juvenile: AgeProfile) -> Self {
        Self::new(juvenile, AgeProfile::zero(), AgeProfile::zero())
    }

    pub fn profile(&self, pop: Population) -> &AgeProfile {
        match pop {
            Population::Juvenile => &self.juvenile,
            Population::Sale => &self.sale,
            Population::Brood => &self.brood,
        }
    }
}

/// A fully validated model instance. Build through [`Scenario::builder`].
///
/// Rates are stored as signed source rates `r_u` (growth positive, mortality
/// negative): the transported density picks up the factor
/// `exp(integral of r_u - d(g_u)/da)` along characteristics.
#[derive(Clone, Debug)]
pub struct Scenario {
    abar: f64,
    sell_ages: Vec<f64>,
    growth: PerPopulation<RateField>,
    source: PerPopulation<RateField>,
    fertility: Fertility,
    initial: InitialData,
    horizon: f64,
    amax: f64,
    econ: EconomicData,
    clock: GenerationClock,
    characteristic_step: f64,
}

impl Scenario {
    pub fn builder(abar: f64, horizon: f64) -> ScenarioBuilder {
        ScenarioBuilder {
            abar,
            horizon,
            sell_ages: Vec::new(),
            growth: PerPopulation::uniform(RateField::constant(1.0)),
            source: PerPopulation::uniform(RateField::constant(0.0)),
            fertility: None,
            initial: None,
            amax: None,
            econ: None,
            characteristic_step: None,
        }
    }

    pub fn abar(&self) -> f64 {
        self.abar
    }

    pub fn sell_ages(&self) -> &[f64] {
        &self.sell_ages
    }

    pub fn growth(&self, pop: Population) -> &RateField {
        self.growth.get(pop)
    }

    /// Signed source rate (growth positive, mortality negative).
    pub fn source(&self, pop: Population) -> &RateField {
        self.source.get(pop)
    }

    pub fn fertility(&self) -> &Fertility {
        &self.fertility
    }

    pub fn initial(&self) -> &InitialData {
        &self.initial
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn amax(&self) -> f64 {
        self.amax
    }

    pub fn econ(&self) -> &EconomicData {
        &self.econ
    }

    /// Generation times of the juvenile edge, `T_0 = 0` included.
    pub fn clock(&self) -> &GenerationClock {
        &self.clock
    }

    pub fn characteristic_step(&self) -> f64 {
        self.characteristic_step
    }

    /// Same scenario with different initial data (re-validated).
    pub fn with_initial(&self, initial: InitialData) -> Result<Scenario> {
        let mut b = self.to_builder();
        b.initial = Some(initial);
        b.build()
    }

    /// Same scenario with different economic data (re-validated).
    pub fn with_econ(&self, econ: EconomicData) -> Result<Scenario> {
        let mut b = self.to_builder();
        b.econ = Some(econ);
        b.build()
    }

    fn to_builder(&self) -> ScenarioBuilder {
        ScenarioBuilder {
            abar: self.abar,
            horizon: self.horizon,
            sell_ages: self.sell_ages.clone(),
            growth: self.growth.clone(),
            source: self.source.clone(),
            fertility: Some(self.fertility.clone()),
            initial: Some(self.initial.clone()),
            amax: Some(self.amax),
            econ: Some(self.econ.clone()),
            characteristic_step: Some(self.characteristic_step),
        }
    }

    /// Smallest admissible age-domain truncation for the given data: nothing
    /// alive before the horizon can matter beyond it.
    fn required_amax(
        abar: f64,
        sell_ages: &[f64],
        fertility: &Fertility,
        growth: &PerPopulation<RateField>,
        horizon: f64,
    ) -> f64 {
        let (_, w_hi) = fertility.support();
        let top = sell_ages.last().copied().unwrap_or(abar).max(w_hi);
        let g_sup = growth
            .get(Population::Sale)
            .upper_bound()
            .max(growth.get(Population::Brood).upper_bound());
        top + g_sup * horizon
    }
}

pub struct ScenarioBuilder {
    abar: f64,
    horizon: f64,
    sell_ages: Vec<f64>,
    growth: PerPopulation<RateField>,
    source: PerPopulation<RateField>,
    fertility: Option<Fertility>,
    initial: Option<InitialData>,
    amax: Option<f64>,
    econ: Option<EconomicData>,
    characteristic_step: Option<f64>,
}

impl ScenarioBuilder {
    pub fn sell_age(mut self, a: f64) -> Self {
        self.sell_ages.push(a);
        self
    }

    pub fn sell_ages<I: IntoIterator<Item = f64>>(mut self, ages: I) -> Self {
        self.sell_ages.extend(ages);
        self
    }

    pub fn growth(mut self, pop: Population, g: RateField) -> Self {
        *self.growth.get_mut(pop) = g;
        self
    }

    pub fn growth_all(mut self, g: RateField) -> Self {
        self.growth = PerPopulation::uniform(g);
        self
    }

    /// Death rate `m >= 0`; stored as the signed source rate `-m`.
    pub fn mortality(mut self, pop: Population, m: RateField) -> Self {
        *self.source.get_mut(pop) = m.negated();
        self
    }

    /// Raw signed source rate (positive values grow the population).
    pub fn source(mut self, pop: Population, r: RateField) -> Self {
        *self.source.get_mut(pop) = r;
        self
    }

    pub fn fertility(mut self, w: Fertility) -> Self {
        self.fertility = Some(w);
        self
    }

    pub fn initial(mut self, initial: InitialData) -> Self {
        self.initial = Some(initial);
        self
    }

    /// Age-domain truncation override; must dominate the reachable cone.
    /// Without it the smallest admissible bound is used.
    pub fn amax(mut self, amax: f64) -> Self {
        self.amax = Some(amax);
        self
    }

    pub fn econ(mut self, econ: EconomicData) -> Self {
        self.econ = Some(econ);
        self
    }

    /// Substep for characteristic integration under tabulated rates.
    pub fn characteristic_step(mut self, step: f64) -> Self {
        self.characteristic_step = Some(step);
        self
    }

    pub fn build(self) -> Result<Scenario> {
        let ScenarioBuilder {
            abar,
            horizon,
            sell_ages,
            growth,
            source,
            fertility,
            initial,
            amax,
            econ,
            characteristic_step,
        } = self;

        if !(abar.is_finite() && abar > 0.0) {
            return Err(Error::InvalidScenario(format!("maturity age {abar} must be positive")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidScenario(format!("horizon {horizon} must be positive")));
        }
        if sell_ages.is_empty() {
            return Err(Error::InvalidScenario("at least one sell age is required".into()));
        }
        let mut prev = abar;
        for a in &sell_ages {
            if !(a.is_finite() && *a > prev) {
                return Err(Error::InvalidScenario(format!(
                    "sell ages must be finite and strictly increasing above the maturity age \
                     {abar}; offending entry {a}"
                )));
            }
            prev = *a;
        }
        for pop in Population::ALL {
            if !(growth.get(pop).lower_bound() > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "growth rate of the {} population must be strictly positive",
                    pop.label()
                )));
            }
        }
        let fertility =
            fertility.ok_or_else(|| Error::InvalidScenario("fertility is required".into()))?;
        let initial =
            initial.ok_or_else(|| Error::InvalidScenario("initial data are required".into()))?;
        for pop in Population::ALL {
            initial.profile(pop).validate()?;
        }

        let required =
            Scenario::required_amax(abar, &sell_ages, &fertility, &growth, horizon);
        let amax = amax.unwrap_or(required);
        if !(amax.is_finite() && amax >= required - 1e-9 * required.max(1.0)) {
            return Err(Error::InvalidScenario(format!(
                "amax = {amax} does not cover the reachable cone; need at least {required}"
            )));
        }

        // Sale and brood individuals older than this at t = 0 would cross
        // amax before the horizon; their running cost past amax is not
        // modeled, so such data are rejected rather than silently truncated.
        for pop in [Population::Sale, Population::Brood] {
            let band = amax - growth.get(pop).upper_bound() * horizon;
            if !initial.profile(pop).vanishes_beyond(band) {
                return Err(Error::InvalidScenario(format!(
                    "initial {} data extend beyond age {band}; individuals there would leave \
                     the truncated age domain before the horizon. Raise amax or trim the data",
                    pop.label()
                )));
            }
        }

        let econ = econ.unwrap_or_else(|| EconomicData::zero(sell_ages.len()));
        econ.validate(sell_ages.len())?;

        let characteristic_step = match characteristic_step {
            Some(s) if s.is_finite() && s > 0.0 => s,
            Some(s) => {
                return Err(Error::InvalidScenario(format!(
                    "characteristic step {s} must be positive"
                )))
            }
            None => (horizon / 4000.0).min(abar / 100.0),
        };
        let clock = generation_times(
            growth.get(Population::Juvenile),
            abar,
            horizon,
            characteristic_step,
        )?;

        Ok(Scenario {
            abar,
            sell_ages,
            growth,
            source,
            fertility,
            initial,
            horizon,
            amax,
            econ,
            clock,
            characteristic_step,
        })
    }
}
