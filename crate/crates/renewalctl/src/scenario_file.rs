//! Scenario files: a TOML document declaring the model, the economics and the
//! control layout in one place. Parsing is strict, so a misspelled key is an
//! error with a line number rather than a silently ignored setting.
//!
//! Numeric fields accept either a constant or a small inline table. Rates
//! interpolate bilinearly in time and age, value coefficients linearly along
//! one axis, initial profiles linearly in age.

use crate::fail::{io_fail, CliResult, Failure};
use renewal_core::characteristics::{Fertility, RateField};
use renewal_core::functionals::{Coefficient, EconomicData, QuadraticSign, ValuePolynomial};
use renewal_core::solver::{
    AgeProfile, ControlLayout, GridSpec, InitialData, PieceValue, PiecewiseConstant, Scenario,
};
use renewal_core::{PerPopulation, Population};
use serde::Deserialize;
use std::path::Path;

// ---------------------------------------------------------------------------
// Raw document shape. Field names here are the file format.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    model: ModelSection,
    fertility: FertilitySection,
    #[serde(default)]
    initial: InitialSection,
    economics: EconomicsSection,
    controls: ControlsSection,
    #[serde(default)]
    grid: GridSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    maturity_age: f64,
    horizon: f64,
    sell_ages: Vec<f64>,
    max_age: Option<f64>,
    characteristic_step: Option<f64>,
    growth: Option<RatesSection>,
    mortality: Option<RatesSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesSection {
    juvenile: Option<RateSpec>,
    sale: Option<RateSpec>,
    brood: Option<RateSpec>,
}

impl RatesSection {
    fn get(&self, pop: Population) -> Option<&RateSpec> {
        match pop {
            Population::Juvenile => self.juvenile.as_ref(),
            Population::Sale => self.sale.as_ref(),
            Population::Brood => self.brood.as_ref(),
        }
    }
}

/// A rate is a constant or a table over time and age; `values` holds one row
/// per time node.
#[derive(Deserialize)]
#[serde(untagged)]
enum RateSpec {
    Constant(f64),
    Table { times: Vec<f64>, ages: Vec<f64>, values: Vec<Vec<f64>> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FertilitySection {
    scale: f64,
    support: Option<[f64; 2]>,
    ages: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    juvenile: Option<ProfileSpec>,
    sale: Option<ProfileSpec>,
    brood: Option<ProfileSpec>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProfileSpec {
    Constant(f64),
    Table { ages: Vec<f64>, values: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EconomicsSection {
    terminal_price: Option<PriceSpec>,
    sale_prices: Vec<PriceSpec>,
    running_costs: Option<RunningSection>,
    quadratic_juvenile: Option<QuadSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunningSection {
    juvenile: Option<PriceSpec>,
    sale: Option<PriceSpec>,
    brood: Option<PriceSpec>,
}

impl RunningSection {
    fn get(&self, pop: Population) -> Option<&PriceSpec> {
        match pop {
            Population::Juvenile => self.juvenile.as_ref(),
            Population::Sale => self.sale.as_ref(),
            Population::Brood => self.brood.as_ref(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadSection {
    target: f64,
    sign: QuadSignName,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum QuadSignName {
    AsPrinted,
    Stabilizing,
}

/// A price or unit cost: one coefficient means the linear form (the value
/// scales the traded density), a `polynomial` list gives the coefficients of
/// successive powers of the density starting at the constant term.
#[derive(Deserialize)]
#[serde(untagged)]
enum PriceSpec {
    Single(CoefSpec),
    Polynomial { polynomial: Vec<CoefSpec> },
}

/// A scalar coefficient: constant, or sampled along one axis.
#[derive(Deserialize)]
#[serde(untagged)]
enum CoefSpec {
    Constant(f64),
    OverTime { time: Vec<f64>, values: Vec<f64> },
    OverAge { age: Vec<f64>, values: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlsSection {
    layout: LayoutName,
    eta: ValuesOrFit,
    theta: Option<ValuesOrFit>,
    period: Option<f64>,
    pieces_per_period: Option<usize>,
    breakpoints: Option<Vec<f64>>,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum LayoutName {
    Generational,
    Periodic,
    Explicit,
}

/// Either the literal string "fit" or a list of concrete values.
#[derive(Deserialize)]
#[serde(untagged)]
enum ValuesOrFit {
    Keyword(String),
    Values(Vec<f64>),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GridSection {
    steps: Option<usize>,
}

// ---------------------------------------------------------------------------
// Resolved form handed to the commands.

#[derive(Clone, Debug, PartialEq)]
pub enum LayoutKind {
    Generational,
    Periodic { period: f64, sub: usize },
    Explicit { breakpoints: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum EtaSpec {
    Fit,
    Values(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ThetaSpec {
    Fit,
    Constants(Vec<f64>),
}

#[derive(Debug)]
pub struct Loaded {
    pub scenario: Scenario,
    pub layout_kind: LayoutKind,
    pub eta: EtaSpec,
    pub theta: ThetaSpec,
    pub grid_steps: Option<usize>,
    /// Where the document came from, for report echoes.
    pub origin: String,
}

pub fn load(path: &Path) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| io_fail(path, e))?;
    parse_str(&text, &path.display().to_string())
}

pub fn parse_str(text: &str, origin: &str) -> CliResult<Loaded> {
    let doc: ScenarioDoc =
        toml::from_str(text).map_err(|e| Failure::Parse(format!("{origin}: {e}")))?;
    resolve(doc, origin).map_err(|f| match f {
        Failure::Parse(m) => Failure::Parse(format!("{origin}: {m}")),
        other => other,
    })
}

fn resolve(doc: ScenarioDoc, _origin: &str) -> CliResult<Loaded> {
    let n_sell = doc.model.sell_ages.len();
    let scenario = build_scenario(&doc)?;
    let (layout_kind, eta, theta) = resolve_controls(doc.controls, n_sell)?;
    if let Some(0) = doc.grid.steps {
        return Err(Failure::Parse("grid steps must be positive".into()));
    }
    Ok(Loaded {
        scenario,
        layout_kind,
        eta,
        theta,
        grid_steps: doc.grid.steps,
        origin: _origin.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Model assembly. Core validation runs inside the builder; everything it
// rejects surfaces as a parse failure because the file content is at fault.

fn build_scenario(doc: &ScenarioDoc) -> CliResult<Scenario> {
    let m = &doc.model;
    let mut b = Scenario::builder(m.maturity_age, m.horizon);
    b = b.sell_ages(m.sell_ages.iter().copied());
    if let Some(a) = m.max_age {
        b = b.amax(a);
    }
    if let Some(s) = m.characteristic_step {
        b = b.characteristic_step(s);
    }
    if let Some(rates) = &m.growth {
        for pop in Population::ALL {
            if let Some(spec) = rates.get(pop) {
                b = b.growth(pop, rate_field(spec)?);
            }
        }
    }
    if let Some(rates) = &m.mortality {
        for pop in Population::ALL {
            if let Some(spec) = rates.get(pop) {
                b = b.mortality(pop, rate_field(spec)?);
            }
        }
    }
    b = b.fertility(fertility(&doc.fertility)?);
    b = b.initial(InitialData::new(
        profile(doc.initial.juvenile.as_ref()),
        profile(doc.initial.sale.as_ref()),
        profile(doc.initial.brood.as_ref()),
    ));
    b = b.econ(economics(&doc.economics)?);
    Ok(b.build()?)
}

fn rate_field(spec: &RateSpec) -> CliResult<RateField> {
    match spec {
        RateSpec::Constant(v) => Ok(RateField::constant(*v)),
        RateSpec::Table { times, ages, values } => {
            if values.len() != times.len() {
                return Err(Failure::Parse(format!(
                    "rate table has {} rows for {} time nodes",
                    values.len(),
                    times.len()
                )));
            }
            let mut flat = Vec::with_capacity(times.len() * ages.len());
            for (k, row) in values.iter().enumerate() {
                if row.len() != ages.len() {
                    return Err(Failure::Parse(format!(
                        "rate table row {} has {} entries for {} age nodes",
                        k + 1,
                        row.len(),
                        ages.len()
                    )));
                }
                flat.extend_from_slice(row);
            }
            let declared = flat.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(RateField::tabulated(times.clone(), ages.clone(), flat, declared)?)
        }
    }
}

fn fertility(f: &FertilitySection) -> CliResult<Fertility> {
    match (&f.support, &f.ages, &f.values) {
        (Some([lo, hi]), None, None) => Ok(Fertility::indicator(f.scale, *lo, *hi)?),
        (None, Some(ages), Some(values)) => {
            Ok(Fertility::tabulated(f.scale, ages.clone(), values.clone())?)
        }
        _ => Err(Failure::Parse(
            "fertility needs either support = [lo, hi] or ages and values".into(),
        )),
    }
}

fn profile(spec: Option<&ProfileSpec>) -> AgeProfile {
    match spec {
        None => AgeProfile::zero(),
        Some(ProfileSpec::Constant(v)) => AgeProfile::Constant(*v),
        Some(ProfileSpec::Table { ages, values }) => {
            AgeProfile::Tabulated { ages: ages.clone(), values: values.clone() }
        }
    }
}

fn coefficient(spec: &CoefSpec) -> Coefficient {
    match spec {
        CoefSpec::Constant(v) => Coefficient::Constant(*v),
        CoefSpec::OverTime { time, values } => {
            Coefficient::Time { nodes: time.clone(), values: values.clone() }
        }
        CoefSpec::OverAge { age, values } => {
            Coefficient::Age { nodes: age.clone(), values: values.clone() }
        }
    }
}

fn value_polynomial(spec: Option<&PriceSpec>) -> CliResult<ValuePolynomial> {
    match spec {
        None => Ok(ValuePolynomial::zero()),
        Some(PriceSpec::Single(c)) => Ok(ValuePolynomial::linear(coefficient(c))?),
        Some(PriceSpec::Polynomial { polynomial }) => {
            Ok(ValuePolynomial::new(polynomial.iter().map(coefficient).collect())?)
        }
    }
}

fn economics(e: &EconomicsSection) -> CliResult<EconomicData> {
    let terminal = value_polynomial(e.terminal_price.as_ref())?;
    let sale = e
        .sale_prices
        .iter()
        .map(|p| value_polynomial(Some(p)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut running = PerPopulation::uniform(ValuePolynomial::zero());
    if let Some(rs) = &e.running_costs {
        for pop in Population::ALL {
            *running.get_mut(pop) = value_polynomial(rs.get(pop))?;
        }
    }
    let mut econ = EconomicData::new(terminal, sale, running);
    if let Some(q) = &e.quadratic_juvenile {
        let sign = match q.sign {
            QuadSignName::AsPrinted => QuadraticSign::AsPrinted,
            QuadSignName::Stabilizing => QuadraticSign::Stabilizing,
        };
        econ = econ.with_quadratic_juvenile(q.target, sign)?;
    }
    Ok(econ)
}

// ---------------------------------------------------------------------------
// Control resolution.

fn values_or_fit(v: &ValuesOrFit, what: &str) -> CliResult<Option<Vec<f64>>> {
    match v {
        ValuesOrFit::Keyword(s) if s == "fit" => Ok(None),
        ValuesOrFit::Keyword(s) => Err(Failure::Parse(format!(
            "{what} must be a value list or the string \"fit\", got {s:?}"
        ))),
        ValuesOrFit::Values(values) => Ok(Some(values.clone())),
    }
}

fn resolve_controls(
    c: ControlsSection,
    n_sell: usize,
) -> CliResult<(LayoutKind, EtaSpec, ThetaSpec)> {
    let reject = |key: &str, layouts: &str| {
        Failure::Parse(format!("controls key {key} only applies to the {layouts} layout"))
    };
    let kind = match c.layout {
        LayoutName::Generational => {
            if c.period.is_some() || c.pieces_per_period.is_some() {
                return Err(reject("period", "periodic"));
            }
            if c.breakpoints.is_some() {
                return Err(reject("breakpoints", "explicit"));
            }
            LayoutKind::Generational
        }
        LayoutName::Periodic => {
            if c.breakpoints.is_some() {
                return Err(reject("breakpoints", "explicit"));
            }
            let period = c
                .period
                .ok_or_else(|| Failure::Parse("periodic layout needs period".into()))?;
            let sub = c.pieces_per_period.ok_or_else(|| {
                Failure::Parse("periodic layout needs pieces_per_period".into())
            })?;
            LayoutKind::Periodic { period, sub }
        }
        LayoutName::Explicit => {
            if c.period.is_some() || c.pieces_per_period.is_some() {
                return Err(reject("period", "periodic"));
            }
            let breakpoints = c
                .breakpoints
                .ok_or_else(|| Failure::Parse("explicit layout needs breakpoints".into()))?;
            LayoutKind::Explicit { breakpoints }
        }
    };
    let eta = match values_or_fit(&c.eta, "eta")? {
        None => EtaSpec::Fit,
        Some(v) => EtaSpec::Values(v),
    };
    let theta = match &c.theta {
        None => ThetaSpec::Constants(vec![0.0; n_sell]),
        Some(spec) => match values_or_fit(spec, "theta")? {
            None => {
                if kind != LayoutKind::Generational {
                    return Err(Failure::Parse(
                        "theta = \"fit\" requires the generational layout".into(),
                    ));
                }
                ThetaSpec::Fit
            }
            Some(v) => {
                if v.len() != n_sell {
                    return Err(Failure::Parse(format!(
                        "theta lists {} values for {} sell ages",
                        v.len(),
                        n_sell
                    )));
                }
                ThetaSpec::Constants(v)
            }
        },
    };
    Ok((kind, eta, theta))
}

impl Loaded {
    /// Control template with the eta pieces (and, when theta is fitted, the
    /// retention pieces) left as variables. Fixed eta values substitute into
    /// the same template at solve time.
    pub fn layout(&self) -> CliResult<ControlLayout> {
        let n_sell = self.scenario.sell_ages().len();
        let theta_pcs = || -> CliResult<Vec<PiecewiseConstant>> {
            match &self.theta {
                ThetaSpec::Fit => unreachable!("fitted theta handled per layout"),
                ThetaSpec::Constants(cs) => Ok(cs
                    .iter()
                    .map(|&c| PiecewiseConstant::constant(c))
                    .collect::<renewal_core::Result<_>>()?),
            }
        };
        let layout = match (&self.layout_kind, &self.theta) {
            (LayoutKind::Generational, ThetaSpec::Fit) => {
                ControlLayout::stabilizing(self.scenario.clock(), n_sell)?
            }
            (LayoutKind::Generational, _) => {
                ControlLayout::generational(self.scenario.clock(), theta_pcs()?)?
            }
            (LayoutKind::Periodic { period, sub }, _) => {
                ControlLayout::periodic(*period, *sub, self.scenario.horizon(), theta_pcs()?)?
            }
            (LayoutKind::Explicit { breakpoints }, _) => {
                let n = breakpoints.len().saturating_sub(1);
                let pieces = (0..n).map(PieceValue::Variable).collect();
                let names = (1..=n).map(|k| format!("eta_{k}")).collect();
                let theta = theta_pcs()?
                    .into_iter()
                    .map(|pc| {
                        let fixed =
                            pc.values().iter().copied().map(PieceValue::Fixed).collect();
                        (pc.breakpoints().to_vec(), fixed)
                    })
                    .collect();
                ControlLayout::explicit(breakpoints.clone(), pieces, theta, true, names)?
            }
        };
        Ok(layout)
    }

    /// Replaces the per-sell-age retention constants; rejected when the file
    /// declares theta as fitted variables (those are set positionally).
    pub fn override_theta_constants(&mut self, values: &[f64]) -> CliResult<()> {
        let n_sell = self.scenario.sell_ages().len();
        match &self.theta {
            ThetaSpec::Fit => Err(Failure::Parse(
                "this scenario fits theta; pass --theta as the variable block after eta".into(),
            )),
            ThetaSpec::Constants(_) => {
                if values.len() != n_sell {
                    return Err(Failure::Parse(format!(
                        "--theta lists {} values for {} sell ages",
                        values.len(),
                        n_sell
                    )));
                }
                self.theta = ThetaSpec::Constants(values.to_vec());
                Ok(())
            }
        }
    }

    /// Concrete variable vector for a single solve, flags taking precedence
    /// over values recorded in the file.
    pub fn solve_point(
        &self,
        layout: &ControlLayout,
        flag_eta: Option<&[f64]>,
        flag_theta: Option<&[f64]>,
    ) -> CliResult<Vec<f64>> {
        let total = layout.variable_count();
        let (n_theta, fitted_theta) = match &self.theta {
            ThetaSpec::Fit => {
                let n_eta = self.scenario.clock().times().len() - 1;
                (total - n_eta, true)
            }
            ThetaSpec::Constants(_) => (0, false),
        };
        let n_eta = total - n_theta;
        let eta: Vec<f64> = match (flag_eta, &self.eta) {
            (Some(v), _) => v.to_vec(),
            (None, EtaSpec::Values(v)) => v.clone(),
            (None, EtaSpec::Fit) => {
                return Err(Failure::Parse(
                    "eta is declared \"fit\"; pass values with --eta".into(),
                ))
            }
        };
        if eta.len() != n_eta {
            return Err(Failure::Parse(format!(
                "eta lists {} values, the layout has {} eta pieces",
                eta.len(),
                n_eta
            )));
        }
        let mut x = eta;
        if fitted_theta {
            let theta = flag_theta.ok_or_else(|| {
                Failure::Parse("theta is declared \"fit\"; pass values with --theta".into())
            })?;
            if theta.len() != n_theta {
                return Err(Failure::Parse(format!(
                    "theta lists {} values, the layout has {} retention pieces",
                    theta.len(),
                    n_theta
                )));
            }
            x.extend_from_slice(theta);
        }
        Ok(x)
    }

    /// Time grid: an explicit step wins, then the file's step count, then the
    /// solver default.
    pub fn grid(&self, dt_flag: Option<f64>) -> CliResult<GridSpec> {
        if let Some(dt) = dt_flag {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Failure::Parse(format!("--dt {dt} must be a positive step")));
            }
            return Ok(GridSpec::with_dt(dt));
        }
        match self.grid_steps {
            Some(steps) => Ok(GridSpec::with_dt(self.scenario.horizon() / steps as f64)),
            None => Ok(GridSpec::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model]
        maturity_age = 1.0
        horizon = 2.0
        sell_ages = [1.5]

        [fertility]
        scale = 120.0
        support = [1.0, 4.0]

        [initial]
        juvenile = 1.0

        [economics]
        terminal_price = 0.0
        sale_prices = [8.0]

        [controls]
        layout = "generational"
        eta = "fit"
    "#;

    #[test]
    fn minimal_document_resolves() {
        let loaded = parse_str(MINIMAL, "inline").unwrap();
        assert_eq!(loaded.layout_kind, LayoutKind::Generational);
        assert_eq!(loaded.eta, EtaSpec::Fit);
        assert_eq!(loaded.theta, ThetaSpec::Constants(vec![0.0]));
        let layout = loaded.layout().unwrap();
        assert_eq!(layout.variable_names(), ["eta_1", "eta_2"]);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_location() {
        let text = MINIMAL.replace("terminal_price", "terminal_prise");
        let err = parse_str(&text, "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("terminal_prise"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn layout_keys_are_cross_checked() {
        let text = MINIMAL.replace("eta = \"fit\"", "eta = \"fit\"\nperiod = 1.0");
        let err = parse_str(&text, "inline").unwrap_err();
        assert!(err.to_string().contains("periodic"), "{err}");
    }

    #[test]
    fn fixed_values_and_flag_overrides_resolve() {
        let text = MINIMAL.replace("eta = \"fit\"", "eta = [0.25, 0.75]");
        let loaded = parse_str(&text, "inline").unwrap();
        let layout = loaded.layout().unwrap();
        assert_eq!(loaded.solve_point(&layout, None, None).unwrap(), vec![0.25, 0.75]);
        assert_eq!(
            loaded.solve_point(&layout, Some(&[0.0, 1.0]), None).unwrap(),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn fitted_theta_switches_to_the_stabilizing_template() {
        let text = MINIMAL.replace("eta = \"fit\"", "eta = \"fit\"\ntheta = \"fit\"");
        let loaded = parse_str(&text, "inline").unwrap();
        let layout = loaded.layout().unwrap();
        // One sell age: the forced final sale leaves no free retention piece.
        assert_eq!(layout.variable_names(), ["eta_1", "eta_2"]);
    }

    #[test]
    fn tabulated_rates_and_profiles_parse() {
        let text = MINIMAL.replace(
            "[fertility]",
            concat!(
                "[model.mortality]\n",
                "juvenile = { times = [0.0, 2.0], ages = [0.0, 1.0], ",
                "values = [[1.5, 1.5], [1.0, 1.0]] }\n\n",
                "[fertility]"
            ),
        );
        parse_str(&text, "inline").unwrap();
    }
}
