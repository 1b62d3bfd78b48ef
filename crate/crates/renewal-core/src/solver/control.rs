//! Piecewise-constant harvesting controls and the layouts that bind control
//! pieces to fit variables.

use crate::characteristics::GenerationClock;
use crate::error::{Error, Result};

/// Right-continuous step function: value `k` on `[b_{k-1}, b_k)`, the final
/// value extending past the last breakpoint. All values lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstant {
    /// `breakpoints` must start at 0, be strictly increasing, and contain one
    /// more entry than `values`; only the final breakpoint may be infinite.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidControls(format!(
                "{} breakpoints do not delimit {} pieces",
                breakpoints.len(),
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidControls("control has no pieces".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidControls(format!(
                "first breakpoint is {}, expected 0",
                breakpoints[0]
            )));
        }
        for pair in breakpoints.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidControls(format!(
                    "breakpoints not strictly increasing at {} -> {}",
                    pair[0], pair[1]
                )));
            }
        }
        for (k, b) in breakpoints.iter().enumerate() {
            if b.is_nan() || (!b.is_finite() && k + 1 < breakpoints.len()) {
                return Err(Error::InvalidControls(format!("breakpoint {b} is not finite")));
            }
        }
        for v in &values {
            if !(*v >= 0.0 && *v <= 1.0) {
                return Err(Error::InvalidControls(format!("control value {v} outside [0, 1]")));
            }
        }
        Ok(Self { breakpoints, values })
    }

    /// Single piece covering all of `[0, ∞)`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0, f64::INFINITY], vec![value])
    }

    /// Value at time `t >= 0`; right-continuous at interior breakpoints, the
    /// last piece value for `t` at or past the final breakpoint.
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.breakpoints[1..].partition_point(|b| *b <= t);
        self.values[idx.min(self.values.len() - 1)]
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when the step function is defined up to `horizon`.
    pub fn covers(&self, horizon: f64) -> bool {
        *self.breakpoints.last().unwrap() >= horizon
    }

    /// True when every piece takes the same value `v`.
    pub fn is_identically(&self, v: f64) -> bool {
        self.values.iter().all(|x| *x == v)
    }
}

/// The full control set of a run: the routing fraction `eta` at the maturity
/// age and one retention fraction `theta_i` per sell age. By the usual
/// convention the final sell age retains nothing; the flag records whether
/// that convention is in force (it is validated, not silently imposed).
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSchedule {
    eta: PiecewiseConstant,
    theta: Vec<PiecewiseConstant>,
    theta_last_zero: bool,
}

impl ControlSchedule {
    /// Standard convention: the last `theta` must be identically zero.
    pub fn new(eta: PiecewiseConstant, theta: Vec<PiecewiseConstant>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidControls("at least one sell-age control required".into()));
        }
        if !theta.last().unwrap().is_identically(0.0) {
            return Err(Error::InvalidControls(
                "final sell-age control must be identically 0 (or build with free_final_theta)"
                    .into(),
            ));
        }
        Ok(Self { eta, theta, theta_last_zero: true })
    }

    /// Opt out of the forced sale at the last sell age.
    pub fn with_free_final_theta(eta: PiecewiseConstant, theta: Vec<PiecewiseConstant>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidControls("at least one sell-age control required".into()));
        }
        Ok(Self { eta, theta, theta_last_zero: false })
    }

    pub fn eta(&self) -> &PiecewiseConstant {
        &self.eta
    }

    pub fn theta(&self, i: usize) -> Result<&PiecewiseConstant> {
        self.theta.get(i).ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "sell-age control index {i} out of range ({} controls)",
                self.theta.len()
            ))
        })
    }

    pub fn theta_count(&self) -> usize {
        self.theta.len()
    }

    pub fn final_theta_forced_zero(&self) -> bool {
        self.theta_last_zero
    }

    /// Checks compatibility with a scenario: one theta per sell age and every
    /// step function defined up to the horizon.
    pub fn validate_for(&self, sell_age_count: usize, horizon: f64) -> Result<()> {
        if self.theta.len() != sell_age_count {
            return Err(Error::InvalidControls(format!(
                "{} sell-age controls for {} sell ages",
                self.theta.len(),
                sell_age_count
            )));
        }
        if !self.eta.covers(horizon) {
            return Err(Error::InvalidControls(format!(
                "eta control ends before the horizon {horizon}"
            )));
        }
        for (i, th) in self.theta.iter().enumerate() {
            if !th.covers(horizon) {
                return Err(Error::InvalidControls(format!(
                    "theta control {} ends before the horizon {horizon}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// All breakpoints that fall inside `(0, horizon)`, for grid alignment.
    pub fn interior_breakpoints(&self, horizon: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut push = |pc: &PiecewiseConstant| {
            for b in pc.breakpoints() {
                if *b > 0.0 && *b < horizon && b.is_finite() {
                    out.push(*b);
                }
            }
        };
        push(&self.eta);
        for th in &self.theta {
            push(th);
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }
}

/// One piece of a layout: either a number fixed up front or a reference to a
/// fit variable by index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PieceValue {
    Fixed(f64),
    Variable(usize),
}

/// A control template with some pieces left as free variables. Substituting a
/// point of `[0, 1]^k` yields a concrete [`ControlSchedule`]; the polynomial
/// fitting pipelines sample exactly these substitutions.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlLayout {
    eta_breakpoints: Vec<f64>,
    eta_pieces: Vec<PieceValue>,
    theta: Vec<(Vec<f64>, Vec<PieceValue>)>,
    theta_last_zero: bool,
    var_names: Vec<String>,
}

impl ControlLayout {
    /// General constructor. Variable indices must use `0..k` without gaps;
    /// `names` labels them in order.
    pub fn explicit(
        eta_breakpoints: Vec<f64>,
        eta_pieces: Vec<PieceValue>,
        theta: Vec<(Vec<f64>, Vec<PieceValue>)>,
        theta_last_zero: bool,
        names: Vec<String>,
    ) -> Result<Self> {
        let mut used = vec![false; names.len()];
        let mut mark = |pv: &PieceValue| -> Result<()> {
            if let PieceValue::Variable(i) = pv {
                match used.get_mut(*i) {
                    Some(slot) => *slot = true,
                    None => {
                        return Err(Error::InvalidControls(format!(
                            "layout references variable {} but only {} names given",
                            i,
                            names.len()
                        )))
                    }
                }
            }
            Ok(())
        };
        for pv in &eta_pieces {
            mark(pv)?;
        }
        for (_, pieces) in &theta {
            for pv in pieces {
                mark(pv)?;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidControls(format!(
                "layout variable {} ({}) is never referenced",
                i, names[i]
            )));
        }
        let layout = Self { eta_breakpoints, eta_pieces, theta, theta_last_zero, var_names: names };
        // Substitution at the origin exercises every structural check once.
        layout.schedule(&vec![0.0; layout.variable_count()])?;
        Ok(layout)
    }

    /// One eta variable per generation interval; retention fractions fixed.
    pub fn generational(clock: &GenerationClock, theta: Vec<PiecewiseConstant>) -> Result<Self> {
        let breakpoints = clock.times().to_vec();
        if breakpoints.len() < 2 {
            return Err(Error::InvalidControls("generation clock has no intervals".into()));
        }
        let n = breakpoints.len() - 1;
        let pieces = (0..n).map(PieceValue::Variable).collect();
        let names = (1..=n).map(|k| format!("eta_{k}")).collect();
        let theta_specs = theta
            .into_iter()
            .map(|pc| {
                let fixed = pc.values().iter().copied().map(PieceValue::Fixed).collect();
                (pc.breakpoints().to_vec(), fixed)
            })
            .collect();
        Self::explicit(breakpoints, pieces, theta_specs, true, names)
    }

    /// Eta repeats `sub` variables over every period; retention fixed. The
    /// horizon must be a whole number of periods.
    pub fn periodic(
        period: f64,
        sub: usize,
        horizon: f64,
        theta: Vec<PiecewiseConstant>,
    ) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidControls(format!("period {period} must be positive")));
        }
        if sub == 0 {
            return Err(Error::InvalidControls("at least one piece per period required".into()));
        }
        let ratio = horizon / period;
        let periods = ratio.round();
        if periods < 1.0 || (ratio - periods).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidControls(format!(
                "horizon {horizon} is not a whole number of periods of {period}"
            )));
        }
        let periods = periods as usize;
        let total = periods * sub;
        let mut breakpoints = Vec::with_capacity(total + 1);
        for j in 0..=total {
            breakpoints.push(period * j as f64 / sub as f64);
        }
        let pieces = (0..total).map(|j| PieceValue::Variable(j % sub)).collect();
        let names = (1..=sub).map(|k| format!("eta_{k}")).collect();
        let theta_specs = theta
            .into_iter()
            .map(|pc| {
                let fixed = pc.values().iter().copied().map(PieceValue::Fixed).collect();
                (pc.breakpoints().to_vec(), fixed)
            })
            .collect();
        Self::explicit(breakpoints, pieces, theta_specs, true, names)
    }

    /// Free eta and free retention fractions, all on generation intervals;
    /// the final retention stays fixed at zero. Variables are ordered eta
    /// first, then each sell age's pieces: with `n` generations and `n_sell`
    /// sell ages this yields `n * n_sell` variables.
    pub fn stabilizing(clock: &GenerationClock, n_sell: usize) -> Result<Self> {
        if n_sell == 0 {
            return Err(Error::InvalidControls("at least one sell age required".into()));
        }
        let breakpoints = clock.times().to_vec();
        if breakpoints.len() < 2 {
            return Err(Error::InvalidControls("generation clock has no intervals".into()));
        }
        let n = breakpoints.len() - 1;
        let eta_pieces: Vec<PieceValue> = (0..n).map(PieceValue::Variable).collect();
        let mut names: Vec<String> = (1..=n).map(|k| format!("eta_{k}")).collect();
        let mut theta_specs = Vec::with_capacity(n_sell);
        for i in 0..n_sell.saturating_sub(1) {
            let base = n + i * n;
            let pieces = (0..n).map(|k| PieceValue::Variable(base + k)).collect();
            for k in 1..=n {
                names.push(format!("theta_{}_{}", i + 1, k));
            }
            theta_specs.push((breakpoints.clone(), pieces));
        }
        theta_specs.push((vec![0.0, f64::INFINITY], vec![PieceValue::Fixed(0.0)]));
        Self::explicit(breakpoints, eta_pieces, theta_specs, true, names)
    }

    pub fn variable_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.var_names
    }

    /// Substitutes a point of the control box for the variables.
    pub fn schedule(&self, x: &[f64]) -> Result<ControlSchedule> {
        if x.len() != self.var_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values supplied for {} layout variables",
                x.len(),
                self.var_names.len()
            )));
        }
        let substitute = |pv: &PieceValue| match pv {
            PieceValue::Fixed(v) => *v,
            PieceValue::Variable(i) => x[*i],
        };
        let eta = PiecewiseConstant::new(
            self.eta_breakpoints.clone(),
            self.eta_pieces.iter().map(substitute).collect(),
        )?;
        let mut theta = Vec::with_capacity(self.theta.len());
        for (bp, pieces) in &self.theta {
            theta.push(PiecewiseConstant::new(bp.clone(), pieces.iter().map(substitute).collect())?);
        }
        if self.theta_last_zero {
            ControlSchedule::new(eta, theta)
        } else {
            ControlSchedule::with_free_final_theta(eta, theta)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{generation_times, RateField};

    fn unit_clock(horizon: f64) -> GenerationClock {
        generation_times(&RateField::constant(1.0), 1.0, horizon, 1e-3).unwrap()
    }

    #[test]
    fn eval_is_right_continuous() {
        let pc = PiecewiseConstant::new(vec![0.0, 1.0, 2.0], vec![0.25, 0.75]).unwrap();
        assert_eq!(pc.eval(0.0), 0.25);
        assert_eq!(pc.eval(0.999), 0.25);
        assert_eq!(pc.eval(1.0), 0.75);
        assert_eq!(pc.eval(2.0), 0.75);
        assert_eq!(pc.eval(5.0), 0.75);
    }

    #[test]
    fn constant_covers_everything() {
        let pc = PiecewiseConstant::constant(0.5).unwrap();
        assert!(pc.covers(1e12));
        assert_eq!(pc.eval(3.0), 0.5);
        assert!(pc.is_identically(0.5));
    }

    #[test]
    fn rejects_bad_pieces() {
        assert!(PiecewiseConstant::new(vec![0.0, 1.0], vec![1.5]).is_err());
        assert!(PiecewiseConstant::new(vec![0.5, 1.0], vec![0.5]).is_err());
        assert!(PiecewiseConstant::new(vec![0.0, 1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(PiecewiseConstant::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn schedule_enforces_final_sale() {
        let eta = PiecewiseConstant::constant(0.5).unwrap();
        let open = PiecewiseConstant::constant(0.3).unwrap();
        assert!(ControlSchedule::new(eta.clone(), vec![open.clone()]).is_err());
        assert!(ControlSchedule::with_free_final_theta(eta.clone(), vec![open]).is_ok());
        let closed = PiecewiseConstant::constant(0.0).unwrap();
        let sched = ControlSchedule::new(eta, vec![closed]).unwrap();
        assert!(sched.final_theta_forced_zero());
        assert_eq!(sched.theta(0).unwrap().eval(1.0), 0.0);
        assert!(sched.theta(1).is_err());
    }

    #[test]
    fn generational_layout_names_one_variable_per_generation() {
        let layout = ControlLayout::generational(
            &unit_clock(2.0),
            vec![PiecewiseConstant::constant(0.0).unwrap()],
        )
        .unwrap();
        assert_eq!(layout.variable_count(), 2);
        assert_eq!(layout.variable_names(), ["eta_1", "eta_2"]);
        let sched = layout.schedule(&[0.2, 0.9]).unwrap();
        assert_eq!(sched.eta().eval(0.5), 0.2);
        assert_eq!(sched.eta().eval(1.0), 0.9);
        assert_eq!(sched.theta_count(), 1);
    }

    #[test]
    fn periodic_layout_repeats_values() {
        let layout = ControlLayout::periodic(
            1.0,
            2,
            2.0,
            vec![PiecewiseConstant::constant(0.0).unwrap()],
        )
        .unwrap();
        assert_eq!(layout.variable_count(), 2);
        let sched = layout.schedule(&[0.1, 0.8]).unwrap();
        assert_eq!(sched.eta().eval(0.25), 0.1);
        assert_eq!(sched.eta().eval(0.75), 0.8);
        assert_eq!(sched.eta().eval(1.25), 0.1);
        assert_eq!(sched.eta().eval(1.75), 0.8);
        assert_eq!(sched.eta().breakpoints(), [0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn periodic_layout_rejects_partial_period() {
        assert!(ControlLayout::periodic(1.0, 2, 2.3, vec![]).is_err());
    }

    #[test]
    fn stabilizing_layout_orders_eta_then_theta() {
        let layout = ControlLayout::stabilizing(&unit_clock(2.0), 2).unwrap();
        assert_eq!(layout.variable_count(), 4);
        assert_eq!(layout.variable_names(), ["eta_1", "eta_2", "theta_1_1", "theta_1_2"]);
        let sched = layout.schedule(&[0.0, 1.0, 0.4, 0.6]).unwrap();
        assert_eq!(sched.theta(0).unwrap().eval(0.3), 0.4);
        assert_eq!(sched.theta(0).unwrap().eval(1.3), 0.6);
        assert!(sched.theta(1).unwrap().is_identically(0.0));
    }

    #[test]
    fn explicit_layout_rejects_unused_variables() {
        let err = ControlLayout::explicit(
            vec![0.0, 2.0],
            vec![PieceValue::Variable(0)],
            vec![(vec![0.0, f64::INFINITY], vec![PieceValue::Fixed(0.0)])],
            true,
            vec!["eta_1".into(), "ghost".into()],
        );
        assert!(err.is_err());
    }

    #[test]
    fn interior_breakpoints_merge_eta_and_theta() {
        let eta = PiecewiseConstant::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0]).unwrap();
        let th = PiecewiseConstant::new(vec![0.0, 0.5, 2.0], vec![0.0, 0.0]).unwrap();
        let sched = ControlSchedule::new(eta, vec![th]).unwrap();
        assert_eq!(sched.interior_breakpoints(2.0), vec![0.5, 1.0]);
    }
}
