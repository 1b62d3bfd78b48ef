//! Characteristic curves of the age-transport equations, the exponential
//! factor carried along them, and the generation-time sequence.
//!
//! Each population is advected by `da/dt = g(t, a)` with `g` bounded away from
//! zero, so the age reached at a given time is strictly increasing in time and
//! the curve is invertible. Solutions of the transport equation are constant
//! multiples along these curves; the multiple is [`psi_factor`].

use crate::error::{Error, Result};

/// A rate coefficient `(t, a) -> value`, either constant or sampled on a
/// rectangular grid with bilinear interpolation (clamped outside the grid).
///
/// Growth rates must be positive everywhere; the declared [`lower_bound`]
/// records the infimum used for reachability and step bounds. Source rates
/// (the zeroth-order coefficient of the balance law) may have either sign:
/// the value is used exactly as stored in the exponent of [`psi_factor`], so
/// positive means growth and negative means decay.
///
/// [`lower_bound`]: RateField::lower_bound
#[derive(Clone, Debug)]
pub enum RateField {
    Constant(f64),
    Tabulated(RateTable),
}

/// Samples of a rate on a rectangular `(t, a)` grid, row-major in `t`.
#[derive(Clone, Debug)]
pub struct RateTable {
    t_nodes: Vec<f64>,
    a_nodes: Vec<f64>,
    values: Vec<f64>,
    lower_bound: f64,
}

impl RateField {
    pub fn constant(value: f64) -> Self {
        RateField::Constant(value)
    }

    /// Builds a tabulated rate. Axes must be finite and strictly increasing,
    /// `values` row-major with `t_nodes.len() * a_nodes.len()` entries, and
    /// every sample at least `lower_bound`. Bilinear interpolation preserves
    /// that bound between samples.
    pub fn tabulated(
        t_nodes: Vec<f64>,
        a_nodes: Vec<f64>,
        values: Vec<f64>,
        lower_bound: f64,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if t_nodes.len() < 2 || a_nodes.len() < 2 {
            return bad("rate table needs at least two nodes per axis".into());
        }
        if values.len() != t_nodes.len() * a_nodes.len() {
            return bad(format!(
                "rate table has {} values, expected {} ({} x {})",
                values.len(),
                t_nodes.len() * a_nodes.len(),
                t_nodes.len(),
                a_nodes.len()
            ));
        }
        for axis in [&t_nodes, &a_nodes] {
            if axis.iter().any(|v| !v.is_finite()) {
                return bad("rate table axis contains a non-finite node".into());
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return bad("rate table axes must be strictly increasing".into());
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return bad("rate table contains a non-finite sample".into());
        }
        if let Some(&v) = values.iter().find(|&&v| v < lower_bound) {
            return bad(format!("rate sample {v} is below the declared lower bound {lower_bound}"));
        }
        Ok(RateField::Tabulated(RateTable { t_nodes, a_nodes, values, lower_bound }))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RateField::Constant(_))
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            RateField::Constant(v) => Some(*v),
            RateField::Tabulated(_) => None,
        }
    }

    /// Declared infimum of the field.
    pub fn lower_bound(&self) -> f64 {
        match self {
            RateField::Constant(v) => *v,
            RateField::Tabulated(t) => t.lower_bound,
        }
    }

    /// Supremum over the stored samples (equals the value for constants).
    pub fn upper_bound(&self) -> f64 {
        match self {
            RateField::Constant(v) => *v,
            RateField::Tabulated(t) => t.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn eval(&self, t: f64, a: f64) -> f64 {
        match self {
            RateField::Constant(v) => *v,
            RateField::Tabulated(tab) => tab.bilinear(t, a),
        }
    }

    /// Age derivative of the field. Exactly zero for constants; for tables,
    /// the in-cell slope of the interpolant, averaged across the two adjacent
    /// cells when `a` sits on a grid node (a central difference).
    pub fn slope_age(&self, t: f64, a: f64) -> f64 {
        match self {
            RateField::Constant(_) => 0.0,
            RateField::Tabulated(tab) => tab.slope_age(t, a),
        }
    }

    /// The field with every value negated (lower and upper bounds swap roles).
    pub fn negated(&self) -> RateField {
        match self {
            RateField::Constant(v) => RateField::Constant(-v),
            RateField::Tabulated(t) => RateField::Tabulated(RateTable {
                t_nodes: t.t_nodes.clone(),
                a_nodes: t.a_nodes.clone(),
                values: t.values.iter().map(|v| -v).collect(),
                lower_bound: -t.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            }),
        }
    }
}

impl RateTable {
    /// Index of the cell containing `x`, clamping outside the axis range.
    fn cell(axis: &[f64], x: f64) -> (usize, f64) {
        let n = axis.len();
        if x <= axis[0] {
            return (0, 0.0);
        }
        if x >= axis[n - 1] {
            return (n - 2, 1.0);
        }
        let hi = axis.partition_point(|&v| v <= x).min(n - 1);
        let lo = hi - 1;
        let w = (x - axis[lo]) / (axis[hi] - axis[lo]);
        (lo, w)
    }

    fn at(&self, it: usize, ia: usize) -> f64 {
        self.values[it * self.a_nodes.len() + ia]
    }

    fn bilinear(&self, t: f64, a: f64) -> f64 {
        let (it, wt) = Self::cell(&self.t_nodes, t);
        let (ia, wa) = Self::cell(&self.a_nodes, a);
        let v00 = self.at(it, ia);
        let v01 = self.at(it, ia + 1);
        let v10 = self.at(it + 1, ia);
        let v11 = self.at(it + 1, ia + 1);
        let lo = v00 + wa * (v01 - v00);
        let hi = v10 + wa * (v11 - v10);
        lo + wt * (hi - lo)
    }

    /// Slope in `a` of the interpolated value at fixed `t` within cell `ia`.
    fn cell_slope(&self, it: usize, wt: f64, ia: usize) -> f64 {
        let da = self.a_nodes[ia + 1] - self.a_nodes[ia];
        let lo = (self.at(it, ia + 1) - self.at(it, ia)) / da;
        let hi = (self.at(it + 1, ia + 1) - self.at(it + 1, ia)) / da;
        lo + wt * (hi - lo)
    }

    fn slope_age(&self, t: f64, a: f64) -> f64 {
        let (it, wt) = Self::cell(&self.t_nodes, t);
        let n = self.a_nodes.len();
        // On a node, average the two adjacent cell slopes.
        let node = self.a_nodes.iter().position(|&v| (v - a).abs() <= 1e-12 * v.abs().max(1.0));
        match node {
            Some(0) => self.cell_slope(it, wt, 0),
            Some(k) if k == n - 1 => self.cell_slope(it, wt, n - 2),
            Some(k) => 0.5 * (self.cell_slope(it, wt, k - 1) + self.cell_slope(it, wt, k)),
            None => {
                let (ia, _) = Self::cell(&self.a_nodes, a);
                self.cell_slope(it, wt, ia)
            }
        }
    }
}

/// Age-dependent fertility `w(a) = scale * profile(a)`, supported on a closed
/// interval of post-maturity ages.
#[derive(Clone, Debug)]
pub struct Fertility {
    scale: f64,
    support: (f64, f64),
    profile: FertilityProfile,
}

#[derive(Clone, Debug)]
enum FertilityProfile {
    /// `profile = 1` on the support.
    Indicator,
    /// Piecewise-linear profile through `(ages, values)`, zero outside.
    Tabulated { ages: Vec<f64>, values: Vec<f64> },
}

impl Fertility {
    /// `w = scale` on `[a_lo, a_hi]` (endpoints included), zero elsewhere.
    pub fn indicator(scale: f64, a_lo: f64, a_hi: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("fertility scale {scale} must be finite and >= 0")));
        }
        if !(a_lo < a_hi) || !a_lo.is_finite() || !a_hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "fertility support [{a_lo}, {a_hi}] must be a finite nonempty interval"
            )));
        }
        Ok(Fertility { scale, support: (a_lo, a_hi), profile: FertilityProfile::Indicator })
    }

    /// `w = scale * profile(a)` with a piecewise-linear nonnegative profile.
    pub fn tabulated(scale: f64, ages: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ages.len() != values.len() || ages.len() < 2 {
            return Err(Error::InvalidArgument("fertility profile needs matching ages/values, at least two".into()));
        }
        if ages.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("fertility profile ages must be strictly increasing".into()));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("fertility profile values must be finite and >= 0".into()));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("fertility scale {scale} must be finite and >= 0")));
        }
        let support = (ages[0], *ages.last().unwrap());
        Ok(Fertility { scale, support, profile: FertilityProfile::Tabulated { ages, values } })
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn eval(&self, a: f64) -> f64 {
        if a < self.support.0 || a > self.support.1 {
            return 0.0;
        }
        match &self.profile {
            FertilityProfile::Indicator => self.scale,
            FertilityProfile::Tabulated { ages, values } => {
                let hi = ages.partition_point(|&v| v <= a);
                if hi == 0 {
                    return self.scale * values[0];
                }
                if hi == ages.len() {
                    return self.scale * values[ages.len() - 1];
                }
                let lo = hi - 1;
                let w = (a - ages[lo]) / (ages[hi] - ages[lo]);
                self.scale * (values[lo] + w * (values[hi] - values[lo]))
            }
        }
    }
}

/// The strictly increasing sequence `0 = T_0 < T_1 < ...` where `T_l` is the
/// time at which juveniles born at `T_{l-1}` reach the maturity age. The last
/// entry is the first one at or past the horizon.
#[derive(Clone, Debug)]
pub struct GenerationClock {
    times: Vec<f64>,
    horizon: f64,
}

impl GenerationClock {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of whole generations inside the horizon.
    pub fn generations(&self) -> usize {
        self.times.iter().skip(1).filter(|&&t| t <= self.horizon + 1e-12 * self.horizon.max(1.0)).count()
    }
}

/// Minimum admissible integration substeps per unit time; guards degenerate
/// step requests.
const MAX_SUBSTEPS: usize = 50_000_000;

fn check_finite(args: &[(&str, f64)]) -> Result<()> {
    for (name, v) in args {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} = {v} is not finite")));
        }
    }
    Ok(())
}

/// Age reached at time `t` by the characteristic through `(t0, a0)`, i.e. the
/// solution of `da/ds = g(s, a)`, `a(t0) = a0`. Exact for constant rates;
/// otherwise classical fourth-order one-step integration with fixed substep
/// at most `step`.
pub fn characteristic_age(g: &RateField, t: f64, t0: f64, a0: f64, step: f64) -> Result<f64> {
    check_finite(&[("t", t), ("t0", t0), ("a0", a0), ("step", step)])?;
    if let Some(v) = g.constant_value() {
        return Ok(a0 + v * (t - t0));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("integration step {step} must be > 0")));
    }
    let span = t - t0;
    if span == 0.0 {
        return Ok(a0);
    }
    let n = ((span.abs() / step).ceil() as usize).max(1);
    if n > MAX_SUBSTEPS {
        return Err(Error::InvalidArgument(format!("integration span {span} needs more than {MAX_SUBSTEPS} substeps")));
    }
    let h = span / n as f64;
    let mut a = a0;
    let mut s = t0;
    for _ in 0..n {
        let k1 = g.eval(s, a);
        let k2 = g.eval(s + 0.5 * h, a + 0.5 * h * k1);
        let k3 = g.eval(s + 0.5 * h, a + 0.5 * h * k2);
        let k4 = g.eval(s + h, a + h * k3);
        a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
    }
    Ok(a)
}

/// Root tolerance for [`characteristic_time`], measured in age.
pub const INVERSE_AGE_TOL: f64 = 1e-12;

/// Time at which the characteristic through `(t0, a0)` reaches age `a`, the
/// inverse of [`characteristic_age`] in its first argument. Bisection on the
/// strictly increasing age map, to [`INVERSE_AGE_TOL`].
pub fn characteristic_time(g: &RateField, a: f64, t0: f64, a0: f64, step: f64) -> Result<f64> {
    check_finite(&[("a", a), ("t0", t0), ("a0", a0)])?;
    if let Some(v) = g.constant_value() {
        return Ok(t0 + (a - a0) / v);
    }
    let lb = g.lower_bound();
    if !(lb > 0.0) {
        return Err(Error::InvalidArgument(format!("characteristic inversion needs a positive lower bound, got {lb}")));
    }
    // The slowest admissible speed bounds the search window on either side.
    let slack = 1.0 + 1e-9;
    let (mut lo, mut hi) = if a >= a0 {
        (t0, t0 + (a - a0) / lb * slack + step)
    } else {
        (t0 - (a0 - a) / lb * slack - step, t0)
    };
    let age_at = |t: f64| characteristic_age(g, t, t0, a0, step);
    if age_at(lo)? > a + INVERSE_AGE_TOL || age_at(hi)? < a - INVERSE_AGE_TOL {
        return Err(Error::Unreachable { age: a, t0, a0 });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let am = age_at(mid)?;
        if (am - a).abs() <= INVERSE_AGE_TOL {
            return Ok(mid);
        }
        if am < a {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exponential factor carried between times `t1 <= t2` along the
/// characteristic that ends at age `a` at time `t2`:
///
/// `exp of the integral over [t1, t2] of (d(s, A(s)) - d/da g(s, A(s)))`
///
/// where `A(s)` is the characteristic age at time `s`. The stored `d` enters
/// the exponent with its sign unaltered. Closed form for constant rates;
/// composite trapezoid on substeps of at most `step` otherwise.
pub fn psi_factor(g: &RateField, d: &RateField, t1: f64, t2: f64, a: f64, step: f64) -> Result<f64> {
    check_finite(&[("t1", t1), ("t2", t2), ("a", a)])?;
    if t1 > t2 {
        return Err(Error::InvalidArgument(format!("psi_factor needs t1 <= t2, got t1 = {t1}, t2 = {t2}")));
    }
    if let (Some(_), Some(dv)) = (g.constant_value(), d.constant_value()) {
        return Ok((dv * (t2 - t1)).exp());
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("integration step {step} must be > 0")));
    }
    let span = t2 - t1;
    if span == 0.0 {
        return Ok(1.0);
    }
    let n = ((span / step).ceil() as usize).max(1);
    if n > MAX_SUBSTEPS {
        return Err(Error::InvalidArgument(format!("integration span {span} needs more than {MAX_SUBSTEPS} substeps")));
    }
    let h = span / n as f64;
    // March the characteristic backward from (t2, a), accumulating the
    // trapezoid of the integrand at the same nodes.
    let integrand = |s: f64, age: f64| d.eval(s, age) - g.slope_age(s, age);
    let mut s = t2;
    let mut age = a;
    let mut sum = 0.5 * integrand(s, age);
    for i in 1..=n {
        let k1 = g.eval(s, age);
        let k2 = g.eval(s - 0.5 * h, age - 0.5 * h * k1);
        let k3 = g.eval(s - 0.5 * h, age - 0.5 * h * k2);
        let k4 = g.eval(s - h, age - h * k3);
        age -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s = t2 - i as f64 * h;
        sum += if i == n { 0.5 * integrand(s, age) } else { integrand(s, age) };
    }
    Ok((sum * h).exp())
}

/// Builds the generation-time sequence for juveniles: `T_0 = 0` and `T_l`
/// solves `A(T_l; T_{l-1}, 0) = abar`, continued until the horizon is covered.
pub fn generation_times(g_j: &RateField, abar: f64, horizon: f64, step: f64) -> Result<GenerationClock> {
    check_finite(&[("abar", abar), ("horizon", horizon)])?;
    if !(abar > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "maturity age {abar} and horizon {horizon} must be > 0"
        )));
    }
    let lo_gap = abar / g_j.upper_bound();
    let hi_gap = abar / g_j.lower_bound();
    let mut times = vec![0.0];
    if let Some(v) = g_j.constant_value() {
        // Multiply rather than accumulate so grid alignment sees exact values.
        let gap = abar / v;
        let mut l = 1usize;
        while *times.last().unwrap() < horizon {
            times.push(l as f64 * gap);
            l += 1;
        }
    } else {
        while *times.last().unwrap() < horizon {
            let prev = *times.last().unwrap();
            let next = characteristic_time(g_j, abar, prev, 0.0, step)?;
            let gap = next - prev;
            let tol = 1e-9 * hi_gap.max(1.0);
            if gap < lo_gap - tol || gap > hi_gap + tol {
                return Err(Error::Numerical {
                    t: next,
                    age: abar,
                    message: format!("generation gap {gap} outside [{lo_gap}, {hi_gap}]"),
                });
            }
            times.push(next);
            if times.len() > 100_000 {
                return Err(Error::InvalidArgument("generation sequence exceeds 100000 entries".into()));
            }
        }
    }
    Ok(GenerationClock { times, horizon })
}
