//! Reconstruction of the profit as an explicit polynomial in the control
//! pieces. The profit is evaluated at a structured set of sample points, one
//! solve per point, and the coefficients are recovered either by a subset
//! Möbius transform (multiaffine case) or by solving a small interpolation
//! system (total-degree and structured cases).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::parallel;

/// Polynomial in named control variables, stored term by term.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfitPolynomial {
    variables: Vec<String>,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl ProfitPolynomial {
    pub fn from_terms<I>(variables: Vec<String>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        if variables.is_empty() {
            return Err(Error::InvalidArgument("polynomial needs at least one variable".into()));
        }
        let mut map = BTreeMap::new();
        for (expo, coeff) in terms {
            if expo.len() != variables.len() {
                return Err(Error::DimensionMismatch(format!(
                    "exponent vector of length {} for {} variables",
                    expo.len(),
                    variables.len()
                )));
            }
            if !coeff.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient {coeff}")));
            }
            if map.insert(expo.clone(), coeff).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate term {expo:?}")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidArgument("polynomial has no terms".into()));
        }
        Ok(ProfitPolynomial { variables, terms: map })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of the given monomial, zero when absent.
    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_arity(x)?;
        Ok(self.eval_unchecked(x))
    }

    fn check_arity(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.variables.len() {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} for {} variables",
                x.len(),
                self.variables.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (expo, coeff) in &self.terms {
            let mut term = *coeff;
            for (e, v) in expo.iter().zip(x) {
                term *= v.powi(*e as i32);
            }
            acc += term;
        }
        acc
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_arity(x)?;
        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        for (expo, coeff) in &self.terms {
            let mut term = *coeff;
            for (e, v) in expo.iter().zip(x) {
                term *= v.powi(*e as i32);
            }
            value += term;
            for (k, e) in expo.iter().enumerate() {
                if *e == 0 {
                    continue;
                }
                let mut d = *coeff * *e as f64;
                for (jj, (ej, vj)) in expo.iter().zip(x).enumerate() {
                    let p = if jj == k { *ej as i32 - 1 } else { *ej as i32 };
                    d *= vj.powi(p);
                }
                grad[k] += d;
            }
        }
        Ok((value, grad))
    }

    /// Plain-text table: a header naming the variables, then one line per
    /// term with the exponents followed by the coefficient. Coefficients are
    /// printed in shortest round-trip form, so a parse of the output
    /// reproduces the polynomial bit for bit.
    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# profit polynomial");
        let _ = writeln!(out, "# variables: {}", self.variables.join(" "));
        let _ = writeln!(out, "# terms: {}", self.terms.len());
        for (expo, coeff) in &self.terms {
            for e in expo {
                let _ = write!(out, "{e} ");
            }
            let _ = writeln!(out, "{coeff}");
        }
        out
    }

    pub fn from_table_str(text: &str) -> Result<Self> {
        let mut variables: Option<Vec<String>> = None;
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(names) = rest.trim().strip_prefix("variables:") {
                    variables =
                        Some(names.split_whitespace().map(|s| s.to_string()).collect());
                }
                continue;
            }
            let vars = variables.as_ref().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "line {}: term before the '# variables:' header",
                    lineno + 1
                ))
            })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != vars.len() + 1 {
                return Err(Error::InvalidArgument(format!(
                    "line {}: expected {} exponents and a coefficient, got {} fields",
                    lineno + 1,
                    vars.len(),
                    fields.len()
                )));
            }
            let mut expo = Vec::with_capacity(vars.len());
            for f in &fields[..vars.len()] {
                expo.push(f.parse::<u32>().map_err(|_| {
                    Error::InvalidArgument(format!("line {}: bad exponent {f:?}", lineno + 1))
                })?);
            }
            let coeff = fields[vars.len()].parse::<f64>().map_err(|_| {
                Error::InvalidArgument(format!(
                    "line {}: bad coefficient {:?}",
                    lineno + 1,
                    fields[vars.len()]
                ))
            })?;
            terms.push((expo, coeff));
        }
        let variables =
            variables.ok_or_else(|| Error::InvalidArgument("missing '# variables:' header".into()))?;
        ProfitPolynomial::from_terms(variables, terms)
    }
}

/// Which structured family of sample points and monomials a fit uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    /// Vertices of the control cube; one coefficient per variable subset.
    MultiaffineGenerational,
    /// Principal lattice; all monomials up to a total degree.
    PeriodicTotalDegree,
    /// Basis from the structured profit expansion with piecewise controls.
    StabilizingStructured,
}

/// Sample points plus the monomial basis they determine.
#[derive(Clone, Debug)]
pub struct FitPlan {
    mode: FitMode,
    variables: Vec<String>,
    basis: Vec<Vec<u32>>,
    sample_points: Vec<Vec<f64>>,
    nu: u128,
}

/// Guard against plans whose solve count could not finish interactively.
const MAX_PLAN_SIZE: usize = 1 << 20;

fn eta_names(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("eta_{k}")).collect()
}

impl FitPlan {
    /// One sample per vertex of `[0, 1]^n`, multiaffine basis.
    pub fn multiaffine(n: usize) -> Result<FitPlan> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one control piece".into()));
        }
        if n >= 24 {
            return Err(Error::EnumerationCap(format!("{} vertex solves is out of reach", 1u64 << n)));
        }
        let total = 1usize << n;
        let mut basis = Vec::with_capacity(total);
        let mut points = Vec::with_capacity(total);
        for k in 0..total {
            let expo: Vec<u32> = (0..n).map(|j| ((k >> (n - 1 - j)) & 1) as u32).collect();
            points.push(expo.iter().map(|e| *e as f64).collect());
            basis.push(expo);
        }
        Ok(FitPlan {
            mode: FitMode::MultiaffineGenerational,
            variables: eta_names(n),
            basis,
            sample_points: points,
            nu: total as u128,
        })
    }

    /// Principal lattice in `m` variables up to total degree `n`.
    pub fn total_degree(m: usize, n: u32) -> Result<FitPlan> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument(
                "total-degree fit needs at least one variable and degree one".into(),
            ));
        }
        let mut basis = Vec::new();
        let mut stack = vec![0u32; m];
        enumerate_total_degree(&mut basis, &mut stack, 0, n);
        basis.sort();
        if basis.len() > MAX_PLAN_SIZE {
            return Err(Error::EnumerationCap(format!("{} lattice solves is out of reach", basis.len())));
        }
        let points: Vec<Vec<f64>> = basis
            .iter()
            .map(|e| e.iter().map(|v| *v as f64 / n as f64).collect())
            .collect();
        let nu = basis.len() as u128;
        Ok(FitPlan {
            mode: FitMode::PeriodicTotalDegree,
            variables: eta_names(m),
            basis,
            sample_points: points,
            nu,
        })
    }

    /// Structured basis for `n` pieces per control and `n_sell` sell ages.
    /// Variables are the `eta` pieces followed by the pieces of every sell-age
    /// retention except the last (which is pinned at zero). The working basis
    /// collapses repeated expansion terms; `nu` keeps the full term count.
    pub fn stabilizing(n: usize, n_sell: usize) -> Result<FitPlan> {
        let expansion = build_stabilizing_basis(n, n_sell)?;
        let nu = expansion.len() as u128;
        let mut basis = expansion;
        basis.dedup();
        let mut variables = eta_names(n);
        for i in 1..n_sell {
            for k in 1..=n {
                variables.push(format!("theta_{i}_{k}"));
            }
        }
        let points: Vec<Vec<f64>> = basis
            .iter()
            .map(|expo| expo.iter().map(|e| exponent_node(*e)).collect())
            .collect();
        Ok(FitPlan {
            mode: FitMode::StabilizingStructured,
            variables,
            basis,
            sample_points: points,
            nu,
        })
    }

    pub fn mode(&self) -> FitMode {
        self.mode
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn sample_points(&self) -> &[Vec<f64>] {
        &self.sample_points
    }

    /// Solve count promised by the structured expansion, before merging
    /// repeated monomials; the actual number of samples is `basis().len()`.
    pub fn nu(&self) -> u128 {
        self.nu
    }
}

fn enumerate_total_degree(out: &mut Vec<Vec<u32>>, stack: &mut Vec<u32>, pos: usize, left: u32) {
    if pos == stack.len() {
        out.push(stack.clone());
        return;
    }
    for e in 0..=left {
        stack[pos] = e;
        enumerate_total_degree(out, stack, pos + 1, left - e);
    }
    stack[pos] = 0;
}

/// Interpolation node used for an exponent level. Levels 0 and 1 sit at the
/// cube vertices; the quadratic level samples the midpoint.
fn exponent_node(e: u32) -> f64 {
    match e {
        0 => 0.0,
        1 => 1.0,
        _ => 0.5,
    }
}

/// Terms of the structured expansion: multiaffine terms carrying one
/// retention piece and a 0/1 exponent per sell age, plus pure-eta terms of
/// per-variable degree two from the quadratic running cost. Terms whose
/// retention exponent vanishes repeat for every piece choice; the list keeps
/// the repeats, so its length matches the expansion term count exactly.
pub fn build_stabilizing_basis(n: usize, n_sell: usize) -> Result<Vec<Vec<u32>>> {
    if n == 0 || n_sell == 0 {
        return Err(Error::InvalidArgument(
            "need at least one control piece and one sell age".into(),
        ));
    }
    let terms = stabilizing_tuple_count(n, n_sell);
    if terms > MAX_PLAN_SIZE as u128 {
        return Err(Error::EnumerationCap(format!("{terms} structured terms is out of reach")));
    }
    let free_sells = n_sell - 1;
    let width = n + free_sells * n;
    let mut basis: Vec<Vec<u32>> = Vec::with_capacity(terms as usize);

    // Per free sell age: a piece index times an on/off exponent.
    let radix = 2 * n;
    let blocks: usize = radix.pow(free_sells as u32).max(1);
    for mask in 0..(1usize << n) {
        for block in 0..blocks {
            let mut expo = vec![0u32; width];
            for (j, slot) in expo.iter_mut().enumerate().take(n) {
                *slot = ((mask >> (n - 1 - j)) & 1) as u32;
            }
            let mut code = block;
            for i in 0..free_sells {
                let choice = code % radix;
                code /= radix;
                let piece = choice / 2;
                let on = choice % 2;
                if on == 1 {
                    expo[n + i * n + piece] = 1;
                }
            }
            basis.push(expo);
        }
    }
    let mut stack = vec![0u32; n];
    push_eta_quadratics(&mut basis, &mut stack, 0, false, width);
    basis.sort();
    Ok(basis)
}

fn push_eta_quadratics(
    out: &mut Vec<Vec<u32>>,
    stack: &mut Vec<u32>,
    pos: usize,
    has_two: bool,
    width: usize,
) {
    if pos == stack.len() {
        if has_two {
            let mut expo = vec![0u32; width];
            expo[..stack.len()].copy_from_slice(stack);
            out.push(expo);
        }
        return;
    }
    for e in 0..=2u32 {
        stack[pos] = e;
        push_eta_quadratics(out, stack, pos + 1, has_two || e == 2, width);
    }
    stack[pos] = 0;
}

/// Number of terms in the structured expansion before merging repeats.
pub fn stabilizing_tuple_count(n: usize, n_sell: usize) -> u128 {
    let n = n as u32;
    let free = (n_sell - 1) as u32;
    (n as u128).pow(free) * (1u128 << (n + free)) + 3u128.pow(n) - (1u128 << n)
}

/// Number of distinct monomials the expansion spans.
pub fn stabilizing_monomial_count(n: usize, n_sell: usize) -> u128 {
    let free = (n_sell - 1) as u32;
    (1u128 << n) * ((n as u128) + 1).pow(free) + 3u128.pow(n as u32) - (1u128 << n)
}

/// Size of the full control grid `{0, 1}^{n...}` over every piece of every
/// control, for comparison against the structured count.
pub fn bangbang_tuple_count(n: usize, n_sell: usize) -> u128 {
    1u128 << (n * n_sell)
}

const CONDITION_CAP: f64 = 1e12;
const RESIDUAL_RTOL: f64 = 1e-9;

/// Evaluates the objective at every sample point of the plan and recovers the
/// coefficients of the basis monomials.
pub fn fit_in_plan<F>(plan: &FitPlan, objective: F, threads: usize) -> Result<ProfitPolynomial>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let samples = parallel::map_indexed(plan.sample_points.len(), threads, |i| {
        objective(&plan.sample_points[i])
    })?;
    for (v, p) in samples.iter().zip(&plan.sample_points) {
        if !v.is_finite() {
            return Err(Error::Fit(format!("objective returned {v} at {p:?}")));
        }
    }

    let coeffs = match plan.mode {
        FitMode::MultiaffineGenerational => moebius_coefficients(&samples),
        _ => interpolation_coefficients(plan, &samples)?,
    };
    ProfitPolynomial::from_terms(
        plan.variables.clone(),
        plan.basis.iter().cloned().zip(coeffs),
    )
}

/// In-place subset Möbius transform: values at the cube vertices become the
/// coefficients of the multiaffine expansion. Exact up to rounding.
fn moebius_coefficients(samples: &[f64]) -> Vec<f64> {
    let total = samples.len();
    let n = total.trailing_zeros();
    let mut a = samples.to_vec();
    for b in 0..n {
        let bit = 1usize << b;
        for m in 0..total {
            if m & bit != 0 {
                a[m] -= a[m ^ bit];
            }
        }
    }
    a
}

fn interpolation_coefficients(plan: &FitPlan, samples: &[f64]) -> Result<Vec<f64>> {
    let size = plan.basis.len();
    let mut v = DMatrix::zeros(size, size);
    for (row, point) in plan.sample_points.iter().enumerate() {
        for (col, expo) in plan.basis.iter().enumerate() {
            let mut val = 1.0;
            for (e, x) in expo.iter().zip(point) {
                val *= x.powi(*e as i32);
            }
            v[(row, col)] = val;
        }
    }
    let singular = v.clone().singular_values();
    let s_max = singular.max();
    let s_min = singular.min();
    let cond = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if cond > CONDITION_CAP {
        return Err(Error::IllConditioned { cond });
    }
    let rhs = DVector::from_column_slice(samples);
    let coeffs = v
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::IllConditioned { cond })?;
    let residual = (&v * &coeffs - &rhs).abs().max();
    let scale = rhs.abs().max().max(1.0);
    if residual > RESIDUAL_RTOL * scale {
        return Err(Error::Fit(format!(
            "interpolation residual {residual:.3e} exceeds {RESIDUAL_RTOL:.0e} of scale {scale:.3e}"
        )));
    }
    Ok(coeffs.iter().copied().collect())
}

/// Vertices of the cube in lexicographic order; `fit_multiaffine` recovers
/// the multiaffine coefficients exactly from one solve per vertex.
pub fn fit_multiaffine<F>(objective: F, n: usize, threads: usize) -> Result<ProfitPolynomial>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fit_in_plan(&FitPlan::multiaffine(n)?, objective, threads)
}

/// Interpolation on the principal lattice with all monomials of total degree
/// at most `n` in `m` variables.
pub fn fit_total_degree<F>(objective: F, m: usize, n: u32, threads: usize) -> Result<ProfitPolynomial>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fit_in_plan(&FitPlan::total_degree(m, n)?, objective, threads)
}

/// Absolute prediction errors of the polynomial at the given points.
pub fn holdout_residuals<F>(
    poly: &ProfitPolynomial,
    objective: F,
    points: &[Vec<f64>],
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    points
        .iter()
        .map(|p| Ok((poly.evaluate(p)? - objective(p)?).abs()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_generation_paper_poly() -> ProfitPolynomial {
        ProfitPolynomial::from_terms(
            eta_names(2),
            vec![
                (vec![0, 0], -19.97),
                (vec![1, 0], 23.10),
                (vec![0, 1], 28.18),
                (vec![1, 1], -28.18),
            ],
        )
        .unwrap()
    }

    #[test]
    fn evaluation_matches_hand_arithmetic() {
        let p = two_generation_paper_poly();
        assert!((p.evaluate(&[0.0, 1.0]).unwrap() - 8.21).abs() < 1e-12);
        assert!((p.evaluate(&[0.5, 0.5]).unwrap() - (-1.375)).abs() < 1e-12);
        assert!(p.evaluate(&[0.5]).is_err());
    }

    #[test]
    fn gradient_matches_difference_quotients() {
        let p = two_generation_paper_poly();
        let x = [0.3, 0.7];
        let (v, g) = p.value_and_gradient(&x).unwrap();
        assert!((v - p.evaluate(&x).unwrap()).abs() < 1e-14);
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            let fd = (p.evaluate(&xp).unwrap() - p.evaluate(&xm).unwrap()) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-6, "partial {k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn moebius_fit_recovers_multiaffine_coefficients_exactly() {
        let target = ProfitPolynomial::from_terms(
            eta_names(3),
            vec![
                (vec![0, 0, 0], 2.0),
                (vec![1, 0, 0], -3.0),
                (vec![0, 1, 1], 5.0),
                (vec![1, 1, 1], 0.25),
            ],
        )
        .unwrap();
        let fitted = fit_multiaffine(|x| target.evaluate(x), 3, 1).unwrap();
        for (expo, c) in fitted.terms() {
            assert!(
                (c - target.coefficient(expo)).abs() < 1e-12,
                "{expo:?}: {c}"
            );
        }
        assert_eq!(fitted.term_count(), 8);
    }

    #[test]
    fn principal_lattice_fit_is_exact_on_polynomials_in_the_span() {
        let fitted = fit_total_degree(|x| Ok(1.0 - x[0] * x[0]), 1, 2, 1).unwrap();
        assert!((fitted.coefficient(&[0]) - 1.0).abs() < 1e-12);
        assert!(fitted.coefficient(&[1]).abs() < 1e-12);
        assert!((fitted.coefficient(&[2]) + 1.0).abs() < 1e-12);

        let square = |x: &[f64]| {
            let s = x[0] + x[1];
            Ok(s * s)
        };
        let fitted = fit_total_degree(square, 2, 2, 1).unwrap();
        assert!((fitted.coefficient(&[2, 0]) - 1.0).abs() < 1e-11);
        assert!((fitted.coefficient(&[1, 1]) - 2.0).abs() < 1e-11);
        assert!((fitted.coefficient(&[0, 2]) - 1.0).abs() < 1e-11);
        assert!(fitted.coefficient(&[0, 0]).abs() < 1e-11);
        assert_eq!(fitted.term_count(), 6);
    }

    #[test]
    fn structured_counts_match_the_counting_argument() {
        assert_eq!(stabilizing_tuple_count(1, 1), 3);
        assert_eq!(stabilizing_tuple_count(2, 1), 9);
        assert_eq!(stabilizing_tuple_count(3, 2), 67);
        assert_eq!(stabilizing_monomial_count(2, 2), 17);
        assert_eq!(bangbang_tuple_count(2, 2), 16);
        assert_eq!(build_stabilizing_basis(2, 2).unwrap().len(), 21);
        assert_eq!(build_stabilizing_basis(3, 2).unwrap().len(), 67);

        let plan = FitPlan::stabilizing(2, 2).unwrap();
        assert_eq!(plan.basis().len(), 17);
        assert_eq!(plan.nu(), 21);
        assert_eq!(
            plan.variables(),
            ["eta_1", "eta_2", "theta_1_1", "theta_1_2"]
        );

        // One sell age leaves no free retention: the basis is the full
        // per-variable-degree-two tensor grid.
        let plan = FitPlan::stabilizing(2, 1).unwrap();
        assert_eq!(plan.basis().len(), 9);
        assert_eq!(plan.nu(), 9);
    }

    #[test]
    fn structured_fit_recovers_a_function_in_its_span() {
        let target = |x: &[f64]| {
            let (e1, e2, _t11, t12) = (x[0], x[1], x[2], x[3]);
            Ok(1.0 + 0.5 * e1 * e2 + 2.0 * e1 * t12 - 3.0 * e2 * e2)
        };
        let plan = FitPlan::stabilizing(2, 2).unwrap();
        let fitted = fit_in_plan(&plan, target, 2).unwrap();
        assert!((fitted.coefficient(&[0, 0, 0, 0]) - 1.0).abs() < 1e-10);
        assert!((fitted.coefficient(&[1, 1, 0, 0]) - 0.5).abs() < 1e-10);
        assert!((fitted.coefficient(&[1, 0, 0, 1]) - 2.0).abs() < 1e-10);
        assert!((fitted.coefficient(&[0, 2, 0, 0]) + 3.0).abs() < 1e-10);
        assert!((fitted.coefficient(&[1, 0, 1, 0])).abs() < 1e-10);
        let residuals = holdout_residuals(
            &fitted,
            target,
            &[vec![0.3, 0.9, 0.2, 0.7], vec![1.0, 0.1, 0.8, 0.4]],
        )
        .unwrap();
        assert!(residuals.iter().all(|r| *r < 1e-9), "{residuals:?}");
    }

    #[test]
    fn fits_of_lower_degree_data_leave_high_terms_at_noise_level() {
        let fitted = fit_total_degree(|x| Ok(0.5 + 2.0 * x[0] - x[1]), 2, 3, 1).unwrap();
        for (expo, c) in fitted.terms() {
            if expo.iter().sum::<u32>() >= 2 {
                assert!(c.abs() < 1e-10, "{expo:?}: {c}");
            }
        }
    }

    #[test]
    fn table_round_trip_is_bit_exact() {
        let p = two_generation_paper_poly();
        let text = p.to_table_string();
        let q = ProfitPolynomial::from_table_str(&text).unwrap();
        assert_eq!(p, q);
        let r = ProfitPolynomial::from_table_str(&q.to_table_string()).unwrap();
        assert_eq!(q, r);
    }

    #[test]
    fn table_parse_rejects_malformed_input() {
        assert!(ProfitPolynomial::from_table_str("0 0 1.0").is_err());
        let bad_width = "# variables: a b\n0 1.0\n";
        assert!(ProfitPolynomial::from_table_str(bad_width).is_err());
        let duplicate = "# variables: a\n1 2.0\n1 3.0\n";
        assert!(ProfitPolynomial::from_table_str(duplicate).is_err());
        let bad_exponent = "# variables: a\n-1 2.0\n";
        assert!(ProfitPolynomial::from_table_str(bad_exponent).is_err());
    }

    #[test]
    fn plan_caps_reject_unreasonable_sizes() {
        assert!(matches!(FitPlan::multiaffine(24), Err(Error::EnumerationCap(_))));
        assert!(FitPlan::multiaffine(0).is_err());
        assert!(FitPlan::total_degree(0, 2).is_err());
        assert!(build_stabilizing_basis(0, 1).is_err());
    }
}
