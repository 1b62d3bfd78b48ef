//! Maximization of the profit over the control cube.
//!
//! Two routes: exhaustive enumeration of the cube vertices for objectives
//! that attain their maximum at a vertex, and a dense grid scan with local
//! gradient refinement for general polynomials.

use crate::error::{Error, Result};
use crate::parallel;
use crate::polyfit::ProfitPolynomial;

/// How an optimum was certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Every vertex of the cube was evaluated.
    VertexEnumerationExhaustive,
    /// Dense grid scan followed by projected gradient ascent.
    GridPlusLocalRefinement,
}

#[derive(Clone, Debug)]
pub struct Optimum {
    pub argmax: Vec<f64>,
    pub value: f64,
    pub certificate: Certificate,
    /// Whether every coordinate of the argmax is 0 or 1.
    pub is_vertex: bool,
}

/// Hard cap on the enumeration dimension; past this the vertex count is
/// out of interactive reach.
pub const ENUMERATION_CAP: usize = 24;

fn vertex_coords(k: usize, n: usize) -> Vec<f64> {
    (0..n).map(|j| ((k >> (n - 1 - j)) & 1) as f64).collect()
}

/// Maximizes an objective over the vertices of `[0, 1]^n` by evaluating all
/// of them. Ties keep the lexicographically smallest vertex. Objectives that
/// are multiaffine in the coordinates attain their box maximum here.
pub fn maximize_bangbang<F>(objective: F, n: usize, threads: usize) -> Result<Optimum>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one control variable".into()));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationCap(format!(
            "{n} variables means 2^{n} vertex evaluations; the cap is {ENUMERATION_CAP}"
        )));
    }
    let total = 1usize << n;
    let values = parallel::map_indexed(total, threads, |k| objective(&vertex_coords(k, n)))?;
    let mut best = 0usize;
    for (k, v) in values.iter().enumerate().skip(1) {
        if !v.is_finite() {
            return Err(Error::Numerical {
                t: f64::NAN,
                age: f64::NAN,
                message: format!("objective returned {v} at vertex {:?}", vertex_coords(k, n)),
            });
        }
        // Ascending index order is lexicographic, so strict improvement
        // keeps the smallest tied vertex.
        if *v > values[best] {
            best = k;
        }
    }
    Ok(Optimum {
        argmax: vertex_coords(best, n),
        value: values[best],
        certificate: Certificate::VertexEnumerationExhaustive,
        is_vertex: true,
    })
}

/// Default scan density per axis, chosen so the total grid stays small.
fn default_density(n: usize) -> usize {
    match n {
        0..=3 => 101,
        4..=6 => 11,
        _ => 5,
    }
}

const VERTEX_SNAP: f64 = 1e-9;
const MAX_ASCENT_STEPS: usize = 500;
const REFINE_STARTS: usize = 8;

/// Maximizes a polynomial over `[0, 1]^n`: dense grid scan, projected
/// gradient ascent from the best grid points, then a snap of near-vertex
/// coordinates. `tol` bounds the argument change at which ascent stops.
pub fn maximize_box(
    poly: &ProfitPolynomial,
    grid_density: Option<usize>,
    tol: f64,
) -> Result<Optimum> {
    let n = poly.variables().len();
    if poly.term_count() == 0 || n == 0 {
        return Err(Error::InvalidArgument("degenerate polynomial".into()));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let density = grid_density.unwrap_or_else(|| default_density(n));
    if density < 2 {
        return Err(Error::InvalidArgument("grid density must be at least 2".into()));
    }
    let total = density
        .checked_pow(n as u32)
        .filter(|t| *t <= 1 << 26)
        .ok_or_else(|| {
            Error::EnumerationCap(format!("grid of {density}^{n} points is out of reach"))
        })?;

    // Grid scan, keeping the best few starting points for refinement.
    let mut top: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut x = vec![0.0; n];
    let step = 1.0 / (density - 1) as f64;
    for flat in 0..total {
        let mut rest = flat;
        for j in (0..n).rev() {
            x[j] = (rest % density) as f64 * step;
            rest /= density;
        }
        let v = poly.eval_unchecked(&x);
        if !v.is_finite() {
            return Err(Error::Numerical {
                t: f64::NAN,
                age: f64::NAN,
                message: format!("polynomial evaluated to {v} at {x:?}"),
            });
        }
        if top.len() < REFINE_STARTS {
            top.push((v, x.clone()));
            top.sort_by(|a, b| b.0.total_cmp(&a.0));
        } else if v > top[REFINE_STARTS - 1].0 {
            top[REFINE_STARTS - 1] = (v, x.clone());
            top.sort_by(|a, b| b.0.total_cmp(&a.0));
        }
    }

    let mut best_x = top[0].1.clone();
    let mut best_v = top[0].0;
    for (_, start) in &top {
        let (xr, vr) = ascend(poly, start.clone(), tol)?;
        if vr > best_v {
            best_v = vr;
            best_x = xr;
        }
    }

    for c in &mut best_x {
        if c.abs() <= VERTEX_SNAP {
            *c = 0.0;
        } else if (*c - 1.0).abs() <= VERTEX_SNAP {
            *c = 1.0;
        }
    }
    let value = poly.eval_unchecked(&best_x);
    let is_vertex = best_x.iter().all(|c| *c == 0.0 || *c == 1.0);
    Ok(Optimum {
        argmax: best_x,
        value,
        certificate: Certificate::GridPlusLocalRefinement,
        is_vertex,
    })
}

/// Projected gradient ascent with backtracking line search.
fn ascend(poly: &ProfitPolynomial, mut x: Vec<f64>, tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = x.len();
    let (mut fx, mut grad) = poly.value_and_gradient(&x)?;
    let mut candidate = vec![0.0; n];
    for _ in 0..MAX_ASCENT_STEPS {
        let mut g2 = 0.0;
        for j in 0..n {
            let blocked =
                (x[j] <= 0.0 && grad[j] < 0.0) || (x[j] >= 1.0 && grad[j] > 0.0);
            if blocked {
                grad[j] = 0.0;
            }
            g2 += grad[j] * grad[j];
        }
        if g2.sqrt() <= 1e-12 {
            break;
        }
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha >= 1e-14 {
            let mut step2 = 0.0;
            for j in 0..n {
                candidate[j] = (x[j] + alpha * grad[j]).clamp(0.0, 1.0);
                let d = candidate[j] - x[j];
                step2 += d * d;
            }
            let fc = poly.eval_unchecked(&candidate);
            if fc > fx + 1e-4 * alpha * g2 {
                std::mem::swap(&mut x, &mut candidate);
                let refreshed = poly.value_and_gradient(&x)?;
                fx = refreshed.0;
                grad = refreshed.1;
                moved = true;
                if step2.sqrt() <= tol {
                    return Ok((x, fx));
                }
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multiaffine_example() -> ProfitPolynomial {
        ProfitPolynomial::from_terms(
            vec!["eta_1".into(), "eta_2".into()],
            vec![
                (vec![0, 0], -19.97),
                (vec![1, 0], 23.10),
                (vec![0, 1], 28.18),
                (vec![1, 1], -28.18),
            ],
        )
        .unwrap()
    }

    fn quadratic_example() -> ProfitPolynomial {
        ProfitPolynomial::from_terms(
            vec!["eta_1".into(), "eta_2".into()],
            vec![
                (vec![0, 0], 3.65),
                (vec![1, 0], 0.46),
                (vec![0, 1], -0.88),
                (vec![1, 1], 1.11),
                (vec![2, 0], -1.06),
                (vec![0, 2], 0.46),
            ],
        )
        .unwrap()
    }

    #[test]
    fn vertex_enumeration_finds_the_corner_maximum() {
        let p = multiaffine_example();
        let opt = maximize_bangbang(|x| p.evaluate(x), 2, 1).unwrap();
        assert_eq!(opt.argmax, vec![0.0, 1.0]);
        assert!((opt.value - 8.21).abs() < 1e-12);
        assert!(opt.is_vertex);
        assert_eq!(opt.certificate, Certificate::VertexEnumerationExhaustive);
    }

    #[test]
    fn vertex_ties_keep_the_lexicographically_smallest_point() {
        let p = ProfitPolynomial::from_terms(
            vec!["a".into(), "b".into()],
            vec![(vec![1, 0], 1.0), (vec![0, 1], 1.0), (vec![1, 1], -1.0)],
        )
        .unwrap();
        let opt = maximize_bangbang(|x| p.evaluate(x), 2, 1).unwrap();
        assert_eq!(opt.argmax, vec![0.0, 1.0]);
        assert_eq!(opt.value, 1.0);
    }

    #[test]
    fn enumeration_dimension_is_capped() {
        let r = maximize_bangbang(|_| Ok(0.0), 25, 1);
        assert!(matches!(r, Err(Error::EnumerationCap(_))));
    }

    #[test]
    fn box_search_finds_an_interior_stationary_point() {
        let p = quadratic_example();
        let opt = maximize_box(&p, None, 1e-10).unwrap();
        // Stationary in the first coordinate, saturated in the second.
        assert!((opt.argmax[0] - 0.7405660377358491).abs() < 1e-6, "{:?}", opt.argmax);
        assert_eq!(opt.argmax[1], 1.0);
        assert!((opt.value - 3.8113443396226415).abs() < 1e-9);
        assert!(!opt.is_vertex);
        assert_eq!(opt.certificate, Certificate::GridPlusLocalRefinement);
        let check = p.evaluate(&opt.argmax).unwrap();
        assert!((opt.value - check).abs() < 1e-12);
    }

    #[test]
    fn box_search_agrees_with_enumeration_on_multiaffine_input() {
        let p = multiaffine_example();
        let opt = maximize_box(&p, None, 1e-10).unwrap();
        assert_eq!(opt.argmax, vec![0.0, 1.0]);
        assert!(opt.is_vertex);
        let reference = maximize_bangbang(|x| p.evaluate(x), 2, 1).unwrap();
        assert!((opt.value - reference.value).abs() < 1e-12);
    }

    #[test]
    fn reported_value_is_the_polynomial_at_the_argmax() {
        let p = quadratic_example();
        for density in [11, 51, 101] {
            let opt = maximize_box(&p, Some(density), 1e-9).unwrap();
            let v = p.evaluate(&opt.argmax).unwrap();
            assert!((opt.value - v).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let p = quadratic_example();
        assert!(maximize_box(&p, Some(1), 1e-9).is_err());
        assert!(maximize_box(&p, None, 0.0).is_err());
    }
}
