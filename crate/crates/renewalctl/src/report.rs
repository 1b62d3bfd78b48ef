//! Report rendering. The human-readable report prints rounded values; every
//! CSV cell prints in shortest round-trip form, so rereading a file
//! reconstructs the numbers bit for bit and identical runs produce identical
//! bytes.

use crate::fail::{io_fail, CliResult};
use renewal_core::optimizer::{Certificate, Optimum};
use renewal_core::polyfit::ProfitPolynomial;
use renewal_core::solver::Trajectory;
use renewal_core::Population;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// `digits` significant digits; plain decimal notation within a sensible
/// exponent window, scientific outside it. Trailing zeros are trimmed.
pub fn sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if exp < -4 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, v);
        match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{e}", trim_zeros(mantissa)),
            None => s,
        }
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sig6(v: f64) -> String {
    sig(v, 6)
}

/// One monomial in report notation: `1`, `eta_2`, `eta_1*eta_2`, `eta_1^2`.
pub fn monomial(variables: &[String], exponents: &[u32]) -> String {
    let mut out = String::new();
    for (name, &e) in variables.iter().zip(exponents) {
        if e == 0 {
            continue;
        }
        if !out.is_empty() {
            out.push('*');
        }
        out.push_str(name);
        if e > 1 {
            let _ = write!(out, "^{e}");
        }
    }
    if out.is_empty() {
        out.push('1');
    }
    out
}

pub fn certificate_name(c: Certificate) -> &'static str {
    match c {
        Certificate::VertexEnumerationExhaustive => "vertex-enumeration-exhaustive",
        Certificate::GridPlusLocalRefinement => "grid-plus-local-refinement",
    }
}

/// Creates the directory and tracks every file written into it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| io_fail(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, content: &str) -> CliResult<()> {
        let path = self.root.join(name);
        std::fs::write(&path, content).map_err(|e| io_fail(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn summary(&self) -> String {
        self.written
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Population totals per time node: `t,juveniles,sale,brood`.
pub fn totals_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,juveniles,sale,brood\n");
    let j = traj.totals(Population::Juvenile);
    let s = traj.totals(Population::Sale);
    let r = traj.totals(Population::Brood);
    for k in 0..traj.time_nodes() {
        let _ = writeln!(out, "{},{},{},{}", node_time(traj, k), j[k], s[k], r[k]);
    }
    out
}

/// Snapshots are strided, so node times come from the step width; the last
/// node lands exactly on the horizon.
fn node_time(traj: &Trajectory, k: usize) -> f64 {
    if k == traj.steps() {
        traj.horizon()
    } else {
        traj.dt() * k as f64
    }
}

/// Pre-sale boundary trace and applied retention at each sell age:
/// `t,trace_1,theta_1,...`.
pub fn trace_csv(traj: &Trajectory) -> CliResult<String> {
    let mut out = String::from("t");
    for i in 0..traj.sell_age_count() {
        let _ = write!(out, ",trace_{0},theta_{0}", i + 1);
    }
    out.push('\n');
    let columns: Vec<(&[f64], &[f64])> = (0..traj.sell_age_count())
        .map(|i| Ok((traj.trace(i)?, traj.theta_applied(i)?)))
        .collect::<renewal_core::Result<_>>()?;
    for k in 0..traj.time_nodes() {
        let _ = write!(out, "{}", node_time(traj, k));
        for (trace, theta) in &columns {
            let _ = write!(out, ",{},{}", trace[k], theta[k]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// One row per term: exponent columns named after the variables, then the
/// coefficient.
pub fn polynomial_csv(poly: &ProfitPolynomial) -> String {
    let mut out = poly.variables().join(",");
    out.push_str(",coefficient\n");
    for (expo, coeff) in poly.terms() {
        for e in expo {
            let _ = write!(out, "{e},");
        }
        let _ = writeln!(out, "{coeff}");
    }
    out
}

/// `name,value` rows: the argmax coordinates, then the value and the
/// certification facts.
pub fn optimum_csv(poly: &ProfitPolynomial, opt: &Optimum) -> String {
    let mut out = String::from("name,value\n");
    for (name, x) in poly.variables().iter().zip(&opt.argmax) {
        let _ = writeln!(out, "{name},{x}");
    }
    let _ = writeln!(out, "value,{}", opt.value);
    let _ = writeln!(out, "is_vertex,{}", opt.is_vertex);
    let _ = writeln!(out, "certificate,{}", certificate_name(opt.certificate));
    out
}

/// Held-out diagnostics: the probe point, both profits and the gap.
pub fn residuals_csv(
    variables: &[String],
    points: &[Vec<f64>],
    direct: &[f64],
    predicted: &[f64],
) -> String {
    let mut out = String::from("index,");
    out.push_str(&variables.join(","));
    out.push_str(",direct,predicted,abs_error\n");
    for (k, p) in points.iter().enumerate() {
        let _ = write!(out, "{}", k + 1);
        for x in p {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            direct[k],
            predicted[k],
            (direct[k] - predicted[k]).abs()
        );
    }
    out
}

/// Polynomial term table for the human report.
pub fn polynomial_lines(poly: &ProfitPolynomial) -> Vec<String> {
    let names: Vec<String> = poly
        .terms()
        .map(|(expo, _)| monomial(poly.variables(), expo))
        .collect();
    let width = names.iter().map(|n| n.len()).max().unwrap_or(1);
    poly.terms()
        .zip(names)
        .map(|((_, coeff), name)| format!("  {name:width$}  {:>12}", sig6(coeff)))
        .collect()
}
