//! Parameter sweeps emitted as CSV, plus the figure presets and their checks.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num::BigRational;
use rayon::prelude::*;

use crate::combinatorics::to_f64;
use crate::error::{Error, Result};
use crate::gram::{closed_form_spectrum_exact, ProblemInstance};
use crate::protocols::{min_error_success, unambiguous_success};
use crate::universal::{
    average_min_error_curve, universal_asymptote, universal_success, UniversalInstance,
    DEFAULT_QUADRATURE_POINTS,
};

pub const CSV_HEADER: &str = "n,k,c_or_d,protocol,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    MinErr,
    Unambiguous,
    Universal,
    Average,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::MinErr => "minerr",
            Protocol::Unambiguous => "unambiguous",
            Protocol::Universal => "universal",
            Protocol::Average => "average",
        }
    }

    /// Name of the companion large-n row.
    pub fn limit_name(self) -> &'static str {
        match self {
            Protocol::MinErr => "minerr_limit",
            Protocol::Unambiguous => "unambiguous_limit",
            Protocol::Universal | Protocol::Average => "universal_limit",
        }
    }

    /// Whether the third grid axis is the local dimension `d` rather than `c`.
    pub fn uses_dimension(self) -> bool {
        matches!(self, Protocol::Universal | Protocol::Average)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minerr" => Ok(Protocol::MinErr),
            "unambiguous" => Ok(Protocol::Unambiguous),
            "universal" => Ok(Protocol::Universal),
            "average" => Ok(Protocol::Average),
            other => Err(Error::InvalidParameter(format!("unknown protocol '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Minimum-error success for k = 2, 3 at c = 1/2 against n.
    Fig2,
    /// Averaged known-states and universal success for d = 2, k = 1.
    Fig3,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            other => Err(Error::InvalidParameter(format!("unknown figure '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub protocols: Vec<Protocol>,
    pub n_values: Vec<u32>,
    pub k_values: Vec<u32>,
    /// Overlaps `c` or dimensions `d`, depending on the protocol.
    pub params: Vec<f64>,
    /// Evaluate spectra in rational arithmetic at the binary value of `c`.
    pub exact: bool,
    /// Also emit the large-n limit row for each grid point.
    pub include_limits: bool,
}

impl SweepConfig {
    pub fn figure(figure: Figure) -> Self {
        match figure {
            Figure::Fig2 => SweepConfig {
                protocols: vec![Protocol::MinErr],
                n_values: (5..=400).collect(),
                k_values: vec![2, 3],
                params: vec![0.5],
                exact: false,
                include_limits: true,
            },
            Figure::Fig3 => SweepConfig {
                protocols: vec![Protocol::Average, Protocol::Universal],
                n_values: (2..=60).collect(),
                k_values: vec![1],
                params: vec![2.0],
                exact: false,
                include_limits: true,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.protocols.is_empty() || self.n_values.is_empty() || self.k_values.is_empty() || self.params.is_empty() {
            return Err(Error::InvalidParameter("sweep ranges must be non-empty".into()));
        }
        for p in &self.protocols {
            for &v in &self.params {
                if p.uses_dimension() {
                    if v < 2.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                        return Err(Error::InvalidParameter(format!("dimension {v} must be an integer >= 2")));
                    }
                } else if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!("overlap c = {v} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// Parses `A:B:STEP` (inclusive) or a single value.
pub fn parse_range(text: &str) -> Result<Vec<u32>> {
    let bad = || Error::InvalidParameter(format!("bad range '{text}', expected A:B:STEP"));
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<u32> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
    let (a, b, step) = match nums.as_slice() {
        [a] => (*a, *a, 1),
        [a, b] => (*a, *b, 1),
        [a, b, s] => (*a, *b, *s),
        _ => return Err(bad()),
    };
    if step == 0 || b < a {
        return Err(bad());
    }
    Ok((a..=b).step_by(step as usize).collect())
}

/// Parses `v1,v2,...`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidParameter(format!("bad grid value '{v}'")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: u32,
    pub k: u32,
    pub param: f64,
    pub uses_dimension: bool,
    pub protocol: &'static str,
    pub value: f64,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let param = if self.uses_dimension {
            format!("{}", self.param as u32)
        } else {
            format!("{:.11e}", self.param)
        };
        format!("{},{},{},{},{:.11e}", self.n, self.k, param, self.protocol, self.value)
    }
}

fn min_error_exact(n: u32, k: u32, c: f64) -> Result<f64> {
    let c_exact = BigRational::from_float(c)
        .ok_or_else(|| Error::InvalidParameter(format!("overlap {c} is not finite")))?;
    let spectrum = closed_form_spectrum_exact(n, k, &(&c_exact * &c_exact))?;
    let size: f64 = spectrum.iter().map(|e| e.multiplicity as f64).sum();
    let amp: f64 = spectrum
        .iter()
        .map(|e| e.multiplicity as f64 / size * to_f64(&e.eigenvalue).max(0.0).sqrt())
        .sum();
    Ok(amp * amp)
}

fn evaluate(protocol: Protocol, n: u32, k: u32, param: f64, exact: bool) -> Result<(f64, f64)> {
    match protocol {
        Protocol::MinErr => {
            let inst = ProblemInstance::new(n, k, param)?;
            let value = if exact { min_error_exact(n, k, param)? } else { min_error_success(&inst)?.value };
            Ok((value, (1.0 - param * param).powi(k as i32)))
        }
        Protocol::Unambiguous => {
            let inst = ProblemInstance::new(n, k, param)?;
            let value = unambiguous_success(&inst)?.value;
            Ok((value, (1.0 - param * param).powi(k as i32)))
        }
        Protocol::Universal => {
            let d = param as u32;
            let value = universal_success(&UniversalInstance::new(n, k, d)?)?;
            Ok((value, universal_asymptote(k, d)?))
        }
        Protocol::Average => {
            let d = param as u32;
            UniversalInstance::new(n, k, d)?;
            let value = average_min_error_curve(n, k, d, DEFAULT_QUADRATURE_POINTS)?;
            Ok((value, universal_asymptote(k, d)?))
        }
    }
}

fn applicable(protocol: Protocol, n: u32, k: u32) -> bool {
    if protocol.uses_dimension() {
        2 * k <= n
    } else {
        k <= n
    }
}

/// Evaluates every grid point in parallel; rows come back in grid order
/// (protocol, k, parameter, n). Points outside a protocol's domain are skipped.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut points = Vec::new();
    for &protocol in &config.protocols {
        for &k in &config.k_values {
            for &param in &config.params {
                for &n in &config.n_values {
                    if applicable(protocol, n, k) {
                        points.push((protocol, n, k, param));
                    } else {
                        log::debug!("skipping {protocol} at n = {n}, k = {k}");
                    }
                }
            }
        }
    }
    let evaluated: Vec<Vec<SweepRow>> = points
        .par_iter()
        .map(|&(protocol, n, k, param)| {
            let (value, limit) = evaluate(protocol, n, k, param, config.exact)?;
            let base = SweepRow {
                n,
                k,
                param,
                uses_dimension: protocol.uses_dimension(),
                protocol: protocol.name(),
                value,
            };
            let mut rows = vec![base.clone()];
            if config.include_limits {
                rows.push(SweepRow { protocol: protocol.limit_name(), value: limit, ..base });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<SweepRow> = evaluated.into_iter().flatten().collect();
    // a limit shared by two protocols is listed once per grid point
    let mut seen = std::collections::HashSet::new();
    rows.retain(|r| {
        !r.protocol.ends_with("_limit") || seen.insert((r.protocol, r.n, r.k, r.param.to_bits()))
    });
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv())?;
    }
    out.flush()
}

/// One named check with its residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub instance: String,
    pub residual: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, instance: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            instance: instance.into(),
            residual,
            passed: residual.is_finite() && residual <= tolerance,
        }
    }

    pub fn from_result(name: impl Into<String>, instance: impl Into<String>, result: Result<(f64, f64)>) -> Self {
        match result {
            Ok((residual, tolerance)) => Self::new(name, instance, residual, tolerance),
            Err(e) => Self {
                name: name.into(),
                instance: format!("{} error={e}", instance.into()),
                residual: f64::INFINITY,
                passed: false,
            },
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {} {} {:.3e}", self.name, self.instance, self.residual)
    }
}

fn series<'a>(rows: &'a [SweepRow], protocol: &str, k: u32) -> Vec<&'a SweepRow> {
    let mut out: Vec<&SweepRow> = rows.iter().filter(|r| r.protocol == protocol && r.k == k).collect();
    out.sort_by_key(|r| r.n);
    out
}

/// Largest increase between consecutive points (zero for a non-increasing series).
fn worst_rise(values: &[&SweepRow]) -> f64 {
    values.windows(2).map(|w| (w[1].value - w[0].value).max(0.0)).fold(0.0, f64::max)
}

fn worst_drop(values: &[&SweepRow]) -> f64 {
    values.windows(2).map(|w| (w[0].value - w[1].value).max(0.0)).fold(0.0, f64::max)
}

fn worst_deviation(values: &[&SweepRow], target: f64) -> f64 {
    values.iter().map(|r| (r.value - target).abs()).fold(0.0, f64::max)
}

const SHAPE_TOLERANCE: f64 = 1e-12;

/// Shape checks on a figure sweep: monotone curves and constant limit columns.
pub fn validate_figure(figure: Figure, rows: &[SweepRow]) -> Vec<Check> {
    let mut checks = Vec::new();
    let empty = |name: &str| Check { name: name.into(), instance: "no rows".into(), residual: f64::INFINITY, passed: false };
    match figure {
        Figure::Fig2 => {
            for (k, limit) in [(2u32, 0.5625), (3, 0.421875)] {
                let curve = series(rows, "minerr", k);
                let dashed = series(rows, "minerr_limit", k);
                if curve.is_empty() || dashed.is_empty() {
                    checks.push(empty(&format!("fig2_k{k}")));
                    continue;
                }
                let inst = format!("k={k},c=0.5");
                checks.push(Check::new("fig2_minerr_nonincreasing", &inst, worst_rise(&curve), SHAPE_TOLERANCE));
                checks.push(Check::new("fig2_limit_constant", &inst, worst_deviation(&dashed, limit), 0.0));
                let below = curve.iter().map(|r| (limit - r.value).max(0.0)).fold(0.0, f64::max);
                checks.push(Check::new("fig2_minerr_above_limit", &inst, below, 0.0));
            }
        }
        Figure::Fig3 => {
            let k = 1;
            let average = series(rows, "average", k);
            let universal = series(rows, "universal", k);
            let dashed = series(rows, "universal_limit", k);
            if average.is_empty() || universal.is_empty() || dashed.is_empty() {
                checks.push(empty("fig3"));
                return checks;
            }
            let inst = "k=1,d=2";
            checks.push(Check::new("fig3_average_nonincreasing", inst, worst_rise(&average), SHAPE_TOLERANCE));
            let grown: Vec<&SweepRow> = universal.iter().copied().filter(|r| r.n >= 2 * k + 2).collect();
            checks.push(Check::new("fig3_universal_nondecreasing", inst, worst_drop(&grown), SHAPE_TOLERANCE));
            let at_two = universal.iter().find(|r| r.n == 2).map_or(f64::INFINITY, |r| (r.value - 0.5).abs());
            checks.push(Check::new("fig3_universal_n2", inst, at_two, SHAPE_TOLERANCE));
            checks.push(Check::new("fig3_limit_constant", inst, worst_deviation(&dashed, 0.5), 0.0));
            let gap = average
                .iter()
                .filter_map(|a| universal.iter().find(|u| u.n == a.n).map(|u| (u.value - a.value).max(0.0)))
                .fold(0.0, f64::max);
            checks.push(Check::new("fig3_average_above_universal", inst, gap, SHAPE_TOLERANCE));
        }
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_and_grid_parsing() {
        assert_eq!(parse_range("5:9:2").unwrap(), vec![5, 7, 9]);
        assert_eq!(parse_range("4").unwrap(), vec![4]);
        assert_eq!(parse_range("2:4").unwrap(), vec![2, 3, 4]);
        assert!(parse_range("9:5:1").is_err());
        assert!(parse_range("1:5:0").is_err());
        assert!(parse_range("a:b").is_err());
        assert_eq!(parse_grid("0.1, 0.5").unwrap(), vec![0.1, 0.5]);
        assert!(parse_grid("0.1,x").is_err());
        assert!("bogus".parse::<Protocol>().is_err());
        assert_eq!("average".parse::<Protocol>().unwrap(), Protocol::Average);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SweepConfig::figure(Figure::Fig2);
        cfg.params = vec![1.5];
        assert!(cfg.validate().is_err());
        let mut cfg = SweepConfig::figure(Figure::Fig3);
        cfg.params = vec![2.5];
        assert!(cfg.validate().is_err());
        cfg.params = vec![];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_formatting_is_fixed() {
        let row = SweepRow { n: 4, k: 2, param: 0.5, uses_dimension: false, protocol: "minerr", value: 1.0 / 3.0 };
        assert_eq!(row.to_csv(), "4,2,5.00000000000e-1,minerr,3.33333333333e-1");
        let row = SweepRow { n: 2, k: 1, param: 2.0, uses_dimension: true, protocol: "universal", value: 0.5 };
        assert_eq!(row.to_csv(), "2,1,2,universal,5.00000000000e-1");
    }

    #[test]
    fn figure_two_sweep() {
        let rows = run_sweep(&SweepConfig::figure(Figure::Fig2)).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 396);
        let checks = validate_figure(Figure::Fig2, &rows);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        let again = run_sweep(&SweepConfig::figure(Figure::Fig2)).unwrap();
        assert_eq!(rows, again);
    }

    #[test]
    fn figure_three_sweep() {
        let rows = run_sweep(&SweepConfig::figure(Figure::Fig3)).unwrap();
        // average, its limit, universal (limit deduplicated)
        assert_eq!(rows.len(), 3 * 59);
        let checks = validate_figure(Figure::Fig3, &rows);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn exact_mode_agrees_with_float_mode() {
        let mut cfg = SweepConfig::figure(Figure::Fig2);
        cfg.n_values = (5..=30).collect();
        let float = run_sweep(&cfg).unwrap();
        cfg.exact = true;
        let exact = run_sweep(&cfg).unwrap();
        for (a, b) in float.iter().zip(&exact) {
            assert!((a.value - b.value).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_detects_a_broken_curve() {
        let mut rows = run_sweep(&SweepConfig::figure(Figure::Fig2)).unwrap();
        let idx = rows.iter().position(|r| r.protocol == "minerr" && r.n == 50).unwrap();
        rows[idx].value += 0.1;
        assert!(validate_figure(Figure::Fig2, &rows).iter().any(|c| !c.passed));
        assert!(validate_figure(Figure::Fig3, &rows).iter().any(|c| !c.passed));
    }

    #[test]
    fn out_of_domain_points_are_skipped() {
        let cfg = SweepConfig {
            protocols: vec![Protocol::Universal, Protocol::Unambiguous],
            n_values: vec![2, 3, 4],
            k_values: vec![2],
            params: vec![2.0],
            exact: false,
            include_limits: false,
        };
        let err = run_sweep(&cfg);
        // 2.0 is not a valid overlap for the unambiguous protocol
        assert!(err.is_err());
        let cfg = SweepConfig { protocols: vec![Protocol::Universal], ..cfg };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![4]);
    }
}
