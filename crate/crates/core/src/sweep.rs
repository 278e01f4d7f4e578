//! Parameter sweeps and their CSV form.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Params, Policy};
use crate::sim::{self, SimConfig};
use crate::solver;

/// Column names of a sweep file, in order.
pub const CSV_HEADER: [&str; 18] = [
    "swept_param",
    "swept_value",
    "n",
    "lambda_e",
    "lambda_u",
    "lambda_r",
    "lambda",
    "policy",
    "f_solver",
    "x1_solver",
    "f_sim",
    "f_sim_stderr",
    "x1_sim",
    "x1_sim_stderr",
    "horizon",
    "warmup",
    "seed",
    "replications",
];

/// Significant digits used for every float written to a sweep file.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    N,
    Lambda,
    LambdaE,
    LambdaU,
    LambdaR,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::N => "n",
            SweepParam::Lambda => "lambda",
            SweepParam::LambdaE => "lambda_e",
            SweepParam::LambdaU => "lambda_u",
            SweepParam::LambdaR => "lambda_r",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: Params, value: f64) -> Result<Params> {
        let mut params = base;
        match self {
            SweepParam::N => {
                if value.fract() != 0.0 || value < 1.0 || value > u32::MAX as f64 {
                    return Err(Error::InvalidSweep(format!(
                        "n must be a positive integer, got {value}"
                    )));
                }
                params.n = value as usize;
            }
            SweepParam::Lambda => params.lambda = value,
            SweepParam::LambdaE => params.lambda_e = value,
            SweepParam::LambdaU => params.lambda_u = value,
            SweepParam::LambdaR => params.lambda_r = value,
        }
        params.validate()?;
        Ok(params)
    }

    /// Grid used when none is given: n over a few network sizes, rates
    /// log-spaced over [1e-2, 1e2] at four points per decade.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepParam::N => vec![2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0],
            _ => log_grid(1e-2, 1e2, 4),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "n" => SweepParam::N,
            "lambda" => SweepParam::Lambda,
            "lambda_e" | "lambda-e" => SweepParam::LambdaE,
            "lambda_u" | "lambda-u" => SweepParam::LambdaU,
            "lambda_r" | "lambda-r" => SweepParam::LambdaR,
            other => {
                return Err(Error::InvalidSweep(format!(
                    "unknown sweep parameter `{other}` (expected n, lambda, lambda_e, lambda_u or lambda_r)"
                )))
            }
        })
    }
}

/// `per_decade` log-spaced points per decade from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round() as usize;
    (0..=steps)
        .map(|i| {
            let exponent = lo.log10() + i as f64 / per_decade as f64;
            // Snap to 12 significant digits so grid values survive a CSV round trip.
            parse_float(&format_float(10f64.powf(exponent))).unwrap()
        })
        .collect()
}

/// Simulation settings applied at every point of a comparing sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub swept: SweepParam,
    pub grid: Vec<f64>,
    /// Everything except the swept parameter and the policy.
    pub base: Params,
    /// Policies evaluated at each grid point, in output order.
    pub policies: Vec<Policy>,
    /// Run the simulator at every point when set.
    pub sim: Option<SimSettings>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidSweep("grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSweep(
                "grid must be strictly increasing".into(),
            ));
        }
        if self.grid.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSweep(
                "grid values must be positive and finite".into(),
            ));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidSweep("no policy selected".into()));
        }
        for &value in &self.grid {
            self.swept.apply(self.base, value)?;
        }
        if let Some(sim) = &self.sim {
            SimConfig {
                params: self.base,
                horizon: sim.horizon,
                warmup: sim.warmup,
                seed: sim.seed,
                replications: sim.replications,
            }
            .validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimColumns {
    pub f_sim: f64,
    pub f_sim_stderr: f64,
    pub x1_sim: f64,
    pub x1_sim_stderr: f64,
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
    pub replications: usize,
}

/// One line of a sweep file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Empty for a stand-alone simulation row.
    pub swept_param: String,
    pub swept_value: Option<f64>,
    pub params: Params,
    pub f_solver: f64,
    pub x1_solver: f64,
    pub sim: Option<SimColumns>,
}

impl SweepRow {
    fn record(&self) -> Vec<String> {
        let p = &self.params;
        let opt = |v: Option<String>| v.unwrap_or_default();
        let sim = self.sim.as_ref();
        vec![
            self.swept_param.clone(),
            opt(self.swept_value.map(|v| format_swept(&self.swept_param, v))),
            p.n.to_string(),
            format_float(p.lambda_e),
            format_float(p.lambda_u),
            format_float(p.lambda_r),
            format_float(p.lambda),
            p.policy.to_string(),
            format_float(self.f_solver),
            format_float(self.x1_solver),
            opt(sim.map(|s| format_float(s.f_sim))),
            opt(sim.map(|s| format_float(s.f_sim_stderr))),
            opt(sim.map(|s| format_float(s.x1_sim))),
            opt(sim.map(|s| format_float(s.x1_sim_stderr))),
            opt(sim.map(|s| format_float(s.horizon))),
            opt(sim.map(|s| format_float(s.warmup))),
            opt(sim.map(|s| s.seed.to_string())),
            opt(sim.map(|s| s.replications.to_string())),
        ]
    }
}

fn format_swept(param: &str, value: f64) -> String {
    if param == "n" {
        format!("{}", value as u64)
    } else {
        format_float(value)
    }
}

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits, dropping
/// trailing zeros. Plain notation for moderate magnitudes, scientific
/// otherwise.
pub fn format_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let precision = SIGNIFICANT_DIGITS - 1;
    if (-5..15).contains(&magnitude) {
        // Round through scientific notation so the digit count is exact even
        // when rounding bumps the magnitude.
        let rounded: f64 = format!("{x:.precision$e}").parse().unwrap();
        let magnitude = rounded.abs().log10().floor() as i32;
        let decimals = (precision as i32 - magnitude).max(0) as usize;
        let text = format!("{rounded:.decimals$}");
        trim_zeros(text)
    } else {
        let text = format!("{x:.precision$e}");
        let (mantissa, exponent) = text.split_once('e').unwrap();
        format!("{}e{exponent}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(text: String) -> String {
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

fn parse_float(field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("`{field}` is not a number")))
}

fn parse_opt<T: FromStr>(field: &str) -> Result<Option<T>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::Csv(format!("cannot parse `{field}`")))
}

/// Solver values and, when `sim` is given, simulator values for one point.
pub fn evaluate_point(
    swept: Option<SweepParam>,
    swept_value: Option<f64>,
    params: Params,
    sim: Option<&SimSettings>,
) -> Result<SweepRow> {
    let chains = solver::solve(&params)?;
    let sim = sim
        .map(|s| {
            let config = SimConfig {
                params,
                horizon: s.horizon,
                warmup: s.warmup,
                seed: s.seed,
                replications: s.replications,
            };
            sim::run(&config).map(|est| SimColumns {
                f_sim: est.f_hat,
                f_sim_stderr: est.f_stderr,
                x1_sim: est.x1_hat,
                x1_sim_stderr: est.x1_stderr,
                horizon: s.horizon,
                warmup: s.warmup,
                seed: s.seed,
                replications: s.replications,
            })
        })
        .transpose()?;
    Ok(SweepRow {
        swept_param: swept.map(|p| p.as_str().to_string()).unwrap_or_default(),
        swept_value,
        params,
        f_solver: chains.f_value,
        x1_solver: chains.x1_value,
        sim,
    })
}

/// Evaluates every grid point for every policy. Points run in parallel;
/// rows come back in grid order, policies in the order given.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let jobs: Vec<(f64, Policy)> = spec
        .grid
        .iter()
        .flat_map(|&v| spec.policies.iter().map(move |&p| (v, p)))
        .collect();
    jobs.into_par_iter()
        .map(|(value, policy)| {
            let params = spec.swept.apply(spec.base.with_policy(policy), value)?;
            evaluate_point(Some(spec.swept), Some(value), params, spec.sim.as_ref())
        })
        .collect()
}

/// Writes the header and `rows`; the output ends with a newline.
pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// Reads a file produced by [`write_csv`]. The header must match exactly.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Csv(format!("unexpected header: {header:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let params = Params {
            n: field(2)
                .parse()
                .map_err(|_| Error::Csv(format!("bad n `{}`", field(2))))?,
            lambda_e: parse_float(field(3))?,
            lambda_u: parse_float(field(4))?,
            lambda_r: parse_float(field(5))?,
            lambda: parse_float(field(6))?,
            policy: field(7)
                .parse()
                .map_err(|e: Error| Error::Csv(e.to_string()))?,
        };
        let f_sim: Option<f64> = parse_opt(field(10))?;
        let sim = match f_sim {
            None => None,
            Some(f_sim) => {
                let required = |i: usize| -> Result<String> {
                    let v = field(i).trim();
                    if v.is_empty() {
                        Err(Error::Csv(format!("missing `{}`", CSV_HEADER[i])))
                    } else {
                        Ok(v.to_string())
                    }
                };
                Some(SimColumns {
                    f_sim,
                    f_sim_stderr: parse_float(&required(11)?)?,
                    x1_sim: parse_float(&required(12)?)?,
                    x1_sim_stderr: parse_float(&required(13)?)?,
                    horizon: parse_float(&required(14)?)?,
                    warmup: parse_float(&required(15)?)?,
                    seed: parse_opt(&required(16)?)?.unwrap(),
                    replications: parse_opt(&required(17)?)?.unwrap(),
                })
            }
        };
        rows.push(SweepRow {
            swept_param: field(0).to_string(),
            swept_value: parse_opt(field(1))?,
            params,
            f_solver: parse_float(field(8))?,
            x1_solver: parse_float(field(9))?,
            sim,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(2.0), "2");
        assert_eq!(format_float(1e6), "1000000");
        assert_eq!(format_float(20.0 / 54.0), "0.37037037037");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(28.0 / 54.0), "0.518518518519");
        assert_eq!(format_float(9.9999999999999e-1), "1");
        assert_eq!(format_float(1.5e-9), "1.5e-9");
        assert_eq!(format_float(-2.5), "-2.5");
        assert_eq!(format_float(0.0), "0");
    }

    #[test]
    fn default_grids() {
        let grid = SweepParam::Lambda.default_grid();
        assert_eq!(grid.len(), 17);
        assert_eq!(grid[0], 0.01);
        assert_eq!(grid[4], 0.1);
        assert_eq!(*grid.last().unwrap(), 100.0);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(SweepParam::N.default_grid()[0], 2.0);
    }

    #[test]
    fn sweep_param_names() {
        for p in [
            SweepParam::N,
            SweepParam::Lambda,
            SweepParam::LambdaE,
            SweepParam::LambdaU,
            SweepParam::LambdaR,
        ] {
            assert_eq!(p.as_str().parse::<SweepParam>().unwrap(), p);
        }
        assert_eq!(
            "lambda-r".parse::<SweepParam>().unwrap(),
            SweepParam::LambdaR
        );
        assert!("mu".parse::<SweepParam>().is_err());
    }

    #[test]
    fn n_must_be_integral() {
        let base = Params::baseline(10, Policy::ReliabilityFirst);
        assert!(SweepParam::N.apply(base, 2.5).is_err());
        assert_eq!(SweepParam::N.apply(base, 7.0).unwrap().n, 7);
    }

    #[test]
    fn spec_validation() {
        let base = Params::baseline(10, Policy::ReliabilityFirst);
        let spec = SweepSpec {
            swept: SweepParam::Lambda,
            grid: vec![0.1, 1.0],
            base,
            policies: vec![Policy::ReliabilityFirst],
            sim: None,
        };
        assert!(spec.validate().is_ok());
        assert!(SweepSpec {
            grid: vec![],
            ..spec.clone()
        }
        .validate()
        .is_err());
        assert!(SweepSpec {
            grid: vec![1.0, 1.0],
            ..spec.clone()
        }
        .validate()
        .is_err());
        assert!(SweepSpec {
            grid: vec![2.0, 1.0],
            ..spec.clone()
        }
        .validate()
        .is_err());
        assert!(SweepSpec {
            policies: vec![],
            ..spec.clone()
        }
        .validate()
        .is_err());
        let bad_sim = SimSettings {
            horizon: 10.0,
            warmup: 10.0,
            seed: 0,
            replications: 1,
        };
        assert!(SweepSpec {
            sim: Some(bad_sim),
            ..spec
        }
        .validate()
        .is_err());
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let text = "swept_param,swept_value\nn,2\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn formatted_floats_keep_twelve_digits(x in 1e-300f64..1e300) {
            let back: f64 = format_float(x).parse().unwrap();
            prop_assert!(((back - x) / x).abs() <= 5e-12);
        }
    }
}
