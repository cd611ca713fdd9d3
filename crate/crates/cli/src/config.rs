//! Run configuration: one optional JSON file merged with command-line flags (flags win).

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use borel_unfold::acceptance::A9_SEED;
use borel_unfold::applications::{LinearSystemSpec, ScalarPoly};
use borel_unfold::{DirectionRange, PowerSeries1, SolverConfig, SqrtEps, SystemSpec, VecPoly, C64};
use clap::Args;
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// JSON run configuration; relative input paths inside it resolve against its directory.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// √ε as "RE,IM".
    #[arg(long, value_name = "RE,IM", allow_hyphen_values = true)]
    pub sqrt_eps: Option<String>,
    /// β₁, the lower end of the direction range (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_lo: Option<f64>,
    /// β₂, the upper end of the direction range (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_hi: Option<f64>,
    /// Angular safety margin η.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Radius ρ of the admissible √ε sector.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Strip margin Λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of sampled directions.
    #[arg(long)]
    pub dirs: Option<usize>,
    /// Line half width T.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Nodes per line (odd).
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Fixed-point tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fixed-point iteration cap.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

/// A file input given either as a path or inline.
#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
enum Source {
    Path(String),
    Inline(Value),
}

#[derive(Deserialize, Debug)]
struct DirectionRangeJson {
    beta1: f64,
    beta2: f64,
    eta: f64,
    rho: f64,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    spec: Option<Source>,
    linear_system: Option<Source>,
    series: Option<Source>,
    sqrt_eps: Option<[f64; 2]>,
    direction_range: Option<DirectionRangeJson>,
    lambda: Option<f64>,
    dirs: Option<usize>,
    half_width: Option<f64>,
    nodes: Option<usize>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    out: Option<String>,
    seed: Option<u64>,
    alpha: Option<f64>,
    x: Option<Vec<[f64; 2]>>,
    nu: Option<Vec<f64>>,
    pade_order: Option<usize>,
    ray_length: Option<f64>,
    quad_panels: Option<usize>,
}

/// Raw series for `borel-sum`, optionally with the ODE x²y′ = a·y + Σ b_k x^k used for residuals.
#[derive(Clone, Debug)]
pub struct SeriesInput {
    pub series: PowerSeries1,
    pub ode: Option<(C64, Vec<C64>)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesJson {
    series: Vec<[f64; 2]>,
    ode: Option<OdeJson>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OdeJson {
    a: [f64; 2],
    #[serde(default)]
    b: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalarPolyJson {
    x_degree: usize,
    eps_degree: usize,
    coeffs: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearSystemJson {
    n: usize,
    lambda0: Vec<Vec<[f64; 2]>>,
    lambda1: Vec<Vec<[f64; 2]>>,
    r: Vec<Vec<ScalarPolyJson>>,
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: Option<SystemSpec>,
    pub linear: Option<LinearSystemSpec>,
    pub series: Option<SeriesInput>,
    pub sqrt_eps: SqrtEps,
    pub dr: DirectionRange,
    pub solver: SolverConfig,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub alpha: Option<f64>,
    pub x: Option<Vec<C64>>,
    pub nu: Option<Vec<f64>>,
    pub pade_order: usize,
    pub ray_length: Option<f64>,
    pub quad_panels: usize,
}

fn pair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn parse_pair(text: &str) -> Result<C64, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::Config(format!("expected RE,IM, got {text:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let re = parts[0].parse::<f64>().map_err(|_| bad())?;
    let im = parts[1].parse::<f64>().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

fn read_source(src: &Source, base: &Path, what: &str) -> Result<String, CliError> {
    match src {
        Source::Path(p) => {
            let path = base.join(p);
            fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{what} {}: {e}", path.display())))
        }
        Source::Inline(v) => Ok(v.to_string()),
    }
}

fn parse_series(text: &str) -> Result<SeriesInput, CliError> {
    let raw: SeriesJson = serde_json::from_str(text).map_err(|e| CliError::Config(format!("series input: {e}")))?;
    let series = PowerSeries1::new(raw.series.into_iter().map(pair).collect())?;
    let ode = raw.ode.map(|o| (pair(o.a), o.b.into_iter().map(pair).collect()));
    Ok(SeriesInput { series, ode })
}

fn parse_linear(text: &str) -> Result<LinearSystemSpec, CliError> {
    let raw: LinearSystemJson =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("linear system input: {e}")))?;
    let mut r = Vec::new();
    for row in raw.r {
        let mut out_row = Vec::new();
        for p in row {
            let need = (p.x_degree + 1) * (p.eps_degree + 1);
            if p.coeffs.len() != need {
                return Err(CliError::Config(format!("R entry needs {need} coefficients, got {}", p.coeffs.len())));
            }
            let poly: ScalarPoly = VecPoly {
                dim: 1,
                x_deg: p.x_degree,
                eps_deg: p.eps_degree,
                coeffs: p.coeffs.into_iter().map(pair).collect(),
            };
            out_row.push(poly);
        }
        r.push(out_row);
    }
    let to_c = |v: Vec<Vec<[f64; 2]>>| -> Vec<Vec<C64>> { v.into_iter().map(|c| c.into_iter().map(pair).collect()).collect() };
    let lin = LinearSystemSpec { n: raw.n, lambda0: to_c(raw.lambda0), lambda1: to_c(raw.lambda1), r };
    lin.validate()?;
    Ok(lin)
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

impl RunConfig {
    /// Reads the config file (if any), applies the flags and validates the result.
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
                let file: ConfigFile =
                    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (file, base)
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };
        let spec = match &file.spec {
            Some(src) => Some(SystemSpec::from_json_str(&read_source(src, &base, "spec")?)?),
            None => None,
        };
        let linear = match &file.linear_system {
            Some(src) => Some(parse_linear(&read_source(src, &base, "linear system")?)?),
            None => None,
        };
        let series = match &file.series {
            Some(src) => Some(parse_series(&read_source(src, &base, "series")?)?),
            None => None,
        };

        let s = match &args.sqrt_eps {
            Some(text) => parse_pair(text)?,
            None => file.sqrt_eps.map(pair).unwrap_or_default(),
        };
        check(s.re.is_finite() && s.im.is_finite(), "√ε must be finite")?;

        let d = file.direction_range.unwrap_or(DirectionRangeJson { beta1: PI / 4.0, beta2: 3.0 * PI / 4.0, eta: 0.1, rho: 0.5 });
        let dr = DirectionRange::new(
            args.alpha_lo.unwrap_or(d.beta1),
            args.alpha_hi.unwrap_or(d.beta2),
            args.eta.unwrap_or(d.eta),
            args.rho.unwrap_or(d.rho),
        )
        .map_err(|e| CliError::Config(e.to_string()))?;

        let mut solver = SolverConfig::default();
        solver.lambda = args.lambda.or(file.lambda).unwrap_or(solver.lambda);
        solver.dirs = args.dirs.or(file.dirs).unwrap_or(solver.dirs);
        solver.half_width = args.half_width.or(file.half_width).or(solver.half_width);
        solver.nodes = args.nodes.or(file.nodes).unwrap_or(solver.nodes);
        solver.tol = args.tol.or(file.tol).unwrap_or(solver.tol);
        solver.max_iter = args.max_iter.or(file.max_iter).unwrap_or(solver.max_iter);
        check(solver.lambda > 0.0 && solver.lambda.is_finite(), "lambda must be positive")?;
        check(solver.dirs >= 1, "dirs must be at least 1")?;
        check(solver.half_width.is_none_or(|t| t > 0.0 && t.is_finite()), "half_width must be positive")?;
        check(solver.nodes >= 9 && solver.nodes % 2 == 1, "nodes must be odd and at least 9")?;
        check(solver.tol > 0.0 && solver.tol.is_finite(), "tol must be positive")?;
        check(solver.max_iter >= 1, "max_iter must be at least 1")?;

        let pade_order = file.pade_order.unwrap_or(4);
        let quad_panels = file.quad_panels.unwrap_or(64);
        check(quad_panels >= 1, "quad_panels must be at least 1")?;
        if let Some(l) = file.ray_length {
            check(l > 0.0 && l.is_finite(), "ray_length must be positive")?;
        }
        if let Some(nu) = &file.nu {
            check(nu.iter().all(|v| *v >= 0.0 && v.is_finite()), "nu values must be finite and non-negative")?;
        }
        let x: Option<Vec<C64>> = file.x.map(|v| v.into_iter().map(pair).collect());
        if let Some(x) = &x {
            check(x.iter().all(|z| z.re.is_finite() && z.im.is_finite()), "x samples must be finite")?;
        }

        Ok(RunConfig {
            spec,
            linear,
            series,
            sqrt_eps: SqrtEps(s),
            dr,
            solver,
            out: args.out.clone().or(file.out.map(|o| base.join(o))),
            seed: args.seed.or(file.seed).unwrap_or(A9_SEED),
            alpha: file.alpha,
            x,
            nu: file.nu,
            pade_order,
            ray_length: file.ray_length,
            quad_panels,
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn require_spec(&self) -> Result<&SystemSpec, CliError> {
        self.spec.as_ref().ok_or_else(|| CliError::Config("this command needs \"spec\" in the config".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_parse_with_signs() {
        assert_eq!(parse_pair("-0.1, 2e-2").unwrap(), C64::new(-0.1, 0.02));
        assert!(parse_pair("0.1").is_err());
        assert!(parse_pair("a,b").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let dir = std::env::temp_dir().join(format!("borel-unfold-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        fs::write(&path, r#"{"sqrt_eps": [0.1, 0.0], "lambda": 2.0, "nodes": 257}"#).unwrap();
        let args = CommonArgs { config: Some(path), lambda: Some(1.5), ..Default::default() };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.solver.lambda, 1.5);
        assert_eq!(cfg.solver.nodes, 257);
        assert_eq!(cfg.sqrt_eps.value(), C64::new(0.1, 0.0));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let raw: Result<ConfigFile, _> = serde_json::from_str(r#"{"lamda": 1.0}"#);
        assert!(raw.is_err());
    }
}
