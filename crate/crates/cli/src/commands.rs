//! The five subcommands. Each computes everything in memory and writes its
//! artifacts only after the last fallible step.

use std::f64::consts::PI;

use borel_unfold::acceptance::{
    confluence_points, linear_forcing_exact_dir, linear_forcing_system, run_one_seeded, suite_ok, CriterionReport,
    A5_LINEAR_TOL, CRITERIA, KNOWN_UNATTAINABLE,
};
use borel_unfold::applications::{
    assemble_t, borel_pade_sum, confluence_table, normalization_residual, ode_residual, riccati_reduce,
};
use borel_unfold::geometry::{admissible_alphas, inverse_time};
use borel_unfold::solver::{conjugate_values, solve_with_retries};
use borel_unfold::{CenterManifold, DirectionRange, OmegaSolution, SheetPoint, SqrtEps, StripFunction, SystemSpec, C64};
use serde_json::{json, Map, Value};

use crate::config::{RunConfig, SeriesInput};
use crate::error::CliError;
use crate::output::{complex_json, num, sha256_hex, Artifacts};

fn dr_json(dr: &DirectionRange) -> Value {
    json!({ "beta1": dr.beta1, "beta2": dr.beta2, "eta": dr.eta, "rho": dr.rho })
}

fn spec_hash(spec: &SystemSpec) -> String {
    sha256_hex(spec.to_json_string().as_bytes())
}

/// Points t = e^{−iα}(r + iv) spread across the strip of direction α, mapped to x.
fn default_cloud(s: SqrtEps, alpha: f64, lambda: f64, vs: &[f64]) -> Result<Vec<SheetPoint>, CliError> {
    let rot = C64::from_polar(1.0, -alpha);
    let rs: Vec<f64> = if s.is_zero() {
        (1..=5).map(|k| lambda + k as f64).collect()
    } else {
        let w = s.strip_width(alpha);
        (1..=5).map(|k| lambda + (w - 2.0 * lambda) * k as f64 / 6.0).collect()
    };
    let mut out = Vec::new();
    for r in rs {
        for &v in vs {
            out.push(inverse_time(rot * C64::new(r, v), s)?);
        }
    }
    Ok(out)
}

fn middle_direction(s: SqrtEps, dr: &DirectionRange) -> Result<f64, CliError> {
    let iv = admissible_alphas(s, dr)?;
    if iv.is_empty() {
        return Err(borel_unfold::Error::EmptyAdmissible.into());
    }
    Ok(iv.midpoint())
}

fn value_columns(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).flat_map(|i| [format!("re_{prefix}{i}"), format!("im_{prefix}{i}")]).collect()
}

fn push_values(row: &mut Vec<String>, v: &[C64]) {
    for z in v {
        row.push(num(z.re));
        row.push(num(z.im));
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn base_meta(cfg: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("sqrt_eps".into(), complex_json(cfg.sqrt_eps.value()));
    m.insert("direction_range".into(), dr_json(&cfg.dr));
    m.insert("seed".into(), json!(cfg.seed));
    m
}

fn solver_meta(m: &mut Map<String, Value>, sol: &OmegaSolution) {
    m.insert(
        "solver".into(),
        json!({
            "lambda": sol.grid.lambda,
            "directions": sol.grid.directions,
            "half_width": sol.grid.half_width,
            "nodes": sol.grid.n,
            "iterations": sol.iterations,
            "contraction_rate": sol.contraction_rate,
            "residual": sol.residual,
            "spectral_margin": sol.grid.margin,
        }),
    );
}

// ---------- borel-sum ----------

/// Richardson-extrapolated central difference of a scalar function.
fn derivative<F: Fn(C64) -> Result<C64, CliError>>(f: F, x: C64, h: C64) -> Result<C64, CliError> {
    let d1 = (f(x + h)? - f(x - h)?) / (2.0 * h);
    let d2 = (f(x + h / 2.0)? - f(x - h / 2.0)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

fn borel_sum_series(cfg: &RunConfig, input: &SeriesInput) -> Result<(Artifacts, Map<String, Value>, String), CliError> {
    let alpha = cfg.alpha.unwrap_or(0.5 * (cfg.dr.beta1 + cfg.dr.beta2));
    let dir = C64::from_polar(1.0, alpha);
    let xs: Vec<C64> = match &cfg.x {
        Some(x) => x.clone(),
        None => (0..20).map(|k| dir * (0.01 + 0.19 * k as f64 / 19.0)).collect(),
    };
    let ray = |x: C64| cfg.ray_length.unwrap_or((80.0 * x.norm()).min(40.0));
    let sum = |x: C64| -> Result<C64, CliError> {
        Ok(borel_pade_sum(&input.series, alpha, x, cfg.pade_order, ray(x))?.0)
    };
    let mut rows = Vec::new();
    let mut worst: Option<f64> = None;
    for &x in &xs {
        let (y, tail) = borel_pade_sum(&input.series, alpha, x, cfg.pade_order, ray(x))?;
        let residual = match &input.ode {
            Some((a, b)) => {
                let dy = derivative(sum, x, 0.02 * x)?;
                let forcing = b.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c);
                let r = (x * x * dy - a * y - forcing).norm();
                worst = Some(worst.map_or(r, |w: f64| w.max(r)));
                Some(r)
            }
            None => None,
        };
        let mut row = vec![num(x.re), num(x.im)];
        push_values(&mut row, &[y]);
        row.push(opt_num(residual));
        row.push(num(tail));
        rows.push(row);
    }
    let mut header = vec!["re_x".to_string(), "im_x".into()];
    header.extend(value_columns("y", 1));
    header.extend(["residual".to_string(), "tail".into()]);
    let mut art = Artifacts::default();
    art.add_csv("sum.csv", &header, &rows)?;
    let mut meta = base_meta(cfg);
    meta.insert("input".into(), json!("series"));
    meta.insert("alpha".into(), json!(alpha));
    meta.insert("pade_order".into(), json!(cfg.pade_order));
    meta.insert("max_residual".into(), json!(worst));
    let summary = match worst {
        Some(w) => format!("borel-sum: {} points, max ODE residual {w:.3e}", xs.len()),
        None => format!("borel-sum: {} points (no ODE given, residual column empty)", xs.len()),
    };
    Ok((art, meta, summary))
}

fn borel_sum_system(cfg: &RunConfig, spec: &SystemSpec) -> Result<(Artifacts, Map<String, Value>, String), CliError> {
    if !cfg.sqrt_eps.is_zero() {
        return Err(CliError::Config("borel-sum of a system needs √ε = 0; use unfold-solve otherwise".into()));
    }
    let s = cfg.sqrt_eps;
    let sol = solve_with_retries(spec, s, cfg.dr, &cfg.solver)?;
    let cm = CenterManifold::new(&sol)?;
    let mid = middle_direction(s, &cfg.dr)?;
    let pts: Vec<SheetPoint> = match &cfg.x {
        Some(x) => x.iter().map(|z| SheetPoint::new(*z)).collect(),
        None => default_cloud(s, mid, sol.grid.lambda, &[-2.0, 0.0, 2.0])?,
    };
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for p in &pts {
        let mut row = vec![num(p.x.re), num(p.x.im)];
        match cm.eval(*p) {
            Ok(y) => {
                let r = ode_residual(spec, |q| cm.eval(q), *p, s, 1e-4 * p.x.norm()).ok();
                if let Some(r) = r {
                    worst = worst.max(r);
                }
                push_values(&mut row, &y);
                row.push(opt_num(r));
            }
            Err(_) => {
                row.extend(std::iter::repeat_n(String::new(), 2 * spec.dim + 1));
            }
        }
        row.push(String::new());
        rows.push(row);
    }
    let mut header = vec!["re_x".to_string(), "im_x".into()];
    header.extend(value_columns("y", spec.dim));
    header.extend(["residual".to_string(), "tail".into()]);
    let mut art = Artifacts::default();
    art.add_csv("sum.csv", &header, &rows)?;
    let mut meta = base_meta(cfg);
    meta.insert("input".into(), json!("system"));
    meta.insert("spec_sha256".into(), json!(spec_hash(spec)));
    meta.insert("max_residual".into(), json!(worst));
    solver_meta(&mut meta, &sol);
    let summary = format!("borel-sum: {} points, max ODE residual {worst:.3e}", pts.len());
    Ok((art, meta, summary))
}

pub fn borel_sum(cfg: &RunConfig) -> Result<(), CliError> {
    let (art, meta, summary) = match (&cfg.series, &cfg.spec) {
        (Some(input), _) => borel_sum_series(cfg, input)?,
        (None, Some(spec)) => borel_sum_system(cfg, spec)?,
        (None, None) => return Err(CliError::Config("borel-sum needs \"series\" or \"spec\" in the config".into())),
    };
    art.write(&cfg.out_dir(), "borel-sum", meta)?;
    println!("{summary}");
    Ok(())
}

// ---------- unfold-solve ----------

fn lines_csv(values: &[StripFunction], sign: f64) -> (Vec<String>, Vec<Vec<String>>) {
    let dim = values[0].dim();
    let mut header = vec!["dir".to_string(), "alpha".into(), "k".into(), "u".into(), "re_xi".into(), "im_xi".into()];
    header.extend(value_columns("v", dim));
    let mut rows = Vec::new();
    for (d, st) in values.iter().enumerate() {
        for (k, lf) in &st.lines {
            for j in 0..lf.n {
                let xi = lf.xi(j);
                let mut row = vec![d.to_string(), num(st.alpha), k.to_string(), num(lf.u(j)), num(xi.re), num(xi.im)];
                let v: Vec<C64> = lf.node(j).iter().map(|z| z * sign).collect();
                push_values(&mut row, &v);
                rows.push(row);
            }
        }
    }
    (header, rows)
}

pub fn unfold_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.require_spec()?;
    let s = cfg.sqrt_eps;
    let sol = solve_with_retries(spec, s, cfg.dr, &cfg.solver)?;
    let cm = CenterManifold::new(&sol)?;
    let mut art = Artifacts::default();
    let mut meta = base_meta(cfg);
    meta.insert("spec_sha256".into(), json!(spec_hash(spec)));
    solver_meta(&mut meta, &sol);

    if s.is_zero() {
        // the − side at ε = 0 is minus the + side transform along the opposite rays
        let mirrored = DirectionRange::new(cfg.dr.beta1 + PI, cfg.dr.beta2 + PI, cfg.dr.eta, cfg.dr.rho)?;
        let opposite = solve_with_retries(spec, s, mirrored, &cfg.solver)?;
        let (h, r) = lines_csv(&sol.values, 1.0);
        art.add_csv("ray_plus.csv", &h, &r)?;
        let (h, r) = lines_csv(&opposite.values, -1.0);
        art.add_csv("ray_minus.csv", &h, &r)?;
        meta.insert("minus_directions".into(), json!(opposite.grid.directions));
    } else {
        let (h, r) = lines_csv(&sol.values, 1.0);
        art.add_csv("lines_plus.csv", &h, &r)?;
        match conjugate_values(&sol.values, s) {
            Ok(minus) => {
                let (h, r) = lines_csv(&minus, 1.0);
                art.add_csv("lines_minus.csv", &h, &r)?;
            }
            Err(e) => {
                meta.insert("minus_side".into(), json!(format!("not exported: {e}")));
            }
        }
    }

    let mid = middle_direction(s, &cfg.dr)?;
    let pts: Vec<SheetPoint> = match &cfg.x {
        Some(x) => x.iter().map(|z| SheetPoint::new(*z)).collect(),
        None => default_cloud(s, mid, sol.grid.lambda, &[-2.0, 0.0, 2.0])?,
    };
    let mut header = vec!["re_x".to_string(), "im_x".into(), "sheet".into(), "dir".into(), "side".into()];
    header.extend(value_columns("y", spec.dim));
    header.push("residual".into());
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for p in &pts {
        let mut row = vec![num(p.x.re), num(p.x.im), p.sheet.to_string()];
        match cm.choose(*p).and_then(|c| Ok((c, cm.eval_with(c)?))) {
            Ok((c, y)) => {
                row.push(c.dir.to_string());
                row.push(if c.side == borel_unfold::Side::Plus { "+" } else { "-" }.into());
                push_values(&mut row, &y);
                let h = 1e-4 * p.x.norm().max(s.abs());
                let r = ode_residual(spec, |q| cm.eval(q), *p, s, h).ok();
                if let Some(r) = r {
                    worst = worst.max(r);
                }
                row.push(opt_num(r));
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 2 * spec.dim + 3)),
        }
        rows.push(row);
    }
    art.add_csv("y_samples.csv", &header, &rows)?;
    meta.insert("max_ode_residual".into(), json!(worst));

    let mut exact = None;
    if *spec == linear_forcing_system() {
        let mut err: f64 = 0.0;
        for st in &sol.values {
            for lf in st.lines.values() {
                for j in 0..lf.n {
                    err = err.max((lf.value(j, 0) - linear_forcing_exact_dir(lf.xi(j), s, st.alpha)?).norm());
                }
            }
        }
        exact = Some((err < A5_LINEAR_TOL, err));
        meta.insert("exact_check".into(), json!({ "passed": err < A5_LINEAR_TOL, "max_error": err, "tolerance": A5_LINEAR_TOL }));
    }
    art.write(&cfg.out_dir(), "unfold-solve", meta)?;
    println!(
        "unfold-solve: {} directions, {} iterations, contraction rate {:.3e}, residual {:.3e}, max ODE residual {worst:.3e}",
        sol.grid.directions.len(),
        sol.iterations,
        sol.contraction_rate,
        sol.residual
    );
    match exact {
        Some((true, err)) => println!("exact-check: pass ({err:.3e})"),
        Some((false, err)) => {
            println!("exact-check: fail ({err:.3e})");
            return Err(CliError::Acceptance(format!("closed-form check failed with error {err:.3e}")));
        }
        None => {}
    }
    Ok(())
}

// ---------- confluence ----------

pub fn confluence(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.require_spec()?;
    let s0 = cfg.sqrt_eps;
    if s0.is_zero() {
        return Err(CliError::Config("confluence needs a non-zero base √ε".into()));
    }
    let nus = cfg.nu.clone().unwrap_or_else(|| (0..=6).map(|j| 0.5f64.powi(j)).collect());
    let xs = cfg.x.clone().unwrap_or_else(confluence_points);
    let rows = confluence_table(spec, cfg.dr, s0.value(), &nus, &xs, &cfg.solver)?;
    let header: Vec<String> = ["nu", "re_x", "im_x", "abs_diff", "skipped"].iter().map(|h| h.to_string()).collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.nu), num(r.x.re), num(r.x.im), opt_num(r.diff), (r.diff.is_none() as u8).to_string()])
        .collect();
    let maxes: Vec<Option<f64>> = nus
        .iter()
        .map(|nu| rows.iter().filter(|r| r.nu == *nu).filter_map(|r| r.diff).reduce(f64::max))
        .collect();
    let monotone = maxes.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b < a));
    let mut art = Artifacts::default();
    art.add_csv("confluence.csv", &header, &csv_rows)?;
    let mut meta = base_meta(cfg);
    meta.insert("spec_sha256".into(), json!(spec_hash(spec)));
    meta.insert("nu".into(), json!(nus));
    meta.insert("max_diff_per_nu".into(), json!(maxes));
    meta.insert("monotone".into(), json!(monotone));
    art.write(&cfg.out_dir(), "confluence", meta)?;
    let list: Vec<String> = maxes.iter().map(|m| m.map_or("-".into(), |v| format!("{v:.2e}"))).collect();
    println!("confluence: max |Δy| per ν = [{}], monotone = {monotone}", list.join(", "));
    Ok(())
}

// ---------- normalize ----------

pub fn normalize(cfg: &RunConfig) -> Result<(), CliError> {
    let lin = cfg
        .linear
        .as_ref()
        .ok_or_else(|| CliError::Config("normalize needs \"linear_system\" in the config".into()))?;
    let s = cfg.sqrt_eps;
    if s.is_zero() {
        return Err(CliError::Config("normalize needs √ε ≠ 0".into()));
    }
    let spec = riccati_reduce(lin)?;
    let sol = solve_with_retries(&spec, s, cfg.dr, &cfg.solver)?;
    let cm = CenterManifold::new(&sol)?;
    let alpha = match cfg.alpha {
        Some(a) => a,
        None => middle_direction(s, &cfg.dr)?,
    };
    let t_eval = |p: SheetPoint| assemble_t(lin, |t| cm.eval_time(t), s, p, alpha, cfg.quad_panels);
    let pts: Vec<SheetPoint> = match &cfg.x {
        Some(x) => x.iter().map(|z| SheetPoint::new(*z)).collect(),
        None => default_cloud(s, alpha, sol.grid.lambda, &[-2.0, 2.0])?,
    };
    let mut points = Vec::new();
    let mut worst: f64 = 0.0;
    for p in &pts {
        let t = t_eval(*p)?;
        let r = normalization_residual(lin, t_eval, *p, s, C64::new(1e-4, 0.0))?;
        worst = worst.max(r);
        let rows: Vec<Value> =
            (0..lin.n).map(|i| Value::Array((0..lin.n).map(|j| complex_json(t[(i, j)])).collect())).collect();
        points.push(json!({ "x": complex_json(p.x), "sheet": p.sheet, "residual": r, "T": rows }));
    }
    let report = json!({
        "gauge": "T = (I + U)·T_D with T_D = exp(∫ diag(R(I + U)) dx from √ε to x), so T(√ε) = I; any T·D with D constant diagonal is also a solution",
        "path": {
            "alpha": alpha,
            "description": "x(t(x) + i·e^{−iα}τ) for τ ≥ 0, ending at √ε",
            "quad_panels": cfg.quad_panels,
        },
        "reduced_system": {
            "dim": spec.dim,
            "iterations": sol.iterations,
            "contraction_rate": sol.contraction_rate,
            "residual": sol.residual,
        },
        "points": points,
        "max_residual": worst,
    });
    let mut art = Artifacts::default();
    art.add_json("normalization.json", &report);
    let mut meta = base_meta(cfg);
    meta.insert("reduced_spec_sha256".into(), json!(spec_hash(&spec)));
    meta.insert("max_residual".into(), json!(worst));
    solver_meta(&mut meta, &sol);
    art.write(&cfg.out_dir(), "normalize", meta)?;
    println!("normalize: {} points, max residual {worst:.3e}", pts.len());
    Ok(())
}

// ---------- selftest ----------

pub fn selftest(cfg: &RunConfig, only: &[String], strict: bool) -> Result<(), CliError> {
    for id in only {
        if !CRITERIA.contains(&id.as_str()) {
            return Err(CliError::Config(format!("unknown criterion {id:?}; known: {}", CRITERIA.join(", "))));
        }
    }
    let ids: Vec<&str> = CRITERIA.iter().copied().filter(|id| only.is_empty() || only.iter().any(|o| o == id)).collect();
    let seed = cfg.seed;
    let reports: Vec<CriterionReport> = std::thread::scope(|scope| {
        let handles: Vec<_> =
            ids.iter().map(|id| scope.spawn(move || run_one_seeded(id, seed).expect("known id"))).collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    for r in &reports {
        println!("{}", r.line());
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "selftest: {} passed, {} failed {:?} (known unattainable: {:?})",
        reports.len() - failed.len(),
        failed.len(),
        failed,
        KNOWN_UNATTAINABLE
    );
    if let Some(dir) = &cfg.out {
        let header: Vec<String> =
            ["id", "passed", "measured", "tolerance", "title", "detail"].iter().map(|h| h.to_string()).collect();
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![r.id.into(), r.passed.to_string(), num(r.measured), num(r.tolerance), r.title.into(), r.detail.clone()]
            })
            .collect();
        let mut art = Artifacts::default();
        art.add_csv("selftest.csv", &header, &rows)?;
        let mut meta = Map::new();
        meta.insert("seed".into(), json!(seed));
        meta.insert("strict".into(), json!(strict));
        meta.insert("failed".into(), json!(failed));
        art.write(dir, "selftest", meta)?;
    }
    let ok = if strict { failed.is_empty() } else { suite_ok(&reports) };
    if ok {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!("failed criteria {failed:?}")))
    }
}
