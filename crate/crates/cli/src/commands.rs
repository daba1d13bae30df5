use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::{json, Value};

use wulff_spectra::closedform::{
    critical_alpha as closed_critical_alpha, critical_alpha_oracle, nonlocal_pair_eigenvalue,
    saturated_level, twisted_pair_eigenvalue, EigenResult,
};
use wulff_spectra::saturation::saturation_curve;
use wulff_spectra::variational::{
    minimize_rayleigh, radial_pair_nonlocal_solve, CartesianGrid2D, MinimizeOptions, Minimizer,
};
use wulff_spectra::Error;

use crate::output::{emit, metadata, pretty, sidecar};
use crate::{Cli, CliError, CliResult, Context, CurveArgs, EigPairArgs, Grid2dArgs, PairArgs};

/// Agreement required between the closed-form critical weight and its limit.
pub const CRITICAL_ALPHA_RTOL: f64 = 1e-6;

pub fn lib_err(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Parse(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Solver(other.to_string()),
    }
}

fn finite(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "--{name} must be finite, got {v}"
        )))
    }
}

fn check_radii(r1: f64, r2: f64) -> CliResult<()> {
    if !(r1 >= 0.0 && r2 >= 0.0 && r1.is_finite() && r2.is_finite()) || r1.max(r2) <= 0.0 {
        return Err(CliError::Config(format!(
            "radii must be finite, >= 0 and not both zero (got {r1}, {r2})"
        )));
    }
    Ok(())
}

/// `steps` evenly spaced values from `lo` to `hi` (just `lo` when `steps = 1`).
fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
        .collect()
}

fn check_range(lo: f64, hi: f64, steps: usize) -> CliResult<()> {
    finite("alpha-min", lo)?;
    finite("alpha-max", hi)?;
    if steps == 0 {
        return Err(CliError::Config("--steps must be >= 1".into()));
    }
    if lo > hi {
        return Err(CliError::Config(format!("empty alpha range [{lo}, {hi}]")));
    }
    Ok(())
}

pub fn curve(cli: &Cli, ctx: &Context, args: &CurveArgs) -> CliResult<()> {
    let volume = if args.volume.eq_ignore_ascii_case("auto") {
        ctx.kappa_n
    } else {
        let v: f64 = args.volume.parse().map_err(|_| {
            CliError::Config(format!(
                "--volume: expected a number or `auto`, got `{}`",
                args.volume
            ))
        })?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Config(format!(
                "--volume must be positive, got {v}"
            )));
        }
        v
    };
    check_range(args.alpha_min, args.alpha_max, args.steps)?;
    let alphas = linspace(args.alpha_min, args.alpha_max, args.steps);
    let curve = saturation_curve(ctx.n, ctx.kappa_n, volume, &alphas).map_err(lib_err)?;

    let mut meta = metadata(cli, "curve")?;
    meta.insert("n".into(), json!(ctx.n));
    meta.insert("gauge".into(), json!(ctx.gauge_spec.to_string()));
    meta.insert("kappa_n".into(), json!(ctx.kappa_n));
    meta.insert("volume".into(), json!(volume));
    let alpha_c = closed_critical_alpha(ctx.n, ctx.kappa_n).map_err(lib_err)?;
    meta.insert("alpha_c".into(), json!(alpha_c));
    meta.insert("alpha_c_scaled".into(), json!(curve.critical_alpha_scaled));
    meta.insert(
        "saturated_level".into(),
        json!(saturated_level(ctx.n, ctx.kappa_n, volume).map_err(lib_err)?),
    );
    meta.insert("rows".into(), json!(curve.samples.len()));
    meta.insert(
        "columns".into(),
        json!(["alpha", "lambda_min", "split_s", "regime"]),
    );
    meta.insert("violations".into(), json!(curve.violations));

    if cli.json {
        let mut doc = meta;
        doc.insert(
            "samples".into(),
            serde_json::to_value(&curve.samples).expect("samples serialize"),
        );
        emit(cli.out.as_deref(), &pretty(&Value::Object(doc)))?;
    } else {
        let mut csv = String::from("alpha,lambda_min,split_s,regime\n");
        for s in &curve.samples {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                s.alpha, s.lambda_min, s.split_s, s.regime
            );
        }
        emit(cli.out.as_deref(), &csv)?;
        let sidecar_text = pretty(&Value::Object(meta));
        match &cli.out {
            Some(p) => emit(Some(&sidecar(p)), &sidecar_text)?,
            None => eprint!("{sidecar_text}"),
        }
    }
    if !curve.violations.is_empty() {
        return Err(CliError::Solver(format!(
            "curve invariants failed: {}",
            curve.violations.join("; ")
        )));
    }
    Ok(())
}

pub fn critical_alpha(cli: &Cli, ctx: &Context) -> CliResult<()> {
    let alpha_c = closed_critical_alpha(ctx.n, ctx.kappa_n).map_err(lib_err)?;
    let oracle = critical_alpha_oracle(ctx.n, ctx.kappa_n).map_err(lib_err)?;
    let rel_diff = (alpha_c - oracle).abs() / oracle.abs();
    let doc = json!({
        "n": ctx.n,
        "kappa_n": ctx.kappa_n,
        "alpha_c": alpha_c,
        "oracle_alpha_c": oracle,
        "rel_diff": rel_diff,
    });
    emit(cli.out.as_deref(), &pretty(&doc))?;
    let tol = cli.tol.unwrap_or(CRITICAL_ALPHA_RTOL);
    if !(rel_diff <= tol) {
        return Err(CliError::Oracle(format!(
            "closed-form alpha_c {alpha_c} and limit {oracle} differ by {rel_diff:e} (> {tol:e})"
        )));
    }
    Ok(())
}

fn eigen_json(e: &EigenResult) -> Value {
    json!({
        "lambda": e.lambda,
        "regime": e.regime.as_str(),
        "c1": e.c1,
        "c2": e.c2,
        "c": e.c,
        "zero_average": e.zero_average,
        "extended": e.extended,
    })
}

fn eigen_text(e: &EigenResult) -> String {
    let mut s = format!("lambda = {}\nregime = {}\n", e.lambda, e.regime);
    if e.extended {
        s.push_str("extended = true\n");
    }
    s
}

pub fn twisted(cli: &Cli, ctx: &Context, args: &PairArgs) -> CliResult<()> {
    check_radii(args.r1, args.r2)?;
    let e = twisted_pair_eigenvalue(ctx.n, args.r1, args.r2).map_err(lib_err)?;
    let text = if cli.json {
        let mut v = eigen_json(&e);
        v["n"] = json!(ctx.n);
        v["r1"] = json!(args.r1);
        v["r2"] = json!(args.r2);
        pretty(&v)
    } else {
        eigen_text(&e)
    };
    emit(cli.out.as_deref(), &text)
}

pub fn eig_pair(cli: &Cli, ctx: &Context, args: &EigPairArgs) -> CliResult<()> {
    check_radii(args.r1, args.r2)?;
    finite("alpha", args.alpha)?;
    let e = nonlocal_pair_eigenvalue(ctx.n, ctx.kappa_n, args.r1, args.r2, args.alpha)
        .map_err(lib_err)?;
    let fd = match args.fd_nodes {
        Some(nodes) => Some(
            radial_pair_nonlocal_solve(ctx.n, ctx.kappa_n, args.r1, args.r2, args.alpha, nodes)
                .map_err(lib_err)?
                .lambda,
        ),
        None => None,
    };
    let text = if cli.json {
        let mut v = eigen_json(&e);
        v["n"] = json!(ctx.n);
        v["kappa_n"] = json!(ctx.kappa_n);
        v["r1"] = json!(args.r1);
        v["r2"] = json!(args.r2);
        v["alpha"] = json!(args.alpha);
        if let Some(l) = fd {
            v["fd_lambda"] = json!(l);
            v["fd_rel_diff"] = json!((l - e.lambda).abs() / e.lambda.abs());
        }
        pretty(&v)
    } else {
        let mut s = eigen_text(&e);
        if let Some(l) = fd {
            let _ = writeln!(s, "fd_lambda = {l}");
        }
        s
    };
    emit(cli.out.as_deref(), &text)
}

fn domain(args: &Grid2dArgs) -> CliResult<CartesianGrid2D> {
    if let Some(path) = args.domain.strip_prefix("file:") {
        return CartesianGrid2D::read_mask_file(&PathBuf::from(path)).map_err(lib_err);
    }
    if !(args.h > 0.0 && args.h.is_finite()) {
        return Err(CliError::Config(format!(
            "--h must be positive, got {}",
            args.h
        )));
    }
    if !(args.area > 0.0 && args.area.is_finite()) {
        return Err(CliError::Config(format!(
            "--area must be positive, got {}",
            args.area
        )));
    }
    match args.domain.to_ascii_lowercase().as_str() {
        "disk" => CartesianGrid2D::disk(args.area, args.h).map_err(lib_err),
        "square" => CartesianGrid2D::square(args.area, args.h).map_err(lib_err),
        other => Err(CliError::Config(format!(
            "--domain: expected disk, square or file:<path>, got `{other}`"
        ))),
    }
}

pub fn grid2d(cli: &Cli, ctx: &Context, args: &Grid2dArgs) -> CliResult<()> {
    if ctx.n != 2 {
        return Err(CliError::Config(format!(
            "grid2d requires --n 2, got {}",
            ctx.n
        )));
    }
    let grid = domain(args)?;
    if grid.active_cells() == 0 {
        return Err(CliError::Config("domain mask is empty".into()));
    }
    let alphas = match args.alpha_max {
        Some(hi) => {
            check_range(args.alpha, hi, args.steps)?;
            linspace(args.alpha, hi, args.steps)
        }
        None => vec![finite("alpha", args.alpha)?],
    };
    let mut opts = MinimizeOptions {
        seed: cli.seed,
        ..Default::default()
    };
    if let Some(t) = cli.tol {
        opts.tol = t;
    }
    let results: Vec<Minimizer> = alphas
        .iter()
        .map(|&a| minimize_rayleigh(&grid, &ctx.gauge, a, &opts).map_err(lib_err))
        .collect::<CliResult<_>>()?;

    let text = if cli.json {
        let mut meta = metadata(cli, "grid2d")?;
        meta.insert("area".into(), json!(grid.area()));
        meta.insert("h".into(), json!(grid.spacing()));
        meta.insert("cells".into(), json!(grid.active_cells()));
        let rows: Vec<Value> = alphas
            .iter()
            .zip(&results)
            .map(|(a, r)| {
                json!({
                    "alpha": a,
                    "lambda": r.lambda,
                    "converged": r.converged,
                    "iterations": r.iterations,
                    "residual": r.residual,
                    "method": r.method,
                })
            })
            .collect();
        meta.insert("results".into(), Value::Array(rows));
        pretty(&Value::Object(meta))
    } else if alphas.len() == 1 {
        let r = &results[0];
        format!(
            "lambda = {}\nconverged = {}\narea = {}\ncells = {}\n",
            r.lambda,
            r.converged,
            grid.area(),
            grid.active_cells()
        )
    } else {
        let mut s = String::from("alpha,lambda,converged\n");
        for (a, r) in alphas.iter().zip(&results) {
            let _ = writeln!(s, "{a},{},{}", r.lambda, r.converged);
        }
        s
    };
    emit(cli.out.as_deref(), &text)?;
    if let Some(path) = &args.eigenfunction {
        let last = results.last().expect("at least one solve");
        emit(Some(path), &last.u.to_csv())?;
    }
    if let Some((a, r)) = alphas.iter().zip(&results).find(|(_, r)| !r.converged) {
        return Err(CliError::Solver(format!(
            "minimization at alpha = {a} did not reach stationarity (residual {:e}); best value {}",
            r.residual, r.lambda
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
        let v = linspace(0.0, 60.0, 121);
        assert_eq!(v.len(), 121);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[120], 60.0);
        assert!((v[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn radii_checks() {
        assert!(check_radii(0.0, 1.0).is_ok());
        assert!(check_radii(0.0, 0.0).is_err());
        assert!(check_radii(-1.0, 1.0).is_err());
        assert!(check_radii(f64::NAN, 1.0).is_err());
    }
}
