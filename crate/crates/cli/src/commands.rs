use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context as _};
use serde_json::{json, Value};
use sobolev_core::chiti::{khat_from, verify_reverse_holder, VerifyConfig};
use sobolev_core::elliptic::{solve_domain, FixedPointOptions, SobolevResult};
use sobolev_core::radial::{unit_ball_profile, ShootOptions};
use sobolev_core::rearrange::{decreasing_rearrangement, equimeasurability_residual};
use sobolev_core::{io, Error};

use crate::config::{Format, RunConfig};
use crate::{Context, CmdResult, Failure, Outcome, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};

pub(crate) fn create_out(ctx: &Context) -> Result<(), Failure> {
    fs::create_dir_all(&ctx.out)
        .with_context(|| format!("creating output directory {}", ctx.out.display()))
        .map_err(Failure::usage)
}

pub(crate) fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>) -> Result<(), Failure> {
    let run = || -> anyhow::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    };
    run().with_context(|| format!("writing {}", path.display())).map_err(Failure::usage)
}

fn ok(stdout: String) -> CmdResult {
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
        stderr: String::new(),
    })
}

fn single<T: Copy>(list: &[T], what: &str) -> Result<T, Failure> {
    match list {
        [x] => Ok(*x),
        _ => Err(Failure::usage(anyhow!("expected exactly one {what}"))),
    }
}

pub(crate) fn fixed_point_options(config: &RunConfig) -> FixedPointOptions {
    let defaults = FixedPointOptions::default();
    FixedPointOptions {
        tol: config.tol.unwrap_or(defaults.tol),
        max_iter: config.max_iter.unwrap_or(defaults.max_iter),
        allow_supercritical: config.supercritical,
        ..defaults
    }
}

/// `p` must lie in the range of the reverse Hölder inequality unless
/// supercritical mode is on.
pub(crate) fn check_p_range(p: f64, config: &RunConfig) -> Result<(), Failure> {
    if !(p >= 1.0) || (p > 2.0 && !config.supercritical) {
        return Err(Failure::usage(anyhow!(
            "the reverse Hölder inequality requires 1 <= p <= 2, got p = {p} (--experimental-supercritical lifts the upper bound)"
        )));
    }
    Ok(())
}

pub(crate) fn check_q(p: f64, q: &[f64]) -> Result<(), Failure> {
    if let Some(bad) = q.iter().find(|q| !(**q >= p)) {
        return Err(Failure::usage(anyhow!("need q >= p = {p}, got q = {bad}")));
    }
    Ok(())
}

pub fn ball(config: &RunConfig, ctx: &Context) -> CmdResult {
    let (n, p) = (config.n, single(&config.p, "p")?);
    check_q(p, &config.q)?;
    let opts = ShootOptions {
        tol: config.tol.unwrap_or(ShootOptions::default().tol),
        allow_supercritical: config.supercritical,
        ..Default::default()
    };
    let profile = unit_ball_profile(n, p, &opts)?;
    let khat: Vec<(f64, f64)> = config
        .q
        .iter()
        .map(|&q| Ok((q, khat_from(&profile, q)?)))
        .collect::<Result<_, Error>>()?;

    create_out(ctx)?;
    let cfg = config.to_value();
    write_file(&ctx.out.join("profile.csv"), |w| Ok(io::write_radial_profile(w, &profile, &cfg)?))?;
    write_file(&ctx.out.join("khat.csv"), |w| {
        let header = json!({
            "format_version": sobolev_core::FORMAT_VERSION,
            "kind": "khat",
            "n": n,
            "p": p,
            "cp_ball": profile.cp_ball,
            "config": cfg,
        });
        writeln!(w, "{header}")?;
        writeln!(w, "q,khat")?;
        for (q, k) in &khat {
            writeln!(w, "{q},{k}")?;
        }
        Ok(())
    })?;

    let stdout = match config.format {
        Format::Json => {
            let rows: Vec<Value> = khat.iter().map(|(q, k)| json!({"q": q, "khat": k})).collect();
            format!(
                "{}\n",
                json!({"n": n, "p": p, "cp_ball": profile.cp_ball, "khat": rows, "config": cfg})
            )
        }
        Format::Csv => {
            let mut s = String::from("q,khat\n");
            for (q, k) in &khat {
                let _ = writeln!(s, "{q},{k}");
            }
            s
        }
        Format::Table => {
            let mut s = format!("C_p(B) = {}\n", profile.cp_ball);
            let _ = writeln!(s, "n = {n}, p = {p}");
            if !khat.is_empty() {
                let _ = writeln!(s, "{:>8}  {:>20}", "q", "Khat");
                for (q, k) in &khat {
                    let _ = writeln!(s, "{q:>8}  {k:>20.15}");
                }
            }
            s
        }
    };
    ok(stdout)
}

pub(crate) fn solve(config: &RunConfig, p: f64) -> Result<SobolevResult, Failure> {
    let spec = single_domain(config)?;
    let h = config.h.ok_or_else(|| Failure::usage(anyhow!("missing step size")))?;
    if config.n != 2 {
        return Err(Failure::usage(anyhow!("grid solver is planar; got n = {}", config.n)));
    }
    Ok(solve_domain(spec, p, h, &fixed_point_options(config))?)
}

fn single_domain(config: &RunConfig) -> Result<&sobolev_core::DomainSpec, Failure> {
    match config.domains.as_slice() {
        [d] => Ok(d),
        _ => Err(Failure::usage(anyhow!("expected exactly one domain"))),
    }
}

pub fn domain(config: &RunConfig, ctx: &Context) -> CmdResult {
    let p = single(&config.p, "p")?;
    if !(p >= 1.0) {
        return Err(Failure::usage(anyhow!("need p >= 1, got {p}")));
    }
    let result = solve(config, p)?;
    create_out(ctx)?;
    let cfg = config.to_value();
    write_file(&ctx.out.join("field.csv"), |w| {
        Ok(io::write_field(w, &result.field, p, result.cp, &cfg)?)
    })?;
    let summary = json!({
        "domain": single_domain(config)?,
        "p": p,
        "h": result.field.h,
        "cp": result.cp,
        "iterations": result.iterations,
        "residual": result.residual,
        "nodes": result.field.inside_count(),
        "measure": result.field.measure(),
    });
    let stdout = match config.format {
        Format::Json => format!("{summary}\n"),
        Format::Csv => format!(
            "cp,iterations,residual,nodes,measure\n{},{},{},{},{}\n",
            result.cp,
            result.iterations,
            result.residual,
            result.field.inside_count(),
            result.field.measure()
        ),
        Format::Table => format!(
            "C_p(Omega) = {}\niterations = {}\nresidual   = {:e}\nnodes      = {}\nmeasure    = {}\n",
            result.cp,
            result.iterations,
            result.residual,
            result.field.inside_count(),
            result.field.measure()
        ),
    };
    ok(stdout)
}

pub(crate) fn verify_config(config: &RunConfig) -> VerifyConfig {
    VerifyConfig {
        allow_supercritical: config.supercritical,
        ..Default::default()
    }
}

/// Pipeline errors are verification failures except for rejected input.
pub(crate) fn verification_failure(e: Error) -> Failure {
    let code = match &e {
        Error::Stage { stage: "input", .. } => EXIT_USAGE,
        _ => EXIT_VERIFY,
    };
    Failure { code, error: anyhow!("{e}") }
}

pub fn verify(config: &RunConfig, ctx: &Context) -> CmdResult {
    let p = single(&config.p, "p")?;
    check_p_range(p, config)?;
    if config.q.is_empty() {
        return Err(Failure::usage(anyhow!("give at least one -q")));
    }
    check_q(p, &config.q)?;
    let result = solve(config, p)?;
    let report = verify_reverse_holder(&result, &config.q, &verify_config(config)).map_err(verification_failure)?;
    create_out(ctx)?;
    let cfg = config.to_value();
    let document = json!({
        "format_version": sobolev_core::FORMAT_VERSION,
        "kind": "reverse-holder-report",
        "config": cfg,
        "status": report.status(),
        "report": report,
    });
    write_file(&ctx.out.join("report.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &document)?;
        writeln!(w)?;
        Ok(())
    })?;
    let table = report.table();
    write_file(&ctx.out.join("report.txt"), |w| {
        writeln!(w, "{}", json!({"config": cfg}))?;
        write!(w, "{table}")?;
        Ok(())
    })?;
    let stdout = match config.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&document).expect("report serializes")),
        Format::Csv => {
            let mut s = String::from("q,K,khat,norm_p,norm_q,rhs,margin,ok\n");
            for r in &report.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.q, r.k, r.khat, report.lhs, r.norm_q, r.rhs, r.margin, r.ok
                );
            }
            s
        }
        Format::Table => table,
    };
    if report.passed {
        ok(stdout)
    } else {
        Ok(Outcome {
            code: EXIT_VERIFY,
            stdout,
            stderr: "error: verification failed\n".into(),
        })
    }
}

pub fn rearrange(config: &RunConfig, ctx: &Context) -> CmdResult {
    let path = config
        .field
        .as_ref()
        .ok_or_else(|| Failure::usage(anyhow!("missing --field")))?;
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(Failure::usage)?;
    let (header, field) = io::read_field(BufReader::new(file))?;
    let u_star = decreasing_rearrangement(&field)?;
    let residuals: Vec<(f64, f64)> = [1.0, 2.0, header.p]
        .iter()
        .map(|&q| Ok((q, equimeasurability_residual(&field, q)?)))
        .collect::<Result<_, Error>>()?;
    create_out(ctx)?;
    let cfg = config.to_value();
    write_file(&ctx.out.join("profile.csv"), |w| {
        Ok(io::write_volume_profile(w, &u_star, 2, header.p, Some(header.cp), &cfg)?)
    })?;
    let stdout = match config.format {
        Format::Json => {
            let res: Vec<Value> = residuals.iter().map(|(q, r)| json!({"q": q, "residual": r})).collect();
            format!(
                "{}\n",
                json!({"measure": u_star.total_volume(), "max": u_star.max_value(), "cells": u_star.values().len(), "equimeasurability": res})
            )
        }
        Format::Csv => {
            let mut s = String::from("q,residual\n");
            for (q, r) in &residuals {
                let _ = writeln!(s, "{q},{r}");
            }
            s
        }
        Format::Table => {
            let mut s = format!(
                "measure = {}\nmax     = {}\ncells   = {}\n",
                u_star.total_volume(),
                u_star.max_value(),
                u_star.values().len()
            );
            for (q, r) in &residuals {
                let _ = writeln!(s, "equimeasurability residual (q = {q}) = {r:e}");
            }
            s
        }
    };
    ok(stdout)
}
