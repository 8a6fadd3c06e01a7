//! `table`: sweep over domains × p × q.
//!
//! Groups sharing a domain and `p` share one solve and run in parallel.
//! Each successful row is cached under the SHA-256 of its canonical inputs;
//! failed rows are reported in the `error` column and never cached.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::anyhow;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use sobolev_core::chiti::verify_reverse_holder;
use sobolev_core::DomainSpec;

use crate::commands::{check_p_range, create_out, solve, verification_failure, verify_config, write_file};
use crate::config::{Format, RunConfig};
use crate::{CmdResult, Context, Failure, Outcome, EXIT_OK};

pub const COLUMNS: [&str; 18] = [
    "domain",
    "p",
    "q",
    "h",
    "cp",
    "rho",
    "ball_volume",
    "domain_volume",
    "K",
    "norm_p",
    "norm_q",
    "rhs",
    "margin",
    "crossings",
    "s1",
    "dominance_min",
    "passed",
    "error",
];

type Record = Vec<String>;

fn encode(record: &Record) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(record).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 record")
}

fn decode(line: &str) -> Option<Record> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(line.as_bytes());
    let rec = r.records().next()?.ok()?;
    let rec: Record = rec.iter().map(String::from).collect();
    (rec.len() == COLUMNS.len()).then_some(rec)
}

fn error_record(domain: &DomainSpec, p: f64, q: f64, h: f64, message: &str) -> Record {
    let mut rec = vec![String::new(); COLUMNS.len()];
    rec[0] = domain.label();
    rec[1] = p.to_string();
    rec[2] = q.to_string();
    rec[3] = h.to_string();
    rec[16] = "false".into();
    rec[17] = message.replace('\n', " ");
    rec
}

fn cache_key(config: &RunConfig, domain: &DomainSpec, p: f64, q: f64) -> String {
    let canonical = json!({
        "version": config.version,
        "format_version": config.format_version,
        "domain": domain,
        "p": p,
        "q": q,
        "h": config.h,
        "tol": config.tol,
        "max_iter": config.max_iter,
        "supercritical": config.supercritical,
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

fn cache_load(dir: Option<&Path>, key: &str) -> Option<Record> {
    let text = fs::read_to_string(dir?.join(format!("{key}.csv"))).ok()?;
    decode(&text)
}

fn cache_store(dir: Option<&Path>, key: &str, line: &str) {
    let Some(dir) = dir else { return };
    if fs::create_dir_all(dir).is_err() {
        return;
    }
    // Write then rename so parallel readers never see a partial file.
    let tmp = dir.join(format!("{key}.{}.tmp", std::process::id()));
    if fs::write(&tmp, line).is_ok() {
        let _ = fs::rename(&tmp, dir.join(format!("{key}.csv")));
    }
}

/// Rows for one `(domain, p)` group, in `q` order.
fn run_group(config: &RunConfig, ctx: &Context, domain: &DomainSpec, p: f64) -> Vec<Record> {
    let h = config.h.unwrap_or(f64::NAN);
    let cache = ctx.cache.as_deref();
    let valid: Vec<f64> = config.q.iter().copied().filter(|&q| q >= p).collect();
    let keys: Vec<String> = valid.iter().map(|&q| cache_key(config, domain, p, q)).collect();

    let cached: Option<Vec<Record>> = keys.iter().map(|k| cache_load(cache, k)).collect();
    let computed = match cached {
        Some(rows) => Ok(rows),
        None => compute_group(config, domain, p, &valid),
    };
    if let Ok(rows) = &computed {
        for (key, rec) in keys.iter().zip(rows) {
            cache_store(cache, key, &encode(rec));
        }
    }

    let mut valid_rows = match computed {
        Ok(rows) => rows.into_iter(),
        Err(message) => valid
            .iter()
            .map(|&q| error_record(domain, p, q, h, &message))
            .collect::<Vec<_>>()
            .into_iter(),
    };
    config
        .q
        .iter()
        .map(|&q| {
            if q >= p {
                valid_rows.next().expect("one row per valid q")
            } else {
                error_record(domain, p, q, h, &format!("need q >= p = {p}"))
            }
        })
        .collect()
}

fn compute_group(config: &RunConfig, domain: &DomainSpec, p: f64, q: &[f64]) -> Result<Vec<Record>, String> {
    if q.is_empty() {
        return Ok(Vec::new());
    }
    let render = |f: Failure| format!("{:#}", f.error);
    check_p_range(p, config).map_err(render)?;
    let mut single = config.clone();
    single.domains = vec![domain.clone()];
    let result = solve(&single, p).map_err(render)?;
    let report = verify_reverse_holder(&result, q, &verify_config(config))
        .map_err(|e| render(verification_failure(e)))?;
    let s1 = report.crossing.s1.map(|s| s.to_string()).unwrap_or_default();
    Ok(report
        .rows
        .iter()
        .map(|row| {
            vec![
                domain.label(),
                p.to_string(),
                row.q.to_string(),
                report.h.to_string(),
                report.cp_omega.to_string(),
                report.rho.to_string(),
                report.ball_volume.to_string(),
                report.domain_volume.to_string(),
                row.k.to_string(),
                report.lhs.to_string(),
                row.norm_q.to_string(),
                row.rhs.to_string(),
                row.margin.to_string(),
                report.crossing.crossing_count.to_string(),
                s1.clone(),
                report.dominance.min.to_string(),
                (row.ok && report.passed).to_string(),
                String::new(),
            ]
        })
        .collect())
}

fn json_cell(text: &str) -> Value {
    match text {
        "" => Value::Null,
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => match text.parse::<f64>() {
            Ok(x) if x.is_finite() => json!(x),
            _ => Value::String(text.into()),
        },
    }
}

fn render_table(rows: &[Record]) -> String {
    const SHOWN: [usize; 8] = [0, 1, 2, 4, 8, 12, 13, 16];
    let width = |c: usize| {
        rows.iter()
            .map(|r| r[c].len())
            .chain([COLUMNS[c].len()])
            .max()
            .unwrap_or(0)
    };
    let widths: Vec<usize> = SHOWN.iter().map(|&c| width(c)).collect();
    let mut s = String::new();
    let line = |s: &mut String, cells: Vec<&str>| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(&mut s, SHOWN.iter().map(|&c| COLUMNS[c]).collect());
    for r in rows {
        line(&mut s, SHOWN.iter().map(|&c| r[c].as_str()).collect());
        if !r[17].is_empty() {
            let _ = writeln!(s, "    error: {}", r[17]);
        }
    }
    s
}

pub fn table(config: &RunConfig, ctx: &Context) -> CmdResult {
    let total = config.domains.len() * config.p.len() * config.q.len();
    if total == 0 {
        return Err(Failure::usage(anyhow!("empty sweep")));
    }
    let max_rows = config.max_rows.unwrap_or(usize::MAX);
    if total > max_rows {
        return Err(Failure::usage(anyhow!(
            "sweep has {total} rows, more than --max-rows {max_rows}"
        )));
    }
    let groups: Vec<(&DomainSpec, f64)> = config
        .domains
        .iter()
        .flat_map(|d| config.p.iter().map(move |&p| (d, p)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs)
        .build()
        .map_err(Failure::usage)?;
    let rows: Vec<Record> = pool.install(|| {
        groups
            .par_iter()
            .map(|&(d, p)| run_group(config, ctx, d, p))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });

    create_out(ctx)?;
    let cfg = config.to_value();
    write_file(&ctx.out.join("table.csv"), |w| {
        let header = json!({
            "format_version": sobolev_core::FORMAT_VERSION,
            "kind": "sweep",
            "config": cfg,
        });
        writeln!(w, "{header}")?;
        write!(w, "{}", encode(&COLUMNS.iter().map(|c| c.to_string()).collect()))?;
        for r in &rows {
            write!(w, "{}", encode(r))?;
        }
        Ok(())
    })?;

    let failed = rows.iter().filter(|r| !r[17].is_empty()).count();
    let stdout = match config.format {
        Format::Csv => {
            let mut s = encode(&COLUMNS.iter().map(|c| c.to_string()).collect());
            rows.iter().for_each(|r| s.push_str(&encode(r)));
            s
        }
        Format::Json => {
            let objects: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> = COLUMNS
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), if *c == "domain" || *c == "error" { json!(v) } else { json_cell(v) }))
                        .collect();
                    Value::Object(m)
                })
                .collect();
            format!("{}\n", Value::Array(objects))
        }
        Format::Table => render_table(&rows),
    };
    let stderr = if failed > 0 {
        format!("warning: {failed} of {total} rows failed; see the error column\n")
    } else {
        String::new()
    };
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
        stderr,
    })
}
