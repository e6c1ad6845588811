//! Enumerate one space of basepointed quasi-isometric ball maps and dump
//! its diagnostics.

use serde_json::json;
use warplab::coarse::mapspace::enumerate_map_space;

use crate::{assemble, CliError, RunContext};

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let t_source = cfg.f64("mapspace.t_source")?;
    let t_target = cfg.or_f64("mapspace.t_target", t_source)?;
    let k = cfg.or_f64("mapspace.k", 1.0)?;
    let c = cfg.or_f64("mapspace.c", 0.0)?;
    let r = cfg.f64("mapspace.r")?;
    let m0 = cfg.or_usize("mapspace.basepoint", 0)?;
    let n0 = cfg.or_usize("mapspace.target_basepoint", 0)?;
    let enumeration = assemble::enumeration_params(cfg, "mapspace")?;
    let level_params = assemble::level_params(cfg)?;
    let (net, action) = assemble::build(cfg)?;
    cfg.finish()?;
    ctx.meta.seal(cfg);

    let source = assemble::level(&net, &action, t_source, &level_params)?;
    let target = if t_target == t_source {
        source.clone()
    } else {
        assemble::level(&net, &action, t_target, &level_params)?
    };
    let level = enumerate_map_space(source, target, m0, n0, k, c, r, &enumeration)?;

    let n = level.map_count();
    let mut diameter = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            diameter = diameter.max(level.delta(i, j));
        }
    }

    ctx.write_json(
        "mapspace.json",
        &json!({
            "meta": ctx.meta.json(),
            "map_count": n,
            "fingerprint_count": level.fingerprint_count(),
            "fingerprint_bound": level.fingerprint_bound(),
            "delta_diameter": diameter,
            "level": level.export_json(),
        }),
    )?;

    let mut csv = ctx.meta.csv_header();
    csv.push_str(&format!("# delta matrix over {n} stored maps\n"));
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| {
                if i == j {
                    "0".to_string()
                } else {
                    format!("{}", level.delta(i, j))
                }
            })
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    ctx.write("delta.csv", &csv)?;

    if ctx.plot_data {
        let mut deltas: Vec<f64> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                deltas.push(level.delta(i, j));
            }
        }
        deltas.sort_by(f64::total_cmp);
        let mut dat = ctx.meta.csv_header();
        dat.push_str("# columns: rank, pairwise delta (ascending)\n");
        for (rank, d) in deltas.iter().enumerate() {
            dat.push_str(&format!("{rank} {d}\n"));
        }
        ctx.write("mapspace.dat", &dat)?;
    }
    Ok(())
}
