//! One warped level: distances, level graph, spectral gap, action audit.

use serde_json::json;
use warplab::spaces::{action_audit, coverage_defect};
use warplab::spectral::spectral_gap;

use crate::{assemble, CliError, RunContext};

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let t = cfg.f64("level.t")?;
    let threshold = cfg.or_f64("level.threshold", 1.0)?;
    let basepoint = cfg.or_usize("level.basepoint", 0)?;
    let audit_samples = cfg.or_usize("level.audit_samples", 20_000)?;
    let freeness_radius = cfg.or_usize("level.freeness_radius", 2)?;
    let coverage_r = cfg.opt_f64("level.coverage_r")?;
    let coverage_ball_cap = cfg.or_usize("level.coverage_ball_cap", 100_000)?;
    let level_params = assemble::level_params(cfg)?;
    let (net, action) = assemble::build(cfg)?;
    cfg.finish()?;
    ctx.meta.seal(cfg);

    let level = assemble::level(&net, &action, t, &level_params)?;
    if basepoint >= level.len() {
        return Err(CliError::Config(format!(
            "level.basepoint {basepoint} is out of range for a {}-point net",
            level.len()
        )));
    }
    let graph = level.level_graph(threshold)?;
    let lambda2 = spectral_gap(&graph)?;
    let audit = action_audit(&action, &net, audit_samples, ctx.seed, freeness_radius)?;
    let coverage = coverage_r
        .map(|r| coverage_defect(&action, &net, t, r, &net.points[basepoint], coverage_ball_cap))
        .transpose()?;

    let header = ctx.meta.csv_header();
    ctx.write("rho.csv", &format!("{header}{}", level.rho_to_csv()))?;
    ctx.write("edges.csv", &format!("{header}{}", level.edges_to_csv(threshold)?))?;
    ctx.write_json(
        "level.json",
        &json!({
            "meta": ctx.meta.json(),
            "t": t,
            "points": level.len(),
            "mesh": level.net.mesh,
            "snap_tolerance": level.snap_tolerance,
            "metric_edge_count": level.metric_edge_count,
            "generator_edge_count": level.generator_edge_count,
            "threshold": threshold,
            "graph_edges": graph.edge_count(),
            "connected": graph.is_connected(),
            "lambda2": lambda2,
            "audit": serde_json::to_value(&audit)?,
            "coverage_r": coverage_r,
            "coverage_defect": coverage,
        }),
    )?;

    if ctx.plot_data {
        let mut dat = header.clone();
        dat.push_str("# columns: net index, warped distance from basepoint\n");
        for (i, d) in level.rho[basepoint].iter().enumerate() {
            dat.push_str(&format!("{i} {d}\n"));
        }
        ctx.write("level.dat", &dat)?;
    }
    Ok(())
}
