//! Spectral gap of the level graph across a t sweep.

use warplab::spectral::spectral_gap;

use crate::{assemble, CliError, RunContext};

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let ts = cfg.f64_list("sweep.t")?;
    let threshold = cfg.or_f64("sweep.threshold", 1.0)?;
    let level_params = assemble::level_params(cfg)?;
    let (net, action) = assemble::build(cfg)?;
    cfg.finish()?;
    ctx.meta.seal(cfg);

    let mut rows = Vec::new();
    for &t in &ts {
        let level = assemble::level(&net, &action, t, &level_params)?;
        let graph = level.level_graph(threshold)?;
        let lambda2 = spectral_gap(&graph)?;
        rows.push((t, lambda2, graph.is_connected(), graph.edge_count()));
    }

    let mut csv = ctx.meta.csv_header();
    csv.push_str("t,threshold,lambda2,connected,edges\n");
    for (t, lambda2, connected, edges) in &rows {
        csv.push_str(&format!(
            "{t},{threshold},{lambda2},{},{edges}\n",
            u8::from(*connected)
        ));
    }
    ctx.write("expander.csv", &csv)?;

    if ctx.plot_data {
        let mut dat = ctx.meta.csv_header();
        dat.push_str("# columns: t, lambda2\n");
        for (t, lambda2, _, _) in &rows {
            dat.push_str(&format!("{t} {lambda2}\n"));
        }
        ctx.write("expander.dat", &dat)?;
    }
    Ok(())
}
