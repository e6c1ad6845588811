//! Trivialization defect across a (t, r) sweep; flags, per radius, the
//! first level parameter that brings the defect under tolerance.

use warplab::warped::{trivialization_defect, TrivializationReport};

use crate::{assemble, CliError, RunContext};

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let ts = cfg.f64_list("sweep.t")?;
    let rs = cfg.f64_list("sweep.r")?;
    let tolerance = cfg.or_f64("sweep.tolerance", 0.5)?;
    let basepoint = cfg.or_usize("sweep.basepoint", 0)?;
    let level_params = assemble::level_params(cfg)?;
    let (net, action) = assemble::build(cfg)?;
    cfg.finish()?;
    ctx.meta.seal(cfg);

    let mut rows: Vec<(f64, f64, TrivializationReport)> = Vec::new();
    for &t in &ts {
        let level = assemble::level(&net, &action, t, &level_params)?;
        for &r in &rs {
            rows.push((t, r, trivialization_defect(&level, basepoint, r)?));
        }
    }

    // first t (in sweep order) under tolerance, per r
    let mut first_hit = vec![None; rs.len()];
    for (row, (t, _, report)) in rows.iter().enumerate() {
        let ri = row % rs.len();
        if first_hit[ri].is_none() && report.defect <= tolerance {
            first_hit[ri] = Some(*t);
        }
    }

    let mut csv = ctx.meta.csv_header();
    csv.push_str(&format!("# defect tolerance: {tolerance}\n"));
    csv.push_str("t,r,defect,ball_size,matched,hit\n");
    for (row, (t, r, report)) in rows.iter().enumerate() {
        let hit = first_hit[row % rs.len()] == Some(*t);
        csv.push_str(&format!(
            "{t},{r},{},{},{},{}\n",
            report.defect,
            report.ball_size,
            report.matched,
            u8::from(hit)
        ));
    }
    ctx.write("trivsweep.csv", &csv)?;

    if ctx.plot_data {
        let mut dat = ctx.meta.csv_header();
        dat.push_str("# columns: t, defect; one block per r\n");
        for (ri, &r) in rs.iter().enumerate() {
            dat.push_str(&format!("# r = {r}\n"));
            for (row, (t, _, report)) in rows.iter().enumerate() {
                if row % rs.len() == ri {
                    dat.push_str(&format!("{t} {}\n", report.defect));
                }
            }
            dat.push('\n');
        }
        ctx.write("trivsweep.dat", &dat)?;
    }
    Ok(())
}
