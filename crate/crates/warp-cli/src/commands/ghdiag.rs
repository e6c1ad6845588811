//! Gromov-Hausdorff Cauchy diagnostic along a tower of map spaces of
//! growing radius.

use warplab::coarse::{gh_cauchy_diagnostic, FiniteMetricSpace};
use warplab::coarse::mapspace::enumerate_map_space;

use crate::{assemble, CliError, RunContext};

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let t = cfg.f64("ghdiag.t")?;
    let k = cfg.or_f64("ghdiag.k", 1.0)?;
    let c = cfg.or_f64("ghdiag.c", 0.0)?;
    let rs = cfg.f64_list("ghdiag.r")?;
    let m0 = cfg.or_usize("ghdiag.basepoint", 0)?;
    let n0 = cfg.or_usize("ghdiag.target_basepoint", 0)?;
    let budget = cfg.or_usize("ghdiag.budget", 64)?;
    let enumeration = assemble::enumeration_params(cfg, "ghdiag")?;
    let level_params = assemble::level_params(cfg)?;
    let (net, action) = assemble::build(cfg)?;
    cfg.finish()?;
    ctx.meta.seal(cfg);

    if rs.len() < 2 {
        return Err(CliError::Config(
            "ghdiag.r needs at least two radii to compare".into(),
        ));
    }
    let level = assemble::level(&net, &action, t, &level_params)?;
    let mut spaces: Vec<FiniteMetricSpace> = Vec::with_capacity(rs.len());
    let mut map_counts = Vec::with_capacity(rs.len());
    for &r in &rs {
        let ms = enumerate_map_space(level.clone(), level.clone(), m0, n0, k, c, r, &enumeration)?;
        map_counts.push(ms.map_count());
        spaces.push(ms.as_metric_space()?);
    }
    let bounds = gh_cauchy_diagnostic(&spaces, budget)?;

    let mut csv = ctx.meta.csv_header();
    csv.push_str("r_from,r_to,gh_upper,exact,maps_from,maps_to\n");
    for (i, bound) in bounds.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rs[i],
            rs[i + 1],
            bound.value,
            u8::from(bound.exact),
            map_counts[i],
            map_counts[i + 1]
        ));
    }
    ctx.write("ghdiag.csv", &csv)?;

    if ctx.plot_data {
        let mut dat = ctx.meta.csv_header();
        dat.push_str("# columns: r_to, gh upper bound\n");
        for (i, bound) in bounds.iter().enumerate() {
            dat.push_str(&format!("{} {}\n", rs[i + 1], bound.value));
        }
        ctx.write("ghdiag.dat", &dat)?;
    }
    Ok(())
}
