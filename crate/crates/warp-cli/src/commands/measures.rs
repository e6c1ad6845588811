//! Invariance-defect sweeps, the weak-star sampling diagnostic, and a
//! recorded unit-mass self-check of the cylinder quadrature.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::json;
use warplab::groups::GroupElement;
use warplab::measure::cylinder::{
    cylinder_measure, CylinderComponent, CylinderSet, Interval, NormalizationMode, Partition,
};
use warplab::measure::experiment::{
    empirical_map_measure, invariance_defect_experiment, weak_star_diagnostic, ExperimentParams,
    InvarianceReport,
};
use warplab::warped::WarpedLevel;

use crate::{assemble, CliError, RunContext};

const UNIT_MASS_TOLERANCE: f64 = 1e-6;

/// Full-line cylinder masses in unit-mass mode; each should be 1 exactly up
/// to quadrature and truncation error.
fn unit_mass_check() -> Result<serde_json::Value, CliError> {
    let cases = vec![
        (
            "line_three_cells",
            Partition::new(
                GroupElement::identity(),
                vec![1],
                vec![vec![0.3, 0.7, 1.0]],
                vec![0.6, 1.1, 0.25],
            )?,
        ),
        (
            "plane_two_by_two",
            Partition::new(
                GroupElement::identity(),
                vec![1, -1],
                vec![vec![0.5, 1.0], vec![0.25, 1.0]],
                vec![0.9, 0.4, 1.2, 0.7],
            )?,
        ),
    ];
    let mut reports = Vec::new();
    let mut pass = true;
    for (name, partition) in cases {
        let rectangles = vec![Interval::full_line(); partition.cell_count()];
        let set = CylinderSet::new(vec![CylinderComponent::new(partition, rectangles)?]);
        let mass = cylinder_measure(&set, NormalizationMode::UnitMass, &|_| 1.0)?;
        let error = (mass - 1.0).abs();
        pass &= error <= UNIT_MASS_TOLERANCE;
        reports.push(json!({ "case": name, "mass": mass, "error": error }));
    }
    Ok(json!({
        "tolerance": UNIT_MASS_TOLERANCE,
        "cases": reports,
        "pass": pass,
    }))
}

pub fn run(ctx: &mut RunContext) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let ts = cfg.f64_list("measures.t")?;
    let rs = cfg.f64_list("measures.r")?;
    if ts.len() != rs.len() {
        return Err(CliError::Config(format!(
            "measures.t lists {} values but measures.r lists {}; they pair up one to one",
            ts.len(),
            rs.len()
        )));
    }
    let k = cfg.or_f64("measures.k", 1.0)?;
    let c = cfg.or_f64("measures.c", 0.0)?;
    let samples = cfg.or_u64("measures.samples", 200)?;
    let cells = cfg.or_usize("measures.cells_per_quadrant", 2)?;
    let m0 = cfg.or_usize("measures.basepoint", 0)?;
    let n0 = cfg.or_usize("measures.target_basepoint", 0)?;
    let run_unit_mass = cfg.or_bool("measures.unit_mass_check", true)?;
    let diagnostic_samples = cfg
        .opt_u64_list("measures.diagnostic_samples")?
        .unwrap_or_else(|| vec![(samples / 4).max(1), (samples / 2).max(1), samples]);
    let enumeration = assemble::enumeration_params(cfg, "measures")?;
    let level_params = assemble::level_params(cfg)?;
    let (net, action) = assemble::build(cfg)?;
    let gammas = assemble::gammas(cfg, "measures.gamma", "e", action.group())?;
    cfg.finish()?;
    ctx.meta.seal(cfg);

    let params = ExperimentParams {
        k,
        c,
        samples,
        seed: ctx.seed,
        cells_per_quadrant: cells,
        enumeration,
    };

    // one warped level per distinct t
    let mut levels: BTreeMap<u64, Arc<WarpedLevel>> = BTreeMap::new();
    for &t in &ts {
        if !levels.contains_key(&t.to_bits()) {
            levels.insert(t.to_bits(), assemble::level(&net, &action, t, &level_params)?);
        }
    }

    let mut sweeps = Vec::new();
    let mut all_reports: Vec<(String, Vec<InvarianceReport>)> = Vec::new();
    for gamma in &gammas {
        let mut reports = Vec::new();
        for (&r, &t) in rs.iter().zip(&ts) {
            let level = levels[&t.to_bits()].clone();
            reports.push(invariance_defect_experiment(
                level.clone(),
                level,
                m0,
                n0,
                gamma,
                r,
                &params,
            )?);
        }
        let defect_last_le_first =
            reports.last().map(|l| l.defect) <= reports.first().map(|f| f.defect);
        let shell_nonincreasing = reports
            .windows(2)
            .all(|w| w[1].shell_mass <= w[0].shell_mass);
        sweeps.push(json!({
            "gamma": action.group().describe(gamma),
            "reports": serde_json::to_value(&reports)?,
            "verdict": {
                "defect_last_le_first": defect_last_le_first,
                "shell_mass_nonincreasing": shell_nonincreasing,
            },
        }));
        all_reports.push((action.group().describe(gamma), reports));
    }

    // prefix-coupled empirical measures at the first (t, r) pair
    let base_level = levels[&ts[0].to_bits()].clone();
    let mut diag_measures = Vec::new();
    let mut diag_stats = Vec::new();
    for &n in &diagnostic_samples {
        let run = empirical_map_measure(
            base_level.clone(),
            base_level.clone(),
            m0,
            n0,
            rs[0],
            &ExperimentParams { samples: n, ..params.clone() },
        )?;
        diag_stats.push(json!({
            "samples": run.samples,
            "rejected": run.rejected,
            "map_count": run.map_count,
            "truncated": run.truncated,
        }));
        diag_measures.push(run.measure);
    }
    let distances = weak_star_diagnostic(&diag_measures)?;

    let unit_mass = if run_unit_mass {
        Some(unit_mass_check()?)
    } else {
        None
    };

    ctx.write_json(
        "measures.json",
        &json!({
            "meta": ctx.meta.json(),
            "unit_mass": unit_mass,
            "sweeps": sweeps,
            "weak_star": {
                "t": ts[0],
                "r": rs[0],
                "runs": diag_stats,
                "consecutive_prokhorov": distances,
            },
        }),
    )?;

    if ctx.plot_data {
        let mut dat = ctx.meta.csv_header();
        dat.push_str("# columns: r, defect; one block per gamma\n");
        for (name, reports) in &all_reports {
            dat.push_str(&format!("# gamma = {name}\n"));
            for report in reports {
                dat.push_str(&format!("{} {}\n", report.r, report.defect));
            }
            dat.push('\n');
        }
        ctx.write("measures.dat", &dat)?;
    }
    Ok(())
}
