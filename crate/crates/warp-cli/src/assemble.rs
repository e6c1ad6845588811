//! Config sections -> library objects shared by the subcommands.

use std::sync::Arc;

use warplab::coarse::mapspace::EnumerationParams;
use warplab::groups::{GroupElement, GroupSpec};
use warplab::spaces::{build_net, ActionSpec, CompactSpace, Net, NetParams};
use warplab::warped::{warped_level, WarpedLevel, WarpedLevelParams};

use crate::config::Config;
use crate::CliError;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// `[space]`: kind = circle | torus, dim for the torus.
pub fn space(cfg: &Config) -> Result<CompactSpace, CliError> {
    let kind = cfg.or_str("space.kind", "circle");
    match kind.as_str() {
        "circle" => Ok(CompactSpace::circle()),
        "torus" => {
            let d = cfg.or_usize("space.dim", 2)?;
            Ok(CompactSpace::torus(d)?)
        }
        other => Err(bad(format!(
            "space.kind must be 'circle' or 'torus', got '{other}'"
        ))),
    }
}

/// `[net]`: mesh is required, the sampling knobs default to library values.
pub fn net_params(cfg: &Config) -> Result<NetParams, CliError> {
    let mesh = cfg.f64("net.mesh")?;
    let seed = cfg.or_u64("net.seed", 1)?;
    let mut params = NetParams::new(mesh, seed);
    params.point_cap = cfg.or_usize("net.point_cap", params.point_cap)?;
    params.pool = cfg.or_usize("net.pool", params.pool)?;
    params.probes = cfg.or_usize("net.probes", params.probes)?;
    params.weight_samples = cfg.or_usize("net.weight_samples", params.weight_samples)?;
    Ok(params)
}

/// `[action]`: kind = rotation | cyclic | translation | trivial.
pub fn action(cfg: &Config, space: &CompactSpace) -> Result<ActionSpec, CliError> {
    let kind = cfg.or_str("action.kind", "rotation");
    let spec = match kind.as_str() {
        "rotation" => {
            let alpha = cfg.f64("action.alpha")?;
            let free = cfg.or_bool("action.free", true)?;
            let ergodic = cfg.or_bool("action.ergodic", true)?;
            ActionSpec::circle_rotation(alpha, free, ergodic)?
        }
        "cyclic" => {
            let n = cfg.usize("action.n")?;
            let p = cfg.or_usize("action.p", 1)?;
            ActionSpec::cyclic_rotation(p, n)?
        }
        "translation" => {
            let vectors = cfg.vectors("action.vectors")?;
            ActionSpec::torus_translation(space.dim(), vectors)?
        }
        "trivial" => {
            let group = group_spec(&cfg.or_str("action.group", "trivial"))?;
            ActionSpec::trivial(group, *space)?
        }
        other => Err(bad(format!(
            "action.kind must be rotation, cyclic, translation or trivial, got '{other}'"
        )))?,
    };
    if spec.space() != space {
        return Err(bad(format!(
            "action kind '{kind}' does not act on the configured space"
        )));
    }
    Ok(spec)
}

/// Group spellings for the trivial action: `trivial`, `integers:d`,
/// `free:k`, `cyclic:n`.
pub fn group_spec(text: &str) -> Result<GroupSpec, CliError> {
    if text == "trivial" {
        return Ok(GroupSpec::trivial());
    }
    let (name, arg) = text
        .split_once(':')
        .ok_or_else(|| bad(format!("group '{text}' must be trivial, integers:d, free:k or cyclic:n")))?;
    let n: usize = arg
        .parse()
        .map_err(|_| bad(format!("group '{text}': '{arg}' is not an integer")))?;
    let spec = match name {
        "integers" => GroupSpec::integers(n)?,
        "free" => GroupSpec::free(n)?,
        "cyclic" => GroupSpec::cyclic(n)?,
        _ => {
            return Err(bad(format!(
                "group '{text}' must be trivial, integers:d, free:k or cyclic:n"
            )))
        }
    };
    Ok(spec)
}

/// `[level]`: construction caps shared by every level the command builds.
pub fn level_params(cfg: &Config) -> Result<WarpedLevelParams, CliError> {
    let defaults = WarpedLevelParams::default();
    Ok(WarpedLevelParams {
        snap_tolerance: cfg.opt_f64("level.snap_tolerance")?,
        point_cap: cfg.or_usize("level.point_cap", defaults.point_cap)?,
    })
}

pub fn level(
    net: &Arc<Net>,
    action: &Arc<ActionSpec>,
    t: f64,
    params: &WarpedLevelParams,
) -> Result<Arc<WarpedLevel>, CliError> {
    Ok(Arc::new(warped_level(net.clone(), action.clone(), t, params)?))
}

pub fn build(cfg: &Config) -> Result<(Arc<Net>, Arc<ActionSpec>), CliError> {
    let space = space(cfg)?;
    let net_params = net_params(cfg)?;
    let action = action(cfg, &space)?;
    let net = build_net(&space, &net_params)?;
    Ok((Arc::new(net), Arc::new(action)))
}

/// Enumeration caps under the given section, library defaults otherwise.
pub fn enumeration_params(cfg: &Config, section: &str) -> Result<EnumerationParams, CliError> {
    let defaults = EnumerationParams::default();
    Ok(EnumerationParams {
        map_cap: cfg.or_usize(&format!("{section}.map_cap"), defaults.map_cap)?,
        node_budget: cfg.or_u64(&format!("{section}.node_budget"), defaults.node_budget)?,
        orbit_cap: cfg.or_usize(&format!("{section}.orbit_cap"), defaults.orbit_cap)?,
        allow_truncation: cfg.or_bool(&format!("{section}.allow_truncation"), defaults.allow_truncation)?,
    })
}

/// Group words from config into elements of the acting group.
pub fn gammas(
    cfg: &Config,
    key: &str,
    default: &str,
    group: &GroupSpec,
) -> Result<Vec<GroupElement>, CliError> {
    cfg.words(key, default)?
        .iter()
        .map(|labels| {
            if labels.is_empty() {
                Ok(GroupElement::identity())
            } else {
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                Ok(group.element_from_labels(&refs)?)
            }
        })
        .collect()
}
