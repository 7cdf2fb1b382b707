use std::path::Path;

use swlb_core::sim::{Design, Scenario, Sim1Config, Sim2Config, DEFAULT_BOOTSTRAP_REPLICATES};
use swlb_core::{Error, Result};

pub const BUNDLED: [(&str, &str); 6] = [
    (
        "sim1-representative",
        include_str!("../scenarios/sim1-representative.toml"),
    ),
    (
        "sim1-informative-low",
        include_str!("../scenarios/sim1-informative-low.toml"),
    ),
    (
        "sim1-informative-high",
        include_str!("../scenarios/sim1-informative-high.toml"),
    ),
    (
        "sim2-representative",
        include_str!("../scenarios/sim2-representative.toml"),
    ),
    (
        "sim2-informative-low",
        include_str!("../scenarios/sim2-informative-low.toml"),
    ),
    (
        "sim2-informative-high",
        include_str!("../scenarios/sim2-informative-high.toml"),
    ),
];

/// A bundled scenario name, or a path to a TOML file.
pub fn load(spec: &str) -> Result<Scenario> {
    if let Some((name, text)) = BUNDLED.iter().find(|(n, _)| *n == spec) {
        return parse(text, name);
    }
    let path = Path::new(spec);
    if !path.exists() {
        let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
        return Err(Error::InvalidConfig(format!(
            "no scenario file `{spec}` and no bundled scenario of that name (bundled: {})",
            names.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse(&text, stem)
}

fn take_string(table: &mut toml::Table, key: &str) -> Result<Option<String>> {
    match table.remove(key) {
        None => Ok(None),
        Some(toml::Value::String(s)) => Ok(Some(s)),
        Some(v) => Err(Error::InvalidConfig(format!("`{key}` must be a string, got {v}"))),
    }
}

/// Parses scenario TOML. `name` and `bootstrap_replicates` are optional;
/// `simulation` selects the design and every other key must be a field of
/// that design.
pub fn parse(text: &str, default_name: &str) -> Result<Scenario> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::InvalidConfig(format!("scenario TOML: {}", e.message())))?;
    let name = take_string(&mut table, "name")?.unwrap_or_else(|| default_name.to_string());
    let simulation = take_string(&mut table, "simulation")?
        .ok_or_else(|| Error::InvalidConfig("scenario is missing the `simulation` key".into()))?;
    let bootstrap_replicates = match table.remove("bootstrap_replicates") {
        None => DEFAULT_BOOTSTRAP_REPLICATES,
        Some(toml::Value::Integer(b)) if b >= 0 => b as usize,
        Some(v) => {
            return Err(Error::InvalidConfig(format!(
                "`bootstrap_replicates` must be a non-negative integer, got {v}"
            )))
        }
    };
    let rest = toml::Value::Table(table);
    let design_err = |e: toml::de::Error| Error::InvalidConfig(format!("scenario `{name}`: {}", e.message()));
    let design = match simulation.as_str() {
        "sim1" => Design::Sim1(rest.try_into::<Sim1Config>().map_err(design_err)?),
        "sim2" => Design::Sim2(rest.try_into::<Sim2Config>().map_err(design_err)?),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown simulation `{other}`, expected `sim1` or `sim2`"
            )))
        }
    };
    Ok(Scenario {
        name,
        bootstrap_replicates,
        design,
    })
}
