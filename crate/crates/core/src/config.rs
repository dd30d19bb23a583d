//! Flat `key = value` configuration with `[section]` headers, and the run
//! manifest that makes a run reproducible from one file.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! written config parses back to bit-identical values.

use std::fmt::Write as _;

use crate::altitude::AltitudeParams;
use crate::controller::{ControllerParams, SignConvention};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::plant::PlantState;
use crate::reference::AxisMode;
use crate::simulator::{GainPreset, Scenario, SimConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub section: String,
    pub key: String,
    pub value: String,
}

/// Splits text into entries. Blank lines and lines starting with `#` are
/// skipped; keys before the first header belong to section `""`.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut section = String::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                line,
                message: format!("unterminated section header `{s}`"),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config { line, message: format!("expected `key = value`, got `{s}`") })?;
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::Config { line, message: "empty key".into() });
        }
        out.push(Entry { line, section: section.clone(), key: key.to_string(), value: v.trim().to_string() });
    }
    Ok(out)
}

fn bad(e: &Entry, message: impl Into<String>) -> Error {
    Error::Config { line: e.line, message: format!("{}.{}: {}", e.section, e.key, message.into()) }
}

fn num(e: &Entry) -> Result<f64> {
    e.value.parse::<f64>().map_err(|_| bad(e, format!("`{}` is not a number", e.value)))
}

fn nums<const N: usize>(e: &Entry) -> Result<[f64; N]> {
    let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(bad(e, format!("expected {N} comma-separated numbers, got {}", parts.len())));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| bad(e, format!("`{p}` is not a number")))?;
    }
    Ok(out)
}

fn switch(e: &Entry) -> Result<bool> {
    match e.value.as_str() {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        other => Err(bad(e, format!("expected on/off, got `{other}`"))),
    }
}

fn find<'a>(entries: &'a [Entry], section: &str, key: &str) -> Option<&'a Entry> {
    entries.iter().rev().find(|e| e.section == section && e.key == key)
}

/// Parses a config or manifest. Scenario, preset and gravity are read first
/// and select the defaults every other key overrides.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let entries = parse_entries(text)?;
    let scenario = match find(&entries, "run", "scenario") {
        Some(e) => {
            Scenario::parse(&e.value).ok_or_else(|| bad(e, "expected periodic, polynomial or custom"))?
        }
        None => Scenario::Periodic,
    };
    let mut c = SimConfig::for_scenario(scenario);
    if let Some(e) = find(&entries, "plant", "g") {
        let g = num(e)?;
        if !(g > 0.0 && g.is_finite()) {
            return Err(bad(e, "gravity must be positive"));
        }
        c.g = g;
        c.altitude = AltitudeParams::nominal(g);
        c.controller = ControllerParams::nominal(g);
    }
    if let Some(e) = find(&entries, "run", "preset") {
        let p = GainPreset::parse(&e.value).ok_or_else(|| bad(e, "expected paper or fast"))?;
        c = c.with_preset(p);
    }
    for e in &entries {
        apply(&mut c, e)?;
    }
    Ok(c)
}

fn apply(c: &mut SimConfig, e: &Entry) -> Result<()> {
    match (e.section.as_str(), e.key.as_str()) {
        ("run", "scenario") | ("run", "preset") | ("plant", "g") => {}
        ("manifest", "version") | ("manifest", "log") | ("manifest", "metrics") => {}
        ("run", "t_final") => c.t_final = num(e)?,
        ("run", "dt_plant") => c.dt_plant = num(e)?,
        ("run", "dt_observer") => c.dt_observer = num(e)?,
        ("run", "internal_model") => c.internal_model = switch(e)?,
        ("run", "tail_fraction") => c.tail_fraction = num(e)?,
        ("reference", key) => apply_reference(c, e, key)?,
        ("altitude", "r0") => c.altitude.r0 = num(e)?,
        ("altitude", "r1") => c.altitude.r1 = num(e)?,
        ("altitude", "ell") => c.altitude.ell = num(e)?,
        ("altitude", "z_star") => c.altitude.z_star = num(e)?,
        ("controller", key) => apply_controller(c, e, key)?,
        ("envelope", "max_theta") => c.envelope.max_theta = num(e)?,
        ("envelope", "max_psi") => c.envelope.max_psi = num(e)?,
        ("observer", "kappa") => c.kappa = num(e)?,
        ("observer", "l") => c.l = nums::<4>(e)?,
        ("initial", key) => {
            let v = num(e)?;
            let s = &mut c.initial;
            let slot = match key {
                "x" => &mut s.x,
                "vx" => &mut s.vx,
                "y" => &mut s.y,
                "vy" => &mut s.vy,
                "z" => &mut s.z,
                "vz" => &mut s.vz,
                "theta" => &mut s.theta,
                "dtheta" => &mut s.dtheta,
                "psi" => &mut s.psi,
                "dpsi" => &mut s.dpsi,
                _ => return Err(bad(e, "unknown key")),
            };
            *slot = v;
        }
        _ => return Err(bad(e, "unknown key")),
    }
    Ok(())
}

fn apply_reference(c: &mut SimConfig, e: &Entry, key: &str) -> Result<()> {
    let (axis, field) = key.split_once('_').ok_or_else(|| bad(e, "unknown key"))?;
    let mode = match axis {
        "x" => &mut c.reference.x,
        "y" => &mut c.reference.y,
        _ => return Err(bad(e, "unknown key")),
    };
    if field == "mode" {
        match (e.value.as_str(), *mode) {
            ("periodic", AxisMode::Periodic { .. }) | ("polynomial", AxisMode::Polynomial { .. }) => {}
            ("periodic", _) => *mode = AxisMode::Periodic { c: 0.0, a: 0.0, omega: 0.0, phi: 0.0 },
            ("polynomial", _) => *mode = AxisMode::Polynomial { c0: 0.0, c1: 0.0, c2: 0.0 },
            (other, _) => return Err(bad(e, format!("expected periodic or polynomial, got `{other}`"))),
        }
        return Ok(());
    }
    let v = num(e)?;
    match (mode, field) {
        (AxisMode::Periodic { c, .. }, "c") => *c = v,
        (AxisMode::Periodic { a, .. }, "a") => *a = v,
        (AxisMode::Periodic { omega, .. }, "omega") => *omega = v,
        (AxisMode::Periodic { phi, .. }, "phi") => *phi = v,
        (AxisMode::Polynomial { c0, .. }, "c0") => *c0 = v,
        (AxisMode::Polynomial { c1, .. }, "c1") => *c1 = v,
        (AxisMode::Polynomial { c2, .. }, "c2") => *c2 = v,
        _ => return Err(bad(e, "unknown key for this reference mode")),
    }
    Ok(())
}

fn apply_controller(c: &mut SimConfig, e: &Entry, key: &str) -> Result<()> {
    let p = &c.controller;
    let (mut k, mut bbar, mut nu, mut sign) = (p.k(), p.bbar().clone(), p.nu(), p.sign());
    match key {
        "k" => k = nums::<4>(e)?,
        "bbar" => {
            let b = nums::<4>(e)?;
            bbar = Matrix::from_rows(&[[b[0], b[1]], [b[2], b[3]]]).map_err(|err| bad(e, err.to_string()))?;
        }
        "nu" => nu = num(e)?,
        "sign" => {
            sign = SignConvention::parse(&e.value).ok_or_else(|| bad(e, "expected negative or as-given"))?;
        }
        _ => return Err(bad(e, "unknown key")),
    }
    c.controller = ControllerParams::new(k, bbar, nu, sign).map_err(|err| bad(e, err.to_string()))?;
    Ok(())
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Writes every parameter explicitly; nothing is left to defaults.
pub fn write_config(c: &SimConfig) -> String {
    let mut s = String::new();
    let on = |b: bool| if b { "on" } else { "off" };
    let _ = writeln!(s, "[run]");
    let _ = writeln!(s, "scenario = {}", c.scenario.as_str());
    let _ = writeln!(s, "preset = {}", c.preset.as_str());
    let _ = writeln!(s, "t_final = {}", c.t_final);
    let _ = writeln!(s, "dt_plant = {}", c.dt_plant);
    let _ = writeln!(s, "dt_observer = {}", c.dt_observer);
    let _ = writeln!(s, "internal_model = {}", on(c.internal_model));
    let _ = writeln!(s, "tail_fraction = {}", c.tail_fraction);

    let _ = writeln!(s, "\n[reference]");
    for (name, mode) in [("x", &c.reference.x), ("y", &c.reference.y)] {
        match *mode {
            AxisMode::Periodic { c, a, omega, phi } => {
                let _ = writeln!(s, "{name}_mode = periodic");
                let _ = writeln!(s, "{name}_c = {c}");
                let _ = writeln!(s, "{name}_a = {a}");
                let _ = writeln!(s, "{name}_omega = {omega}");
                let _ = writeln!(s, "{name}_phi = {phi}");
            }
            AxisMode::Polynomial { c0, c1, c2 } => {
                let _ = writeln!(s, "{name}_mode = polynomial");
                let _ = writeln!(s, "{name}_c0 = {c0}");
                let _ = writeln!(s, "{name}_c1 = {c1}");
                let _ = writeln!(s, "{name}_c2 = {c2}");
            }
        }
    }

    let _ = writeln!(s, "\n[plant]\ng = {}", c.g);

    let a = &c.altitude;
    let _ = writeln!(s, "\n[altitude]");
    let _ = writeln!(s, "r0 = {}\nr1 = {}\nell = {}\nz_star = {}", a.r0, a.r1, a.ell, a.z_star);

    let p = &c.controller;
    let b = p.bbar();
    let _ = writeln!(s, "\n[controller]");
    let _ = writeln!(s, "k = {}", list(&p.k()));
    let _ = writeln!(s, "bbar = {}", list(&[b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]]));
    let _ = writeln!(s, "nu = {}", p.nu());
    let _ = writeln!(s, "sign = {}", p.sign().as_str());

    let _ = writeln!(s, "\n[envelope]");
    let _ = writeln!(s, "max_theta = {}\nmax_psi = {}", c.envelope.max_theta, c.envelope.max_psi);

    let _ = writeln!(s, "\n[observer]");
    let _ = writeln!(s, "kappa = {}\nl = {}", c.kappa, list(&c.l));

    let i: &PlantState = &c.initial;
    let _ = writeln!(s, "\n[initial]");
    for (k, v) in [
        ("x", i.x),
        ("vx", i.vx),
        ("y", i.y),
        ("vy", i.vy),
        ("z", i.z),
        ("vz", i.vz),
        ("theta", i.theta),
        ("dtheta", i.dtheta),
        ("psi", i.psi),
        ("dpsi", i.dpsi),
    ] {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

/// Fully resolved description of one run, written next to its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: SimConfig,
    pub version: String,
    pub log_path: String,
    pub metrics_path: String,
    /// Rendered certification report, stored as comments.
    pub certification: String,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# quadtrack run manifest\n[manifest]\n");
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "log = {}", self.log_path);
        let _ = writeln!(s, "metrics = {}\n", self.metrics_path);
        s.push_str(&write_config(&self.config));
        if !self.certification.is_empty() {
            s.push_str("\n# certification\n");
            for line in self.certification.lines() {
                let _ = writeln!(s, "# {line}");
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        let get = |k: &str| find(&entries, "manifest", k).map(|e| e.value.clone()).unwrap_or_default();
        let certification = text
            .lines()
            .skip_while(|l| l.trim() != "# certification")
            .skip(1)
            .filter_map(|l| l.strip_prefix("# "))
            .collect::<Vec<_>>()
            .join("\n");
        Ok(Self {
            config: parse_config(text)?,
            version: get("version"),
            log_path: get("log"),
            metrics_path: get("metrics"),
            certification,
        })
    }
}
