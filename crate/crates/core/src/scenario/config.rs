use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dressing::SystemParams;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    DressAudit,
    RwaValidate,
    SingleLaser,
    SqueezedLaser,
    TwoQubitFull,
    FidelitySweep,
    WignerPanels,
    MfCompare,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::DressAudit,
        ScenarioKind::RwaValidate,
        ScenarioKind::SingleLaser,
        ScenarioKind::SqueezedLaser,
        ScenarioKind::TwoQubitFull,
        ScenarioKind::FidelitySweep,
        ScenarioKind::WignerPanels,
        ScenarioKind::MfCompare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::DressAudit => "dress_audit",
            ScenarioKind::RwaValidate => "rwa_validate",
            ScenarioKind::SingleLaser => "single_laser",
            ScenarioKind::SqueezedLaser => "squeezed_laser",
            ScenarioKind::TwoQubitFull => "two_qubit_full",
            ScenarioKind::FidelitySweep => "fidelity_sweep",
            ScenarioKind::WignerPanels => "wigner_panels",
            ScenarioKind::MfCompare => "mf_compare",
        }
    }

    /// Scenarios that produce one CSV row per sweep point.
    pub fn sweepable(&self) -> bool {
        matches!(
            self,
            ScenarioKind::SingleLaser
                | ScenarioKind::SqueezedLaser
                | ScenarioKind::TwoQubitFull
                | ScenarioKind::FidelitySweep
                | ScenarioKind::MfCompare
        )
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialQubit {
    Excited,
    Ground,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Direct,
    Evolve,
}

/// Model parameters. Rates are in units of the qubit decay `γ`, except for
/// the RWA check which works in units of the bare coupling `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub gamma: f64,
    pub kappa: f64,
    /// Bare cooperativity `g²/γκ` of the single-qubit laser.
    pub c: f64,
    pub c_tilde: f64,
    pub c_prime: f64,
    /// Squeezing parameter; derived from `eta1`, `eta2` when absent.
    pub r: Option<f64>,
    pub eta1: f64,
    pub eta2: f64,
    /// Auxiliary coupling ratio `g̃′/γ′`.
    pub g_ratio: f64,
    /// Extra full-model curves in fidelity sweeps.
    pub g_ratio_values: Vec<f64>,
    pub c_prime_values: Vec<f64>,
    pub epsilon: f64,
    pub omega: f64,
    pub drive1_offset: f64,
    pub drive2_offset: f64,
    /// Final time in units of `1/g̃`.
    pub t_max: f64,
    pub n_times: usize,
    pub initial: InitialQubit,
    /// Laboratory parameters for the resonance audit (any frequency unit).
    pub physical: SystemParams,
    pub max_index: i32,
}

pub fn paper_physical() -> SystemParams {
    let mut p = SystemParams::sideband(4.5e9, 10.0e9, 40.0e6, 0.16, 0.2, 15.0e6, 30.0e3);
    p.g_prime = Some(70.0e6);
    p.gamma_prime = Some(250.0e6);
    p
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            kappa: 0.1,
            c: 5.0,
            c_tilde: 5.0,
            c_prime: 10.0,
            r: Some(0.55),
            eta1: 0.16,
            eta2: 0.2,
            g_ratio: 0.02,
            g_ratio_values: Vec::new(),
            c_prime_values: vec![10.0, 0.01],
            epsilon: 250.0,
            omega: 112.5,
            drive1_offset: 0.0,
            drive2_offset: 0.0,
            t_max: 3.0,
            n_times: 31,
            initial: InitialQubit::Excited,
            physical: paper_physical(),
            max_index: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub field_dim: usize,
    /// Upper bound for automatic enlargement after truncation failures.
    pub max_field_dim: usize,
    pub n_phases: usize,
    pub atol: f64,
    pub rtol: f64,
    pub bessel_cutoff: usize,
    pub grid_points: usize,
    pub solver: SolverChoice,
    /// Also solve the two-qubit model in fidelity sweeps.
    pub two_qubit: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            field_dim: 40,
            max_field_dim: 120,
            n_phases: 64,
            atol: 1e-10,
            rtol: 1e-8,
            bessel_cutoff: 8,
            grid_points: 96,
            solver: SolverChoice::Direct,
            two_qubit: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

/// Parameters that may be swept.
pub const SWEEPABLE: [&str; 9] = [
    "c",
    "c_tilde",
    "c_prime",
    "g_ratio",
    "kappa",
    "r",
    "eta1",
    "eta2",
    "drive1_offset",
];

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| self.start + h * k as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !SWEEPABLE.contains(&self.parameter.as_str()) {
            return Err(Error::Config(format!(
                "sweep parameter '{}' is not one of {:?}",
                self.parameter, SWEEPABLE
            )));
        }
        if self.steps < 1 {
            return Err(Error::Config("sweep needs at least one step".into()));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config("sweep range must be finite".into()));
        }
        if self.steps > 1 && self.start == self.stop {
            return Err(Error::Config("sweep range is empty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    /// Output directory; excluded from the configuration hash.
    #[serde(skip_serializing)]
    pub dir: Option<String>,
    pub format: OutputFormat,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            dir: None,
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputOptions,
}

impl RunConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            params: ModelParams::default(),
            sweep: None,
            numerics: Numerics::default(),
            output: OutputOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let n = &self.numerics;
        if let Some(s) = &self.sweep {
            s.validate()?;
            if !self.scenario.sweepable() {
                return Err(Error::Config(format!(
                    "scenario {} does not take a sweep",
                    self.scenario
                )));
            }
        }
        for (name, x) in [
            ("gamma", p.gamma),
            ("kappa", p.kappa),
            ("epsilon", p.epsilon),
            ("omega", p.omega),
            ("t_max", p.t_max),
        ] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Config(format!("params.{name} must be positive (got {x})")));
            }
        }
        for (name, x) in [
            ("c", p.c),
            ("c_tilde", p.c_tilde),
            ("c_prime", p.c_prime),
            ("g_ratio", p.g_ratio),
            ("eta1", p.eta1),
            ("eta2", p.eta2),
        ] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::Config(format!("params.{name} must be non-negative (got {x})")));
            }
        }
        if p.n_times < 2 {
            return Err(Error::Config("params.n_times must be at least 2".into()));
        }
        if n.field_dim < 2 || n.max_field_dim < n.field_dim {
            return Err(Error::Config("need 2 <= field_dim <= max_field_dim".into()));
        }
        if n.n_phases < 16 {
            return Err(Error::Config("numerics.n_phases must be at least 16".into()));
        }
        if n.grid_points < 16 {
            return Err(Error::Config("numerics.grid_points must be at least 16".into()));
        }
        if !(n.atol > 0.0) || !(n.rtol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if n.bessel_cutoff < 1 || n.bessel_cutoff > crate::dressing::MAX_ORDER as usize {
            return Err(Error::Config("numerics.bessel_cutoff must be in 1..=64".into()));
        }
        p.physical.validate()?;
        Ok(())
    }
}

pub const PRESETS: [&str; 2] = ["paper-2013", "desk"];

/// Partial configuration applied on top of the defaults.
pub fn preset(name: &str) -> Result<Value> {
    match name {
        "desk" => Ok(serde_json::json!({
            "params": {
                "gamma": 1.0, "kappa": 0.1, "r": 0.55, "c_tilde": 5.0, "c_prime": 10.0,
                "g_ratio_values": [0.02, 0.07]
            },
            "numerics": { "field_dim": 40, "max_field_dim": 120 }
        })),
        "paper-2013" => Ok(serde_json::json!({
            "params": {
                "gamma": 1.0, "kappa": 0.02, "r": 1.15, "eta1": 0.16, "eta2": 0.2,
                "c_tilde": 5.0, "c_prime": 10.0, "c_prime_values": [10.0, 0.01],
                "g_ratio_values": [0.02, 0.05, 0.07],
                "physical": serde_json::to_value(paper_physical())?
            },
            "numerics": { "field_dim": 60, "max_field_dim": 240, "grid_points": 128 }
        })),
        other => Err(Error::Config(format!(
            "unknown preset '{other}', expected one of {PRESETS:?}"
        ))),
    }
}

/// Recursive object merge; non-object values in `patch` replace `base`.
pub fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// Applies a `dotted.path=value` override. The value is parsed as JSON and
/// falls back to a plain string.
pub fn apply_override(cfg: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("malformed override path '{path}'")));
    }
    let mut node = cfg;
    for k in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a non-object")))?;
        node = obj
            .entry(k.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a non-object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Defaults, then preset, then file contents, then overrides.
pub fn resolve(
    scenario: Option<ScenarioKind>,
    preset_name: Option<&str>,
    file: Option<&Value>,
    overrides: &[String],
) -> Result<RunConfig> {
    let mut cfg = serde_json::to_value(RunConfig::new(scenario.unwrap_or(ScenarioKind::SingleLaser)))?;
    if let Some(name) = preset_name {
        merge(&mut cfg, &preset(name)?);
    }
    if let Some(f) = file {
        if !f.is_object() {
            return Err(Error::Config("configuration file must hold a JSON object".into()));
        }
        merge(&mut cfg, f);
    }
    if let Some(s) = scenario {
        cfg["scenario"] = Value::String(s.name().into());
    }
    for o in overrides {
        apply_override(&mut cfg, o)?;
    }
    let out: RunConfig = serde_json::from_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        for k in ScenarioKind::ALL {
            let c = RunConfig::new(k);
            c.validate().unwrap();
            let v = serde_json::to_value(&c).unwrap();
            let back: RunConfig = serde_json::from_value(v).unwrap();
            assert_eq!(back, c);
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
        }
    }

    #[test]
    fn overrides_and_presets() {
        let c = resolve(
            Some(ScenarioKind::SqueezedLaser),
            Some("paper-2013"),
            None,
            &["params.c_tilde=3.5".into(), "numerics.field_dim=50".into()],
        )
        .unwrap();
        assert_eq!(c.params.c_tilde, 3.5);
        assert_eq!(c.params.kappa, 0.02);
        assert_eq!(c.numerics.field_dim, 50);
        assert_eq!(c.params.physical.epsilon, 10.0e9);
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(resolve(None, None, None, &["params.nope=1".into()]).is_err());
        assert!(resolve(None, Some("lab"), None, &[]).is_err());
        assert!(resolve(None, None, None, &["params.kappa".into()]).is_err());
        let bad_sweep = serde_json::json!({"sweep": {"parameter": "zeta", "start": 0, "stop": 1, "steps": 3}});
        assert!(resolve(None, None, Some(&bad_sweep), &[]).is_err());
        let no_steps = serde_json::json!({"sweep": {"parameter": "c", "start": 0, "stop": 1, "steps": 0}});
        assert!(resolve(None, None, Some(&no_steps), &[]).is_err());
        let audit = serde_json::json!({"sweep": {"parameter": "c", "start": 1, "stop": 2, "steps": 2}});
        assert!(resolve(Some(ScenarioKind::DressAudit), None, Some(&audit), &[]).is_err());
    }

    #[test]
    fn sweep_values_are_inclusive() {
        let s = Sweep {
            parameter: "c_tilde".into(),
            start: 1.0,
            stop: 2.0,
            steps: 5,
        };
        assert_eq!(s.values(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
    }
}
