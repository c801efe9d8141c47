//! Run configuration: parsing with path-tracked errors, flag overrides,
//! semantic checks and canonical echo.

use bilattice::bound_state::{EmitterConfig, Method};
use bilattice::lattice::{LatticeSpec, Layer};
use bilattice::spin_model::{ssh_geometry, uniform_geometry, SpinArray, SpinSite};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ConfigError {
    /// `(JSON pointer, message)` pairs.
    pub issues: Vec<(String, String)>,
}

impl ConfigError {
    pub fn at(pointer: &str, msg: impl Into<String>) -> Self {
        ConfigError { issues: vec![(pointer.to_string(), msg.into())] }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.issues.iter().map(|(p, m)| format!("{}: {m}", if p.is_empty() { "/" } else { p })).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub emitter: Option<EmitterConfig>,
    #[serde(default)]
    pub spins: Option<SpinsBlock>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub entangle: Option<EntangleBlock>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Topological,
    Trivial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuilderKind {
    Ssh,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBuilder {
    pub kind: BuilderKind,
    #[serde(default = "default_side")]
    pub n: usize,
    #[serde(default = "default_phase")]
    pub phase: Phase,
}

fn default_side() -> usize {
    12
}

fn default_phase() -> Phase {
    Phase::Topological
}

impl GeometryBuilder {
    pub fn build(&self) -> SpinArray {
        match self.kind {
            BuilderKind::Ssh => ssh_geometry(self.n, self.phase == Phase::Topological),
            BuilderKind::Uniform => uniform_geometry(self.n),
        }
    }
}

/// Spin positions, either listed or generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinsBlock {
    #[serde(default)]
    pub sites: Vec<SpinSite>,
    #[serde(default)]
    pub builder: Option<GeometryBuilder>,
    /// Emitter-bath coupling of every spin.
    #[serde(default = "default_g")]
    pub g: f64,
}

impl SpinsBlock {
    pub fn array(&self) -> Result<SpinArray, bilattice::Error> {
        match &self.builder {
            Some(b) => Ok(b.build()),
            None => SpinArray::new("listed", self.sites.clone()),
        }
    }
}

fn default_g() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_nk")]
    pub n_k: i64,
    #[serde(default = "default_bins")]
    pub n_bins: i64,
    /// Field CSVs cover `|n|_∞ ≤ window`.
    #[serde(default = "default_window")]
    pub window: i64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_occ")]
    pub n_occ: usize,
    #[serde(default = "default_wilson")]
    pub wilson_n_k: usize,
    /// Allow giant atoms whose points mix Λ-sublattices.
    #[serde(default)]
    pub allow_odd: bool,
}

fn default_nk() -> i64 {
    256
}
fn default_bins() -> i64 {
    200
}
fn default_window() -> i64 {
    15
}
fn default_method() -> Method {
    Method::Quadrature
}
fn default_occ() -> usize {
    1
}
fn default_wilson() -> usize {
    64
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            n_k: default_nk(),
            n_bins: default_bins(),
            window: default_window(),
            method: default_method(),
            n_occ: default_occ(),
            wilson_n_k: default_wilson(),
            allow_odd: false,
        }
    }
}

impl Numerics {
    pub fn n_k(&self) -> usize {
        self.n_k as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntangleBlock {
    #[serde(default = "default_spokes")]
    pub n_spokes: usize,
    /// Taken from the bound-state field when absent.
    #[serde(default)]
    pub j_eff: Option<f64>,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default = "default_offset")]
    pub spoke_offset: i64,
    /// Decay rate in units of `J_eff`.
    #[serde(default)]
    pub gamma: f64,
    /// End time in units of `1/J_eff`.
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub full_space: bool,
}

fn default_spokes() -> usize {
    8
}
fn default_offset() -> i64 {
    2
}
fn default_t_end() -> f64 {
    2.0
}
fn default_steps() -> usize {
    400
}

impl Default for EntangleBlock {
    fn default() -> Self {
        serde_json::from_value(serde_json::json!({})).expect("defaults deserialize")
    }
}

pub fn default_document() -> Value {
    serde_json::json!({
        "lattice": {"Lx": 41, "Ly": 41, "J": 1.0, "eta": -1.0, "G": 0.25, "boundary": "open", "disorder": null}
    })
}

pub fn read_document(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::at("", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError::at("", format!("invalid JSON: {e}")))
}

/// Sets `pointer` to a value parsed from `raw` (JSON literal, or a plain
/// string when it does not parse), creating objects on the way.
pub fn apply_override(doc: &mut Value, pointer: &str, raw: &str) -> Result<(), ConfigError> {
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let keys: Vec<&str> = pointer.trim_start_matches('/').split('/').collect();
    for (i, key) in keys.iter().enumerate() {
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| ConfigError::at(&format!("/{}", keys[..i].join("/")), "not an object"))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(key.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut s = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => s.push_str(&format!("/{index}")),
            Segment::Map { key } => s.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => s.push_str(&format!("/{variant}")),
            Segment::Unknown => s.push_str("/?"),
        }
    }
    s
}

pub fn parse(doc: Value) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_path_to_error::deserialize(doc)
        .map_err(|e| ConfigError::at(&pointer_of(e.path()), e.inner().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut check = |ok: bool, p: &str, m: &str| {
            if !ok {
                issues.push((p.to_string(), m.to_string()));
            }
        };
        let l = &self.lattice;
        check(l.lx >= 3, "/lattice/Lx", "must be at least 3");
        check(l.ly >= 3, "/lattice/Ly", "must be at least 3");
        check(l.j.is_finite() && l.j != 0.0, "/lattice/J", "must be finite and nonzero");
        check(l.eta.is_finite() && l.eta < 0.0, "/lattice/eta", "must be negative: the middle gap needs eta < 0");
        check(l.g.is_finite() && l.g > 0.0, "/lattice/G", "must be positive: the middle gap needs G != 0");
        if let Some(d) = &l.disorder {
            check(d.w_intra >= 0.0, "/lattice/disorder/W_intra", "must be non-negative");
            check(d.w_inter >= 0.0, "/lattice/disorder/W_inter", "must be non-negative");
        }
        let n = &self.numerics;
        check(n.n_k > 0, "/numerics/n_k", "must be positive");
        check(n.n_k <= 0 || n.n_k % 4 == 0, "/numerics/n_k", "must be a multiple of 4");
        check(n.n_bins > 0, "/numerics/n_bins", "must be positive");
        check(n.window >= 0, "/numerics/window", "must be non-negative");
        check(n.n_occ >= 1 && n.n_occ <= 3, "/numerics/n_occ", "must lie in 1..=3");
        check(n.wilson_n_k >= 4, "/numerics/wilson_n_k", "must be at least 4");
        if let Some(e) = &self.emitter {
            check(e.delta.is_finite(), "/emitter/delta", "must be finite");
            check(!e.points.is_empty(), "/emitter/points", "needs at least one coupling point");
            for (i, p) in e.points.iter().enumerate() {
                check(p.g.is_finite() && p.g != 0.0, &format!("/emitter/points/{i}/g"), "must be finite and nonzero");
            }
        }
        if let Some(s) = &self.spins {
            check(s.builder.is_some() || !s.sites.is_empty(), "/spins", "needs sites or a builder");
            check(s.builder.is_none() || s.sites.is_empty(), "/spins", "give either sites or a builder, not both");
            check(s.g.is_finite() && s.g > 0.0, "/spins/g", "must be positive");
        }
        if let Some(e) = &self.entangle {
            check(e.n_spokes >= 1, "/entangle/n_spokes", "must be at least 1");
            check(e.gamma.is_finite() && e.gamma >= 0.0, "/entangle/gamma", "must be non-negative");
            check(e.t_end.is_finite() && e.t_end > 0.0, "/entangle/t_end", "must be positive");
            check(e.steps >= 1, "/entangle/steps", "must be at least 1");
            check(e.j_eff.is_none_or(|j| j.is_finite() && j != 0.0), "/entangle/j_eff", "must be finite and nonzero");
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues })
        }
    }

    pub fn emitter(&self) -> EmitterConfig {
        self.emitter.clone().unwrap_or_else(|| EmitterConfig::small(0.0, Layer::One, 0.1))
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
