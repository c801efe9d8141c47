//! Deterministic artifact writers and the run manifest.

use bilattice::bound_state::BoundStateSolution;
use bilattice::lattice::Layer;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Reals are written with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// In-memory CSV; rows are joined with `\n` and the file ends with one.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn reals(&mut self, xs: &[f64]) {
        let cells: Vec<String> = xs.iter().map(|&x| real(x)).collect();
        self.row(&cells);
    }
}

/// Collects written files and produces the manifest at the end of a run.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push((name.to_string(), hex::encode(Sha256::digest(bytes))));
        Ok(())
    }

    pub fn csv(&mut self, name: &str, csv: Csv) -> std::io::Result<()> {
        self.put(name, csv.text.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn finish(mut self, command: &str, canonical_config: &str, wall_time: f64) -> std::io::Result<PathBuf> {
        let config: Value = serde_json::from_str(canonical_config).expect("canonical config is JSON");
        let outputs: Vec<Value> = self.files.iter().map(|(n, h)| json!({"path": n, "sha256": h})).collect();
        let manifest = json!({
            "command": command,
            "config_sha256": hex::encode(Sha256::digest(canonical_config.as_bytes())),
            "config": config,
            "versions": {
                "bilattice": bilattice::VERSION,
                "bilattice-cli": env!("CARGO_PKG_VERSION"),
            },
            "threads": rayon::current_num_threads(),
            "wall_time_s": wall_time,
            "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "outputs": outputs,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text)?;
        self.files.clear();
        Ok(path)
    }
}

/// Field dump with rows `(layer, n_x, n_y, re, im)` inside `|n|_∞ ≤ window`,
/// layer slowest, then `n_y`, then `n_x`.
pub fn field_csv(sol: &BoundStateSolution, layers: &[Layer], window: i64) -> Csv {
    let mut csv = Csv::new(&["layer", "n_x", "n_y", "re", "im"]);
    for &layer in layers {
        let f = sol.field(layer);
        for y in -window..=window {
            for x in -window..=window {
                let v = f.get(x, y);
                csv.row(&[u8::from(layer).to_string(), x.to_string(), y.to_string(), real(v.re), real(v.im)]);
            }
        }
    }
    csv
}

/// JSON sidecar for a field dump.
pub fn field_sidecar(sol: &BoundStateSolution, params: Value) -> Value {
    json!({
        "E_BS": sol.energy,
        "c_e": sol.c_e,
        "method": sol.method,
        "under_resolved": sol.under_resolved,
        "params": params,
    })
}

/// Human-readable list of written files for stdout.
pub fn summary_line(art: &Artifacts) -> String {
    let mut s = String::new();
    for n in art.names() {
        let _ = write!(s, " {n}");
    }
    format!("wrote{s} manifest.json to {}", art.dir().display())
}
