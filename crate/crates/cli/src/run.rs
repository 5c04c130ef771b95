use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::{json, Value};

use crate::failure::{CliResult, Classify};
use crate::settings::Settings;

/// Options shared by every command.
#[derive(Debug, Args)]
pub struct Common {
    /// Run directory receiving outputs, config.json and summary.json.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON config with flat dotted keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    /// Defaults, then the config file, then `--set`, then `--seed`.
    pub fn settings(&self, mut defaults: Vec<(&str, Value)>) -> CliResult<Settings> {
        defaults.push(("seed", json!(0)));
        defaults.push(("output.dir", json!("")));
        let mut settings = Settings::new(defaults);
        if let Some(path) = &self.config {
            settings.merge_file(path)?;
        }
        for assignment in &self.overrides {
            settings.assign(assignment)?;
        }
        settings.set_opt("seed", self.seed)?;
        settings.set("output.dir", json!(self.out.display().to_string()))?;
        Ok(settings)
    }
}

pub fn path_value(path: &Path) -> Value {
    json!(path.display().to_string())
}

pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    pub fn create(path: &Path) -> CliResult<Self> {
        fs::create_dir_all(path).or_data(&format!("creating {}", path.display()))?;
        Ok(Self {
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.file(name);
        fs::write(&path, contents).or_data(&format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Persists the resolved config and the machine-readable summary.
    pub fn finish(&self, command: &str, settings: &Settings, summary: Value) -> CliResult<()> {
        let mut config = settings.to_json();
        config["command"] = json!(command);
        let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json values always serialize") + "\n";
        self.write("config.json", &pretty(&config))?;
        let mut summary = summary;
        summary["command"] = json!(command);
        self.write("summary.json", &pretty(&summary))?;
        Ok(())
    }
}

/// Shortest round-trip formatting for CSV cells.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Compact threshold label for JSON keys, e.g. `0.06` rather than `0.060000000000000005`.
pub fn label(t: f64) -> String {
    let s = format!("{t:.6}");
    match s.trim_end_matches('0').trim_end_matches('.') {
        "" | "-" => "0".to_string(),
        t => t.to_string(),
    }
}
