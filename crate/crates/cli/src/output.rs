//! CSV tables and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lgqa::experiments::{K3Result, ResEnergyPoint, SingleAnneal};
use serde::Serialize;

use crate::config::Config;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn lgi_csv(rows: &[K3Result]) -> String {
    let mut s = String::from("tau,variant,k3,stderr\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(r.tau),
            r.variant.label(),
            fmt_f64(r.value),
            fmt_f64(r.stderr)
        );
    }
    s
}

pub fn resenergy_csv(rows: &[ResEnergyPoint]) -> String {
    let mut s = String::from("D,tau,res_energy,fidelity\n");
    for p in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(p.d),
            fmt_f64(p.tau),
            fmt_f64(p.run.res_energy),
            fmt_f64(p.run.fidelity)
        );
    }
    s
}

pub fn anneal_csv(run: &SingleAnneal) -> String {
    format!(
        "res_energy,fidelity\n{},{}\n",
        fmt_f64(run.res_energy),
        fmt_f64(run.fidelity)
    )
}

pub fn anneal_trace_csv(run: &SingleAnneal) -> String {
    let mut s = String::from("t,sigma_z\n");
    for &(t, z) in &run.sigma_z {
        let _ = writeln!(s, "{},{}", fmt_f64(t), fmt_f64(z));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub master_seed: u64,
    pub duration_seconds: f64,
    pub config: Config,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n")
    }
}
