use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{Failure, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `"<="`, `"<"` or `">"`
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: "<=", pass: value <= bound }
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: "<", pass: value < bound }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: ">", pass: value > bound }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Everything a subcommand produces; written by [`Outcome::emit`].
#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: &'static str,
    pub config: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub results: Value,
    /// present in verify mode
    pub checks: Option<Vec<Check>>,
    pub out: Option<PathBuf>,
    pub csv: Option<(PathBuf, Table)>,
}

pub fn config_hash(command: &str, config: &Value) -> String {
    let canon = serde_json::to_string(&json!({ "command": command, "config": config })).expect("json values serialize");
    Sha256::digest(canon.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl Outcome {
    pub fn meta(&self) -> Value {
        json!({
            "tool": "isingcyl",
            "version": VERSION,
            "command": self.command,
            "config": self.config,
            "config_hash": config_hash(self.command, &self.config),
            "tolerances": self.tolerances,
        })
    }

    pub fn report(&self) -> Value {
        let mut r = json!({ "meta": self.meta(), "results": self.results });
        if let Some(c) = &self.checks {
            r["verify"] = json!({ "pass": all_pass(c), "checks": c });
        }
        r
    }

    fn csv_bytes(&self, t: &Table) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        let tol: Vec<String> = self.tolerances.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
        writeln!(buf, "# tool: isingcyl")?;
        writeln!(buf, "# version: {VERSION}")?;
        writeln!(buf, "# command: {}", self.command)?;
        writeln!(buf, "# config_hash: {}", config_hash(self.command, &self.config))?;
        writeln!(buf, "# tolerances: {}", tol.join(";"))?;
        let mut w = csv::Writer::from_writer(buf);
        let io = |e: csv::Error| Failure::Io(e.to_string());
        w.write_record(&t.header).map_err(io)?;
        for r in &t.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| Failure::Io(e.to_string()))
    }

    /// Write the report and tables; verification failures surface afterwards
    /// so the evidence is always on disk.
    pub fn emit(&self) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.report()).map_err(|e| Failure::Io(e.to_string()))?;
        text.push('\n');
        match &self.out {
            Some(p) => std::fs::write(p, &text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        if let Some((p, t)) = &self.csv {
            std::fs::write(p, self.csv_bytes(t)?).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
        }
        if let Some(c) = &self.checks {
            let failed: Vec<String> = c.iter().filter(|c| !c.pass).map(|c| format!("{} = {:e} (need {} {:e})", c.name, c.value, c.relation, c.bound)).collect();
            if !failed.is_empty() {
                return Err(Failure::Verify(failed.join("; ")));
            }
        }
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}
