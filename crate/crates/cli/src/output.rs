use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use betadyn::BetaContext;
use clap::ValueEnum;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Run metadata embedded in every artifact.
#[derive(Clone, Debug)]
pub struct Meta {
    pub command: &'static str,
    pub n: usize,
    pub q: u32,
    pub beta: String,
    pub mode: String,
    pub seed: u64,
    pub params: Value,
}

impl Meta {
    pub fn new(command: &'static str, ctx: &BetaContext, mode: &str, seed: u64, params: Value) -> Self {
        Meta {
            command,
            n: ctx.n(),
            q: ctx.q(),
            beta: ctx.beta_decimal(30),
            mode: mode.to_string(),
            seed,
            params,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "n": self.n,
            "q": self.q,
            "beta": self.beta,
            "mode": self.mode,
            "seed": self.seed,
            "version": betadyn::VERSION,
            "params": self.params,
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# command={} n={} q={} beta={} mode={} seed={} version={} params={}\n",
            self.command,
            self.n,
            self.q,
            self.beta,
            self.mode,
            self.seed,
            betadyn::VERSION,
            self.params
        )
    }
}

/// A command's result in all three renderings.
pub struct Output {
    pub meta: Meta,
    pub json: Value,
    pub csv: String,
    pub table: String,
}

impl Output {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let doc = json!({ "meta": self.meta.to_json(), "result": self.json });
                let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => format!("{}{}", self.meta.csv_header(), self.csv),
            Format::Table => {
                let m = &self.meta;
                format!(
                    "{} (n = {}, q = {}, beta = {}, mode = {}, seed = {:#x}, version {})\n{}",
                    m.command,
                    m.n,
                    m.q,
                    m.beta,
                    m.mode,
                    m.seed,
                    betadyn::VERSION,
                    self.table
                )
            }
        }
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            if i + 1 < cells.len() {
                s.push_str(&" ".repeat(widths[i] - c.chars().count()));
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}
