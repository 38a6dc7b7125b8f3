use std::fmt::Write as _;

use num_complex::Complex;
use nz_core::Real;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub name: String,
    pub pass: bool,
    pub values: Vec<(String, String)>,
}

impl Item {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Item { name: name.into(), pass, values: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.values.push((key.to_string(), value.into()));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Vec<String>,
    pub inputs_digest: String,
    pub precision: String,
    pub provenance: Vec<String>,
    pub items: Vec<Item>,
    /// Verbatim output (matrices, series, pair files).
    pub output: Option<String>,
    pub pass: bool,
}

impl Report {
    pub fn new(items: Vec<Item>, output: Option<String>) -> Self {
        let pass = items.iter().all(|i| i.pass);
        Report { command: vec![], inputs_digest: String::new(), precision: String::new(), provenance: vec![], items, output, pass }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(o) = &self.output {
            s.push_str(o);
            if !o.ends_with('\n') {
                s.push('\n');
            }
        }
        if self.items.is_empty() {
            return s;
        }
        let mut start = 0;
        while start < self.items.len() {
            let keys: Vec<&String> = self.items[start].values.iter().map(|(k, _)| k).collect();
            let mut end = start + 1;
            while end < self.items.len() && self.items[end].values.iter().map(|(k, _)| k).eq(keys.iter().copied()) {
                end += 1;
            }
            table(&mut s, &self.items[start..end], &keys);
            start = end;
        }
        s.push_str(if self.pass { "PASS\n" } else { "FAIL\n" });
        s
    }
}

fn table(out: &mut String, items: &[Item], keys: &[&String]) {
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("item".to_string()).chain(keys.iter().map(|k| k.to_string())).chain(["status".into()]).collect()];
    for it in items {
        rows.push(
            std::iter::once(it.name.clone())
                .chain(it.values.iter().map(|(_, v)| v.clone()))
                .chain([if it.pass { "ok" } else { "FAIL" }.to_string()])
                .collect(),
        );
    }
    let width: Vec<usize> = (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    for r in rows {
        let line: Vec<String> = r.iter().zip(&width).map(|(x, w)| format!("{x:>w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out.push('\n');
}

pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn fx<T: Real>(x: T) -> String {
    let s = format!("{:.10}", x.as_f64());
    if s == "-0.0000000000" {
        "0.0000000000".into()
    } else {
        s
    }
}

pub fn fc<T: Real>(z: Complex<T>) -> String {
    let im = z.im.as_f64();
    let mag = fx(T::from_f(im.abs()));
    let sign = if im < 0.0 && mag != "0.0000000000" { '-' } else { '+' };
    format!("{}{sign}{mag}i", fx(z.re))
}

pub fn fe<T: Real>(x: T) -> String {
    format!("{:.2e}", x.as_f64())
}
