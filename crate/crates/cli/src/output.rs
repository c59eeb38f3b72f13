//! Output files: CSV with a metadata comment header, and an optional JSON
//! mirror with the same rows. Nothing in a file depends on wall-clock time or
//! thread count, so identical runs produce identical bytes.

use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub struct Meta<'a> {
    pub kind: &'a str,
    pub seed: u64,
    pub config_hash: &'a str,
}

pub fn write_csv<P: AsRef<Path>>(
    path: P,
    meta: &Meta,
    header: &str,
    rows: &[Vec<String>],
    footer_comments: &[String],
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "# gibbs-perc v1 kind={} seed={} config={}",
        meta.kind, meta.seed, meta.config_hash
    )?;
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    for line in footer_comments {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonDoc<'a, T: Serialize> {
    version: &'a str,
    kind: &'a str,
    seed: u64,
    config: &'a str,
    rows: &'a [T],
}

pub fn write_json<P: AsRef<Path>, T: Serialize>(
    path: P,
    meta: &Meta,
    rows: &[T],
) -> std::io::Result<()> {
    let doc = JsonDoc {
        version: "gibbs-perc v1",
        kind: meta.kind,
        seed: meta.seed,
        config: meta.config_hash,
        rows,
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    Ok(())
}

/// Shortest-round-trip float formatting; empty string for missing values.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn fmt(v: f64) -> String {
    v.to_string()
}
