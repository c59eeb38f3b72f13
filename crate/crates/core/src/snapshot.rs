//! Plain-text snapshot dumps.
//!
//! Format: a header line
//! `# gibbs-perc v1 nu=<nu> L=<L> n=<count> seed=<seed> sweep=<k>`
//! followed by one whitespace-separated coordinate line per point, 17
//! significant digits.

use crate::sampler::Configuration;
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotMeta {
    pub nu: u32,
    pub box_len: f64,
    pub n: usize,
    pub seed: u64,
    pub sweep: u64,
}

pub fn write_snapshot<W: Write>(
    w: &mut W,
    cfg: &Configuration,
    seed: u64,
    sweep: u64,
) -> std::io::Result<()> {
    writeln!(
        w,
        "# gibbs-perc v1 nu={} L={} n={} seed={} sweep={}",
        cfg.dim(),
        cfg.box_len(),
        cfg.len(),
        seed,
        sweep
    )?;
    for pt in cfg.iter_points() {
        let mut first = true;
        for c in pt {
            if first {
                write!(w, "{c:.16e}")?;
                first = false;
            } else {
                write!(w, " {c:.16e}")?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: &mut R) -> Result<(SnapshotMeta, Configuration), SnapshotError> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let header = header.trim_end();
    let rest = header
        .strip_prefix("# gibbs-perc v1 ")
        .ok_or_else(|| SnapshotError::Malformed(format!("bad header: {header:?}")))?;
    let mut nu = None;
    let mut box_len = None;
    let mut n = None;
    let mut seed = None;
    let mut sweep = None;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| SnapshotError::Malformed(format!("bad header field: {field:?}")))?;
        let parse_err = |_| SnapshotError::Malformed(format!("bad value in field: {field:?}"));
        match key {
            "nu" => nu = Some(value.parse::<u32>().map_err(parse_err)?),
            "L" => box_len = Some(value.parse::<f64>().map_err(|_| {
                SnapshotError::Malformed(format!("bad value in field: {field:?}"))
            })?),
            "n" => n = Some(value.parse::<usize>().map_err(parse_err)?),
            "seed" => seed = Some(value.parse::<u64>().map_err(parse_err)?),
            "sweep" => sweep = Some(value.parse::<u64>().map_err(parse_err)?),
            _ => return Err(SnapshotError::Malformed(format!("unknown header field: {key:?}"))),
        }
    }
    let meta = SnapshotMeta {
        nu: nu.ok_or_else(|| SnapshotError::Malformed("missing nu".into()))?,
        box_len: box_len.ok_or_else(|| SnapshotError::Malformed("missing L".into()))?,
        n: n.ok_or_else(|| SnapshotError::Malformed("missing n".into()))?,
        seed: seed.ok_or_else(|| SnapshotError::Malformed("missing seed".into()))?,
        sweep: sweep.ok_or_else(|| SnapshotError::Malformed("missing sweep".into()))?,
    };
    let dim = meta.nu as usize;
    let mut coords = Vec::with_capacity(meta.n * dim);
    let mut line = String::new();
    for i in 0..meta.n {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(SnapshotError::Malformed(format!("expected {} points, got {i}", meta.n)));
        }
        let values: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        let values =
            values.map_err(|_| SnapshotError::Malformed(format!("bad point line: {line:?}")))?;
        if values.len() != dim {
            return Err(SnapshotError::Malformed(format!(
                "point line has {} coordinates, expected {dim}",
                values.len()
            )));
        }
        coords.extend_from_slice(&values);
    }
    // the cell index is irrelevant for reloaded snapshots; one bucket
    let cfg = Configuration::from_points(dim, meta.box_len, meta.box_len, &coords);
    Ok((meta, cfg))
}
