//! File boundary: rudy instances, instance generation, the best-known
//! registry, brute-force optima, result CSVs and run manifests.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::Measurement;
use crate::error::{Error, Result};
use crate::maxcut::{Configuration, Edge, MaxCutInstance};

/// Largest instance `brute_force_maxcut` accepts.
pub const BRUTE_FORCE_MAX_N: usize = 20;

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(k) => &line[..k],
        None => line,
    }
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Malformed {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Malformed {
        line,
        msg: format!("bad {what} '{tok}'"),
    })
}

/// Parses the `N M` + `i j w` edge-list format (1-indexed nodes).
/// Zero-weight edges are accepted and dropped.
pub fn parse_rudy(text: &str, name: &str) -> Result<MaxCutInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| Error::Malformed {
        line: text.lines().count().max(1),
        msg: "no header line".into(),
    })?;
    let mut toks = header.split_whitespace();
    let n: usize = parse_tok(toks.next(), hline, "node count")?;
    let m: usize = parse_tok(toks.next(), hline, "edge count")?;
    if let Some(extra) = toks.next() {
        return Err(Error::Malformed {
            line: hline,
            msg: format!("unexpected token '{extra}' in header"),
        });
    }

    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    let mut count = 0usize;
    let mut dropped = 0usize;
    for (line, body) in lines {
        count += 1;
        if count > m {
            return Err(Error::Malformed {
                line,
                msg: format!("more than the declared {m} edges"),
            });
        }
        let mut toks = body.split_whitespace();
        let a: usize = parse_tok(toks.next(), line, "node")?;
        let b: usize = parse_tok(toks.next(), line, "node")?;
        let w: i64 = parse_tok(toks.next(), line, "weight")?;
        if let Some(extra) = toks.next() {
            return Err(Error::Malformed {
                line,
                msg: format!("unexpected token '{extra}'"),
            });
        }
        for node in [a, b] {
            if node == 0 || node > n {
                return Err(Error::NodeOutOfRange { line, node, n });
            }
        }
        if a == b {
            return Err(Error::SelfLoop { line, node: a });
        }
        let (i, j) = if a < b { (a - 1, b - 1) } else { (b - 1, a - 1) };
        if !seen.insert((i, j)) {
            return Err(Error::DuplicateEdge {
                line,
                i: i + 1,
                j: j + 1,
            });
        }
        if w == 0 {
            dropped += 1;
            continue;
        }
        edges.push(Edge { i, j, w });
    }
    if count != m {
        return Err(Error::Malformed {
            line: text.lines().count().max(1),
            msg: format!("declared {m} edges, found {count}"),
        });
    }
    if dropped > 0 {
        log::warn!("{name}: dropped {dropped} zero-weight edges");
    }
    Ok(MaxCutInstance {
        name: name.to_string(),
        n,
        edges,
        best_known: None,
    })
}

/// Reads an instance file; the instance is named after the file stem.
pub fn load_instance(path: impl AsRef<Path>) -> Result<MaxCutInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map_or_else(|| "instance".to_string(), |s| s.to_string_lossy().into_owned());
    parse_rudy(&text, &name)
}

/// Serialises in the rudy edge-list format.
pub fn write_rudy(inst: &MaxCutInstance) -> String {
    let mut out = format!("{} {}\n", inst.n, inst.edges.len());
    for e in &inst.edges {
        out.push_str(&format!("{} {} {}\n", e.i + 1, e.j + 1, e.w));
    }
    out
}

/// Erdős–Rényi graph with edge probability `avg_degree / (n − 1)` and weights
/// drawn uniformly from the non-zero members of `weights`.
pub fn generate_instance(n: usize, avg_degree: f64, weights: &[i64], seed: u64) -> Result<MaxCutInstance> {
    if n < 2 || !(avg_degree > 0.0 && avg_degree < n as f64) {
        return Err(Error::InvalidDegree { n, avg_degree });
    }
    let pool: Vec<i64> = weights.iter().copied().filter(|&w| w != 0).collect();
    if pool.is_empty() {
        return Err(Error::InvalidParameter("weight set has no non-zero entry".into()));
    }
    let p = avg_degree / (n - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                let w = pool[rng.random_range(0..pool.len())];
                edges.push(Edge { i, j, w });
            }
        }
    }
    Ok(MaxCutInstance {
        name: format!("er_n{n}_d{avg_degree}_s{seed}"),
        n,
        edges,
        best_known: None,
    })
}

/// Exact maximum cut by Gray-code enumeration over 2^(n−1) partitions
/// (node n−1 pinned to side 0).
pub fn brute_force_maxcut(inst: &MaxCutInstance) -> Result<(i64, Configuration)> {
    let n = inst.n;
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    if n <= 1 {
        return Ok((0, Configuration::zeros(n)));
    }
    let mut adj = vec![Vec::new(); n];
    for e in &inst.edges {
        adj[e.i].push((e.j, e.w));
        adj[e.j].push((e.i, e.w));
    }
    let mut x = vec![0u8; n];
    let mut cut = 0i64;
    let mut best = 0i64;
    let mut best_x = x.clone();
    for step in 1u64..(1u64 << (n - 1)) {
        let k = step.trailing_zeros() as usize;
        // flipping k toggles every incident edge in or out of the cut
        let delta: i64 = adj[k].iter().map(|&(j, w)| if x[j] == x[k] { w } else { -w }).sum();
        x[k] ^= 1;
        cut += delta;
        if cut > best {
            best = cut;
            best_x.copy_from_slice(&x);
        }
    }
    Ok((best, Configuration(best_x)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Literature,
    Proxy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestKnown {
    pub cut: i64,
    pub provenance: Provenance,
}

/// Instance name → best-known cut, stored as a single JSON object.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BestKnownRegistry(pub BTreeMap<String, BestKnown>);

impl BestKnownRegistry {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<BestKnown> {
        self.0.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, cut: i64, provenance: Provenance) {
        self.0.insert(name.into(), BestKnown { cut, provenance });
    }

    /// Brute-forces `inst` and records an exact entry.
    pub fn insert_exact(&mut self, inst: &MaxCutInstance) -> Result<i64> {
        let (cut, _) = brute_force_maxcut(inst)?;
        self.insert(inst.name.clone(), cut, Provenance::Exact);
        Ok(cut)
    }

    /// Sets `inst.best_known` from the registry, if present.
    pub fn annotate(&self, inst: &mut MaxCutInstance) -> Option<BestKnown> {
        let entry = self.get(&inst.name)?;
        inst.best_known = Some(entry.cut);
        Some(entry)
    }
}

/// One row of a results table. Column order is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: u64,
    pub instance: String,
    pub n: usize,
    pub scheme: String,
    pub m_hrs: f64,
    pub d2d_cv: f64,
    pub calibrated: bool,
    pub seed: u64,
    pub converged_at: Option<u64>,
    pub best_cut: i64,
    pub settling_energy: f64,
    pub iterations: u64,
    pub clamp_events: u64,
}

pub const RESULT_HEADER: [&str; 13] = [
    "run_id",
    "instance",
    "n",
    "scheme",
    "m_hrs",
    "d2d_cv",
    "calibrated",
    "seed",
    "converged_at",
    "best_cut",
    "settling_energy",
    "iterations",
    "clamp_events",
];

/// Writes rows with a header; an empty slice yields a header-only table.
pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RESULT_HEADER {
        return Err(Error::Malformed {
            line: 1,
            msg: format!("unexpected results header {header:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Generic tidy CSV writer for experiment tables.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const MEASUREMENT_HEADER: [&str; 3] = ["v_set", "hrs_kohm", "t_set_s"];

/// Reads a `v_set,hrs_kohm,t_set_s` measurement table.
pub fn read_measurements<R: Read>(input: R) -> Result<Vec<Measurement>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != MEASUREMENT_HEADER {
        return Err(Error::Malformed {
            line: 1,
            msg: format!("expected header v_set,hrs_kohm,t_set_s, got {}", header.join(",")),
        });
    }
    r.deserialize()
        .enumerate()
        .map(|(k, row)| {
            row.map_err(|e| Error::Malformed {
                line: k + 2,
                msg: e.to_string(),
            })
        })
        .collect()
}

pub fn write_measurements<W: Write>(out: W, samples: &[Measurement]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to replay an invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Full argument vector, program name excluded.
    pub argv: Vec<String>,
    pub seed: u64,
    /// SHA-256 of the device parameter file contents.
    pub params_sha256: String,
    /// Effective configuration after flag/config/default resolution.
    pub config: serde_json::Value,
    /// Seconds since the Unix epoch; informational only.
    pub timestamp: u64,
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
