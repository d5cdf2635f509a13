//! Graph sources: SNAP-style edge lists, DIMACS arc files and seeded
//! generators. Every loader returns a canonical edge list: `u < v`, sorted,
//! no duplicates, no loops.

use std::collections::HashSet;
use std::path::Path;

use dyncon_core::Vertex;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Largest accepted vertex id; ids index dense arrays.
pub const MAX_VERTEX: u64 = u32::MAX as u64 - 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    /// Vertex count; ids are `0..n`.
    pub n: usize,
    pub edges: Vec<(Vertex, Vertex)>,
}

impl Graph {
    /// Canonicalizes, drops loops and multi-edges.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Graph {
        let mut edges: Vec<_> =
            edges.into_iter().filter(|(u, v)| u != v).map(|(u, v)| (u.min(v), u.max(v))).collect();
        edges.sort_unstable();
        edges.dedup();
        Graph { n, edges }
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("{source_name}:{line}: {message}")]
    Parse { source_name: String, line: usize, message: String },
    #[error("{source_name}:{line}: vertex id {id} exceeds {MAX_VERTEX}")]
    Overflow { source_name: String, line: usize, id: u64 },
    #[error("bad generator spec `{spec}`: {message}")]
    Generator { spec: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Loads `source`: a `gen:` spec or a file path.
pub fn load_graph(source: &str) -> Result<Graph, GraphError> {
    if let Some(spec) = source.strip_prefix("gen:") {
        return generate(spec).map_err(|message| GraphError::Generator { spec: source.to_string(), message });
    }
    let text = std::fs::read_to_string(Path::new(source))
        .map_err(|e| GraphError::Io { path: source.to_string(), source: e })?;
    parse_graph(source, &text)
}

/// Parses file contents. The format is DIMACS when the first meaningful
/// line starts with `p`, `a` or `c`; otherwise a whitespace edge list.
pub fn parse_graph(source_name: &str, text: &str) -> Result<Graph, GraphError> {
    let dimacs = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .and_then(|l| l.split_whitespace().next())
        .is_some_and(|t| matches!(t, "p" | "a" | "c"));
    let parse_err =
        |line: usize, message: String| GraphError::Parse { source_name: source_name.to_string(), line, message };
    let id = |line: usize, tok: Option<&str>| -> Result<u64, GraphError> {
        let tok = tok.ok_or_else(|| parse_err(line, "missing vertex id".into()))?;
        let x: u64 = tok.parse().map_err(|_| parse_err(line, format!("bad vertex id `{tok}`")))?;
        if x > MAX_VERTEX {
            return Err(GraphError::Overflow { source_name: source_name.to_string(), line, id: x });
        }
        Ok(x)
    };
    let mut declared = 0usize;
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut toks = line.split_whitespace();
        let Some(first) = toks.next() else { continue };
        if first.starts_with('#') {
            continue;
        }
        if !dimacs {
            let u = id(line_no, Some(first))?;
            let v = id(line_no, toks.next())?;
            raw.push((u, v));
            continue;
        }
        match first {
            "c" => {}
            "p" => {
                // p <kind> <n> <m>
                let _kind = toks.next();
                declared = id(line_no, toks.next())? as usize;
            }
            "a" | "e" => {
                let (u, v) = (id(line_no, toks.next())?, id(line_no, toks.next())?);
                if u == 0 || v == 0 {
                    return Err(parse_err(line_no, "DIMACS ids are 1-based".into()));
                }
                raw.push((u - 1, v - 1));
            }
            other => return Err(parse_err(line_no, format!("unknown DIMACS line type `{other}`"))),
        }
    }
    let n = raw.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0).max(declared);
    Ok(Graph::from_edges(n, raw.into_iter().map(|(u, v)| (u as Vertex, v as Vertex))))
}

/// `erdos:n=<n>:m=<m>:seed=<s>` samples exactly `m` distinct edges
/// uniformly. `grid:w=<w>:h=<h>:keep=<p>:seed=<s>` keeps each edge of a
/// `w x h` lattice with probability `p`, a planar sparse stand-in for road
/// networks.
fn generate(spec: &str) -> Result<Graph, String> {
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default();
    let mut kv = std::collections::HashMap::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| format!("expected key=value, got `{p}`"))?;
        kv.insert(k, v);
    }
    let get = |k: &str| -> Result<u64, String> {
        kv.get(k).ok_or_else(|| format!("missing `{k}`"))?.parse().map_err(|_| format!("bad `{k}`"))
    };
    let seed = kv.get("seed").map_or(Ok(0), |s| s.parse().map_err(|_| "bad `seed`".to_string()))?;
    let mut rng = StdRng::seed_from_u64(seed);
    match kind {
        "erdos" => {
            let (n, m) = (get("n")?, get("m")?);
            if n > MAX_VERTEX + 1 {
                return Err(format!("n = {n} exceeds {}", MAX_VERTEX + 1));
            }
            let pairs = n * n.saturating_sub(1) / 2;
            if m > pairs {
                return Err(format!("m = {m} exceeds the {pairs} possible edges"));
            }
            let mut seen = HashSet::with_capacity(m as usize);
            while (seen.len() as u64) < m {
                let u = rng.random_range(0..n) as Vertex;
                let v = rng.random_range(0..n) as Vertex;
                if u != v {
                    seen.insert((u.min(v), u.max(v)));
                }
            }
            Ok(Graph::from_edges(n as usize, seen))
        }
        "grid" => {
            let (w, h) = (get("w")?, get("h")?);
            let keep: f64 = kv.get("keep").map_or(Ok(1.0), |s| s.parse().map_err(|_| "bad `keep`".to_string()))?;
            if !(0.0..=1.0).contains(&keep) {
                return Err("`keep` must be in [0, 1]".into());
            }
            if w * h > MAX_VERTEX + 1 {
                return Err(format!("{w} x {h} exceeds {}", MAX_VERTEX + 1));
            }
            let at = |x: u64, y: u64| (y * w + x) as Vertex;
            let mut edges = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if x + 1 < w && rng.random_bool(keep) {
                        edges.push((at(x, y), at(x + 1, y)));
                    }
                    if y + 1 < h && rng.random_bool(keep) {
                        edges.push((at(x, y), at(x, y + 1)));
                    }
                }
            }
            Ok(Graph::from_edges((w * h) as usize, edges))
        }
        other => Err(format!("unknown generator `{other}` (expected erdos or grid)")),
    }
}
