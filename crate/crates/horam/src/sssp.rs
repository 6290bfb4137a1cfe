//! Single-source shortest paths with every piece of state held obliviously:
//! the adjacency list lives in the oblivious map, distances and visited
//! flags live in linearly scanned arrays, and each round extracts the
//! minimum by a full oblivious scan. The adjacency is padded to a uniform
//! out-degree with zero-weight self-loops, so the per-round probe count —
//! and with it the whole trace — depends only on the vertex count and the
//! canonical degree bound.

use crate::block::OItem;
use crate::error::{Error, Result};
use crate::obuf::OBuf;
use crate::oram::{Oram, OramConfig};
use crate::probcalc::LogProb;
use crate::trace;

pub const INFINITY: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub vertices: usize,
    /// Directed weighted arcs (u, v, w >= 0).
    pub edges: Vec<(u32, u32, u64)>,
}

impl Graph {
    /// Parse the arc-list format: a header `p sp <V> <E>`, then `a <u> <v> <w>`
    /// lines with 1-based vertex ids. Unknown or malformed lines fail with
    /// their line number.
    pub fn parse(text: &str) -> Result<Graph> {
        let mut vertices = None;
        let mut declared_edges = 0usize;
        let mut edges = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line_no = no + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('c') {
                continue;
            }
            let f: Vec<&str> = t.split_whitespace().collect();
            match f[0] {
                "p" => {
                    if f.len() != 4 || f[1] != "sp" {
                        return Err(Error::Parse { line: line_no, msg: "expected `p sp V E`".into() });
                    }
                    vertices = Some(f[2].parse::<usize>().map_err(|e| Error::Parse {
                        line: line_no,
                        msg: e.to_string(),
                    })?);
                    declared_edges = f[3].parse().map_err(|e: std::num::ParseIntError| {
                        Error::Parse { line: line_no, msg: e.to_string() }
                    })?;
                }
                "a" => {
                    if f.len() != 4 {
                        return Err(Error::Parse { line: line_no, msg: "expected `a u v w`".into() });
                    }
                    let parse = |s: &str| -> Result<u64> {
                        s.parse().map_err(|e: std::num::ParseIntError| Error::Parse {
                            line: line_no,
                            msg: e.to_string(),
                        })
                    };
                    let (u, v, w) = (parse(f[1])?, parse(f[2])?, parse(f[3])?);
                    let nv = vertices.ok_or(Error::Parse {
                        line: line_no,
                        msg: "arc before header".into(),
                    })? as u64;
                    if u < 1 || u > nv || v < 1 || v > nv {
                        return Err(Error::Parse { line: line_no, msg: "vertex out of range".into() });
                    }
                    edges.push((u as u32 - 1, v as u32 - 1, w));
                }
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unknown record `{}`", f[0]),
                    })
                }
            }
        }
        let vertices = vertices.ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
        if edges.len() != declared_edges {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares {declared_edges} arcs, found {}", edges.len()),
            });
        }
        Ok(Graph { vertices, edges })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("p sp {} {}\n", self.vertices, self.edges.len());
        for (u, v, w) in &self.edges {
            s.push_str(&format!("a {} {} {}\n", u + 1, v + 1, w));
        }
        s
    }
}

/// Canonical uniform out-degree for a (V, E) graph: equal-size graphs get
/// equal bounds, so their traces coincide. A graph with a heavier vertex is
/// rejected rather than padded data-dependently.
pub fn canonical_degree(vertices: usize, edges: usize) -> usize {
    (8 * edges.div_ceil(vertices.max(1))).max(8)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct DistRec {
    dist: u64,
    visited: bool,
}

impl OItem for DistRec {
    fn cmov(&mut self, src: &Self, cond: bool) {
        crate::block::cmov_u64(&mut self.dist, src.dist, cond);
        let m = cond as u8;
        self.visited = ((self.visited as u8 & (1 - m)) | (src.visited as u8 & m)) != 0;
    }

    fn make_pad(_t: &Self) -> Self {
        DistRec { dist: INFINITY, visited: true }
    }

    fn is_pad(&self) -> bool {
        false
    }

    fn set_tag(&mut self, _tag: u64) {}

    fn tag(&self) -> u64 {
        0
    }
}

/// Dijkstra over the oblivious structures. The adjacency map is keyed by
/// `u * max_deg + slot`; each round selects the unvisited minimum by a full
/// scan, then probes exactly `max_deg` adjacency slots and relaxes each
/// target with a full masked write pass.
pub fn oblivious_sssp(graph: &Graph, source: usize, seed: u64) -> Result<Vec<u64>> {
    let v = graph.vertices;
    if source >= v {
        return Err(Error::Param(format!("source {source} out of range")));
    }
    let max_deg = canonical_degree(v, graph.edges.len());
    let mut adj: Vec<Vec<(u32, u64)>> = vec![vec![]; v];
    for &(u, t, w) in &graph.edges {
        adj[u as usize].push((t, w));
    }
    if let Some(u) = adj.iter().position(|a| a.len() > max_deg) {
        return Err(Error::Param(format!(
            "vertex {u} exceeds the canonical degree bound {max_deg}"
        )));
    }
    trace::public_param("sssp.vertices", v as u64);
    trace::public_param("sssp.max_deg", max_deg as u64);

    // adjacency rows padded with zero-weight self-loops into the map
    let cap = (v * max_deg) as u64;
    let mut config = OramConfig::new(cap, 12);
    config.seed = seed;
    config.top_capacity = 256;
    config.delta = LogProb::pow2(-64);
    let mut map = Oram::new_map(config)?;
    for u in 0..v {
        for s in 0..max_deg {
            let (t, w) = adj[u].get(s).copied().unwrap_or((u as u32, 0));
            let mut val = [0u8; 12];
            val[..4].copy_from_slice(&t.to_le_bytes());
            val[4..].copy_from_slice(&w.to_le_bytes());
            map.map_put((u * max_deg + s) as u64, &val)?;
        }
    }

    let mut dist = OBuf::new(
        "sssp.dist",
        0,
        (0..v).map(|i| DistRec { dist: if i == source { 0 } else { INFINITY }, visited: false })
            .collect::<Vec<_>>(),
    );

    for _round in 0..v {
        // oblivious minimum scan over unvisited vertices
        let mut best_u = 0u64;
        let mut best_d = INFINITY;
        for i in 0..v {
            dist.probe(i, |r| {
                let better = !r.visited && r.dist < best_d;
                crate::block::cmov_u64(&mut best_d, r.dist, better);
                crate::block::cmov_u64(&mut best_u, i as u64, better);
            });
        }
        let have = best_d != INFINITY;
        // mark visited with a full masked pass
        for i in 0..v {
            dist.update(i, |r| {
                let hit = have && i as u64 == best_u;
                let m = hit as u8;
                r.visited = ((r.visited as u8 & (1 - m)) | m) != 0;
            });
        }
        // probe the selected row; an exhausted frontier probes dummies
        for s in 0..max_deg {
            let key = best_u * max_deg as u64 + s as u64;
            let looked = if have {
                map.map_get(key)?
            } else {
                map.dummy_access()?;
                None
            };
            let (target, w) = match &looked {
                Some(bytes) => {
                    let t = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as u64;
                    let w = u64::from_le_bytes(bytes[4..].try_into().unwrap());
                    (t, w)
                }
                None => (0, 0),
            };
            let cand = best_d.saturating_add(w);
            // relax with a full masked pass over the distance array
            for i in 0..v {
                dist.update(i, |r| {
                    let hit = have && looked.is_some() && i as u64 == target && cand < r.dist;
                    crate::block::cmov_u64(&mut r.dist, cand, hit);
                });
            }
            // re-insert the consumed adjacency entry
            match &looked {
                Some(bytes) => map.map_put(key, bytes)?,
                None => map.dummy_access()?,
            }
        }
    }
    Ok(dist.into_items().iter().map(|r| r.dist).collect())
}

/// Plain Dijkstra, the oracle.
pub fn plain_sssp(graph: &Graph, source: usize) -> Vec<u64> {
    let v = graph.vertices;
    let mut adj: Vec<Vec<(usize, u64)>> = vec![vec![]; v];
    for &(u, t, w) in &graph.edges {
        adj[u as usize].push((t as usize, w));
    }
    let mut dist = vec![INFINITY; v];
    dist[source] = 0;
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(std::cmp::Reverse((0u64, source)));
    while let Some(std::cmp::Reverse((d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(t, w) in &adj[u] {
            let nd = d.saturating_add(w);
            if nd < dist[t] {
                dist[t] = nd;
                heap.push(std::cmp::Reverse((nd, t)));
            }
        }
    }
    dist
}

/// Distances rendered one per line, `v dist`, with `inf` for unreachable.
pub fn format_distances(dist: &[u64]) -> String {
    let mut out = String::new();
    for (i, d) in dist.iter().enumerate() {
        if *d == INFINITY {
            out.push_str(&format!("{} inf\n", i + 1));
        } else {
            out.push_str(&format!("{} {}\n", i + 1, d));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::RandTape;

    #[test]
    fn parses_and_roundtrips() {
        let text = "c comment\np sp 3 2\na 1 2 5\na 2 3 7\n";
        let g = Graph::parse(text).unwrap();
        assert_eq!(g.vertices, 3);
        assert_eq!(g.edges, vec![(0, 1, 5), (1, 2, 7)]);
        let g2 = Graph::parse(&g.to_text()).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = Graph::parse("p sp 2 1\na 1 9 4\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = Graph::parse("p sp 2 1\nz 1 1 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn path_graph_distances() {
        let g = Graph { vertices: 3, edges: vec![(0, 1, 1), (1, 2, 1)] };
        let d = oblivious_sssp(&g, 0, 42).unwrap();
        assert_eq!(d, vec![0, 1, 2]);
    }

    #[test]
    fn unreachable_vertex_is_infinite() {
        let g = Graph { vertices: 3, edges: vec![(0, 1, 4)] };
        let d = oblivious_sssp(&g, 0, 43).unwrap();
        assert_eq!(d, vec![0, 4, INFINITY]);
    }

    #[test]
    fn random_graphs_match_plain_dijkstra() {
        let mut tape = RandTape::from_seed(44);
        for trial in 0..4 {
            let v = 48usize;
            let e = 4 * v;
            let edges: Vec<(u32, u32, u64)> = (0..e)
                .map(|_| {
                    (
                        tape.draw_below(v as u64) as u32,
                        tape.draw_below(v as u64) as u32,
                        tape.draw_below(100),
                    )
                })
                .collect();
            let g = Graph { vertices: v, edges };
            let got = oblivious_sssp(&g, 0, 45 + trial).unwrap();
            assert_eq!(got, plain_sssp(&g, 0), "trial {trial}");
        }
    }
}
