//! `PGN1` graph files.
//!
//! Little-endian: magic, `N: u64, M: u64, T: u64`, positions `N x 2 f64`,
//! boundary flags `N x u8`, edges `M x (u64, u64)`, shifts `M x 2 f64`,
//! triangles `T x 3 u64`, segment ids `N x u8`, then a SHA-256 trailer.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{self, ByteReader, ByteWriter};
use crate::mesh::Graph;

pub const GRAPH_MAGIC: &[u8; 4] = b"PGN1";

pub fn encode_graph(g: &Graph) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(GRAPH_MAGIC);
    w.usize(g.num_nodes());
    w.usize(g.num_edges());
    w.usize(g.triangles.len());
    for p in &g.positions {
        w.f64s(p);
    }
    for &f in &g.boundary {
        w.u8(f);
    }
    for e in &g.edges {
        w.usize(e[0]);
        w.usize(e[1]);
    }
    for s in &g.shifts {
        w.f64s(s);
    }
    for t in &g.triangles {
        for &v in t {
            w.usize(v);
        }
    }
    for &s in &g.segment {
        w.u8(s);
    }
    io::seal(w.into_inner())
}

/// Decodes without checking graph invariants (see [`Graph::check`]).
pub fn decode_graph(bytes: &[u8]) -> Result<Graph> {
    let payload = io::unseal("PGN1", bytes)?;
    let mut r = ByteReader::new("PGN1", payload);
    r.expect_magic(GRAPH_MAGIC)?;
    let n = r.count(16)?;
    let m = r.count(32)?;
    let t = r.count(24)?;
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push([r.f64()?, r.f64()?]);
    }
    let boundary = r.take(n)?.to_vec();
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        edges.push([r.usize()?, r.usize()?]);
    }
    let mut shifts = Vec::with_capacity(m);
    for _ in 0..m {
        shifts.push([r.f64()?, r.f64()?]);
    }
    let mut triangles = Vec::with_capacity(t);
    for _ in 0..t {
        triangles.push([r.usize()?, r.usize()?, r.usize()?]);
    }
    let segment = r.take(n)?.to_vec();
    r.finish()?;
    let g = Graph {
        positions,
        boundary,
        segment,
        edges,
        shifts,
        triangles,
    };
    if g.edges
        .iter()
        .flatten()
        .chain(g.triangles.iter().flatten())
        .any(|&v| v >= n)
    {
        return Err(Error::format("PGN1", "index out of range"));
    }
    Ok(g)
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    io::write_atomic(path, &encode_graph(g))
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    decode_graph(&io::read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Domain};

    #[test]
    fn round_trip_is_exact() {
        let g = generate(&Domain::periodic_square(6.0).unwrap(), 40, 9).unwrap();
        let bytes = encode_graph(&g);
        assert_eq!(&bytes[..4], b"PGN1");
        let back = decode_graph(&bytes).unwrap();
        assert_eq!(back, g);
        assert_eq!(encode_graph(&back), bytes);
    }

    #[test]
    fn corruption_is_detected() {
        let g = generate(&Domain::unit_square(), 10, 1).unwrap();
        let mut bytes = encode_graph(&g);
        bytes[40] ^= 1;
        assert!(decode_graph(&bytes).is_err());
        let mut bytes = encode_graph(&g);
        bytes[0] = b'X';
        assert!(decode_graph(&bytes).is_err());
        let bytes = encode_graph(&g);
        assert!(decode_graph(&bytes[..bytes.len() - 5]).is_err());
    }
}
