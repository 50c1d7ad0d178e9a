//! Index file (little-endian):
//!
//! ```text
//! "FGDI" | version u32 = 1
//! bound:  mode u8 (0 = max row norm, 1 = explicit) | U f64 | max_row_norm f64
//! points: vocab u64 | dim_plus_2 u32 | f32 × vocab × dim_plus_2
//! graph:  level u8 × vocab
//!         for each layer 0..=max_level, for each node on that layer in id
//!         order: count u16 | neighbor ids u32 × count
//! crc32 (IEEE) of every preceding byte
//! ```
//!
//! The entry point is not stored: it is the first node on the top level.

use std::fs;
use std::path::Path;

use super::SwvgGraph;
use crate::bytes::{ByteReader, PutLe};
use crate::error::{Error, Result};
use crate::ippt::{TransformBound, TransformedPoints};

const MAGIC: &[u8; 4] = b"FGDI";
const VERSION: u32 = 1;

pub fn encode_index(graph: &SwvgGraph, points: &TransformedPoints<f32>) -> Result<Vec<u8>> {
    let n = points.len();
    if graph.node_count() != n {
        return Err(Error::DimensionMismatch { expected: n, got: graph.node_count() });
    }
    let mut out = Vec::with_capacity(40 + points.as_slice().len() * 4 + n * 40);
    out.extend_from_slice(MAGIC);
    out.put_u32(VERSION);

    let bound = points.bound();
    out.put_u8(u8::from(bound.is_explicit()));
    out.put_f64(bound.u());
    out.put_f64(bound.max_row_norm());

    out.put_u64(n as u64);
    out.put_u32(points.lifted_dim() as u32);
    for &v in points.as_slice() {
        out.put_f32(v);
    }

    out.extend_from_slice(graph.levels());
    for (layer, adjacency) in graph.layers.iter().enumerate() {
        for (v, adj) in adjacency.iter().enumerate() {
            if (graph.levels[v] as usize) < layer {
                continue;
            }
            let count = u16::try_from(adj.len())
                .map_err(|_| Error::Format(format!("node {v} has more than {} neighbors", u16::MAX)))?;
            out.put_u16(count);
            for &u in adj {
                out.put_u32(u);
            }
        }
    }

    let crc = crc32fast::hash(&out);
    out.put_u32(crc);
    Ok(out)
}

pub fn decode_index(bytes: &[u8]) -> Result<(SwvgGraph, TransformedPoints<f32>)> {
    if bytes.len() < 8 {
        return Err(Error::Truncated(bytes.len() as u64));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic (expected FGDI)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    if bytes.len() < 12 {
        return Err(Error::Truncated(bytes.len() as u64));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let mut r = ByteReader::new(body);
    r.take(8)?;
    let explicit = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("unknown bound mode {other}"))),
    };
    let u = r.f64()?;
    let max_row_norm = r.f64()?;
    let bound = TransformBound::from_parts(u, explicit, max_row_norm)
        .map_err(|e| Error::Format(format!("invalid bound: {e}")))?;

    let n = r.u64()? as usize;
    let width = r.u32()? as usize;
    if n == 0 || width < 3 {
        return Err(Error::Format(format!("invalid shape: {n} points of width {width}")));
    }
    let float_count = n
        .checked_mul(width)
        .filter(|c| c.checked_mul(4).is_some_and(|b| b <= r.remaining()))
        .ok_or(Error::Truncated(bytes.len() as u64))?;
    let mut data = Vec::with_capacity(float_count);
    for _ in 0..float_count {
        data.push(r.f32()?);
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite coordinate in points section".into()));
    }

    let levels = r.take(n)?.to_vec();
    let top = *levels.iter().max().expect("n >= 1") as usize;
    let mut layers = vec![vec![Vec::new(); n]; top + 1];
    for (layer, adjacency) in layers.iter_mut().enumerate() {
        for (v, adj) in adjacency.iter_mut().enumerate() {
            if (levels[v] as usize) < layer {
                continue;
            }
            let count = r.u16()? as usize;
            adj.reserve_exact(count);
            for _ in 0..count {
                adj.push(r.u32()?);
            }
        }
    }
    if r.remaining() != 0 {
        return Err(Error::Format(format!("{} unexpected bytes before checksum", r.remaining())));
    }

    let graph = SwvgGraph::from_parts(levels, layers);
    graph.validate()?;
    Ok((graph, TransformedPoints::from_raw(data, bound, width - 2)))
}

pub fn save_graph(graph: &SwvgGraph, points: &TransformedPoints<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_index(graph, points)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<(SwvgGraph, TransformedPoints<f32>, TransformBound)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (graph, points) = decode_index(&bytes)?;
    let bound = *points.bound();
    Ok((graph, points, bound))
}
