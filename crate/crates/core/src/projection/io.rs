//! Text and binary projection files.
//!
//! Text: a header `<vocab_size> <dim> <has_bias>` followed by one
//! `<token> <w_1> ... <w_dim> [<bias>]` line per word. A two-field
//! word2vec-style header is also accepted; the bias column is then inferred
//! from the first row and enforced for the rest.
//!
//! Binary (little-endian): `FGDP`, version u32, vocab u64, dim u32,
//! flags u32 (bit 0 = has bias), length-prefixed tokens (u16 + UTF-8),
//! then all weights as f32 row-major, then the biases when flagged.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::VocabularyProjection;
use crate::bytes::{ByteReader, PutLe};
use crate::error::{Error, Location, Result};

const MAGIC: &[u8; 4] = b"FGDP";
const VERSION: u32 = 1;
const FLAG_BIAS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionFormat {
    Text,
    Binary,
}

impl FromStr for ProjectionFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "text" | "txt" => Ok(ProjectionFormat::Text),
            "bin" | "binary" => Ok(ProjectionFormat::Binary),
            other => Err(format!("unknown projection format `{other}` (expected text or bin)")),
        }
    }
}

pub fn load_projection(path: impl AsRef<Path>, format: ProjectionFormat) -> Result<VocabularyProjection> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        ProjectionFormat::Text => {
            let text = String::from_utf8(bytes)
                .map_err(|e| Error::parse(Location::Offset(e.utf8_error().valid_up_to() as u64), "invalid UTF-8"))?;
            read_text(&text)
        }
        ProjectionFormat::Binary => read_binary(&bytes),
    }
}

pub fn save_projection(
    projection: &VocabularyProjection,
    path: impl AsRef<Path>,
    format: ProjectionFormat,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        ProjectionFormat::Text => write_text(projection).into_bytes(),
        ProjectionFormat::Binary => write_binary(projection)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn parse_value(field: &str, line: usize) -> Result<f32> {
    let v: f32 = field.parse().map_err(|_| Error::parse(Location::Line(line), format!("invalid number `{field}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(Location::Line(line), format!("non-finite value `{field}`")));
    }
    Ok(v)
}

pub fn read_text(text: &str) -> Result<VocabularyProjection> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());

    let (header_line, header) = lines.next().ok_or_else(|| Error::parse(Location::Line(1), "empty file"))?;
    let malformed = || Error::parse(Location::Line(header_line), "malformed header");
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (vocab_size, dim, mut has_bias) = match fields.as_slice() {
        [v, d] => (v.parse::<usize>().map_err(|_| malformed())?, d.parse::<usize>().map_err(|_| malformed())?, None),
        [v, d, b] => {
            let flag = match *b {
                "0" => false,
                "1" => true,
                _ => return Err(malformed()),
            };
            (v.parse::<usize>().map_err(|_| malformed())?, d.parse::<usize>().map_err(|_| malformed())?, Some(flag))
        }
        _ => return Err(malformed()),
    };
    if vocab_size == 0 || dim == 0 {
        return Err(malformed());
    }

    let mut tokens = Vec::with_capacity(vocab_size);
    let mut seen: HashMap<&str, usize> = HashMap::with_capacity(vocab_size);
    let mut weights = Vec::with_capacity(vocab_size * dim);
    let mut biases = Vec::with_capacity(vocab_size);
    let mut last_line = header_line;

    for (line_no, line) in lines.by_ref().take(vocab_size) {
        last_line = line_no;
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-blank line has a field");
        let values: Vec<&str> = fields.collect();
        let with_bias = *has_bias.get_or_insert(values.len() == dim + 1);
        if values.len() != dim + usize::from(with_bias) {
            return Err(Error::parse(Location::Line(line_no), "row length mismatch"));
        }
        if let Some(first) = seen.insert(token, line_no) {
            return Err(Error::parse(
                Location::Line(line_no),
                format!("duplicate token `{token}` (first seen at line {first})"),
            ));
        }
        for v in &values[..dim] {
            weights.push(parse_value(v, line_no)?);
        }
        if with_bias {
            biases.push(parse_value(values[dim], line_no)?);
        }
        tokens.push(token.to_string());
    }

    if tokens.len() < vocab_size {
        return Err(Error::parse(
            Location::Line(last_line + 1),
            format!("expected {vocab_size} rows, found {}", tokens.len()),
        ));
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(Error::parse(Location::Line(line_no), "unexpected data after the last row"));
    }

    let biases = has_bias.unwrap_or(false).then_some(biases);
    VocabularyProjection::new(tokens, weights, biases, dim)
}

/// Serializes with shortest round-trip float formatting, so a text
/// round trip reproduces every f32 exactly.
pub fn write_text(projection: &VocabularyProjection) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", projection.vocab_size(), projection.dim(), u8::from(projection.has_bias()));
    for (i, row) in projection.rows().enumerate() {
        out.push_str(&projection.tokens()[i]);
        for w in row {
            let _ = write!(out, " {w}");
        }
        if projection.has_bias() {
            let _ = write!(out, " {}", projection.biases()[i]);
        }
        out.push('\n');
    }
    out
}

pub fn read_binary(bytes: &[u8]) -> Result<VocabularyProjection> {
    let mut r = ByteReader::new(bytes);
    let at = |r: &ByteReader<'_>| Location::Offset(r.offset());
    let truncated = |e: Error| match e {
        Error::Truncated(off) => Error::parse(Location::Offset(off), "unexpected end of file"),
        other => other,
    };

    if bytes.is_empty() {
        return Err(Error::parse(Location::Offset(0), "empty file"));
    }
    let magic = r.take(4).map_err(truncated)?;
    if magic != MAGIC {
        return Err(Error::parse(Location::Offset(0), "bad magic (expected FGDP)"));
    }
    let version = r.u32().map_err(truncated)?;
    if version != VERSION {
        return Err(Error::parse(Location::Offset(4), format!("unsupported version {version}")));
    }
    let vocab_size = r.u64().map_err(truncated)? as usize;
    let dim = r.u32().map_err(truncated)? as usize;
    let flags_at = at(&r);
    let flags = r.u32().map_err(truncated)?;
    if flags & !FLAG_BIAS != 0 {
        return Err(Error::parse(flags_at, format!("unknown flags {flags:#x}")));
    }
    if vocab_size == 0 || dim == 0 {
        return Err(Error::parse(Location::Offset(8), "malformed header"));
    }
    // Cheap plausibility check before allocating.
    let min_len = vocab_size.saturating_mul(2 + 4 * dim);
    if r.remaining() < min_len {
        return Err(Error::parse(Location::Offset(bytes.len() as u64), "unexpected end of file"));
    }

    let mut tokens = Vec::with_capacity(vocab_size);
    let mut seen = HashMap::with_capacity(vocab_size);
    for _ in 0..vocab_size {
        let start = at(&r);
        let len = r.u16().map_err(truncated)? as usize;
        let raw = r.take(len).map_err(truncated)?;
        let token = std::str::from_utf8(raw).map_err(|_| Error::parse(start, "token is not valid UTF-8"))?.to_string();
        if seen.insert(token.clone(), ()).is_some() {
            return Err(Error::parse(start, format!("duplicate token `{token}`")));
        }
        tokens.push(token);
    }

    let read_floats = |count: usize, r: &mut ByteReader<'_>| -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let off = at(r);
            let v = r.f32().map_err(truncated)?;
            if !v.is_finite() {
                return Err(Error::parse(off, "non-finite value"));
            }
            out.push(v);
        }
        Ok(out)
    };
    let weights = read_floats(vocab_size * dim, &mut r)?;
    let biases = if flags & FLAG_BIAS != 0 { Some(read_floats(vocab_size, &mut r)?) } else { None };
    if r.remaining() != 0 {
        return Err(Error::parse(at(&r), "unexpected data after the last section"));
    }

    VocabularyProjection::new(tokens, weights, biases, dim)
}

pub fn write_binary(projection: &VocabularyProjection) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(24 + projection.weights().len() * 4);
    out.extend_from_slice(MAGIC);
    out.put_u32(VERSION);
    out.put_u64(projection.vocab_size() as u64);
    out.put_u32(projection.dim() as u32);
    out.put_u32(if projection.has_bias() { FLAG_BIAS } else { 0 });
    for token in projection.tokens() {
        let len = u16::try_from(token.len())
            .map_err(|_| Error::InvalidProjection(format!("token `{token}` exceeds 65535 bytes")))?;
        out.put_u16(len);
        out.extend_from_slice(token.as_bytes());
    }
    for &w in projection.weights() {
        out.put_f32(w);
    }
    if projection.has_bias() {
        for &b in projection.biases() {
            out.put_f32(b);
        }
    }
    Ok(out)
}
