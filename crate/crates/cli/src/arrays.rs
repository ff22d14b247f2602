//! Binary array files and text meshes.
//!
//! An array file is one ASCII header line `dims dt h alpha endian`, for
//! example `257x33 0.00390625 0.03125 0.5 little`, followed by the values
//! as little-endian `f64` in row-major order.

use std::path::Path;

use fracwave_core::{Mesh1d, SpaceTimeField};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayHeader {
    pub rows: usize,
    pub cols: usize,
    pub dt: f64,
    pub h: f64,
    pub alpha: f64,
}

impl ArrayHeader {
    fn line(&self) -> String {
        format!(
            "{}x{} {} {} {} little\n",
            self.rows, self.cols, self.dt, self.h, self.alpha
        )
    }
}

pub fn encode_array(header: &ArrayHeader, field: &SpaceTimeField) -> Vec<u8> {
    debug_assert_eq!(header.rows * header.cols, field.as_slice().len());
    let line = header.line();
    let mut out = Vec::with_capacity(line.len() + 8 * field.as_slice().len());
    out.extend_from_slice(line.as_bytes());
    for v in field.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_array(bytes: &[u8]) -> Result<(ArrayHeader, SpaceTimeField), CliError> {
    let bad = |m: &str| CliError::Config(format!("array file: {m}"));
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| bad("missing header line"))?;
    let head = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not ASCII"))?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    if parts.len() != 5 {
        return Err(bad("header needs 'dims dt h alpha endian'"));
    }
    if parts[4] != "little" {
        return Err(bad(&format!("unsupported byte order '{}'", parts[4])));
    }
    let (r, c) = parts[0]
        .split_once('x')
        .ok_or_else(|| bad("dims must look like ROWSxCOLS"))?;
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("'{s}' is not a number")));
    let header = ArrayHeader {
        rows: r.parse().map_err(|_| bad("bad row count"))?,
        cols: c.parse().map_err(|_| bad("bad column count"))?,
        dt: num(parts[1])?,
        h: num(parts[2])?,
        alpha: num(parts[3])?,
    };
    let payload = &bytes[nl + 1..];
    if payload.len() != 8 * header.rows * header.cols {
        return Err(bad(&format!(
            "payload has {} bytes, header promises {}",
            payload.len(),
            8 * header.rows * header.cols
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = SpaceTimeField::from_vec(header.rows, header.cols, data)?;
    Ok((header, field))
}

pub fn read_array(path: &Path) -> Result<(ArrayHeader, SpaceTimeField), CliError> {
    let bytes = std::fs::read(path)?;
    decode_array(&bytes).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses `nodes N` + N coordinates, then `elements E` + E index pairs.
/// Elements must chain consecutive nodes after sorting by coordinate.
pub fn parse_mesh(text: &str) -> Result<Mesh1d, CliError> {
    let bad = |m: String| CliError::Config(format!("mesh file: {m}"));
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    fn expect<'a>(tokens: &mut impl Iterator<Item = &'a str>, word: &str) -> Result<usize, String> {
        match tokens.next() {
            Some(w) if w == word => {}
            other => return Err(format!("expected '{word}', found {other:?}")),
        }
        tokens
            .next()
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| format!("'{word}' needs a count"))
    }
    let n = expect(&mut tokens, "nodes").map_err(bad)?;
    let mut coords = Vec::with_capacity(n);
    for i in 0..n {
        let v = tokens
            .next()
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| bad(format!("node {i} has no coordinate")))?;
        coords.push(v);
    }
    let e = expect(&mut tokens, "elements").map_err(bad)?;
    let mut pairs = Vec::with_capacity(e);
    for k in 0..e {
        let mut idx = || -> Result<usize, CliError> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(format!("element {k} needs two node indices")))
        };
        let (a, b) = (idx()?, idx()?);
        if a >= n || b >= n {
            return Err(bad(format!("element {k} refers to a missing node")));
        }
        pairs.push((a, b));
    }
    if tokens.next().is_some() {
        return Err(bad("trailing content".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut seen = vec![false; n.saturating_sub(1)];
    for (k, (a, b)) in pairs.iter().enumerate() {
        let (ra, rb) = (rank[*a].min(rank[*b]), rank[*a].max(rank[*b]));
        if rb != ra + 1 || seen[ra] {
            return Err(bad(format!("element {k} does not join neighbouring nodes")));
        }
        seen[ra] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(bad("elements do not cover the interval".into()));
    }
    let sorted = order.iter().map(|&i| coords[i]).collect();
    Ok(Mesh1d::new(sorted)?)
}
