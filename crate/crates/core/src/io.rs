//! Plain-text and binary file formats: order/embedding/bias CSVs, PGM and PPM.
//!
//! Floats are written with 17 significant digits so every value reads back
//! bit-exactly.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::order::PatchOrder;
use crate::pe::{ContextBias, EmbeddingField, SimilarityField};
use crate::three_cell::RgbImage;

pub const ORDER_HEADER: &str = "cell_index,row,col,position";
pub const BIAS_HEADER: &str = "cell_index,bias";
pub const TRACE_HEADER: &str = "iteration,j_current,j_best";
const PE_META_PREFIX: &str = "# pe-forge embedding";

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{file_name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn expect_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    header: &str,
) -> Result<()> {
    match lines.next() {
        Some((_, h)) if h.trim() == header => Ok(()),
        Some((i, h)) => Err(Error::parse(i + 1, format!("expected header `{header}`, got `{h}`"))),
        None => Err(Error::parse(1, "empty file")),
    }
}

fn field<T: std::str::FromStr>(raw: &str, line: usize, what: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{}`", raw.trim())))
}

/// Collects `(cell, row, col, payload)` rows into a grid, checking that every
/// cell appears once and that row/col agree with the row-major cell index.
fn assemble<T: Clone>(rows: Vec<(usize, usize, usize, T, usize)>) -> Result<(GridShape, Vec<T>)> {
    if rows.is_empty() {
        return Err(Error::parse(2, "no data rows"));
    }
    let height = rows.iter().map(|r| r.1).max().unwrap_or(0).saturating_add(1);
    let width = rows.iter().map(|r| r.2).max().unwrap_or(0).saturating_add(1);
    if width.checked_mul(height) != Some(rows.len()) {
        return Err(Error::parse(
            rows.len() + 1,
            format!("{} rows do not cover a {width}x{height} grid", rows.len()),
        ));
    }
    let shape = GridShape::new(width, height)?;
    let mut slots: Vec<Option<T>> = vec![None; shape.len()];
    for (cell, row, col, value, line) in rows {
        if cell >= shape.len() || shape.cell(row, col) != cell {
            return Err(Error::parse(
                line,
                format!("cell_index {cell} does not match row {row}, col {col}"),
            ));
        }
        if slots[cell].is_some() {
            return Err(Error::parse(line, format!("duplicate cell {cell}")));
        }
        slots[cell] = Some(value);
    }
    Ok((shape, slots.into_iter().map(|v| v.expect("all cells filled")).collect()))
}

pub fn write_order_csv(order: &PatchOrder) -> String {
    let shape = order.shape();
    let mut out = format!("{ORDER_HEADER}\n");
    for (cell, &p) in order.positions().iter().enumerate() {
        let (row, col) = shape.coords(cell);
        out.push_str(&format!("{cell},{row},{col},{}\n", fmt_f64(p)));
    }
    out
}

pub fn parse_order_csv(text: &str) -> Result<PatchOrder> {
    let mut lines = text.lines().enumerate();
    expect_header(&mut lines, ORDER_HEADER)?;
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::parse(n, format!("expected 4 fields, got {}", f.len())));
        }
        let pos: f64 = field(f[3], n, "position")?;
        if !pos.is_finite() {
            return Err(Error::parse(n, "position must be finite"));
        }
        rows.push((field(f[0], n, "cell_index")?, field(f[1], n, "row")?, field(f[2], n, "col")?, pos, n));
    }
    let (shape, positions) = assemble(rows)?;
    PatchOrder::new(shape, positions)
}

/// Provenance stored in the first line of an embedding CSV. Fields are
/// optional so externally produced embeddings can be scored too.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PeMeta {
    pub base: Option<f64>,
    pub scale: Option<f64>,
}

pub fn write_pe_csv(emb: &EmbeddingField, meta: &PeMeta) -> String {
    let shape = emb.shape();
    let d = emb.d_model();
    let mut out = format!(
        "{PE_META_PREFIX} width={} height={} d_model={d}",
        shape.width(),
        shape.height()
    );
    if let Some(b) = meta.base {
        out.push_str(&format!(" base={}", fmt_f64(b)));
    }
    if let Some(s) = meta.scale {
        out.push_str(&format!(" scale={}", fmt_f64(s)));
    }
    out.push('\n');
    out.push_str(&pe_header(d));
    out.push('\n');
    for (cell, row_values) in emb.rows().enumerate() {
        let (row, col) = shape.coords(cell);
        out.push_str(&format!("{cell},{row},{col}"));
        for v in row_values {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

fn pe_header(d: usize) -> String {
    let mut h = String::from("cell_index,row,col");
    for k in 0..d {
        h.push_str(&format!(",e{k}"));
    }
    h
}

fn parse_meta(line: &str, n: usize) -> Result<PeMeta> {
    let mut meta = PeMeta::default();
    for kv in line.trim_start_matches('#').split_whitespace() {
        let Some((k, v)) = kv.split_once('=') else {
            continue;
        };
        match k {
            "base" => meta.base = Some(field(v, n, "base")?),
            "scale" => meta.scale = Some(field(v, n, "scale")?),
            _ => {}
        }
    }
    Ok(meta)
}

pub fn parse_pe_csv(text: &str) -> Result<(EmbeddingField, PeMeta)> {
    let mut lines = text.lines().enumerate().peekable();
    let mut meta = PeMeta::default();
    if let Some(&(i, l)) = lines.peek() {
        if l.starts_with('#') {
            meta = parse_meta(l, i + 1)?;
            lines.next();
        }
    }
    let (hi, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 4 || cols[..3] != ["cell_index", "row", "col"] {
        return Err(Error::parse(hi + 1, "expected header `cell_index,row,col,e0,...`"));
    }
    let d = cols.len() - 3;
    if header.trim() != pe_header(d) {
        return Err(Error::parse(hi + 1, "embedding columns must be e0..e{d-1}"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != d + 3 {
            return Err(Error::parse(n, format!("expected {} fields, got {}", d + 3, f.len())));
        }
        let values = f[3..]
            .iter()
            .map(|v| {
                let x: f64 = field(v, n, "embedding value")?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(Error::parse(n, "embedding values must be finite"))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((field(f[0], n, "cell_index")?, field(f[1], n, "row")?, field(f[2], n, "col")?, values, n));
    }
    let (shape, values) = assemble(rows)?;
    let emb = EmbeddingField::from_raw(shape, d, values.concat())?;
    Ok((emb, meta))
}

pub fn write_bias_csv(bias: &ContextBias) -> String {
    let mut out = format!("{BIAS_HEADER}\n");
    for (cell, v) in bias.values().iter().enumerate() {
        out.push_str(&format!("{cell},{}\n", fmt_f64(*v)));
    }
    out
}

/// Reads a bias file for a grid of known shape.
pub fn parse_bias_csv(text: &str, shape: GridShape) -> Result<ContextBias> {
    let mut lines = text.lines().enumerate();
    expect_header(&mut lines, BIAS_HEADER)?;
    let mut values = vec![None; shape.len()];
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (c, v) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(n, "expected `cell_index,bias`"))?;
        let cell: usize = field(c, n, "cell_index")?;
        let value: f64 = field(v, n, "bias")?;
        let slot = values
            .get_mut(cell)
            .ok_or_else(|| Error::parse(n, format!("cell {cell} outside a {shape} grid")))?;
        if slot.replace(value).is_some() {
            return Err(Error::parse(n, format!("duplicate cell {cell}")));
        }
    }
    let values: Vec<f64> = values
        .into_iter()
        .enumerate()
        .map(|(c, v)| v.ok_or_else(|| Error::parse(0, format!("missing cell {c}"))))
        .collect::<Result<_>>()?;
    ContextBias::new(shape, values)
}

pub fn write_trace_csv(trace: &[crate::opt::TraceRow]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for t in trace {
        out.push_str(&format!(
            "{},{},{}\n",
            t.iteration,
            fmt_f64(t.j_current),
            fmt_f64(t.j_best)
        ));
    }
    out
}

/// Maps similarity -1 to 0 and +1 to 255.
pub fn similarity_to_gray(s: f64) -> u8 {
    (((s.clamp(-1.0, 1.0) + 1.0) / 2.0) * 255.0).round() as u8
}

/// Binary 8-bit PGM of one center's similarity map (one pixel per cell).
pub fn encode_similarity_pgm(field: &SimilarityField, center: usize) -> Vec<u8> {
    let shape = field.shape();
    let mut out = format!("P5\n{} {}\n255\n", shape.width(), shape.height()).into_bytes();
    out.extend(field.row(center).iter().map(|&s| similarity_to_gray(s)));
    out
}

pub fn similarity_map_csv(field: &SimilarityField, center: usize) -> String {
    let shape = field.shape();
    let mut out = String::from("cell_index,row,col,similarity\n");
    for (cell, s) in field.row(center).iter().enumerate() {
        let (row, col) = shape.coords(cell);
        out.push_str(&format!("{cell},{row},{col},{}\n", fmt_f64(*s)));
    }
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

/// Parses a binary (P6) PPM with maxval 255.
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let mut pos = 0;
    let token = |pos: &mut usize| -> Result<String> {
        // whitespace and comments
        loop {
            match bytes.get(*pos) {
                Some(b) if b.is_ascii_whitespace() => *pos += 1,
                Some(b'#') => {
                    while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                        *pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Image("truncated header".into())),
            }
        }
        let start = *pos;
        while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            *pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    if token(&mut pos)? != "P6" {
        return Err(Error::Image("not a binary PPM (P6)".into()));
    }
    let mut dim = |name: &str| -> Result<u32> {
        let t = token(&mut pos)?;
        t.parse::<u32>()
            .map_err(|_| Error::Image(format!("invalid {name} `{t}`")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let maxval = dim("maxval")?;
    if maxval != 255 {
        return Err(Error::Image(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte before the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Image("missing raster separator".into()));
    }
    pos += 1;
    let expected = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::Image("dimensions overflow".into()))?;
    let data = &bytes[pos..];
    if data.len() != expected {
        return Err(Error::Image(format!(
            "expected {expected} raster bytes, got {}",
            data.len()
        )));
    }
    Ok(RgbImage {
        width,
        height,
        data: data.to_vec(),
    })
}
