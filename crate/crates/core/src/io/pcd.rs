//! PCD v0.7 reader and writer. Reads ASCII and uncompressed binary data with
//! `x y z` stored as 4- or 8-byte floats; any other fields are skipped.

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

use super::LoadedCloud;

#[derive(Debug)]
struct Field {
    name: String,
    size: usize,
    kind: char,
    count: usize,
}

#[derive(Debug, PartialEq)]
enum Data {
    Ascii,
    Binary,
}

struct Header {
    fields: Vec<Field>,
    points: usize,
    data: Data,
    body_offset: usize,
}

/// Splits the next line starting at `pos`, returning it (without the line
/// terminator) and the offset of the following line.
fn next_line(bytes: &[u8], pos: usize) -> Option<(&[u8], usize)> {
    if pos >= bytes.len() {
        return None;
    }
    let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| pos + i);
    let mut line = &bytes[pos..end];
    if line.last() == Some(&b'\r') {
        line = &line[..line.len() - 1];
    }
    Some((line, (end + 1).min(bytes.len())))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut names: Option<Vec<String>> = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut kinds: Option<Vec<char>> = None;
    let mut counts: Option<Vec<usize>> = None;
    let mut width: Option<usize> = None;
    let mut height: Option<usize> = None;
    let mut points: Option<usize> = None;

    loop {
        let line_start = pos;
        let (line, next) = next_line(bytes, pos).ok_or_else(|| Error::parse(pos, "header ended before DATA line"))?;
        pos = next;
        let text = std::str::from_utf8(line).map_err(|_| Error::parse(line_start, "header is not valid UTF-8"))?;
        let text = text.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut parts = text.split_whitespace();
        let key = parts.next().unwrap_or_default().to_ascii_uppercase();
        let values: Vec<&str> = parts.collect();
        let numbers = |what: &str| -> Result<Vec<usize>> {
            values
                .iter()
                .map(|v| v.parse::<usize>().map_err(|_| Error::parse(line_start, format!("invalid {what} value `{v}`"))))
                .collect()
        };
        match key.as_str() {
            "VERSION" | "VIEWPOINT" => {}
            "FIELDS" => names = Some(values.iter().map(|s| s.to_string()).collect()),
            "SIZE" => sizes = Some(numbers("SIZE")?),
            "TYPE" => {
                let mut ks = Vec::new();
                for v in &values {
                    match *v {
                        "F" | "I" | "U" => ks.push(v.chars().next().unwrap()),
                        other => return Err(Error::parse(line_start, format!("unknown TYPE `{other}`"))),
                    }
                }
                kinds = Some(ks);
            }
            "COUNT" => counts = Some(numbers("COUNT")?),
            "WIDTH" => width = numbers("WIDTH")?.first().copied(),
            "HEIGHT" => height = numbers("HEIGHT")?.first().copied(),
            "POINTS" => points = numbers("POINTS")?.first().copied(),
            "DATA" => {
                let data = match values.first().map(|s| s.to_ascii_lowercase()).as_deref() {
                    Some("ascii") => Data::Ascii,
                    Some("binary") => Data::Binary,
                    Some(other) => return Err(Error::parse(line_start, format!("unsupported DATA encoding `{other}`"))),
                    None => return Err(Error::parse(line_start, "DATA line without encoding")),
                };
                let names = names.ok_or_else(|| Error::parse(line_start, "missing FIELDS line"))?;
                let sizes = sizes.ok_or_else(|| Error::parse(line_start, "missing SIZE line"))?;
                let kinds = kinds.ok_or_else(|| Error::parse(line_start, "missing TYPE line"))?;
                let counts = counts.unwrap_or_else(|| vec![1; names.len()]);
                if sizes.len() != names.len() || kinds.len() != names.len() || counts.len() != names.len() {
                    return Err(Error::parse(line_start, "FIELDS, SIZE, TYPE and COUNT lengths differ"));
                }
                let fields = names
                    .into_iter()
                    .zip(sizes)
                    .zip(kinds)
                    .zip(counts)
                    .map(|(((name, size), kind), count)| Field { name, size, kind, count })
                    .collect();
                let points = match (points, width, height) {
                    (Some(p), _, _) => p,
                    (None, Some(w), Some(h)) => w * h,
                    _ => return Err(Error::parse(line_start, "missing POINTS (or WIDTH/HEIGHT)")),
                };
                return Ok(Header {
                    fields,
                    points,
                    data,
                    body_offset: pos,
                });
            }
            other => return Err(Error::parse(line_start, format!("unknown header key `{other}`"))),
        }
    }
}

struct Layout {
    /// Value index of x, y, z in an ASCII row.
    value_pos: [usize; 3],
    /// Byte offset of x, y, z in a binary record.
    byte_pos: [usize; 3],
    /// 4 or 8 per axis.
    width: [usize; 3],
    values_per_point: usize,
    record: usize,
}

fn xyz_layout(fields: &[Field], header_end: usize) -> Result<Layout> {
    let mut value_pos = [usize::MAX; 3];
    let mut byte_pos = [usize::MAX; 3];
    let mut width = [0; 3];
    let mut values = 0;
    let mut bytes = 0;
    for f in fields {
        if let Some(axis) = ["x", "y", "z"].iter().position(|n| *n == f.name) {
            if f.kind != 'F' || !matches!(f.size, 4 | 8) || f.count != 1 {
                return Err(Error::parse(
                    header_end,
                    format!("unsupported field layout: `{}` must be a single 4- or 8-byte float", f.name),
                ));
            }
            value_pos[axis] = values;
            byte_pos[axis] = bytes;
            width[axis] = f.size;
        }
        values += f.count;
        bytes += f.size * f.count;
    }
    if value_pos.contains(&usize::MAX) {
        return Err(Error::parse(header_end, "unsupported field layout: FIELDS must include x, y and z"));
    }
    Ok(Layout {
        value_pos,
        byte_pos,
        width,
        values_per_point: values,
        record: bytes,
    })
}

pub fn read_pcd(bytes: &[u8]) -> Result<LoadedCloud> {
    let header = parse_header(bytes)?;
    let Layout {
        value_pos,
        byte_pos,
        width,
        values_per_point,
        record,
    } = xyz_layout(&header.fields, header.body_offset)?;
    let mut points = Vec::with_capacity(header.points);
    let mut dropped = 0;
    let mut push = |p: [f64; 3]| {
        if p.iter().all(|c| c.is_finite()) {
            points.push(Point3::from(p));
        } else {
            dropped += 1;
        }
    };

    match header.data {
        Data::Ascii => {
            let mut pos = header.body_offset;
            let mut read = 0;
            while read < header.points {
                let line_start = pos;
                let (line, next) = next_line(bytes, pos).ok_or_else(|| {
                    Error::parse(pos, format!("truncated data: expected {} points, found {read}", header.points))
                })?;
                pos = next;
                let text = std::str::from_utf8(line).map_err(|_| Error::parse(line_start, "data is not valid UTF-8"))?;
                if text.trim().is_empty() {
                    continue;
                }
                let tokens: Vec<&str> = text.split_whitespace().collect();
                if tokens.len() != values_per_point {
                    return Err(Error::parse(
                        line_start,
                        format!("expected {values_per_point} values per point, found {}", tokens.len()),
                    ));
                }
                let mut p = [0f64; 3];
                for axis in 0..3 {
                    let tok = tokens[value_pos[axis]];
                    p[axis] = parse_float(tok, width[axis])
                        .ok_or_else(|| Error::parse(line_start, format!("invalid float `{tok}`")))?;
                }
                push(p);
                read += 1;
            }
        }
        Data::Binary => {
            let start = header.body_offset;
            let needed = header.points.checked_mul(record).ok_or_else(|| Error::parse(start, "POINTS too large"))?;
            if bytes.len() - start < needed {
                return Err(Error::parse(
                    bytes.len(),
                    format!("truncated data: expected {needed} bytes of binary records, found {}", bytes.len() - start),
                ));
            }
            for chunk in bytes[start..start + needed].chunks_exact(record) {
                let mut p = [0f64; 3];
                for axis in 0..3 {
                    let o = byte_pos[axis];
                    p[axis] = if width[axis] == 4 {
                        f32::from_le_bytes(chunk[o..o + 4].try_into().unwrap()) as f64
                    } else {
                        f64::from_le_bytes(chunk[o..o + 8].try_into().unwrap())
                    };
                }
                push(p);
            }
        }
    }
    Ok(LoadedCloud {
        cloud: PointCloud::from_finite(points),
        dropped_non_finite: dropped,
    })
}

/// Parses at the stored precision so 4-byte values round the same way a
/// binary file would.
fn parse_float(tok: &str, width: usize) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "nan" | "-nan" => Some(f64::NAN),
        _ if width == 4 => tok.parse::<f32>().ok().map(f64::from),
        _ => tok.parse::<f64>().ok(),
    }
}

/// True when every coordinate survives a round trip through `f32`.
pub(crate) fn fits_f32(cloud: &PointCloud) -> bool {
    cloud.iter().all(|p| p.iter().all(|c| (*c as f32) as f64 == *c))
}

fn header(n: usize, encoding: &str, size: usize) -> String {
    format!(
        "# .PCD v0.7 - Point Cloud Data file format\n\
         VERSION 0.7\n\
         FIELDS x y z\n\
         SIZE {size} {size} {size}\n\
         TYPE F F F\n\
         COUNT 1 1 1\n\
         WIDTH {n}\n\
         HEIGHT 1\n\
         VIEWPOINT 0 0 0 1 0 0 0\n\
         POINTS {n}\n\
         DATA {encoding}\n"
    )
}

/// Stores 4-byte floats when that is exact for every coordinate and 8-byte
/// floats otherwise, so reading the output gives back the same cloud.
pub fn write_pcd(cloud: &PointCloud, binary: bool) -> Vec<u8> {
    let n = cloud.len();
    let narrow = fits_f32(cloud);
    let size = if narrow { 4 } else { 8 };
    if binary {
        let mut out = header(n, "binary", size).into_bytes();
        out.reserve(n * 3 * size);
        for p in cloud {
            for c in [p.x, p.y, p.z] {
                if narrow {
                    out.extend_from_slice(&(c as f32).to_le_bytes());
                } else {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        out
    } else {
        let mut out = header(n, "ascii", size);
        for p in cloud {
            if narrow {
                out.push_str(&format!("{} {} {}\n", p.x as f32, p.y as f32, p.z as f32));
            } else {
                out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
            }
        }
        out.into_bytes()
    }
}
