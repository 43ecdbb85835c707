//! ASCII PLY vertices. Other elements and vertex properties are skipped.

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

use super::LoadedCloud;

struct Element {
    name: String,
    count: usize,
    properties: Vec<String>,
    /// `float`/`float32` scalars, read as f32 so written files reload exactly.
    single: Vec<bool>,
    // list properties make a line's token count variable
    has_list: bool,
}

fn lines(bytes: &[u8]) -> impl Iterator<Item = (usize, &[u8])> {
    let mut pos = 0;
    std::iter::from_fn(move || {
        if pos >= bytes.len() {
            return None;
        }
        let start = pos;
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| pos + i);
        pos = end + 1;
        let mut line = &bytes[start..end];
        if line.last() == Some(&b'\r') {
            line = &line[..line.len() - 1];
        }
        Some((start, line))
    })
}

pub fn read_ply(bytes: &[u8]) -> Result<LoadedCloud> {
    let mut it = lines(bytes);
    let text = |offset: usize, line: &[u8]| -> Result<String> {
        std::str::from_utf8(line)
            .map(|s| s.trim().to_string())
            .map_err(|_| Error::parse(offset, "not valid UTF-8"))
    };

    match it.next() {
        Some((o, l)) if text(o, l)? == "ply" => {}
        _ => return Err(Error::parse(0, "missing `ply` magic line")),
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut header_end = None;
    for (offset, raw) in it.by_ref() {
        let line = text(offset, raw)?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.first().copied() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                if parts.get(1) != Some(&"ascii") {
                    return Err(Error::parse(offset, format!("unsupported PLY format `{}`", parts[1..].join(" "))));
                }
            }
            Some("element") => {
                let (Some(name), Some(count)) = (parts.get(1), parts.get(2)) else {
                    return Err(Error::parse(offset, "malformed element line"));
                };
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(offset, format!("invalid element count `{count}`")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                    single: Vec::new(),
                    has_list: false,
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(offset, "property before any element"))?;
                if parts.get(1) == Some(&"list") {
                    element.has_list = true;
                    element.properties.push(parts.get(4).unwrap_or(&"").to_string());
                    element.single.push(false);
                } else {
                    let name = parts.get(2).ok_or_else(|| Error::parse(offset, "malformed property line"))?;
                    element.properties.push(name.to_string());
                    element.single.push(matches!(parts[1], "float" | "float32"));
                }
            }
            Some("end_header") => {
                header_end = Some(offset + raw.len());
                break;
            }
            Some(other) => return Err(Error::parse(offset, format!("unknown header keyword `{other}`"))),
        }
    }
    let header_end = header_end.ok_or_else(|| Error::parse(bytes.len(), "missing end_header"))?;

    let mut points = Vec::new();
    let mut dropped = 0;
    let mut found_vertex = false;
    for element in &elements {
        let is_vertex = element.name == "vertex";
        let axes = if is_vertex {
            found_vertex = true;
            let find = |n: &str| element.properties.iter().position(|p| p == n);
            match (find("x"), find("y"), find("z")) {
                (Some(x), Some(y), Some(z)) if !element.has_list => Some([x, y, z]),
                _ => return Err(Error::parse(header_end, "unsupported field layout: vertex needs scalar x, y, z")),
            }
        } else {
            None
        };
        let mut read = 0;
        while read < element.count {
            let (offset, raw) = it.next().ok_or_else(|| {
                Error::parse(
                    bytes.len(),
                    format!("truncated data: expected {} `{}` rows, found {read}", element.count, element.name),
                )
            })?;
            let line = text(offset, raw)?;
            if line.is_empty() {
                continue;
            }
            read += 1;
            let Some(axes) = axes else { continue };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != element.properties.len() {
                return Err(Error::parse(
                    offset,
                    format!("expected {} vertex values, found {}", element.properties.len(), tokens.len()),
                ));
            }
            let mut p = [0f64; 3];
            for (c, &a) in p.iter_mut().zip(&axes) {
                let invalid = || Error::parse(offset, format!("invalid number `{}`", tokens[a]));
                *c = if element.single[a] {
                    tokens[a].parse::<f32>().map_err(|_| invalid())? as f64
                } else {
                    tokens[a].parse::<f64>().map_err(|_| invalid())?
                };
            }
            if p.iter().all(|c| c.is_finite()) {
                points.push(Point3::from(p));
            } else {
                dropped += 1;
            }
        }
    }
    if !found_vertex {
        return Err(Error::parse(header_end, "no vertex element"));
    }
    Ok(LoadedCloud {
        cloud: PointCloud::from_finite(points),
        dropped_non_finite: dropped,
    })
}

/// Declares `float` properties when that is exact for every coordinate and
/// `double` otherwise.
pub fn write_ply(cloud: &PointCloud) -> Vec<u8> {
    let narrow = super::pcd::fits_f32(cloud);
    let kind = if narrow { "float" } else { "double" };
    let mut out = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty {kind} x\nproperty {kind} y\nproperty {kind} z\nend_header\n",
        cloud.len()
    );
    for p in cloud {
        if narrow {
            out.push_str(&format!("{} {} {}\n", p.x as f32, p.y as f32, p.z as f32));
        } else {
            out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_faces_and_extra_properties() {
        let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\nproperty float x\nproperty float y\n\
property float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n\
0 0 0 255\n1 0 0 0\n0 1 nan 3\n3 0 1 2\n";
        let loaded = read_ply(text.as_bytes()).unwrap();
        assert_eq!(loaded.cloud.points(), &[Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)]);
        assert_eq!(loaded.dropped_non_finite, 1);
    }

    #[test]
    fn element_before_vertex_is_skipped() {
        let text = "ply\nformat ascii 1.0\nelement camera 1\nproperty float f\nelement vertex 1\nproperty double x\n\
property double y\nproperty double z\nend_header\n500\n0.5 0.25 0.125\n";
        assert_eq!(read_ply(text.as_bytes()).unwrap().cloud.points(), &[Point3::new(0.5, 0.25, 0.125)]);
    }

    #[test]
    fn rejects_binary_and_truncation() {
        let bin = "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(read_ply(bin.as_bytes()).unwrap_err().to_string().contains("unsupported PLY format"));
        let short = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n";
        match read_ply(short.as_bytes()).unwrap_err() {
            Error::Parse { offset, message } => {
                assert_eq!(offset, short.len());
                assert!(message.contains("truncated"));
            }
            other => panic!("{other:?}"),
        }
        assert!(read_ply(b"not a ply").is_err());
        let no_z = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nend_header\n";
        assert!(read_ply(no_z.as_bytes()).unwrap_err().to_string().contains("unsupported field layout"));
    }
}
