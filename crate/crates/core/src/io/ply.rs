//! PLY reader/writer for `vertex` elements with float scalar properties.
//!
//! Supported: ascii and binary_little_endian, properties of type
//! float/float32 or double/float64. x, y, z are required; any additional
//! scalar property becomes an attribute channel.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScalarType {
    F32,
    F64,
}

impl ScalarType {
    fn parse(tok: &str) -> Option<ScalarType> {
        match tok {
            "float" | "float32" => Some(ScalarType::F32),
            "double" | "float64" => Some(ScalarType::F64),
            _ => None,
        }
    }

    fn size(self) -> usize {
        match self {
            ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }
}

pub fn load(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse(&bytes, path)
}

fn next_line(bytes: &[u8], cursor: &mut usize, lineno: &mut usize, path: &Path) -> Result<String> {
    let start = *cursor;
    while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
        *cursor += 1;
    }
    if *cursor >= bytes.len() {
        return Err(Error::parse(path, *lineno + 1, "unterminated header"));
    }
    let line = String::from_utf8_lossy(&bytes[start..*cursor])
        .trim_end_matches('\r')
        .to_string();
    *cursor += 1;
    *lineno += 1;
    Ok(line)
}

pub fn parse(bytes: &[u8], path: &Path) -> Result<PointCloud> {
    // Header is ascii lines up to "end_header".
    let mut cursor = 0usize;
    let mut lineno = 0usize;

    let magic = next_line(bytes, &mut cursor, &mut lineno, path)?;
    if magic.trim() != "ply" {
        return Err(Error::parse(path, 1, "missing 'ply' magic"));
    }

    let mut binary = None;
    let mut vertex_count: Option<usize> = None;
    let mut props: Vec<(String, ScalarType)> = Vec::new();
    let mut in_vertex = false;

    loop {
        let line = next_line(bytes, &mut cursor, &mut lineno, path)?;
        let line_no = lineno;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        match toks[0] {
            "comment" | "obj_info" => {}
            "format" => {
                binary = match toks.get(1).copied() {
                    Some("ascii") => Some(false),
                    Some("binary_little_endian") => Some(true),
                    other => {
                        return Err(Error::parse(
                            path,
                            line_no,
                            format!("unsupported format {other:?}"),
                        ))
                    }
                };
            }
            "element" => {
                if toks.len() != 3 {
                    return Err(Error::parse(path, line_no, "malformed element line"));
                }
                if toks[1] == "vertex" {
                    in_vertex = true;
                    vertex_count = Some(toks[2].parse().map_err(|_| {
                        Error::parse(path, line_no, format!("bad vertex count '{}'", toks[2]))
                    })?);
                } else {
                    let count: usize = toks[2].parse().unwrap_or(1);
                    if count != 0 {
                        return Err(Error::parse(
                            path,
                            line_no,
                            format!("unsupported element '{}'", toks[1]),
                        ));
                    }
                    in_vertex = false;
                }
            }
            "property" => {
                if !in_vertex {
                    continue;
                }
                if toks.len() != 3 {
                    return Err(Error::parse(
                        path,
                        line_no,
                        "only scalar properties are supported",
                    ));
                }
                let ty = ScalarType::parse(toks[1]).ok_or_else(|| {
                    Error::parse(path, line_no, format!("unsupported property type '{}'", toks[1]))
                })?;
                props.push((toks[2].to_string(), ty));
            }
            "end_header" => break,
            other => {
                return Err(Error::parse(path, line_no, format!("unexpected token '{other}'")));
            }
        }
    }

    let binary =
        binary.ok_or_else(|| Error::parse(path, lineno, "header missing 'format' line"))?;
    let count =
        vertex_count.ok_or_else(|| Error::parse(path, lineno, "header missing vertex element"))?;
    if count == 0 {
        return Err(Error::EmptyInput(format!("{}: no vertices", path.display())));
    }
    for need in ["x", "y", "z"] {
        if !props.iter().any(|(n, _)| n == need) {
            return Err(Error::parse(path, lineno, format!("missing property '{need}'")));
        }
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(count); props.len()];
    if binary {
        let row = props.iter().map(|(_, t)| t.size()).sum::<usize>();
        let need = count * row;
        if bytes.len() - cursor < need {
            return Err(Error::parse(
                path,
                lineno,
                format!("binary payload truncated: need {need} bytes, have {}", bytes.len() - cursor),
            ));
        }
        let mut at = cursor;
        for _ in 0..count {
            for (k, (_, ty)) in props.iter().enumerate() {
                let v = match ty {
                    ScalarType::F32 => {
                        f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64
                    }
                    ScalarType::F64 => f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()),
                };
                at += ty.size();
                columns[k].push(v);
            }
        }
    } else {
        let text = String::from_utf8_lossy(&bytes[cursor..]);
        let mut rows = 0usize;
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            lineno += 1;
            if rows == count {
                break;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != props.len() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {} values, got {}", props.len(), toks.len()),
                ));
            }
            for (k, t) in toks.iter().enumerate() {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("bad value '{t}'")))?;
                columns[k].push(v);
            }
            rows += 1;
        }
        if rows < count {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {count} vertex rows, found {rows}"),
            ));
        }
    }

    let col = |name: &str| props.iter().position(|(n, _)| n == name).unwrap();
    let (xi, yi, zi) = (col("x"), col("y"), col("z"));
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let p = [columns[xi][i], columns[yi][i], columns[zi][i]];
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::parse(path, 0, format!("non-finite coordinate in vertex {i}")));
        }
        points.push(p);
    }
    let mut cloud = PointCloud::new(points)?;
    for (k, (name, _)) in props.iter().enumerate() {
        if k == xi || k == yi || k == zi {
            continue;
        }
        let values: Vec<f32> = columns[k].iter().map(|&v| v as f32).collect();
        cloud.add_attribute(name.clone(), values)?;
    }
    Ok(cloud)
}

/// Write x/y/z as double plus every attribute channel as float.
pub fn write(path: &Path, cloud: &PointCloud, binary: bool) -> Result<()> {
    let bytes = to_bytes(cloud, binary);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn to_bytes(cloud: &PointCloud, binary: bool) -> Vec<u8> {
    let mut out = Vec::new();
    let format = if binary { "binary_little_endian" } else { "ascii" };
    out.extend_from_slice(b"ply\n");
    out.extend_from_slice(format!("format {format} 1.0\n").as_bytes());
    out.extend_from_slice(format!("element vertex {}\n", cloud.len()).as_bytes());
    out.extend_from_slice(b"property double x\nproperty double y\nproperty double z\n");
    let channels: Vec<(&str, &[f32])> = cloud.attributes().collect();
    for (name, _) in &channels {
        out.extend_from_slice(format!("property float {name}\n").as_bytes());
    }
    out.extend_from_slice(b"end_header\n");

    if binary {
        for (i, p) in cloud.points().iter().enumerate() {
            for c in p {
                out.extend_from_slice(&c.to_le_bytes());
            }
            for (_, v) in &channels {
                out.extend_from_slice(&v[i].to_le_bytes());
            }
        }
    } else {
        let mut text = String::new();
        for (i, p) in cloud.points().iter().enumerate() {
            use std::fmt::Write as _;
            write!(text, "{} {} {}", p[0], p[1], p[2]).unwrap();
            for (_, v) in &channels {
                write!(text, " {}", v[i]).unwrap();
            }
            text.push('\n');
        }
        out.write_all(text.as_bytes()).unwrap();
    }
    out
}
