//! Whitespace-separated ascii clouds: `x y z [attr1 attr2 ...]` per line,
//! `#` comment lines ignored. An optional `# columns: x y z <names...>`
//! header names the attribute channels.

use std::fs;
use std::fmt::Write as _;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub fn load(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

pub fn parse(text: &str, path: &Path) -> Result<PointCloud> {
    let mut names: Option<Vec<String>> = None;
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut attrs: Vec<Vec<f32>> = Vec::new();
    let mut width: Option<usize> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(cols) = rest.strip_prefix("columns:") {
                let toks: Vec<&str> = cols.split_whitespace().collect();
                if toks.len() >= 3 && toks[0] == "x" && toks[1] == "y" && toks[2] == "z" {
                    names = Some(toks[3..].iter().map(|s| s.to_string()).collect());
                }
            }
            continue;
        }
        let fail = |msg: String| Error::parse(path, lineno + 1, msg);
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(fail(format!("expected at least 3 fields, got {}", toks.len())));
        }
        match width {
            None => {
                width = Some(toks.len());
                attrs = vec![Vec::new(); toks.len() - 3];
            }
            Some(w) if w != toks.len() => {
                return Err(fail(format!("expected {w} fields, got {}", toks.len())));
            }
            _ => {}
        }
        let mut coord = [0.0f64; 3];
        for (a, t) in toks[..3].iter().enumerate() {
            let v: f64 = t
                .parse()
                .map_err(|_| fail(format!("bad coordinate '{t}'")))?;
            if !v.is_finite() {
                return Err(fail(format!("non-finite coordinate '{t}'")));
            }
            coord[a] = v;
        }
        points.push(coord);
        for (k, t) in toks[3..].iter().enumerate() {
            let v: f32 = t.parse().map_err(|_| fail(format!("bad attribute '{t}'")))?;
            if !v.is_finite() {
                return Err(fail(format!("non-finite attribute '{t}'")));
            }
            attrs[k].push(v);
        }
    }

    if points.is_empty() {
        return Err(Error::EmptyInput(format!("{}: no points", path.display())));
    }
    let mut cloud = PointCloud::new(points)?;
    for (k, values) in attrs.into_iter().enumerate() {
        let name = names
            .as_ref()
            .and_then(|n| n.get(k).cloned())
            .unwrap_or_else(|| format!("attr{}", k + 1));
        cloud.add_attribute(name, values)?;
    }
    Ok(cloud)
}

/// Serialize with shortest-round-trip float formatting, so a re-parse
/// reproduces the coordinates bit for bit.
pub fn to_text(cloud: &PointCloud) -> String {
    let mut out = String::new();
    let attr_names: Vec<&str> = cloud.attributes().map(|(n, _)| n).collect();
    if !attr_names.is_empty() {
        out.push_str("# columns: x y z");
        for n in &attr_names {
            out.push(' ');
            out.push_str(n);
        }
        out.push('\n');
    }
    let channels: Vec<&[f32]> = cloud.attributes().map(|(_, v)| v).collect();
    for (i, p) in cloud.points().iter().enumerate() {
        write!(out, "{} {} {}", p[0], p[1], p[2]).unwrap();
        for ch in &channels {
            write!(out, " {}", ch[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, cloud: &PointCloud) -> Result<()> {
    fs::write(path, to_text(cloud)).map_err(|e| Error::io(path, e))
}
