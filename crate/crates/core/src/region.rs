//! Named evaluation regions: validation/test subsets labeled salient or
//! non-salient, with box or 2.5D-polygon geometry.
//!
//! File format, one record per line:
//! `region <name> <D|T> <H|L> box <x0> <y0> <z0> <x1> <y1> <z1>`
//! `region <name> <D|T> <H|L> polygon <zmin> <zmax> <x1> <y1> ... <xk> <yk>`

use std::fmt;
use std::fs;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::index::Aabb;

/// Region role: validation (`D`) tunes and early-stops, test (`T`) compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Validation,
    Test,
}

impl Role {
    pub fn code(self) -> &'static str {
        match self {
            Role::Validation => "D",
            Role::Test => "T",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Expected-salient (`H`) or expected-non-salient (`L`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    High,
    Low,
}

impl Label {
    pub fn code(self) -> &'static str {
        match self {
            Label::High => "H",
            Label::Low => "L",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Box(Aabb),
    /// Closed 2D polygon footprint with an inclusive z-range.
    Polygon {
        zmin: f64,
        zmax: f64,
        vertices: Vec<[f64; 2]>,
    },
}

impl Geometry {
    pub fn polygon(zmin: f64, zmax: f64, vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        Ok(Geometry::Polygon { zmin, zmax, vertices })
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        match self {
            Geometry::Box(b) => b.contains(p),
            Geometry::Polygon { zmin, zmax, vertices } => {
                p[2] >= *zmin && p[2] <= *zmax && point_in_polygon(vertices, [p[0], p[1]])
            }
        }
    }

    /// Conservative world-space bounds (used to prime index queries).
    pub fn bounds(&self) -> Aabb {
        match self {
            Geometry::Box(b) => *b,
            Geometry::Polygon { zmin, zmax, vertices } => {
                let mut lo = [f64::INFINITY, f64::INFINITY, *zmin];
                let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY, *zmax];
                for v in vertices {
                    lo[0] = lo[0].min(v[0]);
                    lo[1] = lo[1].min(v[1]);
                    hi[0] = hi[0].max(v[0]);
                    hi[1] = hi[1].max(v[1]);
                }
                Aabb::new(lo, hi)
            }
        }
    }
}

/// Nonzero-winding point-in-polygon test; boundary points count as inside
/// for horizontal-edge crossings on the low side (consistent, not configurable).
fn point_in_polygon(vertices: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut winding = 0i32;
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if a[1] <= p[1] {
            if b[1] > p[1] && cross(a, b, p) > 0.0 {
                winding += 1;
            }
        } else if b[1] <= p[1] && cross(a, b, p) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

fn cross(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub role: Role,
    pub label: Label,
    pub geometry: Geometry,
}

impl Region {
    /// Indices of cloud points inside this region, ascending.
    pub fn points_in(&self, cloud: &PointCloud) -> Vec<usize> {
        cloud
            .points()
            .iter()
            .enumerate()
            .filter(|(_, p)| self.geometry.contains(**p))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegionSet {
    pub regions: Vec<Region>,
}

impl RegionSet {
    pub fn iter_role(&self, role: Role) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| r.role == role)
    }

    pub fn iter_role_label(&self, role: Role, label: Label) -> impl Iterator<Item = &Region> {
        self.regions
            .iter()
            .filter(move |r| r.role == role && r.label == label)
    }

    pub fn has(&self, role: Role, label: Label) -> bool {
        self.iter_role_label(role, label).next().is_some()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut regions = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let fail = |msg: String| Error::parse(path, lineno + 1, msg);
            if toks[0] != "region" {
                return Err(fail(format!("expected 'region', got '{}'", toks[0])));
            }
            if toks.len() < 5 {
                return Err(fail("truncated region record".into()));
            }
            let name = toks[1].to_string();
            let role = match toks[2] {
                "D" => Role::Validation,
                "T" => Role::Test,
                other => return Err(fail(format!("role must be D or T, got '{other}'"))),
            };
            let label = match toks[3] {
                "H" => Label::High,
                "L" => Label::Low,
                other => return Err(fail(format!("label must be H or L, got '{other}'"))),
            };
            let nums = |s: &[&str]| -> Result<Vec<f64>> {
                s.iter()
                    .map(|t| {
                        t.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| fail(format!("bad number '{t}'")))
                    })
                    .collect()
            };
            let geometry = match toks[4] {
                "box" => {
                    let v = nums(&toks[5..])?;
                    if v.len() != 6 {
                        return Err(fail(format!("box needs 6 numbers, got {}", v.len())));
                    }
                    Geometry::Box(Aabb::new(
                        [v[0].min(v[3]), v[1].min(v[4]), v[2].min(v[5])],
                        [v[0].max(v[3]), v[1].max(v[4]), v[2].max(v[5])],
                    ))
                }
                "polygon" => {
                    let v = nums(&toks[5..])?;
                    if v.len() < 2 + 6 || (v.len() - 2) % 2 != 0 {
                        return Err(fail(
                            "polygon needs zmin zmax plus at least 3 xy vertex pairs".into(),
                        ));
                    }
                    let verts = v[2..].chunks(2).map(|c| [c[0], c[1]]).collect();
                    Geometry::polygon(v[0], v[1], verts).map_err(|e| fail(e.to_string()))?
                }
                other => return Err(fail(format!("geometry must be box or polygon, got '{other}'"))),
            };
            regions.push(Region { name, role, label, geometry });
        }
        Ok(Self { regions })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.regions {
            out.push_str(&format!("region {} {} {} ", r.name, r.role, r.label));
            match &r.geometry {
                Geometry::Box(b) => {
                    out.push_str(&format!(
                        "box {} {} {} {} {} {}",
                        b.min[0], b.min[1], b.min[2], b.max[0], b.max[1], b.max[2]
                    ));
                }
                Geometry::Polygon { zmin, zmax, vertices } => {
                    out.push_str(&format!("polygon {zmin} {zmax}"));
                    for v in vertices {
                        out.push_str(&format!(" {} {}", v[0], v[1]));
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
