//! Point cloud readers and writers.

pub mod ply;
pub mod xyz;

use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// On-disk cloud encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    XyzAscii,
    PlyBinary,
    PlyAscii,
}

impl Format {
    /// Pick a format from a file extension (`.xyz`, `.txt` → xyz; `.ply` → binary PLY).
    pub fn from_path(path: &Path) -> Result<Format> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("xyz") | Some("txt") => Ok(Format::XyzAscii),
            Some("ply") => Ok(Format::PlyBinary),
            other => Err(Error::InvalidArgument(format!(
                "cannot infer cloud format from extension {other:?} of {}",
                path.display()
            ))),
        }
    }
}

pub fn load_cloud(path: &Path, format: Format) -> Result<PointCloud> {
    match format {
        Format::XyzAscii => xyz::load(path),
        Format::PlyBinary | Format::PlyAscii => ply::load(path),
    }
}

pub fn write_cloud(path: &Path, cloud: &PointCloud, format: Format) -> Result<()> {
    match format {
        Format::XyzAscii => xyz::write(path, cloud),
        Format::PlyBinary => ply::write(path, cloud, true),
        Format::PlyAscii => ply::write(path, cloud, false),
    }
}

/// Load picking the format from the extension.
pub fn load_cloud_auto(path: &Path) -> Result<PointCloud> {
    load_cloud(path, Format::from_path(path)?)
}
