//! Loading inputs whose format is detected from the file header.

use std::io::Read;
use std::path::Path;

use soupdil::formats;
use soupdil::patches::ComplexImage;

use crate::error::{CliError, CliResult, WithPath};

fn magic(path: &Path) -> CliResult<[u8; 8]> {
    let mut f = std::fs::File::open(path).map_err(|e| CliError::File {
        path: path.into(),
        source: e.into(),
    })?;
    let mut head = [0u8; 8];
    let n = f.read(&mut head).map_err(|e| CliError::File {
        path: path.into(),
        source: e.into(),
    })?;
    if n < 2 {
        return Err(CliError::File {
            path: path.into(),
            source: soupdil::Error::Format("file too short".into()),
        });
    }
    Ok(head)
}

/// Reads a `SOUPIMG1` complex image or a PGM (values on the file's own scale).
pub fn load_image(path: &Path) -> CliResult<ComplexImage> {
    let head = magic(path)?;
    if &head == b"SOUPIMG1" {
        formats::load_image(path).at(path)
    } else if head.starts_with(b"P5") || head.starts_with(b"P2") {
        formats::load_pgm(path).at(path)
    } else {
        Err(CliError::File {
            path: path.into(),
            source: soupdil::Error::Format("neither a SOUPIMG1 image nor a PGM".into()),
        })
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::File {
        path: dir.into(),
        source: e.into(),
    })
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::File {
        path: path.into(),
        source: e.into(),
    })
}
