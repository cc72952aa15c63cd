//! On-disk formats. All binary formats are little-endian.
//!
//! - `SOUPIMG1`: magic, u32 height, u32 width, then f64 (re, im) pairs row-major.
//! - `SOUPDIC1`: magic, u32 n, u32 J, then f64 pairs column-major.
//! - `SOUPCOE1`: magic, u32 N, u32 J, then per column a u32 count followed by
//!   (u32 index, f64 re, f64 im) triples.
//! - `SOUPKSP1`: magic, u32 height, u32 width, u32 count, then f64 pairs in the
//!   measurement order of the mask.
//! - Masks are text: `SOUPMASK v1`, then `<height> <width>`, then one line of
//!   `0`/`1` per k-space row in centred coordinates.
//! - 8-bit (or 16-bit) PGM for magnitude images.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{CoefMatrix, DenseMatrix, Dictionary, SparseColumn, C64};
use crate::patches::ComplexImage;
use crate::sensing::{MaskScheme, SamplingMask};

const IMG_MAGIC: &[u8; 8] = b"SOUPIMG1";
const DIC_MAGIC: &[u8; 8] = b"SOUPDIC1";
const COE_MAGIC: &[u8; 8] = b"SOUPCOE1";
const KSP_MAGIC: &[u8; 8] = b"SOUPKSP1";
const MASK_HEADER: &str = "SOUPMASK v1";

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_c64(w: &mut impl Write, z: C64) -> Result<()> {
    w.write_all(&z.re.to_le_bytes())?;
    w.write_all(&z.im.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_c64(r: &mut impl Read) -> Result<C64> {
    Ok(C64::new(get_f64(r)?, get_f64(r)?))
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 8]) -> Result<()> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    if &b != magic {
        return Err(Error::Format(format!(
            "expected {} header",
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut b = [0u8; 1];
    if r.read(&mut b)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn write_image(w: &mut impl Write, img: &ComplexImage) -> Result<()> {
    w.write_all(IMG_MAGIC)?;
    put_u32(w, img.height())?;
    put_u32(w, img.width())?;
    for &z in img.as_slice() {
        put_c64(w, z)?;
    }
    Ok(())
}

pub fn read_image(r: &mut impl Read) -> Result<ComplexImage> {
    expect_magic(r, IMG_MAGIC)?;
    let h = get_u32(r)?;
    let w = get_u32(r)?;
    let data = (0..h * w).map(|_| get_c64(r)).collect::<Result<Vec<_>>>()?;
    expect_eof(r)?;
    ComplexImage::from_vec(h, w, data)
}

pub fn write_dictionary(w: &mut impl Write, dict: &Dictionary) -> Result<()> {
    let m = dict.as_matrix();
    w.write_all(DIC_MAGIC)?;
    put_u32(w, m.rows())?;
    put_u32(w, m.cols())?;
    for &z in m.as_slice() {
        put_c64(w, z)?;
    }
    Ok(())
}

pub fn read_dictionary(r: &mut impl Read) -> Result<Dictionary> {
    expect_magic(r, DIC_MAGIC)?;
    let n = get_u32(r)?;
    let j = get_u32(r)?;
    let data = (0..n * j).map(|_| get_c64(r)).collect::<Result<Vec<_>>>()?;
    expect_eof(r)?;
    Dictionary::new(DenseMatrix::from_col_major(n, j, data)?)
}

pub fn write_coefs(w: &mut impl Write, coefs: &CoefMatrix) -> Result<()> {
    w.write_all(COE_MAGIC)?;
    put_u32(w, coefs.num_signals())?;
    put_u32(w, coefs.num_atoms())?;
    for col in coefs.columns() {
        put_u32(w, col.nnz())?;
        for (i, z) in col.iter() {
            put_u32(w, i)?;
            put_c64(w, z)?;
        }
    }
    Ok(())
}

pub fn read_coefs(r: &mut impl Read) -> Result<CoefMatrix> {
    expect_magic(r, COE_MAGIC)?;
    let n = get_u32(r)?;
    let j = get_u32(r)?;
    let mut cols = Vec::with_capacity(j);
    for _ in 0..j {
        let count = get_u32(r)?;
        if count > n {
            return Err(Error::Format(format!("column has {count} entries but only {n} rows")));
        }
        let mut support = Vec::with_capacity(count);
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            support.push(get_u32(r)?);
            values.push(get_c64(r)?);
        }
        cols.push(SparseColumn::new(n, support, values).map_err(|e| Error::Format(e.to_string()))?);
    }
    expect_eof(r)?;
    CoefMatrix::from_columns(n, cols)
}

pub fn write_kspace(w: &mut impl Write, height: usize, width: usize, z: &[C64]) -> Result<()> {
    w.write_all(KSP_MAGIC)?;
    put_u32(w, height)?;
    put_u32(w, width)?;
    put_u32(w, z.len())?;
    for &v in z {
        put_c64(w, v)?;
    }
    Ok(())
}

/// Returns `(height, width, samples)`.
pub fn read_kspace(r: &mut impl Read) -> Result<(usize, usize, Vec<C64>)> {
    expect_magic(r, KSP_MAGIC)?;
    let h = get_u32(r)?;
    let w = get_u32(r)?;
    let count = get_u32(r)?;
    if count > h * w {
        return Err(Error::Format(format!("{count} samples exceed a {h}x{w} grid")));
    }
    let z = (0..count).map(|_| get_c64(r)).collect::<Result<Vec<_>>>()?;
    expect_eof(r)?;
    Ok((h, w, z))
}

pub fn write_mask(w: &mut impl Write, mask: &SamplingMask) -> Result<()> {
    writeln!(w, "{MASK_HEADER}")?;
    writeln!(w, "{} {}", mask.height(), mask.width())?;
    for row in mask.kept().chunks(mask.width()) {
        let line: String = row.iter().map(|&k| if k { '1' } else { '0' }).collect();
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_mask(r: &mut impl Read) -> Result<SamplingMask> {
    let mut text = String::new();
    r.read_to_string(&mut text)
        .map_err(|e| Error::Format(format!("mask is not text: {e}")))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MASK_HEADER) {
        return Err(Error::Format(format!("expected '{MASK_HEADER}' header")));
    }
    let dims: Vec<usize> = lines
        .next()
        .ok_or_else(|| Error::Format("missing mask dimensions".into()))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Format(format!("bad mask dimension '{t}'"))))
        .collect::<Result<_>>()?;
    let [h, w] = dims[..] else {
        return Err(Error::Format("mask dimensions need two numbers".into()));
    };
    let mut kept = Vec::with_capacity(h * w);
    for (r, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let line = line.trim();
        if r >= h || line.len() != w {
            return Err(Error::Format(format!("mask row {r} does not match {h}x{w}")));
        }
        for ch in line.chars() {
            kept.push(match ch {
                '0' => false,
                '1' => true,
                _ => return Err(Error::Format(format!("unexpected '{ch}' in mask"))),
            });
        }
    }
    if kept.len() != h * w {
        return Err(Error::Format(format!("mask has {} of {h} rows", kept.len() / w.max(1))));
    }
    let mut m = SamplingMask::from_kept(h, w, kept)?;
    m.scheme = MaskScheme::Custom;
    Ok(m)
}

fn pgm_tokens<'a>(bytes: &'a [u8], pos: &mut usize, count: usize) -> Result<Vec<&'a str>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        out.push(std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::Format("bad PGM token".into()))?);
    }
    Ok(out)
}

/// Reads a binary (`P5`) or ASCII (`P2`) PGM. Pixel values are returned as
/// real numbers on the file's own scale (0..=maxval).
pub fn read_pgm(r: &mut impl Read) -> Result<ComplexImage> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0;
    let head = pgm_tokens(&bytes, &mut pos, 4)?;
    let parse = |t: &str| t.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM number '{t}'")));
    let (w, h, maxval) = (parse(head[1])?, parse(head[2])?, parse(head[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    let values: Vec<f64> = match head[0] {
        "P5" => {
            pos += 1;
            let bpp = if maxval < 256 { 1 } else { 2 };
            let body = bytes
                .get(pos..pos + h * w * bpp)
                .ok_or_else(|| Error::Format("truncated PGM raster".into()))?;
            if bpp == 1 {
                body.iter().map(|&b| b as f64).collect()
            } else {
                body.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
            }
        }
        "P2" => pgm_tokens(&bytes, &mut pos, h * w)?
            .into_iter()
            .map(|t| parse(t).map(|v| v as f64))
            .collect::<Result<_>>()?,
        m => return Err(Error::Format(format!("unsupported PGM magic '{m}'"))),
    };
    ComplexImage::from_vec(h, w, values.into_iter().map(|v| C64::new(v, 0.0)).collect())
}

/// Writes `|img|` as an 8-bit binary PGM, mapping `peak` to 255 and clipping above it.
pub fn write_pgm(w: &mut impl Write, img: &ComplexImage, peak: f64) -> Result<()> {
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter(format!("PGM peak must be positive, got {peak}")));
    }
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
    let raster: Vec<u8> = img
        .as_slice()
        .iter()
        .map(|z| (255.0 * z.norm() / peak).round().clamp(0.0, 255.0) as u8)
        .collect();
    w.write_all(&raster)?;
    Ok(())
}

macro_rules! path_io {
    ($save:ident, $load:ident, $write:ident, $read:ident, $t:ty) => {
        pub fn $save(path: impl AsRef<Path>, v: &$t) -> Result<()> {
            let mut f = create(path.as_ref())?;
            $write(&mut f, v)?;
            f.flush()?;
            Ok(())
        }

        pub fn $load(path: impl AsRef<Path>) -> Result<$t> {
            $read(&mut open(path.as_ref())?)
        }
    };
}

path_io!(save_image, load_image, write_image, read_image, ComplexImage);
path_io!(save_dictionary, load_dictionary, write_dictionary, read_dictionary, Dictionary);
path_io!(save_coefs, load_coefs, write_coefs, read_coefs, CoefMatrix);
path_io!(save_mask, load_mask, write_mask, read_mask, SamplingMask);

pub fn save_kspace(path: impl AsRef<Path>, height: usize, width: usize, z: &[C64]) -> Result<()> {
    let mut f = create(path.as_ref())?;
    write_kspace(&mut f, height, width, z)?;
    f.flush()?;
    Ok(())
}

pub fn load_kspace(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<C64>)> {
    read_kspace(&mut open(path.as_ref())?)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<ComplexImage> {
    read_pgm(&mut open(path.as_ref())?)
}

pub fn save_pgm(path: impl AsRef<Path>, img: &ComplexImage, peak: f64) -> Result<()> {
    let mut f = create(path.as_ref())?;
    write_pgm(&mut f, img, peak)?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::dct_plus_random;
    use crate::sensing::make_mask;

    #[test]
    fn image_round_trip_is_exact() {
        let img = ComplexImage::from_fn(3, 5, |r, c| C64::new(r as f64 / 7.0, -(c as f64).sqrt()));
        let mut buf = Vec::new();
        write_image(&mut buf, &img).unwrap();
        assert_eq!(buf.len(), 16 + 15 * 16);
        assert_eq!(read_image(&mut buf.as_slice()).unwrap(), img);
        buf.push(0);
        assert!(read_image(&mut buf.as_slice()).is_err());
        assert!(read_image(&mut &b"SOUPDIC1"[..]).is_err());
    }

    #[test]
    fn dictionary_and_coef_round_trip() {
        let d = dct_plus_random(4, 7, 3).unwrap();
        let mut buf = Vec::new();
        write_dictionary(&mut buf, &d).unwrap();
        assert_eq!(read_dictionary(&mut buf.as_slice()).unwrap(), d);

        let mut c = CoefMatrix::zeros(5, 3);
        c.set_col(2, SparseColumn::new(5, vec![1, 4], vec![C64::new(0.1, 0.2), C64::new(-3.0, 0.0)]).unwrap())
            .unwrap();
        let mut buf = Vec::new();
        write_coefs(&mut buf, &c).unwrap();
        assert_eq!(read_coefs(&mut buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn mask_and_kspace_round_trip() {
        let m = make_mask(6, 8, MaskScheme::Random2d, 2.0, 4).unwrap();
        let mut buf = Vec::new();
        write_mask(&mut buf, &m).unwrap();
        let back = read_mask(&mut buf.as_slice()).unwrap();
        assert_eq!(back.kept(), m.kept());
        assert!(read_mask(&mut &b"SOUPMASK v1\n2 2\n01\n0x\n"[..]).is_err());
        assert!(read_mask(&mut &b"SOUPMASK v1\n2 2\n01\n"[..]).is_err());

        let z = vec![C64::new(1.5, -2.0), C64::new(0.0, 1e-300)];
        let mut buf = Vec::new();
        write_kspace(&mut buf, 2, 2, &z).unwrap();
        assert_eq!(read_kspace(&mut buf.as_slice()).unwrap(), (2, 2, z));
    }

    #[test]
    fn pgm_round_trip_and_ascii() {
        let img = ComplexImage::from_fn(2, 3, |r, c| C64::new((r * 3 + c) as f64 * 50.0, 0.0));
        let mut buf = Vec::new();
        write_pgm(&mut buf, &img, 255.0).unwrap();
        assert_eq!(read_pgm(&mut buf.as_slice()).unwrap(), img);
        let ascii = b"P2\n# comment\n2 1\n15\n3 15\n";
        let a = read_pgm(&mut &ascii[..]).unwrap();
        assert_eq!(a.as_slice(), &[C64::new(3.0, 0.0), C64::new(15.0, 0.0)]);
        assert!(read_pgm(&mut &b"P6\n1 1\n255\n\0\0\0"[..]).is_err());
        assert!(read_pgm(&mut &b"P5\n2 2\n255\n\0"[..]).is_err());
    }
}
