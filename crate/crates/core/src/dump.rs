//! Raw little-endian dumps of fields and images.
//!
//! ```text
//! magic[4] | u32 width | u32 height | f64 pitch_x | f64 pitch_y | payload
//! ```
//!
//! `CFLD` payloads are `(f64 re, f64 im)` pairs, `RIMG` payloads one `f64`
//! per pixel, both row-major.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, RealImage};

pub const FIELD_MAGIC: [u8; 4] = *b"CFLD";
pub const IMAGE_MAGIC: [u8; 4] = *b"RIMG";
pub const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

fn write_header<W: Write>(w: &mut W, magic: [u8; 4], grid: Grid) -> io::Result<()> {
    w.write_all(&magic)?;
    w.write_all(&(grid.width as u32).to_le_bytes())?;
    w.write_all(&(grid.height as u32).to_le_bytes())?;
    w.write_all(&grid.pitch_x.to_le_bytes())?;
    w.write_all(&grid.pitch_y.to_le_bytes())
}

pub fn write_field<W: Write>(mut w: W, field: &ComplexField) -> Result<()> {
    write_header(&mut w, FIELD_MAGIC, field.grid())?;
    for c in field.samples() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_image<W: Write>(mut w: W, image: &RealImage) -> Result<()> {
    write_header(&mut w, IMAGE_MAGIC, image.grid())?;
    for v in image.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Fills `buf` completely, or reports how many bytes were available.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    let got = read_full(r, buf)?;
    if got < buf.len() {
        return Err(Error::Truncated(format!(
            "{what}: expected {} bytes, got {got}",
            buf.len()
        )));
    }
    Ok(())
}

fn parse_header(bytes: &[u8; HEADER_LEN]) -> Result<([u8; 4], Grid)> {
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != IMAGE_MAGIC && magic != FIELD_MAGIC {
        return Err(Error::UnsupportedFormat(format!(
            "unknown dump magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let pitch_x = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let pitch_y = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    Ok((magic, Grid::new(width, height, pitch_x, pitch_y)?))
}

fn read_f64s<R: Read>(r: &mut R, count: usize, what: &str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    read_exact_or_truncated(r, &mut bytes, what)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect())
}

/// Reads one record of either kind.
pub enum Record {
    Field(ComplexField),
    Image(RealImage),
}

/// Reads the next record; `Ok(None)` on a clean end of stream.
pub fn read_record<R: Read>(mut r: R) -> Result<Option<Record>> {
    let mut header = [0u8; HEADER_LEN];
    let got = read_full(&mut r, &mut header)?;
    if got == 0 {
        return Ok(None);
    }
    if got < HEADER_LEN {
        return Err(Error::Truncated(format!(
            "header: expected {HEADER_LEN} bytes, got {got}"
        )));
    }
    let (magic, grid) = parse_header(&header)?;
    match magic {
        IMAGE_MAGIC => {
            let values = read_f64s(&mut r, grid.len(), "RIMG payload")?;
            Ok(Some(Record::Image(RealImage::new(grid, values)?)))
        }
        FIELD_MAGIC => {
            let raw = read_f64s(&mut r, grid.len() * 2, "CFLD payload")?;
            let samples = raw
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect();
            Ok(Some(Record::Field(ComplexField::new(grid, samples)?)))
        }
        _ => unreachable!("magic checked in parse_header"),
    }
}

pub fn read_image<R: Read>(r: R) -> Result<RealImage> {
    match read_record(r)? {
        Some(Record::Image(img)) => Ok(img),
        Some(Record::Field(_)) => Err(Error::UnsupportedFormat("expected RIMG, found CFLD".into())),
        None => Err(Error::Truncated("empty RIMG stream".into())),
    }
}

pub fn read_field<R: Read>(r: R) -> Result<ComplexField> {
    match read_record(r)? {
        Some(Record::Field(f)) => Ok(f),
        Some(Record::Image(_)) => Err(Error::UnsupportedFormat("expected CFLD, found RIMG".into())),
        None => Err(Error::Truncated("empty CFLD stream".into())),
    }
}

pub fn save_image(path: impl AsRef<Path>, image: &RealImage) -> Result<()> {
    write_image(BufWriter::new(File::create(path)?), image)
}

pub fn save_field(path: impl AsRef<Path>, field: &ComplexField) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), field)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RealImage> {
    read_image(BufReader::new(File::open(path)?))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ComplexField> {
    read_field(BufReader::new(File::open(path)?))
}
