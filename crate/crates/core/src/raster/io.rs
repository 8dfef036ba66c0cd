//! Uncompressed binary patch files plus PPM/PGM export for eyeballing.
//!
//! Layout: magic `RPF1`, little-endian u32 width and height, u8 channels,
//! u8 provenance flag, then (when flagged) u32 origin_x, u32 origin_y,
//! u16 id length and the id bytes, followed by width*height*channels
//! little-endian f32 samples.

use std::io::{Read, Write};
use std::path::Path;

use super::patch::{Provenance, RasterPatch};
use super::RasterError;

const MAGIC: &[u8; 4] = b"RPF1";

pub fn write_patch(patch: &RasterPatch, path: &Path) -> Result<(), RasterError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&patch.width().to_le_bytes())?;
    out.write_all(&patch.height().to_le_bytes())?;
    out.write_all(&[patch.channels()])?;
    match &patch.provenance {
        None => out.write_all(&[0u8])?,
        Some(p) => {
            out.write_all(&[1u8])?;
            out.write_all(&p.origin_x.to_le_bytes())?;
            out.write_all(&p.origin_y.to_le_bytes())?;
            let id = p.base_image_id.as_bytes();
            let len = u16::try_from(id.len())
                .map_err(|_| RasterError::Format("base image id too long".into()))?;
            out.write_all(&len.to_le_bytes())?;
            out.write_all(id)?;
        }
    }
    for v in patch.pixels() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_patch(path: &Path) -> Result<RasterPatch, RasterError> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(RasterError::Format("bad magic".into()));
    }
    let width = read_u32(&mut input)?;
    let height = read_u32(&mut input)?;
    let mut small = [0u8; 2];
    input.read_exact(&mut small)?;
    let channels = small[0];
    let provenance = if small[1] == 1 {
        let origin_x = read_u32(&mut input)?;
        let origin_y = read_u32(&mut input)?;
        let mut len = [0u8; 2];
        input.read_exact(&mut len)?;
        let mut id = vec![0u8; u16::from_le_bytes(len) as usize];
        input.read_exact(&mut id)?;
        Some(Provenance {
            base_image_id: String::from_utf8(id)
                .map_err(|_| RasterError::Format("non-utf8 base image id".into()))?,
            origin_x,
            origin_y,
        })
    } else if small[1] == 0 {
        None
    } else {
        return Err(RasterError::Format("bad provenance flag".into()));
    };
    let count = width as usize * height as usize * channels as usize;
    let mut body = vec![0u8; count * 4];
    input.read_exact(&mut body)?;
    let pixels = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let mut patch = RasterPatch::from_pixels(width, height, channels, pixels)?;
    patch.provenance = provenance;
    Ok(patch)
}

fn read_u32(input: &mut impl Read) -> Result<u32, RasterError> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn to_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary PPM (P6) for three-channel patches.
pub fn write_ppm(patch: &RasterPatch, path: &Path) -> Result<(), RasterError> {
    if patch.channels() != 3 {
        return Err(RasterError::InvalidChannels(patch.channels()));
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "P6\n{} {}\n255\n", patch.width(), patch.height())?;
    let bytes: Vec<u8> = patch.pixels().iter().map(|v| to_byte(*v)).collect();
    out.write_all(&bytes)?;
    Ok(())
}

/// Binary PGM (P5) for single-channel patches.
pub fn write_pgm(patch: &RasterPatch, path: &Path) -> Result<(), RasterError> {
    if patch.channels() != 1 {
        return Err(RasterError::InvalidChannels(patch.channels()));
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", patch.width(), patch.height())?;
    let bytes: Vec<u8> = patch.pixels().iter().map(|v| to_byte(*v)).collect();
    out.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_file_round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let mut patch = RasterPatch::filled(5, 4, 3, 0.25).unwrap();
        patch.set(2, 1, 1, 0.75);
        patch.provenance = Some(Provenance {
            base_image_id: "abc123".into(),
            origin_x: 7,
            origin_y: 9,
        });
        let path = dir.path().join("p.rpf");
        write_patch(&patch, &path).unwrap();
        let back = read_patch(&path).unwrap();
        assert_eq!(back, patch);
    }

    #[test]
    fn ppm_requires_three_channels() {
        let dir = tempfile::tempdir().unwrap();
        let gray = RasterPatch::filled(2, 2, 1, 0.5).unwrap();
        assert!(write_ppm(&gray, &dir.path().join("x.ppm")).is_err());
        assert!(write_pgm(&gray, &dir.path().join("x.pgm")).is_ok());
    }
}
