//! Binary PGM (P5). 16-bit samples are big-endian.

use std::fs;
use std::path::Path;

use crate::error::{io, Error, Result};
use crate::image::Image;

pub fn write_pgm8(path: &Path, img: &Image<u8>) -> Result<()> {
    let mut out = header(img.width(), img.height(), 255);
    out.extend_from_slice(img.data());
    fs::write(path, out).map_err(io(path))
}

pub fn write_pgm16(path: &Path, img: &Image<u16>) -> Result<()> {
    let mut out = header(img.width(), img.height(), 65535);
    out.reserve(img.data().len() * 2);
    for v in img.data() {
        out.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, out).map_err(io(path))
}

pub fn read_pgm8(path: &Path) -> Result<Image<u8>> {
    let bytes = fs::read(path).map_err(io(path))?;
    let (w, h, maxval, body) = parse_header(path, &bytes)?;
    if maxval > 255 {
        return Err(fmt_err(path, format!("expected an 8-bit PGM, maxval is {maxval}")));
    }
    expect_len(path, body, w * h)?;
    Image::from_vec(w, h, body[..w * h].to_vec())
}

pub fn read_pgm16(path: &Path) -> Result<Image<u16>> {
    let bytes = fs::read(path).map_err(io(path))?;
    let (w, h, maxval, body) = parse_header(path, &bytes)?;
    if maxval < 256 {
        return Err(fmt_err(path, format!("expected a 16-bit PGM, maxval is {maxval}")));
    }
    expect_len(path, body, 2 * w * h)?;
    let data = body[..2 * w * h].chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect();
    Image::from_vec(w, h, data)
}

fn header(w: usize, h: usize, maxval: u32) -> Vec<u8> {
    format!("P5\n{w} {h}\n{maxval}\n").into_bytes()
}

fn fmt_err(path: &Path, message: String) -> Error {
    Error::Format { path: path.to_path_buf(), message }
}

fn expect_len(path: &Path, body: &[u8], n: usize) -> Result<()> {
    if body.len() < n {
        return Err(fmt_err(path, format!("truncated pixel data: {} of {n} bytes", body.len())));
    }
    Ok(())
}

/// Returns width, height, maxval and the pixel bytes.
fn parse_header<'a>(path: &Path, bytes: &'a [u8]) -> Result<(usize, usize, u32, &'a [u8])> {
    if !bytes.starts_with(b"P5") {
        return Err(fmt_err(path, "missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap_or("");
        *field = text.parse().map_err(|_| fmt_err(path, "malformed header".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(fmt_err(path, "malformed header".into()));
    }
    let [w, h, maxval] = fields;
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(fmt_err(path, format!("unsupported dimensions {w}x{h} maxval {maxval}")));
    }
    Ok((w as usize, h as usize, maxval as u32, &bytes[pos + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_both_depths() {
        let dir = tempfile::tempdir().unwrap();
        let lo = Image::from_vec(3, 2, vec![0u8, 1, 2, 253, 254, 255]).unwrap();
        let p8 = dir.path().join("a.pgm");
        write_pgm8(&p8, &lo).unwrap();
        assert_eq!(read_pgm8(&p8).unwrap(), lo);
        assert!(read_pgm16(&p8).is_err());

        let hi = Image::from_vec(2, 2, vec![0u16, 256, 65535, 12345]).unwrap();
        let p16 = dir.path().join("b.pgm");
        write_pgm16(&p16, &hi).unwrap();
        assert_eq!(read_pgm16(&p16).unwrap(), hi);
        assert!(read_pgm8(&p16).is_err());
    }

    #[test]
    fn header_comments_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.pgm");
        fs::write(&p, b"P5\n# made by hand\n2 1\n255\n\x07\x08").unwrap();
        assert_eq!(read_pgm8(&p).unwrap().data(), &[7, 8]);
        fs::write(&p, b"P5\n2 2\n255\n\x07").unwrap();
        assert!(matches!(read_pgm8(&p), Err(Error::Format { .. })));
        fs::write(&p, b"P2\n1 1\n255\n1").unwrap();
        assert!(matches!(read_pgm8(&p), Err(Error::Format { .. })));
    }
}
