//! Minimal portable graymap (PGM) support: P2 and P5 with 8-bit samples.
//! Just enough to feed images to the edge-detection kernel without pulling
//! in an image stack.

use std::path::Path;

use crate::error::{Error, Result};

pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major samples as f64 in 0..=maxval.
    pub pixels: Vec<f64>,
}

pub fn load_pgm(path: &Path) -> Result<GrayImage> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::InputData(format!("{}: {e}", path.display())))?;
    parse_pgm(&bytes).map_err(|e| match e {
        Error::InputData(msg) => Error::InputData(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cursor = 0usize;
    let magic = read_token(bytes, &mut cursor).ok_or_else(|| bad("missing magic number"))?;
    let binary = match magic.as_str() {
        "P2" => false,
        "P5" => true,
        other => return Err(bad(&format!("unsupported magic '{other}', want P2 or P5"))),
    };
    let width = read_number(bytes, &mut cursor).ok_or_else(|| bad("missing width"))?;
    let height = read_number(bytes, &mut cursor).ok_or_else(|| bad("missing height"))?;
    let maxval = read_number(bytes, &mut cursor).ok_or_else(|| bad("missing maxval"))?;
    if width == 0 || height == 0 {
        return Err(bad("zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad(&format!("maxval {maxval} unsupported, want 1..=255")));
    }
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    if binary {
        // One whitespace byte separates the header from raster data.
        let data = &bytes[cursor..];
        if data.len() < count {
            return Err(bad(&format!(
                "raster has {} bytes, want {count}",
                data.len()
            )));
        }
        pixels.extend(data[..count].iter().map(|&b| f64::from(b)));
    } else {
        for _ in 0..count {
            let v = read_number(bytes, &mut cursor).ok_or_else(|| bad("raster ended early"))?;
            if v > maxval {
                return Err(bad(&format!("sample {v} above maxval {maxval}")));
            }
            pixels.push(v as f64);
        }
    }
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

pub fn write_p2(image: &GrayImage, path: &Path) -> Result<()> {
    let mut out = format!("P2\n{} {}\n255\n", image.width, image.height);
    for row in image.pixels.chunks(image.width) {
        let line: Vec<String> = row
            .iter()
            .map(|&v| format!("{}", v.round().clamp(0.0, 255.0) as u32))
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn bad(msg: &str) -> Error {
    Error::InputData(format!("pgm: {msg}"))
}

/// Reads the next whitespace-delimited token, skipping `#` comments. Leaves
/// the cursor one byte past the token.
fn read_token(bytes: &[u8], cursor: &mut usize) -> Option<String> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    if *cursor > start {
        let token = String::from_utf8_lossy(&bytes[start..*cursor]).into_owned();
        if *cursor < bytes.len() {
            *cursor += 1;
        }
        Some(token)
    } else {
        None
    }
}

fn read_number(bytes: &[u8], cursor: &mut usize) -> Option<usize> {
    read_token(bytes, cursor)?.parse().ok()
}
