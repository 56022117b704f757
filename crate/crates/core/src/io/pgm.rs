//! 8-bit binary PGM (P5) ingestion and emission.
//!
//! Frames interchange as grayscale P5 files; pixel value `v` maps to
//! `v / 255.0` with no gamma. Directory loads order frames by natural
//! filename sort, so `f2` precedes `f10` whether or not names are
//! zero-padded.

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::cube::{FrameImage, VideoCube};
use crate::error::{Result, SciError};

/// Parses one binary P5 file into a frame.
pub fn load_pgm(path: &Path) -> Result<FrameImage> {
    let bytes = fs::read(path).map_err(|e| SciError::io(path, e))?;
    parse_pgm(&bytes).map_err(|reason| SciError::format(path, reason))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<FrameImage, String> {
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err("not a binary PGM (magic `P5` missing)".into());
    }
    let mut pos = 2usize;
    let mut fields = [0usize; 3]; // width, height, maxval
    for field in fields.iter_mut() {
        pos = skip_separators(bytes, pos)?;
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err("malformed header: expected integer".into());
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text
            .parse::<usize>()
            .map_err(|_| format!("bad header integer `{}`", text))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format!("degenerate dimensions {}x{}", width, height));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("maxval {} unsupported (8-bit only)", maxval));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("missing separator before payload".into());
    }
    pos += 1;
    let expected = width * height;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(format!(
            "payload truncated: {} bytes, expected {}",
            payload.len(),
            expected
        ));
    }
    let data = Array2::from_shape_fn((height, width), |(r, c)| {
        f32::from(payload[r * width + c]) / 255.0
    });
    FrameImage::new(data).map_err(|e| e.to_string())
}

fn skip_separators(bytes: &[u8], mut pos: usize) -> std::result::Result<usize, String> {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return if pos < bytes.len() {
                Ok(pos)
            } else {
                Err("truncated header".into())
            };
        }
    }
}

/// Writes a frame as binary P5, quantizing with round-to-nearest on the
/// 0..255 scale.
pub fn save_pgm(frame: &FrameImage, path: &Path) -> Result<()> {
    let (h, w) = frame.data.dim();
    let mut out = Vec::with_capacity(h * w + 32);
    write!(out, "P5\n{} {}\n255\n", w, h).expect("in-memory write");
    for v in frame.data.iter() {
        out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    fs::write(path, out).map_err(|e| SciError::io(path, e))
}

/// Loads every file in `dir` matching `pattern` (a `*`/`?` glob over the
/// file name) as one video, frames in natural filename order.
pub fn load_frame_dir(dir: &Path, pattern: &str) -> Result<VideoCube> {
    let entries = fs::read_dir(dir).map_err(|e| SciError::io(dir, e))?;
    let mut names: Vec<(String, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| SciError::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) => n.to_string(),
            None => continue,
        };
        if glob_match(pattern, &name) {
            names.push((name, path));
        }
    }
    if names.is_empty() {
        return Err(SciError::NoInput(format!(
            "no files matching `{}` in {}",
            pattern,
            dir.display()
        )));
    }
    names.sort_by(|a, b| natural_cmp(&a.0, &b.0));

    let mut frames = Vec::with_capacity(names.len());
    let mut dims: Option<(usize, usize)> = None;
    for (_, path) in &names {
        let frame = load_pgm(path)?;
        let d = frame.data.dim();
        match dims {
            None => dims = Some(d),
            Some(expect) if expect != d => {
                return Err(SciError::ShapeMismatch(format!(
                    "{} is {}x{}, expected {}x{}",
                    path.display(),
                    d.0,
                    d.1,
                    expect.0,
                    expect.1
                )));
            }
            _ => {}
        }
        frames.push(frame);
    }
    VideoCube::from_frames(&frames)
}

/// Minimal glob: `*` matches any run, `?` any single char, rest literal.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    // DP over (pattern idx, name idx).
    let mut reachable = vec![vec![false; n.len() + 1]; p.len() + 1];
    reachable[0][0] = true;
    for i in 0..=p.len() {
        for j in 0..=n.len() {
            if !reachable[i][j] {
                continue;
            }
            if i < p.len() {
                match p[i] {
                    '*' => {
                        reachable[i + 1][j] = true;
                        if j < n.len() {
                            reachable[i][j + 1] = true;
                        }
                    }
                    '?' => {
                        if j < n.len() {
                            reachable[i + 1][j + 1] = true;
                        }
                    }
                    c => {
                        if j < n.len() && n[j] == c {
                            reachable[i + 1][j + 1] = true;
                        }
                    }
                }
            }
        }
    }
    reachable[p.len()][n.len()]
}

/// Natural order: digit runs compare numerically, other runs bytewise.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let mut ai = a.chars().peekable();
    let mut bi = b.chars().peekable();
    loop {
        match (ai.peek().copied(), bi.peek().copied()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(ca), Some(cb)) => {
                if ca.is_ascii_digit() && cb.is_ascii_digit() {
                    let na = take_number(&mut ai);
                    let nb = take_number(&mut bi);
                    let ord = na.value.cmp(&nb.value).then(na.digits.cmp(&nb.digits));
                    if ord != Ordering::Equal {
                        return ord;
                    }
                } else {
                    let ord = ca.cmp(&cb);
                    if ord != Ordering::Equal {
                        return ord;
                    }
                    ai.next();
                    bi.next();
                }
            }
        }
    }
}

struct NumRun {
    value: u128,
    digits: usize,
}

fn take_number(it: &mut std::iter::Peekable<std::str::Chars>) -> NumRun {
    let mut value: u128 = 0;
    let mut digits = 0usize;
    while let Some(c) = it.peek().copied() {
        if let Some(d) = c.to_digit(10) {
            value = value.saturating_mul(10).saturating_add(u128::from(d));
            digits += 1;
            it.next();
        } else {
            break;
        }
    }
    NumRun { value, digits }
}
