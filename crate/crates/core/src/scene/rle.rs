//! COCO run-length encoded masks.
//!
//! Counts alternate background/foreground runs over the column-major
//! flattening of an `h`x`w` grid, starting with background. The compressed
//! text form packs each count (delta-coded against the count two back, from
//! the fourth onward) into 5-bit groups offset by ASCII 48.

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RleCounts {
    Compressed(String),
    Raw(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    /// `[height, width]`
    pub size: [u32; 2],
    pub counts: RleCounts,
}

impl Rle {
    pub fn height(&self) -> u32 {
        self.size[0]
    }

    pub fn width(&self) -> u32 {
        self.size[1]
    }

    pub fn run_lengths(&self) -> Result<Vec<u32>> {
        match &self.counts {
            RleCounts::Raw(v) => Ok(v.clone()),
            RleCounts::Compressed(s) => decode_counts(s),
        }
    }

    pub fn decode(&self) -> Result<Mask> {
        let (h, w) = (self.height() as usize, self.width() as usize);
        let runs = self.run_lengths()?;
        let total: u64 = runs.iter().map(|&c| c as u64).sum();
        if total != (h * w) as u64 {
            return Err(ForgeError::Mask(format!(
                "run lengths sum to {total}, grid has {} pixels",
                h * w
            )));
        }
        let mut bits = vec![false; h * w];
        let mut pos = 0usize;
        for (i, &run) in runs.iter().enumerate() {
            let run = run as usize;
            if i % 2 == 1 {
                for k in pos..pos + run {
                    // column-major index k -> (row, col)
                    let (col, row) = (k / h, k % h);
                    bits[row * w + col] = true;
                }
            }
            pos += run;
        }
        Ok(Mask {
            width: self.width(),
            height: self.height(),
            bits,
        })
    }

    /// Compressed-string RLE of `mask`.
    pub fn encode(mask: &Mask) -> Rle {
        let (h, w) = (mask.height as usize, mask.width as usize);
        let mut runs = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for col in 0..w {
            for row in 0..h {
                let bit = mask.bits[row * w + col];
                if bit != current {
                    runs.push(run);
                    run = 0;
                    current = bit;
                }
                run += 1;
            }
        }
        runs.push(run);
        Rle {
            size: [mask.height, mask.width],
            counts: RleCounts::Compressed(encode_counts(&runs)),
        }
    }
}

pub fn decode_counts(s: &str) -> Result<Vec<u32>> {
    let bytes = s.as_bytes();
    let mut counts: Vec<i64> = Vec::new();
    let mut p = 0;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0;
        let mut more = true;
        while more {
            let Some(&b) = bytes.get(p) else {
                return Err(ForgeError::Mask("truncated RLE counts string".into()));
            };
            if !(48..48 + 64).contains(&b) {
                return Err(ForgeError::Mask(format!("invalid RLE character {:?}", b as char)));
            }
            if k >= 12 {
                return Err(ForgeError::Mask("RLE count overflows".into()));
            }
            let c = (b - 48) as i64;
            x |= (c & 0x1f) << (5 * k);
            more = c & 0x20 != 0;
            p += 1;
            k += 1;
            if !more && (c & 0x10) != 0 {
                x |= -1i64 << (5 * k);
            }
        }
        if counts.len() > 2 {
            x += counts[counts.len() - 2];
        }
        counts.push(x);
    }
    counts
        .into_iter()
        .map(|c| {
            u32::try_from(c).map_err(|_| ForgeError::Mask(format!("negative or oversized run length {c}")))
        })
        .collect()
}

pub fn encode_counts(counts: &[u32]) -> String {
    let mut out = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= counts[i - 2] as i64;
        }
        let mut more = true;
        while more {
            let mut c = x & 0x1f;
            x >>= 5;
            more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                c |= 0x20;
            }
            out.push((c as u8 + 48) as char);
        }
    }
    out
}

/// Row-major binary mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn get(&self, u: u32, v: u32) -> bool {
        self.bits[v as usize * self.width as usize + u as usize]
    }

    pub fn set(&mut self, u: u32, v: u32, on: bool) {
        let w = self.width as usize;
        self.bits[v as usize * w + u as usize] = on;
    }

    /// Set pixels as `(u, v)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for (u, v) in self.pixels() {
            su += u as f64;
            sv += v as f64;
            n += 1;
        }
        (n > 0).then(|| (su / n as f64, sv / n as f64))
    }

    /// Smallest corner-form box enclosing every set pixel (pixel `u` spans `[u, u+1)`).
    pub fn tight_rect(&self) -> Option<super::Rect> {
        let mut it = self.pixels();
        let (u0, v0) = it.next()?;
        let (mut x1, mut y1, mut x2, mut y2) = (u0, v0, u0, v0);
        for (u, v) in it {
            x1 = x1.min(u);
            y1 = y1.min(v);
            x2 = x2.max(u);
            y2 = y2.max(v);
        }
        Some(super::Rect::new(
            x1 as f64,
            y1 as f64,
            (x2 + 1) as f64,
            (y2 + 1) as f64,
        ))
    }
}
