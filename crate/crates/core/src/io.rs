//! Image files and tracking-sequence directories.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::signal::ImagePlane;

/// Ground-truth file names probed in a sequence directory, in order.
pub const GROUND_TRUTH_FILES: [&str; 2] = ["groundtruth_rect.txt", "groundtruth.txt"];

const IMAGE_EXTENSIONS: [&str; 6] = ["png", "pgm", "pnm", "jpg", "jpeg", "bmp"];

/// Loads an 8-bit image as grayscale intensities in `[0, 1]`.
pub fn load_image(path: &Path) -> Result<ImagePlane> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_luma8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p[0] as f64 / 255.0).collect();
    ImagePlane::new(w as usize, h as usize, data)
}

/// Image `(width, height)` without decoding pixels.
pub fn image_dimensions(path: &Path) -> Result<(usize, usize)> {
    let (w, h) = image::image_dimensions(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((w as usize, h as usize))
}

/// Quantizes `[0, 1]` intensities to 8 bits.
pub fn to_gray8(plane: &ImagePlane) -> GrayImage {
    GrayImage::from_fn(plane.width() as u32, plane.height() as u32, |c, r| {
        let v = plane.get(r as usize, c as usize).clamp(0.0, 1.0);
        Luma([(v * 255.0).round() as u8])
    })
}

/// Writes an 8-bit grayscale image; the format follows the file extension.
pub fn save_image(path: &Path, plane: &ImagePlane) -> Result<()> {
    to_gray8(plane).save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `x,y,w,h` lines (comma, tab or space separated, 1-based corner).
pub fn parse_ground_truth(text: &str, path: &Path) -> Result<Vec<BBox>> {
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c == '\t' || c == ' ')
            .filter(|s| !s.is_empty())
            .collect();
        let bad = |message: String| Error::Data {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", fields.len())));
        }
        let mut v = [0.0f64; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .map_err(|_| bad(format!("not a number: {f:?}")))?;
        }
        let b = BBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3]);
        if !b.is_valid() {
            return Err(bad("box must have positive width and height".into()));
        }
        boxes.push(b);
    }
    Ok(boxes)
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<BBox>> {
    let text = fs::read_to_string(path)?;
    parse_ground_truth(&text, path)
}

/// Formats a box as a 1-based `x,y,w,h` line.
pub fn format_box(b: &BBox) -> String {
    format!("{},{},{},{}", b.x + 1.0, b.y + 1.0, b.w, b.h)
}

pub fn write_ground_truth(path: &Path, boxes: &[BBox]) -> Result<()> {
    let mut text = String::new();
    for b in boxes {
        text.push_str(&format_box(b));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn numeric_key(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem.chars().filter(|c| c.is_ascii_digit()).collect();
    digits.parse().ok()
}

/// Image files of a sequence directory (or its `img/` subdirectory) in numeric order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let img_dir = dir.join("img");
    let root = if img_dir.is_dir() { img_dir } else { dir.to_path_buf() };
    let mut frames: Vec<PathBuf> = fs::read_dir(&root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                .unwrap_or(false)
        })
        .collect();
    frames.sort_by(|a, b| numeric_key(a).cmp(&numeric_key(b)).then_with(|| a.cmp(b)));
    Ok(frames)
}

/// Path of the sequence's ground-truth file, if present.
pub fn find_ground_truth(dir: &Path) -> Option<PathBuf> {
    GROUND_TRUTH_FILES
        .iter()
        .map(|f| dir.join(f))
        .find(|p| p.is_file())
}

/// Frames and ground truth of a benchmark-style sequence directory.
#[derive(Debug, Clone)]
pub struct SequenceDir {
    pub frames: Vec<ImagePlane>,
    pub ground_truth: Vec<BBox>,
}

pub fn load_sequence(dir: &Path) -> Result<SequenceDir> {
    let paths = list_frames(dir)?;
    if paths.is_empty() {
        return Err(Error::Data {
            path: dir.to_path_buf(),
            line: 0,
            message: "no image frames found".into(),
        });
    }
    let gt_path = find_ground_truth(dir).ok_or_else(|| Error::Data {
        path: dir.to_path_buf(),
        line: 0,
        message: "no groundtruth_rect.txt or groundtruth.txt".into(),
    })?;
    let ground_truth = read_ground_truth(&gt_path)?;
    if ground_truth.is_empty() {
        return Err(Error::Data {
            path: gt_path,
            line: 0,
            message: "ground truth is empty".into(),
        });
    }
    let frames = paths
        .iter()
        .map(|p| load_image(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceDir {
        frames,
        ground_truth,
    })
}

/// Writes `img/0001.png …` and `groundtruth_rect.txt`.
pub fn save_sequence(dir: &Path, frames: &[ImagePlane], ground_truth: &[BBox]) -> Result<()> {
    let img = dir.join("img");
    fs::create_dir_all(&img)?;
    for (i, f) in frames.iter().enumerate() {
        save_image(&img.join(format!("{:04}.png", i + 1)), f)?;
    }
    write_ground_truth(&dir.join(GROUND_TRUTH_FILES[0]), ground_truth)
}
