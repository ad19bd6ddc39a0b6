use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{degrade, DegradationSpec, JpegQuality};
use crate::error::{Error, Result};
use crate::imaging::{load_image, save_image};

pub const MANIFEST_FILE: &str = "manifest.csv";

/// One `hr_path,lr_path,scale,sigma,jpeg_q,seed` record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub hr_path: PathBuf,
    pub lr_path: PathBuf,
    pub scale: usize,
    pub sigma: f64,
    pub jpeg_q: String,
    pub seed: u64,
}

impl ManifestRow {
    pub fn spec(&self) -> Result<DegradationSpec> {
        let spec = DegradationSpec {
            scale: self.scale,
            noise_sigma: self.sigma,
            jpeg_quality: self.jpeg_q.parse::<JpegQuality>()?,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Sorted `*.png` files in `dir`, skipping previously written `*_lr.png` outputs.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    out.sort();
    Ok(out)
}

/// Degrades every HR PNG in `hr_dir`, writing `{stem}_lr.png` into `out_dir`
/// plus `out_dir/manifest.csv`. Image `i` (sorted by name) uses seed `spec.seed + i`.
pub fn degrade_dir(hr_dir: &Path, out_dir: &Path, spec: &DegradationSpec) -> Result<Vec<ManifestRow>> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let inputs: Vec<PathBuf> = list_pngs(hr_dir)?
        .into_iter()
        .filter(|p| !p.file_stem().and_then(|s| s.to_str()).is_some_and(|s| s.ends_with("_lr")))
        .collect();
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rows = Vec::with_capacity(inputs.len());
    for (i, hr_path) in inputs.iter().enumerate() {
        let per_image = DegradationSpec { seed: spec.seed.wrapping_add(i as u64), ..*spec };
        let hr = load_image(hr_path)?;
        let lr = degrade(&hr, &per_image)?;
        let stem = hr_path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        let lr_path = out_dir.join(format!("{stem}_lr.png"));
        save_image(&lr, &lr_path)?;
        rows.push(ManifestRow {
            hr_path: relative_to(hr_path, out_dir),
            lr_path: relative_to(&lr_path, out_dir),
            scale: per_image.scale,
            sigma: per_image.noise_sigma,
            jpeg_q: per_image.jpeg_quality.to_string(),
            seed: per_image.seed,
        });
    }
    write_manifest(&out_dir.join(MANIFEST_FILE), &rows)?;
    Ok(rows)
}

fn relative_to(path: &Path, base: &Path) -> PathBuf {
    let abs = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    let (path, base) = (abs(path), abs(base));
    path.strip_prefix(&base).map(Path::to_path_buf).unwrap_or(path)
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a manifest; relative paths are resolved against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    for row in csv::Reader::from_path(path)?.deserialize() {
        let mut row: ManifestRow = row?;
        if row.hr_path.is_relative() {
            row.hr_path = base.join(&row.hr_path);
        }
        if row.lr_path.is_relative() {
            row.lr_path = base.join(&row.lr_path);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Image;

    #[test]
    fn batch_mode_writes_images_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b", "a"] {
            let img = Image::from_fn(3, 16, 16, |c, y, x| ((c + y + x) % 7) as f32 / 7.0).unwrap();
            save_image(&img, dir.path().join(format!("{name}.png"))).unwrap();
        }
        let spec = DegradationSpec { scale: 4, noise_sigma: 8.0, jpeg_quality: JpegQuality::Off, seed: 10 };
        let rows = degrade_dir(dir.path(), dir.path(), &spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].lr_path, PathBuf::from("a_lr.png"));
        assert_eq!(rows[1].seed, 11);

        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(text.starts_with("hr_path,lr_path,scale,sigma,jpeg_q,seed\n"));
        assert!(text.contains("a.png,a_lr.png,4,8.0,off,10"));

        let back = read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(load_image(&back[0].lr_path).unwrap().shape(), (3, 4, 4));
        assert_eq!(back[0].spec().unwrap().seed, 10);

        // a second run ignores the *_lr.png outputs
        assert_eq!(degrade_dir(dir.path(), dir.path(), &spec).unwrap().len(), 2);
    }
}
