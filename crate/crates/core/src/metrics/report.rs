use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::degradation::list_pngs;
use crate::error::{Error, Result};
use crate::imaging::{load_image, Image};

/// A learned perceptual distance (for example LPIPS) supplied by the caller.
pub trait PerceptualMetric: Send + Sync {
    fn name(&self) -> &str;
    fn distance(&self, sr: &Image, hr: &Image) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
    pub lpips: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    /// Mean over rows with finite PSNR; `None` when every row is infinite.
    pub mean_psnr: Option<f64>,
    pub finite_psnr_count: usize,
    pub mean_ssim: f64,
    pub mean_lpips: Option<f64>,
    pub perceptual_name: Option<String>,
}

impl MetricReport {
    pub fn from_rows(rows: Vec<MetricRow>, perceptual_name: Option<String>) -> Self {
        let finite: Vec<f64> = rows.iter().map(|r| r.psnr).filter(|p| p.is_finite()).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let ssims: Vec<f64> = rows.iter().map(|r| r.ssim).collect();
        let lpips: Option<Vec<f64>> = rows.iter().map(|r| r.lpips).collect();
        Self {
            mean_psnr: (!finite.is_empty()).then(|| mean(&finite)),
            finite_psnr_count: finite.len(),
            mean_ssim: if rows.is_empty() { f64::NAN } else { mean(&ssims) },
            mean_lpips: lpips.filter(|v| !v.is_empty()).map(|v| mean(&v)),
            perceptual_name,
            rows,
        }
    }

    /// `name,psnr,ssim[,lpips]` rows followed by a `mean` row. Infinite PSNR is
    /// written as `inf`; the mean row's PSNR covers finite rows only.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let with_lpips = self.mean_lpips.is_some();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["name", "psnr", "ssim"];
        if with_lpips {
            header.push("lpips");
        }
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.name.clone(), fmt_psnr(r.psnr), format!("{:.6}", r.ssim)];
            if with_lpips {
                rec.push(format!("{:.6}", r.lpips.unwrap_or(f64::NAN)));
            }
            out.write_record(&rec)?;
        }
        let mut rec = vec![
            "mean".to_string(),
            self.mean_psnr.map_or("inf".to_string(), fmt_psnr),
            format!("{:.6}", self.mean_ssim),
        ];
        if let Some(l) = self.mean_lpips {
            rec.push(format!("{l:.6}"));
        }
        out.write_record(&rec)?;
        out.flush()?;
        Ok(())
    }
}

fn fmt_psnr(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p:.4}")
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let lp = self.perceptual_name.as_deref().filter(|_| self.mean_lpips.is_some());
        write!(f, "{:<width$}  {:>10}  {:>8}", "name", "PSNR(dB)", "SSIM")?;
        if let Some(n) = lp {
            write!(f, "  {n:>8}")?;
        }
        writeln!(f)?;
        for r in &self.rows {
            write!(f, "{:<width$}  {:>10}  {:>8.4}", r.name, fmt_psnr(r.psnr), r.ssim)?;
            if lp.is_some() {
                write!(f, "  {:>8.4}", r.lpips.unwrap_or(f64::NAN))?;
            }
            writeln!(f)?;
        }
        write!(
            f,
            "{:<width$}  {:>10}  {:>8.4}",
            "mean",
            self.mean_psnr.map_or("inf".into(), fmt_psnr),
            self.mean_ssim
        )?;
        if let Some(l) = self.mean_lpips.filter(|_| lp.is_some()) {
            write!(f, "  {l:>8.4}")?;
        }
        let infinite = self.rows.len() - self.finite_psnr_count;
        if infinite > 0 {
            write!(f, "\n({infinite} identical pair(s) with infinite PSNR excluded from the PSNR mean)")?;
        }
        Ok(())
    }
}

/// Scores `(name, sr, hr)` triples in the given order.
pub fn evaluate_pairs(
    pairs: &[(String, Image, Image)],
    perceptual: Option<&dyn PerceptualMetric>,
) -> Result<MetricReport> {
    let rows = pairs
        .iter()
        .map(|(name, sr, hr)| {
            sr.same_shape(hr).map_err(|e| Error::Shape(format!("{name}: {e}")))?;
            Ok(MetricRow {
                name: name.clone(),
                psnr: super::psnr(sr, hr)?,
                ssim: super::ssim(sr, hr)?,
                lpips: perceptual.map(|p| p.distance(sr, hr)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_rows(rows, perceptual.map(|p| p.name().to_string())))
}

/// Compares same-named PNGs in two directories, in filename order. Any file
/// without a counterpart is an error.
pub fn evaluate_dir(
    sr_dir: &Path,
    hr_dir: &Path,
    perceptual: Option<&dyn PerceptualMetric>,
) -> Result<MetricReport> {
    let names = |dir: &Path| -> Result<BTreeSet<String>> {
        Ok(list_pngs(dir)?
            .into_iter()
            .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(str::to_string))
            .collect())
    };
    let (sr_names, hr_names) = (names(sr_dir)?, names(hr_dir)?);
    if let Some(orphan) = sr_names.symmetric_difference(&hr_names).next() {
        let dir = if sr_names.contains(orphan) { sr_dir } else { hr_dir };
        return Err(Error::MissingCounterpart(dir.join(orphan)));
    }
    if hr_names.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pairs = hr_names
        .into_iter()
        .map(|n| Ok((n.clone(), load_image(sr_dir.join(&n))?, load_image(hr_dir.join(&n))?)))
        .collect::<Result<Vec<_>>>()?;
    evaluate_pairs(&pairs, perceptual)
}
