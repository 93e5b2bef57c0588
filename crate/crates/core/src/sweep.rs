//! Parameter sweeps over the edge-guided defenses and the per-image report
//! they produce.
//!
//! CSV columns, in order:
//!
//! | column            | meaning                                                   |
//! |-------------------|-----------------------------------------------------------|
//! | `param`           | sweep value (`lambda_v`, `alpha` or kernel set like `3-9`)|
//! | `filename`        | input file name                                          |
//! | `l2_to_input`     | [`l2_distance`] between output and input                  |
//! | `distinct_colors` | distinct colors in the output                             |
//! | `edge_fraction`   | fraction of pixels on the edge mask (0 without edges)     |
//! | `ms`              | wall time of the defense in milliseconds (0 when disabled)|

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::pipeline::{defend, format_kernels, l2_distance, parse_kernels, PipelineConfig};
use crate::raster::Raster;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 6] = [
    "param",
    "filename",
    "l2_to_input",
    "distinct_colors",
    "edge_fraction",
    "ms",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    LambdaV,
    Alpha,
    Kernels,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::LambdaV => "lambda_v",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Kernels => "kernels",
        }
    }

    /// lambda_v 70..=18070 step 600, alpha 1..=6, kernels 3-7 through 3-13.
    pub fn default_values(self) -> Vec<SweepValue> {
        match self {
            SweepAxis::LambdaV => (0..=30)
                .map(|i| SweepValue::LambdaV(70.0 + 600.0 * i as f64))
                .collect(),
            SweepAxis::Alpha => (1..=6).map(SweepValue::Alpha).collect(),
            SweepAxis::Kernels => [7, 9, 11, 13]
                .iter()
                .map(|&hi| SweepValue::Kernels((3..=hi).step_by(2).collect()))
                .collect(),
        }
    }

    /// Parses one sweep value. Numeric axes also accept `start:end:step`,
    /// which expands to every value up to and including `end`.
    pub fn parse_values(self, s: &str) -> Result<Vec<SweepValue>> {
        let bad = || Error::param(self.name(), format!("cannot parse sweep value `{s}`"));
        if self != SweepAxis::Kernels {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() == 3 {
                let nums: Vec<f64> = parts
                    .iter()
                    .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                let (start, end, step) = (nums[0], nums[1], nums[2]);
                if step.is_nan() || step <= 0.0 || start > end {
                    return Err(Error::param(self.name(), format!("empty range `{s}`")));
                }
                let n = ((end - start) / step + 1e-9).floor() as usize;
                return (0..=n)
                    .map(|i| self.value_from_number(start + step * i as f64, s))
                    .collect();
            }
        }
        match self {
            SweepAxis::Kernels => Ok(vec![SweepValue::Kernels(parse_kernels(s)?)]),
            _ => {
                let v: f64 = s.trim().parse().map_err(|_| bad())?;
                Ok(vec![self.value_from_number(v, s)?])
            }
        }
    }

    fn value_from_number(self, v: f64, src: &str) -> Result<SweepValue> {
        match self {
            SweepAxis::LambdaV => Ok(SweepValue::LambdaV(v)),
            SweepAxis::Alpha => {
                if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                    return Err(Error::param("alpha", format!("`{src}` is not an integer")));
                }
                Ok(SweepValue::Alpha(v as u8))
            }
            SweepAxis::Kernels => unreachable!("kernel sets are not numeric"),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "lambda_v" | "lambda" => Ok(SweepAxis::LambdaV),
            "alpha" => Ok(SweepAxis::Alpha),
            "kernels" => Ok(SweepAxis::Kernels),
            _ => Err(Error::param("axis", format!("unknown sweep axis `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepValue {
    LambdaV(f64),
    Alpha(u8),
    Kernels(Vec<usize>),
}

impl SweepValue {
    pub fn axis(&self) -> SweepAxis {
        match self {
            SweepValue::LambdaV(_) => SweepAxis::LambdaV,
            SweepValue::Alpha(_) => SweepAxis::Alpha,
            SweepValue::Kernels(_) => SweepAxis::Kernels,
        }
    }

    pub fn apply(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut cfg = base.clone();
        match self {
            SweepValue::LambdaV(v) => cfg.lambda_v = *v,
            SweepValue::Alpha(a) => cfg.alpha = *a,
            SweepValue::Kernels(k) => cfg.kernels = k.clone(),
        }
        cfg
    }
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::LambdaV(v) => write!(f, "{v}"),
            SweepValue::Alpha(a) => write!(f, "{a}"),
            SweepValue::Kernels(k) => f.write_str(&format_kernels(k)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub filename: String,
    pub l2_to_input: f64,
    pub distinct_colors: usize,
    pub edge_fraction: f64,
    pub ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.param.clone(),
                r.filename.clone(),
                format!("{:.6}", r.l2_to_input),
                r.distinct_colors.to_string(),
                format!("{:.6}", r.edge_fraction),
                format!("{:.3}", r.ms),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Runs `cfg` on one image and measures it. `timing = false` reports 0 ms so
/// repeated runs produce identical rows.
pub fn measure(
    param: &str,
    filename: &str,
    img: &Raster,
    cfg: &PipelineConfig,
    timing: bool,
) -> Result<(Raster, SweepRow)> {
    let start = Instant::now();
    let out = defend(img, cfg)?;
    let ms = if timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let row = SweepRow {
        param: param.to_string(),
        filename: filename.to_string(),
        l2_to_input: l2_distance(&out.image, img)?,
        distinct_colors: out.image.distinct_colors(),
        edge_fraction: out.edges.as_ref().map_or(0.0, |e| e.edge_fraction()),
        ms,
    };
    Ok((out.image, row))
}

/// One row per (value, image); values outer, file names sorted inner.
pub fn run_sweep(
    images: &[(String, Raster)],
    values: &[SweepValue],
    base: &PipelineConfig,
    timing: bool,
) -> Result<SweepReport> {
    if images.is_empty() {
        return Err(Error::EmptyInput("no images to sweep over".into()));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("no sweep values".into()));
    }
    if !base.defense.uses_edges() {
        return Err(Error::param(
            "defense",
            format!("sweeps need an edge-guided defense, got {}", base.defense),
        ));
    }
    let mut order: Vec<&(String, Raster)> = images.iter().collect();
    order.sort_by(|a, b| a.0.cmp(&b.0));
    let mut rows = Vec::with_capacity(values.len() * images.len());
    for value in values {
        let cfg = value.apply(base);
        // validates the sweep value once instead of per image
        cfg.kernel_bank()?;
        let param = value.to_string();
        let chunk: Vec<SweepRow> = order
            .par_iter()
            .map(|(name, img)| measure(&param, name, img, &cfg, timing).map(|(_, row)| row))
            .collect::<Result<_>>()?;
        rows.extend(chunk);
    }
    Ok(SweepReport { rows })
}
