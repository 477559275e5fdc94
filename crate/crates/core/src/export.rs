//! On-disk formats: spectrum CSV and binary raster, scan and turning-point
//! tables, PNG heatmaps and the run manifest.
//!
//! Spectrum CSV: `#`-prefixed `key = value` header lines, then the column
//! line `kx,ky,F` and one row per node in storage order (`kx` fastest).
//! Floats are written with 17 significant digits so reading back is exact.
//!
//! Binary raster: magic `SQVERAS1`, `nx` and `ny` as little-endian `u32`,
//! then `kx_min, kx_max, ky_min, ky_max, kz` and the `nx * ny` values as
//! little-endian `f64`, row-major with `kx` fastest.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::RasterScale;
use crate::error::{Error, Result};
use crate::integrator::Formulation;
use crate::sweep::{AxisRange, MomentumGrid, ScanRow, ScanTable, Spectrum};

pub const RASTER_MAGIC: &[u8; 8] = b"SQVERAS1";
const RASTER_HEADER: usize = 8 + 4 + 4 + 5 * 8;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn axis_text(a: &AxisRange) -> String {
    format!("{}, {}, {}", num(a.min), num(a.max), a.count)
}

/// Writes the CSV text for a spectrum.
pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let g = &spectrum.grid;
    let m = &spectrum.metadata;
    let mut out = String::new();
    let _ = writeln!(out, "# scalar-qve spectrum");
    let _ = writeln!(out, "# config_hash = {}", m.config_hash);
    let _ = writeln!(out, "# kx = {}", axis_text(&g.kx));
    let _ = writeln!(out, "# ky = {}", axis_text(&g.ky));
    let _ = writeln!(out, "# kz = {}", num(g.kz));
    let _ = writeln!(out, "# formulation = {}", m.settings.formulation.name());
    let _ = writeln!(out, "# rel_tol = {}", num(m.settings.rel_tol));
    let _ = writeln!(out, "# abs_tol = {}", num(m.settings.abs_tol));
    let _ = writeln!(out, "# envelope_cut = {}", num(m.settings.envelope_cut));
    let _ = writeln!(out, "# charge = {}", num(m.particle.charge));
    let _ = writeln!(out, "# mass = {}", num(m.particle.mass));
    let a = m.final_potential;
    let _ = writeln!(
        out,
        "# final_potential = {}, {}, {}",
        num(a[0]),
        num(a[1]),
        num(a[2])
    );
    let _ = writeln!(out, "# failed_nodes = {}", m.failures.len());
    let _ = writeln!(out, "# measure = dkx dky / (2 pi)^2");
    let _ = writeln!(out, "# layout = row-major, kx fastest");
    let _ = writeln!(out, "kx,ky,F");
    for iy in 0..g.ky.count {
        let ky = num(g.ky.node(iy));
        for ix in 0..g.kx.count {
            let _ = writeln!(
                out,
                "{},{},{}",
                num(g.kx.node(ix)),
                ky,
                num(spectrum.value(ix, iy))
            );
        }
    }
    out
}

fn parse_f64(format: &'static str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(format, format!("bad number `{}`", s.trim())))
}

fn parse_axis(s: &str) -> Result<AxisRange> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::parse("spectrum csv", "axis needs min, max, count"));
    }
    let count = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::parse("spectrum csv", "bad axis count"))?;
    AxisRange::new(
        parse_f64("spectrum csv", parts[0])?,
        parse_f64("spectrum csv", parts[1])?,
        count,
    )
    .map_err(|e| Error::parse("spectrum csv", e.to_string()))
}

/// Most nodes a reader will accept, to bound allocations on hostile input.
pub const MAX_NODES: usize = 1 << 26;

/// Parses CSV text produced by [`spectrum_csv`]. Node coordinates must match
/// the grid in the header.
pub fn parse_spectrum_csv(text: &str) -> Result<Spectrum> {
    const FMT: &str = "spectrum csv";
    let mut kx = None;
    let mut ky = None;
    let mut kz = None;
    let mut hash = String::new();
    let mut formulation = None;
    let mut tols = (None, None, None);
    let mut particle = (None, None);
    let mut potential = None;
    let mut lines = text.lines();
    let mut saw_columns = false;
    for line in lines.by_ref() {
        let Some(rest) = line.strip_prefix('#') else {
            if line.trim() == "kx,ky,F" {
                saw_columns = true;
                break;
            }
            return Err(Error::parse(
                FMT,
                format!("unexpected line `{line}` in header"),
            ));
        };
        let Some((key, value)) = rest.split_once('=') else {
            continue;
        };
        let value = value.trim();
        match key.trim() {
            "kx" => kx = Some(parse_axis(value)?),
            "ky" => ky = Some(parse_axis(value)?),
            "kz" => kz = Some(parse_f64(FMT, value)?),
            "config_hash" => hash = value.to_string(),
            "formulation" => {
                formulation = Some(match value {
                    "chi" => Formulation::Chi,
                    "fgh" => Formulation::Fgh,
                    "bogoliubov" => Formulation::Bogoliubov,
                    _ => return Err(Error::parse(FMT, format!("unknown formulation `{value}`"))),
                })
            }
            "rel_tol" => tols.0 = Some(parse_f64(FMT, value)?),
            "abs_tol" => tols.1 = Some(parse_f64(FMT, value)?),
            "envelope_cut" => tols.2 = Some(parse_f64(FMT, value)?),
            "charge" => particle.0 = Some(parse_f64(FMT, value)?),
            "mass" => particle.1 = Some(parse_f64(FMT, value)?),
            "final_potential" => {
                let v: Vec<&str> = value.split(',').collect();
                if v.len() != 3 {
                    return Err(Error::parse(FMT, "final_potential needs 3 components"));
                }
                potential = Some([
                    parse_f64(FMT, v[0])?,
                    parse_f64(FMT, v[1])?,
                    parse_f64(FMT, v[2])?,
                ]);
            }
            _ => {}
        }
    }
    if !saw_columns {
        return Err(Error::parse(FMT, "missing `kx,ky,F` column line"));
    }
    let (Some(kx), Some(ky)) = (kx, ky) else {
        return Err(Error::parse(FMT, "header lacks kx/ky axes"));
    };
    let grid = MomentumGrid::new(kx, ky, kz.unwrap_or(0.0))
        .map_err(|e| Error::parse(FMT, e.to_string()))?;
    if kx.count.checked_mul(ky.count).is_none_or(|n| n > MAX_NODES) {
        return Err(Error::parse(FMT, "grid too large"));
    }
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let i = values.len();
        if i >= grid.len() {
            return Err(Error::parse(FMT, "more rows than grid nodes"));
        }
        let mut cols = line.split(',');
        let (Some(x), Some(y), Some(f), None) =
            (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(Error::parse(FMT, format!("row {i} needs three columns")));
        };
        let (ix, iy) = (i % kx.count, i / kx.count);
        let node = grid.node(ix, iy);
        if parse_f64(FMT, x)? != node[0] || parse_f64(FMT, y)? != node[1] {
            return Err(Error::parse(
                FMT,
                format!("row {i} is not grid node ({ix}, {iy})"),
            ));
        }
        values.push(parse_f64(FMT, f)?);
    }
    if values.len() != grid.len() {
        return Err(Error::parse(
            FMT,
            format!("{} rows for {} nodes", values.len(), grid.len()),
        ));
    }
    let mut s = Spectrum::from_values(grid, values)?;
    s.metadata.config_hash = hash;
    if let Some(f) = formulation {
        s.metadata.settings.formulation = f;
    }
    if let Some(v) = tols.0 {
        s.metadata.settings.rel_tol = v;
    }
    if let Some(v) = tols.1 {
        s.metadata.settings.abs_tol = v;
    }
    if let Some(v) = tols.2 {
        s.metadata.settings.envelope_cut = v;
    }
    if let Some(v) = particle.0 {
        s.metadata.particle.charge = v;
    }
    if let Some(v) = particle.1 {
        s.metadata.particle.mass = v;
    }
    if let Some(a) = potential {
        s.metadata.final_potential = a;
    }
    Ok(s)
}

pub fn encode_raster(spectrum: &Spectrum) -> Vec<u8> {
    let g = &spectrum.grid;
    let mut out = Vec::with_capacity(RASTER_HEADER + 8 * spectrum.values.len());
    out.extend_from_slice(RASTER_MAGIC);
    out.extend_from_slice(&(g.kx.count as u32).to_le_bytes());
    out.extend_from_slice(&(g.ky.count as u32).to_le_bytes());
    for v in [g.kx.min, g.kx.max, g.ky.min, g.ky.max, g.kz] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &spectrum.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_raster(bytes: &[u8]) -> Result<Spectrum> {
    const FMT: &str = "binary raster";
    if bytes.len() < RASTER_HEADER {
        return Err(Error::parse(FMT, "truncated header"));
    }
    if &bytes[..8] != RASTER_MAGIC {
        return Err(Error::parse(FMT, "bad magic"));
    }
    let u32_at =
        |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let (nx, ny) = (u32_at(8), u32_at(12));
    let h: Vec<f64> = (0..5).map(|i| f64_at(16 + 8 * i)).collect();
    let n = nx
        .checked_mul(ny)
        .filter(|&n| n <= MAX_NODES)
        .ok_or_else(|| Error::parse(FMT, "grid too large"))?;
    if bytes.len() != RASTER_HEADER + 8 * n {
        return Err(Error::parse(
            FMT,
            format!(
                "{} payload bytes for {nx}x{ny} nodes",
                bytes.len() - RASTER_HEADER
            ),
        ));
    }
    let kx = AxisRange::new(h[0], h[1], nx).map_err(|e| Error::parse(FMT, e.to_string()))?;
    let ky = AxisRange::new(h[2], h[3], ny).map_err(|e| Error::parse(FMT, e.to_string()))?;
    let grid = MomentumGrid::new(kx, ky, h[4]).map_err(|e| Error::parse(FMT, e.to_string()))?;
    let values = (0..n).map(|i| f64_at(RASTER_HEADER + 8 * i)).collect();
    Spectrum::from_values(grid, values)
}

pub fn scan_csv(table: &ScanTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# scalar-qve scan");
    let _ = writeln!(out, "# parameter = {}", table.parameter);
    let _ = writeln!(out, "# base_hash = {}", table.base_hash);
    let _ = writeln!(out, "# density = slice, dkx dky / (2 pi)^2");
    let _ = writeln!(out, "value,density,peak_f,gamma,failed_nodes,error");
    for r in &table.rows {
        let err = r
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n', '\r'], ";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(r.value),
            num(r.density),
            num(r.peak_f),
            num(r.gamma),
            r.failed_nodes,
            err
        );
    }
    out
}

pub fn parse_scan_csv(text: &str) -> Result<ScanTable> {
    const FMT: &str = "scan csv";
    let mut parameter = None;
    let mut base_hash = String::new();
    let mut lines = text.lines();
    let mut saw_columns = false;
    for line in lines.by_ref() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                match k.trim() {
                    "parameter" => parameter = Some(v.trim().to_string()),
                    "base_hash" => base_hash = v.trim().to_string(),
                    _ => {}
                }
            }
            continue;
        }
        if line.trim() == "value,density,peak_f,gamma,failed_nodes,error" {
            saw_columns = true;
            break;
        }
        return Err(Error::parse(
            FMT,
            format!("unexpected line `{line}` in header"),
        ));
    }
    if !saw_columns {
        return Err(Error::parse(FMT, "missing column line"));
    }
    let parameter = parameter.ok_or_else(|| Error::parse(FMT, "missing parameter"))?;
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let c: Vec<&str> = line.splitn(6, ',').collect();
        if c.len() != 6 {
            return Err(Error::parse(FMT, "row needs six columns"));
        }
        let failed_nodes = c[4]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::parse(FMT, "bad failed_nodes"))?;
        rows.push(ScanRow {
            value: parse_f64(FMT, c[0])?,
            density: parse_f64(FMT, c[1])?,
            peak_f: parse_f64(FMT, c[2])?,
            gamma: parse_f64(FMT, c[3])?,
            failed_nodes,
            error: (!c[5].is_empty()).then(|| c[5].to_string()),
        });
    }
    if rows.windows(2).any(|w| w[1].value < w[0].value) {
        return Err(Error::parse(FMT, "rows not ordered by value"));
    }
    Ok(ScanTable {
        parameter,
        base_hash,
        rows,
    })
}

/// One line of the turning-point report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicalRow {
    pub k: [f64; 3],
    pub pairs: usize,
    pub k1: f64,
    pub k2: f64,
    pub alpha: f64,
    pub f_boson: f64,
    pub f_fermion: f64,
    pub f_single: f64,
    pub f_exact: f64,
    pub error: Option<String>,
}

pub fn semiclassical_csv(rows: &[SemiclassicalRow]) -> String {
    let mut out =
        String::from("kx,ky,kz,pairs,K1,K2,alpha,F_boson,F_fermion,F_single,F_exact,error\n");
    for r in rows {
        let err = r
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n', '\r'], ";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            num(r.k[0]),
            num(r.k[1]),
            num(r.k[2]),
            r.pairs,
            num(r.k1),
            num(r.k2),
            num(r.alpha),
            num(r.f_boson),
            num(r.f_fermion),
            num(r.f_single),
            num(r.f_exact),
            err
        );
    }
    out
}

// Eight-stop approximation of the viridis colormap.
const COLORMAP: [[f64; 3]; 8] = [
    [68.0, 1.0, 84.0],
    [70.0, 50.0, 127.0],
    [54.0, 92.0, 141.0],
    [39.0, 127.0, 142.0],
    [31.0, 161.0, 135.0],
    [74.0, 194.0, 109.0],
    [159.0, 218.0, 58.0],
    [253.0, 231.0, 37.0],
];

fn colormap(x: f64) -> [u8; 3] {
    if !x.is_finite() {
        return [255, 0, 255];
    }
    let x = x.clamp(0.0, 1.0) * (COLORMAP.len() - 1) as f64;
    let i = (x.floor() as usize).min(COLORMAP.len() - 2);
    let u = x - i as f64;
    let mut c = [0u8; 3];
    for (j, ch) in c.iter_mut().enumerate() {
        *ch = (COLORMAP[i][j] * (1.0 - u) + COLORMAP[i + 1][j] * u).round() as u8;
    }
    c
}

/// Log-scale floor relative to the peak.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RasterSidecar {
    pub width: usize,
    pub height: usize,
    pub scale: RasterScale,
    pub mapping: String,
    pub kx: (f64, f64, usize),
    pub ky: (f64, f64, usize),
    pub kz: f64,
    /// Values mapped to the ends of the colormap.
    pub value_range: (f64, f64),
    pub colormap: String,
}

/// Heatmap pixels (RGB, row 0 = largest `ky`) and the sidecar description.
pub fn render_raster(spectrum: &Spectrum, scale: RasterScale) -> (image::RgbImage, RasterSidecar) {
    let g = &spectrum.grid;
    let (w, h) = (g.kx.count, g.ky.count);
    let peak = spectrum.peak();
    let (lo, hi) = match scale {
        RasterScale::Linear => (0.0, peak),
        RasterScale::Log => (peak * LOG_FLOOR, peak),
    };
    let map = |v: f64| -> f64 {
        if !v.is_finite() {
            return f64::NAN;
        }
        if peak <= 0.0 {
            return 0.0;
        }
        match scale {
            RasterScale::Linear => v / peak,
            RasterScale::Log => ((v.max(lo) / peak).log10() + 12.0) / 12.0,
        }
    };
    let mut img = image::RgbImage::new(w as u32, h as u32);
    for iy in 0..h {
        for ix in 0..w {
            let row = (h - 1 - iy) as u32;
            img.put_pixel(
                ix as u32,
                row,
                image::Rgb(colormap(map(spectrum.value(ix, iy)))),
            );
        }
    }
    let sidecar = RasterSidecar {
        width: w,
        height: h,
        scale,
        mapping: "pixel (col, row) = node (ix, ny - 1 - iy): column 0 is kx min, row 0 is ky max"
            .into(),
        kx: g.kx.into(),
        ky: g.ky.into(),
        kz: g.kz,
        value_range: (lo, hi),
        colormap: "viridis, 8 stops, linear interpolation; failed nodes magenta".into(),
    };
    (img, sidecar)
}

/// Writes `path` (PNG) and `path` + `.json` (sidecar).
pub fn export_raster(spectrum: &Spectrum, path: &Path, scale: RasterScale) -> Result<()> {
    let (img, sidecar) = render_raster(spectrum, scale);
    let mut png = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    write_file(path, &png)?;
    let json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    write_file(&sidecar_path(path), &json)
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
