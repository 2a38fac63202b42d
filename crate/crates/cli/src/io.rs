//! File formats: headerless point CSVs, PGM (P2) and CSV-grid images,
//! diagram CSVs, and atomic writes. Floats are serialized with 17
//! significant digits so every value round-trips bit-exactly.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use topograd::{PersistenceDiagram, PointCloud, ScalarField};

pub fn fmt_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{:.16e}", x)
    }
}

pub fn parse_float(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other
            .parse::<f64>()
            .with_context(|| format!("bad float '{other}'")),
    }
}

/// Write via a temp file in the same directory, then rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp-{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Headerless CSV, one point per row, 2 or 3 columns.
pub fn read_points(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read points file {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(parse_float)
            .collect::<Result<_>>()
            .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        if !(row.len() == 2 || row.len() == 3) {
            bail!(
                "{}:{}: expected 2 or 3 coordinates, got {}",
                path.display(),
                lineno + 1,
                row.len()
            );
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("points file {} is empty", path.display());
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        bail!("{}: mixed 2D and 3D rows", path.display());
    }
    Ok(PointCloud::from_flat(
        rows.into_iter().flatten().collect(),
        dim,
    )?)
}

pub fn write_points(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut out = String::new();
    for i in 0..cloud.n_points() {
        let row: Vec<String> = cloud.point(i).iter().map(|&c| fmt_float(c)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, &out)
}

/// PGM (P2) or CSV grid; values are normalized onto [0, 1] on load
/// (PGM by its maxval, CSV by its maximum when that exceeds 1).
pub fn read_image(path: &Path) -> Result<ScalarField> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read image file {}", path.display()))?;
    if text.trim_start().starts_with("P2") {
        return read_pgm(path, &text);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(parse_float)
            .collect::<Result<_>>()
            .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("image file {} is empty", path.display());
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        bail!("{}: ragged CSV grid", path.display());
    }
    let mut values: Vec<f64> = rows.into_iter().flatten().collect();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > 1.0 {
        for v in values.iter_mut() {
            *v /= max;
        }
    }
    let rows_n = values.len() / cols;
    Ok(ScalarField::grid(rows_n, cols, values)?)
}

fn read_pgm(path: &Path, text: &str) -> Result<ScalarField> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace().map(str::to_owned).collect::<Vec<_>>());
    let magic = tokens.next().unwrap_or_default();
    if magic != "P2" {
        bail!("{}: not a plain-text PGM (P2) file", path.display());
    }
    let mut next_usize = |what: &str| -> Result<usize> {
        tokens
            .next()
            .with_context(|| format!("{}: missing {what}", path.display()))?
            .parse::<usize>()
            .with_context(|| format!("{}: bad {what}", path.display()))
    };
    let cols = next_usize("width")?;
    let rows = next_usize("height")?;
    let maxval = next_usize("maxval")?;
    if maxval == 0 || rows == 0 || cols == 0 {
        bail!("{}: degenerate PGM header", path.display());
    }
    let mut values = Vec::with_capacity(rows * cols);
    for t in tokens {
        let v: f64 = t
            .parse()
            .with_context(|| format!("{}: bad pixel '{t}'", path.display()))?;
        values.push(v / maxval as f64);
    }
    if values.len() != rows * cols {
        bail!(
            "{}: expected {} pixels, found {}",
            path.display(),
            rows * cols,
            values.len()
        );
    }
    Ok(ScalarField::grid(rows, cols, values)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Csv,
    Pgm,
}

pub fn write_image(path: &Path, field: &ScalarField, format: ImageFormat) -> Result<()> {
    let topograd::filtration::FieldShape::Grid { rows, cols } = field.shape() else {
        bail!("field is not an image");
    };
    let mut out = String::new();
    match format {
        ImageFormat::Csv => {
            for i in 0..rows {
                let row: Vec<String> =
                    (0..cols).map(|j| fmt_float(field.get(i, j))).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        ImageFormat::Pgm => {
            // Map [min(0, lo), max(1, hi)] onto the 16-bit grey range so
            // in-range images keep their scale.
            let lo = field
                .values()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
                .min(0.0);
            let hi = field
                .values()
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
                .max(1.0);
            out.push_str(&format!("P2\n{cols} {rows}\n65535\n"));
            for i in 0..rows {
                let row: Vec<String> = (0..cols)
                    .map(|j| {
                        let v = (field.get(i, j) - lo) / (hi - lo);
                        format!("{}", (v.clamp(0.0, 1.0) * 65535.0).round() as u32)
                    })
                    .collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
    }
    write_atomic(path, &out)
}

/// Diagram CSV: `dim,birth,death,creator,destroyer`; infinite deaths as
/// `inf`/`-inf`, essential destroyers empty. Zero-persistence pairs are
/// plot noise and are skipped.
pub fn write_diagram(path: &Path, diagram: &PersistenceDiagram) -> Result<()> {
    let mut out = String::from("dim,birth,death,creator,destroyer\n");
    for k in 0..=diagram.max_dim() {
        for p in diagram.pairs_of_dim(k) {
            if p.is_zero_persistence() {
                continue;
            }
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.dim,
                fmt_float(p.birth),
                fmt_float(p.death),
                p.creator,
                p.destroyer.map_or(String::new(), |d| d.to_string()),
            ));
        }
    }
    write_atomic(path, &out)
}

pub fn write_loss_curve(path: &Path, losses: &[f64]) -> Result<()> {
    let mut out = String::from("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i, fmt_float(*l)));
    }
    write_atomic(path, &out)
}
