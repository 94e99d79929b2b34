//! Rasterizes nodal fields over the mesh triangles and writes binary PPM
//! images and CSV dumps.
//!
//! The colormap is fixed: nine anchors of a viridis-like ramp, linearly
//! interpolated into 256 entries, from dark purple (minimum) to yellow
//! (maximum). Pixels outside the mesh are white.

use crate::error::{Error, Result};
use crate::mesh::Graph;
use std::fmt::Write as _;

pub const COLORMAP_ANCHORS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

pub const BACKGROUND: [u8; 3] = [255, 255, 255];
const SEPARATOR: usize = 4;

/// 256-entry lookup table built from [`COLORMAP_ANCHORS`].
pub fn colormap() -> [[u8; 3]; 256] {
    let mut lut = [[0u8; 3]; 256];
    let segs = (COLORMAP_ANCHORS.len() - 1) as f64;
    for (k, entry) in lut.iter_mut().enumerate() {
        let s = k as f64 / 255.0 * segs;
        let i = (s.floor() as usize).min(COLORMAP_ANCHORS.len() - 2);
        let f = s - i as f64;
        let (a, b) = (COLORMAP_ANCHORS[i], COLORMAP_ANCHORS[i + 1]);
        for c in 0..3 {
            entry[c] = (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8;
        }
    }
    lut
}

/// Scalar image, row 0 at the top; `NaN` marks pixels outside the mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Raster {
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Finite minimum and maximum.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().copied().filter(|v| v.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }
}

/// Pixel centres span the node bounding box corner to corner, so the four
/// corner pixels sit exactly on its corners.
pub fn pixel_position(bbox: ([f64; 2], [f64; 2]), width: usize, height: usize, col: usize, row: usize) -> [f64; 2] {
    let (lo, hi) = bbox;
    let fx = if width > 1 {
        col as f64 / (width - 1) as f64
    } else {
        0.5
    };
    let fy = if height > 1 {
        row as f64 / (height - 1) as f64
    } else {
        0.5
    };
    [lo[0] + fx * (hi[0] - lo[0]), hi[1] - fy * (hi[1] - lo[1])]
}

pub fn bounding_box(graph: &Graph) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &graph.positions {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

/// Piecewise-linear interpolation of `field` sampled on a pixel grid.
pub fn rasterize(graph: &Graph, field: &[f64], width: usize, height: usize) -> Result<Raster> {
    if field.len() != graph.num_nodes() {
        return Err(Error::Shape(format!(
            "field has {} values, mesh has {} nodes",
            field.len(),
            graph.num_nodes()
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    let bbox = bounding_box(graph);
    let (lo, hi) = bbox;
    let dx = if width > 1 {
        (hi[0] - lo[0]) / (width - 1) as f64
    } else {
        1.0
    };
    let dy = if height > 1 {
        (hi[1] - lo[1]) / (height - 1) as f64
    } else {
        1.0
    };
    let mut values = vec![f64::NAN; width * height];
    let shifts = graph.shift_map();
    for t in 0..graph.triangles.len() {
        let tri = graph.triangles[t];
        let c = graph.triangle_coords(t, &shifts);
        let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
        if det.abs() < f64::MIN_POSITIVE {
            continue;
        }
        let (tx0, tx1) = (
            c.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
            c.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
        );
        let (ty0, ty1) = (
            c.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
            c.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
        );
        let c0 = (((tx0 - lo[0]) / dx).floor().max(0.0) as usize).min(width - 1);
        let c1 = (((tx1 - lo[0]) / dx).ceil().max(0.0) as usize).min(width - 1);
        let r0 = (((hi[1] - ty1) / dy).floor().max(0.0) as usize).min(height - 1);
        let r1 = (((hi[1] - ty0) / dy).ceil().max(0.0) as usize).min(height - 1);
        for row in r0..=r1 {
            for col in c0..=c1 {
                let idx = row * width + col;
                if !values[idx].is_nan() {
                    continue;
                }
                let p = pixel_position(bbox, width, height, col, row);
                let l1 = ((c[1][0] - p[0]) * (c[2][1] - p[1]) - (c[2][0] - p[0]) * (c[1][1] - p[1])) / det;
                let l2 = ((c[2][0] - p[0]) * (c[0][1] - p[1]) - (c[0][0] - p[0]) * (c[2][1] - p[1])) / det;
                let l3 = 1.0 - l1 - l2;
                let tol = -1e-12;
                if l1 >= tol && l2 >= tol && l3 >= tol {
                    let f = [field[tri[0]], field[tri[1]], field[tri[2]]];
                    values[idx] = f[2] + l1 * (f[0] - f[2]) + l2 * (f[1] - f[2]);
                }
            }
        }
    }
    Ok(Raster { width, height, values })
}

fn color_of(v: f64, lo: f64, hi: f64, lut: &[[u8; 3]; 256]) -> [u8; 3] {
    if !v.is_finite() {
        return BACKGROUND;
    }
    let f = if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    lut[(f * 255.0).round() as usize]
}

/// Binary PPM (`P6`) of several panels side by side, each with its own
/// colour range, separated by white columns.
pub fn panels_to_ppm(panels: &[(&Raster, (f64, f64))]) -> Result<Vec<u8>> {
    let height = panels.first().ok_or_else(|| Error::invalid("no panels"))?.0.height;
    if panels.iter().any(|(r, _)| r.height != height) {
        return Err(Error::Shape("panels differ in height".into()));
    }
    let width: usize = panels.iter().map(|(r, _)| r.width).sum::<usize>() + SEPARATOR * (panels.len() - 1);
    let lut = colormap();
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for row in 0..height {
        for (k, (r, (lo, hi))) in panels.iter().enumerate() {
            if k > 0 {
                for _ in 0..SEPARATOR {
                    out.extend_from_slice(&BACKGROUND);
                }
            }
            for col in 0..r.width {
                out.extend_from_slice(&color_of(r.get(col, row), *lo, *hi, &lut));
            }
        }
    }
    Ok(out)
}

pub fn to_ppm(raster: &Raster, range: Option<(f64, f64)>) -> Result<Vec<u8>> {
    let range = range.or_else(|| raster.range()).unwrap_or((0.0, 1.0));
    panels_to_ppm(&[(raster, range)])
}

/// Prediction, truth and their pixelwise absolute difference. The first
/// two panels share one colour range.
#[derive(Clone, Debug, PartialEq)]
pub struct Triptych {
    pub prediction: Raster,
    pub truth: Raster,
    pub error: Raster,
}

pub fn triptych(graph: &Graph, prediction: &[f64], truth: &[f64], width: usize, height: usize) -> Result<Triptych> {
    let prediction = rasterize(graph, prediction, width, height)?;
    let truth = rasterize(graph, truth, width, height)?;
    let error = Raster {
        width,
        height,
        values: prediction
            .values
            .iter()
            .zip(&truth.values)
            .map(|(p, t)| (p - t).abs())
            .collect(),
    };
    Ok(Triptych {
        prediction,
        truth,
        error,
    })
}

impl Triptych {
    pub fn to_ppm(&self) -> Result<Vec<u8>> {
        let (a, b) = (self.prediction.range(), self.truth.range());
        let shared = match (a, b) {
            (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1)),
            (Some(r), None) | (None, Some(r)) => r,
            (None, None) => (0.0, 1.0),
        };
        let err = self.error.range().map_or((0.0, 1.0), |(_, hi)| (0.0, hi));
        panels_to_ppm(&[(&self.prediction, shared), (&self.truth, shared), (&self.error, err)])
    }
}

/// `x,y,value` per node.
pub fn field_csv(graph: &Graph, field: &[f64]) -> Result<String> {
    if field.len() != graph.num_nodes() {
        return Err(Error::Shape(format!(
            "field has {} values, mesh has {} nodes",
            field.len(),
            graph.num_nodes()
        )));
    }
    let mut s = String::from("x,y,value\n");
    for (p, v) in graph.positions.iter().zip(field) {
        writeln!(s, "{:?},{:?},{:?}", p[0], p[1], v).unwrap();
    }
    Ok(s)
}

/// Parses a binary PPM into `(width, height, rgb bytes)`.
pub fn decode_ppm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |m: &str| Error::format("PPM", m);
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    pos += 1;
    if fields[0] != "P6" || fields[3] != "255" {
        return Err(bad("expected P6 with maxval 255"));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let data = bytes.get(pos..).ok_or_else(|| bad("missing pixel data"))?;
    if data.len() != w * h * 3 {
        return Err(bad("pixel data length mismatch"));
    }
    Ok((w, h, data.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_endpoints() {
        let lut = colormap();
        assert_eq!(lut[0], COLORMAP_ANCHORS[0]);
        assert_eq!(lut[255], COLORMAP_ANCHORS[8]);
    }

    #[test]
    fn ppm_header_round_trip() {
        let r = Raster {
            width: 3,
            height: 2,
            values: vec![0.0, 1.0, f64::NAN, 0.5, 0.25, 1.0],
        };
        let (w, h, px) = decode_ppm(&to_ppm(&r, None).unwrap()).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(&px[6..9], &BACKGROUND);
        assert_eq!(&px[0..3], &COLORMAP_ANCHORS[0]);
    }
}
