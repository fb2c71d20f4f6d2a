//! Placement of historical raster maps on the web map.
//!
//! Positions are projected with spherical Web Mercator (EPSG:3857). A
//! pixel-to-plane affine transform is estimated from ground control points
//! by least squares, and the image rectangle is pushed through it to get the
//! four geographic corners the viewer pins the raster to.
//!
//! Pixel coordinates follow the image convention: origin at the top-left
//! corner, x to the right, y down.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{GeoPoint, GroundControlPoint, MERCATOR_MAX_LAT};

/// WGS84 semi-major axis used as the sphere radius by Web Mercator.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Half the width of the Web Mercator plane (`R * pi`).
pub const MERCATOR_HALF_EXTENT_M: f64 = EARTH_RADIUS_M * PI;

const PLANE_EPS_M: f64 = 1e-3;

/// Smallest/largest eigenvalue ratio of the pixel scatter below which GCPs
/// count as collinear.
const COLLINEAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeorefError {
    #[error("outside the Web Mercator domain: {0}")]
    Domain(String),
    #[error("degenerate control points: {0}")]
    Degenerate(String),
    #[error("singular transform: {0}")]
    Singular(String),
    #[error("gcp {index}: pixel ({x}, {y}) outside the {width}x{height} image")]
    PixelOutOfBounds {
        index: usize,
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("image size must be positive, got {width}x{height}")]
    EmptyImage { width: u32, height: u32 },
}

/// Web Mercator easting/northing in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub fn in_bounds(&self) -> bool {
        let lim = MERCATOR_HALF_EXTENT_M + PLANE_EPS_M;
        self.x.abs() <= lim && self.y.abs() <= lim
    }
}

pub fn lonlat_to_webmercator(p: &GeoPoint) -> Result<PlanePoint, GeorefError> {
    if !(p.lat.abs() <= MERCATOR_MAX_LAT) {
        return Err(GeorefError::Domain(format!("lat {}", p.lat)));
    }
    if !(p.lon.abs() <= 180.0) {
        return Err(GeorefError::Domain(format!("lon {}", p.lon)));
    }
    Ok(PlanePoint {
        x: EARTH_RADIUS_M * p.lon.to_radians(),
        y: EARTH_RADIUS_M * p.lat.to_radians().sin().atanh(),
    })
}

pub fn webmercator_to_lonlat(p: &PlanePoint) -> GeoPoint {
    GeoPoint::new(
        (p.x / EARTH_RADIUS_M).to_degrees(),
        (p.y / EARTH_RADIUS_M).sinh().atan().to_degrees(),
    )
}

/// Maps pixel `(px, py)` to plane `(a*px + b*py + c, d*px + e*py + f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineTransform {
    /// Builds a transform, rejecting non-invertible coefficient sets.
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self, GeorefError> {
        let t = AffineTransform { a, b, c, d, e, f };
        let coeffs = t.coefficients();
        if !coeffs.iter().all(|v| v.is_finite()) {
            return Err(GeorefError::Singular("non-finite coefficient".into()));
        }
        let scale = (a.abs() + b.abs()) * (d.abs() + e.abs());
        if t.determinant() == 0.0 || t.determinant().abs() <= scale * 1e-14 {
            return Err(GeorefError::Singular(format!(
                "determinant {} is zero",
                t.determinant()
            )));
        }
        Ok(t)
    }

    pub const IDENTITY: AffineTransform = AffineTransform {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
        e: 1.0,
        f: 0.0,
    };

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn apply(&self, px: f64, py: f64) -> PlanePoint {
        PlanePoint {
            x: self.a * px + self.b * py + self.c,
            y: self.d * px + self.e * py + self.f,
        }
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }
}

/// Outcome of a GCP fit; residuals are in Web Mercator meters, in GCP order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub transform: AffineTransform,
    pub residuals: Vec<f64>,
    pub rmse: f64,
}

/// Least-squares affine fit from pixel positions to projected GCP positions.
///
/// Pixel and plane coordinates are centered on their means and the pixel
/// columns scaled to unit RMS before a Householder QR solve, so results are
/// accurate even with plane offsets of millions of meters. `image_size`,
/// when known, bounds the pixel coordinates (edges inclusive).
pub fn fit_affine(
    gcps: &[GroundControlPoint],
    image_size: Option<(u32, u32)>,
) -> Result<FitReport, GeorefError> {
    if gcps.len() < 3 {
        return Err(GeorefError::Degenerate(format!(
            "at least 3 control points required, found {}",
            gcps.len()
        )));
    }
    if let Some((w, h)) = image_size {
        if w == 0 || h == 0 {
            return Err(GeorefError::EmptyImage { width: w, height: h });
        }
        for (index, g) in gcps.iter().enumerate() {
            let [x, y] = g.pixel;
            if !(0.0..=w as f64).contains(&x) || !(0.0..=h as f64).contains(&y) {
                return Err(GeorefError::PixelOutOfBounds {
                    index,
                    x,
                    y,
                    width: w,
                    height: h,
                });
            }
        }
    }
    let plane: Vec<PlanePoint> = gcps
        .iter()
        .map(|g| lonlat_to_webmercator(&g.geo))
        .collect::<Result<_, _>>()?;

    let n = gcps.len() as f64;
    let mean = |f: &dyn Fn(usize) -> f64| (0..gcps.len()).map(f).sum::<f64>() / n;
    let (mpx, mpy) = (mean(&|i| gcps[i].pixel[0]), mean(&|i| gcps[i].pixel[1]));
    let (mx, my) = (mean(&|i| plane[i].x), mean(&|i| plane[i].y));

    let cx: Vec<f64> = gcps.iter().map(|g| g.pixel[0] - mpx).collect();
    let cy: Vec<f64> = gcps.iter().map(|g| g.pixel[1] - mpy).collect();
    check_spread(&cx, &cy)?;

    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    let (sx, sy) = (rms(&cx), rms(&cy));
    // A column with zero spread (all GCPs on one pixel row) is collinear and
    // already rejected above; keep the guard so division stays well-defined.
    let (sx, sy) = (if sx > 0.0 { sx } else { 1.0 }, if sy > 0.0 { sy } else { 1.0 });

    let mut design = [
        cx.iter().map(|v| v / sx).collect::<Vec<_>>(),
        cy.iter().map(|v| v / sy).collect::<Vec<_>>(),
    ];
    let mut rhs = [
        plane.iter().map(|p| p.x - mx).collect::<Vec<_>>(),
        plane.iter().map(|p| p.y - my).collect::<Vec<_>>(),
    ];
    let [[a, b], [d, e]] = householder_solve(&mut design, &mut rhs)?;
    let (a, b, d, e) = (a / sx, b / sy, d / sx, e / sy);
    let c = mx - a * mpx - b * mpy;
    let f = my - d * mpx - e * mpy;
    let transform = AffineTransform::new(a, b, c, d, e, f)?;

    let residuals: Vec<f64> = gcps
        .iter()
        .zip(&plane)
        .map(|(g, p)| {
            let q = transform.apply(g.pixel[0], g.pixel[1]);
            (q.x - p.x).hypot(q.y - p.y)
        })
        .collect();
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    Ok(FitReport {
        transform,
        residuals,
        rmse,
    })
}

fn check_spread(cx: &[f64], cy: &[f64]) -> Result<(), GeorefError> {
    let sxx: f64 = cx.iter().map(|v| v * v).sum();
    let syy: f64 = cy.iter().map(|v| v * v).sum();
    let sxy: f64 = cx.iter().zip(cy).map(|(x, y)| x * y).sum();
    let half_trace = (sxx + syy) / 2.0;
    let disc = (((sxx - syy) / 2.0).powi(2) + sxy * sxy).sqrt();
    let (lmax, lmin) = (half_trace + disc, half_trace - disc);
    if !(lmax > 0.0) || lmin <= lmax * COLLINEAR_RATIO {
        return Err(GeorefError::Degenerate(
            "pixel positions of the control points are collinear".into(),
        ));
    }
    Ok(())
}

/// Solves two least-squares problems sharing a 2-column design matrix.
/// Columns are consumed in place. Returns `[[a, b], [d, e]]` where row `i`
/// solves for right-hand side `i`.
fn householder_solve(
    cols: &mut [Vec<f64>; 2],
    rhs: &mut [Vec<f64>; 2],
) -> Result<[[f64; 2]; 2], GeorefError> {
    let m = cols[0].len();
    let mut diag = [0.0; 2];
    for j in 0..2 {
        let norm = cols[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(GeorefError::Singular("rank-deficient design matrix".into()));
        }
        let alpha = if cols[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            let reflect = |w: &mut [f64]| {
                let t = 2.0 * v.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm2;
                for (wi, vi) in w.iter_mut().zip(&v) {
                    *wi -= t * vi;
                }
            };
            for col in cols.iter_mut().skip(j) {
                reflect(&mut col[j..m]);
            }
            for r in rhs.iter_mut() {
                reflect(&mut r[j..m]);
            }
        }
        diag[j] = alpha;
    }
    let r01 = cols[1][0];
    if diag[1].abs() <= diag[0].abs() * 1e-12 {
        return Err(GeorefError::Singular("rank-deficient design matrix".into()));
    }
    let solve = |qtb: &[f64]| {
        let x1 = qtb[1] / diag[1];
        let x0 = (qtb[0] - r01 * x1) / diag[0];
        [x0, x1]
    };
    Ok([solve(&rhs[0]), solve(&rhs[1])])
}

/// Geographic corners (NW, NE, SE, SW) of a `width` x `height` image placed
/// by `t`, i.e. the pixels (0,0), (w,0), (w,h), (0,h).
pub fn overlay_corners(
    t: &AffineTransform,
    width_px: u32,
    height_px: u32,
) -> Result<[GeoPoint; 4], GeorefError> {
    if width_px == 0 || height_px == 0 {
        return Err(GeorefError::EmptyImage {
            width: width_px,
            height: height_px,
        });
    }
    if t.determinant() == 0.0 || !t.determinant().is_finite() {
        return Err(GeorefError::Singular("determinant is zero".into()));
    }
    let (w, h) = (width_px as f64, height_px as f64);
    let mut out = [GeoPoint::new(0.0, 0.0); 4];
    for (slot, (px, py)) in out.iter_mut().zip([(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)]) {
        let p = t.apply(px, py);
        if !p.in_bounds() {
            return Err(GeorefError::Domain(format!(
                "corner pixel ({px}, {py}) maps to ({}, {}) m",
                p.x, p.y
            )));
        }
        let g = webmercator_to_lonlat(&p);
        g.check().map_err(GeorefError::Domain)?;
        *slot = g;
    }
    Ok(out)
}
