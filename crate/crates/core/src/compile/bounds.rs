use serde::Serialize;
use thiserror::Error;

use crate::content::{GeoPoint, MERCATOR_MAX_LAT};

/// Spans narrower than this (degrees) are widened so single points still
/// produce a zoomable box.
pub const MIN_SPAN_DEG: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    pub fn contains(&self, p: &GeoPoint) -> bool {
        (self.min_lon..=self.max_lon).contains(&p.lon) && (self.min_lat..=self.max_lat).contains(&p.lat)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("no points to fit")]
    EmptyInput,
    #[error("padding fraction must be a finite non-negative number")]
    BadPadding,
}

/// Smallest lon/lat box holding `points`, widened to the minimum span and
/// then padded on every side by `padding_fraction` of its span. The result
/// is clamped to the Web Mercator domain.
pub fn fit_bounds(points: &[GeoPoint], padding_fraction: f64) -> Result<BBox, BoundsError> {
    if points.is_empty() {
        return Err(BoundsError::EmptyInput);
    }
    if !(padding_fraction >= 0.0 && padding_fraction.is_finite()) {
        return Err(BoundsError::BadPadding);
    }
    let fold = |f: fn(&GeoPoint) -> f64| {
        points.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let expand = |(lo, hi): (f64, f64), limit: f64| {
        let (lo, hi) = if hi - lo < MIN_SPAN_DEG {
            let mid = (lo + hi) / 2.0;
            (mid - MIN_SPAN_DEG / 2.0, mid + MIN_SPAN_DEG / 2.0)
        } else {
            (lo, hi)
        };
        let pad = (hi - lo) * padding_fraction;
        ((lo - pad).max(-limit), (hi + pad).min(limit))
    };
    let (min_lon, max_lon) = expand(fold(|p| p.lon), 180.0);
    let (min_lat, max_lat) = expand(fold(|p| p.lat), MERCATOR_MAX_LAT);
    Ok(BBox {
        min_lon,
        min_lat,
        max_lon,
        max_lat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_gets_floor_span() {
        let p = GeoPoint::new(-2.47, 41.77);
        let b = fit_bounds(&[p], 0.0).unwrap();
        assert!(((b.max_lon - b.min_lon) - MIN_SPAN_DEG).abs() < 1e-12);
        assert!(((b.max_lat - b.min_lat) - MIN_SPAN_DEG).abs() < 1e-12);
        assert!(((b.min_lon + b.max_lon) / 2.0 - p.lon).abs() < 1e-12);
        assert!(((b.min_lat + b.max_lat) / 2.0 - p.lat).abs() < 1e-12);
    }

    #[test]
    fn zero_padding_spans_points_exactly() {
        let pts = [GeoPoint::new(-2.48, 41.76), GeoPoint::new(-2.46, 41.78)];
        let b = fit_bounds(&pts, 0.0).unwrap();
        assert_eq!(b, BBox { min_lon: -2.48, min_lat: 41.76, max_lon: -2.46, max_lat: 41.78 });
    }

    #[test]
    fn errors() {
        assert_eq!(fit_bounds(&[], 0.1), Err(BoundsError::EmptyInput));
        assert_eq!(fit_bounds(&[GeoPoint::new(0.0, 0.0)], -1.0), Err(BoundsError::BadPadding));
    }

    #[test]
    fn clamped_to_domain() {
        let b = fit_bounds(&[GeoPoint::new(-180.0, -85.0), GeoPoint::new(180.0, 85.0)], 0.5).unwrap();
        assert_eq!((b.min_lon, b.max_lon), (-180.0, 180.0));
        assert_eq!((b.min_lat, b.max_lat), (-MERCATOR_MAX_LAT, MERCATOR_MAX_LAT));
    }
}
