//! Coordinates of a spiking cluster and their center point.
//!
//! The center is the plain arithmetic mean of latitudes and of longitudes.
//! Points straddling the antimeridian (lon +179 and -179) therefore average
//! to lon 0; that is the documented behavior, not a bug to be patched here.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::debug;

use crate::article::ArticleKey;
use crate::wikigraph::{WikiClient, WikiError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoordinates")]
pub struct Coordinates {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct RawCoordinates {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawCoordinates> for Coordinates {
    type Error = GeoError;

    fn try_from(raw: RawCoordinates) -> Result<Self, Self::Error> {
        Coordinates::new(raw.lat, raw.lon)
    }
}

impl Coordinates {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Coordinates attributed to the article they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub coordinates: Coordinates,
    pub source: ArticleKey,
}

/// Queries the article and each language version; versions without
/// coordinates, or whose lookup fails, contribute nothing.
pub fn fetch_cluster_coordinates(
    key: &ArticleKey,
    langlinks: &[ArticleKey],
    client: &dyn WikiClient,
) -> Vec<GeoPoint> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for k in std::iter::once(key).chain(langlinks.iter()) {
        if !seen.insert(k) {
            continue;
        }
        match client.coordinates(k) {
            Ok(Some(c)) => out.push(GeoPoint {
                coordinates: c,
                source: k.clone(),
            }),
            Ok(None) => {}
            Err(WikiError::NotFound(_)) => {}
            Err(e) => debug!(key = %k, error = %e, "coordinate lookup failed"),
        }
    }
    out
}

/// Arithmetic mean of latitudes and longitudes; `None` for no points.
///
/// Values are summed in sorted order so the result does not depend on input
/// order, and clamped to the input range to absorb rounding.
pub fn centroid(points: &[GeoPoint]) -> Option<Coordinates> {
    if points.is_empty() {
        return None;
    }
    let lat = mean(points.iter().map(|p| p.coordinates.lat));
    let lon = mean(points.iter().map(|p| p.coordinates.lon));
    Some(Coordinates { lat, lon })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    // Neumaier summation
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in &v {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    let m = (sum + comp) / v.len() as f64;
    m.clamp(v[0], v[v.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wikigraph::{FixturePage, FixtureWikiClient};

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint {
            coordinates: Coordinates::new(lat, lon).unwrap(),
            source: "en:X".parse().unwrap(),
        }
    }

    fn key(s: &str) -> ArticleKey {
        s.parse().unwrap()
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&[pt(10.0, 20.0)]), Some(Coordinates::new(10.0, 20.0).unwrap()));
        assert_eq!(centroid(&[pt(10.0, 0.0), pt(-10.0, 0.0)]), Some(Coordinates::new(0.0, 0.0).unwrap()));
        assert_eq!(
            centroid(&[pt(0.0, 10.0), pt(0.0, 20.0), pt(0.0, 60.0)]),
            Some(Coordinates::new(0.0, 30.0).unwrap())
        );
        assert_eq!(centroid(&[]), None);
    }

    #[test]
    fn antimeridian_is_naive() {
        let c = centroid(&[pt(0.0, 179.0), pt(0.0, -179.0)]).unwrap();
        assert_eq!(c.lon(), 0.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(Coordinates::new(91.0, 0.0).is_err());
        assert!(Coordinates::new(0.0, -180.5).is_err());
        assert!(serde_json::from_str::<Coordinates>(r#"{"lat": 100, "lon": 0}"#).is_err());
    }

    fn client() -> FixtureWikiClient {
        let c = |lat, lon| Some(Coordinates::new(lat, lon).unwrap());
        FixtureWikiClient::from_pages([
            (key("de:Pazifische_Taifunsaison_2014"), FixturePage::default()),
            (key("en:2014_Pacific_typhoon_season"), FixturePage::default()),
            (key("zh:2014年太平洋颱風季"), FixturePage { coordinates: c(15.0, 135.0), ..Default::default() }),
            (key("en:A"), FixturePage { coordinates: c(1.0, 1.0), ..Default::default() }),
            (key("de:A"), FixturePage { coordinates: c(2.0, 2.0), ..Default::default() }),
            (key("fr:A"), FixturePage { coordinates: c(3.0, 3.0), ..Default::default() }),
        ])
    }

    #[test]
    fn only_local_version_has_coordinates() {
        let pts = fetch_cluster_coordinates(
            &key("de:Pazifische_Taifunsaison_2014"),
            &[key("en:2014_Pacific_typhoon_season"), key("zh:2014年太平洋颱風季")],
            &client(),
        );
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].source, key("zh:2014年太平洋颱風季"));
    }

    #[test]
    fn no_coordinates_anywhere() {
        let pts = fetch_cluster_coordinates(&key("en:2014_Pacific_typhoon_season"), &[key("xx:Missing")], &client());
        assert!(pts.is_empty());
    }

    #[test]
    fn query_order_preserved() {
        let pts = fetch_cluster_coordinates(&key("fr:A"), &[key("en:A"), key("de:A")], &client());
        let sources: Vec<String> = pts.iter().map(|p| p.source.to_string()).collect();
        assert_eq!(sources, vec!["fr:A", "en:A", "de:A"]);
    }
}
