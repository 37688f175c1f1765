//! Newton polygons: lower convex hulls of coefficient valuations.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::scalar::PadicScalar;
use super::PadicError;

/// One edge of a Newton polygon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonSegment {
    #[serde(with = "ratio_serde")]
    pub slope: Ratio<i64>,
    /// Horizontal length of the edge.
    pub multiplicity: u32,
}

/// Lower convex hull of `{(n, v(c_n))}`; slopes strictly increase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    #[serde(with = "vertex_serde")]
    pub vertices: Vec<(u32, Ratio<i64>)>,
    pub segments: Vec<NewtonSegment>,
}

fn cross(o: (i64, Ratio<i64>), a: (i64, Ratio<i64>), b: (i64, Ratio<i64>)) -> Ratio<i64> {
    (a.1 - o.1) * Ratio::from(b.0 - o.0) - (b.1 - o.1) * Ratio::from(a.0 - o.0)
}

impl NewtonPolygon {
    /// Hull of arbitrary points with distinct abscissae (sorted or not).
    pub fn from_points(points: &[(u32, Ratio<i64>)]) -> Self {
        let mut pts: Vec<(i64, Ratio<i64>)> = points.iter().map(|&(n, v)| (n as i64, v)).collect();
        pts.sort_by_key(|p| p.0);
        let mut hull: Vec<(i64, Ratio<i64>)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let o = hull[hull.len() - 2];
                let a = hull[hull.len() - 1];
                // drop `a` unless it lies strictly below the chord o–p
                if cross(o, a, p) >= Ratio::from(0) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let segments = hull
            .windows(2)
            .map(|w| NewtonSegment {
                slope: (w[1].1 - w[0].1) / Ratio::from(w[1].0 - w[0].0),
                multiplicity: (w[1].0 - w[0].0) as u32,
            })
            .collect();
        NewtonPolygon { vertices: hull.into_iter().map(|(n, v)| (n as u32, v)).collect(), segments }
    }

    /// Newton polygon of `Σ c_n T^n`, with `c_0` a unit. Coefficients that
    /// are zero to precision are skipped.
    pub fn from_coefficients(coeffs: &[PadicScalar]) -> Result<Self, PadicError> {
        let pts: Vec<(u32, Ratio<i64>)> = coeffs
            .iter()
            .enumerate()
            .filter_map(|(n, c)| c.valuation().map(|v| (n as u32, v)))
            .collect();
        if pts.is_empty() {
            return Err(PadicError::AllCoefficientsZero);
        }
        match coeffs[0].valuation() {
            Some(v) if v == Ratio::from(0) => {}
            _ => return Err(PadicError::NonUnitConstantTerm),
        }
        Ok(Self::from_points(&pts))
    }

    /// Slopes repeated by multiplicity, ascending.
    pub fn slope_multiset(&self) -> Vec<Ratio<i64>> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat(s.slope).take(s.multiplicity as usize))
            .collect()
    }

    /// Sum of multiplicities.
    pub fn degree(&self) -> u32 {
        self.segments.iter().map(|s| s.multiplicity).sum()
    }

    /// Total multiplicity of slopes `≤ h` (or `< h` when `strict`).
    pub fn mass_below(&self, h: Ratio<i64>, strict: bool) -> u32 {
        self.segments
            .iter()
            .filter(|s| if strict { s.slope < h } else { s.slope <= h })
            .map(|s| s.multiplicity)
            .sum()
    }

    pub fn has_slope(&self, h: Ratio<i64>) -> bool {
        self.segments.iter().any(|s| s.slope == h)
    }

    /// Value of the polygon at abscissa `n` (within the vertex range).
    pub fn value_at(&self, n: u32) -> Option<Ratio<i64>> {
        let w = self.vertices.windows(2).find(|w| w[0].0 <= n && n <= w[1].0)?;
        let t = Ratio::from((n - w[0].0) as i64);
        let s = (w[1].1 - w[0].1) / Ratio::from((w[1].0 - w[0].0) as i64);
        Some(w[0].1 + s * t)
    }
}

pub(crate) mod ratio_serde {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
        format_ratio(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<i64>, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio(&s).map_err(serde::de::Error::custom)
    }

    pub fn format_ratio(r: &Ratio<i64>) -> String {
        if *r.denom() == 1 {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        }
    }

    pub fn parse_ratio(s: &str) -> Result<Ratio<i64>, String> {
        let s = s.trim();
        let parse = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("bad rational {s:?}: {e}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse(d)?;
                if d == 0 {
                    return Err(format!("zero denominator in {s:?}"));
                }
                Ok(Ratio::new(parse(n)?, d))
            }
            None => Ok(Ratio::from(parse(s)?)),
        }
    }
}

mod vertex_serde {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::ratio_serde::{format_ratio, parse_ratio};

    pub fn serialize<S: Serializer>(v: &[(u32, Ratio<i64>)], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<(u32, String)> = v.iter().map(|(n, r)| (*n, format_ratio(r))).collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(u32, Ratio<i64>)>, D::Error> {
        let raw: Vec<(u32, String)> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|(n, s)| parse_ratio(&s).map(|r| (n, r)).map_err(serde::de::Error::custom))
            .collect()
    }
}
