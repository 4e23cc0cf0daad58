use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    /// Wrapped to `(-pi, pi]`.
    pub heading: f64,
    pub kappa: f64,
}

/// Closed centerline sampled by arc length. The last sample repeats the first
/// pose at `s = length`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPath {
    samples: Vec<TrackSample>,
}

/// Where a point sits relative to the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the closest centerline point, in `[0, length)`.
    pub s: f64,
    /// Signed offset, positive to the left of the direction of travel.
    pub e_y: f64,
    pub heading: f64,
    pub kappa: f64,
    /// Index of the sample starting the closest segment.
    pub segment: usize,
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Two straights joined by counter-clockwise semicircles. The first straight
/// starts at the origin heading along +x.
pub fn make_oval(straight_length: f64, corner_radius: f64, sample_spacing: f64) -> Result<TrackPath> {
    for (name, v) in [
        ("straight_length", straight_length),
        ("corner_radius", corner_radius),
        ("sample_spacing", sample_spacing),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    let (l, r) = (straight_length, corner_radius);
    let arc = PI * r;
    let total = 2.0 * l + 2.0 * arc;
    let n = (total / sample_spacing).round().max(4.0) as usize;
    let pose = |s: f64| -> (f64, f64, f64, f64) {
        if s < l {
            (s, 0.0, 0.0, 0.0)
        } else if s < l + arc {
            let th = (s - l) / r;
            (l + r * th.sin(), r - r * th.cos(), th, 1.0 / r)
        } else if s < 2.0 * l + arc {
            (l - (s - l - arc), 2.0 * r, PI, 0.0)
        } else {
            let th = (s - 2.0 * l - arc) / r;
            (-r * th.sin(), r + r * th.cos(), PI + th, 1.0 / r)
        }
    };
    let mut samples: Vec<TrackSample> = (0..n)
        .map(|i| {
            let s = total * i as f64 / n as f64;
            let (x, y, h, k) = pose(s);
            TrackSample { s, x, y, heading: wrap_angle(h), kappa: k }
        })
        .collect();
    let first = samples[0];
    samples.push(TrackSample { s: total, ..first });
    Ok(TrackPath { samples })
}

impl TrackPath {
    pub fn from_samples(samples: Vec<TrackSample>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::data("track needs at least three samples"));
        }
        if samples.windows(2).any(|w| !(w[0].s < w[1].s)) {
            return Err(Error::data("track arc length must be strictly increasing"));
        }
        let (a, b) = (samples[0], samples[samples.len() - 1]);
        if (a.x - b.x).hypot(a.y - b.y) > 1e-6 {
            return Err(Error::data("track is not closed"));
        }
        Ok(TrackPath { samples })
    }

    pub fn samples(&self) -> &[TrackSample] {
        &self.samples
    }

    pub fn length(&self) -> f64 {
        self.samples.last().unwrap().s - self.samples[0].s
    }

    /// Number of distinct samples (the closing duplicate excluded).
    pub fn len(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.len() as f64
    }

    /// Index of the sample at or before arc length `s`, wrapping.
    pub fn index_at(&self, s: f64) -> usize {
        let s = self.samples[0].s + (s - self.samples[0].s).rem_euclid(self.length());
        (self.samples.partition_point(|p| p.s <= s) - 1).min(self.len() - 1)
    }

    fn project_segment(&self, i: usize, x: f64, y: f64) -> (f64, Projection) {
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((x - a.x) * dx + (y - a.y) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (cx, cy) = (a.x + t * dx, a.y + t * dy);
        let dist2 = (x - cx).powi(2) + (y - cy).powi(2);
        let heading = wrap_angle(a.heading + t * wrap_angle(b.heading - a.heading));
        let e_y = -(x - cx) * heading.sin() + (y - cy) * heading.cos();
        let s = (a.s + t * (b.s - a.s) - self.samples[0].s).rem_euclid(self.length()) + self.samples[0].s;
        let kappa = if t < 0.5 { a.kappa } else { b.kappa };
        (dist2, Projection { s, e_y, heading, kappa, segment: i })
    }

    /// Closest centerline point. With a `hint` segment only a window around it
    /// is searched.
    pub fn project(&self, x: f64, y: f64, hint: Option<usize>) -> Projection {
        let n = self.len();
        let candidates: Box<dyn Iterator<Item = usize>> = match hint {
            Some(h) => {
                let w = 40.min(n / 2);
                Box::new((0..=2 * w).map(move |k| (h + n + k - w) % n))
            }
            None => Box::new(0..n),
        };
        candidates
            .map(|i| self.project_segment(i, x, y))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("track has segments")
            .1
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for s in &self.samples {
            w.serialize(s).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let samples = r
            .deserialize()
            .collect::<std::result::Result<Vec<TrackSample>, _>>()
            .map_err(|e| Error::csv(path, e))?;
        Self::from_samples(samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oval_geometry() {
        let t = make_oval(400.0, 200.0, 1.0).unwrap();
        assert!((t.length() - (800.0 + 2.0 * PI * 200.0)).abs() < 1e-9);
        let corner = t.samples().iter().filter(|s| s.kappa != 0.0);
        assert!(corner.clone().all(|s| s.kappa == 0.005));
        assert!(corner.count() > 1000);
        let (a, b) = (t.samples()[0], *t.samples().last().unwrap());
        assert!((a.x - b.x).hypot(a.y - b.y) <= 1e-6);
        assert!((a.heading - b.heading).abs() <= 1e-12);
        assert!(make_oval(0.0, 200.0, 1.0).is_err());
    }

    #[test]
    fn curvature_matches_heading_rate() {
        let t = make_oval(300.0, 150.0, 0.5).unwrap();
        for w in t.samples().windows(2) {
            let dh = wrap_angle(w[1].heading - w[0].heading) / (w[1].s - w[0].s);
            // only the samples straddling a straight/corner joint differ
            if w[0].kappa == w[1].kappa {
                assert!((dh - w[0].kappa).abs() < 1e-9, "{dh} vs {}", w[0].kappa);
            }
        }
    }

    #[test]
    fn projection_signs() {
        let t = make_oval(400.0, 200.0, 1.0).unwrap();
        let p = t.project(100.0, 0.5, None);
        assert!((p.s - 100.0).abs() < 1e-9);
        assert!((p.e_y - 0.5).abs() < 1e-9);
        assert_eq!(p.heading, 0.0);
        // inside of the first corner is to the left
        let th: f64 = 0.7;
        let p = t.project(400.0 + 198.0 * th.sin(), 200.0 - 198.0 * th.cos(), Some(t.index_at(400.0 + 200.0 * th)));
        assert!((p.e_y - 2.0).abs() < 1e-3, "{}", p.e_y);
        assert!((p.s - (400.0 + 200.0 * th)).abs() < 0.1);
        assert_eq!(p.kappa, 0.005);
    }

    #[test]
    fn index_wraps() {
        let t = make_oval(100.0, 50.0, 1.0).unwrap();
        assert_eq!(t.index_at(0.0), 0);
        assert_eq!(t.index_at(t.length()), 0);
        assert_eq!(t.index_at(-0.5), t.len() - 1);
    }

    #[test]
    fn csv_round_trip() {
        let t = make_oval(100.0, 50.0, 2.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("track.csv");
        t.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("s,x,y,heading,kappa\n"));
        assert_eq!(TrackPath::read_csv(&p).unwrap(), t);
    }
}
