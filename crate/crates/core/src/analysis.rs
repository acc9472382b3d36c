//! Summaries of field histories: peak tracking and stabilization time.

use serde::{Deserialize, Serialize};

use crate::field::FieldProfile;
use crate::geometry::RadialMesh;

/// Location and magnitude of the field maximum at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPoint {
    pub t: f64,
    pub e_max: f64,
    pub node: usize,
    pub thickness_fraction: f64,
}

pub fn peak_track<'a>(mesh: &RadialMesh, profiles: impl IntoIterator<Item = &'a FieldProfile>) -> Vec<PeakPoint> {
    profiles
        .into_iter()
        .map(|f| {
            let (e_max, node) = f.max_abs();
            PeakPoint {
                t: f.t,
                e_max,
                node,
                thickness_fraction: mesh.geometry.thickness_fraction(mesh.nodes[node]),
            }
        })
        .collect()
}

/// First time after which the peak stays within ±1 node of its position for
/// at least `hold` seconds. The search starts once the peak has left its
/// initial node by more than one node, so a slow start is not mistaken for a
/// settled profile. `None` if the track never settles for that long.
pub fn stabilization_time(track: &[PeakPoint], hold: f64) -> Option<f64> {
    let start = track.first()?.node;
    let departed = track.iter().position(|p| p.node.abs_diff(start) > 1)?;
    for (k, p) in track.iter().enumerate().skip(departed) {
        if track.last()?.t - p.t < hold {
            return None;
        }
        let settled = track[k..]
            .iter()
            .take_while(|q| q.t - p.t <= hold)
            .all(|q| q.node.abs_diff(p.node) <= 1);
        if settled {
            return Some(p.t);
        }
    }
    None
}

/// Largest relative change of the field between two profiles, normalised by
/// the peak of the first.
pub fn relative_field_change(a: &FieldProfile, b: &FieldProfile) -> f64 {
    let scale = a.max_abs().0.max(f64::MIN_POSITIVE);
    a.e.iter().zip(&b.e).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(t: f64, node: usize) -> PeakPoint {
        PeakPoint {
            t,
            e_max: 1.0,
            node,
            thickness_fraction: 0.0,
        }
    }

    #[test]
    fn settles_when_peak_stops_moving() {
        let nodes = [0, 3, 6, 9, 10, 11, 11, 10, 11, 11, 11];
        let track: Vec<_> = nodes
            .iter()
            .enumerate()
            .map(|(k, n)| point(k as f64 * 1800.0, *n))
            .collect();
        // from t = 4·1800 s the peak stays within 10..=12 (node 10 ±1)
        assert_eq!(stabilization_time(&track, 3600.0), Some(4.0 * 1800.0));
    }

    #[test]
    fn slow_start_is_not_settled() {
        let nodes = [0, 0, 0, 1, 4, 8, 9, 9, 9];
        let track: Vec<_> = nodes
            .iter()
            .enumerate()
            .map(|(k, n)| point(k as f64 * 1800.0, *n))
            .collect();
        assert_eq!(stabilization_time(&track, 3600.0), Some(5.0 * 1800.0));
    }

    #[test]
    fn short_track_never_settles() {
        let track = vec![point(0.0, 0), point(1800.0, 0)];
        assert_eq!(stabilization_time(&track, 3600.0), None);
    }
}
