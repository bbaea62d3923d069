use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{hull_2d, HullOptions, LabeledPoint};
use crate::treespace::petersen::EDGES;
use crate::treespace::{OrthantId, Space};
use crate::TreePoint;

/// How the closed sample hull meets one quadrant of T4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrthantClass {
    Empty,
    /// Positive area.
    FullDim,
    /// Only axis or origin points, each touching a quadrant with positive area.
    BoundaryOnlySupported,
    /// Only axis or origin points, none next to a quadrant with positive area.
    BoundaryOnlyUnsupported,
    /// Zero area but reaching into the open quadrant (a segment or point
    /// off the axes).
    LowerDim,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    /// One entry per quadrant, in orthant index order.
    pub orthants: Vec<(OrthantId, OrthantClass)>,
    pub overall: bool,
}

impl ExistenceReport {
    pub fn class(&self, o: OrthantId) -> Option<OrthantClass> {
        self.orthants.iter().find(|(id, _)| *id == o).map(|(_, c)| *c)
    }
}

/// Where a zero-area piece sits on the quadrant boundary.
enum Boundary {
    Origin,
    Axis(u8),
    Interior,
}

fn boundary_of(poly: &[[f64; 2]], orthant: usize, scale: f64) -> Boundary {
    let tol = 1e-9 * scale;
    let on_u = poly.iter().all(|p| p[1].abs() <= tol);
    let on_v = poly.iter().all(|p| p[0].abs() <= tol);
    let (i, j) = EDGES[orthant];
    match (on_u, on_v) {
        (true, true) => Boundary::Origin,
        (true, false) => Boundary::Axis(i),
        (false, true) => Boundary::Axis(j),
        _ => Boundary::Interior,
    }
}

/// Classifies every quadrant against the sufficient condition for the MLE
/// to exist on T4.
pub fn check_existence(samples: &[TreePoint]) -> Result<ExistenceReport> {
    if samples.iter().any(|x| x.space() != Space::T4) {
        return Err(Error::SpaceMismatch);
    }
    if samples.len() < 3 {
        return Err(Error::TooFewPoints(format!("need at least 3 samples, got {}", samples.len())));
    }
    let pts: Vec<LabeledPoint<f64>> = samples.iter().map(|x| LabeledPoint::new(*x, 0.0)).collect();
    let hull = hull_2d(&pts, &HullOptions::default())?;
    let scale = samples.iter().fold(1.0f64, |s, x| s.max(x.norm()));
    let area_eps = 1e-12 * scale * scale;

    let mut classes: Vec<Option<OrthantClass>> = hull
        .orthants
        .iter()
        .map(|h| {
            if h.polygon.is_empty() {
                Some(OrthantClass::Empty)
            } else if h.area() > area_eps {
                Some(OrthantClass::FullDim)
            } else {
                None
            }
        })
        .collect();
    let full: Vec<bool> = classes.iter().map(|c| *c == Some(OrthantClass::FullDim)).collect();
    let any_full = full.iter().any(|&f| f);
    for (o, h) in hull.orthants.iter().enumerate() {
        if classes[o].is_some() {
            continue;
        }
        let supported = match boundary_of(&h.polygon, o, scale) {
            Boundary::Interior => {
                classes[o] = Some(OrthantClass::LowerDim);
                continue;
            }
            Boundary::Origin => any_full,
            Boundary::Axis(a) => EDGES.iter().enumerate().any(|(k, &(i, j))| full[k] && (i == a || j == a)),
        };
        classes[o] = Some(if supported {
            OrthantClass::BoundaryOnlySupported
        } else {
            OrthantClass::BoundaryOnlyUnsupported
        });
    }
    let orthants: Vec<(OrthantId, OrthantClass)> = classes
        .into_iter()
        .enumerate()
        .map(|(o, c)| (OrthantId::from_index(Space::T4, o), c.unwrap()))
        .collect();
    let overall = any_full
        && orthants
            .iter()
            .all(|(_, c)| !matches!(c, OrthantClass::LowerDim | OrthantClass::BoundaryOnlyUnsupported));
    Ok(ExistenceReport { orthants, overall })
}
