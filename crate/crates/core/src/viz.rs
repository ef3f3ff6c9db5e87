//! Static 2D rendering of balls (and optionally projected points) as SVG.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::embedding::BallSpace;
use crate::error::{Error, Result};
use crate::linalg::{self, check_dims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    /// The space is already two-dimensional.
    Identity,
    /// Top two principal components of the selected centres.
    Pca,
    /// Centres have no spread; first two coordinate axes.
    UnitAxes,
}

/// Affine map `v ↦ (a₁·(v − m), a₂·(v − m))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2d {
    pub kind: ProjectionKind,
    pub mean: Vec<f64>,
    pub axes: [Vec<f64>; 2],
}

impl Projection2d {
    pub fn project(&self, v: &[f64]) -> Result<[f64; 2]> {
        check_dims(self.mean.len(), v.len())?;
        let dot = |axis: &[f64]| -> f64 { axis.iter().zip(v).zip(&self.mean).map(|((a, x), m)| a * (x - m)).sum() };
        Ok([dot(&self.axes[0]), dot(&self.axes[1])])
    }
}

fn unit_axes(dim: usize) -> [Vec<f64>; 2] {
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    if dim > 0 {
        a[0] = 1.0;
    }
    if dim > 1 {
        b[1] = 1.0;
    }
    [a, b]
}

/// Fits the projection for `points` (all of one dimension).
pub fn fit_projection(points: &[&[f64]]) -> Result<Projection2d> {
    let dim = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::Config("no points to project".into()))?;
    for p in points {
        check_dims(dim, p.len())?;
    }
    if dim == 2 {
        return Ok(Projection2d {
            kind: ProjectionKind::Identity,
            mean: vec![0.0; 2],
            axes: unit_axes(2),
        });
    }
    let mean = linalg::mean(points).expect("non-empty");
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for p in points {
        let d = nalgebra::DVector::from_iterator(dim, p.iter().zip(&mean).map(|(x, m)| x - m));
        cov += &d * d.transpose();
    }
    cov /= points.len() as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    if dim < 2 || !(eig.eigenvalues[order[0]] > 1e-12) {
        return Ok(Projection2d {
            kind: ProjectionKind::UnitAxes,
            mean,
            axes: unit_axes(dim),
        });
    }
    let axis = |k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = eig.eigenvectors.column(order[k]).iter().copied().collect();
        // Sign convention: the largest-magnitude component is positive.
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    Ok(Projection2d {
        kind: ProjectionKind::Pca,
        mean,
        axes: [axis(0), axis(1)],
    })
}

/// One ball as drawn: projected centre and unprojected radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

pub fn layout_balls(space: &BallSpace, selected: &[String]) -> Result<(Projection2d, Vec<Circle>)> {
    if selected.is_empty() {
        return Err(Error::Config("select at least one concept to render".into()));
    }
    let balls = selected
        .iter()
        .map(|name| space.ball_by_name(name))
        .collect::<Result<Vec<_>>>()?;
    let centres: Vec<&[f64]> = balls.iter().map(|b| b.centre).collect();
    let projection = fit_projection(&centres)?;
    let circles = selected
        .iter()
        .zip(&balls)
        .map(|(name, b)| {
            let [x, y] = projection.project(b.centre)?;
            Ok(Circle {
                name: name.clone(),
                x,
                y,
                r: b.radius,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((projection, circles))
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// SVG of the selected balls, plus `points` (label, vector in ball space)
/// drawn as dots colored by label.
pub fn render_balls_2d(space: &BallSpace, selected: &[String], points: &[(String, Vec<f64>)]) -> Result<String> {
    const SIZE: f64 = 640.0;
    const MARGIN: f64 = 40.0;
    const LEGEND: f64 = 90.0;

    let (projection, circles) = layout_balls(space, selected)?;
    let dots = points
        .iter()
        .map(|(label, h)| Ok((label.as_str(), projection.project(h)?)))
        .collect::<Result<Vec<_>>>()?;

    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in &circles {
        lo_x = lo_x.min(c.x - c.r);
        hi_x = hi_x.max(c.x + c.r);
        lo_y = lo_y.min(c.y - c.r);
        hi_y = hi_y.max(c.y + c.r);
    }
    for (_, [x, y]) in &dots {
        lo_x = lo_x.min(*x);
        hi_x = hi_x.max(*x);
        lo_y = lo_y.min(*y);
        hi_y = hi_y.max(*y);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let sx = |x: f64| MARGIN + (x - lo_x) * scale;
    let sy = |y: f64| SIZE - MARGIN - (y - lo_y) * scale;

    let mut labels: Vec<&str> = selected.iter().map(String::as_str).collect();
    for (l, _) in &dots {
        if !labels.contains(l) {
            labels.push(l);
        }
    }
    let color = |name: &str| PALETTE[labels.iter().position(|l| *l == name).unwrap_or(0) % PALETTE.len()];

    let mut svg = String::new();
    let height = SIZE + LEGEND;
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{height}" viewBox="0 0 {SIZE} {height}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{SIZE}" height="{height}" fill="white"/>"#).unwrap();
    for c in &circles {
        let col = color(&c.name);
        writeln!(
            svg,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="{col}" fill-opacity="0.08" stroke="{col}" stroke-width="1.5"><title>{}</title></circle>"#,
            sx(c.x),
            sy(c.y),
            c.r * scale,
            escape(&c.name)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="middle" fill="{col}">{}</text>"#,
            sx(c.x),
            sy(c.y + c.r) - 3.0,
            escape(&c.name)
        )
        .unwrap();
    }
    for (label, [x, y]) in &dots {
        writeln!(
            svg,
            r#"<circle cx="{:.3}" cy="{:.3}" r="2.5" fill="{}"><title>{}</title></circle>"#,
            sx(*x),
            sy(*y),
            color(label),
            escape(label)
        )
        .unwrap();
    }
    let method = match projection.kind {
        ProjectionKind::Identity => "identity (space is 2D)",
        ProjectionKind::Pca => "top-2 principal components of the selected centres",
        ProjectionKind::UnitAxes => "first two axes (centres have no spread)",
    };
    let y0 = SIZE + 20.0;
    writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{y0}" font-family="sans-serif" font-size="12">Projection: {method}.</text>"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="12">Radii are drawn at their true length, so containment seen in 2D is indicative only.</text>"#,
        y0 + 18.0
    )
    .unwrap();
    if !dots.is_empty() {
        writeln!(
            svg,
            r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="12">Dots: projected examples, colored by true label.</text>"#,
            y0 + 36.0
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(dim: usize, centres: Vec<Vec<f64>>, radii: Vec<f64>) -> BallSpace {
        let names = (0..centres.len()).map(|i| format!("c{i}")).collect();
        BallSpace::new(dim, names, centres, radii).unwrap()
    }

    #[test]
    fn two_dimensional_space_is_identity() {
        let s = space(2, vec![vec![0.5, -1.0], vec![2.0, 3.0]], vec![1.0, 0.5]);
        let (p, circles) = layout_balls(&s, &["c0".into(), "c1".into()]).unwrap();
        assert_eq!(p.kind, ProjectionKind::Identity);
        assert_eq!((circles[1].x, circles[1].y, circles[1].r), (2.0, 3.0, 0.5));
    }

    #[test]
    fn single_concept_sits_at_origin() {
        let s = space(4, vec![vec![1.0, 2.0, 3.0, 4.0]], vec![0.3]);
        let (p, circles) = layout_balls(&s, &["c0".into()]).unwrap();
        assert_eq!(p.kind, ProjectionKind::UnitAxes);
        assert_eq!((circles[0].x, circles[0].y), (0.0, 0.0));
    }

    #[test]
    fn empty_selection_rejected() {
        let s = space(2, vec![vec![0.0, 0.0]], vec![1.0]);
        assert!(render_balls_2d(&s, &[], &[]).is_err());
        assert!(render_balls_2d(&s, &["nope".into()], &[]).is_err());
    }

    #[test]
    fn principal_axis_follows_spread() {
        let s = space(
            3,
            vec![vec![-2.0, 0.0, 0.1], vec![2.0, 0.0, -0.1], vec![0.0, 0.5, 0.0]],
            vec![0.1; 3],
        );
        let (p, _) = layout_balls(&s, &s.names().to_vec()).unwrap();
        assert_eq!(p.kind, ProjectionKind::Pca);
        assert!(p.axes[0][0] > 0.99);
    }
}
