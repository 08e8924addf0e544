//! SVG rendering of reconstructions: accepted hexagons shaded by their
//! smallest test eigenvalue, the unit circle, and phantom outlines in black.

use std::fmt::Write;

use crate::engine::ReconResult;
use crate::phantom::{Phantom, Shape};
use crate::tiling::hex_tiling;
use crate::Result;

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Color of `t ∈ [0, 1]` on a five-stop viridis ramp.
pub fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let k = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - k as f64;
    let c: Vec<u8> = (0..3)
        .map(|i| (VIRIDIS[k][i] + f * (VIRIDIS[k + 1][i] - VIRIDIS[k][i])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn outline(shape: &Shape, out: &mut String) {
    match shape {
        Shape::Ball { center, radius } => {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.6}" cy="{:.6}" r="{:.6}" fill="none" stroke="black" stroke-width="0.008"/>"#,
                center[0], center[1], radius
            );
        }
        Shape::Polygon { vertices } => {
            let pts: Vec<String> = vertices.iter().map(|v| format!("{:.6},{:.6}", v[0], v[1])).collect();
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="none" stroke="black" stroke-width="0.008"/>"#,
                pts.join(" ")
            );
        }
    }
}

/// Renders a reconstruction. Eigenvalues of accepted cells are mapped
/// linearly from their minimum to their maximum.
pub fn render(result: &ReconResult, phantom: Option<&Phantom>, title: &str) -> Result<String> {
    let tiling = hex_tiling(result.metadata.hex_radius)?;
    let accepted: Vec<_> = result.cells.iter().filter(|c| c.accepted).collect();
    let (lo, hi) = accepted.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
        (lo.min(c.smallest_eigenvalue), hi.max(c.smallest_eigenvalue))
    });
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut out = String::new();
    out.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.1 -1.1 2.2 2.2\" width=\"600\" height=\"600\">\n",
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    out.push_str("<g transform=\"scale(1,-1)\">\n");
    out.push_str("<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"white\" stroke=\"#808080\" stroke-width=\"0.006\"/>\n");
    for c in &accepted {
        let Some(cell) = tiling.cells.get(c.index) else { continue };
        let pts: Vec<String> = tiling
            .vertices(cell)
            .iter()
            .map(|v| format!("{:.6},{:.6}", v[0], v[1]))
            .collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{}" stroke="none"><title>{:e}</title></polygon>"#,
            pts.join(" "),
            color((c.smallest_eigenvalue - lo) / span),
            c.smallest_eigenvalue
        );
    }
    if let Some(p) = phantom {
        for inclusion in &p.shapes {
            outline(&inclusion.shape, &mut out);
        }
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{HColumnCache, Method, ReconConfig, Reconstructor};
    use crate::mobius::Ball;
    use crate::spectral::{nd_ball, TruncationPlan};

    #[test]
    fn ramp_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(f64::NAN), "#440154");
    }

    #[test]
    fn renders_accepted_cells_and_outline() {
        let plan = TruncationPlan::new(16, 200).unwrap();
        let ball = Ball::from_xy(0.3, 0.0, 0.35).unwrap();
        let data = nd_ball(&ball, 4.0, &plan).unwrap().matrix;
        let config = ReconConfig {
            method: Method::Nonlinear,
            hex_radius: 0.1,
            plan,
            ..ReconConfig::default()
        };
        let result = Reconstructor::new(&config, &HColumnCache::in_memory())
            .unwrap()
            .run(&data)
            .unwrap();
        let phantom = Phantom::single_ball(&ball, 4.0);
        let svg = render(&result, Some(&phantom), "a <b>").unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a &lt;b&gt;"));
        assert_eq!(svg.matches("<polygon").count(), result.accepted_count());
        assert!(svg.contains(r#"r="0.350000" fill="none" stroke="black""#));
    }
}
