//! Minimal SVG renderers for the normalized heatmap and term grids.
//!
//! Colors use a linear ramp from white (share 0) to `#08306b` (share 1).
//! Hidden cells are drawn in light grey.

use std::fmt::Write;

use crate::graph::NormalizedMatrix;
use crate::Scalar;

const CELL: f64 = 28.0;
const LABEL_WIDTH: f64 = 220.0;
const DARK: (f64, f64, f64) = (8.0, 48.0, 107.0);

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Hex color for a share in `[0, 1]` on the white-to-navy ramp.
pub fn ramp(share: f64) -> String {
    let s = share.clamp(0.0, 1.0);
    let mix = |dark: f64| (255.0 + (dark - 255.0) * s).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(DARK.0), mix(DARK.1), mix(DARK.2))
}

/// Heatmap of row shares. `order` lists 1-based ids top-to-bottom and
/// left-to-right; `None` keeps id order. `labels[i]` names id `i + 1`.
pub fn heatmap_svg<T: Scalar>(m: &NormalizedMatrix<T>, labels: &[String], order: Option<&[usize]>) -> String {
    let ids: Vec<usize> = match order {
        Some(o) => o.to_vec(),
        None => (1..=m.dim).collect(),
    };
    let n = ids.len() as f64;
    let width = LABEL_WIDTH + n * CELL + 20.0;
    let height = 60.0 + n * CELL + 20.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    for (ci, &c) in ids.iter().enumerate() {
        let x = LABEL_WIDTH + ci as f64 * CELL + CELL / 2.0;
        let _ = writeln!(out, r#"<text x="{x}" y="50" text-anchor="middle">{c:02}</text>"#);
    }
    for (ri, &r) in ids.iter().enumerate() {
        let y = 60.0 + ri as f64 * CELL;
        let name = labels.get(r - 1).map(String::as_str).unwrap_or("");
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{r:02} {}</text>"#,
            LABEL_WIDTH - 6.0,
            y + CELL * 0.65,
            escape(name)
        );
        for (ci, &c) in ids.iter().enumerate() {
            let x = LABEL_WIDTH + ci as f64 * CELL;
            let share = m.share(r, c).to_f64().unwrap_or(0.0);
            let (fill, title) = match m.visible(r, c) {
                Some(v) => {
                    let v = v.to_f64().unwrap_or(0.0);
                    (ramp(v), format!("{:.1}%", v * 100.0))
                }
                None if share > 0.0 => ("#eeeeee".to_string(), "below floor".to_string()),
                None => ("#ffffff".to_string(), String::new()),
            };
            let _ = writeln!(
                out,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#cccccc"><title>{r:02}→{c:02} {title}</title></rect>"##
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Grid of ranked terms, one column per bucket and one block per row label.
/// Font size and shade scale with the score relative to the largest in the grid.
pub fn term_grid_svg(rows: &[(String, Vec<(String, Vec<(String, f64)>)>)]) -> String {
    const COL_WIDTH: f64 = 170.0;
    const LINE: f64 = 16.0;
    let max_score = rows
        .iter()
        .flat_map(|(_, cols)| cols.iter().flat_map(|(_, terms)| terms.iter().map(|t| t.1)))
        .fold(0.0f64, f64::max);
    let columns: Vec<&str> = rows
        .first()
        .map(|(_, cols)| cols.iter().map(|(c, _)| c.as_str()).collect())
        .unwrap_or_default();
    let block = rows
        .iter()
        .flat_map(|(_, cols)| cols.iter().map(|(_, t)| t.len()))
        .max()
        .unwrap_or(0) as f64
        * LINE
        + 24.0;
    let width = LABEL_WIDTH + columns.len() as f64 * COL_WIDTH;
    let height = 40.0 + rows.len() as f64 * block;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif">"#
    );
    for (ci, col) in columns.iter().enumerate() {
        let x = LABEL_WIDTH + ci as f64 * COL_WIDTH;
        let _ = writeln!(out, r#"<text x="{x}" y="24" font-size="13" font-weight="bold">{}</text>"#, escape(col));
    }
    for (ri, (label, cols)) in rows.iter().enumerate() {
        let top = 40.0 + ri as f64 * block;
        let _ = writeln!(out, r#"<text x="8" y="{}" font-size="12">{}</text>"#, top + LINE, escape(label));
        for (ci, (_, terms)) in cols.iter().enumerate() {
            let x = LABEL_WIDTH + ci as f64 * COL_WIDTH;
            for (ti, (term, score)) in terms.iter().enumerate() {
                let rel = if max_score > 0.0 { score / max_score } else { 0.0 };
                let size = 9.0 + 7.0 * rel;
                let _ = writeln!(
                    out,
                    r#"<text x="{x}" y="{}" font-size="{size:.1}" fill="{}">{}</text>"#,
                    top + LINE * (ti as f64 + 1.0),
                    ramp(0.35 + 0.65 * rel),
                    escape(term)
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalize_rows, AdjacencyMatrix};

    #[test]
    fn ramp_ends() {
        assert_eq!(ramp(0.0), "#ffffff");
        assert_eq!(ramp(1.0), "#08306b");
    }

    #[test]
    fn heatmap_has_one_rect_per_cell() {
        let m = AdjacencyMatrix::from_rows(vec![vec![1, 1], vec![0, 2]]).unwrap();
        let svg = heatmap_svg(&normalize_rows::<f64>(&m, 0.01), &["A & B".into(), "C".into()], Some(&[2, 1]));
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.contains("A &amp; B"));
        assert!(svg.find("02 C").unwrap() < svg.find("01 A").unwrap());
    }

    #[test]
    fn term_grid_lists_terms() {
        let rows = vec![(
            "Theme".to_string(),
            vec![("2005-2009".to_string(), vec![("alpha".to_string(), 2.0), ("beta".to_string(), 1.0)])],
        )];
        let svg = term_grid_svg(&rows);
        assert!(svg.contains(">alpha<") && svg.contains(">2005-2009<"));
    }
}
