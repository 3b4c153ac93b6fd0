//! Winrate heatmaps as plain SVG.

use std::fmt::Write as _;

use crate::WinrateMatrix;

pub const NEUTRAL: [u8; 3] = [0xff, 0xff, 0xff];
/// Winrates above 0.5.
pub const POSITIVE: [u8; 3] = [0x21, 0x66, 0xac];
/// Winrates below 0.5.
pub const NEGATIVE: [u8; 3] = [0xb2, 0x18, 0x2b];

const CELL: usize = 12;
const MARGIN: usize = 4;

/// Diverging colormap: white at 0.5, linear toward blue at 1 and red at 0.
pub fn winrate_color(w: f64) -> [u8; 3] {
    let w = w.clamp(0.0, 1.0);
    let (t, target) = if w >= 0.5 {
        ((w - 0.5) * 2.0, POSITIVE)
    } else {
        ((0.5 - w) * 2.0, NEGATIVE)
    };
    let mut c = [0u8; 3];
    for k in 0..3 {
        let v = f64::from(NEUTRAL[k]) + t * (f64::from(target[k]) - f64::from(NEUTRAL[k]));
        c[k] = v.round() as u8;
    }
    c
}

pub fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

pub fn heatmap(w: &WinrateMatrix) -> String {
    let n = w.len();
    let side = 2 * MARGIN + n * CELL;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{side}" viewBox="0 0 {side} {side}">"#
    );
    let _ = writeln!(s, r##"<rect width="{side}" height="{side}" fill="#ffffff"/>"##);
    for i in 0..n {
        for j in 0..n {
            let v = w.get(i, j);
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}"><title>{} vs {}: {:.6}</title></rect>"#,
                MARGIN + j * CELL,
                MARGIN + i * CELL,
                hex(winrate_color(v)),
                xml_escape(&w.labels()[i]),
                xml_escape(&w.labels()[j]),
                v
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;

    #[test]
    fn midpoint_is_neutral() {
        assert_eq!(winrate_color(0.5), NEUTRAL);
        assert_eq!(hex(winrate_color(0.5)), "#ffffff");
        assert_eq!(winrate_color(1.0), POSITIVE);
        assert_eq!(winrate_color(0.0), NEGATIVE);
        // halfway to blue: 255 + 0.5 * (0x21 - 255) = 144
        assert_eq!(winrate_color(0.75)[0], 144);
    }

    #[test]
    fn one_rect_per_cell() {
        let w = WinrateMatrix::new(
            vec!["a".into(), "b".into()],
            Matrix::from_f64_rows(&[[0.5, 0.25], [0.75, 0.5]]),
            4,
        )
        .unwrap();
        let svg = heatmap(&w);
        assert_eq!(svg.matches("<title>").count(), 4);
        assert!(svg.contains("fill=\"#ffffff\"><title>a vs a: 0.500000"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
