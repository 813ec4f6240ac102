use std::fmt::Write as _;

use crate::study::ConvergenceReport;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 70.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn marker(s: &mut String, kind: usize, x: f64, y: f64, color: &str) {
    let r = 4.5;
    let _ = match kind % 4 {
        0 => writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="none" stroke="{color}"/>"#),
        1 => writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{}" height="{}" fill="none" stroke="{color}"/>"#,
            x - r,
            y - r,
            2.0 * r,
            2.0 * r
        ),
        2 => writeln!(
            s,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="{color}"/>"#,
            x,
            y - r,
            x - r,
            y + r,
            x + r,
            y + r
        ),
        _ => writeln!(
            s,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="{color}"/>"#,
            x,
            y - r,
            x + r,
            y,
            x,
            y + r,
            x - r,
            y
        ),
    };
}

/// Self-contained log-log plot of the total error against `h`, one polyline per `t`,
/// with a guide triangle of slope `rate`.
pub fn error_plot(report: &ConvergenceReport, rate: f64, comment: &str) -> String {
    let mut ts: Vec<f64> = report.rows.iter().map(|r| r.t).collect();
    ts.dedup();
    let pts: Vec<(f64, f64)> =
        report.rows.iter().filter(|r| r.errors.total > 0.0).map(|r| (r.h.log10(), r.errors.total.log10())).collect();
    let mut s = String::new();
    let _ = writeln!(s, "<!-- {} -->", comment.trim_start_matches('#').trim());
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = ((x0 - 0.1).floor(), (x1 + 0.1).ceil());
    let (y0, y1) = ((y0 - 0.5).floor(), (y1 + 0.1).ceil());
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    for e in x0 as i32..=x1 as i32 {
        let x = px(e as f64);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, H - MARGIN);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"#, H - MARGIN + 18.0);
    }
    for e in y0 as i32..=y1 as i32 {
        let y = py(e as f64);
        let _ = writeln!(s, r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, W - MARGIN);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#, MARGIN - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#, W / 2.0, H - 25.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">total relative error</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (i, &t) in ts.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let line: Vec<(f64, f64)> = report
            .rows_for_t(t)
            .filter(|r| r.errors.total > 0.0)
            .map(|r| (px(r.h.log10()), py(r.errors.total.log10())))
            .collect();
        let path: Vec<String> = line.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, path.join(" "));
        for &(x, y) in &line {
            marker(&mut s, i, x, y, color);
        }
        let ly = MARGIN + 18.0 + 18.0 * i as f64;
        let lx = W - MARGIN - 110.0;
        marker(&mut s, i, lx, ly - 4.0, color);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">t = {t:e}</text>"#, lx + 12.0);
    }
    // Guide triangle below the finest points.
    let fine = pts.iter().cloned().fold((f64::MAX, 0.0), |a, p| if p.0 < a.0 { p } else { a });
    let dx = 0.3_f64.min((x1 - x0) / 4.0);
    let (ax, ay) = (fine.0, fine.1 - 0.3);
    let (bx, by) = (ax + dx, ay);
    let (cx, cy) = (bx, ay + rate * dx);
    let _ = writeln!(
        s,
        r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="black"/>"#,
        px(ax),
        py(ay),
        px(bx),
        py(by),
        px(cx),
        py(cy)
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{rate}</text>"#, px(bx) + 5.0, 0.5 * (py(by) + py(cy)) + 4.0);
    s.push_str("</svg>\n");
    s
}
