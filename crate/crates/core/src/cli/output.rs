use std::fmt::Write as _;

use super::run::Row;

pub const CSV_HEADER: &str = "experiment,method,elements,h,mu,lambda,dofs,err_h1,err_h1_semi,err_l2,norm_u_h1,div_residual,constitutive_residual,solver_residual";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// The results table. `f64` Display is the shortest round-trip form.
pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let e = &r.report;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.method,
            r.elements,
            e.h,
            r.mu,
            r.lambda.as_f64(),
            e.dofs,
            opt(e.err_h1),
            opt(e.err_h1_semi),
            opt(e.err_l2),
            e.norm_u_h1,
            e.div_residual,
            e.constitutive_residual,
            e.solver_residual
        );
    }
    s
}

pub fn grid_to_csv(grid: &[[f64; 4]]) -> String {
    let mut s = String::from("x,y,u1,u2\n");
    for g in grid {
        let _ = writeln!(s, "{},{},{},{}", g[0], g[1], g[2], g[3]);
    }
    s
}

/// Minimal log-log line plot.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#,
        H - M,
        W - M,
        H - M,
        H - M
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">log10 {}</text>"#,
        W / 2.0,
        H - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {})">log10 {}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    if !pts.is_empty() {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in &pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let map = |(x, y): (f64, f64)| {
            (
                M + (x - x0) / (x1 - x0) * (W - 2.0 * M),
                H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M),
            )
        };
        let poly: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (a, b) = map(p);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            poly.join(" ")
        );
        for &p in &pts {
            let (a, b) = map(p);
            let _ = writeln!(s, r#"<circle cx="{a:.2}" cy="{b:.2}" r="3" fill="steelblue"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{M}" y="{}" font-size="11">{x0:.2}</text><text x="{}" y="{}" font-size="11" text-anchor="end">{x1:.2}</text>"#,
            H - M + 15.0,
            W - M,
            H - M + 15.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{y0:.2}</text><text x="{}" y="{}" font-size="11" text-anchor="end">{y1:.2}</text>"#,
            M - 4.0,
            H - M,
            M - 4.0,
            M + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed() {
        let s = loglog_svg("a<b", "x", "y", &[1.0, 10.0, 100.0], &[1.0, 0.1, 0.01]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("polyline") && s.contains("a&lt;b"));
        let empty = loglog_svg("t", "x", "y", &[], &[]);
        assert!(!empty.contains("polyline"));
    }

    #[test]
    fn float_formatting_round_trips() {
        for v in [1e-5, 0.1 + 0.2, 8.332e10, f64::INFINITY] {
            let s = v.to_string();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
