//! CSV and SVG serialization of rate series.

use std::fmt::Write as _;
use std::io::Write;

use qkd_ratelab::{RateSeries, RowStatus, SweepRow};

pub const CSV_HEADER: [&str; 9] = [
    "abscissa",
    "total_loss_db",
    "eta_a",
    "eta_b",
    "rate_signed",
    "rate_clamped",
    "mu_a",
    "mu_b",
    "status",
];

const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits in the style of C's `%.12g`.
///
/// The output depends only on the value, never on locale.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn csv_record(row: &SweepRow) -> [String; 9] {
    let status = match row.status {
        RowStatus::Ok => "ok",
        RowStatus::Invalid(_) => "invalid",
    };
    [
        fmt_num(row.abscissa),
        fmt_num(row.total_loss_db),
        fmt_num(row.eta_a),
        fmt_num(row.eta_b),
        opt(row.rate_signed),
        opt(row.rate_clamped()),
        opt(row.mu.map(|m| m.mu_a())),
        opt(row.mu.map(|m| m.mu_b())),
        status.to_string(),
    ]
}

pub fn write_csv<W: Write>(series: &RateSeries, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &series.rows {
        w.write_record(csv_record(row))?;
    }
    w.flush()?;
    Ok(())
}

/// A named curve for [`render_svg`].
pub struct Curve<'a> {
    pub label: String,
    pub series: &'a RateSeries,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
const LOG_Y_MIN: f64 = -8.0;
const LOG_Y_MAX: f64 = 1.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Log-y line plot, one polyline per curve. Points whose clamped rate is zero,
/// missing or below the plot floor split the polyline.
pub fn render_svg(title: &str, x_label: &str, curves: &[Curve<'_>]) -> String {
    let (x_min, x_max) = curves
        .iter()
        .flat_map(|c| c.series.rows.iter().map(|r| r.abscissa))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let (x_min, x_max) = if x_min < x_max { (x_min, x_max) } else { (0.0, 1.0) };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| MARGIN_TOP + (LOG_Y_MAX - y.log10()) / (LOG_Y_MAX - LOG_Y_MIN) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="14" text-anchor="middle">{}</text>"#, MARGIN_LEFT + plot_w / 2.0, escape(title));

    for decade in (LOG_Y_MIN as i32)..=(LOG_Y_MAX as i32) {
        let y = py(10f64.powi(decade));
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"#,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=5 {
        let x = x_min + (x_max - x_min) * f64::from(i) / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(x),
            MARGIN_TOP + plot_h + 18.0,
            fmt_num((x * 1e6).round() / 1e6)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">key rate (bits/use)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, curve) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, s: &mut String| {
            if segment.len() >= 2 {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    segment.join(" ")
                );
            }
            segment.clear();
        };
        for row in &curve.series.rows {
            match row.rate_clamped() {
                Some(r) if r >= 10f64.powf(LOG_Y_MIN) => {
                    let r = r.min(10f64.powf(LOG_Y_MAX));
                    segment.push(format!("{:.2},{:.2}", px(row.abscissa), py(r)));
                }
                _ => flush(&mut segment, &mut s),
            }
        }
        flush(&mut segment, &mut s);

        let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&curve.label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
