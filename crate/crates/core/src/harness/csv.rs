use std::io::{self, Write};

use super::grid::GridRow;

pub const SUMMARY_HEADER: &str = "n,estimator,mean,bias,variance,rmse,mc_se,n_reps";

/// 17 significant digits, enough to round-trip any f64.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn format_n(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format_real(n)
    }
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn write_summary_csv<W: Write>(mut out: W, rows: &[GridRow]) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        let s = &r.summary;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_n(r.n),
            escape(&s.estimator_id),
            format_real(s.mean),
            format_real(s.bias),
            format_real(s.variance),
            format_real(s.rmse),
            format_real(s.mc_se),
            s.n_reps
        )?;
    }
    Ok(())
}

/// Free-form table for experiments whose rows are not estimator summaries.
pub fn write_table_csv<W: Write>(mut out: W, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    writeln!(out, "{}", header.iter().map(|h| escape(h)).collect::<Vec<_>>().join(","))?;
    for row in rows {
        writeln!(out, "{}", row.iter().map(|f| escape(f)).collect::<Vec<_>>().join(","))?;
    }
    Ok(())
}
