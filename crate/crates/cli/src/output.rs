//! CSV tables and Matrix Market export.

use std::fmt::Write as _;
use std::io::{self, Write};

use symfd_core::assembly::CsrMatrix;
use symfd_core::harness::{ConvergenceRow, ProbeReport};

pub const CONVERGENCE_HEADER: &str = "h,error_inf,order,iterations,relres,seconds";

fn opt(v: Option<f64>, prec: usize) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.prec$}"),
        _ => "-".into(),
    }
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4e}")
    } else {
        "-".into()
    }
}

/// One CSV row per level; the order is `-` where it is undefined.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.3}",
            r.h,
            sci(r.error_inf),
            opt(r.order, 2),
            r.iterations,
            sci(r.relative_residual),
            r.seconds
        );
    }
    s
}

pub fn probe_csv(report: &ProbeReport) -> String {
    let mut s = String::from("n,h,residual\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{},{}", r.n, r.h, sci(r.residual));
    }
    s
}

/// `m,k_m` for `m = -1, 0, ...`.
pub fn kdim_csv(values: &[usize]) -> String {
    let mut s = String::from("m,k_m\n");
    for (i, k) in values.iter().enumerate() {
        let _ = writeln!(s, "{},{k}", i as i64 - 1);
    }
    s
}

/// Writes the lower triangle in Matrix Market `coordinate real symmetric`
/// form. Fails if the matrix is not bitwise symmetric.
pub fn write_matrix_market<W: Write>(m: &CsrMatrix, out: &mut W) -> io::Result<()> {
    if let Some((i, j)) = m.asymmetry() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("matrix is not symmetric at ({i}, {j})"),
        ));
    }
    let lower: usize = (0..m.n)
        .map(|i| m.row(i).0.iter().filter(|&&j| j as usize <= i).count())
        .sum();
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{} {} {}", m.n, m.n, lower)?;
    for i in 0..m.n {
        let (cols, vals) = m.row(i);
        for (&j, v) in cols.iter().zip(vals) {
            if j as usize <= i {
                writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_is_dash() {
        let rows = [
            ConvergenceRow {
                n: 2,
                h: 0.5,
                error_inf: 0.1,
                order: None,
                iterations: 3,
                relative_residual: 1e-9,
                seconds: 0.0,
            },
            ConvergenceRow {
                n: 4,
                h: 0.25,
                error_inf: 0.00625,
                order: Some(4.0),
                iterations: 5,
                relative_residual: 2e-9,
                seconds: 0.0,
            },
        ];
        let csv = convergence_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CONVERGENCE_HEADER);
        assert_eq!(lines[1], "0.5,1.0000e-1,-,3,1.0000e-9,0.000");
        assert_eq!(lines[2], "0.25,6.2500e-3,4.00,5,2.0000e-9,0.000");
    }

    #[test]
    fn matrix_market_round_trip() {
        let m = CsrMatrix {
            n: 2,
            row_ptr: vec![0, 2, 4],
            col_idx: vec![0, 1, 0, 1],
            values: vec![2.0, -1.0, -1.0, 2.0],
        };
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("%%MatrixMarket matrix coordinate real symmetric")
        );
        assert_eq!(lines.next(), Some("2 2 3"));
        let entries: Vec<(usize, usize, f64)> = lines
            .map(|l| {
                let f: Vec<&str> = l.split_whitespace().collect();
                (
                    f[0].parse().unwrap(),
                    f[1].parse().unwrap(),
                    f[2].parse().unwrap(),
                )
            })
            .collect();
        assert_eq!(entries, vec![(1, 1, 2.0), (2, 1, -1.0), (2, 2, 2.0)]);
    }
}
