use std::fmt::Write as _;
use std::io::{self, Write};

use nalgebra::DMatrix;

use super::{LinearKind, SdpProblem, Sense};

/// Writes the feasibility problem in sparse SDPA format with a zero objective.
///
/// Every matrix inequality becomes one block `Σ x_k F_k − F_0 ⪰ 0` with the
/// strictness margin folded into `F_0`; scalar constraints share one diagonal
/// block, equalities appear as a pair of opposite inequalities.
pub fn write_sdpa<W: Write>(problem: &SdpProblem, mut w: W) -> io::Result<()> {
    let n = problem.n_vars();
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for c in &problem.linear {
        let coeffs: Vec<(usize, f64)> = c.coeffs.iter().map(|(id, a)| (id.0, *a)).collect();
        let neg: Vec<(usize, f64)> = coeffs.iter().map(|(k, a)| (*k, -a)).collect();
        match c.kind {
            LinearKind::Ge => rows.push((coeffs, c.margin - c.constant)),
            LinearKind::Le => rows.push((neg, c.constant + c.margin)),
            LinearKind::Eq => {
                rows.push((coeffs, -c.constant));
                rows.push((neg, c.constant));
            }
        }
    }

    let mut sizes: Vec<String> = problem.lmis.iter().map(|l| l.expr.dim().to_string()).collect();
    if !rows.is_empty() {
        sizes.push(format!("-{}", rows.len()));
    }

    writeln!(w, "\"iqcrate feasibility problem, {} variables", n)?;
    writeln!(w, "{n}")?;
    writeln!(w, "{}", sizes.len())?;
    writeln!(w, "{}", sizes.join(" "))?;
    writeln!(w, "{}", vec!["0"; n].join(" "))?;

    let mut body = String::new();
    for (b, lmi) in problem.lmis.iter().enumerate() {
        let blk = b + 1;
        let sign = match lmi.sense {
            Sense::PsdGe => 1.0,
            Sense::NsdLe => -1.0,
        };
        let mut f0 = -&lmi.expr.constant * sign;
        for d in 0..f0.nrows() {
            f0[(d, d)] += lmi.margin;
        }
        push_upper(&mut body, 0, blk, &f0);
        for (k, fk) in &lmi.expr.terms {
            push_upper(&mut body, k + 1, blk, &(fk * sign));
        }
    }
    if !rows.is_empty() {
        let blk = problem.lmis.len() + 1;
        for (r, (coeffs, f0)) in rows.iter().enumerate() {
            if *f0 != 0.0 {
                let _ = writeln!(body, "0 {blk} {0} {0} {1:e}", r + 1, f0);
            }
            for (k, a) in coeffs {
                if *a != 0.0 {
                    let _ = writeln!(body, "{} {blk} {1} {1} {2:e}", k + 1, r + 1, a);
                }
            }
        }
    }
    w.write_all(body.as_bytes())
}

fn push_upper(out: &mut String, mat: usize, blk: usize, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{mat} {blk} {} {} {v:e}", i + 1, j + 1);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::AffineExpr;
    use nalgebra::dmatrix;

    #[test]
    fn header_and_entries() {
        let mut p = SdpProblem::new();
        let x = p.scalar("x");
        let mut e = AffineExpr::zeros(2);
        e.add_scalar(x, &dmatrix![1.0, 0.0; 0.0, 2.0]).unwrap();
        e.add_constant(&dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        p.add_lmi("a", e, Sense::PsdGe, 0.0).unwrap();
        p.add_linear("x <= 3", vec![(x, 1.0)], -3.0, LinearKind::Le, 0.0).unwrap();
        let mut buf = Vec::new();
        write_sdpa(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "2");
        assert_eq!(lines[3], "2 -1");
        assert_eq!(lines[4], "0");
        assert!(lines.contains(&"0 1 1 2 -1e0"));
        assert!(lines.contains(&"1 1 2 2 2e0"));
        assert!(lines.contains(&"0 2 1 1 -3e0"));
        assert!(lines.contains(&"1 2 1 1 -1e0"));
    }
}
