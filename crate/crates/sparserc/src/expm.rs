//! Matrix exponential via scaling-and-squaring with a truncated Taylor
//! series.
//!
//! The acyclicity penalty only ever exponentiates elementwise squares
//! A ⊙ A, which are entrywise nonnegative, so the series has no
//! cancellation and plain Taylor summation is accurate. Scaling keeps the
//! argument norm at or below one so the series converges in a few dozen
//! terms.

use ndarray::Array2;

/// Max-row-sum (infinity) norm.
fn inf_norm(m: &Array2<f64>) -> f64 {
    m.rows()
        .into_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Computes exp(M) for a square matrix.
pub fn expm(m: &Array2<f64>) -> Array2<f64> {
    let d = m.nrows();
    assert_eq!(d, m.ncols(), "expm requires a square matrix");
    if d == 0 {
        return Array2::zeros((0, 0));
    }

    let norm = inf_norm(m);
    let squarings = if norm > 1.0 {
        norm.log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings as i32);

    // Taylor series of exp(scaled); terminates once the next term is
    // negligible at f64 precision.
    let mut result = Array2::eye(d);
    let mut term = Array2::eye(d);
    for k in 1..=120 {
        term = term.dot(&scaled) / k as f64;
        result += &term;
        let max_entry = term.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if max_entry < 1e-16 {
            break;
        }
    }

    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}
