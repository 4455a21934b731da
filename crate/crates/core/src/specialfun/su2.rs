use num_complex::Complex64;

use crate::error::{domain, Result};

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    row
}

/// Coefficients of (a z + b)^n, lowest degree first.
fn binomial_expand(a: Complex64, b: Complex64, n: usize) -> Vec<Complex64> {
    let binom = binomial_row(n);
    (0..=n)
        .map(|k| a.powi(k as i32) * b.powi((n - k) as i32) * binom[k])
        .collect()
}

fn check_unit(alpha: Complex64, beta: Complex64) -> Result<()> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    if (n - 1.0).abs() > 1e-10 {
        return domain(format!("su2: |α|²+|β|² = {n}, not 1"));
    }
    Ok(())
}

/// Column q of the (2l+1)-dimensional representation at k[α,β]: entry
/// p + l is the coefficient of z^{l−p} in (αz − β̄)^{l−q}(βz + ᾱ)^{l+q}.
pub fn su2_column(l: i64, q: i64, alpha: Complex64, beta: Complex64) -> Result<Vec<Complex64>> {
    if l < 0 || q.abs() > l {
        return domain(format!("su2: need |q| ≤ l, got l = {l}, q = {q}"));
    }
    check_unit(alpha, beta)?;
    let first = binomial_expand(alpha, -beta.conj(), (l - q) as usize);
    let second = binomial_expand(beta, alpha.conj(), (l + q) as usize);
    let mut product = vec![Complex64::new(0.0, 0.0); (2 * l + 1) as usize];
    for (i, x) in first.iter().enumerate() {
        for (j, y) in second.iter().enumerate() {
            product[i + j] += x * y;
        }
    }
    // degree l − p sits at index l − p; reorder by p
    Ok((-l..=l).map(|p| product[(l - p) as usize]).collect())
}

pub fn su2_coeff(l: i64, p: i64, q: i64, alpha: Complex64, beta: Complex64) -> Result<Complex64> {
    if p.abs() > l {
        return domain(format!("su2: need |p| ≤ l, got l = {l}, p = {p}"));
    }
    Ok(su2_column(l, q, alpha, beta)?[(p + l) as usize])
}

/// The full matrix, row p + l, column q + l.
pub fn su2_matrix(l: i64, alpha: Complex64, beta: Complex64) -> Result<Vec<Vec<Complex64>>> {
    let size = (2 * l + 1) as usize;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    for q in -l..=l {
        for (row, v) in su2_column(l, q, alpha, beta)?.into_iter().enumerate() {
            m[row][(q + l) as usize] = v;
        }
    }
    Ok(m)
}
