//! Ordinary least squares via Householder QR.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::{Error, Result};

/// Columns whose QR pivot falls below this fraction of the largest pivot are
/// treated as collinear.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("rows have different lengths"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Covariance {
    #[default]
    Classical,
    /// Heteroskedasticity-consistent sandwich with the n/(n-k) correction.
    Hc1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub coefficient_names: Vec<String>,
    pub estimates: Vec<f64>,
    /// NaN when there are no residual degrees of freedom.
    pub standard_errors: Vec<f64>,
    pub n: usize,
    /// Centered R²; defined as 0 when the response is constant.
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficient_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.estimates[i])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits `response ≈ design · β` by least squares.
///
/// `names` labels the design columns and is used to report collinearity.
pub fn ols_fit(design: &Matrix, response: &[f64], names: &[String], covariance: Covariance) -> Result<RegressionResult> {
    let (n, k) = (design.rows(), design.cols());
    if response.len() != n {
        return Err(Error::DimensionMismatch("response length differs from design rows"));
    }
    if names.len() != k {
        return Err(Error::DimensionMismatch("one name per design column required"));
    }
    if k == 0 {
        return Err(Error::DimensionMismatch("design has no columns"));
    }
    if n < k {
        return Err(Error::InsufficientData("fewer observations than coefficients"));
    }
    if design.data.iter().chain(response).any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange("design and response must be finite"));
    }

    // column-major working copy, reduced in place to R
    let mut a: Vec<Vec<f64>> = (0..k).map(|c| design.column(c)).collect();
    let mut qty = response.to_vec();
    let mut diag = vec![0.0; k];
    for j in 0..k {
        let norm = sqrt(a[j][j..].iter().map(|v| v * v).sum());
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v = a[j][j..].to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        if vv == 0.0 {
            diag[j] = a[j][j];
            continue;
        }
        for col in a.iter_mut().skip(j) {
            let f = 2.0 * dot(&v, &col[j..]) / vv;
            for (x, vi) in col[j..].iter_mut().zip(&v) {
                *x -= f * vi;
            }
        }
        let f = 2.0 * dot(&v, &qty[j..]) / vv;
        for (x, vi) in qty[j..].iter_mut().zip(&v) {
            *x -= f * vi;
        }
        diag[j] = a[j][j];
    }

    let largest = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if let Some(j) = (0..k).find(|&j| largest == 0.0 || diag[j].abs() <= PIVOT_TOLERANCE * largest) {
        return Err(Error::RankDeficient {
            column: names[j].clone(),
        });
    }
    let r = |i: usize, c: usize| a[c][i];

    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = ((i + 1)..k).map(|c| r(i, c) * beta[c]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }

    // R⁻¹ column by column; (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ
    let mut rinv = vec![vec![0.0; k]; k];
    for c in 0..k {
        for i in (0..=c).rev() {
            let e = if i == c { 1.0 } else { 0.0 };
            let s: f64 = ((i + 1)..=c).map(|m| r(i, m) * rinv[m][c]).sum();
            rinv[i][c] = (e - s) / r(i, i);
        }
    }
    let xtx_inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&rinv[i], &rinv[j])).collect())
        .collect();

    let residuals: Vec<f64> = (0..n).map(|i| response[i] - dot(design.row(i), &beta)).collect();
    let ssr = dot(&residuals, &residuals);
    let dof = n - k;

    let variances: Vec<f64> = if dof == 0 {
        vec![f64::NAN; k]
    } else {
        match covariance {
            Covariance::Classical => {
                let sigma2 = ssr / dof as f64;
                (0..k).map(|j| sigma2 * xtx_inv[j][j]).collect()
            }
            Covariance::Hc1 => {
                let mut meat = vec![vec![0.0; k]; k];
                for (i, e) in residuals.iter().enumerate() {
                    let x = design.row(i);
                    let w = e * e;
                    for p in 0..k {
                        for q in 0..k {
                            meat[p][q] += w * x[p] * x[q];
                        }
                    }
                }
                let scale = n as f64 / dof as f64;
                (0..k)
                    .map(|j| {
                        let bj = &xtx_inv[j];
                        let mut v = 0.0;
                        for p in 0..k {
                            v += bj[p] * dot(&meat[p], bj);
                        }
                        scale * v
                    })
                    .collect()
            }
        }
    };

    let mean = response.iter().sum::<f64>() / n as f64;
    let tss: f64 = response.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r_squared = if tss == 0.0 { 0.0 } else { 1.0 - ssr / tss };

    Ok(RegressionResult {
        coefficient_names: names.to_vec(),
        estimates: beta,
        standard_errors: variances
            .into_iter()
            .map(|v| if v.is_nan() { v } else { sqrt(v.max(0.0)) })
            .collect(),
        n,
        r_squared,
        residuals,
    })
}
