//! Maximum mean discrepancy with an RBF kernel.

use nnkernel::Tensor;

use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median pairwise Euclidean distance over the rows of all groups.
pub fn median_bandwidth(groups: &[&Tensor]) -> Result<f64> {
    let rows: Vec<&[f64]> = groups.iter().flat_map(|g| (0..g.rows()).map(move |r| g.row(r))).collect();
    let mut d: Vec<f64> = Vec::with_capacity(rows.len() * rows.len() / 2);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            d.push(sq_dist(rows[i], rows[j]).sqrt());
        }
    }
    if d.is_empty() {
        return Err(Error::validation("bandwidth needs at least two rows"));
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    let m = *m;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::validation(format!("degenerate RBF bandwidth {m}")));
    }
    Ok(m)
}

/// Biased squared MMD between two sample sets and its gradient wrt every
/// row of both.
pub fn mmd2(x: &Tensor, y: &Tensor, sigma: f64) -> (f64, Tensor, Tensor) {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut gx = Tensor::zeros(x.shape());
    let mut gy = Tensor::zeros(y.shape());
    let mut value = 0.0;
    let mut term = |a: &Tensor, b: &Tensor, w: f64, ga: &mut Tensor, gb: Option<&mut Tensor>| {
        let mut gb = gb;
        for i in 0..a.rows() {
            for j in 0..b.rows() {
                let k = (-sq_dist(a.row(i), b.row(j)) * inv).exp();
                value += w * k;
                // d k / d a_i = -k (a_i - b_j) / sigma^2
                let c = -w * k * 2.0 * inv;
                let (ai, bj) = (a.row(i), b.row(j));
                for (g, (p, q)) in ga.row_mut(i).iter_mut().zip(ai.iter().zip(bj)) {
                    *g += c * (p - q);
                }
                if let Some(gb) = gb.as_deref_mut() {
                    for (g, (p, q)) in gb.row_mut(j).iter_mut().zip(ai.iter().zip(bj)) {
                        *g -= c * (p - q);
                    }
                }
            }
        }
    };
    let (n, m) = (x.rows() as f64, y.rows() as f64);
    let mut gxx = Tensor::zeros(x.shape());
    term(x, x, 1.0 / (n * n), &mut gxx, None);
    let mut gyy = Tensor::zeros(y.shape());
    term(y, y, 1.0 / (m * m), &mut gyy, None);
    term(x, y, -2.0 / (n * m), &mut gx, Some(&mut gy));
    // within-set terms: each row appears as both arguments
    gxx.scale(2.0);
    gyy.scale(2.0);
    gx.add_assign(&gxx).expect("same shape");
    gy.add_assign(&gyy).expect("same shape");
    (value, gx, gy)
}

/// Mean of [`mmd2`] over all unordered pairs of groups, with gradients per
/// group. `sigma` defaults to the median heuristic on the pooled rows.
pub fn mmd_penalty(groups: &[&Tensor], sigma: Option<f64>) -> Result<(f64, Vec<Tensor>, f64)> {
    if groups.len() < 2 || groups.iter().any(|g| g.rows() < 2) {
        return Err(Error::validation("MMD needs at least two groups of at least two rows"));
    }
    let sigma = match sigma {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::validation(format!("degenerate RBF bandwidth {s}"))),
        None => median_bandwidth(groups)?,
    };
    let mut grads: Vec<Tensor> = groups.iter().map(|g| Tensor::zeros(g.shape())).collect();
    let pairs = groups.len() * (groups.len() - 1) / 2;
    let w = 1.0 / pairs as f64;
    let mut total = 0.0;
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let (v, mut ga, mut gb) = mmd2(groups[a], groups[b], sigma);
            total += w * v;
            ga.scale(w);
            gb.scale(w);
            grads[a].add_assign(&ga).expect("same shape");
            grads[b].add_assign(&gb).expect("same shape");
        }
    }
    Ok((total, grads, sigma))
}
