//! Independent oracles shared by the integration tests. Nothing here calls
//! into the crate's numerical code.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting. Returns
/// `None` if a pivot falls below `1e-12` times the largest entry.
pub fn gauss_solve(m: &Mat, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Mat = m.iter().zip(rhs).map(|(row, r)| {
        let mut row = row.clone();
        row.push(*r);
        row
    }).collect();
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..=n {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    Some(x)
}

/// Rank by elimination with full pivoting and a relative tolerance.
pub fn elimination_rank(m: &Mat, rel_tol: f64) -> usize {
    let mut a = m.clone();
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let scale = a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    let mut used_cols = vec![false; cols];
    for r in 0..rows {
        // pick the largest remaining entry in rows r.. and unused columns
        let mut best = (0.0, r, 0);
        for i in r..rows {
            for j in 0..cols {
                if !used_cols[j] && a[i][j].abs() > best.0 {
                    best = (a[i][j].abs(), i, j);
                }
            }
        }
        if best.0 <= rel_tol * scale {
            break;
        }
        a.swap(r, best.1);
        let c = best.2;
        used_cols[c] = true;
        for i in r + 1..rows {
            let f = a[i][c] / a[r][c];
            for j in 0..cols {
                a[i][j] -= f * a[r][j];
            }
        }
        rank += 1;
    }
    rank
}

pub fn mat_vec(m: &Mat, x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn qp_cost(h: &Mat, c: &[f64], x: &[f64]) -> f64 {
    let hx = mat_vec(h, x);
    0.5 * x.iter().zip(&hx).map(|(a, b)| a * b).sum::<f64>() + c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

/// Brute-force QP: tries every subset of constraints as the active set,
/// solves its KKT system and keeps the cheapest primal-dual feasible point.
pub fn brute_force_qp(h: &Mat, c: &[f64], a: &Mat, b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = c.len();
    let m = b.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let act: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = act.len();
        let size = n + k;
        let mut kkt = vec![vec![0.0; size]; size];
        let mut rhs = vec![0.0; size];
        for i in 0..n {
            for j in 0..n {
                kkt[i][j] = h[i][j];
            }
            rhs[i] = -c[i];
        }
        for (r, &ci) in act.iter().enumerate() {
            for j in 0..n {
                kkt[n + r][j] = a[ci][j];
                kkt[j][n + r] = a[ci][j];
            }
            rhs[n + r] = b[ci];
        }
        let Some(sol) = gauss_solve(&kkt, &rhs) else { continue };
        let x = sol[..n].to_vec();
        let lambda = &sol[n..];
        if lambda.iter().any(|l| *l < -1e-10) {
            continue;
        }
        let ax = mat_vec(a, &x);
        if ax.iter().zip(b).any(|(l, r)| *l > r + 1e-10) {
            continue;
        }
        let cost = qp_cost(h, c, &x);
        if best.as_ref().map_or(true, |(_, bc)| cost < *bc) {
            best = Some((x, cost));
        }
    }
    best
}

/// Random SPD problem with a known feasible point.
pub fn random_problem(r: &mut ChaCha8Rng, n: usize, m: usize) -> (Mat, Vec<f64>, Mat, Vec<f64>) {
    let l: Mat = (0..n).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            h[i][j] = (0..n).map(|k| l[i][k] * l[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
        }
    }
    let c: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
    let a: Mat = (0..m).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let feasible: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let af = mat_vec(&a, &feasible);
    let b: Vec<f64> = af.iter().map(|v| v + r.gen_range(0.0..0.5)).collect();
    (h, c, a, b)
}

/// Population mean and standard deviation, two passes.
pub fn two_pass_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

pub fn naive_rmse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n).sqrt()
}
