//! Dense reference constructions used as test oracles.
//!
//! Everything here materializes full matrices straight from the block
//! definitions and never touches the implicit operator code paths.

#![allow(dead_code)]

pub type Dense = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Dense {
    vec![vec![0.0; c]; r]
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let k = b.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = zeros(n, m);
    for i in 0..n {
        for p in 0..k {
            let aip = a[i][p];
            if aip == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aip * b[p][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    let r = a.len();
    let c = a.first().map_or(0, Vec::len);
    let mut out = zeros(c, r);
    for i in 0..r {
        for j in 0..c {
            out[j][i] = a[i][j];
        }
    }
    out
}

pub fn scale(a: &Dense, s: f64) -> Dense {
    a.iter().map(|r| r.iter().map(|v| v * s).collect()).collect()
}

/// `[[A, e], [eᵀ, 0]]`
pub fn augment(a: &Dense) -> Dense {
    let r = a.len();
    let c = a.first().map_or(0, Vec::len);
    let mut out = zeros(r + 1, c + 1);
    for i in 0..r {
        out[i][..c].copy_from_slice(&a[i]);
        out[i][c] = 1.0;
    }
    for j in 0..c {
        out[r][j] = 1.0;
    }
    out
}

pub fn row_normalize(a: &Dense) -> Dense {
    a.iter()
        .map(|row| {
            let s: f64 = row.iter().sum();
            assert!(s > 0.0, "zero row in dense oracle");
            row.iter().map(|v| v / s).collect()
        })
        .collect()
}

/// Places blocks (row-major list of `(i, j, block)`) into one dense matrix.
pub fn assemble(sizes: &[usize], blocks: &[(usize, usize, Dense)]) -> Dense {
    let mut offsets = vec![0];
    for s in sizes {
        offsets.push(offsets.last().unwrap() + s);
    }
    let n = *offsets.last().unwrap();
    let mut out = zeros(n, n);
    for (bi, bj, b) in blocks {
        for (r, row) in b.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                out[offsets[*bi] + r][offsets[*bj] + c] += v;
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Kind {
    Stiff,
    Static,
    Heap,
    SimpleHeap,
}

/// Weighted block matrix `A` (without the dummy) of Static / Heap / SimpleHeap.
pub fn weighted_block_matrix(kind: Kind, alpha: &Dense, c: &Dense, fs: &[Dense]) -> Dense {
    let f = fs.len();
    let n_c = c.len();
    let mut sizes: Vec<usize> = fs.iter().map(|m| m.first().map_or(0, Vec::len)).collect();
    sizes.push(n_c);
    let mut blocks = Vec::new();
    for i in 0..=f {
        for j in 0..=f {
            let b = if i < f && j < f {
                let fit = transpose(&fs[i]);
                match kind {
                    Kind::SimpleHeap => continue,
                    Kind::Static if i != j => matmul(&fit, &fs[j]),
                    _ => matmul(&matmul(&fit, c), &fs[j]),
                }
            } else if i < f {
                transpose(&fs[i])
            } else if j < f {
                fs[j].clone()
            } else {
                c.clone()
            };
            blocks.push((i, j, scale(&b, alpha[i][j])));
        }
    }
    assemble(&sizes, &blocks)
}

/// Row-stochastic `P` of a weighted model, global dummy last.
pub fn weighted_p(kind: Kind, alpha: &Dense, c: &Dense, fs: &[Dense]) -> Dense {
    row_normalize(&augment(&weighted_block_matrix(kind, alpha, c, fs)))
}

/// Row-stochastic `P` of the Stiff model: per-block augmentation and
/// normalization, coupled by `gamma`.
pub fn stiff_p(gamma: &Dense, c: &Dense, fs: &[Dense]) -> Dense {
    let f = fs.len();
    let c_hat = augment(c);
    let f_hat: Vec<Dense> = fs.iter().map(augment).collect();
    let mut sizes: Vec<usize> = f_hat.iter().map(|m| m[0].len()).collect();
    sizes.push(c_hat.len());
    let mut blocks = Vec::new();
    for i in 0..=f {
        for j in 0..=f {
            let b = if i < f && j < f {
                let fit = transpose(&f_hat[i]);
                if i == j {
                    matmul(&matmul(&fit, &c_hat), &f_hat[i])
                } else {
                    matmul(&fit, &f_hat[j])
                }
            } else if i < f {
                transpose(&f_hat[i])
            } else if j < f {
                f_hat[j].clone()
            } else {
                c_hat.clone()
            };
            blocks.push((i, j, scale(&row_normalize(&b), gamma[i][j])));
        }
    }
    assemble(&sizes, &blocks)
}

pub fn one_class_p(c: &Dense) -> Dense {
    row_normalize(&augment(c))
}

/// Left Perron vector of a row-stochastic matrix by lazy power iteration
/// `x ← x (I + P) / 2`, run until `‖xP − x‖₁ ≤ tol`.
pub fn perron(p: &Dense, tol: f64) -> Vec<f64> {
    let n = p.len();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..2_000_000 {
        let xp = left(&x, p);
        let resid: f64 = xp.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        if resid <= tol {
            let s: f64 = xp.iter().sum();
            return xp.iter().map(|v| v / s).collect();
        }
        let next: Vec<f64> = xp.iter().zip(&x).map(|(a, b)| 0.5 * (a + b)).collect();
        let s: f64 = next.iter().sum();
        x = next.iter().map(|v| v / s).collect();
    }
    panic!("dense power iteration did not reach {tol}");
}

pub fn left(x: &[f64], a: &Dense) -> Vec<f64> {
    let m = a.first().map_or(0, Vec::len);
    let mut y = vec![0.0; m];
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            y[j] += x[i] * v;
        }
    }
    y
}

pub fn right(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

/// Gaussian elimination with partial pivoting for `A x = b`.
pub fn solve(a: &Dense, b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut m: Dense = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[r][col].abs().partial_cmp(&m[s][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        let d = m[col][col];
        assert!(d.abs() > 1e-300, "singular system in dense oracle");
        for r in col + 1..n {
            let factor = m[r][col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[r][k] -= factor * m[col][k];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for k in r + 1..n {
            s -= m[r][k] * x[k];
        }
        x[r] = s / m[r][r];
    }
    x
}

/// Every state reaches every other (strong connectivity of the pattern).
pub fn is_irreducible(p: &Dense) -> bool {
    let n = p.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let edge = if forward { p[i][j] } else { p[j][i] };
                if edge > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Random binary citation matrix (no self-loops) and feature matrices whose
/// attribute columns each have at least one item.
pub fn random_instance<R: rand::Rng>(
    rng: &mut R,
    n_items: usize,
    feature_sizes: &[usize],
    cite_prob: f64,
    attr_prob: f64,
) -> (Dense, Vec<Dense>) {
    let mut c = zeros(n_items, n_items);
    for i in 0..n_items {
        for j in 0..n_items {
            if i != j && rng.gen::<f64>() < cite_prob {
                c[i][j] = 1.0;
            }
        }
    }
    let fs = feature_sizes
        .iter()
        .map(|&n_k| {
            let mut f = zeros(n_items, n_k);
            for row in f.iter_mut() {
                for v in row.iter_mut() {
                    if rng.gen::<f64>() < attr_prob {
                        *v = 1.0;
                    }
                }
            }
            for j in 0..n_k {
                if f.iter().all(|row| row[j] == 0.0) {
                    let i = rng.gen_range(0..n_items);
                    f[i][j] = 1.0;
                }
            }
            f
        })
        .collect();
    (c, fs)
}
