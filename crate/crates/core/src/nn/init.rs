use rand::Rng;
use rand_distr::StandardNormal;

/// Row-major `rows x cols` matrix with orthonormal columns (or rows, when wide), scaled by `gain`.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    let (tall, narrow) = (rows.max(cols), rows.min(cols));
    // q holds `narrow` column vectors of length `tall`
    let mut q: Vec<Vec<f64>> = (0..narrow).map(|_| (0..tall).map(|_| rng.sample(StandardNormal)).collect()).collect();
    for j in 0..narrow {
        for i in 0..j {
            let proj: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            let (head, tail) = q.split_at_mut(j);
            tail[0].iter_mut().zip(&head[i]).for_each(|(v, u)| *v -= proj * u);
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        q[j].iter_mut().for_each(|v| *v /= norm);
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain * if rows >= cols { q[c][r] } else { q[r][c] };
        }
    }
    out
}

/// `count` values uniform in `±1/sqrt(fan_in)`.
pub fn uniform_fan_in<R: Rng + ?Sized>(fan_in: usize, count: usize, rng: &mut R) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..count).map(|_| rng.random_range(-bound..bound)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn gram(rows: usize, cols: usize, m: &[f64], by_columns: bool) -> Vec<f64> {
        let n = if by_columns { cols } else { rows };
        let len = if by_columns { rows } else { cols };
        let at = |v: usize, i: usize| if by_columns { m[i * cols + v] } else { m[v * cols + i] };
        let mut g = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] = (0..len).map(|i| at(a, i) * at(b, i)).sum();
            }
        }
        g
    }

    #[test]
    fn orthogonal_columns_and_rows() {
        let mut rng = crate::SimRng::seed_from_u64(4);
        for (rows, cols, by_columns) in [(24, 8, true), (8, 24, false), (16, 16, true)] {
            let m = orthogonal(rows, cols, 2.0, &mut rng);
            let g = gram(rows, cols, &m, by_columns);
            let n = rows.min(cols);
            for a in 0..n {
                for b in 0..n {
                    let want = if a == b { 4.0 } else { 0.0 };
                    assert!((g[a * n + b] - want).abs() < 1e-10);
                }
            }
        }
    }
}
