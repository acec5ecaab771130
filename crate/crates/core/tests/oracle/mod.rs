//! Independent reference implementations used by the tests. Nothing here
//! calls into the library's numerical code.

#![allow(dead_code)]

/// Plain left-to-right Euclidean distance.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += (x - y) * (x - y);
    }
    s.sqrt()
}

fn components(members: &[usize], linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; members.len()];
    let mut out = Vec::new();
    for start in 0..members.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(a) = stack.pop() {
            comp.push(members[a]);
            for b in 0..members.len() {
                if !seen[b] && linked(members[a], members[b]) {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

struct RefCluster {
    points: Vec<usize>,
    stability: f64,
    children: Vec<RefCluster>,
}

/// Grows the cluster `points` born at distance `birth` (infinite for the
/// root) by lowering the threshold through every distinct edge weight.
fn grow(points: Vec<usize>, birth: f64, mr: &[Vec<f64>], min_cluster_size: usize) -> RefCluster {
    let lambda_birth = if birth.is_infinite() {
        0.0
    } else {
        1.0 / birth
    };
    let mut alive = points.clone();
    let mut stability = 0.0;
    let mut levels: Vec<f64> = Vec::new();
    for (x, &a) in points.iter().enumerate() {
        for &b in &points[x + 1..] {
            if mr[a][b] < birth {
                levels.push(mr[a][b]);
            }
        }
    }
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    for level in levels {
        // Components once every edge of weight >= level is removed.
        let comps = components(&alive, |a, b| mr[a][b] < level);
        if comps.len() == 1 {
            continue;
        }
        let lambda = 1.0 / level;
        let big: Vec<Vec<usize>> = comps
            .into_iter()
            .filter(|c| c.len() >= min_cluster_size)
            .collect();
        let leaving = alive.len() - big.iter().map(Vec::len).sum::<usize>();
        stability += leaving as f64 * (lambda - lambda_birth);
        match big.len() {
            0 => {
                return RefCluster {
                    points,
                    stability,
                    children: Vec::new(),
                }
            }
            1 => alive = big.into_iter().next().unwrap(),
            _ => {
                let kept: usize = big.iter().map(Vec::len).sum();
                stability += kept as f64 * (lambda - lambda_birth);
                let children = big
                    .into_iter()
                    .map(|c| grow(c, level, mr, min_cluster_size))
                    .collect();
                return RefCluster {
                    points,
                    stability,
                    children,
                };
            }
        }
    }
    // Remaining points are connected at every level; they leave when their
    // last edge (weight 0 cannot occur for distinct points) disappears.
    RefCluster {
        points,
        stability,
        children: Vec::new(),
    }
}

/// Returns (selected clusters, their total stability).
fn select(node: &RefCluster, is_root: bool) -> (Vec<Vec<usize>>, f64) {
    if node.children.is_empty() {
        return if is_root {
            (Vec::new(), 0.0)
        } else {
            (vec![node.points.clone()], node.stability)
        };
    }
    let mut chosen = Vec::new();
    let mut total = 0.0;
    for c in &node.children {
        let (sel, s) = select(c, false);
        chosen.extend(sel);
        total += s;
    }
    if !is_root && node.stability >= total {
        (vec![node.points.clone()], node.stability)
    } else {
        (chosen, total)
    }
}

/// Brute-force HDBSCAN with excess-of-mass selection (root never
/// selected). Points must be pairwise distinct. Clusters are numbered by
/// their lowest member index, noise is -1.
pub fn hdbscan_reference(
    points: &[Vec<f64>],
    min_cluster_size: usize,
    min_samples: usize,
) -> Vec<i64> {
    let n = points.len();
    let mut labels = vec![-1; n];
    if n < min_cluster_size {
        return labels;
    }
    let d: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| dist(a, b)).collect())
        .collect();
    let core: Vec<f64> = d
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.sort_by(f64::total_cmp);
            r[min_samples - 1]
        })
        .collect();
    let mr: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| d[a][b].max(core[a]).max(core[b])).collect())
        .collect();
    let root = grow((0..n).collect(), f64::INFINITY, &mr, min_cluster_size);
    let (mut clusters, _) = select(&root, true);
    clusters.sort_by_key(|c| c[0]);
    for (id, c) in clusters.iter().enumerate() {
        for &p in c {
            labels[p] = id as i64;
        }
    }
    labels
}

/// Population covariance of the rows.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n)
        .collect();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| {
                    rows.iter()
                        .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                        .sum::<f64>()
                        / n
                })
                .collect()
        })
        .collect()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Largest eigenvalue and a unit eigenvector of a symmetric matrix of size
/// 1, 2 or 3, in closed form (trigonometric solution of the cubic).
pub fn top_eigen(a: &[Vec<f64>]) -> (f64, Vec<f64>) {
    match a.len() {
        1 => (a[0][0], vec![1.0]),
        2 => {
            let (p, q, r) = (a[0][0], a[0][1], a[1][1]);
            let lambda = (p + r) / 2.0 + (((p - r) / 2.0).powi(2) + q * q).sqrt();
            let v = if q.abs() > 0.0 {
                vec![lambda - r, q]
            } else if p >= r {
                vec![1.0, 0.0]
            } else {
                vec![0.0, 1.0]
            };
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            (lambda, vec![v[0] / n, v[1] / n])
        }
        3 => {
            let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
            let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
            let p2 =
                (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let lambda = if p == 0.0 {
                q
            } else {
                let b: Vec<Vec<f64>> = (0..3)
                    .map(|i| {
                        (0..3)
                            .map(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p)
                            .collect()
                    })
                    .collect();
                let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
                    - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                    + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
                let r = (det / 2.0).clamp(-1.0, 1.0);
                q + 2.0 * p * (r.acos() / 3.0).cos()
            };
            let m: Vec<[f64; 3]> = (0..3)
                .map(|i| {
                    let mut row = [a[i][0], a[i][1], a[i][2]];
                    row[i] -= lambda;
                    row
                })
                .collect();
            let candidates = [cross(m[0], m[1]), cross(m[0], m[2]), cross(m[1], m[2])];
            let best = candidates
                .iter()
                .max_by(|x, y| {
                    let nx: f64 = x.iter().map(|v| v * v).sum();
                    let ny: f64 = y.iter().map(|v| v * v).sum();
                    nx.total_cmp(&ny)
                })
                .unwrap();
            let n = best.iter().map(|v| v * v).sum::<f64>().sqrt();
            (lambda, best.iter().map(|v| v / n).collect())
        }
        _ => panic!("closed form only for size 1, 2 or 3"),
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Mean CCS loss of the probe `sigmoid(w . x + b)` written out directly.
pub fn ccs_loss(w: &[f64], b: f64, pos: &[Vec<f64>], neg: &[Vec<f64>]) -> f64 {
    let p = |x: &[f64]| sigmoid(x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b);
    let mut total = 0.0;
    for (xp, xn) in pos.iter().zip(neg) {
        let (a, c) = (p(xp), p(xn));
        total += (a - (1.0 - c)).powi(2) + a.min(c).powi(2);
    }
    total / pos.len() as f64
}

/// Norm of the component of `v` orthogonal to span(`basis`), by modified
/// Gram-Schmidt.
pub fn out_of_span(v: &[f64], basis: &[Vec<f64>]) -> f64 {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut u = b.clone();
        for e in &q {
            let c: f64 = u.iter().zip(e).map(|(x, y)| x * y).sum();
            u.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
        }
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            q.push(u.iter().map(|x| x / n).collect());
        }
    }
    let mut r = v.to_vec();
    for e in &q {
        let c: f64 = r.iter().zip(e).map(|(x, y)| x * y).sum();
        r.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
    }
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}
