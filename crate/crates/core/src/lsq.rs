//! Dense least squares via Householder QR with column pivoting.
//!
//! Matrices are stored column-major as one `Vec<f64>` per column; the
//! problems here are tall and thin (n rows, a handful of columns).

/// Householder QR of a tall matrix. After factorization the upper triangle
/// of `cols` holds `R`; reflector `i` acts on rows `i..`.
struct HouseholderQr {
    cols: Vec<Vec<f64>>,
    reflectors: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

impl HouseholderQr {
    fn factor(mut cols: Vec<Vec<f64>>, pivot: bool) -> Self {
        let p = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        let steps = p.min(n);
        let mut perm: Vec<usize> = (0..p).collect();
        let mut reflectors = Vec::with_capacity(steps);
        for k in 0..steps {
            if pivot {
                let norm = |c: &Vec<f64>| c[k..].iter().map(|x| x * x).sum::<f64>();
                let best = (k..p)
                    .map(|j| (j, norm(&cols[j])))
                    .fold((k, -1.0), |b, (j, v)| if v > b.1 { (j, v) } else { b });
                cols.swap(k, best.0);
                perm.swap(k, best.0);
            }
            let x = &cols[k][k..];
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut v = x.to_vec();
            if norm == 0.0 {
                reflectors.push(v);
                continue;
            }
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            if vnorm2 > 0.0 {
                for col in cols.iter_mut().skip(k + 1) {
                    reflect(&v, vnorm2, &mut col[k..]);
                }
            }
            cols[k][k] = alpha;
            for t in cols[k][k + 1..].iter_mut() {
                *t = 0.0;
            }
            reflectors.push(v);
        }
        Self {
            cols,
            reflectors,
            perm,
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.cols[j][i]
    }

    fn apply_qt(&self, b: &mut [f64]) {
        for (k, v) in self.reflectors.iter().enumerate() {
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            if vnorm2 > 0.0 {
                reflect(v, vnorm2, &mut b[k..]);
            }
        }
    }

    fn apply_q(&self, b: &mut [f64]) {
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            if vnorm2 > 0.0 {
                reflect(v, vnorm2, &mut b[k..]);
            }
        }
    }
}

#[inline]
fn reflect(v: &[f64], vnorm2: f64, x: &mut [f64]) {
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let s = 2.0 * dot / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    pub rank: usize,
}

impl LeastSquares {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.solution.len()
    }
}

/// Relative size below which a pivot of `R` counts as zero.
const RANK_TOL: f64 = 1e-11;

/// Minimizes `‖A x − b‖₂` with `A` given column-major. Rank-deficient
/// systems get the minimum-norm minimizer.
pub fn least_squares(cols: Vec<Vec<f64>>, b: &[f64]) -> LeastSquares {
    let p = cols.len();
    let qr = HouseholderQr::factor(cols, true);
    let mut qtb = b.to_vec();
    qr.apply_qt(&mut qtb);
    let steps = p.min(b.len());
    let lead = if steps > 0 { qr.r(0, 0).abs() } else { 0.0 };
    let rank = (0..steps)
        .take_while(|&i| lead > 0.0 && qr.r(i, i).abs() > RANK_TOL * lead)
        .count();

    let y = if rank == p {
        let mut y = vec![0.0; p];
        for i in (0..p).rev() {
            let s: f64 = (i + 1..p).map(|j| qr.r(i, j) * y[j]).sum();
            y[i] = (qtb[i] - s) / qr.r(i, i);
        }
        y
    } else if rank == 0 {
        vec![0.0; p]
    } else {
        // minimum-norm solution of the r × p trapezoid [R11 R12] y = c
        let trapezoid_t: Vec<Vec<f64>> = (0..rank)
            .map(|i| (0..p).map(|j| qr.r(i, j)).collect())
            .collect();
        let inner = HouseholderQr::factor(trapezoid_t, false);
        let mut u = vec![0.0; p];
        for i in 0..rank {
            let s: f64 = (0..i).map(|j| inner.r(j, i) * u[j]).sum();
            u[i] = (qtb[i] - s) / inner.r(i, i);
        }
        inner.apply_q(&mut u);
        u
    };
    let mut solution = vec![0.0; p];
    for (i, &col) in qr.perm.iter().enumerate() {
        solution[col] = y[i];
    }
    LeastSquares { solution, rank }
}
