//! Small numerical utilities shared across the crate: adaptive quadrature,
//! finite-difference stencil weights and a dense linear solver for the tiny
//! systems that show up in fitting.

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Classic recursive bisection with the Richardson error estimate; `tol` is
/// an absolute tolerance on the whole interval.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth >= 50 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1)
            + rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 0)
}

/// Finite-difference weights on arbitrary nodes (Fornberg's recurrence).
///
/// Returns, for each node in `grid`, the weight of that sample in an
/// approximation of the `order`-th derivative at `x0`. Exact for polynomials
/// of degree `grid.len() - 1`, so accuracy is controlled by the stencil size.
pub fn fd_weights(x0: f64, grid: &[f64], order: usize) -> Vec<f64> {
    let n = grid.len();
    assert!(order < n, "stencil too small for requested derivative");
    let m = order;
    // c[k][j]: weight of grid[j] for the k-th derivative, built incrementally.
    let mut c = vec![vec![0.0_f64; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = grid[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = grid[i] - x0;
        for j in 0..i {
            let c3 = grid[i] - grid[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c[m].clone()
}

/// Cumulative integral of sampled data: entry `i` approximates the integral
/// of the sampled function from `x[0]` to `x[i]`. Each segment is integrated
/// by the interpolating polynomial through a sliding window of `window`
/// nodes containing it, so smooth integrands converge at order `window`.
/// Nodes must be strictly increasing.
pub fn cumulative_integral(x: &[f64], y: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 2 && y.len() == n, "need at least two matching samples");
    assert!(
        x.windows(2).all(|p| p[1] > p[0]),
        "nodes must be strictly increasing"
    );
    let w = window.clamp(2, n);
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let lo = i.saturating_sub((w - 2) / 2).min(n - w);
        let span = &x[lo..lo + w];
        let center = 0.5 * (span[0] + span[w - 1]);
        let scale = 0.5 * (span[w - 1] - span[0]);
        let ta = (x[i] - center) / scale;
        let tb = (x[i + 1] - center) / scale;
        // Moment system for the quadrature weights on the scaled nodes.
        let mut mat = vec![0.0; w * w];
        let mut rhs = vec![0.0; w];
        for p in 0..w {
            for (q, t) in span.iter().enumerate() {
                mat[p * w + q] = ((t - center) / scale).powi(p as i32);
            }
            rhs[p] = (tb.powi(p as i32 + 1) - ta.powi(p as i32 + 1)) / (p as f64 + 1.0);
        }
        let weights = solve_dense(&mut mat, &mut rhs, w)
            .expect("quadrature moment system is nonsingular on distinct nodes");
        let seg: f64 = weights.iter().zip(&y[lo..lo + w]).map(|(a, b)| a * b).sum();
        out[i + 1] = out[i] + scale * seg;
    }
    out
}

/// Integral of sampled data over the whole node range; see
/// [`cumulative_integral`] for the rule and its accuracy.
pub fn integrate_samples(x: &[f64], y: &[f64], window: usize) -> f64 {
    *cumulative_integral(x, y, window)
        .last()
        .expect("at least two samples")
}

/// Solve the dense system `a x = b` in place by Gaussian elimination with
/// partial pivoting. `a` is row-major `n x n`. Returns `None` when the pivot
/// falls below `1e-300` (numerically singular).
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[piv * n + col].abs() {
                piv = row;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    Some(x)
}

/// Find the root of a strictly monotone `f` on `[lo, hi]` by bisection with a
/// Newton polish. `df` is the derivative. Assumes `f(lo)` and `f(hi)` bracket
/// zero; panics otherwise (callers establish the bracket).
pub fn monotone_root<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
    f: &F,
    df: &G,
    mut lo: f64,
    mut hi: f64,
) -> f64 {
    let flo = f(lo);
    let fhi = f(hi);
    assert!(
        flo * fhi <= 0.0,
        "monotone_root: no bracket ({flo} .. {fhi})"
    );
    let increasing = fhi >= flo;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = df(x);
        if d.abs() < 1e-300 {
            break;
        }
        let step = f(x) / d;
        let next = x - step;
        if next.is_finite() && next >= lo - (hi - lo) && next <= hi + (hi - lo) {
            x = next;
        } else {
            break;
        }
    }
    x
}
