//! Power iteration for Perron data of nonnegative matrices.
//!
//! Matrices are held as sparse successor rows `rows[u] = [(v, weight), ...]`,
//! and iteration computes the dominant eigenvalue together with a right
//! eigenvector, bracketing the Perron root with the Collatz–Wielandt bounds
//! min_i (Mx)_i/x_i <= rho(M) <= max_i (Mx)_i/x_i valid for positive x.

pub(crate) type SparseRows = Vec<Vec<(usize, f64)>>;

#[derive(Debug, Clone)]
pub(crate) struct PowerOutcome {
    pub lambda: f64,
    /// L1-normalised nonnegative eigenvector.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// One multiply `y = M x` over sparse successor rows.
pub(crate) fn multiply(rows: &SparseRows, x: &[f64], y: &mut [f64]) {
    for (u, row) in rows.iter().enumerate() {
        let mut acc = 0.0;
        for &(v, w) in row {
            acc += w * x[v];
        }
        y[u] = acc;
    }
}

/// Transposed rows (column access pattern), used to iterate on M^T.
pub(crate) fn transpose(size: usize, rows: &SparseRows) -> SparseRows {
    let mut out = vec![Vec::new(); size];
    for (u, row) in rows.iter().enumerate() {
        for &(v, w) in row {
            out[v].push((u, w));
        }
    }
    out
}

/// Power iteration with deterministic uniform start.
///
/// Returns once the Collatz–Wielandt bracket narrows below `tol` relative to
/// the current estimate, or after `max_iter` multiplies. Rows must all be
/// nonempty (guaranteed by `Sft` validation) so the iterate stays positive.
pub(crate) fn power_iterate(
    size: usize,
    rows: &SparseRows,
    tol: f64,
    max_iter: usize,
) -> PowerOutcome {
    let mut x = vec![1.0 / size as f64; size];
    let mut y = vec![0.0; size];
    let mut lambda = 1.0;
    for it in 1..=max_iter {
        multiply(rows, &x, &mut y);
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..size {
            if x[i] > 0.0 {
                let r = y[i] / x[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        let sum: f64 = y.iter().sum();
        lambda = 0.5 * (lo + hi);
        let bracket = (hi - lo) / lambda.max(f64::MIN_POSITIVE);
        for i in 0..size {
            x[i] = y[i] / sum;
        }
        if bracket <= tol {
            // The bracket controls lambda, not the eigenvector; polish by
            // iterating until the normalised iterate reaches its floating-
            // point fixed point, so downstream chains and measures carry no
            // systematic eigenvector bias.
            let mut extra = 0;
            let mut prev_delta = f64::INFINITY;
            for _ in 0..512 {
                multiply(rows, &x, &mut y);
                let sum: f64 = y.iter().sum();
                let mut delta = 0.0f64;
                let mut scale = 0.0f64;
                for i in 0..size {
                    let xi = y[i] / sum;
                    delta = delta.max((xi - x[i]).abs());
                    scale = scale.max(xi.abs());
                    x[i] = xi;
                }
                extra += 1;
                if delta <= 1e-15 * scale || delta >= prev_delta {
                    break;
                }
                prev_delta = delta;
            }
            multiply(rows, &x, &mut y);
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for i in 0..size {
                if x[i] > 0.0 {
                    let r = y[i] / x[i];
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
            lambda = 0.5 * (lo + hi);
            return PowerOutcome {
                lambda,
                vector: x,
                iterations: it + extra,
                converged: true,
            };
        }
    }
    PowerOutcome {
        lambda,
        vector: x,
        iterations: max_iter,
        converged: false,
    }
}

/// Spectral radius of a nonnegative matrix, robust to periodicity.
///
/// Plain power iteration oscillates on irreducible-but-periodic patterns, so
/// when the bracket fails to close we retry on M + I: the shift adds exactly 1
/// to the Perron root, leaves its eigenvector unchanged, and makes the
/// dominant class aperiodic.
pub(crate) fn spectral_radius(
    size: usize,
    rows: &SparseRows,
    tol: f64,
    max_iter: usize,
) -> PowerOutcome {
    let direct = power_iterate(size, rows, tol, max_iter);
    if direct.converged {
        return direct;
    }
    let mut shifted = rows.clone();
    for (u, row) in shifted.iter_mut().enumerate() {
        match row.iter_mut().find(|(v, _)| *v == u) {
            Some(entry) => entry.1 += 1.0,
            None => row.push((u, 1.0)),
        }
    }
    let mut out = power_iterate(size, &shifted, tol, max_iter);
    out.lambda -= 1.0;
    out
}
