//! One-dimensional maximization: coarse grid plus golden-section refinement.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Location and value of a maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub arg: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Maximum {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (hi - lo).abs() > xtol && iterations < 200 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        iterations += 1;
    }
    if fc >= fd {
        Maximum { arg: c, value: fc }
    } else {
        Maximum { arg: d, value: fd }
    }
}

/// Index of the largest finite value in `values`.
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

/// Evaluates `f` on `grid`, then refines around the best grid point with
/// golden-section search between its neighbours. The result is never worse
/// than the best grid value.
pub fn grid_then_golden<F: Fn(f64) -> f64>(f: F, grid: &[f64], xtol: f64) -> Option<Maximum> {
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    refine(&f, grid, &values, xtol)
}

/// Refinement step of [`grid_then_golden`] for values computed elsewhere
/// (e.g. in parallel).
pub fn refine<F: Fn(f64) -> f64>(f: &F, grid: &[f64], values: &[f64], xtol: f64) -> Option<Maximum> {
    let best = argmax(values)?;
    let grid_best = Maximum {
        arg: grid[best],
        value: values[best],
    };
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if lo == hi {
        return Some(grid_best);
    }
    let refined = golden_max(f, lo, hi, xtol);
    if refined.value.is_finite() && refined.value > grid_best.value {
        Some(refined)
    } else {
        Some(grid_best)
    }
}

/// `n` points evenly spaced in `log10` between `lo` and `hi` (both positive).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}
