//! Numerical kernels used by the rest of the crate. Everything here works
//! on plain `f64` slices and closures.

mod fit;
mod linalg;
mod ode;
mod quadrature;

pub use fit::{fit_power_law, FitResult};
pub use linalg::{solve_linear, SquareMatrix};
pub use ode::{ode_solve, ode_solve_with, OdeOptions, Sample};
pub use quadrature::{integrate, integrate_piecewise, integrate_with, Estimate, Interval, QuadratureOptions};

/// Geometric grid of `points` values from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (llo, lhi) = (lo.ln(), hi.ln());
            (0..points)
                .map(|i| match i {
                    0 => lo,
                    _ if i == points - 1 => hi,
                    _ => (llo + (lhi - llo) * i as f64 / (points - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

/// Geometric grid from `lo` to `hi` with `per_decade` intervals per decade
/// (rounded to the nearest whole number of intervals).
pub fn decade_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let intervals = ((hi / lo).log10() * per_decade as f64).round().max(1.0) as usize;
    geomspace(lo, hi, intervals + 1)
}

/// Uniform grid of `points` values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| {
                if i == points - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_hit_their_endpoints_exactly() {
        let g = geomspace(3e-7, 0.7, 9);
        assert_eq!((g[0], g[8]), (3e-7, 0.7));
        let l = linspace(-1.0, 0.3, 14);
        assert_eq!((l[0], l[13]), (-1.0, 0.3));
        assert!(geomspace(1.0, 2.0, 0).is_empty());
        assert_eq!(linspace(5.0, 6.0, 1), vec![5.0]);
    }

    #[test]
    fn decade_grid_counts_intervals() {
        assert_eq!(decade_grid(2e-5, 2e-2, 25).len(), 76);
        assert_eq!(decade_grid(1.0, 1.1, 1).len(), 2);
        let g = decade_grid(1.0, 100.0, 2);
        assert!((g[1] - 10f64.sqrt()).abs() < 1e-14);
    }
}
