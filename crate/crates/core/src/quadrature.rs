//! Two-mode coordinate wavefunction and the quadrature distribution `P(x, y)`.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::LadderState;
use crate::specfun::oscillator_column;

/// Largest `|psi|` tolerated on the raster boundary.
pub const BOUNDARY_THRESHOLD: f64 = 1e-8;

/// A trapezoid norm above this means the grid does not resolve the state.
pub const MAX_NORM_ESTIMATE: f64 = 1.05;

/// Rectangular node grid, inclusive of both end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    /// `[-10, 10]^2` with 321 nodes per axis; wide enough for every figure preset.
    fn default() -> Self {
        GridSpec::square(-10.0, 10.0, 321)
    }
}

impl GridSpec {
    pub fn square(min: f64, max: f64, nodes: usize) -> Self {
        GridSpec {
            x_min: min,
            x_max: max,
            y_min: min,
            y_max: max,
            nx: nodes,
            ny: nodes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(Error::InvalidArgument(format!(
                "grid bounds must be finite with min < max, got x [{}, {}], y [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 nodes per axis, got {} x {}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.dx() * i as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + self.dy() * j as f64
    }
}

/// `P(x_i, y_j)` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Raster {
    pub grid: GridSpec,
    /// Row-major over x: `values[i * ny + j] = P(x_i, y_j)`.
    pub values: Vec<f64>,
    /// Trapezoid estimate of the integral of `P` over the grid.
    pub norm_estimate: f64,
}

impl Raster {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.ny + j]
    }

    /// Largest `|P(x, y) - P(T(x, y))|` for a node map `T` that sends the grid
    /// onto itself (only meaningful on symmetric grids).
    pub fn max_asymmetry<F>(&self, map: F) -> f64
    where
        F: Fn(usize, usize) -> (usize, usize),
    {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut worst = 0.0f64;
        for i in 0..nx {
            for j in 0..ny {
                let (k, l) = map(i, j);
                worst = worst.max((self.at(i, j) - self.at(k, l)).abs());
            }
        }
        worst
    }

    /// Writes the gnuplot `matrix` layout: four `#` header lines, then one
    /// line per y node holding the values along x.
    pub fn write_matrix<W: Write>(&self, mut out: W, state_label: &str) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(out, "# grid x=[{:?}, {:?}] y=[{:?}, {:?}]", g.x_min, g.x_max, g.y_min, g.y_max)?;
        writeln!(out, "# nodes nx={} ny={}", g.nx, g.ny)?;
        writeln!(out, "# norm_estimate {:.16e}", self.norm_estimate)?;
        writeln!(out, "# state {state_label}")?;
        let mut line = String::new();
        for j in 0..g.ny {
            line.clear();
            for i in 0..g.nx {
                if i > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{:.16e}", self.at(i, j));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Writes long-form `x,y,p` CSV, blank line between x blocks.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(out, "x,y,p")?;
        for i in 0..g.nx {
            if i > 0 {
                writeln!(out)?;
            }
            let x = g.x(i);
            for j in 0..g.ny {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", x, g.y(j), self.at(i, j))?;
            }
        }
        Ok(())
    }
}

/// `psi(x, y) = sum_n c_n phi_{n+q}(x) phi_n(y)`.
pub fn cat_wavefunction(state: &LadderState, x: f64, y: f64) -> Complex64 {
    let n_max = state.n_max();
    let q = state.q as usize;
    let col_x = oscillator_column(x, n_max + q);
    let col_y = oscillator_column(y, n_max);
    combine(state, &col_x.values, &col_y.values)
}

fn combine(state: &LadderState, col_x: &[f64], col_y: &[f64]) -> Complex64 {
    let q = state.q as usize;
    state
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| c * (col_x[n + q] * col_y[n]))
        .sum()
}

/// Rasterizes `|psi(x, y)|^2` after checking that the wavefunction has decayed
/// below [`BOUNDARY_THRESHOLD`] along the grid boundary.
pub fn quadrature_distribution(state: &LadderState, grid: &GridSpec) -> Result<Raster> {
    grid.validate()?;
    let n_max = state.n_max();
    let q = state.q as usize;
    let cols_x: Vec<Vec<f64>> = (0..grid.nx)
        .into_par_iter()
        .map(|i| oscillator_column(grid.x(i), n_max + q).values)
        .collect();
    let cols_y: Vec<Vec<f64>> = (0..grid.ny)
        .into_par_iter()
        .map(|j| oscillator_column(grid.y(j), n_max).values)
        .collect();

    let (nx, ny) = (grid.nx, grid.ny);
    let mut boundary_max = 0.0f64;
    let mut probe = |i: usize, j: usize| {
        boundary_max = boundary_max.max(combine(state, &cols_x[i], &cols_y[j]).norm());
    };
    for i in 0..nx {
        probe(i, 0);
        probe(i, ny - 1);
    }
    for j in 0..ny {
        probe(0, j);
        probe(nx - 1, j);
    }
    if !(boundary_max < BOUNDARY_THRESHOLD) {
        return Err(Error::GridTooSmall {
            boundary_max,
            threshold: BOUNDARY_THRESHOLD,
        });
    }

    let values: Vec<f64> = (0..nx)
        .into_par_iter()
        .flat_map_iter(|i| {
            let col_x = &cols_x[i];
            cols_y.iter().map(move |col_y| combine(state, col_x, col_y).norm_sqr())
        })
        .collect();

    let mut total = 0.0;
    for i in 0..nx {
        let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
        let mut row = 0.0;
        for j in 0..ny {
            let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
            row += wy * values[i * ny + j];
        }
        total += wx * row;
    }
    let norm_estimate = total * grid.dx() * grid.dy();
    if !(norm_estimate > 0.0 && norm_estimate <= MAX_NORM_ESTIMATE) {
        return Err(Error::GridTooCoarse { norm_estimate });
    }

    Ok(Raster {
        grid: *grid,
        values,
        norm_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{pair_cat, PairCatSpec};
    use std::f64::consts::PI;

    fn cat(xi: f64, q: u32, phi: f64) -> LadderState {
        pair_cat(&PairCatSpec::new(Complex64::new(xi, 0.0), q, phi, 1e-12).unwrap()).unwrap()
    }

    fn hermite(n: usize, x: f64) -> f64 {
        let (mut h0, mut h1) = (1.0, 2.0 * x);
        if n == 0 {
            return h0;
        }
        for k in 1..n {
            let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
            h0 = h1;
            h1 = h2;
        }
        h1
    }

    fn direct_phi(n: usize, x: f64) -> f64 {
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        hermite(n, x) * (-0.5 * x * x).exp() / (2f64.powi(n as i32) * fact * PI.sqrt()).sqrt()
    }

    #[test]
    fn vacuum_at_origin() {
        let s = LadderState::fock(0, 0, 16);
        let psi = cat_wavefunction(&s, 0.0, 0.0);
        assert!((psi.re - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert_eq!(psi.im, 0.0);
    }

    #[test]
    fn odd_cat_is_odd_in_each_coordinate() {
        // only odd n survive; phi_n(-x) = (-1)^n phi_n(x), so flipping one
        // coordinate negates psi while flipping both leaves it unchanged
        let s = cat(1.0, 0, PI);
        for &(x, y) in &[(0.3, 0.3), (1.1, -0.4), (-2.0, 0.7)] {
            let a = cat_wavefunction(&s, x, y);
            assert!((a + cat_wavefunction(&s, -x, y)).norm() < 1e-15);
            assert!((a + cat_wavefunction(&s, x, -y)).norm() < 1e-15);
            assert!((a - cat_wavefunction(&s, -x, -y)).norm() < 1e-15);
        }
    }

    #[test]
    fn wavefunction_matches_hermite_sum() {
        let s = cat(1.0, 2, 0.0);
        let (x, y) = (1.0, 0.5);
        let direct: Complex64 = s
            .coeffs
            .iter()
            .enumerate()
            .take(31)
            .map(|(n, c)| c * direct_phi(n + 2, x) * direct_phi(n, y))
            .sum();
        assert!((cat_wavefunction(&s, x, y) - direct).norm() < 1e-13);
    }

    #[test]
    fn gaussian_normalization() {
        let s = LadderState::fock(0, 0, 16);
        let r = quadrature_distribution(&s, &GridSpec::square(-6.0, 6.0, 241)).unwrap();
        assert!((r.norm_estimate - 1.0).abs() < 1e-6);
        assert!(r.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let s = LadderState::fock(0, 0, 16);
        let err = quadrature_distribution(&s, &GridSpec::square(-6.0, 6.0, 3)).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn clipped_grid_is_rejected() {
        let s = cat(7.0, 2, 0.0);
        let err = quadrature_distribution(&s, &GridSpec::square(-4.0, 4.0, 50)).unwrap_err();
        assert!(matches!(err, Error::GridTooSmall { .. }));
        assert!(quadrature_distribution(&s, &GridSpec::square(1.0, 1.0, 50)).is_err());
        assert!(quadrature_distribution(&s, &GridSpec::square(-1.0, 1.0, 1)).is_err());
    }

    #[test]
    fn symmetries_of_small_presets() {
        let g = GridSpec::square(-8.0, 8.0, 65);
        let flip = |i: usize| g.nx - 1 - i;

        let r = quadrature_distribution(&cat(1.0, 0, PI / 2.0), &g).unwrap();
        assert!(r.max_asymmetry(|i, j| (j, i)) < 1e-12);
        assert!(r.max_asymmetry(|i, j| (flip(i), flip(j))) < 1e-12);

        let r = quadrature_distribution(&cat(3.0, 2, 0.0), &g).unwrap();
        assert!(r.max_asymmetry(|i, j| (flip(i), j)) < 1e-12);
        assert!(r.max_asymmetry(|i, j| (i, flip(j))) < 1e-12);
    }

    #[test]
    fn exports_have_headers() {
        let s = LadderState::fock(0, 0, 16);
        let r = quadrature_distribution(&s, &GridSpec::square(-7.0, 7.0, 15)).unwrap();
        let mut buf = Vec::new();
        r.write_matrix(&mut buf, "xi=0 q=0 phi=0").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4 + 15);
        assert!(lines[..4].iter().all(|l| l.starts_with('#')));
        assert_eq!(lines[4].split(' ').count(), 15);

        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,p\n"));
        assert_eq!(text.lines().filter(|l| !l.is_empty()).count(), 1 + 225);
    }
}
