//! Explicit five-point heat update on a structured grid, kept as a
//! reference for the finite-element stepper.

use crate::error::{Error, Result};

/// One explicit step on a row-major `ny x nx` grid (`u[j * nx + i]`, `i`
/// along x). `alpha` weights the differences along the row index `j`,
/// `beta` those along `i`. Border values are held fixed.
pub fn stencil_reference(grid: &[f64], nx: usize, ny: usize, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    if nx < 3 || ny < 3 || grid.len() != nx * ny {
        return Err(Error::Shape(format!(
            "stencil grid needs at least 3x3 values laid out as {ny}x{nx}, got {}",
            grid.len()
        )));
    }
    let mut out = grid.to_vec();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let c = grid[j * nx + i];
            out[j * nx + i] = c
                + alpha * (grid[(j + 1) * nx + i] - c)
                + alpha * (grid[(j - 1) * nx + i] - c)
                + beta * (grid[j * nx + i + 1] - c)
                + beta * (grid[j * nx + i - 1] - c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_is_fixed() {
        let g = vec![2.5; 20];
        assert_eq!(stencil_reference(&g, 5, 4, 0.2, 0.1).unwrap(), g);
    }

    #[test]
    fn hot_spot() {
        let mut g = vec![0.0; 25];
        g[12] = 1.0;
        let out = stencil_reference(&g, 5, 5, 0.1, 0.1).unwrap();
        assert!((out[12] - 0.6).abs() < 1e-15);
        for k in [7, 11, 13, 17] {
            assert!((out[k] - 0.1).abs() < 1e-15);
        }
        assert_eq!(out.iter().filter(|v| **v != 0.0).count(), 5);
    }

    #[test]
    fn anisotropic_weights_follow_axes() {
        let mut g = vec![0.0; 25];
        g[12] = 1.0;
        let out = stencil_reference(&g, 5, 5, 0.2, 0.05).unwrap();
        assert!((out[17] - 0.2).abs() < 1e-15 && (out[13] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn shape_is_checked() {
        assert!(stencil_reference(&[0.0; 6], 3, 2, 0.1, 0.1).is_err());
        assert!(stencil_reference(&[0.0; 8], 3, 3, 0.1, 0.1).is_err());
    }
}
