//! Radial bump mollifier and discrete convolution on the cell lattice.

use serde::{Deserialize, Serialize};

use crate::field::DisplacementField;
use crate::grid::{GridSpec, Mat3, Vec3};
use crate::FieldError;

/// Smooth radial bump `exp(−1/(1−|x|²))` rescaled to radius `support_fraction · scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub support_fraction: f64,
}

impl Default for Mollifier {
    fn default() -> Self {
        Self { support_fraction: 1.0 / 6.0 }
    }
}

/// Discrete kernel: integer cell offsets and weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub radius: f64,
    pub taps: Vec<([i64; 3], f64)>,
}

impl Mollifier {
    pub fn profile(s: f64) -> f64 {
        if s >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s * s)).exp()
        }
    }

    /// Kernel for a cube of half-width `scale`; `scale < h` is rejected.
    pub fn kernel(&self, grid: &GridSpec, scale: f64) -> Result<Kernel, FieldError> {
        let h = grid.h();
        if scale < h * (1.0 - 1e-12) {
            return Err(FieldError::UnderResolved { scale, h });
        }
        Ok(self.kernel_unchecked(grid, scale))
    }

    /// Kernel for half-width `scale` without the resolution check; it
    /// collapses to the identity once the radius drops below one cell.
    pub fn kernel_unchecked(&self, grid: &GridSpec, scale: f64) -> Kernel {
        let h = grid.h();
        let radius = self.support_fraction * scale;
        let reach = (radius / h).floor() as i64;
        let mut taps = Vec::new();
        let span = |a: usize| if a < grid.dim { -reach..=reach } else { 0..=0 };
        for i in span(0) {
            for j in span(1) {
                for k in span(2) {
                    if i == 0 && j == 0 && k == 0 {
                        continue;
                    }
                    let d = ((i * i + j * j + k * k) as f64).sqrt() * h;
                    let w = Self::profile(d / radius);
                    if w > 0.0 {
                        taps.push(([i, j, k], w));
                    }
                }
            }
        }
        let total: f64 = 1.0 + taps.iter().map(|t| t.1).sum::<f64>() / Self::profile(0.0);
        let mut rest = 0.0;
        for t in taps.iter_mut() {
            t.1 = t.1 / Self::profile(0.0) / total;
            rest += t.1;
        }
        taps.insert(0, ([0, 0, 0], 1.0 - rest));
        Kernel { radius, taps }
    }
}

/// Linear values that can be averaged.
pub trait Blendable: Copy {
    fn zero() -> Self;
    fn add_scaled(&mut self, w: f64, other: &Self);
}

impl Blendable for Vec3 {
    fn zero() -> Self {
        [0.0; 3]
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        for a in 0..3 {
            self[a] += w * other[a];
        }
    }
}

impl Blendable for Mat3 {
    fn zero() -> Self {
        [[0.0; 3]; 3]
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        for a in 0..3 {
            for b in 0..3 {
                self[a][b] += w * other[a][b];
            }
        }
    }
}

impl Kernel {
    /// Whether the kernel is the identity (support inside one cell).
    pub fn is_identity(&self) -> bool {
        self.taps.len() == 1
    }

    /// Convolution at `cell` reading values through `read`, which returns
    /// `None` outside the definition region; the result is `None` when the
    /// stencil leaves it.
    pub fn apply_with<T: Blendable>(
        &self,
        grid: &GridSpec,
        cell: usize,
        mut read: impl FnMut(usize) -> Option<T>,
    ) -> Option<T> {
        let c = grid.coords(cell);
        let mut acc = T::zero();
        for (off, w) in &self.taps {
            let q = [c[0] as i64 + off[0], c[1] as i64 + off[1], c[2] as i64 + off[2]];
            let idx = grid.index_signed(q)?;
            acc.add_scaled(*w, &read(idx)?);
        }
        Some(acc)
    }
}

/// A mollified field and the cells where its stencil fit inside the grid.
#[derive(Debug, Clone)]
pub struct Mollified {
    pub field: DisplacementField,
    pub defined: Vec<bool>,
}

/// `ρ_scale * u` on every cell whose stencil lies in the grid; other cells keep `u`.
pub fn mollify(field: &DisplacementField, scale: f64, rho: &Mollifier) -> Result<Mollified, FieldError> {
    let grid = *field.grid();
    let kernel = rho.kernel(&grid, scale)?;
    let mut defined = vec![false; grid.num_cells()];
    let mut values = field.values().to_vec();
    for (c, out) in values.iter_mut().enumerate() {
        if let Some(v) = kernel.apply_with(&grid, c, |i| Some(*field.value(i))) {
            *out = v;
            defined[c] = true;
        }
    }
    Ok(Mollified { field: DisplacementField::new(grid, values)?, defined })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalised_and_even() {
        let g = GridSpec::unit(2, 64).unwrap();
        let k = Mollifier::default().kernel(&g, 0.5).unwrap();
        let s: f64 = k.taps.iter().map(|t| t.1).sum();
        assert!((s - 1.0).abs() < 1e-15);
        for (off, w) in &k.taps {
            let mirror = k.taps.iter().find(|t| t.0 == [-off[0], -off[1], -off[2]]).unwrap();
            assert!((mirror.1 - w).abs() < 1e-17);
        }
        assert!(k.taps.iter().all(|t| t.1 >= 0.0));
    }

    #[test]
    fn affine_field_reproduced() {
        let g = GridSpec::unit(2, 64).unwrap();
        let u = DisplacementField::from_fn(g, |x| [1.0 + 2.0 * x[0] - x[1], -0.5 + 0.3 * x[1], 0.0]).unwrap();
        let m = mollify(&u, 0.6, &Mollifier::default()).unwrap();
        let mut checked = 0;
        for c in 0..g.num_cells() {
            if m.defined[c] {
                checked += 1;
                for a in 0..2 {
                    assert!((m.field.value(c)[a] - u.value(c)[a]).abs() < 1e-13);
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn under_resolved_scale_rejected() {
        let g = GridSpec::unit(2, 16).unwrap();
        assert!(Mollifier::default().kernel(&g, 0.5 * g.h()).is_err());
    }

    #[test]
    fn fine_scale_is_identity() {
        let g = GridSpec::unit(3, 16).unwrap();
        let k = Mollifier::default().kernel(&g, 2.0 * g.h()).unwrap();
        assert!(k.is_identity());
    }
}
