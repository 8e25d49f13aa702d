//! Isotropic Hooke tensor, the densities `f_μ`, `f_0` and the functionals `G`, `G_0`.

use serde::{Deserialize, Serialize};

use crate::field::{symmetric_gradient, DisplacementField, JumpSet, StrainField};
use crate::grid::{frob2, norm3, sub3, Mat3, Region};
use crate::FieldError;

/// `ℂξ = λ tr(ξ_sym) Id + 2μ ξ_sym`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HookeTensor {
    pub lame_lambda: f64,
    pub lame_mu: f64,
}

impl HookeTensor {
    pub fn new(lame_lambda: f64, lame_mu: f64, dim: usize) -> Result<Self, FieldError> {
        let c = Self { lame_lambda, lame_mu };
        c.validate(dim)?;
        Ok(c)
    }

    pub fn validate(&self, dim: usize) -> Result<(), FieldError> {
        if !(self.lame_mu > 0.0) || !(dim as f64 * self.lame_lambda + 2.0 * self.lame_mu > 0.0) {
            return Err(FieldError::InvalidParams(format!(
                "Lamé moduli (λ={}, μ={}) are not coercive in dimension {dim}",
                self.lame_lambda, self.lame_mu
            )));
        }
        Ok(())
    }

    /// `c₀ = min(μ/2, (nλ+2μ)/4)` in `ℂξ·ξ ≥ c₀|ξ+ξᵀ|²`.
    pub fn coercivity_constant(&self, dim: usize) -> f64 {
        (0.5 * self.lame_mu).min(0.25 * (dim as f64 * self.lame_lambda + 2.0 * self.lame_mu))
    }

    pub fn apply(&self, xi: &Mat3) -> Mat3 {
        let s = crate::field::symmetrize(xi);
        let tr = s[0][0] + s[1][1] + s[2][2];
        let mut out = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                out[a][b] = 2.0 * self.lame_mu * s[a][b];
            }
            out[a][a] += self.lame_lambda * tr;
        }
        out
    }

    /// `ℂξ·ξ`.
    pub fn contract(&self, xi: &Mat3) -> f64 {
        let s = crate::field::symmetrize(xi);
        let tr = s[0][0] + s[1][1] + s[2][2];
        self.lame_lambda * tr * tr + 2.0 * self.lame_mu * frob2(&s)
    }
}

/// Parameters of `G(u, κ, β, A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    pub hooke: HookeTensor,
    pub p: f64,
    pub mu_offset: f64,
    pub kappa: f64,
    pub beta: f64,
    pub g: DisplacementField,
}

impl EnergyParams {
    /// `p = 2`, `μ = 0`, `κ = 0`, `β = 1`, `g = 0`.
    pub fn standard(hooke: HookeTensor, grid: crate::GridSpec) -> Self {
        Self { hooke, p: 2.0, mu_offset: 0.0, kappa: 0.0, beta: 1.0, g: DisplacementField::zeros(grid) }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        self.hooke.validate(self.g.grid().dim)?;
        if !(self.p >= 1.0) || !(self.beta > 0.0) || !(self.kappa >= 0.0) || !(self.mu_offset >= 0.0) {
            return Err(FieldError::InvalidParams(format!(
                "need p ≥ 1, β > 0, κ ≥ 0, μ ≥ 0 (got p={}, β={}, κ={}, μ={})",
                self.p, self.beta, self.kappa, self.mu_offset
            )));
        }
        Ok(())
    }
}

/// `f_μ(ξ) = ((ℂξ·ξ + μ)^{p/2} − μ^{p/2}) / p`.
pub fn f_mu(xi: &Mat3, hooke: &HookeTensor, p: f64, mu: f64) -> f64 {
    let q = hooke.contract(xi).max(0.0);
    if p == 2.0 {
        return 0.5 * q;
    }
    ((q + mu).powf(0.5 * p) - mu.powf(0.5 * p)) / p
}

/// `f_0(ξ) = (ℂξ·ξ)^{p/2} / p`.
pub fn f_0(xi: &Mat3, hooke: &HookeTensor, p: f64) -> f64 {
    f_mu(xi, hooke, p, 0.0)
}

/// The three terms of `G` or `G_0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub fidelity: f64,
    pub surface: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.bulk + self.fidelity + self.surface
    }
}

fn check_grids(u: &DisplacementField, jumps: &JumpSet, params: &EnergyParams) -> Result<(), FieldError> {
    if u.grid() != jumps.grid() || u.grid() != params.g.grid() {
        return Err(FieldError::GridMismatch);
    }
    Ok(())
}

/// Midpoint-rule evaluation with a precomputed strain.
pub fn energy_with_strain(
    u: &DisplacementField,
    strain: &StrainField,
    jumps: &JumpSet,
    params: &EnergyParams,
    region: &Region,
    homogeneous: bool,
) -> EnergyBreakdown {
    let grid = u.grid();
    let vol = grid.cell_volume();
    let mu = if homogeneous { 0.0 } else { params.mu_offset };
    let mut bulk = 0.0;
    let mut fidelity = 0.0;
    for c in 0..grid.num_cells() {
        if !region.contains_cell(grid, c) {
            continue;
        }
        bulk += f_mu(strain.value(c), &params.hooke, params.p, mu);
        if params.kappa > 0.0 {
            let d = if homogeneous { *u.value(c) } else { sub3(u.value(c), params.g.value(c)) };
            fidelity += norm3(&d).powf(params.p);
        }
    }
    EnergyBreakdown {
        bulk: bulk * vol,
        fidelity: params.kappa * fidelity * vol,
        surface: params.beta * jumps.measure_in(region),
    }
}

/// `G(u, κ, β, A) = ∫_A f_μ(e(u)) + κ∫_A |u−g|^p + β H^{n−1}(J ∩ A)`.
pub fn energy_g(
    u: &DisplacementField,
    jumps: &JumpSet,
    params: &EnergyParams,
    region: &Region,
) -> Result<EnergyBreakdown, FieldError> {
    check_grids(u, jumps, params)?;
    let e = symmetric_gradient(u, jumps)?;
    Ok(energy_with_strain(u, &e, jumps, params, region, false))
}

/// `G_0`: `f_0` in place of `f_μ` and `|u|^p` in place of `|u−g|^p`.
pub fn energy_g0(
    u: &DisplacementField,
    jumps: &JumpSet,
    params: &EnergyParams,
    region: &Region,
) -> Result<EnergyBreakdown, FieldError> {
    check_grids(u, jumps, params)?;
    let e = symmetric_gradient(u, jumps)?;
    Ok(energy_with_strain(u, &e, jumps, params, region, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Face, GridSpec};

    fn id() -> Mat3 {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]
    }

    #[test]
    fn f_mu_of_identity() {
        let c = HookeTensor::new(0.0, 0.5, 2).unwrap();
        assert_eq!(f_mu(&id(), &c, 2.0, 0.0), 1.0);
    }

    #[test]
    fn f_mu_vanishes_at_zero() {
        let c = HookeTensor::new(1.0, 1.0, 3).unwrap();
        for mu in [0.0, 0.5, 7.0] {
            assert_eq!(f_mu(&[[0.0; 3]; 3], &c, 3.0, mu), 0.0);
        }
    }

    #[test]
    fn quadratic_case_ignores_offset() {
        let c = HookeTensor::new(0.7, 1.3, 2).unwrap();
        let xi = [[0.2, 0.1, 0.0], [0.1, -0.4, 0.0], [0.0; 3]];
        let base = 0.5 * c.contract(&xi);
        for mu in [0.0, 1.0, 1e6] {
            assert!((f_mu(&xi, &c, 2.0, mu) - base).abs() < 1e-15);
        }
    }

    #[test]
    fn skew_part_is_annihilated() {
        let c = HookeTensor::new(2.0, 1.0, 3).unwrap();
        let w = [[0.0, 1.0, -2.0], [-1.0, 0.0, 0.5], [2.0, -0.5, 0.0]];
        assert!(c.apply(&w).iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn crack_energy_on_mid_plane() {
        let g = GridSpec::unit(2, 16).unwrap();
        let c = HookeTensor::new(1.0, 1.0, 2).unwrap();
        let mut params = EnergyParams::standard(c, g);
        params.beta = 3.0;
        params.kappa = 1.0;
        params.g = DisplacementField::from_fn(g, |x| [0.1 - 0.3 * x[1], 0.2 + 0.3 * x[0], 0.0]).unwrap();
        let u = params.g.clone();
        let plane: Vec<Face> = (0..16).map(|j| Face { axis: 0, cell: g.index([7, j, 0]) }).collect();
        let jumps = JumpSet::from_faces(g, plane).unwrap();
        let e = energy_g(&u, &jumps, &params, &Region::All).unwrap();
        assert!(e.bulk.abs() < 1e-24 && e.fidelity == 0.0);
        assert!((e.total() - 6.0).abs() < 1e-12);
        let e0 = energy_g0(&u, &JumpSet::empty(g), &params, &Region::All).unwrap();
        assert!(e0.fidelity > 0.0);
    }
}
