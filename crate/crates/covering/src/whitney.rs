//! Dyadic covering of `Q^{i₀}`: level-0 cubes of side `δ` tile `Q^{i₀+1}`,
//! and the slab `S_k` of the crown is tiled by cubes of side `δ 2^{-k}`.

use field_core::{GridSpec, JumpSet};
use serde::Serialize;

use crate::crown::{q_half_cells, CrownSelection};
use crate::cube::{DyadicCube, Enlargement};
use crate::CoveringError;

#[derive(Debug, Clone, PartialEq)]
pub struct WhitneyCovering {
    pub grid: GridSpec,
    pub delta: f64,
    pub delta_cells: usize,
    pub min_side: usize,
    pub crown_index: usize,
    pub n_outer: usize,
    /// Level-0 cubes first, then slab by slab.
    pub cubes: Vec<DyadicCube>,
    /// `σ_k`: number of cubes at level `k` (`k = 0` is the interior).
    pub level_counts: Vec<usize>,
    /// Cells of `Q^{i₀}`.
    pub inside: Vec<bool>,
    /// Cube index per cell of `Q^{i₀}` (`u32::MAX` on the sliver and outside).
    pub owner: Vec<u32>,
    /// Cells of `Q^{i₀}` below the finest slab.
    pub sliver: Vec<bool>,
    pub good: Vec<bool>,
    /// `H^{n−1}(J ∩ q‴)` in faces, per cube.
    pub jump_faces: Vec<usize>,
    /// Bad set `B`.
    pub bad: Vec<bool>,
    pub eta: Option<f64>,
}

/// Builds the cube geometry; every cube starts out good.
pub fn build_covering(grid: &GridSpec, selection: &CrownSelection, delta: f64) -> Result<WhitneyCovering, CoveringError> {
    let m = crate::crown::align_delta(grid, delta, selection.min_side)?;
    if m != selection.delta_cells {
        return Err(CoveringError::InvalidDelta(delta));
    }
    let min_side = selection.min_side;
    let n_outer = selection.n_outer;
    let i0 = selection.crown_index_checked()?;
    let l = grid.cells_per_side / 2;
    let dim = grid.dim;
    let h0 = q_half_cells(n_outer, m, i0);
    let h1 = q_half_cells(n_outer, m, i0 + 1);

    let mut cubes = Vec::new();
    let mut level_counts = Vec::new();

    let tile = |half: usize, side: usize, hole: usize, level: u32, out: &mut Vec<DyadicCube>| {
        let base = l - half;
        let per = 2 * half / side;
        let hole_lo = l - hole;
        let hole_hi = l + hole;
        let mut idx = [0usize; 3];
        let total = per.pow(dim as u32);
        let mut count = 0;
        for flat in 0..total {
            let mut rest = flat;
            for a in (0..dim).rev() {
                idx[a] = rest % per;
                rest /= per;
            }
            let mut anchor = [0usize; 3];
            for a in 0..dim {
                anchor[a] = base + idx[a] * side;
            }
            let in_hole = hole > 0 && (0..dim).all(|a| anchor[a] >= hole_lo && anchor[a] + side <= hole_hi);
            if !in_hole {
                out.push(DyadicCube { level, anchor, side });
                count += 1;
            }
        }
        count
    };

    level_counts.push(tile(h1, m, 0, 0, &mut cubes));
    let mut k = 1u32;
    let mut finest = m;
    while m % (1 << k) == 0 && m >> k >= min_side {
        let s = m >> k;
        level_counts.push(tile(h0 - s, s, h0 - 2 * s, k, &mut cubes));
        finest = s;
        k += 1;
    }

    let n = grid.num_cells();
    let mut inside = vec![false; n];
    let mut owner = vec![u32::MAX; n];
    let (lo, hi) = (l - h0, l + h0);
    for (c, flag) in inside.iter_mut().enumerate() {
        let cc = grid.coords(c);
        *flag = (0..dim).all(|a| cc[a] >= lo && cc[a] < hi);
    }
    for (ci, q) in cubes.iter().enumerate() {
        for c in q.cells(grid, Enlargement::Base) {
            if owner[c] != u32::MAX {
                return Err(CoveringError::Defect(format!("cell {c} covered twice")));
            }
            owner[c] = ci as u32;
        }
    }
    let sliver: Vec<bool> = (0..n).map(|c| inside[c] && owner[c] == u32::MAX).collect();
    let outer_sliver = h0 - finest;
    for (c, &s) in sliver.iter().enumerate() {
        if s {
            let cc = grid.coords(c);
            let deep = (0..dim).all(|a| cc[a] >= l - outer_sliver && cc[a] < l + outer_sliver);
            if deep {
                return Err(CoveringError::Defect(format!("uncovered cell {c} inside the slabs")));
            }
        }
    }
    let count = cubes.len();
    Ok(WhitneyCovering {
        grid: *grid,
        delta: m as f64 * grid.h(),
        delta_cells: m,
        min_side,
        crown_index: i0,
        n_outer,
        cubes,
        level_counts,
        inside,
        owner,
        bad: sliver.clone(),
        sliver,
        good: vec![true; count],
        jump_faces: vec![0; count],
        eta: None,
    })
}

impl CrownSelection {
    fn crown_index_checked(&self) -> Result<usize, CoveringError> {
        if self.i0 == 0 || self.i0 + 2 > self.n_outer {
            return Err(CoveringError::CrownInfeasible(format!("index {} out of range", self.i0)));
        }
        Ok(self.i0)
    }
}

/// Marks every cube with `H^{n−1}(J ∩ q‴) > η δ_q^{n−1}` bad and assembles `B`.
pub fn classify(mut covering: WhitneyCovering, jumps: &JumpSet, eta: f64) -> WhitneyCovering {
    let grid = covering.grid;
    let faces = jumps.faces();
    for (ci, q) in covering.cubes.iter().enumerate() {
        let count = faces.iter().filter(|f| q.contains_face(&grid, **f, Enlargement::Triple)).count();
        covering.jump_faces[ci] = count;
        let limit = eta * (q.side as f64).powi(grid.dim as i32 - 1);
        covering.good[ci] = count as f64 <= limit * (1.0 + 1e-12);
    }
    let mut bad = covering.sliver.clone();
    for (ci, q) in covering.cubes.iter().enumerate() {
        if !covering.good[ci] {
            for c in q.cells(&grid, Enlargement::Base) {
                bad[c] = true;
            }
        }
    }
    covering.bad = bad;
    covering.eta = Some(eta);
    covering
}

impl WhitneyCovering {
    /// Half-width `R` of `Q^{i₀}`.
    pub fn radius(&self) -> f64 {
        self.radius_cells() as f64 * self.grid.h()
    }

    pub fn radius_cells(&self) -> usize {
        q_half_cells(self.n_outer, self.delta_cells, self.crown_index)
    }

    /// Half-width of `Q^{i₀+1}`.
    pub fn inner_radius(&self) -> f64 {
        q_half_cells(self.n_outer, self.delta_cells, self.crown_index + 1) as f64 * self.grid.h()
    }

    pub fn max_level(&self) -> u32 {
        self.level_counts.len() as u32 - 1
    }

    /// `Q^{i₀} \ B`, where the blended field lives.
    pub fn blend_mask(&self) -> Vec<bool> {
        self.inside.iter().zip(&self.bad).map(|(i, b)| *i && !*b).collect()
    }

    pub fn good_count(&self) -> usize {
        self.good.iter().filter(|g| **g).count()
    }

    /// Smallest `C` with `σ_k ≤ C 2^{k(n−1)} / δ^{n−1}` over all slabs.
    pub fn sigma_constant(&self) -> f64 {
        let d = self.grid.dim as i32 - 1;
        self.level_counts
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &s)| s as f64 * self.delta.powi(d) / 2f64.powi(k as i32 * d))
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct CubeOut<'a> {
            level: u32,
            anchor: &'a [usize],
            side: usize,
            good: bool,
            jump_faces: usize,
        }
        let dim = self.grid.dim;
        let cubes: Vec<CubeOut> = self
            .cubes
            .iter()
            .enumerate()
            .map(|(i, q)| CubeOut {
                level: q.level,
                anchor: &q.anchor[..dim],
                side: q.side,
                good: self.good[i],
                jump_faces: self.jump_faces[i],
            })
            .collect();
        let bad_voxels: Vec<Vec<usize>> = (0..self.grid.num_cells())
            .filter(|&c| self.bad[c])
            .map(|c| self.grid.coords(c)[..dim].to_vec())
            .collect();
        serde_json::json!({
            "delta": self.delta,
            "i0": self.crown_index,
            "R": self.radius(),
            "eta": self.eta,
            "level_counts": self.level_counts,
            "cubes": cubes,
            "bad_voxels": bad_voxels,
        })
    }
}

/// Face-count perimeters of the bad set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerimeterReport {
    /// `H^{n−1}(∂B)` inside the domain, truncation sliver included.
    pub perimeter: f64,
    /// Perimeter of the union of bad cubes alone.
    pub cube_perimeter: f64,
    /// `H^{n−1}(J ∩ (C^{i₀} ∪ C^{i₀+1}))`.
    pub crown_jump: f64,
    /// `cube_perimeter / crown_jump`; zero when there are no bad cubes.
    pub ratio: f64,
}

fn mask_perimeter(grid: &GridSpec, mask: &[bool]) -> usize {
    grid.interior_faces()
        .filter(|f| {
            let (a, b) = grid.face_cells(*f);
            mask[a] != mask[b]
        })
        .count()
}

pub fn bad_set_perimeter(covering: &WhitneyCovering, jumps: &JumpSet) -> PerimeterReport {
    let grid = &covering.grid;
    let mut cube_mask = vec![false; grid.num_cells()];
    for (ci, q) in covering.cubes.iter().enumerate() {
        if !covering.good[ci] {
            for c in q.cells(grid, Enlargement::Base) {
                cube_mask[c] = true;
            }
        }
    }
    let area = grid.face_area();
    let perimeter = mask_perimeter(grid, &covering.bad) as f64 * area;
    let cube_perimeter = mask_perimeter(grid, &cube_mask) as f64 * area;
    let outer = crate::crown::q_box(grid, covering.n_outer, covering.delta_cells, covering.crown_index);
    let inner = crate::crown::q_box(grid, covering.n_outer, covering.delta_cells, covering.crown_index + 2);
    let crown = field_core::Region::Diff(
        Box::new(field_core::Region::Box(outer)),
        Box::new(field_core::Region::Box(inner)),
    );
    let crown_jump = jumps.measure_in(&crown);
    let ratio = if cube_perimeter == 0.0 {
        0.0
    } else if crown_jump > 0.0 {
        cube_perimeter / crown_jump
    } else {
        f64::INFINITY
    };
    PerimeterReport { perimeter, cube_perimeter, crown_jump, ratio }
}
