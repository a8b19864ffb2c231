//! Resonant Jaynes-Cummings evolution at a fixed pulse area `g t`.
//!
//! With `H = g (a |e><g| + a^dag |g><e|)` the propagator splits into four
//! field operators acting on the atomic amplitudes `(C_g, C_e)`:
//!
//! ```text
//! U_gg = cos(gt sqrt(a^dag a))
//! U_ge = -i sin(gt sqrt(a^dag a)) (a^dag a)^{-1/2} a^dag
//! U_eg = -i sin(gt sqrt(a a^dag)) (a a^dag)^{-1/2} a
//! U_ee = cos(gt sqrt(a a^dag))
//! ```
//!
//! `U_gg`, `U_ee` are diagonal; `U_ge` (`|m> -> |m+1>`) and `U_eg`
//! (`|m+1> -> |m>`) share the stripe `-i sin(gt sqrt(m+1))`.
//! Joint vectors and matrices use the block layout `(g-block, e-block)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::FieldState;
use crate::linalg::{self, Banded, I, ZERO};
use crate::qubit::{QubitDensity, QubitState};

#[derive(Clone, Debug)]
pub struct JcmBlocks {
    gt: f64,
    u_gg: Vec<f64>,
    u_ee: Vec<f64>,
    /// `sin(gt sqrt(m+1))`; entry `D-1` is the coupling that leaves the
    /// truncated space and is not part of any operator.
    stripe: Vec<f64>,
    ops: [Banded; 4],
}

impl JcmBlocks {
    pub fn new(gt: f64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall { dim, required: 2 });
        }
        if !gt.is_finite() {
            return Err(Error::InvalidArgument(format!("pulse area {gt} is not finite")));
        }
        let u_gg: Vec<f64> = (0..dim).map(|n| (gt * (n as f64).sqrt()).cos()).collect();
        let u_ee: Vec<f64> = (0..dim).map(|n| (gt * (n as f64 + 1.0).sqrt()).cos()).collect();
        let stripe: Vec<f64> = (0..dim).map(|m| (gt * (m as f64 + 1.0).sqrt()).sin()).collect();

        let minus_i_sin: Vec<C64> = stripe.iter().map(|&s| -I * s).collect();
        let ops = [
            Banded::diagonal(u_gg.iter().map(|&c| C64::new(c, 0.0)).collect()),
            Banded::raising(&minus_i_sin, dim),
            Banded::lowering(&minus_i_sin, dim),
            Banded::diagonal(u_ee.iter().map(|&c| C64::new(c, 0.0)).collect()),
        ];
        Ok(Self {
            gt,
            u_gg,
            u_ee,
            stripe,
            ops,
        })
    }

    pub fn gt(&self) -> f64 {
        self.gt
    }

    pub fn dim(&self) -> usize {
        self.u_gg.len()
    }

    pub fn u_gg_diag(&self) -> &[f64] {
        &self.u_gg
    }

    pub fn u_ee_diag(&self) -> &[f64] {
        &self.u_ee
    }

    pub fn stripe(&self) -> &[f64] {
        &self.stripe
    }

    pub fn u_gg(&self) -> &Banded {
        &self.ops[0]
    }

    pub fn u_ge(&self) -> &Banded {
        &self.ops[1]
    }

    pub fn u_eg(&self) -> &Banded {
        &self.ops[2]
    }

    pub fn u_ee(&self) -> &Banded {
        &self.ops[3]
    }

    /// Field operators conditioned on the final atomic state, for an atom
    /// prepared in `atom`: `(K_g, K_e) = (c_g U_gg + c_e U_ge, c_g U_eg + c_e U_ee)`.
    pub fn kraus(&self, atom: &QubitState) -> (Banded, Banded) {
        let kg = self.u_gg().scale(atom.g).add(&self.u_ge().scale(atom.e));
        let ke = self.u_eg().scale(atom.g).add(&self.u_ee().scale(atom.e));
        (kg, ke)
    }

    /// Dense `2D x 2D` propagator in the `(g-block, e-block)` layout.
    pub fn joint_unitary(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut u = DMatrix::zeros(2 * d, 2 * d);
        for (row_blk, col_blk, op) in [(0, 0, 0), (0, 1, 1), (1, 0, 2), (1, 1, 3)] {
            for (i, j, v) in self.ops[op].entries() {
                u[(row_blk * d + i, col_blk * d + j)] = v;
            }
        }
        u
    }
}

/// Atom-field pure state as two field-amplitude blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    pub g_block: Vec<C64>,
    pub e_block: Vec<C64>,
}

impl JointState {
    pub fn product(atom: &QubitState, field: &FieldState) -> Self {
        Self {
            g_block: field.amps().iter().map(|&c| atom.g * c).collect(),
            e_block: field.amps().iter().map(|&c| atom.e * c).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.g_block.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.g_block) + linalg::norm_sqr(&self.e_block)
    }

    pub fn inner(&self, other: &JointState) -> C64 {
        linalg::inner(&self.g_block, &other.g_block) + linalg::inner(&self.e_block, &other.e_block)
    }

    /// Flattened `(g-block, e-block)` vector.
    pub fn to_vec(&self) -> Vec<C64> {
        self.g_block.iter().chain(&self.e_block).copied().collect()
    }

    pub fn from_slice(v: &[C64]) -> Self {
        let d = v.len() / 2;
        Self {
            g_block: v[..d].to_vec(),
            e_block: v[d..].to_vec(),
        }
    }

    pub fn to_density(&self) -> DMatrix<C64> {
        linalg::outer(&self.to_vec())
    }
}

fn apply_blocks(blocks: &JcmBlocks, g: &[C64], e: &[C64], out_g: &mut [C64], out_e: &mut [C64]) {
    let d = g.len();
    let s = &blocks.stripe;
    for n in 0..d {
        let mut vg = g[n] * blocks.u_gg[n];
        if n > 0 {
            vg += -I * s[n - 1] * e[n - 1];
        }
        let mut ve = e[n] * blocks.u_ee[n];
        if n + 1 < d {
            ve += -I * s[n] * g[n + 1];
        }
        out_g[n] = vg;
        out_e[n] = ve;
    }
}

pub fn evolve_joint(blocks: &JcmBlocks, psi: &JointState) -> JointState {
    assert_eq!(blocks.dim(), psi.dim(), "dimension mismatch");
    let d = psi.dim();
    let mut out = JointState {
        g_block: vec![ZERO; d],
        e_block: vec![ZERO; d],
    };
    apply_blocks(blocks, &psi.g_block, &psi.e_block, &mut out.g_block, &mut out.e_block);
    out
}

fn apply_to_columns(blocks: &JcmBlocks, m: &DMatrix<C64>) -> DMatrix<C64> {
    let d = blocks.dim();
    let mut out = DMatrix::zeros(2 * d, m.ncols());
    let mut tmp = vec![ZERO; 2 * d];
    for c in 0..m.ncols() {
        let col = m.column(c);
        let col = col.as_slice();
        let (tg, te) = tmp.split_at_mut(d);
        apply_blocks(blocks, &col[..d], &col[d..], tg, te);
        out.column_mut(c).copy_from_slice(&tmp);
    }
    out
}

/// `U rho U^dag` for a `2D x 2D` joint density.
pub fn evolve_joint_density(blocks: &JcmBlocks, rho: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(rho.nrows(), 2 * blocks.dim(), "dimension mismatch");
    let u_rho = apply_to_columns(blocks, rho);
    apply_to_columns(blocks, &u_rho.adjoint()).adjoint()
}

/// Field block `rho_gg + rho_ee`.
pub fn trace_out_atom(rho_joint: &DMatrix<C64>) -> crate::fock::FieldDensity {
    let d = rho_joint.nrows() / 2;
    let m = rho_joint.view((0, 0), (d, d)) + rho_joint.view((d, d), (d, d));
    crate::fock::FieldDensity::from_matrix_unchecked(m)
}

pub fn trace_out_field(rho_joint: &DMatrix<C64>) -> QubitDensity {
    let d = rho_joint.nrows() / 2;
    let mut q = nalgebra::Matrix2::zeros();
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        q[(a, b)] = (0..d).map(|n| rho_joint[(a * d + n, b * d + n)]).sum();
    }
    QubitDensity(q)
}
