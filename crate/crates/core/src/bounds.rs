//! Box-constrained solver for symmetric positive-definite linear systems,
//! used for the damage evolution step (irreversibility as a lower bound,
//! d <= 1 as an upper bound).
//!
//! Primal active-set iteration: fix the active set on its bounds, solve
//! the free block, then exchange variables that violate feasibility or
//! whose multiplier has the wrong sign, in blocks.

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Free,
    Lower,
    Upper,
}

/// Solution of `solve_box_constrained` with convergence metadata.
#[derive(Debug, Clone)]
pub struct BoxSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Minimizes 1/2 x'Ax - b'x subject to lower <= x <= upper, for SPD `a`.
///
/// On return the KKT conditions hold: x feasible, the residual g = Ax - b
/// vanishes (to `tol`, relative to |b| and the diagonal scale) on free
/// variables, g >= 0 where the lower bound is active and g <= 0 where the
/// upper bound is active.
pub fn solve_box_constrained(
    a: &BandMatrix,
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
    tol: f64,
) -> Result<BoxSolution> {
    let n = a.n();
    assert_eq!(b.len(), n);
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    for i in 0..n {
        if lower[i] > upper[i] {
            return Err(Error::Solver(format!(
                "inconsistent bounds at index {i}: {} > {}",
                lower[i], upper[i]
            )));
        }
    }

    // multiplier sign tolerance scaled by the problem magnitude
    let b_scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let diag_scale = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
    let g_tol = tol * b_scale.max(diag_scale).max(1e-300);

    // start with everything clamped at the lower bound
    let mut state = vec![State::Lower; n];
    let mut x: Vec<f64> = lower.to_vec();
    let max_iter = 200 + n / 10;

    for it in 0..max_iter {
        // solve the free block by Dirichlet-style elimination of the
        // bound variables
        let free_count = state.iter().filter(|&&s| s == State::Free).count();
        if free_count > 0 {
            let mut sys = a.clone();
            let mut rhs = b.to_vec();
            let constraints: Vec<(usize, f64)> = (0..n)
                .filter(|&i| state[i] != State::Free)
                .map(|i| (i, x[i]))
                .collect();
            sys.apply_dirichlet(&mut rhs, &constraints);
            x = sys.cholesky()?.solve(&rhs);
        }

        // clamp free variables that left the box: they join the active set
        let mut changed = false;
        for i in 0..n {
            if state[i] != State::Free {
                continue;
            }
            if x[i] < lower[i] {
                x[i] = lower[i];
                state[i] = State::Lower;
                changed = true;
            } else if x[i] > upper[i] {
                x[i] = upper[i];
                state[i] = State::Upper;
                changed = true;
            }
        }
        if changed {
            continue;
        }

        // feasible; release active variables whose multiplier has the
        // wrong sign (g >= 0 required at lower bounds, g <= 0 at upper)
        let g = {
            let ax = a.matvec(&x);
            ax.iter().zip(b).map(|(ai, bi)| ai - bi).collect::<Vec<f64>>()
        };
        let mut released = false;
        for i in 0..n {
            match state[i] {
                State::Lower if g[i] < -g_tol => {
                    state[i] = State::Free;
                    released = true;
                }
                State::Upper if g[i] > g_tol => {
                    state[i] = State::Free;
                    released = true;
                }
                _ => {}
            }
        }
        if !released {
            return Ok(BoxSolution {
                x,
                iterations: it + 1,
            });
        }
    }
    Err(Error::Solver(format!(
        "active-set iteration did not settle in {max_iter} sweeps"
    )))
}
