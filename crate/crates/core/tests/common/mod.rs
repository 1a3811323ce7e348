//! Small two-control problem and an exhaustive reference solver that shares
//! no code with the library's operators or policy iteration.

#![allow(dead_code)]

use qvi_core::{ControlProblem, ControlSets, SpaceGrid};

pub const DX: f64 = 1.0 / 6.0;

/// 1-D on [0, 1] with five interior nodes. Control 0 drifts up and pays `x`,
/// control 1 drifts down and pays `2 − 2x`. Above 0.4 an impulse moves the
/// state two nodes down for `K = 0.5x − 0.1`. The right boundary follows the
/// last interior node.
pub struct Toy {
    sets: ControlSets<usize, ()>,
}

impl Toy {
    pub fn new() -> Self {
        Self {
            sets: ControlSets::new(vec![0, 1], vec![()]),
        }
    }
}

pub fn mu(a: usize, x: f64) -> f64 {
    if a == 0 {
        0.3
    } else {
        -0.2 * (1.0 + x)
    }
}

pub fn sigma2(_a: usize, x: f64) -> f64 {
    0.05 + 0.1 * x * x
}

pub fn profit(a: usize, x: f64) -> f64 {
    if a == 0 {
        x
    } else {
        2.0 - 2.0 * x
    }
}

pub fn terminal(x: f64) -> f64 {
    (3.0 * x).sin()
}

pub fn impulse_profit(x: f64) -> f64 {
    0.5 * x - 0.1
}

impl ControlProblem<f64> for Toy {
    type Control = usize;
    type Impulse = ();

    fn dim(&self) -> usize {
        1
    }
    fn controls(&self) -> &ControlSets<usize, ()> {
        &self.sets
    }
    fn drift(&self, _: f64, x: &[f64], a: &usize, out: &mut [f64]) {
        out[0] = mu(*a, x[0]);
    }
    fn diffusion_sq(&self, _: f64, x: &[f64], a: &usize, out: &mut [f64]) {
        out[0] = sigma2(*a, x[0]);
    }
    fn running_profit(&self, _: f64, x: &[f64], a: &usize) -> f64 {
        profit(*a, x[0])
    }
    fn terminal_value(&self, x: &[f64]) -> f64 {
        terminal(x[0])
    }
    fn intervention(&self, _: f64, x: &[f64], _: &(), out: &mut [f64]) -> bool {
        out[0] = x[0] - 2.0 * DX;
        x[0] > 0.4
    }
    fn intervention_profit(&self, _: f64, x: &[f64], _: &()) -> f64 {
        impulse_profit(x[0])
    }
    fn boundary_value(&self, _: f64, x: &[f64], grid: &SpaceGrid<f64>, phi: &[f64]) -> f64 {
        if x[0] < 0.5 {
            0.1
        } else {
            let last = grid.index_of(&[1.0 - DX]).unwrap();
            phi[last] + 0.02
        }
    }
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let m = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= m * a[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Exhaustive backward solve on the lattice `x_m = m·DX`, `m = 0..=6`.
/// Each step enumerates every per-node choice (control 0, control 1, or the
/// impulse where available), solves the implicit step for that choice
/// densely, and keeps the componentwise maximum. Returns `φ^0` at the
/// lattice points.
pub fn brute_force(horizon: f64, steps: usize) -> Vec<f64> {
    let m = 7;
    let xs: Vec<f64> = (0..m).map(|i| i as f64 * DX).collect();
    let dt = horizon / steps as f64;
    // Generator entries (lower, diagonal, upper) for node i and control a.
    let gen = |a: usize, x: f64| {
        let d = sigma2(a, x) / (DX * DX);
        let c = mu(a, x) / (2.0 * DX);
        (0.5 * d - c, -d, 0.5 * d + c)
    };
    let mut h: f64 = 1.0;
    for a in 0..2 {
        for &x in &xs[1..m - 1] {
            h = h.min(1.0 / gen(a, x).1.abs());
        }
    }
    let mut phi: Vec<f64> = xs.iter().map(|&x| terminal(x)).collect();
    phi[0] = 0.1;
    phi[m - 1] = phi[m - 2] + 0.02;

    for _ in 0..steps {
        let choices: Vec<usize> = (1..m - 1).map(|i| if xs[i] > 0.4 { 3 } else { 2 }).collect();
        let total: usize = choices.iter().product();
        let mut best = vec![f64::NEG_INFINITY; m];
        for code in 0..total {
            let mut a = vec![vec![0.0; m]; m];
            let mut b = vec![0.0; m];
            let mut rest = code;
            for (slot, i) in (1..m - 1).enumerate() {
                let choice = rest % choices[slot];
                rest /= choices[slot];
                a[i][i] = 1.0;
                if choice == 2 {
                    a[i][i - 2] -= 1.0;
                    b[i] = impulse_profit(xs[i]);
                } else {
                    // L̄ = δt/(h+δt)(I + hL), f̄ = (hδt f + h φ^{k+1})/(h+δt)
                    let (lo, di, up) = gen(choice, xs[i]);
                    let s = dt / (h + dt);
                    a[i][i - 1] -= s * h * lo;
                    a[i][i] -= s * (1.0 + h * di);
                    a[i][i + 1] -= s * h * up;
                    b[i] = (h * dt * profit(choice, xs[i]) + h * phi[i]) / (h + dt);
                }
            }
            a[0][0] = 1.0;
            b[0] = 0.1;
            a[m - 1][m - 1] = 1.0;
            a[m - 1][m - 2] = -1.0;
            b[m - 1] = 0.02;
            let v = dense_solve(a, b);
            for i in 0..m {
                best[i] = best[i].max(v[i]);
            }
        }
        phi = best;
    }
    phi
}
