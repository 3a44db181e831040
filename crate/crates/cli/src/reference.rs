//! The fixed 5-state, 3-action, two-constraint instance used by the
//! pipeline experiments.
//!
//! Action 0 drifts forward around a ring and earns the most reward; action 1
//! drifts backward and pays into the first constraint; action 2 resets to a
//! uniform state and pays into the second. Both constraints bind at the
//! optimum (`λ* ≈ (0.80, 0.23)`) and the Slater constant is about 0.546.

use cmdp_core::{CmdpSpec, Kernel, Table};

pub const REFERENCE_NAME: &str = "ring-5x3-d2";
pub const REFERENCE_GAMMA: f64 = 0.5;

const REWARD: [[f64; 3]; 5] = [
    [0.9, 0.2, 0.4],
    [0.8, 0.3, 0.3],
    [1.0, 0.1, 0.5],
    [0.7, 0.2, 0.4],
    [0.9, 0.3, 0.2],
];
const COST_BACK: [[f64; 3]; 5] = [
    [0.1, 0.9, 0.5],
    [0.2, 0.8, 0.6],
    [0.1, 1.0, 0.4],
    [0.3, 0.9, 0.5],
    [0.2, 0.8, 0.6],
];
const COST_RESET: [[f64; 3]; 5] = [
    [0.2, 0.3, 0.9],
    [0.1, 0.4, 0.8],
    [0.3, 0.2, 1.0],
    [0.2, 0.3, 0.9],
    [0.1, 0.4, 0.8],
];

fn table(rows: &[[f64; 3]; 5]) -> Table {
    Table::new(5, 3, rows.iter().flatten().copied().collect()).expect("5x3 table")
}

pub fn reference_instance() -> CmdpSpec {
    let ns = 5;
    let mut probs = vec![0.0; ns * 3 * ns];
    let mut add = |s: usize, a: usize, next: usize, p: f64| probs[(s * 3 + a) * ns + next] += p;
    for s in 0..ns {
        add(s, 0, (s + 1) % ns, 0.7);
        add(s, 0, s, 0.3);
        add(s, 1, (s + ns - 1) % ns, 0.6);
        add(s, 1, s, 0.2);
        add(s, 1, (s + 2) % ns, 0.2);
        for next in 0..ns {
            add(s, 2, next, 0.2);
        }
    }
    let kernel = Kernel::new(ns, 3, probs).expect("ring kernel");
    CmdpSpec::new(
        REFERENCE_GAMMA,
        kernel,
        table(&REWARD),
        vec![table(&COST_BACK), table(&COST_RESET)],
        vec![0.8, 0.8],
        vec![0.2; ns],
    )
    .expect("reference instance shapes")
}
