use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::markov::types::StochasticMatrix;

/// Outcome of [`ergodicity_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErgodicityReport {
    /// Communicating classes, each sorted, ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
    /// Period of each class (gcd of return-cycle lengths).
    pub periods: Vec<usize>,
    pub irreducible: bool,
    pub aperiodic: bool,
}

impl ErgodicityReport {
    pub fn passed(&self) -> bool {
        self.irreducible && self.aperiodic
    }

    pub fn describe(&self) -> String {
        if self.passed() {
            return "irreducible and aperiodic".into();
        }
        let mut parts = Vec::new();
        if !self.irreducible {
            parts.push(format!("{} communicating classes", self.classes.len()));
        }
        if !self.aperiodic {
            parts.push(format!("periods {:?}", self.periods));
        }
        parts.join(", ")
    }
}

fn reachable(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of the class containing `root`: BFS levels `d` inside the class
/// give the period as the gcd of `d(i) + 1 − d(j)` over class edges `i → j`.
fn class_period(adj: &[Vec<usize>], class: &[usize], root: usize) -> usize {
    let n = adj.len();
    let mut member = vec![false; n];
    for &i in class {
        member[i] = true;
    }
    let mut level = vec![usize::MAX; n];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut g = 0;
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !member[j] {
                continue;
            }
            if level[j] == usize::MAX {
                level[j] = level[i] + 1;
                queue.push_back(j);
            } else {
                g = gcd(g, (level[i] + 1).abs_diff(level[j]));
            }
        }
    }
    g
}

pub(crate) fn pattern_report(m: &DMatrix<f64>) -> ErgodicityReport {
    let n = m.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| m[(i, j)] > 0.0).collect())
        .collect();
    let reach: Vec<Vec<bool>> = (0..n).map(|i| reachable(&adj, i)).collect();
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    let mut periods = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &class {
            assigned[j] = true;
        }
        periods.push(class_period(&adj, &class, i));
        classes.push(class);
    }
    let irreducible = classes.len() == 1;
    // A class with no internal edge (transient singleton) has period 0.
    let aperiodic = periods.iter().all(|&p| p == 1);
    ErgodicityReport {
        classes,
        periods,
        irreducible,
        aperiodic,
    }
}

/// Irreducibility and aperiodicity of a finite chain. Irreducible finite
/// chains are automatically positive recurrent.
pub fn ergodicity_check(transition: &StochasticMatrix) -> ErgodicityReport {
    pattern_report(transition.matrix())
}
