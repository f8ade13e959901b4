//! 0/1 knapsack by dynamic programming over integer weights.

/// One candidate item.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Item {
    pub weight: u64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub value: f64,
    pub selected: Vec<bool>,
}

impl Solution {
    pub fn weight(&self, items: &[Item]) -> u64 {
        items
            .iter()
            .zip(&self.selected)
            .filter(|(_, &s)| s)
            .map(|(i, _)| i.weight)
            .sum()
    }
}

/// Maximizes total value subject to total weight `<= capacity`.
///
/// Values must be non-negative. Among optimal subsets the one returned has
/// the smallest membership mask when item `i` is read as bit `i`: the
/// backtrack drops the highest-index item whenever an equally good subset
/// exists without it.
pub fn solve(items: &[Item], capacity: u64) -> Solution {
    let n = items.len();
    let total: u64 = items.iter().map(|i| i.weight).sum();
    let cap = capacity.min(total) as usize;
    let width = cap + 1;

    // best[c]: best value with weight <= c using the items seen so far.
    // take[i * width + c]: whether item i strictly improved best[c].
    let mut best = vec![0.0f64; width];
    let mut take = vec![false; n * width];
    for (i, item) in items.iter().enumerate() {
        let w = item.weight as usize;
        if w > cap {
            continue;
        }
        for c in (w..=cap).rev() {
            let with = best[c - w] + item.value;
            if with > best[c] {
                best[c] = with;
                take[i * width + c] = true;
            }
        }
    }

    let mut selected = vec![false; n];
    let mut c = cap;
    for i in (0..n).rev() {
        if take[i * width + c] {
            selected[i] = true;
            c -= items[i].weight as usize;
        }
    }
    let value = items
        .iter()
        .zip(&selected)
        .filter(|(_, &s)| s)
        .map(|(i, _)| i.value)
        .sum();
    Solution { value, selected }
}
