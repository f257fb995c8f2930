//! Who may mine the next block, stated as directly as possible.
//!
//! Miners are indices `0..m` in registration order. `history` lists the
//! miner of each non-genesis block, oldest first.

/// `ceil(num / den * m)`.
pub fn window(num: u64, den: u64, m: usize) -> usize {
    ((num * m as u64).div_ceil(den)) as usize
}

/// A miner is eligible when it is active and mined none of the last
/// `window - 1` blocks.
pub fn eligible(history: &[usize], m: usize, window: usize, active: &[bool]) -> Vec<usize> {
    let lookback = window.saturating_sub(1).min(history.len());
    let recent = &history[history.len() - lookback..];
    (0..m).filter(|i| active[*i] && !recent.contains(i)).collect()
}

/// Round-robin start at `(height - 1) mod m`, then the first eligible
/// miner going forward.
pub fn proposer(height: u64, m: usize, eligible: &[usize]) -> Option<usize> {
    let start = ((height - 1) % m as u64) as usize;
    (0..m).map(|k| (start + k) % m).find(|i| eligible.contains(i))
}

/// The next active miner after the proposer, wrapping around.
pub fn validator(proposer: usize, m: usize, active: &[bool]) -> Option<usize> {
    (1..m).map(|k| (proposer + k) % m).find(|i| active[*i])
}

/// Every run of `window` consecutive entries has no repeated miner.
pub fn window_respected(history: &[usize], window: usize) -> bool {
    if window == 0 {
        return true;
    }
    history.windows(window.min(history.len()).max(1)).all(|w| {
        let mut seen = Vec::new();
        w.iter().all(|x| {
            let fresh = !seen.contains(x);
            seen.push(*x);
            fresh
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_window_is_four_of_five() {
        assert_eq!(window(3, 4, 5), 4);
        assert_eq!(eligible(&[0, 1, 2], 5, 4, &[true; 5]), vec![3, 4]);
        assert_eq!(eligible(&[0, 1, 2, 3], 5, 4, &[true; 5]), vec![0, 4]);
    }

    #[test]
    fn scan_skips_recent_miners() {
        assert_eq!(proposer(6, 5, &[1, 4]), Some(1));
        assert_eq!(proposer(1, 5, &[]), None);
        assert_eq!(validator(4, 5, &[false, true, true, true, true]), Some(1));
    }
}
