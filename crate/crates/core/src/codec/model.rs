//! Static integer frequency model for index distances.
//!
//! Symbol `s ∈ 1..=L` is a distance between successive nonzero indices and
//! symbol [`TERMINATOR`](super::TERMINATOR) (0) ends the list. Unnormalised masses are
//!
//! ```text
//! q(s) = exp(-s² / 2σ²) + c0        for s = 1..=L
//! q(ι) = c0 · L / 10
//! ```
//!
//! and are scaled to integer frequencies summing to exactly 2¹⁶ with every
//! symbol getting at least 1.

use crate::error::{Error, Result};

pub const FREQ_BITS: u32 = 16;
pub const FREQ_TOTAL: u32 = 1 << FREQ_BITS;

/// Terminator mass multiplier per unit of `L`.
const TERMINATOR_BOOST_PER_SYMBOL: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolModel {
    max_distance: usize,
    sigma2: f64,
    c0: f64,
    freq: Vec<u32>,
    /// `cum[s]` = sum of `freq[..s]`; length `L + 2`.
    cum: Vec<u32>,
}

/// Unnormalised mass of distance `s` (`s ≥ 1`).
pub fn distance_mass(s: usize, sigma2: f64, c0: f64) -> f64 {
    let s = s as f64;
    libm::exp(-(s * s) / (2.0 * sigma2)) + c0
}

/// Unnormalised mass of the terminator for alphabet bound `L`.
pub fn terminator_mass(max_distance: usize, c0: f64) -> f64 {
    c0 * max_distance as f64 * TERMINATOR_BOOST_PER_SYMBOL
}

/// Builds the model for distances `1..=max_distance`.
pub fn build_model(max_distance: usize, sigma2: f64, c0: f64) -> Result<SymbolModel> {
    if max_distance == 0 {
        return Err(Error::InvalidArgument("alphabet needs at least one distance".into()));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite() && c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "model needs sigma2 > 0 and c0 > 0, got sigma2={sigma2}, c0={c0}"
        )));
    }
    let symbols = max_distance + 1;
    if symbols > FREQ_TOTAL as usize {
        return Err(Error::AlphabetTooLarge(symbols));
    }

    let mut mass = Vec::with_capacity(symbols);
    mass.push(terminator_mass(max_distance, c0));
    mass.extend((1..=max_distance).map(|s| distance_mass(s, sigma2, c0)));
    let total_mass: f64 = mass.iter().sum();

    // one guaranteed count per symbol, the rest by largest remainder
    let spare = (FREQ_TOTAL as usize - symbols) as f64;
    let mut freq = vec![1u32; symbols];
    let mut remainders = Vec::with_capacity(symbols);
    let mut assigned: u64 = 0;
    for (s, &q) in mass.iter().enumerate() {
        let ideal = q / total_mass * spare;
        let whole = ideal.floor();
        freq[s] += whole as u32;
        assigned += whole as u64;
        remainders.push((ideal - whole, s));
    }
    let leftover = (FREQ_TOTAL as u64 - symbols as u64 - assigned) as usize;
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, s) in remainders.iter().take(leftover) {
        freq[s] += 1;
    }

    let mut cum = Vec::with_capacity(symbols + 1);
    let mut acc = 0u32;
    cum.push(0);
    for &f in &freq {
        acc += f;
        cum.push(acc);
    }
    debug_assert_eq!(acc, FREQ_TOTAL);
    Ok(SymbolModel {
        max_distance,
        sigma2,
        c0,
        freq,
        cum,
    })
}

impl SymbolModel {
    /// Largest codable distance `L`.
    pub fn max_distance(&self) -> usize {
        self.max_distance
    }

    /// Alphabet size `L + 1`.
    pub fn alphabet_size(&self) -> usize {
        self.freq.len()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn frequencies(&self) -> &[u32] {
        &self.freq
    }

    pub fn freq(&self, symbol: u32) -> u32 {
        self.freq[symbol as usize]
    }

    pub fn cum_freq(&self, symbol: u32) -> u32 {
        self.cum[symbol as usize]
    }

    pub fn contains(&self, symbol: u32) -> bool {
        (symbol as usize) < self.freq.len()
    }

    /// Model probability `freq / 2¹⁶`.
    pub fn probability(&self, symbol: u32) -> f64 {
        self.freq[symbol as usize] as f64 / FREQ_TOTAL as f64
    }

    /// Symbol whose cumulative interval contains `target < 2¹⁶`.
    pub fn symbol_for(&self, target: u32) -> u32 {
        debug_assert!(target < FREQ_TOTAL);
        (self.cum.partition_point(|&c| c <= target) - 1) as u32
    }

    /// Shannon entropy of the integer model, in bits per symbol.
    pub fn entropy_bits(&self) -> f64 {
        self.freq
            .iter()
            .map(|&f| {
                let p = f as f64 / FREQ_TOTAL as f64;
                -p * p.log2()
            })
            .sum()
    }

    /// `Σ -log2 p(s)` over a symbol sequence.
    pub fn information_bits(&self, symbols: &[u32]) -> f64 {
        symbols.iter().map(|&s| -self.probability(s).log2()).sum()
    }
}
