//! Explicit n-bit permutations with an append-only query ledger.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// An n-bit word, n <= 24.
pub type Word = u32;

pub const MIN_WIDTH: u32 = 2;
pub const MAX_WIDTH: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+")]
    Forward,
    #[serde(rename = "-")]
    Inverse,
}

impl Direction {
    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Forward => "+",
            Direction::Inverse => "-",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub direction: Direction,
    pub input: Word,
    pub output: Word,
    pub round: usize,
}

/// A bijection on `{0,1}^n` stored as forward and inverse tables.
///
/// The tables never change after construction. [`Permutation::query`] is
/// the only mutating operation and appends exactly one ledger record.
#[derive(Debug, Clone)]
pub struct Permutation {
    width: u32,
    forward: Vec<Word>,
    inverse: Vec<Word>,
    ledger: Vec<QueryRecord>,
}

fn check_width(width: u32) -> Result<()> {
    if (MIN_WIDTH..=MAX_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(Error::WidthOutOfRange(width))
    }
}

impl Permutation {
    /// Uniform permutation drawn by a Fisher-Yates shuffle of the identity
    /// table, driven by the crate PRNG seeded with `seed`.
    pub fn sample(width: u32, seed: u64) -> Result<Permutation> {
        Self::sample_with(width, &mut rng::from_seed(seed))
    }

    pub fn sample_with<R: Rng + ?Sized>(width: u32, rng: &mut R) -> Result<Permutation> {
        check_width(width)?;
        let mut forward: Vec<Word> = (0..1u32 << width).collect();
        forward.shuffle(rng);
        Ok(Self::from_forward_unchecked(width, forward))
    }

    pub fn identity(width: u32) -> Result<Permutation> {
        check_width(width)?;
        Ok(Self::from_forward_unchecked(width, (0..1u32 << width).collect()))
    }

    /// Builds a permutation from an explicit forward table.
    pub fn from_table(width: u32, forward: Vec<Word>) -> Result<Permutation> {
        check_width(width)?;
        let size = 1usize << width;
        if forward.len() != size {
            return Err(Error::BadShape(format!("table has {} entries, expected {size}", forward.len())));
        }
        let mut seen = vec![false; size];
        for &y in &forward {
            let slot = seen.get_mut(y as usize).ok_or(Error::WordOutOfRange { word: y, width })?;
            if *slot {
                return Err(Error::BadShape(format!("table repeats {y:#x}")));
            }
            *slot = true;
        }
        Ok(Self::from_forward_unchecked(width, forward))
    }

    fn from_forward_unchecked(width: u32, forward: Vec<Word>) -> Permutation {
        let mut inverse = vec![0; forward.len()];
        for (x, &y) in forward.iter().enumerate() {
            inverse[y as usize] = x as Word;
        }
        Permutation { width, forward, inverse, ledger: Vec::new() }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn mask(&self) -> Word {
        ((1u64 << self.width) - 1) as Word
    }

    pub fn check_word(&self, word: Word) -> Result<()> {
        if word <= self.mask() {
            Ok(())
        } else {
            Err(Error::WordOutOfRange { word, width: self.width })
        }
    }

    /// Answers a query and records it in the ledger.
    pub fn query(&mut self, direction: Direction, input: Word, round: usize) -> Result<Word> {
        self.check_word(input)?;
        let output = self.peek(direction, input);
        self.ledger.push(QueryRecord { direction, input, output, round });
        Ok(output)
    }

    /// Table lookup without touching the ledger. `input` must fit the width.
    pub fn peek(&self, direction: Direction, input: Word) -> Word {
        match direction {
            Direction::Forward => self.forward[input as usize],
            Direction::Inverse => self.inverse[input as usize],
        }
    }

    pub fn ledger(&self) -> &[QueryRecord] {
        &self.ledger
    }

    pub fn query_count(&self) -> usize {
        self.ledger.len()
    }

    pub fn fixed_points(&self) -> usize {
        self.forward.iter().enumerate().filter(|&(x, &y)| x as Word == y).count()
    }
}
