use std::ops::Range;

/// Index blocks whose all-ones vector spans a null direction to be projected out
/// (zero-mean pressure and multiplier).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NullSpace {
    blocks: Vec<Range<usize>>,
}

impl NullSpace {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(blocks: Vec<Range<usize>>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Removes the mean of every block.
    pub fn project(&self, x: &mut [f64]) {
        for b in &self.blocks {
            let n = b.len();
            if n == 0 {
                continue;
            }
            let mean = x[b.clone()].iter().sum::<f64>() / n as f64;
            x[b.clone()].iter_mut().for_each(|v| *v -= mean);
        }
    }
}
