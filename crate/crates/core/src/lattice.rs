//! Checkerboard sublattices, 4-ary clique trees and dynamical clique
//! allocation.

use crate::error::{Error, Result};
use crate::optimizer::ChangeProbMap;

/// Default activation threshold for dynamical clique allocation.
pub const DEFAULT_BETA_T: f64 = 0.1;

/// Which of the two interleaved sublattices a pixel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sublattice {
    A,
    B,
}

impl Sublattice {
    pub fn other(self) -> Sublattice {
        match self {
            Sublattice::A => Sublattice::B,
            Sublattice::B => Sublattice::A,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sublattice::A => "A",
            Sublattice::B => "B",
        }
    }
}

/// Checkerboard split: `(row, col)` is in A iff `row + col` is even.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SublatticePartition {
    width: usize,
    height: usize,
    pub a_indices: Vec<usize>,
    pub b_indices: Vec<usize>,
}

impl SublatticePartition {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sublattice_of(&self, index: usize) -> Sublattice {
        let (row, col) = (index / self.width, index % self.width);
        if (row + col) % 2 == 0 {
            Sublattice::A
        } else {
            Sublattice::B
        }
    }

    pub fn indices(&self, which: Sublattice) -> &[usize] {
        match which {
            Sublattice::A => &self.a_indices,
            Sublattice::B => &self.b_indices,
        }
    }
}

pub fn tessellate(width: usize, height: usize) -> Result<SublatticePartition> {
    if width == 0 || height == 0 {
        return Err(Error::Dimensions {
            width,
            height,
            reason: "cannot tessellate an empty image",
        });
    }
    let n = width * height;
    let mut a_indices = Vec::with_capacity(n.div_ceil(2));
    let mut b_indices = Vec::with_capacity(n / 2);
    for row in 0..height {
        for col in 0..width {
            let idx = row * width + col;
            if (row + col) % 2 == 0 {
                a_indices.push(idx);
            } else {
                b_indices.push(idx);
            }
        }
    }
    Ok(SublatticePartition {
        width,
        height,
        a_indices,
        b_indices,
    })
}

/// Slot order of the cross neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];
}

/// A centre pixel, its in-bounds cross neighbours and one activation flag
/// per clique. Slots follow [`Direction::ALL`]; missing neighbours are
/// `None` and always inactive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueTree {
    pub center: usize,
    pub neighbors: [Option<usize>; 4],
    pub thetas: [bool; 4],
}

impl CliqueTree {
    pub fn neighbor_count(&self) -> usize {
        self.neighbors.iter().flatten().count()
    }

    pub fn active_count(&self) -> usize {
        self.thetas.iter().filter(|&&t| t).count()
    }

    /// `(direction, neighbour, theta)` for every existing neighbour.
    pub fn cliques(&self) -> impl Iterator<Item = (Direction, usize, bool)> + '_ {
        Direction::ALL
            .iter()
            .zip(self.neighbors.iter().zip(&self.thetas))
            .filter_map(|(&d, (n, &t))| n.map(|n| (d, n, t)))
    }
}

fn tree_at(center: usize, width: usize, height: usize) -> CliqueTree {
    let (row, col) = (center / width, center % width);
    let neighbors = [
        (row > 0).then(|| center - width),
        (row + 1 < height).then(|| center + width),
        (col > 0).then(|| center - 1),
        (col + 1 < width).then(|| center + 1),
    ];
    CliqueTree {
        center,
        neighbors,
        thetas: neighbors.map(|n| n.is_some()),
    }
}

/// Clique trees centred on the pixels of each sublattice, `(A, B)`, in the
/// partition's index order.
pub fn build_trees(
    partition: &SublatticePartition,
    width: usize,
    height: usize,
) -> Result<(Vec<CliqueTree>, Vec<CliqueTree>)> {
    if partition.width() != width || partition.height() != height {
        return Err(Error::Dimensions {
            width,
            height,
            reason: "partition was built for a different image size",
        });
    }
    let build = |idx: &[usize]| idx.iter().map(|&c| tree_at(c, width, height)).collect();
    Ok((build(&partition.a_indices), build(&partition.b_indices)))
}

/// Sets `θ = 1` iff the neighbour exists and both endpoint probabilities are
/// at least `beta_t`.
pub fn allocate_cliques(trees: &mut [CliqueTree], beta_map: &ChangeProbMap, beta_t: f64) {
    let beta = beta_map.values();
    for tree in trees.iter_mut() {
        let center_on = beta[tree.center] >= beta_t;
        for (theta, n) in tree.thetas.iter_mut().zip(&tree.neighbors) {
            *theta = match n {
                Some(n) => center_on && beta[*n] >= beta_t,
                None => false,
            };
        }
    }
}
