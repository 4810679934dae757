//! Domain types for the packaging universe: boxes, cartons, packing units
//! and the carton/box relation.
//!
//! All lengths are integer millimetres and all volumes integer cubic
//! millimetres, so the sub-problem costs `V(box) - V(unit)` are exact.

mod cartons;
mod grid;
pub mod io;
mod units;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cartons::{derive_cartons, CreaseRule, QuarterCreaseRule, RelTable};
pub use grid::{generate_box_grid, GridSpec};
pub use units::{
    generate_synthetic_units, ingest_packing_units, write_packing_units, IngestOutcome,
    Rejection, SyntheticSpec,
};

/// Length, width and height in millimetres.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dim3 {
    pub l: u32,
    pub w: u32,
    pub h: u32,
}

impl Dim3 {
    pub fn new(l: u32, w: u32, h: u32) -> Result<Self> {
        if l == 0 || w == 0 || h == 0 {
            return Err(Error::Config(format!(
                "dimensions must be positive, got {l}x{w}x{h}"
            )));
        }
        Ok(Dim3 { l, w, h })
    }

    pub fn volume(&self) -> i64 {
        self.l as i64 * self.w as i64 * self.h as i64
    }

    pub fn to_array(self) -> [u32; 3] {
        [self.l, self.w, self.h]
    }

    pub fn from_array(a: [u32; 3]) -> Self {
        Dim3 {
            l: a[0],
            w: a[1],
            h: a[2],
        }
    }

    /// Components in nonincreasing order.
    pub fn sorted_desc(&self) -> [u32; 3] {
        let mut a = self.to_array();
        a.sort_unstable_by(|x, y| y.cmp(x));
        a
    }

    /// Componentwise `self <= other`.
    pub fn le_all(&self, other: &Dim3) -> bool {
        self.l <= other.l && self.w <= other.w && self.h <= other.h
    }
}

impl fmt::Display for Dim3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.l, self.w, self.h)
    }
}

impl FromStr for Dim3 {
    type Err = Error;

    /// Parses `LxWxH`, e.g. `155x155x105`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(['x', 'X']).collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("expected LxWxH, got {s:?}")));
        }
        let mut v = [0u32; 3];
        for (slot, part) in v.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad dimension {part:?} in {s:?}")))?;
        }
        Dim3::new(v[0], v[1], v[2])
    }
}

/// A candidate box format. Ids follow nondecreasing volume.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoxFormat {
    pub id: usize,
    pub dims: Dim3,
    pub volume: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Item {
    pub dims: Dim3,
}

/// The items of one order, shipped together in a single box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackingUnit {
    pub id: usize,
    pub external_id: String,
    pub items: Vec<Item>,
    pub volume: i64,
}

impl PackingUnit {
    pub fn new(id: usize, external_id: impl Into<String>, items: Vec<Item>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Config("packing unit without items".into()));
        }
        let volume = items.iter().map(|it| it.dims.volume()).sum();
        Ok(PackingUnit {
            id,
            external_id: external_id.into(),
            items,
            volume,
        })
    }

    pub fn item_dims(&self) -> Vec<Dim3> {
        self.items.iter().map(|it| it.dims).collect()
    }
}

/// A flat blank that folds into boxes of equal footprint and different
/// heights, one per crease line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Carton {
    pub id: usize,
    pub dims: Dim3,
    /// Sorted ascending; the last entry equals `dims.h`.
    pub crease_heights: Vec<u32>,
}

impl Carton {
    pub fn volume(&self) -> i64 {
        self.dims.volume()
    }
}

pub fn box_volumes(boxes: &[BoxFormat]) -> Vec<i64> {
    boxes.iter().map(|b| b.volume).collect()
}

pub fn unit_volumes(units: &[PackingUnit]) -> Vec<i64> {
    units.iter().map(|u| u.volume).collect()
}

/// Checks the volume ordering of box ids.
pub fn check_box_order(boxes: &[BoxFormat]) -> Result<()> {
    for (i, b) in boxes.iter().enumerate() {
        if b.id != i {
            return Err(Error::Config(format!("box at position {i} has id {}", b.id)));
        }
    }
    for pair in boxes.windows(2) {
        if pair[0].volume > pair[1].volume {
            return Err(Error::Config(format!(
                "boxes {} and {} are not in nondecreasing volume order",
                pair[0].id, pair[1].id
            )));
        }
    }
    Ok(())
}
