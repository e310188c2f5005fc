//! Index arithmetic for the frequency comb.
//!
//! Every comb mode carries a frequency index `n` (in units of the free
//! spectral range, relative to an arbitrary offset). Two modes can be
//! two-mode squeezed by a pump of index `p` iff `n1 + n2 = p`. After
//! relabelling with the macronode index `m = (-1)^n n` that sum condition
//! becomes the difference condition `m2 - m1 = p`, with `m1` odd and `m2`
//! even, which is what makes the interaction pattern translation invariant.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polarization of a comb mode. `Z` sorts before `Y` in the canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    Z,
    Y,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::Z, Polarization::Y];

    /// Position within a macronode block for a given OPO: Z first, then Y.
    pub fn slot_offset(self) -> usize {
        match self {
            Polarization::Z => 0,
            Polarization::Y => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::Z => f.write_str("Z"),
            Polarization::Y => f.write_str("Y"),
        }
    }
}

/// One field mode: (OPO index, polarization, frequency index).
///
/// The derived ordering is the canonical mode ordering used by every matrix
/// in the crate: OPO ascending, then Z before Y, then frequency ascending.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QumodeId {
    /// 1-based OPO number.
    pub opo: usize,
    pub pol: Polarization,
    pub n: i64,
}

impl QumodeId {
    pub fn new(opo: usize, pol: Polarization, n: i64) -> Self {
        Self { opo, pol, n }
    }

    pub fn macronode(&self) -> i64 {
        macronode_of(self.n)
    }

    /// Slot of this mode inside its macronode block: `2 (opo - 1) + (0 for Z, 1 for Y)`.
    pub fn slot(&self) -> usize {
        2 * (self.opo - 1) + self.pol.slot_offset()
    }
}

/// Pump configuration of one OPO: macronode spacing and number of copies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpoSpec {
    pub delta_m: i64,
    #[serde(default = "default_copies")]
    pub copies: i64,
}

fn default_copies() -> i64 {
    1
}

impl OpoSpec {
    pub fn new(delta_m: i64, copies: i64) -> Result<Self> {
        let spec = Self { delta_m, copies };
        spec.validate()?;
        Ok(spec)
    }

    /// Single-copy OPO with the given spacing.
    pub fn single(delta_m: i64) -> Result<Self> {
        Self::new(delta_m, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_m <= 0 {
            return Err(Error::InvalidOpoSpec(format!(
                "delta_m must be positive, got {}",
                self.delta_m
            )));
        }
        if self.copies <= 0 {
            return Err(Error::InvalidOpoSpec(format!(
                "copies must be positive, got {}",
                self.copies
            )));
        }
        pump_indices(self).map(|_| ())
    }
}

/// Finite window of frequency indices `n_min..=n_max` kept in the simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombWindow {
    pub n_min: i64,
    pub n_max: i64,
}

impl CombWindow {
    pub fn new(n_min: i64, n_max: i64) -> Result<Self> {
        if n_min > n_max {
            return Err(Error::EmptyWindow { n_min, n_max });
        }
        Ok(Self { n_min, n_max })
    }

    /// Window `[-half_width, half_width]`.
    pub fn symmetric(half_width: i64) -> Self {
        let h = half_width.abs();
        Self {
            n_min: -h,
            n_max: h,
        }
    }

    pub fn contains(&self, n: i64) -> bool {
        self.n_min <= n && n <= self.n_max
    }

    /// Number of frequency indices in the window (0 for an inverted window).
    pub fn len(&self) -> usize {
        if self.n_min > self.n_max {
            0
        } else {
            (self.n_max - self.n_min + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        self.n_min..=self.n_max
    }

    pub fn contains_macronode(&self, m: i64) -> bool {
        self.contains(frequency_of(m))
    }

    /// Sorted macronode indices of the window.
    pub fn macronodes(&self) -> Vec<i64> {
        let mut ms: Vec<i64> = self.frequencies().map(macronode_of).collect();
        ms.sort_unstable();
        ms
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_min == -self.n_max
    }

    /// Whether the window's macronode indices form one contiguous range.
    pub fn has_contiguous_macronodes(&self) -> bool {
        let ms = self.macronodes();
        ms.windows(2).all(|w| w[1] == w[0] + 1)
    }
}

/// Macronode index within copy `k` of an `M`-copy lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CompoundIndex {
    pub m: i64,
    pub k: i64,
}

/// `m = (-1)^n n`.
pub fn macronode_of(n: i64) -> i64 {
    if n.rem_euclid(2) == 0 {
        n
    } else {
        -n
    }
}

/// Inverse of [`macronode_of`]; the map is an involution.
pub fn frequency_of(m: i64) -> i64 {
    if m.rem_euclid(2) == 0 {
        m
    } else {
        -m
    }
}

/// Pump indices `(p_Y, p_Z)` of an OPO.
///
/// Single copy: `p_Y = -p_Z = delta_m`. For `M > 1` copies:
/// `p_Z = M delta_m + (M - 1)` and `p_Y = -M delta_m + (M - 1)`.
pub fn pump_indices(spec: &OpoSpec) -> Result<(i64, i64)> {
    let (p_y, p_z) = if spec.copies == 1 {
        (spec.delta_m, -spec.delta_m)
    } else {
        let overflow = || Error::InvalidOpoSpec("pump index overflows i64".into());
        let scaled = spec.copies.checked_mul(spec.delta_m).ok_or_else(overflow)?;
        let shift = spec.copies - 1;
        (
            shift.checked_sub(scaled).ok_or_else(overflow)?,
            scaled.checked_add(shift).ok_or_else(overflow)?,
        )
    };
    for p in [p_y, p_z] {
        if p.rem_euclid(2) == 0 {
            return Err(Error::EvenPumpIndex { p });
        }
    }
    Ok((p_y, p_z))
}

/// Pump index of a given polarization.
pub fn pump_index(spec: &OpoSpec, pol: Polarization) -> Result<i64> {
    let (p_y, p_z) = pump_indices(spec)?;
    Ok(match pol {
        Polarization::Y => p_y,
        Polarization::Z => p_z,
    })
}

/// Pump frequency `2 omega0 + p delta_omega`.
pub fn pump_frequency(p: i64, omega0: f64, delta_omega: f64) -> Result<f64> {
    if !(delta_omega > 0.0) {
        return Err(Error::NonpositiveFsr(delta_omega));
    }
    Ok(2.0 * omega0 + p as f64 * delta_omega)
}

/// Pump index of a pump frequency, rounded to the nearest integer.
pub fn pump_index_of(frequency: f64, omega0: f64, delta_omega: f64) -> Result<i64> {
    if !(delta_omega > 0.0) {
        return Err(Error::NonpositiveFsr(delta_omega));
    }
    Ok(((frequency - 2.0 * omega0) / delta_omega).round() as i64)
}

/// Frequency index of a compound macronode index.
pub fn compound_to_frequency(c: CompoundIndex, copies: i64) -> Result<i64> {
    if copies <= 0 || c.k < 0 || c.k >= copies {
        return Err(Error::CopyLabelOutOfRange { k: c.k, copies });
    }
    let base = copies * c.m + c.k;
    Ok(if c.m.rem_euclid(2) == 0 {
        base
    } else {
        -base + (copies - 1)
    })
}

/// Inverse of [`compound_to_frequency`].
pub fn frequency_to_compound(n: i64, copies: i64) -> Result<CompoundIndex> {
    if copies <= 0 {
        return Err(Error::CopyLabelOutOfRange { k: 0, copies });
    }
    // even block: n = M m + k
    let k = n.rem_euclid(copies);
    let m = (n - k) / copies;
    if m.rem_euclid(2) == 0 {
        return Ok(CompoundIndex { m, k });
    }
    // odd block: (M - 1) - n = M m + k
    let reflected = (copies - 1) - n;
    let k = reflected.rem_euclid(copies);
    let m = (reflected - k) / copies;
    if m.rem_euclid(2) == 1 {
        return Ok(CompoundIndex { m, k });
    }
    Err(Error::InternalIndex(format!(
        "no compound index for n = {n} with {copies} copies"
    )))
}
