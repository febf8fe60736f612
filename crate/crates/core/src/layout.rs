//! Scene areas: visible and full target, local background band, remaining
//! background and occultant.

use crate::imagecore::{dilation_ring, ImageError, RegionMask};

/// Default width of the local background band around the visible target.
pub const DEFAULT_F1_RADIUS: usize = 5;

/// Partition of a frame into the areas over which metrics are computed.
///
/// `c_visible`, `occultant`, `f1` and `f2` are pairwise disjoint and tile the
/// frame; the occluded part of `c_full` lies under the occultant.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLayout {
    pub c_visible: RegionMask,
    pub c_full: RegionMask,
    pub f1: RegionMask,
    pub f2: RegionMask,
    pub occultant: RegionMask,
}

impl SceneLayout {
    /// Derives the band and remaining background from frame-sized target and
    /// occultant masks. The band is grown around the visible silhouette.
    pub fn from_masks(
        c_full: RegionMask,
        occultant: RegionMask,
        f1_radius: usize,
    ) -> Result<Self, ImageError> {
        let c_visible = c_full.and_not(&occultant)?;
        let f1 = dilation_ring(&c_visible, f1_radius)?
            .and_not(&c_full)?
            .and_not(&occultant)?;
        let f2 = c_full.or(&f1)?.or(&occultant)?.complement();
        Ok(Self {
            c_visible,
            c_full,
            f1,
            f2,
            occultant,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.c_full.dims()
    }

    /// Global background F = F1 ∪ F2.
    pub fn background(&self) -> RegionMask {
        self.f1.or(&self.f2).expect("layout masks share dimensions")
    }

    /// Checks the partition invariants, returning a description of the first
    /// violation.
    pub fn check(&self) -> Result<(), String> {
        let dims = self.dims();
        for (name, m) in [
            ("c_visible", &self.c_visible),
            ("f1", &self.f1),
            ("f2", &self.f2),
            ("occultant", &self.occultant),
        ] {
            if m.dims() != dims {
                return Err(format!("{name} is {:?}, frame is {dims:?}", m.dims()));
            }
        }
        let sub = |a: &RegionMask, b: &RegionMask| a.is_subset_of(b).unwrap_or(false);
        let meets = |a: &RegionMask, b: &RegionMask| a.intersects(b).unwrap_or(true);
        if !sub(&self.c_visible, &self.c_full) {
            return Err("visible target not inside full target".into());
        }
        if meets(&self.c_visible, &self.occultant) {
            return Err("visible target overlaps occultant".into());
        }
        let occluded = self.c_full.and_not(&self.c_visible).expect("dims checked");
        if !sub(&occluded, &self.occultant) {
            return Err("hidden target pixels not covered by occultant".into());
        }
        let blocked = self.c_full.or(&self.occultant).expect("dims checked");
        if meets(&self.f1, &blocked) {
            return Err("local band overlaps target or occultant".into());
        }
        let expected_f2 = blocked.or(&self.f1).expect("dims checked").complement();
        if self.f2 != expected_f2 {
            return Err("remaining background is not the complement of the other areas".into());
        }
        Ok(())
    }
}
