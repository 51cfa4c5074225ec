//! Boundary and bulk site groups relative to the half-chain subsystem.

use serde::{Deserialize, Serialize};

/// Offsets of the three boundary groups from the subsystem edges.
pub const DEFAULT_OFFSETS: [usize; 3] = [0, 5, 15];

/// Sites grouped by distance from the edges of `A = {0, …, L/2 − 1}`.
///
/// Boundary group `k` at offset `o` holds `{o, L/2 − 1 − o, L/2 + o, L − 1 − o}`;
/// the last group is the bulk pair `{L/4 − 1, 3L/4 − 1}`. Boundary groups that
/// do not fit inside one half are dropped. Groups may share sites (at `L = 64`
/// the bulk pair lies in the offset-15 group).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteGroups {
    pub size: usize,
    pub groups: Vec<SiteGroup>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteGroup {
    pub name: String,
    pub sites: Vec<usize>,
}

impl SiteGroups {
    pub fn new(size: usize) -> Self {
        Self::with_offsets(size, &DEFAULT_OFFSETS)
    }

    pub fn with_offsets(size: usize, offsets: &[usize]) -> Self {
        let half = size / 2;
        let mut groups = Vec::new();
        for (k, &o) in offsets.iter().enumerate() {
            if 2 * o + 1 > half {
                continue;
            }
            let mut sites = vec![o, half - 1 - o, half + o, size - 1 - o];
            sites.sort_unstable();
            sites.dedup();
            groups.push(SiteGroup {
                name: format!("group{}", k + 1),
                sites,
            });
        }
        if size >= 4 {
            let mut sites = vec![size / 4 - 1, 3 * size / 4 - 1];
            sites.dedup();
            groups.push(SiteGroup {
                name: format!("group{}", offsets.len() + 1),
                sites,
            });
        }
        Self { size, groups }
    }

    /// Indices of every group containing `site`.
    pub fn memberships(&self, site: usize) -> Vec<usize> {
        (0..self.groups.len()).filter(|&k| self.groups[k].sites.contains(&site)).collect()
    }

    /// First group containing `site`.
    pub fn classify(&self, site: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.sites.contains(&site))
    }

    pub fn get(&self, name: &str) -> Option<&SiteGroup> {
        self.groups.iter().find(|g| g.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_for_sixty_four_sites() {
        let g = SiteGroups::new(64);
        assert_eq!(g.get("group1").unwrap().sites, vec![0, 31, 32, 63]);
        assert_eq!(g.get("group2").unwrap().sites, vec![5, 26, 37, 58]);
        assert_eq!(g.get("group3").unwrap().sites, vec![15, 16, 47, 48]);
        assert_eq!(g.get("group4").unwrap().sites, vec![15, 47]);
        assert_eq!(g.classify(63), Some(0));
        assert_eq!(g.classify(20), None);
        assert_eq!(g.memberships(15), vec![2, 3]);
    }

    #[test]
    fn small_lattices_drop_groups_that_do_not_fit() {
        let g = SiteGroups::new(16);
        assert_eq!(g.get("group1").unwrap().sites, vec![0, 7, 8, 15]);
        assert!(g.get("group2").is_none());
        assert!(g.get("group3").is_none());
        assert_eq!(g.get("group4").unwrap().sites, vec![3, 11]);
    }
}
