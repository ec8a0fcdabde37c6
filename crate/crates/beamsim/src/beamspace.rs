//! Beamspace transform, beam selection, and the reduced equivalent channel.
//!
//! Selection allocates a fair per-user share of beams by greedy magnitude:
//! users are processed in descending order of their strongest unclaimed beam
//! and each claims its strongest unclaimed beams until it owns budget/K.
//! Ties break toward the lowest beam index so selection is deterministic.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::numerics::{ComplexMatrix, UnitaryDft};
use crate::{Error, Result};

/// Channels after the lens DFT: H_b = F * H, with per-beam energies cached
/// for selection.
#[derive(Debug, Clone)]
pub struct BeamspaceChannel {
    pub matrix: ComplexMatrix,
    /// `beam_energy[k][m]` = |[h_b,k]_m|^2.
    pub beam_energy: Vec<Vec<f64>>,
}

/// One RF-chain group: distinct beam indices and, per index, the user it
/// serves. As a selector matrix every column is a distinct standard basis
/// vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionGroup {
    pub beam_indices: Vec<usize>,
    pub owner_user: Vec<usize>,
}

impl SelectionGroup {
    pub fn len(&self) -> usize {
        self.beam_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beam_indices.is_empty()
    }

    /// Beams owned by `user`, as positions into this group's index list.
    pub fn positions_of(&self, user: usize) -> Vec<usize> {
        self.owner_user
            .iter()
            .enumerate()
            .filter(|&(_, &u)| u == user)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Two-group hybrid selector S_h = [xi*S1, (1-xi)*S2]. The single-group SBS
/// baseline is the degenerate case with an empty second group and xi = 1.
#[derive(Debug, Clone)]
pub struct HybridSelector {
    pub group1: SelectionGroup,
    pub group2: SelectionGroup,
    pub xi: f64,
}

impl HybridSelector {
    /// Single-group selector (SBS): all weight on group 1.
    pub fn single(group: SelectionGroup) -> Self {
        Self {
            group1: group,
            group2: SelectionGroup {
                beam_indices: Vec::new(),
                owner_user: Vec::new(),
            },
            xi: 1.0,
        }
    }

    /// Total selector width N_RF_g = |group1| + |group2|.
    pub fn width(&self) -> usize {
        self.group1.len() + self.group2.len()
    }

    /// Block scale applied to row `r` of the equivalent channel.
    pub fn row_scale(&self, r: usize) -> f64 {
        if r < self.group1.len() {
            self.xi
        } else {
            1.0 - self.xi
        }
    }

    /// Beam index behind equivalent-channel row `r`.
    pub fn beam_of_row(&self, r: usize) -> usize {
        if r < self.group1.len() {
            self.group1.beam_indices[r]
        } else {
            self.group2.beam_indices[r - self.group1.len()]
        }
    }

    /// Owner user of equivalent-channel row `r`.
    pub fn owner_of_row(&self, r: usize) -> usize {
        if r < self.group1.len() {
            self.group1.owner_user[r]
        } else {
            self.group2.owner_user[r - self.group1.len()]
        }
    }

    /// Rows of the equivalent channel owned by `user` whose block scale is
    /// nonzero. This is the per-user quantization support.
    pub fn active_rows_of(&self, user: usize) -> Vec<usize> {
        (0..self.width())
            .filter(|&r| self.owner_of_row(r) == user && self.row_scale(r) != 0.0)
            .collect()
    }

    /// Effective cluster count L_h = xi*L1 + (1-xi)*L2 for K users.
    pub fn effective_clusters(&self, users: usize) -> f64 {
        let l1 = self.group1.len() as f64 / users as f64;
        let l2 = self.group2.len() as f64 / users as f64;
        self.xi * l1 + (1.0 - self.xi) * l2
    }
}

/// H_b = F * H.
pub fn to_beamspace(channels: &ChannelSet, f: &UnitaryDft) -> Result<BeamspaceChannel> {
    if f.size() != channels.antennas() {
        return Err(Error::Config(format!(
            "DFT size {} does not match antenna count {}",
            f.size(),
            channels.antennas()
        )));
    }
    let matrix = f.matrix().matmul(&channels.matrix)?;
    let beam_energy = (0..matrix.cols())
        .map(|k| (0..matrix.rows()).map(|m| matrix[(m, k)].norm_sqr()).collect())
        .collect();
    Ok(BeamspaceChannel { matrix, beam_energy })
}

/// Greedy fair allocation of `budget` beams (budget/K per user) among the
/// beams still available in `available`. Claims are marked in `available`.
fn greedy_allocate(
    bs: &BeamspaceChannel,
    budget: usize,
    available: &mut [bool],
) -> Result<SelectionGroup> {
    let users = bs.matrix.cols();
    let beams = bs.matrix.rows();
    if budget % users != 0 {
        return Err(Error::Config(format!(
            "beam budget {budget} not divisible by K={users}"
        )));
    }
    let per_user = budget / users;
    if available.iter().filter(|&&a| a).count() < budget {
        return Err(Error::Config(format!(
            "beam budget {budget} exceeds the {} beams still available",
            available.iter().filter(|&&a| a).count()
        )));
    }

    // Per-user beam indices sorted by descending magnitude, lowest index on ties.
    let sorted: Vec<Vec<usize>> = (0..users)
        .map(|k| {
            let mut idx: Vec<usize> = (0..beams).collect();
            idx.sort_by(|&a, &b| {
                bs.beam_energy[k][b]
                    .partial_cmp(&bs.beam_energy[k][a])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect();

    let strongest_available = |k: usize, avail: &[bool]| -> f64 {
        sorted[k]
            .iter()
            .find(|&&b| avail[b])
            .map(|&b| bs.beam_energy[k][b])
            .unwrap_or(0.0)
    };

    let mut claims: Vec<(usize, usize)> = Vec::with_capacity(budget); // (beam, user)
    let mut remaining: Vec<usize> = (0..users).collect();
    while !remaining.is_empty() {
        // Next user: largest strongest-unclaimed beam, lowest user index on ties.
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(i, &k)| (i, strongest_available(k, available)))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
            .unwrap();
        let user = remaining.remove(pos);
        let mut got = 0;
        for &b in &sorted[user] {
            if available[b] {
                available[b] = false;
                claims.push((b, user));
                got += 1;
                if got == per_user {
                    break;
                }
            }
        }
    }
    claims.sort();
    Ok(SelectionGroup {
        beam_indices: claims.iter().map(|&(b, _)| b).collect(),
        owner_user: claims.iter().map(|&(_, u)| u).collect(),
    })
}

/// Single-group selection of `n_rf` beams, n_rf/K per user.
pub fn select_sbs(bs: &BeamspaceChannel, n_rf: usize) -> Result<SelectionGroup> {
    let users = bs.matrix.cols();
    let beams = bs.matrix.rows();
    if n_rf < users {
        return Err(Error::Config(format!(
            "n_rf={n_rf} smaller than user count {users}"
        )));
    }
    if n_rf > beams {
        return Err(Error::Config(format!(
            "n_rf={n_rf} exceeds beam count {beams}"
        )));
    }
    let mut available = vec![true; beams];
    greedy_allocate(bs, n_rf, &mut available)
}

/// Builds the two-group hybrid selector. The groups are disjoint; the group
/// that is active at the configured blend endpoint is populated first so it
/// gets the strongest beams (for xi = 0 that is group 2; group 1 would be
/// scaled to zero anyway). For intermediate xi both groups transmit and
/// group 1 keeps priority.
pub fn build_hybrid_selector(
    bs: &BeamspaceChannel,
    g1: usize,
    g2: usize,
    xi: f64,
) -> Result<HybridSelector> {
    let users = bs.matrix.cols();
    let beams = bs.matrix.rows();
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::Config(format!("xi={xi} outside [0, 1]")));
    }
    if g1 < users || g2 < users {
        return Err(Error::Config(format!(
            "each group needs at least K={users} beams, got g1={g1}, g2={g2}"
        )));
    }
    if g1 + g2 > beams {
        return Err(Error::Config(format!(
            "g1+g2={} exceeds beam count {beams}",
            g1 + g2
        )));
    }
    let mut available = vec![true; beams];
    let (group1, group2) = if xi == 0.0 {
        let second = greedy_allocate(bs, g2, &mut available)?;
        let first = greedy_allocate(bs, g1, &mut available)?;
        (first, second)
    } else {
        let first = greedy_allocate(bs, g1, &mut available)?;
        let second = greedy_allocate(bs, g2, &mut available)?;
        (first, second)
    };
    Ok(HybridSelector { group1, group2, xi })
}

/// Reduced equivalent channel: row r of column k is
/// `row_scale(r) * [h_b,k]_{beam_of_row(r)}` (i.e. S_h^H h_b,k).
#[derive(Debug, Clone)]
pub struct EquivalentChannel {
    pub matrix: ComplexMatrix,
    pub selector: HybridSelector,
}

pub fn equivalent_channel(bs: &BeamspaceChannel, sel: &HybridSelector) -> Result<EquivalentChannel> {
    let beams = bs.matrix.rows();
    let users = bs.matrix.cols();
    let width = sel.width();
    for r in 0..width {
        if sel.beam_of_row(r) >= beams {
            return Err(Error::Config(format!(
                "selector beam index {} outside [0, {beams})",
                sel.beam_of_row(r)
            )));
        }
    }
    let mut matrix = ComplexMatrix::zeros(width, users);
    for r in 0..width {
        let scale = sel.row_scale(r);
        let beam = sel.beam_of_row(r);
        for k in 0..users {
            matrix[(r, k)] = bs.matrix[(beam, k)] * scale;
        }
    }
    Ok(EquivalentChannel {
        matrix,
        selector: sel.clone(),
    })
}

impl EquivalentChannel {
    pub fn user_column(&self, k: usize) -> Vec<Complex64> {
        self.matrix.col(k)
    }

    /// Fraction of user k's beamspace energy captured by its own active rows.
    pub fn captured_fraction(&self, bs: &BeamspaceChannel, k: usize) -> f64 {
        let own: f64 = self
            .selector
            .active_rows_of(k)
            .iter()
            .map(|&r| self.matrix[(r, k)].norm_sqr())
            .sum();
        let total: f64 = bs.beam_energy[k].iter().sum();
        if total == 0.0 {
            0.0
        } else {
            own / total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel_set, steering_vector, ArrayGeometry};
    use crate::numerics::{dft_matrix, vector_norm};
    use crate::rng::Purpose;

    fn geometry(m: usize) -> ArrayGeometry {
        ArrayGeometry::default_60ghz(m).unwrap()
    }

    fn on_grid_channels(m: usize, grid: &[usize]) -> ChannelSet {
        let mut matrix = ComplexMatrix::zeros(m, grid.len());
        for (k, &g) in grid.iter().enumerate() {
            let a = steering_vector(g as f64 / m as f64, m);
            for (r, v) in a.iter().enumerate() {
                matrix[(r, k)] = *v;
            }
        }
        ChannelSet {
            geometry: geometry(m),
            users: Vec::new(),
            matrix,
        }
    }

    #[test]
    fn beamspace_preserves_norms() {
        let g = geometry(64);
        let set = sample_channel_set(&g, 8, 3, 13, Purpose::Channel, 0).unwrap();
        let f = dft_matrix(64);
        let bs = to_beamspace(&set, &f).unwrap();
        for k in 0..8 {
            let a = vector_norm(&set.matrix.col(k));
            let b = vector_norm(&bs.matrix.col(k));
            assert!((a - b).abs() / a < 1e-10);
        }
        assert!(
            (bs.matrix.frobenius_norm() - set.matrix.frobenius_norm()).abs()
                / set.matrix.frobenius_norm()
                < 1e-10
        );
    }

    #[test]
    fn beamspace_m1_is_identity() {
        let set = on_grid_channels(1, &[0]);
        let f = dft_matrix(1);
        let bs = to_beamspace(&set, &f).unwrap();
        assert!(bs.matrix.max_abs_diff(&set.matrix) < 1e-15);
    }

    #[test]
    fn on_grid_channel_has_single_dominant_beam() {
        let m = 64;
        let set = on_grid_channels(m, &[5, 20]);
        let f = dft_matrix(m);
        let bs = to_beamspace(&set, &f).unwrap();
        for (k, &g) in [5usize, 20].iter().enumerate() {
            assert!(bs.matrix[(g, k)].norm() >= 0.99, "beam {g}");
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let set = on_grid_channels(8, &[1]);
        let f = dft_matrix(16);
        assert!(to_beamspace(&set, &f).is_err());
    }

    #[test]
    fn sbs_no_conflict() {
        let m = 32;
        let set = on_grid_channels(m, &[3, 9]);
        let bs = to_beamspace(&set, &dft_matrix(m)).unwrap();
        let sel = select_sbs(&bs, 2).unwrap();
        assert_eq!(sel.beam_indices, vec![3, 9]);
        assert_eq!(sel.owner_user, vec![0, 1]);
    }

    #[test]
    fn sbs_conflict_resolution() {
        // Both users dominated by beam 4; user 1 is stronger there, user 0
        // has a secondary beam at 10.
        let m = 32;
        let mut matrix = ComplexMatrix::zeros(m, 2);
        matrix[(4, 0)] = Complex64::new(0.8, 0.0);
        matrix[(10, 0)] = Complex64::new(0.5, 0.0);
        matrix[(4, 1)] = Complex64::new(0.9, 0.0);
        matrix[(11, 1)] = Complex64::new(0.2, 0.0);
        let bs = BeamspaceChannel {
            beam_energy: (0..2)
                .map(|k| (0..m).map(|r| matrix[(r, k)].norm_sqr()).collect())
                .collect(),
            matrix,
        };
        let sel = select_sbs(&bs, 2).unwrap();
        // user 1 keeps beam 4, user 0 falls back to beam 10
        assert_eq!(sel.beam_indices, vec![4, 10]);
        assert_eq!(sel.owner_user, vec![1, 0]);

        // Brute force over both assignments: the greedy pick maximizes
        // summed selected energy for this toy.
        let greedy_energy = 0.9f64 * 0.9 + 0.5 * 0.5;
        let alt_energy = 0.8f64 * 0.8 + 0.2 * 0.2;
        assert!(greedy_energy > alt_energy);
    }

    #[test]
    fn sbs_table_configuration() {
        let g = geometry(256);
        let set = sample_channel_set(&g, 16, 3, 17, Purpose::Channel, 0).unwrap();
        let bs = to_beamspace(&set, &dft_matrix(256)).unwrap();
        let sel = select_sbs(&bs, 48).unwrap();
        assert_eq!(sel.len(), 48);
        let mut seen = std::collections::HashSet::new();
        for &b in &sel.beam_indices {
            assert!(seen.insert(b), "duplicate beam {b}");
        }
        for k in 0..16 {
            assert_eq!(sel.positions_of(k).len(), 3);
        }
    }

    #[test]
    fn sbs_rejects_bad_budget() {
        let g = geometry(32);
        let set = sample_channel_set(&g, 4, 2, 1, Purpose::Channel, 0).unwrap();
        let bs = to_beamspace(&set, &dft_matrix(32)).unwrap();
        assert!(select_sbs(&bs, 6).is_err()); // not divisible by K
        assert!(select_sbs(&bs, 36).is_err()); // exceeds M
    }

    #[test]
    fn hybrid_groups_are_disjoint() {
        let g = geometry(256);
        let set = sample_channel_set(&g, 16, 2, 23, Purpose::Channel, 0).unwrap();
        let bs = to_beamspace(&set, &dft_matrix(256)).unwrap();
        let sel = build_hybrid_selector(&bs, 32, 16, 1.0).unwrap();
        assert_eq!(sel.group1.len(), 32);
        assert_eq!(sel.group2.len(), 16);
        for k in 0..16 {
            assert_eq!(sel.group1.positions_of(k).len(), 2);
            assert_eq!(sel.group2.positions_of(k).len(), 1);
        }
        let s1: std::collections::HashSet<_> = sel.group1.beam_indices.iter().collect();
        assert!(sel.group2.beam_indices.iter().all(|b| !s1.contains(b)));
    }

    #[test]
    fn active_group_gets_strongest_beams() {
        let g = geometry(256);
        let set = sample_channel_set(&g, 16, 2, 29, Purpose::Channel, 0).unwrap();
        let bs = to_beamspace(&set, &dft_matrix(256)).unwrap();
        let xi0 = build_hybrid_selector(&bs, 48, 32, 0.0).unwrap();
        let xi1 = build_hybrid_selector(&bs, 32, 48, 1.0).unwrap();
        // At either endpoint the active group saw the full beam set first,
        // so both runs allocate the same active beams.
        assert_eq!(xi0.group2.beam_indices, xi1.group1.beam_indices);
        assert_eq!(xi0.group2.owner_user, xi1.group1.owner_user);
    }

    #[test]
    fn hybrid_rejects_oversubscription() {
        let g = geometry(64);
        let set = sample_channel_set(&g, 16, 2, 1, Purpose::Channel, 0).unwrap();
        let bs = to_beamspace(&set, &dft_matrix(64)).unwrap();
        assert!(build_hybrid_selector(&bs, 48, 32, 1.0).is_err());
    }

    #[test]
    fn equivalent_channel_blocks_and_scales() {
        // M=4, K=1, h_b = [2, 1, 0, 0]^T, group1={0}, group2={1}, xi=1.
        let mut matrix = ComplexMatrix::zeros(4, 1);
        matrix[(0, 0)] = Complex64::new(2.0, 0.0);
        matrix[(1, 0)] = Complex64::new(1.0, 0.0);
        let bs = BeamspaceChannel {
            beam_energy: vec![(0..4).map(|r| matrix[(r, 0)].norm_sqr()).collect()],
            matrix,
        };
        let sel = HybridSelector {
            group1: SelectionGroup {
                beam_indices: vec![0],
                owner_user: vec![0],
            },
            group2: SelectionGroup {
                beam_indices: vec![1],
                owner_user: vec![0],
            },
            xi: 1.0,
        };
        let eq = equivalent_channel(&bs, &sel).unwrap();
        assert_eq!(eq.matrix.rows(), 2);
        assert!((eq.matrix[(0, 0)] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(eq.matrix[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn full_support_selection_preserves_energy() {
        let m = 64;
        let set = on_grid_channels(m, &[7, 40]);
        let bs = to_beamspace(&set, &dft_matrix(m)).unwrap();
        let sel = HybridSelector::single(select_sbs(&bs, 2).unwrap());
        let eq = equivalent_channel(&bs, &sel).unwrap();
        for k in 0..2 {
            let full = vector_norm(&set.matrix.col(k));
            let reduced = vector_norm(&eq.user_column(k));
            assert!((full - reduced).abs() < 1e-10);
            assert!((eq.captured_fraction(&bs, k) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn selection_never_amplifies_energy() {
        let g = geometry(128);
        let set = sample_channel_set(&g, 8, 3, 31, Purpose::Channel, 0).unwrap();
        let bs = to_beamspace(&set, &dft_matrix(128)).unwrap();
        for xi in [0.0, 1.0] {
            let sel = build_hybrid_selector(&bs, 16, 8, xi).unwrap();
            let eq = equivalent_channel(&bs, &sel).unwrap();
            for k in 0..8 {
                let reduced = vector_norm(&eq.user_column(k));
                let full = vector_norm(&bs.matrix.col(k));
                assert!(reduced <= full + 1e-12);
            }
        }
    }

    #[test]
    fn captured_energy_monotone_in_budget() {
        let g = geometry(128);
        let set = sample_channel_set(&g, 8, 3, 37, Purpose::Channel, 0).unwrap();
        let bs = to_beamspace(&set, &dft_matrix(128)).unwrap();
        let mut prev = 0.0;
        for budget in [8usize, 16, 24, 32] {
            let sel = HybridSelector::single(select_sbs(&bs, budget).unwrap());
            let eq = equivalent_channel(&bs, &sel).unwrap();
            let total: f64 = (0..8)
                .map(|k| vector_norm(&eq.user_column(k)).powi(2))
                .sum();
            assert!(total >= prev - 1e-12, "budget {budget}");
            prev = total;
        }
    }

    #[test]
    fn selection_is_deterministic() {
        let g = geometry(128);
        let set = sample_channel_set(&g, 8, 2, 41, Purpose::Channel, 0).unwrap();
        let bs = to_beamspace(&set, &dft_matrix(128)).unwrap();
        let a = select_sbs(&bs, 16).unwrap();
        let b = select_sbs(&bs, 16).unwrap();
        assert_eq!(a, b);
    }
}
