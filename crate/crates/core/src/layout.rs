//! Post-layout algorithmic logical estimates: layout qubits, logical depth and
//! T-state demand.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counts::LogicalCounts;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("rotation synthesis budget {0} must lie in (0, 1)")]
    InvalidBudget(f64),
    #[error("T states per rotation must be zero exactly when there are no rotations")]
    InvalidMultiplier,
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),
}

/// Constants of the rotation synthesis cost `ceil(a * log2(n / eps) + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSynthesis {
    pub a: f64,
    pub b: f64,
}

impl Default for RotationSynthesis {
    fn default() -> Self {
        Self { a: 0.53, b: 5.3 }
    }
}

impl RotationSynthesis {
    /// T states needed to synthesize each of `rotation_count` rotations when
    /// `budget` is shared uniformly across them. Returns 0 when there are no
    /// rotations.
    #[allow(clippy::cast_precision_loss, clippy::cast_possible_truncation, clippy::cast_sign_loss)]
    pub fn t_states_per_rotation(&self, rotation_count: u64, budget: f64) -> Result<u64, LayoutError> {
        if rotation_count == 0 {
            return Ok(0);
        }
        if !(budget > 0.0 && budget < 1.0) {
            return Err(LayoutError::InvalidBudget(budget));
        }
        let value = (self.a * (rotation_count as f64 / budget).log2() + self.b).ceil();
        if !value.is_finite() || value >= u64::MAX as f64 {
            return Err(LayoutError::Overflow("T states per rotation"));
        }
        Ok((value as u64).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AlgorithmicLogicalEstimate {
    pub logical_qubits_post_layout: u64,
    pub algorithmic_depth: u64,
    pub total_t_states: u64,
    pub t_states_per_rotation: u64,
    pub rotation_synthesis_error_budget: f64,
}

/// Logical qubits after interleaving algorithmic rows with auxiliary routing
/// rows: `2Q + ceil(sqrt(8Q)) + 1`, or 0 for an empty program.
pub fn layout_qubits(num_algorithmic_qubits: u64) -> Result<u64, LayoutError> {
    let q = num_algorithmic_qubits;
    if q == 0 {
        return Ok(0);
    }
    let overflow = || LayoutError::Overflow("layout qubits");
    let eight_q = q.checked_mul(8).ok_or_else(overflow)?;
    q.checked_mul(2)
        .and_then(|v| v.checked_add(ceil_sqrt(eight_q)))
        .and_then(|v| v.checked_add(1))
        .ok_or_else(overflow)
}

fn ceil_sqrt(n: u64) -> u64 {
    let r = n.isqrt();
    if r * r == n {
        r
    } else {
        r + 1
    }
}

fn check_multiplier(counts: &LogicalCounts, t_per_rotation: u64) -> Result<(), LayoutError> {
    if (t_per_rotation == 0) != (counts.rotation_count == 0) {
        return Err(LayoutError::InvalidMultiplier);
    }
    Ok(())
}

fn checked_sum(terms: &[(u64, u64)], what: &'static str) -> Result<u64, LayoutError> {
    terms.iter().try_fold(0u64, |acc, &(k, n)| {
        k.checked_mul(n)
            .and_then(|v| acc.checked_add(v))
            .ok_or(LayoutError::Overflow(what))
    })
}

/// Logical cycles: one per measurement, rotation and T gate, three per
/// CCZ/CCiX, plus the synthesized rotation layers.
pub fn algorithmic_depth(counts: &LogicalCounts, t_per_rotation: u64) -> Result<u64, LayoutError> {
    check_multiplier(counts, t_per_rotation)?;
    let toffolis = counts
        .ccz_count
        .checked_add(counts.ccix_count)
        .ok_or(LayoutError::Overflow("algorithmic depth"))?;
    checked_sum(
        &[
            (1, counts.measurement_count),
            (1, counts.rotation_count),
            (1, counts.t_count),
            (3, toffolis),
            (t_per_rotation, counts.rotation_depth),
        ],
        "algorithmic depth",
    )
}

pub fn total_t_states(counts: &LogicalCounts, t_per_rotation: u64) -> Result<u64, LayoutError> {
    check_multiplier(counts, t_per_rotation)?;
    let toffolis = counts
        .ccz_count
        .checked_add(counts.ccix_count)
        .ok_or(LayoutError::Overflow("total T states"))?;
    checked_sum(
        &[
            (1, counts.t_count),
            (4, toffolis),
            (t_per_rotation, counts.rotation_count),
        ],
        "total T states",
    )
}

pub fn estimate_layout(
    counts: &LogicalCounts,
    synthesis: &RotationSynthesis,
    synthesis_budget: f64,
) -> Result<AlgorithmicLogicalEstimate, LayoutError> {
    let t_per_rotation = synthesis.t_states_per_rotation(counts.rotation_count, synthesis_budget)?;
    Ok(AlgorithmicLogicalEstimate {
        logical_qubits_post_layout: layout_qubits(counts.num_qubits)?,
        algorithmic_depth: algorithmic_depth(counts, t_per_rotation)?,
        total_t_states: total_t_states(counts, t_per_rotation)?,
        t_states_per_rotation: t_per_rotation,
        rotation_synthesis_error_budget: synthesis_budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_examples() {
        assert_eq!(layout_qubits(0).unwrap(), 0);
        assert_eq!(layout_qubits(1).unwrap(), 6);
        assert_eq!(layout_qubits(100).unwrap(), 230);
        assert_eq!(layout_qubits(2).unwrap(), 9); // sqrt(16) = 4 exactly
        assert!(layout_qubits(u64::MAX / 4).is_err());
    }

    #[test]
    fn layout_sqrt_term_bounds() {
        for q in [1u64, 4, 100, 10_000] {
            let extra = layout_qubits(q).unwrap() - 2 * q - 1;
            let eight_q = 8.0 * q as f64;
            let sq = (extra * extra) as f64;
            assert!(sq >= eight_q && sq <= (eight_q.sqrt() + 1.0).powi(2), "q={q}");
        }
    }

    #[test]
    fn rotation_multiplier_examples() {
        let rs = RotationSynthesis::default();
        assert_eq!(rs.t_states_per_rotation(10_000, 3.333e-5).unwrap(), 21);
        assert_eq!(rs.t_states_per_rotation(1, 0.5).unwrap(), 6);
        assert_eq!(rs.t_states_per_rotation(0, 0.0).unwrap(), 0);
        for bad in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(
                rs.t_states_per_rotation(5, bad),
                Err(LayoutError::InvalidBudget(_))
            ));
        }
        let cheap = RotationSynthesis { a: 0.0, b: -10.0 };
        assert_eq!(cheap.t_states_per_rotation(1, 0.5).unwrap(), 1);
    }

    fn counts(meas: u64, rot: u64, t: u64, ccz: u64, ccix: u64, depth: u64) -> LogicalCounts {
        LogicalCounts {
            num_qubits: 1,
            t_count: t,
            rotation_count: rot,
            rotation_depth: depth,
            ccz_count: ccz,
            ccix_count: ccix,
            measurement_count: meas,
        }
    }

    #[test]
    fn depth_examples() {
        assert_eq!(algorithmic_depth(&counts(2, 3, 4, 5, 0, 2), 17).unwrap(), 58);
        assert_eq!(algorithmic_depth(&LogicalCounts::default(), 0).unwrap(), 0);
        assert_eq!(algorithmic_depth(&counts(0, 0, 1, 0, 0, 0), 0).unwrap(), 1);
    }

    #[test]
    fn t_state_examples() {
        assert_eq!(total_t_states(&counts(0, 3, 4, 5, 1, 1), 17).unwrap(), 79);
        assert_eq!(total_t_states(&LogicalCounts::default(), 0).unwrap(), 0);
        assert_eq!(total_t_states(&counts(0, 0, 0, 1, 0, 0), 0).unwrap(), 4);
    }

    #[test]
    fn multiplier_must_match_rotations() {
        assert_eq!(
            algorithmic_depth(&counts(0, 2, 0, 0, 0, 1), 0),
            Err(LayoutError::InvalidMultiplier)
        );
        assert_eq!(
            total_t_states(&counts(0, 0, 0, 0, 0, 0), 3),
            Err(LayoutError::InvalidMultiplier)
        );
    }

    #[test]
    fn overflow_is_reported() {
        let c = counts(0, 0, 0, u64::MAX / 2, 0, 0);
        assert!(matches!(algorithmic_depth(&c, 0), Err(LayoutError::Overflow(_))));
        assert!(matches!(total_t_states(&c, 0), Err(LayoutError::Overflow(_))));
    }

    fn arb_counts() -> impl Strategy<Value = LogicalCounts> {
        (0u64..1000, 0u64..1000, 0u64..1000, 0u64..1000, 0u64..1000, 0u64..1000)
            .prop_flat_map(|(m, r, t, ccz, ccix, q)| {
                let depth = if r == 0 { Just(0u64).boxed() } else { (1..=r).boxed() };
                depth.prop_map(move |d| LogicalCounts {
                    num_qubits: q,
                    t_count: t,
                    rotation_count: r,
                    rotation_depth: d,
                    ccz_count: ccz,
                    ccix_count: ccix,
                    measurement_count: m,
                })
            })
    }

    proptest! {
        #[test]
        fn toffoli_costs_three_cycles_four_states(c in arb_counts()) {
            let k = if c.rotation_count == 0 { 0 } else { 17 };
            let mut more = c;
            more.ccz_count += 1;
            prop_assert_eq!(algorithmic_depth(&more, k)? , algorithmic_depth(&c, k)? + 3);
            prop_assert_eq!(total_t_states(&more, k)?, total_t_states(&c, k)? + 4);
        }

        #[test]
        fn outputs_monotone_in_counters(c in arb_counts(), which in 0usize..6) {
            let rs = RotationSynthesis::default();
            let base = estimate_layout(&c, &rs, 1e-3)?;
            let mut more = c;
            match which {
                0 => more.num_qubits += 1,
                1 => more.t_count += 1,
                2 => { more.rotation_count += 1; more.rotation_depth = more.rotation_depth.max(1); }
                3 => more.ccz_count += 1,
                4 => more.ccix_count += 1,
                _ => more.measurement_count += 1,
            }
            let grown = estimate_layout(&more, &rs, 1e-3)?;
            prop_assert!(grown.logical_qubits_post_layout >= base.logical_qubits_post_layout);
            prop_assert!(grown.algorithmic_depth >= base.algorithmic_depth);
            prop_assert!(grown.total_t_states >= base.total_t_states);
            prop_assert!(grown.logical_qubits_post_layout >= 2 * more.num_qubits);
        }
    }
}
