// Generated by `calibration_table_source()`; do not edit by hand.
// Censoring target 0.25, Monte Carlo pool 200000, seed 20231107.
// Columns: scenario, skew, intervals (0 = continuous), beta0c.

use super::Skew;

pub(super) const BETA0C: &[(u8, Skew, usize, f64)] = &[
    (1, Skew::Left, 0, 5.053580138870691),
    (2, Skew::Left, 0, 4.756893593854569),
    (4, Skew::Left, 0, 5.031014733655329),
    (1, Skew::Right, 0, 4.6556930104156695),
    (2, Skew::Right, 0, 4.765100036330585),
    (4, Skew::Right, 0, 4.927608783382093),
];
