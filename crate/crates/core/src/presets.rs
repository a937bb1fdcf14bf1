//! Published reference cases: fourth-order problems (`n = 2`) with three
//! equal branches and the scaling on the last branch. Values are stored with
//! decimal points.

use crate::pencil::Side;

/// Relative tolerance on the three-digit eigenvalues.
pub const RAW_TOLERANCE: f64 = 1e-2;
/// Relative tolerance on the normalized values.
pub const NORMALIZED_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub side: Side,
    /// Signed eigenvalue index.
    pub index: i64,
    pub l: usize,
    pub k: usize,
    /// Eigenvalue magnitude as printed (three significant digits).
    pub raw: f64,
    /// Normalized value `|lambda| * |q|^e`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TablePreset {
    pub id: u8,
    pub n: usize,
    pub a: [f64; 3],
    pub beta: [f64; 3],
    pub d: [f64; 3],
    pub depth: usize,
    pub pos_count: usize,
    pub neg_count: usize,
    pub rows: Vec<TableRow>,
}

const THIRD: f64 = 1.0 / 3.0;

fn row(side: Side, index: i64, l: usize, k: usize, raw: f64, normalized: f64) -> TableRow {
    TableRow {
        side,
        index,
        l,
        k,
        raw,
        normalized,
    }
}

pub fn table(id: u8) -> Option<TablePreset> {
    use Side::{Negative as Neg, Positive as Pos};
    let preset = match id {
        1 => TablePreset {
            id,
            n: 2,
            a: [THIRD; 3],
            beta: [0.0, 2.0 / 3.0, 1.0],
            d: [0.0, 0.0, 0.5],
            depth: 14,
            pos_count: 8,
            neg_count: 0,
            rows: vec![
                row(Pos, 1, 1, 0, 2.86e2, 286.10),
                row(Pos, 2, 2, 0, 1.38e3, 1377.99),
                row(Pos, 3, 1, 1, 1.48e4, 273.71),
                row(Pos, 4, 2, 1, 6.83e4, 1265.31),
                row(Pos, 5, 1, 2, 7.91e5, 271.33),
                row(Pos, 6, 2, 2, 3.69e6, 1264.04),
                row(Pos, 7, 1, 3, 4.27e7, 271.32),
                row(Pos, 8, 2, 3, 1.99e8, 1264.04),
            ],
        },
        2 => TablePreset {
            id,
            n: 2,
            a: [THIRD; 3],
            beta: [0.0, -1.0, 0.0],
            d: [0.0, 0.0, 0.5],
            depth: 14,
            pos_count: 0,
            neg_count: 4,
            rows: vec![
                row(Neg, -1, 1, 0, 3.70e2, 369.75),
                row(Neg, -2, 1, 1, 8.51e3, 157.53),
                row(Neg, -3, 1, 2, 4.58e5, 157.20),
                row(Neg, -4, 1, 3, 2.48e7, 157.20),
            ],
        },
        3 => TablePreset {
            id,
            n: 2,
            a: [THIRD; 3],
            beta: [0.0, -1.0, 0.0],
            d: [0.0, 0.0, -0.5],
            depth: 16,
            pos_count: 6,
            neg_count: 7,
            rows: vec![
                row(Pos, 1, 1, 0, 3.04e2, 304.08),
                row(Pos, 2, 2, 0, 1.38e4, 13820.11),
                row(Pos, 3, 1, 1, 8.72e5, 299.00),
                row(Pos, 4, 2, 1, 4.01e7, 13764.02),
                row(Pos, 5, 1, 2, 2.54e9, 299.00),
                row(Pos, 6, 2, 2, 1.17e11, 13764.02),
                row(Neg, -2, 1, 0, 1.61e4, 299.04),
                row(Neg, -3, 2, 0, 7.43e5, 13764.22),
                row(Neg, -4, 1, 1, 4.71e7, 299.00),
                row(Neg, -5, 2, 1, 2.17e9, 13764.02),
                row(Neg, -6, 1, 2, 1.37e11, 299.00),
                row(Neg, -7, 2, 2, 6.32e12, 13764.02),
            ],
        },
        _ => return None,
    };
    Some(preset)
}
