//! Coding matrices over {-1, +1}: one-vs-all, exhaustive ECOC, random dense
//! codes, and the random column stream used by the ECC boosters.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Prng};

/// `C x L` matrix with entries in {-1, +1}; row `c` is the codeword of class `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingMatrix {
    classes: usize,
    len: usize,
    entries: Vec<i8>,
}

impl CodingMatrix {
    pub fn new(classes: usize, len: usize, entries: Vec<i8>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        if entries.len() != classes * len {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {classes}x{len} code",
                entries.len()
            )));
        }
        if entries.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::InvalidArgument("code entries must be +1 or -1".into()));
        }
        Ok(CodingMatrix {
            classes,
            len,
            entries,
        })
    }

    /// A code with no columns yet; ECC ensembles grow it one column per round.
    pub fn empty(classes: usize) -> Self {
        CodingMatrix {
            classes,
            len: 0,
            entries: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) {
            return Err(Error::DimensionMismatch("ragged code rows".into()));
        }
        CodingMatrix::new(rows.len(), len, rows.concat())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, class: usize, position: usize) -> i8 {
        self.entries[class * self.len + position]
    }

    pub fn row(&self, class: usize) -> &[i8] {
        &self.entries[class * self.len..(class + 1) * self.len]
    }

    pub fn column(&self, position: usize) -> Vec<i8> {
        (0..self.classes).map(|c| self.get(c, position)).collect()
    }

    pub fn push_column(&mut self, column: &[i8]) -> Result<()> {
        if column.len() != self.classes {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} for {} classes",
                column.len(),
                self.classes
            )));
        }
        if column.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::InvalidArgument("code entries must be +1 or -1".into()));
        }
        let mut entries = Vec::with_capacity(self.classes * (self.len + 1));
        for (c, &bit) in column.iter().enumerate() {
            entries.extend_from_slice(self.row(c));
            entries.push(bit);
        }
        self.entries = entries;
        self.len += 1;
        Ok(())
    }

    /// The first `len` columns.
    pub fn truncated(&self, len: usize) -> CodingMatrix {
        let len = len.min(self.len);
        let entries = (0..self.classes)
            .flat_map(|c| self.row(c)[..len].iter().copied())
            .collect();
        CodingMatrix {
            classes: self.classes,
            len,
            entries,
        }
    }

    fn column_is_constant(&self, l: usize) -> bool {
        (1..self.classes).all(|c| self.get(c, l) == self.get(0, l))
    }

    fn columns_collide(&self, a: usize, b: usize) -> bool {
        let same = (0..self.classes).all(|c| self.get(c, a) == self.get(c, b));
        let negated = (0..self.classes).all(|c| self.get(c, a) == -self.get(c, b));
        same || negated
    }

    /// Number of columns that are constant or repeat (possibly negated) an
    /// earlier column.
    pub fn invalid_columns(&self) -> usize {
        (0..self.len)
            .filter(|&l| self.column_is_constant(l) || (0..l).any(|k| self.columns_collide(k, l)))
            .count()
    }

    pub fn rows_distinct(&self) -> bool {
        (0..self.classes).all(|a| (a + 1..self.classes).all(|b| self.row(a) != self.row(b)))
    }

    /// Checks the invariants of a constructed fixed code.
    pub fn validate(&self) -> Result<()> {
        if !self.rows_distinct() {
            return Err(Error::InvalidArgument("code rows are not distinct".into()));
        }
        if self.invalid_columns() > 0 {
            return Err(Error::InvalidArgument(
                "code has constant or repeated columns".into(),
            ));
        }
        Ok(())
    }

    /// CSV of +-1 entries, one class per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in 0..self.classes {
            let line: Vec<String> = self.row(c).iter().map(|e| e.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, l)| {
                l.split(',')
                    .map(|t| {
                        t.trim().parse::<i8>().map_err(|_| Error::Parse {
                            line: k + 1,
                            message: format!("bad code entry {t:?}"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        CodingMatrix::from_rows(&rows)
    }
}

impl fmt::Display for CodingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

pub fn one_vs_all(classes: usize) -> Result<CodingMatrix> {
    if classes < 2 {
        return Err(Error::TooFewClasses(classes));
    }
    let entries = (0..classes)
        .flat_map(|c| (0..classes).map(move |l| if c == l { 1 } else { -1 }))
        .collect();
    CodingMatrix::new(classes, classes, entries)
}

/// Exhaustive error-correcting code for 3 to 7 classes, `2^(C-1) - 1` columns.
///
/// Row 0 is all +1; row `c` alternates runs of -1 and +1 of length
/// `2^(C-1-c)`, starting with -1.
pub fn exhaustive_ecoc(classes: usize) -> Result<CodingMatrix> {
    if !(3..=7).contains(&classes) {
        return Err(Error::InvalidArgument(format!(
            "exhaustive codes need 3 to 7 classes, got {classes}"
        )));
    }
    let len = (1usize << (classes - 1)) - 1;
    let mut entries = vec![1i8; len];
    for c in 1..classes {
        let run = 1usize << (classes - 1 - c);
        entries.extend((0..len).map(|l| if (l / run).is_multiple_of(2) { -1 } else { 1 }));
    }
    CodingMatrix::new(classes, len, entries)
}

pub const RANDOM_CODE_CANDIDATES: usize = 1000;

fn random_candidates(classes: usize, len: usize, seed: u64, count: usize) -> Vec<CodingMatrix> {
    let mut stream = ColumnStream::new(classes, seed);
    (0..count)
        .map(|_| {
            let mut m = CodingMatrix::empty(classes);
            for _ in 0..len {
                m.push_column(&stream.next_column()).expect("valid column");
            }
            m
        })
        .collect()
}

/// Best of [`RANDOM_CODE_CANDIDATES`] random codes: largest minimum row
/// distance, then codes without constant or repeated columns, then the
/// lexicographically smallest entries.
pub fn random_dense_code(classes: usize, len: usize, seed: u64) -> Result<CodingMatrix> {
    if classes < 2 {
        return Err(Error::TooFewClasses(classes));
    }
    let min_len = (usize::BITS - (classes - 1).leading_zeros()) as usize;
    if len < min_len.max(1) {
        return Err(Error::InvalidArgument(format!(
            "{classes} classes need a code length of at least {min_len}"
        )));
    }
    random_candidates(classes, len, seed, RANDOM_CODE_CANDIDATES)
        .into_iter()
        .filter(CodingMatrix::rows_distinct)
        .map(|m| ((min_row_distance(&m), m.invalid_columns() == 0), m))
        .max_by(|(ka, a), (kb, b)| ka.cmp(kb).then(b.entries.cmp(&a.entries)))
        .map(|(_, m)| m)
        .ok_or(Error::NoValidCode(RANDOM_CODE_CANDIDATES))
}

/// Minimum Hamming distance over all unordered row pairs.
pub fn min_row_distance(m: &CodingMatrix) -> usize {
    let mut best = usize::MAX;
    for a in 0..m.classes() {
        for b in a + 1..m.classes() {
            let d = m.row(a).iter().zip(m.row(b)).filter(|(x, y)| x != y).count();
            best = best.min(d);
        }
    }
    if best == usize::MAX {
        0
    } else {
        best
    }
}

/// Nearest codeword by Hamming distance; ties go to the smaller class index.
pub fn nearest_row(m: &CodingMatrix, word: &[i8]) -> usize {
    (0..m.classes())
        .min_by_key(|&c| m.row(c).iter().zip(word).filter(|(a, b)| a != b).count())
        .expect("at least two classes")
}

/// Seeded source of random code columns containing both signs, uniform over
/// the `2^C - 2` valid columns.
#[derive(Debug, Clone)]
pub struct ColumnStream {
    classes: usize,
    rng: Prng,
}

impl ColumnStream {
    pub fn new(classes: usize, seed: u64) -> Self {
        assert!(classes >= 2, "a column stream needs at least two classes");
        ColumnStream {
            classes,
            rng: rng::seeded(seed),
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn next_column(&mut self) -> Vec<i8> {
        loop {
            let column: Vec<i8> = (0..self.classes)
                .map(|_| if self.rng.gen::<bool>() { 1 } else { -1 })
                .collect();
            if column.iter().any(|&e| e != column[0]) {
                return column;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Straightforward pairwise scan, kept separate from `min_row_distance`.
    fn brute_min_distance(rows: &[Vec<i8>]) -> usize {
        let mut d = usize::MAX;
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                if i != j {
                    let h = rows[i].iter().zip(&rows[j]).filter(|(a, b)| a != b).count();
                    d = d.min(h);
                }
            }
        }
        d
    }

    fn rows_of(m: &CodingMatrix) -> Vec<Vec<i8>> {
        (0..m.classes()).map(|c| m.row(c).to_vec()).collect()
    }

    #[test]
    fn one_vs_all_small() {
        let m = one_vs_all(2).unwrap();
        assert_eq!(rows_of(&m), vec![vec![1, -1], vec![-1, 1]]);
        let m = one_vs_all(3).unwrap();
        assert_eq!(rows_of(&m), vec![vec![1, -1, -1], vec![-1, 1, -1], vec![-1, -1, 1]]);
        assert!(one_vs_all(1).is_err());
    }

    #[test]
    fn one_vs_all_distance_is_two() {
        for c in 2..9 {
            let m = one_vs_all(c).unwrap();
            assert_eq!(min_row_distance(&m), 2);
            assert_eq!(brute_min_distance(&rows_of(&m)), 2);
        }
    }

    #[test]
    fn exhaustive_three_classes() {
        let m = exhaustive_ecoc(3).unwrap();
        assert_eq!(rows_of(&m), vec![vec![1, 1, 1], vec![-1, -1, 1], vec![-1, 1, -1]]);
        assert_eq!(min_row_distance(&m), 2);
        assert_eq!(brute_min_distance(&rows_of(&m)), 2);
    }

    #[test]
    fn exhaustive_four_classes() {
        let m = exhaustive_ecoc(4).unwrap();
        assert_eq!(m.len(), 7);
        assert_eq!(brute_min_distance(&rows_of(&m)), 4);
        assert_eq!(min_row_distance(&m), 4);
    }

    #[test]
    fn exhaustive_invariants_for_all_sizes() {
        for c in 3..=7 {
            let m = exhaustive_ecoc(c).unwrap();
            assert_eq!(m.len(), (1 << (c - 1)) - 1);
            m.validate().unwrap();
            assert!(m.row(0).iter().all(|&e| e == 1));
        }
        assert!(exhaustive_ecoc(2).is_err());
        assert!(exhaustive_ecoc(8).is_err());
    }

    #[test]
    fn random_code_two_classes_one_bit() {
        for seed in 0..5 {
            let m = random_dense_code(2, 1, seed).unwrap();
            let rows = rows_of(&m);
            assert!(rows == vec![vec![1], vec![-1]] || rows == vec![vec![-1], vec![1]]);
        }
    }

    #[test]
    fn random_code_is_deterministic() {
        assert_eq!(random_dense_code(5, 10, 17).unwrap(), random_dense_code(5, 10, 17).unwrap());
    }

    #[test]
    fn random_code_beats_median_candidate() {
        let chosen = random_dense_code(5, 10, 2024).unwrap();
        let mut pool: Vec<usize> = random_candidates(5, 10, 2024, RANDOM_CODE_CANDIDATES)
            .iter()
            .map(|m| brute_min_distance(&rows_of(m)))
            .collect();
        pool.sort_unstable();
        let median = pool[pool.len() / 2];
        assert!(min_row_distance(&chosen) >= median);
        assert_eq!(min_row_distance(&chosen), *pool.last().unwrap());
    }

    #[test]
    fn random_code_rejects_short_lengths() {
        assert!(random_dense_code(5, 2, 0).is_err());
        assert!(random_dense_code(4, 2, 0).is_ok());
    }

    #[test]
    fn duplicated_rows_have_zero_distance() {
        let m = CodingMatrix::from_rows(&[vec![1, -1], vec![1, -1], vec![-1, 1]]).unwrap();
        assert_eq!(min_row_distance(&m), 0);
    }

    #[test]
    fn decoding_corrects_fewer_than_half_distance_flips() {
        for c in 3..=5 {
            let m = exhaustive_ecoc(c).unwrap();
            let radius = (min_row_distance(&m) - 1) / 2;
            let l = m.len();
            for class in 0..c {
                // all flip patterns of weight <= radius
                for mask in 0u32..(1 << l) {
                    if mask.count_ones() as usize > radius {
                        continue;
                    }
                    let word: Vec<i8> = (0..l)
                        .map(|k| if mask >> k & 1 == 1 { -m.get(class, k) } else { m.get(class, k) })
                        .collect();
                    assert_eq!(nearest_row(&m, &word), class);
                }
            }
        }
    }

    #[test]
    fn stream_two_classes() {
        let mut s = ColumnStream::new(2, 5);
        for _ in 0..100 {
            let col = s.next_column();
            assert!(col == vec![1, -1] || col == vec![-1, 1]);
        }
    }

    #[test]
    fn stream_is_reproducible() {
        let mut a = ColumnStream::new(6, 123);
        let mut b = ColumnStream::new(6, 123);
        for _ in 0..50 {
            assert_eq!(a.next_column(), b.next_column());
        }
    }

    #[test]
    fn stream_is_uniform_over_valid_columns() {
        let classes = 3;
        let draws = 100_000;
        let mut s = ColumnStream::new(classes, 77);
        let mut counts: HashMap<Vec<i8>, usize> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(s.next_column()).or_default() += 1;
        }
        let cells = (1 << classes) - 2;
        assert_eq!(counts.len(), cells);
        let p = 1.0 / cells as f64;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        let mut chi2 = 0.0;
        for &n in counts.values() {
            assert!((n as f64 - mean).abs() < 3.0 * sigma, "count {n} vs {mean}");
            chi2 += (n as f64 - mean).powi(2) / mean;
        }
        // 5 degrees of freedom, 0.999 quantile
        assert!(chi2 < 20.52, "chi-square {chi2}");
    }

    #[test]
    fn push_column_and_truncate() {
        let mut m = CodingMatrix::empty(3);
        m.push_column(&[1, -1, 1]).unwrap();
        m.push_column(&[-1, -1, 1]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.row(2), &[1, 1]);
        assert_eq!(m.column(1), vec![-1, -1, 1]);
        assert_eq!(m.truncated(1).row(0), &[1]);
        assert!(m.push_column(&[1, 1]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let m = exhaustive_ecoc(4).unwrap();
        assert_eq!(CodingMatrix::from_csv(&m.to_csv()).unwrap(), m);
    }
}
