//! Text formats: tokenized corpora, Pharaoh alignments, reordering-index
//! files, bracketed trees and the PE CSV dump.

use std::fmt::Write as _;
use std::path::Path;

use xlpe_core::btg::{
    btg_oracle_reorder, parse_pharaoh, parse_pharaoh_source_bounded, representative_positions_with, Aggregation,
    AlignmentSet, Permutation, Reordering,
};
use xlpe_core::posenc::PeMatrix;

use crate::{Error, Result};

/// Header of the PE dump.
pub const PE_CSV_HEADER: &str = "token_index,slot,dim,value";

/// Reads a whole file as UTF-8 text.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(Error::read(path))
}

/// Writes `text`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::write(dir))?;
    }
    std::fs::write(path, text).map_err(Error::write(path))
}

/// Splits a corpus into whitespace-separated token lines.
pub fn tokenize(text: &str) -> Vec<Vec<&str>> {
    text.lines().map(|l| l.split_whitespace().collect()).collect()
}

fn line_error(line: usize, e: xlpe_core::Error) -> Error {
    Error::Core(e.at_line(line))
}

/// Runs the BTG oracle on every sentence of a corpus. The alignment file
/// must have exactly one line per corpus line.
pub fn reorder_corpus(corpus: &str, alignments: &str, rule: Aggregation) -> Result<Vec<Reordering>> {
    let sentences = tokenize(corpus);
    let aligns: Vec<&str> = alignments.lines().collect();
    if sentences.len() != aligns.len() {
        let line = sentences.len().min(aligns.len()) + 1;
        return Err(Error::Input(format!(
            "line {line}: corpus has {} lines but alignment file has {}",
            sentences.len(),
            aligns.len()
        )));
    }
    sentences
        .iter()
        .zip(&aligns)
        .enumerate()
        .map(|(i, (tokens, line))| {
            let n = tokens.len();
            if n == 0 {
                return Err(Error::Input(format!("line {}: empty sentence", i + 1)));
            }
            let a = parse_pharaoh_source_bounded(line, n).map_err(|e| line_error(i + 1, e))?;
            let pref = representative_positions_with(&a, rule).map_err(|e| line_error(i + 1, e))?;
            btg_oracle_reorder(&pref).map_err(|e| line_error(i + 1, e))
        })
        .collect()
}

/// One line of space-separated `pos_XL` values.
pub fn format_indices(perm: &Permutation) -> String {
    perm.positions()
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses a `pos_XL` line into a permutation. `line_no` is 1-based and
/// used in error messages.
pub fn parse_indices(line: &str, line_no: usize) -> Result<Permutation> {
    let positions = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| Error::Input(format!("line {line_no}: `{tok}` is not an index")))
        })
        .collect::<Result<Vec<_>>>()?;
    if positions.is_empty() {
        return Err(Error::Input(format!("line {line_no}: empty index line")));
    }
    Permutation::from_positions(positions).map_err(|e| Error::Input(format!("line {line_no}: {e}")))
}

/// Parses a Pharaoh file. Index bounds are not known, so only the syntax
/// is checked.
pub fn parse_alignment_file(text: &str) -> Result<Vec<AlignmentSet>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| parse_pharaoh(line, usize::MAX, usize::MAX).map_err(|e| line_error(i + 1, e)))
        .collect()
}

/// Appends the long-format CSV rows of one encoding. `slots[i]` is the
/// position that row `i` encodes.
pub fn write_pe_rows(out: &mut String, pe: &PeMatrix, slots: &[usize]) {
    for (i, &slot) in slots.iter().enumerate() {
        for (dim, v) in pe.values().row(i).iter().enumerate() {
            let _ = writeln!(out, "{i},{slot},{dim},{v}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use xlpe_core::posenc::absolute_pe;

    #[test]
    fn identity_and_reversal() {
        let r = reorder_corpus("a b c\nx y z\n", "0-0 1-1 2-2\n0-2 1-1 2-0\n", Aggregation::Mean).unwrap();
        assert_eq!(format_indices(&r[0].permutation), "0 1 2");
        assert_eq!(format_indices(&r[1].permutation), "2 1 0");
        assert_eq!(r[1].tree.to_bracketed(), "<0 <1 2>>");
    }

    #[test]
    fn count_mismatch_names_the_line() {
        let e = reorder_corpus("a b\nc d\n", "0-0\n", Aggregation::Mean).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn parse_errors_carry_line_and_column() {
        let e = reorder_corpus("a b\nc d\n", "0-0\n0-0 1x1\n", Aggregation::Mean).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 2") && msg.contains("column 5"), "{msg}");
        let e = reorder_corpus("a b\n", "0-0 5-1\n", Aggregation::Mean).unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
    }

    #[test]
    fn index_lines() {
        let p = parse_indices(" 2 0 1 ", 1).unwrap();
        assert_eq!(p.positions(), &[2, 0, 1]);
        assert_eq!(format_indices(&p), "2 0 1");
        assert!(parse_indices("0 0", 4).unwrap_err().to_string().contains("line 4"));
        assert!(parse_indices("0 x", 1).is_err());
        assert!(parse_indices("", 1).is_err());
    }

    #[test]
    fn pe_rows_for_one_position() {
        let mut s = String::new();
        write_pe_rows(&mut s, &absolute_pe(1, 4).unwrap(), &[0]);
        let values: Vec<f64> = s.lines().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(values, vec![0.0, 1.0, 0.0, 1.0]);
        assert!(s.starts_with("0,0,0,"));
    }
}
