use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::{Error, Result};

/// Sure and possible word-alignment links `(source, target)`.
///
/// Every sure link is also a possible link.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlignmentSet {
    n_src: usize,
    n_tgt: usize,
    sure: BTreeSet<(usize, usize)>,
    possible: BTreeSet<(usize, usize)>,
}

impl AlignmentSet {
    /// Empty alignment between sentences of the given lengths.
    pub fn new(n_src: usize, n_tgt: usize) -> Self {
        Self {
            n_src,
            n_tgt,
            ..Self::default()
        }
    }

    /// Alignment whose sure (and possible) set is exactly `links`.
    pub fn from_sure(
        n_src: usize,
        n_tgt: usize,
        links: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut a = Self::new(n_src, n_tgt);
        for (s, t) in links {
            a.insert_sure(s, t)?;
        }
        Ok(a)
    }

    fn check(&self, s: usize, t: usize) -> Result<()> {
        if s >= self.n_src || t >= self.n_tgt {
            return Err(Error::Validation(format!(
                "link {s}-{t} outside {}x{} alignment",
                self.n_src, self.n_tgt
            )));
        }
        Ok(())
    }

    /// Adds a sure link (also recorded as possible).
    pub fn insert_sure(&mut self, s: usize, t: usize) -> Result<()> {
        self.check(s, t)?;
        self.sure.insert((s, t));
        self.possible.insert((s, t));
        Ok(())
    }

    /// Adds a possible-only link.
    pub fn insert_possible(&mut self, s: usize, t: usize) -> Result<()> {
        self.check(s, t)?;
        self.possible.insert((s, t));
        Ok(())
    }

    /// Source sentence length.
    pub fn n_src(&self) -> usize {
        self.n_src
    }

    /// Target sentence length.
    pub fn n_tgt(&self) -> usize {
        self.n_tgt
    }

    /// Sure links.
    pub fn sure(&self) -> &BTreeSet<(usize, usize)> {
        &self.sure
    }

    /// Possible links (a superset of [`Self::sure`]).
    pub fn possible(&self) -> &BTreeSet<(usize, usize)> {
        &self.possible
    }

    /// Target indices sure-aligned to source token `s`, ascending.
    pub fn sure_targets(&self, s: usize) -> Vec<usize> {
        self.sure
            .range((s, 0)..=(s, usize::MAX))
            .map(|&(_, t)| t)
            .collect()
    }

    /// Pharaoh text: sure links as `i-j`, possible-only links as `i?j`.
    pub fn to_pharaoh(&self) -> String {
        let mut out = String::new();
        for &(s, t) in &self.possible {
            if !out.is_empty() {
                out.push(' ');
            }
            let sep = if self.sure.contains(&(s, t)) { '-' } else { '?' };
            let _ = write!(out, "{s}{sep}{t}");
        }
        out
    }
}

/// Parses one Pharaoh alignment line.
///
/// Tokens are `i-j` (sure) or `i?j` (possible only), whitespace separated.
/// Parse errors carry the 1-based column of the bad token and line 0; see
/// [`Error::at_line`].
pub fn parse_pharaoh(line: &str, n_src: usize, n_tgt: usize) -> Result<AlignmentSet> {
    let links = parse_links(line)?;
    let mut a = AlignmentSet::new(n_src, n_tgt);
    for (col, s, t, sure) in links {
        let res = if sure {
            a.insert_sure(s, t)
        } else {
            a.insert_possible(s, t)
        };
        res.map_err(|e| parse_error(col, format!("{e}")))?;
    }
    Ok(a)
}

/// Like [`parse_pharaoh`] when only the source length is known; the target
/// length is taken as one past the largest target index.
pub fn parse_pharaoh_source_bounded(line: &str, n_src: usize) -> Result<AlignmentSet> {
    let links = parse_links(line)?;
    let n_tgt = links.iter().map(|l| l.2 + 1).max().unwrap_or(0);
    let mut a = AlignmentSet::new(n_src, n_tgt);
    for (col, s, t, sure) in links {
        let res = if sure {
            a.insert_sure(s, t)
        } else {
            a.insert_possible(s, t)
        };
        res.map_err(|e| parse_error(col, format!("{e}")))?;
    }
    Ok(a)
}

fn parse_error(column: usize, message: String) -> Error {
    Error::Parse {
        line: 0,
        column,
        message,
    }
}

fn parse_links(line: &str) -> Result<Vec<(usize, usize, usize, bool)>> {
    let mut out = Vec::new();
    let mut rest = line;
    let mut offset = 0;
    loop {
        let trimmed = rest.trim_start();
        offset += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            break;
        }
        let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let token = &trimmed[..end];
        let column = line[..offset].chars().count() + 1;
        let (sep_at, sure) = match (token.find('-'), token.find('?')) {
            (Some(i), None) => (i, true),
            (None, Some(i)) => (i, false),
            _ => {
                return Err(parse_error(
                    column,
                    format!("expected `i-j` or `i?j`, found `{token}`"),
                ))
            }
        };
        let idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_error(column, format!("bad index in `{token}`")))
        };
        out.push((column, idx(&token[..sep_at])?, idx(&token[sep_at + 1..])?, sure));
        rest = &trimmed[end..];
        offset += end;
    }
    Ok(out)
}

impl Error {
    /// Sets the line number of a [`Error::Parse`]; other variants pass through.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            Error::Parse { column, message, .. } => Error::Parse {
                line,
                column,
                message,
            },
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_line() {
        let a = parse_pharaoh("0-0 1-1", 2, 2).unwrap();
        let expect: BTreeSet<_> = [(0, 0), (1, 1)].into_iter().collect();
        assert_eq!(a.sure(), &expect);
        assert_eq!(a.possible(), &expect);
    }

    #[test]
    fn empty_line() {
        let a = parse_pharaoh("", 3, 3).unwrap();
        assert!(a.sure().is_empty() && a.possible().is_empty());
        assert!(parse_pharaoh("   \t", 1, 1).unwrap().possible().is_empty());
    }

    #[test]
    fn sure_and_possible() {
        let a = parse_pharaoh("0-1 1?0", 2, 2).unwrap();
        assert_eq!(a.sure().iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(
            a.possible().iter().copied().collect::<Vec<_>>(),
            vec![(0, 1), (1, 0)]
        );
        assert_eq!(a.to_pharaoh(), "0-1 1?0");
    }

    #[test]
    fn errors_report_column() {
        let err = parse_pharaoh("0-0  1x1", 2, 2).unwrap_err();
        assert!(matches!(err, Error::Parse { column: 6, .. }), "{err:?}");
        let err = parse_pharaoh("0-0 5-1", 2, 2).unwrap_err().at_line(7);
        assert!(matches!(err, Error::Parse { line: 7, column: 5, .. }), "{err:?}");
        assert!(parse_pharaoh("0-", 2, 2).is_err());
        assert!(parse_pharaoh("0-1-1", 2, 2).is_err());
    }

    #[test]
    fn source_bounded_infers_target_length() {
        let a = parse_pharaoh_source_bounded("0-3 1-0", 2).unwrap();
        assert_eq!(a.n_tgt(), 4);
        assert!(parse_pharaoh_source_bounded("2-0", 2).is_err());
    }
}
