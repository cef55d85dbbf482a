//! Plain-text formats for matrices, vectors and chains.
//!
//! All formats are ASCII and whitespace separated. Blank lines are skipped
//! and `#` starts a comment that runs to the end of the line. Reals are
//! written in Rust's shortest round-trip notation, so a file written here
//! parses back to bitwise-identical values.
//!
//! Matrix (triplets, 0-based indices):
//!
//! ```text
//! matrix <n> <m>
//! <row> <col> <value>      # m lines
//! ```
//!
//! Vector:
//!
//! ```text
//! vector <n>
//! <value>                  # n lines
//! ```
//!
//! Markov chain:
//!
//! ```text
//! dtmc
//! states <n>
//! initial <s0>
//! goal <g1> <g2> ... <gk>
//! <src> <dst> <prob>       # one line per nonzero transition, any order
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::markov::{GoalSet, MarkovChain, ModelError};
use crate::sparse::{CsrMatrix, SparseError, Triplet};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid matrix: {0}")]
    Sparse(#[from] SparseError),
    #[error("invalid chain: {0}")]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl FormatError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse { line, message: message.into() }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, FormatError::Io { .. })
    }
}

/// Formats a real so that parsing it back yields the same bits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

/// Non-empty lines with comments stripped, tagged with 1-based line numbers.
struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), last: 0 }
    }

    fn next_fields(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let fields: Vec<&str> = content.split_whitespace().collect();
            if !fields.is_empty() {
                return Some((i + 1, fields));
            }
        }
        None
    }

    fn expect_fields(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), FormatError> {
        self.next_fields()
            .ok_or_else(|| FormatError::parse(self.last + 1, format!("unexpected end of input, expected {what}")))
    }
}

fn field<T: FromStr>(line: usize, s: &str, what: &str) -> Result<T, FormatError> {
    s.parse()
        .map_err(|_| FormatError::parse(line, format!("invalid {what} `{s}`")))
}

fn keyword_line<'a>(lines: &mut Lines<'a>, keyword: &str, args: usize) -> Result<(usize, Vec<&'a str>), FormatError> {
    let (line, fields) = lines.expect_fields(&format!("`{keyword}`"))?;
    if fields[0] != keyword {
        return Err(FormatError::parse(line, format!("expected `{keyword}`, found `{}`", fields[0])));
    }
    if args != usize::MAX && fields.len() != args + 1 {
        return Err(FormatError::parse(line, format!("`{keyword}` takes {args} argument(s)")));
    }
    Ok((line, fields))
}

fn triplet_line(line: usize, fields: &[&str]) -> Result<Triplet, FormatError> {
    if fields.len() != 3 {
        return Err(FormatError::parse(line, "expected `<row> <col> <value>`"));
    }
    Ok(Triplet::new(
        field(line, fields[0], "row index")?,
        field(line, fields[1], "column index")?,
        field(line, fields[2], "value")?,
    ))
}

fn check_entry(line: usize, t: &Triplet, n: usize) -> Result<(), FormatError> {
    if t.row >= n || t.col >= n {
        return Err(FormatError::parse(line, format!("index ({}, {}) out of range for dimension {n}", t.row, t.col)));
    }
    if !t.value.is_finite() {
        return Err(FormatError::parse(line, format!("non-finite value {}", t.value)));
    }
    Ok(())
}

fn trailing(lines: &mut Lines<'_>) -> Result<(), FormatError> {
    match lines.next_fields() {
        Some((line, _)) => Err(FormatError::parse(line, "unexpected trailing content")),
        None => Ok(()),
    }
}

pub fn parse_matrix(text: &str) -> Result<CsrMatrix, FormatError> {
    let mut lines = Lines::new(text);
    let (line, header) = keyword_line(&mut lines, "matrix", 2)?;
    let n: usize = field(line, header[1], "dimension")?;
    let m: usize = field(line, header[2], "entry count")?;
    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, fields) = lines.expect_fields("a matrix entry")?;
        let t = triplet_line(line, &fields)?;
        check_entry(line, &t, n)?;
        entries.push(t);
    }
    trailing(&mut lines)?;
    Ok(CsrMatrix::from_triplets(n, entries)?)
}

pub fn write_matrix(m: &CsrMatrix) -> String {
    let mut out = String::with_capacity(16 * (m.nnz() + 1));
    let _ = writeln!(out, "matrix {} {}", m.n(), m.nnz());
    for t in m.triplets() {
        let _ = writeln!(out, "{} {} {}", t.row, t.col, fmt_real(t.value));
    }
    out
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>, FormatError> {
    let mut lines = Lines::new(text);
    let (line, header) = keyword_line(&mut lines, "vector", 1)?;
    let n: usize = field(line, header[1], "length")?;
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, fields) = lines.expect_fields("a vector entry")?;
        if fields.len() != 1 {
            return Err(FormatError::parse(line, "expected one value per line"));
        }
        v.push(field(line, fields[0], "value")?);
    }
    trailing(&mut lines)?;
    Ok(v)
}

pub fn write_vector(v: &[f64]) -> String {
    let mut out = format!("vector {}\n", v.len());
    for x in v {
        let _ = writeln!(out, "{}", fmt_real(*x));
    }
    out
}

/// Parses a chain and its goal set; the chain is validated.
pub fn parse_dtmc(text: &str) -> Result<(MarkovChain, GoalSet), FormatError> {
    let mut lines = Lines::new(text);
    keyword_line(&mut lines, "dtmc", 0)?;
    let (line, f) = keyword_line(&mut lines, "states", 1)?;
    let n: usize = field(line, f[1], "state count")?;
    let (line, f) = keyword_line(&mut lines, "initial", 1)?;
    let initial: usize = field(line, f[1], "initial state")?;
    if initial >= n {
        return Err(FormatError::parse(line, format!("initial state {initial} out of range for {n} states")));
    }
    let (line, f) = keyword_line(&mut lines, "goal", usize::MAX)?;
    if f.len() < 2 {
        return Err(FormatError::parse(line, "`goal` needs at least one state"));
    }
    let goals = f[1..]
        .iter()
        .map(|s| field(line, s, "goal state"))
        .collect::<Result<Vec<usize>, _>>()?;
    let goals = GoalSet::new(n, goals).map_err(|e| FormatError::parse(line, e.to_string()))?;

    let mut entries = Vec::new();
    while let Some((line, fields)) = lines.next_fields() {
        let t = triplet_line(line, &fields)?;
        check_entry(line, &t, n)?;
        entries.push(t);
    }
    let p = CsrMatrix::from_triplets(n, entries)?;
    let chain = MarkovChain::new(p, initial)?;
    Ok((chain, goals))
}

pub fn write_dtmc(chain: &MarkovChain, goals: &GoalSet) -> String {
    let p = chain.transitions();
    let mut out = String::with_capacity(16 * (p.nnz() + 4));
    let _ = writeln!(out, "dtmc");
    let _ = writeln!(out, "states {}", chain.n());
    let _ = writeln!(out, "initial {}", chain.initial());
    let goal_list: Vec<String> = goals.iter().map(|g| g.to_string()).collect();
    let _ = writeln!(out, "goal {}", goal_list.join(" "));
    for t in p.triplets() {
        let _ = writeln!(out, "{} {} {}", t.row, t.col, fmt_real(t.value));
    }
    out
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), FormatError> {
    std::fs::write(path, contents).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn read_matrix_file(path: &Path) -> Result<CsrMatrix, FormatError> {
    parse_matrix(&read(path)?)
}

pub fn read_vector_file(path: &Path) -> Result<Vec<f64>, FormatError> {
    parse_vector(&read(path)?)
}

pub fn read_dtmc_file(path: &Path) -> Result<(MarkovChain, GoalSet), FormatError> {
    parse_dtmc(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER_DTMC: &str = "\
# four-state example
dtmc
states 4
initial 0
goal 3
0 2 0.5
0 3 0.5   # to the goal
1 1 1
2 0 0.4
2 1 0.6

3 3 1.0
";

    #[test]
    fn parses_paper_chain() {
        let (chain, goals) = parse_dtmc(PAPER_DTMC).unwrap();
        assert_eq!(chain.n(), 4);
        assert_eq!(chain.initial(), 0);
        assert_eq!(goals.iter().collect::<Vec<_>>(), vec![3]);
        assert_eq!(chain.transitions().get(2, 1), 0.6);
    }

    #[test]
    fn dtmc_round_trip() {
        let (chain, goals) = parse_dtmc(PAPER_DTMC).unwrap();
        let (again, goals_again) = parse_dtmc(&write_dtmc(&chain, &goals)).unwrap();
        assert_eq!(again, chain);
        assert_eq!(goals_again, goals);
    }

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let m = CsrMatrix::from_triplets(
            3,
            [(0, 0, 0.1 + 0.2), (1, 2, -1e-300), (2, 1, 123456789.123456789), (2, 2, 1.0 / 3.0)],
        )
        .unwrap();
        let back = parse_matrix(&write_matrix(&m)).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.nonzero().iter().zip(m.nonzero()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let v = vec![0.1, -2.5e-12, 7.0];
        assert_eq!(parse_vector(&write_vector(&v)).unwrap(), v);
    }

    #[test]
    fn matrix_header_counts_entries() {
        assert!(write_matrix(&CsrMatrix::identity(3)).starts_with("matrix 3 3\n"));
        let err = parse_matrix("matrix 2 2\n0 0 1\n").unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 3, .. }), "{err}");
        let err = parse_matrix("matrix 2 1\n0 0 1\n1 1 1\n").unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn parse_errors_are_line_numbered() {
        let err = parse_matrix("matrix 2 1\n0 5 1.0\n").unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 2, .. }), "{err}");
        let err = parse_matrix("# c\nmatrix 2 1\n0 1 abc\n").unwrap_err();
        assert_eq!(err.to_string(), "line 3: invalid value `abc`");
        let err = parse_dtmc("dtmc\nstates 2\ninitial 0\ngoal\n").unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 4, .. }), "{err}");
        let err = parse_dtmc("dtmc\nstates 2\ngoal 1\n").unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn invalid_chain_is_rejected() {
        let text = "dtmc\nstates 2\ninitial 0\ngoal 1\n0 0 0.9\n1 1 1\n";
        match parse_dtmc(text) {
            Err(FormatError::Model(ModelError::RowSumError { state: 0, .. })) => {}
            other => panic!("unexpected {other:?}"),
        }
        let dup = "dtmc\nstates 1\ninitial 0\ngoal 0\n0 0 0.5\n0 0 0.5\n";
        assert!(matches!(parse_dtmc(dup), Err(FormatError::Sparse(SparseError::DuplicateEntry { .. }))));
    }
}
