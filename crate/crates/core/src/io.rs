//! Plain-text dataset files.
//!
//! * `.bits`: one line of whitespace-separated `+1` / `-1` tokens.
//! * `.reals`: one value in `[0, 1]` per line.
//! * `.strings`: one string of `+` / `-` characters per line, `∅` for the empty string.

use std::fs;
use std::path::Path;

use crate::dataset::{Dataset, UniverseTag};
use crate::error::{Error, Result};
use crate::queries::BitString;
use crate::signs::{Sign, SignVector};

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

pub fn parse_bits(text: &str, path: &str) -> Result<SignVector> {
    let mut signs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        for (col, tok) in line.split_whitespace().enumerate() {
            let s = match tok {
                "+1" | "1" => Sign::Plus,
                "-1" | "−1" => Sign::Minus,
                other => {
                    return Err(parse_err(
                        path,
                        lineno + 1,
                        format!("token {} is {other:?}, expected +1 or -1", col + 1),
                    ))
                }
            };
            signs.push(s);
        }
    }
    Ok(SignVector::from_signs(&signs))
}

pub fn parse_reals(text: &str, path: &str) -> Result<Vec<f64>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| parse_err(path, lineno + 1, format!("{tok:?} is not a number")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(parse_err(path, lineno + 1, format!("{v} lies outside [0, 1]")));
        }
        rows.push(v);
    }
    Ok(rows)
}

pub fn parse_strings(text: &str, path: &str) -> Result<Vec<BitString>> {
    text.lines()
        .enumerate()
        .map(|(lineno, line)| {
            let tok = line.trim();
            if tok.is_empty() {
                return Err(parse_err(path, lineno + 1, "blank line (write ∅ for the empty string)"));
            }
            BitString::parse(tok).map_err(|e| parse_err(path, lineno + 1, e.to_string()))
        })
        .collect()
}

/// The universe implied by a file extension.
pub fn tag_for_path(path: &Path) -> Result<UniverseTag> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bits") => Ok(UniverseTag::SignBit),
        Some("reals") => Ok(UniverseTag::UnitReal),
        Some("strings") => Ok(UniverseTag::BitString),
        _ => Err(Error::Parameter(format!(
            "{}: dataset files must end in .bits, .reals or .strings",
            path.display()
        ))),
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let tag = tag_for_path(path)?;
    let text = fs::read_to_string(path)?;
    let name = path.display().to_string();
    Ok(match tag {
        UniverseTag::SignBit => Dataset::Signs(parse_bits(&text, &name)?),
        UniverseTag::UnitReal => Dataset::Reals(parse_reals(&text, &name)?),
        UniverseTag::BitString => Dataset::Strings(parse_strings(&text, &name)?),
    })
}

pub fn render_dataset(x: &Dataset) -> String {
    match x {
        Dataset::Signs(v) => {
            let toks: Vec<&str> = v.iter().map(|s| if s == Sign::Plus { "+1" } else { "-1" }).collect();
            let mut out = toks.join(" ");
            out.push('\n');
            out
        }
        Dataset::Reals(v) => v.iter().map(|r| format!("{r}\n")).collect(),
        Dataset::Strings(v) => v.iter().map(|s| format!("{s}\n")).collect(),
    }
}

pub fn save_dataset(x: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tag = tag_for_path(path)?;
    if tag != x.universe() {
        return Err(Error::Parameter(format!(
            "{}: extension implies {tag:?} but the dataset is {:?}",
            path.display(),
            x.universe()
        )));
    }
    fs::write(path, render_dataset(x))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_parse_and_reject() {
        let v = parse_bits("+1 -1 1\n", "x.bits").unwrap();
        assert_eq!(v.to_pm_string(), "+-+");
        match parse_bits("+1 0", "x.bits") {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("token 2"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reals_report_line_numbers() {
        assert_eq!(parse_reals("0.1\n0.9\n", "r").unwrap(), vec![0.1, 0.9]);
        match parse_reals("0.1\nabc\n", "r") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_reals("0.1\n0.2\n1.5\n", "r") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn strings_parse_and_reject() {
        let v = parse_strings("+-\n∅\n-\n", "s").unwrap();
        assert_eq!(v.len(), 3);
        assert!(v[1].is_empty());
        match parse_strings("+-\n+x\n", "s") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn files_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let sets = [
            ("a.bits", Dataset::Signs(SignVector::parse_pm("+--+").unwrap())),
            ("a.reals", Dataset::reals(vec![0.0, 0.25, 1.0]).unwrap()),
            (
                "a.strings",
                Dataset::strings(vec![BitString::parse("+-").unwrap(), BitString::empty()]),
            ),
        ];
        for (name, x) in sets {
            let p = dir.path().join(name);
            save_dataset(&x, &p).unwrap();
            assert_eq!(load_dataset(&p).unwrap(), x);
        }
        let wrong = dir.path().join("b.reals");
        assert!(save_dataset(&Dataset::Signs(SignVector::all_plus(2)), wrong).is_err());
        assert!(load_dataset(dir.path().join("c.txt")).is_err());
    }
}
