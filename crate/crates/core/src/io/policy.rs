//! Alpha-vector policy files.
//!
//! ```text
//! alpha-policy v1 |S|=3
//! 0
//! 0.0000000000000000e0 1.5000000000000000e0 -2.0000000000000000e0
//! ```

use std::io::{self, BufRead, Write};

use crate::bounds::{AlphaVector, LowerBound};
use crate::model::PomdpModel;

use super::{ModelIoError, ParseError};

pub const POLICY_MAGIC: &str = "alpha-policy v1";

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFile {
    pub num_states: usize,
    pub vectors: Vec<AlphaVector>,
}

impl PolicyFile {
    pub fn new(num_states: usize, vectors: Vec<AlphaVector>) -> Self {
        PolicyFile {
            num_states,
            vectors,
        }
    }

    pub fn from_lower_bound(lb: &LowerBound) -> Self {
        PolicyFile::new(lb.num_states(), lb.vectors().to_vec())
    }

    /// Checks dimensions and action indices against `model`.
    pub fn validate(&self, model: &PomdpModel) -> Result<(), ModelIoError> {
        if self.num_states != model.num_states() {
            return Err(ModelIoError::PolicyMismatch(format!(
                "policy has |S|={}, model has {}",
                self.num_states,
                model.num_states()
            )));
        }
        if let Some(v) = self.vectors.iter().find(|v| v.action >= model.num_actions()) {
            return Err(ModelIoError::PolicyMismatch(format!(
                "action {} out of range ({})",
                v.action,
                model.num_actions()
            )));
        }
        Ok(())
    }

    /// Fails on an empty policy, which has no action to offer.
    pub fn into_lower_bound(self) -> Result<LowerBound, ModelIoError> {
        if self.vectors.is_empty() {
            return Err(ModelIoError::PolicyMismatch("policy has no vectors".into()));
        }
        Ok(LowerBound::new(self.num_states, self.vectors))
    }
}

pub fn save_policy<W: Write>(policy: &PolicyFile, mut w: W) -> io::Result<()> {
    writeln!(w, "{POLICY_MAGIC} |S|={}", policy.num_states)?;
    let mut line = String::new();
    for v in &policy.vectors {
        writeln!(w, "{}", v.action)?;
        line.clear();
        for (i, x) in v.values.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{x:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn load_policy<R: BufRead>(r: R) -> Result<PolicyFile, ModelIoError> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .filter(|l| !matches!(l, Ok((_, s)) if s.trim().is_empty()));
    let (_, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| ParseError::new(1, "empty policy file"))?;
    let num_states = header
        .trim()
        .strip_prefix(POLICY_MAGIC)
        .and_then(|rest| rest.trim().strip_prefix("|S|="))
        .and_then(|n| n.parse::<usize>().ok())
        .ok_or_else(|| ParseError::new(1, format!("expected '{POLICY_MAGIC} |S|=<n>'")))?;
    let mut vectors = Vec::new();
    while let Some(next) = lines.next() {
        let (line, text) = next?;
        let action = text
            .trim()
            .parse::<usize>()
            .map_err(|_| ParseError::new(line, format!("expected an action index, found '{}'", text.trim())))?;
        let (vline, vtext) = lines
            .next()
            .transpose()?
            .ok_or_else(|| ParseError::new(line, "missing vector line"))?;
        let values = vtext
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ParseError::new(vline, format!("bad number '{t}'")))
            })
            .collect::<Result<Vec<f64>, ParseError>>()?;
        if values.len() != num_states {
            return Err(ParseError::new(
                vline,
                format!("vector has {} entries, expected {num_states}", values.len()),
            )
            .into());
        }
        vectors.push(AlphaVector::new(values, action));
    }
    Ok(PolicyFile::new(num_states, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(p: &PolicyFile) -> PolicyFile {
        let mut buf = Vec::new();
        save_policy(p, &mut buf).unwrap();
        load_policy(buf.as_slice()).unwrap()
    }

    #[test]
    fn empty_policy_is_header_only() {
        let p = PolicyFile::new(4, vec![]);
        let mut buf = Vec::new();
        save_policy(&p, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "alpha-policy v1 |S|=4\n");
        assert_eq!(round_trip(&p), p);
    }

    #[test]
    fn values_round_trip_exactly() {
        let p = PolicyFile::new(
            3,
            vec![
                AlphaVector::new(vec![0.0, 0.0, 0.0], 0),
                AlphaVector::new(vec![0.1 + 0.2, -1.0 / 3.0, f64::MIN_POSITIVE], 2),
            ],
        );
        assert_eq!(round_trip(&p), p);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(load_policy("alpha-policy v2 |S|=3\n".as_bytes()).is_err());
        let err = load_policy("alpha-policy v1 |S|=2\n0\n1.0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ModelIoError::Parse(ParseError { line: 3, .. })));
        assert!(load_policy("alpha-policy v1 |S|=2\nx\n1 2\n".as_bytes()).is_err());
        assert!(load_policy("alpha-policy v1 |S|=2\n0\n".as_bytes()).is_err());
    }
}
