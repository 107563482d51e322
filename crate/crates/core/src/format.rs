//! printf-style output formats: `%s` takes the next parameter value, `%n` is a
//! newline, `%%` a literal percent sign.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::label::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Text(String),
    Param,
    Newline,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("unknown format directive `%{0}`")]
    UnknownDirective(char),
    #[error("format ends with a lone `%`")]
    Trailing,
    #[error("format uses {wanted} `%s` but the rule has {available} parameter(s)")]
    Arity { wanted: usize, available: usize },
}

pub fn parse_format(fmt: &str) -> Result<Vec<Segment>, FormatError> {
    let mut out = Vec::new();
    let mut text = String::new();
    let mut chars = fmt.chars();
    while let Some(c) = chars.next() {
        if c != '%' {
            text.push(c);
            continue;
        }
        match chars.next() {
            Some('%') => text.push('%'),
            Some(d @ ('s' | 'n')) => {
                if !text.is_empty() {
                    out.push(Segment::Text(core::mem::take(&mut text)));
                }
                out.push(if d == 's' { Segment::Param } else { Segment::Newline });
            }
            Some(other) => return Err(FormatError::UnknownDirective(other)),
            None => return Err(FormatError::Trailing),
        }
    }
    if !text.is_empty() {
        out.push(Segment::Text(text));
    }
    Ok(out)
}

pub fn param_slots(segments: &[Segment]) -> usize {
    segments.iter().filter(|s| **s == Segment::Param).count()
}

/// Substitutes `values` in order into the format.
pub fn render(fmt: &str, values: &[&Value]) -> Result<String, FormatError> {
    use core::fmt::Write;
    let segments = parse_format(fmt)?;
    let wanted = param_slots(&segments);
    if wanted > values.len() {
        return Err(FormatError::Arity {
            wanted,
            available: values.len(),
        });
    }
    let mut out = String::new();
    let mut next = values.iter();
    for seg in &segments {
        match seg {
            Segment::Text(t) => out.push_str(t),
            Segment::Newline => out.push('\n'),
            Segment::Param => {
                let v = next.next().expect("arity checked");
                let _ = write!(out, "{v}");
            }
        }
    }
    Ok(out)
}
