//! Textual ruler specifications: `[label:]full`, `[label:]alpha=<a>`,
//! `[label:]A`, `[label:]B` or `[label:]<i1>,<i2>,...`.
//!
//! `A` and `B` are the two nine-element rulers for `d = 16` with equal size
//! and different coverage.

use qtcov_core::Ruler;

use crate::error::{Error, Result};

pub const OMEGA_A: [usize; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 16];
pub const OMEGA_B: [usize; 9] = [1, 2, 3, 5, 8, 11, 14, 15, 16];

/// A ruler plus the identifier written to result tables.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedRuler {
    pub label: String,
    pub ruler: Ruler,
}

pub fn parse_ruler(spec: &str, dim: usize) -> Result<NamedRuler> {
    let spec = spec.trim();
    let (label, body) = match spec.split_once(':') {
        Some((l, b)) => (l.trim().to_string(), b.trim()),
        None => (spec.to_string(), spec),
    };
    if label.is_empty() || label.contains(|c: char| c == '"' || c.is_control()) {
        return Err(Error::config(format!("bad ruler label in `{spec}`")));
    }
    let ruler = match body {
        "full" => Ruler::full(dim),
        "A" | "B" => {
            if dim != 16 {
                return Err(Error::config(format!("ruler {body} is defined for d = 16 only")));
            }
            let idx = if body == "A" { OMEGA_A } else { OMEGA_B };
            Ruler::new(idx.to_vec(), dim)?
        }
        _ => match body.strip_prefix("alpha=") {
            Some(a) => {
                let a: f64 = a
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(format!("bad alpha in `{spec}`")))?;
                Ruler::alpha(dim, a)?
            }
            None => Ruler::parse(body, dim)?,
        },
    };
    Ok(NamedRuler { label, ruler })
}
