//! Plain-text batch files.
//!
//! ```text
//! qtcov-batch 1
//! dim 16
//! n 500
//! ruler 1,2,3,4,8,12,16
//! seed 7
//! stage quantized
//! dither_seed 7
//! delta_r 1
//! delta_i 1
//! bits 2
//! truth <re> <im> <re> <im> ...
//! data
//! <re> <im> <re> <im> ...      one line per snapshot
//! ```
//!
//! `stage raw` omits the quantization keys. With `bits` present the data
//! lines hold integer cell codes instead of values. `truth`, when present,
//! lists the generators of the covariance that produced the batch.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use qtcov_core::quantizer::code_value;
use qtcov_core::{HermitianToeplitz, QuantizationSpec, Ruler, SampleBatch, Stage};

use crate::error::{Error, Result};

const MAGIC: &str = "qtcov-batch";
const VERSION: u32 = 1;

/// A batch and, for simulated data, the covariance it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchFile {
    pub batch: SampleBatch,
    pub truth: Option<HermitianToeplitz>,
}

pub fn write_batch<W: Write>(mut w: W, file: &BatchFile) -> Result<()> {
    let b = &file.batch;
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "dim {}", b.dim())?;
    writeln!(w, "n {}", b.n())?;
    writeln!(w, "ruler {}", b.ruler().to_list_string())?;
    writeln!(w, "seed {}", b.seed())?;
    let mut codes_for = None;
    match b.stage() {
        Stage::Raw => writeln!(w, "stage raw")?,
        Stage::Quantized { spec, dither_seed } => {
            writeln!(w, "stage quantized")?;
            writeln!(w, "dither_seed {dither_seed}")?;
            writeln!(w, "delta_r {}", spec.delta_r())?;
            writeln!(w, "delta_i {}", spec.delta_i())?;
            if let Some(k) = spec.bits() {
                writeln!(w, "bits {k}")?;
                codes_for = Some(spec.delta_r());
            }
        }
    }
    if let Some(t) = &file.truth {
        write!(w, "truth")?;
        for g in t.generators() {
            write!(w, " {} {}", g.re, g.im)?;
        }
        writeln!(w)?;
    }
    writeln!(w, "data")?;
    for row in b.rows() {
        let mut first = true;
        for z in row {
            let sep = if first { "" } else { " " };
            first = false;
            match codes_for {
                Some(delta) => write!(w, "{sep}{} {}", value_code(z.re, delta), value_code(z.im, delta))?,
                None => write!(w, "{sep}{} {}", z.re, z.im)?,
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn value_code(v: f64, delta: f64) -> i64 {
    (v / delta - 0.5).round() as i64
}

#[derive(Default)]
struct Header {
    dim: Option<usize>,
    n: Option<usize>,
    ruler: Option<String>,
    seed: Option<u64>,
    stage: Option<String>,
    dither_seed: Option<u64>,
    delta_r: Option<f64>,
    delta_i: Option<f64>,
    bits: Option<u32>,
    truth: Option<Vec<Complex64>>,
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, key: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(line, format!("cannot parse {key} from `{s}`")))
}

fn pairs(tokens: &[&str], line: usize) -> Result<Vec<Complex64>> {
    if !tokens.len().is_multiple_of(2) {
        return Err(Error::format(line, "odd number of real values"));
    }
    tokens
        .chunks(2)
        .map(|p| Ok(Complex64::new(parse_num(p[0], line, "re")?, parse_num(p[1], line, "im")?)))
        .collect()
}

pub fn read_batch<R: BufRead>(r: R) -> Result<BatchFile> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| Error::format(1, "empty file"))?;
    let first = first?;
    let mut it = first.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(Error::format(1, format!("missing `{MAGIC}` header")));
    }
    let version: u32 = parse_num(it.next().unwrap_or(""), 1, "version")?;
    if version != VERSION {
        return Err(Error::format(1, format!("unsupported version {version}")));
    }

    let mut h = Header::default();
    let mut in_data = false;
    for (i, line) in lines.by_ref() {
        let ln = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "data" {
            in_data = true;
            break;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match key {
            "dim" => h.dim = Some(parse_num(rest, ln, key)?),
            "n" => h.n = Some(parse_num(rest, ln, key)?),
            "ruler" => h.ruler = Some(rest.trim().to_string()),
            "seed" => h.seed = Some(parse_num(rest, ln, key)?),
            "stage" => h.stage = Some(rest.trim().to_string()),
            "dither_seed" => h.dither_seed = Some(parse_num(rest, ln, key)?),
            "delta_r" => h.delta_r = Some(parse_num(rest, ln, key)?),
            "delta_i" => h.delta_i = Some(parse_num(rest, ln, key)?),
            "bits" => h.bits = Some(parse_num(rest, ln, key)?),
            "truth" => h.truth = Some(pairs(&rest.split_whitespace().collect::<Vec<_>>(), ln)?),
            _ => return Err(Error::format(ln, format!("unknown key `{key}`"))),
        }
    }
    if !in_data {
        return Err(Error::format(0, "missing `data` section"));
    }
    let missing = |k: &str| Error::format(0, format!("missing header key `{k}`"));
    let dim = h.dim.ok_or_else(|| missing("dim"))?;
    let n = h.n.ok_or_else(|| missing("n"))?;
    let ruler = Ruler::parse(&h.ruler.ok_or_else(|| missing("ruler"))?, dim)?;
    let seed = h.seed.ok_or_else(|| missing("seed"))?;
    let stage = match h.stage.as_deref() {
        Some("raw") => Stage::Raw,
        Some("quantized") => {
            let dr = h.delta_r.ok_or_else(|| missing("delta_r"))?;
            let di = h.delta_i.ok_or_else(|| missing("delta_i"))?;
            let spec = match h.bits {
                Some(k) => {
                    if dr != di {
                        return Err(Error::format(0, "finite-bit batches need delta_r = delta_i"));
                    }
                    QuantizationSpec::finite(dr, k)?
                }
                None => QuantizationSpec::infinite(dr, di)?,
            };
            Stage::Quantized {
                spec,
                dither_seed: h.dither_seed.ok_or_else(|| missing("dither_seed"))?,
            }
        }
        Some(s) => return Err(Error::format(0, format!("unknown stage `{s}`"))),
        None => return Err(missing("stage")),
    };
    let code_delta = match stage {
        Stage::Quantized { spec, .. } if spec.bits().is_some() => Some(spec.delta_r()),
        _ => None,
    };

    let width = ruler.len();
    let mut data = Vec::with_capacity(n * width);
    let mut rows = 0;
    for (i, line) in lines {
        let ln = i + 1;
        let line = line?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 2 * width {
            return Err(Error::format(ln, format!("expected {} values, found {}", 2 * width, tokens.len())));
        }
        match code_delta {
            Some(delta) => {
                for p in tokens.chunks(2) {
                    let re: i64 = parse_num(p[0], ln, "code")?;
                    let im: i64 = parse_num(p[1], ln, "code")?;
                    data.push(Complex64::new(code_value(re, delta), code_value(im, delta)));
                }
            }
            None => data.extend(pairs(&tokens, ln)?),
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::format(0, format!("header says n = {n}, found {rows} rows")));
    }
    let truth = match h.truth {
        Some(g) => {
            if g.len() != dim {
                return Err(Error::format(0, format!("truth has {} generators, expected {dim}", g.len())));
            }
            Some(HermitianToeplitz::from_generators(g)?)
        }
        None => None,
    };
    Ok(BatchFile {
        batch: SampleBatch::new(ruler, n, data, stage, seed)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qtcov_core::quantizer::quantize_batch;
    use qtcov_core::sampling::{random_toeplitz_covariance, sample_complex_gaussian};

    fn round_trip(file: &BatchFile) -> BatchFile {
        let mut buf = Vec::new();
        write_batch(&mut buf, file).unwrap();
        read_batch(buf.as_slice()).unwrap()
    }

    #[test]
    fn raw_and_quantized_round_trip() {
        let t = random_toeplitz_covariance(6, 3);
        let ruler = Ruler::alpha(6, 0.5).unwrap();
        let raw = sample_complex_gaussian(&t, &ruler, 20, 3).unwrap();
        let file = BatchFile {
            batch: raw.clone(),
            truth: Some(t.clone()),
        };
        assert_eq!(round_trip(&file), file);

        for spec in [
            QuantizationSpec::infinite(0.3, 1.7).unwrap(),
            QuantizationSpec::finite(0.8, 2).unwrap(),
            QuantizationSpec::finite(0.1, 5).unwrap(),
        ] {
            let q = BatchFile {
                batch: quantize_batch(&raw, &spec, 4).unwrap(),
                truth: None,
            };
            assert_eq!(round_trip(&q), q);
        }
    }

    #[test]
    fn finite_batches_store_codes() {
        let raw = sample_complex_gaussian(&HermitianToeplitz::identity(2), &Ruler::full(2), 3, 1).unwrap();
        let q = quantize_batch(&raw, &QuantizationSpec::finite(0.5, 2).unwrap(), 1).unwrap();
        let mut buf = Vec::new();
        write_batch(&mut buf, &BatchFile { batch: q, truth: None }).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data = text.split("data\n").nth(1).unwrap();
        for tok in data.split_whitespace() {
            let code: i64 = tok.parse().unwrap();
            assert!((-3..=2).contains(&code));
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(read_batch("nope 1\n".as_bytes()).is_err());
        assert!(read_batch("qtcov-batch 2\n".as_bytes()).is_err());
        let short = "qtcov-batch 1\ndim 2\nn 2\nruler 1,2\nseed 0\nstage raw\ndata\n1 0 0 1\n";
        assert!(matches!(read_batch(short.as_bytes()), Err(Error::Format { .. })));
        let bad = "qtcov-batch 1\ndim 2\nn 1\nruler 1,2\nseed 0\nstage raw\ndata\n1 0 x 1\n";
        assert!(matches!(read_batch(bad.as_bytes()), Err(Error::Format { line: 8, .. })));
    }
}
