//! Fixed-length bit chromosomes and the layouts that map them to parameter
//! vectors.
//!
//! Fields are read most-significant bit first in plain binary. A continuous
//! field of width `w` decodes integer `k` to `lower + k (upper - lower) / (2^w - 1)`,
//! so both bounds are representable; a discrete-multiple field decodes to
//! `step (k + index_offset)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::rng::RandomSource;

/// Widest supported field, so `2^w - 1` and the decoded integer fit in `u64`
/// and stay exact in `f64`.
pub const MAX_FIELD_BITS: usize = 52;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("chromosome has {actual} bits but the layout needs {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("layout has {expected} fields but {actual} values were given")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("field {field}: value {value} is outside the representable range [{lower}, {upper}]")]
    OutOfRange { field: usize, value: f64, lower: f64, upper: f64 },
    #[error("invalid field spec: {0}")]
    InvalidField(String),
    #[error("invalid bit string: {0}")]
    InvalidBits(String),
    #[error("layout key `{0}`: {1}")]
    LayoutKey(String, String),
}

/// Fixed-length bit string. No operator in this crate changes its length.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
}

impl Chromosome {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Unsigned integer of `bits[start..start + width]`, most significant first.
    pub fn read_uint(&self, start: usize, width: usize) -> u64 {
        self.bits[start..start + width].iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn write_uint(&mut self, start: usize, width: usize, value: u64) {
        for (i, bit) in self.bits[start..start + width].iter_mut().enumerate() {
            *bit = (value >> (width - 1 - i)) & 1 == 1;
        }
    }

    /// Concatenation in order.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Chromosome>) -> Self {
        Self { bits: parts.into_iter().flat_map(|c| c.bits.iter().copied()).collect() }
    }

    /// Lower-case hex, most significant nibble first. The string is
    /// left-padded with zero bits to a multiple of four.
    pub fn to_hex(&self) -> String {
        let pad = (4 - self.bits.len() % 4) % 4;
        let padded: Vec<bool> = std::iter::repeat_n(false, pad).chain(self.bits.iter().copied()).collect();
        padded
            .chunks(4)
            .map(|nibble| {
                let v = nibble.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
                char::from_digit(v, 16).unwrap()
            })
            .collect()
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Chromosome {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(EncodingError::InvalidBits(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Chromosome::from_bits)
    }
}

/// How one parameter is stored in a chromosome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldSpec {
    Continuous { bits: usize, lower: f64, upper: f64 },
    DiscreteMultiple { bits: usize, step: f64, index_offset: i64 },
}

impl FieldSpec {
    pub fn continuous(bits: usize, lower: f64, upper: f64) -> Result<Self, EncodingError> {
        let spec = Self::Continuous { bits, lower, upper };
        spec.validate()?;
        Ok(spec)
    }

    pub fn discrete(bits: usize, step: f64, index_offset: i64) -> Result<Self, EncodingError> {
        let spec = Self::DiscreteMultiple { bits, step, index_offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        let bits = self.bits();
        if bits == 0 || bits > MAX_FIELD_BITS {
            return Err(EncodingError::InvalidField(format!("bit width {bits} not in 1..={MAX_FIELD_BITS}")));
        }
        match *self {
            Self::Continuous { lower, upper, .. } => {
                if !(lower.is_finite() && upper.is_finite() && upper > lower) {
                    return Err(EncodingError::InvalidField(format!(
                        "continuous bounds need lower < upper, got [{lower}, {upper}]"
                    )));
                }
            }
            Self::DiscreteMultiple { step, .. } => {
                if !(step.is_finite() && step > 0.0) {
                    return Err(EncodingError::InvalidField(format!("step must be positive, got {step}")));
                }
            }
        }
        Ok(())
    }

    pub fn bits(&self) -> usize {
        match *self {
            Self::Continuous { bits, .. } | Self::DiscreteMultiple { bits, .. } => bits,
        }
    }

    fn max_level(&self) -> u64 {
        (1u64 << self.bits()) - 1
    }

    /// Smallest and largest decodable values.
    pub fn range(&self) -> (f64, f64) {
        (self.decode_uint(0), self.decode_uint(self.max_level()))
    }

    /// Distance between adjacent decodable values.
    pub fn resolution(&self) -> f64 {
        match *self {
            Self::Continuous { lower, upper, .. } => (upper - lower) / self.max_level() as f64,
            Self::DiscreteMultiple { step, .. } => step,
        }
    }

    pub fn decode_uint(&self, k: u64) -> f64 {
        match *self {
            Self::Continuous { lower, upper, .. } => {
                if k == self.max_level() {
                    upper
                } else {
                    lower + k as f64 * (upper - lower) / self.max_level() as f64
                }
            }
            Self::DiscreteMultiple { step, index_offset, .. } => step * (k as i64 + index_offset) as f64,
        }
    }

    /// Nearest level for `value`, or an error naming `field` when `value`
    /// lies outside the representable range by more than half a level.
    pub fn encode_uint(&self, field: usize, value: f64) -> Result<u64, EncodingError> {
        let level = match *self {
            Self::Continuous { lower, upper, .. } => (value - lower) / (upper - lower) * self.max_level() as f64,
            Self::DiscreteMultiple { step, index_offset, .. } => value / step - index_offset as f64,
        };
        let rounded = level.round();
        if !rounded.is_finite() || rounded < 0.0 || rounded > self.max_level() as f64 {
            let (lower, upper) = self.range();
            return Err(EncodingError::OutOfRange { field, value, lower, upper });
        }
        Ok(rounded as u64)
    }
}

/// Ordered field list; its total width is the chromosome length it decodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GenomeLayout {
    fields: Vec<FieldSpec>,
}

impl GenomeLayout {
    pub fn new(fields: Vec<FieldSpec>) -> Result<Self, EncodingError> {
        for f in &fields {
            f.validate()?;
        }
        Ok(Self { fields })
    }

    /// `n` identical continuous fields.
    pub fn uniform(n: usize, bits: usize, lower: f64, upper: f64) -> Result<Self, EncodingError> {
        Self::new(vec![FieldSpec::continuous(bits, lower, upper)?; n])
    }

    /// The 44-bit pressure-vessel genome: two 4-bit thickness fields in
    /// multiples of 0.0625 and two 18-bit continuous fields on [10, 100].
    pub fn pressure_vessel() -> Self {
        Self::new(vec![
            FieldSpec::DiscreteMultiple { bits: 4, step: 0.0625, index_offset: 16 },
            FieldSpec::DiscreteMultiple { bits: 4, step: 0.0625, index_offset: 5 },
            FieldSpec::Continuous { bits: 18, lower: 10.0, upper: 100.0 },
            FieldSpec::Continuous { bits: 18, lower: 10.0, upper: 100.0 },
        ])
        .expect("vessel layout is valid")
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    pub fn dimension(&self) -> usize {
        self.fields.len()
    }

    pub fn total_bits(&self) -> usize {
        self.fields.iter().map(FieldSpec::bits).sum()
    }

    /// `(lo, hi)` of every field.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.fields.iter().map(FieldSpec::range).collect()
    }

    pub fn decode(&self, chrom: &Chromosome) -> Result<Vec<f64>, EncodingError> {
        let mut out = Vec::with_capacity(self.fields.len());
        self.decode_into(chrom, &mut out)?;
        Ok(out)
    }

    pub fn decode_into(&self, chrom: &Chromosome, out: &mut Vec<f64>) -> Result<(), EncodingError> {
        let expected = self.total_bits();
        if chrom.len() != expected {
            return Err(EncodingError::LengthMismatch { expected, actual: chrom.len() });
        }
        out.clear();
        let mut start = 0;
        for field in &self.fields {
            out.push(field.decode_uint(chrom.read_uint(start, field.bits())));
            start += field.bits();
        }
        Ok(())
    }

    pub fn encode(&self, values: &[f64]) -> Result<Chromosome, EncodingError> {
        if values.len() != self.fields.len() {
            return Err(EncodingError::DimensionMismatch { expected: self.fields.len(), actual: values.len() });
        }
        let mut chrom = Chromosome::zeros(self.total_bits());
        let mut start = 0;
        for (i, (field, &v)) in self.fields.iter().zip(values).enumerate() {
            chrom.write_uint(start, field.bits(), field.encode_uint(i, v)?);
            start += field.bits();
        }
        Ok(chrom)
    }

    /// Config-file lines `field.<i>.<key>=<value>`.
    pub fn to_config_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for (i, f) in self.fields.iter().enumerate() {
            match *f {
                FieldSpec::Continuous { bits, lower, upper } => {
                    lines.push(format!("field.{i}.kind=continuous"));
                    lines.push(format!("field.{i}.bits={bits}"));
                    lines.push(format!("field.{i}.lower={lower}"));
                    lines.push(format!("field.{i}.upper={upper}"));
                }
                FieldSpec::DiscreteMultiple { bits, step, index_offset } => {
                    lines.push(format!("field.{i}.kind=discrete"));
                    lines.push(format!("field.{i}.bits={bits}"));
                    lines.push(format!("field.{i}.step={step}"));
                    lines.push(format!("field.{i}.offset={index_offset}"));
                }
            }
        }
        lines
    }

    /// Parses `field.<i>.<key>` entries. Indices must be contiguous from 0.
    pub fn from_config<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, EncodingError> {
        use std::collections::BTreeMap;
        let mut by_index: BTreeMap<usize, BTreeMap<String, String>> = BTreeMap::new();
        for (key, value) in entries {
            let bad = |msg: &str| EncodingError::LayoutKey(key.to_string(), msg.to_string());
            let rest = key.strip_prefix("field.").ok_or_else(|| bad("expected field.<i>.<key>"))?;
            let (idx, name) = rest.split_once('.').ok_or_else(|| bad("expected field.<i>.<key>"))?;
            let idx: usize = idx.parse().map_err(|_| bad("field index is not an integer"))?;
            if !matches!(name, "kind" | "bits" | "lower" | "upper" | "step" | "offset") {
                return Err(bad("unknown field key"));
            }
            by_index.entry(idx).or_default().insert(name.to_string(), value.trim().to_string());
        }
        let mut fields = Vec::with_capacity(by_index.len());
        for (expected, (idx, kv)) in by_index.into_iter().enumerate() {
            if idx != expected {
                return Err(EncodingError::LayoutKey(
                    format!("field.{expected}"),
                    "field indices must be contiguous from 0".into(),
                ));
            }
            let get = |name: &str| -> Result<&str, EncodingError> {
                kv.get(name)
                    .map(String::as_str)
                    .ok_or_else(|| EncodingError::LayoutKey(format!("field.{idx}.{name}"), "missing".into()))
            };
            let num = |name: &str| -> Result<f64, EncodingError> {
                get(name)?
                    .parse()
                    .map_err(|_| EncodingError::LayoutKey(format!("field.{idx}.{name}"), "not a number".into()))
            };
            let bits: usize = get("bits")?
                .parse()
                .map_err(|_| EncodingError::LayoutKey(format!("field.{idx}.bits"), "not an integer".into()))?;
            let field = match get("kind")? {
                "continuous" => FieldSpec::continuous(bits, num("lower")?, num("upper")?)?,
                "discrete" => {
                    let offset: i64 = get("offset")?.parse().map_err(|_| {
                        EncodingError::LayoutKey(format!("field.{idx}.offset"), "not an integer".into())
                    })?;
                    FieldSpec::discrete(bits, num("step")?, offset)?
                }
                other => {
                    return Err(EncodingError::LayoutKey(
                        format!("field.{idx}.kind"),
                        format!("unknown kind {other:?}"),
                    ))
                }
            };
            fields.push(field);
        }
        Self::new(fields)
    }
}

/// Chromosome with independent fair bits.
pub fn random_chromosome(len: usize, src: &mut RandomSource) -> Chromosome {
    Chromosome::from_bits((0..len).map(|_| src.next_u64() >> 63 == 1).collect())
}
