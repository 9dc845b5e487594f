//! File formats: field input, series JSON, the mould cache and coefficient
//! tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Number;
use thiserror::Error;

use crate::saddlenode::{extract_letters, BivariateSeries, FieldError, SaddleNodeField, Validation};
use crate::scalar::{parse_rational, Scalar};
use crate::series::TruncatedSeries;
use crate::words::Word;

pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error("cache {path} does not match this run: {detail}")]
    StaleCache { path: PathBuf, detail: String },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl IoError {
    fn malformed(what: &'static str, detail: impl Into<String>) -> Self {
        IoError::Malformed {
            what,
            detail: detail.into(),
        }
    }
}

fn integer(n: &Number, what: &'static str) -> Result<BigInt, IoError> {
    BigInt::from_str(&n.to_string()).map_err(|_| IoError::malformed(what, format!("{n} is not an integer")))
}

fn number(n: &BigInt) -> Number {
    Number::from_str(&n.to_string()).expect("integers are JSON numbers")
}

fn rational(pair: &[Number; 2], what: &'static str) -> Result<BigRational, IoError> {
    let num = integer(&pair[0], what)?;
    let den = integer(&pair[1], what)?;
    if den.is_zero() {
        return Err(IoError::malformed(what, "zero denominator"));
    }
    Ok(BigRational::new(num, den))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonomialEntry {
    m: usize,
    n: usize,
    re: [Number; 2],
    #[serde(default)]
    im: Option<[Number; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldFile {
    x_order: usize,
    y_order: usize,
    monomials: Vec<MonomialEntry>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_owned(),
        source,
    })
}

/// Parses a field description into `A(x, y)` without validating it.
pub fn parse_field_json(text: &str) -> Result<BivariateSeries, IoError> {
    let file: FieldFile = serde_json::from_str(text).map_err(|source| IoError::Json {
        path: PathBuf::from("<input>"),
        source,
    })?;
    field_from_file(file)
}

fn field_from_file(file: FieldFile) -> Result<BivariateSeries, IoError> {
    let mut monomials = Vec::with_capacity(file.monomials.len());
    for entry in &file.monomials {
        let re = rational(&entry.re, "coefficient")?;
        let im = match &entry.im {
            Some(pair) => rational(pair, "coefficient")?,
            None => BigRational::zero(),
        };
        monomials.push((entry.m, entry.n, Scalar::new(re, im)));
    }
    Ok(BivariateSeries::from_monomials(file.x_order, file.y_order, monomials)?)
}

/// Reads and validates a field file.
pub fn read_field(path: &Path, validation: Validation) -> Result<SaddleNodeField, IoError> {
    let file: FieldFile = read_json(path)?;
    let a = field_from_file(file)?;
    Ok(extract_letters(&a, validation)?)
}

/// The field file describing `field`.
pub fn field_to_json(field: &SaddleNodeField) -> String {
    let a = field.to_bivariate();
    let monomials = a
        .monomials()
        .into_iter()
        .map(|(m, n, c)| MonomialEntry {
            m,
            n,
            re: [number(c.re().numer()), number(c.re().denom())],
            im: (!c.im().is_zero()).then(|| [number(c.im().numer()), number(c.im().denom())]),
        })
        .collect();
    let file = FieldFile {
        x_order: a.x_order(),
        y_order: a.y_order(),
        monomials,
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

/// `{"order": K, "coeffs": [[re_num, re_den, im_num, im_den], ...]}`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SeriesJson {
    pub order: usize,
    pub coeffs: Vec<[Number; 4]>,
}

impl SeriesJson {
    pub fn from_series(s: &TruncatedSeries) -> Self {
        SeriesJson {
            order: s.order(),
            coeffs: s
                .coeffs()
                .iter()
                .map(|c| {
                    [
                        number(c.re().numer()),
                        number(c.re().denom()),
                        number(c.im().numer()),
                        number(c.im().denom()),
                    ]
                })
                .collect(),
        }
    }

    pub fn to_series(&self) -> Result<TruncatedSeries, IoError> {
        if self.coeffs.len() != self.order + 1 {
            return Err(IoError::malformed(
                "series",
                format!("order {} with {} coefficients", self.order, self.coeffs.len()),
            ));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|[a, b, c, d]| {
                Ok(Scalar::new(
                    rational(&[a.clone(), b.clone()], "series")?,
                    rational(&[c.clone(), d.clone()], "series")?,
                ))
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(TruncatedSeries::from_coeffs(coeffs))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheEntry {
    word: Word,
    coeffs: SeriesJson,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheFile {
    version: u32,
    field_hash: String,
    x_order: usize,
    entries: Vec<CacheEntry>,
}

/// Summary of a cache file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheInfo {
    pub version: u32,
    pub field_hash: String,
    pub x_order: usize,
    pub entries: usize,
    pub max_len: usize,
}

/// The cache file for `field` at `x_order` inside `dir`.
pub fn cache_path(dir: &Path, field: &SaddleNodeField, x_order: usize) -> PathBuf {
    dir.join(format!("{}-x{}.json", field.fingerprint(), x_order))
}

/// Writes solver-mould values. Entries are written in the given order.
pub fn write_cache(
    path: &Path,
    field: &SaddleNodeField,
    x_order: usize,
    entries: &[(Word, TruncatedSeries)],
) -> Result<(), IoError> {
    let file = CacheFile {
        version: CACHE_VERSION,
        field_hash: field.fingerprint(),
        x_order,
        entries: entries
            .iter()
            .map(|(w, s)| CacheEntry {
                word: w.clone(),
                coeffs: SeriesJson::from_series(s),
            })
            .collect(),
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| IoError::Write {
            path: parent.to_owned(),
            source,
        })?;
    }
    let text = serde_json::to_string(&file).expect("serializable");
    write_text(path, &text)
}

/// Reads a cache file and checks that it belongs to `field` at `x_order`.
pub fn read_cache(
    path: &Path,
    field: &SaddleNodeField,
    x_order: usize,
) -> Result<Vec<(Word, TruncatedSeries)>, IoError> {
    let file: CacheFile = read_json(path)?;
    let stale = |detail: String| IoError::StaleCache {
        path: path.to_owned(),
        detail,
    };
    if file.version != CACHE_VERSION {
        return Err(stale(format!("version {} (expected {CACHE_VERSION})", file.version)));
    }
    if file.field_hash != field.fingerprint() {
        return Err(stale("field hash differs".into()));
    }
    if file.x_order != x_order {
        return Err(stale(format!("x-order {} (expected {x_order})", file.x_order)));
    }
    file.entries
        .into_iter()
        .map(|e| {
            let s = e.coeffs.to_series()?;
            if s.order() != x_order {
                return Err(stale(format!("entry {} has order {}", e.word, s.order())));
            }
            Ok((e.word, s))
        })
        .collect()
}

pub fn inspect_cache(path: &Path) -> Result<CacheInfo, IoError> {
    let file: CacheFile = read_json(path)?;
    Ok(CacheInfo {
        version: file.version,
        field_hash: file.field_hash,
        x_order: file.x_order,
        entries: file.entries.len(),
        max_len: file.entries.iter().map(|e| e.word.len()).max().unwrap_or(0),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Write {
        path: path.to_owned(),
        source,
    })
}

/// `"p/q"`, always with an explicit denominator.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn scalar_strings(c: &Scalar) -> [String; 2] {
    [rational_string(c.re()), rational_string(c.im())]
}

/// Parses `"p/q"` back; used by tests and tools reading the output files.
pub fn parse_scalar_strings(pair: &[String; 2]) -> Result<Scalar, IoError> {
    let re = parse_rational(&pair[0]).map_err(|e| IoError::malformed("coefficient", e.to_string()))?;
    let im = parse_rational(&pair[1]).map_err(|e| IoError::malformed("coefficient", e.to_string()))?;
    Ok(Scalar::new(re, im))
}

/// One output component: `{"n", "x_order", "coeffs", "word_count"}`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct ComponentJson {
    pub n: usize,
    pub x_order: usize,
    pub coeffs: Vec<[String; 2]>,
    pub word_count: Number,
}

/// A Borel-plane component: `{"n", "zeta_order", "coeffs", "word_count"}`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct BorelComponentJson {
    pub n: usize,
    pub zeta_order: usize,
    pub coeffs: Vec<[String; 2]>,
    pub word_count: Number,
}

fn count_number(count: u128) -> Number {
    Number::from_str(&count.to_string()).expect("integers are JSON numbers")
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

pub fn component_json(n: usize, x_order: usize, coeffs: &[Scalar], word_count: u128) -> String {
    pretty(&ComponentJson {
        n,
        x_order,
        coeffs: coeffs.iter().map(scalar_strings).collect(),
        word_count: count_number(word_count),
    })
}

pub fn borel_component_json(n: usize, zeta_order: usize, coeffs: &[Scalar], word_count: u128) -> String {
    pretty(&BorelComponentJson {
        n,
        zeta_order,
        coeffs: coeffs.iter().map(scalar_strings).collect(),
        word_count: count_number(word_count),
    })
}

/// `k,re,im` rows, one per coefficient.
pub fn component_csv(coeffs: &[Scalar]) -> Result<String, IoError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["k", "re", "im"])?;
    for (k, c) in coeffs.iter().enumerate() {
        let [re, im] = scalar_strings(c);
        writer.write_record([k.to_string(), re, im])?;
    }
    let bytes = writer.into_inner().map_err(|e| IoError::malformed("csv", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}
