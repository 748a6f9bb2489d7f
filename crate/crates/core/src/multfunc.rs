//! Bounded multiplicative functions `f: ℕ → [−1, 1]`.
//!
//! A function is described by its values on prime powers. Liouville's λ is
//! read straight off a [`FactorBlock`]; every other function is evaluated by
//! re-running the segmented sieve in value-accumulation mode so that the
//! exponent of each prime is available.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sieve::{FactorBlock, Sieve, SieveConfig};
use crate::sum::Neumaier;

const BOUND_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PrimePowerRule {
    /// f(p) = −1 for every prime.
    Liouville,
    /// f(p) = −1, f(p^k) = 0 for k ≥ 2 (the Möbius function).
    MoebiusSign,
    ConstantOne,
    /// f(p) = ±1 drawn from a ChaCha8 stream keyed by `seed`, one stream per prime.
    RandomSignOnPrimes { seed: u64 },
    /// Explicit values; `default_prime` is f(p) for primes without an entry
    /// (completely multiplicative functions only).
    Table {
        default_prime: Option<f64>,
        #[serde(with = "entry_list")]
        entries: BTreeMap<(u64, u32), f64>,
    },
}

/// Table entries as a list of `[p, k, value]` triples, since JSON keys must be strings.
mod entry_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<(u64, u32), f64>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<(u64, u32, f64)> = map.iter().map(|(&(p, k), &v)| (p, k, v)).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(u64, u32), f64>, D::Error> {
        let list = Vec::<(u64, u32, f64)>::deserialize(d)?;
        Ok(list.into_iter().map(|(p, k, v)| ((p, k), v)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeFunction {
    name: String,
    rule: PrimePowerRule,
    completely_multiplicative: bool,
}

impl MultiplicativeFunction {
    pub fn liouville() -> Self {
        Self {
            name: "liouville".into(),
            rule: PrimePowerRule::Liouville,
            completely_multiplicative: true,
        }
    }

    pub fn moebius_sign() -> Self {
        Self {
            name: "moebius".into(),
            rule: PrimePowerRule::MoebiusSign,
            completely_multiplicative: false,
        }
    }

    pub fn constant_one() -> Self {
        Self {
            name: "one".into(),
            rule: PrimePowerRule::ConstantOne,
            completely_multiplicative: true,
        }
    }

    pub fn random_sign_on_primes(seed: u64) -> Self {
        Self {
            name: "random".into(),
            rule: PrimePowerRule::RandomSignOnPrimes { seed },
            completely_multiplicative: true,
        }
    }

    /// Looks up a built-in function: `liouville`, `moebius`, `one`, `random`.
    pub fn builtin(name: &str, seed: u64) -> Result<Self> {
        match name {
            "liouville" | "lambda" => Ok(Self::liouville()),
            "moebius" | "mobius" | "mu" => Ok(Self::moebius_sign()),
            "one" | "constant-one" => Ok(Self::constant_one()),
            "random" | "random-sign" => Ok(Self::random_sign_on_primes(seed)),
            other => Err(Error::InvalidInput(format!(
                "unknown function '{other}' (expected liouville, moebius, one or random)"
            ))),
        }
    }

    /// Builds a function from explicit prime-power values.
    pub fn from_table(
        name: impl Into<String>,
        entries: BTreeMap<(u64, u32), f64>,
        default_prime: Option<f64>,
    ) -> Result<Self> {
        let name = name.into();
        let completely_multiplicative = default_prime.is_some();
        for (&(p, k), &v) in &entries {
            if p < 2 || k == 0 {
                return Err(Error::InvalidInput(format!("bad prime power {p}^{k}")));
            }
            check_bound(v, &format!("f({p}^{k})"))?;
            if completely_multiplicative && k > 1 {
                let Some(&fp) = entries.get(&(p, 1)).or(default_prime.as_ref()) else {
                    continue;
                };
                if (fp.powi(k as i32) - v).abs() > BOUND_TOL {
                    return Err(Error::InvalidInput(format!(
                        "f({p}^{k}) = {v} contradicts complete multiplicativity (f({p})^{k} = {})",
                        fp.powi(k as i32)
                    )));
                }
            }
        }
        if let Some(v) = default_prime {
            check_bound(v, "f(p)")?;
        }
        Ok(Self {
            name,
            rule: PrimePowerRule::Table {
                default_prime,
                entries,
            },
            completely_multiplicative,
        })
    }

    /// Parses the definition format: one `p k value` triple per line, or
    /// `* 1 v` to declare a completely multiplicative function with f(p) = v.
    /// Blank lines and `#` comments are ignored.
    pub fn parse_definition(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut default_prime = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |why: &str| Error::InvalidInput(format!("line {}: {why}: '{raw}'", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [p, k, v] = fields[..] else {
                return Err(bad("expected three fields"));
            };
            let k: u32 = k.parse().map_err(|_| bad("bad exponent"))?;
            let v: f64 = v.parse().map_err(|_| bad("bad value"))?;
            if p == "*" {
                if k != 1 {
                    return Err(bad("'*' lines must have exponent 1"));
                }
                default_prime = Some(v);
            } else {
                let p: u64 = p.parse().map_err(|_| bad("bad prime"))?;
                if entries.insert((p, k), v).is_some() {
                    return Err(bad("duplicate prime power"));
                }
            }
        }
        Self::from_table(name, entries, default_prime)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        Self::parse_definition(name, &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rule(&self) -> &PrimePowerRule {
        &self.rule
    }

    pub fn is_completely_multiplicative(&self) -> bool {
        self.completely_multiplicative
    }

    pub fn is_liouville(&self) -> bool {
        matches!(self.rule, PrimePowerRule::Liouville)
    }

    /// True when every value is an integer, so sums are exact in `i64`.
    pub fn is_integer_valued(&self) -> bool {
        match &self.rule {
            PrimePowerRule::Table {
                default_prime,
                entries,
            } => default_prime
                .iter()
                .chain(entries.values())
                .all(|v| v.fract() == 0.0),
            _ => true,
        }
    }

    /// f(p^k) for a prime `p` and `k ≥ 1`.
    pub fn prime_power(&self, p: u64, k: u32) -> Result<f64> {
        match &self.rule {
            PrimePowerRule::Liouville => Ok(if k % 2 == 1 { -1.0 } else { 1.0 }),
            PrimePowerRule::MoebiusSign => Ok(if k == 1 { -1.0 } else { 0.0 }),
            PrimePowerRule::ConstantOne => Ok(1.0),
            PrimePowerRule::RandomSignOnPrimes { seed } => {
                let fp = random_sign(*seed, p);
                Ok(if k % 2 == 1 { fp } else { 1.0 })
            }
            PrimePowerRule::Table {
                default_prime,
                entries,
            } => {
                if self.completely_multiplicative {
                    let fp = entries
                        .get(&(p, 1))
                        .or(default_prime.as_ref())
                        .copied()
                        .ok_or_else(|| self.missing(p, 1))?;
                    Ok(entries.get(&(p, k)).copied().unwrap_or_else(|| fp.powi(k as i32)))
                } else {
                    entries.get(&(p, k)).copied().ok_or_else(|| self.missing(p, k))
                }
            }
        }
    }

    fn missing(&self, prime: u64, exponent: u32) -> Error {
        Error::MissingPrimePower {
            function: self.name.clone(),
            prime,
            exponent,
        }
    }

    /// Values `f(n)` for `n` in `block`'s range.
    pub fn evaluate_on_block(&self, block: &FactorBlock) -> Result<Vec<f64>> {
        match self.rule {
            PrimePowerRule::Liouville => Ok(block.lambda.iter().map(|&l| l as f64).collect()),
            PrimePowerRule::ConstantOne => Ok(vec![1.0; block.len()]),
            _ => self.accumulate(&Sieve::new(SieveConfig::default()), block.range()),
        }
    }

    /// Values `f(n)` for `n` in `range`, using `sieve` for the arithmetic.
    pub fn evaluate_range(&self, sieve: &Sieve, range: Range<u64>) -> Result<Vec<f64>> {
        match self.rule {
            PrimePowerRule::Liouville => Ok(sieve
                .sieve_block(range)?
                .lambda
                .iter()
                .map(|&l| l as f64)
                .collect()),
            PrimePowerRule::ConstantOne => {
                if range.start == 0 {
                    return Err(Error::Range("f(0) is undefined".into()));
                }
                Ok(vec![1.0; range.end.saturating_sub(range.start) as usize])
            }
            _ => self.accumulate(sieve, range),
        }
    }

    fn accumulate(&self, sieve: &Sieve, range: Range<u64>) -> Result<Vec<f64>> {
        sieve.accumulate_multiplicative(range, |p, k| self.prime_power(p, k))
    }
}

fn check_bound(v: f64, what: &str) -> Result<()> {
    if !v.is_finite() || v.abs() > 1.0 + BOUND_TOL {
        return Err(Error::InvalidInput(format!("{what} = {v} is outside [-1, 1]")));
    }
    Ok(())
}

fn random_sign(seed: u64, p: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(p);
    if rng.next_u32() & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `(1/X) Σ_{X ≤ n ≤ 2X} f(n)`.
pub fn mean_over(f: &MultiplicativeFunction, x: u64) -> Result<f64> {
    if x < 2 {
        return Err(Error::InvalidInput(format!("X must be at least 2, got {x}")));
    }
    let end = 2 * x + 1;
    let sieve = Sieve::with_bound(SieveConfig::default(), end)?;
    let values = f.evaluate_range(&sieve, x..end)?;
    Ok(mean_of_values(&values, x, f.is_integer_valued()))
}

/// Mean of already-evaluated values over `[X, 2X]`, divided by `X`. Integer
/// valued inputs are summed exactly and divided once.
pub(crate) fn mean_of_values(values: &[f64], x: u64, integer_valued: bool) -> f64 {
    if integer_valued {
        let s: i64 = values.iter().map(|&v| v as i64).sum();
        s as f64 / x as f64
    } else {
        values.iter().copied().collect::<Neumaier>().value() / x as f64
    }
}
