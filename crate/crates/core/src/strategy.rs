//! Discrete strategy spaces: named parameters with a default value and a
//! few alternatives, capped by the number of parameters allowed to deviate
//! from their defaults at once.
//!
//! A [`Strategy`] stores one value index per parameter (0 is the default,
//! `i` is `alternatives[i - 1]`). Enumeration order is lexicographic over
//! these index vectors with the first parameter most significant, so the
//! all-defaults strategy always comes first.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default ceiling for [`StrategySpace::enumerate`].
pub const DEFAULT_ENUMERATION_CEILING: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("parameter {0:?} has no alternatives")]
    NoAlternatives(String),
    #[error("parameter {name:?} lists value {value:?} twice or as both default and alternative")]
    DuplicateValue { name: String, value: String },
    #[error("parameter {0:?} declared twice")]
    DuplicateParam(String),
    #[error("strategy space has {count} strategies, above the enumeration ceiling {ceiling}")]
    SpaceTooLarge { count: u128, ceiling: u64 },
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
    #[error("parameter {name:?} has no value {value:?}")]
    UnknownValue { name: String, value: String },
    #[error("strategy does not belong to this space")]
    NotInSpace,
}

/// One tunable parameter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDef {
    name: String,
    default: String,
    alternatives: Vec<String>,
}

impl ParamDef {
    pub fn new(
        name: impl Into<String>,
        default: impl Into<String>,
        alternatives: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self, StrategyError> {
        let def = ParamDef {
            name: name.into(),
            default: default.into(),
            alternatives: alternatives.into_iter().map(Into::into).collect(),
        };
        def.validate()?;
        Ok(def)
    }

    fn validate(&self) -> Result<(), StrategyError> {
        if self.alternatives.is_empty() {
            return Err(StrategyError::NoAlternatives(self.name.clone()));
        }
        let mut seen = HashSet::new();
        for value in std::iter::once(&self.default).chain(&self.alternatives) {
            if !seen.insert(value) {
                return Err(StrategyError::DuplicateValue {
                    name: self.name.clone(),
                    value: value.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn default_value(&self) -> &str {
        &self.default
    }

    pub fn alternatives(&self) -> &[String] {
        &self.alternatives
    }

    /// Number of values including the default.
    pub fn arity(&self) -> usize {
        self.alternatives.len() + 1
    }

    pub fn value(&self, index: usize) -> Option<&str> {
        match index {
            0 => Some(&self.default),
            i => self.alternatives.get(i - 1).map(String::as_str),
        }
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        if value == self.default {
            return Some(0);
        }
        self.alternatives.iter().position(|a| a == value).map(|i| i + 1)
    }
}

/// One point of a [`StrategySpace`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy(Vec<u8>);

impl Strategy {
    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    /// Number of parameters set to a non-default value.
    pub fn deviations(&self) -> usize {
        self.0.iter().filter(|&&i| i != 0).count()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn distance(&self, other: &Strategy) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Strategy{:?}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySpace {
    params: Vec<ParamDef>,
    /// `None` means every parameter may deviate.
    max_deviations: Option<usize>,
}

impl StrategySpace {
    pub fn new(params: Vec<ParamDef>, max_deviations: Option<usize>) -> Result<Self, StrategyError> {
        let mut names = HashSet::new();
        for p in &params {
            p.validate()?;
            if p.arity() > u8::MAX as usize {
                return Err(StrategyError::SpaceTooLarge {
                    count: p.arity() as u128,
                    ceiling: u8::MAX as u64,
                });
            }
            if !names.insert(p.name.as_str()) {
                return Err(StrategyError::DuplicateParam(p.name.clone()));
            }
        }
        Ok(StrategySpace {
            params,
            max_deviations,
        })
    }

    pub fn params(&self) -> &[ParamDef] {
        &self.params
    }

    pub fn max_deviations(&self) -> Option<usize> {
        self.max_deviations
    }

    fn cap(&self) -> usize {
        self.max_deviations
            .unwrap_or(self.params.len())
            .min(self.params.len())
    }

    /// All parameters at their default.
    pub fn default_strategy(&self) -> Strategy {
        Strategy(vec![0; self.params.len()])
    }

    pub fn contains(&self, s: &Strategy) -> bool {
        s.0.len() == self.params.len()
            && s.0
                .iter()
                .zip(&self.params)
                .all(|(&i, p)| (i as usize) < p.arity())
            && s.deviations() <= self.cap()
    }

    pub fn deviation_count(&self, s: &Strategy) -> usize {
        s.deviations()
    }

    /// `ways[i][d]`: number of valid completions of parameters `i..` using
    /// at most `d` further deviations.
    fn completion_table(&self) -> Vec<Vec<u128>> {
        let n = self.params.len();
        let cap = self.cap();
        let mut ways = vec![vec![1u128; cap + 1]; n + 1];
        for i in (0..n).rev() {
            let alts = self.params[i].alternatives.len() as u128;
            for d in 0..=cap {
                let keep = ways[i + 1][d];
                let flip = if d > 0 {
                    alts.saturating_mul(ways[i + 1][d - 1])
                } else {
                    0
                };
                ways[i][d] = keep.saturating_add(flip);
            }
        }
        ways
    }

    /// Number of strategies in the space (saturating).
    pub fn count(&self) -> u128 {
        self.completion_table()[0][self.cap()]
    }

    /// Every strategy, σ₀ first, in lexicographic index order.
    pub fn enumerate(&self) -> Result<Vec<Strategy>, StrategyError> {
        self.enumerate_with_ceiling(DEFAULT_ENUMERATION_CEILING)
    }

    pub fn enumerate_with_ceiling(&self, ceiling: u64) -> Result<Vec<Strategy>, StrategyError> {
        let count = self.count();
        if count > ceiling as u128 {
            return Err(StrategyError::SpaceTooLarge { count, ceiling });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut current = vec![0u8; self.params.len()];
        self.enumerate_from(0, self.cap(), &mut current, &mut out);
        Ok(out)
    }

    fn enumerate_from(&self, i: usize, budget: usize, current: &mut Vec<u8>, out: &mut Vec<Strategy>) {
        if i == self.params.len() {
            out.push(Strategy(current.clone()));
            return;
        }
        current[i] = 0;
        self.enumerate_from(i + 1, budget, current, out);
        if budget > 0 {
            for v in 1..self.params[i].arity() {
                current[i] = v as u8;
                self.enumerate_from(i + 1, budget - 1, current, out);
            }
        }
        current[i] = 0;
    }

    /// The strategy at position `rank` of [`Self::enumerate`], computed
    /// without materialising the enumeration.
    pub fn unrank(&self, mut rank: u128) -> Option<Strategy> {
        let ways = self.completion_table();
        let mut budget = self.cap();
        if rank >= ways[0][budget] {
            return None;
        }
        let mut out = vec![0u8; self.params.len()];
        for (i, p) in self.params.iter().enumerate() {
            let keep = ways[i + 1][budget];
            if rank < keep {
                continue;
            }
            rank -= keep;
            let per_value = ways[i + 1][budget - 1];
            let v = rank / per_value;
            rank %= per_value;
            debug_assert!((v as usize) < p.alternatives.len());
            out[i] = v as u8 + 1;
            budget -= 1;
        }
        Some(Strategy(out))
    }

    /// Uniform draw over the whole space.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Strategy {
        let count = self.count();
        let rank = rng.gen_range(0..count);
        self.unrank(rank).expect("rank below count")
    }

    /// Valid strategies differing from `s` in between 1 and `k` positions,
    /// in enumeration order.
    pub fn neighbors(&self, s: &Strategy, k: usize) -> Vec<Strategy> {
        let cap = self.cap();
        let mut out = Vec::new();
        let mut current = s.0.clone();
        self.neighbors_from(s, 0, k, cap, 0, &mut current, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn neighbors_from(
        &self,
        origin: &Strategy,
        i: usize,
        flips_left: usize,
        cap: usize,
        deviations: usize,
        current: &mut Vec<u8>,
        out: &mut Vec<Strategy>,
    ) {
        if deviations > cap {
            return;
        }
        if i == self.params.len() {
            if current != &origin.0 {
                out.push(Strategy(current.clone()));
            }
            return;
        }
        let original = origin.0[i];
        for v in 0..self.params[i].arity() as u8 {
            let changed = v != original;
            if changed && flips_left == 0 {
                continue;
            }
            current[i] = v;
            self.neighbors_from(
                origin,
                i + 1,
                flips_left - usize::from(changed),
                cap,
                deviations + usize::from(v != 0),
                current,
                out,
            );
        }
        current[i] = original;
    }

    /// Value token of parameter `name` under `s`.
    pub fn value_of<'a>(&'a self, s: &Strategy, name: &str) -> Option<&'a str> {
        let i = self.params.iter().position(|p| p.name == name)?;
        self.params[i].value(*s.0.get(i)? as usize)
    }

    /// `(name, value)` for every parameter, in declaration order.
    pub fn assignment<'a>(&'a self, s: &Strategy) -> Vec<(&'a str, &'a str)> {
        self.params
            .iter()
            .zip(&s.0)
            .map(|(p, &i)| (p.name.as_str(), p.value(i as usize).unwrap_or("?")))
            .collect()
    }

    /// `(name, value)` for non-default parameters only.
    pub fn non_default<'a>(&'a self, s: &Strategy) -> Vec<(&'a str, &'a str)> {
        self.params
            .iter()
            .zip(&s.0)
            .filter(|(_, &i)| i != 0)
            .map(|(p, &i)| (p.name.as_str(), p.value(i as usize).unwrap_or("?")))
            .collect()
    }

    /// `name=value` pairs for non-default parameters, comma separated;
    /// `default` for σ₀.
    pub fn render(&self, s: &Strategy) -> String {
        let pairs = self.non_default(s);
        if pairs.is_empty() {
            return "default".to_string();
        }
        pairs
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Inverse of [`Self::render`].
    pub fn parse(&self, text: &str) -> Result<Strategy, StrategyError> {
        let mut out = self.default_strategy();
        let text = text.trim();
        if text.is_empty() || text == "default" {
            return Ok(out);
        }
        for pair in text.split(',') {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| StrategyError::UnknownParam(pair.to_string()))?;
            let i = self
                .params
                .iter()
                .position(|p| p.name == name.trim())
                .ok_or_else(|| StrategyError::UnknownParam(name.to_string()))?;
            let v = self.params[i]
                .index_of(value.trim())
                .ok_or_else(|| StrategyError::UnknownValue {
                    name: name.to_string(),
                    value: value.to_string(),
                })?;
            out.0[i] = v as u8;
        }
        if !self.contains(&out) {
            return Err(StrategyError::NotInSpace);
        }
        Ok(out)
    }
}

/// Ready-made spaces.
pub mod presets {
    use super::{ParamDef, StrategySpace};

    fn binary(name: &str, default: &str, alt: &str) -> ParamDef {
        ParamDef::new(name, default, [alt]).expect("valid preset")
    }

    /// Nine branching-related kissat options, at most four deviating.
    pub fn kissat() -> StrategySpace {
        StrategySpace::new(
            vec![
                binary("bump", "1", "0"),
                binary("bumpreasons", "1", "0"),
                binary("chrono", "1", "0"),
                binary("eliminate", "1", "0"),
                binary("forcephase", "0", "1"),
                binary("phase", "1", "0"),
                ParamDef::new("stable", "1", ["0", "2"]).expect("valid preset"),
                binary("target", "1", "0"),
                binary("tumble", "1", "0"),
            ],
            Some(4),
        )
        .expect("valid preset")
    }

    /// Split frequency and branching heuristic of the Marabou neural
    /// network verifier.
    pub fn marabou() -> StrategySpace {
        StrategySpace::new(
            vec![
                ParamDef::new("pl-split-freq", "10", ["1", "2", "5"]).expect("valid preset"),
                ParamDef::new("branch", "pseudo-impact", ["babsr", "polarity"]).expect("valid preset"),
            ],
            None,
        )
        .expect("valid preset")
    }

    /// The parameters understood by the embedded CDCL solver, with the same
    /// tokens and defaults as their kissat namesakes.
    pub fn mini_cdcl() -> StrategySpace {
        StrategySpace::new(
            vec![
                binary("bump", "1", "0"),
                binary("forcephase", "0", "1"),
                binary("phase", "1", "0"),
                ParamDef::new("stable", "1", ["0", "2"]).expect("valid preset"),
                binary("tumble", "1", "0"),
            ],
            None,
        )
        .expect("valid preset")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_param_space() -> StrategySpace {
        presets::marabou()
    }

    #[test]
    fn param_def_validation() {
        assert_eq!(
            ParamDef::new("x", "1", Vec::<String>::new()).unwrap_err(),
            StrategyError::NoAlternatives("x".into())
        );
        assert!(ParamDef::new("x", "1", ["1"]).is_err());
        assert!(ParamDef::new("x", "1", ["0", "0"]).is_err());
        let dup = StrategySpace::new(
            vec![
                ParamDef::new("x", "1", ["0"]).unwrap(),
                ParamDef::new("x", "1", ["0"]).unwrap(),
            ],
            None,
        );
        assert_eq!(dup.unwrap_err(), StrategyError::DuplicateParam("x".into()));
    }

    #[test]
    fn kissat_space_sizes() {
        let space = presets::kissat();
        assert_eq!(space.enumerate().unwrap().len(), 349);
        let capped = StrategySpace::new(space.params().to_vec(), Some(2)).unwrap();
        assert_eq!(capped.enumerate().unwrap().len(), 55);
    }

    #[test]
    fn two_param_space_has_twelve() {
        assert_eq!(two_param_space().enumerate().unwrap().len(), 12);
    }

    #[test]
    fn mini_cdcl_space_has_48() {
        assert_eq!(presets::mini_cdcl().count(), 48);
    }

    #[test]
    fn zero_cap_is_just_default() {
        let space = StrategySpace::new(presets::kissat().params().to_vec(), Some(0)).unwrap();
        assert_eq!(space.enumerate().unwrap(), vec![space.default_strategy()]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            assert_eq!(space.sample_uniform(&mut rng), space.default_strategy());
        }
    }

    #[test]
    fn enumeration_starts_with_default_and_is_sorted() {
        let space = presets::kissat();
        let all = space.enumerate().unwrap();
        assert_eq!(all[0], space.default_strategy());
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ceiling_is_enforced() {
        let space = presets::kissat();
        assert_eq!(
            space.enumerate_with_ceiling(100).unwrap_err(),
            StrategyError::SpaceTooLarge { count: 349, ceiling: 100 }
        );
    }

    #[test]
    fn unrank_matches_enumeration() {
        for space in [presets::kissat(), two_param_space(), presets::mini_cdcl()] {
            for (rank, s) in space.enumerate().unwrap().into_iter().enumerate() {
                assert_eq!(space.unrank(rank as u128).as_ref(), Some(&s));
            }
            assert_eq!(space.unrank(space.count()), None);
        }
    }

    #[test]
    fn deviation_counts() {
        let space = two_param_space();
        let s0 = space.default_strategy();
        assert_eq!(space.deviation_count(&s0), 0);
        let one = space.parse("branch=babsr").unwrap();
        assert_eq!(space.deviation_count(&one), 1);
        let both = space.parse("pl-split-freq=5,branch=polarity").unwrap();
        assert_eq!(space.deviation_count(&both), 2);
    }

    #[test]
    fn one_neighbors_of_default() {
        let space = two_param_space();
        let n = space.neighbors(&space.default_strategy(), 1);
        assert_eq!(n.len(), 5);
        assert!(n.iter().all(|s| s.deviations() == 1));
        let kissat = presets::kissat();
        let n = kissat.neighbors(&kissat.default_strategy(), 1);
        assert_eq!(n.len(), 10);
        assert!(n.iter().all(|s| s.deviations() == 1));
    }

    #[test]
    fn neighbors_respect_cap() {
        let space = presets::kissat();
        let all = space.enumerate().unwrap();
        let at_cap = all.iter().find(|s| s.deviations() == 4).unwrap();
        for n in space.neighbors(at_cap, 2) {
            assert!(space.contains(&n));
            assert!((1..=2).contains(&n.distance(at_cap)));
        }
    }

    #[test]
    fn render_and_parse() {
        let space = presets::kissat();
        let s = space.parse("stable=0,target=0").unwrap();
        assert_eq!(space.render(&s), "stable=0,target=0");
        assert_eq!(space.render(&space.default_strategy()), "default");
        assert_eq!(space.parse("default").unwrap(), space.default_strategy());
        assert!(matches!(space.parse("nope=1"), Err(StrategyError::UnknownParam(_))));
        assert!(matches!(space.parse("stable=9"), Err(StrategyError::UnknownValue { .. })));
        assert_eq!(
            space.parse("bump=0,bumpreasons=0,chrono=0,eliminate=0,target=0"),
            Err(StrategyError::NotInSpace)
        );
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let space = presets::kissat();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| space.sample_uniform(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }
}
