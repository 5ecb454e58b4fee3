//! Experiment configuration: command-line flags over a TOML file over
//! defaults. The resolved form is embedded in every trace header.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dolab::dynamics::{default_max_iters, InitMode, MetaNashMode, ResponseMode, Schedule, TiebreakPolicy};
use dolab::families::{generate, schedule_for_theorem, tiebreak_for_theorem, FamilyId, Theorem};
use dolab::game_format::read_game;
use dolab::rational::{format_q, parse_q, q, qi, zero};
use dolab::{Player, Posg, Q};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Do,
    AlphaDo,
    Fp,
    Brd,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Do => "do",
            Algo::AlphaDo => "alpha-do",
            Algo::Fp => "fp",
            Algo::Brd => "brd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameSource {
    Family { family: FamilyId, k: usize },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSpec {
    Given([u64; 2]),
    Random,
    /// The start profile of the configured schedule.
    Schedule,
}

impl std::str::FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "random" => Ok(InitSpec::Random),
            "schedule" | "theorem" => Ok(InitSpec::Schedule),
            other => {
                let parts: Vec<&str> = other.split(',').map(str::trim).collect();
                match parts.as_slice() {
                    [a, b] => {
                        let a = a.parse().map_err(|_| format!("bad start index `{a}`"))?;
                        let b = b.parse().map_err(|_| format!("bad start index `{b}`"))?;
                        Ok(InitSpec::Given([a, b]))
                    }
                    _ => Err(format!("init must be `i,j`, `random` or `schedule`, got `{s}`")),
                }
            }
        }
    }
}

/// Parses `3`, `1,4,9`, `0..100` (half-open), `2..=6` or `2-6` (inclusive).
pub fn parse_list(text: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| s.trim().parse::<u64>().map_err(|_| format!("bad number `{s}` in `{text}`"));
        if let Some((a, b)) = part.split_once("..=") {
            out.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = part.split_once("..") {
            out.extend(num(a)?..num(b)?);
        } else if let Some((a, b)) = part.split_once('-') {
            out.extend(num(a)?..=num(b)?);
        } else {
            out.push(num(part)?);
        }
    }
    if out.is_empty() {
        return Err(format!("empty list `{text}`"));
    }
    Ok(out)
}

pub fn parse_mode_meta(s: &str) -> Result<MetaNashMode, String> {
    match s {
        "unique-or-fail" | "unique" => Ok(MetaNashMode::UniqueOrFail),
        "lexicographic" | "lex" => Ok(MetaNashMode::Lexicographic),
        "scripted" => Ok(MetaNashMode::Scripted),
        _ => Err(format!("unknown meta-Nash mode `{s}`")),
    }
}

pub fn parse_mode_response(s: &str) -> Result<ResponseMode, String> {
    match s {
        "unique-or-fail" | "unique" => Ok(ResponseMode::UniqueOrFail),
        "lexicographic" | "lex" => Ok(ResponseMode::Lexicographic),
        "seeded-random" | "random" => Ok(ResponseMode::SeededRandom),
        "scripted" => Ok(ResponseMode::Scripted),
        _ => Err(format!("unknown best-response mode `{s}`")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedField {
    List(Vec<u64>),
    Text(String),
}

/// Every field optional; used both for the config file and for flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct PartialConfig {
    pub family: Option<String>,
    pub k: Option<usize>,
    pub game: Option<PathBuf>,
    pub algo: Option<Algo>,
    pub eps: Option<String>,
    pub alpha: Option<String>,
    pub init: Option<String>,
    pub meta_nash: Option<String>,
    pub best_response: Option<String>,
    pub schedule: Option<String>,
    pub seeds: Option<SeedField>,
    pub max_iters: Option<usize>,
    pub out: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Fields of `self` win over those of `base`.
    pub fn over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            family: self.family.or(base.family),
            k: self.k.or(base.k),
            game: self.game.or(base.game),
            algo: self.algo.or(base.algo),
            eps: self.eps.or(base.eps),
            alpha: self.alpha.or(base.alpha),
            init: self.init.or(base.init),
            meta_nash: self.meta_nash.or(base.meta_nash),
            best_response: self.best_response.or(base.best_response),
            schedule: self.schedule.or(base.schedule),
            seeds: self.seeds.or(base.seeds),
            max_iters: self.max_iters.or(base.max_iters),
            out: self.out.or(base.out),
        }
    }
}

mod qopt {
    use serde::{Deserialize, Deserializer, Serializer};

    use dolab::rational::{format_q, parse_q};
    use dolab::Q;

    pub fn serialize<S: Serializer>(value: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_some(&format_q(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| parse_q(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// A fully resolved experiment. The output path is not part of it: moving
/// a trace must not change its bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub game: GameSource,
    pub algo: Algo,
    #[serde(with = "dolab::rational::qser")]
    pub eps: Q,
    #[serde(with = "qopt")]
    pub alpha: Option<Q>,
    pub init: InitSpec,
    pub meta_nash: MetaNashMode,
    pub best_response: ResponseMode,
    pub schedule: Option<Theorem>,
    pub seeds: Vec<u64>,
    /// Iteration cap; the round count for fp and brd.
    pub max_iters: usize,
}

fn parse_rational(field: &str, text: &str) -> Result<Q, CliError> {
    parse_q(text).map_err(|e| CliError::Usage(format!("--{field}: {e}")))
}

/// Tolerance under which a theorem's run keeps its lower bound.
pub fn theorem_eps(theorem: Theorem, k: usize) -> Q {
    match theorem {
        Theorem::T3 => qi(1),
        Theorem::T4 => q(1, 2 * k as i64),
        _ => zero(),
    }
}

/// A loaded game with the facts a trace header records about it.
pub struct LoadedGame {
    pub game: Posg,
    pub family: Option<FamilyId>,
    pub k: Option<usize>,
    pub label: String,
}

impl LoadedGame {
    pub fn load(source: &GameSource) -> Result<Self, CliError> {
        match source {
            GameSource::Family { family, k } => {
                let game = generate(*family, *k).map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(LoadedGame {
                    game,
                    family: Some(*family),
                    k: Some(*k),
                    label: family.name().to_string(),
                })
            }
            GameSource::File { path } => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let game = read_game(&text).map_err(|e| CliError::Parse {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                let family = game.metadata_value("family").and_then(|f| f.parse().ok());
                let k = game.metadata_value("k").and_then(|k| k.parse().ok());
                let label = family
                    .map(|f: FamilyId| f.name().to_string())
                    .unwrap_or_else(|| path.file_stem().map_or("game".into(), |s| s.to_string_lossy().into_owned()));
                Ok(LoadedGame { game, family, k, label })
            }
        }
    }

    pub fn policy_counts(&self) -> [u64; 2] {
        Player::BOTH.map(|p| self.game.domain(p).policy_count_u64().unwrap_or(u64::MAX))
    }
}

impl ExperimentConfig {
    pub fn resolve(flags: PartialConfig, file: Option<PartialConfig>) -> Result<(Self, Option<PathBuf>), CliError> {
        let p = flags.over(file.unwrap_or_default());
        let game = match (&p.family, &p.game) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give either --family or --game, not both".into())),
            (Some(f), None) => {
                let family: FamilyId = f.parse().map_err(|e: dolab::families::FamilyError| CliError::Usage(e.to_string()))?;
                let k = p.k.ok_or_else(|| CliError::Usage("--family needs --k".into()))?;
                GameSource::Family { family, k }
            }
            (None, Some(path)) => GameSource::File { path: path.clone() },
            (None, None) => return Err(CliError::Usage("no game: give --family and --k, or --game".into())),
        };
        let loaded = LoadedGame::load(&game)?;
        let schedule = p
            .schedule
            .as_deref()
            .map(|s| s.parse::<Theorem>().map_err(CliError::Usage))
            .transpose()?;
        let theorem_tb = match schedule {
            Some(t) => {
                if loaded.family != Some(t.family()) {
                    return Err(CliError::Usage(format!("schedule {t} needs a {} game", t.family())));
                }
                let k = loaded.k.ok_or_else(|| CliError::Usage("schedule needs the game's k".into()))?;
                Some(tiebreak_for_theorem(t, k).map_err(|e| CliError::Usage(e.to_string()))?)
            }
            None => None,
        };
        let algo = p.algo.unwrap_or(if p.alpha.is_some() { Algo::AlphaDo } else { Algo::Do });
        let eps = match (&p.eps, schedule, loaded.k) {
            (Some(e), _, _) => parse_rational("eps", e)?,
            (None, Some(t), Some(k)) => theorem_eps(t, k),
            _ => zero(),
        };
        if eps < zero() {
            return Err(CliError::Usage("--eps must be nonnegative".into()));
        }
        let alpha = p.alpha.as_deref().map(|a| parse_rational("alpha", a)).transpose()?;
        match (algo, &alpha) {
            (Algo::AlphaDo, None) => return Err(CliError::Usage("alpha-do needs --alpha".into())),
            (Algo::AlphaDo, Some(a)) if *a <= zero() || *a > eps => {
                return Err(CliError::Usage(format!("alpha-do needs 0 < alpha <= eps, got alpha {}", format_q(a))))
            }
            (Algo::Do | Algo::Fp | Algo::Brd, Some(_)) => {
                return Err(CliError::Usage(format!("--alpha only applies to alpha-do, not {}", algo.name())))
            }
            _ => {}
        }
        let init = match &p.init {
            Some(text) => text.parse().map_err(CliError::Usage)?,
            None if schedule.is_some() => InitSpec::Schedule,
            None => InitSpec::Given([0, 0]),
        };
        if init == InitSpec::Schedule && schedule.is_none() {
            return Err(CliError::Usage("--init schedule needs --schedule".into()));
        }
        let meta_nash = match &p.meta_nash {
            Some(m) => parse_mode_meta(m).map_err(CliError::Usage)?,
            None => theorem_tb.as_ref().map_or(MetaNashMode::Lexicographic, |t| t.meta_nash),
        };
        let best_response = match &p.best_response {
            Some(m) => parse_mode_response(m).map_err(CliError::Usage)?,
            None => theorem_tb.as_ref().map_or(ResponseMode::Lexicographic, |t| t.best_response),
        };
        let seeds = match &p.seeds {
            Some(SeedField::List(v)) if v.is_empty() => return Err(CliError::Usage("empty seed list".into())),
            Some(SeedField::List(v)) => v.clone(),
            Some(SeedField::Text(t)) => parse_list(t).map_err(CliError::Usage)?,
            None => vec![0],
        };
        let max_iters = match (p.max_iters, loaded.k) {
            (Some(m), _) => m,
            (None, Some(k)) => default_max_iters(k),
            (None, None) => {
                let n = loaded.policy_counts().into_iter().max().unwrap_or(1);
                usize::try_from(n).unwrap_or(usize::MAX).saturating_mul(4)
            }
        };
        if max_iters == 0 {
            return Err(CliError::Usage("--max-iters must be positive".into()));
        }
        let config = ExperimentConfig {
            game,
            algo,
            eps,
            alpha,
            init,
            meta_nash,
            best_response,
            schedule,
            seeds,
            max_iters,
        };
        Ok((config, p.out))
    }

    pub fn k(&self) -> Option<usize> {
        match &self.game {
            GameSource::Family { k, .. } => Some(*k),
            GameSource::File { .. } => None,
        }
    }

    /// Tiebreaking for one seeded trial.
    pub fn tiebreak(&self, loaded: &LoadedGame, seed: u64) -> Result<TiebreakPolicy, CliError> {
        let (schedule, schedule_init) = match (self.schedule, loaded.k) {
            (Some(t), Some(k)) => (
                schedule_for_theorem(t, k).map_err(|e| CliError::Usage(e.to_string()))?,
                Some(dolab::families::init_for_theorem(t, k).map_err(|e| CliError::Usage(e.to_string()))?),
            ),
            _ => (Schedule::default(), None),
        };
        let init = match self.init {
            InitSpec::Given(i) => InitMode::Given(i),
            InitSpec::Random => InitMode::SeededRandom,
            InitSpec::Schedule => InitMode::Given(schedule_init.ok_or_else(|| CliError::Usage("no schedule".into()))?),
        };
        Ok(TiebreakPolicy {
            meta_nash: self.meta_nash,
            best_response: self.best_response,
            init,
            seed,
            schedule,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(family: &str, k: usize) -> PartialConfig {
        PartialConfig {
            family: Some(family.into()),
            k: Some(k),
            ..PartialConfig::default()
        }
    }

    #[test]
    fn lists_parse() {
        assert_eq!(parse_list("3").unwrap(), vec![3]);
        assert_eq!(parse_list("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_list("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_list("2-4,9").unwrap(), vec![2, 3, 4, 9]);
        assert!(parse_list("").is_err());
        assert!(parse_list("a..b").is_err());
    }

    #[test]
    fn init_parses() {
        assert_eq!("3, 4".parse::<InitSpec>().unwrap(), InitSpec::Given([3, 4]));
        assert_eq!("random".parse::<InitSpec>().unwrap(), InitSpec::Random);
        assert!("1".parse::<InitSpec>().is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = PartialConfig {
            eps: Some("1/2".into()),
            max_iters: Some(9),
            ..flags("bn", 2)
        };
        let cli = PartialConfig {
            eps: Some("1/3".into()),
            ..PartialConfig::default()
        };
        let (c, _) = ExperimentConfig::resolve(cli, Some(file)).unwrap();
        assert_eq!(c.eps, q(1, 3));
        assert_eq!(c.max_iters, 9);
        assert_eq!(c.game, GameSource::Family { family: FamilyId::BiggerNumber, k: 2 });
    }

    #[test]
    fn schedule_supplies_defaults() {
        let (c, _) = ExperimentConfig::resolve(
            PartialConfig {
                schedule: Some("T3".into()),
                ..flags("wbn", 3)
            },
            None,
        )
        .unwrap();
        assert_eq!(c.eps, qi(1));
        assert_eq!(c.meta_nash, MetaNashMode::Scripted);
        assert_eq!(c.init, InitSpec::Schedule);
        let mismatched = PartialConfig {
            schedule: Some("T3".into()),
            ..flags("bn", 3)
        };
        assert!(matches!(ExperimentConfig::resolve(mismatched, None), Err(CliError::Usage(_))));
    }

    #[test]
    fn alpha_must_sit_below_eps() {
        let bad = PartialConfig {
            eps: Some("1/10".into()),
            alpha: Some("1/2".into()),
            ..flags("mpc", 3)
        };
        assert!(matches!(ExperimentConfig::resolve(bad, None), Err(CliError::Usage(_))));
        let ok = PartialConfig {
            eps: Some("1/2".into()),
            alpha: Some("1/100".into()),
            ..flags("mpc", 3)
        };
        assert_eq!(ExperimentConfig::resolve(ok, None).unwrap().0.algo, Algo::AlphaDo);
    }

    #[test]
    fn toml_file_parses() {
        let text = "family = \"wbn\"\nk = 4\neps = \"1\"\nseeds = [1, 2]\nmax-iters = 40\n";
        let p: PartialConfig = toml::from_str(text).unwrap();
        assert_eq!(p.seeds, Some(SeedField::List(vec![1, 2])));
        let p: PartialConfig = toml::from_str("seeds = \"0..5\"").unwrap();
        assert_eq!(p.seeds, Some(SeedField::Text("0..5".into())));
        assert!(toml::from_str::<PartialConfig>("colour = 1").is_err());
    }

    #[test]
    fn resolved_config_roundtrips_through_json() {
        let (c, _) = ExperimentConfig::resolve(
            PartialConfig {
                alpha: Some("1/100".into()),
                eps: Some("1/2".into()),
                schedule: Some("T5".into()),
                ..flags("mpc", 3)
            },
            None,
        )
        .unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
    }
}
