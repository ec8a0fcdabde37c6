//! Run configuration and the flat `key = value` config file format.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Beam-selection scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    Sbs { n_rf: usize },
    Hbs { g1: usize, g2: usize, xi: f64 },
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::Sbs { n_rf } => format!("sbs_{n_rf}"),
            Scheme::Hbs { g1, g2, xi } => format!("hbs_{g1}_{g2}_xi{xi}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One experiment: a scheme at one or more SNR points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub m: usize,
    pub k: usize,
    /// Propagation clusters (paths) per user channel, 1..=3.
    pub l: usize,
    pub scheme: Scheme,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Fixed feedback-bit budget; `None` applies the bit rule per SNR point.
    pub bits_override: Option<u32>,
    pub out: Option<String>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 256,
            k: 16,
            l: 3,
            scheme: Scheme::Sbs { n_rf: 48 },
            snr_db: vec![12.0],
            trials: 10,
            seed: 1,
            bits_override: None,
            out: None,
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    /// Beams per user in the transmitting group(s); the L that the bit rule
    /// and the QE theory see.
    pub fn active_clusters(&self) -> usize {
        match self.scheme {
            Scheme::Sbs { n_rf } => n_rf / self.k,
            Scheme::Hbs { g1, g2, xi } => {
                if xi == 0.0 {
                    g2 / self.k
                } else if xi == 1.0 {
                    g1 / self.k
                } else {
                    (g1 + g2) / self.k
                }
            }
        }
    }

    /// Total selector width N_RF_g.
    pub fn selector_width(&self) -> usize {
        match self.scheme {
            Scheme::Sbs { n_rf } => n_rf,
            Scheme::Hbs { g1, g2, .. } => g1 + g2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("need K >= 2 users, got {}", self.k)));
        }
        if !(1..=3).contains(&self.l) {
            return Err(Error::Config(format!(
                "clusters per user must be 1..=3, got {}",
                self.l
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("empty SNR list".into()));
        }
        for &s in &self.snr_db {
            if !(0.0..=40.0).contains(&s) {
                return Err(Error::Config(format!("snr_db={s} outside [0, 40]")));
            }
        }
        match self.scheme {
            Scheme::Sbs { n_rf } => {
                if n_rf % self.k != 0 || n_rf == 0 {
                    return Err(Error::Config(format!(
                        "n_rf={n_rf} must be a positive multiple of K={}",
                        self.k
                    )));
                }
                if n_rf > self.m {
                    return Err(Error::Config(format!(
                        "n_rf={n_rf} exceeds M={}",
                        self.m
                    )));
                }
            }
            Scheme::Hbs { g1, g2, xi } => {
                if g1 % self.k != 0 || g2 % self.k != 0 || g1 == 0 || g2 == 0 {
                    return Err(Error::Config(format!(
                        "group sizes g1={g1}, g2={g2} must be positive multiples of K={}",
                        self.k
                    )));
                }
                if g1 + g2 > self.m {
                    return Err(Error::Config(format!(
                        "g1+g2={} exceeds M={}",
                        g1 + g2,
                        self.m
                    )));
                }
                if !(0.0..=1.0).contains(&xi) {
                    return Err(Error::Config(format!("xi={xi} outside [0, 1]")));
                }
            }
        }
        if let Some(bits) = self.bits_override {
            if bits > 22 {
                return Err(Error::Config(format!(
                    "feedback_bits={bits} too large (codebook of 2^{bits} words)"
                )));
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("key '{key}': cannot parse '{value}'")))
}

/// Parses the flat config format: one `key = value` per line, `#` comments,
/// unknown keys are hard errors. Scheme-specific keys (n_rf vs g1/g2/xi)
/// must match the declared scheme.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut scheme_kind: Option<&str> = None;
    let mut n_rf: Option<usize> = None;
    let mut g1: Option<usize> = None;
    let mut g2: Option<usize> = None;
    let mut xi: Option<f64> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "m" => cfg.m = parse_num(key, value)?,
            "k" => cfg.k = parse_num(key, value)?,
            "l" => cfg.l = parse_num(key, value)?,
            "scheme" => match value {
                "sbs" => scheme_kind = Some("sbs"),
                "hbs" => scheme_kind = Some("hbs"),
                other => {
                    return Err(Error::Parse(format!(
                        "scheme must be 'sbs' or 'hbs', got '{other}'"
                    )))
                }
            },
            "n_rf" => n_rf = Some(parse_num(key, value)?),
            "g1" => g1 = Some(parse_num(key, value)?),
            "g2" => g2 = Some(parse_num(key, value)?),
            "xi" => xi = Some(parse_num(key, value)?),
            "snr_db" => {
                cfg.snr_db = value
                    .split(',')
                    .map(|v| parse_num::<f64>(key, v))
                    .collect::<Result<_>>()?;
            }
            "trials" => cfg.trials = parse_num(key, value)?,
            "seed" => cfg.seed = parse_num(key, value)?,
            "feedback_bits" => cfg.bits_override = Some(parse_num(key, value)?),
            "out" => cfg.out = Some(value.to_string()),
            "format" => match value {
                "csv" => cfg.format = Format::Csv,
                "json" => cfg.format = Format::Json,
                other => {
                    return Err(Error::Parse(format!(
                        "format must be 'csv' or 'json', got '{other}'"
                    )))
                }
            },
            other => {
                return Err(Error::Parse(format!(
                    "unknown config key '{other}' (line {})",
                    lineno + 1
                )))
            }
        }
    }

    match scheme_kind {
        Some("hbs") => {
            if n_rf.is_some() {
                return Err(Error::Parse("n_rf is an SBS key; HBS takes g1/g2/xi".into()));
            }
            cfg.scheme = Scheme::Hbs {
                g1: g1.ok_or_else(|| Error::Parse("hbs scheme needs g1".into()))?,
                g2: g2.ok_or_else(|| Error::Parse("hbs scheme needs g2".into()))?,
                xi: xi.ok_or_else(|| Error::Parse("hbs scheme needs xi".into()))?,
            };
        }
        Some("sbs") | None => {
            if g1.is_some() || g2.is_some() || xi.is_some() {
                return Err(Error::Parse(
                    "g1/g2/xi are HBS keys; declare 'scheme = hbs'".into(),
                ));
            }
            if let Some(n) = n_rf {
                cfg.scheme = Scheme::Sbs { n_rf: n };
            }
        }
        _ => unreachable!(),
    }

    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_paper_setup() {
        let cfg = RunConfig::default();
        assert_eq!((cfg.m, cfg.k, cfg.trials), (256, 16, 10));
        assert_eq!(cfg.snr_db, vec![12.0]);
        assert_eq!(cfg.active_clusters(), 3);
        cfg.validate().unwrap();
    }

    #[test]
    fn parses_full_file() {
        let cfg = parse_config(
            "# fig 2 case II\nscheme = hbs\ng1 = 32\ng2 = 16\nxi = 1.0\n\
             l = 2\nsnr_db = 0,4,8,12\ntrials = 50\nseed = 9\nformat = json\n",
        )
        .unwrap();
        assert_eq!(
            cfg.scheme,
            Scheme::Hbs {
                g1: 32,
                g2: 16,
                xi: 1.0
            }
        );
        assert_eq!(cfg.snr_db.len(), 4);
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.active_clusters(), 2);
        assert_eq!(cfg.selector_width(), 48);
    }

    #[test]
    fn unknown_key_is_an_error() {
        match parse_config("trails = 100\n") {
            Err(Error::Parse(msg)) => assert!(msg.contains("trails")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn scheme_key_mismatch_is_an_error() {
        assert!(parse_config("scheme = sbs\ng1 = 32\n").is_err());
        assert!(parse_config("scheme = hbs\nn_rf = 48\n").is_err());
        assert!(parse_config("scheme = hbs\ng1 = 32\ng2 = 16\n").is_err());
    }

    #[test]
    fn validation_catches_bad_shapes() {
        let mut cfg = RunConfig {
            scheme: Scheme::Sbs { n_rf: 50 },
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err()); // 50 not divisible by 16
        cfg.scheme = Scheme::Hbs {
            g1: 160,
            g2: 112,
            xi: 0.5,
        };
        assert!(cfg.validate().is_err()); // 272 > 256
        cfg.scheme = Scheme::Sbs { n_rf: 48 };
        cfg.snr_db = vec![];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn active_clusters_at_endpoints() {
        let mut cfg = RunConfig {
            scheme: Scheme::Hbs {
                g1: 48,
                g2: 32,
                xi: 0.0,
            },
            ..RunConfig::default()
        };
        assert_eq!(cfg.active_clusters(), 2);
        cfg.scheme = Scheme::Hbs {
            g1: 48,
            g2: 32,
            xi: 1.0,
        };
        assert_eq!(cfg.active_clusters(), 3);
    }
}
