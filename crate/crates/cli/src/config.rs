//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` comments, no nesting. Keys may appear at
//! most once; unknown keys are rejected with their line number so typos
//! surface immediately.

use std::collections::HashMap;

use crate::error::{CliError, Result};
use sampden::estimators::EstimatorKind;
use sampden::processes::{OuModel, ProcessModel, SmoothGaussianModel};
use sampden::risk::SchemeRule;
use sampden::sampling::SamplingScheme;
use sampden::theory::MixingProfile;

const KNOWN_KEYS: &[&str] = &[
    // process
    "process", "theta", "sigma", "dim", "ell",
    // sampling design
    "scheme", "r", "delta", "delta_n", "d1", "d2", "d3", "gamma0",
    // estimator and experiment sizes
    "estimator", "n", "c", "bw_exponent", "reps", "seed", "out",
    "quad_order", "domain_sds",
    // pointwise
    "x", "beta",
    // theory inputs
    "roughness", "u0", "u1", "a0", "rho", "h0", "norm_k", "norm_phi",
    "f_sup", "pi_sup", "pi_tail",
];

/// Raw parsed config: values plus the line each was defined on.
#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: HashMap<String, (String, usize)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config_at(lineno, format!("expected 'key = value', got '{line}'"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::config_at(lineno, format!("unknown key '{key}'")));
            }
            if value.is_empty() {
                return Err(CliError::config_at(lineno, format!("key '{key}' has no value")));
            }
            if entries.insert(key.to_string(), (value.to_string(), lineno)).is_some() {
                return Err(CliError::config_at(lineno, format!("key '{key}' is defined twice")));
            }
        }
        Ok(Config { entries })
    }

    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config '{path}': {e}")))?;
        Self::parse(&text)
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn value_of(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| CliError::config(format!("missing required key '{key}'")))
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.value_of(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|e| CliError::config_at(line, format!("key '{key}': {e}"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.require(key)?;
        Ok(self.f64_opt(key)?.expect("checked"))
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>> {
        match self.value_of(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|e| CliError::config_at(line, format!("key '{key}': {e}"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64_opt(key)?.map(|v| v as usize).unwrap_or(default))
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.value_of(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|part| part.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map(Some)
                .map_err(|e| CliError::config_at(line, format!("key '{key}': {e}"))),
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.value_of(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|part| part.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<usize>, _>>()
                .map(Some)
                .map_err(|e| CliError::config_at(line, format!("key '{key}': {e}"))),
        }
    }

    /// The mandatory base seed; experiments must be exactly reproducible,
    /// so there is no wall-clock fallback.
    pub fn seed(&self, override_seed: Option<u64>) -> Result<u64> {
        if let Some(s) = override_seed {
            return Ok(s);
        }
        self.require("seed")?;
        Ok(self.u64_opt("seed")?.expect("checked"))
    }

    /// Build the process model from `process = ou | smooth` and its keys.
    pub fn model(&self) -> Result<ProcessModel> {
        let (kind, line) = match self.value_of("process") {
            Some(kv) => kv,
            None => return Err(CliError::config("missing required key 'process'")),
        };
        match kind {
            "ou" => {
                let dim = self.usize_or("dim", 0)?;
                let theta = self.f64_list("theta")?.unwrap_or_else(|| vec![1.0]);
                let sigma = self
                    .f64_list("sigma")?
                    .unwrap_or_else(|| vec![std::f64::consts::SQRT_2]);
                // scalars broadcast to the requested dimension
                let dim = if dim > 0 { dim } else { theta.len().max(sigma.len()) };
                let expand = |v: Vec<f64>, name: &str| -> Result<Vec<f64>> {
                    if v.len() == dim {
                        Ok(v)
                    } else if v.len() == 1 {
                        Ok(vec![v[0]; dim])
                    } else {
                        Err(CliError::config(format!(
                            "key '{name}' has {} entries but dim = {dim}",
                            v.len()
                        )))
                    }
                };
                let model = OuModel::new(expand(theta, "theta")?, expand(sigma, "sigma")?)?;
                Ok(ProcessModel::Ou(model))
            }
            "smooth" => {
                let ell = self.f64_or("ell", 1.0)?;
                Ok(ProcessModel::Smooth(SmoothGaussianModel::new(ell)?))
            }
            other => Err(CliError::config_at(line, format!(
                "unknown process '{other}' (expected ou or smooth)"
            ))),
        }
    }

    /// Build the sampling design. `highfreq` resolves to a fixed step when
    /// `delta_n` is given, and to the minimal admissible step rule
    /// (`d1`/`d2`/`d3`, defaulting to 1) otherwise.
    pub fn scheme_rule(&self) -> Result<SchemeRule> {
        let (kind, line) = match self.value_of("scheme") {
            Some(kv) => kv,
            None => return Err(CliError::config("missing required key 'scheme'")),
        };
        match kind {
            "renewal" => {
                let r = self.u64_opt("r")?.unwrap_or(1) as u32;
                let delta = self.require_f64("delta")?;
                Ok(SchemeRule::Fixed(SamplingScheme::renewal(r, delta)?))
            }
            "jittered" => {
                let delta = self.require_f64("delta")?;
                Ok(SchemeRule::Fixed(SamplingScheme::jittered(delta)?))
            }
            "highfreq" => match self.f64_opt("delta_n")? {
                Some(step) => Ok(SchemeRule::Fixed(SamplingScheme::high_frequency(step)?)),
                None => Ok(SchemeRule::MinimalStep {
                    d1: self.f64_or("d1", 1.0)?,
                    d2: self.f64_or("d2", 1.0)?,
                    d3: self.f64_or("d3", 1.0)?,
                }),
            },
            other => Err(CliError::config_at(line, format!(
                "unknown scheme '{other}' (expected renewal, jittered or highfreq)"
            ))),
        }
    }

    pub fn estimator(&self) -> Result<EstimatorKind> {
        match self.value_of("estimator") {
            None => Err(CliError::config("missing required key 'estimator'")),
            Some((v, line)) => v
                .parse::<EstimatorKind>()
                .map_err(|e| CliError::config_at(line, e.to_string())),
        }
    }

    pub fn estimator_or_histogram(&self) -> Result<EstimatorKind> {
        if self.has("estimator") {
            self.estimator()
        } else {
            Ok(EstimatorKind::Histogram)
        }
    }

    /// The mixing profile, if every field is present. Any partial profile
    /// is reported with the missing keys named.
    pub fn profile(&self) -> Result<Option<MixingProfile>> {
        const FIELDS: [&str; 10] = [
            "u0", "u1", "a0", "rho", "h0", "norm_k", "norm_phi", "f_sup", "pi_sup", "pi_tail",
        ];
        let present: Vec<&str> = FIELDS.iter().copied().filter(|k| self.has(k)).collect();
        if present.is_empty() {
            return Ok(None);
        }
        if present.len() < FIELDS.len() {
            let missing: Vec<&str> =
                FIELDS.iter().copied().filter(|k| !self.has(k)).collect();
            return Err(CliError::config(format!(
                "incomplete mixing profile: missing {}",
                missing.join(", ")
            )));
        }
        let profile = MixingProfile {
            u0: self.require_f64("u0")?,
            u1: self.require_f64("u1")?,
            a0: self.require_f64("a0")?,
            rho: self.require_f64("rho")?,
            h0: self.require_f64("h0")?,
            norm_k: self.require_f64("norm_k")?,
            norm_phi: self.require_f64("norm_phi")?,
            f_sup: self.require_f64("f_sup")?,
            pi_sup_on_band: self.require_f64("pi_sup")?,
            pi_tail: self.require_f64("pi_tail")?,
        };
        profile.validate()?;
        Ok(Some(profile))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let cfg = Config::parse(
            "# experiment\nprocess = ou\ntheta = 1.0\nn = 10,20,30 # grid\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.raw("process"), Some("ou"));
        assert_eq!(cfg.usize_list("n").unwrap().unwrap(), vec![10, 20, 30]);
        assert_eq!(cfg.seed(None).unwrap(), 7);
        assert_eq!(cfg.seed(Some(9)).unwrap(), 9);
    }

    #[test]
    fn rejects_unknown_key_with_line() {
        let err = Config::parse("process = ou\nbogus = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(Config::parse("seed = 1\nseed = 2\n").is_err());
        assert!(Config::parse("just words\n").is_err());
        assert!(Config::parse("seed =\n").is_err());
    }

    #[test]
    fn missing_seed_is_an_error() {
        let cfg = Config::parse("process = ou\n").unwrap();
        let msg = cfg.seed(None).unwrap_err().to_string();
        assert!(msg.contains("seed"), "{msg}");
    }

    #[test]
    fn builds_models_and_schemes() {
        let cfg = Config::parse("process = ou\ntheta = 2.0\nsigma = 1.0\ndim = 2\n").unwrap();
        let model = cfg.model().unwrap();
        assert_eq!(model.dim(), 2);
        assert_eq!(model.gamma0(), 1.0);

        let cfg = Config::parse("process = smooth\nell = 0.5\n").unwrap();
        assert_eq!(cfg.model().unwrap().gamma0(), 1.0);

        let cfg = Config::parse("scheme = renewal\nr = 2\ndelta = 5\n").unwrap();
        assert!(matches!(cfg.scheme_rule().unwrap(), SchemeRule::Fixed(SamplingScheme::Renewal(_))));

        let cfg = Config::parse("scheme = highfreq\n").unwrap();
        assert!(matches!(cfg.scheme_rule().unwrap(), SchemeRule::MinimalStep { .. }));

        let cfg = Config::parse("scheme = highfreq\ndelta_n = 0.01\n").unwrap();
        assert!(matches!(
            cfg.scheme_rule().unwrap(),
            SchemeRule::Fixed(SamplingScheme::HighFrequency { .. })
        ));
    }

    #[test]
    fn partial_profile_names_missing_keys() {
        let cfg = Config::parse("u0 = 1\nu1 = 2\n").unwrap();
        let msg = cfg.profile().unwrap_err().to_string();
        assert!(msg.contains("norm_phi") && msg.contains("pi_tail"), "{msg}");
    }
}
