//! Flat `key = value` configuration files.

use std::path::Path;

use codegrain::synthetic::GeneratorConfig;

use crate::CliError;

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
        let k = k.trim().to_string();
        if k.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        out.retain(|(old, _)| *old != k);
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

pub fn generator_config_from_str(text: &str) -> Result<GeneratorConfig, CliError> {
    let mut cfg = GeneratorConfig::default();
    for (k, v) in parse_key_values(text)? {
        cfg.set(&k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_generator_config(path: &Path) -> Result<GeneratorConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    generator_config_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blanks_and_overrides() {
        let kv = parse_key_values("# header\n\nalpha = 1.5\nseed=3 # trailing\nalpha=1.7\n").unwrap();
        assert_eq!(kv, [("seed".to_string(), "3".to_string()), ("alpha".to_string(), "1.7".to_string())]);
        assert!(parse_key_values("alpha 1.5").is_err());
        assert!(parse_key_values("= 1").is_err());
    }

    #[test]
    fn generator_fields() {
        let cfg = generator_config_from_str("n_stays = 10\nn_codes = 40\n").unwrap();
        assert_eq!((cfg.n_stays, cfg.n_codes), (10, 40));
        let err = generator_config_from_str("alpha = 0.9").unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }
}
