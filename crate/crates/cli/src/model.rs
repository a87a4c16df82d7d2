//! Model specs: `oracle:visual`, `oracle:text-biased`,
//! `oracle:constant:<label>`, `oracle:scripted:<file>`, `live`, `live:<model>`.

use std::path::Path;

use asciiclash::evalharness::{
    ConstantOracle, LiveClient, ScriptedOracle, TextBiasedOracle, VisualOracle, DEFAULT_MODEL,
};
use asciiclash::{ModelClient, Sentiment};

use crate::Failure;

pub fn build(spec: &str, temperature: f64) -> Result<Box<dyn ModelClient>, Failure> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("oracle:") {
        return oracle(rest);
    }
    if spec == "live" || spec.starts_with("live:") {
        let model = spec.strip_prefix("live:").filter(|m| !m.is_empty()).unwrap_or(DEFAULT_MODEL);
        let client = LiveClient::from_env(model, temperature).map_err(Failure::from)?;
        return Ok(Box::new(client));
    }
    Err(Failure::Invalid(format!(
        "unknown model {spec:?} (expected oracle:visual, oracle:text-biased, oracle:constant:<label>, \
         oracle:scripted:<file>, live or live:<model>)"
    )))
}

fn oracle(kind: &str) -> Result<Box<dyn ModelClient>, Failure> {
    Ok(match kind {
        "visual" => Box::new(VisualOracle::new()),
        "text-biased" => Box::new(TextBiasedOracle::new()),
        _ => {
            if let Some(label) = kind.strip_prefix("constant:") {
                let label: Sentiment = label.parse().map_err(Failure::Invalid)?;
                Box::new(ConstantOracle::new(label))
            } else if let Some(path) = kind.strip_prefix("scripted:") {
                Box::new(ScriptedOracle::load(Path::new(path)).map_err(|e| Failure::Invalid(e.to_string()))?)
            } else {
                return Err(Failure::Invalid(format!(
                    "unknown oracle {kind:?} (expected visual, text-biased, constant:<label>, scripted:<file>)"
                )));
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_specs() {
        assert_eq!(build("oracle:visual", 0.7).unwrap().identity(), "oracle:visual");
        assert_eq!(build("oracle:constant:neutral", 0.7).unwrap().identity(), "oracle:constant:neutral");
        assert!(matches!(build("oracle:constant:meh", 0.7), Err(Failure::Invalid(_))));
        assert!(matches!(build("oracle:psychic", 0.7), Err(Failure::Invalid(_))));
        assert!(matches!(build("gpt", 0.7), Err(Failure::Invalid(_))));
        assert!(matches!(build("oracle:scripted:/nonexistent.json", 0.7), Err(Failure::Invalid(_))));
    }
}
