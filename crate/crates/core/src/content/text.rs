use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// User-facing text with optional translations.
///
/// Accepts either a plain string or a map with a mandatory `"default"` entry
/// plus per-locale entries (`{"default": "Nave", "es": "Nave central"}`).
/// Serializes back to whichever shape carries the same information.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalizedText {
    pub default: String,
    pub translations: BTreeMap<String, String>,
}

impl LocalizedText {
    pub fn plain(text: impl Into<String>) -> Self {
        LocalizedText {
            default: text.into(),
            translations: BTreeMap::new(),
        }
    }

    pub fn is_blank(&self) -> bool {
        self.default.trim().is_empty()
    }

    pub fn get(&self, locale: &str) -> &str {
        self.translations
            .get(locale)
            .map(String::as_str)
            .unwrap_or(&self.default)
    }
}

impl From<&str> for LocalizedText {
    fn from(s: &str) -> Self {
        LocalizedText::plain(s)
    }
}

impl Serialize for LocalizedText {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.translations.is_empty() {
            serializer.serialize_str(&self.default)
        } else {
            let mut map = self.translations.clone();
            map.insert("default".to_string(), self.default.clone());
            map.serialize(serializer)
        }
    }
}

impl<'de> Deserialize<'de> for LocalizedText {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Plain(String),
            Map(BTreeMap<String, String>),
        }

        match Repr::deserialize(deserializer).map_err(|_| {
            serde::de::Error::custom("expected a string or a locale map with a \"default\" entry")
        })? {
            Repr::Plain(default) => Ok(LocalizedText::plain(default)),
            Repr::Map(mut map) => {
                let default = map.remove("default").ok_or_else(|| {
                    serde::de::Error::custom("locale map requires a \"default\" entry")
                })?;
                Ok(LocalizedText {
                    default,
                    translations: map,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_map_forms() {
        let plain: LocalizedText = serde_json::from_str("\"Claustro\"").unwrap();
        assert_eq!(plain, LocalizedText::plain("Claustro"));
        assert_eq!(serde_json::to_string(&plain).unwrap(), "\"Claustro\"");

        let map: LocalizedText =
            serde_json::from_str(r#"{"default":"Cloister","es":"Claustro"}"#).unwrap();
        assert_eq!(map.get("es"), "Claustro");
        assert_eq!(map.get("de"), "Cloister");
        let back: LocalizedText = serde_json::from_str(&serde_json::to_string(&map).unwrap()).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn map_without_default_is_rejected() {
        let err = serde_json::from_str::<LocalizedText>(r#"{"es":"Claustro"}"#).unwrap_err();
        assert!(err.to_string().contains("default"), "{err}");
    }
}
