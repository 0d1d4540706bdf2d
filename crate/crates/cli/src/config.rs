//! The `--config` file: a JSON object with `GameConfig` field names at the
//! top level, plus optional `story` and `provider` objects.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};

use snake_story_core::game::GameConfig;
use snake_story_core::llm::ProviderConfig;
use snake_story_core::story::StoryConfig;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub game: GameConfig,
    pub story: StoryConfig,
    pub provider: ProviderConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let Value::Object(mut map) = serde_json::from_str(text)? else {
            bail!("config must be a JSON object");
        };
        let story = take_section::<StoryConfig>(&mut map, "story")?;
        let provider = take_section::<ProviderConfig>(&mut map, "provider")?;
        check_keys::<GameConfig>(&map, "")?;
        let game: GameConfig = serde_json::from_value(Value::Object(map))?;
        game.validate()?;
        provider.validate()?;
        Ok(Self { game, story, provider })
    }
}

fn take_section<T>(map: &mut Map<String, Value>, key: &str) -> Result<T>
where
    T: Default + serde::Serialize + serde::de::DeserializeOwned,
{
    match map.remove(key) {
        None => Ok(T::default()),
        Some(Value::Object(section)) => {
            check_keys::<T>(&section, key)?;
            Ok(serde_json::from_value(Value::Object(section))?)
        }
        Some(_) => bail!("{key:?} must be an object"),
    }
}

/// Rejects keys the default value would not serialize, so typos fail loudly.
fn check_keys<T: Default + serde::Serialize>(map: &Map<String, Value>, section: &str) -> Result<()> {
    let Value::Object(known) = serde_json::to_value(T::default())? else {
        unreachable!("config types serialize as objects")
    };
    if let Some(key) = map.keys().find(|k| !known.contains_key(*k)) {
        if section.is_empty() {
            bail!("unknown config key {key:?}");
        }
        bail!("unknown config key {section}.{key}");
    }
    Ok(())
}
