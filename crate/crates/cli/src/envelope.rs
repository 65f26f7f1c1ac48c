use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::commands::Payload;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CACHE_ENV: &str = "UMPTEEN_CACHE_DIR";

/// Everything needed to attribute and replay a result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    /// The seed actually used, for randomized commands.
    pub seed: Option<u64>,
    pub workers: usize,
    pub wall_time_secs: f64,
    pub cached: bool,
    pub payload: Payload,
}

impl ResultEnvelope {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable envelope");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        payload_csv(&self.payload)
    }
}

/// RFC 4180 quoting with LF line endings.
pub fn payload_csv(payload: &Payload) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&payload.columns)?;
    for row in &payload.rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("records are UTF-8"))
}

/// Hash of the version and the result-relevant configuration.
pub fn cache_key(config: &Value) -> String {
    let mut h = Sha256::new();
    h.update(VERSION.as_bytes());
    h.update(b"\n");
    h.update(
        serde_json::to_string(config)
            .expect("serializable config")
            .as_bytes(),
    );
    hex::encode(h.finalize())
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn from_env() -> Option<Cache> {
        std::env::var_os(CACHE_ENV)
            .filter(|v| !v.is_empty())
            .map(|dir| Cache {
                dir: PathBuf::from(dir),
            })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A stored envelope for `key`; corrupt or mismatched entries are skipped with a warning.
    pub fn lookup(&self, key: &str, config: &Value) -> Option<ResultEnvelope> {
        let path = self.path(key);
        let text = fs::read_to_string(&path).ok()?;
        match serde_json::from_str::<ResultEnvelope>(&text) {
            Ok(env) if env.version == VERSION && &env.config == config => Some(env),
            Ok(_) => {
                eprintln!(
                    "warning: ignoring cache entry {} with a different version or config",
                    path.display()
                );
                None
            }
            Err(e) => {
                eprintln!(
                    "warning: ignoring corrupt cache entry {}: {e}",
                    path.display()
                );
                None
            }
        }
    }

    pub fn store(&self, key: &str, envelope: &ResultEnvelope) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!("{key}.json.tmp"));
        fs::write(&tmp, envelope.to_json())?;
        fs::rename(tmp, self.path(key))
    }
}

/// Path of the metadata written next to a CSV output.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".envelope.json");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn payload() -> Payload {
        Payload {
            schema: "t/1".into(),
            columns: vec!["a".into(), "b".into()],
            rows: vec![
                vec!["1".into(), "x,y".into()],
                vec!["0.5".into(), "say \"hi\"".into()],
            ],
            data: json!(null),
        }
    }

    #[test]
    fn csv_quotes_and_uses_lf() {
        let text = payload_csv(&payload()).unwrap();
        assert_eq!(text, "a,b\n1,\"x,y\"\n0.5,\"say \"\"hi\"\"\"\n");
    }

    #[test]
    fn keys_depend_on_config() {
        let a = cache_key(&json!({"mc-return": {"seed": 1}}));
        let b = cache_key(&json!({"mc-return": {"seed": 2}}));
        assert_ne!(a, b);
        assert_eq!(a, cache_key(&json!({"mc-return": {"seed": 1}})));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache {
            dir: dir.path().to_path_buf(),
        };
        let config = json!({"x": 1});
        let env = ResultEnvelope {
            tool: "umpteen".into(),
            version: VERSION.into(),
            command: "x".into(),
            config: config.clone(),
            seed: Some(3),
            workers: 1,
            wall_time_secs: 0.0,
            cached: false,
            payload: payload(),
        };
        let key = cache_key(&config);
        assert!(cache.lookup(&key, &config).is_none());
        cache.store(&key, &env).unwrap();
        assert_eq!(cache.lookup(&key, &config).unwrap().payload, env.payload);
        fs::write(cache.path(&key), "{ not json").unwrap();
        assert!(cache.lookup(&key, &config).is_none());
        let mut stale = env.clone();
        stale.version = "0.0.0-old".into();
        cache.store(&key, &stale).unwrap();
        assert!(cache.lookup(&key, &config).is_none());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/p.csv")),
            PathBuf::from("out/p.csv.envelope.json")
        );
    }
}
