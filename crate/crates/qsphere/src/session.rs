//! A configured scalar context: algebra, actions, Berezin caches and the basis cache file.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use num_rational::BigRational;
use serde_json::{json, Value};

use qsphere_core::berezin::{Berezin, BerezinError};
use qsphere_core::expr::{self, ParseError};
use qsphere_core::gns::FuzzyBasis;
use qsphere_core::uq_actions::Actions;
use qsphere_core::{Element, Exact, Float, SuQ2};

use crate::codec::{self, Codec, FieldKey, SCHEMA};
use crate::config::SessionConfig;

#[derive(Debug)]
pub enum SessionError {
    Config(String),
    Io(String),
    Codec(String),
    Table(String),
}

impl fmt::Display for SessionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionError::Config(m) => write!(f, "configuration: {m}"),
            SessionError::Io(m) => write!(f, "io: {m}"),
            SessionError::Codec(m) => write!(f, "format: {m}"),
            SessionError::Table(m) => write!(f, "pairing table rejected: {m}"),
        }
    }
}

impl std::error::Error for SessionError {}

pub struct Session<F: Codec> {
    pub config: SessionConfig,
    pub q: BigRational,
    pub acts: Actions<F>,
    pub berezin: Berezin<F>,
    key: FieldKey,
    cached_level: Mutex<Option<u32>>,
}

impl Session<Exact> {
    pub fn exact(config: SessionConfig) -> Result<Self, SessionError> {
        let q = config.q_rational().map_err(SessionError::Config)?;
        Session::with_field(config, q.clone(), Exact::new(q))
    }
}

impl Session<Float> {
    pub fn float(config: SessionConfig) -> Result<Self, SessionError> {
        let q = config.q_rational().map_err(SessionError::Config)?;
        let f = Float::new(&q, config.precision);
        Session::with_field(config, q, f)
    }
}

fn read_json(path: &Path) -> Result<Value, SessionError> {
    let text = fs::read_to_string(path).map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| SessionError::Codec(format!("{}: {e}", path.display())))
}

impl<F: Codec> Session<F> {
    pub fn with_field(config: SessionConfig, q: BigRational, f: F) -> Result<Self, SessionError> {
        let key = FieldKey::of(&q, &f);
        let alg = SuQ2::new(f);
        let acts = match &config.pairing_table {
            Some(p) => {
                let v = read_json(Path::new(p))?;
                let table = codec::table_from_json(&alg, &v).map_err(|e| SessionError::Codec(e.0))?;
                Actions::with_table(alg.clone(), table).map_err(|e| SessionError::Table(e.to_string()))?
            }
            None => Actions::new(alg.clone()),
        };
        let berezin = Berezin::new(alg);
        let s = Session { config, q, acts, berezin, key, cached_level: Mutex::new(None) };
        s.load_basis_cache()?;
        Ok(s)
    }

    pub fn alg(&self) -> &SuQ2<F> {
        self.acts.alg()
    }

    pub fn field(&self) -> &F {
        self.acts.alg().field()
    }

    pub fn parse(&self, src: &str) -> Result<Element<F::E>, ParseError> {
        expr::parse(self.alg(), src)
    }

    fn load_basis_cache(&self) -> Result<(), SessionError> {
        let Some(path) = self.config.basis_cache_path() else { return Ok(()) };
        if !path.exists() {
            return Ok(());
        }
        let v = read_json(&path)?;
        let loaded = codec::basis_from_json(&self.key, self.alg(), &v).map_err(|e| SessionError::Codec(e.0))?;
        if let Some(b) = loaded {
            let level = b.level;
            if self.berezin.seed_basis(b) {
                *self.cached_level.lock().unwrap() = Some(level);
            }
        }
        Ok(())
    }

    /// Ascending fuzzy basis of the given level, through the Berezin cache.
    pub fn basis(&self, level: u32) -> Result<FuzzyBasis<F::E>, BerezinError> {
        self.berezin.basis(level)
    }

    /// Writes the basis of `level` to the cache file when it extends what the file holds.
    pub fn persist_basis(&self, level: u32) -> Result<(), SessionError> {
        let Some(path) = self.config.basis_cache_path() else { return Ok(()) };
        let mut cached = self.cached_level.lock().unwrap();
        if cached.is_some_and(|c| c >= level) {
            return Ok(());
        }
        let b = self.berezin.basis(level).map_err(|e| SessionError::Config(e.to_string()))?;
        let v = codec::basis_to_json(&self.key, self.field(), &b);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| SessionError::Io(format!("{}: {e}", dir.display())))?;
        }
        let text = serde_json::to_string(&v).expect("basis serializes");
        fs::write(&path, text).map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))?;
        *cached = Some(level);
        Ok(())
    }

    /// Wraps a command result with the schema tag and the configuration.
    pub fn report(&self, command: &str, result: Value) -> Value {
        json!({
            "schema": SCHEMA,
            "command": command,
            "config": self.config.to_json(),
            "result": result,
        })
    }
}
