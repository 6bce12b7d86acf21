//! Sessions, the newline-delimited JSON protocol, the interactive loop and
//! the command-line front end.

pub mod cli;
pub mod protocol;
pub mod repl;
mod session;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

pub use session::{Input, Profile, Session, SessionError, Stepped};

use crate::builtin;
use crate::world::{WorldDef, WorldError};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {error}")]
    Io { path: String, error: std::io::Error },
    #[error("{path}: {error}")]
    World { path: String, error: WorldError },
    #[error("unknown world `{0}`")]
    Unknown(String),
}

/// Loads a world by shipped name (`move-take`, `farm`) or from a file.
pub fn load_world_file(name_or_path: &str) -> Result<WorldDef, LoadError> {
    let (src, path) = match builtin::world(name_or_path) {
        Some(src) => (src.to_string(), name_or_path.to_string()),
        None => {
            let path = name_or_path.to_string();
            let src = std::fs::read_to_string(&path).map_err(|error| LoadError::Io {
                path: path.clone(),
                error,
            })?;
            (src, path)
        }
    };
    WorldDef::parse(&src).map_err(|error| LoadError::World { path, error })
}

/// Holds open sessions. Requests for one session are serialized by its
/// lock; distinct sessions proceed independently.
#[derive(Debug, Default)]
pub struct Engine {
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
    world_dir: Option<PathBuf>,
}

impl Engine {
    pub fn new() -> Self {
        Engine::default()
    }

    /// Also resolves world names as `<dir>/<name>.world`.
    pub fn with_world_dir(dir: &Path) -> Self {
        Engine {
            world_dir: Some(dir.to_path_buf()),
            ..Engine::default()
        }
    }

    fn resolve_world(&self, name: &str) -> Result<WorldDef, LoadError> {
        if let Some(src) = builtin::world(name) {
            return WorldDef::parse(src).map_err(|error| LoadError::World {
                path: name.into(),
                error,
            });
        }
        let Some(dir) = &self.world_dir else {
            return Err(LoadError::Unknown(name.to_string()));
        };
        if !crate::world::is_identifier(&name.replace('-', "_")) {
            return Err(LoadError::Unknown(name.to_string()));
        }
        let path = dir.join(format!("{name}.world"));
        load_world_file(&path.to_string_lossy())
    }

    pub fn new_session(
        &self,
        world: &str,
        profile: Profile,
        seed: Option<u64>,
    ) -> Result<String, LoadError> {
        let def = self.resolve_world(world)?;
        let seed = seed.unwrap_or_else(|| def.declared_seed());
        let n = self.next_id.fetch_add(1, Ordering::SeqCst) + 1;
        let id = format!("s{n}");
        let s = Session::new(&id, world, def, profile, seed).map_err(|error| LoadError::World {
            path: world.into(),
            error,
        })?;
        self.sessions
            .write()
            .expect("session table poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(s)));
        Ok(id)
    }

    /// Runs `f` with the session locked, or returns `None` if it is not open.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> T) -> Option<T> {
        let s = self
            .sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()?;
        let mut guard = s.lock().unwrap_or_else(|p| p.into_inner());
        Some(f(&mut guard))
    }

    pub fn close_session(&self, id: &str) -> bool {
        self.sessions
            .write()
            .expect("session table poisoned")
            .remove(id)
            .is_some()
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .keys()
            .cloned()
            .collect()
    }
}
