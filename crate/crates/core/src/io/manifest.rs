use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionEntry {
    pub session_id: usize,
    pub cloud: PathBuf,
    pub trajectory: PathBuf,
}

/// Where one run's inputs live. Paths are resolved against `root`, the
/// directory holding the manifest file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionManifest {
    pub root: PathBuf,
    pub lidar_cloud: PathBuf,
    pub lidar_trajectory: PathBuf,
    pub extrinsics: PathBuf,
    pub sessions: Vec<SessionEntry>,
}

impl SessionManifest {
    /// Parses `key = path` lines. Session ids must run `0..K` without gaps.
    /// File existence is not checked here; see [`SessionManifest::load`].
    pub fn parse(text: &str, root: impl Into<PathBuf>, label: &str) -> Result<Self> {
        let root = root.into();
        let mut top: BTreeMap<&str, PathBuf> = BTreeMap::new();
        let mut sessions: BTreeMap<usize, (Option<PathBuf>, Option<PathBuf>)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::parse(label, format!("line {}: {msg}", idx + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = path`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(format!("empty path for `{key}`")));
            }
            let path = root.join(value);
            match key {
                "lidar_cloud" | "lidar_traj" | "extrinsics" => {
                    if top.insert(key, path).is_some() {
                        return Err(err(format!("duplicate key `{key}`")));
                    }
                }
                _ => {
                    let parts: Vec<&str> = key.split('.').collect();
                    let ["session", id, field] = parts[..] else {
                        return Err(err(format!("unknown key `{key}`")));
                    };
                    let id: usize = id.parse().map_err(|_| err(format!("bad session id in `{key}`")))?;
                    let slot = sessions.entry(id).or_default();
                    let target = match field {
                        "cloud" => &mut slot.0,
                        "traj" => &mut slot.1,
                        _ => return Err(err(format!("unknown key `{key}`"))),
                    };
                    if target.replace(path).is_some() {
                        return Err(err(format!("duplicate key `{key}`")));
                    }
                }
            }
        }
        let mut take = |key: &str| {
            top.remove(key)
                .ok_or_else(|| Error::parse(label, format!("missing key `{key}`")))
        };
        let lidar_cloud = take("lidar_cloud")?;
        let lidar_trajectory = take("lidar_traj")?;
        let extrinsics = take("extrinsics")?;
        if sessions.is_empty() {
            return Err(Error::parse(label, "no sessions listed"));
        }
        let mut entries = Vec::with_capacity(sessions.len());
        for (expected, (id, (cloud, traj))) in sessions.into_iter().enumerate() {
            if id != expected {
                return Err(Error::parse(
                    label,
                    format!("session ids must be contiguous from 0; session {expected} is missing"),
                ));
            }
            let missing = |f: &str| Error::parse(label, format!("missing key `session.{id}.{f}`"));
            entries.push(SessionEntry {
                session_id: id,
                cloud: cloud.ok_or_else(|| missing("cloud"))?,
                trajectory: traj.ok_or_else(|| missing("traj"))?,
            });
        }
        Ok(Self {
            root,
            lidar_cloud,
            lidar_trajectory,
            extrinsics,
            sessions: entries,
        })
    }

    /// Reads and parses the manifest, then checks that every referenced file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let manifest = Self::parse(&text, root, &path.display().to_string())?;
        manifest.check_files()?;
        Ok(manifest)
    }

    pub fn files(&self) -> Vec<&Path> {
        let mut out: Vec<&Path> = vec![&self.lidar_cloud, &self.lidar_trajectory, &self.extrinsics];
        for s in &self.sessions {
            out.push(&s.cloud);
            out.push(&s.trajectory);
        }
        out
    }

    pub fn check_files(&self) -> Result<()> {
        for f in self.files() {
            if !f.is_file() {
                return Err(Error::io(
                    f,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file does not exist"),
                ));
            }
        }
        Ok(())
    }

    /// Text form with paths written relative to `root` where possible.
    pub fn to_text(&self) -> String {
        let rel = |p: &Path| p.strip_prefix(&self.root).unwrap_or(p).display().to_string();
        let mut out = String::new();
        let _ = writeln!(out, "lidar_cloud = {}", rel(&self.lidar_cloud));
        let _ = writeln!(out, "lidar_traj = {}", rel(&self.lidar_trajectory));
        let _ = writeln!(out, "extrinsics = {}", rel(&self.extrinsics));
        for s in &self.sessions {
            let _ = writeln!(out, "session.{}.cloud = {}", s.session_id, rel(&s.cloud));
            let _ = writeln!(out, "session.{}.traj = {}", s.session_id, rel(&s.trajectory));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "# inputs\nlidar_cloud = lidar.ply\nlidar_traj = lidar.tum\nextrinsics = ext.txt\n\
                        session.1.cloud = s1.ply\nsession.1.traj = s1.tum\nsession.0.cloud = s0.ply\n\
                        session.0.traj = s0.tum\n";

    #[test]
    fn parses_and_orders_sessions() {
        let m = SessionManifest::parse(TEXT, "/data", "m").unwrap();
        assert_eq!(m.sessions.len(), 2);
        assert_eq!(m.sessions[0].cloud, PathBuf::from("/data/s0.ply"));
        assert_eq!(m.sessions[1].trajectory, PathBuf::from("/data/s1.tum"));
        let again = SessionManifest::parse(&m.to_text(), "/data", "m").unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn gaps_and_unknown_keys() {
        let gap = TEXT.replace("session.1", "session.2");
        assert!(matches!(
            SessionManifest::parse(&gap, "/", "m"),
            Err(Error::Parse { .. })
        ));
        let unknown = format!("{TEXT}colour = x\n");
        assert!(matches!(
            SessionManifest::parse(&unknown, "/", "m"),
            Err(Error::Parse { .. })
        ));
        let partial = TEXT.replace("session.1.traj = s1.tum\n", "");
        assert!(SessionManifest::parse(&partial, "/", "m").is_err());
    }

    #[test]
    fn missing_file_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        std::fs::write(&path, TEXT).unwrap();
        match SessionManifest::load(&path) {
            Err(Error::Io { path, .. }) => assert!(path.ends_with("lidar.ply")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
