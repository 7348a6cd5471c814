//! Content-addressed on-disk store of radial profiles.

use std::path::PathBuf;

use henon_core::bifurcation::ProfileStore;
use henon_core::radial::{RadialProfile, SolveOptions};
use henon_core::ProblemParams;
use sha2::{Digest, Sha256};

use crate::output::write_atomic;

/// Overrides the cache location.
pub const CACHE_ENV: &str = "HENON_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct DiskStore {
    pub dir: PathBuf,
}

impl DiskStore {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    /// `$HENON_CACHE_DIR`, else `henon-cache` under the system temp directory.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(CACHE_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("henon-cache"));
        Self::new(dir)
    }

    /// Every input that changes the stored profile goes into the key.
    pub fn key(params: &ProblemParams, opts: &SolveOptions) -> String {
        let g = &opts.grid;
        let canon = format!(
            "profile-v1|N={}|alpha={:016x}|eps={:016x}|rtol={:016x}|atol={:016x}|r_max={:016x}|a={:016x}|grid={:016x},{:016x},{},{:016x}",
            params.n(),
            params.alpha().to_bits(),
            params.eps().to_bits(),
            opts.tol.rtol.to_bits(),
            opts.tol.atol.to_bits(),
            opts.r_max.to_bits(),
            opts.shot_amplitude.to_bits(),
            g.geometric_ratio.to_bits(),
            g.geometric_top.to_bits(),
            g.uniform_points,
            g.depth.to_bits(),
        );
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    fn path(&self, params: &ProblemParams, opts: &SolveOptions) -> PathBuf {
        self.dir.join(format!("{}.json", Self::key(params, opts)))
    }
}

impl ProfileStore for DiskStore {
    fn load(&self, params: &ProblemParams, opts: &SolveOptions) -> Option<RadialProfile> {
        let bytes = std::fs::read(self.path(params, opts)).ok()?;
        let prof: RadialProfile = serde_json::from_slice(&bytes).ok()?;
        // a corrupt or colliding entry is treated as a miss
        (prof.params == *params && prof.integrator_tol == opts.tol).then_some(prof)
    }

    fn save(&self, params: &ProblemParams, opts: &SolveOptions, profile: &RadialProfile) {
        // the cache is an optimization; failing to write it is not an error
        if let Ok(bytes) = serde_json::to_vec(profile) {
            let _ = write_atomic(&self.path(params, opts), &bytes);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use henon_core::radial::solve_dirichlet_ball;

    #[test]
    fn round_trip_and_key_sensitivity() {
        let dir = tempfile::tempdir().unwrap();
        let store = DiskStore::new(dir.path().to_path_buf());
        let params = ProblemParams::new(3, 1.0, 0.1).unwrap();
        let opts = SolveOptions::default();
        assert!(store.load(&params, &opts).is_none());
        let prof = solve_dirichlet_ball(&params, &opts).unwrap();
        store.save(&params, &opts, &prof);
        assert_eq!(store.load(&params, &opts).unwrap(), prof);
        let other = ProblemParams::new(3, 1.0, 0.05).unwrap();
        assert_ne!(DiskStore::key(&params, &opts), DiskStore::key(&other, &opts));
        let mut tight = opts;
        tight.tol.rtol = 1e-12;
        assert!(store.load(&params, &tight).is_none());
    }
}
