//! Experiment configuration: per-command defaults, key=value files, and
//! flag overrides, resolved into one flat parameter set.
//!
//! Precedence is defaults < config file < command-line flags. The
//! canonical form of the resolved set (sorted key=value lines) is hashed
//! with FNV-1a into the manifest, so identical effective configurations
//! produce identical manifests no matter how they were assembled. The
//! output directory is excluded from the hash: where files land does not
//! change what was computed.

use std::fmt::Write as _;
use std::path::PathBuf;

/// Fully resolved parameters for one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub grids: Vec<usize>,
    pub gamma: f64,
    pub driver: String,
    pub max_weight: u32,
    pub k_max: i64,
    pub t_final: f64,
    pub h: f64,
    pub alpha: f64,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub eps: f64,
    pub b_const: f64,
    pub u0_norm: f64,
    pub k_abs: f64,
    pub n_max: usize,
    pub max_n: u32,
    pub band: f64,
}

impl ExperimentConfig {
    /// Baseline defaults shared by every command.
    fn base(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            grids: vec![64, 128, 256, 512],
            gamma: 0.5,
            driver: "trig".to_string(),
            max_weight: 4,
            k_max: 8,
            t_final: 0.5,
            h: 1e-3,
            alpha: 0.0,
            out: None,
            seed: 0,
            tol: None,
            eps: 0.25,
            b_const: 1.0,
            u0_norm: 0.1,
            k_abs: 1.0,
            n_max: 16,
            max_n: 12,
            band: 0.25,
        }
    }

    /// Defaults specialized to one subcommand.
    pub fn defaults_for(experiment: &str) -> Self {
        let mut cfg = Self::base(experiment);
        match experiment {
            "verify-hopf" => cfg.max_weight = 5,
            "verify-increments" => cfg.grids = vec![256],
            "verify-sewing" => cfg.grids = vec![128],
            "rough-converge" => {
                cfg.grids = vec![64, 128, 256, 512, 1024];
                cfg.driver = "sine".to_string();
                cfg.tol = Some(1e-6);
            }
            "rough-solve" => cfg.driver = "identity".to_string(),
            "bseries" => {
                cfg.grids = vec![32, 64, 128, 256];
                cfg.driver = "identity".to_string();
            }
            "kdv-run" => {
                cfg.tol = Some(1e-4);
                cfg.alpha = 0.5;
            }
            "tree-report" => cfg.alpha = 0.5,
            _ => {}
        }
        cfg
    }

    /// Apply one key=value pair from a config file.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), String> {
        let bad = |what: &str| format!("config key {key}: invalid {what} {value:?}");
        match key {
            "experiment" => {} // the subcommand decides; recorded for humans
            "grid" | "grids" => {
                let mut grids = Vec::new();
                for part in value.split(',') {
                    grids.push(part.trim().parse::<usize>().map_err(|_| bad("grid list"))?);
                }
                if grids.is_empty() {
                    return Err(bad("grid list"));
                }
                self.grids = grids;
            }
            "gamma" => self.gamma = value.parse().map_err(|_| bad("number"))?,
            "driver" | "path" => self.driver = value.to_string(),
            "max_weight" => self.max_weight = value.parse().map_err(|_| bad("integer"))?,
            "k_max" => self.k_max = value.parse().map_err(|_| bad("integer"))?,
            "t_final" => self.t_final = value.parse().map_err(|_| bad("number"))?,
            "h" => self.h = value.parse().map_err(|_| bad("number"))?,
            "alpha" => self.alpha = value.parse().map_err(|_| bad("number"))?,
            "out" => self.out = Some(PathBuf::from(value)),
            "seed" => self.seed = value.parse().map_err(|_| bad("integer"))?,
            "tol" => self.tol = Some(value.parse().map_err(|_| bad("number"))?),
            "eps" => self.eps = value.parse().map_err(|_| bad("number"))?,
            "b" | "b_const" => self.b_const = value.parse().map_err(|_| bad("number"))?,
            "u0" | "u0_norm" => self.u0_norm = value.parse().map_err(|_| bad("number"))?,
            "k_abs" => self.k_abs = value.parse().map_err(|_| bad("number"))?,
            "n_max" => self.n_max = value.parse().map_err(|_| bad("integer"))?,
            "max_n" => self.max_n = value.parse().map_err(|_| bad("integer"))?,
            "band" => self.band = value.parse().map_err(|_| bad("number"))?,
            _ => return Err(format!("unknown config key {key:?}")),
        }
        Ok(())
    }

    /// Parse a key=value config file body (blank lines and # comments
    /// allowed) into this configuration.
    pub fn apply_file(&mut self, body: &str) -> Result<(), String> {
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
            self.apply_kv(key.trim(), value.trim())
                .map_err(|e| format!("config line {}: {e}", lineno + 1))?;
        }
        Ok(())
    }

    /// Canonical sorted key=value form; the output directory is excluded
    /// so the hash tracks the computation, not the destination.
    pub fn canonical(&self) -> String {
        let grids = self
            .grids
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut s = String::new();
        let _ = write!(
            s,
            "alpha={:?}\nb_const={:?}\nband={:?}\ndriver={}\neps={:?}\nexperiment={}\n\
             gamma={:?}\ngrids={}\nh={:?}\nk_abs={:?}\nk_max={}\nmax_n={}\nmax_weight={}\n\
             n_max={}\nseed={}\nt_final={:?}\ntol={}\nu0_norm={:?}\n",
            self.alpha,
            self.b_const,
            self.band,
            self.driver,
            self.eps,
            self.experiment,
            self.gamma,
            grids,
            self.h,
            self.k_abs,
            self.k_max,
            self.max_n,
            self.max_weight,
            self.n_max,
            self.seed,
            self.t_final,
            self.tol.map_or("none".to_string(), |t| format!("{t:?}")),
            self.u0_norm,
        );
        s
    }

    /// FNV-1a hash of the canonical form, as fixed-width hex.
    pub fn config_hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical().as_bytes()))
    }

    /// Tolerance with a per-command fallback.
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_file_and_flags_layer_in_order() {
        let mut cfg = ExperimentConfig::defaults_for("rough-converge");
        assert_eq!(cfg.grids, vec![64, 128, 256, 512, 1024]);
        cfg.apply_file("# comment\n\ngrid = 32,64\nseed = 7\n").unwrap();
        assert_eq!(cfg.grids, vec![32, 64]);
        assert_eq!(cfg.seed, 7);
        // a later flag override wins
        cfg.seed = 9;
        assert!(cfg.canonical().contains("seed=9\n"));
    }

    #[test]
    fn bad_lines_and_unknown_keys_are_rejected() {
        let mut cfg = ExperimentConfig::defaults_for("bseries");
        assert!(cfg.apply_file("gamma 0.5").is_err());
        assert!(cfg.apply_file("mystery=1").is_err());
        assert!(cfg.apply_file("gamma=abc").is_err());
        assert!(cfg.apply_file("grid=").is_err());
    }

    #[test]
    fn hash_ignores_out_dir_but_tracks_parameters() {
        let mut a = ExperimentConfig::defaults_for("kdv-run");
        let mut b = a.clone();
        b.out = Some(PathBuf::from("/tmp/elsewhere"));
        assert_eq!(a.config_hash(), b.config_hash());
        a.k_max = 9;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn fnv_vector() {
        // standard FNV-1a test vectors
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
