use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::output::{read_input, Failure, Outcome};

/// Configuration of `evolve` and `sweep` runs on a ball of radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: u32,
    pub p: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub mesh_nodes: usize,
    pub initial: Initial,
    pub boundary: Boundary,
    pub horizon: f64,
    /// Number of evenly spaced snapshots.
    pub checkpoints: usize,
    #[serde(default)]
    pub ceiling: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Zero {},
    /// `fraction · z_λ`.
    BarrierFraction {
        fraction: f64,
        lambda: f64,
    },
    /// Columns `r,u`, interpolated linearly onto the mesh. Relative paths
    /// are taken from the directory of the configuration file.
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Boundary {
    Zero {},
    /// Constant `z_λ(R)`.
    Barrier {
        lambda: f64,
    },
    /// `z_{λ(t)}(R)` along a geometric schedule from `lambda_start` to
    /// `lambda_end` in `count` steps over the horizon.
    Schedule {
        lambda_start: f64,
        lambda_end: f64,
        count: usize,
    },
}

impl RunConfig {
    pub fn load(path: &Path) -> Outcome<Self> {
        let text = read_input(path)?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        if let Initial::Csv { path: data } = &mut cfg.initial {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Outcome<()> {
        let bad = |msg: String| Err(Failure::Validation(msg));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("R must be positive, got {}", self.radius));
        }
        if self.mesh_nodes < 3 {
            return bad(format!("mesh_nodes must be at least 3, got {}", self.mesh_nodes));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.checkpoints == 0 {
            return bad("checkpoints must be at least 1".into());
        }
        if let Some(c) = self.ceiling {
            if !(c > 0.0) {
                return bad(format!("ceiling must be positive, got {c}"));
            }
        }
        match self.initial {
            Initial::BarrierFraction { fraction, lambda } => {
                if !(0.0..=1.0).contains(&fraction) {
                    return bad(format!("fraction must lie in [0, 1], got {fraction}"));
                }
                positive("initial.lambda", lambda)?;
            }
            Initial::Zero {} | Initial::Csv { .. } => {}
        }
        match self.boundary {
            Boundary::Barrier { lambda } => positive("boundary.lambda", lambda)?,
            Boundary::Schedule {
                lambda_start,
                lambda_end,
                count,
            } => {
                positive("boundary.lambda_start", lambda_start)?;
                positive("boundary.lambda_end", lambda_end)?;
                if count < 2 {
                    return bad(format!("schedule count must be at least 2, got {count}"));
                }
            }
            Boundary::Zero {} => {}
        }
        Ok(())
    }
}

fn positive(name: &str, x: f64) -> Outcome<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{name} must be positive, got {x}")))
    }
}

/// Read `r,u` samples with strictly increasing `r`.
pub fn read_profile_csv(path: &Path) -> Outcome<(Vec<f64>, Vec<f64>)> {
    let text = read_input(path)?;
    let bad = |line: usize, msg: &str| Failure::Validation(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.split(',').map(str::trim).eq(["r", "u"]) => {}
        _ => return Err(bad(1, "expected the header `r,u`")),
    }
    let (mut rs, mut us) = (Vec::new(), Vec::new());
    for (i, line) in lines {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(bad(i + 1, "expected two columns"));
        }
        let r: f64 = cols[0].parse().map_err(|_| bad(i + 1, "r is not a number"))?;
        let u: f64 = cols[1].parse().map_err(|_| bad(i + 1, "u is not a number"))?;
        if !(r.is_finite() && u.is_finite()) {
            return Err(bad(i + 1, "values must be finite"));
        }
        if rs.last().is_some_and(|&prev| r <= prev) {
            return Err(bad(i + 1, "r must be strictly increasing"));
        }
        rs.push(r);
        us.push(u);
    }
    if rs.len() < 2 {
        return Err(bad(1, "at least two samples are required"));
    }
    Ok((rs, us))
}

/// Piecewise-linear interpolation; `None` outside `[rs[0], rs[last]]`.
pub fn interpolate(rs: &[f64], us: &[f64], r: f64) -> Option<f64> {
    let last = rs.len() - 1;
    if r < rs[0] || r > rs[last] {
        return None;
    }
    let j = rs.partition_point(|&x| x <= r).clamp(1, last);
    let (r0, r1) = (rs[j - 1], rs[j]);
    let w = (r - r0) / (r1 - r0);
    Some(us[j - 1] + w * (us[j] - us[j - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"dim": 3, "p": 5, "R": 4, "mesh_nodes": 65,
        "initial": {"kind": "zero"}, "boundary": {"kind": "zero"},
        "horizon": 1, "checkpoints": 2}"#;

    #[test]
    fn parses_minimal_config() {
        let cfg: RunConfig = serde_json::from_str(BASE).unwrap();
        assert_eq!(cfg.radius, 4.0);
        assert_eq!(cfg.initial, Initial::Zero {});
        assert!(cfg.ceiling.is_none());
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        let extra = BASE.replace("\"horizon\"", "\"horizn\": 3, \"horizon\"");
        assert!(serde_json::from_str::<RunConfig>(&extra).is_err());
        let nested = BASE.replace(
            r#"{"kind": "zero"}, "boundary""#,
            r#"{"kind": "zero", "x": 1}, "boundary""#,
        );
        assert!(serde_json::from_str::<RunConfig>(&nested).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg: RunConfig = serde_json::from_str(BASE).unwrap();
        cfg.boundary = Boundary::Schedule {
            lambda_start: 2.0,
            lambda_end: 0.1,
            count: 1,
        };
        assert!(cfg.validate().is_err());
        cfg.boundary = Boundary::Zero {};
        cfg.initial = Initial::BarrierFraction {
            fraction: 1.5,
            lambda: 1.0,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn interpolation_hits_nodes_and_midpoints() {
        let rs = [0.0, 1.0, 3.0];
        let us = [1.0, 2.0, 0.0];
        assert_eq!(interpolate(&rs, &us, 0.0), Some(1.0));
        assert_eq!(interpolate(&rs, &us, 3.0), Some(0.0));
        assert_eq!(interpolate(&rs, &us, 2.0), Some(1.0));
        assert_eq!(interpolate(&rs, &us, 0.5), Some(1.5));
        assert_eq!(interpolate(&rs, &us, 3.5), None);
    }
}
