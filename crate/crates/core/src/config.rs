//! Run configuration: a flat structured-text format with dotted keys and a
//! versioned header, parsed totally or rejected with a line/field
//! diagnostic. No physics travels through environment variables.

use crate::error::{Error, Result};
use crate::load::{LoadProgram, Ramp};
use crate::material::{
    ConstraintSet, DamageDissipation, HardeningProfile, HookeLaw, MaterialLaw, ProfileKind,
};
use crate::mesh::Mesh;
use crate::solver::{LinearSolver, SolverConfig};
use crate::space::FeSpace;
use std::collections::BTreeMap;

pub const CONFIG_SCHEMA: u32 = 1;

/// Everything a run needs. Numeric fields kept as parsed values; the raw
/// text round-trips through `to_text`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mesh_kind: String,
    pub mesh_lx: f64,
    pub mesh_ly: f64,
    pub mesh_nx: usize,
    pub mesh_ny: usize,
    pub mesh_area: f64,
    pub lambda: f64,
    pub mu: f64,
    pub hardening_kind: ProfileKind,
    pub b_max: f64,
    pub b_floor: f64,
    pub damage_kind: ProfileKind,
    pub w1: f64,
    pub constraint_kind: String,
    pub r_h: f64,
    pub tau_dp: f64,
    pub kappa_dp: f64,
    pub l_alpha: f64,
    pub l_p: f64,
    pub g: [[f64; 2]; 2],
    pub ramp: Vec<(f64, f64)>,
    pub t_final: f64,
    pub k: usize,
    pub epsilon: f64,
    pub eps_sweep: Vec<f64>,
    pub tol_energy_stagnation: f64,
    pub tol_pd: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub linear_solver: String,
    pub cg_tol: f64,
    pub n_starts: usize,
    pub seed: u64,
    pub rescale_grid: usize,
    pub plateau_threshold: f64,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh_kind: "structured".into(),
            mesh_lx: 1.0,
            mesh_ly: 1.0,
            mesh_nx: 8,
            mesh_ny: 8,
            mesh_area: 1.0,
            lambda: 1.0,
            mu: 1.0,
            hardening_kind: ProfileKind::Quadratic,
            b_max: 0.9,
            b_floor: 2.0,
            damage_kind: ProfileKind::Linear,
            w1: 0.4,
            constraint_kind: "drucker_prager".into(),
            r_h: 1.0,
            tau_dp: 0.2,
            kappa_dp: 0.12,
            l_alpha: 1.0,
            l_p: 1.0,
            g: [[0.0, 0.5], [0.5, -0.3]],
            ramp: vec![(0.0, 0.0), (1.0, 5.0)],
            t_final: 1.0,
            k: 50,
            epsilon: 0.0,
            eps_sweep: Vec::new(),
            tol_energy_stagnation: 1e-10,
            tol_pd: 1e-9,
            max_outer: 200,
            max_inner: 5000,
            linear_solver: "direct".into(),
            cg_tol: 1e-12,
            n_starts: 3,
            seed: 42,
            rescale_grid: 1001,
            plateau_threshold: -1.0,
            output_dir: "out".into(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| Error::ConfigField {
        line,
        field: key.to_string(),
        message: format!("cannot parse `{value}`"),
    })
}

impl RunConfig {
    /// Parses the dotted-key format. Unknown keys are errors (totality).
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut schema_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(Error::ConfigField {
                    line,
                    field: stripped.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key == "schema" {
                let v: u32 = parse_num(line, &key, &value)?;
                if v != CONFIG_SCHEMA {
                    return Err(Error::ConfigField {
                        line,
                        field: key,
                        message: format!("unsupported schema {v}, expected {CONFIG_SCHEMA}"),
                    });
                }
                schema_seen = true;
                continue;
            }
            if entries.insert(key.clone(), (line, value)).is_some() {
                return Err(Error::ConfigField {
                    line,
                    field: key,
                    message: "duplicate key".into(),
                });
            }
        }
        if !schema_seen {
            return Err(Error::Config("missing `schema = 1` header".into()));
        }

        for (key, (line, value)) in entries {
            match key.as_str() {
                "mesh.kind" => cfg.mesh_kind = value,
                "mesh.lx" => cfg.mesh_lx = parse_num(line, &key, &value)?,
                "mesh.ly" => cfg.mesh_ly = parse_num(line, &key, &value)?,
                "mesh.nx" => cfg.mesh_nx = parse_num(line, &key, &value)?,
                "mesh.ny" => cfg.mesh_ny = parse_num(line, &key, &value)?,
                "mesh.area" => cfg.mesh_area = parse_num(line, &key, &value)?,
                "material.lambda" => cfg.lambda = parse_num(line, &key, &value)?,
                "material.mu" => cfg.mu = parse_num(line, &key, &value)?,
                "material.hardening.kind" => {
                    cfg.hardening_kind = parse_kind(line, &key, &value)?
                }
                "material.hardening.b_max" => cfg.b_max = parse_num(line, &key, &value)?,
                "material.hardening.b_floor" => cfg.b_floor = parse_num(line, &key, &value)?,
                "material.damage.kind" => cfg.damage_kind = parse_kind(line, &key, &value)?,
                "material.damage.w1" => cfg.w1 = parse_num(line, &key, &value)?,
                "material.constraint.kind" => cfg.constraint_kind = value,
                "material.constraint.r" => cfg.r_h = parse_num(line, &key, &value)?,
                "material.constraint.tau" => cfg.tau_dp = parse_num(line, &key, &value)?,
                "material.constraint.kappa" => cfg.kappa_dp = parse_num(line, &key, &value)?,
                "material.l_alpha" => cfg.l_alpha = parse_num(line, &key, &value)?,
                "material.l_p" => cfg.l_p = parse_num(line, &key, &value)?,
                "load.g" => {
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() != 4 {
                        return Err(Error::ConfigField {
                            line,
                            field: key,
                            message: "expected 4 comma-separated entries (row-major 2x2)".into(),
                        });
                    }
                    for (slot, part) in parts.iter().enumerate() {
                        cfg.g[slot / 2][slot % 2] = parse_num(line, &key, part)?;
                    }
                }
                "load.ramp" => {
                    if value == "identity" {
                        cfg.ramp = Vec::new();
                    } else {
                        let mut knots = Vec::new();
                        for pair in value.split(',') {
                            let Some((t, v)) = pair.split_once(':') else {
                                return Err(Error::ConfigField {
                                    line,
                                    field: key,
                                    message: format!("ramp knot `{pair}` is not t:value"),
                                });
                            };
                            knots.push((
                                parse_num(line, &key, t)?,
                                parse_num(line, &key, v)?,
                            ));
                        }
                        cfg.ramp = knots;
                    }
                }
                "load.t_final" => cfg.t_final = parse_num(line, &key, &value)?,
                "time.k" => cfg.k = parse_num(line, &key, &value)?,
                "viscosity.epsilon" => cfg.epsilon = parse_num(line, &key, &value)?,
                "viscosity.sweep" => {
                    cfg.eps_sweep = value
                        .split(',')
                        .map(|v| parse_num(line, &key, v))
                        .collect::<Result<Vec<f64>>>()?;
                }
                "solver.tol_energy_stagnation" => {
                    cfg.tol_energy_stagnation = parse_num(line, &key, &value)?
                }
                "solver.tol_pd" => cfg.tol_pd = parse_num(line, &key, &value)?,
                "solver.max_outer" => cfg.max_outer = parse_num(line, &key, &value)?,
                "solver.max_inner" => cfg.max_inner = parse_num(line, &key, &value)?,
                "solver.linear" => {
                    if let Some(tol) = value.strip_prefix("cg:") {
                        cfg.linear_solver = "cg".into();
                        cfg.cg_tol = parse_num(line, &key, tol)?;
                    } else if value == "direct" {
                        cfg.linear_solver = "direct".into();
                    } else {
                        return Err(Error::ConfigField {
                            line,
                            field: key,
                            message: format!("unknown linear solver `{value}`"),
                        });
                    }
                }
                "solver.starts" => cfg.n_starts = parse_num(line, &key, &value)?,
                "seed" => cfg.seed = parse_num(line, &key, &value)?,
                "rescale.grid" => cfg.rescale_grid = parse_num(line, &key, &value)?,
                "rescale.plateau_threshold" => {
                    cfg.plateau_threshold = parse_num(line, &key, &value)?
                }
                "output.dir" => cfg.output_dir = value,
                _ => {
                    return Err(Error::ConfigField {
                        line,
                        field: key,
                        message: "unknown key".into(),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        // Physical parameters must satisfy the constitutive hypotheses at
        // load time; constructors enforce them.
        self.material_law()?;
        if self.mesh_kind != "structured" && self.mesh_kind != "homogeneous" {
            return Err(Error::Config(format!("unknown mesh kind `{}`", self.mesh_kind)));
        }
        if self.k == 0 {
            return Err(Error::Config("time.k must be >= 1".into()));
        }
        Ok(())
    }

    pub fn material_law(&self) -> Result<MaterialLaw> {
        let constraint = match self.constraint_kind.as_str() {
            "ball" => ConstraintSet::ball(self.r_h)?,
            "drucker_prager" => ConstraintSet::drucker_prager(self.tau_dp, self.kappa_dp, 2)?,
            other => return Err(Error::Config(format!("unknown constraint kind `{other}`"))),
        };
        MaterialLaw::new(
            HookeLaw::new(self.lambda, self.mu)?,
            HardeningProfile::new(self.hardening_kind, self.b_max, self.b_floor)?,
            DamageDissipation::new(self.damage_kind, self.w1)?,
            constraint,
            self.l_alpha,
            self.l_p,
        )
    }

    pub fn fe_space(&self) -> Result<FeSpace> {
        let mesh = if self.mesh_kind == "homogeneous" {
            Mesh::homogeneous(self.mesh_area)?
        } else {
            Mesh::structured(self.mesh_lx, self.mesh_ly, self.mesh_nx, self.mesh_ny)?
        };
        Ok(FeSpace::new(mesh))
    }

    pub fn load_program(&self) -> Result<LoadProgram> {
        let ramp = if self.ramp.is_empty() {
            Ramp::identity(self.t_final)
        } else {
            Ramp::new(self.ramp.clone())?
        };
        LoadProgram::new(self.g, ramp, self.t_final)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tol_energy_stagnation: self.tol_energy_stagnation,
            tol_pd: self.tol_pd,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            linear_solver: if self.linear_solver == "cg" {
                LinearSolver::ConjugateGradient { tol: self.cg_tol }
            } else {
                LinearSolver::Direct
            },
            n_starts: self.n_starts,
            seed: self.seed,
        }
    }

    /// Default plateau threshold: a fraction of the mean slope T/S is not
    /// known before rescaling, so the configured value < 0 means "derive
    /// from the trajectory" downstream.
    pub fn plateau_threshold_or_default(&self, t_over_s: f64) -> f64 {
        if self.plateau_threshold > 0.0 {
            self.plateau_threshold
        } else {
            0.25 * t_over_s
        }
    }

    /// Serializes back to the dotted-key format (17 significant digits).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("schema = {CONFIG_SCHEMA}\n"));
        s.push_str(&format!("mesh.kind = {}\n", self.mesh_kind));
        if self.mesh_kind == "homogeneous" {
            s.push_str(&format!("mesh.area = {:.16e}\n", self.mesh_area));
        } else {
            s.push_str(&format!("mesh.lx = {:.16e}\n", self.mesh_lx));
            s.push_str(&format!("mesh.ly = {:.16e}\n", self.mesh_ly));
            s.push_str(&format!("mesh.nx = {}\n", self.mesh_nx));
            s.push_str(&format!("mesh.ny = {}\n", self.mesh_ny));
        }
        s.push_str(&format!("material.lambda = {:.16e}\n", self.lambda));
        s.push_str(&format!("material.mu = {:.16e}\n", self.mu));
        s.push_str(&format!(
            "material.hardening.kind = {}\n",
            kind_name(self.hardening_kind)
        ));
        s.push_str(&format!("material.hardening.b_max = {:.16e}\n", self.b_max));
        s.push_str(&format!("material.hardening.b_floor = {:.16e}\n", self.b_floor));
        s.push_str(&format!("material.damage.kind = {}\n", kind_name(self.damage_kind)));
        s.push_str(&format!("material.damage.w1 = {:.16e}\n", self.w1));
        s.push_str(&format!("material.constraint.kind = {}\n", self.constraint_kind));
        if self.constraint_kind == "ball" {
            s.push_str(&format!("material.constraint.r = {:.16e}\n", self.r_h));
        } else {
            s.push_str(&format!("material.constraint.tau = {:.16e}\n", self.tau_dp));
            s.push_str(&format!("material.constraint.kappa = {:.16e}\n", self.kappa_dp));
        }
        s.push_str(&format!("material.l_alpha = {:.16e}\n", self.l_alpha));
        s.push_str(&format!("material.l_p = {:.16e}\n", self.l_p));
        s.push_str(&format!(
            "load.g = {:.16e},{:.16e},{:.16e},{:.16e}\n",
            self.g[0][0], self.g[0][1], self.g[1][0], self.g[1][1]
        ));
        if self.ramp.is_empty() {
            s.push_str("load.ramp = identity\n");
        } else {
            let knots: Vec<String> = self
                .ramp
                .iter()
                .map(|(t, v)| format!("{t:.16e}:{v:.16e}"))
                .collect();
            s.push_str(&format!("load.ramp = {}\n", knots.join(",")));
        }
        s.push_str(&format!("load.t_final = {:.16e}\n", self.t_final));
        s.push_str(&format!("time.k = {}\n", self.k));
        s.push_str(&format!("viscosity.epsilon = {:.16e}\n", self.epsilon));
        if !self.eps_sweep.is_empty() {
            let vals: Vec<String> = self.eps_sweep.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&format!("viscosity.sweep = {}\n", vals.join(",")));
        }
        s.push_str(&format!(
            "solver.tol_energy_stagnation = {:.16e}\n",
            self.tol_energy_stagnation
        ));
        s.push_str(&format!("solver.tol_pd = {:.16e}\n", self.tol_pd));
        s.push_str(&format!("solver.max_outer = {}\n", self.max_outer));
        s.push_str(&format!("solver.max_inner = {}\n", self.max_inner));
        if self.linear_solver == "cg" {
            s.push_str(&format!("solver.linear = cg:{:.16e}\n", self.cg_tol));
        } else {
            s.push_str("solver.linear = direct\n");
        }
        s.push_str(&format!("solver.starts = {}\n", self.n_starts));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("rescale.grid = {}\n", self.rescale_grid));
        if self.plateau_threshold > 0.0 {
            s.push_str(&format!(
                "rescale.plateau_threshold = {:.16e}\n",
                self.plateau_threshold
            ));
        }
        s.push_str(&format!("output.dir = {}\n", self.output_dir));
        s
    }
}

fn parse_kind(line: usize, key: &str, value: &str) -> Result<ProfileKind> {
    match value {
        "linear" => Ok(ProfileKind::Linear),
        "quadratic" => Ok(ProfileKind::Quadratic),
        _ => Err(Error::ConfigField {
            line,
            field: key.to_string(),
            message: format!("expected linear|quadratic, got `{value}`"),
        }),
    }
}

fn kind_name(k: ProfileKind) -> &'static str {
    match k {
        ProfileKind::Linear => "linear",
        ProfileKind::Quadratic => "quadratic",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_text() {
        let cfg = RunConfig::default();
        let text = cfg.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_unknown_and_malformed_keys() {
        let err = RunConfig::parse("schema = 1\nfoo.bar = 1\n").unwrap_err();
        match err {
            crate::error::Error::ConfigField { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "foo.bar");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(RunConfig::parse("schema = 1\nmesh.nx equals 3\n").is_err());
        assert!(RunConfig::parse("mesh.nx = 3\n").is_err(), "schema required");
        let err = RunConfig::parse("schema = 1\nmesh.nx = few\n").unwrap_err();
        match err {
            crate::error::Error::ConfigField { field, .. } => assert_eq!(field, "mesh.nx"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_physics_rejected_at_load() {
        let mut cfg = RunConfig::default();
        cfg.mu = -1.0;
        let text = cfg.to_text();
        assert!(RunConfig::parse(&text).is_err());
    }
}
