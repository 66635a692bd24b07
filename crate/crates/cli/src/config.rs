//! Flat `key = value` run configuration with `[system] [basis] [solver]
//! [output]` sections. Unknown sections or keys are rejected so typos fail
//! loudly; every key has a default, so an empty file is a valid linear-limit
//! run.

use std::fmt::Write as _;
use std::path::PathBuf;

use gpe2d_core::{BasisSpec, GpeError, Result, SolverConfig, SystemParams, TensorBasis2D};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub basis_modes: (usize, usize),
    pub basis_beta: (f64, f64),
    pub solver: SolverConfig,
    /// Initial-guess tensor modes per component (excited runs).
    pub modes: [(usize, usize); 2],
    /// Export window `(x0, x1, y0, y1)`.
    pub window: (f64, f64, f64, f64),
    /// Export resolution `(nx, ny)`.
    pub resolution: (usize, usize),
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemParams::default(),
            basis_modes: (16, 16),
            basis_beta: (1.0, 1.0),
            solver: SolverConfig::default(),
            modes: [(0, 0), (0, 0)],
            window: (-11.0, 11.0, -11.0, 11.0),
            resolution: (201, 201),
            out_dir: None,
        }
    }
}

fn config_error(line: usize, msg: &str) -> GpeError {
    GpeError::InvalidParams(format!("config line {line}: {msg}"))
}

fn parse_mode_pair(value: &str, line: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(config_error(line, "expected `l1,l2`"));
    }
    let a = parts[0]
        .parse()
        .map_err(|_| config_error(line, "bad mode index"))?;
    let b = parts[1]
        .parse()
        .map_err(|_| config_error(line, "bad mode index"))?;
    Ok((a, b))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_error(line_no, "unterminated section header"))?;
                match name {
                    "system" | "basis" | "solver" | "output" => section = name.to_string(),
                    other => {
                        return Err(config_error(line_no, &format!("unknown section [{other}]")))
                    }
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_error(line_no, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value, line_no)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
        let f = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| config_error(line, &format!("bad number for {key}")))
        };
        let u = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| config_error(line, &format!("bad integer for {key}")))
        };
        match (section, key) {
            ("system", "m1") => self.system.mass[0] = f()?,
            ("system", "m2") => self.system.mass[1] = f()?,
            ("system", "theta11") => self.system.theta[0][0] = f()?,
            ("system", "theta22") => self.system.theta[1][1] = f()?,
            ("system", "theta12") => {
                let v = f()?;
                self.system.theta[0][1] = v;
                self.system.theta[1][0] = v;
            }
            ("system", "omega11") => self.system.omega[0][0] = f()?,
            ("system", "omega12") => self.system.omega[0][1] = f()?,
            ("system", "omega21") => self.system.omega[1][0] = f()?,
            ("system", "omega22") => self.system.omega[1][1] = f()?,
            ("system", "x11") => self.system.centers[0][0] = f()?,
            ("system", "x12") => self.system.centers[0][1] = f()?,
            ("system", "x21") => self.system.centers[1][0] = f()?,
            ("system", "x22") => self.system.centers[1][1] = f()?,
            ("system", "n1") => self.system.particle_numbers[0] = f()?,
            ("system", "n2") => self.system.particle_numbers[1] = f()?,
            ("system", "rho") => self.system.rho = f()?,
            ("basis", "l1") => self.basis_modes.0 = u()?,
            ("basis", "l2") => self.basis_modes.1 = u()?,
            ("basis", "beta1") => self.basis_beta.0 = f()?,
            ("basis", "beta2") => self.basis_beta.1 = f()?,
            ("solver", "max_newton_iters") => self.solver.max_newton_iters = u()?,
            ("solver", "grad_tol") => self.solver.grad_tol = f()?,
            ("solver", "armijo_c") => self.solver.armijo_c = f()?,
            ("solver", "backtrack_factor") => self.solver.backtrack_factor = f()?,
            ("solver", "max_backtracks") => self.solver.max_backtracks = u()?,
            ("solver", "continuation_steps_rho") => self.solver.continuation_steps_rho = u()?,
            ("solver", "continuation_steps_theta") => self.solver.continuation_steps_theta = u()?,
            ("solver", "diag_floor") => self.solver.diag_floor = f()?,
            ("solver", "modes1") => self.modes[0] = parse_mode_pair(value, line)?,
            ("solver", "modes2") => self.modes[1] = parse_mode_pair(value, line)?,
            ("output", "x0") => self.window.0 = f()?,
            ("output", "x1") => self.window.1 = f()?,
            ("output", "y0") => self.window.2 = f()?,
            ("output", "y1") => self.window.3 = f()?,
            ("output", "nx") => self.resolution.0 = u()?,
            ("output", "ny") => self.resolution.1 = u()?,
            ("output", "out_dir") => self.out_dir = Some(PathBuf::from(value)),
            ("", _) => {
                return Err(config_error(
                    line,
                    &format!("key {key} appears before any section header"),
                ))
            }
            (s, k) => {
                return Err(config_error(line, &format!("unknown key {k} in section [{s}]")))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.solver.validate()?;
        BasisSpec::new(self.basis_modes.0, self.basis_beta.0)?;
        BasisSpec::new(self.basis_modes.1, self.basis_beta.1)?;
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(GpeError::InvalidParams(
                "grid resolution nx/ny must be positive".into(),
            ));
        }
        for (i, (l1, l2)) in self.modes.iter().enumerate() {
            if *l1 >= self.basis_modes.0 || *l2 >= self.basis_modes.1 {
                return Err(GpeError::InvalidParams(format!(
                    "modes{} = {l1},{l2} outside basis truncation",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn build_basis(&self) -> Result<TensorBasis2D> {
        TensorBasis2D::new(
            BasisSpec::new(self.basis_modes.0, self.basis_beta.0)?,
            BasisSpec::new(self.basis_modes.1, self.basis_beta.1)?,
        )
    }

    /// Serializes back to config text (lossless against the parser).
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[system]");
        let _ = writeln!(s, "m1 = {:.16e}", self.system.mass[0]);
        let _ = writeln!(s, "m2 = {:.16e}", self.system.mass[1]);
        let _ = writeln!(s, "theta11 = {:.16e}", self.system.theta[0][0]);
        let _ = writeln!(s, "theta12 = {:.16e}", self.system.theta[0][1]);
        let _ = writeln!(s, "theta22 = {:.16e}", self.system.theta[1][1]);
        for i in 0..2 {
            for j in 0..2 {
                let _ = writeln!(s, "omega{}{} = {:.16e}", i + 1, j + 1, self.system.omega[i][j]);
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let _ = writeln!(s, "x{}{} = {:.16e}", i + 1, j + 1, self.system.centers[i][j]);
            }
        }
        let _ = writeln!(s, "n1 = {:.16e}", self.system.particle_numbers[0]);
        let _ = writeln!(s, "n2 = {:.16e}", self.system.particle_numbers[1]);
        let _ = writeln!(s, "rho = {:.16e}", self.system.rho);
        let _ = writeln!(s, "\n[basis]");
        let _ = writeln!(s, "l1 = {}", self.basis_modes.0);
        let _ = writeln!(s, "l2 = {}", self.basis_modes.1);
        let _ = writeln!(s, "beta1 = {:.16e}", self.basis_beta.0);
        let _ = writeln!(s, "beta2 = {:.16e}", self.basis_beta.1);
        let _ = writeln!(s, "\n[solver]");
        let _ = writeln!(s, "max_newton_iters = {}", self.solver.max_newton_iters);
        let _ = writeln!(s, "grad_tol = {:.16e}", self.solver.grad_tol);
        let _ = writeln!(s, "armijo_c = {:.16e}", self.solver.armijo_c);
        let _ = writeln!(s, "backtrack_factor = {:.16e}", self.solver.backtrack_factor);
        let _ = writeln!(s, "max_backtracks = {}", self.solver.max_backtracks);
        let _ = writeln!(s, "continuation_steps_rho = {}", self.solver.continuation_steps_rho);
        let _ = writeln!(
            s,
            "continuation_steps_theta = {}",
            self.solver.continuation_steps_theta
        );
        let _ = writeln!(s, "diag_floor = {:.16e}", self.solver.diag_floor);
        let _ = writeln!(s, "modes1 = {},{}", self.modes[0].0, self.modes[0].1);
        let _ = writeln!(s, "modes2 = {},{}", self.modes[1].0, self.modes[1].1);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "x0 = {:.16e}", self.window.0);
        let _ = writeln!(s, "x1 = {:.16e}", self.window.1);
        let _ = writeln!(s, "y0 = {:.16e}", self.window.2);
        let _ = writeln!(s, "y1 = {:.16e}", self.window.3);
        let _ = writeln!(s, "nx = {}", self.resolution.0);
        let _ = writeln!(s, "ny = {}", self.resolution.1);
        if let Some(dir) = &self.out_dir {
            let _ = writeln!(s, "out_dir = {}", dir.display());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip_is_lossless() {
        let text = "\
[system]
theta11 = 400
theta12 = 100
theta22 = 200
x11 = 4.5
x21 = -4.5
[basis]
l1 = 12
l2 = 10
beta1 = 1.25
[solver]
grad_tol = 1e-9
modes1 = 1,0
[output]
nx = 51
ny = 41
out_dir = /tmp/run
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.system.theta[0][1], 100.0);
        assert_eq!(cfg.system.theta[1][0], 100.0);
        assert_eq!(cfg.basis_modes, (12, 10));
        assert_eq!(cfg.modes[0], (1, 0));
        let again = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::parse("[system]\ntheta21 = 3\n").unwrap_err();
        assert!(err.to_string().contains("theta21"));
        assert!(RunConfig::parse("[nonsense]\n").is_err());
        assert!(RunConfig::parse("loose = 1\n").is_err());
    }

    #[test]
    fn invalid_values_name_the_key() {
        let err = RunConfig::parse("[system]\nn2 = -1\n").unwrap_err();
        assert!(err.to_string().contains("n2"), "{err}");
    }

    #[test]
    fn defaults_are_a_valid_linear_run() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.window, (-11.0, 11.0, -11.0, 11.0));
        assert_eq!(cfg.resolution, (201, 201));
        assert!(cfg.validate().is_ok());
    }
}
