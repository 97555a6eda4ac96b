//! Synthetic die meshes with an analytic wear field over the
//! (temperature, friction) parameter space.
//!
//! Each simulation is a structured quad grid over `[-1, 1]^2` with a
//! sinusoidal bump (upward for the lower die, downward for the upper die).
//! Wear is evaluated by [`wear_oracle`] at cell centroids and stored as the
//! cell field `"wear"`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::mesh::{Cell, ProcessParams, SurfaceMesh};
use crate::numerics::Prng;
use crate::{Error, Result};

/// Name of the generated cell field.
pub const WEAR_FIELD: &str = "wear";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Die {
    /// Lower deformable die, bump up.
    Ldd,
    /// Upper deformable die, bump down.
    Udd,
}

impl core::str::FromStr for Die {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ldd" => Ok(Die::Ldd),
            "udd" => Ok(Die::Udd),
            other => Err(Error::Config(format!("unknown die `{other}` (expected ldd or udd)"))),
        }
    }
}

impl Die {
    pub fn as_str(self) -> &'static str {
        match self {
            Die::Ldd => "ldd",
            Die::Udd => "udd",
        }
    }

    fn z_sign(self) -> f64 {
        match self {
            Die::Ldd => 1.0,
            Die::Udd => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// `(nu, nv)` points along x and y.
    pub grid: (usize, usize),
    pub n_sims: usize,
    pub train_fraction: f64,
    /// Kelvin.
    pub t_range: (f64, f64),
    pub mu_range: (f64, f64),
    pub seed: u64,
    pub die: Die,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            grid: (16, 16),
            n_sims: 40,
            train_fraction: 0.75,
            t_range: (900.0, 1250.0),
            mu_range: (0.1, 0.7),
            seed: 7,
            die: Die::Ldd,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let (nu, nv) = self.grid;
        if nu < 2 || nv < 2 {
            return Err(Error::Config(format!("grid {nu}x{nv} needs at least 2x2 points")));
        }
        if self.n_sims == 0 {
            return Err(Error::Config("n_sims must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        let (t0, t1) = self.t_range;
        if !(t0.is_finite() && t1.is_finite() && t0 > 0.0 && t0 <= t1) {
            return Err(Error::Config(format!("temperature range [{t0}, {t1}] is invalid")));
        }
        let (m0, m1) = self.mu_range;
        if !(m0.is_finite() && m1.is_finite() && m0 >= 0.0 && m0 <= m1) {
            return Err(Error::Config(format!("friction range [{m0}, {m1}] is invalid")));
        }
        Ok(())
    }
}

/// `w = 50 mu (1 + sin(pi x) sin(pi y)) + 30 ((T - 900) / 350) exp(-2 (x^2 + y^2))`,
/// in N/m. Non-negative whenever `mu >= 0` and `T >= 900`.
pub fn wear_oracle(x: f64, y: f64, temperature: f64, friction: f64) -> f64 {
    let bump = libm::sin(PI * x) * libm::sin(PI * y);
    let thermal = (temperature - 900.0) / 350.0;
    50.0 * friction * (1.0 + bump) + 30.0 * thermal * libm::exp(-2.0 * (x * x + y * y))
}

/// Die geometry alone: `nu x nv` points (x fastest) and `(nu-1)(nv-1)`
/// counter-clockwise quads. Parameters are set to the lower range corners.
pub fn generate_mesh(config: &GeneratorConfig) -> Result<SurfaceMesh> {
    config.validate()?;
    let (nu, nv) = config.grid;
    let sign = config.die.z_sign();
    let coord = |i: usize, n: usize| -1.0 + 2.0 * i as f64 / (n - 1) as f64;
    let mut points = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        let y = coord(j, nv);
        for i in 0..nu {
            let x = coord(i, nu);
            points.push([x, y, sign * 0.2 * libm::sin(PI * x) * libm::sin(PI * y)]);
        }
    }
    let mut cells = Vec::with_capacity((nu - 1) * (nv - 1));
    for j in 0..nv - 1 {
        for i in 0..nu - 1 {
            let p = j * nu + i;
            cells.push(Cell::Quad([p, p + 1, p + nu + 1, p + nu]));
        }
    }
    let params = ProcessParams::new(config.t_range.0, config.mu_range.0)?;
    Ok(SurfaceMesh::new(points, cells, BTreeMap::new(), BTreeMap::new(), params)?)
}

/// Parameters of simulation `index`: two draws from the stream seeded with
/// `config.seed`, starting at position `2 * index` (temperature first).
pub fn sample_params(config: &GeneratorConfig, index: usize) -> Result<ProcessParams> {
    let mut rng = Prng::new(config.seed);
    rng.advance(2 * index as u64);
    let t = rng.uniform(config.t_range.0, config.t_range.1);
    let mu = rng.uniform(config.mu_range.0, config.mu_range.1);
    Ok(ProcessParams::new(t, mu)?)
}

/// Simulation `index`: the die mesh with sampled parameters and the
/// `"wear"` cell field evaluated at cell centroids.
pub fn generate_simulation(config: &GeneratorConfig, index: usize) -> Result<SurfaceMesh> {
    let params = sample_params(config, index)?;
    let mut mesh = generate_mesh(config)?.with_params(params)?;
    let wear = (0..mesh.num_cells())
        .map(|c| {
            let [x, y, _] = mesh.cell_centroid(c);
            wear_oracle(x, y, params.temperature, params.friction)
        })
        .collect();
    mesh.set_cell_field(WEAR_FIELD, wear)?;
    Ok(mesh)
}

/// `(train, test)` counts: the first `ceil(fraction * n)` simulations train.
pub fn split_counts(n: usize, train_fraction: f64) -> (usize, usize) {
    // The nudge keeps e.g. 0.7 * 10 = 7.000000000000001 at 7.
    let train = (libm::ceil(train_fraction * n as f64 - 1e-9) as usize).min(n);
    (train, n - train)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(nu: usize, nv: usize) -> GeneratorConfig {
        GeneratorConfig { grid: (nu, nv), ..Default::default() }
    }

    #[test]
    fn smallest_grid() {
        let m = generate_mesh(&cfg(2, 2)).unwrap();
        assert_eq!((m.num_points(), m.num_cells()), (4, 1));
    }

    #[test]
    fn default_grid_counts() {
        let m = generate_mesh(&cfg(16, 16)).unwrap();
        assert_eq!((m.num_points(), m.num_cells()), (256, 225));
    }

    #[test]
    fn centre_is_flat() {
        let m = generate_mesh(&cfg(3, 3)).unwrap();
        assert_eq!(m.points()[4], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn upper_die_is_mirrored() {
        let l = generate_mesh(&cfg(5, 5)).unwrap();
        let u = generate_mesh(&GeneratorConfig { die: Die::Udd, ..cfg(5, 5) }).unwrap();
        for (a, b) in l.points().iter().zip(u.points()) {
            assert_eq!(a[2], -b[2]);
        }
    }

    #[test]
    fn oracle_values() {
        assert_eq!(wear_oracle(0.0, 0.0, 900.0, 0.5), 25.0);
        assert_eq!(wear_oracle(0.3, -0.7, 900.0, 0.0), 0.0);
        let w = wear_oracle(0.5, 0.5, 1250.0, 0.1);
        assert!((w - (10.0 + 30.0 / core::f64::consts::E)).abs() < 1e-12);
        assert!((w - 21.0364).abs() < 1e-4);
    }

    #[test]
    fn params_within_ranges() {
        let c = GeneratorConfig::default();
        for i in 0..500 {
            let p = sample_params(&c, i).unwrap();
            assert!((900.0..=1250.0).contains(&p.temperature));
            assert!((0.1..=0.7).contains(&p.friction));
        }
    }

    #[test]
    fn wear_at_centroids() {
        let c = cfg(4, 3);
        let m = generate_simulation(&c, 3).unwrap();
        let p = m.params();
        let wear = &m.cell_fields()[WEAR_FIELD];
        for (ci, &w) in wear.iter().enumerate() {
            let [x, y, _] = m.cell_centroid(ci);
            assert_eq!(w, wear_oracle(x, y, p.temperature, p.friction));
            assert!(w >= 0.0);
        }
    }

    #[test]
    fn splits() {
        assert_eq!(split_counts(40, 0.75), (30, 10));
        assert_eq!(split_counts(4, 0.75), (3, 1));
        assert_eq!(split_counts(10, 0.7), (7, 3));
        assert_eq!(split_counts(1, 0.5), (1, 0));
    }

    #[test]
    fn invalid_configs() {
        assert!(cfg(1, 5).validate().is_err());
        assert!(GeneratorConfig { train_fraction: 1.0, ..Default::default() }.validate().is_err());
        assert!(GeneratorConfig { t_range: (1000.0, 900.0), ..Default::default() }.validate().is_err());
        assert!(GeneratorConfig { n_sims: 0, ..Default::default() }.validate().is_err());
    }
}
