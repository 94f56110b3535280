//! Randomized operator-identity suite behind `fraclap operator-check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::halflap::{apply_dx_i, apply_i, dx, eigenvalue, inverse_i, seminorm, Order};
use crate::spectral::{NodalField, SpectralField, SpectralSpace};

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub modes: usize,
    pub nodes: usize,
    /// Random fields per identity.
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Test hook: perturbs every synthesized nodal field, so the suite must fail.
    pub corrupt_transform: bool,
}

impl CheckOptions {
    pub fn new(modes: usize, nodes: usize) -> Self {
        CheckOptions {
            modes,
            nodes,
            samples: 100,
            seed: 0x5eed,
            tolerance: 1e-12,
            corrupt_transform: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResult {
    pub name: &'static str,
    pub max_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub modes: usize,
    pub nodes: usize,
    pub samples: usize,
    pub tolerance: f64,
    pub rows: Vec<IdentityResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.rows.iter().filter(|r| !r.passed).map(|r| r.name).collect()
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "operator identities: N = {}, M = {}, {} samples, tolerance {:.1e}\n",
            self.modes, self.nodes, self.samples, self.tolerance
        );
        for r in &self.rows {
            s.push_str(&format!(
                "  {:<30} {:>12.3e}  {}\n",
                r.name,
                r.max_error,
                if r.passed { "ok" } else { "FAIL" }
            ));
        }
        s
    }
}

/// Band-limited random field with coefficients uniform in [−1, 1] scaled by 1/(1+k).
pub fn random_field(rng: &mut impl Rng, modes: usize) -> SpectralField {
    let coeffs = (0..modes)
        .map(|k| rng.gen_range(-1.0..=1.0) / (1.0 + k as f64))
        .collect();
    SpectralField::new(coeffs).expect("finite coefficients")
}

fn rel(err: f64, reference: f64) -> f64 {
    err / reference.abs().max(1.0)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const NAMES: [&str; 9] = [
    "transform round trip",
    "Parseval",
    "I(I(u)) = -u_xx",
    "integral of I(u) = 0",
    "inverse_I(I(u)) = -(u - mean)",
    "H^1/2 = -<I u, u>",
    "H^1 = |I u|^2",
    "H^3/2 = -<(I u)_x, u_x>",
    "H^2 = |(I u)_x|^2",
];

/// Runs every identity on `samples` seeded random fields and records the
/// largest relative error of each (normalized by max(1, |reference|)).
pub fn operator_check(opts: &CheckOptions) -> Result<CheckReport> {
    let space = SpectralSpace::new(opts.nodes, opts.modes)?;
    let w = space.grid().weight();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = [0.0f64; NAMES.len()];

    let synth = |c: &SpectralField| -> Result<NodalField> {
        let u = space.to_nodal(c)?;
        if opts.corrupt_transform {
            let mut v = u.values().to_vec();
            v[0] += 1e-6 * (1.0 + v[0].abs());
            NodalField::new(v)
        } else {
            Ok(u)
        }
    };

    for _ in 0..opts.samples {
        let u = random_field(&mut rng, opts.modes);
        let c = u.coeffs();
        let nodal = synth(&u)?;
        let un = nodal.values();
        let iu = apply_i(&u);
        let iu_n = synth(&iu)?;

        let back = space.to_spectral(&nodal)?;
        let errs = [
            rel(max_abs_diff(back.coeffs(), c), max_abs(c)),
            {
                let l2 = dot(c, c);
                rel((w * dot(un, un) - l2).abs(), l2)
            },
            {
                let ii = apply_i(&iu);
                let lap: Vec<f64> = c.iter().enumerate().map(|(k, ck)| eigenvalue(k) * ck).collect();
                rel(max_abs_diff(ii.coeffs(), &lap), max_abs(&lap))
            },
            rel(iu_n.integral().abs(), iu.l2_norm()),
            {
                let inv = inverse_i(&iu)?;
                let mut expect: Vec<f64> = c.iter().map(|x| -x).collect();
                expect[0] = 0.0;
                rel(max_abs_diff(inv.coeffs(), &expect), max_abs(&expect))
            },
            {
                let h = seminorm(&u, Order::Half);
                rel((-w * dot(iu_n.values(), un) - h).abs(), h)
            },
            {
                let h = seminorm(&u, Order::One);
                rel((w * dot(iu_n.values(), iu_n.values()) - h).abs(), h)
            },
            {
                let h = seminorm(&u, Order::ThreeHalves);
                let a = space.sine_to_nodal(&apply_dx_i(&u))?;
                let b = space.sine_to_nodal(&dx(&u))?;
                let a = corrupt_if(opts.corrupt_transform, a)?;
                rel((-w * dot(a.values(), b.values()) - h).abs(), h)
            },
            {
                let h = seminorm(&u, Order::Two);
                let a = space.sine_to_nodal(&apply_dx_i(&u))?;
                let a = corrupt_if(opts.corrupt_transform, a)?;
                rel((w * dot(a.values(), a.values()) - h).abs(), h)
            },
        ];
        for (acc, e) in worst.iter_mut().zip(errs) {
            *acc = acc.max(if e.is_nan() { f64::INFINITY } else { e });
        }
    }

    let rows = NAMES
        .iter()
        .zip(worst)
        .map(|(&name, max_error)| IdentityResult {
            name,
            max_error,
            passed: max_error <= opts.tolerance,
        })
        .collect();
    Ok(CheckReport {
        modes: opts.modes,
        nodes: opts.nodes,
        samples: opts.samples,
        tolerance: opts.tolerance,
        rows,
    })
}

fn corrupt_if(corrupt: bool, f: NodalField) -> Result<NodalField> {
    if !corrupt {
        return Ok(f);
    }
    let mut v = f.values().to_vec();
    let last = v.len() - 1;
    v[last] += 1e-6 * (1.0 + v[last].abs());
    NodalField::new(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_at_default_resolution() {
        let mut o = CheckOptions::new(64, 128);
        o.samples = 20;
        let r = operator_check(&o).unwrap();
        assert!(r.passed(), "{}", r.table());
        assert_eq!(r.rows.len(), 9);
    }

    #[test]
    fn degenerate_two_mode_case_passes() {
        let r = operator_check(&CheckOptions::new(2, 4)).unwrap();
        assert!(r.passed(), "{}", r.table());
    }

    #[test]
    fn corrupted_transform_fails() {
        let mut o = CheckOptions::new(16, 32);
        o.corrupt_transform = true;
        let r = operator_check(&o).unwrap();
        assert!(!r.passed());
        assert!(r.failures().contains(&"transform round trip"));
    }

    #[test]
    fn rejects_underresolved_grid() {
        assert!(operator_check(&CheckOptions::new(64, 100)).is_err());
    }
}
