use statrs::function::erf::erfc;

/// Scaled complementary error function `exp(z²) erfc(z)`.
pub fn erfcx(z: f64) -> f64 {
    if z < 10.0 {
        (z * z).exp() * erfc(z)
    } else {
        // Asymptotic series; the first omitted term is below 1e-7 relative.
        let r = 1.0 / (z * z);
        (1.0 - 0.5 * r + 0.75 * r * r - 1.875 * r * r * r) / (z * std::f64::consts::PI.sqrt())
    }
}

/// Transition density from `x` to `y` of Brownian motion on the half line
/// `x > 0` over time `t` with the Robin condition `D p' = c p` at `0`.
/// `c = 0` is reflection, `c = inf` absorption.
pub fn half_line_robin_density(x: f64, y: f64, t: f64, diffusion: f64, c: f64) -> f64 {
    let four_dt = 4.0 * diffusion * t;
    let norm = 1.0 / (std::f64::consts::PI * four_dt).sqrt();
    let direct = norm * (-(y - x) * (y - x) / four_dt).exp();
    let image = norm * (-(y + x) * (y + x) / four_dt).exp();
    if c.is_infinite() {
        return direct - image;
    }
    let w = x + y;
    let kill = c / diffusion * (-w * w / four_dt).exp() * erfcx(w / four_dt.sqrt() + c * (t / diffusion).sqrt());
    (direct + image - kill).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn erfcx_reference_values() {
        assert_relative_eq!(erfcx(0.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(erfcx(1.0), 0.427_583_576_155_807, max_relative = 1e-10);
        assert_relative_eq!(erfcx(5.0), 0.110_704_637_733_068_6, max_relative = 1e-9);
        assert_relative_eq!(erfcx(10.0), 0.056_140_992_743_822_6, max_relative = 1e-7);
        assert_relative_eq!(erfcx(9.999_999), 0.056_140_998_303_135_35, max_relative = 1e-7);
        assert_relative_eq!(erfcx(30.0), 0.018_795_888_861_416_75, max_relative = 1e-9);
    }

    #[test]
    fn robin_density_limits_and_mass() {
        let (d, t) = (1.0, 0.01);
        let mass = |c: f64, x: f64| {
            let dy = 1e-4;
            (0..20_000).map(|i| half_line_robin_density(x, (i as f64 + 0.5) * dy, t, d, c) * dy).sum::<f64>()
        };
        assert_relative_eq!(mass(0.0, 0.1), 1.0, max_relative = 1e-6);
        let absorbing = mass(f64::INFINITY, 0.1);
        let partial = mass(5.0, 0.1);
        assert!(absorbing < partial && partial < 1.0);
        // Absorbing survival from x: erf(x / sqrt(4 D t)).
        assert_relative_eq!(absorbing, statrs::function::erf::erf(0.1 / (0.04f64).sqrt()), max_relative = 1e-5);
        // Large c approaches absorption.
        assert_relative_eq!(mass(1e7, 0.1), absorbing, max_relative = 1e-4);
    }
}
