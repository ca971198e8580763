//! Human-readable kernel documentation for `stabfield describe`.

use anyhow::{bail, Result};
use stabfield_core::kernels::chentsov_constant;

pub const KERNEL_KINDS: [&str; 5] = ["indicator", "linear-fsm", "chentsov", "moving-average", "random-slope"];

/// Formula, parameter domains and reference of a kernel kind; `d` selects
/// the space dimension for the multi-dimensional kernels.
pub fn describe(kind: &str, d: usize) -> Result<String> {
    if d == 0 {
        bail!("--d must be at least 1");
    }
    let text = match kind {
        "indicator" => "\
indicator: f_s(x) = 1[0,s](x) - 1[s,0](x) on (R, Lebesgue)
  X_s = M([0, s]) is symmetric alpha-stable Levy motion, H = 1/alpha
  parameters: alpha in (0, 2]
  with an H' fractional Brownian time: effective Hurst index H' / alpha
  reference: Example 3.1"
            .to_string(),
        "linear-fsm" => "\
linear-fsm: f_s(x) = lambda [a ((s-x)_+^p - (-x)_+^p) + b ((s-x)_-^p - (-x)_-^p)], p = H - 1/alpha
  on (R, Lebesgue); lambda normalizes ||f_1||_alpha = 1
  parameters: alpha in (0, 2], H in (0, 1), a, b >= 0 not both zero
  H = 1/alpha (p = 0) is the indicator kernel
  with an H' fractional Brownian time: effective Hurst index H' H;
  the increments of the random-time process are generated by a null-conservative flow
  reference: Section 4 (normalized kernel, Proposition 4.4)"
            .to_string(),
        "chentsov" => {
            let c = chentsov_constant(d)?;
            format!(
                "\
chentsov: f_s(phi, r) = 1{{0 < r <= <phi, s>}} on S^{} x R_+ with measure C^-1 dphi dr
  Levy-Chentsov field in R^{d}, sis, H = 1/alpha
  C = (1/2) int_S |<phi, e_1>| dphi = {c:.15} for d = {d}
  parameters: alpha in (0, 2], d >= 1
  reference: Example 3.2",
                d - 1
            )
        }
        "moving-average" => format!(
            "\
moving-average: f_s(x) = c ( ||s - x||^q - ||x||^q ), q = H - d/2, on (R^{d}, Lebesgue)
  (q = 0 uses log ||x|| / ||s - x||); c normalizes Var X_s = ||s||^(2H)
  fractional Brownian field, alpha = 2
  parameters: H in (0, 1), d >= 1
  reference: Example 3.4"
        ),
        "random-slope" => "\
random-slope: f_s(x) = s on ([0, 1], Lebesgue)
  X_s = s M([0, 1]): a random line, H = 1
  with a Gaussian random time: sub-Gaussian, equal in law to c_alpha A^(1/2) tau
  with A ~ S_(alpha/2)((cos(pi alpha/4))^(2/alpha), 1, 0)
  parameters: alpha in (0, 2]
  reference: Example 3.3"
            .to_string(),
        other => bail!(
            "unknown kernel kind `{other}`; expected one of {}",
            KERNEL_KINDS.join(", ")
        ),
    };
    Ok(text)
}
