//! Named measurements and channels.
//!
//! Names accepted by [`named_povm`]:
//! `x`, `z:THETA,PHI` (angles in radians; `pi`, `pi/4`, `3pi/8` style is
//! accepted), `appendix-d` (alias `l1-counterexample`) and `appendix-f-g`
//! (alias `qutrit-g`).
//!
//! Names accepted by [`named_channel`]: `identity`, `dephasing`,
//! `amplitude-damping:GAMMA` and `appendix-d` (alias `l1-counterexample`).

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::experiment::{z_theta_phi, MeasurementDirection};
use crate::linalg::{GeneralMatrix, HermitianMatrix};
use crate::povm::Povm;
use crate::prelude::*;

/// `{(I + X)/2, (I - X)/2}`, the maximally coherent qubit measurement.
pub fn x_basis() -> Povm {
    Povm::new(vec![
        HermitianMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]).expect("hermitian"),
        HermitianMatrix::from_real(2, &[0.5, -0.5, -0.5, 0.5]).expect("hermitian"),
    ])
    .expect("shapes")
}

/// Four-level two-outcome measurement for which the l1 quantity grows under
/// an SIO dual (see [`l1_counterexample_channel`]).
pub fn l1_counterexample_povm() -> Povm {
    let component = |s: f64| {
        #[rustfmt::skip]
        let m = [
            0.5, 0.5 * s, 0.0, 0.0,
            0.5 * s, 0.5, 0.0, 0.0,
            0.0, 0.0, 0.5, 0.0,
            0.0, 0.0, 0.0, 0.5,
        ];
        HermitianMatrix::from_real(4, &m).expect("hermitian")
    };
    Povm::new(vec![component(1.0), component(-1.0)]).expect("shapes")
}

/// SIO copying the coherent `{0,1}` block onto `{2,3}`.
pub fn l1_counterexample_channel() -> KrausChannel {
    #[rustfmt::skip]
    let k0 = [
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
    ];
    #[rustfmt::skip]
    let k1 = [
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
    ];
    KrausChannel::new(
        vec![
            GeneralMatrix::from_real(4, &k0).expect("finite"),
            GeneralMatrix::from_real(4, &k1).expect("finite"),
        ],
        1e-12,
    )
    .expect("complete")
}

/// The printed qutrit effect `G_0`.
#[rustfmt::skip]
pub const QUTRIT_G0: [f64; 9] = [
    0.528, 0.263, 0.042,
    0.263, 0.137, 0.026,
    0.042, 0.026, 0.008,
];

/// Dichotomic qutrit measurement `{G_0, I - G_0}`.
pub fn qutrit_dichotomic_g() -> Povm {
    let g0 = HermitianMatrix::from_real(3, &QUTRIT_G0).expect("hermitian");
    let g1 = HermitianMatrix::identity(3).sub(&g0).expect("same dim");
    Povm::new(vec![g0, g1]).expect("shapes")
}

/// Parses an angle: a float, or `[k][*]pi[/m]`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim();
    let bad = || Error::invalid(format!("cannot parse angle `{text}`"));
    if let Ok(v) = t.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    }
    let pos = t.find("pi").ok_or_else(bad)?;
    let coeff = t[..pos].trim_end_matches('*').trim();
    let coeff = match coeff {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = t[pos + 2..].trim();
    let denom = if rest.is_empty() {
        1.0
    } else {
        rest.strip_prefix('/').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?
    };
    if denom == 0.0 {
        return Err(bad());
    }
    Ok(coeff * core::f64::consts::PI / denom)
}

/// Resolves a builtin measurement name; `None` if the name is not a builtin.
pub fn named_povm(name: &str) -> Option<Result<Povm>> {
    match name {
        "x" => Some(Ok(x_basis())),
        "appendix-d" | "l1-counterexample" => Some(Ok(l1_counterexample_povm())),
        "appendix-f-g" | "qutrit-g" => Some(Ok(qutrit_dichotomic_g())),
        _ => {
            let args = name.strip_prefix("z:")?;
            Some((|| {
                let (theta, phi) = args
                    .split_once(',')
                    .ok_or_else(|| Error::invalid(format!("expected z:THETA,PHI, got `{name}`")))?;
                let dir = MeasurementDirection::new(parse_angle(theta)?, parse_angle(phi)?);
                Ok(z_theta_phi(dir))
            })())
        }
    }
}

/// Resolves a builtin channel name for dimension `dim`.
pub fn named_channel(name: &str, dim: usize) -> Option<Result<KrausChannel>> {
    match name {
        "identity" => Some(Ok(KrausChannel::identity(dim))),
        "dephasing" => Some(Ok(KrausChannel::dephasing(dim))),
        "appendix-d" | "l1-counterexample" => Some(if dim == 4 {
            Ok(l1_counterexample_channel())
        } else {
            Err(Error::DimensionMismatch { expected: 4, found: dim })
        }),
        _ => {
            let gamma = name.strip_prefix("amplitude-damping:")?;
            Some(
                gamma
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("cannot parse damping rate in `{name}`")))
                    .and_then(|g| KrausChannel::amplitude_damping(dim, g)),
            )
        }
    }
}
