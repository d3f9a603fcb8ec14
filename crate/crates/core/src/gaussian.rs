//! Two-mode Gaussian model of the four-wave-mixing twin beams.
//!
//! Quadratures are ordered `(x_p, p_p, x_c, p_c)` and normalized so that a
//! single-mode vacuum quadrature has variance 1/2. Joint quadratures
//! `X± = X^p ± X^c` are reported relative to the two-beam shot-noise limit,
//! so the two-mode vacuum reads exactly 1 and the inseparability criterion
//! reads `I < 2`.

use core::f64::consts::{FRAC_PI_2, PI};

use crate::{Error, Result};

/// Which joint quadrature is measured: `X⁻ = X^p − X^c` or `X⁺ = X^p + X^c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum JointQuadrature {
    Minus,
    Plus,
}

impl JointQuadrature {
    /// Sign applied to the conjugate channel when forming the joint signal.
    pub fn conjugate_sign(self) -> f64 {
        match self {
            JointQuadrature::Minus => -1.0,
            JointQuadrature::Plus => 1.0,
        }
    }
}

/// Physical source parameters of the twin-beam model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TwinBeamModel {
    /// Two-mode squeezing parameter; a pure lossless state has `V = e^(-2r)`.
    pub r: f64,
    /// Joint phase at which `X⁻` is squeezed (radians).
    pub delta_minus: f64,
    /// Joint phase at which `X⁺` is squeezed (radians).
    pub delta_plus: f64,
    pub eta_p: f64,
    pub eta_c: f64,
    /// Intensity gain of the seeded process, used by the bright experiment.
    pub gain: f64,
    /// Thermal photons added to each mode before loss.
    pub n_excess: f64,
}

impl Default for TwinBeamModel {
    fn default() -> Self {
        Self {
            r: 0.4375,
            delta_minus: 0.0,
            delta_plus: FRAC_PI_2,
            eta_p: 1.0,
            eta_c: 1.0,
            gain: 1.699_416_459_509_745,
            n_excess: 0.0,
        }
    }
}

impl TwinBeamModel {
    pub fn validate(&self) -> Result<()> {
        check_finite_nonneg("r", self.r)?;
        check_fraction("eta_p", self.eta_p)?;
        check_fraction("eta_c", self.eta_c)?;
        check_finite_nonneg("n_excess", self.n_excess)?;
        if !(self.gain >= 1.0) || !self.gain.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gain",
                reason: "must be finite and at least 1",
            });
        }
        if !self.delta_minus.is_finite() || !self.delta_plus.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "squeezing phases must be finite",
            });
        }
        Ok(())
    }

    /// Covariance state after the model's detection efficiencies.
    pub fn detected_state(&self) -> Result<CovarianceState> {
        let state = build_tmsv(self)?;
        apply_loss(&state, self.eta_p, self.eta_c)
    }
}

pub(crate) fn check_fraction(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "must lie in [0, 1]",
        })
    }
}

pub(crate) fn check_finite_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "must be finite and non-negative",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "must be finite and positive",
        })
    }
}

/// Mean vector and covariance matrix of a two-mode Gaussian state.
///
/// `plus_reference` is the conjugate quadrature angle used when the sum
/// quadrature is measured. A single two-mode squeezed covariance fixes the
/// phase relation between `X⁻` and `X⁺`; the reference angle is what lets
/// the two squeezing phases be chosen independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceState {
    pub mean: [f64; 4],
    pub cov: [[f64; 4]; 4],
    pub plus_reference: f64,
}

impl CovarianceState {
    pub fn vacuum() -> Self {
        let mut cov = [[0.0; 4]; 4];
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] = 0.5;
        }
        Self {
            mean: [0.0; 4],
            cov,
            plus_reference: PI,
        }
    }

    /// The two symplectic eigenvalues, smallest first.
    pub fn symplectic_eigenvalues(&self) -> [f64; 2] {
        let c = &self.cov;
        let det2 = |a: f64, b: f64, c: f64, d: f64| a * d - b * c;
        let det_a = det2(c[0][0], c[0][1], c[1][0], c[1][1]);
        let det_b = det2(c[2][2], c[2][3], c[3][2], c[3][3]);
        let det_c = det2(c[0][2], c[0][3], c[1][2], c[1][3]);
        let delta = det_a + det_b + 2.0 * det_c;
        let det = det4(c);
        let disc = libm::sqrt((delta * delta - 4.0 * det).max(0.0));
        [
            libm::sqrt(((delta - disc) / 2.0).max(0.0)),
            libm::sqrt((delta + disc) / 2.0),
        ]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..4).all(|i| (0..4).all(|j| (self.cov[i][j] - self.cov[j][i]).abs() <= tol))
    }
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

/// Covariance of the two-mode squeezed (thermal-seeded) state of `model`,
/// before any loss.
pub fn build_tmsv(model: &TwinBeamModel) -> Result<CovarianceState> {
    model.validate()?;
    let ch = libm::cosh(2.0 * model.r);
    let sh = libm::sinh(2.0 * model.r);
    let diag = ch / 2.0 + model.n_excess;
    let (sin_d, cos_d) = libm::sincos(model.delta_minus);
    let half = sh / 2.0;
    // Correlation block R(δ) = [[cos δ, sin δ], [sin δ, −cos δ]].
    let corr = [[half * cos_d, half * sin_d], [half * sin_d, -half * cos_d]];
    let mut cov = [[0.0; 4]; 4];
    for i in 0..2 {
        cov[i][i] = diag;
        cov[i + 2][i + 2] = diag;
        for j in 0..2 {
            cov[i][j + 2] = corr[i][j];
            cov[j + 2][i] = corr[i][j];
        }
    }
    Ok(CovarianceState {
        mean: [0.0; 4],
        cov,
        plus_reference: model.delta_minus - model.delta_plus + PI,
    })
}

/// Independent beamsplitter loss on each mode.
pub fn apply_loss(state: &CovarianceState, eta_p: f64, eta_c: f64) -> Result<CovarianceState> {
    check_fraction("eta_p", eta_p)?;
    check_fraction("eta_c", eta_c)?;
    let eta = [eta_p, eta_p, eta_c, eta_c];
    let mut out = *state;
    for i in 0..4 {
        out.mean[i] = state.mean[i] * libm::sqrt(eta[i]);
        for j in 0..4 {
            out.cov[i][j] = libm::sqrt(eta[i] * eta[j]) * state.cov[i][j];
        }
        out.cov[i][i] += (1.0 - eta[i]) * 0.5;
    }
    Ok(out)
}

/// Variance of the joint quadrature at joint phase `theta`, relative to the
/// two-beam shot-noise limit.
pub fn joint_variance(state: &CovarianceState, theta: f64, sign: JointQuadrature) -> f64 {
    let conj_angle = match sign {
        JointQuadrature::Minus => 0.0,
        JointQuadrature::Plus => state.plus_reference,
    };
    let s = sign.conjugate_sign();
    let (sp, cp) = libm::sincos(theta);
    let (sc, cc) = libm::sincos(conj_angle);
    let g = [cp, sp, s * cc, s * sc];
    let mut quad = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            quad += g[i] * state.cov[i][j] * g[j];
        }
    }
    // Vacuum gives gᵀ(I/2)g = |g|²/2 = 1.
    quad
}

/// Entanglement figures derived from the two optimal joint-quadrature
/// variances.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriteriaResult {
    pub v_minus_min: f64,
    pub v_plus_min: f64,
    pub inseparability: f64,
    pub epr_product: f64,
    pub squeezing_db_minus: f64,
    pub squeezing_db_plus: f64,
}

impl CriteriaResult {
    /// `I < 2`.
    pub fn is_inseparable(&self) -> bool {
        self.inseparability < 2.0
    }

    /// `4·V⁻·V⁺ < 1`.
    pub fn is_epr_entangled(&self) -> bool {
        self.epr_product < 1.0
    }
}

pub fn criteria(v_minus_min: f64, v_plus_min: f64) -> Result<CriteriaResult> {
    check_positive("v_minus_min", v_minus_min)?;
    check_positive("v_plus_min", v_plus_min)?;
    Ok(CriteriaResult {
        v_minus_min,
        v_plus_min,
        inseparability: v_minus_min + v_plus_min,
        epr_product: 4.0 * v_minus_min * v_plus_min,
        squeezing_db_minus: to_db(v_minus_min),
        squeezing_db_plus: to_db(v_plus_min),
    })
}

/// Intensity-difference noise of seeded twin beams relative to the shot
/// noise of the total detected flux (linearized amplifier, equal
/// efficiencies).
pub fn bright_nrf(gain: f64, eta: f64) -> Result<f64> {
    if !(gain >= 1.0) || !gain.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gain",
            reason: "must be finite and at least 1",
        });
    }
    check_fraction("eta", eta)?;
    Ok(1.0 - eta + eta / (2.0 * gain - 1.0))
}

/// Gain that yields the requested noise reduction factor at efficiency
/// `eta`. The factor must exceed the loss floor `1 − eta`.
pub fn gain_for_nrf(nrf: f64, eta: f64) -> Result<f64> {
    check_fraction("eta", eta)?;
    let excess = nrf - (1.0 - eta);
    if !(excess > 0.0) || nrf > 1.0 {
        return Err(Error::InvalidParameter {
            name: "nrf",
            reason: "must lie between the loss floor 1 - eta and 1",
        });
    }
    Ok((eta / excess + 1.0) / 2.0)
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * libm::log10(ratio)
}

pub fn from_db(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Squeezing parameter whose pure-state variance `e^(-2r)` equals `db`
/// (negative for squeezing).
pub fn r_from_db(db: f64) -> f64 {
    -libm::log(from_db(db)) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn model(r: f64) -> TwinBeamModel {
        TwinBeamModel {
            r,
            ..TwinBeamModel::default()
        }
    }

    #[test]
    fn zero_squeezing_is_vacuum() {
        let s = build_tmsv(&TwinBeamModel {
            r: 0.0,
            ..Default::default()
        })
        .unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(s.cov[i][j], want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn squeezed_and_antisqueezed_variances() {
        let s = build_tmsv(&model(0.4375)).unwrap();
        // e^(-0.875) and e^(0.875)
        assert_abs_diff_eq!(
            joint_variance(&s, 0.0, JointQuadrature::Minus),
            0.416_862_019_678_508_4,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            joint_variance(&s, PI, JointQuadrature::Minus),
            2.398_875_293_967_098,
            epsilon = 1e-12
        );
        // and it is the −3.8 dB of the reported measurement
        assert_abs_diff_eq!(
            to_db(joint_variance(&s, 0.0, JointQuadrature::Minus)),
            -3.8,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            joint_variance(&s, FRAC_PI_2, JointQuadrature::Plus),
            0.416_862_019_678_508_4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn r_from_db_round_trip() {
        assert_abs_diff_eq!(r_from_db(-3.8), 0.4375, epsilon = 1e-4);
        assert_abs_diff_eq!(to_db(from_db(-3.8)), -3.8, epsilon = 1e-12);
    }

    #[test]
    fn loss_limits() {
        let s = build_tmsv(&model(0.8)).unwrap();
        assert_eq!(apply_loss(&s, 1.0, 1.0).unwrap(), s);
        let v = apply_loss(&s, 0.0, 0.0).unwrap();
        assert_eq!(v.cov, CovarianceState::vacuum().cov);
        // Large r: the squeezed variance tends to the admixed vacuum alone.
        let big = build_tmsv(&model(8.0)).unwrap();
        let lossy = apply_loss(&big, 0.95, 0.95).unwrap();
        assert_abs_diff_eq!(
            joint_variance(&lossy, 0.0, JointQuadrature::Minus),
            0.05,
            epsilon = 1e-6
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_tmsv(&model(-0.1)).is_err());
        assert!(build_tmsv(&TwinBeamModel {
            n_excess: -1.0,
            ..Default::default()
        })
        .is_err());
        let s = build_tmsv(&model(0.3)).unwrap();
        assert!(apply_loss(&s, 1.2, 0.5).is_err());
        assert!(apply_loss(&s, 0.5, -0.1).is_err());
        assert!(criteria(0.0, 0.5).is_err());
        assert!(criteria(0.5, -1.0).is_err());
        assert!(bright_nrf(0.9, 1.0).is_err());
    }

    #[test]
    fn criteria_values() {
        let c = criteria(0.417, 0.417).unwrap();
        assert_abs_diff_eq!(c.inseparability, 0.834, epsilon = 1e-12);
        assert_abs_diff_eq!(c.epr_product, 0.695_556, epsilon = 1e-9);
        assert!(c.is_inseparable() && c.is_epr_entangled());
        let v = criteria(1.0, 1.0).unwrap();
        assert_eq!(v.inseparability, 2.0);
        assert_eq!(v.epr_product, 4.0);
        assert!(!v.is_inseparable() && !v.is_epr_entangled());
    }

    #[test]
    fn bright_nrf_limits() {
        assert_eq!(bright_nrf(1.0, 0.3).unwrap(), 1.0);
        assert!(bright_nrf(1e12, 1.0).unwrap() < 1e-11);
        assert_abs_diff_eq!(bright_nrf(5.0, 1.0).unwrap(), 1.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(to_db(1.0 / 9.0), -9.542_425_094, epsilon = 1e-8);
        let g = gain_for_nrf(from_db(-3.8), 1.0).unwrap();
        assert_abs_diff_eq!(g, TwinBeamModel::default().gain, epsilon = 1e-9);
        assert_abs_diff_eq!(bright_nrf(g, 1.0).unwrap(), from_db(-3.8), epsilon = 1e-12);
    }

    /// Linearized photon-difference oracle: sample the amplitude-quadrature
    /// fluctuations of the seed and conjugate input, propagate them through
    /// the amplifier and a lossy photodiode, and measure the difference
    /// variance relative to the total shot noise.
    #[test]
    fn bright_nrf_matches_monte_carlo_photon_difference() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        for &(g, eta) in &[(5.0, 1.0), (1.7, 0.9), (3.0, 0.6)] {
            let (sg, sg1) = (libm::sqrt(g), libm::sqrt(g - 1.0));
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..n {
                let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
                let (xa, xb, vp, vc) = (z(), z(), z(), z());
                // photon-number fluctuations per unit seed amplitude
                let np = sg * (sg * xa + sg1 * xb);
                let nc = sg1 * (sg1 * xa + sg * xb);
                let dp = eta * np + libm::sqrt(eta * (1.0 - eta) * g) * vp;
                let dc = eta * nc + libm::sqrt(eta * (1.0 - eta) * (g - 1.0)) * vc;
                let d = dp - dc;
                sum += d;
                sum2 += d * d;
            }
            let mean = sum / n as f64;
            let var = sum2 / n as f64 - mean * mean;
            let shot = eta * (2.0 * g - 1.0);
            let measured = var / shot;
            let expected = bright_nrf(g, eta).unwrap();
            let sigma = expected * libm::sqrt(2.0 / n as f64);
            assert!(
                (measured - expected).abs() < 3.0 * sigma,
                "g={g} eta={eta}: {measured} vs {expected} (3σ = {})",
                3.0 * sigma
            );
        }
    }

    proptest! {
        #[test]
        fn symplectic_eigenvalues_respect_heisenberg(
            r in 0.0f64..2.0, n in 0.0f64..2.0, d in -3.0f64..3.0,
            ep in 0.0f64..=1.0, ec in 0.0f64..=1.0,
        ) {
            let m = TwinBeamModel { r, n_excess: n, delta_minus: d, ..Default::default() };
            let s = build_tmsv(&m).unwrap();
            prop_assert!(s.is_symmetric(0.0));
            prop_assert!(s.symplectic_eigenvalues()[0] >= 0.5 - 1e-9);
            let l = apply_loss(&s, ep, ec).unwrap();
            prop_assert!(l.is_symmetric(1e-15));
            prop_assert!(l.symplectic_eigenvalues()[0] >= 0.5 - 1e-9);
        }

        #[test]
        fn pure_state_has_vacuum_symplectic_spectrum(r in 0.0f64..2.0) {
            let s = build_tmsv(&model(r)).unwrap();
            let nu = s.symplectic_eigenvalues();
            prop_assert!((nu[0] - 0.5).abs() < 1e-6 && (nu[1] - 0.5).abs() < 1e-6);
        }

        #[test]
        fn matrix_engine_matches_closed_form(r in 0.0f64..2.0, dm in -PI..PI, dp in -PI..PI) {
            let m = TwinBeamModel { r, delta_minus: dm, delta_plus: dp, ..Default::default() };
            let s = build_tmsv(&m).unwrap();
            let (ch, sh) = (libm::cosh(2.0 * r), libm::sinh(2.0 * r));
            for k in 0..64 {
                let th = 2.0 * PI * k as f64 / 64.0;
                let vm = joint_variance(&s, th, JointQuadrature::Minus);
                let vp = joint_variance(&s, th, JointQuadrature::Plus);
                prop_assert!((vm - (ch - sh * libm::cos(th - dm))).abs() < 1e-9 * ch.max(1.0));
                prop_assert!((vp - (ch - sh * libm::cos(th - dp))).abs() < 1e-9 * ch.max(1.0));
            }
        }

        #[test]
        fn symmetric_loss_interpolates_to_vacuum(r in 0.0f64..2.0, eta in 0.0f64..=1.0, th in -PI..PI) {
            let s = build_tmsv(&model(r)).unwrap();
            let l = apply_loss(&s, eta, eta).unwrap();
            for sign in [JointQuadrature::Minus, JointQuadrature::Plus] {
                let v = joint_variance(&s, th, sign);
                prop_assert!((joint_variance(&l, th, sign) - (eta * v + 1.0 - eta)).abs() < 1e-9);
            }
        }

        #[test]
        fn inseparability_is_monotone_in_efficiency(r in 0.0f64..2.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let m = TwinBeamModel { r, ..Default::default() };
            let i_of = |eta: f64| {
                let s = apply_loss(&build_tmsv(&m).unwrap(), eta, eta).unwrap();
                joint_variance(&s, m.delta_minus, JointQuadrature::Minus)
                    + joint_variance(&s, m.delta_plus, JointQuadrature::Plus)
            };
            prop_assert!(i_of(hi) <= i_of(lo) + 1e-12);
            prop_assert!((i_of(0.0) - 2.0).abs() < 1e-12);
        }

        #[test]
        fn purity_product(r in 0.0f64..2.0, n in 0.0f64..1.0, ep in 0.0f64..=1.0, ec in 0.0f64..=1.0) {
            let pure = build_tmsv(&model(r)).unwrap();
            let prod = |s: &CovarianceState| {
                joint_variance(s, 0.0, JointQuadrature::Minus) * joint_variance(s, PI, JointQuadrature::Minus)
            };
            prop_assert!((prod(&pure) - 1.0).abs() < 1e-9 * libm::cosh(2.0 * r));
            let noisy = build_tmsv(&TwinBeamModel { r, n_excess: n, ..Default::default() }).unwrap();
            let lossy = apply_loss(&noisy, ep, ec).unwrap();
            prop_assert!(prod(&lossy) >= 1.0 - 1e-9);
        }

        #[test]
        fn epr_implies_inseparable(v in 0.01f64..3.0) {
            let c = criteria(v, v).unwrap();
            if c.is_epr_entangled() {
                prop_assert!(c.is_inseparable());
            }
        }
    }
}
