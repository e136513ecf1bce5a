use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::CMat4;
use crate::model::ModeHamiltonian;
use crate::scalar::{re, Real};

/// Which of the two dissipative strokes a bath drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathRole {
    Energizing,
    Relaxing,
}

/// Operators the four rates act on.
///
/// `Bare` uses the fermion operators `c_k`, `c_k†`, `c_{-k}`, `c_{-k}†` of the
/// fixed occupation basis. `Eigenmode` applies the same four channels to the
/// quasiparticle operators of the stroke Hamiltonian (`W c W†`, with `W` the
/// unitary diagonalising the `{|0,0⟩, |1,1⟩}` block), so a loss-only bath
/// empties the instantaneous excited levels and lands in the exact ground
/// state at any field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathFrame {
    #[default]
    Bare,
    Eigenmode,
}

/// Sign `s` of the second-fermion hop, `c_{-k} = |0,0⟩⟨0,1| + s|1,0⟩⟨1,1|`.
/// No observable depends on it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FermionSign {
    #[default]
    Minus,
    Plus,
}

impl FermionSign {
    pub fn value<T: Real>(self) -> T {
        match self {
            FermionSign::Minus => -T::one(),
            FermionSign::Plus => T::one(),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            FermionSign::Minus => FermionSign::Plus,
            FermionSign::Plus => FermionSign::Minus,
        }
    }
}

/// Rates `κ₁..κ₄` of the channels `c_k`, `c_k†`, `c_{-k}`, `c_{-k}†`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec<T> {
    pub kappa: [T; 4],
    pub label: BathRole,
    #[serde(default)]
    pub frame: BathFrame,
}

impl<T: Real> BathSpec<T> {
    /// Validated bath: every rate finite and nonnegative, at least one positive.
    pub fn new(kappa: [T; 4], label: BathRole, frame: BathFrame) -> Result<Self> {
        if kappa.iter().any(|k| !k.is_finite() || *k < T::zero()) {
            return Err(invalid("kappa", "rates must be finite and nonnegative"));
        }
        if kappa.iter().all(|k| *k == T::zero()) {
            return Err(invalid("kappa", "at least one rate must be positive"));
        }
        Ok(BathSpec { kappa, label, frame })
    }

    /// Ising preset: loss rate `μ` on both momenta (`κ₁ = κ₃`), gain rate `μ′`
    /// (`κ₂ = κ₄`).
    pub fn tim(mu: T, mu_prime: T, label: BathRole) -> Result<Self> {
        Self::new([mu, mu_prime, mu, mu_prime], label, BathFrame::Bare)
    }

    /// Decoupled "bath" with all rates zero. Not a valid [`BathSpec`] for
    /// steady-state strokes (the steady state is degenerate); only useful for
    /// fixed-duration strokes that should be purely Hamiltonian.
    pub fn isolated(label: BathRole) -> Self {
        BathSpec {
            kappa: [T::zero(); 4],
            label,
            frame: BathFrame::Bare,
        }
    }

    pub fn with_frame(mut self, frame: BathFrame) -> Self {
        self.frame = frame;
        self
    }

    pub fn total_rate(&self) -> T {
        self.kappa.iter().copied().sum()
    }

    /// `(μ, μ′)` when the rates have the Ising-preset pattern.
    pub fn tim_rates(&self) -> Option<(T, T)> {
        let [k1, k2, k3, k4] = self.kappa;
        (k1 == k3 && k2 == k4).then_some((k1, k2))
    }
}

/// `[c_k, c_k†, c_{-k}, c_{-k}†]` in the fixed occupation basis.
pub fn jump_operators<T: Real>(sign: FermionSign) -> [CMat4<T>; 4] {
    let mut ck = CMat4::zeros();
    ck.0[0][1] = re(T::one());
    ck.0[2][3] = re(T::one());
    let mut cmk = CMat4::zeros();
    cmk.0[0][2] = re(T::one());
    cmk.0[1][3] = re(sign.value());
    [ck, ck.adjoint(), cmk, cmk.adjoint()]
}

/// Lindblad dissipator of one bath acting on one mode. Precomputes the jump
/// operators (rotated into the eigenframe if requested) and `L†L`.
#[derive(Clone, Debug)]
pub struct Dissipator<T> {
    channels: Vec<Channel<T>>,
    total_rate: T,
}

#[derive(Clone, Debug)]
struct Channel<T> {
    rate: T,
    op: CMat4<T>,
    op_adj: CMat4<T>,
    half_ldl: CMat4<T>,
}

impl<T: Real> Dissipator<T> {
    pub fn new(bath: &BathSpec<T>, mode: &ModeHamiltonian<T>, sign: FermionSign) -> Self {
        let ops = jump_operators::<T>(sign);
        let frame = match bath.frame {
            BathFrame::Bare => None,
            BathFrame::Eigenmode => Some(mode.eigenframe()),
        };
        let channels = bath
            .kappa
            .iter()
            .zip(ops)
            .filter(|(rate, _)| **rate > T::zero())
            .map(|(&rate, op)| {
                let op = match frame {
                    Some(w) => w * op * w.adjoint(),
                    None => op,
                };
                let op_adj = op.adjoint();
                Channel {
                    rate,
                    op,
                    op_adj,
                    half_ldl: (op_adj * op).scale_real(T::lit(0.5)),
                }
            })
            .collect();
        Dissipator {
            channels,
            total_rate: bath.total_rate(),
        }
    }

    pub fn total_rate(&self) -> T {
        self.total_rate
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// `Σ_j κ_j (L_j ρ L_j† − ½{L_j†L_j, ρ})`.
    pub fn apply(&self, rho: &CMat4<T>) -> CMat4<T> {
        let mut out = CMat4::zeros();
        for ch in &self.channels {
            let jump = ch.op * *rho * ch.op_adj;
            let anti = ch.half_ldl * *rho + *rho * ch.half_ldl;
            out += (jump - anti).scale_real(ch.rate);
        }
        out
    }
}
