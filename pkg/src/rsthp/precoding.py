"""Precoder construction for the downlink schemes under comparison.

Supported schemes: zero-forcing (zf), centralized and decentralized
Tomlinson-Harashima (cthp, dthp), zero-forcing dirty paper coding
(zf-dpc, the dthp structure without the modulo power penalty), and the
rate-splitting variant of each (rs-linear, cthp-rs, dthp-rs,
zf-dpc-rs). A rate-splitting scheme spends a fraction of the power
budget on a common stream beamformed along the dominant right singular
vector of the channel estimate; the remainder feeds the base scheme.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import SchemeMismatchError
from .linalg import LqFactors, dominant_right_singular_vector, lq_decompose, pseudo_inverse

_BASES = ("zf", "cthp", "dthp", "zf-dpc")


@dataclass(frozen=True)
class SchemeTag:
    """Scheme identity: a base precoder plus a rate-splitting flag."""

    base: str
    rs: bool = False

    def __post_init__(self):
        if self.base not in _BASES:
            raise SchemeMismatchError(f"unknown base scheme {self.base!r}")

    @property
    def tag(self) -> str:
        """Canonical text form used by the CLI and in outputs."""
        if self.base == "zf":
            return "rs-linear" if self.rs else "zf"
        return f"{self.base}-rs" if self.rs else self.base

    @property
    def is_thp(self) -> bool:
        """True for schemes built on the triangular feedback structure."""
        return self.base in ("cthp", "dthp", "zf-dpc")

    @property
    def uses_power_loss(self) -> bool:
        """True when the modulo power penalty applies (not for zf-dpc)."""
        return self.base in ("cthp", "dthp")

    def __str__(self) -> str:
        return self.tag


def parse_scheme_tag(text: str) -> SchemeTag:
    """Parse a scheme tag like "dthp-rs" or "rs-linear"."""
    norm = text.strip().lower()
    for candidate in ALL_SCHEME_TAGS:
        if candidate.tag == norm:
            return candidate
    known = ", ".join(s.tag for s in ALL_SCHEME_TAGS)
    raise SchemeMismatchError(f"unknown scheme {text!r} (known: {known})")


ALL_SCHEME_TAGS = (
    SchemeTag("zf"),
    SchemeTag("zf", rs=True),
    SchemeTag("cthp"),
    SchemeTag("dthp"),
    SchemeTag("cthp", rs=True),
    SchemeTag("dthp", rs=True),
    SchemeTag("zf-dpc"),
    SchemeTag("zf-dpc", rs=True),
)


@dataclass(frozen=True)
class PrecoderSet:
    """Everything the transmitter side derives from one channel estimate.

    For THP-family schemes p_private is the effective linear map from
    feedback-equalized symbols to antennas (scaling beta included);
    f_matrix, g_diag, b_matrix are the feedforward, receiver gain and
    feedback factors, and lq holds the underlying triangular
    factorization. Linear zero-forcing fills only p_private. p_common is
    None when the power split is zero.
    """

    scheme: SchemeTag
    p_common: np.ndarray | None
    p_private: np.ndarray
    f_matrix: np.ndarray | None
    g_diag: np.ndarray | None
    b_matrix: np.ndarray | None
    beta: float | None
    lq: LqFactors | None
    h_est: np.ndarray
    e_tr: float
    e_private: float
    power_loss: float
    lambda_eff: float
    power_split: float

    @property
    def n_users(self) -> int:
        return self.h_est.shape[0]


def build_precoders(
    h_est: np.ndarray,
    scheme: SchemeTag,
    e_tr: float,
    power_loss: float,
    power_split: float = 0.0,
) -> PrecoderSet:
    """Build the full precoder set for one scheme on one channel estimate.

    Args:
        h_est: (K, N) downlink channel estimate, row k belonging to user k.
        scheme: which precoder family to build.
        e_tr: total transmit power budget (noise variance is 1 elsewhere,
            so this doubles as the SNR on a linear scale).
        power_loss: modulo precoding power loss factor in (0, 1]; ignored
            by zf and zf-dpc, which use 1.
        power_split: fraction of e_tr assigned to the common stream.
            Must be 0 for non-rate-splitting schemes.

    Raises:
        SchemeMismatchError: power_split > 0 on a non-RS scheme.
        ValueError: power_split or power_loss out of range.
    """
    h_est = np.asarray(h_est, dtype=complex)
    n_users = h_est.shape[0]
    if not 0.0 <= power_split < 1.0:
        raise ValueError(f"power_split must be in [0, 1), got {power_split}")
    if not 0.0 < power_loss <= 1.0:
        raise ValueError(f"power_loss must be in (0, 1], got {power_loss}")
    if power_split > 0.0 and not scheme.rs:
        raise SchemeMismatchError(
            f"scheme {scheme.tag} has no common stream, power_split must be 0"
        )

    if power_split > 0.0:
        direction = dominant_right_singular_vector(h_est)
        p_common = np.sqrt(power_split * e_tr) * direction
        e_private = e_tr - float(np.real(np.vdot(p_common, p_common)))
    else:
        p_common = None
        e_private = float(e_tr)

    lambda_eff = power_loss if scheme.uses_power_loss else 1.0

    if scheme.base == "zf":
        pinv = pseudo_inverse(h_est)
        columns = pinv / np.linalg.norm(pinv, axis=0, keepdims=True)
        p_private = columns * np.sqrt(e_private / n_users)
        return PrecoderSet(
            scheme=scheme,
            p_common=p_common,
            p_private=p_private,
            f_matrix=None,
            g_diag=None,
            b_matrix=None,
            beta=None,
            lq=None,
            h_est=h_est,
            e_tr=float(e_tr),
            e_private=e_private,
            power_loss=float(power_loss),
            lambda_eff=lambda_eff,
            power_split=float(power_split),
        )

    lq = lq_decompose(h_est)
    f_matrix = lq.q_matrix.conj().T
    diag = lq.diagonal
    g_diag = 1.0 / diag

    if scheme.base == "cthp":
        # Unit-diagonal feedback on the right: B = L diag(g). The
        # per-user gains fold into the transmitter, so beta divides the
        # power budget by the accumulated inverse-gain energy.
        b_matrix = lq.l_matrix * g_diag[np.newaxis, :]
        beta = float(np.sqrt(lambda_eff * e_private / np.sum(g_diag**2)))
        feedforward = f_matrix * g_diag[np.newaxis, :]
    else:
        # dthp and zf-dpc: unit-diagonal feedback on the left,
        # B = diag(g) L, receiver gains stay at the users.
        b_matrix = lq.l_matrix * g_diag[:, np.newaxis]
        beta = float(np.sqrt(lambda_eff * e_private / n_users))
        feedforward = f_matrix

    p_private = beta * feedforward @ np.linalg.inv(b_matrix)
    return PrecoderSet(
        scheme=scheme,
        p_common=p_common,
        p_private=p_private,
        f_matrix=f_matrix,
        g_diag=g_diag,
        b_matrix=b_matrix,
        beta=beta,
        lq=lq,
        h_est=h_est,
        e_tr=float(e_tr),
        e_private=e_private,
        power_loss=float(power_loss),
        lambda_eff=lambda_eff,
        power_split=float(power_split),
    )


def effective_transmit_power(precoders: PrecoderSet) -> float:
    """Average radiated power of the transmit chain for this precoder set.

    For linear zero-forcing the private symbols are unit power, so the
    private part is the Frobenius energy of p_private. For THP schemes
    the signal actually radiated is beta * feedforward * w where w is the
    feedback output with per-symbol power 1 / lambda_eff; the feedback
    inverse never touches the air, so its energy does not count.
    """
    common = 0.0
    if precoders.p_common is not None:
        common = float(np.real(np.vdot(precoders.p_common, precoders.p_common)))
    if precoders.scheme.base == "zf":
        private = float(np.sum(np.abs(precoders.p_private) ** 2))
    else:
        if precoders.scheme.base == "cthp":
            feedforward = precoders.f_matrix * precoders.g_diag[np.newaxis, :]
        else:
            feedforward = precoders.f_matrix
        private = (
            precoders.beta**2
            / precoders.lambda_eff
            * float(np.sum(np.abs(feedforward) ** 2))
        )
    return common + private
