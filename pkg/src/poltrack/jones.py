"""2x2 unitary Jones matrices, scalar- or sequence-valued."""

from dataclasses import dataclass

import numpy as np


@dataclass
class JonesMatrix:
    """Entries may be scalars or equal-length arrays (a matrix trajectory)."""

    m_vv: np.ndarray | complex
    m_vh: np.ndarray | complex
    m_hv: np.ndarray | complex
    m_hh: np.ndarray | complex

    @classmethod
    def from_angles(cls, alpha, phi1, phi2) -> "JonesMatrix":
        """Unitary channel matrix parameterised by rotation and phase angles."""
        c, s = np.cos(alpha), np.sin(alpha)
        e1, e2 = np.exp(1j * np.asarray(phi1)), np.exp(1j * np.asarray(phi2))
        return cls(m_vv=c * e1, m_vh=-s * e2, m_hv=s / e2, m_hh=c / e1)

    def apply(self, v, h):
        """Left-multiply a dual-polarization pair."""
        return self.m_vv * v + self.m_vh * h, self.m_hv * v + self.m_hh * h

    def hermitian(self) -> "JonesMatrix":
        return JonesMatrix(
            m_vv=np.conj(self.m_vv),
            m_vh=np.conj(self.m_hv),
            m_hv=np.conj(self.m_vh),
            m_hh=np.conj(self.m_hh),
        )

    def matmul(self, other: "JonesMatrix") -> "JonesMatrix":
        return JonesMatrix(
            m_vv=self.m_vv * other.m_vv + self.m_vh * other.m_hv,
            m_vh=self.m_vv * other.m_vh + self.m_vh * other.m_hh,
            m_hv=self.m_hv * other.m_vv + self.m_hh * other.m_hv,
            m_hh=self.m_hv * other.m_vh + self.m_hh * other.m_hh,
        )

    def unitarity_error(self) -> float:
        """Max absolute entry deviation of J J^dagger from the identity."""
        p = self.matmul(self.hermitian())
        return float(
            max(
                np.max(np.abs(p.m_vv - 1.0)),
                np.max(np.abs(p.m_hh - 1.0)),
                np.max(np.abs(p.m_vh)),
                np.max(np.abs(p.m_hv)),
            )
        )
