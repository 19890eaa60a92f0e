"""Gated recurrent units: a single-step reference cell and fast sequence kernels.

Gate equations, per hidden unit (biases added to the textbook form)::

    z  = sigmoid(W_z x + U_z h_prev + b_z)
    r  = sigmoid(W_r x + U_r h_prev + b_r)
    hc = tanh(W x + r * (U h_prev) + b)
    h  = (1 - z) * h_prev + z * hc

The sequence kernels work time-major on a whole batch.  Gate weights are
stacked in the order (z, r, candidate) so one matmul serves all three.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..errors import ContractError
from ._fastmath import JIT, fsigmoid, ftanh

GATE_NAMES = ("W", "W_z", "W_r", "U", "U_z", "U_r", "b", "b_z", "b_r")


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class GruLayerParams:
    W: np.ndarray
    W_z: np.ndarray
    W_r: np.ndarray
    U: np.ndarray
    U_z: np.ndarray
    U_r: np.ndarray
    b: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.U.shape[0]

    @property
    def input_size(self) -> int:
        return self.W.shape[1]

    @classmethod
    def from_dict(cls, d: dict, prefix: str = "") -> "GruLayerParams":
        return cls(**{k: d[prefix + k] for k in GATE_NAMES})

    def to_dict(self, prefix: str = "") -> dict:
        return {prefix + k: getattr(self, k) for k in GATE_NAMES}

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator) -> "GruLayerParams":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
        si = 1.0 / np.sqrt(input_size)
        sh = 1.0 / np.sqrt(hidden_size)
        return cls(
            W=rng.uniform(-si, si, (hidden_size, input_size)),
            W_z=rng.uniform(-si, si, (hidden_size, input_size)),
            W_r=rng.uniform(-si, si, (hidden_size, input_size)),
            U=rng.uniform(-sh, sh, (hidden_size, hidden_size)),
            U_z=rng.uniform(-sh, sh, (hidden_size, hidden_size)),
            U_r=rng.uniform(-sh, sh, (hidden_size, hidden_size)),
            b=np.zeros(hidden_size),
            b_z=np.zeros(hidden_size),
            b_r=np.zeros(hidden_size),
        )


def gru_cell_step(p: GruLayerParams, x_t, h_prev, candidate: str = "tanh") -> np.ndarray:
    x_t = np.asarray(x_t, dtype=float)
    h_prev = np.asarray(h_prev, dtype=float)
    if x_t.shape[-1] != p.input_size or h_prev.shape[-1] != p.hidden_size:
        raise ContractError(
            f"gru step expects x of size {p.input_size} and h of size {p.hidden_size}, "
            f"got {x_t.shape} and {h_prev.shape}"
        )
    z = sigmoid(p.W_z @ x_t + p.U_z @ h_prev + p.b_z)
    r = sigmoid(p.W_r @ x_t + p.U_r @ h_prev + p.b_r)
    pre = p.W @ x_t + r * (p.U @ h_prev) + p.b
    hc = np.tanh(pre) if candidate == "tanh" else sigmoid(pre)
    return (1.0 - z) * h_prev + z * hc


# ---------------------------------------------------------------------------
# sequence kernels


@numba.njit(**JIT)
def _forward_kernel(xp, u_t, tanh_candidate, hs, zr, cs, uh):
    """xp: (T, B, 3H) input projections incl. biases; u_t: (H, 3H) stacked U^T.

    Fills the flat history buffers: states (T+1)*B*H, gates T*B*2H (z then r
    per row), candidates T*B*H and the recurrent candidate term U h_prev.
    """
    T, B, H3 = xp.shape
    H = H3 // 3
    H2 = 2 * H
    x = xp.ravel()
    for i in range(B * H):
        hs[i] = 0.0
    h = np.zeros((B, H))
    for t in range(T):
        hu = np.dot(h, u_t).ravel()
        xo = t * B * H3
        go = t * B * H2
        co = t * B * H
        for b in range(B):
            for j in range(H2):
                zr[go + b * H2 + j] = 0.5 * (x[xo + b * H3 + j] + hu[b * H3 + j])
        n2 = B * H2
        for i in range(n2):
            zr[go + i] = 0.5 + 0.5 * ftanh(zr[go + i])
        for b in range(B):
            for j in range(H):
                u = hu[b * H3 + H2 + j]
                uh[co + b * H + j] = u
                cs[co + b * H + j] = x[xo + b * H3 + H2 + j] + zr[go + b * H2 + H + j] * u
        n1 = B * H
        if tanh_candidate:
            for i in range(n1):
                cs[co + i] = ftanh(cs[co + i])
        else:
            for i in range(n1):
                cs[co + i] = 0.5 + 0.5 * ftanh(0.5 * cs[co + i])
        ho = (t + 1) * B * H
        for b in range(B):
            for j in range(H):
                hp = h[b, j]
                hn = hp + zr[go + b * H2 + j] * (cs[co + b * H + j] - hp)
                h[b, j] = hn
                hs[ho + b * H + j] = hn
    return hs, zr, cs, uh


@numba.njit(**JIT)
def _backward_kernel(dh_last, hs, zr, cs, uh, u_cat, tanh_candidate, dxp, drec):
    """Back-propagate a gradient on the final state through all steps.

    Fills d(xp) and d(recurrent pre-activation), both flat T*B*3H; weight
    gradients are reductions of these, done by the caller.
    """
    B, H = dh_last.shape
    H2 = 2 * H
    H3 = 3 * H
    T = dxp.size // (B * H3)
    dh = dh_last.copy()
    step = np.empty((B, H3))
    for t in range(T - 1, -1, -1):
        go = t * B * H2
        co = t * B * H
        ho = t * B * H
        xo = t * B * H3
        for b in range(B):
            for j in range(H):
                z = zr[go + b * H2 + j]
                r = zr[go + b * H2 + H + j]
                c = cs[co + b * H + j]
                g = dh[b, j]
                if tanh_candidate:
                    dpc = g * z * (1.0 - c * c)
                else:
                    dpc = g * z * c * (1.0 - c)
                dpz = g * (c - hs[ho + b * H + j]) * z * (1.0 - z)
                dpr = dpc * uh[co + b * H + j] * r * (1.0 - r)
                dxp[xo + b * H3 + j] = dpz
                dxp[xo + b * H3 + H + j] = dpr
                dxp[xo + b * H3 + H2 + j] = dpc
                step[b, j] = dpz
                step[b, H + j] = dpr
                step[b, H2 + j] = dpc * r
                dh[b, j] = g * (1.0 - z)
        back = np.dot(step, u_cat)
        for b in range(B):
            for j in range(H3):
                drec[xo + b * H3 + j] = step[b, j]
            for j in range(H):
                dh[b, j] += back[b, j]
    return dxp, drec, dh


def _stacked(p: GruLayerParams):
    w_cat = np.vstack([p.W_z, p.W_r, p.W])
    u_cat = np.ascontiguousarray(np.vstack([p.U_z, p.U_r, p.U]))
    b_cat = np.concatenate([p.b_z, p.b_r, p.b])
    return w_cat, u_cat, b_cat


class GruWorkspace:
    """Reusable kernel buffers for one (T, B, H) shape.

    Fresh multi-megabyte allocations every batch cost more in page faults than
    the arithmetic, so the trainer keeps one of these per direction.
    """

    def __init__(self, T: int, B: int, H: int):
        self.shape = (T, B, H)
        self.hs = np.empty((T + 1) * B * H)
        self.zr = np.empty(T * B * 2 * H)
        self.cs = np.empty(T * B * H)
        self.uh = np.empty(T * B * H)
        self.dxp = np.empty(T * B * 3 * H)
        self.drec = np.empty(T * B * 3 * H)

    @classmethod
    def ensure(cls, ws, T: int, B: int, H: int) -> "GruWorkspace":
        if ws is None or ws.shape != (T, B, H):
            return cls(T, B, H)
        return ws


@dataclass
class GruTrace:
    """Everything the backward pass needs; histories live in the workspace."""

    x: np.ndarray
    ws: GruWorkspace
    u_cat: np.ndarray
    tanh_candidate: bool

    @property
    def states(self) -> np.ndarray:
        T, B = self.x.shape[:2]
        return self.ws.hs.reshape(T + 1, B, -1)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def gru_sequence_forward(
    p: GruLayerParams, x: np.ndarray, candidate: str = "tanh", ws: GruWorkspace | None = None
) -> GruTrace:
    """Run a layer over time-major input ``x`` of shape (T, B, I)."""
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 3 or x.shape[2] != p.input_size:
        raise ContractError(f"expected (T, B, {p.input_size}) input, got {x.shape}")
    T, B, _ = x.shape
    ws = GruWorkspace.ensure(ws, T, B, p.hidden_size)
    w_cat, u_cat, b_cat = _stacked(p)
    xp = x @ w_cat.T
    xp += b_cat
    tanh_c = candidate == "tanh"
    _forward_kernel(xp, np.ascontiguousarray(u_cat.T), tanh_c, ws.hs, ws.zr, ws.cs, ws.uh)
    return GruTrace(x, ws, u_cat, tanh_c)


def gru_sequence_backward(trace: GruTrace, dh_last: np.ndarray) -> GruLayerParams:
    """Gradients of a loss whose only dependence is through the final state."""
    ws = trace.ws
    _backward_kernel(
        np.ascontiguousarray(dh_last, dtype=float),
        ws.hs,
        ws.zr,
        ws.cs,
        ws.uh,
        trace.u_cat,
        trace.tanh_candidate,
        ws.dxp,
        ws.drec,
    )
    T, B = trace.x.shape[:2]
    H = trace.u_cat.shape[1]
    H3 = 3 * H
    dxp = ws.dxp.reshape(T * B, H3)
    drec = ws.drec.reshape(T * B, H3)
    dw_cat = dxp.T @ trace.x.reshape(T * B, -1)
    du_cat = drec.T @ ws.hs[: T * B * H].reshape(T * B, H)
    db_cat = dxp.sum(axis=0)
    return GruLayerParams(
        W=dw_cat[2 * H :],
        W_z=dw_cat[:H],
        W_r=dw_cat[H : 2 * H],
        U=du_cat[2 * H :],
        U_z=du_cat[:H],
        U_r=du_cat[H : 2 * H],
        b=db_cat[2 * H :],
        b_z=db_cat[:H],
        b_r=db_cat[H : 2 * H],
    )
