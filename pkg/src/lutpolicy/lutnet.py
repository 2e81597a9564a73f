"""Trainable lookup-table networks with analytic gradients.

A layer is a bank of k-input LUTs. Each LUT owns a table of 2**k logits and
an interconnect logit row per input slot that selects (by argmax) one output
bit of the previous layer. Two evaluation modes exist:

* hard: tables binarized at logit 0, signals are bits. This is the deployed
  semantics and is pure integer/bit work.
* relaxed: table entries are sigmoids and the layer output is the exact
  expectation of the hard output under independent Bernoulli input bits.
  The expectation is multilinear in the input probabilities, so its
  gradients are available in closed form and are computed here without any
  autodiff framework.

Interconnect selections are discrete. Training uses a straight-through
scheme: the forward pass commits to the argmax selection, while the
backward pass differentiates as if the selected input were the
softmax-weighted mixture of all candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, encoding
from .errors import ConfigError, DomainError, ShapeError, StateError


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def addr(bits) -> int:
    """Integer address of a k-bit vector; the first entry is the least
    significant bit."""
    value = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise DomainError(f"address bits must be 0 or 1, got {b!r}")
        value |= int(b) << i
    return value


class LutLayer:
    """One bank of k-input LUTs with learnable tables and interconnect."""

    def __init__(self, table_logits: np.ndarray, interconnect_logits: np.ndarray,
                 trainable_interconnect: bool = True):
        table_logits = np.asarray(table_logits, dtype=np.float64)
        interconnect_logits = np.asarray(interconnect_logits, dtype=np.float64)
        width, entries = table_logits.shape
        arity = entries.bit_length() - 1
        if 1 << arity != entries:
            raise ConfigError(f"table entry count {entries} is not a power of two")
        # policies enforce arity in [2, 6]; a bare layer admits arity 1 so the
        # degenerate linear-interpolation case stays expressible
        if not 1 <= arity <= 6:
            raise ConfigError(f"LUT arity must lie in [1, 6], got {arity}")
        if interconnect_logits.shape[:2] != (width, arity):
            raise ConfigError(
                f"interconnect shape {interconnect_logits.shape} does not match "
                f"width {width} and arity {arity}")
        self.table_logits = table_logits
        self.interconnect_logits = interconnect_logits
        self.trainable_interconnect = trainable_interconnect
        self._cache = None

    @property
    def width(self) -> int:
        return self.table_logits.shape[0]

    @property
    def arity(self) -> int:
        return self.table_logits.shape[1].bit_length() - 1

    @property
    def fan_in(self) -> int:
        return self.interconnect_logits.shape[2]

    def selections(self) -> np.ndarray:
        """Hard interconnect: argmax per input slot, ties to the lowest index."""
        return np.argmax(self.interconnect_logits, axis=2)

    def hard_tables(self) -> np.ndarray:
        """Binarized tables: logit >= 0 maps to 1."""
        return (self.table_logits >= 0.0).astype(np.uint8)


def _as_batch(x: np.ndarray, fan_in: int, what: str):
    x = np.asarray(x)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != fan_in:
        raise ShapeError(f"{what} has shape {x.shape}, expected (batch, {fan_in})")
    return x, squeeze


def hard_forward(layer: LutLayer, bits: np.ndarray) -> np.ndarray:
    """Discrete evaluation: each LUT outputs its addressed hard table bit."""
    bits, squeeze = _as_batch(bits, layer.fan_in, "input bits")
    sel = layer.selections()
    idx = _addresses(bits, sel)
    out = layer.hard_tables()[np.arange(layer.width), idx]
    return out[0] if squeeze else out


def _addresses(bits: np.ndarray, sel: np.ndarray) -> np.ndarray:
    """(batch, width) integer addresses from selected input bits, LSB first."""
    gathered = bits[:, sel].astype(np.int64)  # (batch, width, arity)
    idx = gathered[..., 0].copy()
    for j in range(1, sel.shape[1]):
        idx += gathered[..., j] << j
    return idx


@dataclass
class _RelaxedCache:
    probs: np.ndarray          # layer input (batch, fan_in)
    sel: np.ndarray            # (width, arity)
    selected: np.ndarray       # (batch, width, arity)
    table_probs: np.ndarray    # sigmoid(table_logits), (width, 2**arity)
    binary: bool = False
    addresses: np.ndarray | None = None  # hard addresses when binary


# Fused kernels and the numpy reference compute identical quantities; the
# flag exists so tests can force the reference path.
USE_KERNELS = _kernels.HAVE_NUMBA


def _expect_forward(p: np.ndarray, table_probs: np.ndarray) -> np.ndarray:
    """Reference forward: materialize the address distribution and contract."""
    weights, _ = _address_weights(p, with_prefixes=False)
    return np.einsum("bwa,wa->bw", weights, table_probs, optimize=True)


def _address_weights(p: np.ndarray, with_prefixes: bool):
    """(batch, width, 2**k) address probabilities by doubling over slots."""
    batch, width, k = p.shape
    weights = np.empty((batch, width, 1 << k), dtype=np.float64)
    weights[..., 0] = 1.0
    prefixes = [] if with_prefixes else None
    size = 1
    for j in range(k):
        if with_prefixes:
            prefixes.append(weights[..., :size].copy())
        pj = p[..., j][..., None]
        weights[..., size:2 * size] = weights[..., :size] * pj
        weights[..., :size] *= 1.0 - pj
        size *= 2
    return weights, prefixes


def _expect_backward(p: np.ndarray, table_probs: np.ndarray, upstream: np.ndarray):
    """Reference backward: batch-summed address weights and slot derivatives.

    The slot derivative uses the multilinearity of the expectation: with
    F_{j+1} the partial expectation over slots > j, d out / d p_j =
    sum_lo prefix_j[lo] * (F_{j+1}[lo + 2^j] - F_{j+1}[lo]).
    """
    k = p.shape[2]
    weights, prefixes = _address_weights(p, with_prefixes=True)
    d_weights = np.einsum("bw,bwa->wa", upstream, weights, optimize=True)
    dp = np.empty(p.shape, dtype=np.float64)
    partial = np.broadcast_to(table_probs, weights.shape)
    for j in range(k - 1, -1, -1):
        half = 1 << j
        low, high = partial[..., :half], partial[..., half:]
        dp[..., j] = np.sum(prefixes[j] * (high - low), axis=-1)
        pj = p[..., j][..., None]
        partial = low * (1.0 - pj) + high * pj
    return d_weights, dp


def relaxed_forward(layer: LutLayer, probs: np.ndarray,
                    needs_grad: bool = True) -> np.ndarray:
    """Exact expectation of the LUT outputs under Bernoulli input bits.

    For LUT i with selected input probabilities p_1..p_k and table
    probability vector t = sigmoid(theta_i):

        out_i = sum_a t[a] * prod_j p_j**a_j * (1-p_j)**(1-a_j)

    Inputs that are exactly 0/1 collapse the expectation to a single table
    read, which `LutPolicy` exploits for the first layer; this general
    routine keeps the full address distribution so gradients for deeper
    layers stay exact. Stores intermediates on the layer for `backward`.
    """
    probs, squeeze = _as_batch(probs, layer.fan_in, "input probabilities")
    probs = probs.astype(np.float64, copy=False)
    if probs.size and (probs.min() < 0.0 or probs.max() > 1.0):
        raise DomainError("input probabilities must lie in [0, 1]")
    sel = layer.selections()
    p = np.ascontiguousarray(probs[:, sel])  # (batch, width, arity)
    table_probs = sigmoid(layer.table_logits)

    if USE_KERNELS:
        out = np.empty((probs.shape[0], layer.width), dtype=np.float64)
        _kernels.expect_forward(p, table_probs, out)
    else:
        out = _expect_forward(p, table_probs)

    if needs_grad:
        layer._cache = _RelaxedCache(probs=probs, sel=sel, selected=p,
                                     table_probs=table_probs)
    else:
        layer._cache = None
    return out[0] if squeeze else out


def relaxed_forward_binary(layer: LutLayer, bits: np.ndarray,
                           needs_grad: bool = True) -> np.ndarray:
    """Relaxed evaluation specialized to exactly-binary inputs.

    With degenerate Bernoulli inputs the address distribution is a point
    mass, so the expectation is one sigmoid table read per LUT. Numerically
    identical to `relaxed_forward` on the same inputs, at a fraction of the
    cost. Used for the encoded observation entering the first layer.
    """
    bits, squeeze = _as_batch(bits, layer.fan_in, "input bits")
    sel = layer.selections()
    idx = _addresses(bits, sel)
    table_probs = sigmoid(layer.table_logits)
    out = table_probs[np.arange(layer.width), idx]
    if needs_grad:
        asfloat = bits.astype(np.float64, copy=False)
        layer._cache = _RelaxedCache(probs=asfloat, sel=sel, selected=asfloat[:, sel],
                                     table_probs=table_probs, binary=True, addresses=idx)
    else:
        layer._cache = None
    return out[0] if squeeze else out


@dataclass
class LayerGrads:
    table_logits: np.ndarray
    interconnect_logits: np.ndarray | None
    input_probs: np.ndarray


def backward(layer: LutLayer, upstream: np.ndarray, backend: str = "exact",
             need_input_grad: bool = True) -> LayerGrads:
    """Gradients of the cached relaxed forward pass.

    * table logits: exact gradient through the sigmoid (the address
      distribution is the coefficient of each table probability).
    * input probabilities: exact multilinear derivative, routed to the
      argmax-selected sources.
    * interconnect logits: straight-through; the derivative of the output
      w.r.t. the selected probability is distributed over all candidates
      with softmax(logits) weights.

    backend="efd" swaps the exact address distribution for a geometric
    Hamming-neighborhood weighting around the rounded hard address (an
    approximate finite-difference scheme; see README). Raises StateError if
    no forward intermediates are cached.
    """
    cache = layer._cache
    if cache is None:
        raise StateError("backward requires a preceding relaxed_forward call")
    if backend not in ("exact", "efd"):
        raise ConfigError(f"unknown gradient backend {backend!r}")
    upstream = np.asarray(upstream, dtype=np.float64)
    squeeze = upstream.ndim == 1
    if squeeze:
        upstream = upstream[None, :]
    batch = cache.probs.shape[0]
    if upstream.shape != (batch, layer.width):
        raise ShapeError(f"upstream gradient has shape {upstream.shape}, "
                         f"expected ({batch}, {layer.width})")
    k = layer.arity
    n_addr = 1 << k
    tp = cache.table_probs

    if backend == "efd":
        u, dp = _efd_weights_and_dp(layer, cache)
        weights = np.einsum("bw,bwa->wa", upstream, u, optimize=True)
    elif cache.binary:
        idx = cache.addresses
        flat = (np.arange(layer.width)[None, :] * n_addr + idx).ravel()
        weights = np.bincount(flat, weights=upstream.ravel(),
                              minlength=layer.width * n_addr)
        weights = weights.reshape(layer.width, n_addr)
        # d out / d p_j at a binary point: table difference between the two
        # addresses reachable by flipping bit j.
        dp = np.empty((batch, layer.width, k), dtype=np.float64)
        rows = np.arange(layer.width)[None, :]
        all_addr = np.arange(n_addr)
        for j in range(k):
            diff_j = tp[:, all_addr | (1 << j)] - tp[:, all_addr & ~(1 << j)]
            dp[..., j] = diff_j[rows, idx]
    elif USE_KERNELS:
        weights = np.empty((layer.width, n_addr), dtype=np.float64)
        dp = np.empty((batch, layer.width, k), dtype=np.float64)
        _kernels.expect_backward(cache.selected, tp, np.ascontiguousarray(upstream),
                                 weights, dp)
    else:
        weights, dp = _expect_backward(cache.selected, tp, upstream)

    d_table = weights * tp * (1.0 - tp)
    q = upstream[..., None] * dp  # (batch, width, arity)

    if need_input_grad:
        # exact input gradient: route to the argmax-selected sources
        flat_idx = (cache.sel.ravel()[None, :]
                    + (np.arange(batch) * layer.fan_in)[:, None])
        d_input = np.bincount(flat_idx.ravel(), weights=q.reshape(batch, -1).ravel(),
                              minlength=batch * layer.fan_in).reshape(batch, layer.fan_in)
    else:
        d_input = None

    d_icl = None
    if layer.trainable_interconnect:
        logits = layer.interconnect_logits
        shifted = logits - logits.max(axis=2, keepdims=True)
        soft = np.exp(shifted)
        soft /= soft.sum(axis=2, keepdims=True)  # (width, arity, fan_in)
        wk = layer.width * k
        soft2 = soft.reshape(wk, layer.fan_in)
        # the batch contraction is the dominant cost; single precision is
        # ample for a straight-through surrogate
        q2 = q.reshape(batch, wk).astype(np.float32)
        g1 = (q2.T @ cache.probs.astype(np.float32)).astype(np.float64)
        # sum_b q * p_mix collapses onto g1: g2 = sum_c soft * g1
        g2 = np.sum(soft2 * g1, axis=1)
        d_icl = (soft2 * (g1 - g2[:, None])).reshape(layer.width, k, layer.fan_in)

    if d_input is not None and squeeze:
        d_input = d_input[0]
    return LayerGrads(table_logits=d_table, interconnect_logits=d_icl,
                      input_probs=d_input)


def _efd_weights_and_dp(layer: LutLayer, cache: _RelaxedCache):
    """Geometric Hamming-neighborhood address weighting (approximate backend).

    The hard address of each LUT (inputs rounded to bits) receives weight 1,
    and every other address weight decays by 1/2 per differing bit; weights
    are normalized to sum to one. Table gradients use these weights in place
    of the exact address distribution, and input-slot derivatives aggregate
    bit-flip table differences with the same weighting.
    """
    k = layer.arity
    n_addr = 1 << k
    tp = cache.table_probs
    if cache.binary:
        idx = cache.addresses
    else:
        hard_bits = (cache.selected >= 0.5).astype(np.int64)
        idx = (hard_bits << np.arange(k)).sum(axis=-1)
    all_addr = np.arange(n_addr)
    hamming = np.zeros((idx.shape[0], layer.width, n_addr), dtype=np.int64)
    diff = idx[..., None] ^ all_addr
    for j in range(k):
        hamming += (diff >> j) & 1
    u = np.ldexp(1.0, -hamming)
    u /= u.sum(axis=-1, keepdims=True)  # (batch, width, n_addr)
    dp = np.empty((idx.shape[0], layer.width, k), dtype=np.float64)
    for j in range(k):
        # summing u(a) * (T[a|bit] - T[a&~bit]) over all a weights each
        # bit-j pair by u(a0) + u(a1); for k=1 this reduces to T1 - T0
        diff_tbl = tp[:, all_addr | (1 << j)] - tp[:, all_addr & ~(1 << j)]
        dp[..., j] = np.einsum("bwa,wa->bw", u, diff_tbl)
    return u, dp


@dataclass
class ActionHead:
    """Per-action affine map on normalized group sums.

    The final layer is split into equal contiguous groups, one per action
    dimension. z_d = mean(group_d) - 1/2 lies in [-1/2, 1/2]; the logit is
    l_d = exp(alpha_p_d) * z_d + beta_d. Exponentiating keeps the scale
    positive, and a small alpha_p at init keeps early actions near beta.
    """

    alpha_p: np.ndarray
    beta: np.ndarray
    group_size: int
    squash: str = "tanh"

    def __post_init__(self):
        if self.squash not in ("tanh", "identity"):
            raise ConfigError(f"unknown squash {self.squash!r}")
        if self.group_size < 1:
            raise ConfigError("group size must be >= 1")

    @property
    def d_act(self) -> int:
        return self.alpha_p.shape[0]

    def alpha(self) -> np.ndarray:
        return np.exp(self.alpha_p)


@dataclass
class _HeadCache:
    z: np.ndarray
    alpha: np.ndarray


def head_forward(final: np.ndarray, head: ActionHead, cache_out: list | None = None) -> np.ndarray:
    """Group-normalized sums through the per-action affine map."""
    final = np.asarray(final, dtype=np.float64)
    squeeze = final.ndim == 1
    if squeeze:
        final = final[None, :]
    width = final.shape[1]
    if width != head.d_act * head.group_size:
        raise ConfigError(f"final width {width} does not partition into "
                          f"{head.d_act} groups of {head.group_size}")
    z = final.reshape(final.shape[0], head.d_act, head.group_size).mean(axis=2) - 0.5
    alpha = head.alpha()
    logits = alpha * z + head.beta
    if cache_out is not None:
        cache_out.append(_HeadCache(z=z, alpha=alpha))
    return logits[0] if squeeze else logits


def head_backward(head: ActionHead, cache: _HeadCache, d_logits: np.ndarray):
    """Gradients of head_forward w.r.t. final bits, alpha_p, and beta."""
    d_logits = np.asarray(d_logits, dtype=np.float64)
    dz = d_logits * cache.alpha
    d_final = np.repeat(dz / head.group_size, head.group_size, axis=1)
    d_alpha_p = np.sum(d_logits * cache.alpha * cache.z, axis=0)
    d_beta = np.sum(d_logits, axis=0)
    return d_final, d_alpha_p, d_beta


@dataclass
class PolicyConfig:
    """Shape of the LUT policy network."""

    n_layers: int = 2
    width: int = 1024
    arity: int = 6
    bits: int = 63
    alpha_p_init: float = -3.0
    squash: str = "tanh"
    trainable_interconnect: bool | tuple = True
    gradient_backend: str = "exact"

    def interconnect_flags(self) -> list:
        if isinstance(self.trainable_interconnect, bool):
            return [self.trainable_interconnect] * self.n_layers
        flags = list(self.trainable_interconnect)
        if len(flags) != self.n_layers:
            raise ConfigError("one trainable-interconnect flag per layer required")
        return flags

    def validate(self):
        if self.n_layers < 1:
            raise ConfigError("need at least one LUT layer")
        if not 2 <= self.arity <= 6:
            raise ConfigError(f"LUT arity must lie in [2, 6], got {self.arity}")
        if self.bits % 2 == 0 or self.bits < 3:
            raise ConfigError(f"thermometer bits must be odd and >= 3, got {self.bits}")
        if self.width < 1:
            raise ConfigError("layer width must be positive")
        if self.gradient_backend not in ("exact", "efd"):
            raise ConfigError(f"unknown gradient backend {self.gradient_backend!r}")
        self.interconnect_flags()


class LutPolicy:
    """Thermometer encoder + LUT layers + action head.

    The only trainable deployment artifact. `mode` selects between the
    relaxed (trainable) semantics and the hard (deployment) semantics for
    `policy_action`.
    """

    def __init__(self, spec: encoding.ThermometerSpec, stats: encoding.RunningStats,
                 layers: list, head: ActionHead, d_in: int, d_act: int,
                 mode: str = "relaxed", gradient_backend: str = "exact"):
        if layers[0].fan_in != spec.bits * d_in:
            raise ConfigError("first layer fan-in must equal bits * d_in")
        for prev, cur in zip(layers, layers[1:]):
            if cur.fan_in != prev.width:
                raise ConfigError("layer widths must chain")
        if layers[-1].width != head.d_act * head.group_size:
            raise ConfigError("final layer width must equal d_act * group size")
        self.spec = spec
        self.stats = stats
        self.layers = layers
        self.head = head
        self.d_in = d_in
        self.d_act = d_act
        self.mode = mode
        self.gradient_backend = gradient_backend
        self._head_cache = None

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def set_mode(self, mode: str):
        if mode not in ("relaxed", "hard"):
            raise ConfigError(f"unknown mode {mode!r}")
        self.mode = mode

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        return encoding.normalize_clip(obs, self.stats)

    def logits_hard(self, normalized: np.ndarray) -> np.ndarray:
        bits = encoding.encode(normalized, self.spec)
        for layer in self.layers:
            bits = hard_forward(layer, bits)
        return head_forward(bits.astype(np.float64), self.head)

    def logits_relaxed(self, normalized: np.ndarray, needs_grad: bool = False) -> np.ndarray:
        bits = encoding.encode(normalized, self.spec).astype(np.float64)
        signal = relaxed_forward_binary(self.layers[0], bits, needs_grad=needs_grad)
        for layer in self.layers[1:]:
            signal = relaxed_forward(layer, signal, needs_grad=needs_grad)
        cache_out = [] if needs_grad else None
        logits = head_forward(signal, self.head, cache_out=cache_out)
        self._head_cache = cache_out[0] if needs_grad else None
        return logits

    def logits(self, normalized: np.ndarray, needs_grad: bool = False) -> np.ndarray:
        if self.mode == "hard":
            return self.logits_hard(normalized)
        return self.logits_relaxed(normalized, needs_grad=needs_grad)

    def squash(self, logits: np.ndarray) -> np.ndarray:
        if self.head.squash == "tanh":
            return np.tanh(logits)
        return logits

    def backward(self, d_logits: np.ndarray) -> "PolicyGrads":
        """Backpropagate a gradient on the pre-squash logits through the
        cached relaxed forward pass."""
        if self._head_cache is None:
            raise StateError("backward requires logits_relaxed(needs_grad=True)")
        d_final, d_alpha_p, d_beta = head_backward(self.head, self._head_cache, d_logits)
        upstream = d_final
        layer_grads = []
        for i in range(len(self.layers) - 1, -1, -1):
            g = backward(self.layers[i], upstream, backend=self.gradient_backend,
                         need_input_grad=i > 0)
            layer_grads.append(g)
            upstream = g.input_probs
        layer_grads.reverse()
        return PolicyGrads(layers=layer_grads, alpha_p=d_alpha_p, beta=d_beta)

    def parameters(self) -> list:
        """(name, array) pairs of trainable parameters, in a fixed order."""
        params = []
        for i, layer in enumerate(self.layers):
            params.append((f"layer{i}.table_logits", layer.table_logits))
            if layer.trainable_interconnect:
                params.append((f"layer{i}.interconnect_logits", layer.interconnect_logits))
        params.append(("head.alpha_p", self.head.alpha_p))
        params.append(("head.beta", self.head.beta))
        return params

    def gradients_as_dict(self, grads: "PolicyGrads") -> dict:
        out = {}
        for i, g in enumerate(grads.layers):
            out[f"layer{i}.table_logits"] = g.table_logits
            if g.interconnect_logits is not None:
                out[f"layer{i}.interconnect_logits"] = g.interconnect_logits
        out["head.alpha_p"] = grads.alpha_p
        out["head.beta"] = grads.beta
        return out


@dataclass
class PolicyGrads:
    layers: list
    alpha_p: np.ndarray
    beta: np.ndarray


def policy_action(policy: LutPolicy, obs: np.ndarray) -> np.ndarray:
    """Deterministic action for a raw observation (mean action; no noise)."""
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape[-1] != policy.d_in:
        raise ShapeError(f"observation dim {obs.shape[-1]} != policy d_in {policy.d_in}")
    normalized = policy.normalize(obs)
    return policy.squash(policy.logits(normalized))


def init_policy(d_in: int, d_act: int, config: PolicyConfig, seed: int) -> LutPolicy:
    """Fresh policy, reproducible from the seed.

    Table logits ~ U(-1, 1), interconnect logits ~ U(0, 1); the final layer
    is padded up to the next multiple of d_act so groups tile it exactly.
    """
    config.validate()
    if d_in < 1 or d_act < 1:
        raise ConfigError("d_in and d_act must be positive")
    rng = np.random.default_rng(seed)
    spec = encoding.compute_thresholds(config.bits)
    stats = encoding.RunningStats.for_dim(d_in)
    widths = [config.width] * config.n_layers
    widths[-1] = -(-config.width // d_act) * d_act
    fan_in = config.bits * d_in
    layers = []
    for width, trainable in zip(widths, config.interconnect_flags()):
        table = rng.uniform(-1.0, 1.0, size=(width, 1 << config.arity))
        icl = rng.uniform(0.0, 1.0, size=(width, config.arity, fan_in))
        layers.append(LutLayer(table, icl, trainable_interconnect=trainable))
        fan_in = width
    head = ActionHead(alpha_p=np.full(d_act, config.alpha_p_init),
                      beta=np.zeros(d_act), group_size=widths[-1] // d_act,
                      squash=config.squash)
    return LutPolicy(spec, stats, layers, head, d_in=d_in, d_act=d_act,
                     gradient_backend=config.gradient_backend)
