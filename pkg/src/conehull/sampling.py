"""Seeded draws from the uniform distribution on a body and from the cone
probability measure on its boundary.

Randomness comes from Philox (counter-based) streams keyed by a master seed
and a stream id, so a trial's draws depend only on ``(seed, stream_id)`` and
never on scheduling.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .body import Body, LinearImage, LpBall, ScaledL1, SymmetricHPolytope, body_from_dict
from .errors import AcceptanceTooLow

UNIFORM = "uniform"
CONE = "cone"

MIN_ACCEPTANCE = 1e-4


def _stream_key(stream_id) -> tuple:
    if isinstance(stream_id, (tuple, list)):
        return tuple(int(s) for s in stream_id)
    return (int(stream_id),)


def make_rng(seed: int, stream_id=0) -> np.random.Generator:
    """Independent Philox stream for ``(seed, stream_id)``; ``stream_id`` may be a tuple."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=_stream_key(stream_id))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class SampleBatch:
    distribution: str
    body: Body
    points: np.ndarray
    seed: int | None = None
    stream_id: int | tuple | None = None
    redraws: int = 0
    approximate: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def header(self) -> dict:
        sid = self.stream_id
        return {
            "distribution": self.distribution,
            "body": self.body.to_dict(),
            "seed": self.seed,
            "stream": list(sid) if isinstance(sid, tuple) else sid,
            "count": len(self),
            "redraws": self.redraws,
            "approximate": self.approximate,
            **({"meta": self.meta} if self.meta else {}),
        }

    def to_csv(self, path_or_buf=None) -> str | None:
        """One point per row, preceded by a ``# {json}`` header line."""
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
        np.savetxt(buf, self.points, delimiter=",", fmt="%.17g")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path_or_text) -> "SampleBatch":
        if "\n" in str(path_or_text):
            text = str(path_or_text)
        else:
            with open(path_or_text) as fh:
                text = fh.read()
        first, _, rest = text.partition("\n")
        if not first.startswith("# "):
            raise ValueError("missing JSON header line")
        head = json.loads(first[2:])
        pts = np.loadtxt(io.StringIO(rest), delimiter=",", ndmin=2)
        sid = head.get("stream")
        return cls(
            head["distribution"],
            body_from_dict(head["body"]),
            pts,
            head.get("seed"),
            tuple(sid) if isinstance(sid, list) else sid,
            head.get("redraws", 0),
            head.get("approximate", False),
            head.get("meta", {}),
        )


# --------------------------------------------------------------------------
# uniform in K


def _uniform_lp(p: float, n: int, count: int, rng) -> np.ndarray:
    if math.isinf(p):
        return rng.uniform(-1.0, 1.0, size=(count, n))
    # p-generalized normals plus an independent Exp(1) slack coordinate
    mag = rng.standard_gamma(1.0 / p, size=(count, n)) ** (1.0 / p)
    sign = rng.integers(0, 2, size=(count, n)) * 2 - 1
    g = sign * mag
    e = rng.standard_exponential(size=count)
    r = (np.sum(mag**p, axis=1) + e) ** (1.0 / p)
    return g / r[:, None]


def _uniform_hpoly(body: SymmetricHPolytope, count: int, rng, hit_and_run: bool):
    n = body.dim
    h = body.bounding_box()
    acceptance = body.volume() / float(np.prod(2.0 * h))
    if acceptance >= MIN_ACCEPTANCE:
        out = []
        got = 0
        batch = max(64, int(1.2 * count / acceptance))
        while got < count:
            cand = rng.uniform(-1.0, 1.0, size=(batch, n)) * h
            cand = cand[body.norm(cand) <= 1.0]
            out.append(cand)
            got += cand.shape[0]
        return np.vstack(out)[:count], False, {"acceptance": acceptance}
    if not hit_and_run:
        raise AcceptanceTooLow(f"rejection acceptance {acceptance:.2e} < {MIN_ACCEPTANCE:g}")
    burn, thin = 10 * n * n, n * n
    steps = burn + thin * count
    d = rng.standard_normal(size=(steps, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    u = rng.uniform(size=steps)
    pts = kernels.hit_and_run(
        np.ascontiguousarray(body.normals), np.ascontiguousarray(body.offsets), np.zeros(n), d, u, burn, thin
    )
    return pts, True, {"acceptance": acceptance, "burn_in": burn, "thinning": thin}


def _uniform_points(body: Body, count: int, rng, hit_and_run: bool):
    if isinstance(body, LpBall):
        return _uniform_lp(body.p, body.dim, count, rng), False, {}
    if isinstance(body, ScaledL1):
        return body.c * _uniform_lp(1.0, body.dim, count, rng), False, {}
    if isinstance(body, SymmetricHPolytope):
        return _uniform_hpoly(body, count, rng, hit_and_run)
    if isinstance(body, LinearImage):
        pts, approx, meta = _uniform_points(body.inner, count, rng, hit_and_run)
        return pts @ body.T.T, approx, meta
    raise TypeError(f"no uniform sampler for {type(body).__name__}")


def _nonzero_uniform(body, count, rng, hit_and_run):
    """Uniform draws with the (probability zero) origin re-drawn; returns the redraw count."""
    pts, approx, meta = _uniform_points(body, count, rng, hit_and_run)
    norms = body.norm(pts)
    redraws = 0
    bad = np.flatnonzero(norms == 0.0)
    while bad.size:
        redraws += bad.size
        fresh, _, _ = _uniform_points(body, bad.size, rng, hit_and_run)
        pts[bad] = fresh
        norms[bad] = body.norm(fresh)
        bad = bad[norms[bad] == 0.0]
    return pts, norms, approx, meta, redraws


def _resolve(rng, seed, stream_id):
    if rng is None:
        if seed is None:
            raise ValueError("pass either rng or seed")
        rng = make_rng(seed, stream_id or 0)
    return rng


def sample_uniform(body: Body, count: int, rng=None, *, seed=None, stream_id=0, hit_and_run=True) -> SampleBatch:
    """I.i.d. uniform points in ``body``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = _resolve(rng, seed, stream_id)
    pts, approx, meta = _uniform_points(body, int(count), rng, hit_and_run)
    return SampleBatch(UNIFORM, body, pts, seed, stream_id, 0, approx, meta)


def _direct_cone(body: Body, count: int, rng):
    if isinstance(body, LpBall):
        g = _uniform_lp(body.p, body.dim, count, rng) if math.isinf(body.p) else None
        if g is None:
            p = body.p
            mag = rng.standard_gamma(1.0 / p, size=(count, body.dim)) ** (1.0 / p)
            sign = rng.integers(0, 2, size=(count, body.dim)) * 2 - 1
            g = sign * mag
        return g / body.norm(g)[:, None]
    if isinstance(body, ScaledL1):
        return body.c * _direct_cone(LpBall(1.0, body.dim), count, rng)
    if isinstance(body, LinearImage):
        # cone measure commutes with linear maps
        return _direct_cone(body.inner, count, rng) @ body.T.T
    raise TypeError(f"direct cone generator unavailable for {type(body).__name__}")


def sample_cone_boundary(
    body: Body, count: int, rng=None, *, seed=None, stream_id=0, method="projection", hit_and_run=True
) -> SampleBatch:
    """I.i.d. draws from the cone probability measure on the boundary.

    ``method="projection"`` pushes uniform points forward by ``y -> y/||y||_K``;
    ``method="direct"`` normalizes p-generalized normal vectors (l_p balls and
    their linear images only).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = _resolve(rng, seed, stream_id)
    if method == "direct":
        pts = _direct_cone(body, int(count), rng)
        return SampleBatch(CONE, body, pts, seed, stream_id, 0, False, {"method": "direct"})
    if method != "projection":
        raise ValueError(f"unknown method {method!r}")
    y, norms, approx, meta, redraws = _nonzero_uniform(body, int(count), rng, hit_and_run)
    return SampleBatch(CONE, body, y / norms[:, None], seed, stream_id, redraws, approx, {"method": "projection", **meta})


def sample_coupled_pair(body: Body, count: int, rng=None, *, seed=None, stream_id=0, hit_and_run=True):
    """Uniform points ``Y_i`` and their radial projections ``X_i = Y_i/||Y_i||_K``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = _resolve(rng, seed, stream_id)
    y, norms, approx, meta, redraws = _nonzero_uniform(body, int(count), rng, hit_and_run)
    uni = SampleBatch(UNIFORM, body, y, seed, stream_id, redraws, approx, meta)
    cone = SampleBatch(CONE, body, y / norms[:, None], seed, stream_id, redraws, approx, {"method": "projection", **meta})
    return uni, cone
