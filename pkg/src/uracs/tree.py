"""Outer tree code over GF(2).

A B-bit message is split into L sections; section ``l`` (1-based) carries
``m[l]`` information bits followed by ``l[l]`` parity bits, where the parity
is a random GF(2) linear function of all earlier information sections. The
list decoder walks the per-slot fragment lists and keeps every
parity-consistent partial path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import bits_to_int, ints_to_rows, rows_to_ints

DEFAULT_PATH_CAP = 1 << 16


@dataclass(frozen=True)
class ParityProfile:
    """Per-section information/parity bit lengths (m, l)."""

    m: tuple[int, ...]
    l: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        object.__setattr__(self, "l", tuple(int(x) for x in self.l))
        if len(self.m) != len(self.l):
            raise ValueError("m and l must have equal length")
        if len(self.m) == 0:
            raise ValueError("profile needs at least one section")
        if any(x < 0 for x in self.m) or any(x < 0 for x in self.l):
            raise ValueError("section lengths must be nonnegative")
        if self.l[0] != 0:
            raise ValueError("the first section carries no parity (l[0] must be 0)")
        if any(m + l <= 0 for m, l in zip(self.m, self.l)):
            raise ValueError("every section must have m + l > 0")

    @property
    def B(self) -> int:
        return sum(self.m)

    @property
    def L(self) -> int:
        return len(self.m)

    @property
    def v(self) -> tuple[int, ...]:
        """Coded fragment lengths m + l per section."""
        return tuple(m + l for m, l in zip(self.m, self.l))

    def prefix_bits(self, stage: int) -> int:
        """Number of information bits in sections 1..stage-1."""
        return sum(self.m[: stage - 1])


# 75 information bits over 11 sections of 15 coded bits each; parity grows
# toward the tail so late sections can absorb the accumulated path list
DEFAULT_SISO_PROFILE = ParityProfile(
    m=(15, 9, 7, 7, 7, 7, 7, 7, 7, 2, 0),
    l=(0, 6, 8, 8, 8, 8, 8, 8, 8, 13, 15),
)

# 96 information bits over 32 sections of 12 coded bits each
DEFAULT_MIMO_PROFILE = ParityProfile(
    m=(12,) + (3,) * 28 + (0, 0, 0),
    l=(0,) + (9,) * 28 + (12, 12, 12),
)


class TreeCodebook:
    """Seeded GF(2) generator matrices G[j][l] (m_j x l_l) for j < l.

    Equal (profile, seed) pairs reproduce identical parity on both sides of
    the link. Each matrix comes from an independent PRNG stream keyed by
    (seed, j, l).
    """

    def __init__(self, profile: ParityProfile, seed: int):
        self.profile = profile
        self.seed = int(seed)
        self._gen: dict[tuple[int, int], np.ndarray] = {}
        stacks = [None]  # 1-based stage index
        for ell in range(2, profile.L + 1):
            blocks = []
            for j in range(1, ell):
                rng = np.random.default_rng((self.seed, j, ell))
                g = rng.integers(0, 2, size=(profile.m[j - 1], profile.l[ell - 1]),
                                 dtype=np.uint8)
                self._gen[(j, ell)] = g
                blocks.append(g)
            stacked = np.vstack(blocks) if blocks else np.zeros((0, profile.l[ell - 1]), np.uint8)
            stacks.append(stacked.astype(np.int32))
        # _stack[ell] maps the full info prefix of sections 1..ell-1 to parity ell
        self._stack: list = stacks

    def generator(self, j: int, ell: int) -> np.ndarray:
        return self._gen[(j, ell)]

    def parity_rows(self, prefixes: np.ndarray, ell: int) -> np.ndarray:
        """Parity bits of section ``ell`` for a batch of info prefixes (rows)."""
        if not 2 <= ell <= self.profile.L:
            raise ValueError(f"stage {ell} out of range [2, {self.profile.L}]")
        prefixes = np.atleast_2d(prefixes)
        want = self.profile.prefix_bits(ell)
        if prefixes.shape[1] != want:
            raise ValueError(f"prefix has {prefixes.shape[1]} bits, stage {ell} needs {want}")
        return ((prefixes @ self._stack[ell - 1]) & 1).astype(np.uint8)


def compute_parity(info_prefix: np.ndarray, ell: int, codebook: TreeCodebook) -> np.ndarray:
    """Parity bits of section ``ell`` given the info bits of sections 1..ell-1."""
    return codebook.parity_rows(np.asarray(info_prefix, dtype=np.uint8), ell)[0]


def outer_encode(w: np.ndarray, codebook: TreeCodebook) -> list[np.ndarray]:
    """Encode one B-bit message into L coded fragments."""
    return [f[0] for f in encode_messages(np.atleast_2d(np.asarray(w, dtype=np.uint8)), codebook)]


def encode_messages(W: np.ndarray, codebook: TreeCodebook) -> list[np.ndarray]:
    """Encode a batch of messages (rows of W); returns L arrays of shape (K, v_l)."""
    W = np.atleast_2d(np.asarray(W, dtype=np.uint8))
    prof = codebook.profile
    if W.shape[1] != prof.B:
        raise ValueError(f"messages have {W.shape[1]} bits, profile needs B={prof.B}")
    fragments = []
    offset = 0
    for ell in range(1, prof.L + 1):
        m = prof.m[ell - 1]
        info = W[:, offset:offset + m]
        if ell == 1:
            frag = info
        else:
            parity = codebook.parity_rows(W[:, :offset], ell)
            frag = np.hstack([info, parity])
        fragments.append(np.ascontiguousarray(frag))
        offset += m
    return fragments


@dataclass
class FragmentLists:
    """The L per-slot lists of recovered coded fragments (one 2-D array each)."""

    lists: list[np.ndarray]

    def validate(self, profile: ParityProfile) -> None:
        if len(self.lists) != profile.L:
            raise ValueError(f"{len(self.lists)} lists for an L={profile.L} profile")
        for ell, (arr, v) in enumerate(zip(self.lists, profile.v), start=1):
            if arr.ndim != 2 or arr.shape[1] != v:
                raise ValueError(f"list {ell} fragments must be {v} bits wide")

    @classmethod
    def genie(cls, W: np.ndarray, codebook: TreeCodebook) -> "FragmentLists":
        """Lists holding exactly the encoded fragments of the given messages."""
        return cls(encode_messages(W, codebook))


@dataclass
class Path:
    """A parity-consistent partial path through the first ``stage`` lists."""

    stage: int
    info_bits: np.ndarray
    fragment_indices: tuple[int, ...]

    @property
    def root(self) -> int:
        return self.fragment_indices[0]


def _parity_buckets(fragments: np.ndarray, m: int) -> dict[int, np.ndarray]:
    """Group fragment row indices by the integer value of their parity bits."""
    parity_ints = rows_to_ints(fragments[:, m:])
    buckets: dict[int, list[int]] = {}
    for row, p in enumerate(parity_ints):
        buckets.setdefault(int(p), []).append(row)
    return {p: np.asarray(rows, dtype=np.int64) for p, rows in buckets.items()}


def extend_paths(paths: list[Path], fragments: np.ndarray,
                 codebook: TreeCodebook) -> list[Path]:
    """All parity-consistent one-step extensions of ``paths`` into the next list."""
    if not paths:
        return []
    stage = paths[0].stage
    if any(p.stage != stage for p in paths):
        raise ValueError("paths must all be at the same stage")
    ell = stage + 1
    m = codebook.profile.m[ell - 1]
    fragments = np.atleast_2d(np.asarray(fragments, dtype=np.uint8))
    if fragments.shape[0] == 0:
        return []
    buckets = _parity_buckets(fragments, m)
    prefixes = np.vstack([p.info_bits for p in paths])
    parities = rows_to_ints(codebook.parity_rows(prefixes, ell))
    out: list[Path] = []
    for path, p in zip(paths, parities):
        for row in buckets.get(int(p), ()):
            out.append(Path(
                stage=ell,
                info_bits=np.concatenate([path.info_bits, fragments[row, :m]]),
                fragment_indices=path.fragment_indices + (int(row),),
            ))
    return out


def admissible_parities(paths: list[Path], ell: int, codebook: TreeCodebook) -> np.ndarray:
    """Deduplicated parity patterns (as integers) that stage-``ell`` fragments may carry."""
    if not 2 <= ell <= codebook.profile.L:
        raise ValueError(f"stage {ell} out of range [2, {codebook.profile.L}]")
    if not paths:
        return np.empty(0, dtype=np.int64)
    prefixes = np.vstack([p.info_bits for p in paths])
    return np.unique(rows_to_ints(codebook.parity_rows(prefixes, ell)))


@dataclass
class TreeDiagnostics:
    """Per-stage bookkeeping of the path search."""

    live_paths: list[int] = field(default_factory=list)
    capped_roots: int = 0


@dataclass
class TreeDecodeResult:
    messages: list[int]          # radix-2 message values, in root order
    failures: int
    diagnostics: TreeDiagnostics

    def message_bits(self, B: int) -> np.ndarray:
        return ints_to_rows(np.asarray(self.messages, dtype=np.int64), B)


class PathTracker:
    """Stage-by-stage path search shared by the batch and the slot-interleaved decoders.

    Paths from all roots advance jointly; per-root books are settled in
    :meth:`finalize`. A root whose live path count exceeds ``path_cap`` is
    abandoned and counted as failed.
    """

    def __init__(self, codebook: TreeCodebook, path_cap: int = DEFAULT_PATH_CAP):
        self.codebook = codebook
        self.path_cap = int(path_cap)
        self.stage = 0
        self.root_count = 0
        self._info = np.zeros((0, 0), dtype=np.uint8)
        self._roots = np.zeros(0, dtype=np.int64)
        self._failed: set[int] = set()
        self.diagnostics = TreeDiagnostics()

    def start(self, root_fragments: np.ndarray) -> None:
        roots = np.atleast_2d(np.asarray(root_fragments, dtype=np.uint8))
        m1 = self.codebook.profile.m[0]
        if roots.shape[0] and roots.shape[1] != m1:
            raise ValueError(f"root fragments must be {m1} bits wide")
        self.stage = 1
        self.root_count = roots.shape[0]
        self._info = roots.reshape(self.root_count, m1)
        self._roots = np.arange(self.root_count, dtype=np.int64)
        self.diagnostics.live_paths.append(self.root_count)

    def live_path_count(self) -> int:
        return self._roots.shape[0]

    def admissible(self) -> np.ndarray:
        """Admissible parity patterns for the next stage, as sorted integers."""
        ell = self.stage + 1
        if self._info.shape[0] == 0:
            return np.empty(0, dtype=np.int64)
        return np.unique(rows_to_ints(self.codebook.parity_rows(self._info, ell)))

    def advance(self, fragments: np.ndarray) -> None:
        """Extend every live path into the next list, pruning inconsistent branches."""
        ell = self.stage + 1
        prof = self.codebook.profile
        if ell > prof.L:
            raise ValueError("already at the final stage")
        m = prof.m[ell - 1]
        fragments = np.atleast_2d(np.asarray(fragments, dtype=np.uint8))
        if fragments.size == 0:
            fragments = fragments.reshape(0, prof.v[ell - 1])
        if fragments.shape[0] == 0 or self._info.shape[0] == 0:
            self._info = np.zeros((0, prof.prefix_bits(ell + 1) if ell < prof.L
                                   else prof.B), dtype=np.uint8)
            self._roots = np.zeros(0, dtype=np.int64)
            self.stage = ell
            self.diagnostics.live_paths.append(0)
            return
        buckets = _parity_buckets(fragments, m)
        parities = rows_to_ints(self.codebook.parity_rows(self._info, ell))
        counts = np.zeros(self._info.shape[0], dtype=np.int64)
        rows_per_path: list[np.ndarray] = []
        for i, p in enumerate(parities):
            rows = buckets.get(int(p))
            if rows is None:
                rows_per_path.append(np.empty(0, dtype=np.int64))
            else:
                rows_per_path.append(rows)
                counts[i] = rows.shape[0]
        rep = np.repeat(np.arange(self._info.shape[0]), counts)
        frag_rows = (np.concatenate(rows_per_path) if rows_per_path
                     else np.empty(0, dtype=np.int64))
        new_info = np.hstack([self._info[rep], fragments[frag_rows][:, :m]])
        new_roots = self._roots[rep]
        # worst-case branching is exponential; abandon roots that blow up
        per_root = np.bincount(new_roots, minlength=self.root_count)
        over = np.flatnonzero(per_root > self.path_cap)
        if over.size:
            newly = set(int(r) for r in over) - self._failed
            self._failed.update(newly)
            self.diagnostics.capped_roots += len(newly)
            keep = ~np.isin(new_roots, over)
            new_info = new_info[keep]
            new_roots = new_roots[keep]
        self._info = new_info
        self._roots = new_roots
        self.stage = ell
        self.diagnostics.live_paths.append(int(self._roots.shape[0]))

    def finalize(self) -> TreeDecodeResult:
        """Settle per-root books: one surviving message per root, else a failure."""
        if self.stage != self.codebook.profile.L:
            raise ValueError("finalize called before the final stage")
        messages: list[int] = []
        seen: set[int] = set()
        successes = 0
        by_root: dict[int, set[int]] = {}
        msg_ints = rows_to_ints(self._info) if self._info.shape[0] else np.empty(0, np.int64)
        for root, msg in zip(self._roots, msg_ints):
            by_root.setdefault(int(root), set()).add(int(msg))
        for root in range(self.root_count):
            survivors = by_root.get(root)
            # identical-message survivors are unambiguous, count them once
            if survivors is not None and len(survivors) == 1 and root not in self._failed:
                successes += 1
                msg = next(iter(survivors))
                if msg not in seen:
                    seen.add(msg)
                    messages.append(msg)
        return TreeDecodeResult(
            messages=messages,
            failures=self.root_count - successes,
            diagnostics=self.diagnostics,
        )


def tree_decode(lists: FragmentLists, codebook: TreeCodebook,
                path_cap: int = DEFAULT_PATH_CAP) -> TreeDecodeResult:
    """List-decode the outer code: follow every parity-consistent path.

    A root yields a message iff exactly one message survives to the last
    stage; roots with no survivors, distinct survivors, or a capped search
    count as failures.
    """
    lists.validate(codebook.profile)
    tracker = PathTracker(codebook, path_cap=path_cap)
    tracker.start(lists.lists[0])
    for ell in range(2, codebook.profile.L + 1):
        tracker.advance(lists.lists[ell - 1])
    return tracker.finalize()


def message_int(w: np.ndarray) -> int:
    """Radix-2 value of a full B-bit message."""
    return bits_to_int(np.asarray(w, dtype=np.uint8))
