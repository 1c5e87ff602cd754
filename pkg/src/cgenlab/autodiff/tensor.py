"""
Tensor and computation tape of the reverse-mode engine.

A ``Tensor`` wraps a row-major numpy array (float32 for training, float64 for
gradient checking). Every primitive op that consumes a tensor with
``requires_grad=True`` records a ``TapeEntry`` holding its inputs and the rule
that maps the output adjoint to the input adjoints. ``backward`` gathers the
entries reachable from a scalar loss into a ``ComputationTape`` and replays
them in exact reverse order of recording.

Tapes are confined to the thread that recorded them; each entry can be
replayed once, so a second backward without a new forward raises.
"""

from __future__ import annotations

import itertools
import threading
import weakref
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from cgenlab.config.constants import Precision
from cgenlab.errors import DimensionError, NonFiniteError, TapeError

if TYPE_CHECKING:
    import numpy.typing as npt

Array = np.ndarray[Any, np.dtype[np.floating[Any]]]
BackwardRule = Callable[[Array], Sequence["Array | None"]]

_SUPPORTED = {np.dtype(np.float32), np.dtype(np.float64)}

_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)
_default_dtype: ContextVar[np.dtype[Any]] = ContextVar(
    "default_dtype",
    default=np.dtype(np.float32),
)

# Monotonic recording counter shared by every thread; only the relative order
# of entries on one tape matters.
_sequence = itertools.count()


# --------------------------------------------------------------------------- #
# Global modes                                                                #
# --------------------------------------------------------------------------- #


def grad_enabled() -> bool:
    """Return whether ops currently record onto the tape."""
    return _grad_enabled.get()


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable recording inside the block (inference, logging, evaluation)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def default_dtype() -> np.dtype[Any]:
    """Return the dtype given to tensors built without an explicit one."""
    return _default_dtype.get()


@contextmanager
def precision(mode: Precision | str) -> Iterator[None]:
    """Switch the default dtype, e.g. ``with precision("float64"):``."""
    token = _default_dtype.set(np.dtype(Precision(mode).value))
    try:
        yield
    finally:
        _default_dtype.reset(token)


def ensure_finite(op: str, values: npt.ArrayLike) -> None:
    """Raise ``NonFiniteError`` when ``values`` holds NaN or Inf."""
    if not np.all(np.isfinite(values)):
        msg = f"non-finite values produced by '{op}'"
        raise NonFiniteError(msg)


# --------------------------------------------------------------------------- #
# Tape                                                                        #
# --------------------------------------------------------------------------- #


@dataclass(eq=False)
class TapeEntry:
    """One recorded primitive: inputs, output and adjoint rule."""

    seq: int
    op: str
    inputs: tuple[Tensor, ...]
    output: weakref.ReferenceType[Tensor]
    rule: BackwardRule | None
    thread_id: int = field(default_factory=threading.get_ident)
    consumed: bool = False

    def release(self) -> None:
        """Drop saved context once the adjoints have been propagated."""
        self.consumed = True
        self.rule = None
        self.inputs = ()


class ComputationTape:
    """Entries reachable from a loss, ordered by recording sequence."""

    def __init__(self, entries: Sequence[TapeEntry]) -> None:
        """Store the entries sorted in recording order."""
        self.entries: list[TapeEntry] = sorted(entries, key=lambda e: e.seq)

    def __len__(self) -> int:
        """Number of recorded primitives."""
        return len(self.entries)

    def __iter__(self) -> Iterator[TapeEntry]:
        """Iterate in recording order."""
        return iter(self.entries)

    @classmethod
    def collect(cls, root: Tensor) -> ComputationTape:
        """Walk the graph behind ``root`` and gather its live entries."""
        if root.entry is None:
            msg = "loss was not produced by a taped forward pass"
            raise TapeError(msg)

        seen: set[int] = set()
        stack = [root.entry]
        gathered: list[TapeEntry] = []
        current = threading.get_ident()
        while stack:
            entry = stack.pop()
            if id(entry) in seen:
                continue
            seen.add(id(entry))
            if entry.consumed:
                msg = (
                    f"tape entry '{entry.op}' was already replayed; "
                    "run a new forward pass before calling backward again"
                )
                raise TapeError(msg)
            if entry.thread_id != current:
                msg = f"tape entry '{entry.op}' belongs to another thread"
                raise TapeError(msg)
            gathered.append(entry)
            stack.extend(t.entry for t in entry.inputs if t.entry is not None)
        return cls(gathered)

    def replay_backward(self) -> None:
        """Propagate adjoints in exact reverse order of recording."""
        for entry in reversed(self.entries):
            out = entry.output()
            if out is None or out.grad is None or entry.rule is None:
                entry.release()
                continue
            grads = entry.rule(out.grad)
            for inp, grad in zip(entry.inputs, grads, strict=True):
                if grad is None or not inp.requires_grad:
                    continue
                inp.accumulate_grad(grad, op=entry.op)
            entry.release()


# --------------------------------------------------------------------------- #
# Tensor                                                                      #
# --------------------------------------------------------------------------- #


class Tensor:
    """n-dimensional numeric array with an optional accumulated gradient."""

    def __init__(
        self,
        data: npt.ArrayLike,
        *,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: npt.DTypeLike | None = None,
    ) -> None:
        """Wrap ``data`` (not copied when it already has the right dtype)."""
        target = np.dtype(dtype) if dtype is not None else None
        if target is None and isinstance(data, np.ndarray) and data.dtype in _SUPPORTED:
            target = data.dtype
        arr = np.asarray(data, dtype=target or default_dtype())
        if arr.dtype not in _SUPPORTED:
            msg = f"unsupported dtype {arr.dtype}; use float32 or float64"
            raise TypeError(msg)
        ensure_finite(name or "tensor", arr)
        self.data: Array = arr
        self.requires_grad = requires_grad
        self.name = name
        self.grad: Array | None = None
        self.entry: TapeEntry | None = None

    # --- introspection --------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        """Extents, outermost first."""
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        """Number of elements (product of the extents)."""
        return int(self.data.size)

    @property
    def ndim(self) -> int:
        """Number of axes."""
        return int(self.data.ndim)

    @property
    def dtype(self) -> np.dtype[Any]:
        """Element type."""
        return self.data.dtype

    def item(self) -> float:
        """Return the value of a one-element tensor as a Python float."""
        if self.size != 1:
            msg = f"item() needs a one-element tensor, got shape {self.shape}"
            raise DimensionError(msg)
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> Array:
        """Return a copy of the data."""
        return self.data.copy()

    def __repr__(self) -> str:
        """Short description with shape, dtype and grad flag."""
        label = f" name={self.name!r}" if self.name else ""
        return (
            f"Tensor(shape={self.shape}, dtype={self.dtype},"
            f" requires_grad={self.requires_grad}{label})"
        )

    # --- gradient bookkeeping -------------------------------------------------

    def accumulate_grad(self, grad: npt.ArrayLike, *, op: str = "backward") -> None:
        """Add ``grad`` into ``self.grad``; gradients accumulate until zeroed."""
        values = np.asarray(grad, dtype=self.dtype)
        if values.shape != self.data.shape:
            msg = (
                f"gradient of shape {values.shape} from '{op}' does not match "
                f"tensor shape {self.shape}"
            )
            raise DimensionError(msg)
        ensure_finite(f"{op} (backward)", values)
        if self.grad is None:
            self.grad = values.copy()
        else:
            self.grad += values

    def zero_grad(self) -> None:
        """Forget the accumulated gradient."""
        self.grad = None

    def detach(self) -> Tensor:
        """Return a tensor sharing the data but outside any tape."""
        return Tensor(self.data, name=self.name)

    def astype(self, dtype: npt.DTypeLike) -> Tensor:
        """Return a converted leaf copy keeping ``requires_grad`` and name."""
        return Tensor(
            self.data.astype(dtype),
            requires_grad=self.requires_grad,
            name=self.name,
        )

    # --- operator sugar (thin wrappers around autodiff.ops) -------------------

    def __add__(self, other: Tensor) -> Tensor:
        """Elementwise sum of equal shapes."""
        from cgenlab.autodiff import ops  # noqa: PLC0415

        return ops.add(self, other)

    def __sub__(self, other: Tensor) -> Tensor:
        """Elementwise difference of equal shapes."""
        from cgenlab.autodiff import ops  # noqa: PLC0415

        return ops.sub(self, other)

    def __mul__(self, other: Tensor | float) -> Tensor:
        """Elementwise product, or scaling by a Python number."""
        from cgenlab.autodiff import ops  # noqa: PLC0415

        if isinstance(other, Tensor):
            return ops.mul(self, other)
        return ops.scale(self, float(other))

    def __rmul__(self, other: float) -> Tensor:
        """Scaling by a Python number on the left."""
        from cgenlab.autodiff import ops  # noqa: PLC0415

        return ops.scale(self, float(other))

    def __neg__(self) -> Tensor:
        """Negation."""
        from cgenlab.autodiff import ops  # noqa: PLC0415

        return ops.scale(self, -1.0)

    def __matmul__(self, other: Tensor) -> Tensor:
        """Matrix product."""
        from cgenlab.autodiff import ops  # noqa: PLC0415

        return ops.matmul(self, other)


def parameter(
    data: npt.ArrayLike,
    name: str,
    dtype: npt.DTypeLike | None = None,
) -> Tensor:
    """Build a named trainable leaf in ``dtype`` (the default dtype if unset)."""
    target = dtype if dtype is not None else default_dtype()
    return Tensor(data, requires_grad=True, name=name, dtype=target)


def record(
    op: str,
    inputs: Sequence[Tensor],
    out_data: npt.ArrayLike,
    rule: BackwardRule,
) -> Tensor:
    """
    Wrap the forward result of a primitive and put it on the tape.

    The entry is recorded only when gradients are enabled and at least one
    input requires them; otherwise the output is a plain constant.
    """
    dtypes = {t.dtype for t in inputs}
    if len(dtypes) > 1:
        msg = f"'{op}' mixes dtypes {sorted(str(d) for d in dtypes)}"
        raise TypeError(msg)
    dtype = dtypes.pop() if dtypes else default_dtype()
    arr = np.asarray(out_data, dtype=dtype)
    ensure_finite(op, arr)

    needs_grad = grad_enabled() and any(t.requires_grad for t in inputs)
    out = Tensor(arr, requires_grad=needs_grad)
    if needs_grad:
        out.entry = TapeEntry(
            seq=next(_sequence),
            op=op,
            inputs=tuple(inputs),
            output=weakref.ref(out),
            rule=rule,
        )
    return out


def backward(loss: Tensor) -> None:
    """
    Populate ``grad`` on every reachable tensor with ``requires_grad=True``.

    Gradients accumulate across calls until explicitly zeroed. A loss that
    nothing trainable feeds into has no tape; it leaves every gradient as is.
    """
    if loss.size != 1:
        msg = f"backward needs a scalar loss, got shape {loss.shape}"
        raise DimensionError(msg)
    if loss.entry is None:
        return
    tape = ComputationTape.collect(loss)
    loss.accumulate_grad(np.ones_like(loss.data), op="seed")
    tape.replay_backward()
