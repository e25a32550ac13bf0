"""Real-valued expression trees used inside predicate atoms.

An expression evaluates to a single real given a named state. Evaluation is
numpy-friendly: feeding arrays for the variables broadcasts elementwise, which
is what the grid-based bound estimation relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr", "Var", "Const", "Neg", "Add", "Sub", "Scale", "Abs", "Norm2", "NormInf",
]


class Expr:
    """Base class for expression nodes."""

    def eval(self, env):
        raise NotImplementedError

    def variables(self) -> frozenset[str]:
        raise NotImplementedError

    def pretty(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.pretty()


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def eval(self, env):
        return env[self.name]

    def variables(self):
        return frozenset({self.name})

    def pretty(self):
        return self.name


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def eval(self, env):
        return self.value

    def variables(self):
        return frozenset()

    def pretty(self):
        return repr(self.value)


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def eval(self, env):
        return -self.arg.eval(env)

    def variables(self):
        return self.arg.variables()

    def pretty(self):
        return f"(-{self.arg.pretty()})"


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr

    def eval(self, env):
        return self.left.eval(env) + self.right.eval(env)

    def variables(self):
        return self.left.variables() | self.right.variables()

    def pretty(self):
        return f"({self.left.pretty()} + {self.right.pretty()})"


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr

    def eval(self, env):
        return self.left.eval(env) - self.right.eval(env)

    def variables(self):
        return self.left.variables() | self.right.variables()

    def pretty(self):
        return f"({self.left.pretty()} - {self.right.pretty()})"


@dataclass(frozen=True)
class Scale(Expr):
    """Product of an expression by a real constant."""

    coef: float
    arg: Expr

    def eval(self, env):
        return self.coef * self.arg.eval(env)

    def variables(self):
        return self.arg.variables()

    def pretty(self):
        return f"({self.coef!r} * {self.arg.pretty()})"


@dataclass(frozen=True)
class Abs(Expr):
    arg: Expr

    def eval(self, env):
        return np.abs(self.arg.eval(env))

    def variables(self):
        return self.arg.variables()

    def pretty(self):
        return f"abs({self.arg.pretty()})"


@dataclass(frozen=True)
class Norm2(Expr):
    args: tuple[Expr, ...]

    def eval(self, env):
        vals = [a.eval(env) for a in self.args]
        return np.sqrt(sum(v * v for v in vals))

    def variables(self):
        out = frozenset()
        for a in self.args:
            out |= a.variables()
        return out

    def pretty(self):
        return "norm2(" + ", ".join(a.pretty() for a in self.args) + ")"


@dataclass(frozen=True)
class NormInf(Expr):
    args: tuple[Expr, ...]

    def eval(self, env):
        vals = [np.abs(a.eval(env)) for a in self.args]
        out = vals[0]
        for v in vals[1:]:
            out = np.maximum(out, v)
        return out

    def variables(self):
        out = frozenset()
        for a in self.args:
            out |= a.variables()
        return out

    def pretty(self):
        return "norminf(" + ", ".join(a.pretty() for a in self.args) + ")"
