"""Run configuration: a flat key = value file, optionally with a [flow] section."""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field

from .arithmetic import geometric_sequence
from .flow import FlowConfig

NAMED = {
    "golden": (1 + math.sqrt(5)) / 2,
    "sqrt2": math.sqrt(2),
}

GOLDEN_H = "(alpha1+t1)*q1*p1 + (alpha2+t2)*q2*p2 + 0.01*(q1^2*q2 + p1*p2^2)"


class ConfigError(ValueError):
    pass


def parse_number(tok: str) -> complex | float:
    tok = tok.strip()
    if tok.lower() in NAMED:
        return NAMED[tok.lower()]
    try:
        return float(tok)
    except ValueError:
        pass
    try:
        return complex(tok.replace("i", "j"))
    except ValueError:
        raise ConfigError(f"not a number: {tok!r}") from None


def parse_vector(text: str) -> list:
    return [parse_number(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _echo(x):
    if isinstance(x, complex):
        return [float(format(x.real, ".17g")), float(format(x.imag, ".17g"))]
    if isinstance(x, float):
        return float(format(x, ".17g"))
    return x


@dataclass
class RunConfig:
    n: int = 2
    deg_cap: int = 16
    t_cap: int = 2
    alpha: list = field(default_factory=lambda: [1.0, NAMED["golden"]])
    lower_seq: str = "geometric 0.1 0.3333333333333333"
    K: int = 3
    s0: float = 0.25
    mode: str = "both"
    hamiltonian: str = GOLDEN_H
    seed: int = 1234
    flow: FlowConfig | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n < 1:
            raise ConfigError("n must be positive")
        if len(self.alpha) != self.n:
            raise ConfigError(f"alpha has {len(self.alpha)} entries, n = {self.n}")
        if self.mode not in ("formal", "kam", "both"):
            raise ConfigError(f"mode must be formal, kam or both, not {self.mode!r}")
        if self.K < 1:
            raise ConfigError("K must be at least 1")
        if 2 ** (self.K + 1) > self.deg_cap:
            raise ConfigError(f"K={self.K} needs deg_cap >= {2 ** (self.K + 1)}")
        if not 0 < self.s0 < 1 / math.sqrt(math.pi):
            raise ConfigError("s0 must lie in ]0, 1/sqrt(pi)[")
        if self.t_cap < 0:
            raise ConfigError("t_cap must be nonnegative")
        self.lower_values(self.K + 1)

    def lower_values(self, K: int) -> list[float]:
        """a_0..a_K from ``geometric c rho`` or an explicit comma list."""
        text = self.lower_seq.strip()
        if text.startswith("geometric"):
            parts = text.split()[1:]
            if len(parts) != 2:
                raise ConfigError("geometric lower sequence needs c and rho")
            c, rho = (complex(parse_number(x)).real for x in parts)
            if c <= 0 or not 0 < rho <= 1:
                raise ConfigError("geometric lower sequence needs c > 0 and 0 < rho <= 1")
            return geometric_sequence(c, rho, K)
        vals = [float(v) for v in parse_vector(text)]
        if len(vals) < K + 1:
            raise ConfigError(f"lower sequence needs {K + 1} entries, got {len(vals)}")
        return vals[: K + 1]

    def echo(self) -> dict:
        d = asdict(self)
        d["alpha"] = [_echo(a) for a in self.alpha]
        d["s0"] = _echo(self.s0)
        if self.flow is not None:
            d["flow"] = {k: ([_echo(x) for x in v] if isinstance(v, (list, tuple)) else _echo(v))
                         for k, v in asdict(self.flow).items()}
        return d

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        cp.optionxform = str
        if not text.lstrip().startswith("["):
            text = "[run]\n" + text
        try:
            cp.read_string(text)
        except configparser.Error as e:
            raise ConfigError(str(e)) from None
        run = dict(cp["run"]) if cp.has_section("run") else {}
        known = {"n", "deg_cap", "t_cap", "alpha", "lower_seq", "K", "s0", "mode", "hamiltonian", "seed"}
        unknown = set(run) - known
        if unknown:
            raise ConfigError(f"unknown keys: {sorted(unknown)}")
        kw = {}
        try:
            for key in ("n", "deg_cap", "t_cap", "K", "seed"):
                if key in run:
                    kw[key] = int(run[key])
            if "s0" in run:
                kw["s0"] = float(run["s0"])
        except ValueError as e:
            raise ConfigError(str(e)) from None
        for key in ("lower_seq", "mode", "hamiltonian"):
            if key in run:
                kw[key] = run[key].strip()
        if "alpha" in run:
            kw["alpha"] = parse_vector(run["alpha"])
        if cp.has_section("flow"):
            fl = dict(cp["flow"])
            try:
                fkw = {"t_star": parse_vector(fl.get("t_star", "0," * kw.get("n", 2))),
                       "z0": parse_vector(fl["z0"])}
                if "lambda_star" in fl and fl["lambda_star"].strip() != "auto":
                    fkw["lambda_star"] = parse_vector(fl["lambda_star"])
                for key in ("horizon", "step"):
                    if key in fl:
                        fkw[key] = float(fl[key])
                if "scales" in fl:
                    fkw["scales"] = tuple(float(x) for x in parse_vector(fl["scales"]))
                kw["flow"] = FlowConfig(**fkw)
            except KeyError as e:
                raise ConfigError(f"[flow] needs {e.args[0]}") from None
            except ValueError as e:
                raise ConfigError(str(e)) from None
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())
