"""Run configuration: flat dotted-key text format, presets, initial data.

The config format is deliberately primitive: one `section.key = value` per
line, `#` comments, sections model/bounds/grid/integrator/initial/output.
Unknown keys are fatal and all errors are collected before reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .integrator import IntegratorConfig
from .model import InitialBounds, ModelParams
from .spectral import SpectralGrid

PRESETS = ("constant", "perturbed-constant", "random-smooth")

# fixed normalization mesh so a preset describes one function of x regardless
# of the run resolution (collocation grids with N | 128 sample subsets of it)
_NORM_MESH = 128


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class GridConfig:
    n1: int = 16
    n2: int = 16
    n3: int = 16
    oversample: float = 2.0
    shell_cut: float | None = None

    def __post_init__(self):
        for name in ("n1", "n2", "n3"):
            n = getattr(self, name)
            if n < 4 or n % 2:
                raise ValueError(f"grid.{name} must be even and >= 4, got {n}")
        if self.oversample < 1.5:
            raise ValueError(f"grid.oversample must be >= 1.5, got {self.oversample}")

    def build(self, params: ModelParams) -> SpectralGrid:
        return SpectralGrid((self.n1, self.n2, self.n3), params.lengths,
                            oversample=self.oversample, shell_cut=self.shell_cut)


@dataclass
class InitialConfig:
    preset: str | None = "constant"
    snapshot: str | None = None
    coeffs: str | None = None
    amplitude: float = 0.1
    v_amplitude: float = 0.1
    omega_base: float | None = None
    b_base: float | None = None
    seed: int = 0

    def __post_init__(self):
        chosen = [s for s in (self.preset, self.snapshot, self.coeffs) if s]
        if len(chosen) != 1:
            raise ValueError("exactly one of initial.preset/snapshot/coeffs must be set")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"initial.preset must be one of {PRESETS}, got {self.preset!r}")
        if self.amplitude < 0.0 or self.v_amplitude < 0.0:
            raise ValueError("initial amplitudes must be nonnegative")


@dataclass
class OutputConfig:
    dir: str = "out"
    snapshot_every: int = 0   # 0: initial and final snapshots only


@dataclass
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    bounds: InitialBounds = field(default_factory=lambda: InitialBounds(1.0, 1.0, 1.0))
    grid: GridConfig = field(default_factory=GridConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    c_est: float = 1.0
    drift_tol: float = 1e-3


_SECTIONS = {
    "model": (ModelParams, "model"),
    "bounds": (InitialBounds, "bounds"),
    "grid": (GridConfig, "grid"),
    "integrator": (IntegratorConfig, "integrator"),
    "initial": (InitialConfig, "initial"),
    "output": (OutputConfig, "output"),
}

# keys outside any dataclass section
_TOP_KEYS = {"model.c_est": "c_est", "integrator.drift_tol": "drift_tol"}


def _coerce(raw: str, target_type, key: str, errors):
    raw = raw.strip()
    if raw.lower() in ("none", ""):
        return None
    try:
        if target_type is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw.strip("'\"")
    except ValueError:
        errors.append(f"{key}: cannot parse {raw!r} as {target_type.__name__}")
        return None


def parse_config(text: str) -> RunConfig:
    """Parse the dotted key-value format, collecting all errors before raising."""
    errors = []
    values: dict[str, dict] = {name: {} for name in _SECTIONS}
    top: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'section.key = value', got {stripped!r}")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key in _TOP_KEYS:
            val = _coerce(raw, float, key, errors)
            if val is not None:
                top[_TOP_KEYS[key]] = val
            continue
        if "." not in key:
            errors.append(f"line {lineno}: key {key!r} missing section prefix")
            continue
        section, name = key.split(".", 1)
        if section not in _SECTIONS:
            errors.append(f"line {lineno}: unknown section {section!r}")
            continue
        cls, _ = _SECTIONS[section]
        field_types = {f.name: f.type for f in dc_fields(cls)}
        if name not in field_types:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        ftype = field_types[name]
        if isinstance(ftype, str):
            base = ftype.split("|")[0].strip()
            target = {"int": int, "float": float, "bool": bool, "str": str}.get(base, str)
        else:
            target = ftype
        val = _coerce(raw, target, key, errors)
        if val is not None or "None" in str(ftype):
            values[section][name] = val
    built = {}
    for section, (cls, attr) in _SECTIONS.items():
        try:
            built[attr] = cls(**values[section])
        except (TypeError, ValueError) as exc:
            errors.append(f"section {section}: {exc}")
    if errors:
        raise ConfigError(errors)
    return RunConfig(**built, **top)


def serialize_config(cfg: RunConfig) -> str:
    """Write a config back out; parse(serialize(cfg)) reproduces cfg."""
    lines = []
    for section, (cls, attr) in _SECTIONS.items():
        obj = getattr(cfg, attr)
        for f in dc_fields(cls):
            val = getattr(obj, f.name)
            if val is None:
                val = "none"
            elif isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{section}.{f.name} = {val}")
        lines.append("")
    lines.append(f"model.c_est = {cfg.c_est!r}")
    lines.append(f"integrator.drift_tol = {cfg.drift_tol!r}")
    return "\n".join(lines) + "\n"


# --- initial-data presets ---------------------------------------------------

# (mode vector, amplitude, phase); spans shells up to |k|^2 = 35 so a 16-cube
# run is resolution-marginal while a 32-cube run resolves the same function.
# omega phases are all pi: every mode attains its minimum at the origin, so
# the normalized profile touches -1 exactly at a point of every mesh and the
# solution rides the lower barrier from t=0.
_PI = math.pi
_OMEGA_MODES = (
    ((1, 0, 0), 1.00, _PI), ((0, 1, 1), 0.80, _PI), ((2, 1, 0), 0.70, _PI),
    ((1, 2, 2), 0.50, _PI), ((3, 1, 1), 0.35, _PI), ((3, 3, 1), 0.25, _PI),
    ((4, 2, 1), 0.20, _PI), ((5, 1, 1), 0.12, _PI), ((3, 4, 2), 0.10, _PI),
    ((5, 3, 1), 0.06, _PI),
)
_B_MODES = (
    ((0, 1, 0), 1.00, 1.70), ((1, 1, 0), 0.80, 0.20), ((0, 2, 1), 0.70, 2.90),
    ((2, 2, 1), 0.50, 1.50), ((1, 3, 1), 0.35, 0.60), ((1, 3, 3), 0.25, 2.40),
    ((2, 4, 1), 0.20, 1.00), ((1, 1, 5), 0.12, 0.10), ((2, 3, 4), 0.10, 1.80),
    ((1, 3, 5), 0.06, 2.70),
)
_V_MODES = (
    ((0, 1, 0), (1.0, 0.0, 0.5), 0.00), ((0, 0, 1), (0.7, -0.6, 0.0), 1.20),
    ((1, 1, 0), (0.4, -0.4, 0.8), 2.10), ((2, 0, 1), (0.0, 0.9, 0.3), 0.80),
    ((1, 2, 1), (0.5, 0.2, -0.9), 1.60),
)


def _eval_modes(modes, mesh, lengths):
    x, y, z = mesh
    kx = [2.0 * math.pi / L for L in lengths]
    out = np.zeros_like(x)
    for (n1, n2, n3), amp, phase in modes:
        out += amp * np.cos(n1 * kx[0] * x + n2 * kx[1] * y + n3 * kx[2] * z + phase)
    return out


def _norm_mesh(lengths):
    axes = [np.arange(_NORM_MESH) * L / _NORM_MESH for L in lengths]
    return np.meshgrid(*axes, indexing="ij")


def _scalar_profile(modes, grid: SpectralGrid):
    """Profile normalized so its minimum on the fixed fine mesh is exactly -1."""
    ref = _eval_modes(modes, _norm_mesh(grid.lengths), grid.lengths)
    low = abs(float(ref.min()))
    up = float(ref.max()) / low
    vals = _eval_modes(modes, grid.mesh(), grid.lengths) / low
    return vals, up


def build_initial(initial: InitialConfig, grid: SpectralGrid, bounds: InitialBounds):
    """Gridded admissible (v0, omega0, b0) for a preset; deterministic in the seed."""
    if initial.preset is None:
        raise ValueError("build_initial needs a preset; snapshot/coeffs inputs are loaded elsewhere")
    omega_base = initial.omega_base
    if omega_base is None:
        omega_base = 0.5 * (bounds.omega_min + bounds.omega_max)
    b_base = initial.b_base
    if b_base is None:
        b_base = bounds.b_min if initial.preset == "constant" \
            else bounds.b_min + initial.amplitude
    if not (bounds.omega_min <= omega_base <= bounds.omega_max):
        raise ValueError(f"omega_base {omega_base} outside [{bounds.omega_min}, {bounds.omega_max}]")
    if b_base < bounds.b_min:
        raise ValueError(f"b_base {b_base} below b_min {bounds.b_min}")

    shape = grid.shape
    if initial.preset == "constant":
        v0 = np.zeros((3,) + shape)
        return v0, np.full(shape, omega_base), np.full(shape, b_base)

    if initial.preset == "perturbed-constant":
        omega_modes, b_modes, v_modes = _OMEGA_MODES, _B_MODES, _V_MODES
    else:  # random-smooth
        rng = np.random.default_rng(initial.seed)
        def draw(n_modes, shell=6):
            modes = []
            for _ in range(n_modes):
                while True:
                    n = tuple(int(v) for v in rng.integers(-2, 3, size=3))
                    if 0 < n[0] ** 2 + n[1] ** 2 + n[2] ** 2 <= shell:
                        break
                modes.append((n, float(rng.uniform(0.2, 1.0)), float(rng.uniform(0.0, 2.0 * math.pi))))
            return tuple(modes)
        omega_modes, b_modes = draw(6), draw(6)
        v_modes = tuple((n, tuple(rng.uniform(-1.0, 1.0, size=3)), ph)
                        for n, _, ph in draw(4))

    s_omega, up_omega = _scalar_profile(omega_modes, grid)
    s_b, _ = _scalar_profile(b_modes, grid)
    a_omega = min(initial.amplitude, omega_base - bounds.omega_min,
                  (bounds.omega_max - omega_base) / max(up_omega, 1e-300))
    a_b = min(initial.amplitude, b_base - bounds.b_min)
    omega0 = omega_base + a_omega * s_omega
    b0 = b_base + a_b * s_b

    mesh = grid.mesh()
    v0 = np.zeros((3,) + shape)
    for n, vec, phase in v_modes:
        wave = _eval_modes(((n, 1.0, phase),), mesh, grid.lengths)
        for i in range(3):
            v0[i] += vec[i] * wave
    sup = float(np.sqrt((v0 ** 2).sum(axis=0)).max())
    if sup > 0.0:
        v0 *= initial.v_amplitude / sup
    return v0, omega0, b0
