"""Flat key=value configuration covering every tunable constant."""

from __future__ import annotations

from pathlib import Path

from .costs import CostParams
from .geometry import IntersectionLayout
from .sim import Settings

_INT_KEYS = {"horizon", "step_cap"}


def settings_to_text(settings: Settings) -> str:
    layout, params = settings.layout, settings.params
    lines = [
        "# crossway run configuration",
        f"lane_width = {layout.lane_width!r}",
        f"box_half_width = {layout.box_half_width!r}",
        f"arm_length = {layout.arm_length!r}",
        f"exit_overhang = {layout.exit_overhang!r}",
        f"c_caution = {params.c_caution!r}",
        f"c_danger = {params.c_danger!r}",
        f"c_under = {params.c_under!r}",
        f"c_over = {params.c_over!r}",
        f"safe_distance = {params.safe_distance!r}",
        f"danger_distance = {params.danger_distance!r}",
        f"speed_limit = {params.speed_limit!r}",
        f"discount = {params.discount!r}",
        f"horizon = {params.horizon}",
        f"dt = {params.dt!r}",
        f"unlock_probability = {settings.unlock_probability!r}",
        f"fit_accept_probability = {settings.fit_accept_probability!r}",
        f"prediction_tol = {settings.prediction_tol!r}",
        f"step_cap = {settings.step_cap}",
    ]
    for i, pattern in enumerate(settings.patterns):
        lines.append(f"pattern_{i} = " + ",".join(repr(a) for a in pattern))
    return "\n".join(lines) + "\n"


def settings_from_text(text: str) -> Settings:
    values: dict[str, float | int] = {}
    patterns: dict[int, tuple[float, ...]] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key.startswith("pattern_"):
            patterns[int(key[len("pattern_"):])] = tuple(
                float(x) for x in val.split(","))
        elif key in _INT_KEYS:
            values[key] = int(val)
        else:
            values[key] = float(val)

    defaults = Settings()
    layout = IntersectionLayout(
        lane_width=values.get("lane_width", defaults.layout.lane_width),
        box_half_width=values.get("box_half_width",
                                  defaults.layout.box_half_width),
        arm_length=values.get("arm_length", defaults.layout.arm_length),
        exit_overhang=values.get("exit_overhang",
                                 defaults.layout.exit_overhang),
    )
    params = CostParams(
        c_caution=values.get("c_caution", defaults.params.c_caution),
        c_danger=values.get("c_danger", defaults.params.c_danger),
        c_under=values.get("c_under", defaults.params.c_under),
        c_over=values.get("c_over", defaults.params.c_over),
        safe_distance=values.get("safe_distance",
                                 defaults.params.safe_distance),
        danger_distance=values.get("danger_distance",
                                   defaults.params.danger_distance),
        speed_limit=values.get("speed_limit", defaults.params.speed_limit),
        discount=values.get("discount", defaults.params.discount),
        horizon=values.get("horizon", defaults.params.horizon),
        dt=values.get("dt", defaults.params.dt),
    )
    pattern_set = (tuple(patterns[i] for i in sorted(patterns))
                   if patterns else defaults.patterns)
    return Settings(
        layout=layout,
        params=params,
        patterns=pattern_set,
        unlock_probability=values.get("unlock_probability",
                                      defaults.unlock_probability),
        fit_accept_probability=values.get("fit_accept_probability",
                                          defaults.fit_accept_probability),
        prediction_tol=values.get("prediction_tol", defaults.prediction_tol),
        step_cap=values.get("step_cap", defaults.step_cap),
    )


def load_settings(path: str | Path) -> Settings:
    return settings_from_text(Path(path).read_text())


def save_settings(settings: Settings, path: str | Path) -> None:
    Path(path).write_text(settings_to_text(settings))
