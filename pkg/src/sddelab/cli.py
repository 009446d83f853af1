"""Config-driven command line front end.

Every experiment is described by a small TOML file with one ``command`` key
and a handful of sections.  Parsing is strict: an unrecognized section or key
aborts with a message naming the offender, so a typo like ``dtmax`` cannot
silently fall back to a default.  Each run writes its artifacts plus a
``manifest.json`` echoing the fully-resolved configuration (defaults
included), and reruns with the same config and seed are byte-identical —
CSV timestamp headers are optional and suppressed with ``--no-timestamp``.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib

from .catalog import get_model
from .comparison import coupled_sandwich, write_sandwich_csv
from .montecarlo import (
    SddeEventRunner,
    config_fingerprint,
    dichotomy_experiment,
    equivalence_experiment,
    explosion_histogram,
    write_histogram_csv,
)
from .noise import NoiseSource
from .sde import IntegratorConfig, freeze_delay, simulate_sde, write_trajectory_csv
from .sdde import build_initial_from_constant, simulate_sdde
from .timechange import diagnose_time_change, ks_critical_value, write_diagnostics_csv
from .transform import neg_log_map, run_transform_pair
from .types import Segment

__all__ = ["main", "run", "ConfigError", "COMMANDS"]


class ConfigError(ValueError):
    """A configuration file failed strict validation."""


_REQUIRED = object()

# section -> key -> (type, default); _REQUIRED means the key must be present
_INTEGRATOR_KEYS = {
    "dt_max": (float, _REQUIRED),
    "horizon": (float, _REQUIRED),
    "extinction_eps": (float, 1e-8),
    "ladder_top": (float, 1e8),
}
_MC_KEYS = {"n": (int, 1), "base_seed": (int, 0)}
_OUTPUT_KEYS = {"directory": (str, "out")}
_SEGMENT_KEYS = {
    "kind": (str, "constant"),
    "value": (float, 1.0),
    "a": (float, None),
    "x0": (float, None),
    "eps": (float, 0.1),
}

COMMANDS = {
    "simulate": {
        "model": None,  # validated against the model factory
        "sde": {"a": (float, _REQUIRED), "x0": (float, _REQUIRED)},
        "integrator": _INTEGRATOR_KEYS,
        "monte_carlo": _MC_KEYS,
        "output": _OUTPUT_KEYS,
    },
    "simulate-delay": {
        "model": None,
        "segment": _SEGMENT_KEYS,
        "integrator": _INTEGRATOR_KEYS,
        "monte_carlo": _MC_KEYS,
        "output": _OUTPUT_KEYS,
    },
    "sandwich": {
        "model": None,
        "segment": _SEGMENT_KEYS,
        "integrator": _INTEGRATOR_KEYS,
        "monte_carlo": _MC_KEYS,
        "sandwich": {"delta": (float, 1e-6)},
        "output": _OUTPUT_KEYS,
    },
    "transform-check": {
        "model": None,
        "sde": {"a": (float, _REQUIRED), "x0": (float, _REQUIRED)},
        "integrator": _INTEGRATOR_KEYS,
        "monte_carlo": _MC_KEYS,
        "output": _OUTPUT_KEYS,
    },
    "timechange": {
        "timechange": {"kind": (str, "constant"), "sigma": (float, 1.0)},
        "model": None,
        "sde": {"a": (float, None), "x0": (float, None)},
        "integrator": _INTEGRATOR_KEYS,
        "monte_carlo": _MC_KEYS,
        "output": _OUTPUT_KEYS,
    },
    "histogram": {
        "model": None,
        "segment": _SEGMENT_KEYS,
        "integrator": _INTEGRATOR_KEYS,
        "monte_carlo": _MC_KEYS,
        "output": _OUTPUT_KEYS,
    },
    "equivalence": {
        "model": None,
        "segment": _SEGMENT_KEYS,
        "integrator": _INTEGRATOR_KEYS,
        "monte_carlo": _MC_KEYS,
        "equivalence": {"ramp_eps": (float, 0.1)},
        "output": _OUTPUT_KEYS,
    },
    "dichotomy": {
        "model": None,
        "integrator": _INTEGRATOR_KEYS,
        "monte_carlo": _MC_KEYS,
        "output": _OUTPUT_KEYS,
    },
}

_OPTIONAL_SECTIONS = {
    # sections a command tolerates leaving out entirely (defaults apply);
    # "model" is required wherever it appears except timechange
    "timechange": {"model", "sde"},
}


def _coerce(value, typ, where: str):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key {where} must be a number, got {value!r}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key {where} must be an integer, got {value!r}")
        return int(value)
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"key {where} must be a string, got {value!r}")
        return value
    raise AssertionError(f"unhandled schema type {typ}")


def _resolve_section(name: str, raw: dict, keys: dict, command: str) -> dict:
    # report stray keys first: a typo like "dtmax" should be named, not
    # reported as its intended key gone missing
    for key in raw:
        if key not in keys:
            raise ConfigError(f"unknown key {key!r} in section {name!r} for command {command!r}")
    out = {}
    for key, (typ, default) in keys.items():
        if key in raw:
            out[key] = _coerce(raw[key], typ, f"{name}.{key}")
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {name}.{key} for command {command!r}")
        else:
            out[key] = default
    return out


def _resolve_model(raw: dict, command: str) -> dict:
    if "name" not in raw:
        raise ConfigError(f"missing required key model.name for command {command!r}")
    name = _coerce(raw["name"], str, "model.name")
    params = {}
    for key, value in raw.items():
        if key == "name":
            continue
        params[key] = _coerce(value, float, f"model.{key}")
    try:
        model = get_model(name, **params)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return {"name": name, **{k: v for k, v in model.params.items()}}


def resolve_config(config: dict) -> dict:
    """Validate a parsed TOML mapping and fill in every default."""
    if "command" not in config:
        raise ConfigError("missing top-level key 'command'")
    command = config["command"]
    if command not in COMMANDS:
        known = ", ".join(sorted(COMMANDS))
        raise ConfigError(f"unknown command {command!r}; known commands: {known}")
    schema = COMMANDS[command]
    optional = _OPTIONAL_SECTIONS.get(command, set())

    for section in config:
        if section == "command":
            continue
        if section not in schema:
            raise ConfigError(f"unknown section {section!r} for command {command!r}")
        if not isinstance(config[section], dict):
            raise ConfigError(f"section {section!r} must be a table")

    resolved: dict = {"command": command}
    for section, keys in schema.items():
        raw = config.get(section)
        if raw is None:
            if keys is None:  # model section
                if section in optional:
                    resolved[section] = None
                    continue
                raise ConfigError(f"missing required section {section!r} for command {command!r}")
            raw = {}
        if keys is None:
            resolved[section] = _resolve_model(raw, command)
        else:
            resolved[section] = _resolve_section(section, raw, keys, command)

    segment = resolved.get("segment")
    if segment is not None:
        kind = segment["kind"]
        if kind not in ("constant", "ramp"):
            raise ConfigError(f"segment.kind must be 'constant' or 'ramp', got {kind!r}")
        if kind == "ramp" and (segment["a"] is None or segment["x0"] is None):
            raise ConfigError("segment.kind='ramp' requires segment.a and segment.x0")
    return resolved


def _decades_ladder(top: float) -> tuple[float, ...]:
    if top <= 10.0:
        return (top,)
    rungs = []
    rung = 10.0
    while rung < top * (1.0 - 1e-9):
        rungs.append(rung)
        rung *= 10.0
    rungs.append(top)
    return tuple(rungs)


def _integrator(section: dict) -> IntegratorConfig:
    return IntegratorConfig(
        dt_max=section["dt_max"],
        horizon=section["horizon"],
        ladder=_decades_ladder(section["ladder_top"]),
        extinction_eps=section["extinction_eps"],
    )


def _segment(section: dict, delay: float) -> Segment:
    if section["kind"] == "constant":
        return Segment.constant(section["value"], delay)
    return build_initial_from_constant(section["a"], section["x0"], section["eps"], delay)


def _model(resolved: dict):
    spec = dict(resolved["model"])
    name = spec.pop("name")
    return get_model(name, **spec)


def _fingerprint_payload(resolved: dict) -> dict:
    payload = {k: v for k, v in resolved.items() if k != "output"}
    mc = payload.get("monte_carlo")
    if mc is not None:
        payload["monte_carlo"] = {k: v for k, v in mc.items() if k != "base_seed"}
    return payload


def _write_manifest(resolved: dict, outdir: Path) -> None:
    manifest = dict(resolved)
    manifest["fingerprint"] = config_fingerprint(_fingerprint_payload(resolved))
    (outdir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def run(resolved: dict, *, workers: int = 1, timestamp: str | None = None) -> str:
    """Execute a resolved configuration; returns a one-line summary."""
    outdir = Path(resolved["output"]["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    _write_manifest(resolved, outdir)
    command = resolved["command"]
    mc = resolved["monte_carlo"]
    payload = _fingerprint_payload(resolved)

    if command == "simulate":
        model = _model(resolved)
        config = _integrator(resolved["integrator"])
        problem = freeze_delay(model, resolved["sde"]["a"], resolved["sde"]["x0"])
        noise = NoiseSource(mc["base_seed"], config.dt_max)
        result = simulate_sde(problem, config, noise)
        write_trajectory_csv(result, outdir / "trajectory.csv", timestamp)
        return f"{result.event.compact()} -> {outdir / 'trajectory.csv'}"

    if command == "simulate-delay":
        model = _model(resolved)
        config = _integrator(resolved["integrator"])
        phi = _segment(resolved["segment"], model.delay)
        noise = NoiseSource(mc["base_seed"], config.dt_max)
        result = simulate_sdde(model, phi, config, noise)
        write_trajectory_csv(result, outdir / "trajectory.csv", timestamp)
        return f"{result.event.compact()} -> {outdir / 'trajectory.csv'}"

    if command == "sandwich":
        model = _model(resolved)
        config = _integrator(resolved["integrator"])
        phi = _segment(resolved["segment"], model.delay)
        delta = resolved["sandwich"]["delta"]
        reports = [
            coupled_sandwich(model, phi, config, seed, delta=delta)
            for seed in range(mc["base_seed"], mc["base_seed"] + mc["n"])
        ]
        write_sandwich_csv(reports, outdir / "sandwich.csv", timestamp)
        worst = max((r.violation_fraction for r in reports), default=0.0)
        return f"{len(reports)} runs, worst violation fraction {worst:.3g} -> {outdir / 'sandwich.csv'}"

    if command == "transform-check":
        model = _model(resolved)
        config = _integrator(resolved["integrator"])
        problem = freeze_delay(model, resolved["sde"]["a"], resolved["sde"]["x0"])
        smap = neg_log_map()
        rows = []
        for seed in range(mc["base_seed"], mc["base_seed"] + mc["n"]):
            pair = run_transform_pair(problem, smap, config, seed)
            rows.append(
                (seed, pair.sup_discrepancy, pair.direct.event.compact(),
                 pair.transformed.event.compact())
            )
        with open(outdir / "transform.csv", "w") as fh:
            if timestamp is not None:
                fh.write(f"# generated={timestamp}\n")
            fh.write("seed,sup_discrepancy,event_direct,event_transformed\n")
            for seed, sup, ev_d, ev_t in rows:
                fh.write(f"{seed},{sup!r},{ev_d},{ev_t}\n")
        worst = max(r[1] for r in rows)
        return f"worst sup discrepancy {worst:.3g} -> {outdir / 'transform.csv'}"

    if command == "timechange":
        config = _integrator(resolved["integrator"])
        dt = config.dt_max
        n_steps = int(round(config.horizon / dt))
        noise = NoiseSource(mc["base_seed"], dt)
        tc = resolved["timechange"]
        if tc["kind"] == "constant":
            sigma_values = [tc["sigma"]] * (n_steps + 1)
        elif tc["kind"] == "path":
            if resolved["model"] is None or resolved["sde"]["a"] is None:
                raise ConfigError("timechange.kind='path' needs [model] and [sde] sections")
            model = _model(resolved)
            problem = freeze_delay(model, resolved["sde"]["a"], resolved["sde"]["x0"])
            path = simulate_sde(problem, config, noise)
            sigma_values = [problem.diffusion(x) for x in path.values]
        else:
            raise ConfigError(f"timechange.kind must be 'constant' or 'path', got {tc['kind']!r}")
        diag = diagnose_time_change(sigma_values, noise, dt)
        write_diagnostics_csv(diag, outdir / "diagnostics.csv", timestamp)
        crit = ks_critical_value(diag.n_steps)
        return (
            f"ks={diag.ks_statistic:.5f} (5% critical {crit:.5f}) -> "
            f"{outdir / 'diagnostics.csv'}"
        )

    if command == "histogram":
        model = _model(resolved)
        config = _integrator(resolved["integrator"])
        phi = _segment(resolved["segment"], model.delay)
        runner = SddeEventRunner(model, phi, config)
        hist = explosion_histogram(
            runner, mc["n"], mc["base_seed"], config.horizon,
            workers=workers, fingerprint_payload=payload,
        )
        write_histogram_csv(hist, outdir / "histogram.csv", timestamp)
        (outdir / "histogram.json").write_text(
            json.dumps(hist.to_json_dict(), sort_keys=True, indent=2) + "\n"
        )
        return f"bins={list(hist.bins)} censored={hist.censored} -> {outdir / 'histogram.csv'}"

    if command == "equivalence":
        model = _model(resolved)
        config = _integrator(resolved["integrator"])
        phi = _segment(resolved["segment"], model.delay)
        result = equivalence_experiment(
            model, phi, config, mc["n"], mc["base_seed"],
            workers=workers, ramp_eps=resolved["equivalence"]["ramp_eps"],
        )
        (outdir / "equivalence.json").write_text(result.to_json() + "\n")
        ok = result.forward_plus_ok and result.forward_minus_ok and result.converse_plus_ok
        return (
            f"sdde+={result.sdde_plus.estimate:.4f} sde(a2)+={result.sde_high_plus.estimate:.4f} "
            f"pattern_ok={ok} -> {outdir / 'equivalence.json'}"
        )

    if command == "dichotomy":
        spec = resolved["model"]
        if spec["name"] != "population":
            raise ConfigError(
                f"dichotomy runs on the population model, got model.name={spec['name']!r}"
            )
        integ = resolved["integrator"]
        report = dichotomy_experiment(
            spec["a"], spec["b"], spec["p"], integ["horizon"], mc["n"], mc["base_seed"],
            dt_max=integ["dt_max"], barrier=integ["extinction_eps"], workers=workers,
        )
        (outdir / "report.json").write_text(report.to_json() + "\n")
        return (
            f"extinction estimate {report.estimate:.4f} "
            f"[{report.ci_low:.4f}, {report.ci_high:.4f}] -> {outdir / 'report.json'}"
        )

    raise AssertionError(f"unhandled command {command!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sddelab",
        description="Run blow-up/extinction experiments described by a TOML config.",
    )
    parser.add_argument("--config", required=True, help="path to the experiment config file")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for replicas")
    parser.add_argument("--seed", type=int, default=None, help="override monte_carlo.base_seed")
    parser.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit the generated-at header from CSV outputs (byte-stable reruns)",
    )
    args = parser.parse_args(argv)

    try:
        with open(args.config, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return 2
    except tomllib.TOMLDecodeError as err:
        print(f"error: invalid TOML in {args.config}: {err}", file=sys.stderr)
        return 2

    try:
        resolved = resolve_config(raw)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"--seed must be nonnegative, got {args.seed}")
            resolved["monte_carlo"]["base_seed"] = args.seed
        if args.workers < 1:
            raise ConfigError(f"--workers must be at least 1, got {args.workers}")
        timestamp = (
            None
            if args.no_timestamp
            else datetime.now(timezone.utc).isoformat(timespec="seconds")
        )
        summary = run(resolved, workers=args.workers, timestamp=timestamp)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1

    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
