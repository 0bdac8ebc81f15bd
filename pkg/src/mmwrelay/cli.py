"""Command-line front end for the relay-selection simulator.

Subcommands
-----------
run                single scenario point, one CSV row per policy
sweep              parameter sweeps (defaults: k, v_max, dt, load grids)
validate-geometry  cross-check the exact blockage predicate against a
                   dense-sampling oracle on randomized cases
link-budget        print the derived narrowband link-budget figures

Configuration values are resolved with the precedence

    command line  >  MMWRELAY_* environment  >  INI file  >  built-in defaults

and the effective configuration is echoed into the output as ``#`` comment
lines so every results file is self-describing.  Unknown keys anywhere in the
configuration are rejected rather than ignored.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import tempfile
import time
from dataclasses import fields, replace
from typing import Callable, Optional, Sequence, TextIO

from . import oracle
from .blockage import DetectionModel
from .channel import (
    ChannelParams,
    db_to_linear,
    max_los_range,
    path_loss_dbm,
)
from .sim import (
    POLICIES,
    InvalidConfigError,
    ResultRow,
    ScenarioConfig,
    resolve_sweep_field,
    run_experiment,
)

ENV_PREFIX = "MMWRELAY_"

CSV_HEADER = (
    "sweep_param,sweep_value,policy,avg_throughput_bps,packet_loss,"
    "avg_delay_steps,sent,delivered,dropped_mobility,dropped_blockage,"
    "dropped_nocand,runs,seed"
)

#: sweeps performed by ``mmwrelay sweep`` when no --sweep is given
DEFAULT_SWEEPS: tuple[tuple[str, tuple[float, ...]], ...] = (
    ("k", (0, 10, 20, 30)),
    ("v_max", (5, 10, 15, 20)),
    ("dt", (0.5, 1.0, 1.5, 2.0)),
    ("load", (1, 2, 3, 4)),
)


class ConfigError(Exception):
    """Raised for malformed configuration input (file, environment, or flag)."""


# ---------------------------------------------------------------------------
# value parsing


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_int(raw: str) -> int:
    return int(raw.strip())


def _parse_float(raw: str) -> float:
    return float(raw.strip())


def _parse_str(raw: str) -> str:
    return raw.strip()


def _parse_optional(inner: Callable[[str], object]) -> Callable[[str], object]:
    def parse(raw: str):
        if raw.strip().lower() in ("", "none", "null"):
            return None
        return inner(raw)

    return parse


_ANNOTATION_PARSERS: dict[str, Callable[[str], object]] = {
    "int": _parse_int,
    "float": _parse_float,
    "bool": _parse_bool,
    "str": _parse_str,
    "Optional[int]": _parse_optional(_parse_int),
    "Optional[float]": _parse_optional(_parse_float),
    "float | None": _parse_optional(_parse_float),
}


def _section_parsers(cls) -> dict[str, Callable[[str], object]]:
    """Map each scalar dataclass field to a string parser for its type."""
    out: dict[str, Callable[[str], object]] = {}
    for f in fields(cls):
        parser = _ANNOTATION_PARSERS.get(str(f.type))
        if parser is not None:
            out[f.name] = parser
    return out


_SCENARIO_KEYS = _section_parsers(ScenarioConfig)
_CHANNEL_KEYS = _section_parsers(ChannelParams)
_DETECTION_KEYS = _section_parsers(DetectionModel)

_SECTIONS: dict[str, dict[str, Callable[[str], object]]] = {
    "scenario": _SCENARIO_KEYS,
    "channel": _CHANNEL_KEYS,
    "detection": _DETECTION_KEYS,
}


def _find_line(text: str, section: str, key: str) -> Optional[int]:
    """Best-effort line number of `key` inside `[section]` for error messages."""
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip().lower()
            continue
        if current == section:
            head = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if head == key:
                return no
    return None


def load_config_file(path: str) -> dict[str, dict[str, str]]:
    """Read an INI file into {section: {key: raw value}}, validating names.

    Unknown sections or keys raise ConfigError naming the offending entry and
    its line so typos never silently fall back to defaults.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc

    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path!r}: {exc}") from exc

    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        name = section.strip().lower()
        if name not in _SECTIONS:
            raise ConfigError(
                f"{path}: unknown section [{section}]"
                f" (expected one of {', '.join(sorted(_SECTIONS))})"
            )
        known = _SECTIONS[name]
        bucket = out.setdefault(name, {})
        for key, raw in parser.items(section):
            if key not in known:
                line = _find_line(text, name, key)
                where = f"{path}:{line}" if line is not None else path
                raise ConfigError(
                    f"{where}: unknown key {key!r} in section [{name}]"
                )
            bucket[key] = raw
    return out


def env_overrides(environ=os.environ) -> dict[str, dict[str, str]]:
    """Collect MMWRELAY_SECTION_KEY (or MMWRELAY_KEY for [scenario]) values."""
    out: dict[str, dict[str, str]] = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section = None
        key = None
        for sec in _SECTIONS:
            prefix = sec + "_"
            if rest.startswith(prefix) and rest[len(prefix):] in _SECTIONS[sec]:
                section, key = sec, rest[len(prefix):]
                break
        if section is None and rest in _SCENARIO_KEYS:
            section, key = "scenario", rest
        if section is None:
            raise ConfigError(f"unrecognized environment variable {name}")
        out.setdefault(section, {})[key] = raw
    return out


def parse_set_option(raw: str) -> tuple[str, str, str]:
    """Split a --set argument 'key=value' or 'section.key=value'."""
    if "=" not in raw:
        raise ConfigError(f"--set expects key=value, got {raw!r}")
    key, value = raw.split("=", 1)
    key = key.strip().lower()
    if "." in key:
        section, key = key.split(".", 1)
    else:
        section = None
        for sec, known in _SECTIONS.items():
            if key in known:
                section = sec
                break
        if section is None:
            raise ConfigError(f"--set: unknown key {key!r}")
    if section not in _SECTIONS:
        raise ConfigError(f"--set: unknown section {section!r} in {raw!r}")
    if key not in _SECTIONS[section]:
        raise ConfigError(f"--set: unknown key {key!r} in section [{section}]")
    return section, key, value


def build_config(
    config_path: Optional[str] = None,
    set_options: Sequence[str] = (),
    seed: Optional[int] = None,
    runs: Optional[int] = None,
    policy: Optional[str] = None,
    environ=os.environ,
) -> ScenarioConfig:
    """Resolve the effective scenario from all configuration sources."""
    layers: list[dict[str, dict[str, str]]] = []
    if config_path is not None:
        layers.append(load_config_file(config_path))
    layers.append(env_overrides(environ))

    flat: dict[str, dict[str, str]] = {"scenario": {}, "channel": {}, "detection": {}}
    for layer in layers:
        for section, values in layer.items():
            flat[section].update(values)
    for raw in set_options:
        section, key, value = parse_set_option(raw)
        flat[section][key] = value

    parsed: dict[str, dict[str, object]] = {}
    for section, values in flat.items():
        known = _SECTIONS[section]
        bucket: dict[str, object] = {}
        for key, raw in values.items():
            try:
                bucket[key] = known[key](raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {section}.{key}: {raw!r} ({exc})"
                ) from exc
        parsed[section] = bucket

    channel = ChannelParams(**parsed["channel"])
    detection = DetectionModel(**parsed["detection"])
    cfg = ScenarioConfig(channel=channel, detection=detection, **parsed["scenario"])

    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if runs is not None:
        cfg = replace(cfg, runs=runs)
    if policy is not None:
        cfg = replace(cfg, policy=policy)
    cfg.validate()
    return cfg


def parse_policies(raw: Optional[str]) -> tuple[str, ...]:
    if raw is None:
        return tuple(POLICIES)
    names = tuple(p.strip() for p in raw.split(",") if p.strip())
    if not names:
        raise ConfigError("--policy: empty policy list")
    for name in names:
        if name not in POLICIES:
            raise ConfigError(
                f"--policy: unknown policy {name!r}"
                f" (expected one of {', '.join(POLICIES)})"
            )
    return names


def parse_sweep_option(raw: str, cfg: ScenarioConfig) -> tuple[str, tuple[float, ...]]:
    """Parse 'param=v1,v2,...' and validate the parameter name and values."""
    if "=" not in raw:
        raise ConfigError(f"--sweep expects param=v1,v2,..., got {raw!r}")
    param, tail = raw.split("=", 1)
    param = param.strip().lower()
    try:
        resolve_sweep_field(cfg, param)
    except InvalidConfigError as exc:
        raise ConfigError(f"--sweep: {exc}") from exc
    try:
        values = tuple(float(v) for v in tail.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"--sweep: bad value in {raw!r} ({exc})") from exc
    if not values:
        raise ConfigError(f"--sweep: no values in {raw!r}")
    return param, values


# ---------------------------------------------------------------------------
# output formatting


def _fmt_value(value: object) -> str:
    """Deterministic, locale-independent rendering for the config echo."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def effective_config_lines(cfg: ScenarioConfig) -> list[str]:
    """The resolved scenario as '# key = value' lines (simulation inputs only;
    execution details such as worker count do not affect results and are not
    echoed)."""
    lines = []
    for f in fields(cfg):
        if f.name in ("channel", "detection"):
            continue
        lines.append(f"# scenario.{f.name} = {_fmt_value(getattr(cfg, f.name))}")
    for f in fields(cfg.channel):
        lines.append(f"# channel.{f.name} = {_fmt_value(getattr(cfg.channel, f.name))}")
    for f in fields(cfg.detection):
        if f.name == "radar_positions":
            continue
        lines.append(
            f"# detection.{f.name} = {_fmt_value(getattr(cfg.detection, f.name))}"
        )
    return lines


def format_row(row: ResultRow) -> str:
    return ",".join(
        (
            row.sweep_param,
            format(row.sweep_value, ".6g"),
            row.policy,
            format(row.avg_throughput_bps, ".6f"),
            format(row.packet_loss, ".6f"),
            format(row.avg_delay_steps, ".6f"),
            str(row.sent),
            str(row.delivered),
            str(row.dropped_mobility),
            str(row.dropped_blockage),
            str(row.dropped_nocand),
            str(row.runs),
            str(row.seed),
        )
    )


def render_results(cfg: ScenarioConfig, rows: Sequence[ResultRow]) -> str:
    lines = effective_config_lines(cfg)
    lines.append(CSV_HEADER)
    lines.extend(format_row(r) for r in rows)
    return "\n".join(lines) + "\n"


def write_output(text: str, out: Optional[str]) -> None:
    """Write to stdout, or atomically replace the target file."""
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mmwrelay-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# ---------------------------------------------------------------------------
# subcommands


def _progress_printer(verbose: bool, stream: TextIO) -> Optional[Callable[[str], None]]:
    if not verbose:
        return None

    def emit(msg: str) -> None:
        print(f"[mmwrelay] {msg}", file=stream, flush=True)

    return emit


def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_config(
        config_path=args.config,
        set_options=args.set or (),
        seed=args.seed,
        runs=args.runs,
        policy=None,
    )
    policies = parse_policies(args.policy)
    rows = run_experiment(
        cfg,
        sweeps=(),
        policies=policies,
        workers=args.workers,
        progress=_progress_printer(args.verbose, sys.stderr),
    )
    write_output(render_results(cfg, rows), args.out)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = build_config(
        config_path=args.config,
        set_options=args.set or (),
        seed=args.seed,
        runs=args.runs,
        policy=None,
    )
    policies = parse_policies(args.policy)
    if args.sweep:
        sweeps = [parse_sweep_option(raw, cfg) for raw in args.sweep]
    else:
        sweeps = list(DEFAULT_SWEEPS)
    rows = run_experiment(
        cfg,
        sweeps=sweeps,
        policies=policies,
        workers=args.workers,
        progress=_progress_printer(args.verbose, sys.stderr),
    )
    write_output(render_results(cfg, rows), args.out)
    return 0


def cmd_validate_geometry(args: argparse.Namespace) -> int:
    report = oracle.agreement_suite(
        n=args.samples, seed=args.seed, delta=args.boundary_band
    )
    text = report.summary() + "\n"
    write_output(text, args.out)
    if args.out not in (None, "-"):
        print(report.summary().splitlines()[-1], file=sys.stderr)
    return 0 if report.ok else 1


def cmd_link_budget(args: argparse.Namespace) -> int:
    cfg = build_config(config_path=args.config, set_options=args.set or ())
    ch = cfg.channel
    gamma_dbm = ch.gamma_dbm()
    reach = max_los_range(ch)
    # Shannon capacity depends on SNR and bandwidth alone.
    capacity = ch.bandwidth_hz * math.log2(1.0 + db_to_linear(args.snr_db))
    lines = [
        f"tx_power_dbm = {ch.tx_power_dbm:.4f}",
        f"eirp_gain_db = {ch.tx_gain_db + ch.rx_gain_db:.4f}",
        f"ref_rx_power_dbm_at_{ch.ref_dist_m:g}m = "
        f"{path_loss_dbm(ch.ref_dist_m, 0.0, ch):.4f}",
        f"noise_floor_dbm = {ch.noise_floor_dbm():.4f}",
        f"rx_sensitivity_dbm = {gamma_dbm:.4f}",
        f"max_los_range_m = {reach:.4f}",
        f"capacity_bps_at_{args.snr_db:g}dB = {capacity:.1f}",
    ]
    write_output("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser, with_run_options: bool) -> None:
    parser.add_argument(
        "--config", metavar="FILE", help="INI file with [scenario]/[channel]/[detection]"
    )
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override a single config key (repeatable), e.g. v_max=15",
    )
    parser.add_argument("--out", metavar="FILE", help="output path (default: stdout)")
    if with_run_options:
        parser.add_argument("--seed", type=int, help="base random seed")
        parser.add_argument("--runs", type=int, help="replications per point")
        parser.add_argument(
            "--policy",
            metavar="LIST",
            help=f"comma-separated policies to run (default: {','.join(POLICIES)})",
        )
        parser.add_argument(
            "--workers", type=int, default=1, help="worker processes (default: 1)"
        )
        parser.add_argument(
            "-v", "--verbose", action="store_true", help="progress messages on stderr"
        )


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwrelay",
        description="Relay-selection simulator for mmWave device-to-device links",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a single scenario point")
    _add_common(p_run, with_run_options=True)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="simulate parameter sweeps")
    _add_common(p_sweep, with_run_options=True)
    p_sweep.add_argument(
        "--sweep",
        action="append",
        metavar="PARAM=V1,V2,...",
        help="sweep one parameter (repeatable); default sweeps k, v_max, dt, load",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_geom = sub.add_parser(
        "validate-geometry",
        help="cross-check the blockage predicate against a sampling oracle",
    )
    p_geom.add_argument("--samples", type=int, default=100_000)
    p_geom.add_argument("--seed", type=int, default=0)
    p_geom.add_argument(
        "--boundary-band",
        type=float,
        default=0.02,
        metavar="METERS",
        help="exclusion band around the interference threshold (default: 0.02)",
    )
    p_geom.add_argument("--out", metavar="FILE", help="report path (default: stdout)")
    p_geom.set_defaults(func=cmd_validate_geometry)

    p_link = sub.add_parser(
        "link-budget", help="print derived link-budget figures for the channel config"
    )
    p_link.add_argument(
        "--config", metavar="FILE", help="INI file with a [channel] section"
    )
    p_link.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_link.add_argument(
        "--snr-db",
        type=float,
        default=20.0,
        help="SNR at which to report Shannon capacity (default: 20)",
    )
    p_link.add_argument("--out", metavar="FILE", help="output path (default: stdout)")
    p_link.set_defaults(func=cmd_link_budget)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        status = args.func(args)
    except (ConfigError, InvalidConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    if getattr(args, "verbose", False):
        print(
            f"[mmwrelay] finished in {time.monotonic() - started:.1f}s",
            file=sys.stderr,
        )
    return status


if __name__ == "__main__":
    sys.exit(main())
