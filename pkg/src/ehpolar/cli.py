"""Command-line entry point: ``ehpolar {construct,simulate,eh,scaling,verify}``.

A run is described by a JSON config file (``--config``); any flag given on the
command line overrides the matching config field.  Recognized fields::

    channel      {"type": "bsc", "p": 0.11} | {"type": "bec", "eps": 0.5}
                 | {"type": "zchannel", "delta": 0.5} | {"type": "matrix", "matrix": [[...], [...]]}
    p1           Pr{X = 1} for the input distribution (default 0.5; forced to P when energy is given)
    k            log2 of the blocklength (construct, simulate, eh)
    k_min, k_max inclusive sweep range (scaling)
    policy       "threshold" or "budget";  budget: error budget for "budget"
    nu           exponent of the selection thresholds (default 4)
    backend      auto | exact | binned | bec | mc
    energy       {"family": "constant", "value": v} | {"family": "bernoulli", "amplitude": A, "rho": r}
                 | {"family": "exponential", "mean": P}
    m            saving slots (``eh``; default from the saving-length rule)
    trials, seed, frozen_seed, workers, trace

On the command line ``--channel`` also accepts the short forms ``bsc:0.11``,
``bec:0.5`` and ``zchannel:0.5``.  Outputs go to ``--out``, else to
``$EHPOLAR_OUTDIR``, else to the working directory.  Every file carries the
config hash and library version.

Exit status: 0 success, 1 a verification check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import channel_from_spec
from .construction import build_code, build_tables, dump_tables
from .eh import EnergyProcess, save_and_transmit_run, saving_length
from .errors import EhPolarError
from .harness import SWEEP_SCHEMA, fit_exponent, run_checks, scaling_sweep, simulate_eh, simulate_plain, sweep_csv
from .polar_core import encode

OUTDIR_ENV = "EHPOLAR_OUTDIR"
COMMANDS = ("construct", "simulate", "eh", "scaling", "verify")
DEFAULTS = {"p1": 0.5, "policy": "threshold", "budget": 0.0, "nu": 4.0, "backend": "auto",
            "frozen_seed": 0, "workers": 1, "trace": False}
# fields that do not change any computed number
_UNHASHED = {"workers"}


class ConfigError(ValueError):
    pass


def _parse_channel(text: str) -> dict:
    if text.lstrip().startswith("{"):
        return json.loads(text)
    kind, _, val = text.partition(":")
    key = {"bsc": "p", "bec": "eps", "zchannel": "delta"}.get(kind)
    if key is None or not val:
        raise ConfigError(f"cannot parse channel {text!r}")
    return {"type": kind, key: float(val)}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ehpolar", description="Polar codes under energy-harvesting constraints.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        if name == "verify":
            continue
        p.add_argument("--channel", type=_parse_channel)
        p.add_argument("--p1", type=float)
        p.add_argument("--policy", choices=("threshold", "budget"))
        p.add_argument("--budget", type=float)
        p.add_argument("--nu", type=float)
        p.add_argument("--backend", choices=("auto", "exact", "binned", "bec", "mc"))
        if name == "scaling":
            p.add_argument("--k-min", dest="k_min", type=int)
            p.add_argument("--k-max", dest="k_max", type=int)
            p.add_argument("--energy", type=json.loads)
        else:
            p.add_argument("--k", type=int)
            p.add_argument("--frozen-seed", dest="frozen_seed", type=int)
        if name in ("simulate", "eh"):
            p.add_argument("--trials", type=int)
        if name == "eh":
            p.add_argument("--energy", type=json.loads)
            p.add_argument("--m", type=int)
            p.add_argument("--trace", action="store_true", default=None)
    return ap


def load_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        try:
            cfg.update(json.loads(args.config.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for key, val in vars(args).items():
        if key not in ("command", "config", "out") and val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps({k: v for k, v in cfg.items() if k not in _UNHASHED}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _need(cfg: dict, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"{cfg['command']}: missing required field(s): {', '.join(missing)}")


def _outdir(args) -> Path:
    out = args.out or Path(os.environ.get(OUTDIR_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stamp(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "version": __version__, "config": cfg}


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    print(path)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _code(cfg: dict):
    ch = channel_from_spec(cfg["channel"])
    zt = build_tables(ch, cfg["p1"], cfg["k"], cfg["backend"], seed=cfg.get("seed") or 0)
    spec = build_code(ch, cfg["p1"], cfg["k"], policy=cfg["policy"], budget=cfg["budget"], nu=cfg["nu"],
                      frozen_seed=cfg["frozen_seed"], tables=zt)
    return ch, zt, spec


def cmd_construct(cfg, out: Path) -> int:
    _need(cfg, "channel", "k", "seed")
    _, zt, spec = _code(cfg)
    h = config_hash(cfg)
    _write(out / "ztables.csv", dump_tables(zt, cfg["seed"], {"config": h}))
    _write(out / "infoset.json", _json({**_stamp(cfg), "info_set": list(spec.info_set),
                                        "rate": spec.rate, "n": spec.n}))
    return 0


def cmd_simulate(cfg, out: Path) -> int:
    _need(cfg, "channel", "k", "trials", "seed")
    _, _, spec = _code(cfg)
    rep = simulate_plain(spec, cfg["trials"], cfg["seed"], workers=cfg["workers"])
    _write(out / "report.json", _json({**_stamp(cfg), "report": rep.to_dict(), "info_set": list(spec.info_set)}))
    return 0


def cmd_eh(cfg, out: Path) -> int:
    _need(cfg, "channel", "k", "trials", "seed", "energy")
    proc = EnergyProcess.from_spec(cfg["energy"])
    # the input distribution of a save-and-transmit code is pinned to E[X] = P
    cfg["p1"] = proc.mean
    _, _, spec = _code(cfg)
    m = cfg.get("m")
    if m is None:
        m = saving_length(spec.n, proc.mean, proc.a)
    rep = simulate_eh(spec, proc, m, cfg["trials"], cfg["seed"], workers=cfg["workers"])
    _write(out / "eh_report.json", _json({**_stamp(cfg), "report": rep.to_dict(), "m": m,
                                          "info_set": list(spec.info_set)}))
    if cfg.get("trace"):
        rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], 1 << 32]))
        msg = rng.integers(0, 2, len(spec.info_set), dtype=np.uint8)
        _, x_tilde = encode(spec, msg, trial=0)
        energy = proc.sample(m + spec.n, rng)
        _, trace, _ = save_and_transmit_run(x_tilde, m, energy)
        _write(out / "trace.csv", f"# config={config_hash(cfg)}\n# version={__version__}\n" + trace.to_csv())
    return 0


def cmd_scaling(cfg, out: Path) -> int:
    _need(cfg, "channel", "k_min", "k_max")
    ch = channel_from_spec(cfg["channel"])
    proc = EnergyProcess.from_spec(cfg["energy"]) if cfg.get("energy") else None
    if proc is not None:
        cfg["p1"] = proc.mean
    points = scaling_sweep(ch, cfg["p1"], range(cfg["k_min"], cfg["k_max"] + 1), policy=cfg["policy"],
                           budget=cfg["budget"], eh=proc, backend=cfg["backend"], nu=cfg["nu"],
                           seed=cfg.get("seed") or 0)
    h = config_hash(cfg)
    _write(out / "sweep.csv", f"# schema={SWEEP_SCHEMA}\n# config={h}\n# version={__version__}\n" + sweep_csv(points))
    fit = {"mu": None, "t": None, "r_squared": None, "error": None}
    try:
        mu, t, r2 = fit_exponent(points)
        fit.update(mu=mu, t=t, r_squared=r2)
    except (EhPolarError, ValueError) as exc:
        fit["error"] = str(exc)
    _write(out / "fit.json", _json({**_stamp(cfg), "schema": SWEEP_SCHEMA, "fit": fit}))
    return 0


def cmd_verify(cfg, out: Path) -> int:
    rows = run_checks(cfg.get("seed") or 0)
    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    return 0 if all(r[1] for r in rows) else 1


HANDLERS = {"construct": cmd_construct, "simulate": cmd_simulate, "eh": cmd_eh,
            "scaling": cmd_scaling, "verify": cmd_verify}


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args)
        out = _outdir(args) if args.command != "verify" else Path(".")
        return HANDLERS[args.command](cfg, out)
    except (ConfigError, EhPolarError, KeyError, TypeError, ValueError) as exc:
        print(f"ehpolar: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
