"""Command-line entry point.

    rdars uplink   --config cfg --seed 42 --out rates.csv
    rdars isac     --config cfg --out radar.csv --threads 4
    rdars validate
    rdars decompose --config cfg --seed 7

Exit codes: 0 success, 1 configuration error, 2 runtime or infeasibility error.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from rdars import __version__
from rdars.channel import ChannelSet
from rdars.config import ExperimentConfig, load_config
from rdars.core import (ModeSelection, PhaseProfile, effective_uplink_channel, gain_decomposition,
                        uplink_snr)
from rdars.errors import ConfigError, InfeasibleError, RdarsError
from rdars.harness import rows_to_csv, run_experiment, trial_channels
from rdars.isac import (IsacBeamformer, IsacEffectiveChannels, optimize_beamformer_qos,
                        radar_snr, radar_snr_mrc_mrt)
from rdars.optimize import OptimizerOptions, solve_p1
from rdars.oracles import brute_beamformer_grid, brute_mode_search, quantization_bound

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

_SCENARIO_DEFAULTS = {
    "uplink": {},
    "isac": {"gamma_th_db": 10.0, "trials": 300},
}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="rdars", description="RDARS link-level simulation")
    parser.add_argument("--version", action="version", version=f"rdars {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-trial channel digests")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    for name, help_text in (("uplink", "uplink rate experiment"),
                            ("isac", "ISAC radar SNR experiment"),
                            ("decompose", "gain decomposition for one realization")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--seed", type=_u64, help="override base_seed")
        if name != "decompose":
            p.add_argument("--out", type=Path, help="CSV output path (stdout if omitted)")
            p.add_argument("--trials", type=_positive, help="override the trial count")
            p.add_argument("--threads", type=_positive, default=1, help="worker processes")
    p = sub.add_parser("validate", help="check the solvers against brute-force oracles")
    p.add_argument("--seed", type=_u64, default=0, help="seed of the instance set")
    return parser


def _load(args, scenario: Optional[str]) -> ExperimentConfig:
    if args.config is not None:
        config = load_config(args.config)
        if scenario is not None and config.scenario != scenario:
            raise ConfigError(f"scenario: config file {args.config} sets {config.scenario!r}, "
                              f"command is {scenario!r}")
    else:
        config = ExperimentConfig(scenario=scenario or "uplink",
                                  **_SCENARIO_DEFAULTS[scenario or "uplink"])
    return config.with_overrides(base_seed=args.seed, trials=getattr(args, "trials", None))


def _manifest_text(config: ExperimentConfig, csv_text: str) -> str:
    return (f"artifact_version = {__version__}\n"
            f"config_sha256 = {config.digest()}\n"
            f"base_seed = {config.base_seed}\n"
            f"csv_sha256 = {hashlib.sha256(csv_text.encode()).hexdigest()}\n"
            "# full configuration\n" + config.canonical_text())


def _cmd_experiment(args, scenario: str) -> int:
    config = _load(args, scenario)
    rows = run_experiment(config, workers=args.threads)
    text = rows_to_csv(rows)
    if args.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    args.out.write_text(text, encoding="utf-8")
    manifest = args.out.with_name(args.out.name + ".manifest")
    manifest.write_text(_manifest_text(config, text), encoding="utf-8")
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_decompose(args) -> int:
    config = _load(args, None)
    if config.scenario != "uplink":
        raise ConfigError("scenario: decompose needs an uplink configuration")
    ch = trial_channels(config, 0)
    gamma_bar = 1.0 / config.noise_power
    print(f"channel {ch.digest()}  M={ch.M} N={ch.N}  gains are linear, SNR at 0 dBm")
    print(f"{'a':>4} {'reflection':>15} {'distribution':>15} {'selection':>15} "
          f"{'snr_db':>10} {'check':>10}")
    for a in config.a_values:
        sol = solve_p1(ch, a, config.optimizer)
        dec = gain_decomposition(ch, sol.phases, sol.mode, ModeSelection.default(ch.N, a),
                                 1e-3, config.noise_power)
        snr = uplink_snr(effective_uplink_channel(ch, sol.mode, sol.phases), 1e-3,
                         config.noise_power)
        parts = 1e-3 * gamma_bar * (dec.reflection_gain + dec.distribution_gain
                                    + dec.selection_gain)
        rel = abs(parts - snr) / snr
        print(f"{a:>4} {dec.reflection_gain:>15.6e} {dec.distribution_gain:>15.6e} "
              f"{dec.selection_gain:>15.6e} {10 * math.log10(snr):>10.4f} {rel:>10.1e}")
    return EXIT_OK


# -- validation ----------------------------------------------------------------

def _gaussian_channels(rng, M, N) -> ChannelSet:
    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    return ChannelSet(G=cn(N, M), h_d=cn(M), h_r=cn(N))


def _check_p1(rng) -> Tuple[bool, str]:
    worst = math.inf
    ok = True
    for _ in range(5):
        ch = _gaussian_channels(rng, 2, 6)
        sol = solve_p1(ch, 2, OptimizerOptions(mode_search="exhaustive"))
        mode, phases, grid = brute_mode_search(ch, 2)
        bound = quantization_bound(ch, mode)
        ratio = sol.objective / grid
        worst = min(worst, ratio)
        ok &= ratio >= 0.98 and sol.objective >= grid - bound
    return ok, f"min solver/grid ratio {worst:.6f}"


def _check_decomposition(rng) -> Tuple[bool, str]:
    worst = 0.0
    for _ in range(200):
        M, N = int(rng.choice([1, 2, 4])), int(rng.choice([8, 16]))
        a = int(rng.integers(0, 5))
        ch = _gaussian_channels(rng, M, N)
        mode = ModeSelection.from_indices(N, rng.choice(N, size=a, replace=False))
        phases = PhaseProfile.random(N, rng)
        dec = gain_decomposition(ch, phases, mode, ModeSelection.default(N, a), 2.0, 0.5)
        snr = uplink_snr(effective_uplink_channel(ch, mode, phases), 2.0, 0.5)
        total = 4.0 * (dec.reflection_gain + dec.distribution_gain + dec.selection_gain)
        worst = max(worst, abs(total - snr) / snr)
    return worst <= 1e-12, f"max relative error {worst:.2e}"


def _check_radar_identity(rng) -> Tuple[bool, str]:
    worst = 0.0
    for _ in range(200):
        M, a = int(rng.integers(1, 5)), int(rng.integers(0, 4))
        cn = lambda n: (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        eff = IsacEffectiveChannels(u=cn(M + a), t_b=cn(M), t_c=cn(a))
        p, alpha, s2 = 1.5, 0.3 + 0.4j, 0.7
        f = math.sqrt(p) * eff.t / np.linalg.norm(eff.t)
        bf = IsacBeamformer(f_b=f[:M], f_r=f[M:], w=eff.t_b.copy())
        got = radar_snr(eff, bf, alpha, s2)
        ref = radar_snr_mrc_mrt(eff, p, alpha, s2)
        worst = max(worst, abs(got - ref) / ref)
    return worst <= 1e-12, f"max relative error {worst:.2e}"


def _check_beamformer(rng) -> Tuple[bool, str]:
    worst = 0.0
    ok = True
    for k in range(6):
        n = int(rng.integers(2, 7))
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        t = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        p, s2 = 1.0, 1.0
        mrt = p * abs(np.vdot(u, t)) ** 2 / np.vdot(t, t).real / s2
        top = p * np.vdot(u, u).real / s2
        gth = 0.0 if k % 2 == 0 else mrt + rng.uniform(0.1, 0.9) * (top - mrt)
        bf = optimize_beamformer_qos(u, t, p, gth, s2)
        obj = abs(np.vdot(t, bf.f)) ** 2
        _, grid = brute_beamformer_grid(u, t, p, gth, s2, grid=(500, 500))
        feasible = abs(np.vdot(u, bf.f)) ** 2 / s2 >= gth * (1 - 1e-9)
        worst = max(worst, (grid - obj) / grid)
        ok &= feasible and obj >= grid * (1 - 1e-3)
    return ok, f"max shortfall against grid {max(worst, 0.0):.2e}"


VALIDATION_CHECKS = (
    ("gain decomposition identity", _check_decomposition),
    ("radar SNR closed form", _check_radar_identity),
    ("QoS beamformer vs grid", _check_beamformer),
    ("uplink solver vs brute force", _check_p1),
)


def run_validation(seed: int = 0) -> List[Tuple[str, bool, str]]:
    out = []
    for k, (name, fn) in enumerate(VALIDATION_CHECKS):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))
        ok, detail = fn(rng)
        out.append((name, bool(ok), detail))
    return out


def _cmd_validate(args) -> int:
    results = run_validation(args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_RUNTIME


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "decompose":
            return _cmd_decompose(args)
        return _cmd_experiment(args, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, RdarsError, ArithmeticError, MemoryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
