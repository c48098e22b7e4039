"""
Командная строка: классификация, разложения, приближения, Mosco,
одномерные диффузии, теплопроводность и следы форм.

Коды выхода: 0 успех, 1 ошибка входных данных, 2 численная диагностика
или неклассифицируемый результат. Диагностика печатается в stderr, stdout
содержит JSON отчета (или текстовую таблицу, если задан --out).
"""

import argparse
import contextlib
import json
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional

import numpy as np

from src.app.explainer import render_report
from src.app.report import build_report, dumps, input_digest, report_passed
from src.constants import (
    CONSERVATIVE_TOL,
    DEFAULT_BETA_GRID,
    DEFAULT_T_GRID,
    DEFAULT_TEST_VECTORS,
    DELTA_COUPLINGS,
    DELTA_GRID,
    DELTA_SPACING,
    EMERGENT_TERM_GAP,
    INTEGRAL_CAP,
    INTEGRAL_REL_TOL,
    INVARIANCE_TOL,
    LIMIT_INVARIANCE_TOL,
    MANY_DELTA_COUPLINGS,
    MANY_DELTA_SPACING,
    MANY_DELTA_WINDOW,
    MONOTONE_SLACK,
    MOSCO_TOL,
    SCALE_CONFLICT_TOL,
    TOL_ALGEBRAIC,
    TOL_SPECTRAL,
    TRACE_STABILIZATION_TOL,
    VANISH_SCALINGS,
)
from src.data.loader import file_digest, load_diffusion, load_form, load_rho, load_sequence, load_vectors, save_json
from src.data.spec_parser import floats_from_text, form_to_spec, parse_form, parse_vectors, subset_from_text
from src.errors import AmbiguousTail, NonStabilizingLimit, SpecFileError
from src.features.forms import deny_yosida, energy, heat_evolve, is_excessive, representation_check, time_dependent
from src.features.graph_builder import graph_statistics
from src.features.invariance import is_invariant, trace_form
from src.modeling.decomposition import (
    classify,
    decompose,
    decomposition_residual,
    excessive_decomposition_check,
    excessive_initial_data,
)
from src.modeling.diffusion import birth_death_conservative, classify_diffusion, example_5_1, example_5_2
from src.modeling.mosco import (
    approx_conservative_spaces,
    delta_example_sequence,
    emergent_invariance,
    m1_spot_check,
    many_delta_sequence,
    resolvent_convergence,
    semigroup_convergence,
    vanishing_sequence,
)
from src.utils.config import get_cached_config

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2

BUILTIN_SEQUENCES = ("delta1", "deltaZ", "vanish")


class CommandOutcome(NamedTuple):
    payload: Dict[str, Any]
    checks: Dict[str, bool]
    tolerances: Dict[str, float]
    diagnostics: List[str]
    tables: Dict[str, List[Dict[str, Any]]]
    inputs: List[str]
    unclassified: bool = False


def _input_token(path_or_name: str) -> str:
    path = Path(path_or_name)
    return f"file:{file_digest(path_or_name)}" if path.is_file() else f"name:{path_or_name}"


def _random_vectors(n: int, seed: int, count: int = DEFAULT_TEST_VECTORS) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((count, n))


def _sets_table(sets: Dict[str, List[int]]) -> List[Dict[str, Any]]:
    return [{"set": name, "vertices": vertices} for name, vertices in sets.items()]


def cmd_classify(args, seed: int, jobs: int) -> CommandOutcome:
    form = load_form(args.form)
    rho = load_rho(args.rho, form.n) if args.rho else None
    report = classify(form, rho)
    green = report.green

    vertices = [
        {
            "vertex": i,
            "label": form.labels[i] if form.labels else str(i),
            "class": report.class_of(i).value,
            "green": green.verdict(i),
        }
        for i in range(form.n)
    ]
    components = [
        {"component": k, "vertices": list(c), "class": cls.value, "killed": bool(np.any(form.killing[list(c)] > 0))}
        for k, (c, cls) in enumerate(zip(report.components, report.classes))
    ]
    everything = set(range(form.n))
    rec, diss, tc = set(report.x_rec), set(report.x_diss), set(report.x_tc)
    checks = {
        "rec_in_cons": rec <= set(report.x_cons),
        "diss_in_trans": diss <= set(report.x_trans),
        "partition_exact": rec | diss | tc == everything and not (rec & diss or rec & tc or diss & tc),
        "finite_measure_collapse": report.x_rec == report.x_cons and report.x_diss == report.x_trans,
    }
    payload = {
        "n": form.n,
        "sets": report.sets(),
        "components": components,
        "green": {
            "verdicts": [green.verdict(i) for i in range(form.n)],
            "checkpoints": list(green.checkpoints),
            "last_partial_sum": green.partial_sums[-1].tolist() if form.n else [],
            "resolvent_gap": green.resolvent_gap(),
        },
        "semigroup_on_one": {str(t): list(v) for t, v in report.semigroup_on_one.items()},
        "graph": graph_statistics(form),
    }
    tolerances = {"conservative": CONSERVATIVE_TOL, "invariance": INVARIANCE_TOL}
    return CommandOutcome(
        payload, checks, tolerances, list(report.diagnostics),
        {"sets": _sets_table(report.sets()), "components": components, "vertices": vertices},
        [_input_token(args.form)] + ([_input_token(args.rho)] if args.rho else []),
    )


def cmd_decompose(args, seed: int, jobs: int) -> CommandOutcome:
    form = load_form(args.form)
    dec = decompose(form)
    vectors = _random_vectors(form.n, seed)
    residual = max((abs(decomposition_residual(dec, u)) for u in vectors), default=0.0)

    parts = {}
    rows = []
    for name, part in (("rec", dec.rec), ("diss", dec.diss), ("tc", dec.tc)):
        spec = form_to_spec(part.form)
        parts[name] = {"vertices": list(part.subset), "form": spec}
        rows.append({"part": name, "vertices": list(part.subset), "edges": len(spec["edges"])})
        if args.emit_dir and not part.is_empty:
            path = save_json(str(Path(args.emit_dir) / f"{name}.json"), spec)
            print(f"📁 Часть {name} сохранена в {path}")

    checks = dict(dec.report.checks)
    checks["energy_residual_zero"] = residual == 0.0
    revalidates = True
    for part in parts.values():
        try:
            parse_form(part["form"])
        except SpecFileError:
            revalidates = False
    checks["parts_revalidate"] = revalidates
    payload = {"sets": dec.report.sets(), "parts": parts, "energy_residual": residual, "seed": seed}
    return CommandOutcome(
        payload, checks, {"energy_residual": 0.0}, list(dec.report.diagnostics),
        {"parts": rows}, [_input_token(args.form)],
    )


def cmd_approx(args, seed: int, jobs: int) -> CommandOutcome:
    form = load_form(args.form)
    t_grid = sorted(floats_from_text(args.t_grid, "--t-grid")) if args.t_grid else list(DEFAULT_T_GRID)
    beta_grid = sorted(floats_from_text(args.beta_grid, "--beta-grid")) if args.beta_grid else list(DEFAULT_BETA_GRID)
    vectors = load_vectors(args.u, form.n) if args.u else _random_vectors(form.n, seed)

    rows = []
    monotone_ok, bounded_ok = True, True
    worst_residual = 0.0
    for index, u in enumerate(vectors):
        full = energy(form, u)
        bound = full * (1.0 + TOL_SPECTRAL) + TOL_ALGEBRAIC
        for kind, grid, value_of in (
            ("time", t_grid, lambda p: time_dependent(form, p, u)),
            ("resolvent", beta_grid, lambda p: deny_yosida(form, p, u)),
        ):
            values = []
            for param in grid:
                value = value_of(param)
                check = representation_check(form, param, u, kind)
                worst_residual = max(worst_residual, check.residual)
                values.append(value)
                rows.append({"u": index, "kind": kind, "param": param, "energy": value, "residual": check.residual, "E[u]": full})
            slack = [MONOTONE_SLACK * max(1.0, abs(a), abs(b)) for a, b in zip(values, values[1:])]
            if kind == "time":
                monotone_ok &= all(b <= a + s for (a, b), s in zip(zip(values, values[1:]), slack))
            else:
                monotone_ok &= all(b >= a - s for (a, b), s in zip(zip(values, values[1:]), slack))
            bounded_ok &= all(v <= bound for v in values)
    representation_ok = worst_residual <= TOL_SPECTRAL

    spaces = approx_conservative_spaces(form, t_grid, beta_grid, corollary=args.corollary, jobs=jobs, seed=seed)
    space_rows = [{"kind": "time", "param": t, "space": list(s)} for t, s in spaces.time_spaces.items()]
    space_rows += [{"kind": "resolvent", "param": b, "space": list(s)} for b, s in spaces.beta_spaces.items()]
    checks = {
        "monotone": monotone_ok,
        "representation": representation_ok,
        "bounded_by_energy": bounded_ok,
        "conservative_spaces_equal": spaces.equal,
    }
    for name, rep in spaces.corollary.items():
        checks[f"corollary_{name}"] = rep.converged
    payload = {
        "seed": seed,
        "vectors": vectors.tolist(),
        "t_grid": t_grid,
        "beta_grid": beta_grid,
        "max_representation_residual": worst_residual,
        "x_cons": list(spaces.x_cons),
        "cons_drift": spaces.cons_drift,
        "diss_gap": spaces.diss_gap,
        "corollary": {name: rep.to_dict() for name, rep in spaces.corollary.items()},
    }
    tolerances = {"representation": TOL_SPECTRAL, "monotone_slack": MONOTONE_SLACK, "conservative": CONSERVATIVE_TOL}
    inputs = [_input_token(args.form)] + ([_input_token(args.u)] if args.u else [])
    return CommandOutcome(payload, checks, tolerances, [], {"approximations": rows, "conservative_spaces": space_rows}, inputs)


def _builtin_sequence(args):
    couplings = floats_from_text(args.couplings, "--couplings") if args.couplings else None
    if args.sequence == "delta1":
        return delta_example_sequence(args.grid or DELTA_GRID, args.spacing or DELTA_SPACING, couplings or DELTA_COUPLINGS)
    if args.sequence == "deltaZ":
        window = tuple(floats_from_text(args.window, "--window")) if args.window else MANY_DELTA_WINDOW
        return many_delta_sequence(window, args.spacing or MANY_DELTA_SPACING, couplings or MANY_DELTA_COUPLINGS)
    return vanishing_sequence(args.grid or DELTA_GRID, args.spacing or DELTA_SPACING, couplings or VANISH_SCALINGS)


def cmd_mosco(args, seed: int, jobs: int) -> CommandOutcome:
    if args.sequence in BUILTIN_SEQUENCES:
        seq = _builtin_sequence(args)
    else:
        seq = load_sequence(args.sequence, seed=seed)

    if args.kind == "semigroup":
        rep = semigroup_convergence(seq, args.t, tol=args.tol, jobs=jobs, seed=seed)
    else:
        rep = resolvent_convergence(seq, args.beta, tol=args.tol, jobs=jobs, seed=seed)
    payload: Dict[str, Any] = {"sequence": seq.name or args.sequence, "n": seq.n, "seed": seed, "report": rep.to_dict()}
    checks = {"converged": rep.converged}

    subset = None
    if seq.name == "delta1":
        subset = seq.metadata["left"]
    elif seq.name == "deltaZ" and seq.metadata.get("blocks"):
        subset = seq.metadata["blocks"][0]
    if subset:
        emergent = emergent_invariance(seq, subset)
        payload["emergent_invariance"] = emergent._asdict()
        checks["limit_invariant"] = emergent.limit_commutator <= LIMIT_INVARIANCE_TOL
        checks["terms_not_invariant"] = emergent.min_term_commutator >= EMERGENT_TERM_GAP
    if seq.monotone_tag == "increasing":
        m1 = m1_spot_check(seq, seed=seed)
        payload["m1"] = m1._asdict()
        checks["m1_liminf"] = m1.passed

    rows = [{"param": p, "residual": r} for p, r in zip(rep.parameters, rep.term_residuals)]
    tolerances = {"mosco": args.tol, "limit_invariance": LIMIT_INVARIANCE_TOL, "emergent_gap": EMERGENT_TERM_GAP}
    diagnostics = [rep.evidence] if rep.evidence and not rep.converged else []
    return CommandOutcome(payload, checks, tolerances, diagnostics, {"residuals": rows}, [_input_token(args.sequence)])


def _diffusion_tables(items) -> Dict[str, List[Dict[str, Any]]]:
    intervals, endpoints = [], []
    for item in items:
        intervals.append({
            "interval": item.interval.name,
            "range": item.interval.describe(),
            "class": item.label,
            "recurrence": item.recurrence.label,
            "feller": item.feller.label,
        })
        for end in (item.recurrence.lower, item.recurrence.upper):
            if end is not None:
                endpoints.append({
                    "interval": end.interval,
                    "end": end.which,
                    "s_limit": end.s_limit.label,
                    "source": end.s_limit.source,
                    "m_near": "Finite" if end.m_near.finite else "Infinite",
                    "class": end.boundary_class,
                })
    return {"intervals": intervals, "endpoints": endpoints}


def cmd_diffusion(args, seed: int, jobs: int) -> CommandOutcome:
    tolerances = {"integral_rel": INTEGRAL_REL_TOL, "integral_cap": INTEGRAL_CAP, "scale_conflict": SCALE_CONFLICT_TOL}
    target = args.spec
    if target.startswith("example5.2"):
        atoms = target.split(":", 1)[1] if ":" in target else "power:0"
        result = example_5_2(atoms)
        rows = [
            {"part": "I", "class": result.interval.label, "conservative": result.interval.feller.label},
            {"part": "J", "class": "chain", "conservative": result.chain.label},
        ]
        sums = [{"N": n, "sum a_k/k": s} for n, s in result.chain.partial_sums.items()]
        tables = {"parts": rows, "partial_sums": sums}
        tables.update(_diffusion_tables([result.interval]))
        unclassified = result.chain.conservative is None or result.interval.feller.conservative is None
        return CommandOutcome(result.to_dict(), result.checks, tolerances, list(result.diagnostics), tables, [f"name:{target}"], unclassified)

    chain = None
    if target == "example5.1":
        report = example_5_1()
        inputs = [f"name:{target}"]
    else:
        spec, chain = load_diffusion(target)
        report = classify_diffusion(spec, args.rules)
        inputs = [_input_token(target)] + ([_input_token(args.rules)] if args.rules else [])
    payload = report.to_dict()
    diagnostics = list(report.diagnostics)
    tables = _diffusion_tables(report.intervals)
    unclassified = bool(report.unclassified)
    if chain is not None:
        verdict = birth_death_conservative(chain)
        payload["birth_death"] = verdict.to_dict()
        tables["partial_sums"] = [{"N": n, "sum a_k/k": s} for n, s in verdict.partial_sums.items()]
        diagnostics.extend(verdict.diagnostics)
        unclassified = unclassified or verdict.conservative is None
    return CommandOutcome(payload, report.checks, tolerances, diagnostics, tables, inputs, unclassified)


def cmd_heat(args, seed: int, jobs: int) -> CommandOutcome:
    form = load_form(args.form)
    times = floats_from_text(args.times, "--times")
    if not times or times[0] != 0.0:
        times = [0.0] + times
    inputs = [_input_token(args.form)]
    if args.u0 == "excessive":
        u0 = excessive_initial_data(form)
    elif Path(args.u0).is_file():
        u0 = load_vectors(args.u0, form.n)[0]
        inputs.append(_input_token(args.u0))
    else:
        u0 = parse_vectors(floats_from_text(args.u0, "--u0"), form.n, "--u0")[0]
        inputs.append(f"u0:{args.u0}")

    trajectory = heat_evolve(form, u0, times)
    rows = [
        {"t": t, "norm": v.norm(), "min": float(np.min(v.values, initial=0.0)), "max": float(np.max(v.values, initial=0.0))}
        for t, v in zip(times, trajectory)
    ]
    checks: Dict[str, bool] = {}
    payload: Dict[str, Any] = {"times": times, "u0": np.asarray(u0).tolist(), "trajectory": [v.values.tolist() for v in trajectory]}
    positive_times = [t for t in times if t > 0]
    if np.all(np.asarray(u0) >= 0) and positive_times and is_excessive(form, u0, positive_times):
        check = excessive_decomposition_check(form, u0, positive_times)
        residual_by_time = dict(zip(check.times, check.residuals))
        for row in rows:
            row["residual"] = residual_by_time.get(row["t"], 0.0)
        payload["excessive"] = check._asdict()
        checks["excessive_decomposition"] = check.passed
    return CommandOutcome(payload, checks, {"residual": TOL_SPECTRAL}, [], {"trajectory": rows}, inputs)


def cmd_trace(args, seed: int, jobs: int) -> CommandOutcome:
    form = load_form(args.form)
    subset = subset_from_text(args.subset, form.n)
    verdict = is_invariant(form, subset)
    trace = trace_form(form, subset)
    spec = form_to_spec(trace)
    try:
        parse_form(spec)
        revalidates = True
    except SpecFileError:
        revalidates = False
    checks = {
        "trace_revalidates": revalidates,
        "measure_restricted": bool(np.array_equal(trace.measure, form.measure[list(subset)])),
    }
    payload = {"subset": list(subset), "invariant": verdict.invariant, "trace": spec}
    rows = [{"i": i, "j": j, "weight": w} for i, j, w in spec["edges"]]
    killing_rows = [{"vertex": subset[k], "killing": value} for k, value in enumerate(spec["killing"])]
    return CommandOutcome(
        payload, checks, {"trace_stabilization": TRACE_STABILIZATION_TOL}, [],
        {"trace_edges": rows, "trace_killing": killing_rows}, [_input_token(args.form), f"subset:{args.subset}"],
    )


COMMANDS: Dict[str, Callable] = {
    "classify": cmd_classify,
    "decompose": cmd_decompose,
    "approx": cmd_approx,
    "mosco": cmd_mosco,
    "diffusion": cmd_diffusion,
    "heat": cmd_heat,
    "trace": cmd_trace,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirichlet", description="Разложения конечных форм Дирихле")
    parser.add_argument("--out", help="Записать JSON отчета в файл; относительный путь берется от DIRICHLET_REPORTS_DIR")
    parser.add_argument("--seed", type=int, help="Seed случайных векторов (по умолчанию из конфигурации)")
    parser.add_argument("--jobs", type=int, help="Число процессов joblib")
    parser.add_argument("--timing", action="store_true", help="Добавить время работы в отчет")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="X_rec, X_diss, X_tc формы")
    p.add_argument("form")
    p.add_argument("--rho", help="JSON с плотностью ρ")

    p = sub.add_parser("decompose", help="Три части формы")
    p.add_argument("form")
    p.add_argument("--emit-dir", help="Каталог для JSON-файлов частей")

    p = sub.add_parser("approx", help="Приближения E^(t) и E^(β)")
    p.add_argument("form")
    p.add_argument("--t-grid")
    p.add_argument("--beta-grid")
    p.add_argument("--u", help="JSON с тестовыми векторами")
    p.add_argument("--corollary", action="store_true", help="Проверить сходимость частей E^(t) при t ↓ 0")

    p = sub.add_parser("mosco", help="Сходимость последовательности форм")
    p.add_argument("sequence", help="delta1, deltaZ, vanish или JSON-файл")
    p.add_argument("--kind", choices=("resolvent", "semigroup"), default="resolvent")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=MOSCO_TOL)
    p.add_argument("--grid", type=int)
    p.add_argument("--spacing", type=float)
    p.add_argument("--couplings", help="Константы связи (для vanish — масштабы)")
    p.add_argument("--window", help="Окно deltaZ, например 0,3")

    p = sub.add_parser("diffusion", help="Одномерная диффузия")
    p.add_argument("spec", help="example5.1, example5.2[:atoms] или JSON-файл")
    p.add_argument("--rules", help="JSON с правилами для концов")

    p = sub.add_parser("heat", help="Уравнение теплопроводности")
    p.add_argument("form")
    p.add_argument("--u0", default="excessive", help="excessive, JSON-файл или список через запятую")
    p.add_argument("--times", default="0,0.5,1,2,5")

    p = sub.add_parser("trace", help="След формы на множестве")
    p.add_argument("form")
    p.add_argument("--subset", required=True)
    return parser


def _normalized_flags(args: argparse.Namespace) -> str:
    flags = {k: v for k, v in vars(args).items() if k not in ("out", "timing")}
    return json.dumps(flags, sort_keys=True, default=str)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Точка входа CLI.

    :param argv: Аргументы (по умолчанию sys.argv[1:])
    :return: Код выхода
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        config = get_cached_config()
    except ValueError as e:
        print(f"❌ Ошибка конфигурации: {e}", file=sys.stderr)
        return EXIT_INPUT
    seed = config["seed"] if args.seed is None else args.seed
    jobs = config["jobs"] if args.jobs is None else args.jobs

    started = time.perf_counter()
    try:
        with contextlib.redirect_stdout(sys.stderr):
            outcome = COMMANDS[args.command](args, seed, jobs)
    except (AmbiguousTail, NonStabilizingLimit) as e:
        print(f"❌ Численная неоднозначность: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"❌ Ошибка входных данных: {e}", file=sys.stderr)
        return EXIT_INPUT
    elapsed = time.perf_counter() - started if args.timing else None

    digest = input_digest([args.command, _normalized_flags(args), f"seed:{seed}"] + outcome.inputs)
    report = build_report(
        args.command, argv, digest, outcome.payload, outcome.checks, outcome.tolerances,
        outcome.diagnostics, outcome.tables, elapsed,
    )
    if args.out:
        # относительный путь отсчитывается от каталога отчетов
        path = save_json(str(Path(config["reports_dir"]) / args.out), report)
        print(render_report(report))
        print(f"📁 Отчет сохранен в {path}", file=sys.stderr)
    else:
        print(dumps(report))

    if not report_passed(report) or report["diagnostics"] or outcome.unclassified:
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
