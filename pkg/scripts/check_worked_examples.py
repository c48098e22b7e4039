"""
Скрипт для проверки готовых примеров.

Двухвершинные формы, δ-последовательность, след на пути и обе
одномерные диффузии. Печатает сводку и возвращает 0, если все проверки
прошли.
"""

import sys
from pathlib import Path

# Добавляем корневую директорию в путь
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np

from src.features.forms import build_form, deny_yosida
from src.features.graph_builder import path_graph_form
from src.features.invariance import trace_form
from src.modeling.decomposition import classify, green_apply
from src.modeling.diffusion import example_5_1, example_5_2
from src.modeling.mosco import delta_example_sequence, emergent_invariance, resolvent_convergence


def check_two_node() -> dict:
    free = build_form(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.0, 0.0], [1.0, 1.0])
    killed = build_form(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.0, 1.0], [1.0, 1.0])
    u = np.array([1.0, -1.0])
    betas = [0.1, 1.0, 10.0, 100.0]
    yosida_ok = all(abs(deny_yosida(free, b, u) - 4 * b / (b + 2)) <= 1e-12 for b in betas)
    green = green_apply(killed, np.ones(2))
    return {
        "E^(β)[u] = 4β/(β+2)": yosida_ok,
        "Kf = (3, 2)": bool(np.allclose(green.values, [3.0, 2.0], rtol=0, atol=1e-12)),
        "свободная форма рекуррентна": classify(free).x_rec == (0, 1),
        "форма с убиванием диссипативна": classify(killed).x_diss == (0, 1),
    }


def check_trace() -> dict:
    path = path_graph_form(3, 1.0, 1.0)
    trace = trace_form(path, (0, 2))
    return {"эффективный вес 0.5": abs(trace.weights[0, 1] - 0.5) <= 1e-12}


def check_delta() -> dict:
    seq = delta_example_sequence()
    report = resolvent_convergence(seq, 1.0)
    emergent = emergent_invariance(seq, seq.metadata["left"])
    print(f"📊 δ-пример: остатки {', '.join(f'{r:.3e}' for r in report.term_residuals)}, наклон {report.rate}")
    return {
        "сходимость резольвент": report.converged,
        "наклон ≈ −1": report.rate is not None and abs(report.rate + 1.0) <= 0.2,
        "возникающая инвариантность": emergent.gap,
    }


def check_diffusions() -> dict:
    two_intervals = example_5_1()
    results = {f"5.1: {name}": ok for name, ok in two_intervals.checks.items()}
    results["5.1: I1 возвратна, I2 транзиентна"] = two_intervals.rec == ("I1",) and two_intervals.trans == ("I2",)

    constant = example_5_2("power:0")
    sqrt_decay = example_5_2("power:-0.5")
    results["5.2: интервал диссипативен"] = constant.interval.feller.conservative is False
    results["5.2: a_k = 1 консервативна"] = constant.chain.conservative is True
    results["5.2: a_k = k^(-1/2) не консервативна"] = sqrt_decay.chain.conservative is False
    return results


def main():
    print("=" * 60)
    print("🔍 Проверка готовых примеров")
    print("=" * 60)

    results = {}
    for title, check in (
        ("Двухвершинные формы", check_two_node),
        ("След на пути", check_trace),
        ("δ-последовательность", check_delta),
        ("Одномерные диффузии", check_diffusions),
    ):
        print(f"\n📁 {title}")
        outcome = check()
        for name, ok in outcome.items():
            print(f"   {'✅' if ok else '❌'} {name}")
        results.update({f"{title}: {name}": ok for name, ok in outcome.items()})

    failed = [name for name, ok in results.items() if not ok]
    print("\n" + "=" * 60)
    if failed:
        print(f"❌ Не прошли {len(failed)} из {len(results)} проверок")
        return 1
    print(f"✅ Все {len(results)} проверок прошли")
    return 0


if __name__ == "__main__":
    sys.exit(main())
