"""
Метрики выполнения анализа.

Этот модуль содержит счетчики и утилиты для отслеживания:
- Количества вычислений энергии (по числу матриц F)
- Времени выполнения отдельных стадий анализа
- Медленных стадий (slow stages)

Использование:
    with track_stage("rank_one_oracle"):
        ...
    get_stage_metrics()  # попадает в поле timing отчета
"""

import logging
import threading
import time
from contextlib import contextmanager

logger = logging.getLogger(__name__)

# Порог для медленных стадий (секунды)
SLOW_STAGE_THRESHOLD = 30.0

_lock = threading.Lock()

# Счетчики для метрик
evaluation_metrics = {
    "energy_evaluations": 0,
    "slow_stages": 0,
}
stage_times: dict[str, float] = {}


def record_evaluations(count: int):
    """
    Увеличивает счетчик вычислений энергии.

    Args:
        count: Количество вычисленных значений W(F)
    """
    with _lock:
        evaluation_metrics["energy_evaluations"] += int(count)


@contextmanager
def track_stage(name: str, threshold: float = SLOW_STAGE_THRESHOLD):
    """
    Замеряет время стадии и накапливает его под именем name.

    Args:
        name: Имя стадии (обычно имя критерия)
        threshold: Порог для предупреждения о медленной стадии в секундах
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        duration = time.perf_counter() - start
        with _lock:
            stage_times[name] = stage_times.get(name, 0.0) + duration
            if duration > threshold:
                evaluation_metrics["slow_stages"] += 1
        if duration > threshold:
            logger.warning(f"🐢 SLOW STAGE '{name}': {duration:.2f}s")
        else:
            logger.debug(f"Stage '{name}' completed in {duration:.3f}s")


def get_stage_metrics() -> dict:
    """
    Возвращает текущие метрики.

    Returns:
        dict: Время стадий в секундах (ключи stage.<имя>), общее время
            и количество вычислений энергии
    """
    with _lock:
        metrics = {f"stage.{name}": round(value, 4) for name, value in sorted(stage_times.items())}
        metrics["total_time"] = round(sum(stage_times.values()), 4)
        metrics["energy_evaluations"] = float(evaluation_metrics["energy_evaluations"])
        metrics["slow_stages"] = float(evaluation_metrics["slow_stages"])
    return metrics


def reset_stage_metrics():
    """Сбрасывает счетчики метрик (перед каждой командой CLI и в тестах)."""
    with _lock:
        evaluation_metrics["energy_evaluations"] = 0
        evaluation_metrics["slow_stages"] = 0
        stage_times.clear()
    logger.debug("Stage metrics reset")
