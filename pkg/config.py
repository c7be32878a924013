import os
import math
import logging
from dotenv import load_dotenv

load_dotenv()

# Настройка логирования (CLI пишет только в stderr)
LOG_LEVEL = os.getenv('LOG_LEVEL', 'WARNING')
logging.basicConfig(level=getattr(logging, LOG_LEVEL.upper(), logging.WARNING))
logger = logging.getLogger(__name__)

TOOL_NAME = "slconvex"
TOOL_VERSION = "1.0.0"
REPORT_SCHEMA_VERSION = "1.0"

# --- Воспроизводимость ---
DEFAULT_SEED = int(os.getenv('SLCONVEX_SEED', 20240521))

# --- Ядро 2x2 ---
SL2_DET_TOLERANCE = float(os.getenv('SL2_DET_TOLERANCE', 1e-10))  # |det F - 1| для членства в SL(2)
SAMPLING_LOG_RANGE = float(os.getenv('SAMPLING_LOG_RANGE', math.log(4.0)))  # log λ ~ U[-L, L]

# --- Допуски критериев ---
CRITERION_TOLERANCE = float(os.getenv('CRITERION_TOLERANCE', 1e-8))  # τ для нормированных slack-значений
FD_TOLERANCE = float(os.getenv('FD_TOLERANCE', 1e-5))  # τ_fd, если производные получены конечными разностями
ORACLE_TOLERANCE = float(os.getenv('ORACLE_TOLERANCE', 1e-9))  # умножается на локальный масштаб энергии
BOUNDARY_FACTOR = float(os.getenv('BOUNDARY_FACTOR', 10.0))  # |slack| <= BOUNDARY_FACTOR * τ -> граничный случай
FD_RELATIVE_STEP = float(os.getenv('FD_RELATIVE_STEP', 1e-5))  # шаг для первой производной
FD_SECOND_RELATIVE_STEP = float(os.getenv('FD_SECOND_RELATIVE_STEP', 1e-4))  # шаг для второй производной
FD_MIN_GAMMA = float(os.getenv('FD_MIN_GAMMA', 0.25))  # начало I-сетки, если производные численные

# --- Сетки ---
GAMMA_GRID_MAX = float(os.getenv('GAMMA_GRID_MAX', 8.0))
GAMMA_GRID_POINTS = int(os.getenv('GAMMA_GRID_POINTS', 801))
RATIO_GRID_MAX = float(os.getenv('RATIO_GRID_MAX', 16.0))
RATIO_GRID_POINTS = int(os.getenv('RATIO_GRID_POINTS', 801))
LAMBDA_GRID_POINTS = int(os.getenv('LAMBDA_GRID_POINTS', 40))

# --- Брутфорс-оракул ---
ORACLE_SAMPLES_F = int(os.getenv('ORACLE_SAMPLES_F', 500))
ORACLE_SAMPLES_ETA = int(os.getenv('ORACLE_SAMPLES_ETA', 16))
ORACLE_LADDER_POINTS = int(os.getenv('ORACLE_LADDER_POINTS', 12))
ORACLE_LADDER_MIN = float(os.getenv('ORACLE_LADDER_MIN', 0.05))
ORACLE_LADDER_MAX = float(os.getenv('ORACLE_LADDER_MAX', 2.0))
ORACLE_WORKERS = int(os.getenv('ORACLE_WORKERS', 1))  # >1 -> ThreadPoolExecutor, слияние детерминировано
ORACLE_MAX_WITNESSES = int(os.getenv('ORACLE_MAX_WITNESSES', 3))
GLPLUS_DET_FLOOR = float(os.getenv('GLPLUS_DET_FLOOR', 0.1))  # det(F + tH) >= floor * det F на отрезках в GL+(2)

# Проверяем значения, без которых анализ не имеет смысла
if GAMMA_GRID_POINTS < 3 or RATIO_GRID_POINTS < 3:
    raise ValueError("GAMMA_GRID_POINTS и RATIO_GRID_POINTS должны быть не меньше 3")

if RATIO_GRID_MAX <= 1.0:
    raise ValueError(f"RATIO_GRID_MAX должен быть > 1, получено {RATIO_GRID_MAX}")

if not 0 < ORACLE_LADDER_MIN < ORACLE_LADDER_MAX:
    raise ValueError(
        f"Некорректная лестница шагов оракула: [{ORACLE_LADDER_MIN}, {ORACLE_LADDER_MAX}]"
    )

if ORACLE_WORKERS < 1:
    logger.warning(f"ORACLE_WORKERS={ORACLE_WORKERS} < 1, используем 1 поток")
    ORACLE_WORKERS = 1
