import os
from pathlib import Path
from dotenv import load_dotenv

# 自动加载项目根目录下的 .env（若存在）
root_env = Path(__file__).resolve().parent.parent / ".env"
if root_env.exists():
    load_dotenv(dotenv_path=root_env)
else:
    load_dotenv()


def env(name: str, default=None):
    return os.environ.get(name, default)


# 校验阶段的线程上限（residual_report / 网格测量）
THREADS = max(1, int(env("BERGMAN_SENSE_THREADS", os.cpu_count() or 1)))
LOG_LEVEL = env("BERGMAN_SENSE_LOG_LEVEL", "INFO")

# 产物格式版本，所有 JSON 输出都会带上
SCHEMA_VERSION = 1

# 阶数扫描与阶乘上限
ORDER_GUARD = 10000
FACTORIAL_CAP = 170
GRAM_MAX_ORDER = int(env("BERGMAN_SENSE_GRAM_MAX_ORDER", 40))
GRAM_CONDITION_LIMIT = 1e12
SERIES_GROWTH_LIMIT = 10.0

# 探针区域：FFT-Cauchy 取系数的半径与容差
JET_RADIUS = float(env("BERGMAN_SENSE_JET_RADIUS", 0.8))
JET_CHECK_RADIUS = float(env("BERGMAN_SENSE_JET_CHECK_RADIUS", 0.7))
JET_TOLERANCE = float(env("BERGMAN_SENSE_JET_TOLERANCE", 1e-9))
PROBE_MAX_ORDER = int(env("BERGMAN_SENSE_PROBE_MAX_ORDER", 30))
DEFAULT_MU = 0.1
MAX_SIGMA = 0.2
SIGMA_HALVINGS = 20
SPINE_GRID = 2048

# Runge 推极点
RUNGE_MAX_DEGREE = int(env("BERGMAN_SENSE_RUNGE_MAX_DEGREE", 4000))
RUNGE_BASE_DPS = int(env("BERGMAN_SENSE_RUNGE_BASE_DPS", 30))

# 校验用数值积分（径向 Gauss-Legendre × 角向梯形）
QUAD_RADIAL = 200
QUAD_ANGULAR = 512
CIRCLE_NODES = 64
HARMONIC_DEGREE = 8
HARMONIC_BOUNDARY_SAMPLES = 4096
