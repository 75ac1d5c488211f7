"""
환경변수 설정
"""
import os
from dotenv import load_dotenv

# 환경변수 로드
load_dotenv()

# ============================================================
# 로깅 / 경로
# ============================================================

LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()
OUTPUT_DIR = os.getenv('OUTPUT_DIR', './out')
SCENARIO_DIR = os.getenv('SCENARIO_DIR', os.path.join(os.path.dirname(os.path.dirname(__file__)), 'scenarios'))

# ============================================================
# 솔버 / 플래너
# ============================================================

SOLVER_NODE_LIMIT = int(os.getenv('SOLVER_NODE_LIMIT', 1000000))
PLANNER_WORKERS = int(os.getenv('PLANNER_WORKERS', 1))

# 벽시계 시간은 기록하면 로그가 실행마다 달라짐
RECORD_WALL_TIME = os.getenv('RECORD_WALL_TIME', 'false').lower() == 'true'

# 에이전트/주기별 LP 덤프 (OUTPUT_DIR/models)
DUMP_MODELS = os.getenv('DUMP_MODELS', 'false').lower() == 'true'

# ============================================================
# API 서버
# ============================================================

API_HOST = os.getenv('API_HOST', '0.0.0.0')
API_PORT = int(os.getenv('API_PORT', 8000))
