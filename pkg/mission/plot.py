"""
SVG 그림 (matplotlib)
- 궤적: 용량 색 / 장애물 / 기지국 / 목표 상자 / 에이전트 궤적
- 단계별 점유 히트맵 (용량 초과 셀은 빨간 테두리)
- 같은 입력이면 같은 바이트 (svg.hashsalt 고정, Date 메타데이터 제거)
"""
import io
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.patches as patches  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .models import RunLog  # noqa: E402
from .scenario import build_capacity, build_goal, build_grid  # noqa: E402
from .verify import RunLogError  # noqa: E402

logger = logging.getLogger(__name__)

FIGSIZE = (6.4, 6.4)
SVG_RC = {"svg.hashsalt": "planner", "svg.fonttype": "none"}


def _render(fig) -> str:
    buf = io.BytesIO()
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue().decode("utf-8")


def _axes(log: RunLog, title: str):
    grid = build_grid(log.scenario)
    with matplotlib.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.set_xlim(grid.west, grid.east)
    ax.set_ylim(grid.south, grid.north)
    ax.set_aspect("equal")
    ax.set_xticks(np.linspace(grid.west, grid.east, grid.n + 1))
    ax.set_yticks(np.linspace(grid.south, grid.north, grid.n + 1))
    ax.grid(True, color="#999999", linewidth=0.5)
    ax.set_title(title)
    return fig, ax, grid


def _capacity(log: RunLog, grid) -> Optional[np.ndarray]:
    try:
        return build_capacity(log.scenario, grid)
    except ValueError:
        return None


def _draw_cells(ax, grid, values: np.ndarray, blocked: Optional[np.ndarray], cmap_name: str):
    cmap = matplotlib.colormaps[cmap_name].copy()
    cmap.set_bad("#333333")
    data = np.ma.masked_array(values.astype(float), mask=blocked if blocked is not None else False)
    top = max(float(values.max()) if values.size else 0.0, 1.0)
    ax.imshow(data, cmap=cmap, vmin=0.0, vmax=top, origin="upper", interpolation="nearest",
              extent=(grid.west, grid.east, grid.south, grid.north))


def _agent_paths(log: RunLog) -> Dict[int, List[Sequence[float]]]:
    paths: Dict[int, List[Sequence[float]]] = {}
    for row in sorted(log.states, key=lambda r: (r.agent, r.step)):
        paths.setdefault(row.agent, []).append((row.p1, row.p2))
    return paths


def trajectory_svg(log: RunLog) -> str:
    fig, ax, grid = _axes(log, f"{log.scenario.name} trajectories")
    capacity = _capacity(log, grid)
    if capacity is not None:
        _draw_cells(ax, grid, capacity, capacity == 0, "Blues")
        for m, n in grid.cells():
            cx, cy = grid.cell_center(m, n)
            ax.text(cx, cy, str(int(capacity[m, n])), ha="center", va="center", fontsize=7,
                    color="#ffffff" if capacity[m, n] == 0 else "#555555")

    colors = plt.get_cmap("tab20")
    ids = sorted(a.id for a in log.scenario.agents)
    for agent in sorted(log.scenario.agents, key=lambda a: a.id):
        color = colors(ids.index(agent.id) % 20)
        goal = agent.goal
        if goal.half_width is not None and not goal.half_planes:
            cx, cy = goal.center
            hw = goal.half_width
            ax.add_patch(patches.Rectangle((cx - hw, cy - hw), 2 * hw, 2 * hw, fill=False,
                                           edgecolor=color, linestyle="--", linewidth=1.5))
        else:
            center = build_goal(goal).center
            ax.plot([center[0]], [center[1]], marker="o", markerfacecolor="none", color=color,
                    linestyle="none")

    if log.scenario.stations:
        sx, sy = zip(*log.scenario.stations)
        ax.plot(sx, sy, marker="^", color="#000000", linestyle="none", markersize=9)

    for agent_id, path in sorted(_agent_paths(log).items()):
        color = colors(ids.index(agent_id) % 20) if agent_id in ids else "#000000"
        xs, ys = zip(*path)
        line, = ax.plot(xs, ys, color=color, linewidth=2)
        line.set_gid(f"agent-{agent_id}")
        ax.plot([xs[0]], [ys[0]], marker="o", color=color, markersize=5)
        ax.annotate(str(agent_id), (xs[0], ys[0]), textcoords="offset points", xytext=(0, 6),
                    ha="center", fontsize=8)
    return _render(fig)


def heatmap_svg(log: RunLog, step: int) -> str:
    if step < 0 or step >= len(log.occupancy):
        raise RunLogError(f"step {step} is outside the logged range 0..{len(log.occupancy) - 1}")
    fig, ax, grid = _axes(log, f"{log.scenario.name} occupancy at step {step}")
    counts = np.asarray(log.occupancy[step], dtype=int)
    capacity = _capacity(log, grid)
    _draw_cells(ax, grid, counts, capacity == 0 if capacity is not None else None, "Oranges")
    for m, n in grid.cells():
        w, e, s, nth = grid.cell_bounds(m, n)
        if capacity is not None and counts[m, n] > capacity[m, n]:
            ax.add_patch(patches.Rectangle((w, s), e - w, nth - s, fill=False, edgecolor="#d62728",
                                           linewidth=2))
        if counts[m, n]:
            cx, cy = grid.cell_center(m, n)
            ax.text(cx, cy, str(int(counts[m, n])), ha="center", va="center", fontsize=10)
    return _render(fig)


def cmd_plot(log: RunLog, out_dir: Union[str, Path], steps: Sequence[int] = ()) -> List[Path]:
    for t in steps:
        if t < 0 or t >= len(log.occupancy):
            raise RunLogError(f"step {t} is outside the logged range 0..{len(log.occupancy) - 1}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / "trajectories.svg"
    path.write_text(trajectory_svg(log), encoding="utf-8")
    written.append(path)
    for t in steps:
        path = out_dir / f"occupancy_t{t:03d}.svg"
        path.write_text(heatmap_svg(log, t), encoding="utf-8")
        written.append(path)
    logger.info("wrote %d plots to %s", len(written), out_dir)
    return written
