"""
Run statistics module

Collects the cost of every realization and baseline run during a fill or a
benchmark (Monte Carlo steps, accepted updates, residuals, wall times) and
summarizes them per method. Wall times are not reproducible, so the summary is
written next to the deterministic outputs rather than into them.
"""

import logging
import json
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

logger = logging.getLogger(__name__)


def _new_method_entry() -> Dict[str, Any]:
    return {
        "total": 0,
        "successful": 0,
        "failed": 0,
        "avg_time": 0.0,
        "fastest_time": None,
        "slowest_time": None,
        "total_mc_steps": 0,
        "total_accepted": 0,
        "total_retries": 0,
        "max_residual": None
    }


class RunStatistics:
    """
    Per-method run statistics with running averages
    """
    def __init__(self):
        self.stats: Dict[str, Any] = {
            "methods": {},
            "errors": {
                "count": 0,
                "by_type": {}
            },
            "started": time.time()
        }
        logger.debug("Run statistics recorder initialized")

    def _method(self, method: str) -> Dict[str, Any]:
        if method not in self.stats["methods"]:
            self.stats["methods"][method] = _new_method_entry()
        return self.stats["methods"][method]

    def record_run(self, method: str, wall_time: float, success: bool = True,
                   mc_steps: int = 0, accepted_updates: int = 0, retries: int = 0,
                   residual_u: Optional[float] = None):
        """
        Record one run of a method

        Args:
            method: Method name (dgc, knn, nn, idw)
            wall_time: Seconds spent
            success: Whether the run produced a result
            mc_steps: Monte Carlo steps (optimizer runs only)
            accepted_updates: Accepted relabels (optimizer runs only)
            retries: Re-initializations before acceptance
            residual_u: Final objective value
        """
        entry = self._method(method)
        entry["total"] += 1
        if success:
            entry["successful"] += 1
        else:
            entry["failed"] += 1

        # running average of the run time
        total = entry["total"]
        entry["avg_time"] = wall_time if total == 1 else (entry["avg_time"] * (total - 1) + wall_time) / total

        if entry["fastest_time"] is None or wall_time < entry["fastest_time"]:
            entry["fastest_time"] = wall_time
        if entry["slowest_time"] is None or wall_time > entry["slowest_time"]:
            entry["slowest_time"] = wall_time

        entry["total_mc_steps"] += int(mc_steps)
        entry["total_accepted"] += int(accepted_updates)
        entry["total_retries"] += int(retries)
        if residual_u is not None and (entry["max_residual"] is None or residual_u > entry["max_residual"]):
            entry["max_residual"] = float(residual_u)

        logger.debug(f"Run recorded: method={method}, success={success}, time={wall_time:.3f} s")

    def record_realizations(self, method: str, run_stats: List[Any]):
        """Record every RunStats of an optimizer call; unconverged ones count as failed"""
        for s in run_stats:
            self.record_run(method, s.wall_time, s.converged, s.mc_steps, s.accepted_updates, s.retries, s.residual_u)

    def record_error(self, error_type: str, details: Optional[Dict[str, Any]] = None):
        """
        Record a failed sample or run

        Args:
            error_type: Exception class name
            details: Optional context, logged only
        """
        self.stats["errors"]["count"] += 1
        if error_type not in self.stats["errors"]["by_type"]:
            self.stats["errors"]["by_type"][error_type] = {
                "count": 0,
                "first_seen": time.time(),
                "last_seen": time.time()
            }
        self.stats["errors"]["by_type"][error_type]["count"] += 1
        self.stats["errors"]["by_type"][error_type]["last_seen"] = time.time()

        logger.warning(f"Error recorded: type={error_type}, "
                       f"total={self.stats['errors']['by_type'][error_type]['count']}"
                       + (f", details={details}" if details else ""))

    def get_summary(self) -> Dict[str, Any]:
        """
        Summary per method

        Returns:
            Dict with a "methods" entry (counts, success rate, times, mean MCS)
            and an "errors" entry
        """
        methods = {}
        for name, entry in sorted(self.stats["methods"].items()):
            total = entry["total"]
            methods[name] = {
                "total": total,
                "successful": entry["successful"],
                "failed": entry["failed"],
                "success_rate": round(entry["successful"] / total * 100, 2) if total else 0,
                "avg_time": entry["avg_time"],
                "fastest_time": entry["fastest_time"],
                "slowest_time": entry["slowest_time"],
                "mean_mc_steps": entry["total_mc_steps"] / total if total else 0,
                "total_retries": entry["total_retries"],
                "max_residual": entry["max_residual"]
            }

        errors = sorted(
            ({"type": t, "count": s["count"]} for t, s in self.stats["errors"]["by_type"].items()),
            key=lambda x: x["count"], reverse=True
        )
        return {
            "methods": methods,
            "errors": {"count": self.stats["errors"]["count"], "top_errors": errors[:3]},
            "elapsed": time.time() - self.stats["started"]
        }

    def save(self, path: Union[str, Path]):
        """Write the summary as JSON"""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(self.get_summary(), f, ensure_ascii=False, indent=2)
            logger.debug(f"Run statistics written to {path}")
        except OSError as e:
            logger.error(f"Could not write run statistics: {str(e)}")
