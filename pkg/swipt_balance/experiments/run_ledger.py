"""
Run ledger for swipt-balance experiments.
Keeps a JSON manifest of every run next to its CSV output.
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


class RunLedger:
    """Manages the run manifests of one output directory."""

    def __init__(self, ledger_dir: str = "results"):
        self.ledger_dir = Path(ledger_dir)
        self.ledger_dir.mkdir(parents=True, exist_ok=True)
        logger.debug(f"RunLedger initialized with directory: {self.ledger_dir}")

    def get_manifest_file(self, experiment_name: str) -> Path:
        """Get the manifest path for a given experiment."""
        safe_name = "".join(c for c in experiment_name if c.isalnum() or c in ("-", "_")).rstrip()
        return self.ledger_dir / f"{safe_name or 'experiment'}_manifest.json"

    def load_runs(self, experiment_name: str) -> List[Dict[str, Any]]:
        """Load all recorded runs of an experiment."""
        manifest = self.get_manifest_file(experiment_name)

        if not manifest.exists():
            return []

        try:
            with open(manifest, "r", encoding="utf-8") as f:
                runs = json.load(f)
            return runs
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Error loading run manifest for {experiment_name}: {e}")
            return []

    def save_runs(self, experiment_name: str, runs: List[Dict[str, Any]]) -> bool:
        manifest = self.get_manifest_file(experiment_name)

        try:
            with open(manifest, "w", encoding="utf-8") as f:
                json.dump(runs, f, indent=2, ensure_ascii=False, default=str)
            logger.info(f"Saved {len(runs)} run entries to {manifest}")
            return True
        except OSError as e:
            logger.error(f"Error saving run manifest for {experiment_name}: {e}")
            return False

    def add_run(
        self,
        experiment_name: str,
        command: str,
        config: Dict[str, Any],
        seed: int,
        trial_seeds: List[int],
        labels: Dict[str, str],
        outputs: List[str],
        elapsed_s: float,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> bool:
        """Append one run to the manifest."""
        runs = self.load_runs(experiment_name)

        entry = {
            "command": command,
            "timestamp": datetime.now().isoformat(),
            "elapsed_s": round(elapsed_s, 3),
            "seed": seed,
            "trial_seeds": trial_seeds,
            "config": config,
            "labels": labels,
            "outputs": outputs,
            "metadata": metadata or {},
        }

        runs.append(entry)
        return self.save_runs(experiment_name, runs)

    def clear(self, experiment_name: str) -> bool:
        manifest = self.get_manifest_file(experiment_name)
        try:
            if manifest.exists():
                manifest.unlink()
            logger.info(f"Cleared run manifest for {experiment_name}")
            return True
        except OSError as e:
            logger.error(f"Error clearing run manifest for {experiment_name}: {e}")
            return False

    def get_summary(self, experiment_name: str) -> Dict[str, Any]:
        """Summarize the recorded runs of an experiment."""
        runs = self.load_runs(experiment_name)
        if not runs:
            return {"total_runs": 0, "commands": [], "first_run_time": None, "last_run_time": None}
        return {
            "total_runs": len(runs),
            "commands": sorted({r.get("command", "") for r in runs}),
            "first_run_time": runs[0].get("timestamp"),
            "last_run_time": runs[-1].get("timestamp"),
        }
