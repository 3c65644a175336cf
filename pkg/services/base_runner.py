"""
Base runner class with common utilities for all commands.
"""
import time
from pathlib import Path

from config import VERSION
from data_handlers.storage import ensure_directory, save_json
from utils.logger import log_status


class BaseRunner:
    """Base class for command runners: step status, logging, output saving, manifests."""

    command = 'base'

    def __init__(self, out_dir, settings):
        self.out_dir = Path(out_dir)
        self.settings = settings
        self.step_status = {}
        self.logs = []
        self.seeds = {}
        self.inputs = {}
        self.started = time.perf_counter()
        ensure_directory(self.out_dir)

    def log(self, message: str, status: str = "info"):
        """Log message with a status icon."""
        line = log_status(message, status)
        self.logs.append(line)

    def save(self, data, filename: str):
        """Save a JSON document into the output directory."""
        return save_json(data, self.out_dir / filename)

    def update_status(self, key: str, success: bool = True):
        self.step_status[key] = "done" if success else "failed"

    def run_step(self, step_key: str, func, *args, log_msg: str = None, required: bool = True, **kwargs):
        """
        Run one step with status tracking and error logging.

        Args:
            step_key: Key identifying the step in the manifest
            func: Callable doing the work
            log_msg: Optional success message
            required: Re-raise failures (True) or record them and return None
        """
        try:
            result = func(*args, **kwargs)
            self.update_status(step_key, True)
            if log_msg:
                self.log(log_msg, "success")
            return result
        except Exception as e:
            self.update_status(step_key, False)
            self.log(f"{step_key} error: {str(e)[:50]}", "error")
            if required:
                raise
            return None

    def write_manifest(self, **extra):
        """Write {command}_manifest.json: version, resolved config, seeds, inputs, step status, timing."""
        manifest = {
            'command': self.command,
            'version': VERSION,
            'config': self.settings,
            'seeds': self.seeds,
            'inputs': self.inputs,
            'steps': self.step_status,
            'wall_time_sec': round(time.perf_counter() - self.started, 3),
        }
        manifest.update(extra)
        return self.save(manifest, f"{self.command}_manifest.json")
