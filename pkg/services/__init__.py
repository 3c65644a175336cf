"""
Services module: one runner per command.
"""

from services.diagnose_runner import DiagnoseRunner
from services.fit_runner import FitRunner
from services.ppc_runner import PpcRunner
from services.simulate_runner import SimulateRunner
from services.study_runner import StudyRunner

__all__ = ['DiagnoseRunner', 'FitRunner', 'PpcRunner', 'SimulateRunner', 'StudyRunner']
