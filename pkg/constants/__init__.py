"""
Simulation study presets.
"""

from constants.studies import STUDY_TITLES, StudySetting, study_preset

__all__ = ['STUDY_TITLES', 'StudySetting', 'study_preset']
