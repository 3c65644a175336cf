"""
Study command: simulate -> fit -> diagnose -> ppc over a study grid, one result row
per (setting, network, fitted truncation level).
"""
import copy
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
import pandas as pd

from config import DESK_SCALE, FULL_SCALE
from constants.studies import STUDY_TITLES, study_preset
from data_handlers.processors import density
from data_handlers.storage import save_frame
from evaluation.ppc import run_ppc
from inference.postprocess import diagnostics, procrustes_correlation
from inference.sampler import SamplerConfig, run_chains
from models.prior import Hyperparams
from services.base_runner import BaseRunner
from services.simulate_runner import network_seed, simulate_setting
from utils.validators import ValidationError

logger = logging.getLogger('study')

SCALES = {'desk': DESK_SCALE, 'full': FULL_SCALE}


def resolve_scale(study_settings):
    """Scale preset with any explicit [study] overrides applied."""
    name = study_settings.get('scale') or 'desk'
    if name not in SCALES:
        raise ValidationError(f"unknown scale {name!r}, expected 'desk' or 'full'")
    scale = dict(SCALES[name])
    for key in scale:
        if study_settings.get(key) is not None:
            scale[key] = study_settings[key]
    return name, scale


def run_study_job(job):
    """
    One (setting, network, fit p) job. Never raises: failures come back as a
    row with status 'failed'.
    """
    setting, replicate, fit_p, seed_words, settings, scale = (
        job['setting'], job['replicate'], job['fit_p'], job['seed'], job['settings'], job['scale'])
    row = {
        'study': setting.study,
        'setting': setting.label,
        'variant': setting.variant,
        'model': setting.model,
        'n': setting.n,
        'p_star': setting.p_star,
        'alpha_true': setting.alpha,
        'fit_p': fit_p,
        'network': replicate,
        'seed': '-'.join(str(w) for w in seed_words),
    }
    started = time.perf_counter()
    try:
        sim, _ = simulate_setting(setting, replicate, seed_words)
        net = sim.network
        row['observed_density'] = density(net)

        hp = Hyperparams.from_mapping({**settings['prior'], 'p': fit_p}).validate_for(net.n)
        sampler = dict(settings['sampler'])
        sampler.update({
            'iterations': scale['iterations'],
            'burn_in': scale['burn_in'] if scale['burn_in'] is not None else setting.burn_in,
            'thin': scale['thin'] if scale['thin'] is not None else setting.thin,
            'progress': False,
        })
        chain_seed = int(np.random.SeedSequence(seed_words + [fit_p]).generate_state(1)[0])
        cfg = replace(SamplerConfig.from_settings(sampler, setting.model), seed=chain_seed)
        traces = run_chains(net, hp, cfg, setting.model, int(scale['chains']))

        report, summary, aligned = diagnostics(traces, settings['postprocess']['jump_factor'],
                                               settings['postprocess']['width_factor'])
        table = summary.table
        row['alpha_mean'] = table.loc['alpha', 'mean']
        row['alpha_bias'] = row['alpha_mean'] - setting.alpha
        for h in range(1, fit_p + 1):
            row[f'delta_mean_{h}'] = table.loc[f'delta_{h}', 'mean']
            row[f'variance_mean_{h}'] = table.loc[f'variance_{h}', 'mean']
        row['effective_dimension'] = report['effective_dimension']['dimension']
        row['effective_at_least'] = report['effective_dimension']['at_least']
        dims = min(setting.p_star, fit_p)
        row['procrustes_corr'] = procrustes_correlation(summary.Z_mean[:, :dims], sim.Z_true[:, :dims])
        row['r_hat_alpha'] = report['r_hat']['alpha']
        row['z_acceptance'] = float(np.mean([t.z_acceptance_rate for t in traces]))
        row['alpha_acceptance'] = float(np.mean([t.alpha_acceptance_rate for t in traces]))
        row['z_step'] = float(np.mean([t.step_z for t in traces]))

        ppc = run_ppc(aligned, net, setting.model, int(scale['n_replicates']),
                      np.random.default_rng(seed_words + [fit_p]),
                      max_count=int(settings['ppc']['max_count']),
                      Z_true=sim.Z_true if setting.model == 'poisson' else None)
        if ppc.bands:
            row['ppc_density_lower'] = ppc.bands['density']['lower']
            row['ppc_density_upper'] = ppc.bands['density']['upper']
            row['density_in_band'] = ppc.observed['density_in_band']
        if ppc.pseudo_r2 is not None:
            row['pseudo_r2'] = ppc.pseudo_r2
        if ppc.distance_ratios is not None:
            row['distance_ratio_median'] = ppc.distance_ratios['median']
        row['status'] = 'done'
    except Exception as e:
        logger.error(f"{setting.label} network {replicate} p={fit_p} error: {str(e)[:50]}")
        row['status'] = 'failed'
        row['error'] = str(e)[:200]
    row['wall_time_sec'] = round(time.perf_counter() - started, 3)
    return row


class StudyRunner(BaseRunner):
    """Runs `study`; writes study{id}_results.csv."""

    command = 'study'

    def build_jobs(self, study_id):
        study = self.settings['study']
        scale_name, scale = resolve_scale(study)
        settings = study_preset(study_id, study.get('variant'), model=study.get('model'),
                                fit_dims=study.get('fit_dims'))
        seed = int(self.settings['sampler']['seed'])
        self.seeds['base'] = seed
        self.log(f"Study {study_id} ({STUDY_TITLES[int(study_id)]}): {len(settings)} setting(s), "
                 f"{scale['n_networks']} network(s) each, {scale_name} scale", "info")

        jobs = []
        for s_idx, setting in enumerate(settings):
            for r in range(int(scale['n_networks'])):
                for fit_p in setting.fit_dims:
                    jobs.append({
                        'setting': setting,
                        'replicate': r,
                        'fit_p': int(fit_p),
                        'seed': network_seed(seed, s_idx, r),
                        'settings': copy.deepcopy(self.settings),
                        'scale': scale,
                    })
        return jobs, scale_name, scale

    def run(self, study_id):
        jobs, scale_name, scale = self.build_jobs(study_id)
        threads = max(1, min(int(self.settings['sampler'].get('threads', 1)), len(jobs)))

        if threads == 1:
            rows = [run_study_job(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(run_study_job, jobs))

        for row in rows:
            self.update_status(f"{row['setting']}_{row['network']:02d}_p{row['fit_p']}", row['status'] == 'done')

        results = pd.DataFrame(rows)
        path = save_frame(results, self.out_dir / f'study{study_id}_results.csv')
        failed = int((results['status'] != 'done').sum()) if len(results) else 0
        self.write_manifest(scale={'name': scale_name, **scale}, jobs=len(jobs), failed=failed,
                            outputs={'results': path})
        status = "success" if failed == 0 else "error"
        self.log(f"Study {study_id}: {len(jobs) - failed}/{len(jobs)} jobs completed", status)
        return results

