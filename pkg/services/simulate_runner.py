"""
Simulate command: study presets or a single explicit setting, one adjacency CSV
plus truth sidecar per network.
"""
import numpy as np

from constants.studies import StudySetting, study_preset
from data_handlers.storage import save_json, save_network
from services.base_runner import BaseRunner
from simulation.generator import simulate_network
from utils.validators import ValidationError


def network_seed(seed, setting_index, replicate):
    """Seed words for one simulated network; independent of how many are generated."""
    return [int(seed), int(setting_index), int(replicate)]


def simulate_setting(setting, replicate, seed_words, directed=False):
    """Simulate one network of a setting; returns (SimulatedNetwork, truth dict)."""
    rng = np.random.default_rng(seed_words)
    sim = simulate_network(setting.n, setting.p_star, setting.delta, setting.alpha, setting.model, rng,
                           directed=directed)
    truth = {
        'setting': setting.label,
        'study': setting.study,
        'variant': setting.variant,
        'replicate': replicate,
        'seed': seed_words,
        'fit_dims': list(setting.fit_dims),
        **sim.metadata,
        'Z_true': sim.Z_true,
    }
    return sim, truth


def custom_setting(sim_settings):
    """StudySetting from explicit n/alpha/delta/model values."""
    missing = [k for k in ('n', 'alpha', 'delta') if sim_settings.get(k) is None]
    if missing:
        raise ValidationError(f"single-setting simulation needs {missing} (or --study)")
    delta = tuple(float(d) for d in sim_settings['delta'])
    model = sim_settings.get('model') or 'logit'
    return StudySetting(0, 'custom', int(sim_settings['n']), delta, float(sim_settings['alpha']), model,
                        (), 0, 1)


class SimulateRunner(BaseRunner):
    """Runs `simulate`; writes net_XX.csv and truth_XX.json per network."""

    command = 'simulate'

    def run(self):
        sim = self.settings['simulate']
        if sim.get('study') is not None:
            settings = study_preset(int(sim['study']), sim.get('variant'), model=sim.get('model'))
        else:
            settings = [custom_setting(sim)]

        seed = int(sim['seed'])
        n_networks = int(sim['n_networks'])
        directed = bool(sim.get('directed', False))
        self.seeds['base'] = seed

        written = {}
        for s_idx, setting in enumerate(settings):
            target = self.out_dir if len(settings) == 1 else self.out_dir / setting.label
            for r in range(n_networks):
                seed_words = network_seed(seed, s_idx, r)
                result = self.run_step(f'{setting.label}_{r:02d}', simulate_setting, setting, r, seed_words,
                                       directed=directed)
                net, truth = result[0].network, result[1]
                save_network(net, target / f'net_{r:02d}.csv')
                save_json(truth, target / f'truth_{r:02d}.json')
            written[setting.label] = {'dir': str(target), 'networks': n_networks}
            self.log(f"{setting.label}: {n_networks} networks (n={setting.n}, alpha={setting.alpha:g}, "
                     f"delta={list(setting.delta)})", "success")

        self.write_manifest(outputs=written)
        return written
