"""
PPC command: replicate networks from a saved fit and score them against the observed network.
"""
from pathlib import Path

import numpy as np

from data_handlers.storage import load_json, load_traces, save_frame
from evaluation.ppc import run_ppc
from models.likelihood import LinkKind
from services.base_runner import BaseRunner
from services.fit_runner import load_input_network


class PpcRunner(BaseRunner):
    """Runs `ppc`; writes ppc_report.json and ppc_metrics.csv."""

    command = 'ppc'

    def _input_settings(self, fit_dir):
        """Explicit [input] wins; otherwise reuse the input recorded in the fit manifest."""
        if self.settings['input'].get('path'):
            return self.settings['input']
        manifest = Path(fit_dir) / 'fit_manifest.json'
        if manifest.exists():
            return load_json(manifest)['config']['input']
        return self.settings['input']

    def run(self, fit_dir, truth_path=None):
        ppc = self.settings['ppc']
        traces = self.run_step('load', load_traces, fit_dir, log_msg=f"Loaded traces from {fit_dir}")
        model = LinkKind.from_model(traces[0].kind)

        input_settings = self._input_settings(fit_dir)
        net = self.run_step('load_network', load_input_network, input_settings, model.model_name)
        self.inputs.update({'fit_dir': str(fit_dir), 'network': str(input_settings['path'])})

        Z_true = None
        if truth_path:
            Z_true = np.asarray(load_json(truth_path)['Z_true'], dtype=float)
            self.inputs['truth'] = str(truth_path)

        seed = ppc['seed'] if ppc.get('seed') is not None else self.settings['sampler']['seed']
        self.seeds['ppc'] = int(seed)
        report = self.run_step(
            'ppc', run_ppc, traces, net, model, int(ppc['n_replicates']), np.random.default_rng(int(seed)),
            mode=ppc['mode'], max_count=int(ppc['max_count']), Z_true=Z_true,
        )

        self.save(report.to_dict(), 'ppc_report.json')
        save_frame(report.records, self.out_dir / 'ppc_metrics.csv')
        self.write_manifest(outputs={'report': 'ppc_report.json', 'metrics': 'ppc_metrics.csv'})
        self.log(f"PPC complete: {len(report.records)} replicate records", "success")
        return report
