"""
Diagnose command: align saved chains, summarize the posterior, report the
effective dimension and convergence diagnostics.
"""
import pandas as pd

from data_handlers.storage import load_traces, save_frame
from inference.postprocess import autocorrelation, diagnostics
from services.base_runner import BaseRunner


class DiagnoseRunner(BaseRunner):
    """Runs `diagnose` on a fit directory; writes summary.json and aligned_Z.csv."""

    command = 'diagnose'

    def run(self, fit_dir):
        post = self.settings['postprocess']
        self.inputs['fit_dir'] = str(fit_dir)

        traces = self.run_step('load', load_traces, fit_dir,
                               log_msg=f"Loaded traces from {fit_dir}")
        report, summary, aligned = self.run_step(
            'diagnose', diagnostics, traces,
            jump_factor=float(post['jump_factor']), width_factor=float(post['width_factor']),
        )

        max_lag = int(post['max_lag'])
        report['autocorrelation_alpha'] = {
            f'chain_{t.chain_index}': self.run_step(f'acf_chain_{t.chain_index}', self._acf, t, max_lag,
                                                   required=False)
            for t in aligned
        }

        self.save(report, 'summary.json')
        Z_mean = summary.Z_mean
        frame = pd.DataFrame(Z_mean, columns=[f'z_{l + 1}' for l in range(Z_mean.shape[1])])
        frame.insert(0, 'node', range(Z_mean.shape[0]))
        save_frame(frame, self.out_dir / 'aligned_Z.csv')

        self.write_manifest(outputs={'summary': 'summary.json', 'aligned_Z': 'aligned_Z.csv'})
        self.log(report['effective_dimension']['report'], "success")
        return report

    @staticmethod
    def _acf(trace, max_lag):
        if len(trace) <= max_lag:
            return None
        return autocorrelation(trace, 'alpha', max_lag).tolist()
