"""
Fit command: load a network, run the chains, save traces and the run manifest.
"""
from data_handlers.network import EdgeKind
from data_handlers.processors import binarize
from data_handlers.storage import load_network, save_state_dump, save_trace
from inference.sampler import ChainDivergenceError, SamplerConfig, run_chains
from models.likelihood import LinkKind
from models.prior import Hyperparams
from services.base_runner import BaseRunner
from utils.validators import ValidationError


def input_edge_kind(input_settings, model):
    """Edge kind to load: explicit 'edges' setting, else the one the model expects."""
    if input_settings.get('edges'):
        return EdgeKind(input_settings['edges'])
    return LinkKind.from_model(model).edge_kind


def load_input_network(input_settings, model):
    """Load the configured input network, binarizing counts for the logit model."""
    if not input_settings.get('path'):
        raise ValidationError("no input network given (--input or [input] path)")
    net = load_network(
        input_settings['path'],
        kind=input_edge_kind(input_settings, model),
        directed=bool(input_settings.get('directed', False)),
        fmt=input_settings.get('format', 'auto'),
        index_base=int(input_settings.get('index_base', 0)),
        n_nodes=input_settings.get('n_nodes'),
    )
    kind = LinkKind.from_model(model)
    if kind is LinkKind.LOGIT and net.kind == EdgeKind.COUNT:
        net = binarize(net)
    return net


class FitRunner(BaseRunner):
    """Runs `fit`: one or more chains on an observed network."""

    command = 'fit'

    def run(self):
        sampler_settings = self.settings['sampler']
        input_settings = self.settings['input']
        model = LinkKind.from_model(sampler_settings['model'])

        net = self.run_step('load', load_input_network, input_settings, model.model_name)
        self.inputs['network'] = str(input_settings['path'])
        if model is LinkKind.LOGIT and input_edge_kind(input_settings, model.model_name) == EdgeKind.COUNT:
            self.log("Count network binarized for the logit model", "info")
        self.log(f"Loaded {net}", "success")

        hp = Hyperparams.from_mapping(self.settings['prior']).validate_for(net.n)
        cfg = SamplerConfig.from_settings(sampler_settings, model.model_name)
        n_chains = int(sampler_settings['chains'])
        self.seeds['chains'] = [cfg.seed + k for k in range(n_chains)]

        self.log(f"Fitting {model.model_name} model: p={hp.p}, {n_chains} chain(s), "
                 f"S={cfg.iterations}, burn-in={cfg.burn_in}, thin={cfg.thin}", "info")
        try:
            traces = self.run_step('sample', run_chains, net, hp, cfg, model, n_chains,
                                   threads=int(sampler_settings.get('threads', 1)))
        except ChainDivergenceError as e:
            path = save_state_dump(e.last_good_state, self.out_dir / f"last_good_state_chain{e.chain_index}.json")
            self.log(f"Last good state of chain {e.chain_index} written to {path}", "error")
            self.write_manifest(failure={'chain': e.chain_index, 'iteration': e.iteration, 'error': str(e)})
            raise

        outputs = {}
        for trace in traces:
            outputs[f'chain_{trace.chain_index}'] = self.run_step(f'save_chain_{trace.chain_index}',
                                                                  save_trace, trace, self.out_dir)
        self.write_manifest(
            network={'n': net.n, 'kind': net.kind.value, 'directed': net.directed},
            chains=[trace.run_info() for trace in traces],
            outputs=outputs,
        )
        self.log(f"Fit complete: {len(traces)} chain(s) saved to {self.out_dir}", "success")
        return traces
