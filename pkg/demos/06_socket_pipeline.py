"""The full loop over TCP: robot client -> recognition server -> robot.

The server holds the trained weights and the dialogue stack. The client
streams raw landmark samples as length-prefixed JSON frames and receives
a RESULT (gloss + confidence) and a SCRIPT (tagged reply + timeline) per
sample, writing a human-readable event log. With seeded weights and the
mock language model, two runs produce byte-identical logs.
"""

import tempfile
from importlib import resources
from pathlib import Path

from signpipe import nn
from signpipe.dialogue import MockLlmBackend, PromptTemplate
from signpipe.gesture import load_descriptors
from signpipe.netpipe import ServerConfig, robot_sim, serve
from signpipe.preprocess import SelectionSpec
from signpipe.synth import make_synthetic_samples, synthetic_label_map


def main():
    cfg = nn.ModelConfig(input_dim=176, extractor_dims=(32,), model_dim=32,
                         num_layers=2, num_heads=4, ff_dim=64,
                         num_classes=3, max_seq_len=16)
    server_cfg = ServerConfig(
        weights=nn.init_weights(cfg, seed=3),
        model_config=cfg,
        selection=SelectionSpec(),
        db=load_descriptors(
            str(resources.files("signpipe.data") / "descriptors.sample.json")),
        template=PromptTemplate.default(),
        backend_factory=lambda: MockLlmBackend(seed=0),
        labels=synthetic_label_map(3),
        port=0,  # ephemeral port, read back from the handle
    )

    samples = make_synthetic_samples(3, 1, seed=9)
    with tempfile.TemporaryDirectory() as d:
        first, second = Path(d) / "first.log", Path(d) / "second.log"
        with serve(server_cfg) as handle:
            host, port = handle.address
            print(f"server listening on {host}:{port}")
            for path in (first, second):
                status = robot_sim(handle.address, samples, path)
                print(f"robot run -> exit {status}, "
                      f"{len(path.read_bytes())} log bytes")
        identical = first.read_bytes() == second.read_bytes()
        print(f"logs byte-identical: {identical}")
        print("\nfirst log:")
        print(first.read_text(), end="")


if __name__ == "__main__":
    main()
