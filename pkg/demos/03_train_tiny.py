"""Train a small sign classifier with the plain-numpy network.

The model is a dense feature extractor feeding a pre-norm transformer
encoder with learned positional embeddings, mean pooling, and a linear
head. Gradients come from handwritten backpropagation; the optimizer is
plain SGD. Everything is seeded, so this script prints the same numbers
every run.
"""

from signpipe import nn
from signpipe.preprocess import SelectionSpec, preprocess_pipeline
from signpipe.synth import make_synthetic_samples, synthetic_label_map


def main():
    cfg = nn.ModelConfig(input_dim=176, extractor_dims=(32,), model_dim=32,
                         num_layers=2, num_heads=4, ff_dim=64,
                         num_classes=3, max_seq_len=16)
    print(f"model: {nn.count_parameters(cfg):,} parameters "
          f"(default config has {nn.count_parameters(nn.DEFAULT_CONFIG):,})")

    spec = SelectionSpec()
    labels = synthetic_label_map(3)
    train = [(preprocess_pipeline(s, spec, cfg.max_seq_len), s.label)
             for s in make_synthetic_samples(3, 8, seed=0)]
    held_out = make_synthetic_samples(3, 1, seed=1, id_prefix="ho")

    w = nn.init_weights(cfg, seed=0)
    for epoch in range(5):
        w, loss = nn.train_step(train, w, cfg, lr=0.2)
        hits = sum(nn.predict(x, w, cfg).class_id == y for x, y in train)
        print(f"epoch {epoch + 1}: loss {loss:.4f}, "
              f"train acc {hits / len(train):.2f}")

    for s in held_out:
        x = preprocess_pipeline(s, spec, cfg.max_seq_len)
        p = nn.predict(x, w, cfg, labels)
        marker = "ok " if p.class_id == s.label else "MISS"
        print(f"{marker} {s.sample_id}: predicted {p.gloss} "
              f"({p.confidence:.0%}), true {labels.gloss_for(s.label)}")


if __name__ == "__main__":
    main()
