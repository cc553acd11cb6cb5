"""Write a landmark corpus to CSV and read it back.

A corpus is a flat CSV with one landmark observation per row:
sample_id, frame_index, kind, landmark_index, x, y, z, label.
Missing z stays empty and round-trips as NaN.
"""

import tempfile
from pathlib import Path

from signpipe.landmarks import read_corpus, write_corpus
from signpipe.synth import make_synthetic_samples, synthetic_label_map


def main():
    samples = make_synthetic_samples(num_classes=3, per_class=2, seed=0)
    labels = synthetic_label_map(3)
    print(f"built {len(samples)} samples over {len(labels)} classes")
    first = samples[0]
    print(f"  {first.sample_id}: {len(first.frames)} landmark rows, "
          f"label {first.label} ({labels.gloss_for(first.label)})")

    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "corpus.csv"
        write_corpus(samples, path)
        lines = path.read_text().splitlines()
        print(f"wrote {path.name}: {len(lines)} lines (1 header)")
        print(f"  header: {lines[0]}")
        print(f"  row:    {lines[1]}")

        back = read_corpus(path)

    assert back == samples, "round trip must be lossless"
    print(f"read back {len(back)} samples, equal to the originals")


if __name__ == "__main__":
    main()
