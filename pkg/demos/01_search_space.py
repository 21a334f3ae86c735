"""Tour of the discrete search space.

Samples a few genomes, decodes them into explicit layer lists, and walks
through the per-layer tensor sizes that drive every split decision: a layer
is a viable partition point only once its output drops below the raw input.
"""

import numpy as np

from splitnas import compute_sizes, decode, sample_random
from splitnas.search_space import input_bytes

rng = np.random.default_rng(7)

for k in range(3):
    genome = sample_random(rng)
    spec = decode(genome, input_shape=(224, 224, 3), class_count=10)
    ios = compute_sizes(spec)
    raw = input_bytes(spec)
    print(f"=== architecture {k + 1} ===")
    print(f"genome: {genome}")
    print(f"input 224x224x3 = {raw} bytes ({raw / 1024:.1f} KiB)")
    print(f"{'idx':>3} {'layer':<22} {'output shape':<16} {'bytes':>9}  viable split?")
    for i, (layer, io) in enumerate(zip(spec.layers, ios), start=1):
        if layer.kind == "conv":
            name = f"conv k={layer.kernel} f={layer.units}"
        elif layer.kind == "pool":
            name = "maxpool 2x2"
        else:
            name = f"fc n={layer.units} ({layer.activation})"
        shape = "x".join(str(v) for v in io.output_shape)
        viable = "yes" if io.output_bytes < raw else "-"
        print(f"{i:>3} {name:<22} {shape:<16} {io.output_bytes:>9}  {viable}")
    print()
