"""Optimal-split evaluation of one architecture under different links.

For a single sampled architecture, prices every viable deployment option
(All-Cloud, interior splits, All-Edge) at several upload throughputs and
shows how the latency- and energy-optimal choices move with the link.
"""

from splitnas import DeviceProfile, WirelessProfile, decode, evaluate_deployment, sample_random

device = DeviceProfile.default()
lte = WirelessProfile.default("lte")

spec = decode(sample_random(3), input_shape=(224, 224, 3), class_count=10)
n_layers = len(spec.layers)
print(f"architecture: {n_layers} layers, kinds "
      f"{'/'.join(l.kind for l in spec.layers)}")


def label(index):
    if index == 0:
        return "All-Cloud"
    if index == n_layers:
        return "All-Edge"
    return f"Split@{index}"


for t_u in (0.7, 3.0, 7.5, 16.1, 60.0):
    wireless = lte.with_throughput(t_u)
    ev = evaluate_deployment(spec, device, wireless)
    print(f"\nt_u = {t_u:5.1f} Mbps   (viable candidates: "
          f"{', '.join(label(i) for i in ev.candidates)})")
    print(f"  best latency: {label(ev.index_latency):<10} {ev.latency_s * 1e3:8.1f} ms")
    print(f"  best energy:  {label(ev.index_energy):<10} {ev.energy_j:8.3f} J")
