"""Bundled synthetic ECG beat generator.

MIT-BIH records cannot be redistributed, so the pipeline ships with a
seeded generator: each class is a sum of Gaussian and triangle pulses with
per-beat jitter plus white noise.  Also provides the ground-truth sparse
synthesis model (Y = D* X*) used to sanity-check dictionary recovery.
"""

import numpy as np

from .ingest import BEAT_LENGTH, Beat, normalize_beat

# pulse spec: (kind, center, width, amplitude)
MORPHOLOGIES = {
    "N": [("g", 60, 8, 0.25), ("g", 85, 2.5, -0.25), ("g", 92, 4, 1.8),
          ("g", 100, 3, -0.35), ("g", 185, 18, 0.5)],
    "/": [("t", 95, 25, 1.2), ("g", 190, 20, -0.6)],
    "A": [("g", 50, 5, 0.35), ("g", 90, 3.5, 1.6), ("g", 175, 15, 0.45)],
    "V": [("t", 100, 30, 1.7), ("g", 200, 22, -0.7)],
    "R": [("g", 85, 4, 0.9), ("g", 97, 4, 1.3), ("g", 110, 5, -0.5),
          ("g", 195, 18, 0.4)],
    "L": [("g", 90, 10, 1.4), ("g", 105, 8, 0.9), ("g", 190, 20, -0.5)],
}


def _pulse(t, kind, center, width, amp):
    if kind == "g":
        return amp * np.exp(-0.5 * ((t - center) / width) ** 2)
    # triangle: linear rise/fall over [center-width, center+width]
    return amp * np.maximum(1.0 - np.abs(t - center) / width, 0.0)


def render_beat(pulses, rng, noise=0.05, center_jitter=2.0, amp_jitter=0.05,
                shift=0.0):
    """One noisy beat from a pulse list; `shift` translates every pulse."""
    t = np.arange(BEAT_LENGTH, dtype=float)
    x = np.zeros(BEAT_LENGTH)
    for kind, center, width, amp in pulses:
        c = center + shift + rng.normal(0.0, center_jitter)
        a = amp * (1.0 + rng.normal(0.0, amp_jitter))
        x += _pulse(t, kind, c, width, a)
    x += rng.normal(0.0, noise, BEAT_LENGTH)
    return x


def synthetic_beats(n_per_class, seed=0, classes=("N", "/", "A", "V", "R", "L"),
                    noise=0.05):
    """Seeded beats for the requested classes, normalized like real ingest."""
    rng = np.random.default_rng(seed)
    beats = []
    i = 0
    for label in classes:
        pulses = MORPHOLOGIES[label]
        for _ in range(n_per_class):
            raw = render_beat(pulses, rng, noise=noise)
            beats.append(Beat(values=normalize_beat(raw), label=label,
                              source=("synth", i)))
            i += 1
    return beats


# shared morphology for the time-shift discrimination set: the only thing
# separating the last two classes is where this lands on the time axis
_SHARED = [("g", 0, 4, 1.5), ("g", 14, 6, -0.8), ("t", 30, 10, 0.6)]
_TRIO_BASE = 80
_TRIO_SHIFT = 50  # two stride lengths under the default w=50, s=25 geometry


def shifted_trio_beats(n_per_class, seed=0, noise=0.05):
    """3-class set where classes 'A' and 'V' differ only by pulse position.

    'N' keeps its usual morphology; 'A' renders the shared pulse group at
    t=80 and 'V' renders the identical group at t=130.  A bag-of-windows
    histogram is nearly blind to the difference (the shift is a multiple of
    the default stride), while pyramid features see it.
    """
    rng = np.random.default_rng(seed)
    beats = []
    i = 0
    specs = [
        ("N", MORPHOLOGIES["N"], 0.0),
        ("A", _SHARED, _TRIO_BASE),
        ("V", _SHARED, _TRIO_BASE + _TRIO_SHIFT),
    ]
    for label, pulses, shift in specs:
        for _ in range(n_per_class):
            raw = render_beat(pulses, rng, noise=noise, shift=shift)
            beats.append(Beat(values=normalize_beat(raw), label=label,
                              source=("trio", i)))
            i += 1
    return beats


def amplitude_varying_beats(n_per_class, seed=0, noise=0.0005,
                            amp_low=0.5, amp_high=1.5, flip_prob=0.5):
    """Beats whose pulses keep fixed positions but vary freely in amplitude.

    Every pulse scale is drawn from U(amp_low, amp_high) and flips sign with
    probability flip_prob, so each class spans a combinatorial family of
    shapes that a continuous-coefficient code represents with a handful of
    atoms while a one-centroid-per-beat quantizer needs a codeword per
    branch.  This is the compression benchmark set.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(BEAT_LENGTH, dtype=float)
    beats = []
    i = 0
    for label in ("N", "/", "A", "V", "R", "L"):
        for _ in range(n_per_class):
            x = np.zeros(BEAT_LENGTH)
            for kind, center, width, amp in MORPHOLOGIES[label]:
                scale = rng.uniform(amp_low, amp_high)
                if rng.random() < flip_prob:
                    scale = -scale
                x += _pulse(t, kind, center, width, amp * scale)
            x += rng.normal(0.0, noise, BEAT_LENGTH)
            beats.append(Beat(values=normalize_beat(x), label=label,
                              source=("amp", i)))
            i += 1
    return beats


def make_sparse_synthesis(d, k, n, sparsity, seed=0, noise=0.0):
    """Ground-truth model Y = D* X* (+ noise) for recovery experiments.

    D* has unit-norm Gaussian atoms; each column of X* has `sparsity`
    nonzeros at seeded positions with magnitudes bounded away from zero.
    Returns (D, X, Y).
    """
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((d, k))
    D /= np.linalg.norm(D, axis=0, keepdims=True)
    X = np.zeros((k, n))
    for i in range(n):
        rows = rng.choice(k, size=sparsity, replace=False)
        mags = rng.uniform(0.5, 1.5, size=sparsity) * rng.choice([-1.0, 1.0], size=sparsity)
        X[rows, i] = mags
    Y = D @ X
    if noise > 0:
        Y = Y + rng.normal(0.0, noise, Y.shape)
    return D, X, Y
