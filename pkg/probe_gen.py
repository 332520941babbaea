"""Dev probe: sweep synthetic-generator parameters for the direction experiment."""
import numpy as np, time, logging, sys
logging.basicConfig(level=logging.ERROR)
from metacomb.series import Frequency, TimeSeries, FREQUENCY_DEFAULTS
from metacomb.pipeline import DatasetManifest, run_offline, evaluate_dataset, prepare_metadata, _SYNTH_LENGTHS, _SYNTH_PREFIX
from metacomb.network import TrainConfig


def gen(n, frequency, seed, *, walk_p, slope_s, amp_lo, amp_hi, season_p, noise_lo, noise_hi):
    defaults = FREQUENCY_DEFAULTS[frequency]
    lo, hi = _SYNTH_LENGTHS[frequency]
    period = defaults.seasonal_period
    rest = (1.0 - walk_p) / 3.0
    out = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        rng = np.random.default_rng(child)
        length = int(rng.integers(lo, hi + 1))
        t = np.arange(length, dtype=float)
        level = rng.uniform(20.0, 200.0)
        regime = rng.choice(("level", "linear", "damped", "walk"), p=(rest, rest, rest, walk_p))
        slope = rng.normal(0.0, slope_s * level)
        if regime == "linear": base = level + slope * t
        elif regime == "damped":
            phi = rng.uniform(0.85, 0.99); base = level + slope * (1 - phi**t) / (1 - phi)
        elif regime == "walk":
            step_sd = rng.uniform(0.02, 0.08) * level
            drift = rng.normal(0.0, 0.2 * step_sd)
            steps = rng.normal(drift, step_sd, size=length); steps[0] = 0
            base = level + np.cumsum(steps)
        else: base = np.full(length, level)
        seasonal = np.zeros(length)
        if period > 1 and rng.uniform() < season_p:
            amp = rng.uniform(amp_lo, amp_hi) * level
            seasonal = amp * np.sin(2*np.pi*t/period + rng.uniform(0, 2*np.pi))
        rho = rng.uniform(0.0, 0.8)
        sigma = rng.uniform(noise_lo, noise_hi) * level
        shocks = rng.normal(0.0, sigma, size=length)
        noise = np.empty(length); noise[0] = shocks[0]
        for j in range(1, length): noise[j] = rho*noise[j-1] + shocks[j]
        out.append(TimeSeries(id=f"{_SYNTH_PREFIX[frequency]}{i+1:05d}", frequency=frequency,
                              values=base + seasonal + noise, horizon=defaults.horizon,
                              seasonal_period=defaults.seasonal_period))
    return out


CONFIGS = {
    "v1": dict(walk_p=0.5, slope_s=0.01, amp_lo=0.05, amp_hi=0.2, season_p=0.6, noise_lo=0.05, noise_hi=0.15),
    "v2": dict(walk_p=0.55, slope_s=0.008, amp_lo=0.04, amp_hi=0.15, season_p=0.6, noise_lo=0.06, noise_hi=0.16),
    "v3": dict(walk_p=0.45, slope_s=0.012, amp_lo=0.05, amp_hi=0.18, season_p=0.65, noise_lo=0.05, noise_hi=0.12),
}

name = sys.argv[1]
kw = CONFIGS[name]
manifest = DatasetManifest.for_frequency(Frequency.QUARTERLY)
train_series = gen(500, Frequency.QUARTERLY, 11000, **kw)
held_out = gen(100, Frequency.QUARTERLY, 22000, **kw)
cfg = TrainConfig(ort_weight=5e-3, max_epochs=40, patience=10, seed=7)
t0 = time.time()
result = run_offline(train_series, manifest, cfg)
ev = evaluate_dataset(result.container, held_out)
sc = ev.sowa_scores
recs, _ = prepare_metadata(train_series[:250], manifest)
lab = np.stack([r.bundle.labels for r in recs])
pres = {m: round(float(v), 2) for m, v in zip(recs[0].forecasts.methods, lab.mean(0))}
print(f"[{name}] OWA comb={ev.combined_score.owa:.3f} avg={ev.average_score.owa:.3f} "
      f"SDr={ev.combined_score.sd_sowa/ev.average_score.sd_sowa:.3f} "
      f"(sd {sc[:,0].std():.3f}/{sc[:,1].std():.3f}) t={round(time.time()-t0)}s")
print(f"[{name}] presence={pres}")
