"""Experiment commands.

Each ``cmd_*`` function reads its inputs from disk, runs one stage and
writes its artifacts; ``reproduce_desk`` chains them with the desk preset.
All model inputs and outputs are in normalized units.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
import logging
import re

import numpy as np
import pandas as pd

from config.errors import UsageError
from config.run_config import RunConfig
from dyngen import Dataset, first_split, get_generator, load_dataset, normalize_dataset, save_dataset, stream
from evaluation import (
    LatentReport,
    MetricsReport,
    coverage,
    default_timestamps,
    interval_coverage,
    lambda_selection,
    latent_analysis,
    latent_frames,
    nmae_per_case,
    onestep_metrics,
)
from simulate import ForecastDiverged, ForecastEnsemble, OneStepPrediction, forecast_model, one_step_predict
from vi_model import VIModel, encode_prefixes, posterior_trajectory, train_baseline, train_encoder, train_vi
from .artifacts import (
    read_csv,
    read_ensemble,
    read_onestep,
    write_csv,
    write_forecast,
    write_json,
    write_onestep,
    write_resolved_config,
)
from .checkpoint import checkpoint_from_model, load_checkpoint, model_from_checkpoint, save_checkpoint

logger = logging.getLogger(__name__)

# Stream ids under (simulation seed, ...)
ONESTEP_STREAM = 101
LATENT_STREAM = 102

TRAIN_KINDS = ("encoder", "vi", "baseline")
_TRAJ_RE = re.compile(r"traj_(\d+)")


@dataclass(frozen=True)
class RunPaths:
    """Output layout of a run directory."""
    root: Path

    @property
    def dataset(self) -> Path:
        return self.root / "dataset"

    def checkpoint(self, name: str) -> Path:
        return self.root / f"{name}.ckpt"

    def train_log(self, name: str) -> Path:
        return self.root / f"{name}_train_log.csv"

    def forecast_dir(self, name: str) -> Path:
        return self.root / "forecast" / name

    def onestep_dir(self, name: str) -> Path:
        return self.root / "onestep" / name

    def evaluate_dir(self, name: str) -> Path:
        return self.root / "evaluate" / name

    @property
    def latent_dir(self) -> Path:
        return self.root / "latent"


def model_name(kind: str, lam: float | None = None) -> str:
    return f"vi_lambda{lam:g}" if kind == "vi" else kind


def _traj_index(path: Path) -> int:
    match = _TRAJ_RE.search(path.name)
    if match is None:
        raise UsageError(f"cannot tell the trajectory of {path.name}")
    return int(match.group(1))


def _eval_trajectories(dataset: Dataset, config: RunConfig) -> tuple[int, ...]:
    limit = config.simulate.val_trajectories
    return dataset.val_indices if limit is None else dataset.val_indices[:limit]


def _load_forecaster(path: str | Path, dataset: Dataset):
    ckpt = load_checkpoint(path)
    if ckpt.kind == "encoder":
        raise UsageError(f"{path} is an encoder checkpoint; forecasting needs a vi or baseline model")
    if ckpt.norm_stats.to_dict() != dataset.norm_stats.to_dict():
        logger.warning(f"{path} was trained with different normalization statistics than the dataset")
    return ckpt, model_from_checkpoint(ckpt)


# ── generate ─────────────────────────────────────────────────


def cmd_generate(config: RunConfig, out: str | Path | None = None) -> tuple[Dataset, Path]:
    """Generate, normalize and store a synthetic dataset."""
    data = config.data
    generator = get_generator(
        data.system,
        dt_fine=data.dt_fine,
        dt_sample=data.dt_sample,
        sigma_eps=data.sigma_eps,
        burn_in=data.burn_in,
        threads=config.threads,
    )
    trajectories = generator.generate(data.k, data.t, data.seed, data.param_overrides)
    dataset = normalize_dataset(
        trajectories,
        first_split(data.k, data.resolved_train_count),
        seed=data.seed,
        noise_sigma=generator.sigma_eps,
        system=generator.system,
        dt_fine=generator.dt_fine,
        stride=generator.stride,
    )
    out = Path(out) if out is not None else RunPaths(Path(config.output_dir)).dataset
    save_dataset(dataset, out)
    logger.info(
        f"Dataset {dataset.system}: K={dataset.k}, T={dataset.t}, "
        f"split {len(dataset.train_indices)}/{len(dataset.val_indices)}, "
        f"y range [{dataset.norm_stats.y_min.tolist()}, {dataset.norm_stats.y_max.tolist()}]"
    )
    return dataset, out


# ── train ────────────────────────────────────────────────────


def cmd_train(
    kind: str,
    config: RunConfig,
    dataset_path: str | Path,
    out: str | Path | None = None,
    encoder_path: str | Path | None = None,
    lambdas: Sequence[float] | None = None,
) -> list[Path]:
    """
    Train one model kind and write checkpoint(s) plus training logs.

    ``vi`` needs a pretrained encoder checkpoint and trains one model per
    lambda (default: the single ``train.lambda``).
    """
    if kind not in TRAIN_KINDS:
        raise UsageError(f"unknown model kind {kind!r}; choose from {TRAIN_KINDS}")
    if kind == "vi" and encoder_path is None:
        raise UsageError("train vi requires a pretrained encoder checkpoint (--encoder)")
    dataset = load_dataset(dataset_path)
    paths = RunPaths(Path(out) if out is not None else Path(config.output_dir))
    written = []

    if kind == "encoder":
        model, result = train_encoder(dataset, config)
        runs = [("encoder", model, result, None)]
    elif kind == "baseline":
        model, result = train_baseline(dataset, config)
        runs = [("baseline", model, result, None)]
    else:
        enc_ckpt = load_checkpoint(encoder_path)
        if enc_ckpt.kind != "encoder":
            raise UsageError(f"{encoder_path} is a {enc_ckpt.kind} checkpoint, not an encoder")
        runs = []
        for lam in lambdas if lambdas is not None else [config.train.lambda_]:
            encoder = model_from_checkpoint(enc_ckpt)
            model, result = train_vi(dataset, encoder, config, lam)
            runs.append((model_name("vi", lam), model, result, lam))

    for name, model, result, lam in runs:
        ckpt = checkpoint_from_model(model, kind, dataset.norm_stats, config, result, lam)
        written.append(save_checkpoint(ckpt, paths.checkpoint(name)))
        write_csv(result.log, paths.train_log(name))
    return written


# ── simulate ─────────────────────────────────────────────────


def forecast_case(model, dataset: Dataset, k: int, start: int, config: RunConfig) -> ForecastEnsemble:
    """Forecast of trajectory k from ``start`` on its own random streams."""
    sim = config.simulate
    y, u, _ = dataset.normalized(k)
    return forecast_model(model, y, u, start, sim.tau, sim.n_samples, sim.horizon, sim.seed, config.threads, key=(k,))


def onestep_case(model, dataset: Dataset, k: int, config: RunConfig) -> OneStepPrediction:
    """One-step mixture predictions for trajectory k on stream (seed, ONESTEP_STREAM, k)."""
    sim = config.simulate
    y, u, _ = dataset.normalized(k)
    rng = stream(sim.seed, ONESTEP_STREAM, k)
    return one_step_predict(model, y, u, sim.tau, sim.onestep_samples, rng, sim.coverage_levels, sim.onestep_draws)


def cmd_forecast(
    config: RunConfig,
    checkpoint_path: str | Path,
    dataset_path: str | Path,
    out: str | Path | None = None,
) -> Path:
    """Monte Carlo forecasts from every configured start of the evaluation trajectories."""
    dataset = load_dataset(dataset_path)
    ckpt, model = _load_forecaster(checkpoint_path, dataset)
    sim = config.simulate
    out = Path(out) if out is not None else RunPaths(Path(config.output_dir)).forecast_dir(Path(checkpoint_path).stem)
    diverged = 0
    cases = _eval_trajectories(dataset, config)
    logger.info(f"Forecasting {len(cases)} trajectories x {len(sim.starts)} starts with {ckpt.kind} model")
    for k in cases:
        for start in sim.starts:
            try:
                ensemble = forecast_case(model, dataset, k, start, config)
            except ForecastDiverged as e:
                logger.warning(f"  trajectory {k}, start {start}: {e}; keeping {e.step} steps")
                ensemble = e.partial
                diverged += 1
            write_forecast(ensemble, sim.coverage_levels, out, k)
    if diverged:
        logger.warning(f"{diverged} forecasts diverged")
    return out


def cmd_onestep(
    config: RunConfig,
    checkpoint_path: str | Path,
    dataset_path: str | Path,
    out: str | Path | None = None,
) -> Path:
    """One-step-ahead mixture predictions over the evaluation trajectories."""
    dataset = load_dataset(dataset_path)
    ckpt, model = _load_forecaster(checkpoint_path, dataset)
    out = Path(out) if out is not None else RunPaths(Path(config.output_dir)).onestep_dir(Path(checkpoint_path).stem)
    for k in _eval_trajectories(dataset, config):
        write_onestep(onestep_case(model, dataset, k, config), out, k)
    return out


# ── evaluate ─────────────────────────────────────────────────


def score_onestep(
    preds: Sequence[tuple[int, OneStepPrediction]],
    dataset: Dataset,
    config: RunConfig,
    report: MetricsReport | None = None,
) -> MetricsReport:
    """e_mu, e_sigma, LL, NLL and one-step CP_p of (trajectory, prediction) pairs."""
    report = report if report is not None else MetricsReport()
    if not preds:
        raise UsageError("no one-step predictions to score")
    levels = preds[0][1].levels
    mus, sigmas, phis, ys = [], [], [], []
    lower = {p: [] for p in levels}
    upper = {p: [] for p in levels}
    for k, pred in preds:
        y, _, phi = dataset.normalized(k)
        mus.append(pred.mu)
        sigmas.append(pred.sigma)
        ys.append(y[1:])
        phis.append(phi[1:])
        for p in levels:
            lower[p].append(pred.lower[p])
            upper[p].append(pred.upper[p])
    mu, sigma, y, phi = (np.stack(a) for a in (mus, sigmas, ys, phis))
    scores = onestep_metrics(
        mu, sigma, phi, y, dataset.noise_sigma_normalized, config.eval.discard, config.eval.ll_denominator
    )
    report.e_mu, report.e_sigma, report.ll, report.nll = (
        scores["e_mu"], scores["e_sigma"], scores["ll"], scores["nll"]
    )
    if levels:
        report.onestep_cp = interval_coverage(
            {p: np.stack(v) for p, v in lower.items()},
            {p: np.stack(v) for p, v in upper.items()},
            y,
            config.eval.discard,
        )
    else:
        logger.warning("one-step predictions carry no intervals; skipping one-step coverage")
    return report


def score_forecasts(
    cases: Sequence[tuple[int, int, np.ndarray]],
    dataset: Dataset,
    levels: Sequence[float],
    report: MetricsReport | None = None,
) -> MetricsReport:
    """
    CP_p, NMAE(t) and W_0.95(t) of (trajectory, start, samples) forecasts.

    Truncated (diverged) forecasts shorter than the longest one are skipped.
    """
    report = report if report is not None else MetricsReport()
    if not cases:
        raise UsageError("no forecasts to score")
    horizon = max(c[2].shape[1] for c in cases)
    complete = [c for c in cases if c[2].shape[1] == horizon]
    if len(complete) < len(cases):
        logger.warning(f"skipping {len(cases) - len(complete)} truncated (diverged) forecasts")

    ensembles, truths, observations, scales = [], [], [], []
    for k, start, samples in complete:
        y, _, phi = dataset.normalized(k)
        ensembles.append(samples)
        truths.append(phi[start + 1: start + 1 + horizon])
        observations.append(y[start + 1: start + 1 + horizon])
        scales.append(float(np.std(phi)))
    report.cp = coverage(ensembles, observations, levels)
    nmae, w95 = nmae_per_case(ensembles, truths, scales)
    report.nmae, report.w95 = nmae.mean(axis=0), w95.mean(axis=0)
    report.nmae_final_median = float(np.median(nmae[:, -1]))
    report.n_test, report.horizon = len(complete), horizon
    return report


def cmd_evaluate(
    config: RunConfig,
    dataset_path: str | Path,
    onestep_dir: str | Path | None = None,
    forecast_dir: str | Path | None = None,
    out: str | Path | None = None,
) -> MetricsReport:
    """Score serialized one-step and forecast outputs against the dataset."""
    if onestep_dir is None and forecast_dir is None:
        raise UsageError("evaluate needs one-step and/or forecast inputs")
    dataset = load_dataset(dataset_path)
    report = MetricsReport()

    if onestep_dir is not None:
        files = sorted(Path(onestep_dir).glob("traj_*_onestep.csv"))
        if not files:
            raise UsageError(f"no one-step predictions in {onestep_dir}")
        score_onestep([(_traj_index(path), read_onestep(path)) for path in files], dataset, config, report)

    if forecast_dir is not None:
        files = sorted(Path(forecast_dir).glob("traj_*_ensemble.csv"))
        if not files:
            raise UsageError(f"no forecast ensembles in {forecast_dir}")
        cases = [(_traj_index(path), *read_ensemble(path)) for path in files]
        score_forecasts(cases, dataset, config.simulate.coverage_levels, report)

    if out is not None:
        out = Path(out)
        write_json(report.to_dict(), out / "metrics.json")
        write_csv(report.scalar_frame(), out / "metrics.csv")
        if report.horizon:
            write_csv(report.growth_frame(), out / "growth.csv")
    logger.info(
        f"e_mu={report.e_mu:.4f} e_sigma={report.e_sigma:.4f} NLL={report.nll:.4f} "
        f"N_test={report.n_test} horizon={report.horizon}"
    )
    return report


# ── latent ───────────────────────────────────────────────────


def posterior_means_frame(model: VIModel, dataset: Dataset, indices: Sequence[int], t: int) -> pd.DataFrame:
    """Posterior means of q(z | Y_{0:t}) per trajectory with its true parameters."""
    y, u, _ = dataset.stacked(indices)
    codes = encode_prefixes(model.encoder, y.transpose(1, 0, 2), u.transpose(1, 0, 2), [t])
    q = model.posterior_from_code(codes[0])
    frame = pd.DataFrame({"trajectory": list(indices)})
    for i in range(model.n_z):
        frame[f"m_q{i}"] = q.m_q[:, i]
    names, values = dataset.param_matrix(indices)
    for j, name in enumerate(names):
        frame[name] = values[:, j]
    return frame


def posterior_time_frame(model: VIModel, dataset: Dataset, index: int, t_max: int) -> pd.DataFrame:
    y, u, _ = dataset.normalized(index)
    q = posterior_trajectory(model, y, u, min(t_max, dataset.t))
    frame = pd.DataFrame({"t": np.arange(len(q.m_q))})
    for i in range(model.n_z):
        frame[f"m_q{i}"] = q.m_q[:, i]
        frame[f"sigma_q{i}"] = q.sigma_q[:, i]
    return frame


def cmd_latent(
    config: RunConfig,
    checkpoint_paths: Sequence[str | Path],
    dataset_path: str | Path,
    out: str | Path | None = None,
) -> tuple[dict[float, LatentReport], float | None]:
    """Latent analysis per VI checkpoint and the lambda* recommendation."""
    if not checkpoint_paths:
        raise UsageError("latent needs at least one vi checkpoint")
    dataset = load_dataset(dataset_path)
    out = Path(out) if out is not None else RunPaths(Path(config.output_dir)).latent_dir
    indices = dataset.train_indices
    y, u, _ = dataset.stacked(indices)
    names, params = dataset.param_matrix(indices)
    stamps = config.eval.latent_timestamps or default_timestamps(dataset.t)

    reports: dict[float, LatentReport] = {}
    for path in checkpoint_paths:
        ckpt = load_checkpoint(path)
        if ckpt.kind != "vi":
            raise UsageError(f"{path} is a {ckpt.kind} checkpoint; latent analysis needs a vi model")
        model = model_from_checkpoint(ckpt)
        lam = ckpt.meta.get("lambda")
        lam = float("nan") if lam is None else float(lam)
        report = latent_analysis(
            model,
            y,
            u,
            stamps,
            config.eval.draws_per_q,
            stream(config.simulate.seed, LATENT_STREAM),
            params=params,
            param_names=names,
        )
        reports[lam] = report
        name = Path(path).stem
        write_json({"lambda": lam, "timestamps": list(stamps), **report.to_dict()}, out / f"{name}.json")
        for table, frame in latent_frames(report).items():
            write_csv(frame, out / f"{name}_{table}.csv")
        logger.info(
            f"{name}: active dims={report.active_dims()} zeta={np.round(report.zeta, 3).tolist()} "
            f"max|corr_zz|={report.max_offdiag_corr:.3f}"
        )

    finite = {lam: r.corr_zz for lam, r in reports.items() if np.isfinite(lam)}
    lam_star = lambda_selection(finite, config.eval.delta) if finite else None
    write_json(
        {
            "delta": config.eval.delta,
            "max_offdiag_corr": {f"{lam:g}": r.max_offdiag_corr for lam, r in reports.items()},
            "lambda_star": lam_star,
        },
        out / "lambda_selection.json",
    )
    logger.info(f"lambda* = {lam_star} at delta={config.eval.delta}")
    return reports, lam_star


# ── reproduce-desk ───────────────────────────────────────────


def _forecast_band(paths: RunPaths, names: dict[str, str], dataset: Dataset, traj: int, start: int) -> pd.DataFrame:
    y, _, phi = dataset.normalized(traj)
    frame = None
    for label, name in names.items():
        summary = read_csv(paths.forecast_dir(name) / f"traj_{traj:04d}_start_{start:04d}_summary.csv")
        summary = summary[summary["dim"] == 0]
        part = summary[["t", "mean", "q025", "q975"]].rename(
            columns={"mean": f"{label}_mean", "q025": f"{label}_q025", "q975": f"{label}_q975"}
        )
        frame = part if frame is None else frame.merge(part, on="t")
    frame.insert(1, "truth", phi[frame["t"].to_numpy(), 0])
    frame.insert(2, "obs", y[frame["t"].to_numpy(), 0])
    return frame


def _non_increasing(values: Sequence[float], slack: float = 1e-12) -> bool:
    return all(b <= a + slack for a, b in zip(values, values[1:]))


def reproduce_desk(config: RunConfig, out: str | Path | None = None, seed: int | None = None) -> dict:
    """
    generate -> train encoder -> train vi (lambda sweep) -> train baseline ->
    forecast/one-step -> evaluate -> latent, then the acceptance table.
    """
    if seed is not None:
        config = config.with_seed(seed)
    paths = RunPaths(Path(out) if out is not None else Path(config.output_dir))
    write_resolved_config(config, paths.root)
    lam_main = config.train.lambda_
    lambdas = sorted(set(config.train.lambdas) | {lam_main})

    dataset, ds_path = cmd_generate(config, paths.dataset)
    [enc_path] = cmd_train("encoder", config, ds_path, paths.root)
    vi_paths = cmd_train("vi", config, ds_path, paths.root, encoder_path=enc_path, lambdas=lambdas)
    [base_path] = cmd_train("baseline", config, ds_path, paths.root)
    main_path = vi_paths[lambdas.index(lam_main)]

    names = {"vi": main_path.stem, "rnn": base_path.stem}
    reports: dict[str, MetricsReport] = {}
    for label, path in (("vi", main_path), ("rnn", base_path)):
        name = path.stem
        fdir = cmd_forecast(config, path, ds_path, paths.forecast_dir(name))
        odir = cmd_onestep(config, path, ds_path, paths.onestep_dir(name))
        reports[label] = cmd_evaluate(config, ds_path, odir, fdir, paths.evaluate_dir(name))

    latent, lam_star = cmd_latent(config, vi_paths, ds_path, paths.latent_dir)
    main_model = model_from_checkpoint(load_checkpoint(main_path))
    main_latent = latent[lam_main]

    # figure data
    cases = _eval_trajectories(dataset, config)
    write_csv(
        _forecast_band(paths, names, dataset, cases[0], config.simulate.starts[0]),
        paths.root / "fig_forecast_band.csv",
    )
    write_csv(
        pd.DataFrame(
            {
                "t": np.arange(1, reports["vi"].horizon + 1),
                "nmae_vi": reports["vi"].nmae,
                "nmae_rnn": reports["rnn"].nmae,
                "w95_vi": reports["vi"].w95,
                "w95_rnn": reports["rnn"].w95,
            }
        ),
        paths.root / "fig_nmae_growth.csv",
    )
    write_csv(
        pd.DataFrame(
            [
                {"lambda": lam, "i": i + 1, "nu": r.pca_eigs[i], "zeta": r.zeta[i], "dkl": r.dkl_per_dim[i]}
                for lam, r in sorted(latent.items())
                for i in range(r.n_z)
            ]
        ),
        paths.root / "fig_pca_spectrum.csv",
    )
    write_csv(
        posterior_means_frame(main_model, dataset, dataset.train_indices, dataset.t),
        paths.root / "fig_latent_scatter.csv",
    )
    write_csv(posterior_time_frame(main_model, dataset, cases[0], 300), paths.root / "fig_posterior_time.csv")

    # acceptance table
    vi_nmae, rnn_nmae = reports["vi"].nmae_final_median, reports["rnn"].nmae_final_median
    ratio = vi_nmae / rnn_nmae if rnn_nmae > 0 else float("inf")
    zeta_3 = float(main_latent.zeta[min(2, main_latent.n_z - 1)])
    active = main_latent.active_dims(0.1)
    param_corr = {
        name: float(np.abs(main_latent.corr_z_param[:, j]).max())
        for j, name in enumerate(main_latent.param_names)
    }
    onestep_cp = {p: reports["vi"].onestep_cp[p] for p in (0.8, 0.9, 0.95) if p in reports["vi"].onestep_cp}
    max_corr = [latent[lam].max_offdiag_corr for lam in sorted(latent)]
    acceptance = {
        "nmae": {"vi": vi_nmae, "rnn": rnn_nmae, "ratio": ratio, "pass": bool(ratio <= 0.8)},
        "latent": {
            "lambda": lam_main,
            "zeta_3": zeta_3,
            "active_dims": active,
            "param_corr": param_corr,
            "pass": bool(zeta_3 >= 0.8 and active in (2, 3, 4) and all(v >= 0.7 for v in param_corr.values())),
        },
        "onestep_coverage": {
            "cp": {f"{p:g}": v for p, v in onestep_cp.items()},
            "pass": bool(onestep_cp) and all(abs(v - p) <= 0.05 for p, v in onestep_cp.items()),
        },
        "lambda_selection": {
            "lambdas": sorted(latent),
            "max_offdiag_corr": max_corr,
            "lambda_star": lam_star,
            "pass": lam_star is not None and _non_increasing(max_corr),
        },
        "metrics": {label: r.to_dict() for label, r in reports.items()},
    }
    write_json(acceptance, paths.root / "acceptance.json")
    logger.info(
        f"NMAE ratio {ratio:.3f}, zeta_3 {zeta_3:.3f}, active dims {active}, lambda* {lam_star}"
    )
    return acceptance
