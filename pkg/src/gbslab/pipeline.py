"""Experiment orchestration: stages, deterministic outputs and the verification path."""

from __future__ import annotations

import datetime as _dt
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .circuit import circuit_from_dict, output_geometry, unroll
from .config import ExperimentConfig
from .cost import extrapolate_chi, fit_chi, load_baselines, runtime_estimate, speedup_ratio
from .errors import ConfigError, DigestMismatchError, GBSLabError
from .gaussian import GaussianState, SqueezerBank, apply_transfer, squeezed_vacuum
from .instances import random_instance
from .mps import adapt_transmission, build_mps, decompose, decompose_at_sources, default_cutoff, mps_sample, save_mps, vacuum_mps
from .rng import derive_seed
from .samplers import (
    SampleBatch,
    classical_gaussian_sampler,
    click_marginals,
    distinguishable_sampler,
    exact_sampler,
    greedy_sampler,
    ips_sampler,
    read_samples,
    squashed_state_of,
    thermal_state_of,
    write_samples,
)
from .validation import (
    bayesian_score,
    click_number_distribution,
    correlation_report,
    correlation_tuples,
    normalized_delta_k,
    theoretical_correlations,
    write_correlation_csv,
)

VALIDATE_STATE_MAX_MODES = 2000
BRUTE_FORCE_MODES = 14
ALL_STAGES = ("unroll", "state", "samplers", "mps", "validation", "cost")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


def _clean(x):
    """Replace non-finite floats by ``None`` so the JSON stays strict."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


@dataclass(frozen=True)
class System:
    bank: SqueezerBank
    transfer: np.ndarray
    state: GaussianState
    geometry: dict

    @property
    def num_modes(self) -> int:
        return self.state.num_modes


def build_system(cfg: ExperimentConfig) -> System | None:
    """Sources, transfer matrix and ground-truth state declared by the config."""
    if cfg.section("circuit") is not None:
        entry = cfg.section("circuit")
        if isinstance(entry, str):
            try:
                entry = yaml.safe_load(cfg.resolve(entry).read_text())
            except OSError as exc:
                raise ConfigError(f"cannot read circuit file {entry}: {exc.strerror}") from None
        spec = circuit_from_dict(entry)
        tm = unroll(spec)
        bins, m_out, m_in = output_geometry(spec)
        bank, T = spec.squeezer_bank(), tm.matrix
        geometry = {
            "source": "circuit",
            "spatial_modes": spec.spatial_modes,
            "input_time_bins": spec.input_time_bins,
            "output_time_bins": bins,
            "output_offset": tm.output_offset,
            "M_in": m_in,
            "M_out": m_out,
        }
    elif cfg.section("instance") is not None:
        inst = cfg.section("instance")
        ins = random_instance(
            inst["modes"],
            inst.get("seed", cfg.seed),
            tuple(inst.get("r_range", (0.5, 1.2))),
            tuple(inst.get("eta_range", (0.4, 1.0))),
            inst.get("eta"),
        )
        bank, T = ins.bank, ins.transfer
        geometry = {"source": "instance", "M_in": T.shape[1], "M_out": T.shape[0]}
    else:
        return None
    validate = T.shape[0] <= VALIDATE_STATE_MAX_MODES
    state = apply_transfer(squeezed_vacuum(bank), T, validate=validate)
    return System(bank, T, state, geometry)


class Evaluator:
    """Validation battery against one ground truth, with theory values cached per order."""

    def __init__(self, cfg: ExperimentConfig, system: System):
        self.cfg = cfg
        self.system = system
        self.section = cfg.section("validation") or {}
        self._theory: dict[int, tuple[list, np.ndarray]] = {}
        self._h1_state = None

    def theory(self, order: int):
        if order not in self._theory:
            tuples = correlation_tuples(self.system.num_modes, order, derive_seed(self.cfg.seed, "tuples"))
            self._theory[order] = (tuples, theoretical_correlations(self.system.state, tuples))
        return self._theory[order]

    def hypothesis(self) -> GaussianState:
        if self._h1_state is None:
            against = self.section.get("bayesian", {}).get("against", "squashed")
            fn = squashed_state_of if against == "squashed" else thermal_state_of
            self._h1_state = fn(self.system.bank, self.system.transfer)
        return self._h1_state

    def evaluate(self, batch: SampleBatch) -> dict:
        if batch.num_modes != self.system.num_modes:
            raise ConfigError(f"samples have {batch.num_modes} modes, the configured system has {self.system.num_modes}")
        out: dict = {"count": batch.count, "provenance": batch.provenance, "sampler": batch.sampler}
        orders = {}
        for order in self.section.get("orders", [2]):
            tuples, theory = self.theory(order)
            if not tuples or batch.count < order + 1:
                continue
            rep = correlation_report(batch, self.system.state, order, tuples, theory)
            orders[str(order)] = {
                "K": rep.K,
                "delta_k": rep.delta_k,
                "wd": rep.wd,
                "K_intercept": rep.K_intercept,
                "intercept": rep.intercept,
            }
            out.setdefault("_reports", {})[order] = rep
        first = orders.get("2") or next(iter(orders.values()), {})
        out["orders"] = orders
        out["K"] = first.get("K")
        out["delta_k"] = first.get("delta_k")
        out["wd"] = first.get("wd")

        out["delta_h"] = out["sigma"] = None
        bayes = self.section.get("bayesian")
        if bayes is not None and batch.count:
            subsystems = bayes.get("subsystems") or [list(range(min(self.system.num_modes, BRUTE_FORCE_MODES)))]
            scores = []
            for sub in subsystems:
                rep = bayesian_score(batch, self.system.state, self.hypothesis(), sub, seed=derive_seed(self.cfg.seed, "bootstrap"))
                scores.append({"subsystem": list(rep.subsystem), "delta_h": rep.delta_h, "sigma": rep.sigma})
            out["bayesian"] = scores
            out["delta_h"], out["sigma"] = scores[-1]["delta_h"], scores[-1]["sigma"]

        out["click_number_tvd"] = None
        if self.section.get("click_numbers", True) and batch.count:
            state = self.system.state if self.system.num_modes <= BRUTE_FORCE_MODES else None
            dist = click_number_distribution(batch, state)
            out["click_numbers"] = dist.counts.tolist()
            if dist.theory is not None:
                out["click_number_tvd"] = dist.tvd()
        return out


def public(metrics: dict) -> dict:
    return _clean({k: v for k, v in metrics.items() if not k.startswith("_")})


class Pipeline:
    """Runs the declared stages and writes every artefact under ``out``."""

    def __init__(self, cfg: ExperimentConfig, out=None, threads: int | None = None):
        self.cfg = cfg
        self.out = cfg.output_dir(out)
        self.threads = threads or cfg.threads
        self.manifest = {"tool_version": __version__, "config_digest": cfg.digest, "stages": [], "files": []}
        self.batches: dict[str, SampleBatch] = {}
        self.mps_info: dict[str, dict] = {}
        self.summary: dict = {}

    @cached_property
    def system(self) -> System | None:
        return build_system(self.cfg)

    @cached_property
    def evaluator(self) -> Evaluator:
        return Evaluator(self.cfg, self.system)

    @property
    def _meta(self) -> dict:
        return {"config_digest": self.cfg.digest, "tool_version": __version__}

    def _path(self, rel: str) -> Path:
        p = self.out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        if rel not in self.manifest["files"]:
            self.manifest["files"].append(rel)
        return p

    def _need_system(self, stage: str) -> System:
        if self.system is None:
            raise ConfigError(f"stage {stage} needs a circuit or instance section")
        return self.system

    # -- stages --------------------------------------------------------------

    def stage_unroll(self):
        if self.cfg.section("circuit") is None:
            return
        sys = self._need_system("unroll")
        T = np.asarray(sys.transfer)
        body = dict(self._meta, shape=list(T.shape), real=T.real.tolist(), imag=T.imag.tolist())
        _dump_json(self._path("transfer.json"), body)
        geo = dict(sys.geometry, config_digest=self.cfg.digest, tool_version=__version__)
        _dump_json(self._path("geometry.json"), geo)

    def stage_state(self):
        sys = self.system
        if sys is None:
            return
        n = sys.state.mean_photons()
        info = {
            "config_digest": self.cfg.digest,
            "tool_version": __version__,
            "num_modes": sys.num_modes,
            "total_mean_photons": float(n.sum()),
            "mean_photons": n.tolist(),
            "input_mean_photons": float(sys.bank.mean_photons().sum()),
        }
        _dump_json(self._path("state.json"), _clean(info))

    def sample(self, kind: str, count: int, name: str) -> SampleBatch:
        sys = self._need_system("samplers")
        seed = derive_seed(self.cfg.seed, f"sampler/{name}")
        t = self.threads
        if kind == "exact":
            batch = exact_sampler(sys.state, count, seed, threads=t)
        elif kind == "squashed":
            batch = classical_gaussian_sampler(squashed_state_of(sys.bank, sys.transfer), count, seed, threads=t)
        elif kind == "thermal":
            batch = classical_gaussian_sampler(thermal_state_of(sys.bank, sys.transfer), count, seed, threads=t)
        elif kind == "distinguishable":
            batch = distinguishable_sampler(sys.bank, sys.transfer, count, seed, threads=t)
        elif kind == "ips":
            batch = ips_sampler(sys.state, count, seed, threads=t)
        elif kind == "greedy":
            batch = greedy_sampler(*click_marginals(sys.state), count, seed)
        else:  # pragma: no cover - schema forbids it
            raise ConfigError(f"unknown sampler {kind}")
        return SampleBatch(batch.patterns, kind, seed, self.cfg.digest)

    def stage_samplers(self, only=None):
        for entry in self.cfg.section("samplers") or []:
            name = entry.get("name", entry["kind"])
            if only is not None and name not in only and entry["kind"] not in only:
                continue
            if name in self.batches:
                raise ConfigError(f"duplicate sampler name {name}")
            batch = self.sample(entry["kind"], entry["count"], name)
            write_samples(self._path(f"samples/{name}.txt"), batch)
            self.batches[name] = batch

    def stage_mps(self):
        sec = self.cfg.section("mps")
        if sec is None:
            return
        sys = self._need_system("mps")
        bank, T = sys.bank, sys.transfer
        scale = sec.get("transmission_scale", 1.0)
        if scale != 1.0:
            bank, T = adapt_transmission(bank, T, scale)
        if sec.get("split", "sources") == "sources":
            dec = decompose_at_sources(bank, T)
        else:
            dec = decompose(apply_transfer(squeezed_vacuum(bank), T).cov)
        d = sec.get("d") or default_cutoff(dec.V_p)
        n_eff = dec.N_eff
        for chi in sec.get("chi", [None]):
            label = "inf" if chi is None else str(chi)
            name = f"mps_chi{label}"
            seed = derive_seed(self.cfg.seed, f"mps/{name}")
            if chi == 0:
                mps = vacuum_mps(sys.num_modes)
            else:
                mps = build_mps(dec.V_p, d, math.inf if chi is None else chi)
            batch = mps_sample(mps, dec.W, sec["count"], seed, threads=self.threads)
            batch = SampleBatch(batch.patterns, name, seed, self.cfg.digest)
            write_samples(self._path(f"samples/{name}.txt"), batch)
            if sec.get("checkpoint", False) and chi != 0:
                save_mps(self._path(f"mps/{name}.gbsmps"), mps, self._meta)
            self.batches[name] = batch
            self.mps_info[name] = {
                "chi": chi,
                "d": d if chi != 0 else 1,
                "epsilon": mps.epsilon if chi != 0 else 1.0,
                "epsilon_max": mps.epsilon_max if chi != 0 else 1.0,
                "bond_dims": mps.bond_dims,
                "N_eff": n_eff,
                "transmission_scale": scale,
            }

    def stage_validation(self):
        if not self.batches or self.system is None:
            return
        experiments = {}
        reports = {}
        for name, batch in self.batches.items():
            metrics = self.evaluator.evaluate(batch)
            for order, rep in metrics.get("_reports", {}).items():
                reports[f"{name}/k{order}"] = rep
            info = self.mps_info.get(name, {})
            metrics["epsilon"] = info.get("epsilon")
            metrics["N_eff"] = info.get("N_eff")
            if info:
                metrics["mps"] = info
            experiments[name] = metrics
        base = experiments.get("mps_chi0")
        if base is not None and base.get("delta_k"):
            for name in self.mps_info:
                dk = experiments[name].get("delta_k")
                experiments[name]["normalized_delta_k"] = (
                    normalized_delta_k(dk, base["delta_k"]) if dk is not None else None
                )
        if reports:
            write_correlation_csv(self._path("correlations.csv"), reports, self._meta)
        self.summary["experiments"] = {k: public(v) for k, v in experiments.items()}

    def stage_cost(self):
        sec = self.cfg.section("cost")
        if sec is None:
            return
        baselines = load_baselines(self.cfg.resolve(sec["baselines_file"]) if "baselines_file" in sec else None)
        name = sec.get("baseline", "exascale")
        if name not in baselines:
            raise ConfigError(f"unknown baseline {name!r}; known: {sorted(baselines)}")
        base = baselines[name]
        M = sec.get("M") or (self.system.num_modes if self.system else None)
        n_eff = sec.get("N_eff")
        if n_eff is None and self.mps_info:
            n_eff = next(iter(self.mps_info.values()))["N_eff"]
        if M is None or n_eff is None:
            raise ConfigError("cost section needs M and N_eff (or a system and MPS stage to derive them)")
        result: dict = {"baseline": name, "baseline_ops_per_second": base.ops_per_second, "citation": base.citation}
        log10_chi = sec.get("log10_chi")
        chi = sec.get("chi")
        if "chi_fit" in sec:
            pts = [(v["epsilon"], v["chi"]) for v in self.mps_info.values() if v["chi"] and 0 < v["epsilon"] < 1]
            fit = fit_chi(pts)
            ext = extrapolate_chi(fit, sec["chi_fit"]["eps_target"])
            result["chi_fit"] = {
                "A": fit.A,
                "n": fit.n,
                "residual_norm": fit.residual_norm,
                "eps_target": ext.eps_target,
                "log10_chi": ext.log10_chi,
                "log10_chi_band": [ext.log10_low, ext.log10_high],
            }
            log10_chi, chi = ext.log10_chi, None
        if chi is None and log10_chi is None:
            raise ConfigError("cost section needs chi, log10_chi or chi_fit")
        est = runtime_estimate(
            M, sec["d"], chi=chi, N_eff=n_eff, throughput=base.ops_per_second,
            prefactor=sec.get("prefactor", 1.0), log10_chi=log10_chi if chi is None else None,
        )
        result.update(est.to_dict())
        result["log10_speedup"] = speedup_ratio(est, sec.get("quantum_sample_time", 25.6e-6))
        self.summary["cost"] = _clean(result)

    # -- driver --------------------------------------------------------------

    def run(self, stages=ALL_STAGES, only_samplers=None) -> dict:
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest["started"] = _now()
        current = None
        try:
            for stage in stages:
                current = stage
                started = _now()
                fn = getattr(self, f"stage_{stage}")
                fn(only_samplers) if stage == "samplers" else fn()
                (self.out / f".{stage}.done").write_text(self.cfg.digest + "\n")
                self.manifest["stages"].append({"name": stage, "started": started, "finished": _now()})
            if self.summary:
                body = {"config_digest": self.cfg.digest, "tool_version": __version__, "name": self.cfg.name}
                body.update(self.summary)
                _dump_json(self._path("summary.json"), body)
        except Exception as exc:
            code = exc.exit_code if isinstance(exc, GBSLabError) else 1
            _dump_json(
                self.out / "error.json",
                {"stage": current, "type": type(exc).__name__, "message": str(exc), "exit_code": code,
                 "config_digest": self.cfg.digest},
            )
            raise
        finally:
            self.manifest["finished"] = _now()
            _dump_json(self.out / "manifest.json", self.manifest)
        return self.summary


def run(cfg: ExperimentConfig, out=None, threads=None, stages=ALL_STAGES) -> dict:
    return Pipeline(cfg, out, threads).run(stages)


def verify(sample_file, cfg: ExperimentConfig, strict: bool = True) -> dict:
    """Recompute the validation battery on a persisted sample file.

    Files carrying a digest must match ``cfg``; files without one are reported
    as external.
    """
    batch = read_samples(sample_file)
    if batch.config_digest and batch.config_digest != cfg.digest and strict:
        raise DigestMismatchError(
            f"{sample_file}: config digest {batch.config_digest[:12]}... does not match {cfg.digest[:12]}..."
        )
    system = build_system(cfg)
    if system is None:
        raise ConfigError("verification needs a circuit or instance section")
    report = public(Evaluator(cfg, system).evaluate(batch))
    report["config_digest"] = cfg.digest
    report["file_digest"] = batch.config_digest or None
    return report
