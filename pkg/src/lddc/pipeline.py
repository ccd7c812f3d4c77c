"""Configuration loading and the end-to-end controller design pipeline."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import io
from ._validation import check_frequency_data
from .certify import (
    DEFAULT_CANCEL_DISTANCE,
    DEFAULT_EPS,
    certify_orders,
    projection_stability_test,
    reconstruct_closed_loop,
    step_response,
)
from .errors import ConfigError, LDDCError
from .hardy import DEFAULT_K_BASIS, bandpass_prefilter, default_band, has_integrator, low_frequency_slope
from .loewner import DEFAULT_TOL, build_pencil, minimal_order, partition_points
from .plants import (
    DelayedRational,
    FreqResponseData,
    OpenChannel,
    RationalLTI,
    make_linear_grid,
    make_log_grid,
    sample_response,
)
from .refmodel import ideal_controller, make_achievable
from .scenarios import (
    crystallizer_surrogate,
    first_order_reference,
    saint_venant_channel,
    second_order_reference,
)
from .unstable import DEFAULT_DROP_RATIO, DEFAULT_ZERO_DROP_RATIO, InstabilityEstimate, analyze

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ANALYSIS = 2
EXIT_REALIZATION = 3

PLANT_KINDS = ("crystallizer_surrogate", "rational", "delayed_rational", "open_channel", "csv")


@dataclass
class PipelineConfig:
    plant: dict
    grid: dict = field(default_factory=lambda: {"w_min": 1e-3, "w_max": 1.0, "n": 500, "spacing": "log"})
    analysis: dict = field(default_factory=dict)
    reference: dict = field(default_factory=lambda: {"order": 1, "tau": 1.0})
    orders: list = field(default_factory=lambda: [2])
    tol: float = DEFAULT_TOL
    eps: float = DEFAULT_EPS
    cancel_distance: float = DEFAULT_CANCEL_DISTANCE
    simulate: dict | None = None
    out_dir: Path = Path("lddc_out")
    base_dir: Path = Path(".")

    # resolved analysis options
    @property
    def k_basis(self):
        return self.analysis.get("k_basis", DEFAULT_K_BASIS)

    @property
    def alpha(self):
        return self.analysis.get("alpha", "auto")

    @property
    def drop_ratio(self):
        return self.analysis.get("drop_ratio", DEFAULT_DROP_RATIO)

    @property
    def zero_drop_ratio(self):
        return self.analysis.get("zero_drop_ratio", DEFAULT_ZERO_DROP_RATIO)

    @property
    def bandpass(self):
        return self.analysis.get("bandpass", "auto")

    @property
    def bandpass_order(self):
        return self.analysis.get("bandpass_order", 2)


def _num(section, key, path, positive=False, integer=False, default=None):
    if key not in section:
        if default is not None:
            return default
        raise ConfigError(f"{path}.{key}", "missing")
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {v!r}")
    if not np.isfinite(v) or (positive and v <= 0):
        raise ConfigError(f"{path}.{key}", f"expected a positive finite number, got {v!r}")
    return int(v) if integer else float(v)


def _coeffs(section, key, path):
    v = section.get(key)
    if not isinstance(v, list) or not v or not all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in v
    ):
        raise ConfigError(f"{path}.{key}", "expected a nonempty list of numbers")
    return [float(c) for c in v]


def _check_plant(p):
    if not isinstance(p, dict):
        raise ConfigError("plant", "missing [plant] table")
    kind = p.get("kind")
    if kind not in PLANT_KINDS:
        raise ConfigError("plant.kind", f"expected one of {', '.join(PLANT_KINDS)}, got {kind!r}")
    if kind == "csv" and "path" not in p:
        raise ConfigError("plant.path", "csv plants need a path")
    if kind != "csv" and "path" in p:
        raise ConfigError("plant.path", "exactly one plant source: drop path or use kind = 'csv'")
    if kind == "rational":
        _coeffs(p, "num", "plant")
        _coeffs(p, "den", "plant")
    if kind == "delayed_rational":
        _coeffs(p, "num", "plant")
        terms = p.get("den")
        if not isinstance(terms, list) or not terms:
            raise ConfigError("plant.den", "expected [[plant.den]] tables with coeffs and delay")
        for i, t in enumerate(terms):
            if not isinstance(t, dict):
                raise ConfigError(f"plant.den[{i}]", "expected a table")
            _coeffs(t, "coeffs", f"plant.den[{i}]")
            _num(t, "delay", f"plant.den[{i}]", default=0.0)
    return p


def config_from_dict(raw, base_dir="."):
    """Validate a parsed config mapping; errors name the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a table")
    plant = _check_plant(raw.get("plant"))
    g = raw.get("grid", {})
    grid = {
        "w_min": _num(g, "w_min", "grid", positive=True, default=1e-3),
        "w_max": _num(g, "w_max", "grid", positive=True, default=1.0),
        "n": _num(g, "n", "grid", positive=True, integer=True, default=500),
        "spacing": g.get("spacing", "log"),
    }
    if grid["spacing"] not in ("log", "linear"):
        raise ConfigError("grid.spacing", "expected 'log' or 'linear'")
    if grid["w_min"] >= grid["w_max"]:
        raise ConfigError("grid.w_max", "must exceed grid.w_min")
    if grid["n"] < 2:
        raise ConfigError("grid.n", "need at least 2 points")

    a = dict(raw.get("analysis", {}))
    if "k_basis" in a:
        a["k_basis"] = _num(a, "k_basis", "analysis", positive=True, integer=True)
    if "alpha" in a and a["alpha"] != "auto":
        a["alpha"] = _num(a, "alpha", "analysis", positive=True)
    for key in ("drop_ratio", "zero_drop_ratio"):
        if key in a:
            a[key] = _num(a, key, "analysis", positive=True)
    bp = a.get("bandpass", "auto")
    if isinstance(bp, list):
        if len(bp) != 2:
            raise ConfigError("analysis.bandpass", "expected [w_lo, w_hi], 'auto' or 'off'")
        a["bandpass"] = [float(bp[0]), float(bp[1])]
    elif bp not in ("auto", "off"):
        raise ConfigError("analysis.bandpass", "expected [w_lo, w_hi], 'auto' or 'off'")
    if "bandpass_order" in a:
        a["bandpass_order"] = _num(a, "bandpass_order", "analysis", positive=True, integer=True)

    r = raw.get("reference", {"order": 1, "tau": 1.0})
    order = r.get("order", 1)
    if order == 1:
        ref = {"order": 1, "tau": _num(r, "tau", "reference", positive=True, default=1.0)}
    elif order == 2:
        ref = {
            "order": 2,
            "omega0": _num(r, "omega0", "reference", positive=True),
            "xi": _num(r, "xi", "reference", positive=True, default=1.0),
        }
    else:
        raise ConfigError("reference.order", f"expected 1 or 2, got {order!r}")

    c = raw.get("controller", {})
    orders = c.get("orders", [2])
    if not isinstance(orders, list) or not orders:
        raise ConfigError("controller.orders", "expected a nonempty list of positive integers")
    for i, o in enumerate(orders):
        if isinstance(o, bool) or not isinstance(o, int) or o < 1:
            raise ConfigError(f"controller.orders[{i}]", f"expected a positive integer, got {o!r}")
    tol = _num(c, "tol", "controller", positive=True, default=DEFAULT_TOL)

    ce = raw.get("certify", {})
    eps = _num(ce, "eps", "certify", positive=True, default=DEFAULT_EPS)
    cancel = _num(ce, "cancel_distance", "certify", positive=True, default=DEFAULT_CANCEL_DISTANCE)

    sim = raw.get("simulate")
    if sim is not None:
        sim = {
            "t_end": _num(sim, "t_end", "simulate", positive=True),
            "dt": _num(sim, "dt", "simulate", positive=True),
        }
    out = raw.get("output", {}).get("dir", "lddc_out")
    return PipelineConfig(
        plant=plant,
        grid=grid,
        analysis=a,
        reference=ref,
        orders=sorted(set(orders)),
        tol=tol,
        eps=eps,
        cancel_distance=cancel,
        simulate=sim,
        out_dir=Path(out),
        base_dir=Path(base_dir),
    )


def load_config(path):
    """Read a TOML pipeline config. Relative paths inside resolve against its folder."""
    path = Path(path)
    with path.open("rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"not valid TOML: {exc}") from None
    return config_from_dict(raw, base_dir=path.parent)


def build_plant(spec):
    """TransferModel for a validated ``[plant]`` table (None for CSV data)."""
    kind = spec["kind"]
    if kind == "crystallizer_surrogate":
        return crystallizer_surrogate(delay=spec.get("delay", 50.0))
    if kind == "rational":
        return RationalLTI(spec["num"], spec["den"])
    if kind == "delayed_rational":
        return DelayedRational(
            spec["num"], [(t["coeffs"], t.get("delay", 0.0)) for t in spec["den"]]
        )
    if kind == "open_channel":
        if all(k in spec for k in "abcde"):
            return OpenChannel(spec["B0"], spec["L"], spec["x"], *(spec[k] for k in "abcde"))
        keys = ("B0", "L", "x", "V", "C", "gamma", "delta")
        return saint_venant_channel(**{k: spec[k] for k in keys if k in spec})
    return None


def make_grid(grid):
    if grid["spacing"] == "linear":
        return make_linear_grid(grid["w_min"], grid["w_max"], grid["n"])
    return make_log_grid(grid["w_min"], grid["w_max"], grid["n"])


def plant_data(cfg):
    if cfg.plant["kind"] == "csv":
        return io.read_response_csv(cfg.base_dir / cfg.plant["path"])
    return sample_response(build_plant(cfg.plant), make_grid(cfg.grid))


def reference_init(ref):
    if ref["order"] == 1:
        return first_order_reference(ref["tau"])
    return second_order_reference(ref["omega0"], ref["xi"])


def run_analysis(data, cfg):
    """Integrator check, optional bandpass, and RHP pole/zero estimation."""
    info = {
        "integrator_detected": bool(has_integrator(data)),
        "low_frequency_slope": low_frequency_slope(data),
        "bandpass_applied": False,
        "bandpass_band": None,
    }
    target = data
    bp = cfg.bandpass
    if bp != "off" and (isinstance(bp, list) or info["integrator_detected"]):
        lo, hi = bp if isinstance(bp, list) else default_band(data.omegas)
        target = bandpass_prefilter(data, lo, hi, cfg.bandpass_order)
        info["bandpass_applied"] = True
        info["bandpass_band"] = [lo, hi]
    est = analyze(target, cfg.k_basis, cfg.alpha, cfg.drop_ratio, zeros=True,
                  zero_drop_ratio=cfg.zero_drop_ratio)
    return est, info


@dataclass
class PipelineResult:
    exit_code: int
    plant: FreqResponseData | None = None
    estimate: InstabilityEstimate | None = None
    reference: object = None
    kstar: FreqResponseData | None = None
    pencil: object = None
    certificate: object = None
    closed_loops: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    files: list = field(default_factory=list)


def analysis_report(est, info, errors, extra=None):
    rep = est.to_dict() if est is not None else {
        "n_p": None, "rhp_poles": [], "n_z": None, "rhp_zeros": [], "hankel_svals": []
    }
    rep.update(info)
    if est is not None:
        rep["zero_hankel_svals"] = [float(v) for v in est.zero_hankel_svals]
        rep["singular_gaps"] = [float(v) for v in est.singular_gaps()]
    if extra:
        rep.update(extra)
    rep["errors"] = dict(errors)
    return rep


def run_pipeline(cfg, out_dir=None):
    """Run every stage and write the artifacts; returns a :class:`PipelineResult`."""
    out = Path(out_dir) if out_dir is not None else cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    res = PipelineResult(exit_code=EXIT_OK)

    def emit(name, writer, *args):
        res.files.append(writer(out / name, *args))

    data = plant_data(cfg)
    res.plant = data
    emit("plant_response.csv", io.write_response_csv, data)
    log.info("sampled plant on %d frequencies", len(data))

    info = {"integrator_detected": None, "bandpass_applied": False}
    try:
        est, info = run_analysis(data, cfg)
        res.estimate = est
        emit("hankel_svals.csv", io.write_columns_csv, ("index", "sigma"),
             (np.arange(1, est.hankel_svals.size + 1), est.hankel_svals))
        log.info("RHP poles: %d, RHP zeros: %d", est.n_p, est.n_z)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            m = make_achievable(reference_init(cfg.reference), est)
        res.reference = m
        kstar = ideal_controller(data, m)
        res.kstar = kstar
        emit("kstar_response.csv", io.write_response_csv, kstar)
    except LDDCError as exc:
        res.errors["analysis"] = f"{type(exc).__name__}: {exc}"
        res.exit_code = EXIT_ANALYSIS
        emit("analysis.json", io.write_json, analysis_report(res.estimate, info, res.errors))
        return res

    try:
        pencil = build_pencil(partition_points(kstar))
        res.pencil = pencil
        rank = minimal_order(pencil, cfg.tol)
        k = pencil.svals_L.size
        emit("loewner_svals.csv", io.write_columns_csv,
             ("index", "sigma_L", "sigma_stacked", "sigma_concat"),
             (np.arange(1, k + 1), pencil.svals_L, pencil.svals_stacked[:k], pencil.svals_concat[:k]))
        cert = certify_orders(pencil, kstar, data, m, cfg.orders, cfg.tol)
        res.certificate = cert
    except LDDCError as exc:
        res.errors["realization"] = f"{type(exc).__name__}: {exc}"
        res.exit_code = EXIT_REALIZATION
        emit("analysis.json", io.write_json, analysis_report(res.estimate, info, res.errors))
        return res

    for r, ctrl in sorted(cert.controllers.items()):
        emit(f"controller_{r}.json", io.write_json, ctrl.to_dict())
        (out / f"controller_{r}.zpk.txt").write_text(ctrl.zpk_text(), encoding="utf-8")
        res.files.append(out / f"controller_{r}.zpk.txt")
        try:
            h = reconstruct_closed_loop(data, ctrl)
        except LDDCError as exc:
            res.errors[f"closed_loop_{r}"] = f"{type(exc).__name__}: {exc}"
            continue
        res.closed_loops[r] = h
        emit(f"closed_loop_{r}.csv", io.write_response_csv, h)
        try:
            res.verdicts[r] = projection_stability_test(h, est, ctrl, cfg.eps, cfg.cancel_distance,
                                                        k_basis=min(cfg.k_basis, (len(h) - 1) // 2))
        except LDDCError as exc:
            res.errors[f"projection_test_{r}"] = f"{type(exc).__name__}: {exc}"
        if cfg.simulate and cfg.plant["kind"] == "rational":
            try:
                t, y = step_response(build_plant(cfg.plant), ctrl, cfg.simulate["t_end"], cfg.simulate["dt"])
                emit(f"step_{r}.csv", io.write_step_csv, t, y)
            except LDDCError as exc:
                res.errors[f"simulate_{r}"] = f"{type(exc).__name__}: {exc}"

    for r, msg in cert.errors.items():
        res.errors[f"order_{r}"] = msg
    cdict = cert.to_dict()
    for entry in cdict["orders"]:
        v = res.verdicts.get(entry["order"])
        if v is not None:
            entry["projection_test"] = {
                "verdict": v.verdict,
                "antistable_fraction": v.antistable_fraction,
            }
    emit("certificate.json", io.write_json, cdict)
    alpha = cfg.alpha if cfg.alpha != "auto" else float(np.sqrt(data.omegas[0] * data.omegas[-1]))
    extra = {"minimal_order": rank, "basis_pole": alpha}
    emit("analysis.json", io.write_json, analysis_report(est, info, res.errors, extra))
    if cert.errors:
        res.exit_code = EXIT_REALIZATION
    return res


class LDDC(BaseEstimator):
    """Data-driven controller design as an estimator.

    ``fit(X, y)`` takes plant frequency samples (``X`` angular frequencies,
    ``y`` complex responses) and builds the reduced controller of order
    ``order``; ``predict(X)`` evaluates that controller at ``j*X``.
    """

    def __init__(self, order=2, reference="first_order", tau=1.0, omega0=None, xi=1.0,
                 k_basis=DEFAULT_K_BASIS, alpha="auto", drop_ratio=DEFAULT_DROP_RATIO,
                 bandpass="auto", tol=DEFAULT_TOL):
        self.order = order
        self.reference = reference
        self.tau = tau
        self.omega0 = omega0
        self.xi = xi
        self.k_basis = k_basis
        self.alpha = alpha
        self.drop_ratio = drop_ratio
        self.bandpass = bandpass
        self.tol = tol

    def _config(self):
        if self.reference == "first_order":
            ref = {"order": 1, "tau": self.tau}
        elif self.reference == "second_order":
            if self.omega0 is None:
                raise ValueError("second_order reference needs omega0")
            ref = {"order": 2, "omega0": self.omega0, "xi": self.xi}
        else:
            raise ValueError("reference must be 'first_order' or 'second_order'")
        return PipelineConfig(
            plant={"kind": "csv"},
            analysis={"k_basis": self.k_basis, "alpha": self.alpha,
                      "drop_ratio": self.drop_ratio, "bandpass": self.bandpass},
            reference=ref,
            orders=[self.order],
            tol=self.tol,
        )

    def fit(self, X, y):
        w, g = check_frequency_data(X, y)
        cfg = self._config()
        data = FreqResponseData(w, g)
        est, info = run_analysis(data, cfg)
        m = make_achievable(reference_init(cfg.reference), est)
        kstar = ideal_controller(data, m)
        pencil = build_pencil(partition_points(kstar))
        cert = certify_orders(pencil, kstar, data, m, [self.order], self.tol)
        if self.order not in cert.controllers:
            raise LDDCError(cert.errors.get(self.order, "realization failed"))
        self.estimate_ = est
        self.analysis_info_ = info
        self.reference_model_ = m
        self.kstar_ = kstar
        self.pencil_ = pencil
        self.certificate_ = cert
        self.controller_ = cert.controllers[self.order]
        self.minimal_order_ = minimal_order(pencil, self.tol)
        return self

    def predict(self, X):
        check_is_fitted(self, "controller_")
        w = check_frequency_data(X)
        return self.controller_(1j * w)

    def closed_loop(self, X, y):
        """Reconstructed closed loop of the fitted controller with new plant samples."""
        check_is_fitted(self, "controller_")
        w, g = check_frequency_data(X, y)
        return reconstruct_closed_loop(FreqResponseData(w, g), self.controller_).samples
