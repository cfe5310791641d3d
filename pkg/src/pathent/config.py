"""Experiment configuration and measurement-file ingestion.

The configuration is a single JSON document.  Physics parameters have no
defaults and must be spelled out (field names carry units); only
numerical settings (truncations, Monte Carlo seed) may be omitted.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import fockcore as fc
from .herald import PhaseConfig, SourceParams
from .measurement import DetectorModel, DisplacementSetting, JointClickProbabilities
from .stats import CountRecord, ProbEstimate, binomial_sigma


class ConfigError(ValueError):
    """Configuration or input file failed to parse or validate."""


@dataclass(frozen=True)
class Numerics:
    truncation_n_max: int = 10
    herald_truncation_n_max: int = 3

    def __post_init__(self):
        if self.truncation_n_max < 2 or self.herald_truncation_n_max < 3:
            raise ConfigError("truncation_n_max must be >= 2 and herald_truncation_n_max >= 3")


@dataclass(frozen=True)
class MonteCarloSettings:
    """Sampling controls; explicit totals override the duration-derived N."""

    enabled: bool = False
    seed: int = 0
    n_alpha: int | None = None
    n_z: int | None = None
    n_multiphoton: int | None = None

    def __post_init__(self):
        for name in ("n_alpha", "n_z", "n_multiphoton"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ConfigError(f"{name} must be positive when given")


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceParams
    phases: PhaseConfig
    setting_1: DisplacementSetting
    setting_2: DisplacementSetting
    detector_1: DetectorModel
    detector_2: DetectorModel
    pump_rep_rate_hz: float
    duty_fraction: float
    duration_alpha_s: float
    duration_z_s: float
    duration_multiphoton_s: float
    monte_carlo: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    numerics: Numerics = field(default_factory=Numerics)
    report_path: str | None = None

    @property
    def truncation(self) -> fc.FockTruncation:
        return fc.FockTruncation(self.numerics.truncation_n_max)

    @property
    def herald_truncation(self) -> fc.FockTruncation:
        return fc.FockTruncation(self.numerics.herald_truncation_n_max)

    def echo(self) -> dict:
        """Canonical dictionary form of the parsed configuration."""
        return {
            "source": {
                "pair_probability": self.source.pair_probability,
                "pair_probability_b": self.source.pair_probability_b,
                "signal_transmission_a": self.source.signal_transmission_a,
                "signal_transmission_b": self.source.signal_transmission_b,
                "idler_transmission_a": self.source.idler_transmission_a,
                "idler_transmission_b": self.source.idler_transmission_b,
                "false_herald_probability": self.source.false_herald_probability,
            },
            "phases_rad": {name: getattr(self.phases, name) for name in self.phases.__dataclass_fields__},
            "displacement": {
                "alpha1_mean": self.setting_1.alpha_mean,
                "alpha1_min": self.setting_1.alpha_min,
                "alpha1_max": self.setting_1.alpha_max,
                "alpha2_mean": self.setting_2.alpha_mean,
                "alpha2_min": self.setting_2.alpha_min,
                "alpha2_max": self.setting_2.alpha_max,
            },
            "detectors": {
                "efficiency_a": self.detector_1.efficiency,
                "efficiency_b": self.detector_2.efficiency,
            },
            "pump_rep_rate_hz": self.pump_rep_rate_hz,
            "duty_fraction": self.duty_fraction,
            "durations_s": {
                "alpha_basis": self.duration_alpha_s,
                "z_basis": self.duration_z_s,
                "multiphoton": self.duration_multiphoton_s,
            },
            "monte_carlo": {
                "enabled": self.monte_carlo.enabled,
                "seed": self.monte_carlo.seed,
                "n_alpha": self.monte_carlo.n_alpha,
                "n_z": self.monte_carlo.n_z,
                "n_multiphoton": self.monte_carlo.n_multiphoton,
            },
            "numerics": {
                "truncation_n_max": self.numerics.truncation_n_max,
                "herald_truncation_n_max": self.numerics.herald_truncation_n_max,
            },
            "output": {"report_path": self.report_path},
        }


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"missing required field {key!r} in {context}")
    return mapping[key]


def load_experiment_config(
    path, truncation_override: int | None = None, seed_override: int | None = None
) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_experiment_config(raw, truncation_override, seed_override)


def parse_experiment_config(
    raw: dict, truncation_override: int | None = None, seed_override: int | None = None
) -> ExperimentConfig:
    try:
        src_raw = _require(raw, "source", "config")
        source = SourceParams(
            pair_probability=float(_require(src_raw, "pair_probability", "source")),
            signal_transmission_a=float(_require(src_raw, "signal_transmission_a", "source")),
            signal_transmission_b=float(_require(src_raw, "signal_transmission_b", "source")),
            idler_transmission_a=float(_require(src_raw, "idler_transmission_a", "source")),
            idler_transmission_b=float(_require(src_raw, "idler_transmission_b", "source")),
            false_herald_probability=float(_require(src_raw, "false_herald_probability", "source")),
            pair_probability_b=(
                float(src_raw["pair_probability_b"]) if src_raw.get("pair_probability_b") is not None else None
            ),
        )
        ph_raw = _require(raw, "phases_rad", "config")
        phases = PhaseConfig(
            **{name: float(_require(ph_raw, name, "phases_rad")) for name in PhaseConfig.__dataclass_fields__}
        )
        disp = _require(raw, "displacement", "config")
        setting_1 = DisplacementSetting(
            alpha_mean=float(_require(disp, "alpha1_mean", "displacement")),
            alpha_min=float(_require(disp, "alpha1_min", "displacement")),
            alpha_max=float(_require(disp, "alpha1_max", "displacement")),
        )
        setting_2 = DisplacementSetting(
            alpha_mean=float(_require(disp, "alpha2_mean", "displacement")),
            alpha_min=float(_require(disp, "alpha2_min", "displacement")),
            alpha_max=float(_require(disp, "alpha2_max", "displacement")),
        )
        det = _require(raw, "detectors", "config")
        detector_1 = DetectorModel(float(_require(det, "efficiency_a", "detectors")))
        detector_2 = DetectorModel(float(_require(det, "efficiency_b", "detectors")))
        durations = _require(raw, "durations_s", "config")
        mc_raw = raw.get("monte_carlo", {})
        monte_carlo = MonteCarloSettings(
            enabled=bool(mc_raw.get("enabled", False)),
            seed=int(mc_raw.get("seed", 0)) if seed_override is None else int(seed_override),
            n_alpha=int(mc_raw["n_alpha"]) if mc_raw.get("n_alpha") is not None else None,
            n_z=int(mc_raw["n_z"]) if mc_raw.get("n_z") is not None else None,
            n_multiphoton=(
                int(mc_raw["n_multiphoton"]) if mc_raw.get("n_multiphoton") is not None else None
            ),
        )
        num_raw = raw.get("numerics", {})
        numerics = Numerics(
            truncation_n_max=(
                int(num_raw.get("truncation_n_max", 10)) if truncation_override is None else int(truncation_override)
            ),
            herald_truncation_n_max=int(num_raw.get("herald_truncation_n_max", 3)),
        )
        config = ExperimentConfig(
            source=source,
            phases=phases,
            setting_1=setting_1,
            setting_2=setting_2,
            detector_1=detector_1,
            detector_2=detector_2,
            pump_rep_rate_hz=float(_require(raw, "pump_rep_rate_hz", "config")),
            duty_fraction=float(_require(raw, "duty_fraction", "config")),
            duration_alpha_s=float(_require(durations, "alpha_basis", "durations_s")),
            duration_z_s=float(_require(durations, "z_basis", "durations_s")),
            duration_multiphoton_s=float(_require(durations, "multiphoton", "durations_s")),
            monte_carlo=monte_carlo,
            numerics=numerics,
            report_path=raw.get("output", {}).get("report_path"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    if config.pump_rep_rate_hz <= 0 or not 0.0 < config.duty_fraction <= 1.0:
        raise ConfigError("pump_rep_rate_hz must be positive and duty_fraction in (0, 1]")
    if min(config.duration_alpha_s, config.duration_z_s, config.duration_multiphoton_s) <= 0:
        raise ConfigError("all durations must be positive")
    # squeezed-source parameterization breaks down at pair probability 1/2
    pair_b = config.source.effective_pair_probability_b
    if config.source.pair_probability >= 0.5 or pair_b >= 0.5:
        raise ConfigError("pair probabilities must be below 0.5")
    return config


@dataclass(frozen=True)
class BasisMeasurement:
    """One measured basis: the four probability estimates plus the raw record."""

    estimates: tuple[ProbEstimate, ProbEstimate, ProbEstimate, ProbEstimate]
    counts: CountRecord

    @property
    def probabilities(self) -> JointClickProbabilities:
        e = self.estimates
        return JointClickProbabilities(e[0].value, e[1].value, e[2].value, e[3].value)


@dataclass(frozen=True)
class CountsFile:
    alpha: BasisMeasurement
    z: BasisMeasurement
    pstar1: ProbEstimate | None
    pstar2: ProbEstimate | None


def load_counts_file(path) -> CountsFile:
    """Parse the measurement CSV: header basis,n_total,n_a,n_b,n_d[,n_none].

    Rows with basis "alpha" and "z" carry the joint click tallies; the
    optional n_none column pins the joint no-click count directly (needed
    when published probabilities are rounded per entry and no longer sum
    to one).  Rows "pstar1"/"pstar2" carry multiphoton coincidence runs
    in the n_d column.
    """
    rows: dict[str, tuple[CountRecord, int | None]] = {}
    try:
        with open(path, newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:5]] != [
                "basis",
                "n_total",
                "n_a",
                "n_b",
                "n_d",
            ]:
                raise ConfigError(
                    f"counts file {path} must start with header basis,n_total,n_a,n_b,n_d"
                )
            for row in reader:
                basis = row["basis"].strip()
                if basis in rows:
                    raise ConfigError(f"duplicate basis {basis!r} in counts file")
                record = CountRecord(
                    n_total=int(row["n_total"]),
                    n_a=int(row["n_a"]),
                    n_b=int(row["n_b"]),
                    n_d=int(row["n_d"]),
                )
                n_none = row.get("n_none")
                n_none = int(n_none) if n_none not in (None, "") else None
                rows[basis] = (record, n_none)
    except OSError as exc:
        raise ConfigError(f"cannot read counts file {path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed counts file {path}: {exc}") from exc

    for basis in ("alpha", "z"):
        if basis not in rows:
            raise ConfigError(f"counts file {path} is missing the {basis!r} basis row")

    measurements = {}
    for basis in ("alpha", "z"):
        record, n_none = rows[basis]
        n = record.n_total
        p_c_nc = record.n_a / n
        p_nc_c = record.n_b / n
        p_c_c = record.n_d / n
        if n_none is not None:
            p_nc_nc = n_none / n
        else:
            p_nc_nc = 1.0 - (record.n_a + record.n_b + record.n_d) / n
        estimates = tuple(
            ProbEstimate(p, binomial_sigma(p, n)) for p in (p_nc_nc, p_nc_c, p_c_nc, p_c_c)
        )
        measurements[basis] = BasisMeasurement(estimates, record)

    def pstar(basis: str) -> ProbEstimate | None:
        if basis not in rows:
            return None
        record, _ = rows[basis]
        value = record.n_d / record.n_total
        return ProbEstimate(value, binomial_sigma(value, record.n_total))

    return CountsFile(
        alpha=measurements["alpha"],
        z=measurements["z"],
        pstar1=pstar("pstar1"),
        pstar2=pstar("pstar2"),
    )


@dataclass(frozen=True)
class AnalysisSettings:
    setting_1: DisplacementSetting
    setting_2: DisplacementSetting
    p1_star: float | None
    p2_star: float | None


def load_settings_file(path) -> AnalysisSettings:
    """Parse the analysis sidecar (single-row CSV or JSON object).

    Fields: alpha1_min, alpha1_mean, alpha1_max, alpha2_min, alpha2_mean,
    alpha2_max, and optionally p1_star / p2_star as fallbacks when the
    counts file has no multiphoton rows.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read settings file {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            record = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"settings file {path} is not valid JSON: {exc}") from exc
    else:
        reader = csv.DictReader(text.splitlines())
        try:
            record = next(iter(reader))
        except StopIteration:
            raise ConfigError(f"settings file {path} has no data row") from None
    try:
        setting_1 = DisplacementSetting(
            alpha_mean=float(_require(record, "alpha1_mean", "settings")),
            alpha_min=float(_require(record, "alpha1_min", "settings")),
            alpha_max=float(_require(record, "alpha1_max", "settings")),
        )
        setting_2 = DisplacementSetting(
            alpha_mean=float(_require(record, "alpha2_mean", "settings")),
            alpha_min=float(_require(record, "alpha2_min", "settings")),
            alpha_max=float(_require(record, "alpha2_max", "settings")),
        )
        p1 = record.get("p1_star")
        p2 = record.get("p2_star")
        p1 = float(p1) if p1 not in (None, "") else None
        p2 = float(p2) if p2 not in (None, "") else None
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid settings file {path}: {exc}") from exc
    return AnalysisSettings(setting_1, setting_2, p1, p2)
