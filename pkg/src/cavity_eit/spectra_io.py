"""File-format contracts: spectra CSV, metrics/fit JSON, SVG plots, configs.

CSV contract: UTF-8, LF line endings, header `delta_hz,transmission` for a
single spectrum or `delta_hz,t_empty,t_2level,t_eit` for the simultaneous
triple; `#`-prefixed lines carry JSON metadata.  Floats are written with 17
significant digits so write -> read round-trips are lossless.

Config contract: flat `key = value` pairs in INI-style sections (see
README for the grammar); unknown keys are rejected by name.
"""

from __future__ import annotations

import configparser
import json
import os
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .disorder import parse_distribution
from .errors import ConfigError, SpectrumFormatError
from .params import hz_from_rad, rad_from_hz
from .transmission import CONFIGURATIONS, Spectrum, normalize_configuration

TRIPLE_COLUMNS = ("t_empty", "t_2level", "t_eit")
TRIPLE_KEYS = ("empty", "two-level", "eit")

# deterministic SVG ids; figure metadata carries the numeric data
matplotlib.rcParams["svg.hashsalt"] = "cavity-eit"


def _format_float(x: float) -> str:
    return f"{x:.17g}"


def _meta_comment(meta: dict) -> str:
    return "# " + json.dumps(meta, sort_keys=True, separators=(",", ":"))


def write_spectrum_csv(spectrum: Spectrum, path):
    """Single-spectrum CSV with metadata in `#` header comments."""
    lines = [_meta_comment(spectrum.meta), "delta_hz,transmission"]
    for d_hz, t in zip(spectrum.delta_hz, spectrum.transmission):
        lines.append(f"{_format_float(d_hz)},{_format_float(t)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_triple_csv(spectra: dict, path, extra_meta: dict | None = None):
    """Triple CSV (empty / two-level / eit) sharing one detuning grid."""
    ordered = {}
    for key in TRIPLE_KEYS:
        if key not in spectra:
            raise SpectrumFormatError("triple output needs all three configurations",
                                      missing=key)
        ordered[key] = spectra[key]
    grids = [s.delta for s in ordered.values()]
    if not all(np.array_equal(grids[0], g) for g in grids[1:]):
        raise SpectrumFormatError("triple spectra must share one detuning grid")
    meta = {"curves": {k: s.meta for k, s in ordered.items()}}
    if extra_meta:
        meta.update(extra_meta)
    lines = [_meta_comment(meta), "delta_hz," + ",".join(TRIPLE_COLUMNS)]
    columns = [ordered[k].transmission for k in TRIPLE_KEYS]
    for i, d_hz in enumerate(hz_from_rad(grids[0])):
        row = [_format_float(d_hz)] + [_format_float(col[i]) for col in columns]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _parse_csv_body(path):
    meta = {}
    header = None
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                payload = line[1:].strip()
                if payload:
                    try:
                        parsed = json.loads(payload)
                        if isinstance(parsed, dict):
                            meta.update(parsed)
                    except json.JSONDecodeError:
                        pass  # free-text comments are allowed
                continue
            if header is None:
                header = [h.strip() for h in line.split(",")]
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise SpectrumFormatError("wrong number of columns", row=line_no,
                                          expected=len(header), got=len(cells))
            try:
                rows.append(([float(c) for c in cells], line_no))
            except ValueError:
                raise SpectrumFormatError("non-numeric cell", row=line_no) from None
    if header is None:
        raise SpectrumFormatError("file contains no header row")
    return meta, header, rows


def _validate_columns(rows, n_columns):
    deltas = []
    previous = None
    for cells, line_no in rows:
        delta = cells[0]
        if previous is not None and not delta > previous:
            raise SpectrumFormatError("detunings must be strictly increasing",
                                      row=line_no, delta_hz=delta)
        previous = delta
        for value in cells[1:]:
            if not np.isfinite(value):
                raise SpectrumFormatError("transmission must be finite", row=line_no)
            if value < 0:
                raise SpectrumFormatError("transmission must be non-negative",
                                          row=line_no, value=value)
        deltas.append(delta)
    if not deltas:
        raise SpectrumFormatError("file contains no data rows")
    return np.asarray(deltas)


def read_spectrum_csv(path) -> Spectrum:
    """Read a single-spectrum CSV; errors carry the offending row number."""
    meta, header, rows = _parse_csv_body(path)
    if header != ["delta_hz", "transmission"]:
        raise SpectrumFormatError("expected header delta_hz,transmission",
                                  header=header)
    deltas_hz = _validate_columns(rows, 2)
    transmission = np.array([cells[1] for cells, _ in rows])
    if not meta:
        meta = {"model": "unknown", "source": str(path)}
    return Spectrum(delta=rad_from_hz(deltas_hz), transmission=transmission, meta=meta)


def read_triple_csv(path) -> dict:
    """Read a triple CSV into {empty, two-level, eit} spectra."""
    meta, header, rows = _parse_csv_body(path)
    expected = ["delta_hz", *TRIPLE_COLUMNS]
    if header != expected:
        raise SpectrumFormatError(f"expected header {','.join(expected)}",
                                  header=header)
    deltas_hz = _validate_columns(rows, 4)
    deltas = rad_from_hz(deltas_hz)
    curves_meta = meta.get("curves", {})
    out = {}
    for i, key in enumerate(TRIPLE_KEYS):
        column = np.array([cells[1 + i] for cells, _ in rows])
        curve_meta = curves_meta.get(key) or {"model": "unknown", "source": str(path),
                                              "configuration": key}
        out[key] = Spectrum(delta=deltas, transmission=column, meta=curve_meta)
    return out


def write_json_report(payload: dict, path):
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8", newline="\n")


_CURVE_STYLE = {
    "empty": dict(color="black", label="empty cavity"),
    "two-level": dict(color="tab:red", label="two-level"),
    "eit": dict(color="tab:blue", label="cavity EIT"),
}


def plot_spectra_svg(spectra: dict, path, title: str = ""):
    """One-panel transmission plot; numeric data embedded as SVG metadata."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    payload = {}
    for key, spectrum in spectra.items():
        style = _CURVE_STYLE.get(key, {})
        ax.plot(spectrum.delta_hz / 1e6, spectrum.transmission,
                **({"label": key} | style))
        payload[key] = {
            "delta_hz": [float(x) for x in spectrum.delta_hz],
            "transmission": [float(x) for x in spectrum.transmission],
        }
    ax.set_xlabel("probe-cavity detuning (MHz)")
    ax.set_ylabel("normalized transmission")
    ax.set_ylim(bottom=0)
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    _save_svg(fig, path, payload)


def plot_metrics_svg(table: dict, path, title: str = ""):
    """Two panels: transparency/contrast bars and linewidth vs atom number."""
    ns = table["n_atoms"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    width = 0.38
    xs = np.asarray(ns, dtype=float)
    ax1.bar(xs - width / 2, table["transparency"], width, color="tab:blue",
            label="transparency")
    ax1.bar(xs + width / 2, table["contrast"], width, color="tab:red",
            label="contrast")
    ax1.set_xlabel("atom number")
    ax1.set_ylabel("fraction")
    ax1.set_ylim(0, 1)
    ax1.legend(fontsize=8)
    fwhm_mhz = [w / 1e6 if w else np.nan for w in table["fwhm_hz"]]
    ax2.plot(xs, fwhm_mhz, "o-", color="tab:blue")
    finite = [(n, w) for n, w in zip(xs, fwhm_mhz) if np.isfinite(w) and n >= 3]
    if finite:
        # 1/N guide anchored on the N>=3 points
        anchor = np.mean([w * n for n, w in finite])
        guide_n = np.linspace(max(min(xs), 1), max(xs), 100)
        ax2.plot(guide_n, anchor / guide_n, "--", color="tab:red", label="1/N guide")
        ax2.legend(fontsize=8)
    ax2.set_xlabel("atom number")
    ax2.set_ylabel("linewidth (MHz)")
    ax2.set_ylim(bottom=0)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    _save_svg(fig, path, table)


def plot_panels_svg(panels: dict, path, title: str = ""):
    """Grid of triple-spectrum panels (one per atom number)."""
    n = len(panels)
    n_cols = 2
    n_rows = (n + n_cols - 1) // n_cols
    fig, axes = plt.subplots(n_rows, n_cols, figsize=(9.0, 3.3 * n_rows),
                             squeeze=False)
    payload = {}
    for ax, (name, spectra) in zip(axes.ravel(), panels.items()):
        panel_payload = {}
        for key, spectrum in spectra.items():
            style = _CURVE_STYLE.get(key, {})
            ax.plot(spectrum.delta_hz / 1e6, spectrum.transmission,
                    **({"label": key} | style))
            panel_payload[key] = {
                "delta_hz": [float(x) for x in spectrum.delta_hz],
                "transmission": [float(x) for x in spectrum.transmission],
            }
        payload[name] = panel_payload
        ax.set_title(name, fontsize=9)
        ax.set_xlabel("detuning (MHz)")
        ax.set_ylabel("transmission")
        ax.set_ylim(bottom=0)
    for ax in axes.ravel()[n:]:
        ax.set_visible(False)
    axes.ravel()[0].legend(fontsize=7)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    _save_svg(fig, path, payload)


def _save_svg(fig, path, payload):
    description = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    fig.savefig(path, format="svg",
                metadata={"Description": description, "Date": None})
    plt.close(fig)


# ---------------------------------------------------------------------------
# run configuration files
# ---------------------------------------------------------------------------

CONFIG_SCHEMA = {
    "run": {"preset", "engine", "configurations", "seed", "out_dir", "n_samples"},
    "cavity": {"g0_hz", "kappa_hz", "gamma_hz", "delta_ac_hz", "stark_shift_mean_hz"},
    "ensemble": {"n_atoms", "coupling_fraction", "gamma_gs_hz", "branching_to_f1"},
    "drive": {"omega_c_kappa_units", "control_power_w", "probe_photon_target",
              "probe_duration_s", "two_photon_detuning_offset_hz"},
    "grid": {"start_hz", "stop_hz", "n_points"},
    "disorder": {"coupling_dist", "stark_jitter", "n_samples", "seed"},
    "fit": {"data", "free", "budget", "seed", "initial"},
}

ENGINES = ("eq1", "eq1-averaged", "master-equation")


def parse_config_file(path) -> dict:
    """Parse and validate a run config; unknown keys are named and rejected."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                       interpolation=None)
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except FileNotFoundError:
        raise ConfigError("config file not found", path=str(path)) from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}", path=str(path)) from None
    config = {}
    for section in parser.sections():
        if section not in CONFIG_SCHEMA:
            raise ConfigError("unknown config section", section=section,
                              allowed=sorted(CONFIG_SCHEMA))
        allowed = CONFIG_SCHEMA[section]
        values = {}
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError("unknown config key",
                                  key=f"{section}.{key}", allowed=sorted(allowed))
            values[key] = raw.strip()
        config[section] = values
    _validate_config_values(config)
    return config


def _number(section, key, raw, cast=float):
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError("value must be numeric", key=f"{section}.{key}",
                          value=raw) from None


def _validate_config_values(config):
    run = config.get("run", {})
    engine = run.get("engine", "eq1")
    if engine not in ENGINES:
        raise ConfigError("unknown engine", key="run.engine", value=engine,
                          allowed=ENGINES)
    if "configurations" in run:
        for token in run["configurations"].split(","):
            normalize_configuration(token)
    for key in ("seed",):
        if key in run:
            _number("run", key, run[key], int)
    if "n_samples" in run:
        _number("run", "n_samples", run["n_samples"], int)
    for section in ("cavity", "grid", "drive", "ensemble"):
        for key, raw in config.get(section, {}).items():
            if key in ("n_atoms", "n_points"):
                _number(section, key, raw, int)
            elif key not in ("coupling_dist",):
                _number(section, key, raw)
    disorder = config.get("disorder", {})
    for key in ("n_samples", "seed"):
        if key in disorder:
            _number("disorder", key, disorder[key], int)
    for key in ("coupling_dist", "stark_jitter"):
        if key in disorder:
            try:
                parse_distribution(disorder[key])
            except Exception as exc:
                raise ConfigError(f"bad distribution: {exc}",
                                  key=f"disorder.{key}") from None


def default_out_dir(cli_value=None):
    """Output directory: flag wins, then CEIT_OUT_DIR, then cwd."""
    if cli_value:
        return Path(cli_value)
    return Path(os.environ.get("CEIT_OUT_DIR", "."))
