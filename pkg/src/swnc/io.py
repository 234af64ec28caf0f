"""Trace files, INI run configs, reports and manifests.

Every writer goes through ``atomic_write`` so a failed command never leaves a
half-written file behind.
"""
import configparser
import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channel import DEFAULT_SLOT_US, ChannelError, ChannelProfile, GEParams
from .engine import METRICS, SENDERS, SimConfig

TRACE_HEADER = ("slot", "rtt_us", "lost")
SUMMARY_HEADER = ("mode", "algorithm", "metric", "mean", "stdev", "p99")


class ConfigError(ValueError):
    pass


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def fmt(x):
    return f"{float(x):.6f}"


# ------------------------------------------------------------------ traces

def trace_text(profile):
    buf = io.StringIO()
    label = profile.label.replace("\n", " ")
    buf.write(f"# slot_us={profile.slot_us} label={label}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    lost = profile.lost.astype(np.int8)
    for i in range(len(profile)):
        w.writerow((i, int(profile.rtt_us[i]), int(lost[i])))
    return buf.getvalue()


def write_trace(profile, path):
    return atomic_write(path, trace_text(profile))


def _parse_sidecar(line):
    # "# slot_us=450 label=MCS 5" -> label keeps everything after "label="
    body = line.lstrip("#").strip()
    meta = {}
    if "label=" in body:
        body, label = body.split("label=", 1)
        meta["label"] = label.strip()
    for tok in body.split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            meta[k] = v
    return meta


def read_trace(path):
    path = Path(path)
    if not path.is_file():
        raise ChannelError(f"trace file not found: {path}")
    meta = {}
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh]
    body = []
    for ln in lines:
        if ln.startswith("#"):
            meta.update(_parse_sidecar(ln))
        elif ln.strip():
            body.append(ln)
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
        raise ChannelError(f"{path}: expected header {','.join(TRACE_HEADER)}, got {header}")
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 3:
            raise ChannelError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        try:
            slot, rtt, lost = (int(v) for v in row)
        except ValueError:
            raise ChannelError(f"{path}:{lineno}: non-integer field in {row}") from None
        if slot != len(rows):
            raise ChannelError(f"{path}:{lineno}: slot {slot} out of sequence")
        if lost not in (0, 1):
            raise ChannelError(f"{path}:{lineno}: lost must be 0 or 1")
        rows.append((rtt, lost))
    if not rows:
        raise ChannelError(f"{path}: trace has no slots")
    try:
        slot_us = int(meta.get("slot_us", DEFAULT_SLOT_US))
    except ValueError:
        raise ChannelError(f"{path}: bad slot_us {meta['slot_us']!r}") from None
    arr = np.array(rows, dtype=np.int64)
    return ChannelProfile(arr[:, 0], arr[:, 1].astype(bool), slot_us, meta.get("label", ""))


# ------------------------------------------------------------------ configs

# section -> {key: (SimConfig field, converter)}
_SCHEME_KEYS = {
    "arq": {"mode": ("arq_mode", str)},
    "rrlnc": {"n": ("rrlnc_n", int), "m": ("rrlnc_m", int)},
    "fswrlnc": {"k": ("fsw_k", int)},
    "aswrlnc": {"th": ("asw_th", float), "alpha": ("asw_alpha", float),
                "max_window": ("asw_max_window", int), "m": ("asw_m", int)},
}
_RUN_KEYS = {
    "n_packets": int, "packet_bytes": int, "experiences": int, "seed": int,
    "max_slots": int, "label": str,
}
_CHANNEL_KEYS = {
    "rtt_slots": int, "slot_us": int, "timeout_slots": int, "forward_slots": int,
    "feedback_loss": float,
}


@dataclass
class RunPlan:
    configs: list
    workers: int
    trace_path: Path = None
    echo: dict = None


def _get(section, key, conv, where):
    raw = section.get(key)
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{where}] {key} = {raw!r} is not a valid {conv.__name__}") from None


def load_config(path):
    """Parse an INI run config into one ``SimConfig`` per scheme."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for sec in ("run", "channel"):
        if not cp.has_section(sec):
            raise ConfigError(f"{path}: missing [{sec}] section")
    known = {"run", "channel", *_SCHEME_KEYS}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"{path}: unknown sections {sorted(extra)}")

    run, chan = cp["run"], cp["channel"]
    schemes = [s.strip() for s in run.get("schemes", "").split(",") if s.strip()]
    if not schemes:
        raise ConfigError("[run] schemes must list at least one scheme")
    bad = [s for s in schemes if s not in SENDERS]
    if bad:
        raise ConfigError(f"[run] unknown schemes {bad}; choose from {sorted(SENDERS)}")

    kw = {}
    for key in run:
        if key in ("schemes", "workers"):
            continue
        if key not in _RUN_KEYS:
            raise ConfigError(f"[run] unknown key {key!r}")
        kw[key] = _get(run, key, _RUN_KEYS[key], "run")
    workers = _get(run, "workers", int, "run") if "workers" in run else 1

    trace_path = None
    ge_keys = {"s", "q", "eps_g", "eps_b"}
    for key in chan:
        if key in _CHANNEL_KEYS:
            kw[key] = _get(chan, key, _CHANNEL_KEYS[key], "channel")
        elif key not in ge_keys | {"trace"}:
            raise ConfigError(f"[channel] unknown key {key!r}")
    if "trace" in chan:
        if ge_keys & set(chan):
            raise ConfigError("[channel] give either a trace or GE parameters, not both")
        trace_path = (path.parent / chan["trace"]).resolve()
        kw["trace"] = read_trace(trace_path)
    elif {"s", "q"} <= set(chan):
        try:
            kw["ge"] = GEParams(
                s=_get(chan, "s", float, "channel"), q=_get(chan, "q", float, "channel"),
                eps_G=_get(chan, "eps_g", float, "channel") if "eps_g" in chan else 0.0,
                eps_B=_get(chan, "eps_b", float, "channel") if "eps_b" in chan else 1.0)
        except ChannelError as exc:
            raise ConfigError(f"[channel] {exc}") from None
    else:
        raise ConfigError("[channel] needs trace = <path> or both s and q")

    for sec, keys in _SCHEME_KEYS.items():
        if not cp.has_section(sec):
            continue
        for key in cp[sec]:
            if key not in keys:
                raise ConfigError(f"[{sec}] unknown key {key!r}")
            field_name, conv = keys[key]
            kw[field_name] = _get(cp[sec], key, conv, sec)

    try:
        configs = [SimConfig(scheme=s, **kw) for s in schemes]
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    echo = {sec: dict(cp[sec]) for sec in cp.sections()}
    return RunPlan(configs, workers, trace_path, echo)


# ------------------------------------------------------------------ reports

def summary_rows(rows):
    """Flatten sweep rows into (mode, algorithm, metric, mean, stdev, p99) tuples."""
    out = []
    for row in rows:
        for m in METRICS:
            s = row.summary[m]
            out.append((row.config.mode, row.config.scheme, m, s["mean"], s["stdev"], s["p99"]))
    return out


def summary_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for mode, alg, metric, mean, sd, p99 in summary_rows(rows):
        w.writerow((mode, alg, metric, fmt(mean), fmt(sd), fmt(p99)))
    return buf.getvalue()


def experiences_json(rows):
    recs = []
    for row in rows:
        for e in row.datapoint.experiences:
            rec = e.to_record(row.config.slot_us)
            rec["mode"] = row.config.mode
            rec["algorithm"] = row.config.scheme
            rec["slot_us"] = row.config.slot_us
            recs.append(rec)
    return dumps(recs)


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def manifest(command, config_echo, seeds, inputs, outputs):
    """Run manifest; no timestamps so re-runs stay byte-identical."""
    return dumps({
        "tool": "swnc",
        "version": __version__,
        "command": command,
        "config": config_echo,
        "seeds": list(seeds),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    })


def write_all(files):
    """Write ``{path: text}``; on any failure remove what was already written."""
    done = []
    try:
        for path, text in files.items():
            atomic_write(path, text)
            done.append(Path(path))
    except BaseException:
        for p in done:
            p.unlink(missing_ok=True)
        raise
    return done
