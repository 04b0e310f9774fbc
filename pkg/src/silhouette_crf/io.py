"""Reading and writing sequences, masks, parameter files and reports."""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .fields import BACKGROUND, FAMILIES, SILHOUETTE, Frame, LabelField, ModelParams

FRAME_NAME = re.compile(r"^(\d+)\.(png|pgm|ppm)$", re.IGNORECASE)
PARAMS_FORMAT = "silhouette-crf-params"
PARAMS_VERSION = 1


def numbered_files(directory) -> list[Path]:
    """Image files named by frame number, sorted numerically."""
    d = Path(directory)
    if not d.is_dir():
        raise DataError(f"not a directory: {d}")
    found = [(int(m.group(1)), p) for p in d.iterdir()
             if p.is_file() and (m := FRAME_NAME.match(p.name))]
    if not found:
        raise DataError(f"no numbered PNG/PGM/PPM images in {d}")
    found.sort(key=lambda item: item[0])
    numbers = [n for n, _ in found]
    if len(set(numbers)) != len(numbers):
        raise DataError(f"duplicate frame numbers in {d}")
    return [p for _, p in found]


def _open(path: Path) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    return img


def load_frame(path) -> Frame:
    img = _open(Path(path))
    if img.mode not in ("L", "RGB", "RGBA", "P", "1"):
        raise DataError(f"{path}: unsupported image mode {img.mode!r} (need 8-bit gray or RGB)")
    return Frame.from_uint8(np.asarray(img.convert("RGB")))


def load_sequence(directory) -> list[Frame]:
    """All frames of a directory, ordered by the number in their file names."""
    frames = []
    for p in numbered_files(directory):
        f = load_frame(p)
        if frames and f.shape != frames[0].shape:
            raise DataError(f"{p.name}: size {f.width}x{f.height} differs from "
                            f"{frames[0].width}x{frames[0].height}")
        frames.append(f)
    return frames


def save_frame(frame: Frame, path) -> None:
    rgb = np.rint(frame.rgb * 255.0).astype(np.uint8)
    Image.fromarray(rgb, mode="RGB").save(path)


def load_mask(path, shape: tuple[int, int] | None = None) -> LabelField:
    """Strict binary mask: 0 is silhouette, 255 background, nothing else."""
    img = _open(Path(path))
    if img.mode == "1":
        img = img.convert("L")
    if img.mode != "L":
        raise DataError(f"{path}: mask must be 8-bit grayscale, got mode {img.mode!r}")
    a = np.asarray(img)
    bad = (a != 0) & (a != 255)
    if bad.any():
        y, x = np.argwhere(bad)[0]
        raise DataError(f"{path}: non-binary mask value {int(a[y, x])} at ({x}, {y})")
    if shape is not None and a.shape != tuple(shape):
        raise DataError(f"{path}: mask size {a.shape[1]}x{a.shape[0]} does not match "
                        f"sequence size {shape[1]}x{shape[0]}")
    return LabelField(np.where(a == 0, SILHOUETTE, BACKGROUND).astype(np.uint8))


def save_mask(field: LabelField, path) -> None:
    a = np.where(field.labels == SILHOUETTE, 0, 255).astype(np.uint8)
    Image.fromarray(a, mode="L").save(path)


def load_masks(directory, shape=None) -> list[LabelField]:
    return [load_mask(p, shape) for p in numbered_files(directory)]


def write_sequence(directory, frames, masks=None, digits: int = 3) -> None:
    """Write ``frames/NNN.png`` and, when given, ``masks/NNN.png``."""
    d = Path(directory)
    (d / "frames").mkdir(parents=True, exist_ok=True)
    for t, f in enumerate(frames):
        save_frame(f, d / "frames" / f"{t:0{digits}d}.png")
    if masks is not None:
        (d / "masks").mkdir(parents=True, exist_ok=True)
        for t, m in enumerate(masks):
            save_mask(m, d / "masks" / f"{t:0{digits}d}.png")


def save_params(params: ModelParams, path) -> None:
    lines = [f"# {PARAMS_FORMAT}", f"version = {PARAMS_VERSION}"]
    lines += [f"{name} = {w!r}" for name, w in params.as_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path) -> ModelParams:
    """Parse a ``family = weight`` text file written by :func:`save_params`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read parameter file {path}: {exc}") from exc
    values: dict[str, float] = {}
    version = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = (s.strip() for s in line.partition("="))
        if not sep or not key:
            raise DataError(f"{path}:{n}: expected 'name = value'")
        if key == "version":
            version = val
            continue
        if key in values:
            raise DataError(f"{path}:{n}: duplicate entry {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise DataError(f"{path}:{n}: {val!r} is not a number") from None
    if version != str(PARAMS_VERSION):
        raise DataError(f"{path}: unsupported or missing version {version!r}")
    missing = [f for f in FAMILIES if f not in values]
    if missing:
        raise DataError(f"{path}: missing weight(s) for {', '.join(missing)}")
    try:
        return ModelParams.from_dict(values)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=False) + "\n")
