"""Exposure stacks and their on-disk manifest.

A stack couples display-referred images with the relative integration times
that produced them. On disk a stack is a directory of PNGs plus a
``stack.json`` manifest holding the file names, the exposure values (log2 of
the relative times), and the forward gamma used to render them.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .formats import read_png8, write_png8


@dataclass
class ExposureStack:
    """Display-referred exposures of one scene, ordered as given.

    ``times`` are relative integration times, strictly positive and
    pairwise distinct. All images share one (H, W, 3) shape with values
    in [0, 1].
    """

    images: list = field(default_factory=list)
    times: np.ndarray = None

    def __post_init__(self):
        self.images = [np.asarray(img, dtype=np.float64) for img in self.images]
        if not self.images:
            raise ValueError("a stack needs at least one image")
        shape = self.images[0].shape
        if len(shape) != 3 or shape[-1] != 3:
            raise ValueError("stack images must be (H, W, 3)")
        for img in self.images[1:]:
            if img.shape != shape:
                raise ValueError("stack images must share one shape")
        self.times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        if self.times.shape[0] != len(self.images):
            raise ValueError("one integration time per image required")
        if np.any(self.times <= 0):
            raise ValueError("integration times must be positive")
        if np.unique(self.times).size != self.times.size:
            raise ValueError("integration times must be distinct")

    def __len__(self):
        return len(self.images)

    @property
    def shape(self):
        return self.images[0].shape

    @property
    def ev(self):
        """Exposure values: log2 of the relative integration times."""
        return np.log2(self.times)


def save_stack(out_dir, stack, gamma=None, prefix="exposure"):
    """Write stack PNGs plus a stack.json manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ev = stack.ev
    files = []
    for i, img in enumerate(stack.images):
        name = f"{prefix}_{i:02d}.png"
        write_png8(out_dir / name, img)
        files.append(name)
    manifest = {"files": files, "ev": [float(v) for v in ev]}
    if gamma is not None:
        manifest["gamma"] = float(gamma)
    path = out_dir / "stack.json"
    with open(path, "w", encoding="ascii") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_stack(manifest_path):
    """Read a stack.json manifest; returns (ExposureStack, metadata dict).

    Accepts either the manifest file itself or the directory holding it.
    """
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "stack.json"
    with open(manifest_path, encoding="ascii") as f:
        manifest = json.load(f)
    for key in ("files", "ev"):
        if key not in manifest:
            raise ValueError(f"manifest missing required key {key!r}")
    files = manifest["files"]
    ev = manifest["ev"]
    if len(files) != len(ev):
        raise ValueError("manifest files and ev lists differ in length")
    base = manifest_path.parent
    images = [read_png8(base / name) for name in files]
    times = np.power(2.0, np.asarray(ev, dtype=np.float64))
    meta = {k: v for k, v in manifest.items() if k not in ("files", "ev")}
    return ExposureStack(images=images, times=times), meta
