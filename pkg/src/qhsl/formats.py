"""File formats: rasters, image dumps, circuit text, tables, maps, reports.

Binary rasters are 8-bit RGB (PPM P6 natively, PNG when Pillow is
installed).  Everything else is line-oriented text.  All writers go
through an atomic replace so a crash never leaves a half-written file.

Angles in image dumps are printed with 12 significant digits and then
stabilized: the printed string is re-parsed and re-canonicalized until
it is a fixed point of that cycle, so dumping a parsed dump reproduces
it byte for byte.
"""

from __future__ import annotations

import io
import math
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .color import (
    AVERAGE,
    MANUAL,
    ChromaState,
    HslColor,
    LightnessCode,
    canonical_phase,
    decode_chroma,
    encode_chroma,
    lightness_to_fraction,
    quantize_lightness,
    hsl_array_to_rgb,
    rgb_array_to_hsl,
    validate_table,
)
from .errors import ConfigurationError, FormatError
from .image import QhslImage
from .retrieval import RetrievalReport
from .sim import Circuit, ControlPattern, Gate, Instruction
from .transforms import PseudocolorMap


def _atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qhsl-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _atomic_write_text(path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _tokenize_ppm_header(data: bytes, count: int) -> tuple[list[bytes], int]:
    # returns `count` header tokens and the offset just past the single
    # whitespace byte that terminates the header
    tokens: list[bytes] = []
    i, n = 0, len(data)
    while len(tokens) < count:
        if i >= n:
            raise FormatError("truncated PPM header")
        c = data[i:i + 1]
        if c in (b" ", b"\t", b"\r", b"\n"):
            i += 1
            continue
        if c == b"#":
            while i < n and data[i:i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < n and data[j:j + 1] not in (b" ", b"\t", b"\r", b"\n"):
            j += 1
        tokens.append(data[i:j])
        i = j
    if i >= n or data[i:i + 1] not in (b" ", b"\t", b"\r", b"\n"):
        raise FormatError("missing separator after the PPM maxval")
    return tokens, i + 1


def read_ppm(path) -> np.ndarray:
    """Read a binary PPM (P6, maxval 255) into an (h, w, 3) uint8 array."""
    data = Path(path).read_bytes()
    tokens, offset = _tokenize_ppm_header(data, 4)
    magic, width_s, height_s, maxval_s = tokens
    if magic != b"P6":
        raise FormatError(f"not a binary PPM: magic {magic!r}")
    try:
        width, height, maxval = int(width_s), int(height_s), int(maxval_s)
    except ValueError as exc:
        raise FormatError(f"bad PPM header field: {exc}") from exc
    if width < 1 or height < 1:
        raise FormatError(f"bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    need = width * height * 3
    raw = data[offset:offset + need]
    if len(raw) < need:
        raise FormatError(f"PPM pixel data is short: {len(raw)} of {need} bytes")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(path, rgb: np.ndarray) -> None:
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) array, got shape {rgb.shape}")
    height, width = rgb.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    _atomic_write_bytes(path, header + rgb.tobytes())


def _pil_image():
    try:
        from PIL import Image as pil_image
    except ImportError as exc:
        raise FormatError(
            "PNG files need the Pillow package; install the 'png' extra") from exc
    return pil_image


def read_png(path) -> np.ndarray:
    with _pil_image().open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def write_png(path, rgb: np.ndarray) -> None:
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) array, got shape {rgb.shape}")
    buf = io.BytesIO()
    _pil_image().fromarray(rgb, "RGB").save(buf, format="PNG")
    _atomic_write_bytes(path, buf.getvalue())


def read_raster(path) -> np.ndarray:
    """Read a raster file by extension (.ppm or .png)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".ppm":
        return read_ppm(path)
    if suffix == ".png":
        return read_png(path)
    raise FormatError(f"unsupported raster format {suffix!r} (use .ppm or .png)")


def write_raster(path, rgb: np.ndarray) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".ppm":
        write_ppm(path, rgb)
    elif suffix == ".png":
        write_png(path, rgb)
    else:
        raise FormatError(f"unsupported raster format {suffix!r} (use .ppm or .png)")


def image_from_rgb_array(rgb: np.ndarray, n: int, q: int, mapping: str = AVERAGE,
                         table=None, table_source: str | None = None) -> QhslImage:
    """Encode an RGB raster onto the 2**n x 2**n pixel grid.

    Rasters smaller than the grid are padded with black on the bottom and
    right; larger ones are refused rather than silently cropped.
    """
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise FormatError(f"expected an (h, w, 3) raster, got shape {rgb.shape}")
    side = 2 ** n
    height, width = rgb.shape[:2]
    if height > side or width > side:
        raise FormatError(f"raster {width}x{height} exceeds the {side}x{side} grid for n={n}")
    if (height, width) != (side, side):
        padded = np.zeros((side, side, 3), dtype=np.uint8)
        padded[:height, :width] = rgb
        rgb = padded
    hsl = rgb_array_to_hsl(rgb)
    pixels = []
    for y in range(side):
        for x in range(side):
            hue, sat, light = (float(v) for v in hsl[y, x])
            pixels.append((encode_chroma(HslColor(hue, sat, light)),
                           quantize_lightness(light, q, mapping, table)))
    return QhslImage(n, q, tuple(pixels), table_source)


def image_to_rgb_array(img: QhslImage) -> np.ndarray:
    """Render stored pixels back to 8-bit RGB.

    Pixels whose hue is indeterminate (chroma at a Bloch pole) render as
    the saturation-zero grey of their lightness.
    """
    side = img.side
    hsl = np.zeros((side, side, 3), dtype=np.float64)
    for y, x, chroma, code in img.enumerate_pixels():
        dec = decode_chroma(chroma)
        sat = 0.0 if dec.hue_undefined else dec.saturation
        hsl[y, x] = (dec.hue, sat, lightness_to_fraction(code))
    return hsl_array_to_rgb(hsl)


def report_to_rgb_array(report: RetrievalReport) -> np.ndarray:
    side = 2 ** report.n
    hsl = np.zeros((side, side, 3), dtype=np.float64)
    for px in report.pixels:
        sat = 0.0 if px.hue_undefined else px.saturation
        hsl[px.y, px.x] = (px.hue, sat, px.lightness)
    return hsl_array_to_rgb(hsl)


def save_image(path, source) -> None:
    """Write a QhslImage or RetrievalReport as a raster file."""
    if isinstance(source, RetrievalReport):
        write_raster(path, report_to_rgb_array(source))
    else:
        write_raster(path, image_to_rgb_array(source))


def _stable_angle(value: float, canonical) -> str:
    s = "%.12g" % value
    t = "%.12g" % canonical(float(s))
    while t != s:
        s, t = t, "%.12g" % canonical(float(t))
    return s


def _snap_theta(value: float) -> float:
    return min(value, math.pi)


def format_image(img: QhslImage) -> str:
    """Serialize an image: a header line, then one `y x theta phi L` per pixel."""
    if img.mapping == MANUAL:
        ref = img.table_source
        if not ref:
            raise FormatError("a manual-mapping image needs a table path reference to serialize")
        if any(ch.isspace() for ch in ref):
            raise FormatError(f"table reference {ref!r} must not contain whitespace")
        mapping = f"manual:{ref}"
    else:
        mapping = "average"
    lines = [f"QHSL n={img.n} q={img.q} mapping={mapping}"]
    for y, x, chroma, code in img.enumerate_pixels():
        theta = _stable_angle(chroma.theta, _snap_theta)
        phi = _stable_angle(chroma.phi, canonical_phase)
        lines.append(f"{y} {x} {theta} {phi} {code.bits}")
    return "\n".join(lines) + "\n"


def _parse_header_fields(tokens: list[str], ln: int) -> dict[str, str]:
    fields = {}
    for tok in tokens:
        if "=" not in tok:
            raise FormatError(f"line {ln}: malformed header field {tok!r}")
        key, value = tok.split("=", 1)
        fields[key] = value
    return fields


def parse_image(text: str, base_dir=None) -> QhslImage:
    """Parse the dump format back into an image.

    Pixel lines must appear in raster order and cover the grid exactly.
    A manual mapping's table reference is resolved relative to
    ``base_dir`` (the dump's directory when loading from a file).
    """
    header = None
    pixels = []
    n = q = side = 0
    mapping, table, ref = AVERAGE, None, None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if header is None:
            tokens = line.split()
            if not tokens or tokens[0] != "QHSL":
                raise FormatError(f"line {ln}: expected a 'QHSL n=... q=... mapping=...' header")
            fields = _parse_header_fields(tokens[1:], ln)
            missing = {"n", "q", "mapping"} - fields.keys()
            if missing:
                raise FormatError(f"line {ln}: header is missing {sorted(missing)}")
            try:
                n, q = int(fields["n"]), int(fields["q"])
            except ValueError as exc:
                raise FormatError(f"line {ln}: {exc}") from exc
            if n < 0 or q < 0:
                raise FormatError(f"line {ln}: n and q must be non-negative")
            spec = fields["mapping"]
            if spec == "average":
                mapping = AVERAGE
            elif spec.startswith("manual:"):
                mapping = MANUAL
                ref = spec.split(":", 1)[1]
                if not ref:
                    raise FormatError(f"line {ln}: empty table reference")
                resolved = ref if os.path.isabs(ref) else os.path.join(
                    os.fspath(base_dir) if base_dir is not None else ".", ref)
                try:
                    table = validate_table(read_mapping_table(resolved), q)
                except ConfigurationError as exc:
                    raise FormatError(f"line {ln}: bad mapping table: {exc}") from exc
            else:
                raise FormatError(f"line {ln}: unknown mapping {spec!r}")
            header = fields
            side = 2 ** n
            continue
        tokens = line.split()
        if len(tokens) != 5:
            raise FormatError(f"line {ln}: expected 'y x theta phi L', got {len(tokens)} fields")
        index = len(pixels)
        if index >= side * side:
            raise FormatError(f"line {ln}: more pixel lines than the {side}x{side} grid")
        try:
            y, x = int(tokens[0]), int(tokens[1])
            theta, phi = float(tokens[2]), float(tokens[3])
            bits = int(tokens[4])
        except ValueError as exc:
            raise FormatError(f"line {ln}: {exc}") from exc
        if (y, x) != (index // side, index % side):
            raise FormatError(
                f"line {ln}: pixel ({y}, {x}) out of raster order, expected "
                f"({index // side}, {index % side})")
        if theta < 0.0 or theta > math.pi + 1e-9:
            raise FormatError(f"line {ln}: theta {theta} outside [0, pi]")
        theta = min(theta, math.pi)
        try:
            pixels.append((ChromaState(theta, canonical_phase(phi)),
                           LightnessCode(q, bits, mapping, table)))
        except (ValueError, FormatError) as exc:
            raise FormatError(f"line {ln}: {exc}") from exc
    if header is None:
        raise FormatError("empty image dump")
    if len(pixels) != side * side:
        raise FormatError(f"dump has {len(pixels)} pixel lines, expected {side * side}")
    return QhslImage(n, q, tuple(pixels), ref)


def save_dump(path, img: QhslImage) -> None:
    _atomic_write_text(path, format_image(img))


def load_dump(path) -> QhslImage:
    path = Path(path)
    return parse_image(path.read_text(encoding="utf-8"), base_dir=path.parent)


_CIRCUIT_HEADER_RE = re.compile(r"#\s*qhsl-circuit\s+v1\s+qubits=(\d+)\s*$")
_INSTR_RE = re.compile(r"^(\w+)\(([^)]*)\)\s+t=(\d+)(?:\s+c=\[([^\]]*)\])?\s*$")
_GATE_ARITY = {"RY": 1, "RZ": 1, "R": 2, "H": 0, "X": 0, "I": 0,
               "SET0": 0, "SET1": 0, "U1": 0, "U2": 0}


def format_circuit(circuit: Circuit) -> str:
    """Serialize a circuit, one instruction per line.

    Angles are printed with repr so parsing recovers the exact doubles
    and a serialized circuit applies bit-identically.
    """
    lines = [f"# qhsl-circuit v1 qubits={circuit.num_qubits}"]
    for ins in circuit.instructions:
        params = ", ".join(repr(p) for p in ins.gate.params)
        line = f"{ins.gate.kind}({params}) t={ins.target}"
        if ins.controls.terms:
            line += " c=[" + ",".join(f"{qb}={bit}" for qb, bit in ins.controls.terms) + "]"
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    num_qubits = None
    instrs: list[Instruction] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if num_qubits is None:
            m = _CIRCUIT_HEADER_RE.match(line)
            if not m:
                raise FormatError(f"line {ln}: expected header '# qhsl-circuit v1 qubits=<k>'")
            num_qubits = int(m.group(1))
            continue
        if line.startswith("#"):
            continue
        m = _INSTR_RE.match(line)
        if not m:
            raise FormatError(f"line {ln}: unrecognized instruction {line!r}")
        kind, params_s, target_s, controls_s = m.groups()
        if kind not in _GATE_ARITY:
            raise FormatError(f"line {ln}: unknown gate kind {kind!r}")
        try:
            params = tuple(float(p) for p in params_s.split(",") if p.strip())
        except ValueError as exc:
            raise FormatError(f"line {ln}: {exc}") from exc
        if len(params) != _GATE_ARITY[kind]:
            raise FormatError(
                f"line {ln}: {kind} takes {_GATE_ARITY[kind]} parameters, got {len(params)}")
        terms = []
        if controls_s:
            for part in controls_s.split(","):
                if "=" not in part:
                    raise FormatError(f"line {ln}: malformed control term {part!r}")
                qb_s, bit_s = part.split("=", 1)
                try:
                    terms.append((int(qb_s), int(bit_s)))
                except ValueError as exc:
                    raise FormatError(f"line {ln}: {exc}") from exc
        try:
            instrs.append(Instruction(Gate(kind, params), int(target_s),
                                      ControlPattern(tuple(terms))))
        except ValueError as exc:
            raise FormatError(f"line {ln}: {exc}") from exc
    if num_qubits is None:
        raise FormatError("empty circuit file")
    try:
        return Circuit(num_qubits, tuple(instrs))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save_circuit(path, circuit: Circuit) -> None:
    _atomic_write_text(path, format_circuit(circuit))


def load_circuit(path) -> Circuit:
    return parse_circuit(Path(path).read_text(encoding="utf-8"))


def read_mapping_table(path) -> tuple[float, ...]:
    """Read a lightness mapping table: whitespace-separated fractions."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read mapping table {os.fspath(path)!r}: {exc}") from exc
    values: list[float] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError as exc:
                raise FormatError(f"line {ln}: {exc}") from exc
    return tuple(values)


def write_mapping_table(path, table) -> None:
    _atomic_write_text(path, "\n".join(repr(float(v)) for v in table) + "\n")


def read_pseudocolor_map(path) -> PseudocolorMap:
    """Read a pseudocolor map: one `lo hi hue_degrees` interval per line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read pseudocolor map {os.fspath(path)!r}: {exc}") from exc
    entries = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise FormatError(f"line {ln}: expected 'lo hi hue_degrees', got {len(tokens)} fields")
        try:
            entries.append((int(tokens[0]), int(tokens[1]), float(tokens[2])))
        except ValueError as exc:
            raise FormatError(f"line {ln}: {exc}") from exc
    if not entries:
        raise FormatError("empty pseudocolor map")
    return PseudocolorMap(tuple(entries))


def format_report(report: RetrievalReport) -> str:
    """Serialize a retrieval report: header, then `y x hue sat light flag` lines."""
    shots = "-" if report.shots_per_basis is None else str(report.shots_per_basis)
    seed = "-" if report.seed is None else str(report.seed)
    lines = [f"# qhsl-report n={report.n} q={report.q} mode={report.mode} "
             f"shots={shots} seed={seed} branch={report.branch}"]
    for px in report.pixels:
        lines.append(f"{px.y} {px.x} {'%.12g' % px.hue} {'%.12g' % px.saturation} "
                     f"{'%.12g' % px.lightness} {int(px.hue_undefined)}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Parse a report into {'n', 'q', 'mode', 'shots', 'seed', 'branch', 'rows'}."""
    meta = None
    rows = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if meta is None:
            if not line.startswith("#"):
                raise FormatError(f"line {ln}: expected a '# qhsl-report ...' header")
            tokens = line.lstrip("#").split()
            if not tokens or tokens[0] != "qhsl-report":
                raise FormatError(f"line {ln}: expected a '# qhsl-report ...' header")
            fields = _parse_header_fields(tokens[1:], ln)
            try:
                meta = {
                    "n": int(fields["n"]),
                    "q": int(fields["q"]),
                    "mode": fields["mode"],
                    "shots": None if fields["shots"] == "-" else int(fields["shots"]),
                    "seed": None if fields["seed"] == "-" else int(fields["seed"]),
                    "branch": fields["branch"],
                }
            except (KeyError, ValueError) as exc:
                raise FormatError(f"line {ln}: bad report header: {exc}") from exc
            continue
        tokens = line.split()
        if len(tokens) != 6:
            raise FormatError(
                f"line {ln}: expected 'y x hue saturation lightness flag', got {len(tokens)} fields")
        try:
            rows.append((int(tokens[0]), int(tokens[1]), float(tokens[2]),
                         float(tokens[3]), float(tokens[4]), bool(int(tokens[5]))))
        except ValueError as exc:
            raise FormatError(f"line {ln}: {exc}") from exc
    if meta is None:
        raise FormatError("empty report")
    meta["rows"] = tuple(rows)
    return meta


def save_report(path, report: RetrievalReport) -> None:
    _atomic_write_text(path, format_report(report))


def load_report(path) -> dict:
    return parse_report(Path(path).read_text(encoding="utf-8"))
