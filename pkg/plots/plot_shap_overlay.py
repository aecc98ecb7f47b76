#!/usr/bin/env python3
"""Sign-split rendering of one full-image attribution record: positive values
in red, negative in green. Reads the documented attribution record format
(u32 header length, JSON header with count/dims, flat little-endian float32
records) without touching the library."""

import json
import struct
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from common import SchemaError, fail_schema, make_parser, save


def read_records(path):
    data = open(path, "rb").read()
    (hlen,) = struct.unpack("<I", data[:4])
    header = json.loads(data[4:4 + hlen].decode("utf-8"))
    payload = np.frombuffer(data[4 + hlen:], dtype="<f4")
    shape = (header["count"], *header["dims"])
    if payload.size != int(np.prod(shape)):
        raise SchemaError(f"{path}: payload does not match header dims {shape}")
    return header, payload.reshape(shape)


def build_figure(values):
    # values: (5, H, W) attribution stack; render the newest frame
    frame = values[-1]
    pos = np.maximum(frame, 0.0)
    neg = np.maximum(-frame, 0.0)
    rgb = np.zeros(frame.shape + (3,))
    if pos.max() > 0:
        rgb[..., 0] = pos / pos.max()  # positive: red
    if neg.max() > 0:
        rgb[..., 1] = neg / neg.max()  # negative: green
    fig, ax = plt.subplots(figsize=(5, 7))
    ax.imshow(rgb, origin="lower", interpolation="nearest")
    ax.set_xlabel("elevation bin")
    ax.set_ylabel("azimuth bin")
    ax.set_title("yaw attribution (red +, green -)")
    fig.tight_layout()
    return fig


def main(argv=None) -> int:
    parser = make_parser(__doc__)
    parser.add_argument("--index", type=int, default=0, help="record to render")
    args = parser.parse_args(argv)
    try:
        header, records = read_records(args.inputs[0])
        if len(records.shape) != 4 or records.shape[1] != 5:
            raise SchemaError(
                f"{args.inputs[0]}: expected (N, 5, H, W) full-image records, got {records.shape}"
            )
    except (SchemaError, struct.error) as exc:
        return fail_schema(SchemaError(str(exc)))
    save(build_figure(records[args.index]), args.out, args.dpi)
    return 0


if __name__ == "__main__":
    sys.exit(main())
