#!/usr/bin/env python3
# Copyright 2026 The eapsh Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes vectors/eapsh_codec.hex from a standalone encoder."""

import struct
import sys

TYPE = 56
L, M, S, H, C = 0x80, 0x40, 0x20, 0x10, 0x08


def packet(code, ident, flags=None, total=None, payload=b""):
    if code in (3, 4):
        return struct.pack(">BBH", code, ident, 4)
    body = bytes([TYPE, flags])
    if total is not None:
        body += struct.pack(">I", total)
    body += payload
    return struct.pack(">BBH", code, ident, 4 + len(body)) + body


def seq(n):
    return bytes(i % 256 for i in range(n))


def split(message, sem_flag, code, max_packet):
    whole = max_packet - 6
    if len(message) <= whole:
        return [packet(code, 0, sem_flag, None, message)]
    first = max_packet - 10
    out = [packet(code, 0, sem_flag | L | M, len(message), message[:first])]
    rest = message[first:]
    while rest:
        chunk, rest = rest[:whole], rest[whole:]
        out.append(packet(code, 0, sem_flag | (M if rest else 0), None, chunk))
    return out


def data_field(b, name_hint=None):
    if not b:
        return "-"
    if name_hint:
        return name_hint
    return b.hex()


def main(path):
    lines = ["# generated by tests/oracles/gen_codec_vectors.py"]

    def frame(name, code, ident, flags, total, payload, hint=None):
        p = packet(code, ident, flags, total, payload)
        lines.append(
            f"frame {name} code={code} id={ident} flags={flags:02x} "
            f"total={'-' if total is None else total} payload={data_field(payload, hint)} "
            f"packet={p.hex()}")

    frame("ack-request", 1, 0, 0, None, b"")
    frame("ack-response", 2, 7, 0, None, b"")
    frame("start", 1, 1, S, None, b"")
    frame("success", 3, 9, 0, None, b"")
    frame("failure", 4, 255, 0, None, b"")
    frame("handshake", 1, 2, 0, None, b"\x16\x03\x01")
    frame("http-request", 2, 3, H, None, b"GET / HTTP/1.1\r\n\r\n")
    frame("csr", 2, 4, C, None, bytes.fromhex("3082"))
    frame("cert", 1, 5, C, None, b"-----BEGIN")
    frame("first-of-2500", 1, 6, L | M, 2500, seq(1010), "seq:1010")
    frame("first-http", 2, 8, L | M | H, 70000, seq(1010), "seq:1010")
    frame("middle-cert", 1, 10, M | C, None, seq(1014), "seq:1014")

    def frag(name, max_packet, semantic, n):
        sem_flag = {"unflagged": 0, "http_request": H, "csr": C, "certificate": C}[semantic]
        code = 2 if semantic in ("http_request", "csr") else 1
        pkts = split(seq(n), sem_flag, code, max_packet)
        lines.append(
            f"fragment {name} max={max_packet} semantic={semantic} message=seq:{n} "
            f"packets={','.join(p.hex() for p in pkts)}")

    frag("empty", 1020, "unflagged", 0)
    frag("one-byte", 1020, "http_request", 1)
    frag("fits-1014", 1020, "csr", 1014)
    frag("needs-two-1015", 1020, "certificate", 1015)
    frag("total-2500", 1020, "unflagged", 2500)
    frag("http-4096", 1020, "http_request", 4096)
    frag("small-mtu", 64, "csr", 300)
    frag("mtu-1400", 1400, "certificate", 5000)

    def neg(name, raw, err):
        lines.append(f"! {name} packet={raw.hex()} error={err}")

    neg("three-bytes", bytes([1, 0, 0]), "Truncated")
    neg("length-over-buffer", struct.pack(">BBH", 1, 0, 20) + bytes([TYPE, 0]), "Truncated")
    neg("no-type", struct.pack(">BBH", 1, 0, 4), "Truncated")
    neg("no-flags", struct.pack(">BBH", 1, 0, 5) + bytes([TYPE]), "Truncated")
    neg("wrong-type", struct.pack(">BBH", 1, 0, 6) + bytes([13, 0]), "BadType")
    for bit in (1, 2, 4):
        neg(f"reserved-{bit}", struct.pack(">BBH", 1, 0, 6) + bytes([TYPE, bit]), "ReservedBitsSet")
    neg("l-without-length", struct.pack(">BBH", 1, 0, 8) + bytes([TYPE, L, 0, 0]), "Truncated")
    neg("s-and-h", struct.pack(">BBH", 1, 0, 6) + bytes([TYPE, S | H]), "InvariantViolation")
    neg("h-and-c", struct.pack(">BBH", 2, 0, 6) + bytes([TYPE, H | C]), "InvariantViolation")
    neg("s-with-payload", struct.pack(">BBH", 1, 0, 7) + bytes([TYPE, S, 0]), "InvariantViolation")
    neg("total-below-fragment",
        struct.pack(">BBH", 1, 0, 12) + bytes([TYPE, L | M]) + struct.pack(">I", 1) + b"ab",
        "InvariantViolation")
    neg("unknown-code", struct.pack(">BBH", 9, 0, 6) + bytes([TYPE, 0]), "InvariantViolation")
    neg("success-with-body", struct.pack(">BBH", 3, 0, 5) + b"\x00", "InvariantViolation")

    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "vectors/eapsh_codec.hex")
