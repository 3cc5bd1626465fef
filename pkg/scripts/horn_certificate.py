"""Certify the Horn matrix at level 1 and write the exact certificate.

    python3 scripts/horn_certificate.py --out horn.cert
"""
from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

from copocert import certify, gram
from copocert.copositive import horn, min_level


@dataclass
class Config:
    out: str = "horn.cert"
    r_max: int = 2
    threshold: float = gram.MEMBER_THRESHOLD


def run(cfg: Config) -> certify.SosCertificate:
    t0 = time.perf_counter()
    res = min_level(horn(), cfg.r_max, threshold=cfg.threshold)
    for r, mem in sorted(res.memberships.items()):
        print(f"r={r}: {mem.verdict.value}  margin {mem.margin:.3e}  raw {mem.raw_margin:.3e}")
    if not res.found:
        raise SystemExit(f"no level found up to {cfg.r_max}")
    cert = certify.exactify(res.encodings[res.level], res.memberships[res.level].solution)
    certify.write_certificate(cert, cfg.out)
    print(f"{len(cert.squares)} squares at r={cert.r}, verified, written to {cfg.out} "
          f"({time.perf_counter() - t0:.2f}s)")
    return cert


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=Config.out)
    ap.add_argument("--r-max", type=int, default=Config.r_max)
    args = ap.parse_args()
    run(Config(out=args.out, r_max=args.r_max))


if __name__ == "__main__":
    main()
