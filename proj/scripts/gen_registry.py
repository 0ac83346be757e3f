#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The tlsaudit Authors
"""Regenerate data/cipher_suites.csv, data/strength_classes.csv and data/profiles/.

Needs scapy (for the IANA suite table) and the `openssl` binary (for the
OpenSSL 3 suite list and per-suite minimum versions).
"""
import csv
import json
import re
import subprocess
import sys
from pathlib import Path

from scapy.layers.tls.crypto.suites import _tls_cipher_suites

DATA = Path(__file__).resolve().parent.parent / "data"

# RFC 6209 ARIA suites; scapy does not carry them.
ARIA_KX = [
    (0xC03C, "RSA"), (0xC03E, "DH_DSS"), (0xC040, "DH_RSA"), (0xC042, "DHE_DSS"),
    (0xC044, "DHE_RSA"), (0xC046, "DH_anon"), (0xC048, "ECDHE_ECDSA"),
    (0xC04A, "ECDH_ECDSA"), (0xC04C, "ECDHE_RSA"), (0xC04E, "ECDH_RSA"),
]
ARIA_GCM_KX = [
    (0xC050, "RSA"), (0xC052, "DHE_RSA"), (0xC054, "DH_RSA"), (0xC056, "DHE_DSS"),
    (0xC058, "DH_DSS"), (0xC05A, "DH_anon"), (0xC05C, "ECDHE_ECDSA"),
    (0xC05E, "ECDH_ECDSA"), (0xC060, "ECDHE_RSA"), (0xC062, "ECDH_RSA"),
]
ARIA_PSK = [
    (0xC064, "PSK", "CBC"), (0xC066, "DHE_PSK", "CBC"), (0xC068, "RSA_PSK", "CBC"),
    (0xC06A, "PSK", "GCM"), (0xC06C, "DHE_PSK", "GCM"), (0xC06E, "RSA_PSK", "GCM"),
    (0xC070, "ECDHE_PSK", "CBC"),
]


def extra_suites():
    out = {}
    for base, kx in ARIA_KX:
        out[base] = f"TLS_{kx}_WITH_ARIA_128_CBC_SHA256"
        out[base + 1] = f"TLS_{kx}_WITH_ARIA_256_CBC_SHA384"
    for base, kx in ARIA_GCM_KX:
        out[base] = f"TLS_{kx}_WITH_ARIA_128_GCM_SHA256"
        out[base + 1] = f"TLS_{kx}_WITH_ARIA_256_GCM_SHA384"
    for base, kx, mode in ARIA_PSK:
        out[base] = f"TLS_{kx}_WITH_ARIA_128_{mode}_SHA256"
        out[base + 1] = f"TLS_{kx}_WITH_ARIA_256_{mode}_SHA384"
    # RFC 8442
    out[0xD001] = "TLS_ECDHE_PSK_WITH_AES_128_GCM_SHA256"
    out[0xD002] = "TLS_ECDHE_PSK_WITH_AES_256_GCM_SHA384"
    out[0xD003] = "TLS_ECDHE_PSK_WITH_AES_128_CCM_8_SHA256"
    out[0xD005] = "TLS_ECDHE_PSK_WITH_AES_128_CCM_SHA256"
    return out


KX = {
    "RSA": ("RSA", "RSA"), "RSA_EXPORT": ("RSA", "RSA"), "RSA_EXPORT1024": ("RSA", "RSA"),
    "DHE_RSA": ("DHE", "RSA"), "DHE_RSA_EXPORT": ("DHE", "RSA"),
    "DHE_DSS": ("DHE", "DSS"), "DHE_DSS_EXPORT": ("DHE", "DSS"),
    "DH_anon": ("DHE", "ANON"), "DH_anon_EXPORT": ("DHE", "ANON"),
    "ECDHE_RSA": ("ECDHE", "RSA"), "ECDHE_ECDSA": ("ECDHE", "ECDSA"),
    "ECDH_anon": ("ECDHE", "ANON"),
    "DH_RSA": ("OTHER", "RSA"), "DH_RSA_EXPORT": ("OTHER", "RSA"),
    "DH_DSS": ("OTHER", "DSS"), "DH_DSS_EXPORT": ("OTHER", "DSS"),
    "ECDH_RSA": ("OTHER", "RSA"), "ECDH_ECDSA": ("OTHER", "ECDSA"),
    "SRP_SHA_RSA": ("OTHER", "RSA"), "SRP_SHA_DSS": ("OTHER", "DSS"),
}

CIPHERS = [
    # (regex on the bulk part, family, mode)
    (r"NULL", "NULL", "NONE"),
    (r"RC4_(128|40)", "RC4", "STREAM"),
    (r"RC2_CBC_(40|56)", "OTHER", "CBC"),
    (r"IDEA_CBC", "IDEA", "CBC"),
    (r"DES40_CBC|DES_CBC(_40)?", "DES", "CBC"),
    (r"3DES_EDE_CBC", "TRIPLE_DES", "CBC"),
    (r"AES_(128|256)_CBC", "AES", "CBC"),
    (r"AES_(128|256)_GCM", "AES", "GCM"),
    (r"AES_(128|256)_CCM(_8)?", "AES", "CCM"),
    (r"CAMELLIA_(128|256)_CBC", "CAMELLIA", "CBC"),
    (r"CAMELLIA_(128|256)_GCM", "CAMELLIA", "GCM"),
    (r"ARIA_(128|256)_CBC", "ARIA", "CBC"),
    (r"ARIA_(128|256)_GCM", "ARIA", "GCM"),
    (r"SEED_CBC", "SEED", "CBC"),
    (r"CHACHA20_POLY1305", "CHACHA", "POLY1305"),
]

NAME_RE = re.compile(r"^TLS_(?P<kx>.+?)_WITH_(?P<enc>.+?)(_(?P<mac>MD5|SHA|SHA256|SHA384))?$")
TLS13_RE = re.compile(r"^TLS_(?P<enc>AES_(128|256)_(GCM|CCM(_8)?)|CHACHA20_POLY1305)_(SHA256|SHA384)$")


def classify_cipher(enc):
    for rx, fam, mode in CIPHERS:
        if re.fullmatch(rx, enc):
            return fam, mode
    return "OTHER", "CBC" if "CBC" in enc else "NONE"


def classify(sid, name):
    row = {"id": sid, "name": name, "is_export": "EXPORT" in name}
    if 0x1301 <= sid <= 0x1305:
        m = TLS13_RE.match(name)
        fam, mode = classify_cipher(m.group("enc"))
        row.update(kex="OTHER", auth="OTHER", cipher_family=fam, cipher_mode=mode,
                   mac="AEAD", min_version="TLS1.3", max_version="TLS1.3", unsupported=True)
        return row
    if name == "TLS_NULL_WITH_NULL_NULL":
        row.update(kex="OTHER", auth="OTHER", cipher_family="NULL", cipher_mode="NONE",
                   mac="NONE", max_version="TLS1.2", unsupported=True)
        return row
    m = NAME_RE.match(name)
    if not m:
        raise ValueError(f"unparsed suite name {name}")
    kx, enc, mac = m.group("kx"), m.group("enc"), m.group("mac")
    kex, auth = KX.get(kx, ("OTHER", "OTHER"))
    fam, mode = classify_cipher(enc)
    aead = mode in ("GCM", "CCM", "POLY1305")
    if aead:
        mac = "AEAD"
    else:
        mac = {"MD5": "MD5", "SHA": "SHA1", "SHA256": "SHA256", "SHA384": "SHA384", None: "NONE"}[mac]
    unsupported = kex == "OTHER" or auth in ("DSS", "ANON", "OTHER")
    row.update(kex=kex, auth=auth, cipher_family=fam, cipher_mode=mode, mac=mac,
               max_version="TLS1.2", unsupported=unsupported)
    return row


def openssl_list():
    out = subprocess.run(
        ["openssl", "ciphers", "-V", "-stdname", "ALL:COMPLEMENTOFALL:@SECLEVEL=0"],
        check=True, capture_output=True, text=True).stdout
    res = {}
    for line in out.splitlines():
        parts = line.split()
        hi, lo = parts[0].split(",")
        sid = int(hi, 16) << 8 | int(lo, 16)
        res[sid] = {"name": parts[2], "version": parts[5]}
    return res


VERSION_MAP = {"SSLv3": "SSLv3", "TLSv1": "TLS1.0", "TLSv1.2": "TLS1.2", "TLSv1.3": "TLS1.3"}


def fallback_min(row):
    if row["is_aead"] or row["mac"] in ("SHA256", "SHA384"):
        return "TLS1.2"
    if "ECDH" in row["name"]:
        return "TLS1.0"
    return "SSLv3"


def strength(row):
    if row["cipher_family"] == "NULL" or row["is_export"]:
        return None
    fam = row["cipher_family"]
    if fam in ("AES", "CAMELLIA", "ARIA", "CHACHA"):
        return "HIGH"
    if fam in ("TRIPLE_DES", "RC4", "SEED", "IDEA"):
        return "MEDIUM"
    if fam == "DES":
        return "LOW"
    return None


def kx_of(name):
    m = NAME_RE.match(name)
    return m.group("kx") if m else None


def legacy_profile(rows, era):
    """Rule-built suite set for the pre-1.1 OpenSSL releases shipped by Ubuntu."""
    kx_ok = {"RSA", "RSA_EXPORT", "DHE_RSA", "DHE_RSA_EXPORT", "DHE_DSS", "DHE_DSS_EXPORT",
             "DH_anon", "DH_anon_EXPORT", "ECDHE_RSA", "ECDHE_ECDSA", "ECDH_anon",
             "ECDH_RSA", "ECDH_ECDSA", "PSK", "SRP_SHA", "SRP_SHA_RSA", "SRP_SHA_DSS"}
    if era == "1.0.2":
        kx_ok |= {"DH_RSA", "DH_DSS"}
    out = []
    for r in rows:
        kx = kx_of(r["name"])
        if kx not in kx_ok or r["min_version"] == "TLS1.3":
            continue
        fam, mode, mac = r["cipher_family"], r["cipher_mode"], r["mac"]
        if fam in ("ARIA", "CHACHA", "IDEA", "OTHER") or mode == "CCM":
            continue
        if fam == "CAMELLIA" and mac != "SHA1":
            continue
        if kx.startswith(("PSK", "SRP")) and (mac != "SHA1" or fam not in ("AES", "TRIPLE_DES", "RC4")):
            continue
        if kx.startswith("SRP") and fam == "RC4":
            continue
        if fam == "NULL" and kx not in ("RSA", "ECDHE_RSA", "ECDHE_ECDSA", "ECDH_anon", "ECDH_RSA", "ECDH_ECDSA"):
            continue
        if era == "1.0.2" and (r["is_export"] or fam == "DES"):
            continue
        out.append(r["id"])
    return out


def main():
    table = {k: v for k, v in _tls_cipher_suites.items()
             if k <= 0xFFFF and k not in (0x00FF, 0x5600)
             and not v.endswith("_OLD") and not (0x0060 <= k <= 0x0066)}
    for k, v in extra_suites().items():
        table.setdefault(k, v)
    ossl = openssl_list()
    rows = []
    for sid in sorted(table):
        row = classify(sid, table[sid])
        row["is_aead"] = row["cipher_mode"] in ("GCM", "CCM", "POLY1305")
        if "min_version" not in row:
            if sid in ossl:
                row["min_version"] = VERSION_MAP[ossl[sid]["version"]]
            else:
                row["min_version"] = fallback_min(row)
        rows.append(row)
    missing = [hex(s) for s in ossl if s not in table]
    if missing:
        sys.exit(f"openssl suites missing from registry: {missing}")

    with open(DATA / "cipher_suites.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "name", "kex", "auth", "cipher_family", "cipher_mode", "mac",
                    "is_aead", "is_export", "min_version", "max_version", "unsupported_by_engine"])
        for r in rows:
            w.writerow([f"0x{r['id']:04X}", r["name"], r["kex"], r["auth"], r["cipher_family"],
                        r["cipher_mode"], r["mac"], str(r["is_aead"]).lower(),
                        str(r["is_export"]).lower(), r["min_version"], r["max_version"],
                        str(r["unsupported"]).lower()])

    with open(DATA / "strength_classes.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "class"])
        for r in rows:
            s = strength(r)
            if s:
                w.writerow([f"0x{r['id']:04X}", s])

    pre13 = [r for r in rows if r["min_version"] != "TLS1.3"]
    by_id = {r["id"]: r for r in rows}
    ossl3 = sorted(s for s in ossl if by_id[s]["min_version"] != "TLS1.3")
    modern = set(ossl3)
    for r in pre13:
        kx = kx_of(r["name"])
        if r["cipher_family"] in ("TRIPLE_DES", "SEED") and not r["is_export"] and kx and \
                not kx.startswith(("DH_RSA", "DH_DSS", "ECDH_RSA", "ECDH_ECDSA", "KRB5")):
            modern.add(r["id"])
    profiles = [
        ("openssl-1.0.1", ["SSLv3", "TLS1.0", "TLS1.1", "TLS1.2"], legacy_profile(pre13, "1.0.1"),
         "Ubuntu 12.04 build: no IDEA, no static DH, Camellia SHA1 only, EXPORT and DES present."),
        ("openssl-1.0.1f", ["SSLv3", "TLS1.0", "TLS1.1", "TLS1.2"], legacy_profile(pre13, "1.0.1"),
         "Ubuntu 14.04 build: same suite set as 1.0.1."),
        ("openssl-1.0.2g", ["TLS1.0", "TLS1.1", "TLS1.2"], legacy_profile(pre13, "1.0.2"),
         "Ubuntu 16.04 build: SSLv3 disabled; EXPORT and single DES removed; static DH added."),
        ("openssl-1.1.0g", ["TLS1.0", "TLS1.1", "TLS1.2"], sorted(modern),
         "Ubuntu 18.04: shares the 1.1.1 suite list (OpenSSL 3 list plus 3DES and SEED), no TLS 1.3."),
        ("openssl-1.1.1", ["TLS1.0", "TLS1.1", "TLS1.2", "TLS1.3"], sorted(modern),
         "Ubuntu 18.04 with 1.1.1: OpenSSL 3 list plus 3DES and SEED, RC4 and DES gone."),
        ("openssl-3.0", ["TLS1.0", "TLS1.1", "TLS1.2", "TLS1.3"], ossl3,
         "OpenSSL 3.0.2 'ALL:COMPLEMENTOFALL' at security level 0, TLS 1.3 suites dropped."),
    ]
    (DATA / "profiles").mkdir(exist_ok=True)
    for name, versions, ids, notes in profiles:
        doc = {"name": name, "versions": versions, "notes": notes,
               "suites": [f"0x{i:04X}" for i in sorted(ids)]}
        (DATA / "profiles" / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
    print(f"{len(rows)} suites, {sum(r['unsupported'] for r in rows)} unsupported; "
          + ", ".join(f"{n}={len(i)}" for n, _, i, _ in profiles))


if __name__ == "__main__":
    main()
