"""Seeded synthetic telemetry scenarios with ground-truth labels.

Determinism matters more than realism here: the PRNG is splitmix64 so any
reimplementation can reproduce fixtures bit-for-bit, and every scenario is
anchored to a fixed instant instead of the wall clock. Malicious rows are
constructed to satisfy the scenario's detecting template; benign rows are
constructed to miss it for a stated reason (machine account, out of window,
wrong action, clean domain).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .dataset import Dataset, Table

ANCHOR = datetime(2025, 6, 1, 12, 0, 0, tzinfo=timezone.utc)

_MASK = (1 << 64) - 1


class SplitMix64:
    """splitmix64; state advances by the golden-gamma constant."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def randrange(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def choice(self, seq):
        return seq[self.randrange(len(seq))]


class SynthError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


class UnknownScenario(SynthError):
    def __init__(self, scenario_id: str):
        super().__init__("UNKNOWN_SCENARIO", f"no scenario {scenario_id!r}")


class ScenarioSizeTooSmall(SynthError):
    def __init__(self, scenario_id: str, size: int, minimum: int):
        super().__init__(
            "SCENARIO_SIZE_TOO_SMALL",
            f"scenario {scenario_id!r} needs size >= {minimum}, got {size}",
        )


@dataclass
class GroundTruth:
    """Per-row labels keyed by the row's ReportId."""

    labels: dict = field(default_factory=dict)  # report id -> {"label", "scenario"}

    def add(self, report_id: str, label: str, scenario: str) -> None:
        self.labels[report_id] = {"label": label, "scenario": scenario}

    def malicious_ids(self) -> set:
        return {rid for rid, doc in self.labels.items() if doc["label"] == "malicious"}

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"row_id": rid, **doc}, sort_keys=True)
            for rid, doc in sorted(self.labels.items())
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "GroundTruth":
        gt = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            gt.add(doc["row_id"], doc["label"], doc["scenario"])
        return gt


def _ts(days_back: float = 0, seconds_back: int = 0) -> datetime:
    return ANCHOR - timedelta(days=days_back, seconds=seconds_back)


_DEVICES = ["wks-0042", "srv-db-07", "wks-0113", "lt-fin-22", "srv-web-03",
            "wks-0207", "lt-hr-09", "srv-app-11"]
_HUMANS = ["jdoe", "mchen", "akhan", "rsmith", "lgarcia"]
_UPNS = ["admin01@corp.example", "jdoe@corp.example", "mchen@corp.example",
         "svc-scan@corp.example", "akhan@corp.example"]

DEVICE_EVENT_COLUMNS = [
    "Timestamp", "DeviceId", "DeviceName", "ActionType", "AdditionalFields",
    "InitiatingProcessAccountName", "InitiatingProcessFileName",
    "InitiatingProcessCommandLine", "ReportId",
]


def _device_id(rng: SplitMix64) -> str:
    return f"dev-{rng.next_u64() & 0xFFFFFF:06x}"


def _benign_device_event(rng: SplitMix64):
    """One benign DeviceEvents row that Listing-1-style hunts must not return."""
    kind = rng.randrange(3)
    device = rng.choice(_DEVICES)
    if kind == 0:
        # machine account creating a scheduled task inside the window
        seconds = rng.randrange(7 * 86_400)
        fields = {"TaskName": "\\Maintenance\\NightlySync", "TaskContent": "sync.exe /auto"}
        return (
            _ts(seconds_back=seconds), _device_id(rng), device, "ScheduledTaskCreated",
            json.dumps(fields, sort_keys=True), device.upper() + "$",
            "svchost.exe", "svchost.exe -k netsvcs -p -s Schedule",
        )
    if kind == 1:
        # human-created task, but comfortably older than any 7d window
        seconds = 8 * 86_400 + rng.randrange(82 * 86_400)
        fields = {"TaskName": "\\Backup\\WeeklyExport", "TaskContent": "export.exe /weekly"}
        return (
            _ts(seconds_back=seconds), _device_id(rng), device, "ScheduledTaskCreated",
            json.dumps(fields, sort_keys=True), rng.choice(_HUMANS),
            "mmc.exe", "schtasks /create /tn WeeklyExport /tr export.exe",
        )
    seconds = rng.randrange(90 * 86_400)
    action = rng.choice(["ProcessCreated", "ServiceInstalled", "RegistryValueSet"])
    return (
        _ts(seconds_back=seconds), _device_id(rng), device, action,
        json.dumps({"Detail": "routine"}, sort_keys=True), rng.choice(_HUMANS),
        rng.choice(["explorer.exe", "cmd.exe", "msiexec.exe"]),
        "routine administrative activity",
    )


_MALICIOUS_TASKS = [
    ("wks-0042", 6 * 86_400 + 7_200, "\\Microsoft\\Windows\\UpdateHealthCheck"),
    ("srv-db-07", 4 * 86_400 + 18_000, "\\Microsoft\\Windows\\TelemetryRefresh"),
    ("wks-0113", 3 * 86_400 + 3_600, "\\Adobe\\AcrobatSync"),
    ("lt-ceo-01", 1 * 86_400 + 10_800, "\\Microsoft\\Office\\LicenseHeartbeat"),
    ("srv-web-03", 7_200, "\\Microsoft\\Windows\\DiskHealth"),
]


def _gen_scheduled_task(rng: SplitMix64, size: int, dataset: Dataset, truth: GroundTruth):
    malicious = []
    for device, seconds_back, task_name in _MALICIOUS_TASKS:
        fields = {
            "TaskName": task_name,
            "TaskContent": "powershell.exe -NoProfile -WindowStyle Hidden -EncodedCommand JABjAD0ATgBlAHcALQBPAGIAagBlAGMAdAA=",
        }
        malicious.append((
            _ts(seconds_back=seconds_back), _device_id(rng), device, "ScheduledTaskCreated",
            json.dumps(fields, sort_keys=True), "svc-deploy",
            "powershell.exe",
            "powershell.exe -NoProfile -EncodedCommand JABjAD0ATgBlAHcALQBPAGIAagBlAGMAdAA=",
        ))

    rows = [_benign_device_event(rng) for _ in range(size - len(malicious))]
    labels = ["benign"] * len(rows)
    for row in malicious:
        pos = rng.randrange(len(rows) + 1)
        rows.insert(pos, row)
        labels.insert(pos, "malicious")

    final = []
    for i, (row, label) in enumerate(zip(rows, labels)):
        report_id = f"rpt-{i + 1:05d}"
        final.append(row + (report_id,))
        truth.add(report_id, label, "scheduled-task-persistence")
    dataset.tables["DeviceEvents"] = Table("DeviceEvents", list(DEVICE_EVENT_COLUMNS), final)


NETWORK_COLUMNS = [
    "Timestamp", "DeviceName", "RemoteUrl", "RemoteIP", "RemotePort",
    "InitiatingProcessFileName", "ReportId",
]

_BEACON_HOSTS = ["beacon.badcdn.example", "cdn-sync.badcdn.example", "beacon.badcdn.example",
                 "upd.badcdn.example", "beacon.badcdn.example"]
_CLEAN_HOSTS = ["updates.vendor.example", "cdn.site.example", "intranet.corp.example",
                "mail.corp.example", "docs.partner.example"]


def _gen_ti_beacon(rng: SplitMix64, size: int, dataset: Dataset, truth: GroundTruth):
    malicious = []
    for i, host in enumerate(_BEACON_HOSTS):
        seconds_back = (i + 1) * 12 * 3_600 + rng.randrange(3_600)
        malicious.append((
            _ts(seconds_back=seconds_back), rng.choice(_DEVICES),
            f"https://{host}/c2?id={rng.next_u64() & 0xFFFF:04x}",
            "203.0.113.77", 443, "svchost.exe",
        ))
    rows = []
    for _ in range(size - len(malicious)):
        host = rng.choice(_CLEAN_HOSTS)
        rows.append((
            _ts(seconds_back=rng.randrange(14 * 86_400)), rng.choice(_DEVICES),
            f"https://{host}/{rng.next_u64() & 0xFFF:03x}",
            f"10.20.{rng.randrange(256)}.{rng.randrange(256)}",
            rng.choice([443, 443, 80, 8080]),
            rng.choice(["chrome.exe", "outlook.exe", "teams.exe"]),
        ))
    labels = ["benign"] * len(rows)
    for row in malicious:
        pos = rng.randrange(len(rows) + 1)
        rows.insert(pos, row)
        labels.insert(pos, "malicious")
    final = []
    for i, (row, label) in enumerate(zip(rows, labels)):
        report_id = f"net-{i + 1:05d}"
        final.append(row + (report_id,))
        truth.add(report_id, label, "ti-domain-beacon")
    dataset.tables["DeviceNetworkEvents"] = Table("DeviceNetworkEvents", list(NETWORK_COLUMNS), final)


SIGNIN_COLUMNS = [
    "TimeGenerated", "UserPrincipalName", "AppDisplayName", "IPAddress",
    "ResultType", "Location", "ReportId",
]
PROCESS_COLUMNS = [
    "Timestamp", "DeviceName", "AccountName", "FileName", "ProcessCommandLine",
    "ParentProcessName", "SHA256", "ReportId",
]
EMAIL_COLUMNS = [
    "Timestamp", "SenderFromAddress", "RecipientEmailAddress", "EmailSubject",
    "UrlCount", "ReportId",
]

# auxiliary tables keep fixed row counts so template tests stay pinned
_AUX_SIGNIN_ROWS = 40
_AUX_PROCESS_ROWS = 30
_AUX_EMAIL_ROWS = 25


def _gen_admin_noise(rng: SplitMix64, size: int, dataset: Dataset, truth: GroundTruth):
    rows = [_benign_device_event(rng) for _ in range(size)]
    final = []
    for i, row in enumerate(rows):
        report_id = f"rpt-{i + 1:05d}"
        final.append(row + (report_id,))
        truth.add(report_id, "benign", "benign-admin-noise")
    dataset.tables["DeviceEvents"] = Table("DeviceEvents", list(DEVICE_EVENT_COLUMNS), final)

    signins = []
    for i in range(_AUX_SIGNIN_ROWS):
        rid = f"sig-{i + 1:05d}"
        signins.append((
            _ts(seconds_back=rng.randrange(30 * 86_400)),
            rng.choice(_UPNS),
            rng.choice(["Azure Portal", "Office 365", "VPN Gateway", "GitHub Enterprise"]),
            f"198.51.100.{rng.randrange(256)}",
            rng.choice(["0", "0", "0", "50126"]),
            rng.choice(["SE", "DE", "US", "NL"]),
            rid,
        ))
        truth.add(rid, "benign", "benign-admin-noise")
    dataset.tables["SigninLogs"] = Table("SigninLogs", list(SIGNIN_COLUMNS), signins)

    processes = []
    for i in range(_AUX_PROCESS_ROWS):
        rid = f"prc-{i + 1:05d}"
        fname = rng.choice(["cmd.exe", "powershell.exe", "notepad.exe", "robocopy.exe"])
        processes.append((
            _ts(seconds_back=rng.randrange(14 * 86_400)),
            rng.choice(_DEVICES),
            rng.choice(_HUMANS),
            fname,
            f"{fname} /routine",
            rng.choice(["explorer.exe", "services.exe", "cmd.exe"]),
            f"{rng.next_u64():016x}{rng.next_u64():016x}{rng.next_u64():016x}{rng.next_u64():016x}"[:64],
            rid,
        ))
        truth.add(rid, "benign", "benign-admin-noise")
    dataset.tables["DeviceProcessEvents"] = Table("DeviceProcessEvents", list(PROCESS_COLUMNS), processes)

    emails = []
    for i in range(_AUX_EMAIL_ROWS):
        rid = f"eml-{i + 1:05d}"
        emails.append((
            _ts(seconds_back=rng.randrange(30 * 86_400)),
            rng.choice(["digest@newsletter.example", "updates@partner.example", "noreply@vendor.example"]),
            rng.choice(_UPNS),
            rng.choice(["Weekly digest", "Maintenance window notice", "Invoice attached", "Team update"]),
            rng.randrange(6),
            rid,
        ))
        truth.add(rid, "benign", "benign-admin-noise")
    dataset.tables["EmailEvents"] = Table("EmailEvents", list(EMAIL_COLUMNS), emails)


_SCENARIOS = {
    "scheduled-task-persistence": (_gen_scheduled_task, 5),
    "ti-domain-beacon": (_gen_ti_beacon, 5),
    "benign-admin-noise": (_gen_admin_noise, 0),
}


def list_scenarios() -> list:
    return sorted(_SCENARIOS)


def generate_synthetic(seed: int, scenario_id: str, size: int):
    """Deterministic (Dataset, GroundTruth) for the given scenario."""
    entry = _SCENARIOS.get(scenario_id)
    if entry is None:
        raise UnknownScenario(scenario_id)
    gen, minimum = entry
    if size < minimum:
        raise ScenarioSizeTooSmall(scenario_id, size, minimum)
    rng = SplitMix64(seed)
    dataset = Dataset()
    truth = GroundTruth()
    gen(rng, size, dataset, truth)
    return dataset, truth
