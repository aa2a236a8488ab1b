from datetime import datetime, timezone

import pytest

# The scheduled-task persistence hunt used throughout the docs and fixtures.
SCHED_TASK_HUNT = """\
let Lookback = 7d;
DeviceEvents
| where Timestamp > ago(Lookback)
| where ActionType == "ScheduledTaskCreated"
| extend Ext = todynamic(AdditionalFields)
| extend TaskName = tostring(Ext.TaskName),
         TaskContent = tostring(Ext.TaskContent)
| where InitiatingProcessAccountName !endswith "$"
| project Timestamp, DeviceName, InitiatingProcessAccountName,
          InitiatingProcessFileName,
          InitiatingProcessCommandLine,
          TaskName, TaskContent, ReportId
| top 100 by Timestamp desc
"""


def dt(year, month, day, hour=0, minute=0, second=0, microsecond=0):
    return datetime(year, month, day, hour, minute, second, microsecond, tzinfo=timezone.utc)


@pytest.fixture
def sched_task_hunt():
    return SCHED_TASK_HUNT
