"""Launch-configuration and fast-memory workspace planners.

On a GPU these choose the work-group size, the sub-group size and which solver
vectors live in shared local memory. Here they are pure functions whose output
is logged with benchmark results and used to size the chunks of batch entries
handed to each worker. They never change numerical results.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import InvalidOverride

SUB_GROUP_SIZES = (16, 32)


@dataclass(frozen=True)
class DeviceProfile:
    name: str = "pvc-stack"
    max_wg: int = 1024
    slm_bytes: int = 128 * 1024
    sg_threshold: int = 64
    # the sub-group threshold is a placeholder until measured on real hardware
    measured: bool = False

    @classmethod
    def load(cls, path) -> "DeviceProfile":
        """Read a ``key = value`` file with keys name, max_wg, slm_bytes, sg_threshold."""
        parser = configparser.ConfigParser()
        text = Path(path).read_text()
        parser.read_string("[device]\n" + text)
        sec = parser["device"]
        known = {"name", "max_wg", "slm_bytes", "sg_threshold", "measured"}
        unknown = set(sec) - known
        if unknown:
            raise ValueError(f"{path}: unknown device keys {sorted(unknown)}")
        base = cls()
        profile = cls(
            name=sec.get("name", base.name),
            max_wg=sec.getint("max_wg", base.max_wg),
            slm_bytes=sec.getint("slm_bytes", base.slm_bytes),
            sg_threshold=sec.getint("sg_threshold", base.sg_threshold),
            measured=sec.getboolean("measured", base.measured),
        )
        for sg in SUB_GROUP_SIZES:
            if profile.max_wg % sg:
                raise ValueError(f"{path}: max_wg={profile.max_wg} is not a multiple of {sg}")
        return profile

    def dumps(self) -> str:
        return (f"name = {self.name}\nmax_wg = {self.max_wg}\nslm_bytes = {self.slm_bytes}\n"
                f"sg_threshold = {self.sg_threshold}\nmeasured = {str(self.measured).lower()}\n")


PVC_STACK = DeviceProfile()


def select_sub_group_size(num_rows: int, threshold: int) -> int:
    """16 for matrices with at most ``threshold`` rows, 32 above."""
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    return 16 if num_rows <= threshold else 32


def select_work_group_size(num_rows: int, sub_group_size: int, device_max: int) -> int:
    """Smallest multiple of the sub-group size covering all rows, capped at the device max."""
    if sub_group_size not in SUB_GROUP_SIZES:
        raise ValueError(f"sub-group size must be one of {SUB_GROUP_SIZES}, got {sub_group_size}")
    if device_max < sub_group_size or device_max % sub_group_size:
        raise ValueError(f"device max {device_max} is not a multiple of {sub_group_size}")
    if num_rows > device_max:
        return device_max
    return max(1, -(-num_rows // sub_group_size)) * sub_group_size


@dataclass(frozen=True)
class LaunchPlan:
    work_group_size: int
    sub_group_size: int
    notes: tuple = ()

    @property
    def entries_per_task(self) -> int:
        """Batch entries given to a worker at a time: one per sub-group of the work-group."""
        return self.work_group_size // self.sub_group_size

    def summary(self) -> str:
        return f"wg={self.work_group_size};sg={self.sub_group_size}"


def make_launch_plan(num_rows: int, device: DeviceProfile = PVC_STACK,
                     overrides: Optional[dict] = None) -> LaunchPlan:
    overrides = dict(overrides or {})
    unknown = set(overrides) - {"work_group_size", "sub_group_size"}
    if unknown:
        raise InvalidOverride(f"unknown tuning overrides {sorted(unknown)}")
    notes = [f"device={device.name}"]
    if not device.measured:
        notes.append("sub-group threshold is an unmeasured default")

    sg = overrides.get("sub_group_size")
    if sg is None:
        sg = select_sub_group_size(num_rows, device.sg_threshold)
    elif sg not in SUB_GROUP_SIZES:
        raise InvalidOverride(f"sub_group_size={sg} not in {SUB_GROUP_SIZES}")
    else:
        notes.append("sub_group_size overridden")

    wg = overrides.get("work_group_size")
    if wg is None:
        wg = select_work_group_size(num_rows, sg, device.max_wg)
    else:
        if wg < 1 or wg % sg:
            raise InvalidOverride(f"work_group_size={wg} is not divisible by sub_group_size={sg}")
        if wg > device.max_wg:
            raise InvalidOverride(f"work_group_size={wg} exceeds device max {device.max_wg}")
        notes.append("work_group_size overridden")
    if num_rows > device.max_wg:
        notes.append("rows exceed work-group size")
    # a single sub-group can reduce on its own; wider groups need a group-wide step
    notes.append("reduction=sub-group" if wg == sg else "reduction=work-group")
    return LaunchPlan(wg, sg, tuple(notes))


# Decreasing placement priority. CG follows usage frequency and size of the
# loop vectors; the BiCGSTAB order extends the same rule to its larger set.
PRIORITY = {
    "cg": ("r", "z", "p", "t", "x"),
    "bicgstab": ("r", "p", "v", "s", "t", "z", "rhat", "x"),
}
PRECOND_WORKSPACE = "precond"


@dataclass(frozen=True)
class Assignment:
    name: str
    tier: str
    bytes: int


@dataclass(frozen=True)
class WorkspacePlan:
    assignments: tuple
    fast_capacity: int
    fast_used: int = field(default=0)

    def tier_of(self, name: str) -> str:
        for a in self.assignments:
            if a.name == name:
                return a.tier
        raise KeyError(name)

    @property
    def fast_names(self) -> list:
        return [a.name for a in self.assignments if a.tier == "Fast"]


def plan_workspace(solver: str, num_rows: int, scalar_bytes: int = 8,
                   fast_capacity: int = PVC_STACK.slm_bytes,
                   precond: str = "jacobi") -> WorkspacePlan:
    """Place solver vectors in the fast tier in priority order until it is full.

    Vectors are placed whole. Placement stops at the first vector that does not
    fit, so the fast set is always a prefix of the priority list. The
    preconditioner workspace (one vector for Jacobi, none for identity) comes
    last.
    """
    if fast_capacity < 0:
        raise ValueError("fast_capacity must be >= 0")
    try:
        names = list(PRIORITY[solver])
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}") from None
    if precond == "jacobi":
        names.append(PRECOND_WORKSPACE)
    size = num_rows * scalar_bytes
    used = 0
    open_tier = True
    out = []
    for name in names:
        if open_tier and used + size <= fast_capacity:
            used += size
            out.append(Assignment(name, "Fast", size))
        else:
            open_tier = False
            out.append(Assignment(name, "Main", size))
    return WorkspacePlan(tuple(out), fast_capacity, used)
