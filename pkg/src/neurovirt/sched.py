"""Task profiling and the dynamic service scheduler.

Ordering policy per scheduler tick: real-time tasks earliest-deadline
first, then batch tasks in arrival order; each task is list-scheduled
onto the VM with the earliest availability among those with a free core.
When a running real-time task is projected to miss its deadline and some
other VM has idle cores that would make the deadline feasible again, the
task migrates there once (a fixed penalty models state transfer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from neurovirt.engine import Engine, round_half_up
from neurovirt.snn import workload_cost

DEFAULT_TICK_PERIOD_NS = 100_000  # 100 us simulated
DEFAULT_MIGRATION_PENALTY_NS = 1_000_000  # 1 ms of state transfer
DEFAULT_CORE_RATE = 1  # synaptic ops per tick per core


@dataclass(frozen=True)
class TaskSpec:
    id: str
    compute_demand: int  # synaptic ops
    parallelizability: float  # fraction in [0, 1]
    data_size: int
    deadline: int | None  # absolute ns; None = batch
    arrival: int = 0

    @property
    def is_realtime(self) -> bool:
        return self.deadline is not None


@dataclass(frozen=True)
class Assignment:
    task_id: str
    vm_id: str
    cores: int
    start: int
    projected_finish: int


@dataclass(frozen=True)
class Migration:
    task_id: str
    from_vm: str
    to_vm: str
    at: int
    penalty: int


def profile(
    task_id: str,
    steps: int,
    input_rate: int,
    fan_in: int,
    data_size: int,
    neurons_per_core: int,
    deadline: int | None = None,
    arrival: int = 0,
) -> TaskSpec:
    """Assess a raw task description: compute demand plus how much of it
    can spread across cores (tasks wider than one core parallelize)."""
    demand = workload_cost(steps, input_rate, fan_in)
    parallelizability = min(1.0, fan_in / neurons_per_core)
    return TaskSpec(task_id, demand, parallelizability, data_size, deadline, arrival)


def exec_time(task: TaskSpec, cores: int, core_rate: int) -> int:
    """Amdahl-style execution time in ticks, rounded up."""
    if cores < 1:
        raise ValueError("cores must be >= 1")
    p = task.parallelizability
    span = task.compute_demand * ((1.0 - p) + p / cores) / core_rate
    return math.ceil(span)


@dataclass
class SchedVm:
    id: str
    cores_total: int
    cores_free: int


@dataclass
class _Running:
    task: TaskSpec
    vm_id: str
    cores: int
    start: int
    finish: int
    duration: int
    done_event: int
    migrated: bool = False


class Scheduler:
    """Tick-driven list scheduler over a set of VMs.

    ``duration_fn(task, cores) -> ticks`` defaults to the Amdahl model;
    scenario executors substitute a spiking-aware duration. ``on_start`` /
    ``on_done`` / ``on_migrate`` hooks let an executor attach real work to
    assignments.
    """

    def __init__(
        self,
        engine: Engine,
        core_rate: int = DEFAULT_CORE_RATE,
        tick_period: int = DEFAULT_TICK_PERIOD_NS,
        migration_penalty: int = DEFAULT_MIGRATION_PENALTY_NS,
        duration_fn: Callable[[TaskSpec, int], int] | None = None,
        on_start: Callable[["_Running"], None] | None = None,
        on_done: Callable[["_Running"], None] | None = None,
        on_migrate: Callable[["_Running", str, str], None] | None = None,
    ):
        self.engine = engine
        self.core_rate = core_rate
        self.tick_period = tick_period
        self.migration_penalty = migration_penalty
        self.duration_fn = duration_fn or (
            lambda task, cores: exec_time(task, cores, self.core_rate)
        )
        self.on_start = on_start
        self.on_done = on_done
        self.on_migrate = on_migrate
        self.vms: dict[str, SchedVm] = {}
        self.ready: list[TaskSpec] = []
        self.running: dict[str, _Running] = {}
        self.finished: dict[str, int] = {}
        self.assignments: list[Assignment] = []
        self.migrations: list[Migration] = []
        self._tick_pending = False

    def add_vm(self, vm_id: str, cores: int) -> None:
        self.vms[vm_id] = SchedVm(vm_id, cores, cores)

    def submit(self, task: TaskSpec) -> None:
        """Enqueue a task; arrival in the future is honored via an event."""
        if task.arrival > self.engine.now():
            self.engine.schedule(
                task.arrival,
                "TaskArrival",
                fn=lambda: self._arrive(task),
                detail=f"task={task.id}",
                stallable=False,
            )
        else:
            self._arrive(task)

    def _arrive(self, task: TaskSpec) -> None:
        self.ready.append(task)
        self._ensure_tick(at_now=True)

    def _ensure_tick(self, at_now: bool = False) -> None:
        if self._tick_pending:
            return
        self._tick_pending = True
        delay = 0 if at_now else self.tick_period
        self.engine.schedule_in(delay, "SchedulerTick", fn=self._on_tick)

    def _on_tick(self) -> None:
        self._tick_pending = False
        self.schedule_tick()
        self.rebalance_on_contention()
        if self.ready or self.running:
            self._ensure_tick()

    def _ordered_ready(self) -> list[TaskSpec]:
        rt = sorted(
            (t for t in self.ready if t.is_realtime),
            key=lambda t: (t.deadline, t.arrival, t.id),
        )
        batch = sorted(
            (t for t in self.ready if not t.is_realtime),
            key=lambda t: (t.arrival, t.id),
        )
        return rt + batch

    def _grant(self, task: TaskSpec, vm: SchedVm) -> int:
        wanted = max(1, math.ceil(task.parallelizability * vm.cores_total))
        return max(1, min(vm.cores_free, wanted))

    def schedule_tick(self) -> list[Assignment]:
        """Assign ready tasks to VMs; unplaceable tasks stay buffered."""
        made: list[Assignment] = []
        now = self.engine.now()
        for task in self._ordered_ready():
            hosts = [vm for _, vm in sorted(self.vms.items()) if vm.cores_free >= 1]
            if not hosts:
                continue
            vm = hosts[0]
            cores = self._grant(task, vm)
            duration = self.duration_fn(task, cores)
            finish = now + duration
            vm.cores_free -= cores
            done_event = self.engine.schedule(
                finish,
                "TaskDone",
                fn=lambda tid=task.id: self._task_done(tid),
                detail=f"task={task.id};vm={vm.id}",
                vm=vm.id,
            )
            run = _Running(task, vm.id, cores, now, finish, duration, done_event)
            self.running[task.id] = run
            self.ready.remove(task)
            assignment = Assignment(task.id, vm.id, cores, now, finish)
            self.assignments.append(assignment)
            made.append(assignment)
            if self.on_start is not None:
                self.on_start(run)
        return made

    def _task_done(self, task_id: str) -> None:
        run = self.running.pop(task_id)
        self.vms[run.vm_id].cores_free += run.cores
        self.finished[task_id] = self.engine.now()
        if self.on_done is not None:
            self.on_done(run)

    def rebalance_on_contention(self) -> list[Migration]:
        """Migrate late real-time tasks to VMs whose idle cores restore
        deadline feasibility; useless migrations are forbidden."""
        made: list[Migration] = []
        now = self.engine.now()
        for task_id in sorted(self.running):
            run = self.running[task_id]
            task = run.task
            if not task.is_realtime or run.migrated:
                continue
            if run.finish <= task.deadline:
                continue
            best: tuple[int, str, int] | None = None  # (finish, vm_id, cores)
            for vm_id, vm in sorted(self.vms.items()):
                if vm_id == run.vm_id or vm.cores_free < 1:
                    continue
                cores = self._grant(task, vm)
                remaining = run.finish - now
                fraction = remaining / run.duration
                new_remaining = (
                    round_half_up(fraction * self.duration_fn(task, cores))
                    + self.migration_penalty
                )
                new_finish = now + new_remaining
                if new_finish > task.deadline or new_finish >= run.finish:
                    continue
                if best is None or (new_finish, vm_id) < (best[0], best[1]):
                    best = (new_finish, vm_id, cores)
            if best is None:
                continue
            new_finish, to_vm, cores = best
            self.engine.cancel(run.done_event)
            self.vms[run.vm_id].cores_free += run.cores
            self.vms[to_vm].cores_free -= cores
            migration = Migration(
                task_id, run.vm_id, to_vm, now, self.migration_penalty
            )
            self.migrations.append(migration)
            made.append(migration)
            from_vm = run.vm_id
            run.vm_id = to_vm
            run.cores = cores
            run.duration = new_finish - now
            run.finish = new_finish
            run.migrated = True
            run.done_event = self.engine.schedule(
                new_finish,
                "TaskDone",
                fn=lambda tid=task_id: self._task_done(tid),
                detail=f"task={task_id};vm={to_vm};migrated=1",
                vm=to_vm,
            )
            if self.on_migrate is not None:
                self.on_migrate(run, from_vm, to_vm)
        return made

    def makespan(self) -> int:
        return max(self.finished.values(), default=0)
