"""The virtual universe: a bounded 2-D map, region grid, and moving avatars.

Avatars follow a random-waypoint walk: head for the current waypoint at a
fixed speed, and draw a fresh uniform waypoint on arrival. A spatial hash with
cells at least as large as the proximity radius makes radius queries and
collision-candidate counts a 3x3 cell scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import RngStream
from .errors import ConfigError, SimulationError


@dataclass(frozen=True)
class WorldGrid:
    width: float
    height: float
    regions_x: int
    regions_y: int
    cell: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("world: width and height must be > 0")
        if self.regions_x < 1 or self.regions_y < 1:
            raise ConfigError("world: regions_x and regions_y must be >= 1")
        if self.cell <= 0:
            raise ConfigError("world: cell must be > 0")

    @property
    def region_width(self) -> float:
        return self.width / self.regions_x

    @property
    def region_height(self) -> float:
        return self.height / self.regions_y

    def all_regions(self) -> list[tuple[int, int]]:
        return [(rx, ry) for rx in range(self.regions_x) for ry in range(self.regions_y)]


def region_of(pos: tuple[float, float], grid: WorldGrid) -> tuple[int, int]:
    """Region coordinates of a position.

    Boundary points belong to the higher-index region, except the max edge of
    the world, which clamps into the last region.
    """
    x, y = pos
    if x < 0 or y < 0 or x > grid.width or y > grid.height:
        raise SimulationError(f"position {pos} is out of world bounds")
    rx = int(x / grid.region_width)
    ry = int(y / grid.region_height)
    if rx >= grid.regions_x:
        rx = grid.regions_x - 1
    if ry >= grid.regions_y:
        ry = grid.regions_y - 1
    return rx, ry


@dataclass
class Avatar:
    user: int
    x: float
    y: float
    wx: float
    wy: float
    speed: float  # world units per second
    region: tuple[int, int]
    home_fog: str | None = None


def movement_tick(avatar: Avatar, dt_s: float, rng: RngStream, grid: WorldGrid) -> Avatar:
    """Advance one avatar by speed*dt toward its waypoint.

    Arrival at the waypoint is capped exactly on it, and a new uniform-random
    waypoint is drawn (two draws: x then y). The avatar's region is recomputed
    after every tick.
    """
    if dt_s <= 0:
        raise SimulationError("movement_tick requires dt > 0")
    step = avatar.speed * dt_s
    dx = avatar.wx - avatar.x
    dy = avatar.wy - avatar.y
    dist = math.sqrt(dx * dx + dy * dy)
    if dist <= step:
        avatar.x = avatar.wx
        avatar.y = avatar.wy
        if step > 0.0:
            avatar.wx = rng.random() * grid.width
            avatar.wy = rng.random() * grid.height
    else:
        avatar.x += (dx / dist) * step
        avatar.y += (dy / dist) * step
    avatar.region = region_of((avatar.x, avatar.y), grid)
    return avatar


class World:
    """All avatars plus the spatial hash that serves proximity queries.

    The hash is kept incrementally: an avatar is rebucketed only when a tick
    moves it across a cell border. Queries therefore always see every avatar
    at its most recently ticked position.
    """

    def __init__(self, grid: WorldGrid, n_users: int, speed: float, rng: RngStream):
        self.grid = grid
        self.rng = rng
        self.ncx = max(1, math.ceil(grid.width / grid.cell))
        self.ncy = max(1, math.ceil(grid.height / grid.cell))
        ncells = self.ncx * self.ncy
        self._counts = [0] * ncells
        self._members: list[list[int]] = [[] for _ in range(ncells)]
        # neighbors[c] lists the 3x3 block around cell c (clipped at borders);
        # _nbsum[c] is kept equal to sum(counts over neighbors[c]) at all times,
        # so a collision-candidate query is a single lookup.
        self._neighbors: list[tuple[int, ...]] = []
        for cx in range(self.ncx):
            for cy in range(self.ncy):
                block = [
                    gx * self.ncy + gy
                    for gx in range(max(0, cx - 1), min(self.ncx, cx + 2))
                    for gy in range(max(0, cy - 1), min(self.ncy, cy + 2))
                ]
                self._neighbors.append(tuple(block))
        self._nbsum = [0] * ncells
        self.avatars: list[Avatar] = []
        self._cell_of: list[int] = []
        for user in range(n_users):
            x = rng.random() * grid.width
            y = rng.random() * grid.height
            wx = rng.random() * grid.width
            wy = rng.random() * grid.height
            avatar = Avatar(user, x, y, wx, wy, speed, region_of((x, y), grid))
            self.avatars.append(avatar)
            c = self._cell_index(x, y)
            self._cell_of.append(c)
            self._counts[c] += 1
            self._members[c].append(user)
            for n in self._neighbors[c]:
                self._nbsum[n] += 1

    def _cell_index(self, x: float, y: float) -> int:
        cx = int(x / self.grid.cell)
        cy = int(y / self.grid.cell)
        if cx >= self.ncx:
            cx = self.ncx - 1
        if cy >= self.ncy:
            cy = self.ncy - 1
        return cx * self.ncy + cy

    def tick_avatar(self, user: int, dt_s: float) -> Avatar:
        """Movement tick for one avatar, keeping the spatial hash current."""
        avatar = self.avatars[user]
        movement_tick(avatar, dt_s, self.rng, self.grid)
        c = self._cell_index(avatar.x, avatar.y)
        old = self._cell_of[user]
        if c != old:
            self._counts[old] -= 1
            self._members[old].remove(user)
            self._counts[c] += 1
            self._members[c].append(user)
            self._cell_of[user] = c
            nbsum = self._nbsum
            for n in self._neighbors[old]:
                nbsum[n] -= 1
            for n in self._neighbors[c]:
                nbsum[n] += 1
        return avatar

    def collision_candidates(self, user: int) -> int:
        """Number of other avatars in the 3x3 cell neighborhood."""
        return self._nbsum[self._cell_of[user]] - 1

    def nearby_users(self, user: int, radius: float) -> list[int]:
        """Users within Euclidean distance radius, via a 3x3 cell scan.

        The querying user is excluded. Requires radius <= cell so that the
        scan covers the whole disc.
        """
        if radius > self.grid.cell:
            raise ConfigError(
                f"proximity radius {radius} exceeds spatial-hash cell {self.grid.cell}"
            )
        me = self.avatars[user]
        x, y = me.x, me.y
        r2 = radius * radius
        c = self._cell_of[user]
        cx, cy = divmod(c, self.ncy)
        found = []
        members = self._members
        avatars = self.avatars
        ncy = self.ncy
        for gx in range(max(0, cx - 1), min(self.ncx, cx + 2)):
            base = gx * ncy
            for gy in range(max(0, cy - 1), min(ncy, cy + 2)):
                for other in members[base + gy]:
                    if other == user:
                        continue
                    a = avatars[other]
                    dx = a.x - x
                    dy = a.y - y
                    if dx * dx + dy * dy <= r2:
                        found.append(other)
        return found

    def regions_of_users(self) -> list[tuple[int, int]]:
        return [a.region for a in self.avatars]
