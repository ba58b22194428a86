# Copyright 2026 The streamtune Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Straight-line schedule of the reference workload W1.

W1: one 64-iteration parallel loop, a 4-byte input array and a 4-byte output
array, 200 instructions per iteration, on the 8-core reference platform of
test_simulator.cpp. Prints the (1,1) and (4,16) totals and their ratio.
"""

GRID = 2.0 ** 40


def snap(x):
    return round(x * GRID) / GRID


CORES = 8
BW = 1e-6
LAT = 1e-5
CTX = 1e-5
MGMT = 1e-6
SPAWN = 1e-6
RATE = 1e6
N = 64
IN_BYTES = 4 * N
OUT_BYTES = 4 * N
INSTR = 200


def total(p, t):
    ctx = snap(CTX * p + MGMT * t)
    cores = CORES // p
    chunk = -(-N // t)
    # Chunks are equal here (t divides N), so every task looks the same.
    assert chunk * t == N
    h2d = snap(LAT + IN_BYTES * (chunk / N) * BW)
    comp = snap(chunk * INSTR / (RATE * cores) + SPAWN * cores * 1)
    d2h = snap(LAT + OUT_BYTES * (chunk / N) * BW)

    # Inputs leave back to back on the shared channel.
    h2d_end = [ctx + (i + 1) * h2d for i in range(t)]
    free = [ctx] * p
    comp_end = []
    for i in range(t):
        start = max(h2d_end[i], free[i % p])
        free[i % p] = start + comp
        comp_end.append(start + comp)
    # Outputs follow all inputs, in order of compute completion.
    chan = h2d_end[-1]
    for i in sorted(range(t), key=lambda i: (comp_end[i], i)):
        chan = max(chan, comp_end[i]) + d2h
    return chan


single = total(1, 1)
multi = total(4, 16)
print(f"single = {single!r}")
print(f"multi = {multi!r}")
print(f"speedup = {single / multi!r}")
