"""Seven-node detour: a memory off the shortest path still shortens the trip.

Run: python demos/detour_routing.py
"""

from netmem.graph import Graph
from netmem.routing import MemoryDeployment, effective_distances, network_gain

S, C1, C3, D1, C4, MU, D2 = range(7)
names = ["S", "C1", "C3", "D1", "C4", "mu", "D2"]

graph = Graph.from_edges(7, [S, S, C1, D1, C3, C4, D2], [C1, C3, D1, MU, C4, D2, MU])
mem = MemoryDeployment([MU], g=3.0)

table = effective_distances(graph, mem, S)
for dest in range(graph.n):
    if dest == S:
        continue
    via = table.chosen_memory[dest]
    route = f"via {names[via]}" if via >= 0 else "plain"
    print(f"{names[dest]:>3}: hops {table.plain_distance[dest]}, cost {table.d_hat[dest]:.3f} ({route})")

r = network_gain(graph, mem, [S])
print(f"flow from S: {r.F0:.0f} without memory, {r.F:.3f} with it, gain {r.G:.3f}")
