import json
import random

import pytest

from matchinglab.GraphCore import build_graph
from matchinglab.Instances import CnfFormula, ScaleProfile, complete_no_instance, complete_yes_instance


def cycle_specs(n):
    return [(f"v{i}", "L" if i % 2 == 0 else "R") for i in range(n)]


@pytest.fixture
def c4():
    return build_graph(cycle_specs(4), [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def c6():
    return build_graph(cycle_specs(6), [(i, (i + 1) % 6) for i in range(6)])


@pytest.fixture
def k33():
    specs = [(f"l{i}", "L") for i in range(3)] + [(f"r{i}", "R") for i in range(3)]
    return build_graph(specs, [(i, 3 + j) for i in range(3) for j in range(3)])


@pytest.fixture
def two_c4():
    specs = cycle_specs(4) + [(f"w{i}", "L" if i % 2 == 0 else "R") for i in range(4)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4)]
    return build_graph(specs, edges)


@pytest.fixture
def star3():
    return build_graph([("c", "L"), ("x", "R"), ("y", "R"), ("z", "R")], [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def desk_profile():
    return ScaleProfile.desk(t=1, t_c=1)


@pytest.fixture
def yes_instance():
    return complete_yes_instance(4, 1)


@pytest.fixture
def no_instance():
    return complete_no_instance(4, 1)


@pytest.fixture
def rng():
    return random.Random(7)


@pytest.fixture
def single_clause():
    return CnfFormula(1, ((1,),))


@pytest.fixture
def contradiction():
    return CnfFormula(1, ((1,), (-1,)))


@pytest.fixture
def write_file(tmp_path):
    def write(name, data):
        path = tmp_path / name
        if isinstance(data, (dict, list)):
            data = json.dumps(data)
        path.write_bytes(data if isinstance(data, bytes) else data.encode("utf-8"))
        return str(path)

    return write
