"""Write the built-in systems and networks as JSON files under data/."""
import json
from pathlib import Path

from pwacert import library
from pwacert.geometry import HPolyhedron
from pwacert.sysmodel import relu_net
from pwacert.io import dump_json, network_to_json, poly_to_json, system_to_json

OUT = Path(__file__).resolve().parent.parent / "data"


def main():
    OUT.mkdir(exist_ok=True)
    dump_json(system_to_json(library.scalar_system()), OUT / "scalar.sys.json")
    dump_json(network_to_json(library.scalar_controller()), OUT / "zero.net.json")
    dump_json(system_to_json(library.quadrant_system()), OUT / "quadrant.sys.json")
    dump_json(network_to_json(library.quadrant_controller()), OUT / "quadrant_lqr.net.json")
    dump_json(network_to_json(library.double_integrator_controller()), OUT / "di_lqr.net.json")
    dump_json(network_to_json(relu_net()), OUT / "relu.net.json")
    dump_json([poly_to_json(g) for g in library.chessboard_regions()], OUT / "chessboard.regions.json")
    # 0.9 times the fixed point 0.2 of c+ = 0.5 c + 0.1: not invariant
    dump_json(poly_to_json(HPolyhedron.from_box([-0.18], [0.18])), OUT / "scalar_shrunk.poly.json")
    dump_json({"system": "scalar.sys.json", "network": "zero.net.json",
               "eps_bar": 0.01, "template": "box", "output": "out/scalar"},
              OUT / "scalar.config.json")
    dump_json({"system": "quadrant.sys.json", "network": "quadrant_lqr.net.json",
               "eps_bar": 0.001, "template": "octagon", "output": "out/quadrant"},
              OUT / "quadrant.config.json")
    print(json.dumps(sorted(p.name for p in OUT.iterdir())))


if __name__ == "__main__":
    main()
