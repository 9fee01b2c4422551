from typing import List

from cavity_swap.constants import Scenario, SWAP_SCENARIOS
from cavity_swap.harness import ProtocolExperimentService, SweepSpec

pes = ProtocolExperimentService(max_workers=4)


def print_fidelity_table(b_values: List[float], scenarios: List[Scenario]):
    spec = SweepSpec(b_values=tuple(b_values), scenarios=tuple(scenarios))
    fidelity_df = pes.run_fidelity_sweep(spec)
    if len(fidelity_df) == 0:
        print("No sweep points returned")
        return
    table = fidelity_df['fidelity'].unstack(level='scenario')
    print(table.to_string(float_format=lambda f: f"{f:.4f}"))
    best = table.idxmax()
    for scenario in table.columns:
        print(f"Scenario {scenario}: best b = {best[scenario]:g}, fidelity {table[scenario].max():.4f}")


def main():
    # b_values = [11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31]
    b_values = [15, 21, 27]  # coarse grid around the operating point
    print_fidelity_table(b_values, list(SWAP_SCENARIOS))


if __name__ == "__main__":
    main()
