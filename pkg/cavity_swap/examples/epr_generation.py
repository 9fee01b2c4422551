from cavity_swap.common import SimulationError
from cavity_swap.constants import DEFAULT_B
from cavity_swap.harness import ProtocolExperimentService, SweepSpec

pes = ProtocolExperimentService(max_workers=1)


def print_epr_fidelities(max_pairs: int, b: float):
    spec = SweepSpec(fock_cutoff=2)
    for n_pairs in range(1, max_pairs + 1):
        try:
            record = pes.run_epr_generation(n_pairs, b, spec)
        except SimulationError as e:
            print(f"Failed to generate {n_pairs} EPR pairs at b={b:g}: {e.message}")
            continue
        per_pair = ", ".join(f"{f:.4f}" for f in record.pair_fidelities)
        print(f"N={n_pairs}: t_epr = {record.t_epr_ns:.2f} ns, fidelity {record.fidelity:.4f}, per pair [{per_pair}]")


def main():
    print_epr_fidelities(3, DEFAULT_B)


if __name__ == "__main__":
    main()
