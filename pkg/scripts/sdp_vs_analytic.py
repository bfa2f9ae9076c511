"""Compare the SDP optimum with the coset-table optimum on Pauli channels,
and with the standard and no-correction recoveries on non-Pauli ones."""

import math
import time

from qecrobust.channels import (
    amplitude_damping,
    bit_flip,
    depolarizing,
    phase_damping,
    pure_states_rotation,
    reduce_pauli_channel,
    tensor_iid,
)
from qecrobust.pauli_adapt import no_correction_plan, optimal_plan, recovery_kraus, standard_plan
from qecrobust.recovery_sdp import choi_fidelity, choi_from_kraus, fidelity_observable, solve_optimal_recovery
from qecrobust.stabilizer import get_code


def main():
    pauli = {"phase_damping": phase_damping, "depolarizing": depolarizing, "bit_flip": bit_flip}
    other = {
        "amplitude_damping": amplitude_damping,
        "pure_states_rotation": lambda p: pure_states_rotation(5 * math.pi / 12, p * math.pi / 2),
    }
    print("code         channel               p     F_sdp          F_ref          kind        iters  time")
    for code_name in ("divincenzo5", "laflamme5"):
        code = get_code(code_name)
        for label, make in {**pauli, **other}.items():
            for p in (0.1, 0.3):
                single = make(p)
                c = fidelity_observable(code, tensor_iid(single, 5))
                start = time.perf_counter()
                sol = solve_optimal_recovery(c, (2, 32))
                elapsed = time.perf_counter() - start
                if label in pauli:
                    ref, kind = optimal_plan(reduce_pauli_channel(code, single))[1], "analytic"
                else:
                    ref = max(
                        choi_fidelity(choi_from_kraus(recovery_kraus(code, plan)), c)
                        for plan in (standard_plan(code), no_correction_plan(code))
                    )
                    kind = "best fixed"
                print(f"{code_name:12s} {label:20s} {p:4.2f}  {sol.fidelity:.12f} {ref:.12f} {kind:10s} "
                      f"{sol.iterations:6d} {elapsed:5.2f}s")


if __name__ == "__main__":
    main()
