#pragma once

namespace qpusim::constants {

inline constexpr double k_boltzmann_j_per_k = 1.380649e-23;
inline constexpr double e_charge_c = 1.602176634e-19;

}  // namespace qpusim::constants
